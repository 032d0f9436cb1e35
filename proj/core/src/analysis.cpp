#include "dncp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dncp/errors.hpp"
#include "dncp/reparam.hpp"
#include "dncp/zoo.hpp"

namespace dncp {

namespace {

Eigen::VectorXd gradient_at(ModelEvaluator& ev, ad::ExprId root, const Eigen::VectorXd& free) {
  Eigen::VectorXd g;
  const double v = ev.evaluate(root, free, &g);
  if (!std::isfinite(v)) throw NonFinite("Hessian probe left the support");
  return g;
}

}  // namespace

Eigen::MatrixXd hessian_log_posterior(ModelEvaluator& ev, ad::ExprId root, const Eigen::VectorXd& free,
                                      double step) {
  if (!(step > 0.0)) throw DomainError("finite-difference step must be positive");
  const Eigen::Index n = free.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd probe = free;
  for (Eigen::Index j = 0; j < n; ++j) {
    probe[j] = free[j] + step;
    const Eigen::VectorXd up = gradient_at(ev, root, probe);
    probe[j] = free[j] - step;
    const Eigen::VectorXd down = gradient_at(ev, root, probe);
    probe[j] = free[j];
    h.col(j) = (up - down) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

Eigen::MatrixXd hessian_log_posterior(const FactorGraphModel& model, const Eigen::VectorXd& theta,
                                      const Assignment& point, double step) {
  ModelEvaluator ev(model);
  ev.set_parameters(theta);
  ev.set_observed(model.pack_observed(point));
  return hessian_log_posterior(ev, ev.joint_root(), model.pack_free(point), step);
}

PairCorrelation squared_correlation_from_hessian(const Eigen::MatrixXd& h, std::size_t i, std::size_t j) {
  const auto n = static_cast<std::size_t>(h.rows());
  if (h.cols() != h.rows() || i >= n || j >= n || i == j) throw ShapeError("invalid Hessian coordinate pair");
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  const double a = h(ii, ii);
  const double b = h(jj, jj);
  const double c = 0.5 * (h(ii, jj) + h(jj, ii));
  if (!(a < 0.0 && b < 0.0)) throw NotNegativeDefinite("diagonal entries must be negative");
  const double det = a * b - c * c;
  const double tol = 1e-12 * a * b;
  if (det < -tol) throw NotNegativeDefinite("2x2 block has a positive eigenvalue");
  PairCorrelation out;
  out.boundary = std::abs(det) <= tol;
  out.rho_sq = out.boundary ? 1.0 : std::min(1.0, c * c / (a * b));
  return out;
}

namespace {

void check_summary(const LocalFactorSummary& s) {
  if (!(s.alpha < 0.0)) throw DomainError("alpha must be negative, got " + std::to_string(s.alpha));
  if (!(s.beta < 0.0)) throw DomainError("beta must be negative, got " + std::to_string(s.beta));
  if (!(s.sigma > 0.0)) throw DomainError("sigma must be positive, got " + std::to_string(s.sigma));
}

}  // namespace

double cp_squared_correlation(const LocalFactorSummary& s) {
  check_summary(s);
  const double s2 = s.sigma * s.sigma;
  const double w2 = s.w * s.w;
  // (w^2/s^4) / ((a - w^2/s^2)(b - 1/s^2)) with numerator and denominator scaled by s^4.
  const double den = (s.alpha * s2 - w2) * (s.beta * s2 - 1.0);
  if (!(den > 0.0)) throw DomainError("non-positive denominator");
  return w2 / den;
}

double dncp_squared_correlation(const LocalFactorSummary& s) {
  check_summary(s);
  const double s2 = s.sigma * s.sigma;
  const double w2 = s.w * s.w;
  const double den = (s.alpha + w2 * s.beta) * (s2 * s.beta - 1.0);
  if (!(den > 0.0)) throw DomainError("non-positive denominator");
  return s2 * w2 * s.beta * s.beta / den;
}

Eigen::Matrix2d cp_local_hessian(const LocalFactorSummary& s) {
  const double s2 = s.sigma * s.sigma;
  Eigen::Matrix2d h;
  h << s.alpha - s.w * s.w / s2, s.w / s2, s.w / s2, s.beta - 1.0 / s2;
  return h;
}

Eigen::Matrix2d dncp_local_hessian(const LocalFactorSummary& s) {
  const double cross = s.sigma * s.w * s.beta;
  Eigen::Matrix2d h;
  h << s.alpha + s.w * s.w * s.beta, cross, cross, s.sigma * s.sigma * s.beta - 1.0;
  return h;
}

bool prefer_dncp(double sigma, double beta) {
  if (!(beta < 0.0)) throw SignError("beta must be negative, got " + std::to_string(beta));
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive, got " + std::to_string(sigma));
  return 1.0 / (sigma * sigma) > -beta;
}

std::string_view to_string(Limit limit) {
  switch (limit) {
    case Limit::SigmaToZero: return "sigma->0";
    case Limit::SigmaToInfinity: return "sigma->inf";
    case Limit::BetaToZero: return "beta->0";
    case Limit::BetaToMinusInfinity: return "beta->-inf";
    case Limit::AlphaToZero: return "alpha->0";
    case Limit::AlphaToMinusInfinity: return "alpha->-inf";
  }
  return "?";
}

LimitPair limiting_table(const LocalFactorSummary& s, Limit limit) {
  const double w2 = s.w * s.w;
  const double s2 = s.sigma * s.sigma;
  switch (limit) {
    case Limit::SigmaToZero: return {1.0, 0.0};
    case Limit::SigmaToInfinity: return {0.0, s.beta * w2 / (s.beta * w2 + s.alpha)};
    case Limit::BetaToZero: return {w2 / (w2 - s.alpha * s2), 0.0};
    case Limit::BetaToMinusInfinity: return {0.0, 1.0};
    case Limit::AlphaToZero: return {1.0 / (1.0 - s.beta * s2), s.beta * s2 / (s.beta * s2 - 1.0)};
    case Limit::AlphaToMinusInfinity: return {0.0, 0.0};
  }
  return {};
}

LocalFactorSummary approach_limit(const LocalFactorSummary& s, Limit limit, double k) {
  LocalFactorSummary out = s;
  const double small = std::pow(10.0, -k);
  const double large = std::pow(10.0, k);
  switch (limit) {
    case Limit::SigmaToZero: out.sigma = small; break;
    case Limit::SigmaToInfinity: out.sigma = large; break;
    case Limit::BetaToZero: out.beta = -small; break;
    case Limit::BetaToMinusInfinity: out.beta = -large; break;
    case Limit::AlphaToZero: out.alpha = -small; break;
    case Limit::AlphaToMinusInfinity: out.alpha = -large; break;
  }
  return out;
}

namespace {

std::size_t free_index(const FactorGraphModel& model, std::string_view id, std::size_t coord) {
  const std::size_t node = model.index(id);
  for (const auto& s : model.free_slots()) {
    if (s.node == node) {
      if (coord >= s.dim) throw ShapeError("coordinate out of range for '" + std::string(id) + "'");
      return s.offset + coord;
    }
  }
  throw ShapeError("node '" + std::string(id) + "' is not a free coordinate");
}

double second_derivative(ModelEvaluator& ev, ad::ExprId root, const Eigen::VectorXd& free, std::size_t idx,
                         double step) {
  const auto k = static_cast<Eigen::Index>(idx);
  Eigen::VectorXd probe = free;
  probe[k] = free[k] + step;
  const double up = gradient_at(ev, root, probe)[k];
  probe[k] = free[k] - step;
  const double down = gradient_at(ev, root, probe)[k];
  return (up - down) / (2.0 * step);
}

}  // namespace

LocalFactorSummary local_factor_summary(const FactorGraphModel& model, const Eigen::VectorXd& theta,
                                        const Assignment& point, std::string_view child, std::string_view parent,
                                        std::size_t child_coord, std::size_t parent_coord) {
  const std::size_t zi = model.index(child);
  const auto& z = model.node(zi);
  if (z.kind != NodeKind::Latent || z.factor.family != Family::Gaussian) {
    throw ShapeError("node '" + z.id + "' is not a centered Gaussian latent");
  }
  const auto& links = z.factor.link.terms;
  if (std::none_of(links.begin(), links.end(), [&](const AffineTerm& t) { return t.parent == parent; })) {
    throw ShapeError("'" + std::string(parent) + "' is not a link parent of '" + z.id + "'");
  }

  ModelEvaluator ev(model);
  ev.set_parameters(theta);
  ev.set_observed(model.pack_observed(point));
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < model.nodes().size(); ++i) {
    if (i != zi) others.push_back(i);
  }
  const ad::ExprId rest = ev.factor_root(others);
  const Eigen::VectorXd free = model.pack_free(point);
  constexpr double step = 1e-4;

  LocalFactorSummary s;
  s.alpha = second_derivative(ev, rest, free, free_index(model, parent, parent_coord), step);
  s.beta = second_derivative(ev, rest, free, free_index(model, child, child_coord), step);

  Assignment values = ev.complete_values(free);
  Eigen::VectorXd& y = values.find(parent)->second;
  const double y0 = y[static_cast<Eigen::Index>(parent_coord)];
  constexpr double h = 1e-5;
  const auto cc = static_cast<Eigen::Index>(child_coord);
  y[static_cast<Eigen::Index>(parent_coord)] = y0 + h;
  const double up = link_output(z.factor.link, z.dim, model.layout(), theta, values)[cc];
  y[static_cast<Eigen::Index>(parent_coord)] = y0 - h;
  const double down = link_output(z.factor.link, z.dim, model.layout(), theta, values)[cc];
  s.w = (up - down) / (2.0 * h);
  s.sigma = scale_values(z.factor.scale, z.dim, model.layout(), theta)[cc];
  return s;
}

Eigen::Matrix2d lds_cp_hessian(double sigma_x, double sigma_z) {
  const double ix = 1.0 / (sigma_x * sigma_x);
  const double iz = 1.0 / (sigma_z * sigma_z);
  Eigen::Matrix2d h;
  h << -1.0 - ix - iz, iz, iz, -ix - iz;
  return h;
}

Eigen::Matrix2d lds_dncp_hessian(double sigma_x, double sigma_z) {
  const double ix = 1.0 / (sigma_x * sigma_x);
  Eigen::Matrix2d h;
  h << -1.0 - 2.0 * ix, -sigma_z * ix, -sigma_z * ix, -1.0 - sigma_z * sigma_z * ix;
  return h;
}

CorrelationReport lds_correlations(double sigma_x, double sigma_z) {
  const FactorGraphModel cp = build_lds_model(sigma_x, sigma_z);
  ParameterizationPlan plan;
  plan.emplace("z2", location_scale_transform(cp.node("z2")));
  const FactorGraphModel dncp = apply_plan(cp, plan);

  Assignment point;
  for (const char* id : {"z1", "z2", "x1", "x2", "eps_z2"}) point[id] = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd theta;

  CorrelationReport r;
  r.hessian_cp = lds_cp_hessian(sigma_x, sigma_z);
  r.hessian_dncp = lds_dncp_hessian(sigma_x, sigma_z);
  r.rho_sq_cp = squared_correlation_from_hessian(r.hessian_cp, 0, 1).rho_sq;
  r.rho_sq_dncp = squared_correlation_from_hessian(r.hessian_dncp, 0, 1).rho_sq;
  r.hessian_cp_fd = hessian_log_posterior(cp, theta, point);
  r.hessian_dncp_fd = hessian_log_posterior(dncp, theta, point);
  r.rho_sq_cp_fd = squared_correlation_from_hessian(r.hessian_cp_fd, 0, 1).rho_sq;
  r.rho_sq_dncp_fd = squared_correlation_from_hessian(r.hessian_dncp_fd, 0, 1).rho_sq;
  r.prefer_dncp = prefer_dncp(sigma_z, -1.0 / (sigma_x * sigma_x));
  return r;
}

}  // namespace dncp
