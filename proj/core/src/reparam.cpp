#include "dncp/reparam.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "dncp/errors.hpp"

namespace dncp {

namespace {

double at(const Eigen::VectorXd& v, Eigen::Index k) { return v.size() == 1 ? v[0] : v[k]; }

void check_dims(const Eigen::VectorXd& loc, const Eigen::VectorXd& scale, const Eigen::VectorXd& x) {
  if ((loc.size() != 1 && loc.size() != x.size()) || (scale.size() != 1 && scale.size() != x.size())) {
    throw ShapeError("transform operands have mismatched dimensions");
  }
}

}  // namespace

Eigen::VectorXd DncpTransform::g(const Eigen::VectorXd& loc, const Eigen::VectorXd& scale,
                                 const Eigen::VectorXd& eps) const {
  check_dims(loc, scale, eps);
  Eigen::VectorXd z(eps.size());
  for (Eigen::Index k = 0; k < eps.size(); ++k) {
    const double m = at(loc, k);
    const double s = at(scale, k);
    switch (kind) {
      case TransformKind::GaussianLocationScale:
      case TransformKind::UniformLocationScale: z[k] = m + s * eps[k]; break;
      case TransformKind::ExponentialInverseCdf: z[k] = -std::log1p(-eps[k]) / m; break;
      case TransformKind::LogNormalComposition: z[k] = std::exp(m + s * eps[k]); break;
      case TransformKind::None: throw UnsupportedFamily("transform without a kind");
    }
  }
  return z;
}

Eigen::VectorXd DncpTransform::g_inverse(const Eigen::VectorXd& loc, const Eigen::VectorXd& scale,
                                         const Eigen::VectorXd& z) const {
  check_dims(loc, scale, z);
  Eigen::VectorXd eps(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const double m = at(loc, k);
    const double s = at(scale, k);
    switch (kind) {
      case TransformKind::GaussianLocationScale:
      case TransformKind::UniformLocationScale: eps[k] = (z[k] - m) / s; break;
      case TransformKind::ExponentialInverseCdf:
        if (!(z[k] >= 0.0) || !(m > 0.0)) throw NonInvertible("exponential value outside the support");
        eps[k] = -std::expm1(-m * z[k]);
        break;
      case TransformKind::LogNormalComposition:
        if (!(z[k] > 0.0)) throw NonInvertible("log-normal value must be positive");
        eps[k] = (std::log(z[k]) - m) / s;
        break;
      case TransformKind::None: throw UnsupportedFamily("transform without a kind");
    }
    if (!std::isfinite(eps[k])) throw NonInvertible("non-finite noise value for '" + node_id + "'");
  }
  return eps;
}

Eigen::VectorXd DncpTransform::jacobian_log_abs_det(const Eigen::VectorXd& loc, const Eigen::VectorXd& scale,
                                                    const Eigen::VectorXd& eps) const {
  check_dims(loc, scale, eps);
  Eigen::VectorXd out(eps.size());
  for (Eigen::Index k = 0; k < eps.size(); ++k) {
    const double m = at(loc, k);
    const double s = at(scale, k);
    switch (kind) {
      case TransformKind::GaussianLocationScale:
      case TransformKind::UniformLocationScale: out[k] = std::log(s); break;
      case TransformKind::ExponentialInverseCdf: out[k] = -std::log(m) - std::log1p(-eps[k]); break;
      case TransformKind::LogNormalComposition: out[k] = std::log(s) + m + s * eps[k]; break;
      case TransformKind::None: throw UnsupportedFamily("transform without a kind");
    }
  }
  return out;
}

double DncpTransform::noise_log_density(const Eigen::VectorXd& eps) const {
  if (noise == Family::UniformAux) {
    const bool inside = ((eps.array() > 0.0) && (eps.array() < 1.0)).all();
    return inside ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return -0.5 * eps.squaredNorm() - static_cast<double>(eps.size()) * half_log_two_pi;
}

Eigen::VectorXd DncpTransform::g(const ParamLayout& layout, const Eigen::VectorXd& theta,
                                 const Assignment& parents, const Eigen::VectorXd& eps) const {
  const auto dim = static_cast<std::size_t>(eps.size());
  return g(link_output(link, dim, layout, theta, parents), scale_values(scale, dim, layout, theta), eps);
}

Eigen::VectorXd DncpTransform::g_inverse(const ParamLayout& layout, const Eigen::VectorXd& theta,
                                         const Assignment& parents, const Eigen::VectorXd& z) const {
  const auto dim = static_cast<std::size_t>(z.size());
  return g_inverse(link_output(link, dim, layout, theta, parents), scale_values(scale, dim, layout, theta), z);
}

namespace {

DncpTransform make(const NodeSpec& node, TransformKind kind, Family noise) {
  if (node.kind != NodeKind::Latent) {
    throw UnsupportedFamily("node '" + node.id + "' is not a latent variable");
  }
  return DncpTransform{node.id, kind, noise, node.factor.link, node.factor.scale};
}

}  // namespace

DncpTransform location_scale_transform(const NodeSpec& node) {
  const auto& f = node.factor;
  if (f.family != Family::Gaussian && f.family != Family::Uniform) {
    throw UnsupportedFamily("no location-scale form for family " + std::string(to_string(f.family)));
  }
  if (f.scale.is_fixed() && f.scale.fixed < 1e-8) {
    throw ZeroScale("node '" + node.id + "' has zero scale; model it as deterministic");
  }
  return f.family == Family::Gaussian
             ? make(node, TransformKind::GaussianLocationScale, Family::StandardNormalAux)
             : make(node, TransformKind::UniformLocationScale, Family::UniformAux);
}

DncpTransform inverse_cdf_transform(const NodeSpec& node) {
  if (node.factor.family != Family::Exponential) {
    throw UnsupportedFamily("no closed-form inverse CDF for family " + std::string(to_string(node.factor.family)));
  }
  return make(node, TransformKind::ExponentialInverseCdf, Family::UniformAux);
}

DncpTransform composition_transform(const NodeSpec& node) {
  if (node.factor.family != Family::LogNormal) {
    throw UnsupportedFamily("no composition recipe for family " + std::string(to_string(node.factor.family)));
  }
  return make(node, TransformKind::LogNormalComposition, Family::StandardNormalAux);
}

DncpTransform default_transform(const NodeSpec& node) {
  switch (node.factor.family) {
    case Family::Gaussian:
    case Family::Uniform: return location_scale_transform(node);
    case Family::Exponential: return inverse_cdf_transform(node);
    case Family::LogNormal: return composition_transform(node);
    default: break;
  }
  throw UnsupportedFamily("no transform for family " + std::string(to_string(node.factor.family)));
}

ParameterizationPlan full_dncp_plan(const FactorGraphModel& model) {
  ParameterizationPlan plan;
  for (const auto& n : model.nodes()) {
    if (n.kind == NodeKind::Latent) plan.emplace(n.id, default_transform(n));
  }
  return plan;
}

std::string aux_id(std::string_view node_id) { return "eps_" + std::string(node_id); }

FactorGraphModel apply_plan(const FactorGraphModel& model, const ParameterizationPlan& plan) {
  for (const auto& [id, t] : plan) {
    if (!model.contains(id)) throw ShapeError("plan names unknown node '" + id + "'");
    const auto& n = model.node(id);
    if (n.kind != NodeKind::Latent) throw ShapeError("plan entry '" + id + "' is not a latent node");
    if (t.node_id != id) throw ShapeError("plan entry '" + id + "' holds the transform of '" + t.node_id + "'");
    if (model.contains(aux_id(id))) throw ShapeError("auxiliary id '" + aux_id(id) + "' already in use");
  }

  ModelSpec spec;
  spec.parameters = model.spec().parameters;
  for (const auto& n : model.nodes()) {
    auto it = plan.find(n.id);
    if (it == plan.end()) {
      spec.nodes.push_back(n);
      continue;
    }
    const DncpTransform& t = it->second;
    NodeSpec eps;
    eps.id = aux_id(n.id);
    eps.kind = NodeKind::Auxiliary;
    eps.dim = n.dim;
    eps.factor.family = t.noise;
    spec.nodes.push_back(std::move(eps));

    NodeSpec z = n;
    z.kind = NodeKind::Deterministic;
    z.factor.family = Family::Deterministic;
    z.factor.link = t.link;
    z.factor.scale = t.scale;
    z.factor.transform = t.kind;
    z.factor.noise_parent = aux_id(n.id);
    spec.nodes.push_back(std::move(z));
  }
  return build_model(spec);
}

namespace {

const Eigen::VectorXd& require(const Assignment& a, const std::string& id) {
  auto it = a.find(id);
  if (it == a.end()) throw ShapeError("assignment has no value for '" + id + "'");
  return it->second;
}

}  // namespace

Assignment z_from_eps(const FactorGraphModel& model, const ParameterizationPlan& plan, const Assignment& eps,
                      const Eigen::VectorXd& theta) {
  Assignment values;
  for (std::size_t i : model.topo_order()) {
    const auto& n = model.node(i);
    if (n.kind == NodeKind::Observed) continue;
    if (n.kind == NodeKind::Deterministic) {
      values[n.id] = deterministic_value(model, i, theta, values);
      continue;
    }
    auto it = plan.find(n.id);
    if (it == plan.end()) {
      values[n.id] = require(eps, n.id);
      continue;
    }
    Eigen::VectorXd z = it->second.g(model.layout(), theta, values, require(eps, aux_id(n.id)));
    if (!z.allFinite()) throw NonFinite("reparameterized value of '" + n.id + "' is not finite");
    values[n.id] = std::move(z);
  }
  return values;
}

Assignment eps_from_z(const FactorGraphModel& model, const ParameterizationPlan& plan, const Assignment& z,
                      const Eigen::VectorXd& theta) {
  Assignment values;
  Assignment out;
  for (std::size_t i : model.topo_order()) {
    const auto& n = model.node(i);
    if (n.kind == NodeKind::Observed) continue;
    if (n.kind == NodeKind::Deterministic) {
      values[n.id] = deterministic_value(model, i, theta, values);
      continue;
    }
    const Eigen::VectorXd& v = require(z, n.id);
    values[n.id] = v;
    auto it = plan.find(n.id);
    if (it == plan.end()) {
      out[n.id] = v;
    } else {
      out[aux_id(n.id)] = it->second.g_inverse(model.layout(), theta, values, v);
    }
  }
  return out;
}

CoordinateMap::CoordinateMap(const FactorGraphModel& centered, ParameterizationPlan plan)
    : centered_(centered), plan_(std::move(plan)), reparameterized_(apply_plan(centered_, plan_)) {}

Eigen::VectorXd CoordinateMap::to_eps(const Eigen::VectorXd& z, const Eigen::VectorXd& theta) const {
  Assignment a;
  centered_.unpack_free(z, a);
  return reparameterized_.pack_free(eps_from_z(centered_, plan_, a, theta));
}

Eigen::VectorXd CoordinateMap::to_z(const Eigen::VectorXd& eps, const Eigen::VectorXd& theta) const {
  Assignment a;
  reparameterized_.unpack_free(eps, a);
  return centered_.pack_free(z_from_eps(centered_, plan_, a, theta));
}

}  // namespace dncp
