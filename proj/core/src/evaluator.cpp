#include "dncp/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "dncp/errors.hpp"

namespace dncp {

using ad::ExprId;

ModelEvaluator::ModelEvaluator(FactorGraphModel model) : model_(std::move(model)) {
  for (const auto& b : model_.layout().blocks()) {
    param_expr_.emplace(b.name, graph_.input(b.name, b.size()));
  }

  const std::size_t count = model_.nodes().size();
  value_expr_.assign(count, 0);
  factor_expr_.assign(count, 0);
  node_slot_.assign(count, 0);
  support_.assign(count, {});

  for (std::size_t i : model_.topo_order()) {
    const auto& n = model_.node(i);
    const auto& f = n.factor;
    if (n.kind != NodeKind::Deterministic) {
      node_slot_[i] = graph_.input_count();
      value_expr_[i] = graph_.input(n.id, n.dim);
      factor_expr_[i] = build_factor(i);
      continue;
    }
    if (f.transform == TransformKind::None) {
      value_expr_[i] = build_link(f.link, n.dim, true);
      continue;
    }
    const ExprId eps = value_expr_[model_.index(f.noise_parent)];
    const ExprId link = build_link(f.link, n.dim, true);
    switch (f.transform) {
      case TransformKind::GaussianLocationScale:
      case TransformKind::UniformLocationScale:
        value_expr_[i] = graph_.add(link, graph_.mul(build_scale(f.scale), eps));
        break;
      case TransformKind::ExponentialInverseCdf:
        value_expr_[i] = graph_.div(graph_.neg(graph_.log(graph_.sub(graph_.constant(1.0), eps))), link);
        break;
      case TransformKind::LogNormalComposition:
        value_expr_[i] = graph_.exp(graph_.add(link, graph_.mul(build_scale(f.scale), eps)));
        break;
      case TransformKind::None:
        break;
    }
  }

  std::vector<std::size_t> all;
  std::vector<std::size_t> observed;
  for (std::size_t i = 0; i < count; ++i) {
    all.push_back(i);
    if (model_.node(i).kind == NodeKind::Observed) observed.push_back(i);
  }
  joint_ = factor_root(all);
  likelihood_ = factor_root(observed);

  binding_ = ad::InputBinding(graph_.input_count());
  if (model_.layout().size() == 0) set_parameters(Eigen::VectorXd());
  if (model_.observed_dim() == 0) set_observed(Eigen::VectorXd());
}

ExprId ModelEvaluator::build_link(const LinkFn& link, std::size_t dim, bool apply_activation) {
  std::optional<ExprId> acc;
  for (const auto& t : link.terms) {
    const ExprId parent = value_expr_[model_.index(t.parent)];
    const ExprId term = t.weight.empty() ? parent : graph_.affine(param_expr_.at(t.weight), parent, dim);
    acc = acc ? graph_.add(*acc, term) : term;
  }
  if (!link.bias.empty()) {
    const ExprId b = param_expr_.at(link.bias);
    acc = acc ? graph_.add(*acc, b) : b;
  }
  ExprId out = acc ? *acc : graph_.constant(std::vector<double>(dim, 0.0));
  if (!apply_activation) return out;
  switch (link.activation) {
    case Activation::Identity: break;
    case Activation::Tanh: out = graph_.tanh(out); break;
    case Activation::Sigmoid: out = graph_.sigmoid(out); break;
    case Activation::Exp: out = graph_.exp(out); break;
  }
  return out;
}

ExprId ModelEvaluator::build_scale(const ScaleSpec& scale) {
  if (scale.is_fixed()) return graph_.constant(std::max(scale.fixed, ad::kScaleFloor));
  return graph_.exp(param_expr_.at(scale.log_param));
}

ExprId ModelEvaluator::build_factor(std::size_t i) {
  const auto& n = model_.node(i);
  const auto& f = n.factor;
  const ExprId x = value_expr_[i];
  switch (f.family) {
    case Family::Gaussian:
      return graph_.gaussian_log_pdf(x, build_link(f.link, n.dim, true), build_scale(f.scale));
    case Family::Bernoulli:
      return graph_.bernoulli_log_pmf(x, build_link(f.link, n.dim, false));
    case Family::Uniform: {
      const ExprId lo = build_link(f.link, n.dim, true);
      const ExprId width = build_scale(f.scale);
      support_[i].push_back({Support::Interval, x, lo, width});
      const ExprId ones = graph_.constant(std::vector<double>(n.dim, 1.0));
      const ExprId terms = graph_.mul(graph_.neg(graph_.log(width)), ones);
      return graph_.sum(std::span<const ExprId>(&terms, 1));
    }
    case Family::Exponential: {
      const ExprId rate = build_link(f.link, n.dim, true);
      support_[i].push_back({Support::Positive, rate});
      support_[i].push_back({Support::NonNegative, x});
      const ExprId terms = graph_.sub(graph_.log(rate), graph_.mul(rate, x));
      return graph_.sum(std::span<const ExprId>(&terms, 1));
    }
    case Family::LogNormal: {
      support_[i].push_back({Support::Positive, x});
      const ExprId lx = graph_.log(x);
      const ExprId parts[] = {graph_.gaussian_log_pdf(lx, build_link(f.link, n.dim, true), build_scale(f.scale)),
                              graph_.neg(lx)};
      return graph_.sum(parts);
    }
    case Family::StandardNormalAux:
      return graph_.gaussian_log_pdf(x, graph_.constant(0.0), graph_.constant(1.0));
    case Family::UniformAux:
      support_[i].push_back({Support::OpenUnit, x});
      return graph_.constant(0.0);
    case Family::Deterministic:
      break;
  }
  throw UnsupportedFamily("node '" + n.id + "' has no density");
}

ExprId ModelEvaluator::register_root(ExprId root, std::span<const std::size_t> nodes) {
  roots_.emplace_back(root, std::vector<std::size_t>(nodes.begin(), nodes.end()));
  return root;
}

ExprId ModelEvaluator::factor_root(std::span<const std::size_t> nodes) {
  std::vector<ExprId> children;
  std::vector<std::size_t> kept;
  for (std::size_t i : nodes) {
    if (model_.node(i).kind == NodeKind::Deterministic) continue;
    children.push_back(factor_expr_.at(i));
    kept.push_back(i);
  }
  const ExprId root = children.empty() ? graph_.constant(0.0) : graph_.sum(children);
  return register_root(root, kept);
}

void ModelEvaluator::set_parameters(const Eigen::VectorXd& theta) {
  const auto& layout = model_.layout();
  if (static_cast<std::size_t>(theta.size()) != layout.size()) {
    throw ShapeError("parameter vector has " + std::to_string(theta.size()) + " entries, model needs " +
                     std::to_string(layout.size()));
  }
  theta_ = theta;
  for (std::size_t b = 0; b < layout.blocks().size(); ++b) {
    const auto& blk = layout.blocks()[b];
    binding_.bind(b, std::span<const double>(theta_.data() + blk.offset, blk.size()));
  }
}

void ModelEvaluator::set_observed(const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != model_.observed_dim()) {
    throw ShapeError("observed vector has " + std::to_string(x.size()) + " entries, model needs " +
                     std::to_string(model_.observed_dim()));
  }
  for (const auto& s : model_.observed_slots()) {
    binding_.bind(node_slot_[s.node], std::span<const double>(x.data() + s.offset, s.dim));
  }
}

void ModelEvaluator::bind_free(const Eigen::VectorXd& free) {
  if (static_cast<std::size_t>(free.size()) != model_.free_dim()) {
    throw ShapeError("free vector has " + std::to_string(free.size()) + " entries, model needs " +
                     std::to_string(model_.free_dim()));
  }
  for (const auto& s : model_.free_slots()) {
    binding_.bind(node_slot_[s.node], std::span<const double>(free.data() + s.offset, s.dim));
  }
}

bool ModelEvaluator::in_support(ExprId root) const {
  auto it = std::find_if(roots_.begin(), roots_.end(), [&](const auto& r) { return r.first == root; });
  if (it == roots_.end()) throw PreconditionError("unknown evaluation root");
  for (std::size_t i : it->second) {
    for (const auto& c : support_[i]) {
      const auto x = graph_.value(c.x);
      for (std::size_t k = 0; k < x.size(); ++k) {
        switch (c.kind) {
          case Support::Interval: {
            const auto lo = graph_.value(c.lo);
            const auto w = graph_.value(c.width);
            const double l = lo[lo.size() == 1 ? 0 : k];
            const double h = l + w[w.size() == 1 ? 0 : k];
            if (!(x[k] >= l && x[k] <= h)) return false;
            break;
          }
          case Support::Positive:
            if (!(x[k] > 0.0)) return false;
            break;
          case Support::NonNegative:
            if (!(x[k] >= 0.0)) return false;
            break;
          case Support::OpenUnit:
            if (!(x[k] > 0.0 && x[k] < 1.0)) return false;
            break;
        }
      }
    }
  }
  return true;
}

double ModelEvaluator::evaluate(ExprId root, const Eigen::VectorXd& free, Eigen::VectorXd* free_grad,
                                Eigen::VectorXd* theta_grad) {
  bind_free(free);
  graph_.forward(binding_);
  if (free_grad) free_grad->setZero(static_cast<Eigen::Index>(model_.free_dim()));
  if (theta_grad) theta_grad->setZero(static_cast<Eigen::Index>(model_.layout().size()));
  if (!in_support(root)) return -std::numeric_limits<double>::infinity();

  const double v = graph_.value(root)[0];
  if (!std::isfinite(v)) throw NonFinite("log-density evaluated to " + std::to_string(v));
  if (!free_grad && !theta_grad) return v;

  graph_.backward(root);
  if (free_grad) {
    for (const auto& s : model_.free_slots()) {
      const auto adj = graph_.adjoint(value_expr_[s.node]);
      std::copy(adj.begin(), adj.end(), free_grad->data() + s.offset);
    }
    if (!free_grad->allFinite()) throw NonFinite("latent gradient is not finite");
  }
  if (theta_grad) {
    for (const auto& b : model_.layout().blocks()) {
      const auto adj = graph_.adjoint(param_expr_.at(b.name));
      std::copy(adj.begin(), adj.end(), theta_grad->data() + b.offset);
    }
    if (!theta_grad->allFinite()) throw NonFinite("parameter gradient is not finite");
  }
  return v;
}

Assignment ModelEvaluator::complete_values(const Eigen::VectorXd& free) {
  bind_free(free);
  graph_.forward(binding_);
  Assignment out;
  for (std::size_t i = 0; i < model_.nodes().size(); ++i) {
    const auto v = graph_.value(value_expr_[i]);
    out[model_.node(i).id] = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return out;
}

namespace {

ModelEvaluator prepared(const FactorGraphModel& model, const Eigen::VectorXd& theta, const Assignment& a) {
  ModelEvaluator ev(model);
  ev.set_parameters(theta);
  ev.set_observed(model.pack_observed(a));
  return ev;
}

}  // namespace

double log_joint(const FactorGraphModel& model, const Eigen::VectorXd& theta, const Assignment& a) {
  auto ev = prepared(model, theta, a);
  return ev.log_joint(model.pack_free(a));
}

Eigen::VectorXd grad_log_joint_latents(const FactorGraphModel& model, const Eigen::VectorXd& theta,
                                       const Assignment& a) {
  auto ev = prepared(model, theta, a);
  Eigen::VectorXd g;
  ev.log_joint(model.pack_free(a), &g);
  return g;
}

Eigen::VectorXd grad_log_joint_params(const FactorGraphModel& model, const Eigen::VectorXd& theta,
                                      const Assignment& a) {
  auto ev = prepared(model, theta, a);
  Eigen::VectorXd g;
  ev.log_joint(model.pack_free(a), nullptr, &g);
  return g;
}

}  // namespace dncp
