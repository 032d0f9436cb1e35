#include "dncp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <set>

#include "dncp/autodiff.hpp"
#include "dncp/errors.hpp"

namespace dncp {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Latent: return "latent";
    case NodeKind::Observed: return "observed";
    case NodeKind::Auxiliary: return "auxiliary";
    case NodeKind::Deterministic: return "deterministic";
  }
  return "?";
}

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Gaussian: return "gaussian";
    case Family::Uniform: return "uniform";
    case Family::Exponential: return "exponential";
    case Family::LogNormal: return "lognormal";
    case Family::Bernoulli: return "bernoulli";
    case Family::StandardNormalAux: return "standard_normal_aux";
    case Family::UniformAux: return "uniform_aux";
    case Family::Deterministic: return "deterministic";
  }
  return "?";
}

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Exp: return "exp";
  }
  return "?";
}

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::None: return "none";
    case TransformKind::GaussianLocationScale: return "gaussian_location_scale";
    case TransformKind::UniformLocationScale: return "uniform_location_scale";
    case TransformKind::ExponentialInverseCdf: return "exponential_inverse_cdf";
    case TransformKind::LogNormalComposition: return "lognormal_composition";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// ParamLayout

void ParamLayout::add(const ParamBlockSpec& spec) {
  if (spec.name.empty()) throw ShapeError("parameter block without a name");
  if (spec.rows == 0 || spec.cols == 0) throw ShapeError("parameter block '" + spec.name + "' is empty");
  if (contains(spec.name)) throw ShapeError("duplicate parameter block '" + spec.name + "'");
  blocks_.push_back(ParamBlock{spec.name, spec.rows, spec.cols, size_});
  size_ += spec.rows * spec.cols;
}

bool ParamLayout::contains(std::string_view name) const {
  return std::any_of(blocks_.begin(), blocks_.end(), [&](const ParamBlock& b) { return b.name == name; });
}

const ParamBlock& ParamLayout::block(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw ShapeError("unknown parameter block '" + std::string(name) + "'");
}

Eigen::Map<const Eigen::VectorXd> ParamLayout::slice(const Eigen::VectorXd& theta,
                                                     std::string_view name) const {
  if (static_cast<std::size_t>(theta.size()) != size_) {
    throw ShapeError("parameter vector has " + std::to_string(theta.size()) + " entries, layout needs " +
                     std::to_string(size_));
  }
  const ParamBlock& b = block(name);
  return {theta.data() + b.offset, static_cast<Eigen::Index>(b.size())};
}

// ---------------------------------------------------------------------------
// FactorGraphModel

std::size_t FactorGraphModel::index(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw ShapeError("unknown node '" + std::string(id) + "'");
  return it->second;
}

bool FactorGraphModel::contains(std::string_view id) const { return index_.count(std::string(id)) > 0; }

namespace {

Eigen::VectorXd pack(const FactorGraphModel& m, const std::vector<CoordinateSlot>& slots, std::size_t dim,
                     const Assignment& a) {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(dim));
  for (const auto& s : slots) {
    const auto& id = m.node(s.node).id;
    auto it = a.find(id);
    if (it == a.end()) throw ShapeError("assignment has no value for '" + id + "'");
    if (static_cast<std::size_t>(it->second.size()) != s.dim) {
      throw ShapeError("value for '" + id + "' has dimension " + std::to_string(it->second.size()));
    }
    flat.segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.dim)) = it->second;
  }
  return flat;
}

void unpack(const FactorGraphModel& m, const std::vector<CoordinateSlot>& slots, std::size_t dim,
            const Eigen::VectorXd& flat, Assignment& a) {
  if (static_cast<std::size_t>(flat.size()) != dim) {
    throw ShapeError("flat vector has " + std::to_string(flat.size()) + " entries, expected " +
                     std::to_string(dim));
  }
  for (const auto& s : slots) {
    a[m.node(s.node).id] = flat.segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.dim));
  }
}

bool is_continuous_cp_family(Family f) {
  return f == Family::Gaussian || f == Family::Uniform || f == Family::Exponential || f == Family::LogNormal;
}

Family noise_family_for(TransformKind kind) {
  switch (kind) {
    case TransformKind::GaussianLocationScale:
    case TransformKind::LogNormalComposition:
      return Family::StandardNormalAux;
    case TransformKind::UniformLocationScale:
    case TransformKind::ExponentialInverseCdf:
      return Family::UniformAux;
    case TransformKind::None:
      break;
  }
  return Family::Deterministic;
}

}  // namespace

Eigen::VectorXd FactorGraphModel::pack_free(const Assignment& a) const { return pack(*this, free_, free_dim_, a); }
void FactorGraphModel::unpack_free(const Eigen::VectorXd& flat, Assignment& a) const {
  unpack(*this, free_, free_dim_, flat, a);
}
Eigen::VectorXd FactorGraphModel::pack_observed(const Assignment& a) const {
  return pack(*this, observed_, observed_dim_, a);
}
void FactorGraphModel::unpack_observed(const Eigen::VectorXd& flat, Assignment& a) const {
  unpack(*this, observed_, observed_dim_, flat, a);
}

std::vector<std::string> parent_ids(const NodeSpec& node) {
  std::vector<std::string> ids;
  for (const auto& t : node.factor.link.terms) {
    if (std::find(ids.begin(), ids.end(), t.parent) == ids.end()) ids.push_back(t.parent);
  }
  if (!node.factor.noise_parent.empty() &&
      std::find(ids.begin(), ids.end(), node.factor.noise_parent) == ids.end()) {
    ids.push_back(node.factor.noise_parent);
  }
  return ids;
}

FactorGraphModel build_model(const ModelSpec& spec) {
  FactorGraphModel m;
  m.spec_ = spec;
  for (const auto& p : spec.parameters) m.layout_.add(p);

  m.nodes_ = spec.nodes;
  for (std::size_t i = 0; i < m.nodes_.size(); ++i) {
    auto& n = m.nodes_[i];
    if (n.id.empty()) throw ShapeError("node without an id");
    if (n.dim == 0) throw ShapeError("node '" + n.id + "' has dimension 0");
    if (!m.index_.emplace(n.id, i).second) throw ShapeError("duplicate node id '" + n.id + "'");

    auto& f = n.factor;
    if (f.scale.is_fixed() && f.scale.fixed < 0.0) throw ShapeError("node '" + n.id + "' has a negative scale");
    if (n.kind == NodeKind::Latent && f.family == Family::Gaussian && f.scale.is_fixed() && f.scale.fixed == 0.0) {
      n.kind = NodeKind::Deterministic;
      f.family = Family::Deterministic;
      f.transform = TransformKind::None;
    }
  }

  const std::size_t count = m.nodes_.size();
  m.parents_.assign(count, {});
  m.children_.assign(count, {});

  for (std::size_t i = 0; i < count; ++i) {
    const auto& n = m.nodes_[i];
    const auto& f = n.factor;
    const std::string where = "node '" + n.id + "': ";

    switch (n.kind) {
      case NodeKind::Auxiliary:
        if (f.family != Family::StandardNormalAux && f.family != Family::UniformAux) {
          throw ShapeError(where + "auxiliary nodes need an auxiliary family");
        }
        if (!f.link.terms.empty() || !f.link.bias.empty() || !f.noise_parent.empty()) {
          throw ShapeError(where + "auxiliary nodes are roots without parameters");
        }
        break;
      case NodeKind::Deterministic:
        if (f.family != Family::Deterministic) throw ShapeError(where + "deterministic nodes need the deterministic family");
        if ((f.transform == TransformKind::None) != f.noise_parent.empty()) {
          throw ShapeError(where + "a noise parent is required exactly when a transform is set");
        }
        break;
      case NodeKind::Latent:
        if (!is_continuous_cp_family(f.family)) {
          throw ShapeError(where + "latent nodes must use a continuous family, got " + std::string(to_string(f.family)));
        }
        break;
      case NodeKind::Observed:
        if (!is_continuous_cp_family(f.family) && f.family != Family::Bernoulli) {
          throw ShapeError(where + "unsupported family for an observed node");
        }
        break;
    }
    if (n.kind != NodeKind::Deterministic && (f.transform != TransformKind::None || !f.noise_parent.empty())) {
      throw ShapeError(where + "only deterministic nodes carry a transform");
    }
    if (f.family == Family::Bernoulli && f.link.activation != Activation::Sigmoid) {
      throw ShapeError(where + "Bernoulli factors need a sigmoid link");
    }

    for (const auto& t : f.link.terms) {
      if (!m.contains(t.parent)) throw ShapeError(where + "unknown parent '" + t.parent + "'");
      const auto& p = m.nodes_[m.index(t.parent)];
      if (t.weight.empty()) {
        if (p.dim != n.dim) throw ShapeError(where + "identity term needs parent '" + p.id + "' of equal dimension");
      } else {
        const auto& w = m.layout_.block(t.weight);
        if (w.rows != n.dim || w.cols != p.dim) {
          throw ShapeError(where + "weight '" + w.name + "' is " + std::to_string(w.rows) + "x" +
                           std::to_string(w.cols) + ", expected " + std::to_string(n.dim) + "x" +
                           std::to_string(p.dim));
        }
      }
    }
    if (!f.link.bias.empty() && m.layout_.block(f.link.bias).size() != n.dim) {
      throw ShapeError(where + "bias '" + f.link.bias + "' does not match the node dimension");
    }
    if (!f.scale.is_fixed()) {
      const auto sz = m.layout_.block(f.scale.log_param).size();
      if (sz != 1 && sz != n.dim) throw ShapeError(where + "scale block must have size 1 or " + std::to_string(n.dim));
    }
    if (!f.noise_parent.empty()) {
      if (!m.contains(f.noise_parent)) throw ShapeError(where + "unknown noise parent '" + f.noise_parent + "'");
      const auto& e = m.nodes_[m.index(f.noise_parent)];
      if (e.kind != NodeKind::Auxiliary || e.dim != n.dim || e.factor.family != noise_family_for(f.transform)) {
        throw ShapeError(where + "noise parent '" + e.id + "' does not match transform " +
                         std::string(to_string(f.transform)));
      }
    }

    for (const auto& pid : parent_ids(n)) {
      const std::size_t p = m.index(pid);
      m.parents_[i].push_back(p);
      m.children_[p].push_back(i);
    }
  }

  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t p : m.parents_[i]) {
      if (m.nodes_[p].kind == NodeKind::Observed) {
        throw ObservedNotLeaf("observed node '" + m.nodes_[p].id + "' is a parent of '" + m.nodes_[i].id + "'");
      }
    }
  }

  // Kahn's algorithm, ties broken by declaration order.
  std::vector<std::size_t> indegree(count);
  for (std::size_t i = 0; i < count; ++i) indegree[i] = m.parents_[i].size();
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < count; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  while (!ready.empty()) {
    const std::size_t i = ready.top();
    ready.pop();
    m.topo_.push_back(i);
    for (std::size_t c : m.children_[i]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (m.topo_.size() != count) {
    std::string stuck;
    for (std::size_t i = 0; i < count; ++i) {
      if (indegree[i] > 0) stuck += (stuck.empty() ? "" : ", ") + m.nodes_[i].id;
    }
    throw CycleError("graph is not acyclic; nodes on or behind a cycle: " + stuck);
  }

  for (std::size_t i : m.topo_) {
    const auto& n = m.nodes_[i];
    if (n.kind == NodeKind::Latent || n.kind == NodeKind::Auxiliary) {
      m.free_.push_back({i, m.free_dim_, n.dim});
      m.free_dim_ += n.dim;
    } else if (n.kind == NodeKind::Observed) {
      m.observed_.push_back({i, m.observed_dim_, n.dim});
      m.observed_dim_ += n.dim;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Numeric forward evaluation

Eigen::VectorXd link_output(const LinkFn& link, std::size_t dim, const ParamLayout& layout,
                            const Eigen::VectorXd& theta, const Assignment& values) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& t : link.terms) {
    auto it = values.find(t.parent);
    if (it == values.end()) throw ShapeError("missing value for parent '" + t.parent + "'");
    if (t.weight.empty()) {
      acc += it->second;
    } else {
      const auto& b = layout.block(t.weight);
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(
          layout.slice(theta, t.weight).data(), static_cast<Eigen::Index>(b.rows),
          static_cast<Eigen::Index>(b.cols));
      acc += w * it->second;
    }
  }
  if (!link.bias.empty()) acc += layout.slice(theta, link.bias);
  switch (link.activation) {
    case Activation::Identity: break;
    case Activation::Tanh: acc = acc.array().tanh(); break;
    case Activation::Sigmoid: acc = (1.0 + (-acc.array()).exp()).inverse(); break;
    case Activation::Exp: acc = acc.array().exp(); break;
  }
  return acc;
}

Eigen::VectorXd scale_values(const ScaleSpec& scale, std::size_t dim, const ParamLayout& layout,
                             const Eigen::VectorXd& theta) {
  const auto n = static_cast<Eigen::Index>(dim);
  Eigen::VectorXd s(n);
  if (scale.is_fixed()) {
    s.setConstant(scale.fixed);
  } else {
    const auto block = layout.slice(theta, scale.log_param);
    s = block.size() == 1 ? Eigen::VectorXd::Constant(n, std::exp(block[0])) : Eigen::VectorXd(block.array().exp());
  }
  return s.cwiseMax(ad::kScaleFloor);
}

Eigen::VectorXd deterministic_value(const FactorGraphModel& model, std::size_t i, const Eigen::VectorXd& theta,
                                    const Assignment& values) {
  const auto& n = model.node(i);
  const auto& f = n.factor;
  if (n.kind != NodeKind::Deterministic) throw ShapeError("node '" + n.id + "' is not deterministic");
  const Eigen::VectorXd link = link_output(f.link, n.dim, model.layout(), theta, values);
  if (f.transform == TransformKind::None) return link;

  auto it = values.find(f.noise_parent);
  if (it == values.end()) throw ShapeError("missing value for noise parent '" + f.noise_parent + "'");
  const Eigen::VectorXd& eps = it->second;
  const Eigen::VectorXd s = scale_values(f.scale, n.dim, model.layout(), theta);
  switch (f.transform) {
    case TransformKind::GaussianLocationScale:
    case TransformKind::UniformLocationScale:
      return link + s.cwiseProduct(eps);
    case TransformKind::ExponentialInverseCdf:
      return (-(-eps.array()).log1p() / link.array()).matrix();
    case TransformKind::LogNormalComposition:
      return (link + s.cwiseProduct(eps)).array().exp().matrix();
    case TransformKind::None:
      break;
  }
  return link;
}

void complete_deterministic(const FactorGraphModel& model, const Eigen::VectorXd& theta, Assignment& values) {
  for (std::size_t i : model.topo_order()) {
    if (model.node(i).kind == NodeKind::Deterministic) {
      values[model.node(i).id] = deterministic_value(model, i, theta, values);
    }
  }
}

namespace {

Eigen::VectorXd draw(const FactorGraphModel& model, std::size_t i, const Eigen::VectorXd& theta,
                     const Assignment& values, Rng& rng) {
  const auto& n = model.node(i);
  const auto& f = n.factor;
  const auto dim = static_cast<Eigen::Index>(n.dim);
  Eigen::VectorXd out(dim);
  switch (f.family) {
    case Family::StandardNormalAux:
      for (Eigen::Index k = 0; k < dim; ++k) out[k] = rng.normal();
      return out;
    case Family::UniformAux:
      for (Eigen::Index k = 0; k < dim; ++k) out[k] = rng.uniform();
      return out;
    case Family::Deterministic:
      return deterministic_value(model, i, theta, values);
    default:
      break;
  }

  const Eigen::VectorXd link = link_output(f.link, n.dim, model.layout(), theta, values);
  const Eigen::VectorXd s = scale_values(f.scale, n.dim, model.layout(), theta);
  for (Eigen::Index k = 0; k < dim; ++k) {
    switch (f.family) {
      case Family::Gaussian:
        out[k] = std::normal_distribution<double>(link[k], s[k])(rng);
        break;
      case Family::Uniform:
        out[k] = std::uniform_real_distribution<double>(link[k], link[k] + s[k])(rng);
        break;
      case Family::Exponential:
        out[k] = std::exponential_distribution<double>(link[k])(rng);
        break;
      case Family::LogNormal:
        out[k] = std::lognormal_distribution<double>(link[k], s[k])(rng);
        break;
      case Family::Bernoulli:
        out[k] = rng.bernoulli(link[k]) ? 1.0 : 0.0;
        break;
      default:
        break;
    }
  }
  return out;
}

}  // namespace

Assignment ancestral_sample(const FactorGraphModel& model, const Eigen::VectorXd& theta, Rng& rng) {
  Assignment values;
  for (std::size_t i : model.topo_order()) {
    Eigen::VectorXd v = draw(model, i, theta, values, rng);
    if (!v.allFinite()) throw NonFinite("ancestral sample of '" + model.node(i).id + "'");
    values[model.node(i).id] = std::move(v);
  }
  return values;
}

Eigen::VectorXd sample_auxiliary(const FactorGraphModel& model, Rng& rng) {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(model.free_dim()));
  for (const auto& s : model.free_slots()) {
    const auto& n = model.node(s.node);
    if (n.kind != NodeKind::Auxiliary) {
      throw PreconditionError("node '" + n.id + "' is not reparameterized");
    }
    const bool normal = n.factor.family == Family::StandardNormalAux;
    for (std::size_t k = 0; k < s.dim; ++k) {
      flat[static_cast<Eigen::Index>(s.offset + k)] = normal ? rng.normal() : rng.uniform();
    }
  }
  return flat;
}

Eigen::VectorXd random_parameters(const FactorGraphModel& model, Rng& rng, double scale) {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(model.layout().size()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = scale * rng.normal();
  return theta;
}

}  // namespace dncp
