#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "dncp/rng.hpp"

namespace dncp {

enum class NodeKind { Latent, Observed, Auxiliary, Deterministic };

enum class Family {
  Gaussian,
  Uniform,      // location = link output (lower bound), width = scale
  Exponential,  // rate = link output
  LogNormal,    // log z ~ N(link output, scale^2)
  Bernoulli,    // logits = affine part of a sigmoid link
  StandardNormalAux,
  UniformAux,
  Deterministic,
};

enum class Activation { Identity, Tanh, Sigmoid, Exp };

/// How a deterministic node combines its link, its scale and (optionally) an
/// auxiliary noise parent.
enum class TransformKind {
  None,                   // z = link(pa)
  GaussianLocationScale,  // z = mu(pa) + sigma * eps,     eps ~ N(0, 1)
  UniformLocationScale,   // z = loc(pa) + width * eps,    eps ~ U(0, 1)
  ExponentialInverseCdf,  // z = -log(1 - eps) / rate(pa), eps ~ U(0, 1)
  LogNormalComposition,   // z = exp(mu(pa) + sigma * eps), eps ~ N(0, 1)
};

std::string_view to_string(NodeKind kind);
std::string_view to_string(Family family);
std::string_view to_string(Activation activation);
std::string_view to_string(TransformKind kind);

/// One `W * parent` term of a link. An empty `weight` means the identity.
struct AffineTerm {
  std::string parent;
  std::string weight;
};

/// activation(sum_k W_k pa_k + b). Without terms and bias the output is 0.
struct LinkFn {
  std::vector<AffineTerm> terms;
  std::string bias;
  Activation activation = Activation::Identity;
};

/// A conditional scale: either a fixed value or a parameter block holding
/// log sigma (one entry shared across coordinates, or one per coordinate).
struct ScaleSpec {
  double fixed = 1.0;
  std::string log_param;

  [[nodiscard]] bool is_fixed() const { return log_param.empty(); }
};

struct ConditionalFactor {
  Family family = Family::Gaussian;
  LinkFn link;
  ScaleSpec scale;
  // Deterministic nodes only.
  TransformKind transform = TransformKind::None;
  std::string noise_parent;
};

struct NodeSpec {
  std::string id;
  NodeKind kind = NodeKind::Latent;
  std::size_t dim = 1;
  ConditionalFactor factor;
};

struct ParamBlockSpec {
  std::string name;
  std::size_t rows = 1;
  std::size_t cols = 1;
};

/// Declarative description consumed by `build_model`.
struct ModelSpec {
  std::vector<ParamBlockSpec> parameters;
  std::vector<NodeSpec> nodes;
};

struct ParamBlock {
  std::string name;
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::size_t offset = 0;

  [[nodiscard]] std::size_t size() const { return rows * cols; }
};

/// Named, disjoint slices of the flat parameter vector, in declaration order.
class ParamLayout {
 public:
  void add(const ParamBlockSpec& spec);
  [[nodiscard]] const ParamBlock& block(std::string_view name) const;
  [[nodiscard]] bool contains(std::string_view name) const;
  [[nodiscard]] const std::vector<ParamBlock>& blocks() const { return blocks_; }
  [[nodiscard]] std::size_t size() const { return size_; }

  [[nodiscard]] Eigen::Map<const Eigen::VectorXd> slice(const Eigen::VectorXd& theta,
                                                        std::string_view name) const;

 private:
  std::vector<ParamBlock> blocks_;
  std::size_t size_ = 0;
};

/// Values keyed by node id.
using Assignment = std::map<std::string, Eigen::VectorXd, std::less<>>;

/// Position of one node inside a flat coordinate vector.
struct CoordinateSlot {
  std::size_t node = 0;
  std::size_t offset = 0;
  std::size_t dim = 0;
};

/// A validated Bayesian network: nodes with one conditional factor each,
/// acyclic parent relation, cached topological order, parameter layout.
/// Immutable after `build_model`.
class FactorGraphModel {
 public:
  [[nodiscard]] const std::vector<NodeSpec>& nodes() const { return nodes_; }
  [[nodiscard]] const NodeSpec& node(std::size_t i) const { return nodes_.at(i); }
  [[nodiscard]] const NodeSpec& node(std::string_view id) const { return nodes_.at(index(id)); }
  [[nodiscard]] std::size_t index(std::string_view id) const;
  [[nodiscard]] bool contains(std::string_view id) const;

  [[nodiscard]] const std::vector<std::size_t>& parents(std::size_t i) const { return parents_.at(i); }
  [[nodiscard]] const std::vector<std::size_t>& children(std::size_t i) const { return children_.at(i); }
  [[nodiscard]] const std::vector<std::size_t>& topo_order() const { return topo_; }
  [[nodiscard]] const ParamLayout& layout() const { return layout_; }
  [[nodiscard]] const ModelSpec& spec() const { return spec_; }

  /// Latent and auxiliary nodes in topological order; the sampled
  /// coordinates of the model.
  [[nodiscard]] const std::vector<CoordinateSlot>& free_slots() const { return free_; }
  [[nodiscard]] std::size_t free_dim() const { return free_dim_; }
  [[nodiscard]] const std::vector<CoordinateSlot>& observed_slots() const { return observed_; }
  [[nodiscard]] std::size_t observed_dim() const { return observed_dim_; }

  [[nodiscard]] Eigen::VectorXd pack_free(const Assignment& a) const;
  void unpack_free(const Eigen::VectorXd& flat, Assignment& a) const;
  [[nodiscard]] Eigen::VectorXd pack_observed(const Assignment& a) const;
  void unpack_observed(const Eigen::VectorXd& flat, Assignment& a) const;

 private:
  friend FactorGraphModel build_model(const ModelSpec& spec);

  ModelSpec spec_;
  std::vector<NodeSpec> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> topo_;
  ParamLayout layout_;
  std::vector<CoordinateSlot> free_;
  std::vector<CoordinateSlot> observed_;
  std::size_t free_dim_ = 0;
  std::size_t observed_dim_ = 0;
};

/// Validates `spec` and computes the topological order. Latent Gaussian
/// nodes with a fixed scale of exactly 0 become deterministic.
///
/// Throws CycleError, ShapeError or ObservedNotLeaf.
FactorGraphModel build_model(const ModelSpec& spec);

/// Parent ids of a node as implied by its factor (link terms, then noise).
std::vector<std::string> parent_ids(const NodeSpec& node);

// Plain numeric (non-differentiated) evaluation. These are the reference
// forward computations used by sampling and by the coordinate maps.

Eigen::VectorXd link_output(const LinkFn& link, std::size_t dim, const ParamLayout& layout,
                            const Eigen::VectorXd& theta, const Assignment& values);
/// Per-coordinate scale, floored at 1e-8.
Eigen::VectorXd scale_values(const ScaleSpec& scale, std::size_t dim, const ParamLayout& layout,
                             const Eigen::VectorXd& theta);
/// Value of deterministic node `i` from its parents' values in `values`.
Eigen::VectorXd deterministic_value(const FactorGraphModel& model, std::size_t i,
                                    const Eigen::VectorXd& theta, const Assignment& values);
/// Recomputes every deterministic node in topological order. Idempotent.
void complete_deterministic(const FactorGraphModel& model, const Eigen::VectorXd& theta,
                            Assignment& values);

/// Draws every non-deterministic node from its conditional given its
/// already-sampled parents, in topological order.
Assignment ancestral_sample(const FactorGraphModel& model, const Eigen::VectorXd& theta, Rng& rng);

/// Draws the flat free coordinates of a fully reparameterized model from the
/// auxiliary marginals. Throws PreconditionError if a latent node remains.
Eigen::VectorXd sample_auxiliary(const FactorGraphModel& model, Rng& rng);

/// theta ~ N(0, scale^2 I).
Eigen::VectorXd random_parameters(const FactorGraphModel& model, Rng& rng, double scale = 1.0);

}  // namespace dncp
