#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dncp::ad {

/// Primitive operations of the expression graph. Every value is a real
/// vector; the density ops and `Sum` reduce to a scalar.
enum class Op : std::uint8_t {
  Constant,
  Input,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Affine,
  Tanh,
  Sigmoid,
  Log,
  Exp,
  Square,
  GaussianLogPdf,
  BernoulliLogPmf,
  Sum,
};

using ExprId = std::uint32_t;

/// Scales below this value are clamped inside `gaussian_log_pdf`.
inline constexpr double kScaleFloor = 1e-8;

/// Values for the input leaves of a graph, indexed by input slot.
class InputBinding {
 public:
  InputBinding() = default;
  explicit InputBinding(std::size_t slots) : values_(slots), bound_(slots, false) {}

  void bind(std::size_t slot, std::span<const double> values);
  [[nodiscard]] bool is_bound(std::size_t slot) const {
    return slot < bound_.size() && bound_[slot];
  }
  [[nodiscard]] std::span<const double> get(std::size_t slot) const { return values_.at(slot); }
  [[nodiscard]] std::size_t slots() const { return values_.size(); }

 private:
  std::vector<std::vector<double>> values_;
  std::vector<bool> bound_;
};

struct GradientRecord {
  double value = 0.0;
  /// Adjoint of every input leaf, indexed by input slot; zero when the
  /// input does not reach the root.
  std::vector<std::vector<double>> grads;
};

/// Reverse-mode expression graph.
///
/// Nodes are appended in construction order, which is also a topological
/// order, so the forward sweep runs front to back and the reverse sweep back
/// to front. The structure is immutable once built; only the value and
/// adjoint caches change between evaluations.
class ExprGraph {
 public:
  ExprId constant(std::vector<double> values);
  ExprId constant(double value) { return constant(std::vector<double>{value}); }
  /// Registers an input leaf. Its slot is `input_count() - 1` after the call.
  ExprId input(std::string name, std::size_t dim);

  // Elementwise binary ops broadcast an operand of dimension 1.
  ExprId add(ExprId a, ExprId b);
  ExprId sub(ExprId a, ExprId b);
  ExprId mul(ExprId a, ExprId b);
  ExprId div(ExprId a, ExprId b);
  ExprId neg(ExprId a);

  /// W x with W stored row-major as a `rows x dim(x)` block.
  ExprId affine(ExprId weights, ExprId x, std::size_t rows);
  /// W x + b, with `rows = dim(b)`.
  ExprId affine(ExprId weights, ExprId x, ExprId bias);

  ExprId tanh(ExprId a);
  ExprId sigmoid(ExprId a);
  ExprId log(ExprId a);
  ExprId exp(ExprId a);
  ExprId square(ExprId a);

  /// Sum over coordinates of log N(x_i; mu_i, sigma_i^2). `mu` and `sigma`
  /// may have dimension 1.
  ExprId gaussian_log_pdf(ExprId x, ExprId mu, ExprId sigma);
  /// Sum over coordinates of log Bernoulli(x_i; sigmoid(logit_i)).
  ExprId bernoulli_log_pmf(ExprId x, ExprId logits);
  /// Scalar sum of every element of every child.
  ExprId sum(std::span<const ExprId> children);

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] std::size_t dim(ExprId id) const { return nodes_.at(id).dim; }
  [[nodiscard]] Op op(ExprId id) const { return nodes_.at(id).op; }
  [[nodiscard]] std::size_t input_count() const { return inputs_.size(); }
  [[nodiscard]] ExprId input_expr(std::size_t slot) const { return inputs_.at(slot); }
  [[nodiscard]] const std::string& input_name(std::size_t slot) const { return input_names_.at(slot); }

  /// Forward sweep over every node. Throws UnboundInput for a missing or
  /// wrongly sized input.
  void forward(const InputBinding& inputs);
  /// Reverse sweep from `root` (a scalar node) using the cached forward
  /// values; adjoints of nodes not reaching the root stay zero.
  void backward(ExprId root);

  /// One forward and one reverse sweep. Throws NonFinite when the root value
  /// or any input adjoint is not finite.
  GradientRecord evaluate_with_gradient(ExprId root, const InputBinding& inputs);

  [[nodiscard]] std::span<const double> value(ExprId id) const;
  [[nodiscard]] std::span<const double> adjoint(ExprId id) const;

 private:
  struct Node {
    Op op;
    ExprId a = 0;
    ExprId b = 0;
    ExprId c = 0;
    bool has_c = false;
    std::size_t dim = 0;
    std::size_t offset = 0;
    std::size_t first_child = 0;  // into children_ for Sum
    std::size_t child_count = 0;
  };

  ExprId push(Node node);
  ExprId elementwise(Op op, ExprId a, ExprId b);
  ExprId unary(Op op, ExprId a);
  void check(ExprId id) const;

  std::vector<Node> nodes_;
  std::vector<ExprId> children_;
  std::vector<ExprId> inputs_;
  std::vector<std::string> input_names_;
  std::vector<double> values_;
  std::vector<double> adjoints_;
};

/// Compares reverse-mode adjoints against central differences with the given
/// step on every input coordinate. Returns the worst error
/// |fd - ad| / max(1, |fd|, |ad|).
double finite_difference_check(ExprGraph& graph, ExprId root, const InputBinding& inputs,
                               double step);

}  // namespace dncp::ad
