#include "dncp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "dncp/errors.hpp"

namespace dncp::ad {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

// log(sigmoid(a)) without overflow for large |a|.
double log_sigmoid(double a) { return -std::log1p(std::exp(-std::abs(a))) - std::max(-a, 0.0); }

double stable_sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

inline std::size_t bcast(std::size_t dim, std::size_t i) { return dim == 1 ? 0 : i; }

}  // namespace

void InputBinding::bind(std::size_t slot, std::span<const double> values) {
  if (slot >= values_.size()) {
    values_.resize(slot + 1);
    bound_.resize(slot + 1, false);
  }
  values_[slot].assign(values.begin(), values.end());
  bound_[slot] = true;
}

ExprId ExprGraph::push(Node node) {
  node.offset = values_.size();
  values_.resize(values_.size() + node.dim, 0.0);
  adjoints_.resize(values_.size(), 0.0);
  nodes_.push_back(node);
  return static_cast<ExprId>(nodes_.size() - 1);
}

void ExprGraph::check(ExprId id) const {
  if (id >= nodes_.size()) throw ShapeError("expression id " + std::to_string(id) + " out of range");
}

ExprId ExprGraph::constant(std::vector<double> values) {
  if (values.empty()) throw ShapeError("constant must have dimension >= 1");
  Node n{.op = Op::Constant, .dim = values.size()};
  const ExprId id = push(n);
  std::copy(values.begin(), values.end(), values_.begin() + static_cast<std::ptrdiff_t>(nodes_[id].offset));
  return id;
}

ExprId ExprGraph::input(std::string name, std::size_t dim) {
  if (dim == 0) throw ShapeError("input '" + name + "' must have dimension >= 1");
  Node n{.op = Op::Input, .a = static_cast<ExprId>(inputs_.size()), .dim = dim};
  const ExprId id = push(n);
  inputs_.push_back(id);
  input_names_.push_back(std::move(name));
  return id;
}

ExprId ExprGraph::elementwise(Op op, ExprId a, ExprId b) {
  check(a);
  check(b);
  const std::size_t da = nodes_[a].dim;
  const std::size_t db = nodes_[b].dim;
  if (da != db && da != 1 && db != 1) {
    throw ShapeError("elementwise operands of dimension " + std::to_string(da) + " and " +
                     std::to_string(db));
  }
  return push(Node{.op = op, .a = a, .b = b, .dim = std::max(da, db)});
}

ExprId ExprGraph::unary(Op op, ExprId a) {
  check(a);
  return push(Node{.op = op, .a = a, .dim = nodes_[a].dim});
}

ExprId ExprGraph::add(ExprId a, ExprId b) { return elementwise(Op::Add, a, b); }
ExprId ExprGraph::sub(ExprId a, ExprId b) { return elementwise(Op::Sub, a, b); }
ExprId ExprGraph::mul(ExprId a, ExprId b) { return elementwise(Op::Mul, a, b); }
ExprId ExprGraph::div(ExprId a, ExprId b) { return elementwise(Op::Div, a, b); }
ExprId ExprGraph::neg(ExprId a) { return unary(Op::Neg, a); }
ExprId ExprGraph::tanh(ExprId a) { return unary(Op::Tanh, a); }
ExprId ExprGraph::sigmoid(ExprId a) { return unary(Op::Sigmoid, a); }
ExprId ExprGraph::log(ExprId a) { return unary(Op::Log, a); }
ExprId ExprGraph::exp(ExprId a) { return unary(Op::Exp, a); }
ExprId ExprGraph::square(ExprId a) { return unary(Op::Square, a); }

ExprId ExprGraph::affine(ExprId weights, ExprId x, std::size_t rows) {
  check(weights);
  check(x);
  if (rows == 0 || nodes_[weights].dim != rows * nodes_[x].dim) {
    throw ShapeError("affine weights of size " + std::to_string(nodes_[weights].dim) +
                     " do not match " + std::to_string(rows) + "x" + std::to_string(nodes_[x].dim));
  }
  return push(Node{.op = Op::Affine, .a = weights, .b = x, .dim = rows});
}

ExprId ExprGraph::affine(ExprId weights, ExprId x, ExprId bias) {
  check(bias);
  const ExprId id = affine(weights, x, nodes_[bias].dim);
  nodes_[id].c = bias;
  nodes_[id].has_c = true;
  return id;
}

ExprId ExprGraph::gaussian_log_pdf(ExprId x, ExprId mu, ExprId sigma) {
  check(x);
  check(mu);
  check(sigma);
  const std::size_t n = nodes_[x].dim;
  for (ExprId other : {mu, sigma}) {
    const std::size_t d = nodes_[other].dim;
    if (d != n && d != 1) {
      throw ShapeError("gaussian_log_pdf: parameter of dimension " + std::to_string(d) +
                       " for a value of dimension " + std::to_string(n));
    }
  }
  return push(Node{.op = Op::GaussianLogPdf, .a = x, .b = mu, .c = sigma, .has_c = true, .dim = 1});
}

ExprId ExprGraph::bernoulli_log_pmf(ExprId x, ExprId logits) {
  check(x);
  check(logits);
  if (nodes_[x].dim != nodes_[logits].dim) {
    throw ShapeError("bernoulli_log_pmf: value and logits dimensions differ");
  }
  return push(Node{.op = Op::BernoulliLogPmf, .a = x, .b = logits, .dim = 1});
}

ExprId ExprGraph::sum(std::span<const ExprId> children) {
  for (ExprId c : children) check(c);
  Node n{.op = Op::Sum, .dim = 1, .first_child = children_.size(), .child_count = children.size()};
  children_.insert(children_.end(), children.begin(), children.end());
  return push(n);
}

std::span<const double> ExprGraph::value(ExprId id) const {
  check(id);
  const Node& n = nodes_[id];
  return {values_.data() + n.offset, n.dim};
}

std::span<const double> ExprGraph::adjoint(ExprId id) const {
  check(id);
  const Node& n = nodes_[id];
  return {adjoints_.data() + n.offset, n.dim};
}

void ExprGraph::forward(const InputBinding& inputs) {
  double* v = values_.data();
  for (const Node& n : nodes_) {
    double* out = v + n.offset;
    switch (n.op) {
      case Op::Constant:
        break;
      case Op::Input: {
        if (!inputs.is_bound(n.a)) throw UnboundInput("input '" + input_names_[n.a] + "' is not bound");
        const auto src = inputs.get(n.a);
        if (src.size() != n.dim) {
          throw UnboundInput("input '" + input_names_[n.a] + "' bound with " +
                             std::to_string(src.size()) + " values, expected " + std::to_string(n.dim));
        }
        std::copy(src.begin(), src.end(), out);
        break;
      }
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: {
        const Node& A = nodes_[n.a];
        const Node& B = nodes_[n.b];
        const double* a = v + A.offset;
        const double* b = v + B.offset;
        for (std::size_t i = 0; i < n.dim; ++i) {
          const double x = a[bcast(A.dim, i)];
          const double y = b[bcast(B.dim, i)];
          switch (n.op) {
            case Op::Add: out[i] = x + y; break;
            case Op::Sub: out[i] = x - y; break;
            case Op::Mul: out[i] = x * y; break;
            default: out[i] = x / y; break;
          }
        }
        break;
      }
      case Op::Affine: {
        const double* w = v + nodes_[n.a].offset;
        const Node& X = nodes_[n.b];
        const double* x = v + X.offset;
        for (std::size_t r = 0; r < n.dim; ++r) {
          double acc = n.has_c ? v[nodes_[n.c].offset + r] : 0.0;
          const double* row = w + r * X.dim;
          for (std::size_t c = 0; c < X.dim; ++c) acc += row[c] * x[c];
          out[r] = acc;
        }
        break;
      }
      case Op::Neg:
      case Op::Tanh:
      case Op::Sigmoid:
      case Op::Log:
      case Op::Exp:
      case Op::Square: {
        const double* a = v + nodes_[n.a].offset;
        for (std::size_t i = 0; i < n.dim; ++i) {
          switch (n.op) {
            case Op::Neg: out[i] = -a[i]; break;
            case Op::Tanh: out[i] = std::tanh(a[i]); break;
            case Op::Sigmoid: out[i] = stable_sigmoid(a[i]); break;
            case Op::Log: out[i] = std::log(a[i]); break;
            case Op::Exp: out[i] = std::exp(a[i]); break;
            default: out[i] = a[i] * a[i]; break;
          }
        }
        break;
      }
      case Op::GaussianLogPdf: {
        const Node& X = nodes_[n.a];
        const Node& M = nodes_[n.b];
        const Node& S = nodes_[n.c];
        double acc = 0.0;
        for (std::size_t i = 0; i < X.dim; ++i) {
          const double s = std::max(v[S.offset + bcast(S.dim, i)], kScaleFloor);
          const double d = v[X.offset + i] - v[M.offset + bcast(M.dim, i)];
          acc += -kHalfLog2Pi - std::log(s) - 0.5 * d * d / (s * s);
        }
        out[0] = acc;
        break;
      }
      case Op::BernoulliLogPmf: {
        const double* x = v + nodes_[n.a].offset;
        const double* a = v + nodes_[n.b].offset;
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes_[n.a].dim; ++i) {
          acc += x[i] * log_sigmoid(a[i]) + (1.0 - x[i]) * log_sigmoid(-a[i]);
        }
        out[0] = acc;
        break;
      }
      case Op::Sum: {
        double acc = 0.0;
        for (std::size_t k = 0; k < n.child_count; ++k) {
          const Node& C = nodes_[children_[n.first_child + k]];
          for (std::size_t i = 0; i < C.dim; ++i) acc += v[C.offset + i];
        }
        out[0] = acc;
        break;
      }
    }
  }
}

void ExprGraph::backward(ExprId root) {
  check(root);
  if (nodes_[root].dim != 1) throw ShapeError("gradient root must be scalar");
  const Node& R = nodes_[root];
  std::fill(adjoints_.begin(), adjoints_.begin() + static_cast<std::ptrdiff_t>(R.offset + 1), 0.0);
  const double* v = values_.data();
  double* g = adjoints_.data();
  g[R.offset] = 1.0;

  for (std::size_t idx = root + 1; idx-- > 0;) {
    const Node& n = nodes_[idx];
    const double* gout = g + n.offset;
    switch (n.op) {
      case Op::Constant:
      case Op::Input:
        break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div: {
        const Node& A = nodes_[n.a];
        const Node& B = nodes_[n.b];
        for (std::size_t i = 0; i < n.dim; ++i) {
          const std::size_t ia = A.offset + bcast(A.dim, i);
          const std::size_t ib = B.offset + bcast(B.dim, i);
          const double go = gout[i];
          switch (n.op) {
            case Op::Add:
              g[ia] += go;
              g[ib] += go;
              break;
            case Op::Sub:
              g[ia] += go;
              g[ib] -= go;
              break;
            case Op::Mul:
              g[ia] += go * v[ib];
              g[ib] += go * v[ia];
              break;
            default:
              g[ia] += go / v[ib];
              g[ib] -= go * v[ia] / (v[ib] * v[ib]);
              break;
          }
        }
        break;
      }
      case Op::Affine: {
        const Node& W = nodes_[n.a];
        const Node& X = nodes_[n.b];
        for (std::size_t r = 0; r < n.dim; ++r) {
          const double go = gout[r];
          if (go == 0.0) continue;
          for (std::size_t c = 0; c < X.dim; ++c) {
            g[W.offset + r * X.dim + c] += go * v[X.offset + c];
            g[X.offset + c] += go * v[W.offset + r * X.dim + c];
          }
          if (n.has_c) g[nodes_[n.c].offset + r] += go;
        }
        break;
      }
      case Op::Neg:
      case Op::Tanh:
      case Op::Sigmoid:
      case Op::Log:
      case Op::Exp:
      case Op::Square: {
        const std::size_t ao = nodes_[n.a].offset;
        const double* y = v + n.offset;
        for (std::size_t i = 0; i < n.dim; ++i) {
          const double go = gout[i];
          double d = 0.0;
          switch (n.op) {
            case Op::Neg: d = -1.0; break;
            case Op::Tanh: d = 1.0 - y[i] * y[i]; break;
            case Op::Sigmoid: d = y[i] * (1.0 - y[i]); break;
            case Op::Log: d = 1.0 / v[ao + i]; break;
            case Op::Exp: d = y[i]; break;
            default: d = 2.0 * v[ao + i]; break;
          }
          g[ao + i] += go * d;
        }
        break;
      }
      case Op::GaussianLogPdf: {
        const Node& X = nodes_[n.a];
        const Node& M = nodes_[n.b];
        const Node& S = nodes_[n.c];
        const double go = gout[0];
        for (std::size_t i = 0; i < X.dim; ++i) {
          const std::size_t is = S.offset + bcast(S.dim, i);
          const std::size_t im = M.offset + bcast(M.dim, i);
          const bool clamped = v[is] < kScaleFloor;
          const double s = clamped ? kScaleFloor : v[is];
          const double d = v[X.offset + i] - v[im];
          const double inv_var = 1.0 / (s * s);
          g[X.offset + i] -= go * d * inv_var;
          g[im] += go * d * inv_var;
          if (!clamped) g[is] += go * (d * d * inv_var / s - 1.0 / s);
        }
        break;
      }
      case Op::BernoulliLogPmf: {
        const Node& X = nodes_[n.a];
        const Node& A = nodes_[n.b];
        const double go = gout[0];
        for (std::size_t i = 0; i < X.dim; ++i) {
          const double a = v[A.offset + i];
          g[A.offset + i] += go * (v[X.offset + i] - stable_sigmoid(a));
          g[X.offset + i] += go * a;
        }
        break;
      }
      case Op::Sum: {
        const double go = gout[0];
        for (std::size_t k = 0; k < n.child_count; ++k) {
          const Node& C = nodes_[children_[n.first_child + k]];
          for (std::size_t i = 0; i < C.dim; ++i) g[C.offset + i] += go;
        }
        break;
      }
    }
  }
}

GradientRecord ExprGraph::evaluate_with_gradient(ExprId root, const InputBinding& inputs) {
  check(root);
  forward(inputs);
  GradientRecord rec;
  rec.value = value(root)[0];
  if (!std::isfinite(rec.value)) throw NonFinite("root value is " + std::to_string(rec.value));
  backward(root);
  rec.grads.resize(inputs_.size());
  for (std::size_t slot = 0; slot < inputs_.size(); ++slot) {
    const ExprId id = inputs_[slot];
    auto adj = id <= root ? adjoint(id) : std::span<const double>{};
    if (id <= root) {
      rec.grads[slot].assign(adj.begin(), adj.end());
    } else {
      rec.grads[slot].assign(nodes_[id].dim, 0.0);
    }
    for (double d : rec.grads[slot]) {
      if (!std::isfinite(d)) throw NonFinite("adjoint of input '" + input_names_[slot] + "'");
    }
  }
  return rec;
}

double finite_difference_check(ExprGraph& graph, ExprId root, const InputBinding& inputs,
                               double step) {
  const GradientRecord rec = graph.evaluate_with_gradient(root, inputs);
  InputBinding probe = inputs;
  double worst = 0.0;
  for (std::size_t slot = 0; slot < graph.input_count(); ++slot) {
    std::vector<double> base(inputs.get(slot).begin(), inputs.get(slot).end());
    for (std::size_t i = 0; i < base.size(); ++i) {
      std::vector<double> x = base;
      x[i] = base[i] + step;
      probe.bind(slot, x);
      graph.forward(probe);
      const double up = graph.value(root)[0];
      x[i] = base[i] - step;
      probe.bind(slot, x);
      graph.forward(probe);
      const double down = graph.value(root)[0];
      const double fd = (up - down) / (2.0 * step);
      const double ad = rec.grads[slot][i];
      const double err = std::abs(fd - ad) / std::max({1.0, std::abs(fd), std::abs(ad)});
      worst = std::max(worst, err);
    }
    probe.bind(slot, base);
  }
  return worst;
}

}  // namespace dncp::ad
