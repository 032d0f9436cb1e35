#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dncp/autodiff.hpp"
#include "dncp/errors.hpp"
#include "oracles.hpp"

using dncp::ad::ExprGraph;
using dncp::ad::ExprId;
using dncp::ad::InputBinding;

namespace {

InputBinding bind_all(const ExprGraph& g, const std::vector<std::vector<double>>& values) {
  InputBinding b(g.input_count());
  for (std::size_t i = 0; i < values.size(); ++i) b.bind(i, values[i]);
  return b;
}

}  // namespace

TEST(Autodiff, TanhAtZero) {
  ExprGraph g;
  const ExprId x = g.input("x", 1);
  const ExprId y = g.tanh(x);
  const ExprId root = g.sum(std::vector<ExprId>{y});
  const auto rec = g.evaluate_with_gradient(root, bind_all(g, {{0.0}}));
  EXPECT_DOUBLE_EQ(rec.value, 0.0);
  EXPECT_DOUBLE_EQ(rec.grads[0][0], 1.0);
}

TEST(Autodiff, SigmoidAtZero) {
  ExprGraph g;
  const ExprId x = g.input("x", 1);
  const ExprId root = g.sum(std::vector<ExprId>{g.sigmoid(x)});
  const auto rec = g.evaluate_with_gradient(root, bind_all(g, {{0.0}}));
  EXPECT_DOUBLE_EQ(rec.value, 0.5);
  EXPECT_DOUBLE_EQ(rec.grads[0][0], 0.25);
}

TEST(Autodiff, GaussianLogPdfAtOne) {
  ExprGraph g;
  const ExprId x = g.input("x", 1);
  const ExprId mu = g.input("mu", 1);
  const ExprId sigma = g.input("sigma", 1);
  const ExprId root = g.gaussian_log_pdf(x, mu, sigma);
  const auto rec = g.evaluate_with_gradient(root, bind_all(g, {{1.0}, {0.0}, {1.0}}));
  EXPECT_NEAR(rec.value, -1.418939, 1e-6);
  EXPECT_NEAR(rec.value, oracle::normal_log_pdf(1.0, 0.0, 1.0), 1e-14);
  EXPECT_DOUBLE_EQ(rec.grads[1][0], 1.0);
}

TEST(Autodiff, GaussianAdjointsMatchClosedForm) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> s(0.2, 3.0);
  ExprGraph g;
  const ExprId x = g.input("x", 1);
  const ExprId mu = g.input("mu", 1);
  const ExprId sigma = g.input("sigma", 1);
  const ExprId root = g.gaussian_log_pdf(x, mu, sigma);
  for (int t = 0; t < 200; ++t) {
    const double xv = u(gen);
    const double mv = u(gen);
    const double sv = s(gen);
    const auto b = bind_all(g, {{xv}, {mv}, {sv}});
    const auto rec = g.evaluate_with_gradient(root, b);
    const double r = xv - mv;
    EXPECT_NEAR(rec.grads[0][0], -r / (sv * sv), 1e-12);
    EXPECT_NEAR(rec.grads[1][0], r / (sv * sv), 1e-12);
    EXPECT_NEAR(rec.grads[2][0], r * r / (sv * sv * sv) - 1.0 / sv, 1e-12);
    EXPECT_LT(dncp::ad::finite_difference_check(g, root, b, 1e-5), 1e-6);
  }
}

TEST(Autodiff, SmoothExpressionPassesFiniteDifferences) {
  ExprGraph g;
  const ExprId w = g.input("W", 6);
  const ExprId x = g.input("x", 3);
  const ExprId b = g.input("b", 2);
  const ExprId h = g.tanh(g.affine(w, x, b));
  const ExprId y = g.sigmoid(g.mul(h, g.exp(g.neg(g.square(h)))));
  const ExprId z = g.div(g.log(g.add(g.constant(2.0), y)), g.sub(g.constant(3.0), h));
  const ExprId lik = g.bernoulli_log_pmf(g.constant(std::vector<double>{1.0, 0.0}), z);
  const ExprId root = g.sum(std::vector<ExprId>{lik, y});
  const auto binding = bind_all(g, {{0.3, -0.2, 0.5, 0.1, 0.9, -0.7}, {0.4, -1.1, 0.6}, {0.05, -0.3}});
  EXPECT_LT(dncp::ad::finite_difference_check(g, root, binding, 1e-5), 1e-6);
}

TEST(Autodiff, LinearExpressionIsExactUnderCentralDifferences) {
  ExprGraph g;
  const ExprId w = g.input("W", 4);
  const ExprId x = g.input("x", 2);
  const ExprId y = g.add(g.affine(w, g.constant(std::vector<double>{1.5, -2.0}), std::size_t{2}), g.mul(g.constant(3.0), x));
  const ExprId root = g.sum(std::vector<ExprId>{y});
  const auto binding = bind_all(g, {{0.1, 0.2, 0.3, 0.4}, {-1.0, 2.0}});
  EXPECT_LT(dncp::ad::finite_difference_check(g, root, binding, 1e-5), 1e-10);
}

TEST(Autodiff, UnboundInputIsReported) {
  ExprGraph g;
  const ExprId x = g.input("x", 1);
  g.input("y", 1);
  const ExprId root = g.sum(std::vector<ExprId>{x});
  InputBinding b(g.input_count());
  b.bind(0, std::vector<double>{1.0});
  EXPECT_THROW(g.evaluate_with_gradient(root, b), dncp::UnboundInput);
  EXPECT_THROW(dncp::ad::finite_difference_check(g, root, b, 1e-5), dncp::UnboundInput);
}

TEST(Autodiff, WronglySizedInputIsReported) {
  ExprGraph g;
  const ExprId x = g.input("x", 2);
  const ExprId root = g.sum(std::vector<ExprId>{x});
  InputBinding b(1);
  b.bind(0, std::vector<double>{1.0});
  EXPECT_THROW(g.evaluate_with_gradient(root, b), dncp::UnboundInput);
}

TEST(Autodiff, GradientOfSumIsSumOfGradients) {
  ExprGraph g;
  const ExprId x = g.input("x", 3);
  const ExprId f1 = g.sum(std::vector<ExprId>{g.tanh(x)});
  const ExprId f2 = g.sum(std::vector<ExprId>{g.square(x)});
  const ExprId both = g.sum(std::vector<ExprId>{f1, f2});
  const auto b = bind_all(g, {{0.3, -1.2, 2.0}});
  const auto r1 = g.evaluate_with_gradient(f1, b);
  const auto r2 = g.evaluate_with_gradient(f2, b);
  const auto r = g.evaluate_with_gradient(both, b);
  EXPECT_NEAR(r.value, r1.value + r2.value, 1e-12);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.grads[0][i], r1.grads[0][i] + r2.grads[0][i], 1e-12);
}

TEST(Autodiff, AccumulationOrderDoesNotMatter) {
  ExprGraph g;
  const ExprId x = g.input("x", 2);
  const ExprId a = g.tanh(x);
  const ExprId b = g.exp(x);
  const ExprId c = g.square(x);
  const ExprId r1 = g.sum(std::vector<ExprId>{a, b, c});
  const ExprId r2 = g.sum(std::vector<ExprId>{c, a, b});
  const auto bind = bind_all(g, {{0.7, -0.4}});
  const auto g1 = g.evaluate_with_gradient(r1, bind);
  const auto g2 = g.evaluate_with_gradient(r2, bind);
  EXPECT_LE(oracle::rel_err(g1.value, g2.value), 1e-12);
  for (int i = 0; i < 2; ++i) EXPECT_LE(oracle::rel_err(g1.grads[0][i], g2.grads[0][i]), 1e-12);
}

TEST(Autodiff, UnreachableInputsGetZeroAdjoint) {
  ExprGraph g;
  const ExprId x = g.input("x", 1);
  const ExprId y = g.input("y", 2);
  const ExprId root = g.sum(std::vector<ExprId>{g.square(x)});
  const ExprId late = g.input("late", 1);
  (void)late;
  const auto rec = g.evaluate_with_gradient(root, bind_all(g, {{2.0}, {1.0, 1.0}, {5.0}}));
  EXPECT_DOUBLE_EQ(rec.grads[0][0], 4.0);
  EXPECT_DOUBLE_EQ(rec.grads[1][0], 0.0);
  EXPECT_DOUBLE_EQ(rec.grads[1][1], 0.0);
  EXPECT_DOUBLE_EQ(rec.grads[2][0], 0.0);
  (void)y;
}

TEST(Autodiff, BernoulliStableAtExtremeLogits) {
  ExprGraph g;
  const ExprId x = g.input("x", 4);
  const ExprId a = g.input("a", 4);
  const ExprId root = g.bernoulli_log_pmf(x, a);
  const std::vector<double> xs = {0.0, 1.0, 1.0, 0.0};
  const std::vector<double> as = {800.0, -800.0, 800.0, -800.0};
  const auto rec = g.evaluate_with_gradient(root, bind_all(g, {xs, as}));
  double expected = 0.0;
  for (int i = 0; i < 4; ++i) expected += oracle::bernoulli_log_pmf(xs[i], as[i]);
  EXPECT_NEAR(rec.value, expected, 1e-9);
  EXPECT_NEAR(rec.value, -1600.0, 1e-9);
  EXPECT_NEAR(rec.grads[1][0], -1.0, 1e-12);
  EXPECT_NEAR(rec.grads[1][1], 1.0, 1e-12);
}

TEST(Autodiff, BernoulliWithZeroLogitIsLogHalf) {
  ExprGraph g;
  const ExprId x = g.input("x", 1);
  const ExprId root = g.bernoulli_log_pmf(x, g.constant(0.0));
  const auto rec = g.evaluate_with_gradient(root, bind_all(g, {{1.0}}));
  EXPECT_NEAR(rec.value, std::log(0.5), 1e-15);
}

TEST(Autodiff, NonFiniteRootIsReported) {
  ExprGraph g;
  const ExprId x = g.input("x", 1);
  const ExprId root = g.sum(std::vector<ExprId>{g.log(x)});
  EXPECT_THROW(g.evaluate_with_gradient(root, bind_all(g, {{-1.0}})), dncp::NonFinite);
}

TEST(Autodiff, ScaleIsFlooredInGaussian) {
  ExprGraph g;
  const ExprId x = g.input("x", 1);
  const ExprId root = g.gaussian_log_pdf(x, g.constant(0.0), g.constant(0.0));
  const auto rec = g.evaluate_with_gradient(root, bind_all(g, {{0.0}}));
  EXPECT_NEAR(rec.value, oracle::normal_log_pdf(0.0, 0.0, dncp::ad::kScaleFloor), 1e-9);
}

TEST(Autodiff, BroadcastOfScalarOperands) {
  ExprGraph g;
  const ExprId x = g.input("x", 3);
  const ExprId s = g.input("s", 1);
  const ExprId root = g.sum(std::vector<ExprId>{g.mul(s, x)});
  const auto b = bind_all(g, {{1.0, 2.0, 3.0}, {2.0}});
  const auto rec = g.evaluate_with_gradient(root, b);
  EXPECT_DOUBLE_EQ(rec.value, 12.0);
  EXPECT_DOUBLE_EQ(rec.grads[1][0], 6.0);
  EXPECT_LT(dncp::ad::finite_difference_check(g, root, b, 1e-5), 1e-10);
}
