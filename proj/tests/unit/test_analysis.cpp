#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dncp/analysis.hpp"
#include "dncp/errors.hpp"
#include "dncp/zoo.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dncp;

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

LocalFactorSummary random_summary(Rng& rng) {
  LocalFactorSummary s;
  s.alpha = -std::exp(1.5 * rng.normal());
  s.beta = -std::exp(1.5 * rng.normal());
  s.w = rng.normal() * 2.0;
  s.sigma = std::exp(rng.normal());
  return s;
}

double cp_by_inversion(const LocalFactorSummary& s) {
  const double is2 = 1.0 / (s.sigma * s.sigma);
  return oracle::rho_sq_by_inversion(s.alpha - s.w * s.w * is2, s.w * is2, s.beta - is2);
}

double dncp_by_inversion(const LocalFactorSummary& s) {
  return oracle::rho_sq_by_inversion(s.alpha + s.w * s.w * s.beta, s.sigma * s.w * s.beta,
                                     s.sigma * s.sigma * s.beta - 1.0);
}

}  // namespace

TEST(PairCorrelation, HandExamples) {
  const auto r = squared_correlation_from_hessian(mat2(-2, 1, 1, -2), 0, 1);
  EXPECT_DOUBLE_EQ(r.rho_sq, 0.25);
  EXPECT_FALSE(r.boundary);
  EXPECT_NEAR(r.rho_sq, oracle::rho_sq_by_inversion(-2, 1, -2), 1e-15);
  EXPECT_EQ(squared_correlation_from_hessian(mat2(-3, 0, 0, -0.5), 0, 1).rho_sq, 0.0);
  const auto edge = squared_correlation_from_hessian(mat2(-1, 2, 2, -4), 0, 1);
  EXPECT_DOUBLE_EQ(edge.rho_sq, 1.0);
  EXPECT_TRUE(edge.boundary);
}

TEST(PairCorrelation, PositiveDefiniteBlockIsRejected) {
  EXPECT_THROW((void)squared_correlation_from_hessian(mat2(2, 0, 0, 1), 0, 1), NotNegativeDefinite);
  EXPECT_THROW((void)squared_correlation_from_hessian(mat2(-1, 3, 3, -1), 0, 1), NotNegativeDefinite);
}

TEST(PairCorrelation, PicksTheRequestedBlock) {
  Eigen::MatrixXd h(3, 3);
  h << -4, 1, 0.5, 1, -3, -2, 0.5, -2, -5;
  EXPECT_NEAR(squared_correlation_from_hessian(h, 1, 2).rho_sq, 4.0 / 15.0, 1e-15);
  EXPECT_NEAR(squared_correlation_from_hessian(h, 2, 0).rho_sq, 0.25 / 20.0, 1e-15);
}

TEST(ClosedForms, UnitExample) {
  const LocalFactorSummary s{-1, -1, 1, 1};
  EXPECT_DOUBLE_EQ(cp_squared_correlation(s), 0.25);
  EXPECT_DOUBLE_EQ(dncp_squared_correlation(s), 0.25);
  EXPECT_NEAR(cp_by_inversion(s), 0.25, 1e-15);
  EXPECT_NEAR(dncp_by_inversion(s), 0.25, 1e-15);
  EXPECT_EQ(cp_squared_correlation({-1, -1, 0, 1}), 0.0);
}

TEST(ClosedForms, MatchHessianInversionOracle) {
  Rng rng(2718);
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_summary(rng);
    EXPECT_LE(oracle::rel_err(cp_squared_correlation(s), cp_by_inversion(s)), 1e-10);
    EXPECT_LE(oracle::rel_err(dncp_squared_correlation(s), dncp_by_inversion(s)), 1e-10);
    // Library Hessians agree with the hand assembly.
    const Eigen::Matrix2d hc = cp_local_hessian(s);
    const Eigen::Matrix2d hd = dncp_local_hessian(s);
    EXPECT_NEAR(squared_correlation_from_hessian(hc, 0, 1).rho_sq, cp_by_inversion(s), 1e-10);
    EXPECT_NEAR(squared_correlation_from_hessian(hd, 0, 1).rho_sq, dncp_by_inversion(s), 1e-10);
    EXPECT_GE(cp_squared_correlation(s), -1e-12);
    EXPECT_LE(cp_squared_correlation(s), 1.0 + 1e-12);
    EXPECT_GE(dncp_squared_correlation(s), -1e-12);
    EXPECT_LE(dncp_squared_correlation(s), 1.0 + 1e-12);
  }
}

TEST(ClosedForms, ViolatedSignAssumptionsAreReported) {
  EXPECT_THROW((void)cp_squared_correlation({0.5, -1, 1, 1}), DomainError);
  EXPECT_THROW((void)dncp_squared_correlation({-1, 0.0, 1, 1}), DomainError);
  EXPECT_THROW((void)cp_squared_correlation({-1, -1, 1, 0.0}), DomainError);
}

TEST(Inequality, HandExamples) {
  EXPECT_TRUE(prefer_dncp(0.1, -2.0));
  EXPECT_FALSE(prefer_dncp(1.0, -2.0));
  EXPECT_THROW((void)prefer_dncp(1.0, 0.0), SignError);
  EXPECT_THROW((void)prefer_dncp(1.0, 0.5), SignError);
  EXPECT_THROW((void)prefer_dncp(0.0, -1.0), DomainError);
}

TEST(Inequality, EqualityCaseIsStrictAndTied) {
  const double sigma = 0.5;
  const double beta = -4.0;  // sigma^-2 == -beta exactly
  EXPECT_FALSE(prefer_dncp(sigma, beta));
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    LocalFactorSummary s = random_summary(rng);
    s.sigma = sigma;
    s.beta = beta;
    EXPECT_NEAR(cp_squared_correlation(s), dncp_squared_correlation(s), 1e-12);
  }
}

TEST(Inequality, NoCounterexamples) {
  Rng rng(2718);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_summary(rng);
    const bool cp_worse = cp_squared_correlation(s) > dncp_squared_correlation(s);
    if (cp_worse != prefer_dncp(s.sigma, s.beta)) ++violations;
    if (cp_worse != (1.0 / (s.sigma * s.sigma) > -s.beta)) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(Limits, TabulatedValues) {
  const LocalFactorSummary s{-0.7, -1.3, 0.9, 1.1};
  EXPECT_EQ(limiting_table(s, Limit::SigmaToZero).cp, 1.0);
  EXPECT_EQ(limiting_table(s, Limit::SigmaToZero).dncp, 0.0);
  EXPECT_EQ(limiting_table(s, Limit::BetaToMinusInfinity).cp, 0.0);
  EXPECT_EQ(limiting_table(s, Limit::BetaToMinusInfinity).dncp, 1.0);
  EXPECT_EQ(limiting_table(s, Limit::AlphaToMinusInfinity).cp, 0.0);
  EXPECT_EQ(limiting_table(s, Limit::AlphaToMinusInfinity).dncp, 0.0);
  const double w2 = 0.81;
  const double s2 = 1.21;
  EXPECT_DOUBLE_EQ(limiting_table(s, Limit::SigmaToInfinity).dncp, -1.3 * w2 / (-1.3 * w2 - 0.7));
  EXPECT_DOUBLE_EQ(limiting_table(s, Limit::BetaToZero).cp, w2 / (w2 + 0.7 * s2));
  EXPECT_DOUBLE_EQ(limiting_table(s, Limit::AlphaToZero).cp, 1.0 / (1.0 + 1.3 * s2));
  EXPECT_DOUBLE_EQ(limiting_table(s, Limit::AlphaToZero).dncp, -1.3 * s2 / (-1.3 * s2 - 1.0));
}

TEST(Limits, SequencesConvergeMonotonically) {
  Rng rng(31);
  std::vector<LocalFactorSummary> bases = {{-1, -1, 1, 1}, {-0.7, -1.3, 0.9, 1.1}};
  for (int i = 0; i < 20; ++i) bases.push_back(random_summary(rng));
  for (const auto& base : bases) {
    for (Limit lim : kAllLimits) {
      const auto target = limiting_table(base, lim);
      double prev_cp = INFINITY;
      double prev_dncp = INFINITY;
      for (int k = 1; k <= 6; ++k) {
        const auto s = approach_limit(base, lim, k);
        const double ec = std::abs(cp_squared_correlation(s) - target.cp);
        const double ed = std::abs(dncp_squared_correlation(s) - target.dncp);
        EXPECT_LE(ec, prev_cp + 1e-15) << to_string(lim) << " k=" << k;
        EXPECT_LE(ed, prev_dncp + 1e-15) << to_string(lim) << " k=" << k;
        prev_cp = ec;
        prev_dncp = ed;
      }
      EXPECT_LE(prev_cp, 1e-3) << to_string(lim);
      EXPECT_LE(prev_dncp, 1e-3) << to_string(lim);
    }
  }
}

TEST(Limits, BeautyAndBeast) {
  const LocalFactorSummary base{-0.8, -1.2, 1.4, 0.9};
  for (Limit lim : {Limit::SigmaToZero, Limit::BetaToMinusInfinity}) {
    const auto s = approach_limit(base, lim, 6);
    const double cp = cp_squared_correlation(s);
    const double dn = dncp_squared_correlation(s);
    EXPECT_NEAR(cp + dn, 1.0, 1e-3) << to_string(lim);
    EXPECT_GT(std::max(cp, dn), 0.999);
    EXPECT_LT(std::min(cp, dn), 1e-3);
  }
}

TEST(Hessian, QuadraticIsPointIndependent) {
  const auto m = build_lds_model(0.6, 0.4);
  const Assignment a{{"z1", Eigen::VectorXd::Constant(1, 0.0)}, {"z2", Eigen::VectorXd::Constant(1, 0.0)},
                     {"x1", Eigen::VectorXd::Constant(1, 1.0)}, {"x2", Eigen::VectorXd::Constant(1, -1.0)}};
  Assignment b = a;
  b["z1"][0] = 2.5;
  b["z2"][0] = -3.0;
  const Eigen::MatrixXd ha = hessian_log_posterior(m, Eigen::VectorXd(), a);
  const Eigen::MatrixXd hb = hessian_log_posterior(m, Eigen::VectorXd(), b);
  EXPECT_LE((ha - hb).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(ha, ha.transpose());
}

TEST(Lds, ClosedFormHessiansMatchFiniteDifferences) {
  for (double sx : {0.3, 1.0, 4.0}) {
    for (double sz : {0.05, 0.5, 2.0}) {
      const auto r = lds_correlations(sx, sz);
      const double ix = 1.0 / (sx * sx);
      const double iz = 1.0 / (sz * sz);
      Eigen::Matrix2d cp;
      cp << -1 - ix - iz, iz, iz, -ix - iz;
      // Differentiating log N(e2) + log N(x2; z1 + sz e2, sx^2) twice gives a
      // negative cross term.
      Eigen::Matrix2d dn;
      dn << -1 - 2 * ix, -sz * ix, -sz * ix, -1 - sz * sz * ix;
      EXPECT_LE((r.hessian_cp - cp).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LE((r.hessian_dncp - dn).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LE((r.hessian_cp_fd - cp).cwiseAbs().maxCoeff(), 1e-5) << sx << " " << sz;
      EXPECT_LE((r.hessian_dncp_fd - dn).cwiseAbs().maxCoeff(), 1e-5) << sx << " " << sz;
    }
  }
}

TEST(Lds, SupplementalCorrelationFormulas) {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const double sx = std::exp(rng.normal());
    const double sz = std::exp(rng.normal());
    const double ix = 1.0 / (sx * sx);
    const double iz = 1.0 / (sz * sz);
    const double cp = (iz * iz) / ((1 + ix + iz) * (ix + iz));
    const double dn = (sz * sz * ix * ix) / ((1 + 2 * ix) * (1 + sz * sz * ix));
    const auto r = lds_correlations(sx, sz);
    EXPECT_LE(oracle::rel_err(r.rho_sq_cp, cp), 1e-12);
    EXPECT_LE(oracle::rel_err(r.rho_sq_dncp, dn), 1e-12);
    EXPECT_NEAR(r.rho_sq_cp_fd, cp, 1e-6);
    EXPECT_NEAR(r.rho_sq_dncp_fd, dn, 1e-6);
  }
}

TEST(Lds, TightAndLooseTransitions) {
  const auto unit = lds_correlations(1.0, 1.0);
  EXPECT_NEAR(unit.rho_sq_cp, 1.0 / 6.0, 1e-14);
  EXPECT_NEAR(unit.rho_sq_dncp, 1.0 / 6.0, 1e-14);
  const auto tight = lds_correlations(1.0, 0.02);
  EXPECT_GT(tight.rho_sq_cp, 0.99);
  EXPECT_LT(tight.rho_sq_dncp, 0.01);
  EXPECT_TRUE(tight.prefer_dncp);
  const auto loose = lds_correlations(1.0, 50.0);
  EXPECT_FALSE(loose.prefer_dncp);
  EXPECT_LT(loose.rho_sq_cp, 1e-3);
  EXPECT_THROW((void)lds_correlations(0.0, 1.0), DomainError);
}

TEST(Lds, ThresholdGrid) {
  const std::vector<double> grid = {0.02, 0.1, 0.5, 1, 2, 10, 50};
  for (double sz : grid) {
    for (double sx : grid) {
      const auto r = lds_correlations(sx, sz);
      EXPECT_EQ(r.prefer_dncp, sz < sx) << sx << " " << sz;
      if (sz != sx) {
        EXPECT_EQ(r.rho_sq_cp > r.rho_sq_dncp, sz < sx) << sx << " " << sz;
      }
    }
  }
}

TEST(LocalSummary, LdsCurvaturesByHand) {
  const double sx = 0.8;
  const double sz = 0.3;
  const auto m = build_lds_model(sx, sz);
  const Assignment pt{{"z1", Eigen::VectorXd::Constant(1, 0.2)}, {"z2", Eigen::VectorXd::Constant(1, -0.4)},
                      {"x1", Eigen::VectorXd::Constant(1, 0.0)}, {"x2", Eigen::VectorXd::Constant(1, 0.0)}};
  const auto s = local_factor_summary(m, Eigen::VectorXd(), pt, "z2", "z1");
  EXPECT_NEAR(s.alpha, -1.0 - 1.0 / (sx * sx), 1e-6);
  EXPECT_NEAR(s.beta, -1.0 / (sx * sx), 1e-6);
  EXPECT_NEAR(s.w, 1.0, 1e-8);
  EXPECT_DOUBLE_EQ(s.sigma, sz);
  const auto r = lds_correlations(sx, sz);
  EXPECT_NEAR(cp_squared_correlation(s), r.rho_sq_cp, 1e-6);
  EXPECT_NEAR(dncp_squared_correlation(s), r.rho_sq_dncp, 1e-6);
}

TEST(LocalSummary, TanhLinkSlope) {
  Rng rng(3);
  DbnOptions o;
  o.steps = 2;
  o.latent_dim = 1;
  o.obs_dim = 3;
  auto dbn = build_dbn_model(o, rng);
  Assignment pt = ancestral_sample(dbn.model, dbn.theta, rng);
  const auto s = local_factor_summary(dbn.model, dbn.theta, pt, "z2", "z1");
  const double wz = dbn.model.layout().slice(dbn.theta, "W_z")[0];
  const double bz = dbn.model.layout().slice(dbn.theta, "b_z")[0];
  const double t = std::tanh(wz * pt.at("z1")[0] + bz);
  EXPECT_NEAR(s.w, wz * (1.0 - t * t), 1e-7);
  EXPECT_DOUBLE_EQ(s.sigma, o.sigma_z);
  EXPECT_LT(s.beta, 0.0);
}
