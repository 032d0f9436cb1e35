#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "dncp/evaluator.hpp"
#include "dncp/graph.hpp"

namespace dncp {

/// Central finite differences of the gradient of `root`, symmetrized.
Eigen::MatrixXd hessian_log_posterior(ModelEvaluator& ev, ad::ExprId root, const Eigen::VectorXd& free,
                                      double step = 1e-4);
/// Hessian of the log-joint over the free coordinates of `model` (z for a
/// centered model, eps for a reparameterized one) at `point`.
Eigen::MatrixXd hessian_log_posterior(const FactorGraphModel& model, const Eigen::VectorXd& theta,
                                      const Assignment& point, double step = 1e-4);

struct PairCorrelation {
  double rho_sq = 0.0;
  /// The 2x2 block is singular: perfect correlation.
  bool boundary = false;
};

/// H_ij^2 / (H_ii H_jj). Throws NotNegativeDefinite unless the {i, j}
/// principal block is negative (semi)definite.
PairCorrelation squared_correlation_from_hessian(const Eigen::MatrixXd& h, std::size_t i, std::size_t j);

/// Local quantities around a child z with parent y: alpha is the curvature
/// in y of every factor except z's own, beta the curvature in z of z's
/// children, w the link slope dz/dy and sigma z's conditional scale.
struct LocalFactorSummary {
  double alpha = -1.0;
  double beta = -1.0;
  double w = 1.0;
  double sigma = 1.0;
};

/// Throws DomainError when alpha >= 0, beta >= 0 or sigma <= 0.
double cp_squared_correlation(const LocalFactorSummary& s);
double dncp_squared_correlation(const LocalFactorSummary& s);

/// Hessians over (y, z) and (y, eps) of the local linear-Gaussian model.
Eigen::Matrix2d cp_local_hessian(const LocalFactorSummary& s);
Eigen::Matrix2d dncp_local_hessian(const LocalFactorSummary& s);

/// True iff 1/sigma^2 > -beta. Throws SignError for beta >= 0.
bool prefer_dncp(double sigma, double beta);

enum class Limit { SigmaToZero, SigmaToInfinity, BetaToZero, BetaToMinusInfinity, AlphaToZero, AlphaToMinusInfinity };

inline constexpr std::array<Limit, 6> kAllLimits = {Limit::SigmaToZero,         Limit::SigmaToInfinity,
                                                    Limit::BetaToZero,          Limit::BetaToMinusInfinity,
                                                    Limit::AlphaToZero,         Limit::AlphaToMinusInfinity};

std::string_view to_string(Limit limit);

struct LimitPair {
  double cp = 0.0;
  double dncp = 0.0;
};

/// Closed-form limits of the two squared correlations; the quantity being
/// sent to its limit is ignored. Assumes w != 0.
LimitPair limiting_table(const LocalFactorSummary& s, Limit limit);

/// `s` with the limiting quantity replaced by 10^-k (towards 0) or
/// -/+10^k (towards infinity).
LocalFactorSummary approach_limit(const LocalFactorSummary& s, Limit limit, double k);

/// Curvatures of the centered model at `point` for child `child` and its
/// parent `parent` (scalar coordinates `child_coord` / `parent_coord`).
/// w is the numerical slope of the child's link mean in the parent.
LocalFactorSummary local_factor_summary(const FactorGraphModel& model, const Eigen::VectorXd& theta,
                                        const Assignment& point, std::string_view child, std::string_view parent,
                                        std::size_t child_coord = 0, std::size_t parent_coord = 0);

struct CorrelationReport {
  double rho_sq_cp = 0.0;
  double rho_sq_dncp = 0.0;
  bool prefer_dncp = false;
  Eigen::MatrixXd hessian_cp;    // closed form
  Eigen::MatrixXd hessian_dncp;  // closed form
  Eigen::MatrixXd hessian_cp_fd;
  Eigen::MatrixXd hessian_dncp_fd;
  double rho_sq_cp_fd = 0.0;
  double rho_sq_dncp_fd = 0.0;
};

/// Closed-form Hessians of the two-step linear dynamical system, over
/// (z1, z2) and over (z1, eps2) with z2 = z1 + sigma_z * eps2.
Eigen::Matrix2d lds_cp_hessian(double sigma_x, double sigma_z);
Eigen::Matrix2d lds_dncp_hessian(double sigma_x, double sigma_z);

/// Closed-form and finite-difference correlations of the two-step LDS.
/// Throws DomainError for non-positive scales.
CorrelationReport lds_correlations(double sigma_x, double sigma_z);

}  // namespace dncp
