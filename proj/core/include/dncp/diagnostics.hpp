#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace dncp {

/// Sample autocorrelations at lags 0..max_lag, mean-centered, normalized by
/// the lag-0 autocovariance (biased estimator). Throws ConstantSeries, and
/// DomainError unless size() > max_lag.
Eigen::VectorXd autocorrelation(std::span<const double> series, std::size_t max_lag);

/// N / (1 + 2 sum_k rho_k), truncated with Geyer's initial positive
/// sequence, clamped to [1, N]. Throws ConstantSeries, and DomainError for
/// fewer than 100 draws.
double effective_sample_size(std::span<const double> series);

struct EssReport {
  Eigen::VectorXd per_coordinate;
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  /// (max_lag + 1) x coordinates.
  Eigen::MatrixXd autocorr;
};

/// Per-column ESS of a draws matrix (rows are iterations) and the
/// autocorrelations up to `max_lag`.
EssReport ess_report(const Eigen::MatrixXd& draws, std::size_t max_lag = 100);

}  // namespace dncp
