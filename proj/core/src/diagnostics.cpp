#include "dncp/diagnostics.hpp"

#include <algorithm>
#include <vector>

#include "dncp/errors.hpp"

namespace dncp {

namespace {

/// Mean-centered copy of the series and its lag-0 autocovariance.
struct Centered {
  std::vector<double> x;
  double c0 = 0.0;

  explicit Centered(std::span<const double> series) : x(series.begin(), series.end()) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (double& v : x) {
      v -= mean;
      c0 += v * v;
    }
    if (!(c0 > 0.0)) throw ConstantSeries("series has zero variance");
  }

  [[nodiscard]] double rho(std::size_t lag) const {
    double c = 0.0;
    for (std::size_t t = 0; t + lag < x.size(); ++t) c += x[t] * x[t + lag];
    return c / c0;
  }
};

}  // namespace

Eigen::VectorXd autocorrelation(std::span<const double> series, std::size_t max_lag) {
  if (series.size() <= max_lag) throw DomainError("series must be longer than max_lag");
  const Centered c(series);
  Eigen::VectorXd out(static_cast<Eigen::Index>(max_lag + 1));
  out[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) out[static_cast<Eigen::Index>(k)] = c.rho(k);
  return out;
}

double effective_sample_size(std::span<const double> series) {
  if (series.size() < 100) throw DomainError("ESS needs at least 100 draws");
  const Centered c(series);
  const std::size_t n = series.size();
  // tau = -1 + 2 * sum_m (rho_2m + rho_2m+1) over the initial positive pairs.
  double tau = -1.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (m == 0 ? 1.0 : c.rho(2 * m)) + c.rho(2 * m + 1);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  const double nd = static_cast<double>(n);
  return std::clamp(nd / tau, 1.0, nd);
}

EssReport ess_report(const Eigen::MatrixXd& draws, std::size_t max_lag) {
  const Eigen::Index cols = draws.cols();
  if (cols == 0) throw DomainError("no coordinates to summarize");
  const std::size_t lags = std::min<std::size_t>(max_lag, static_cast<std::size_t>(draws.rows()) - 1);
  EssReport r;
  r.per_coordinate.resize(cols);
  r.autocorr.resize(static_cast<Eigen::Index>(lags + 1), cols);
  std::vector<double> column(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < draws.rows(); ++i) column[static_cast<std::size_t>(i)] = draws(i, j);
    try {
      r.per_coordinate[j] = effective_sample_size(column);
      r.autocorr.col(j) = autocorrelation(column, lags);
    } catch (const ConstantSeries&) {
      // A chain that never moved carries the information of one draw.
      r.per_coordinate[j] = 1.0;
      r.autocorr.col(j).setOnes();
    }
  }
  std::vector<double> sorted(r.per_coordinate.data(), r.per_coordinate.data() + cols);
  std::sort(sorted.begin(), sorted.end());
  r.min = sorted.front();
  r.max = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  r.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return r;
}

}  // namespace dncp
