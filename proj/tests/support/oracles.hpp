#pragma once

// Reference computations used by the tests. Nothing here calls into the
// library, so agreement with it is evidence rather than tautology.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double normal_log_pdf(double x, double mu, double sigma) {
  const double r = (x - mu) / sigma;
  return -0.5 * r * r - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double log_sigmoid(double a) { return a >= 0 ? -std::log1p(std::exp(-a)) : a - std::log1p(std::exp(a)); }

inline double bernoulli_log_pmf(double x, double logit) {
  return x * log_sigmoid(logit) + (1.0 - x) * log_sigmoid(-logit);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

/// Squared correlation of the Gaussian with precision -H: invert by the 2x2
/// cofactor formula and read off the covariance.
inline double rho_sq_by_inversion(double h11, double h12, double h22) {
  const double det = h11 * h22 - h12 * h12;
  const double c11 = -h22 / det;
  const double c22 = -h11 / det;
  const double c12 = h12 / det;
  return (c12 * c12) / (c11 * c22);
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Asymptotic critical value of the two-sample KS statistic.
inline double ks_critical(double alpha, std::size_t n, std::size_t m) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t k = 0; k < idx.size();) {
    std::size_t e = k;
    while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[k]]) ++e;
    const double avg = 0.5 * static_cast<double>(k + e) + 1.0;
    for (std::size_t t = k; t <= e; ++t) r[idx[t]] = avg;
    k = e + 1;
  }
  return r;
}

/// Spearman rank correlation (Pearson correlation of average ranks).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// x_t = phi x_{t-1} + sqrt(1 - phi^2) e_t, started in stationarity.
inline std::vector<double> ar1(double phi, std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<double> x(n);
  x[0] = nd(gen);
  const double s = std::sqrt(1.0 - phi * phi);
  for (std::size_t t = 1; t < n; ++t) x[t] = phi * x[t - 1] + s * nd(gen);
  return x;
}

inline std::vector<double> iid_normal(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<double> x(n);
  for (auto& v : x) v = nd(gen);
  return x;
}

/// Central-difference gradient of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double up = f(p);
    p[i] = x[i] - h;
    const double down = f(p);
    p[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double max_rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i]));
  return worst;
}

/// Two-step LDS posterior over (z1, z2) by completing the square by hand:
/// precision P and linear term h with log p = -1/2 z'Pz + h'z + c.
struct GaussianPosterior {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
};

inline GaussianPosterior lds_posterior(double sx, double sz, double x1, double x2) {
  const double ix = 1.0 / (sx * sx);
  const double iz = 1.0 / (sz * sz);
  Eigen::Matrix2d p;
  p << 1.0 + ix + iz, -iz, -iz, ix + iz;
  const Eigen::Vector2d h(x1 * ix, x2 * ix);
  const double det = p(0, 0) * p(1, 1) - p(0, 1) * p(1, 0);
  Eigen::Matrix2d cov;
  cov << p(1, 1) / det, -p(0, 1) / det, -p(1, 0) / det, p(0, 0) / det;
  return {cov * h, cov};
}

}  // namespace oracle
