#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dncp {

/// Seedable pseudo-random generator that can be split into named,
/// statistically independent child streams.
///
/// A child stream depends only on the parent's seed and the name, never on
/// how many numbers the parent has already produced, so splitting is
/// reproducible regardless of call order.
class Rng {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit Rng(std::uint64_t seed = 0);

  [[nodiscard]] Rng split(std::string_view name) const;
  [[nodiscard]] Rng split(std::uint64_t index) const;

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }

  double normal();
  /// Uniform on the open interval (0, 1).
  double uniform();
  bool bernoulli(double p);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dncp
