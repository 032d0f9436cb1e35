#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dncp/evaluator.hpp"
#include "dncp/reparam.hpp"
#include "dncp/rng.hpp"

namespace dncp {

/// Log-density and its gradient at q. Returns -inf outside the support; may
/// throw NonFinite.
using LogDensityFn = std::function<double(const Eigen::VectorXd& q, Eigen::VectorXd& grad)>;

struct HmcConfig {
  std::size_t leapfrog_steps = 10;
  double initial_step_size = 0.1;
  double target_accept_rate = 0.9;
  std::size_t burn_in = 1000;
  std::size_t samples = 4000;
  std::uint64_t seed = 0;

  /// Throws DomainError for out-of-range fields.
  void validate() const;
};

enum class CoordinateSystem : std::uint8_t { Z, Eps };
enum class Parameterization : std::uint8_t { CP, DNCP, MIX };

std::string_view to_string(CoordinateSystem system);
std::string_view to_string(Parameterization p);
/// Parses "cp", "dncp" or "mix" (any case). Throws DomainError.
Parameterization parse_parameterization(std::string_view name);

struct ChainState {
  Eigen::VectorXd coords;
  CoordinateSystem system = CoordinateSystem::Z;
  double log_density = 0.0;
  Eigen::VectorXd grad;
};

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  double log_density = 0.0;
  Eigen::VectorXd grad;
};

/// Half-kick / drift / half-kick with identity mass. `start.grad` must hold
/// the gradient at `start.q`. Throws NonFinite when the trajectory leaves
/// the finite region.
PhasePoint leapfrog(const PhasePoint& start, double step_size, std::size_t steps, const LogDensityFn& f);
/// Convenience form evaluating the initial gradient itself.
PhasePoint leapfrog(const Eigen::VectorXd& q, const Eigen::VectorXd& p, double step_size, std::size_t steps,
                    const LogDensityFn& f);

/// Fills log_density and grad of `state` from `f`.
void refresh(ChainState& state, const LogDensityFn& f);

/// One HMC transition. Momentum ~ N(0, I); accept with prob min(1, exp(-dH)).
/// Divergent trajectories are rejected (and flagged through `diverged`).
/// Returns whether the move was accepted.
bool hmc_step(ChainState& state, double step_size, std::size_t leapfrog_steps, const LogDensityFn& f, Rng& rng,
              bool* diverged = nullptr);

/// x1.02 on accept, x1.02^(-t/(1-t)) on reject while iteration < burn_in;
/// unchanged afterwards. Throws StepUnderflow below 1e-12.
double adapt_step_size(double step_size, bool accepted, std::size_t iteration, const HmcConfig& config);

/// Posterior of a centered model's latents given observed values, in both
/// coordinate systems (z for the centered model, eps for its
/// reparameterization under `plan`).
class PosteriorTarget {
 public:
  PosteriorTarget(const FactorGraphModel& centered, const Eigen::VectorXd& theta, const Eigen::VectorXd& observed);
  PosteriorTarget(const FactorGraphModel& centered, const Eigen::VectorXd& theta, const Eigen::VectorXd& observed,
                  ParameterizationPlan plan);

  [[nodiscard]] std::size_t dim() const { return map_.centered().free_dim(); }
  [[nodiscard]] const CoordinateMap& map() const { return map_; }
  [[nodiscard]] const Eigen::VectorXd& theta() const { return theta_; }

  double log_density(CoordinateSystem system, const Eigen::VectorXd& q, Eigen::VectorXd& grad);
  [[nodiscard]] LogDensityFn density(CoordinateSystem system);

  [[nodiscard]] Eigen::VectorXd convert(const Eigen::VectorXd& q, CoordinateSystem from, CoordinateSystem to) const;
  /// Moves `state` into `system`, recomputing its cached density.
  void switch_system(ChainState& state, CoordinateSystem system);

  /// z-coordinates of an ancestral draw from the prior.
  [[nodiscard]] Eigen::VectorXd prior_draw(Rng& rng) const;

 private:
  CoordinateMap map_;
  Eigen::VectorXd theta_;
  ModelEvaluator z_eval_;
  ModelEvaluator eps_eval_;
};

struct MixtureState {
  ChainState chain;
  double step_cp = 0.1;
  double step_dncp = 0.1;
};

/// Chooses CP with probability mix_rho (drawn from `mix_rng`), moves the
/// state into that system, takes one HMC step with that system's step size
/// and adapts only that step size. Returns whether the move was accepted.
bool mixture_step(MixtureState& state, const HmcConfig& config, PosteriorTarget& target, Rng& rng, Rng& mix_rng,
                  double mix_rho, std::size_t iteration, bool* diverged = nullptr);

struct ChainResult {
  /// samples x dim, z-coordinates.
  Eigen::MatrixXd draws;
  /// Running acceptance rate after each iteration (burn-in included).
  std::vector<double> accept_rate_trace;
  std::vector<double> step_size_trace;
  std::vector<CoordinateSystem> system_trace;
  /// Acceptance rate over the kept samples.
  double accept_rate = 0.0;
  std::size_t divergences = 0;
};

/// Burn-in with adaptation, then `config.samples` kept draws. The chain
/// starts from a prior draw taken from `Rng(config.seed).split("init")`.
ChainResult run_chain(PosteriorTarget& target, Parameterization parameterization, const HmcConfig& config,
                      double mix_rho = 0.5);

}  // namespace dncp
