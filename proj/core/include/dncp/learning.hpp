#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dncp/evaluator.hpp"
#include "dncp/hmc.hpp"
#include "dncp/rng.hpp"

namespace dncp {

struct AdagradState {
  double learning_rate = 0.1;
  Eigen::VectorXd accumulators;
  double epsilon = 1e-8;

  AdagradState() = default;
  AdagradState(double lr, std::size_t dim) : learning_rate(lr), accumulators(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))) {}
};

/// accumulators += g^2; theta += lr * g / (sqrt(accumulators) + epsilon).
/// Ascends. Throws ShapeError on mismatched sizes.
void adagrad_update(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdagradState& state);

/// L-sample Monte Carlo estimate of log p(x) for a fully reparameterized
/// model: log (1/L) sum_l p(x | eps_l), eps_l ~ p(eps), via log-sum-exp.
class MonteCarloLikelihood {
 public:
  /// Throws PreconditionError if `model` still has centered latent nodes.
  explicit MonteCarloLikelihood(const FactorGraphModel& model);

  [[nodiscard]] const FactorGraphModel& model() const { return ev_.model(); }

  void set_parameters(const Eigen::VectorXd& theta) { ev_.set_parameters(theta); }

  /// Estimate at observed `x` with fresh draws from `rng`. When `grad` is
  /// non-null it receives the exact gradient in theta of this estimate with
  /// the draws held fixed.
  double estimate(const Eigen::VectorXd& x, std::size_t samples, Rng& rng, Eigen::VectorXd* grad = nullptr);
  /// Same, with the draws supplied (rows of `eps`, free-coordinate layout).
  double estimate(const Eigen::VectorXd& x, const Eigen::MatrixXd& eps, Eigen::VectorXd* grad = nullptr);

 private:
  ModelEvaluator ev_;
  std::vector<double> values_;
  std::vector<Eigen::VectorXd> grads_;
};

double mmcl_estimate(const FactorGraphModel& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                     std::size_t samples, Rng& rng);
Eigen::VectorXd mmcl_gradient(const FactorGraphModel& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                              std::size_t samples, Rng& rng);

/// Persistent per-datapoint chains for Monte Carlo EM.
struct McemState {
  std::vector<Eigen::VectorXd> chains;
  std::vector<double> step_sizes;
  Rng rng{0};
};

/// Draws one chain start per datapoint from the prior of `model` (in its own
/// free coordinates).
McemState init_mcem_state(const FactorGraphModel& model, const Eigen::VectorXd& theta, std::size_t datapoints,
                          double initial_step, std::uint64_t seed);

/// One EM iteration over the rows `batch` of `data`: each chain runs
/// `hmc.burn_in` adaptive HMC steps and then `e_step_samples` kept steps at
/// fixed theta; theta then takes one Adagrad step along the mean of
/// grad_theta log p(x, z) over all kept samples and datapoints.
/// Throws EmptyESample when e_step_samples is 0.
void mcem_iteration(ModelEvaluator& ev, Eigen::VectorXd& theta, const Eigen::MatrixXd& data,
                    const std::vector<std::size_t>& batch, const HmcConfig& hmc, std::size_t e_step_samples,
                    AdagradState& opt, McemState& state);

enum class LearningMethod : std::uint8_t { MMCL, MCEM };

std::string_view to_string(LearningMethod method);
/// Parses "mmcl" or "mcem". Throws DomainError.
LearningMethod parse_learning_method(std::string_view name);

struct TrainSchedule {
  LearningMethod method = LearningMethod::MMCL;
  std::size_t epochs = 20;
  std::size_t batch_size = 1;
  double learning_rate = 0.05;
  /// Samples per MMCL estimate.
  std::size_t mc_samples = 10;
  /// MCEM sampler; burn_in is the per-E-step adaptation length.
  HmcConfig hmc{10, 0.1, 0.9, 5, 1, 0};
  std::size_t e_step_samples = 5;
  /// MCEM chains run on the reparameterized model when set.
  bool mcem_reparameterized = false;
  /// Samples per datapoint for the reported log-likelihoods.
  std::size_t eval_samples = 500;
  /// Evaluate every this many epochs (the last epoch is always evaluated).
  std::size_t eval_every = 1;
  std::uint64_t seed = 0;
};

struct TraceRow {
  std::size_t epoch = 0;
  double train_log_lik = 0.0;  // mean per datapoint
  double test_log_lik = 0.0;   // mean per datapoint; NaN without test data
  Eigen::VectorXd theta;
};

/// Mean per-datapoint log-likelihood estimate using `samples` prior draws per
/// datapoint from a generator seeded with `seed` (same draws for every call
/// with the same seed).
double average_log_likelihood(MonteCarloLikelihood& mcl, const Eigen::VectorXd& theta, const Eigen::MatrixXd& data,
                              std::size_t samples, std::uint64_t seed);

/// Trains a centered model. Row 0 of the trace holds the initial parameters.
std::vector<TraceRow> train(const FactorGraphModel& model, Eigen::VectorXd theta, const Eigen::MatrixXd& train_data,
                            const Eigen::MatrixXd& test_data, const TrainSchedule& schedule);

}  // namespace dncp
