#include "dncp/learning.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "dncp/errors.hpp"
#include "dncp/reparam.hpp"

namespace dncp {

void adagrad_update(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdagradState& state) {
  if (grad.size() != theta.size() || state.accumulators.size() != theta.size()) {
    throw ShapeError("Adagrad operands have mismatched sizes");
  }
  state.accumulators.array() += grad.array().square();
  theta.array() += state.learning_rate * grad.array() / (state.accumulators.array().sqrt() + state.epsilon);
}

MonteCarloLikelihood::MonteCarloLikelihood(const FactorGraphModel& model) : ev_(model) {
  for (const auto& n : model.nodes()) {
    if (n.kind == NodeKind::Latent) {
      throw PreconditionError("latent node '" + n.id + "' is not reparameterized");
    }
  }
}

double MonteCarloLikelihood::estimate(const Eigen::VectorXd& x, std::size_t samples, Rng& rng,
                                      Eigen::VectorXd* grad) {
  if (samples == 0) throw DomainError("at least one sample is required");
  Eigen::MatrixXd eps(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(ev_.model().free_dim()));
  for (Eigen::Index l = 0; l < eps.rows(); ++l) eps.row(l) = sample_auxiliary(ev_.model(), rng).transpose();
  return estimate(x, eps, grad);
}

double MonteCarloLikelihood::estimate(const Eigen::VectorXd& x, const Eigen::MatrixXd& eps, Eigen::VectorXd* grad) {
  const auto samples = static_cast<std::size_t>(eps.rows());
  if (samples == 0) throw DomainError("at least one sample is required");
  ev_.set_observed(x);
  values_.resize(samples);
  if (grad) grads_.resize(samples);
  Eigen::VectorXd e;
  for (std::size_t l = 0; l < samples; ++l) {
    e = eps.row(static_cast<Eigen::Index>(l)).transpose();
    values_[l] = ev_.log_likelihood(e, nullptr, grad ? &grads_[l] : nullptr);
  }
  const double m = *std::max_element(values_.begin(), values_.end());
  if (!std::isfinite(m)) throw NonFinite("every sample has zero likelihood");
  double total = 0.0;
  for (double& v : values_) {
    v = std::exp(v - m);
    total += v;
  }
  if (grad) {
    grad->setZero(static_cast<Eigen::Index>(ev_.model().layout().size()));
    for (std::size_t l = 0; l < samples; ++l) {
      if (values_[l] > 0.0) *grad += (values_[l] / total) * grads_[l];
    }
  }
  return m + std::log(total) - std::log(static_cast<double>(samples));
}

double mmcl_estimate(const FactorGraphModel& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                     std::size_t samples, Rng& rng) {
  MonteCarloLikelihood mcl(model);
  mcl.set_parameters(theta);
  return mcl.estimate(x, samples, rng);
}

Eigen::VectorXd mmcl_gradient(const FactorGraphModel& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                              std::size_t samples, Rng& rng) {
  MonteCarloLikelihood mcl(model);
  mcl.set_parameters(theta);
  Eigen::VectorXd g;
  mcl.estimate(x, samples, rng, &g);
  return g;
}

McemState init_mcem_state(const FactorGraphModel& model, const Eigen::VectorXd& theta, std::size_t datapoints,
                          double initial_step, std::uint64_t seed) {
  McemState s;
  s.rng = Rng(seed);
  Rng init = s.rng.split("init");
  s.chains.reserve(datapoints);
  for (std::size_t i = 0; i < datapoints; ++i) s.chains.push_back(model.pack_free(ancestral_sample(model, theta, init)));
  s.step_sizes.assign(datapoints, initial_step);
  return s;
}

void mcem_iteration(ModelEvaluator& ev, Eigen::VectorXd& theta, const Eigen::MatrixXd& data,
                    const std::vector<std::size_t>& batch, const HmcConfig& hmc, std::size_t e_step_samples,
                    AdagradState& opt, McemState& state) {
  if (e_step_samples == 0) throw EmptyESample("the E-step needs at least one sample");
  if (batch.empty()) return;
  ev.set_parameters(theta);
  const LogDensityFn f = [&ev](const Eigen::VectorXd& q, Eigen::VectorXd& g) { return ev.log_joint(q, &g); };

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd g;
  for (std::size_t i : batch) {
    if (i >= state.chains.size()) throw ShapeError("no chain for datapoint " + std::to_string(i));
    ev.set_observed(data.row(static_cast<Eigen::Index>(i)).transpose());
    ChainState chain{state.chains[i], CoordinateSystem::Z, 0.0, {}};
    refresh(chain, f);
    double& step = state.step_sizes[i];
    for (std::size_t k = 0; k < hmc.burn_in; ++k) {
      const bool accepted = hmc_step(chain, step, hmc.leapfrog_steps, f, state.rng);
      step = adapt_step_size(step, accepted, k, hmc);
    }
    for (std::size_t s = 0; s < e_step_samples; ++s) {
      hmc_step(chain, step, hmc.leapfrog_steps, f, state.rng);
      ev.log_joint(chain.coords, nullptr, &g);
      grad += g;
    }
    state.chains[i] = chain.coords;
  }
  grad /= static_cast<double>(batch.size() * e_step_samples);
  adagrad_update(theta, grad, opt);
}

std::string_view to_string(LearningMethod method) { return method == LearningMethod::MMCL ? "mmcl" : "mcem"; }

LearningMethod parse_learning_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "mmcl") return LearningMethod::MMCL;
  if (lower == "mcem") return LearningMethod::MCEM;
  throw DomainError("unknown learning method '" + std::string(name) + "'");
}

double average_log_likelihood(MonteCarloLikelihood& mcl, const Eigen::VectorXd& theta, const Eigen::MatrixXd& data,
                              std::size_t samples, std::uint64_t seed) {
  if (data.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
  mcl.set_parameters(theta);
  Rng rng(seed);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) total += mcl.estimate(data.row(i).transpose(), samples, rng);
  return total / static_cast<double>(data.rows());
}

std::vector<TraceRow> train(const FactorGraphModel& model, Eigen::VectorXd theta, const Eigen::MatrixXd& train_data,
                            const Eigen::MatrixXd& test_data, const TrainSchedule& schedule) {
  if (schedule.batch_size == 0) throw DomainError("batch_size must be positive");
  if (train_data.rows() == 0) throw DomainError("no training data");
  if (schedule.method == LearningMethod::MCEM && schedule.e_step_samples == 0) {
    throw EmptyESample("the E-step needs at least one sample");
  }
  const FactorGraphModel reparameterized = apply_plan(model, full_dncp_plan(model));
  MonteCarloLikelihood mcl(reparameterized);

  const Rng master(schedule.seed);
  Rng shuffle = master.split("shuffle");
  Rng draws = master.split("mmcl");
  const std::uint64_t train_eval_seed = master.split("eval-train").seed();
  const std::uint64_t test_eval_seed = master.split("eval-test").seed();

  const FactorGraphModel& chain_model = schedule.mcem_reparameterized ? reparameterized : model;
  std::optional<ModelEvaluator> chain_ev;
  McemState mcem;
  if (schedule.method == LearningMethod::MCEM) {
    schedule.hmc.validate();
    chain_ev.emplace(chain_model);
    mcem = init_mcem_state(chain_model, theta, static_cast<std::size_t>(train_data.rows()),
                           schedule.hmc.initial_step_size, master.split("mcem").seed());
  }

  std::vector<TraceRow> trace;
  auto record = [&](std::size_t epoch) {
    TraceRow row;
    row.epoch = epoch;
    row.train_log_lik = average_log_likelihood(mcl, theta, train_data, schedule.eval_samples, train_eval_seed);
    row.test_log_lik = average_log_likelihood(mcl, theta, test_data, schedule.eval_samples, test_eval_seed);
    row.theta = theta;
    trace.push_back(std::move(row));
  };
  record(0);

  AdagradState opt(schedule.learning_rate, static_cast<std::size_t>(theta.size()));
  std::vector<std::size_t> order(static_cast<std::size_t>(train_data.rows()));
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd grad;
  Eigen::VectorXd g;
  for (std::size_t epoch = 1; epoch <= schedule.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle);
    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size) {
      const std::size_t end = std::min(order.size(), start + schedule.batch_size);
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
      if (schedule.method == LearningMethod::MMCL) {
        mcl.set_parameters(theta);
        grad.setZero(theta.size());
        for (std::size_t i : batch) {
          mcl.estimate(train_data.row(static_cast<Eigen::Index>(i)).transpose(), schedule.mc_samples, draws, &g);
          grad += g;
        }
        grad /= static_cast<double>(batch.size());
        adagrad_update(theta, grad, opt);
      } else {
        mcem_iteration(*chain_ev, theta, train_data, batch, schedule.hmc, schedule.e_step_samples, opt, mcem);
      }
    }
    if (epoch % std::max<std::size_t>(1, schedule.eval_every) == 0 || epoch == schedule.epochs) record(epoch);
  }
  return trace;
}

}  // namespace dncp
