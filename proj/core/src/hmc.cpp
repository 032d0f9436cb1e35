#include "dncp/hmc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "dncp/errors.hpp"

namespace dncp {

void HmcConfig::validate() const {
  if (leapfrog_steps == 0) throw DomainError("leapfrog_steps must be positive");
  if (!(initial_step_size > 0.0)) throw DomainError("initial_step_size must be positive");
  if (!(target_accept_rate > 0.0 && target_accept_rate < 1.0)) {
    throw DomainError("target_accept_rate must lie in (0, 1)");
  }
  if (samples == 0) throw DomainError("samples must be positive");
}

std::string_view to_string(CoordinateSystem system) { return system == CoordinateSystem::Z ? "z" : "eps"; }

std::string_view to_string(Parameterization p) {
  switch (p) {
    case Parameterization::CP: return "cp";
    case Parameterization::DNCP: return "dncp";
    case Parameterization::MIX: return "mix";
  }
  return "?";
}

Parameterization parse_parameterization(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "cp") return Parameterization::CP;
  if (lower == "dncp") return Parameterization::DNCP;
  if (lower == "mix" || lower == "mixture") return Parameterization::MIX;
  throw DomainError("unknown parameterization '" + std::string(name) + "'");
}

PhasePoint leapfrog(const PhasePoint& start, double step_size, std::size_t steps, const LogDensityFn& f) {
  PhasePoint s = start;
  for (std::size_t i = 0; i < steps; ++i) {
    s.p += 0.5 * step_size * s.grad;
    s.q += step_size * s.p;
    s.log_density = f(s.q, s.grad);
    if (!std::isfinite(s.log_density) || !s.grad.allFinite()) throw NonFinite("divergent leapfrog trajectory");
    s.p += 0.5 * step_size * s.grad;
  }
  return s;
}

PhasePoint leapfrog(const Eigen::VectorXd& q, const Eigen::VectorXd& p, double step_size, std::size_t steps,
                    const LogDensityFn& f) {
  PhasePoint s{q, p, 0.0, Eigen::VectorXd()};
  s.log_density = f(s.q, s.grad);
  if (!std::isfinite(s.log_density)) throw NonFinite("leapfrog started outside the support");
  return leapfrog(s, step_size, steps, f);
}

void refresh(ChainState& state, const LogDensityFn& f) {
  state.log_density = f(state.coords, state.grad);
  if (!std::isfinite(state.log_density)) throw NonFinite("chain state has zero density");
}

bool hmc_step(ChainState& state, double step_size, std::size_t leapfrog_steps, const LogDensityFn& f, Rng& rng,
              bool* diverged) {
  if (diverged) *diverged = false;
  const Eigen::Index n = state.coords.size();
  Eigen::VectorXd p(n);
  for (Eigen::Index i = 0; i < n; ++i) p[i] = rng.normal();
  const double h0 = -state.log_density + 0.5 * p.squaredNorm();

  PhasePoint end;
  try {
    end = leapfrog(PhasePoint{state.coords, p, state.log_density, state.grad}, step_size, leapfrog_steps, f);
  } catch (const NonFinite&) {
    if (diverged) *diverged = true;
    return false;
  }
  const double h1 = -end.log_density + 0.5 * end.p.squaredNorm();
  if (!std::isfinite(h1)) {
    if (diverged) *diverged = true;
    return false;
  }
  if (std::log(rng.uniform()) < h0 - h1) {
    state.coords = std::move(end.q);
    state.log_density = end.log_density;
    state.grad = std::move(end.grad);
    return true;
  }
  return false;
}

double adapt_step_size(double step_size, bool accepted, std::size_t iteration, const HmcConfig& config) {
  if (iteration >= config.burn_in) return step_size;
  const double t = config.target_accept_rate;
  const double next = accepted ? step_size * 1.02 : step_size * std::pow(1.02, -t / (1.0 - t));
  if (next < 1e-12) throw StepUnderflow("step size fell below 1e-12");
  return next;
}

PosteriorTarget::PosteriorTarget(const FactorGraphModel& centered, const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& observed)
    : PosteriorTarget(centered, theta, observed, full_dncp_plan(centered)) {}

PosteriorTarget::PosteriorTarget(const FactorGraphModel& centered, const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& observed, ParameterizationPlan plan)
    : map_(centered, std::move(plan)), theta_(theta), z_eval_(map_.centered()), eps_eval_(map_.reparameterized()) {
  if (map_.reparameterized().free_dim() != map_.centered().free_dim()) {
    throw ShapeError("both coordinate systems must have the same dimension");
  }
  z_eval_.set_parameters(theta_);
  eps_eval_.set_parameters(theta_);
  z_eval_.set_observed(observed);
  eps_eval_.set_observed(observed);
}

double PosteriorTarget::log_density(CoordinateSystem system, const Eigen::VectorXd& q, Eigen::VectorXd& grad) {
  return system == CoordinateSystem::Z ? z_eval_.log_joint(q, &grad) : eps_eval_.log_joint(q, &grad);
}

LogDensityFn PosteriorTarget::density(CoordinateSystem system) {
  return [this, system](const Eigen::VectorXd& q, Eigen::VectorXd& grad) { return log_density(system, q, grad); };
}

Eigen::VectorXd PosteriorTarget::convert(const Eigen::VectorXd& q, CoordinateSystem from, CoordinateSystem to) const {
  if (from == to) return q;
  return to == CoordinateSystem::Eps ? map_.to_eps(q, theta_) : map_.to_z(q, theta_);
}

void PosteriorTarget::switch_system(ChainState& state, CoordinateSystem system) {
  if (state.system == system) return;
  state.coords = convert(state.coords, state.system, system);
  state.system = system;
  refresh(state, density(system));
}

Eigen::VectorXd PosteriorTarget::prior_draw(Rng& rng) const {
  return map_.centered().pack_free(ancestral_sample(map_.centered(), theta_, rng));
}

bool mixture_step(MixtureState& state, const HmcConfig& config, PosteriorTarget& target, Rng& rng, Rng& mix_rng,
                  double mix_rho, std::size_t iteration, bool* diverged) {
  const bool use_cp = mix_rng.bernoulli(mix_rho);
  const CoordinateSystem system = use_cp ? CoordinateSystem::Z : CoordinateSystem::Eps;
  target.switch_system(state.chain, system);
  double& step = use_cp ? state.step_cp : state.step_dncp;
  const bool accepted = hmc_step(state.chain, step, config.leapfrog_steps, target.density(system), rng, diverged);
  step = adapt_step_size(step, accepted, iteration, config);
  return accepted;
}

ChainResult run_chain(PosteriorTarget& target, Parameterization parameterization, const HmcConfig& config,
                      double mix_rho) {
  config.validate();
  if (!(mix_rho >= 0.0 && mix_rho <= 1.0)) throw DomainError("mixture weight must lie in [0, 1]");
  Rng rng(config.seed);
  Rng init = rng.split("init");
  Rng mix = rng.split("mix");

  MixtureState state;
  state.chain.coords = target.prior_draw(init);
  state.chain.system = CoordinateSystem::Z;
  refresh(state.chain, target.density(CoordinateSystem::Z));
  state.step_cp = state.step_dncp = config.initial_step_size;
  if (parameterization == Parameterization::DNCP) target.switch_system(state.chain, CoordinateSystem::Eps);
  const LogDensityFn fixed = target.density(state.chain.system);

  const std::size_t total = config.burn_in + config.samples;
  ChainResult result;
  result.draws.resize(static_cast<Eigen::Index>(config.samples), static_cast<Eigen::Index>(target.dim()));
  result.accept_rate_trace.reserve(total);
  result.step_size_trace.reserve(total);
  result.system_trace.reserve(total);

  std::size_t accepted_total = 0;
  std::size_t accepted_kept = 0;
  for (std::size_t it = 0; it < total; ++it) {
    bool accepted = false;
    bool diverged = false;
    double step_used = 0.0;
    if (parameterization == Parameterization::MIX) {
      const double before_cp = state.step_cp;
      const double before_dncp = state.step_dncp;
      accepted = mixture_step(state, config, target, rng, mix, mix_rho, it, &diverged);
      step_used = state.chain.system == CoordinateSystem::Z ? before_cp : before_dncp;
    } else {
      double& step = state.step_cp;
      step_used = step;
      accepted = hmc_step(state.chain, step, config.leapfrog_steps, fixed, rng, &diverged);
      step = adapt_step_size(step, accepted, it, config);
    }
    accepted_total += accepted ? 1 : 0;
    result.divergences += diverged ? 1 : 0;
    result.accept_rate_trace.push_back(static_cast<double>(accepted_total) / static_cast<double>(it + 1));
    result.step_size_trace.push_back(step_used);
    result.system_trace.push_back(state.chain.system);
    if (it >= config.burn_in) {
      accepted_kept += accepted ? 1 : 0;
      result.draws.row(static_cast<Eigen::Index>(it - config.burn_in)) =
          target.convert(state.chain.coords, state.chain.system, CoordinateSystem::Z).transpose();
    }
  }
  result.accept_rate = static_cast<double>(accepted_kept) / static_cast<double>(config.samples);
  return result;
}

}  // namespace dncp
