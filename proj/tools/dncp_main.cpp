// dncp: correlation analysis, sampling, learning and the experiment suite.
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure at run time.

#include <cmath>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dncp/analysis.hpp"
#include "dncp/errors.hpp"
#include "experiments/config.hpp"
#include "experiments/runner.hpp"

namespace {

using dncp::exp::ConfigError;
using dncp::exp::ExperimentConfig;
using nlohmann::json;

constexpr int kConfigExit = 2;
constexpr int kNumericExit = 3;

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file (a manifest.json also works)");
  f.seed_opt = cmd->add_option("--seed", f.seed, "Master seed; overrides the config");
  cmd->add_option("--out", f.out, "Output directory; overrides the config");
}

ExperimentConfig resolve(const CommonFlags& f, const std::string& experiment) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : dncp::exp::load_config(f.config);
  c.experiment = experiment;
  if (f.seed_opt->count() > 0) c.seed = f.seed;
  c.sampler.seed = c.seed;
  if (!f.out.empty()) c.out = f.out;
  return c;
}

void report(const std::vector<std::filesystem::path>& written) {
  for (const auto& p : written) std::cout << p.string() << "\n";
}

struct AnalyzeArgs {
  std::optional<double> alpha, beta, w, sigma, sigma_x, sigma_z;
};

json analyze(const AnalyzeArgs& a) {
  const bool local = a.alpha || a.beta || a.w || a.sigma;
  const bool lds = a.sigma_x || a.sigma_z;
  if (local == lds) throw ConfigError("give either --alpha/--beta/--w/--sigma or --sigma-x/--sigma-z");
  if (lds) {
    if (!a.sigma_x || !a.sigma_z) throw ConfigError("--sigma-x and --sigma-z go together");
    if (!(*a.sigma_x > 0.0) || !(*a.sigma_z > 0.0)) throw ConfigError("scales must be positive");
    const auto r = dncp::lds_correlations(*a.sigma_x, *a.sigma_z);
    return {{"model", "lds"},
            {"sigma_x", *a.sigma_x},
            {"sigma_z", *a.sigma_z},
            {"rho2_cp", r.rho_sq_cp},
            {"rho2_dncp", r.rho_sq_dncp},
            {"rho2_cp_fd", r.rho_sq_cp_fd},
            {"rho2_dncp_fd", r.rho_sq_dncp_fd},
            {"prefer_dncp", r.prefer_dncp}};
  }
  if (!a.alpha || !a.beta || !a.w || !a.sigma) throw ConfigError("--alpha, --beta, --w and --sigma go together");
  dncp::LocalFactorSummary s{*a.alpha, *a.beta, *a.w, *a.sigma};
  if (!(s.alpha < 0.0) || !(s.beta < 0.0)) throw ConfigError("alpha and beta must be negative");
  if (!(s.sigma > 0.0)) throw ConfigError("sigma must be positive");
  return {{"alpha", s.alpha},
          {"beta", s.beta},
          {"w", s.w},
          {"sigma", s.sigma},
          {"rho2_cp", dncp::cp_squared_correlation(s)},
          {"rho2_dncp", dncp::dncp_squared_correlation(s)},
          {"prefer_dncp", dncp::prefer_dncp(s.sigma, s.beta)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Centered vs non-centered parameterizations of Bayesian networks"};
  app.require_subcommand(1);

  AnalyzeArgs aa;
  auto* an = app.add_subcommand("analyze", "Squared posterior correlations under CP and DNCP");
  an->add_option("--alpha", aa.alpha, "Parent-side curvature (< 0)");
  an->add_option("--beta", aa.beta, "Child-side curvature (< 0)");
  an->add_option("--w", aa.w, "Link slope");
  an->add_option("--sigma", aa.sigma, "Conditional scale (> 0)");
  an->add_option("--sigma-x", aa.sigma_x, "Two-step LDS observation scale");
  an->add_option("--sigma-z", aa.sigma_z, "Two-step LDS transition scale");

  CommonFlags sample_flags;
  auto* sa = app.add_subcommand("sample", "Run one HMC chain (config sections: sample, sampler, lds/dbn)");
  add_common(sa, sample_flags);

  CommonFlags learn_flags;
  auto* le = app.add_subcommand("learn", "Train with MMCL and/or MCEM (config section: learning)");
  add_common(le, learn_flags);

  CommonFlags exp_flags;
  std::string exp_name;
  auto* ex = app.add_subcommand("experiment", "Run a named experiment");
  ex->add_option("name", exp_name, "correlation-scan | lds | dbn-ess | mmcl-vs-mcem")
      ->required()
      ->check(CLI::IsMember(dncp::exp::experiment_names()));
  add_common(ex, exp_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (an->parsed()) {
      std::cout << analyze(aa).dump(2) << "\n";
    } else if (sa->parsed()) {
      report(dncp::exp::run_experiment(resolve(sample_flags, "sample")));
    } else if (le->parsed()) {
      report(dncp::exp::run_experiment(resolve(learn_flags, "learn")));
    } else if (ex->parsed()) {
      report(dncp::exp::run_experiment(resolve(exp_flags, exp_name)));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const dncp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
