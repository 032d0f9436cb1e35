#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dncp/hmc.hpp"

namespace dncp::exp {

/// Bad or inconsistent configuration. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorrelationScanConfig {
  std::size_t draws = 1000;
  /// alpha, beta = -exp(u), sigma = exp(u/2) with u uniform on this range.
  double log_min = -3.0;
  double log_max = 3.0;
};

struct LdsConfig {
  double sigma_x = 1.0;
  std::vector<double> sigma_z = {50.0, 2.0, 0.5, 0.02};
  std::size_t grid_points = 101;
  /// Grid half-width in posterior standard deviations around the mode.
  double half_width_sd = 4.0;
  std::vector<double> observed = {1.0, -0.5};
};

struct DbnConfig {
  std::size_t steps = 10;
  std::size_t latent_dim = 2;
  std::size_t obs_dim = 5;
  std::vector<double> log_sigma_z = {-5.0, -4.0, -3.0, -2.0, -1.0};
  double log_base = 10.0;
  std::size_t replicates = 1;
  double mix_rho = 0.5;
  bool emission_from_previous = false;
};

struct SampleConfig {
  /// "lds" or "dbn"; the model parameters come from the matching section
  /// (first grid entry).
  std::string model = "dbn";
  std::string parameterization = "mix";
};

struct LearningConfig {
  std::size_t latent_dim = 2;
  std::size_t obs_dim = 8;
  std::size_t train_size = 1000;
  std::size_t test_size = 200;
  std::vector<std::string> methods = {"mmcl", "mcem"};
  std::size_t epochs = 20;
  std::size_t batch_size = 10;
  double learning_rate = 0.05;
  std::size_t mc_samples = 10;
  std::size_t e_step_samples = 5;
  std::size_t e_step_burn_in = 5;
  bool mcem_reparameterized = false;
  std::size_t eval_samples = 500;
  std::size_t eval_every = 1;
  /// Optional IDX image file; when set the generative MLP is trained on it
  /// instead of synthetic two-layer data.
  std::string idx_images;
  bool binarize = true;
  std::vector<std::size_t> mlp_dims = {3, 3, 100};
  std::vector<double> mlp_sigmas = {1.0, 1.0, 0.0};
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::filesystem::path out = "results";
  CorrelationScanConfig correlation_scan;
  LdsConfig lds;
  DbnConfig dbn;
  HmcConfig sampler{10, 0.1, 0.9, 1000, 4000, 0};
  SampleConfig sample;
  LearningConfig learning;
};

/// Names accepted by `dncp experiment`. The `sample` and `learn`
/// subcommands record "sample" / "learn" as the experiment instead.
const std::vector<std::string>& experiment_names();

/// Unknown keys, wrong types and invalid values throw ConfigError. A
/// manifest.json is accepted too: its "config" member is used.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Full config with every default filled in.
nlohmann::json config_to_json(const ExperimentConfig& c);
/// Throws ConfigError.
void validate(const ExperimentConfig& c);

}  // namespace dncp::exp
