#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "output.hpp"

namespace dncp::exp {

struct ExperimentResult {
  CsvTable table;
  nlohmann::json summary;
  /// Input files whose content hashes go into the manifest.
  std::vector<std::filesystem::path> inputs;
};

/// One (sigma_z, replicate) cell of the DBN sampler comparison. ESS is the
/// median over latent coordinates.
struct DbnEssCell {
  double log_sigma_z = 0.0;
  double ess_cp = 0.0;
  double ess_dncp = 0.0;
  double ess_mix = 0.0;
  double accept_cp = 0.0;
  double accept_dncp = 0.0;
  double accept_mix = 0.0;
  std::uint64_t seed = 0;
};

DbnEssCell dbn_ess_cell(const DbnConfig& dbn, const HmcConfig& sampler, double log_sigma_z, std::uint64_t seed);

/// Seed of replicate `r` under the master seed.
std::uint64_t replicate_seed(std::uint64_t master, std::size_t r);

ExperimentResult correlation_scan(const ExperimentConfig& c);
ExperimentResult lds_grid(const ExperimentConfig& c);
ExperimentResult dbn_ess(const ExperimentConfig& c);
ExperimentResult mmcl_vs_mcem(const ExperimentConfig& c);

/// Runs the experiment named in the config (including "sample" and
/// "learn").
ExperimentResult compute(const ExperimentConfig& c);

/// Single chain on the model named in `c.sample`; one row per kept draw.
ExperimentResult sample_chain(const ExperimentConfig& c);
/// Trains with every method in `c.learning.methods`.
ExperimentResult learn(const ExperimentConfig& c);

nlohmann::json manifest(const ExperimentConfig& c, const std::vector<std::filesystem::path>& inputs);

/// Writes results.csv, summary.json and manifest.json into `c.out`. If
/// anything throws, files already written by this call are removed and the
/// exception is rethrown. Returns the written paths.
std::vector<std::filesystem::path> write_outputs(const ExperimentConfig& c, const ExperimentResult& r);

/// validate + compute + write_outputs.
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& c);

}  // namespace dncp::exp
