#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace dncp::exp {

using nlohmann::json;

namespace {

// Reads typed members of one JSON object and rejects members nobody asked
// for, so a typo in a key is an error instead of a silent default.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  Section sub(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    const auto it = j_.find(key);
    return Section(it == j_.end() ? empty : *it, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + where(key.c_str()));
    }
  }

 private:
  std::string where(const char* key = nullptr) const {
    std::string p = path_;
    if (key) p = p.empty() ? key : p + "." + key;
    return "'" + (p.empty() ? std::string("<root>") : p) + "'";
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"correlation-scan", "lds", "dbn-ess", "mmcl-vs-mcem"};
  return names;
}

ExperimentConfig config_from_json(const json& input) {
  const json& j = input.is_object() && input.contains("config") && input.contains("input_hash") ? input["config"] : input;
  ExperimentConfig c;
  Section root(j, "");
  std::string out = c.out.string();
  root.get("experiment", c.experiment);
  root.get("seed", c.seed);
  root.get("out", out);
  c.out = out;

  auto cs = root.sub("correlation_scan");
  cs.get("draws", c.correlation_scan.draws);
  cs.get("log_min", c.correlation_scan.log_min);
  cs.get("log_max", c.correlation_scan.log_max);
  cs.finish();

  auto lds = root.sub("lds");
  lds.get("sigma_x", c.lds.sigma_x);
  lds.get("sigma_z", c.lds.sigma_z);
  lds.get("grid_points", c.lds.grid_points);
  lds.get("half_width_sd", c.lds.half_width_sd);
  lds.get("observed", c.lds.observed);
  lds.finish();

  auto dbn = root.sub("dbn");
  dbn.get("steps", c.dbn.steps);
  dbn.get("latent_dim", c.dbn.latent_dim);
  dbn.get("obs_dim", c.dbn.obs_dim);
  dbn.get("log_sigma_z", c.dbn.log_sigma_z);
  dbn.get("log_base", c.dbn.log_base);
  dbn.get("replicates", c.dbn.replicates);
  dbn.get("mix_rho", c.dbn.mix_rho);
  dbn.get("emission_from_previous", c.dbn.emission_from_previous);
  dbn.finish();

  auto s = root.sub("sampler");
  s.get("leapfrog_steps", c.sampler.leapfrog_steps);
  s.get("initial_step_size", c.sampler.initial_step_size);
  s.get("target_accept_rate", c.sampler.target_accept_rate);
  s.get("burn_in", c.sampler.burn_in);
  s.get("samples", c.sampler.samples);
  s.finish();

  auto sample = root.sub("sample");
  sample.get("model", c.sample.model);
  sample.get("parameterization", c.sample.parameterization);
  sample.finish();

  auto l = root.sub("learning");
  l.get("latent_dim", c.learning.latent_dim);
  l.get("obs_dim", c.learning.obs_dim);
  l.get("train_size", c.learning.train_size);
  l.get("test_size", c.learning.test_size);
  l.get("methods", c.learning.methods);
  l.get("epochs", c.learning.epochs);
  l.get("batch_size", c.learning.batch_size);
  l.get("learning_rate", c.learning.learning_rate);
  l.get("mc_samples", c.learning.mc_samples);
  l.get("e_step_samples", c.learning.e_step_samples);
  l.get("e_step_burn_in", c.learning.e_step_burn_in);
  l.get("mcem_reparameterized", c.learning.mcem_reparameterized);
  l.get("eval_samples", c.learning.eval_samples);
  l.get("eval_every", c.learning.eval_every);
  l.get("idx_images", c.learning.idx_images);
  l.get("binarize", c.learning.binarize);
  l.get("mlp_dims", c.learning.mlp_dims);
  l.get("mlp_sigmas", c.learning.mlp_sigmas);
  l.finish();

  root.finish();
  c.sampler.seed = c.seed;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
  const auto& l = c.learning;
  return json{
      {"experiment", c.experiment},
      {"seed", c.seed},
      {"out", c.out.generic_string()},
      {"correlation_scan",
       {{"draws", c.correlation_scan.draws},
        {"log_min", c.correlation_scan.log_min},
        {"log_max", c.correlation_scan.log_max}}},
      {"lds",
       {{"sigma_x", c.lds.sigma_x},
        {"sigma_z", c.lds.sigma_z},
        {"grid_points", c.lds.grid_points},
        {"half_width_sd", c.lds.half_width_sd},
        {"observed", c.lds.observed}}},
      {"dbn",
       {{"steps", c.dbn.steps},
        {"latent_dim", c.dbn.latent_dim},
        {"obs_dim", c.dbn.obs_dim},
        {"log_sigma_z", c.dbn.log_sigma_z},
        {"log_base", c.dbn.log_base},
        {"replicates", c.dbn.replicates},
        {"mix_rho", c.dbn.mix_rho},
        {"emission_from_previous", c.dbn.emission_from_previous}}},
      {"sampler",
       {{"leapfrog_steps", c.sampler.leapfrog_steps},
        {"initial_step_size", c.sampler.initial_step_size},
        {"target_accept_rate", c.sampler.target_accept_rate},
        {"burn_in", c.sampler.burn_in},
        {"samples", c.sampler.samples}}},
      {"sample", {{"model", c.sample.model}, {"parameterization", c.sample.parameterization}}},
      {"learning",
       {{"latent_dim", l.latent_dim},
        {"obs_dim", l.obs_dim},
        {"train_size", l.train_size},
        {"test_size", l.test_size},
        {"methods", l.methods},
        {"epochs", l.epochs},
        {"batch_size", l.batch_size},
        {"learning_rate", l.learning_rate},
        {"mc_samples", l.mc_samples},
        {"e_step_samples", l.e_step_samples},
        {"e_step_burn_in", l.e_step_burn_in},
        {"mcem_reparameterized", l.mcem_reparameterized},
        {"eval_samples", l.eval_samples},
        {"eval_every", l.eval_every},
        {"idx_images", l.idx_images},
        {"binarize", l.binarize},
        {"mlp_dims", l.mlp_dims},
        {"mlp_sigmas", l.mlp_sigmas}}},
  };
}

void validate(const ExperimentConfig& c) {
  const auto& names = experiment_names();
  require(std::find(names.begin(), names.end(), c.experiment) != names.end() || c.experiment == "sample" ||
              c.experiment == "learn",
          "unknown experiment '" + c.experiment + "'");

  require(c.correlation_scan.draws > 0, "correlation_scan.draws must be positive");
  require(c.correlation_scan.log_min <= c.correlation_scan.log_max, "correlation_scan.log_min exceeds log_max");

  require(c.lds.sigma_x > 0.0, "lds.sigma_x must be positive");
  require(!c.lds.sigma_z.empty(), "lds.sigma_z grid is empty");
  for (double s : c.lds.sigma_z) require(s > 0.0, "lds.sigma_z entries must be positive");
  require(c.lds.grid_points >= 2, "lds.grid_points must be at least 2");
  require(c.lds.half_width_sd > 0.0, "lds.half_width_sd must be positive");
  require(c.lds.observed.size() == 2, "lds.observed needs two values");

  require(c.dbn.steps >= 2, "dbn.steps must be at least 2");
  require(c.dbn.latent_dim > 0 && c.dbn.obs_dim > 0, "dbn dimensions must be positive");
  require(!c.dbn.log_sigma_z.empty(), "dbn.log_sigma_z grid is empty");
  require(c.dbn.log_base > 1.0, "dbn.log_base must exceed 1");
  require(c.dbn.replicates > 0, "dbn.replicates must be positive");
  require(c.dbn.mix_rho >= 0.0 && c.dbn.mix_rho <= 1.0, "dbn.mix_rho must lie in [0, 1]");

  try {
    c.sampler.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("sampler: ") + e.what());
  }
  require(c.sampler.samples >= 100, "sampler.samples must be at least 100 for ESS");

  require(c.sample.model == "lds" || c.sample.model == "dbn", "sample.model must be 'lds' or 'dbn'");
  try {
    (void)parse_parameterization(c.sample.parameterization);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("sample.parameterization: ") + e.what());
  }

  const auto& l = c.learning;
  require(l.latent_dim > 0 && l.obs_dim > 0, "learning dimensions must be positive");
  require(l.train_size > 0, "learning.train_size must be positive");
  require(!l.methods.empty(), "learning.methods is empty");
  for (const auto& m : l.methods) {
    require(m == "mmcl" || m == "mcem", "learning.methods entries must be 'mmcl' or 'mcem'");
  }
  require(l.batch_size > 0, "learning.batch_size must be positive");
  require(l.learning_rate >= 0.0, "learning.learning_rate must be non-negative");
  require(l.mc_samples > 0 && l.eval_samples > 0, "learning sample counts must be positive");
  require(l.e_step_samples > 0, "learning.e_step_samples must be positive");
  require(l.eval_every > 0, "learning.eval_every must be positive");
  require(l.mlp_dims.size() == 3 && l.mlp_sigmas.size() == 3, "learning.mlp_dims and mlp_sigmas need three entries");
}

}  // namespace dncp::exp
