#include "runner.hpp"

#include <cmath>
#include <optional>
#include <system_error>

#include "dncp/analysis.hpp"
#include "dncp/datasets.hpp"
#include "dncp/diagnostics.hpp"
#include "dncp/evaluator.hpp"
#include "dncp/learning.hpp"
#include "dncp/reparam.hpp"
#include "dncp/zoo.hpp"

namespace dncp::exp {

using nlohmann::json;

namespace {

std::string seed_string(std::uint64_t seed) { return std::to_string(seed); }

std::vector<std::string> coordinate_names(const FactorGraphModel& m) {
  std::vector<std::string> names;
  for (const auto& slot : m.free_slots()) {
    const auto& id = m.node(slot.node).id;
    for (std::size_t k = 0; k < slot.dim; ++k) names.push_back(slot.dim == 1 ? id : id + "[" + std::to_string(k) + "]");
  }
  return names;
}

ModelWithParams dbn_for(const DbnConfig& dbn, double log_sigma_z, const Rng& cell) {
  DbnOptions o;
  o.steps = dbn.steps;
  o.latent_dim = dbn.latent_dim;
  o.obs_dim = dbn.obs_dim;
  o.sigma_z = std::pow(dbn.log_base, log_sigma_z);
  o.emission_from_previous = dbn.emission_from_previous;
  Rng theta_rng = cell.split("theta");
  return build_dbn_model(o, theta_rng);
}

struct LearningSetup {
  FactorGraphModel model;
  Eigen::VectorXd theta0;
  std::optional<Eigen::VectorXd> theta_true;
  Eigen::MatrixXd train;
  Eigen::MatrixXd test;
  std::vector<std::filesystem::path> inputs;
};

LearningSetup learning_setup(const ExperimentConfig& c) {
  const auto& l = c.learning;
  const Rng master = Rng(c.seed).split("learning");
  LearningSetup s;
  if (l.idx_images.empty()) {
    s.model = build_two_layer_model(l.latent_dim, l.obs_dim);
    Rng truth_rng = master.split("theta-true");
    s.theta_true = random_parameters(s.model, truth_rng, 1.0);
    Rng data_rng = master.split("data");
    const auto d = synthetic_dataset(s.model, *s.theta_true, l.train_size + l.test_size, data_rng);
    s.train = d.images.topRows(static_cast<Eigen::Index>(l.train_size));
    s.test = d.images.bottomRows(static_cast<Eigen::Index>(l.test_size));
  } else {
    auto d = load_idx(l.idx_images);
    if (d.images.rows() == 0) throw ConfigError(l.idx_images + " holds labels, not images");
    if (d.count < l.train_size + l.test_size) {
      throw ConfigError(l.idx_images + " has " + std::to_string(d.count) + " images, need " +
                        std::to_string(l.train_size + l.test_size));
    }
    truncate(d, l.train_size + l.test_size);
    if (l.binarize) binarize(d, master.split("binarize").seed());
    MlpOptions o;
    o.dims = {l.mlp_dims[0], l.mlp_dims[1], l.mlp_dims[2]};
    o.sigmas = {l.mlp_sigmas[0], l.mlp_sigmas[1], l.mlp_sigmas[2]};
    o.obs_dim = d.rows * d.cols;
    s.model = build_generative_mlp(o);
    s.train = d.images.topRows(static_cast<Eigen::Index>(l.train_size));
    s.test = d.images.bottomRows(static_cast<Eigen::Index>(l.test_size));
    s.inputs.push_back(l.idx_images);
  }
  Rng init_rng = master.split("init");
  s.theta0 = random_parameters(s.model, init_rng, 0.1);
  return s;
}

TrainSchedule schedule_for(const ExperimentConfig& c, LearningMethod method) {
  const auto& l = c.learning;
  TrainSchedule s;
  s.method = method;
  s.epochs = l.epochs;
  s.batch_size = l.batch_size;
  s.learning_rate = l.learning_rate;
  s.mc_samples = l.mc_samples;
  s.hmc = HmcConfig{c.sampler.leapfrog_steps, c.sampler.initial_step_size, c.sampler.target_accept_rate,
                    l.e_step_burn_in, l.e_step_samples, 0};
  s.e_step_samples = l.e_step_samples;
  s.mcem_reparameterized = l.mcem_reparameterized;
  s.eval_samples = l.eval_samples;
  s.eval_every = l.eval_every;
  s.seed = Rng(c.seed).split("learning").split(std::string(to_string(method))).seed();
  return s;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

ExperimentResult train_methods(const ExperimentConfig& c, const std::vector<std::string>& methods, bool with_theta) {
  const auto setup = learning_setup(c);
  ExperimentResult r{CsvTable({"method", "epoch", "train_log_lik", "test_log_lik", "seed"}), json::object(),
                     setup.inputs};
  const FactorGraphModel reparameterized = apply_plan(setup.model, full_dncp_plan(setup.model));
  MonteCarloLikelihood mcl(reparameterized);
  // Every final parameter vector is scored with the same draws.
  const std::uint64_t eval_seed = Rng(c.seed).split("learning").split("final-eval").seed();
  const std::size_t eval_samples = c.learning.eval_samples;

  json methods_json = json::object();
  for (const auto& name : methods) {
    const auto method = parse_learning_method(name);
    const auto schedule = schedule_for(c, method);
    const auto trace = train(setup.model, setup.theta0, setup.train, setup.test, schedule);
    for (const auto& row : trace) {
      r.table.add({name, static_cast<long long>(row.epoch), row.train_log_lik, row.test_log_lik, seed_string(c.seed)});
    }
    const auto& theta = trace.back().theta;
    json m = {{"final_train_log_lik", average_log_likelihood(mcl, theta, setup.train, eval_samples, eval_seed)},
              {"final_test_log_lik", average_log_likelihood(mcl, theta, setup.test, eval_samples, eval_seed)},
              {"epochs", c.learning.epochs},
              {"schedule_seed", schedule.seed}};
    if (with_theta) m["theta"] = vector_json(theta);
    methods_json[name] = m;
  }
  r.summary = {{"seed", c.seed},
               {"train_size", setup.train.rows()},
               {"test_size", setup.test.rows()},
               {"eval_samples", eval_samples},
               {"methods", methods_json}};
  if (setup.theta_true) {
    r.summary["truth_train_log_lik"] =
        average_log_likelihood(mcl, *setup.theta_true, setup.train, eval_samples, eval_seed);
    r.summary["truth_test_log_lik"] =
        average_log_likelihood(mcl, *setup.theta_true, setup.test, eval_samples, eval_seed);
  }
  return r;
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t master, std::size_t r) { return Rng(master).split("replicate").split(r).seed(); }

DbnEssCell dbn_ess_cell(const DbnConfig& dbn, const HmcConfig& sampler, double log_sigma_z, std::uint64_t seed) {
  const Rng cell(seed);
  const auto [model, theta] = dbn_for(dbn, log_sigma_z, cell);
  Rng data_rng = cell.split("data");
  const Eigen::VectorXd x = model.pack_observed(ancestral_sample(model, theta, data_rng));
  PosteriorTarget target(model, theta, x);
  HmcConfig cfg = sampler;
  cfg.seed = cell.split("chain").seed();

  DbnEssCell out;
  out.log_sigma_z = log_sigma_z;
  out.seed = seed;
  const auto run = [&](Parameterization p, double& ess, double& accept) {
    const auto chain = run_chain(target, p, cfg, dbn.mix_rho);
    ess = ess_report(chain.draws).median;
    accept = chain.accept_rate;
  };
  run(Parameterization::CP, out.ess_cp, out.accept_cp);
  run(Parameterization::DNCP, out.ess_dncp, out.accept_dncp);
  run(Parameterization::MIX, out.ess_mix, out.accept_mix);
  return out;
}

ExperimentResult correlation_scan(const ExperimentConfig& c) {
  const auto& cfg = c.correlation_scan;
  ExperimentResult r{
      CsvTable({"alpha", "beta", "w", "sigma", "rho2_cp", "rho2_dncp", "prefer_dncp", "seed"}), json::object(), {}};
  Rng rng = Rng(c.seed).split("correlation-scan");
  const auto u = [&] { return cfg.log_min + (cfg.log_max - cfg.log_min) * rng.uniform(); };
  std::size_t prefer = 0;
  std::size_t counterexamples = 0;
  for (std::size_t i = 0; i < cfg.draws; ++i) {
    LocalFactorSummary s;
    s.alpha = -std::exp(u());
    s.beta = -std::exp(u());
    s.sigma = std::exp(0.5 * u());
    s.w = rng.normal();
    const double cp = cp_squared_correlation(s);
    const double dncp = dncp_squared_correlation(s);
    const bool p = prefer_dncp(s.sigma, s.beta);
    prefer += p ? 1 : 0;
    counterexamples += ((cp > dncp) != p) ? 1 : 0;
    r.table.add({s.alpha, s.beta, s.w, s.sigma, cp, dncp, static_cast<long long>(p), seed_string(c.seed)});
  }
  r.summary = {{"seed", c.seed},
               {"draws", cfg.draws},
               {"prefer_dncp", prefer},
               {"inequality_counterexamples", counterexamples}};
  return r;
}

ExperimentResult lds_grid(const ExperimentConfig& c) {
  const auto& cfg = c.lds;
  ExperimentResult r{CsvTable({"sigma_z", "parameterization", "u", "v", "log_density", "rho2", "seed"}),
                     json::object(),
                     {}};
  const Eigen::Vector2d x(cfg.observed[0], cfg.observed[1]);
  json blocks = json::array();
  for (double sz : cfg.sigma_z) {
    const auto centered = build_lds_model(cfg.sigma_x, sz);
    const auto report = lds_correlations(cfg.sigma_x, sz);
    json block = {{"sigma_z", sz},
                  {"rho2_cp", report.rho_sq_cp},
                  {"rho2_dncp", report.rho_sq_dncp},
                  {"prefer_dncp", report.prefer_dncp}};
    for (const auto p : {Parameterization::CP, Parameterization::DNCP}) {
      const bool is_cp = p == Parameterization::CP;
      const FactorGraphModel m = is_cp ? centered : apply_plan(centered, full_dncp_plan(centered));
      ModelEvaluator ev(m);
      ev.set_parameters(Eigen::VectorXd());
      ev.set_observed(x);
      // The posterior is Gaussian, so one Newton step from 0 lands on the mode.
      const Eigen::Matrix2d h = is_cp ? report.hessian_cp : report.hessian_dncp;
      Eigen::VectorXd g;
      ev.log_joint(Eigen::VectorXd::Zero(2), &g);
      const Eigen::Vector2d mode = -h.inverse() * g;
      const Eigen::Matrix2d cov = -h.inverse();
      const double rho2 = is_cp ? report.rho_sq_cp : report.rho_sq_dncp;
      const std::string name(to_string(p));
      const auto n = static_cast<double>(cfg.grid_points - 1);
      Eigen::Vector2d lo;
      Eigen::Vector2d step;
      for (int k = 0; k < 2; ++k) {
        const double half = cfg.half_width_sd * std::sqrt(cov(k, k));
        lo[k] = mode[k] - half;
        step[k] = 2.0 * half / n;
      }
      Eigen::VectorXd q(2);
      for (std::size_t i = 0; i < cfg.grid_points; ++i) {
        for (std::size_t j = 0; j < cfg.grid_points; ++j) {
          q << lo[0] + step[0] * static_cast<double>(i), lo[1] + step[1] * static_cast<double>(j);
          r.table.add({sz, name, q[0], q[1], ev.log_joint(q), rho2, seed_string(c.seed)});
        }
      }
      block[name] = {{"mode", {mode[0], mode[1]}}, {"cov", {cov(0, 0), cov(0, 1), cov(1, 1)}}};
    }
    blocks.push_back(block);
  }
  r.summary = {{"seed", c.seed}, {"sigma_x", cfg.sigma_x}, {"observed", cfg.observed}, {"blocks", blocks}};
  return r;
}

ExperimentResult dbn_ess(const ExperimentConfig& c) {
  ExperimentResult r{CsvTable({"log_sigma_z", "ess_cp", "ess_dncp", "ess_mix", "replicate", "seed"}),
                     json::object(),
                     {}};
  json cells = json::array();
  for (std::size_t rep = 0; rep < c.dbn.replicates; ++rep) {
    const std::uint64_t seed = replicate_seed(c.seed, rep);
    for (double ls : c.dbn.log_sigma_z) {
      const auto cell = dbn_ess_cell(c.dbn, c.sampler, ls, seed);
      r.table.add({ls, cell.ess_cp, cell.ess_dncp, cell.ess_mix, static_cast<long long>(rep), seed_string(seed)});
      cells.push_back({{"log_sigma_z", ls},
                       {"replicate", rep},
                       {"seed", seed},
                       {"accept_cp", cell.accept_cp},
                       {"accept_dncp", cell.accept_dncp},
                       {"accept_mix", cell.accept_mix}});
    }
  }
  r.summary = {{"seed", c.seed}, {"ess_summary", "median over latent coordinates"}, {"cells", cells}};
  return r;
}

ExperimentResult mmcl_vs_mcem(const ExperimentConfig& c) { return train_methods(c, {"mmcl", "mcem"}, false); }

ExperimentResult learn(const ExperimentConfig& c) { return train_methods(c, c.learning.methods, true); }

ExperimentResult sample_chain(const ExperimentConfig& c) {
  const auto p = parse_parameterization(c.sample.parameterization);
  FactorGraphModel model;
  Eigen::VectorXd theta;
  Eigen::VectorXd x;
  HmcConfig cfg = c.sampler;
  const Rng cell(c.seed);
  if (c.sample.model == "lds") {
    model = build_lds_model(c.lds.sigma_x, c.lds.sigma_z.front());
    x = Eigen::Vector2d(c.lds.observed[0], c.lds.observed[1]);
  } else {
    auto mp = dbn_for(c.dbn, c.dbn.log_sigma_z.front(), cell);
    model = std::move(mp.model);
    theta = std::move(mp.theta);
    Rng data_rng = cell.split("data");
    x = model.pack_observed(ancestral_sample(model, theta, data_rng));
  }
  cfg.seed = cell.split("chain").seed();
  PosteriorTarget target(model, theta, x);
  const auto chain = run_chain(target, p, cfg, c.dbn.mix_rho);

  std::vector<std::string> header = {"iteration"};
  for (auto& n : coordinate_names(model)) header.push_back(std::move(n));
  header.push_back("seed");
  ExperimentResult r{CsvTable(header), json::object(), {}};
  for (Eigen::Index i = 0; i < chain.draws.rows(); ++i) {
    std::vector<CsvCell> row = {static_cast<long long>(i)};
    for (Eigen::Index k = 0; k < chain.draws.cols(); ++k) row.emplace_back(chain.draws(i, k));
    row.emplace_back(seed_string(c.seed));
    r.table.add(std::move(row));
  }
  const auto ess = ess_report(chain.draws);
  r.summary = {{"seed", c.seed},
               {"model", c.sample.model},
               {"parameterization", c.sample.parameterization},
               {"accept_rate", chain.accept_rate},
               {"divergences", chain.divergences},
               {"final_step_size", chain.step_size_trace.empty() ? cfg.initial_step_size : chain.step_size_trace.back()},
               {"ess", vector_json(ess.per_coordinate)},
               {"ess_min", ess.min},
               {"ess_median", ess.median},
               {"ess_max", ess.max}};
  return r;
}

ExperimentResult compute(const ExperimentConfig& c) {
  if (c.experiment == "correlation-scan") return correlation_scan(c);
  if (c.experiment == "lds") return lds_grid(c);
  if (c.experiment == "dbn-ess") return dbn_ess(c);
  if (c.experiment == "mmcl-vs-mcem") return mmcl_vs_mcem(c);
  if (c.experiment == "sample") return sample_chain(c);
  if (c.experiment == "learn") return learn(c);
  throw ConfigError("unknown experiment '" + c.experiment + "'");
}

json manifest(const ExperimentConfig& c, const std::vector<std::filesystem::path>& inputs) {
  const json config = config_to_json(c);
  json files = json::array();
  for (const auto& p : inputs) files.push_back({{"path", p.generic_string()}, {"hash", git_blob_hash_file(p)}});
  return {{"config", config},
          {"seed", c.seed},
          // Hash of the canonical config text plus each input file.
          {"input_hash", git_blob_hash(config.dump())},
          {"input_files", files}};
}

std::vector<std::filesystem::path> write_outputs(const ExperimentConfig& c, const ExperimentResult& r) {
  namespace fs = std::filesystem;
  const bool created_dir = !fs::exists(c.out);
  std::vector<fs::path> written;
  try {
    fs::create_directories(c.out);
    const auto emit = [&](const std::string& name, const auto& write) {
      const fs::path p = c.out / name;
      // Something other than a file in the way is not ours to clean up.
      if (!fs::is_directory(p)) written.push_back(p);
      write(p);
    };
    emit("results.csv", [&](const fs::path& p) { r.table.write(p); });
    emit("summary.json", [&](const fs::path& p) { write_json(p, r.summary); });
    emit("manifest.json", [&](const fs::path& p) { write_json(p, manifest(c, r.inputs)); });
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    if (created_dir) fs::remove(c.out, ec);
    throw;
  }
  return written;
}

std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& c) {
  validate(c);
  return write_outputs(c, compute(c));
}

}  // namespace dncp::exp
