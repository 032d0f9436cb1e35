#include <benchmark/benchmark.h>

#include <vector>

#include "dncp/diagnostics.hpp"
#include "dncp/evaluator.hpp"
#include "dncp/hmc.hpp"
#include "dncp/learning.hpp"
#include "dncp/reparam.hpp"
#include "dncp/zoo.hpp"

using namespace dncp;

namespace {

struct DbnFixture {
  ModelWithParams m;
  Eigen::VectorXd x;

  explicit DbnFixture(std::size_t steps) {
    Rng rng(1);
    DbnOptions o;
    o.steps = steps;
    m = build_dbn_model(o, rng);
    x = m.model.pack_observed(ancestral_sample(m.model, m.theta, rng));
  }
};

void BM_LogJointGradient(benchmark::State& state) {
  DbnFixture f(static_cast<std::size_t>(state.range(0)));
  ModelEvaluator ev(f.m.model);
  ev.set_parameters(f.m.theta);
  ev.set_observed(f.x);
  Rng rng(2);
  const Assignment a = ancestral_sample(f.m.model, f.m.theta, rng);
  const Eigen::VectorXd q = f.m.model.pack_free(a);
  Eigen::VectorXd g;
  for (auto _ : state) benchmark::DoNotOptimize(ev.log_joint(q, &g));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LogJointGradient)->Arg(10)->Arg(50);

void BM_Leapfrog(benchmark::State& state) {
  DbnFixture f(10);
  PosteriorTarget target(f.m.model, f.m.theta, f.x);
  const auto density = target.density(state.range(0) == 0 ? CoordinateSystem::Z : CoordinateSystem::Eps);
  Rng rng(3);
  const Eigen::VectorXd q = target.prior_draw(rng);
  const Eigen::VectorXd p = Eigen::VectorXd::NullaryExpr(q.size(), [&] { return rng.normal(); });
  for (auto _ : state) benchmark::DoNotOptimize(leapfrog(q, p, 0.01, 10, density));
  state.SetLabel(state.range(0) == 0 ? "z" : "eps");
}
BENCHMARK(BM_Leapfrog)->Arg(0)->Arg(1);

void BM_EffectiveSampleSize(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> series(n);
  Rng rng(4);
  double prev = 0.0;
  for (auto& v : series) v = prev = 0.9 * prev + rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(effective_sample_size(series));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EffectiveSampleSize)->RangeMultiplier(4)->Range(1024, 65536)->Complexity();

void BM_MmclEstimate(benchmark::State& state) {
  const auto centered = build_two_layer_model(2, 8);
  Rng rng(5);
  const Eigen::VectorXd theta = random_parameters(centered, rng, 1.0);
  const Eigen::VectorXd x = centered.pack_observed(ancestral_sample(centered, theta, rng));
  MonteCarloLikelihood mcl(apply_plan(centered, full_dncp_plan(centered)));
  mcl.set_parameters(theta);
  const auto samples = static_cast<std::size_t>(state.range(0));
  Eigen::VectorXd g;
  for (auto _ : state) benchmark::DoNotOptimize(mcl.estimate(x, samples, rng, &g));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MmclEstimate)->Arg(10)->Arg(100);

}  // namespace
BENCHMARK_MAIN();
