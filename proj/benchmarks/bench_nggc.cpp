#include <benchmark/benchmark.h>

#include "nggc/certkit.hpp"
#include "nggc/devlib.hpp"
#include "nggc/netmodel.hpp"
#include "nggc/simkit.hpp"

using namespace nggc;

namespace {

NetworkSpec two_bus() {
  NetworkSpec s = NetworkSpec::flat(2, 0.1);
  s.lines = {{1, 2, 2.0}};
  return s;
}

void BM_CertifyReferenceFleet(benchmark::State& state) {
  FrequencyGrid grid;
  grid.points_per_decade = static_cast<int>(state.range(0));
  std::vector<RationalTF> fleet;
  for (const auto& e : dev::reference_fleet()) fleet.push_back(dev::pf_transfer(e.params));
  for (auto _ : state)
    for (const RationalTF& d : fleet) benchmark::DoNotOptimize(cert::certify_pf(d, cert::CertLimits{}, grid));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(fleet.size()));
}
BENCHMARK(BM_CertifyReferenceFleet)->Arg(20)->Arg(60)->Arg(240)->Unit(benchmark::kMillisecond);

void BM_HinfNorm(benchmark::State& state) {
  const RationalTF d = dev::pf_transfer(dev::SGReheat{});
  for (auto _ : state) benchmark::DoNotOptimize(hinf_norm(d, FrequencyGrid{}));
}
BENCHMARK(BM_HinfNorm)->Unit(benchmark::kMicrosecond);

void BM_StepResponseExperiment1(benchmark::State& state) {
  const std::vector<RationalTF> fleet{dev::pf_transfer(dev::ideal_vsc()), dev::pf_transfer(dev::SGReheat{})};
  const sim::ClosedLoopModel m = sim::assemble_pf_loop(fleet, build_fp_laplacian(two_bus()));
  for (auto _ : state) benchmark::DoNotOptimize(sim::step_response(m, 2, 0.1, 30.0, 1e-3));
}
BENCHMARK(BM_StepResponseExperiment1)->Unit(benchmark::kMillisecond);

void BM_PassivitySweep(benchmark::State& state) {
  NetworkSpec s = NetworkSpec::flat(static_cast<int>(state.range(0)), 0.05);
  for (int j = 2; j <= s.n; ++j) s.lines.push_back({j - 1, j, 2.0});
  for (auto _ : state) benchmark::DoNotOptimize(verify_shifted_passivity(s, FrequencyGrid{}));
}
BENCHMARK(BM_PassivitySweep)->Arg(2)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
