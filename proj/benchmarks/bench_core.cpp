#include <benchmark/benchmark.h>

#include <random>

#include "obsent/entropy.hpp"
#include "obsent/fluct.hpp"
#include "obsent/graining.hpp"
#include "obsent/lawsuite.hpp"
#include "obsent/models.hpp"
#include "obsent/thermo.hpp"

using namespace obsent;

namespace {

ComplexMatrix random_hermitian(Index n, bool real) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> d;
  ComplexMatrix g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = real ? Complex(d(gen), 0.0) : Complex(d(gen), d(gen));
  return 0.5 * (g + g.adjoint());
}

ModelSpec star(int bath_sites) {
  ModelSpec s;
  s.bath_sites = {bath_sites};
  return s;
}

}  // namespace

static void BM_EigHermitianComplex(benchmark::State& state) {
  const ComplexMatrix h = random_hermitian(state.range(0), false);
  for (auto _ : state) benchmark::DoNotOptimize(eig_hermitian(h));
}
BENCHMARK(BM_EigHermitianComplex)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

// real-symmetric fast path
static void BM_EigHermitianReal(benchmark::State& state) {
  const ComplexMatrix h = random_hermitian(state.range(0), true);
  for (auto _ : state) benchmark::DoNotOptimize(eig_hermitian(h));
}
BENCHMARK(BM_EigHermitianReal)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_PropagatorStep(benchmark::State& state) {
  const ComplexMatrix h = random_hermitian(state.range(0), true);
  for (auto _ : state) {
    HermitianOperator op(h);  // fresh operator: no cached spectrum
    benchmark::DoNotOptimize(propagator_step(op, 0.05));
  }
}
BENCHMARK(BM_PropagatorStep)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_ObsEntropyEnergyGraining(benchmark::State& state) {
  const BuiltModel m = build(star(static_cast<int>(state.range(0))));
  const HermitianOperator h = m.hamiltonian_for(1.0);
  const CoarseGraining x = energy_graining(h, 0.25);
  const DensityMatrix rho = gibbs_state(h, 1.0, m.dims());
  for (auto _ : state) benchmark::DoNotOptimize(obs_entropy(rho, x));
}
BENCHMARK(BM_ObsEntropyEnergyGraining)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_EffectiveBeta(benchmark::State& state) {
  const BuiltModel m = build(star(8));
  const HermitianOperator& hb = m.bath_hamiltonian(0);
  const double target = 0.3 * hb.min_eigenvalue() + 0.7 * hb.max_eigenvalue() * 0.1;
  hb.spectrum();
  for (auto _ : state) benchmark::DoNotOptimize(effective_beta(hb, target));
}
BENCHMARK(BM_EffectiveBeta);

static void BM_RunOpenShort(benchmark::State& state) {
  const BuiltModel m = build(star(static_cast<int>(state.range(0))));
  RunSettings s;
  s.t_max = 1.0;
  s.steps = 10;
  const ComplexMatrix rho_s = ComplexMatrix::Identity(2, 2) * 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(run_open(m, s, rho_s));
}
BENCHMARK(BM_RunOpenShort)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

static void BM_FluctuationQuench(benchmark::State& state) {
  ModelSpec spec = star(4);
  spec.driving.kind = DriveKind::Quench;
  RunSettings s;
  s.t_max = 2.0;
  s.steps = 20;
  s.delta = 0.5;
  const BuiltModel m = build(spec);
  for (auto _ : state) benchmark::DoNotOptimize(run_fluctuation(m, s));
}
BENCHMARK(BM_FluctuationQuench)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
