#include "nodalab/fixtures.hpp"
#include "nodalab/kacrice.hpp"
#include "nodalab/morse.hpp"
#include "nodalab/nodal.hpp"
#include "nodalab/variation.hpp"

#include <benchmark/benchmark.h>

using namespace nodalab;

namespace {

CovarianceModel wave(const Domain& d, int n) {
  ModelParams p;
  p.n = n;
  return build_model(ModelKind::ArithmeticWave, p, d);
}

void BM_Extract2D(benchmark::State& state) {
  const int res = static_cast<int>(state.range(0));
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, res);
  const FieldFunction f = sample_field(wave(t.domain, 5), 1);
  for (auto _ : state) benchmark::DoNotOptimize(nodal_volume(extract_nodal_set(f, t.domain, t.chart)));
  state.SetComplexityN(res);
}
BENCHMARK(BM_Extract2D)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMillisecond)->Complexity();

void BM_ExtractSphere(benchmark::State& state) {
  const auto s = make_domain(DomainKind::Sphere2, 2, {}, static_cast<int>(state.range(0)));
  ModelParams p;
  p.l = 10;
  const FieldFunction f = sample_field(build_model(ModelKind::SphericalHarmonic, p, s.domain), 1);
  for (auto _ : state) benchmark::DoNotOptimize(nodal_volume(extract_nodal_set(f, s.domain, s.chart)));
}
BENCHMARK(BM_ExtractSphere)->DenseRange(4, 6)->Unit(benchmark::kMillisecond);

void BM_Extract3D(benchmark::State& state) {
  const auto b = make_domain(DomainKind::Rectangle, 3, {2, 2, 2}, static_cast<int>(state.range(0)), {-1, -1, -1});
  const FieldFunction f = fixtures::ball(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(nodal_volume(extract_nodal_set(f, b.domain, b.chart)));
}
BENCHMARK(BM_Extract3D)->Arg(24)->Arg(48)->Unit(benchmark::kMillisecond);

void BM_FirstVariation(benchmark::State& state) {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 256);
  const auto m = wave(t.domain, 5);
  const FieldFunction f = sample_field(m, 1), h = sample_field(m, 2);
  const auto z = extract_nodal_set(f, t.domain, t.chart);
  for (auto _ : state) benchmark::DoNotOptimize(first_variation(z, h).total);
}
BENCHMARK(BM_FirstVariation)->Unit(benchmark::kMicrosecond);

void BM_CameronMartinNorm(benchmark::State& state) {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 96);
  const auto m = wave(t.domain, 5);
  const auto z = extract_nodal_set(sample_field(m, 3), t.domain, t.chart);
  for (auto _ : state) benchmark::DoNotOptimize(cm_norm_sq(z, m));
}
BENCHMARK(BM_CameronMartinNorm)->Unit(benchmark::kMillisecond);

void BM_PairMoments(benchmark::State& state) {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 32);
  const auto m = wave(t.domain, 5);
  const auto in = two_point_density(m, t.domain, Vec3(0.1, 0.2, 0), Vec3(0.13, 0.25, 0));
  PairMomentOptions o;
  o.samples = static_cast<int>(state.range(0));
  o.absolute = true;
  for (auto _ : state) benchmark::DoNotOptimize(pair_moments(in, o).abs_curvature_product);
}
BENCHMARK(BM_PairMoments)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SecondMoment(benchmark::State& state) {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 64);
  const auto m = wave(t.domain, 1);
  TubeOptions o;
  o.resolution = 64;
  o.samples = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(second_moment(m, t.domain, o).extrapolated);
}
BENCHMARK(BM_SecondMoment)->Unit(benchmark::kMillisecond)->Iterations(2);

void BM_SegmentScan(benchmark::State& state) {
  const auto t = make_domain(DomainKind::FlatTorus, 2, {1, 1}, 64);
  const auto m = wave(t.domain, 5);
  const FieldFunction f = sample_field(m, 4), h = sample_field(m, 5);
  for (auto _ : state) benchmark::DoNotOptimize(scan_segment(f, h, -1, 1, t.domain).zeros.size());
}
BENCHMARK(BM_SegmentScan)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
