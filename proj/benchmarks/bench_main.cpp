#include <benchmark/benchmark.h>

#include "cc/cochain.hpp"
#include "cc/evolution.hpp"
#include "cc/greens.hpp"
#include "cc/lattice.hpp"

using namespace cc;
using namespace cc::lattice;
using namespace cc::evolution;

static void BM_BuildGeometry(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(NetworkGeometry::build(l, l, Topology::kTorus));
}
BENCHMARK(BM_BuildGeometry)->Arg(16)->Arg(32)->Arg(64);

static void BM_SampleDisorder(benchmark::State& state) {
  const auto g = NetworkGeometry::build(32, 32, Topology::kTorus);
  std::uint64_t i = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_disorder(g, 7, i++));
}
BENCHMARK(BM_SampleDisorder);

static void BM_Factorize(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const auto g = NetworkGeometry::build(l, l, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const auto t = compose_t(us, sample_disorder(g, 7, 0),
                           Regularization::absorbing(-1.0 / (l * l)));
  for (auto _ : state)
    benchmark::DoNotOptimize(greens::GreenFactorization(t));
}
BENCHMARK(BM_Factorize)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_ColumnSolve(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const auto g = NetworkGeometry::build(l, l, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const auto t = compose_t(us, sample_disorder(g, 7, 0),
                           Regularization::absorbing(-1.0 / (l * l)));
  greens::GreenFactorization fact(t);
  Eigen::VectorXcd b = Eigen::VectorXcd::Random(g.num_links());
  for (auto _ : state) benchmark::DoNotOptimize(fact.solve(b));
}
BENCHMARK(BM_ColumnSolve)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

static void BM_PointContactState(benchmark::State& state) {
  const int l = static_cast<int>(state.range(0));
  const auto g = NetworkGeometry::build(l, l, Topology::kTorus);
  const auto us = build_us(g, ScatteringParams{});
  const auto u = compose_u(us, sample_disorder(g, 7, 0));
  for (auto _ : state)
    benchmark::DoNotOptimize(greens::point_contact_state(u, 0));
}
BENCHMARK(BM_PointContactState)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_ZzProjectionRow(benchmark::State& state) {
  const int l = 32;
  const auto g = NetworkGeometry::build(l, l, Topology::kTorus);
  const auto medial = build_medial(g);
  const auto us = build_us(g, ScatteringParams{});
  const auto t = compose_t(us, sample_disorder(g, 7, 0),
                           Regularization::absorbing(-1.0 / (l * l)));
  greens::GreenFactorization fact(t);
  std::vector<cochain::WeightTable> wz(medial.num_edges());
  for (int e = 0; e < medial.num_edges(); ++e)
    wz[e] = cochain::j10_weights(medial, e);
  const auto& w0 = wz[0];
  std::array<const Eigen::VectorXcd*, 4> cols{};
  for (int j = 0; j < 4; ++j) cols[j] = &fact.column(w0[j].first);
  for (auto _ : state) {
    Complex total = 0;
    for (int e = 0; e < medial.num_edges(); ++e) {
      Complex v = 0;
      for (const auto& [l1, we] : wz[e]) {
        Complex s = 0;
        for (int j = 0; j < 4; ++j)
          s += w0[j].second * std::norm((*cols[j])[l1]);
        v += we * s;
      }
      total += v;
    }
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(BM_ZzProjectionRow)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
