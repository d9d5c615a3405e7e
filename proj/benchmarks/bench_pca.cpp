#include <benchmark/benchmark.h>

#include "probelens/analysis.hpp"
#include "probelens/pca.hpp"
#include "probelens/synth.hpp"

namespace {

using namespace probelens;

void BM_PcaFit(benchmark::State& state) {
  const auto m = static_cast<Eigen::Index>(state.range(0));
  const auto d = static_cast<Eigen::Index>(state.range(1));
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(m, d);
  for (auto _ : state) {
    auto model = pca_fit(X, 2);
    benchmark::DoNotOptimize(model.components.data());
  }
}
BENCHMARK(BM_PcaFit)->Args({11, 4096})->Args({200, 256})->Args({1000, 64});

void BM_DistanceCurve(benchmark::State& state) {
  PlantSpec spec;
  spec.layout = ClassLayout::kLine;
  spec.n_prompts_per_class = 10;
  const auto archive = planted_archive(spec);
  DistanceOptions opt;
  opt.repetitions = 10;
  for (auto _ : state) {
    auto curve = distance_curve(archive, opt);
    benchmark::DoNotOptimize(curve.per_layer.data());
  }
}
BENCHMARK(BM_DistanceCurve)->Unit(benchmark::kMicrosecond);

}  // namespace
