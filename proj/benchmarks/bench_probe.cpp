#include <benchmark/benchmark.h>

#include "probelens/probe.hpp"
#include "probelens/synth.hpp"

namespace {

using namespace probelens;

void BM_TrainProbe(benchmark::State& state) {
  PlantSpec spec;
  spec.n_layers = 1;
  spec.signal_layer = 0;
  spec.hidden_dim = static_cast<std::uint32_t>(state.range(0));
  spec.n_prompts_per_class = 100;
  const auto archive = planted_archive(spec);
  const auto slice = slice_layer(archive, 0);
  const Eigen::MatrixXd X = slice.features.cast<double>();
  TrainConfig cfg;
  cfg.epochs = 20;
  for (auto _ : state) {
    auto model = train_probe(X, slice.labels, spec.n_classes, cfg);
    benchmark::DoNotOptimize(model.linear.weights.data());
  }
  state.SetItemsProcessed(state.iterations() * X.rows() * static_cast<std::int64_t>(cfg.epochs));
}
BENCHMARK(BM_TrainProbe)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_LossGradient(benchmark::State& state) {
  PlantSpec spec;
  spec.n_layers = 1;
  spec.signal_layer = 0;
  spec.hidden_dim = static_cast<std::uint32_t>(state.range(0));
  const auto archive = planted_archive(spec);
  const auto slice = slice_layer(archive, 0);
  const Eigen::MatrixXd X = slice.features.cast<double>();
  LinearModel model;
  model.weights = Eigen::MatrixXd::Zero(spec.n_classes, spec.hidden_dim);
  model.bias = Eigen::VectorXd::Zero(spec.n_classes);
  for (auto _ : state) {
    auto g = loss_gradient(model, X, slice.labels, 1e-4);
    benchmark::DoNotOptimize(g.weights.data());
  }
}
BENCHMARK(BM_LossGradient)->Arg(64)->Arg(1024);

void BM_LayerSweep(benchmark::State& state) {
  PlantSpec spec;
  spec.n_prompts_per_class = 40;
  const auto train = planted_archive(spec);
  spec.sample_stream = 1;
  const auto test = planted_archive(spec);
  TrainConfig cfg;
  cfg.repeats = 2;
  cfg.epochs = 20;
  SweepOptions opt;
  opt.threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto report = layer_sweep(train, test, cfg, opt);
    benchmark::DoNotOptimize(report.peak_accuracy);
  }
}
BENCHMARK(BM_LayerSweep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
