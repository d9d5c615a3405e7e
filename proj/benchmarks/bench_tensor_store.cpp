#include <benchmark/benchmark.h>

#include <filesystem>
#include <string>
#include <unistd.h>

#include "probelens/synth.hpp"
#include "probelens/tensor_store.hpp"

namespace {

using namespace probelens;

std::filesystem::path scratch(const char* name) {
  return std::filesystem::temp_directory_path() / (std::string("probelens_bench_") + std::to_string(::getpid()) + name);
}

EmbeddingArchive sized_archive(std::uint32_t per_class) {
  PlantSpec spec;
  spec.n_layers = 33;
  spec.hidden_dim = 256;
  spec.n_prompts_per_class = per_class;
  return planted_archive(spec);
}

void BM_WriteArchive(benchmark::State& state) {
  const auto archive = sized_archive(static_cast<std::uint32_t>(state.range(0)));
  const auto path = scratch("_w.prbe");
  for (auto _ : state) write_archive(archive, path);
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(archive.header.payload_bytes()));
  std::filesystem::remove(path);
  std::filesystem::remove(manifest_path(path));
}
BENCHMARK(BM_WriteArchive)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_ReadArchive(benchmark::State& state) {
  const auto archive = sized_archive(static_cast<std::uint32_t>(state.range(0)));
  const auto path = scratch("_r.prbe");
  write_archive(archive, path);
  for (auto _ : state) {
    auto loaded = read_archive(path);
    benchmark::DoNotOptimize(loaded.data.data());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(archive.header.payload_bytes()));
  std::filesystem::remove(path);
  std::filesystem::remove(manifest_path(path));
}
BENCHMARK(BM_ReadArchive)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_SliceLayer(benchmark::State& state) {
  const auto archive = sized_archive(50);
  for (auto _ : state) {
    auto slice = slice_layer(archive, 16);
    benchmark::DoNotOptimize(slice.features.data());
  }
}
BENCHMARK(BM_SliceLayer);

}  // namespace
