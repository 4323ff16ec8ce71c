#include <benchmark/benchmark.h>

#include <random>

#include "spanie/model.hpp"
#include "spanie/recursive_decoder.hpp"
#include "spanie/synthetic.hpp"
#include "spanie/trainer.hpp"

using namespace spanie;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = normal_sample(rng, 1.0);
  return t;
}

Dataset corpus(std::size_t docs) {
  SynthConfig c;
  c.num_docs = docs;
  c.fields = {{"number", 1.0, {{1, 1.0}}, 1, 1, 0},
              {"item", 1.0, {{2, 0.5}, {4, 0.5}}, 1, 3, 0},
              {"price", 1.0, {{2, 0.5}, {4, 0.5}}, 1, 1, 0}};
  return gen_synthetic(c);
}

ModelConfig model_config(ModelType type, std::size_t hidden) {
  ModelConfig m;
  m.type = type;
  m.encoder.hidden_size = hidden;
  m.encoder.num_layers = 2;
  m.encoder.num_heads = 4;
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_EncoderForward(benchmark::State& state) {
  const auto ds = corpus(4);
  Model model(model_config(ModelType::span, static_cast<std::size_t>(state.range(0))),
              Vocabulary::build({&ds.documents[0]}), ds.schema.field_ids, 1);
  const auto seq = model.tokenize(ds.documents[0]);
  for (auto _ : state) benchmark::DoNotOptimize(model.encoder().hidden_states(seq, PadMode::sequence));
  state.counters["tokens"] = static_cast<double>(seq.length());
}
BENCHMARK(BM_EncoderForward)->Arg(64)->Arg(128);

void BM_DecodeChain(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  ParameterStore store;
  SpanHead head(store, 64, ScorerKind::bilinear, rng, 1.0);
  const auto h = random_tensor({n, 64}, rng);
  const auto q = random_tensor({1, 64}, rng);
  const std::vector<bool> mask(n, true);
  for (auto _ : state) benchmark::DoNotOptimize(decode_chain(q, h, head, mask));
}
BENCHMARK(BM_DecodeChain)->Arg(64)->Arg(512);

void BM_TrainStep(benchmark::State& state) {
  const auto ds = corpus(8);
  const auto type = state.range(0) ? ModelType::seqlabel : ModelType::span;
  Model model(model_config(type, 64), Vocabulary::build({&ds.documents[0]}), ds.schema.field_ids, 1);
  TrainOptions opts;
  opts.epochs = 1;
  opts.batch_size = 8;
  for (auto _ : state) benchmark::DoNotOptimize(train(model, {&ds}, nullptr, opts));
  state.SetLabel(to_string(type));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
