#include <benchmark/benchmark.h>

#include <random>

#include "sgt/dep_graph.hpp"
#include "sgt/model.hpp"
#include "sgt/synthetic.hpp"
#include "sgt/tensor.hpp"
#include "sgt/train.hpp"

namespace {

using namespace sgt;

Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, bool grad = false) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(r * c);
  for (auto& x : v) x = u(rng);
  return Tensor::from({r, c}, std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = random_matrix(n, n, rng), b = random_matrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 128)->Complexity();

void BM_SegmentAttentionBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  auto q = random_matrix(n, 8, rng, true), k = random_matrix(n, 8, rng, true), v = random_matrix(n, 8, rng, true);
  std::vector<std::vector<std::size_t>> lists(n);
  for (std::size_t i = 0; i < n; ++i) lists[i] = {i, (i + 1) % n, (i + 3) % n};
  for (auto _ : state) {
    backward(sum(segment_attention(q, k, v, lists, 0.35).output));
    q.zero_grad();
  }
}
BENCHMARK(BM_SegmentAttentionBackward)->Arg(16)->Arg(64);

struct Fixture {
  std::vector<Document> docs;
  Vocabularies vocabs;
  Dataset data;

  Fixture() {
    SynthConfig sc;
    sc.windows = 32;
    docs = generate_synthetic(sc, 7).docs;
    vocabs = build_vocabs(docs);
    data = build_dataset(docs, vocabs);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_SyntaxContext(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    for (const auto& p : f.data.pairs)
      benchmark::DoNotOptimize(syntax_context(p.graph, p.context.source, p.context.target));
}
BENCHMARK(BM_SyntaxContext);

void BM_BuildGraph(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    for (const auto& p : f.data.pairs) benchmark::DoNotOptimize(build_graph(f.docs[p.doc], p.window, f.vocabs));
}
BENCHMARK(BM_BuildGraph);

void BM_PairForwardBackward(benchmark::State& state) {
  const auto& f = fixture();
  ModelConfig mc;
  mc.layers = static_cast<std::size_t>(state.range(0));
  const SgtModel model(mc, EncoderConfig{}, f.vocabs, LabelScheme::matres(), 1);
  const auto& p = f.data.pairs.front();
  const std::size_t gold[] = {p.label};
  const std::vector<double> weights(4, 1.0);
  for (auto _ : state) {
    const auto x = model.encoder().encode_window(f.docs[p.doc], p.window);
    const auto r = forward(p.graph, p.context, x, model.params(), model.config());
    backward(loss_relation({relation_scores(r.source, r.target, model.params())}, gold, weights));
  }
}
BENCHMARK(BM_PairForwardBackward)->Arg(1)->Arg(2)->Arg(4);

void BM_TrainEpoch(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    SgtModel model(ModelConfig{}, EncoderConfig{}, f.vocabs, LabelScheme::matres(), 1);
    TrainConfig tc;
    tc.epochs = 1;
    tc.warmup_epochs = 0;
    benchmark::DoNotOptimize(train(model, f.data, nullptr, tc));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.data.pairs.size()));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
