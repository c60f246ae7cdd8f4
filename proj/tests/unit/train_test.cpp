#include "sgt/train.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <sstream>

#include "sgt/error.hpp"
#include "sgt/report.hpp"
#include "sgt/synthetic.hpp"
#include "test_util.hpp"

namespace sgt {
namespace {

struct Corpus {
  std::vector<Document> docs;
  Vocabularies vocabs;
  Dataset data;
};

std::unique_ptr<Corpus> synthetic(std::size_t windows, std::uint64_t seed) {
  auto c = std::make_unique<Corpus>();
  SynthConfig sc;
  sc.windows = windows;
  c->docs = generate_synthetic(sc, seed).docs;
  c->vocabs = build_vocabs(c->docs);
  c->data = build_dataset(c->docs, c->vocabs);
  return c;
}

SgtModel small_model(const Corpus& c, std::uint64_t seed = 1) {
  ModelConfig mc;
  mc.width = 8;
  mc.layers = 1;
  mc.heads = 2;
  mc.relation_width = 4;
  EncoderConfig ec;
  ec.token_width = 8;
  return SgtModel(mc, ec, c.vocabs, LabelScheme::matres(), seed);
}

std::string checkpoint_text(const SgtModel& m) {
  std::ostringstream out;
  write_checkpoint(out, m.to_checkpoint());
  return out.str();
}

TEST(Dataset, InstancesFromTwoSentenceDoc) {
  const std::vector<Document> docs = {test::two_sentence_doc()};
  const auto v = build_vocabs(docs);
  const auto d = build_dataset(docs, v);
  ASSERT_EQ(d.sentences.size(), 2u);
  EXPECT_EQ(d.sentences[0].labels, (std::vector<std::size_t>{0, 0, 1, 0, 0, 0, 1, 0}));
  ASSERT_EQ(d.pairs.size(), 2u);
  EXPECT_EQ(d.pairs[0].width(), 3u);  // before the cat
  EXPECT_EQ(d.pairs[1].window, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(d.pairs[1].width(), 3u);  // . Then it
  EXPECT_EQ(d.pairs[1].key, (PairKey{"d1", "e2", "e3"}));
}

TEST(Dataset, ClassWeights) {
  std::vector<Document> docs = {test::two_sentence_doc()};
  docs[0].pairs = {{"e1", "e2", 0}, {"e2", "e3", 1}, {"e1", "e3", 0}};
  const auto d = build_dataset(docs, build_vocabs(docs));
  const auto ew = default_event_weights(d);
  EXPECT_NEAR(ew[0] + ew[1], 1.0, 1e-15);
  EXPECT_NEAR(ew[1] / ew[0], 9.0 / 3.0, 1e-12);  // 9 non-event tokens, 3 event tokens
  const auto lw = default_label_weights(d, LabelScheme::matres());
  ASSERT_EQ(lw.size(), 4u);
  double mean = 0;
  for (double w : lw) mean += w / 4;
  EXPECT_NEAR(mean, 1.0, 1e-12);
  EXPECT_NEAR(lw[1] / lw[0], 2.0, 1e-12);
  EXPECT_EQ(lw[1], lw[3]);  // absent labels take the largest weight
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.warmup_epochs = 11;
  EXPECT_THROW(c.validate(), Error);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Train, WarmupOnlyLeavesRelationNetworkUntouched) {
  const auto c = synthetic(20, 3);
  auto model = small_model(*c);
  std::vector<std::vector<double>> before;
  for (const auto& t : model.relation_parameters()) before.emplace_back(t.data().begin(), t.data().end());
  TrainConfig tc;
  tc.epochs = 2;
  tc.warmup_epochs = 2;
  const auto result = train(model, c->data, nullptr, tc);
  ASSERT_EQ(result.log.size(), 2u);
  for (const auto& e : result.log) {
    EXPECT_EQ(e.phase, "event");
    EXPECT_EQ(e.relation_grad_norm, 0.0);
    EXPECT_EQ(e.relation_loss, 0.0);
    EXPECT_GT(e.event_grad_norm, 0.0);
  }
  const auto after = model.relation_parameters();
  for (std::size_t i = 0; i < after.size(); ++i)
    EXPECT_TRUE(std::equal(before[i].begin(), before[i].end(), after[i].data().begin()));
}

TEST(Train, EmptyTrainingSetIsAnError) {
  const std::vector<Document> none;
  const Dataset empty{&none, {}, {}};
  const auto c = synthetic(4, 1);
  auto model = small_model(*c);
  EXPECT_THROW(train(model, empty, nullptr, TrainConfig{}), Error);
}

TEST(Train, SameSeedIsBitIdentical) {
  const auto c = synthetic(30, 5);
  auto run = [&] {
    auto model = small_model(*c);
    TrainConfig tc;
    tc.epochs = 3;
    tc.warmup_epochs = 1;
    const auto r = train(model, c->data, &c->data, tc);
    std::string log;
    for (const auto& e : r.log) log += epoch_json(e) + "\n";
    return std::make_pair(log, checkpoint_text(model));
  };
  const auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Train, LossFallsAndBestEpochIsLoaded) {
  const auto c = synthetic(60, 9);
  auto model = small_model(*c);
  TrainConfig tc;
  tc.epochs = 6;
  tc.warmup_epochs = 2;
  const auto r = train(model, c->data, &c->data, tc);
  EXPECT_LT(r.log.back().event_loss, r.log.front().event_loss);
  EXPECT_LT(r.log.back().relation_loss, r.log[2].relation_loss);
  ASSERT_GE(r.best_epoch, 1u);
  const auto& best = r.log[r.best_epoch - 1];
  for (const auto& e : r.log) EXPECT_LE(e.dev_relations.f1, best.dev_relations.f1);
  const auto report = evaluate(model, c->data, EvalSetting::kGold);
  EXPECT_EQ(report.relations.f1, best.dev_relations.f1);
}

TEST(Predict, JointCandidatesAreAdjacentAndOrdered) {
  const std::vector<TokenKey> detected = {{"d", 2, 1}, {"d", 0, 4}, {"d", 0, 2}, {"d", 1, 3}, {"e", 0, 1}};
  const auto pairs = joint_candidates(detected);
  const std::vector<std::pair<TokenKey, TokenKey>> want = {
      {{"d", 0, 2}, {"d", 0, 4}}, {{"d", 0, 2}, {"d", 1, 3}}, {{"d", 0, 4}, {"d", 1, 3}}, {{"d", 1, 3}, {"d", 2, 1}}};
  EXPECT_EQ(pairs, want);
}

GridConfig published_grid() { return GridConfig{{1e-5, 3e-6}, {32, 16}, {12, 4}, {8, 1}}; }

TEST(Grid, PublishedCandidatesGiveSixteenCanonicalCells) {
  const auto cells = grid_cells(published_grid());
  ASSERT_EQ(cells.size(), 16u);
  EXPECT_EQ(cells[0].learning_rate, 3e-6);
  EXPECT_EQ(cells[0].batch_size, 16u);
  EXPECT_EQ(cells[0].layers, 4u);
  EXPECT_EQ(cells[0].heads, 1u);
  EXPECT_EQ(cells[1].heads, 8u);
  EXPECT_EQ(cells[15].learning_rate, 1e-5);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(cells[i].index, i);
}

TEST(Grid, StubEvaluatorArgmaxAndTieBreak) {
  // Score peaks at lr 1e-5, batch 16, 12 layers, any head count: a tie between cells 10 and 11.
  const CellEvaluator stub = [](const GridCell& c) {
    const double f = (c.learning_rate == 1e-5 ? 0.4 : 0.0) + (c.batch_size == 16 ? 0.2 : 0.0) +
                     (c.layers == 12 ? 0.1 : 0.0);
    return GridRow{c, f, 0.5};
  };
  for (std::size_t jobs : {1u, 4u}) {
    const auto r = grid_search(published_grid(), stub, jobs);
    ASSERT_EQ(r.rows.size(), 16u);
    EXPECT_EQ(r.best, 10u);
    EXPECT_EQ(r.rows[r.best].cell.layers, 12u);
    EXPECT_EQ(r.rows[r.best].cell.heads, 1u);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(r.rows[i].cell.index, i);
  }
}

TEST(Grid, InvariantToCandidateOrder) {
  const CellEvaluator stub = [](const GridCell& c) {
    return GridRow{c, 1.0 / (1.0 + c.index % 5) + c.learning_rate, 0.0};
  };
  const auto a = grid_search(published_grid(), stub);
  const auto b = grid_search(GridConfig{{3e-6, 1e-5, 3e-6}, {16, 32}, {4, 12}, {1, 8}}, stub);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(grid_json(a), grid_json(b));
}

TEST(Grid, SinglePointAndEmpty) {
  std::atomic<int> calls{0};
  const CellEvaluator stub = [&](const GridCell& c) {
    ++calls;
    return GridRow{c, 0.0, 0.0};
  };
  const auto r = grid_search(GridConfig{{1e-3}, {8}, {1}, {1}}, stub);
  EXPECT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.best, 0u);
  EXPECT_EQ(calls, 1);
  EXPECT_THROW(grid_cells(GridConfig{{1e-3}, {}, {1}, {1}}), Error);
}

}  // namespace
}  // namespace sgt
