#include "sgt/metrics.hpp"

#include <gtest/gtest.h>

#include <random>

#include "sgt/error.hpp"
#include "test_util.hpp"

namespace sgt {
namespace {

const LabelScheme kMatres = LabelScheme::matres();
constexpr std::size_t kBefore = 0, kAfter = 1, kVague = 3;

PairKey key(int i) { return PairKey{"d", "e" + std::to_string(i), "x"}; }

TEST(EvaluateRelations, HandComputedExample) {
  const std::vector<GoldPair> gold = {{key(0), kBefore}, {key(1), kBefore}, {key(2), kBefore}, {key(3), kVague}};
  const std::vector<PairPrediction> pred = {
      {key(0), kBefore}, {key(1), kAfter}, {key(2), kVague}, {key(3), kBefore}};
  const auto r = evaluate_relations(pred, gold, kMatres, EvalSetting::kGold);
  EXPECT_EQ(r.relations.correct, 1u);
  EXPECT_EQ(r.relations.predicted, 2u);
  EXPECT_EQ(r.relations.gold, 3u);
  EXPECT_EQ(r.relations.precision, 0.5);
  EXPECT_EQ(r.relations.recall, 1.0 / 3.0);
  EXPECT_NEAR(r.relations.f1, 0.4, 1e-15);
  EXPECT_EQ(r.skipped_vague, 1u);
  EXPECT_EQ(r.evaluated_pairs, 3u);
  EXPECT_EQ(r.confusion[kBefore][kVague], 1u);
  EXPECT_EQ(r.confusion[kVague], std::vector<std::size_t>(5, 0));
}

TEST(EvaluateRelations, ConfusionReproducesScoresOnRandomSets) {
  std::mt19937_64 rng(5);
  const auto tb = LabelScheme::tb_dense();
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GoldPair> gold;
    std::vector<PairPrediction> pred;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      gold.push_back({key(i), rng() % tb.size()});
      if (rng() % 5) pred.push_back({key(i), rng() % tb.size(), rng() % 4 != 0});
    }
    for (auto setting : {EvalSetting::kGold, EvalSetting::kJoint}) {
      const auto r = evaluate_relations(pred, gold, tb, setting);
      const auto again = relation_prf_from_confusion(r.confusion, tb);
      EXPECT_EQ(again.precision, r.relations.precision);
      EXPECT_EQ(again.recall, r.relations.recall);
      EXPECT_EQ(again.f1, r.relations.f1);
      EXPECT_LE(r.evaluated_pairs, gold.size());
      EXPECT_EQ(r.evaluated_pairs + r.skipped_vague, gold.size());
    }
  }
}

TEST(EvaluateRelations, JointSettingIgnoresUndetectedPairs) {
  const std::vector<GoldPair> gold = {{key(0), kBefore}, {key(1), kAfter}};
  const std::vector<PairPrediction> pred = {{key(0), kBefore, true}, {key(1), kAfter, false}};
  const auto joint = evaluate_relations(pred, gold, kMatres, EvalSetting::kJoint);
  EXPECT_EQ(joint.relations.correct, 1u);
  EXPECT_EQ(joint.relations.predicted, 1u);
  EXPECT_EQ(joint.undetected_pairs, 1u);
  EXPECT_EQ(joint.confusion[kAfter][4], 1u);
  const auto gold_setting = evaluate_relations(pred, gold, kMatres, EvalSetting::kGold);
  EXPECT_EQ(gold_setting.relations.correct, 2u);
}

TEST(EvaluateRelations, Errors) {
  const std::vector<GoldPair> gold = {{key(0), kBefore}};
  const std::vector<PairPrediction> stray = {{key(9), kBefore}};
  EXPECT_THROW(evaluate_relations(stray, gold, kMatres, EvalSetting::kGold), Error);
  const std::vector<PairPrediction> bad = {{key(0), 7}};
  EXPECT_THROW(evaluate_relations(bad, gold, kMatres, EvalSetting::kGold), Error);
  EXPECT_THROW(parse_eval_setting("oracle"), Error);
}

TEST(Prf, ZeroDenominatorsGiveZero) {
  const auto p = make_prf(0, 0, 0);
  EXPECT_EQ(p.precision, 0.0);
  EXPECT_EQ(p.f1, 0.0);
}

TEST(EvaluateEvents, SetOverlap) {
  const std::vector<TokenKey> gold = {{"d", 0, 3}, {"d", 0, 7}, {"d", 1, 3}};
  const std::vector<TokenKey> pred = {{"d", 0, 3}, {"d", 0, 2}};
  const auto r = evaluate_events(pred, gold);
  EXPECT_EQ(r.precision, 0.5);
  EXPECT_EQ(r.recall, 1.0 / 3.0);
  EXPECT_EQ(evaluate_events(gold, gold).f1, 1.0);
}

TEST(EvaluateEvents, GoldTokensUseSpanHeads) {
  auto doc = test::two_sentence_doc();
  doc.events[1].first = 4;  // "before the cat left" -> left
  const auto tokens = gold_event_tokens({doc});
  ASSERT_EQ(tokens.size(), 3u);
  EXPECT_EQ(tokens[1], (TokenKey{"d1", 0, 7}));
  EXPECT_EQ(gold_pairs({doc}).size(), 2u);
}

}  // namespace
}  // namespace sgt
