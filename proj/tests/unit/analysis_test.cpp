#include "sgt/analysis.hpp"

#include <gtest/gtest.h>

#include <random>

#include "consistency_fixture.hpp"
#include "sgt/error.hpp"
#include "test_util.hpp"

namespace sgt {
namespace {

const LabelScheme kMatres = LabelScheme::matres();
constexpr std::size_t kBefore = 0, kAfter = 1, kSimultaneous = 2, kVague = 3;

TEST(Consistency, TimelinePredictionsHaveNoViolations) {
  std::mt19937_64 rng(17);
  for (const auto& scheme : {LabelScheme::matres(), LabelScheme::tb_dense()}) {
    for (int trial = 0; trial < 30; ++trial) {
      const auto preds = test::timeline_predictions(3 + rng() % 8, rng, scheme);
      const auto r = consistency_report(preds, scheme);
      EXPECT_EQ(r.symmetry, 0u);
      EXPECT_EQ(r.transitivity, 0u);
      EXPECT_EQ(r.simultaneous_chains, 0u);
    }
  }
}

TEST(Consistency, BeforeCycleCountsOnce) {
  const std::vector<RelationPrediction> p = {{"a", "b", kBefore}, {"b", "c", kBefore}, {"c", "a", kBefore}};
  const auto r = consistency_report(p, kMatres);
  EXPECT_EQ(r.transitivity, 1u);
  EXPECT_EQ(r.checked_triples, 1u);
  EXPECT_EQ(r.symmetry, 0u);
}

TEST(Consistency, ReverseLinkIsReadThroughItsConverse) {
  // a<b, b<c and c->a After means a<c: consistent.
  const std::vector<RelationPrediction> ok = {{"a", "b", kBefore}, {"b", "c", kBefore}, {"c", "a", kAfter}};
  EXPECT_EQ(consistency_report(ok, kMatres).transitivity, 0u);
  const std::vector<RelationPrediction> vague = {{"a", "b", kBefore}, {"b", "c", kBefore}, {"a", "c", kVague}};
  EXPECT_EQ(consistency_report(vague, kMatres).transitivity, 1u);
}

TEST(Consistency, SymmetryViolation) {
  const std::vector<RelationPrediction> p = {{"a", "b", kBefore}, {"b", "a", kBefore}, {"c", "d", kAfter},
                                             {"d", "c", kBefore}};
  const auto r = consistency_report(p, kMatres);
  EXPECT_EQ(r.symmetry, 1u);
  EXPECT_EQ(r.checked_pairs, 2u);
}

TEST(Consistency, SimultaneousChain) {
  const std::vector<RelationPrediction> p = {
      {"a", "b", kSimultaneous}, {"b", "c", kBefore}, {"a", "c", kVague}};
  const auto r = consistency_report(p, kMatres);
  EXPECT_EQ(r.simultaneous_chains, 1u);
  EXPECT_EQ(r.transitivity, 0u);
}

TEST(Consistency, EmptyInput) {
  const auto r = consistency_report({}, kMatres);
  EXPECT_EQ(r.checked_pairs + r.checked_triples, 0u);
}

TEST(Width, BucketsAndScores) {
  EXPECT_EQ(width_bucket(9), 0u);
  EXPECT_EQ(width_bucket(10), 1u);
  EXPECT_EQ(width_bucket(20), 1u);
  EXPECT_EQ(width_bucket(21), 2u);
  const std::vector<WidthItem> items = {{5, kBefore, kBefore}, {15, kAfter, kBefore}, {25, kBefore, kBefore},
                                        {3, kVague, kBefore}};
  const auto b = context_width_report(items, kMatres);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].name, "<10");
  EXPECT_EQ(b[0].count, 2u);
  EXPECT_EQ(b[1].count, 1u);
  EXPECT_EQ(b[2].count, 1u);
  EXPECT_EQ(b[0].score->f1, 1.0);
  EXPECT_EQ(b[1].score->f1, 0.0);
  EXPECT_EQ(b[2].score->precision, 1.0);
}

TEST(Width, EmptyBucketHasNoScore) {
  const std::vector<WidthItem> items = {{5, kBefore, kBefore}};
  const auto b = context_width_report(items, kMatres);
  EXPECT_TRUE(b[0].score.has_value());
  EXPECT_FALSE(b[1].score.has_value());
  EXPECT_EQ(b[2].count, 0u);
}

class CueFixture : public ::testing::Test {
 protected:
  Document doc = test::two_sentence_doc();
  Vocabularies vocabs = build_vocabs({doc});
  std::vector<std::size_t> window{0};
  SentenceGraph graph = build_graph(doc, window, vocabs);
  SyntaxContext ctx = syntax_context(graph, graph.node_of(0, 3), graph.node_of(0, 7));

  std::size_t edge_into(int token) const { return graph.in_edge(graph.node_of(0, token)); }
};

TEST_F(CueFixture, ProvenanceFollowsPathMembership) {
  EXPECT_EQ(cue_provenance(ctx, edge_into(7), graph), CueProvenance::kBoth);      // advcl on the path
  EXPECT_EQ(cue_provenance(ctx, edge_into(4), graph), CueProvenance::kNeighbor);  // mark off the path
  EXPECT_EQ(cue_provenance_name(CueProvenance::kPath), "path");
}

TEST_F(CueFixture, TopKAveragesHeadsAndRanks) {
  CueInput in{&graph, &ctx, {edge_into(4), edge_into(7), edge_into(6)}, {{0.6, 0.3, 0.1}, {0.8, 0.1, 0.1}}};
  const auto r = cue_report(std::span<const CueInput>(&in, 1), 2);
  ASSERT_EQ(r.size(), 1u);
  ASSERT_EQ(r[0].top.size(), 2u);
  EXPECT_FALSE(r[0].truncated);
  EXPECT_EQ(r[0].top[0].edge, edge_into(4));
  EXPECT_DOUBLE_EQ(r[0].top[0].weight, 0.7);
  EXPECT_DOUBLE_EQ(r[0].top[1].weight, 0.2);
  EXPECT_EQ(r[0].top[0].triple.relation, vocabs.deprel_id("mark"));
  EXPECT_NEAR(r[0].total_weight, 1.0, 1e-12);
}

TEST_F(CueFixture, KBeyondPhiReturnsAllAndFlags) {
  CueInput in{&graph, &ctx, {edge_into(7)}, {{1.0}}};
  const auto r = cue_report(std::span<const CueInput>(&in, 1), 5);
  ASSERT_EQ(r[0].top.size(), 1u);
  EXPECT_TRUE(r[0].truncated);
  EXPECT_DOUBLE_EQ(r[0].top[0].weight, 1.0);
  EXPECT_THROW(cue_report(std::span<const CueInput>(&in, 1), 0), Error);
}

}  // namespace
}  // namespace sgt
