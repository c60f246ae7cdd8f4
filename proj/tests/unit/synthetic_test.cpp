#include "sgt/synthetic.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "sgt/error.hpp"

namespace sgt {
namespace {

std::string conllu_text(const std::vector<Document>& docs) {
  std::ostringstream out;
  write_conllu(out, docs);
  return out.str();
}

TEST(Synthetic, SameSeedSameCorpus) {
  SynthConfig c;
  c.windows = 50;
  const auto a = generate_synthetic(c, 7), b = generate_synthetic(c, 7), other = generate_synthetic(c, 8);
  EXPECT_EQ(a.docs, b.docs);
  EXPECT_EQ(conllu_text(a.docs), conllu_text(b.docs));
  EXPECT_NE(a.docs, other.docs);
}

TEST(Synthetic, LabelIsDeterminedByCueAndTemplate) {
  const auto scheme = LabelScheme::tb_dense();
  for (auto templ : {SynthTemplate::kForward, SynthTemplate::kFronted, SynthTemplate::kCross}) {
    std::set<std::string> cues;
    for (const auto& label : scheme.labels()) cues.insert(synth_cue(templ, label));
    EXPECT_EQ(cues.size(), scheme.size());
  }
  EXPECT_THROW(synth_cue(SynthTemplate::kForward, "Overlap"), Error);
}

TEST(Synthetic, EveryWindowCarriesItsCueInPlace) {
  SynthConfig c;
  c.windows = 300;
  c.scheme = "tbdense";
  const auto scheme = LabelScheme::tb_dense();
  const auto corpus = generate_synthetic(c, 7);
  ASSERT_EQ(corpus.docs.size(), 300u);
  std::map<SynthTemplate, std::size_t> seen;
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    const auto& d = corpus.docs[i];
    const auto templ = corpus.templates[i];
    ++seen[templ];
    ASSERT_EQ(d.pairs.size(), 1u);
    ASSERT_EQ(d.events.size(), 2u);
    const auto& cue = synth_cue(templ, scheme.label(d.pairs[0].label));
    const bool cross = templ == SynthTemplate::kCross;
    ASSERT_EQ(d.sentences.size(), cross ? 2u : 1u);
    const auto& sent = d.sentences.back();
    // Cue attaches to the clause verb: the target in forward/cross, the source when fronted.
    const auto& clause = templ == SynthTemplate::kFronted ? d.events[0] : d.events[1];
    std::size_t hits = 0;
    for (const auto& t : sent) {
      if (t.form != cue) continue;
      ++hits;
      EXPECT_EQ(t.deprel, cross ? "advmod" : "mark");
      EXPECT_EQ(t.head, clause.first);
    }
    EXPECT_EQ(hits, 1u) << d.id;
    for (const auto& s : d.sentences) {
      EXPECT_GE(s.size(), c.min_length);
      EXPECT_LE(s.size(), c.max_length + 3);
    }
    // Source precedes target in surface order.
    const auto& e1 = d.events[0];
    const auto& e2 = d.events[1];
    EXPECT_TRUE(e1.sentence < e2.sentence || (e1.sentence == e2.sentence && e1.first < e2.first));
  }
  EXPECT_EQ(seen.size(), 3u);
}

TEST(Synthetic, MixtureIsHonored) {
  SynthConfig c;
  c.windows = 1000;
  c.label_mixture = {0.5, 0.3, 0.15, 0.05};
  const auto corpus = generate_synthetic(c, 3);
  const auto stats = label_stats(corpus.docs, LabelScheme::matres());
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(stats.rows[i].percent, 100.0 * c.label_mixture[i], 3.0);
}

TEST(Synthetic, QuotasUseLargestRemainder) {
  EXPECT_EQ(synth_quotas({1, 1, 1}, 10), (std::vector<std::size_t>{4, 3, 3}));
  EXPECT_EQ(synth_quotas({0.7, 0.2, 0.1}, 7), (std::vector<std::size_t>{5, 1, 1}));
  EXPECT_THROW(synth_quotas({0, 0}, 3), Error);
}

TEST(Synthetic, RejectsBadConfig) {
  SynthConfig c;
  c.windows = 0;
  try {
    generate_synthetic(c, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::kUsage);
  }
  c.windows = 10;
  c.label_mixture = {1, 1};
  EXPECT_THROW(generate_synthetic(c, 1), Error);
  c.label_mixture = {};
  c.fronted_fraction = 0.8;
  EXPECT_THROW(generate_synthetic(c, 1), Error);
}

}  // namespace
}  // namespace sgt
