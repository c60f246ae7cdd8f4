#include "sgt/encoder.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "sgt/error.hpp"
#include "test_util.hpp"

namespace sgt {
namespace {

class EncoderFixture : public ::testing::Test {
 protected:
  Document doc = test::two_sentence_doc();
  Vocabularies vocabs = build_vocabs({doc});
  std::vector<std::size_t> both{0, 1};
};

TEST_F(EncoderFixture, RowsAreTokenVectorThenOneHotPos) {
  EncoderConfig c;
  c.token_width = 4;
  const Encoder enc(c, vocabs, 1);
  EXPECT_EQ(enc.config().pos_width, vocabs.upos_count());
  const auto x = enc.encode_window(doc, both);
  ASSERT_EQ(x.shape(), (Shape{12, 4 + vocabs.upos_count()}));
  for (std::size_t r = 0; r < 12; ++r) {
    double pos_sum = 0;
    for (std::size_t j = 4; j < x.cols(); ++j) pos_sum += x.at(r, j);
    EXPECT_DOUBLE_EQ(pos_sum, 1.0);
  }
  // "barked" is row 2; its token block is its embedding row.
  const auto id = vocabs.token_id("barked");
  for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(x.at(2, j), enc.embedding().at(id, j));
  EXPECT_DOUBLE_EQ(x.at(2, 4 + vocabs.upos_id("VERB")), 1.0);
}

TEST_F(EncoderFixture, EmbeddingInitWithinScale) {
  EncoderConfig c;
  c.init_scale = 0.25;
  const Encoder enc(c, vocabs, 3);
  for (double v : enc.embedding().data()) EXPECT_LE(std::abs(v), 0.25);
}

TEST_F(EncoderFixture, UnknownFormsShareTheUnknownRow) {
  const Encoder enc(EncoderConfig{}, vocabs, 1);
  auto other = doc;
  other.sentences[0][1].form = "giraffe";
  other.sentences[0][5].form = "zebra";
  const std::size_t w[] = {0};
  const auto x = enc.encode_window(other, w);
  for (std::size_t j = 0; j < enc.config().token_width; ++j) EXPECT_EQ(x.at(1, j), x.at(5, j));
}

TEST_F(EncoderFixture, GradientReachesOnlyUsedEmbeddingRows) {
  const Encoder enc(EncoderConfig{}, vocabs, 1);
  const std::size_t w[] = {1};
  backward(sum(enc.encode_window(doc, w)));
  const auto g = enc.embedding().grad();
  const auto width = enc.config().token_width;
  const auto slept = vocabs.token_id("slept"), dog = vocabs.token_id("dog");
  EXPECT_DOUBLE_EQ(g[slept * width], 1.0);
  EXPECT_DOUBLE_EQ(g[dog * width], 0.0);
  EXPECT_DOUBLE_EQ(g[vocabs.token_id(".") * width], 1.0);
}

TEST_F(EncoderFixture, PrecomputedBackend) {
  EncoderConfig c;
  c.backend = EncoderBackend::kPrecomputed;
  c.token_width = 2;
  Encoder enc(c, vocabs, 1);
  EXPECT_TRUE(enc.named_parameters().empty());
  auto vectors = std::make_shared<PrecomputedVectors>(2);
  for (std::size_t s = 0; s < 2; ++s)
    for (const auto& t : doc.sentences[s]) vectors->set(doc.id, s, t.index, {double(s), double(t.index)});
  const auto path = (std::filesystem::temp_directory_path() / "sgt_encoder_test.vec").string();
  vectors->save(path);
  auto loaded = std::make_shared<PrecomputedVectors>(PrecomputedVectors::load(path, 2));
  std::filesystem::remove(path);
  EXPECT_EQ(loaded->size(), 12u);
  enc.set_precomputed(loaded);
  const auto x = enc.encode_window(doc, both);
  EXPECT_DOUBLE_EQ(x.at(9, 0), 1.0);
  EXPECT_DOUBLE_EQ(x.at(9, 1), 2.0);
  EXPECT_FALSE(x.requires_grad());

  auto partial = std::make_shared<PrecomputedVectors>(2);
  enc.set_precomputed(partial);
  EXPECT_THROW(enc.encode_window(doc, both), Error);
  EXPECT_THROW(enc.set_precomputed(std::make_shared<PrecomputedVectors>(3)), Error);
  EXPECT_THROW(vectors->set("d1", 0, 1, {1.0}), Error);
}

TEST(Encoder, BackendNames) {
  EXPECT_EQ(parse_encoder_backend("precomputed"), EncoderBackend::kPrecomputed);
  EXPECT_EQ(encoder_backend_name(parse_encoder_backend("embedding")), "embedding");
  EXPECT_THROW(parse_encoder_backend("bert"), Error);
}

}  // namespace
}  // namespace sgt
