#include "sgt/checkpoint.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sgt/error.hpp"

namespace sgt {
namespace {

Checkpoint sample() {
  Checkpoint c;
  c.meta["scheme"] = "matres";
  c.meta["note"] = "two words";
  c.params.emplace_back("layer0/w", Tensor::from({2, 2}, {0.1, -1.0 / 3.0, 1e-300, M_PI}));
  c.params.emplace_back("bias", Tensor::from({3}, {0.0, -0.0, 123456789.123456789}));
  return c;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  std::stringstream ss;
  write_checkpoint(ss, sample());
  const auto back = read_checkpoint(ss);
  EXPECT_EQ(back.meta, sample().meta);
  ASSERT_EQ(back.params.size(), 2u);
  const auto& w = back.find("layer0/w");
  EXPECT_EQ(w.shape(), (Shape{2, 2}));
  const auto orig = sample().find("layer0/w");
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(w.data()[i], orig.data()[i]);
  EXPECT_EQ(back.find("bias").data()[2], 123456789.123456789);
}

TEST(Checkpoint, WriteIsDeterministic) {
  std::stringstream a, b;
  write_checkpoint(a, sample());
  write_checkpoint(b, sample());
  EXPECT_EQ(a.str(), b.str());
}

TEST(Checkpoint, AssignCopiesValues) {
  auto target = Tensor::zeros({2, 2}, true);
  assign_parameters({{"layer0/w", target}}, sample());
  EXPECT_DOUBLE_EQ(target.data()[0], 0.1);
}

TEST(Checkpoint, AssignRejectsShapeMismatch) {
  auto target = Tensor::zeros({4}, true);
  try {
    assign_parameters({{"layer0/w", target}}, sample());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("layer0/w"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, AssignRejectsMissingName) {
  EXPECT_THROW(assign_parameters({{"nope", Tensor::zeros({1}, true)}}, sample()), Error);
}

TEST(Checkpoint, TruncatedInputFails) {
  std::stringstream ss;
  write_checkpoint(ss, sample());
  auto text = ss.str();
  std::stringstream cut(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_checkpoint(cut), Error);
  std::stringstream junk("not-a-checkpoint\n");
  EXPECT_THROW(read_checkpoint(junk), Error);
}

}  // namespace
}  // namespace sgt
