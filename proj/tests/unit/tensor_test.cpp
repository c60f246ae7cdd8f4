#include "sgt/tensor.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sgt/error.hpp"
#include "test_util.hpp"

namespace sgt {
namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool grad = true) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v), grad);
}

void expect_gradient(Tensor& param, const std::function<Tensor()>& loss_fn, double tol = 1e-6) {
  param.zero_grad();
  backward(loss_fn());
  const std::vector<double> analytic(param.grad().begin(), param.grad().end());
  const auto numeric = test::numeric_gradient(param, [&] { return loss_fn().item(); });
  for (std::size_t i = 0; i < numeric.size(); ++i) EXPECT_NEAR(analytic[i], numeric[i], tol) << "entry " << i;
}

// Column-weighted sum so output columns receive distinct upstream gradients.
Tensor probe(const Tensor& y) {
  std::vector<double> w(y.cols());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.17 * static_cast<double>(i);
  return sum(matmul(y, Tensor::from({y.cols(), 1}, std::move(w))));
}

TEST(Tensor, SoftmaxMatchesHighPrecisionOracle) {
  const auto p = softmax_rows(Tensor::from({1, 3}, {1.0, 2.0, 3.0}));
  EXPECT_NEAR(p.at(0, 0), 0.090030573170380457998, 1e-15);
  EXPECT_NEAR(p.at(0, 1), 0.24472847105479765247, 1e-15);
  EXPECT_NEAR(p.at(0, 2), 0.66524095577482188953, 1e-15);
}

TEST(Tensor, SoftmaxIsShiftStableForLargeLogits) {
  const auto p = softmax_rows(Tensor::from({1, 2}, {1000.0, 1000.0}));
  EXPECT_DOUBLE_EQ(p.at(0, 0), 0.5);
}

TEST(Tensor, SoftmaxRejectsNonFiniteRow) {
  const auto bad = Tensor::from({2, 2}, {0.0, 1.0, NAN, 0.0});
  try {
    softmax_rows(bad);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(Tensor, LayerNormMatchesOracle) {
  const auto y = layer_norm(Tensor::from({1, 4}, {1, 2, 4, 7}), Tensor::from({4}, {1, 0.5, 2, -1}),
                            Tensor::from({4}, {0, 1, 0, 0.5}), 1e-12);
  EXPECT_NEAR(y.at(0, 0), -1.091089451179857993, 1e-13);
  EXPECT_NEAR(y.at(0, 1), 0.67267316464604260209, 1e-13);
  EXPECT_NEAR(y.at(0, 2), 0.43643578047194319722, 1e-13);
  EXPECT_NEAR(y.at(0, 3), -1.0275252316518011903, 1e-13);
}

TEST(Tensor, WeightedCrossEntropyHandSum) {
  const auto probs = Tensor::from({2, 3}, {0.7, 0.2, 0.1, 0.25, 0.25, 0.5});
  const std::size_t gold[] = {0, 2};
  const auto l = weighted_cross_entropy(probs, gold, Tensor::from({3}, {2.0, 1.0, 0.5}));
  EXPECT_NEAR(l.item(), 1.0599234781574374125, 1e-14);
}

TEST(Tensor, WeightedCrossEntropyRejectsOutOfRangeGold) {
  const std::size_t gold[] = {3};
  EXPECT_THROW(weighted_cross_entropy(Tensor::from({1, 3}, {0.2, 0.3, 0.5}), gold, Tensor::from({3}, {1, 1, 1})),
               Error);
}

TEST(Tensor, LinearComputesXWtPlusB) {
  const auto y = linear(Tensor::from({1, 2}, {1, 2}), Tensor::from({3, 2}, {1, 0, 0, 1, 1, 1}), Tensor::from({3}, {0.5, 0, -1}));
  EXPECT_DOUBLE_EQ(y.at(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(y.at(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(y.at(0, 2), 2.0);
}

TEST(Tensor, MatmulShapeMismatchThrows) {
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), Error);
}

TEST(Tensor, BackwardNeedsScalar) {
  const auto x = Tensor::zeros({2, 2}, true);
  EXPECT_THROW(backward(scale(x, 2.0)), Error);
}

TEST(Tensor, LeafGradientsAccumulateUntilZeroed) {
  auto x = Tensor::from({2}, {1.0, 2.0}, true);
  backward(sum(scale(x, 3.0)));
  backward(sum(scale(x, 3.0)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
  x.zero_grad();
  EXPECT_DOUBLE_EQ(x.grad()[1], 0.0);
}

TEST(Tensor, ConstantsRecordNoGraph) {
  const auto y = add(Tensor::from({1}, {1.0}), Tensor::from({1}, {2.0}));
  EXPECT_FALSE(y.requires_grad());
}

TEST(Tensor, OperationOutputsAreReadOnly) {
  auto y = add(Tensor::from({1}, {1.0}, true), Tensor::from({1}, {2.0}));
  EXPECT_THROW(y.mutable_data(), Error);
}

TEST(Tensor, ReusedNodeGradientSumsPaths) {
  auto x = Tensor::from({1, 1}, {3.0}, true);
  const auto y = matmul(x, x);  // x^2
  backward(sum(add(y, x)));     // d/dx (x^2 + x) = 2x + 1
  EXPECT_DOUBLE_EQ(x.grad()[0], 7.0);
}

TEST(Tensor, AttentionMatchesScalarOracle) {
  const auto q = Tensor::from({1, 2}, {1, 0});
  const auto k = Tensor::from({3, 2}, {1, 0, 0, 1, 1, 1});
  const auto v = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 7});
  const auto r = segment_attention(q, k, v, {{0, 1, 2}}, 1.0 / std::sqrt(2.0));
  EXPECT_NEAR(r.weights[0][0], 0.40111209267978591031, 1e-15);
  EXPECT_NEAR(r.weights[0][1], 0.19777581464042817937, 1e-15);
  EXPECT_NEAR(r.output.at(0, 0), 3.0, 1e-14);
  EXPECT_NEAR(r.output.at(0, 1), 4.4011120926797859103, 1e-14);
}

TEST(Tensor, AttentionOverOneKeyCopiesItsValue) {
  const auto r = segment_attention(Tensor::from({1, 2}, {5, -3}), Tensor::from({1, 2}, {2, 2}),
                                   Tensor::from({1, 3}, {1, 2, 3}), {{0}}, 0.7);
  EXPECT_DOUBLE_EQ(r.weights[0][0], 1.0);
  EXPECT_DOUBLE_EQ(r.output.at(0, 2), 3.0);
}

TEST(Tensor, AttentionRejectsEmptyOrDuplicateKeyLists) {
  const auto q = Tensor::zeros({1, 2}), k = Tensor::zeros({2, 2}), v = Tensor::zeros({2, 2});
  EXPECT_THROW(segment_attention(q, k, v, {{}}, 1.0), Error);
  EXPECT_THROW(segment_attention(q, k, v, {{1, 1}}, 1.0), Error);
}

class OpGradient : public ::testing::Test {
 protected:
  std::mt19937_64 rng{42};
};

TEST_F(OpGradient, Matmul) {
  auto a = random_tensor({2, 3}, rng), b = random_tensor({3, 2}, rng);
  expect_gradient(a, [&] { return probe(matmul(a, b)); });
  expect_gradient(b, [&] { return probe(matmul(a, b)); });
}

TEST_F(OpGradient, Linear) {
  auto x = random_tensor({3, 4}, rng), w = random_tensor({2, 4}, rng), b = random_tensor({2}, rng);
  for (Tensor* t : {&x, &w, &b}) expect_gradient(*t, [&] { return probe(linear(x, w, b)); });
}

TEST_F(OpGradient, ConcatSliceGather) {
  auto a = random_tensor({3, 2}, rng), b = random_tensor({3, 1}, rng);
  const std::size_t rows[] = {2, 0, 2};
  auto f = [&] { return probe(gather_rows(slice_cols(concat_cols({a, b, a}), 1, 3), rows)); };
  expect_gradient(a, f);
  expect_gradient(b, f);
  auto c = random_tensor({1, 2}, rng);
  expect_gradient(c, [&] { return probe(concat_rows({a, c})); });
}

TEST_F(OpGradient, SoftmaxAndCrossEntropy) {
  auto x = random_tensor({3, 4}, rng);
  const std::size_t gold[] = {1, 3, 0};
  const auto w = Tensor::from({4}, {0.5, 1.5, 1.0, 2.0});
  expect_gradient(x, [&] { return weighted_cross_entropy(softmax_rows(x), gold, w); });
  expect_gradient(x, [&] { return probe(softmax_rows(x)); });
}

TEST_F(OpGradient, LayerNorm) {
  auto x = random_tensor({2, 5}, rng), g = random_tensor({5}, rng), b = random_tensor({5}, rng);
  for (Tensor* t : {&x, &g, &b}) expect_gradient(*t, [&] { return probe(layer_norm(x, g, b, 1e-12)); }, 1e-5);
}

TEST_F(OpGradient, SegmentAttention) {
  auto q = random_tensor({3, 2}, rng), k = random_tensor({4, 2}, rng), v = random_tensor({4, 3}, rng);
  const std::vector<std::vector<std::size_t>> lists = {{0, 1}, {3}, {2, 0, 1, 3}};
  for (Tensor* t : {&q, &k, &v}) {
    expect_gradient(*t, [&] { return probe(segment_attention(q, k, v, lists, 0.8).output); });
  }
}

TEST_F(OpGradient, AddScaleSum) {
  auto a = random_tensor({2, 2}, rng), b = random_tensor({2, 2}, rng);
  expect_gradient(a, [&] { return sum(scale(add(a, b), -2.5)); });
}

TEST(Tensor, FaultHookCorruptsGradient) {
  auto x = Tensor::from({1, 2}, {0.2, -0.4}, true);
  testing::set_backward_fault("scale", 2.0);
  backward(probe(scale(x, 3.0)));
  testing::clear_backward_fault();
  const double corrupted = x.grad()[0];
  x.zero_grad();
  backward(probe(scale(x, 3.0)));
  EXPECT_DOUBLE_EQ(corrupted, 2.0 * x.grad()[0]);
}

}  // namespace
}  // namespace sgt
