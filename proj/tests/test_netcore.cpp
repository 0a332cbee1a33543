#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qls/netcore.hpp"
#include "support.hpp"

using namespace qls;
using qls::testing::central_difference;
using qls::testing::iota_rows;
using qls::testing::random_dataset;
using qls::testing::relative_error;

TEST(NetworkSpec, ParameterLayout) {
  const auto s = NetworkSpec::logistic(30);
  EXPECT_EQ(s.parameter_count(), 31u);
  EXPECT_EQ(init_weights(s, 1).size(), 31);
  const auto deep = NetworkSpec::deep(784, 10, {100, 50, 25});
  EXPECT_EQ(deep.parameter_count(), 784u * 100 + 100 + 100 * 50 + 50 + 50 * 25 + 25 + 25 * 10 + 10);
  const auto blocks = layer_blocks(deep);
  ASSERT_EQ(blocks.size(), 4u);
  EXPECT_EQ(blocks[0].weight_offset, 0u);
  EXPECT_EQ(blocks[0].bias_offset, 78400u);
  EXPECT_EQ(blocks[1].weight_offset, 78500u);
}

TEST(NetworkSpec, Validation) {
  auto s = NetworkSpec::shallow(4, 3);
  s.loss = Loss::cross_entropy;
  EXPECT_THROW(s.validate(), InvalidSpec);
  s = NetworkSpec::deep(4, 3, {});
  s.output = Activation::softmax;
  EXPECT_THROW(s.validate(), InvalidSpec);
  NetworkSpec one{{4}};
  EXPECT_THROW(one.validate(), InvalidSpec);
  EXPECT_NO_THROW(NetworkSpec::shallow(4, 3, 8, true).validate());
}

TEST(InitWeights, SameSeedSameVector) {
  const auto s = NetworkSpec::shallow(20, 5, 7);
  EXPECT_EQ(init_weights(s, 42), init_weights(s, 42));
  EXPECT_NE(init_weights(s, 42), init_weights(s, 43));
}

TEST(InitWeights, XavierVariance) {
  const auto s = NetworkSpec::deep(1000, 10, {500});
  const Vector x = init_weights(s, 3);
  const auto b = layer_blocks(s)[0];
  const Eigen::Index n = static_cast<Eigen::Index>(b.in * b.out);
  const auto block = x.segment(static_cast<Eigen::Index>(b.weight_offset), n);
  const double mean = block.mean();
  const double var = (block.array() - mean).square().sum() / static_cast<double>(n);
  EXPECT_NEAR(var, 2.0 / 1500.0, 0.2 * 2.0 / 1500.0);
  EXPECT_EQ(x.segment(static_cast<Eigen::Index>(b.bias_offset), 500).cwiseAbs().maxCoeff(), 0.0);
}

TEST(InitWeights, StandardNormalMoments) {
  const auto s = NetworkSpec::shallow(100, 10, 200);
  const Vector x = init_weights(s, 8);
  EXPECT_NEAR(x.mean(), 0.0, 0.02);
  EXPECT_NEAR((x.array() - x.mean()).square().mean(), 1.0, 0.02);
}

TEST(BatchLoss, LogisticAtZeroIsLn2) {
  const Dataset d = load_wdbc(qls::testing::wdbc_path());
  const auto s = NetworkSpec::logistic(30);
  const Vector x = Vector::Zero(31);
  EXPECT_NEAR(batch_loss(s, x, d, std::vector<std::size_t>{0, 5, 17, 300}), std::log(2.0), 1e-15);
}

TEST(BatchLoss, SquaredLossOfZeroOutputs) {
  // tanh(0) = 0, so each sample contributes sum_k (0 - t_k)^2 = 1 for one-hot t.
  const Dataset d = random_dataset(6, 4, 10, 1);
  const auto s = NetworkSpec::deep(4, 10, {3});
  const Vector x = Vector::Zero(static_cast<Eigen::Index>(s.parameter_count()));
  EXPECT_DOUBLE_EQ(batch_loss(s, x, d, iota_rows(6)), 1.0);
}

TEST(BatchLoss, FullBatchIsMeanOfEqualHalves) {
  const Dataset d = random_dataset(40, 5, 3, 2);
  const auto s = NetworkSpec::shallow(5, 3, 6);
  const Vector x = init_weights(s, 2);
  const auto all = iota_rows(40);
  const std::vector<std::size_t> lo(all.begin(), all.begin() + 20), hi(all.begin() + 20, all.end());
  EXPECT_NEAR(batch_loss(s, x, d, all), 0.5 * (batch_loss(s, x, d, lo) + batch_loss(s, x, d, hi)), 1e-13);
}

TEST(BatchLoss, NonNegativeForEveryLoss) {
  const Dataset d = random_dataset(30, 6, 4, 3);
  for (const auto& s : {NetworkSpec::shallow(6, 4, 5), NetworkSpec::shallow(6, 4, 5, true),
                        NetworkSpec::deep(6, 4, {5, 3})}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_GE(batch_loss(s, init_weights(s, seed), d, iota_rows(30)), 0.0);
  }
}

TEST(BatchLoss, Errors) {
  const Dataset d = random_dataset(4, 3, 1, 4);
  const auto s = NetworkSpec::logistic(3);
  Vector x = Vector::Zero(4);
  EXPECT_THROW(batch_loss(s, x, d, std::vector<std::size_t>{}), EmptyInput);
  x[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(batch_loss(s, x, d, iota_rows(4)), NonFinite);
  Vector g;
  EXPECT_THROW(batch_grad(s, x, d, iota_rows(4), g), NonFinite);
}

class GradientCheck : public ::testing::TestWithParam<int> {};

TEST_P(GradientCheck, BackpropMatchesCentralDifferences) {
  const int which = GetParam();
  const Dataset d = random_dataset(24, 12, which == 0 ? 1 : 5, 10 + which);
  NetworkSpec s;
  switch (which) {
    case 0: s = NetworkSpec::logistic(12); break;
    case 1: s = NetworkSpec::shallow(12, 5, 9); break;
    case 2: s = NetworkSpec::shallow(12, 5, 9, true); break;
    default: s = NetworkSpec::deep(12, 5, {10, 8, 6}); break;
  }
  const auto rows = iota_rows(24);
  std::mt19937_64 rng(99);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Vector x = init_weights(s, seed);
    Vector g;
    batch_grad(s, x, d, rows, g);
    std::uniform_int_distribution<Eigen::Index> pick(0, x.size() - 1);
    for (int c = 0; c < 20; ++c) {
      const Eigen::Index i = pick(rng);
      EXPECT_LT(relative_error(g[i], central_difference(s, x, d, rows, i)), 1e-5) << "coordinate " << i;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Architectures, GradientCheck, ::testing::Values(0, 1, 2, 3));

TEST(BatchGrad, LossMatchesBatchLossAndIsLinearInSamples) {
  const Dataset d = random_dataset(10, 4, 3, 6);
  const auto s = NetworkSpec::deep(4, 3, {5});
  const Vector x = init_weights(s, 6);
  const auto both = batch_grad(s, x, d, std::vector<std::size_t>{2, 7});
  const auto a = batch_grad(s, x, d, std::vector<std::size_t>{2});
  const auto b = batch_grad(s, x, d, std::vector<std::size_t>{7});
  EXPECT_EQ(both.loss, batch_loss(s, x, d, std::vector<std::size_t>{2, 7}));
  EXPECT_LT((both.grad - 0.5 * (a.grad + b.grad)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BatchGrad, MirroredBalancedBatchHasZeroBiasGradient) {
  Dataset d;
  d.inputs.resize(4, 2);
  d.inputs << 1, 2, -1, -2, 3, -1, -3, 1;
  d.labels = {1, 0, 1, 0};
  d.targets.resize(4, 1);
  d.targets << 1, 0, 1, 0;
  d.train = {0, 1, 2, 3};
  const auto s = NetworkSpec::logistic(2);
  const auto lg = batch_grad(s, Vector::Zero(3), d, iota_rows(4));
  EXPECT_EQ(lg.grad[2], 0.0);
}

TEST(DirectionalDerivative, Examples) {
  const Dataset d = random_dataset(16, 5, 1, 12);
  const auto s = NetworkSpec::logistic(5);
  const Vector x = init_weights(s, 12);
  const auto rows = iota_rows(16);
  const auto lg = batch_grad(s, x, d, rows);
  EXPECT_NEAR(directional_derivative(lg.grad, -lg.grad), -lg.grad.squaredNorm(), 1e-15);
  Vector ortho = Vector::Zero(lg.grad.size());
  ortho[0] = lg.grad[1];
  ortho[1] = -lg.grad[0];
  EXPECT_NEAR(directional_derivative(lg.grad, ortho), 0.0, 1e-15);
  const Vector dir = -lg.grad;
  const double h = 1e-5;
  const double fd = (batch_loss(s, x + h * dir, d, rows) - batch_loss(s, x - h * dir, d, rows)) / (2 * h);
  EXPECT_LT(relative_error(directional_derivative(lg.grad, dir), fd), 1e-5);
  EXPECT_THROW(directional_derivative(lg.grad, Vector::Zero(2)), DimensionMismatch);
}

TEST(ClassificationError, Examples) {
  Dataset d;
  d.inputs.resize(2, 1);
  d.inputs << 1, -1;
  d.labels = {1, 0};
  d.targets.resize(2, 1);
  d.targets << 1, 0;
  d.train = {0, 1};
  const auto s = NetworkSpec::logistic(1);
  Vector perfect(2);
  perfect << 10, 0;
  EXPECT_EQ(classification_error(s, perfect, d, Split::train), 0.0);
  Vector constant(2);
  constant << 0, 1;
  EXPECT_EQ(classification_error(s, constant, d, Split::train), 0.5);
  EXPECT_TRUE(std::isnan(classification_error(s, constant, d, Split::test)));
}

TEST(ClassificationError, RandomTenClassWeightsAreAtChance) {
  // Uniform labels independent of the inputs, so any weights sit at 0.9.
  const Dataset d = random_dataset(10000, 20, 10, 21, 1);
  const auto s = NetworkSpec::shallow(20, 10, 16);
  const double e = classification_error(s, init_weights(s, 21), d, Split::test);
  EXPECT_NEAR(e, 0.9, 0.03);
}

TEST(Checkpoint, RoundTrip) {
  const auto dir = qls::testing::scratch_dir("ckpt");
  const auto s = NetworkSpec::deep(7, 3, {5, 4});
  const Vector x = init_weights(s, 31);
  save_weights(dir / "w.bin", s, x);
  const auto [s2, x2] = load_weights(dir / "w.bin");
  EXPECT_EQ(s2, s);
  EXPECT_EQ(x2, x);
  EXPECT_EQ(std::filesystem::file_size(dir / "w.bin"), 4 + 4 + 4 + 4 * 8 + 5 + 8 + x.size() * 8);
  {
    std::ofstream out(dir / "bad.bin", std::ios::binary);
    out << "NOPE";
  }
  EXPECT_THROW(load_weights(dir / "bad.bin"), BadMagic);
  EXPECT_THROW(save_weights(dir / "w2.bin", s, Vector::Zero(3)), DimensionMismatch);
}
