#include <cmath>

#include <gtest/gtest.h>

#include "phantom/benchmark_data.hpp"
#include "phantom/feature_extractors.hpp"

namespace phantom {
namespace {

FeatureBundle constant_bundle(Eigen::Index m, double v) {
  FeatureBundle b;
  for (auto& block : b.blocks) block = Matrix::Constant(m, kEmbeddingDim, v);
  return b;
}

FeatureBundle random_bundle(Eigen::Index m, std::uint64_t seed) {
  Rng rng(seed);
  FeatureBundle b;
  for (auto& block : b.blocks) block = rng.normal_matrix(m, kEmbeddingDim);
  return b;
}

TEST(Extract, ZeroBatchGivesTanhOfBias) {
  const ExtractorParams params(42);
  const auto bundle = extract(Matrix::Zero(4, kNumFeatures), params);
  for (int b = 0; b < kNumBlocks; ++b) {
    ASSERT_EQ(bundle.blocks[b].rows(), 4);
    ASSERT_EQ(bundle.blocks[b].cols(), kEmbeddingDim);
    for (Eigen::Index r = 0; r < 4; ++r) {
      for (int k = 0; k < kEmbeddingDim; ++k) EXPECT_EQ(bundle.blocks[b](r, k), std::tanh(params.bias(b)(0, k)));
    }
  }
}

TEST(Extract, IdenticalRowsGiveIdenticalEmbeddings) {
  const ExtractorParams params(1);
  Rng rng(3);
  Matrix x(3, kNumFeatures);
  x.row(0) = rng.normal_matrix(1, kNumFeatures);
  x.row(1) = rng.normal_matrix(1, kNumFeatures);
  x.row(2) = x.row(0);
  const auto bundle = extract(x, params);
  for (int b = 0; b < kNumBlocks; ++b) EXPECT_TRUE(bundle.blocks[b].row(0) == bundle.blocks[b].row(2));
}

TEST(Extract, MatchesScalarReimplementation) {
  const ExtractorParams params(42);
  Rng rng(9);
  const Matrix x = rng.normal_matrix(1, kNumFeatures);
  const auto bundle = extract(x, params);
  const auto map = default_block_map();
  for (int b = 0; b < kNumBlocks; ++b) {
    int width = 0;
    for (int c = 0; c < kNumFeatures; ++c) width += map[c] == static_cast<Block>(b);
    for (int k = 0; k < kEmbeddingDim; ++k) {
      double acc = params.bias(b)(0, k);
      int j = 0;
      for (int c = 0; c < kNumFeatures; ++c) {
        if (map[c] != static_cast<Block>(b)) continue;
        acc += x(0, c) * params.weights(b)(j, k);
        ++j;
      }
      ASSERT_EQ(j, width);
      EXPECT_NEAR(bundle.blocks[b](0, k), std::tanh(acc), 1e-6);
    }
  }
}

TEST(Extract, RejectsWrongColumnCount) {
  EXPECT_THROW(extract(Matrix::Zero(2, 39), ExtractorParams(1)), ShapeError);
}

TEST(ExtractorParams, DeterministicInSeed) {
  EXPECT_EQ(ExtractorParams(5).checksum(), ExtractorParams(5).checksum());
  EXPECT_NE(ExtractorParams(5).checksum(), ExtractorParams(6).checksum());
  EXPECT_EQ(ExtractorParams(5).weights(0).rows(), 16);
  EXPECT_EQ(ExtractorParams(5).weights(1).rows(), 12);
  EXPECT_EQ(ExtractorParams(5).weights(2).rows(), 12);
}

TEST(ExtractBackward, MatchesFiniteDifferences) {
  const ExtractorParams params(2);
  Rng rng(4);
  const Matrix x = rng.normal_matrix(3, kNumFeatures);
  const auto w = random_bundle(3, 5);
  auto objective = [&](const Matrix& in) {
    const auto b = extract(in, params);
    double s = 0.0;
    for (int i = 0; i < kNumBlocks; ++i) s += (b.blocks[i].array() * w.blocks[i].array()).sum();
    return s;
  };
  const Matrix dx = extract_backward(extract(x, params), w, params);
  const double h = 1e-6;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < kNumFeatures; c += 3) {
      Matrix up = x, down = x;
      up(r, c) += h;
      down(r, c) -= h;
      EXPECT_NEAR(dx(r, c), (objective(up) - objective(down)) / (2 * h), 1e-6);
    }
  }
}

TEST(FeatureMatching, IdenticalBundlesGiveZero) {
  const auto a = random_bundle(8, 1);
  EXPECT_EQ(feature_matching_distance(a, a, {1, 1, 1}), 0.0);
}

TEST(FeatureMatching, ZeroWeightsGiveZero) {
  EXPECT_EQ(feature_matching_distance(random_bundle(8, 1), random_bundle(8, 2), {0, 0, 0}), 0.0);
}

TEST(FeatureMatching, UnitVectorInOneBlock) {
  auto a = constant_bundle(1, 0.0);
  auto b = constant_bundle(1, 0.0);
  b.blocks[1](0, 7) = 1.0;
  EXPECT_DOUBLE_EQ(feature_matching_distance(a, b, {1, 1, 1}), 1.0);
}

TEST(FeatureMatching, NonnegativeSymmetricAndLinearInWeights) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = random_bundle(6, 2 * s);
    const auto b = random_bundle(6, 2 * s + 1);
    const BlockWeights w{0.5, 1.5, 2.0};
    const double d = feature_matching_distance(a, b, w);
    EXPECT_GE(d, 0.0);
    EXPECT_NEAR(d, feature_matching_distance(b, a, w), 1e-12);
    EXPECT_NEAR(feature_matching_distance(a, b, {1.5, 4.5, 6.0}), 3.0 * d, 1e-12);
  }
}

TEST(FeatureMatching, ShapeMismatchIsShapeError) {
  EXPECT_THROW(feature_matching_distance(random_bundle(3, 1), random_bundle(4, 1), {1, 1, 1}), ShapeError);
}

TEST(FeatureMatching, GradientMatchesFiniteDifferences) {
  const auto a = random_bundle(4, 10);
  const auto b = random_bundle(4, 11);
  const BlockWeights w{1.0, 0.5, 2.0};
  const auto g = feature_matching_grad_b(a, b, w);
  const double h = 1e-6;
  for (int i = 0; i < kNumBlocks; ++i) {
    for (Eigen::Index r = 0; r < 4; ++r) {
      for (int k = 0; k < kEmbeddingDim; k += 5) {
        auto up = b, down = b;
        up.blocks[i](r, k) += h;
        down.blocks[i](r, k) -= h;
        const double fd = (feature_matching_distance(a, up, w) - feature_matching_distance(a, down, w)) / (2 * h);
        EXPECT_NEAR(g.blocks[i](r, k), fd, 1e-6);
      }
    }
  }
}

}  // namespace
}  // namespace phantom
