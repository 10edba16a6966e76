#pragma once

// Frozen domain feature extractors F_network, F_temporal, F_behavioral and the
// batch-mean feature-matching distance.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "phantom/error.hpp"
#include "phantom/random.hpp"
#include "phantom/schema.hpp"
#include "phantom/tensor.hpp"

namespace phantom {

using BlockWeights = std::array<double, kNumBlocks>;

struct FeatureBundle {
  std::array<Matrix, kNumBlocks> blocks;  // each m x 32

  const Matrix& network() const { return blocks[0]; }
  const Matrix& temporal() const { return blocks[1]; }
  const Matrix& behavioral() const { return blocks[2]; }
  Eigen::Index rows() const { return blocks[0].rows(); }
};

/// Random affine projection per block followed by tanh. Constructed once from
/// a seed and never updated; only const access is exposed.
class ExtractorParams {
 public:
  static constexpr const char* kNonlinearity = "tanh";

  ExtractorParams() = default;

  ExtractorParams(std::uint64_t seed, const BlockMap& block_map = default_block_map())
      : seed_(seed), block_map_(block_map) {
    for (int b = 0; b < kNumBlocks; ++b) {
      columns_[b] = block_columns(block_map_, static_cast<Block>(b));
      const auto width = static_cast<Eigen::Index>(columns_[b].size());
      Rng rng(child_seed(seed, static_cast<std::uint64_t>(b)));
      weights_[b] = rng.normal_matrix(width, kEmbeddingDim) / std::sqrt(static_cast<double>(width));
      bias_[b] = 0.1 * rng.normal_matrix(1, kEmbeddingDim);
    }
  }

  std::uint64_t seed() const { return seed_; }
  const BlockMap& block_map() const { return block_map_; }
  const std::vector<int>& columns(int block) const { return columns_[block]; }
  const Matrix& weights(int block) const { return weights_[block]; }
  const Matrix& bias(int block) const { return bias_[block]; }

  std::uint64_t checksum() const {
    Checksum sum;
    for (int b = 0; b < kNumBlocks; ++b) {
      sum.add(weights_[b]);
      sum.add(bias_[b]);
    }
    return sum.value();
  }

 private:
  std::uint64_t seed_ = 0;
  BlockMap block_map_ = default_block_map();
  std::array<std::vector<int>, kNumBlocks> columns_;
  std::array<Matrix, kNumBlocks> weights_;
  std::array<Matrix, kNumBlocks> bias_;
};

namespace detail {

inline Matrix gather_columns(const Matrix& x, const std::vector<int>& cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
  return out;
}

}  // namespace detail

inline FeatureBundle extract(const Matrix& batch, const ExtractorParams& params) {
  if (batch.cols() != kNumFeatures) {
    throw ShapeError("extract expects 40 columns, got " + std::to_string(batch.cols()));
  }
  FeatureBundle out;
  for (int b = 0; b < kNumBlocks; ++b) {
    const Matrix slice = detail::gather_columns(batch, params.columns(b));
    Matrix pre = slice * params.weights(b);
    pre.rowwise() += params.bias(b).row(0);
    out.blocks[b] = pre.array().tanh().matrix();
  }
  return out;
}

/// Chains block-embedding gradients back to the 40 input columns. `bundle` is
/// the output of extract() on the same batch.
inline Matrix extract_backward(const FeatureBundle& bundle, const FeatureBundle& grad,
                               const ExtractorParams& params) {
  Matrix dx = Matrix::Zero(bundle.rows(), kNumFeatures);
  for (int b = 0; b < kNumBlocks; ++b) {
    const Matrix dpre =
        (grad.blocks[b].array() * (1.0 - bundle.blocks[b].array().square())).matrix();
    const Matrix dslice = dpre * params.weights(b).transpose();
    const auto& cols = params.columns(b);
    for (std::size_t j = 0; j < cols.size(); ++j) dx.col(cols[j]) += dslice.col(static_cast<Eigen::Index>(j));
  }
  return dx;
}

namespace detail {

inline void check_bundles(const FeatureBundle& a, const FeatureBundle& b, const BlockWeights& omega) {
  for (int i = 0; i < kNumBlocks; ++i) {
    require_same_shape(a.blocks[i], b.blocks[i], "feature bundle");
    if (!(omega[i] >= 0.0)) throw InputError("feature-matching weights must be nonnegative");
  }
}

}  // namespace detail

/// Sum over blocks of omega_i * || mean_rows(a_i) - mean_rows(b_i) ||_2.
inline double feature_matching_distance(const FeatureBundle& a, const FeatureBundle& b,
                                        const BlockWeights& omega) {
  detail::check_bundles(a, b, omega);
  double total = 0.0;
  for (int i = 0; i < kNumBlocks; ++i) {
    if (a.rows() == 0) continue;
    const RowVector diff = a.blocks[i].colwise().mean() - b.blocks[i].colwise().mean();
    total += omega[i] * diff.norm();
  }
  return total;
}

/// Gradient of feature_matching_distance with respect to `b`. At coincident
/// means the subgradient 0 is used.
inline FeatureBundle feature_matching_grad_b(const FeatureBundle& a, const FeatureBundle& b,
                                             const BlockWeights& omega) {
  detail::check_bundles(a, b, omega);
  FeatureBundle g;
  const auto m = static_cast<double>(b.rows());
  for (int i = 0; i < kNumBlocks; ++i) {
    g.blocks[i] = Matrix::Zero(b.blocks[i].rows(), b.blocks[i].cols());
    if (b.rows() == 0) continue;
    const RowVector diff = b.blocks[i].colwise().mean() - a.blocks[i].colwise().mean();
    const double norm = diff.norm();
    if (norm == 0.0) continue;
    g.blocks[i].rowwise() = (omega[i] / (norm * m)) * diff;
  }
  return g;
}

}  // namespace phantom
