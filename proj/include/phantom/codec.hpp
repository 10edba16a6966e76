#pragma once

// Model-space feature coding. Networks train on: standardized log-scaled
// continuous features, log1p counts (monotone, so count-pair constraints keep
// their direction), raw rates and raw one-hot columns. Decoding hardens
// synthetic rows back to table invariants.

#include <algorithm>
#include <cmath>

#include "phantom/benchmark_data.hpp"
#include "phantom/schema.hpp"
#include "phantom/tensor.hpp"

namespace phantom {

class FeatureCodec {
 public:
  FeatureCodec() : mean_(RowVector::Zero(kNumFeatures)), scale_(RowVector::Ones(kNumFeatures)) {}

  static FeatureCodec fit(const Matrix& raw) {
    FeatureCodec codec;
    const auto& schema = benchmark_schema();
    for (int j = 0; j < kNumFeatures; ++j) {
      if (schema.features[j].kind != FeatureKind::continuous || raw.rows() == 0) continue;
      const double mean = raw.col(j).mean();
      const double var = (raw.col(j).array() - mean).square().mean();
      codec.mean_(j) = mean;
      codec.scale_(j) = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    return codec;
  }

  static FeatureCodec from_arrays(RowVector mean, RowVector scale) {
    FeatureCodec c;
    c.mean_ = std::move(mean);
    c.scale_ = std::move(scale);
    return c;
  }

  const RowVector& mean() const { return mean_; }
  const RowVector& scale() const { return scale_; }

  Matrix encode(const Matrix& raw) const {
    const auto& schema = benchmark_schema();
    Matrix out = raw;
    for (int j = 0; j < kNumFeatures; ++j) {
      switch (schema.features[j].kind) {
        case FeatureKind::continuous:
          out.col(j) = (raw.col(j).array() - mean_(j)) / scale_(j);
          break;
        case FeatureKind::count:
          out.col(j) = raw.col(j).array().max(0.0).log1p();
          break;
        default:
          break;
      }
    }
    return out;
  }

  /// Inverse transform plus hardening: counts rounded to nonnegative
  /// integers, rates clamped to [0,1], categorical groups made one-hot at
  /// their argmax (first index on ties).
  Matrix decode(const Matrix& model) const {
    const auto& schema = benchmark_schema();
    Matrix out = model;
    for (int j = 0; j < kNumFeatures; ++j) {
      switch (schema.features[j].kind) {
        case FeatureKind::continuous:
          out.col(j) = model.col(j).array() * scale_(j) + mean_(j);
          break;
        case FeatureKind::count:
          out.col(j) = model.col(j).unaryExpr(
              [](double v) { return std::round(std::expm1(std::clamp(v, 0.0, 30.0))); });
          break;
        case FeatureKind::rate:
          out.col(j) = model.col(j).array().max(0.0).min(1.0);
          break;
        case FeatureKind::categorical:
          break;
      }
    }
    for (const auto& g : schema.groups) {
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        int best = g.columns.front();
        for (int c : g.columns) {
          if (model(r, c) > model(r, best)) best = c;
        }
        for (int c : g.columns) out(r, c) = c == best ? 1.0 : 0.0;
      }
    }
    return out;
  }

 private:
  RowVector mean_;
  RowVector scale_;
};

}  // namespace phantom
