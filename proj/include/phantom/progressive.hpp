#pragma once

// Coarse-to-fine schedule over feature blocks. Block b (network, temporal,
// behavioral) becomes active at level 1 + floor(b*L/3); at its introduction
// level it is blended with a placeholder by the fade-in factor, before it the
// placeholder is used, after it the value passes through.

#include <string>

#include "phantom/benchmark_data.hpp"
#include "phantom/error.hpp"
#include "phantom/schema.hpp"
#include "phantom/tensor.hpp"

namespace phantom {

inline void check_level(int level, int levels) {
  if (levels < 1) throw ConfigError("progressive levels L must be >= 1");
  if (level < 1 || level > levels) {
    throw ConfigError("level " + std::to_string(level) + " outside 1.." + std::to_string(levels));
  }
}

inline double fade_in_factor(int level, int levels) {
  check_level(level, levels);
  return static_cast<double>(level) / static_cast<double>(levels);
}

inline int block_intro_level(Block block, int levels) {
  return 1 + (static_cast<int>(block) * levels) / kNumBlocks;
}

/// Per-column blend coefficient c: output = c*value + (1-c)*placeholder.
inline RowVector fade_coefficients(const BlockMap& block_map, int level, int levels, double alpha) {
  check_level(level, levels);
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  RowVector c(kNumFeatures);
  for (int j = 0; j < kNumFeatures; ++j) {
    const int intro = block_intro_level(block_map[static_cast<std::size_t>(j)], levels);
    c(j) = intro < level ? 1.0 : (intro == level ? alpha : 0.0);
  }
  return c;
}

inline Matrix apply_fade(const Matrix& values, const RowVector& coefficients,
                         const RowVector& placeholder) {
  Matrix out = values;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const double c = coefficients(j);
    if (c == 1.0) continue;
    if (c == 0.0) {
      out.col(j).setConstant(placeholder(j));
    } else {
      out.col(j) = c * values.col(j).array() + (1.0 - c) * placeholder(j);
    }
  }
  return out;
}

/// Level-l view of a table: inactive blocks replaced by their column means,
/// the newest block blended by alpha. Identity when L == 1.
inline DatasetTable resize_samples(const DatasetTable& table, int level, int levels, double alpha,
                                   const RowVector* placeholder = nullptr) {
  const RowVector coeff = fade_coefficients(table.block_map, level, levels, alpha);
  DatasetTable out = table;
  if ((coeff.array() == 1.0).all()) return out;
  const RowVector mean = placeholder ? *placeholder
                         : table.rows() > 0 ? RowVector(table.features.colwise().mean())
                                            : RowVector(RowVector::Zero(table.features.cols()));
  out.features = apply_fade(table.features, coeff, mean);
  return out;
}

}  // namespace phantom
