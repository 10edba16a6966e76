#pragma once

// Brute-force reference implementations used to cross-check the metric code.
// They share no code with the library and favour obviousness over speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace phantom::oracle {

/// Sup of |F_a - F_b| over every pooled point, counting by linear scans.
inline double ks(const std::vector<double>& a, const std::vector<double>& b) {
  const auto na = static_cast<std::int64_t>(a.size());
  const auto nb = static_cast<std::int64_t>(b.size());
  std::int64_t best = 0;
  auto probe = [&](double t) {
    std::int64_t ca = 0, cb = 0;
    for (double v : a) ca += v <= t;
    for (double v : b) cb += v <= t;
    best = std::max<std::int64_t>(best, std::llabs(ca * nb - cb * na));
  };
  for (double t : a) probe(t);
  for (double t : b) probe(t);
  return static_cast<double>(best) / (static_cast<double>(na) * static_cast<double>(nb));
}

/// Replicates a nb times and b na times so both have na*nb atoms of equal
/// mass, then pairs sorted atoms.
inline double w1(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> ra, rb;
  for (double v : a) ra.insert(ra.end(), b.size(), v);
  for (double v : b) rb.insert(rb.end(), a.size(), v);
  std::sort(ra.begin(), ra.end());
  std::sort(rb.begin(), rb.end());
  long double total = 0.0L;
  for (std::size_t i = 0; i < ra.size(); ++i) total += std::fabs(static_cast<long double>(ra[i]) - rb[i]);
  return static_cast<double>(total / static_cast<long double>(ra.size()));
}

struct NnResult {
  double d_min;
  double d_avg;
  std::vector<double> distances;
};

inline NnResult nn(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, bool exclude_self) {
  NnResult out{std::numeric_limits<double>::infinity(), 0.0, {}};
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      if (exclude_self && i == j) continue;
      double s = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double d = x(i, c) - y(j, c);
        s += d * d;
      }
      best = std::min(best, s);
    }
    out.distances.push_back(std::sqrt(best));
  }
  double sum = 0.0;
  for (double d : out.distances) {
    out.d_min = std::min(out.d_min, d);
    sum += d;
  }
  out.d_avg = sum / static_cast<double>(out.distances.size());
  return out;
}

}  // namespace phantom::oracle
