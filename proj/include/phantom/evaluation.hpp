#pragma once

// Utility (train-on-synthetic/test-on-real), fidelity (KS, W1) and diversity
// (nearest-neighbour) metrics, the per-class report, and plot series.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "phantom/benchmark_data.hpp"
#include "phantom/error.hpp"
#include "phantom/losses.hpp"
#include "phantom/nn.hpp"
#include "phantom/random.hpp"
#include "phantom/tensor.hpp"

namespace phantom {

// ---------------------------------------------------------------------------
// One-dimensional two-sample distances

/// Two-sample Kolmogorov-Smirnov statistic sup_t |F_a(t) - F_b(t)|. The gap
/// is tracked as the integer |i*nb - j*na| so the supremum is exact.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InputError("ks_statistic needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<std::int64_t>(a.size());
  const auto nb = static_cast<std::int64_t>(b.size());
  std::int64_t i = 0, j = 0, best = 0;
  while (i < na || j < nb) {
    const double t = j >= nb || (i < na && a[i] <= b[j]) ? a[i] : b[j];
    while (i < na && a[i] <= t) ++i;
    while (j < nb && b[j] <= t) ++j;
    best = std::max(best, std::abs(i * nb - j * na));
  }
  return static_cast<double>(best) / (static_cast<double>(na) * static_cast<double>(nb));
}

/// 1-D earth-mover distance between two empirical distributions:
/// integral of |F_a - F_b|. Equal sizes reduce to the mean absolute
/// difference of order statistics.
inline double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InputError("wasserstein1 needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double total = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) total += std::abs(a[k] - b[k]);
    return total / static_cast<double>(a.size());
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double total = 0.0;
  double t = std::min(a.front(), b.front());
  while (i < a.size() || j < b.size()) {
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    if (i == a.size() && j == b.size()) break;
    const double next = j >= b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
    total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (next - t);
    t = next;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Nearest neighbours

struct NearestNeighbours {
  double d_min = 0.0;
  double d_avg = 0.0;
  Vector distances;  // per row of X
};

/// For every row of X, Euclidean distance to its nearest row of Y (skipping
/// the same row index when `exclude_self`).
inline NearestNeighbours nn_distances(const Matrix& x, const Matrix& y, bool exclude_self) {
  if (x.rows() == 0 || y.rows() == 0) throw InputError("nn_distances needs nonempty sets");
  if (x.cols() != y.cols()) throw ShapeError("nn_distances: column mismatch");
  if (exclude_self && (x.rows() < 2 || x.rows() != y.rows())) {
    throw InputError("self-excluded nearest neighbours need one set with at least 2 rows");
  }
  NearestNeighbours out;
  out.distances.resize(x.rows());
  const auto cols = x.cols();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double* xi = x.row(i).data();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      if (exclude_self && i == j) continue;
      const double* yj = y.row(j).data();
      double sum = 0.0;
      Eigen::Index c = 0;
      for (; c < cols && sum < best; ++c) {
        const double d = xi[c] - yj[c];
        sum += d * d;
      }
      if (c == cols && sum < best) best = sum;
    }
    out.distances(i) = std::sqrt(best);
  }
  out.d_min = out.distances.minCoeff();
  double sum = 0.0;  // sequential: reproducible across vectorization settings
  for (Eigen::Index i = 0; i < out.distances.size(); ++i) sum += out.distances(i);
  out.d_avg = sum / static_cast<double>(out.distances.size());
  return out;
}

// ---------------------------------------------------------------------------
// Fidelity

/// Scales each column to [0,1] by the reference matrix's per-column range
/// (unit range when constant).
inline Matrix minmax_normalize(const Matrix& x, const Matrix& reference) {
  Matrix out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double lo = reference.col(c).minCoeff();
    const double range = reference.col(c).maxCoeff() - lo;
    const double scale = range > 0.0 ? range : 1.0;
    out.col(c) = (x.col(c).array() - lo) / scale;
  }
  return out;
}

struct FidelitySummary {
  std::vector<double> ks;
  std::vector<double> w1;
  double ks_mean = 0.0;
  double w1_mean = 0.0;
};

inline std::vector<double> column(const Matrix& m, Eigen::Index c) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = m(r, c);
  return out;
}

/// Per-feature KS and W1 on columns min-max normalized by the real table's
/// ranges; scalars are unweighted means over features.
inline FidelitySummary fidelity_summary(const DatasetTable& real, const DatasetTable& synth) {
  if (real.features.cols() != synth.features.cols() || real.features.cols() != kNumFeatures) {
    throw SchemaError("fidelity_summary needs two 40-column tables");
  }
  if (real.empty() || synth.empty()) throw InputError("fidelity_summary needs nonempty tables");
  const Matrix r = minmax_normalize(real.features, real.features);
  const Matrix s = minmax_normalize(synth.features, real.features);
  FidelitySummary out;
  for (Eigen::Index c = 0; c < r.cols(); ++c) {
    out.ks.push_back(ks_statistic(column(r, c), column(s, c)));
    out.w1.push_back(wasserstein1(column(r, c), column(s, c)));
  }
  out.ks_mean = std::accumulate(out.ks.begin(), out.ks.end(), 0.0) / static_cast<double>(out.ks.size());
  out.w1_mean = std::accumulate(out.w1.begin(), out.w1.end(), 0.0) / static_cast<double>(out.w1.size());
  return out;
}

// ---------------------------------------------------------------------------
// Per-class report

struct ClassRow {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
};

struct ClassificationReport {
  std::vector<ClassRow> per_class;
  double accuracy = 0.0;
  ClassRow macro;
  ClassRow weighted;
  long total = 0;
};

/// Macro = unweighted mean over classes; weighted = support-weighted mean.
inline ClassificationReport aggregate_report(const std::vector<ClassRow>& rows) {
  ClassificationReport report;
  report.per_class = rows;
  for (const auto& r : rows) report.total += r.support;
  const double k = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    report.macro.precision += r.precision / k;
    report.macro.recall += r.recall / k;
    report.macro.f1 += r.f1 / k;
    if (report.total > 0) {
      const double share = static_cast<double>(r.support) / static_cast<double>(report.total);
      report.weighted.precision += share * r.precision;
      report.weighted.recall += share * r.recall;
      report.weighted.f1 += share * r.f1;
    }
  }
  report.macro.support = report.total;
  report.weighted.support = report.total;
  return report;
}

/// 0/0 ratios are reported as 0.
inline ClassificationReport classification_report(const std::vector<int>& y_true,
                                                  const std::vector<int>& y_pred,
                                                  int classes = kNumClasses) {
  if (y_true.size() != y_pred.size()) throw InputError("y_true and y_pred differ in length");
  check_labels(y_true, classes);
  check_labels(y_pred, classes);
  std::vector<long> tp(static_cast<std::size_t>(classes)), fp(tp), fn(tp);
  long correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const auto t = static_cast<std::size_t>(y_true[i]);
    const auto p = static_cast<std::size_t>(y_pred[i]);
    if (t == p) {
      ++tp[t];
      ++correct;
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  auto ratio = [](long num, long den) { return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0; };
  std::vector<ClassRow> rows(static_cast<std::size_t>(classes));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    rows[c].precision = ratio(tp[c], tp[c] + fp[c]);
    rows[c].recall = ratio(tp[c], tp[c] + fn[c]);
    rows[c].f1 = ratio(2 * tp[c], 2 * tp[c] + fp[c] + fn[c]);
    rows[c].support = tp[c] + fn[c];
  }
  auto report = aggregate_report(rows);
  report.accuracy = ratio(correct, static_cast<long>(y_true.size()));
  return report;
}

// ---------------------------------------------------------------------------
// Binary detection metrics

/// F1 of the positive class (label 1).
inline double binary_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size()) throw InputError("y_true and y_pred differ in length");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_pred[i] == 1 && y_true[i] == 1) ++tp;
    if (y_pred[i] == 1 && y_true[i] != 1) ++fp;
    if (y_pred[i] != 1 && y_true[i] == 1) ++fn;
  }
  const long den = 2 * tp + fp + fn;
  return den > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(den) : 0.0;
}

/// ROC AUC via the rank-sum statistic with average ranks for ties.
inline double roc_auc(const std::vector<int>& y_true, const std::vector<double>& scores) {
  if (y_true.size() != scores.size()) throw InputError("y_true and scores differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (y_true[order[k]] == 1) {
        positive_rank_sum += avg_rank;
        positives += 1.0;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(y_true.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) return 0.0;
  return (positive_rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

inline std::vector<int> binarize(const std::vector<int>& labels) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == 0 ? 0 : 1;
  return out;
}

// ---------------------------------------------------------------------------
// Downstream detector

struct DetectorConfig {
  std::vector<int> hidden{64, 64};
  int epochs = 20;
  int batch_size = 128;
  double learning_rate = 1e-3;
};

/// Seeded feed-forward classifier on standardized inputs.
class Detector {
 public:
  Detector(int classes, std::uint64_t seed, DetectorConfig config = {})
      : classes_(classes), seed_(seed), config_(std::move(config)) {}

  void fit(const Matrix& x, const std::vector<int>& y) {
    if (x.rows() == 0) throw DegenerateTrainingError("detector training set is empty");
    check_labels(y, classes_);
    std::vector<bool> present(static_cast<std::size_t>(classes_));
    for (int v : y) present[static_cast<std::size_t>(v)] = true;
    if (std::count(present.begin(), present.end(), true) < 2) {
      throw DegenerateTrainingError("detector training data contains a single class");
    }
    mean_ = x.colwise().mean();
    scale_ = ((x.rowwise() - mean_).array().square().colwise().mean()).sqrt().matrix();
    for (Eigen::Index c = 0; c < scale_.size(); ++c) {
      if (!(scale_(c) > 1e-12)) scale_(c) = 1.0;
    }
    const Matrix xs = standardize(x);
    Rng rng(seed_);
    std::vector<int> widths{static_cast<int>(x.cols())};
    widths.insert(widths.end(), config_.hidden.begin(), config_.hidden.end());
    widths.push_back(classes_);
    net_ = nn::Mlp(widths, rng);
    nn::Adam adam({config_.learning_rate, 0.9, 0.999});
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config_.batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config_.batch_size));
        Matrix xb(static_cast<Eigen::Index>(end - start), xs.cols());
        std::vector<int> yb(end - start);
        for (std::size_t k = start; k < end; ++k) {
          xb.row(static_cast<Eigen::Index>(k - start)) = xs.row(order[k]);
          yb[k - start] = y[static_cast<std::size_t>(order[k])];
        }
        nn::MlpCache cache;
        const Matrix logits = net_.forward(xb, &cache);
        const auto [loss, d_logits] = cross_entropy_logits(logits, yb);
        nn::Gradients grads = net_.zero_gradients();
        net_.backward(cache, d_logits, &grads);
        adam.step(net_.parameters(), grads);
      }
    }
  }

  Matrix predict_proba(const Matrix& x) const { return softmax_rows(net_.forward(standardize(x))); }

  std::vector<int> predict(const Matrix& x) const {
    const Matrix p = predict_proba(x);
    std::vector<int> out(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      Eigen::Index best = 0;
      p.row(r).maxCoeff(&best);
      out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
  }

 private:
  Matrix standardize(const Matrix& x) const {
    return ((x.rowwise() - mean_).array().rowwise() / scale_.array()).matrix();
  }

  int classes_;
  std::uint64_t seed_;
  DetectorConfig config_;
  RowVector mean_;
  RowVector scale_;
  nn::Mlp net_;
};

struct UtilityRow {
  std::string regime;  // real_only | synthetic_only | combined
  double f1 = 0.0;
  double auc = 0.0;
};

inline DatasetTable concat_tables(const DatasetTable& a, const DatasetTable& b) {
  DatasetTable out = a;
  out.features.resize(a.rows() + b.rows(), kNumFeatures);
  out.features << a.features, b.features;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

/// Benign-vs-attack detection utility for the three training regimes, each
/// trained with the same detector seed and evaluated on real_test.
inline std::vector<UtilityRow> tstr_utility(const DatasetTable& real_train,
                                            const DatasetTable& synth_train,
                                            const DatasetTable& real_test, std::uint64_t seed,
                                            const DetectorConfig& config = {}) {
  for (const auto* t : {&real_train, &synth_train, &real_test}) {
    if (t->features.cols() != kNumFeatures) throw SchemaError("tstr_utility needs 40-column tables");
  }
  const auto y_test = binarize(real_test.labels);
  auto run = [&](const std::string& name, const DatasetTable& train) {
    Detector detector(2, seed, config);
    detector.fit(train.features, binarize(train.labels));
    const Matrix p = detector.predict_proba(real_test.features);
    std::vector<double> scores(static_cast<std::size_t>(p.rows()));
    std::vector<int> pred(scores.size());
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      scores[static_cast<std::size_t>(r)] = p(r, 1);
      pred[static_cast<std::size_t>(r)] = p(r, 1) > p(r, 0) ? 1 : 0;
    }
    return UtilityRow{name, binary_f1(y_test, pred), roc_auc(y_test, scores)};
  };
  return {run("real_only", real_train), run("synthetic_only", synth_train),
          run("combined", concat_tables(real_train, synth_train))};
}

// ---------------------------------------------------------------------------
// Plot series

struct PlotSeries {
  std::string kind;  // density_profile | nn_histogram
  std::vector<double> x;
  std::vector<double> y;
  std::string feature;
  long samples = 0;
  double bandwidth = 0.0;
};

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double total = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) total += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return total;
}

inline double silverman_bandwidth(std::vector<double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double pos = q * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(n, -0.2);
}

/// Gaussian KDE with Silverman bandwidth on an even grid spanning
/// [min - h, max + h]. A constant sample yields a unit-mass spike: the grid
/// spans value +/- 0.5 and all density sits on the grid point nearest the value.
inline PlotSeries density_profile(const std::vector<double>& values, int grid_points) {
  if (values.size() < 2) throw InputError("density_profile needs at least 2 samples");
  if (grid_points < 2) throw InputError("density_profile needs at least 2 grid points");
  PlotSeries out;
  out.kind = "density_profile";
  out.samples = static_cast<long>(values.size());
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  const double h = lo < hi ? silverman_bandwidth(values) : 0.0;
  out.bandwidth = h;
  const double start = h > 0.0 ? lo - h : lo - 0.5;
  const double stop = h > 0.0 ? hi + h : hi + 0.5;
  const double step = (stop - start) / (grid_points - 1);
  out.x.resize(static_cast<std::size_t>(grid_points));
  out.y.assign(static_cast<std::size_t>(grid_points), 0.0);
  for (int g = 0; g < grid_points; ++g) out.x[static_cast<std::size_t>(g)] = start + step * g;
  if (h <= 0.0) {
    const auto nearest = static_cast<std::size_t>(std::lround((lo - start) / step));
    // trapezoid weight of an interior point is `step`, of an end point step/2
    const bool edge = nearest == 0 || nearest + 1 == out.x.size();
    out.y[nearest] = 1.0 / (edge ? 0.5 * step : step);
    return out;
  }
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * M_PI));
  for (std::size_t g = 0; g < out.x.size(); ++g) {
    double sum = 0.0;
    for (double v : values) {
      const double u = (out.x[g] - v) / h;
      sum += std::exp(-0.5 * u * u);
    }
    out.y[g] = sum * norm;
  }
  return out;
}

/// Histogram of self-excluded nearest-neighbour distances within `x` over
/// `bins` equal-width bins on [0, max distance]; x holds bin centres.
inline PlotSeries nn_histogram(const Matrix& x, int bins) {
  if (x.rows() < 2) throw InputError("nn_histogram needs at least 2 rows");
  if (bins < 1) throw InputError("nn_histogram needs at least 1 bin");
  const auto nn = nn_distances(x, x, true);
  PlotSeries out;
  out.kind = "nn_histogram";
  out.samples = static_cast<long>(x.rows());
  const double top = nn.distances.maxCoeff();
  const double width = top > 0.0 ? top / bins : 1.0;
  out.x.resize(static_cast<std::size_t>(bins));
  out.y.assign(static_cast<std::size_t>(bins), 0.0);
  for (int b = 0; b < bins; ++b) out.x[static_cast<std::size_t>(b)] = (b + 0.5) * width;
  for (Eigen::Index i = 0; i < nn.distances.size(); ++i) {
    const auto b = std::min<long>(bins - 1, static_cast<long>(nn.distances(i) / width));
    out.y[static_cast<std::size_t>(b)] += 1.0;
  }
  return out;
}

inline PlotSeries nn_histogram(const DatasetTable& synth, int bins) {
  return nn_histogram(synth.features, bins);
}

}  // namespace phantom
