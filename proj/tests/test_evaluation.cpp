#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "phantom/benchmark_data.hpp"
#include "phantom/evaluation.hpp"
#include "phantom/report.hpp"

namespace phantom {
namespace {

std::vector<double> random_sample(std::mt19937_64& gen, std::size_t n, bool with_ties) {
  std::vector<double> v(n);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> small(0, 5);
  for (auto& x : v) x = with_ties ? small(gen) : normal(gen);
  return v;
}

// ---------------------------------------------------------------------------
// Distances

TEST(KsStatistic, Examples) {
  EXPECT_EQ(ks_statistic({0, 1}, {0.5, 1.5}), 0.5);
  EXPECT_EQ(ks_statistic({0}, {1}), 1.0);
  EXPECT_EQ(ks_statistic({3, 1, 2, 2}, {2, 1, 2, 3}), 0.0);
  EXPECT_THROW(ks_statistic({}, {1}), InputError);
}

TEST(KsStatistic, MatchesBruteForceExactly) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<std::size_t> size(1, 200);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_sample(gen, size(gen), trial % 3 == 0);
    const auto b = random_sample(gen, size(gen), trial % 3 == 0);
    ASSERT_EQ(ks_statistic(a, b), oracle::ks(a, b)) << "trial " << trial;
  }
}

TEST(Wasserstein1, Examples) {
  EXPECT_EQ(wasserstein1({0, 1}, {1, 2}), 1.0);
  EXPECT_EQ(wasserstein1({4, 2, 9}, {9, 4, 2}), 0.0);
  EXPECT_NEAR(wasserstein1({0, 1}, {0, 0, 3}), oracle::w1({0, 1}, {0, 0, 3}), 1e-15);
  EXPECT_THROW(wasserstein1({1}, {}), InputError);
}

TEST(Wasserstein1, TranslationMovesByShift) {
  std::mt19937_64 gen(2);
  const auto a = random_sample(gen, 50, false);
  for (double c : {0.25, -3.0, 10.0}) {
    auto b = a;
    for (auto& x : b) x += c;
    EXPECT_NEAR(wasserstein1(a, b), std::abs(c), 1e-12);
  }
}

TEST(Wasserstein1, MatchesBruteForce) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> size(1, 200);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_sample(gen, size(gen), trial % 3 == 0);
    const auto b = random_sample(gen, size(gen), trial % 3 == 0);
    const double want = oracle::w1(a, b);
    ASSERT_NEAR(wasserstein1(a, b), want, 1e-12 * std::max(1.0, want)) << "trial " << trial;
  }
}

TEST(NnDistances, Examples) {
  Matrix pair(2, 2);
  pair << 0, 0, 1, 0;
  const auto self = nn_distances(pair, pair, true);
  EXPECT_EQ(self.d_min, 1.0);
  EXPECT_EQ(self.d_avg, 1.0);
  Matrix origin = Matrix::Zero(1, 2);
  const auto cross = nn_distances(pair, origin, false);
  EXPECT_EQ(cross.d_min, 0.0);
  EXPECT_EQ(cross.d_avg, 0.5);
  const auto same = nn_distances(pair, pair, false);
  EXPECT_EQ(same.d_min, 0.0);
  EXPECT_EQ(same.d_avg, 0.0);
}

TEST(NnDistances, Errors) {
  const Matrix one = Matrix::Zero(1, 3);
  EXPECT_THROW(nn_distances(one, one, true), InputError);
  EXPECT_THROW(nn_distances(Matrix(0, 3), one, false), InputError);
  EXPECT_THROW(nn_distances(one, Matrix::Zero(1, 2), false), ShapeError);
}

TEST(NnDistances, MatchesDoubleLoopExactly) {
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> rows(2, 120), dims(1, 10);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = dims(gen);
    Matrix x(rows(gen), d), y(rows(gen), d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = trial % 4 == 0 ? std::round(normal(gen)) : normal(gen);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = normal(gen);
    for (bool self : {false, true}) {
      const Matrix& target = self ? x : y;
      const auto got = nn_distances(x, target, self);
      const auto want = oracle::nn(x, target, self);
      ASSERT_EQ(got.d_min, want.d_min);
      ASSERT_EQ(got.d_avg, want.d_avg);
      for (Eigen::Index i = 0; i < x.rows(); ++i) ASSERT_EQ(got.distances(i), want.distances[static_cast<std::size_t>(i)]);
    }
  }
}

// ---------------------------------------------------------------------------
// Fidelity

const DatasetTable& table_2k() {
  static const DatasetTable t = generate_benchmark(2000, default_class_specs(), 8);
  return t;
}

TEST(Fidelity, IdenticalTablesScoreZero) {
  const auto f = fidelity_summary(table_2k(), table_2k());
  EXPECT_EQ(f.ks_mean, 0.0);
  EXPECT_EQ(f.w1_mean, 0.0);
  EXPECT_EQ(f.ks.size(), 40u);
  EXPECT_EQ(f.w1.size(), 40u);
}

TEST(Fidelity, FullRangeShiftOfOneColumn) {
  const auto& real = table_2k();
  const int c = benchmark_schema().index_of("src_bytes_log");
  DatasetTable synth = real;
  const double range = real.features.col(c).maxCoeff() - real.features.col(c).minCoeff();
  synth.features.col(c).array() += range;
  const auto f = fidelity_summary(real, synth);
  const double n = static_cast<double>(real.rows());
  EXPECT_NEAR(f.w1[static_cast<std::size_t>(c)], 1.0, 1e-9);
  // Only the shared extreme point overlaps.
  EXPECT_NEAR(f.ks[static_cast<std::size_t>(c)], 1.0, 1.0 / n + 1e-12);
  EXPECT_NEAR(f.w1_mean, 1.0 / 40.0, 1e-9);
  EXPECT_NEAR(f.ks_mean, 1.0 / 40.0, 1.0 / (40.0 * n) + 1e-12);
}

TEST(Fidelity, RangesAndSchema) {
  const auto other = generate_benchmark(500, default_class_specs(), 99);
  const auto f = fidelity_summary(table_2k(), other);
  for (std::size_t c = 0; c < 40; ++c) {
    EXPECT_GE(f.ks[c], 0.0);
    EXPECT_LE(f.ks[c], 1.0);
    EXPECT_GE(f.w1[c], 0.0);
  }
  DatasetTable narrow;
  narrow.features = Matrix::Zero(3, 39);
  narrow.labels = {0, 0, 0};
  EXPECT_THROW(fidelity_summary(table_2k(), narrow), SchemaError);
}

// ---------------------------------------------------------------------------
// Classification report

std::vector<ClassRow> published_rows() {
  return {{1.00, 1.00, 1.00, 14000}, {1.00, 1.00, 1.00, 3000}, {0.88, 0.99, 0.93, 2000},
          {1.00, 0.87, 0.93, 800},   {0.00, 0.00, 0.00, 200}};
}

TEST(ClassificationReport, PublishedRowsReproduceAggregates) {
  const auto r = aggregate_report(published_rows());
  EXPECT_NEAR(r.macro.precision, 0.776, 1e-9);
  EXPECT_EQ(r.total, 20000);
  for (double v : {r.weighted.precision, r.weighted.recall, r.weighted.f1}) EXPECT_LE(std::abs(v - 0.98), 0.005);
  // Hand arithmetic: sum(share * value).
  EXPECT_NEAR(r.weighted.precision, (14000 + 3000 + 0.88 * 2000 + 800) / 20000.0, 1e-12);
  EXPECT_NEAR(r.weighted.recall, (14000 + 3000 + 0.99 * 2000 + 0.87 * 800) / 20000.0, 1e-12);
}

TEST(ClassificationReport, PerfectPrediction) {
  const std::vector<int> y{0, 1, 2, 3, 4, 0, 0};
  const auto r = classification_report(y, y);
  EXPECT_EQ(r.accuracy, 1.0);
  for (const auto& row : r.per_class) {
    EXPECT_EQ(row.precision, 1.0);
    EXPECT_EQ(row.recall, 1.0);
    EXPECT_EQ(row.f1, 1.0);
  }
}

TEST(ClassificationReport, ConfusionOracle) {
  // true 0 0 0 1 1 2 ; pred 0 0 1 1 2 2
  const auto r = classification_report({0, 0, 0, 1, 1, 2}, {0, 0, 1, 1, 2, 2});
  EXPECT_DOUBLE_EQ(r.per_class[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class[0].recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_class[1].precision, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class[1].recall, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class[2].precision, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class[2].recall, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class[2].f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.accuracy, 4.0 / 6.0);
  // Absent classes report zeros.
  EXPECT_EQ(r.per_class[4].support, 0);
  EXPECT_EQ(r.per_class[4].f1, 0.0);
  long support = 0;
  double wf1 = 0.0;
  for (const auto& row : r.per_class) {
    support += row.support;
    wf1 += row.f1 * static_cast<double>(row.support);
  }
  EXPECT_EQ(support, 6);
  EXPECT_NEAR(r.weighted.f1, wf1 / 6.0, 1e-12);
  EXPECT_THROW(classification_report({0, 1}, {0}), InputError);
  EXPECT_THROW(classification_report({0, 7}, {0, 1}), InputError);
}

// ---------------------------------------------------------------------------
// Binary metrics

TEST(BinaryMetrics, F1AndAuc) {
  EXPECT_DOUBLE_EQ(binary_f1({1, 1, 0, 0}, {1, 0, 1, 0}), 0.5);
  EXPECT_EQ(binary_f1({0, 0}, {0, 0}), 0.0);
  EXPECT_EQ(roc_auc({0, 0, 1, 1}, {0.1, 0.2, 0.8, 0.9}), 1.0);
  EXPECT_EQ(roc_auc({0, 0, 1, 1}, {0.9, 0.8, 0.2, 0.1}), 0.0);
  EXPECT_EQ(roc_auc({0, 1}, {0.5, 0.5}), 0.5);
  // Pairwise oracle: P(score_pos > score_neg) + 0.5 P(tie).
  EXPECT_DOUBLE_EQ(roc_auc({0, 1, 0, 1, 1}, {0.3, 0.3, 0.1, 0.7, 0.2}), (1.5 + 2 + 1) / 6.0);
  EXPECT_EQ(binarize({0, 1, 2, 3, 4}), (std::vector<int>{0, 1, 1, 1, 1}));
}

// ---------------------------------------------------------------------------
// Utility

TEST(Utility, IdentityRegimeAndDeterminism) {
  const auto split = stratified_split(table_2k(), 0.3, 5);
  DetectorConfig quick;
  quick.epochs = 3;
  const auto rows = tstr_utility(split.train, split.train, split.test, 17, quick);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].regime, "real_only");
  EXPECT_EQ(rows[1].regime, "synthetic_only");
  EXPECT_EQ(rows[2].regime, "combined");
  EXPECT_EQ(rows[0].f1, rows[1].f1);
  EXPECT_EQ(rows[0].auc, rows[1].auc);
  const auto again = tstr_utility(split.train, split.train, split.test, 17, quick);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rows[i].f1, again[i].f1);
    EXPECT_EQ(rows[i].auc, again[i].auc);
  }
  EXPECT_GT(rows[0].f1, 0.9);
}

TEST(Utility, SingleClassRegimeIsDegenerate) {
  const auto split = stratified_split(table_2k(), 0.3, 5);
  std::vector<Eigen::Index> benign;
  for (Eigen::Index r = 0; r < split.train.rows(); ++r) {
    if (split.train.labels[static_cast<std::size_t>(r)] == 0) benign.push_back(r);
  }
  EXPECT_THROW(tstr_utility(split.train, split.train.select(benign), split.test, 1), DegenerateTrainingError);
}

// ---------------------------------------------------------------------------
// Plot series

double normal_quantile(double q) {
  double lo = -10.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(DensityProfile, NormalSamplePeaksAtZero) {
  // Stratified standard-normal sample x_i = Phi^-1((i - 1/2) / n): no
  // sampling noise, so the estimate's mode reflects the estimator alone.
  std::vector<double> v(10000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = normal_quantile((static_cast<double>(i) + 0.5) / 10000.0);
  const auto p = density_profile(v, 200);
  ASSERT_EQ(p.x.size(), 200u);
  ASSERT_EQ(p.y.size(), 200u);
  const auto peak = std::max_element(p.y.begin(), p.y.end()) - p.y.begin();
  EXPECT_NEAR(p.x[static_cast<std::size_t>(peak)], 0.0, 0.05);
  const double area = trapezoid(p.x, p.y);
  EXPECT_GE(area, 0.98);
  EXPECT_LE(area, 1.02);
  for (double y : p.y) EXPECT_GE(y, 0.0);
}

TEST(DensityProfile, TracksSmoothedNormalDensity) {
  // E[KDE](x) for N(0,1) data is the N(0, 1 + h^2) density.
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  std::vector<double> v(10000);
  for (auto& x : v) x = normal(gen);
  const auto p = density_profile(v, 200);
  const double var = 1.0 + p.bandwidth * p.bandwidth;
  ASSERT_GT(p.bandwidth, 0.0);
  for (std::size_t g = 0; g < p.x.size(); ++g) {
    const double expected = std::exp(-0.5 * p.x[g] * p.x[g] / var) / std::sqrt(2.0 * M_PI * var);
    EXPECT_NEAR(p.y[g], expected, 0.02) << "x = " << p.x[g];
  }
  EXPECT_NEAR(trapezoid(p.x, p.y), 1.0, 0.02);
}

TEST(DensityProfile, ConstantInputIsUnitSpike) {
  const auto p = density_profile(std::vector<double>(10, 3.0), 11);
  EXPECT_EQ(p.x.size(), 11u);
  EXPECT_DOUBLE_EQ(p.x.front(), 2.5);
  EXPECT_DOUBLE_EQ(p.x.back(), 3.5);
  EXPECT_NEAR(trapezoid(p.x, p.y), 1.0, 1e-12);
  EXPECT_EQ(std::count_if(p.y.begin(), p.y.end(), [](double y) { return y > 0; }), 1);
  EXPECT_THROW(density_profile({1.0}, 10), InputError);
}

TEST(NnHistogram, CountsAndGeometry) {
  Matrix line(3, 1);
  line << 0, 1, 3;
  const auto h = nn_histogram(line, 2);
  // distances (1, 1, 2) on [0, 2]: bin [0,1) empty, [1,2] holds all three
  EXPECT_EQ(h.y, (std::vector<double>{0.0, 3.0}));
  const auto fine = nn_histogram(line, 4);
  EXPECT_EQ(fine.y, (std::vector<double>{0.0, 0.0, 2.0, 1.0}));
  EXPECT_DOUBLE_EQ(fine.x[0], 0.25);
  EXPECT_THROW(nn_histogram(Matrix::Zero(1, 2), 5), InputError);
}

TEST(NnHistogram, DuplicatesMassAtZero) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  Matrix x(40, 3);
  for (Eigen::Index r = 0; r < 20; ++r) {
    for (int c = 0; c < 3; ++c) x(r, c) = x(r + 20, c) = normal(gen);
  }
  const auto h = nn_histogram(x, 10);
  EXPECT_EQ(std::accumulate(h.y.begin(), h.y.end(), 0.0), 40.0);
  EXPECT_EQ(h.y[0], 40.0);
  const auto spread = nn_histogram(minmax_normalize(table_2k().features, table_2k().features), 25);
  EXPECT_EQ(std::accumulate(spread.y.begin(), spread.y.end(), 0.0), 2000.0);
}

// ---------------------------------------------------------------------------
// MetricsReport

TEST(MetricsReport, EvaluateAndRoundTrip) {
  const auto split = stratified_split(table_2k(), 0.25, 3);
  const auto synth = generate_benchmark(600, default_class_specs(), 77);
  const auto result = evaluate_tables(split.train, synth, split.test, {});
  const auto& r = result.report;
  EXPECT_EQ(r.synth_rows, 600);
  EXPECT_EQ(r.per_class.total, split.test.rows());
  for (const auto& u : r.utility) {
    EXPECT_GE(u.f1, 0.0);
    EXPECT_LE(u.f1, 1.0);
    EXPECT_GE(u.auc, 0.0);
    EXPECT_LE(u.auc, 1.0);
  }
  double wp = 0.0;
  for (const auto& row : r.per_class.per_class) {
    for (double v : {row.precision, row.recall, row.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    wp += row.precision * static_cast<double>(row.support) / static_cast<double>(r.per_class.total);
  }
  EXPECT_NEAR(r.per_class.weighted.precision, wp, 1e-6);
  EXPECT_GT(r.diversity.min_nn_distance, 0.0);
  EXPECT_LE(r.diversity.min_nn_distance, r.diversity.avg_nn_distance);
  ASSERT_EQ(result.plots.size(), 3u);
  for (const auto& [stem, series] : result.plots) EXPECT_EQ(series.x.size(), series.y.size()) << stem;

  const auto json = to_json(r);
  const auto back = metrics_from_json(nlohmann::json::parse(json.dump()));
  EXPECT_EQ(to_json(back).dump(), json.dump());
  EXPECT_THROW(metrics_from_json(nlohmann::json::object()), FormatError);
  const auto text = render_report(r);
  EXPECT_NE(text.find("macro avg"), std::string::npos);
  EXPECT_NE(text.find("Wasserstein distance"), std::string::npos);
}

TEST(MetricsReport, PlotCsvHeader) {
  PlotSeries s;
  s.x = {0.0, 1.0};
  s.y = {2.0, 3.0};
  EXPECT_EQ(plot_csv(s).substr(0, 4), "x,y\n");
}

}  // namespace
}  // namespace phantom
