#pragma once

// MetricsReport assembly, JSON round-trip and the plain-text tables for the
// per-class report and the utility/fidelity/diversity summary.

#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"

#include "phantom/benchmark_data.hpp"
#include "phantom/dataset_io.hpp"
#include "phantom/evaluation.hpp"

namespace phantom {

struct DiversityMetrics {
  double min_nn_distance = 0.0;  // synthetic-to-synthetic, self excluded
  double avg_nn_distance = 0.0;
  double min_nn_distance_to_real = 0.0;  // synthetic rows to real training rows
  double avg_nn_distance_to_real = 0.0;
};

struct MetricsReport {
  std::vector<UtilityRow> utility;
  FidelitySummary fidelity;
  std::vector<std::string> feature_names;
  DiversityMetrics diversity;
  ClassificationReport per_class;
  long real_train_rows = 0;
  long synth_rows = 0;
  long real_test_rows = 0;
};

struct EvaluationOptions {
  std::uint64_t detector_seed = 42;
  std::string density_feature = "src_bytes_log";
  int grid_points = 200;
  int nn_bins = 50;
};

struct EvaluationResult {
  MetricsReport report;
  std::vector<std::pair<std::string, PlotSeries>> plots;  // file stem, series
};

inline EvaluationResult evaluate_tables(const DatasetTable& real_train, const DatasetTable& synth,
                                        const DatasetTable& real_test, const EvaluationOptions& options) {
  EvaluationResult out;
  auto& r = out.report;
  r.real_train_rows = real_train.rows();
  r.synth_rows = synth.rows();
  r.real_test_rows = real_test.rows();
  r.feature_names = benchmark_schema().names();
  r.utility = tstr_utility(real_train, synth, real_test, options.detector_seed);
  r.fidelity = fidelity_summary(real_train, synth);

  const Matrix synth_norm = minmax_normalize(synth.features, real_train.features);
  const Matrix real_norm = minmax_normalize(real_train.features, real_train.features);
  const auto self = nn_distances(synth_norm, synth_norm, true);
  const auto cross = nn_distances(synth_norm, real_norm, false);
  r.diversity = {self.d_min, self.d_avg, cross.d_min, cross.d_avg};

  Detector detector(kNumClasses, options.detector_seed);
  detector.fit(synth.features, synth.labels);
  r.per_class = classification_report(real_test.labels, detector.predict(real_test.features));

  const int feature = benchmark_schema().index_of(options.density_feature);
  if (feature < 0) throw ConfigError("unknown density feature: " + options.density_feature);
  auto real_density = density_profile(column(real_train.features, feature), options.grid_points);
  auto synth_density = density_profile(column(synth.features, feature), options.grid_points);
  real_density.feature = synth_density.feature = options.density_feature;
  auto hist = nn_histogram(synth_norm, options.nn_bins);
  out.plots = {{"density_real", real_density}, {"density_synthetic", synth_density}, {"nn_histogram", hist}};
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const ClassRow& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}, {"support", r.support}};
}

inline ClassRow class_row_from_json(const nlohmann::json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>(),
          j.at("support").get<long>()};
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json utility = nlohmann::json::array();
  for (const auto& u : r.utility) utility.push_back({{"regime", u.regime}, {"f1", u.f1}, {"auc", u.auc}});
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < r.per_class.per_class.size(); ++c) {
    auto row = to_json(r.per_class.per_class[c]);
    row["class"] = class_names()[c];
    per_class.push_back(row);
  }
  return {{"sizes", {{"real_train", r.real_train_rows}, {"synthetic", r.synth_rows}, {"real_test", r.real_test_rows}}},
          {"utility", utility},
          {"fidelity",
           {{"ks_statistic", r.fidelity.ks_mean},
            {"wasserstein1", r.fidelity.w1_mean},
            {"feature_names", r.feature_names},
            {"ks_per_feature", r.fidelity.ks},
            {"wasserstein1_per_feature", r.fidelity.w1}}},
          {"diversity",
           {{"min_nn_distance", r.diversity.min_nn_distance},
            {"avg_nn_distance", r.diversity.avg_nn_distance},
            {"min_nn_distance_to_real", r.diversity.min_nn_distance_to_real},
            {"avg_nn_distance_to_real", r.diversity.avg_nn_distance_to_real}}},
          {"per_class",
           {{"classes", per_class},
            {"accuracy", r.per_class.accuracy},
            {"macro_avg", to_json(r.per_class.macro)},
            {"weighted_avg", to_json(r.per_class.weighted)},
            {"total", r.per_class.total}}}};
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    r.real_train_rows = j.at("sizes").at("real_train").get<long>();
    r.synth_rows = j.at("sizes").at("synthetic").get<long>();
    r.real_test_rows = j.at("sizes").at("real_test").get<long>();
    for (const auto& u : j.at("utility")) {
      r.utility.push_back({u.at("regime").get<std::string>(), u.at("f1").get<double>(), u.at("auc").get<double>()});
    }
    const auto& f = j.at("fidelity");
    r.fidelity.ks_mean = f.at("ks_statistic").get<double>();
    r.fidelity.w1_mean = f.at("wasserstein1").get<double>();
    r.fidelity.ks = f.at("ks_per_feature").get<std::vector<double>>();
    r.fidelity.w1 = f.at("wasserstein1_per_feature").get<std::vector<double>>();
    r.feature_names = f.at("feature_names").get<std::vector<std::string>>();
    const auto& d = j.at("diversity");
    r.diversity = {d.at("min_nn_distance").get<double>(), d.at("avg_nn_distance").get<double>(),
                   d.at("min_nn_distance_to_real").get<double>(), d.at("avg_nn_distance_to_real").get<double>()};
    const auto& p = j.at("per_class");
    for (const auto& row : p.at("classes")) r.per_class.per_class.push_back(class_row_from_json(row));
    r.per_class.accuracy = p.at("accuracy").get<double>();
    r.per_class.macro = class_row_from_json(p.at("macro_avg"));
    r.per_class.weighted = class_row_from_json(p.at("weighted_avg"));
    r.per_class.total = p.at("total").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed metrics report: ") + e.what());
  }
  return r;
}

inline std::string plot_csv(const PlotSeries& s) {
  std::string out = "x,y\n";
  for (std::size_t i = 0; i < s.x.size(); ++i) out += format_double(s.x[i]) + "," + format_double(s.y[i]) + "\n";
  return out;
}

inline nlohmann::json plot_metadata(const PlotSeries& s) {
  return {{"kind", s.kind}, {"feature", s.feature}, {"samples", s.samples}, {"points", s.x.size()},
          {"bandwidth", s.bandwidth}};
}

// ---------------------------------------------------------------------------
// Text tables

namespace detail {
inline std::string line(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
inline std::string line(const char* fmt, ...) {
  char buf[256];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return std::string(buf) + "\n";
}
}  // namespace detail

inline std::string classification_table(const ClassificationReport& r) {
  using detail::line;
  std::string out = line("%-14s %10s %10s %10s %10s", "", "precision", "recall", "f1-score", "support");
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& row = r.per_class[c];
    out += line("%-14s %10.2f %10.2f %10.2f %10ld", ("Class " + std::to_string(c)).c_str(), row.precision,
                row.recall, row.f1, row.support);
  }
  out += "\n";
  out += line("%-14s %10s %10s %10.2f %10ld", "accuracy", "", "", r.accuracy, r.total);
  out += line("%-14s %10.2f %10.2f %10.2f %10ld", "macro avg", r.macro.precision, r.macro.recall, r.macro.f1,
              r.macro.support);
  out += line("%-14s %10.2f %10.2f %10.2f %10ld", "weighted avg", r.weighted.precision, r.weighted.recall,
              r.weighted.f1, r.weighted.support);
  return out;
}

inline std::string summary_table(const MetricsReport& r) {
  using detail::line;
  std::string out = line("%-44s %10s", "Metric", "Value");
  out += "Utility (downstream detection)\n";
  for (const auto& u : r.utility) {
    out += line("  %-42s %10.4f", (u.regime + " (F1)").c_str(), u.f1);
    out += line("  %-42s %10.4f", (u.regime + " (AUC)").c_str(), u.auc);
  }
  out += "Fidelity (statistical similarity)\n";
  out += line("  %-42s %10.4f", "KS statistic", r.fidelity.ks_mean);
  out += line("  %-42s %10.4f", "Wasserstein distance", r.fidelity.w1_mean);
  out += "Diversity (sample variation)\n";
  out += line("  %-42s %10.4f", "Min NN distance", r.diversity.min_nn_distance);
  out += line("  %-42s %10.4f", "Avg NN distance", r.diversity.avg_nn_distance);
  out += line("  %-42s %10.4f", "Min NN distance to real", r.diversity.min_nn_distance_to_real);
  out += line("  %-42s %10.4f", "Avg NN distance to real", r.diversity.avg_nn_distance_to_real);
  return out;
}

inline std::string render_report(const MetricsReport& r) {
  return "Per-class classification (synthetic-trained detector on real test)\n\n" +
         classification_table(r.per_class) + "\n" + summary_table(r);
}

}  // namespace phantom
