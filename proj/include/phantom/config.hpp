#pragma once

// Declarative run configuration. JSON with a strict schema: unknown keys are
// rejected, omitted keys take their defaults, and validation reports every
// violation with its dotted field path.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "phantom/benchmark_data.hpp"
#include "phantom/dataset_io.hpp"
#include "phantom/error.hpp"
#include "phantom/trainer.hpp"

namespace phantom {

using nlohmann::json;

struct DataSection {
  long n_total = 100000;
  std::vector<double> proportions{0.70, 0.15, 0.10, 0.04, 0.01};
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  std::string output_dir = "data";
};

struct TrainSection {
  std::string data_path = "data/train.csv";
  std::string checkpoint_dir = "checkpoint";
  TrainConfig config;
};

struct SynthesizeSection {
  std::string checkpoint_dir = "checkpoint";
  long n = 2000;
  std::optional<std::vector<long>> label_counts;
  std::uint64_t seed = 42;
  std::string output_dir = "synthetic";
};

struct EvaluateSection {
  std::string real_path = "data/train.csv";
  std::string real_test_path = "data/test.csv";  // empty: split real_path
  std::string synth_path = "synthetic/synthetic.csv";
  std::string report_dir = "report";
  std::uint64_t detector_seed = 42;
  double test_fraction = 0.2;
  std::string density_feature = "src_bytes_log";
  int grid_points = 200;
  int nn_bins = 50;
};

struct ReportSection {
  std::string metrics_path = "report/metrics.json";
  std::string output_dir = "report";
};

struct RunConfig {
  DataSection data;
  TrainSection train;
  SynthesizeSection synthesize;
  EvaluateSection evaluate;
  ReportSection report;
};

/// Thrown with the full list of violations.
class ValidationError : public ConfigError {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : ConfigError(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid configuration:";
    for (const auto& s : p) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

namespace detail {

/// Reads keys out of one JSON object, recording problems instead of throwing.
class Reader {
 public:
  Reader(const json& node, std::string path, std::vector<std::string>& problems)
      : node_(node), path_(std::move(path)), problems_(problems) {
    if (!node_.is_object()) problems_.push_back(where("") + ": expected an object");
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    known_.push_back(key);
    if (!node_.is_object()) return nullptr;
    const auto it = node_.find(key);
    return it == node_.end() || it->is_null() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (v->is_number()) out = v->get<double>();
      else problems_.push_back(where(key) + ": expected a number");
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = find(key)) {
      if (v->is_number_integer() || v->is_number_unsigned()) {
        if constexpr (std::is_unsigned_v<Int>) {
          if (v->is_number_integer() && v->get<long long>() < 0) {
            problems_.push_back(where(key) + ": must be >= 0");
            return;
          }
        }
        out = v->get<Int>();
      } else {
        problems_.push_back(where(key) + ": expected an integer");
      }
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (v->is_string()) out = v->get<std::string>();
      else problems_.push_back(where(key) + ": expected a string");
    }
  }

  template <typename T>
  void list(const std::string& key, std::vector<T>& out) {
    if (const json* v = find(key)) {
      bool ok = v->is_array();
      if (ok) {
        for (const auto& e : *v) ok = ok && (std::is_integral_v<T> ? e.is_number_integer() : e.is_number());
      }
      if (ok) out = v->get<std::vector<T>>();
      else problems_.push_back(where(key) + ": expected an array of numbers");
    }
  }

  Reader child(const std::string& key) {
    static const json empty = json::object();
    const json* v = find(key);
    return Reader(v ? *v : empty, where(key), problems_);
  }

  void reject_unknown() {
    if (!node_.is_object()) return;
    for (const auto& item : node_.items()) {
      if (std::find(known_.begin(), known_.end(), item.key()) == known_.end()) {
        problems_.push_back(where(item.key()) + ": unknown key");
      }
    }
  }

  void check(bool ok, const std::string& key, const std::string& message) {
    if (!ok) problems_.push_back(where(key) + ": " + message);
  }

 private:
  const json& node_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::vector<std::string> known_;
};

inline bool sums_to_one(const std::vector<double>& v) {
  double sum = 0.0;
  for (double p : v) {
    if (!(p >= 0.0) || !std::isfinite(p)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

inline void read_data(Reader r, DataSection& d) {
  r.integer("n_total", d.n_total);
  r.list("proportions", d.proportions);
  r.integer("seed", d.seed);
  r.number("test_fraction", d.test_fraction);
  r.string("output_dir", d.output_dir);
  r.reject_unknown();
  r.check(d.n_total >= 100, "n_total", "must be >= 100");
  r.check(d.proportions.size() == kNumClasses && sums_to_one(d.proportions), "proportions",
          "must be 5 nonnegative entries summing to 1");
  r.check(d.test_fraction > 0.0 && d.test_fraction < 1.0, "test_fraction", "must lie in (0,1)");
}

inline void read_train(Reader r, TrainSection& t) {
  auto& c = t.config;
  r.string("data_path", t.data_path);
  r.string("checkpoint_dir", t.checkpoint_dir);
  r.integer("latent_dim", c.latent_dim);
  r.integer("batch_size", c.batch_size);
  r.integer("levels", c.levels);
  r.integer("iters_per_level", c.iters_per_level);
  r.integer("stabilization_steps", c.stabilization_steps);
  r.integer("seed", c.seed);
  r.list("label_prior", c.label_prior);

  auto w = r.child("weights");
  w.number("lambda1", c.weights.lambda1);
  w.number("lambda2", c.weights.lambda2);
  w.number("lambda3", c.weights.lambda3);
  w.number("lambda4", c.weights.lambda4);
  w.number("lambda5", c.weights.lambda5);
  w.number("lambda_gp", c.weights.lambda_gp);
  w.number("beta", c.weights.beta);
  w.number("tau", c.weights.tau);
  std::vector<double> omega(c.weights.omega.begin(), c.weights.omega.end());
  w.list("omega", omega);
  w.reject_unknown();
  const auto& lw = c.weights;
  for (const auto& [key, v] : {std::pair<const char*, double>{"lambda1", lw.lambda1},
                               {"lambda2", lw.lambda2},
                               {"lambda3", lw.lambda3},
                               {"lambda4", lw.lambda4},
                               {"lambda5", lw.lambda5},
                               {"lambda_gp", lw.lambda_gp},
                               {"beta", lw.beta},
                               {"tau", lw.tau}}) {
    w.check(std::isfinite(v) && v >= 0.0, key, "must be finite and >= 0");
  }
  if (omega.size() == kNumBlocks) {
    std::copy(omega.begin(), omega.end(), c.weights.omega.begin());
    w.check(omega[0] >= 0.0 && omega[1] >= 0.0 && omega[2] >= 0.0, "omega", "entries must be >= 0");
  } else {
    w.check(false, "omega", "must have 3 entries");
  }

  auto o = r.child("optimizer");
  o.number("eta", c.optimizer.eta);
  o.number("beta1_D", c.optimizer.beta1_D);
  o.number("beta1_GE", c.optimizer.beta1_GE);
  o.number("beta1_C", c.optimizer.beta1_C);
  o.number("beta2", c.optimizer.beta2);
  o.reject_unknown();
  o.check(std::isfinite(c.optimizer.eta) && c.optimizer.eta > 0.0, "eta", "must be > 0");
  for (const auto& [key, v] : {std::pair<const char*, double>{"beta1_D", c.optimizer.beta1_D},
                               {"beta1_GE", c.optimizer.beta1_GE},
                               {"beta1_C", c.optimizer.beta1_C},
                               {"beta2", c.optimizer.beta2}}) {
    o.check(v >= 0.0 && v < 1.0, key, "must lie in [0,1)");
  }

  auto rp = r.child("replay");
  rp.integer("capacity", c.replay.capacity);
  rp.number("fraction", c.replay.fraction);
  rp.reject_unknown();
  rp.check(c.replay.fraction >= 0.0 && c.replay.fraction <= 1.0, "fraction", "must lie in [0,1]");

  r.reject_unknown();
  r.check(c.latent_dim >= 1, "latent_dim", "must be >= 1");
  r.check(c.batch_size >= 2, "batch_size", "must be >= 2");
  r.check(c.levels >= 1, "levels", "must be >= 1");
  r.check(c.iters_per_level >= 1, "iters_per_level", "must be >= 1");
  r.check(c.stabilization_steps >= 0, "stabilization_steps", "must be >= 0");
  r.check(c.label_prior.size() == kNumClasses && sums_to_one(c.label_prior), "label_prior",
          "must be 5 nonnegative entries summing to 1");
}

inline void read_synthesize(Reader r, SynthesizeSection& s) {
  r.string("checkpoint_dir", s.checkpoint_dir);
  r.integer("n", s.n);
  std::vector<long> counts;
  const bool has_counts = r.find("label_counts") != nullptr;
  r.list("label_counts", counts);
  if (has_counts) s.label_counts = counts;
  r.integer("seed", s.seed);
  r.string("output_dir", s.output_dir);
  r.reject_unknown();
  r.check(s.n >= 1, "n", "must be >= 1");
  if (s.label_counts) {
    long total = 0;
    bool nonneg = true;
    for (long c : *s.label_counts) {
      total += c;
      nonneg = nonneg && c >= 0;
    }
    r.check(s.label_counts->size() == kNumClasses && nonneg && total == s.n, "label_counts",
            "must be 5 nonnegative counts summing to n");
  }
}

inline void read_evaluate(Reader r, EvaluateSection& e) {
  r.string("real_path", e.real_path);
  r.string("real_test_path", e.real_test_path);
  r.string("synth_path", e.synth_path);
  r.string("report_dir", e.report_dir);
  r.integer("detector_seed", e.detector_seed);
  r.number("test_fraction", e.test_fraction);
  r.string("density_feature", e.density_feature);
  r.integer("grid_points", e.grid_points);
  r.integer("nn_bins", e.nn_bins);
  r.reject_unknown();
  r.check(e.test_fraction > 0.0 && e.test_fraction < 1.0, "test_fraction", "must lie in (0,1)");
  r.check(e.grid_points >= 2, "grid_points", "must be >= 2");
  r.check(e.nn_bins >= 1, "nn_bins", "must be >= 1");
  const auto names = benchmark_schema().names();
  r.check(std::find(names.begin(), names.end(), e.density_feature) != names.end(), "density_feature",
          "must name one of the 40 features");
}

inline void read_report(Reader r, ReportSection& s) {
  r.string("metrics_path", s.metrics_path);
  r.string("output_dir", s.output_dir);
  r.reject_unknown();
}

}  // namespace detail

/// Parses and validates; throws ValidationError listing every problem.
inline RunConfig parse_config(const json& doc) {
  std::vector<std::string> problems;
  RunConfig cfg;
  detail::Reader root(doc, "", problems);
  detail::read_data(root.child("data"), cfg.data);
  detail::read_train(root.child("train"), cfg.train);
  detail::read_synthesize(root.child("synthesize"), cfg.synthesize);
  detail::read_evaluate(root.child("evaluate"), cfg.evaluate);
  detail::read_report(root.child("report"), cfg.report);
  root.reject_unknown();
  if (!problems.empty()) throw ValidationError(std::move(problems));
  cfg.train.config.validate();
  return cfg;
}

/// Parses `value` as JSON when possible, else takes it as a string.
inline json parse_override_value(const std::string& value) {
  auto parsed = json::parse(value, nullptr, false);
  return parsed.is_discarded() ? json(value) : parsed;
}

/// Applies `section.key=value` overrides, creating intermediate objects.
inline void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  if (doc.is_null()) doc = json::object();
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError({item + ": override must have the form key=value"});
    }
    const std::string key = item.substr(0, eq);
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (part.empty()) throw ValidationError({key + ": empty path component"});
      if (!node->is_object()) throw ValidationError({key + ": cannot descend into a non-object"});
      if (dot == std::string::npos) {
        (*node)[part] = parse_override_value(item.substr(eq + 1));
        break;
      }
      node = &(*node)[part];
      if (node->is_null()) *node = json::object();
      start = dot + 1;
    }
  }
}

inline json load_config_document(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ValidationError({"config: file not found: " + path.string()});
  }
  auto doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) throw ValidationError({"config: not valid JSON: " + path.string()});
  return doc;
}

inline RunConfig validate_config(const std::filesystem::path& path,
                                 const std::vector<std::string>& overrides = {}) {
  json doc = load_config_document(path);
  apply_overrides(doc, overrides);
  return parse_config(doc);
}

// ---------------------------------------------------------------------------
// Resolved echo

inline json to_json(const TrainConfig& c) {
  return {{"latent_dim", c.latent_dim},
          {"batch_size", c.batch_size},
          {"levels", c.levels},
          {"iters_per_level", c.iters_per_level},
          {"stabilization_steps", c.stabilization_steps},
          {"seed", c.seed},
          {"label_prior", c.label_prior},
          {"weights",
           {{"lambda1", c.weights.lambda1},
            {"lambda2", c.weights.lambda2},
            {"lambda3", c.weights.lambda3},
            {"lambda4", c.weights.lambda4},
            {"lambda5", c.weights.lambda5},
            {"lambda_gp", c.weights.lambda_gp},
            {"beta", c.weights.beta},
            {"tau", c.weights.tau},
            {"omega", c.weights.omega}}},
          {"optimizer",
           {{"eta", c.optimizer.eta},
            {"beta1_D", c.optimizer.beta1_D},
            {"beta1_GE", c.optimizer.beta1_GE},
            {"beta1_C", c.optimizer.beta1_C},
            {"beta2", c.optimizer.beta2}}},
          {"replay", {{"capacity", c.replay.capacity}, {"fraction", c.replay.fraction}}}};
}

inline json to_json(const RunConfig& c) {
  json train = to_json(c.train.config);
  train["data_path"] = c.train.data_path;
  train["checkpoint_dir"] = c.train.checkpoint_dir;
  json synthesize = {{"checkpoint_dir", c.synthesize.checkpoint_dir},
                     {"n", c.synthesize.n},
                     {"label_counts", nullptr},
                     {"seed", c.synthesize.seed},
                     {"output_dir", c.synthesize.output_dir}};
  if (c.synthesize.label_counts) synthesize["label_counts"] = *c.synthesize.label_counts;
  return {{"data",
           {{"n_total", c.data.n_total},
            {"proportions", c.data.proportions},
            {"seed", c.data.seed},
            {"test_fraction", c.data.test_fraction},
            {"output_dir", c.data.output_dir}}},
          {"train", train},
          {"synthesize", synthesize},
          {"evaluate",
           {{"real_path", c.evaluate.real_path},
            {"real_test_path", c.evaluate.real_test_path},
            {"synth_path", c.evaluate.synth_path},
            {"report_dir", c.evaluate.report_dir},
            {"detector_seed", c.evaluate.detector_seed},
            {"test_fraction", c.evaluate.test_fraction},
            {"density_feature", c.evaluate.density_feature},
            {"grid_points", c.evaluate.grid_points},
            {"nn_bins", c.evaluate.nn_bins}}},
          {"report", {{"metrics_path", c.report.metrics_path}, {"output_dir", c.report.output_dir}}}};
}

/// Resolves every relative path against `base`.
inline void resolve_paths(RunConfig& c, const std::filesystem::path& base) {
  auto fix = [&](std::string& p) {
    if (!p.empty()) p = std::filesystem::weakly_canonical(base / p).string();
  };
  fix(c.data.output_dir);
  fix(c.train.data_path);
  fix(c.train.checkpoint_dir);
  fix(c.synthesize.checkpoint_dir);
  fix(c.synthesize.output_dir);
  fix(c.evaluate.real_path);
  fix(c.evaluate.real_test_path);
  fix(c.evaluate.synth_path);
  fix(c.evaluate.report_dir);
  fix(c.report.metrics_path);
  fix(c.report.output_dir);
}

}  // namespace phantom
