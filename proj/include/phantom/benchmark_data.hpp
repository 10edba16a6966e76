#pragma once

// Seeded generator for the five-class, 40-feature network-traffic benchmark
// plus the stratified train/test split used for evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "phantom/error.hpp"
#include "phantom/random.hpp"
#include "phantom/schema.hpp"
#include "phantom/tensor.hpp"

namespace phantom {

inline constexpr const char* kGeneratorVersion = "phantom-benchmark/1";
inline constexpr double kNoiseFraction = 0.05;

/// Per-feature distribution descriptor. `location`/`scale` parameterize a
/// Gaussian (continuous, rate) or the Poisson rate (count, `location` only).
/// Categorical columns of one group carry identical `weights`.
struct FeatureSignature {
  FeatureKind family = FeatureKind::continuous;
  double location = 0.0;
  double scale = 1.0;
  std::vector<double> weights;
};

struct ClassSpec {
  int class_id = 0;
  std::string name;
  double proportion = 0.0;
  std::vector<FeatureSignature> feature_signature;  // one per feature index
};

struct DatasetTable {
  Matrix features;  // n x 40
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  BlockMap block_map = default_block_map();

  Eigen::Index rows() const { return features.rows(); }
  bool empty() const { return features.rows() == 0; }

  std::array<long, kNumClasses> class_counts() const {
    std::array<long, kNumClasses> counts{};
    for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
    return counts;
  }

  DatasetTable select(const std::vector<Eigen::Index>& rows_to_take) const {
    DatasetTable out;
    out.feature_names = feature_names;
    out.block_map = block_map;
    out.features.resize(static_cast<Eigen::Index>(rows_to_take.size()), features.cols());
    out.labels.reserve(rows_to_take.size());
    for (std::size_t i = 0; i < rows_to_take.size(); ++i) {
      out.features.row(static_cast<Eigen::Index>(i)) = features.row(rows_to_take[i]);
      out.labels.push_back(labels[static_cast<std::size_t>(rows_to_take[i])]);
    }
    return out;
  }
};

/// Empty 40-column table carrying the benchmark's names and block map.
inline DatasetTable empty_table(Eigen::Index rows = 0) {
  DatasetTable t;
  t.features = Matrix::Zero(rows, kNumFeatures);
  t.labels.assign(static_cast<std::size_t>(rows), 0);
  t.feature_names = benchmark_schema().names();
  return t;
}

/// Checks the DatasetTable invariants against the benchmark schema.
inline void validate_table(const DatasetTable& t) {
  if (t.features.cols() != kNumFeatures) {
    throw SchemaError("table has " + std::to_string(t.features.cols()) + " feature columns");
  }
  if (static_cast<Eigen::Index>(t.labels.size()) != t.features.rows()) {
    throw SchemaError("label count does not match row count");
  }
  if (static_cast<int>(t.feature_names.size()) != kNumFeatures) {
    throw SchemaError("feature_names must have 40 entries");
  }
  if (!t.features.allFinite()) throw SchemaError("table contains non-finite values");
  const auto& schema = benchmark_schema();
  for (Eigen::Index r = 0; r < t.features.rows(); ++r) {
    const int y = t.labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= kNumClasses) {
      throw SchemaError("row " + std::to_string(r) + " has label " + std::to_string(y));
    }
    for (int c = 0; c < kNumFeatures; ++c) {
      const double v = t.features(r, c);
      switch (schema.features[c].kind) {
        case FeatureKind::rate:
          if (v < 0.0 || v > 1.0) {
            throw SchemaError("rate feature " + schema.features[c].name + " out of [0,1] at row " +
                              std::to_string(r));
          }
          break;
        case FeatureKind::count:
          if (v < 0.0 || v != std::floor(v)) {
            throw SchemaError("count feature " + schema.features[c].name +
                              " is not a nonnegative integer at row " + std::to_string(r));
          }
          break;
        case FeatureKind::categorical:
          if (v != 0.0 && v != 1.0) {
            throw SchemaError("categorical feature " + schema.features[c].name +
                              " is not 0/1 at row " + std::to_string(r));
          }
          break;
        case FeatureKind::continuous:
          break;
      }
    }
  }
}

/// Largest-remainder apportionment: floor(n*p_c) per class, remaining units go
/// to the largest fractional parts (ties to the lower class id).
inline std::vector<long> allocate_counts(long n, const std::vector<double>& proportions) {
  std::vector<long> counts(proportions.size());
  std::vector<double> remainders(proportions.size());
  long assigned = 0;
  for (std::size_t c = 0; c < proportions.size(); ++c) {
    const double quota = static_cast<double>(n) * proportions[c];
    counts[c] = static_cast<long>(std::floor(quota + 1e-9));
    remainders[c] = quota - static_cast<double>(counts[c]);
    assigned += counts[c];
  }
  std::vector<std::size_t> order(proportions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < n && !order.empty(); k = (k + 1) % order.size()) {
    ++counts[order[k]];
    ++assigned;
  }
  return counts;
}

inline void check_proportions(const std::vector<double>& proportions) {
  if (proportions.size() != static_cast<std::size_t>(kNumClasses)) {
    throw ConfigError("expected 5 class proportions");
  }
  double sum = 0.0;
  for (double p : proportions) {
    if (!(p >= 0.0)) throw ConfigError("class proportions must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("class proportions sum to " + std::to_string(sum) + ", expected 1");
  }
}

namespace detail {

struct SignatureBuilder {
  std::vector<FeatureSignature> sig;

  SignatureBuilder() {
    const auto& schema = benchmark_schema();
    sig.resize(kNumFeatures);
    for (int i = 0; i < kNumFeatures; ++i) sig[i].family = schema.features[i].kind;
  }
  SignatureBuilder& gauss(const char* name, double loc, double scale) {
    auto& s = sig.at(static_cast<std::size_t>(benchmark_schema().index_of(name)));
    s.location = loc;
    s.scale = scale;
    return *this;
  }
  SignatureBuilder& poisson(const char* name, double rate) {
    auto& s = sig.at(static_cast<std::size_t>(benchmark_schema().index_of(name)));
    s.location = rate;
    s.scale = 0.0;
    return *this;
  }
  SignatureBuilder& categorical(const char* group, std::vector<double> weights) {
    for (const auto& g : benchmark_schema().groups) {
      if (g.name == group) {
        for (int c : g.columns) sig[static_cast<std::size_t>(c)].weights = weights;
      }
    }
    return *this;
  }
};

inline SignatureBuilder benign_signature() {
  SignatureBuilder b;
  b.gauss("src_bytes_log", 6.0, 1.0)
      .gauss("dst_bytes_log", 7.0, 1.2)
      .categorical("protocol", {0.80, 0.15, 0.05})
      .categorical("service", {0.60, 0.05, 0.15, 0.20})
      .categorical("flag", {0.95, 0.03, 0.02})
      .poisson("wrong_fragment", 0.02)
      .poisson("urgent", 0.01)
      .gauss("packet_rate", 0.20, 0.08)
      .gauss("byte_ratio", 0.50, 0.15)
      .gauss("duration_log", 2.0, 1.0)
      .poisson("conn_count", 5.0)
      .poisson("srv_count", 4.0)
      .gauss("serror_rate", 0.02, 0.02)
      .gauss("srv_serror_rate", 0.02, 0.02)
      .gauss("rerror_rate", 0.03, 0.03)
      .gauss("same_srv_rate", 0.85, 0.10)
      .gauss("diff_srv_rate", 0.05, 0.05)
      .poisson("dst_host_count", 20.0)
      .poisson("dst_host_srv_count", 15.0)
      .gauss("dst_host_same_srv_rate", 0.80, 0.10)
      .gauss("inter_arrival_log", 1.0, 0.5)
      .poisson("hot_indicators", 0.2)
      .poisson("failed_logins", 0.02)
      .gauss("logged_in_rate", 0.70, 0.20)
      .poisson("num_compromised", 0.05)
      .gauss("root_shell_rate", 0.01, 0.01)
      .gauss("su_attempted_rate", 0.005, 0.01)
      .poisson("num_file_creations", 0.1)
      .poisson("num_shells", 0.02)
      .poisson("num_access_files", 0.05)
      .gauss("session_continuity", 0.80, 0.10)
      .gauss("payload_entropy", 0.50, 0.10)
      .poisson("num_root", 0.02);
  return b;
}

}  // namespace detail

/// Default five-class mix (70/15/10/4/1 percent). Only the DoS source-byte
/// volume and connection counts and the U2R duration/protocol signature are
/// grounded in the benchmark description; the remaining parameters are
/// hand-chosen to keep classes distinct.
inline std::vector<ClassSpec> default_class_specs() {
  std::vector<ClassSpec> specs;
  const std::array<double, kNumClasses> proportions = {0.70, 0.15, 0.10, 0.04, 0.01};

  auto benign = detail::benign_signature();

  auto dos = detail::benign_signature();
  dos.gauss("src_bytes_log", 11.0, 0.8)
      .gauss("dst_bytes_log", 2.0, 1.0)
      .categorical("protocol", {0.50, 0.20, 0.30})
      .categorical("service", {0.50, 0.02, 0.08, 0.40})
      .categorical("flag", {0.20, 0.70, 0.10})
      .gauss("packet_rate", 0.90, 0.05)
      .gauss("byte_ratio", 0.95, 0.03)
      .gauss("duration_log", 0.3, 0.3)
      .poisson("conn_count", 150.0)
      .poisson("srv_count", 120.0)
      .gauss("serror_rate", 0.80, 0.10)
      .gauss("srv_serror_rate", 0.80, 0.10)
      .gauss("same_srv_rate", 0.95, 0.03)
      .gauss("diff_srv_rate", 0.02, 0.02)
      .poisson("dst_host_count", 200.0)
      .poisson("dst_host_srv_count", 180.0)
      .gauss("dst_host_same_srv_rate", 0.95, 0.03)
      .gauss("inter_arrival_log", -2.0, 0.5)
      .gauss("logged_in_rate", 0.05, 0.05)
      .gauss("session_continuity", 0.10, 0.05)
      .gauss("payload_entropy", 0.20, 0.08);

  auto probe = detail::benign_signature();
  probe.gauss("src_bytes_log", 3.0, 0.8)
      .gauss("dst_bytes_log", 2.0, 1.0)
      .categorical("protocol", {0.50, 0.10, 0.40})
      .categorical("service", {0.10, 0.10, 0.10, 0.70})
      .categorical("flag", {0.20, 0.30, 0.50})
      .gauss("packet_rate", 0.50, 0.10)
      .gauss("duration_log", 0.5, 0.4)
      .poisson("conn_count", 40.0)
      .poisson("srv_count", 5.0)
      .gauss("rerror_rate", 0.60, 0.15)
      .gauss("same_srv_rate", 0.10, 0.08)
      .gauss("diff_srv_rate", 0.80, 0.10)
      .poisson("dst_host_count", 150.0)
      .poisson("dst_host_srv_count", 10.0)
      .gauss("dst_host_same_srv_rate", 0.10, 0.08)
      .gauss("inter_arrival_log", -0.5, 0.5)
      .gauss("logged_in_rate", 0.10, 0.08)
      .gauss("session_continuity", 0.20, 0.10);

  auto r2l = detail::benign_signature();
  r2l.gauss("src_bytes_log", 7.5, 0.8)
      .gauss("dst_bytes_log", 5.0, 1.0)
      .categorical("protocol", {0.95, 0.04, 0.01})
      .categorical("service", {0.10, 0.50, 0.30, 0.10})
      .categorical("flag", {0.80, 0.10, 0.10})
      .gauss("duration_log", 4.0, 0.8)
      .poisson("conn_count", 3.0)
      .poisson("srv_count", 2.0)
      .poisson("hot_indicators", 3.0)
      .poisson("failed_logins", 2.0)
      .gauss("logged_in_rate", 0.40, 0.15)
      .poisson("num_access_files", 1.0)
      .gauss("payload_entropy", 0.75, 0.08);

  auto u2r = detail::benign_signature();
  u2r.gauss("src_bytes_log", 6.5, 0.8)
      .gauss("duration_log", 7.0, 1.0)
      .categorical("protocol", {0.99, 0.005, 0.005})
      .categorical("service", {0.05, 0.20, 0.05, 0.70})
      .poisson("hot_indicators", 5.0)
      .gauss("logged_in_rate", 0.95, 0.04)
      .poisson("num_compromised", 4.0)
      .gauss("root_shell_rate", 0.80, 0.10)
      .gauss("su_attempted_rate", 0.50, 0.15)
      .poisson("num_file_creations", 3.0)
      .poisson("num_shells", 2.0)
      .gauss("session_continuity", 0.95, 0.04)
      .poisson("num_root", 5.0);

  const std::array<detail::SignatureBuilder*, kNumClasses> sigs = {&benign, &dos, &probe, &r2l,
                                                                     &u2r};
  for (int c = 0; c < kNumClasses; ++c) {
    specs.push_back({c, class_names()[static_cast<std::size_t>(c)],
                     proportions[static_cast<std::size_t>(c)], sigs[static_cast<std::size_t>(c)]->sig});
  }
  return specs;
}

inline std::vector<double> proportions_of(const std::vector<ClassSpec>& specs) {
  std::vector<double> p(kNumClasses, 0.0);
  for (const auto& s : specs) p.at(static_cast<std::size_t>(s.class_id)) = s.proportion;
  return p;
}

namespace detail {

inline void validate_specs(const std::vector<ClassSpec>& specs) {
  if (specs.size() != static_cast<std::size_t>(kNumClasses)) {
    throw ConfigError("expected 5 class specs, got " + std::to_string(specs.size()));
  }
  std::array<bool, kNumClasses> seen{};
  for (const auto& s : specs) {
    if (s.class_id < 0 || s.class_id >= kNumClasses || seen[static_cast<std::size_t>(s.class_id)]) {
      throw ConfigError("class specs must cover class ids 0..4 exactly once");
    }
    seen[static_cast<std::size_t>(s.class_id)] = true;
    if (s.feature_signature.size() != static_cast<std::size_t>(kNumFeatures)) {
      throw ConfigError("class spec '" + s.name + "' must describe all 40 features");
    }
  }
  check_proportions(proportions_of(specs));
}

inline void draw_row(const ClassSpec& spec, Rng& rng, double* row) {
  const auto& schema = benchmark_schema();
  for (int c = 0; c < kNumFeatures; ++c) {
    const auto& sig = spec.feature_signature[static_cast<std::size_t>(c)];
    switch (schema.features[c].kind) {
      case FeatureKind::continuous:
        row[c] = sig.location + sig.scale * rng.normal() + kNoiseFraction * sig.scale * rng.normal();
        break;
      case FeatureKind::rate: {
        const double v =
            sig.location + sig.scale * rng.normal() + kNoiseFraction * sig.scale * rng.normal();
        row[c] = std::clamp(v, 0.0, 1.0);
        break;
      }
      case FeatureKind::count: {
        const double rate = sig.location * std::max(0.0, 1.0 + kNoiseFraction * rng.normal());
        row[c] = rate > 0.0
                     ? static_cast<double>(std::poisson_distribution<long>(rate)(rng.engine()))
                     : 0.0;
        break;
      }
      case FeatureKind::categorical:
        row[c] = 0.0;
        break;
    }
  }
  for (const auto& g : schema.groups) {
    const auto& weights = spec.feature_signature[static_cast<std::size_t>(g.columns.front())].weights;
    if (weights.size() != g.columns.size()) {
      throw ConfigError("class spec '" + spec.name + "' has bad weights for group " + g.name);
    }
    const int pick = rng.categorical(weights);
    row[g.columns[static_cast<std::size_t>(pick)]] = 1.0;
  }
  for (const auto& k : benchmark_constraints()) row[k.lhs] = std::min(row[k.lhs], row[k.rhs]);
}

}  // namespace detail

/// Shuffled table with exact per-class counts. Each class chunk is drawn from
/// its own child seed, so output depends only on the arguments.
inline DatasetTable generate_benchmark(long n_total, const std::vector<ClassSpec>& specs,
                                       std::uint64_t seed) {
  if (n_total < 100) throw ConfigError("n_total must be at least 100");
  detail::validate_specs(specs);
  const auto proportions = proportions_of(specs);
  const auto counts = allocate_counts(n_total, proportions);
  for (int c = 0; c < kNumClasses; ++c) {
    if (proportions[static_cast<std::size_t>(c)] > 0.0 && counts[static_cast<std::size_t>(c)] < 1) {
      throw InfeasibleSplitError("n_total=" + std::to_string(n_total) +
                                 " leaves class " + std::to_string(c) + " without samples");
    }
  }

  std::vector<const ClassSpec*> by_id(kNumClasses);
  for (const auto& s : specs) by_id[static_cast<std::size_t>(s.class_id)] = &s;

  DatasetTable table = empty_table(n_total);
  Eigen::Index row = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    Rng rng(child_seed(seed, static_cast<std::uint64_t>(c)));
    for (long k = 0; k < counts[static_cast<std::size_t>(c)]; ++k, ++row) {
      detail::draw_row(*by_id[static_cast<std::size_t>(c)], rng, table.features.row(row).data());
      table.labels[static_cast<std::size_t>(row)] = c;
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_total));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(child_seed(seed, 1000));
  shuffle_rng.shuffle(order);
  return table.select(order);
}

struct SplitPair {
  DatasetTable train;
  DatasetTable test;
  std::vector<Eigen::Index> train_rows;  // provenance: row indices into the parent
  std::vector<Eigen::Index> test_rows;
};

/// Per-class test quotas: largest-remainder apportionment of
/// round(n * test_fraction) across classes proportional to their counts.
inline std::vector<long> stratified_test_counts(const std::array<long, kNumClasses>& class_counts,
                                                double test_fraction) {
  long n = 0;
  for (long c : class_counts) n += c;
  const long test_total = std::lround(static_cast<double>(n) * test_fraction);
  std::vector<double> shares(kNumClasses);
  for (int c = 0; c < kNumClasses; ++c) {
    shares[static_cast<std::size_t>(c)] =
        n > 0 ? static_cast<double>(class_counts[static_cast<std::size_t>(c)]) / static_cast<double>(n)
              : 0.0;
  }
  return allocate_counts(test_total, shares);
}

inline SplitPair stratified_split(const DatasetTable& table, double test_fraction,
                                 std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie strictly between 0 and 1");
  }
  const auto counts = table.class_counts();
  for (int c = 0; c < kNumClasses; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 1) {
      throw InfeasibleSplitError("class " + std::to_string(c) + " has a single sample");
    }
  }
  const auto quotas = stratified_test_counts(counts, test_fraction);

  std::array<std::vector<Eigen::Index>, kNumClasses> members;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    members[static_cast<std::size_t>(table.labels[static_cast<std::size_t>(r)])].push_back(r);
  }
  SplitPair out;
  for (int c = 0; c < kNumClasses; ++c) {
    auto& rows = members[static_cast<std::size_t>(c)];
    Rng rng(child_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(rows);
    const auto take = static_cast<std::size_t>(quotas[static_cast<std::size_t>(c)]);
    out.test_rows.insert(out.test_rows.end(), rows.begin(), rows.begin() + static_cast<long>(take));
    out.train_rows.insert(out.train_rows.end(), rows.begin() + static_cast<long>(take), rows.end());
  }
  Rng mix(child_seed(seed, 1000));
  mix.shuffle(out.test_rows);
  mix.shuffle(out.train_rows);
  out.train = table.select(out.train_rows);
  out.test = table.select(out.test_rows);
  return out;
}

}  // namespace phantom
