#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace phantom {

inline constexpr int kNumFeatures = 40;
inline constexpr int kNumClasses = 5;
inline constexpr int kEmbeddingDim = 32;

enum class Block { network = 0, temporal = 1, behavioral = 2 };
inline constexpr int kNumBlocks = 3;

inline const char* to_string(Block b) {
  switch (b) {
    case Block::network: return "network";
    case Block::temporal: return "temporal";
    case Block::behavioral: return "behavioral";
  }
  return "?";
}

// continuous: log-scaled magnitudes; rate: normalized to [0,1];
// count: nonnegative integers; categorical: one column of a one-hot group.
enum class FeatureKind { continuous, rate, count, categorical };

inline const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::continuous: return "continuous";
    case FeatureKind::rate: return "rate";
    case FeatureKind::count: return "count";
    case FeatureKind::categorical: return "categorical";
  }
  return "?";
}

struct FeatureInfo {
  std::string name;
  FeatureKind kind;
  Block block;
  int group = -1;  // categorical group index, -1 otherwise
};

struct CategoricalGroup {
  std::string name;
  std::vector<int> columns;
};

using BlockMap = std::array<Block, kNumFeatures>;

/// Column layout of the 40-feature benchmark. Blocks are contiguous:
/// 0-15 network, 16-27 temporal, 28-39 behavioral.
struct FeatureSchema {
  std::vector<FeatureInfo> features;
  std::vector<CategoricalGroup> groups;

  int index_of(std::string_view name) const {
    for (int i = 0; i < static_cast<int>(features.size()); ++i) {
      if (features[i].name == name) return i;
    }
    return -1;
  }

  BlockMap block_map() const {
    BlockMap map{};
    for (int i = 0; i < kNumFeatures; ++i) map[i] = features[i].block;
    return map;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(features.size());
    for (const auto& f : features) out.push_back(f.name);
    return out;
  }
};

inline BlockMap default_block_map() {
  BlockMap map{};
  for (int i = 0; i < kNumFeatures; ++i) {
    map[i] = i < 16 ? Block::network : (i < 28 ? Block::temporal : Block::behavioral);
  }
  return map;
}

/// Column indices of one block, in increasing order.
inline std::vector<int> block_columns(const BlockMap& map, Block b) {
  std::vector<int> cols;
  for (int i = 0; i < kNumFeatures; ++i) {
    if (map[i] == b) cols.push_back(i);
  }
  return cols;
}

inline const FeatureSchema& benchmark_schema() {
  static const FeatureSchema schema = [] {
    using K = FeatureKind;
    using B = Block;
    FeatureSchema s;
    auto add = [&](const char* name, K kind, B block, int group = -1) {
      s.features.push_back({name, kind, block, group});
    };
    s.groups = {{"protocol", {2, 3, 4}}, {"service", {5, 6, 7, 8}}, {"flag", {9, 10, 11}}};
    // network
    add("src_bytes_log", K::continuous, B::network);
    add("dst_bytes_log", K::continuous, B::network);
    add("protocol_tcp", K::categorical, B::network, 0);
    add("protocol_udp", K::categorical, B::network, 0);
    add("protocol_icmp", K::categorical, B::network, 0);
    add("service_http", K::categorical, B::network, 1);
    add("service_ftp", K::categorical, B::network, 1);
    add("service_smtp", K::categorical, B::network, 1);
    add("service_other", K::categorical, B::network, 1);
    add("flag_sf", K::categorical, B::network, 2);
    add("flag_s0", K::categorical, B::network, 2);
    add("flag_rej", K::categorical, B::network, 2);
    add("wrong_fragment", K::count, B::network);
    add("urgent", K::count, B::network);
    add("packet_rate", K::rate, B::network);
    add("byte_ratio", K::rate, B::network);
    // temporal
    add("duration_log", K::continuous, B::temporal);
    add("conn_count", K::count, B::temporal);
    add("srv_count", K::count, B::temporal);
    add("serror_rate", K::rate, B::temporal);
    add("srv_serror_rate", K::rate, B::temporal);
    add("rerror_rate", K::rate, B::temporal);
    add("same_srv_rate", K::rate, B::temporal);
    add("diff_srv_rate", K::rate, B::temporal);
    add("dst_host_count", K::count, B::temporal);
    add("dst_host_srv_count", K::count, B::temporal);
    add("dst_host_same_srv_rate", K::rate, B::temporal);
    add("inter_arrival_log", K::continuous, B::temporal);
    // behavioral
    add("hot_indicators", K::count, B::behavioral);
    add("failed_logins", K::count, B::behavioral);
    add("logged_in_rate", K::rate, B::behavioral);
    add("num_compromised", K::count, B::behavioral);
    add("root_shell_rate", K::rate, B::behavioral);
    add("su_attempted_rate", K::rate, B::behavioral);
    add("num_file_creations", K::count, B::behavioral);
    add("num_shells", K::count, B::behavioral);
    add("num_access_files", K::count, B::behavioral);
    add("session_continuity", K::rate, B::behavioral);
    add("payload_entropy", K::rate, B::behavioral);
    add("num_root", K::count, B::behavioral);
    return s;
  }();
  return schema;
}

/// Monotone pair constraint `features[lhs] <= features[rhs]`.
struct CausalConstraint {
  int lhs;
  int rhs;
  std::string name;
};

inline std::vector<CausalConstraint> benchmark_constraints() {
  const auto& s = benchmark_schema();
  return {
      {s.index_of("failed_logins"), s.index_of("conn_count"), "failed_logins <= conn_count"},
      {s.index_of("srv_count"), s.index_of("conn_count"), "srv_count <= conn_count"},
      {s.index_of("dst_host_srv_count"), s.index_of("dst_host_count"),
       "dst_host_srv_count <= dst_host_count"},
  };
}

inline const std::array<const char*, kNumClasses>& class_names() {
  static const std::array<const char*, kNumClasses> names = {"benign", "dos", "probe", "r2l",
                                                             "u2r"};
  return names;
}

}  // namespace phantom
