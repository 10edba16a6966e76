#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "phantom/benchmark_data.hpp"
#include "phantom/error.hpp"

namespace phantom {

namespace fs = std::filesystem;

/// Writes `content` to `<path>.tmp` and renames it over `path`.
inline void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Shortest decimal text that parses back to the same double (max 17 digits).
inline std::string format_double(double v) {
  char buf[32];
  for (int precision = 12; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    double back = 0.0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == v) break;
  }
  return buf;
}

inline std::string to_csv(const DatasetTable& table) {
  std::string out;
  out.reserve(static_cast<std::size_t>(table.rows()) * 41 * 10 + 1024);
  for (const auto& name : table.feature_names) {
    out += name;
    out += ',';
  }
  out += "label\n";
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.features.cols(); ++c) {
      out += format_double(table.features(r, c));
      out += ',';
    }
    out += std::to_string(table.labels[static_cast<std::size_t>(r)]);
    out += '\n';
  }
  return out;
}

inline void write_csv(const DatasetTable& table, const fs::path& path) {
  write_file_atomic(path, to_csv(table));
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

inline bool parse_number(std::string_view field, double& out) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
  if (field.empty()) return false;
  const char* begin = field.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

}  // namespace detail

/// Row numbers in errors are 1-based file lines (the header is line 1).
inline DatasetTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file: missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_fields(line);
  if (header.size() != static_cast<std::size_t>(kNumFeatures + 1)) {
    throw FormatError("header has " + std::to_string(header.size()) + " columns, expected 41", 1);
  }
  if (header.back() != "label") throw FormatError("last header column must be 'label'", 1, 41);
  DatasetTable table;
  for (int c = 0; c < kNumFeatures; ++c) {
    if (header[static_cast<std::size_t>(c)].empty()) {
      throw FormatError("empty feature name in header", 1, c + 1);
    }
    table.feature_names.emplace_back(header[static_cast<std::size_t>(c)]);
  }

  std::vector<double> values;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != static_cast<std::size_t>(kNumFeatures + 1)) {
      throw FormatError("row " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                            " columns, expected 41",
                        line_no);
    }
    for (int c = 0; c < kNumFeatures; ++c) {
      double v = 0.0;
      if (!detail::parse_number(fields[static_cast<std::size_t>(c)], v)) {
        throw FormatError("row " + std::to_string(line_no) + " column " + std::to_string(c + 1) +
                              " ('" + table.feature_names[static_cast<std::size_t>(c)] +
                              "') is not numeric",
                          line_no, c + 1);
      }
      values.push_back(v);
    }
    double label = 0.0;
    if (!detail::parse_number(fields.back(), label) || label != std::floor(label) || label < 0 ||
        label >= kNumClasses) {
      throw FormatError("row " + std::to_string(line_no) + " has an invalid label", line_no, 41);
    }
    table.labels.push_back(static_cast<int>(label));
  }
  const auto n = static_cast<Eigen::Index>(table.labels.size());
  table.features = Eigen::Map<const Matrix>(values.data(), n, kNumFeatures);
  return table;
}

inline DatasetTable read_csv(const fs::path& path) { return parse_csv(read_file(path)); }

/// Sidecar metadata written next to a generated benchmark CSV.
inline nlohmann::json benchmark_metadata(const std::vector<ClassSpec>& specs, long n_total,
                                         std::uint64_t seed) {
  nlohmann::json j;
  j["generator_version"] = kGeneratorVersion;
  j["seed"] = seed;
  j["n_total"] = n_total;
  nlohmann::json block_map = nlohmann::json::array();
  const auto map = default_block_map();
  for (int i = 0; i < kNumFeatures; ++i) block_map.push_back(to_string(map[static_cast<std::size_t>(i)]));
  j["block_map"] = block_map;
  j["feature_names"] = benchmark_schema().names();
  nlohmann::json jspecs = nlohmann::json::array();
  for (const auto& s : specs) {
    nlohmann::json js;
    js["class_id"] = s.class_id;
    js["name"] = s.name;
    js["proportion"] = s.proportion;
    nlohmann::json sig = nlohmann::json::array();
    for (const auto& f : s.feature_signature) {
      nlohmann::json jf;
      jf["family"] = to_string(f.family);
      jf["location"] = f.location;
      jf["scale"] = f.scale;
      if (!f.weights.empty()) jf["weights"] = f.weights;
      sig.push_back(jf);
    }
    js["feature_signature"] = sig;
    jspecs.push_back(js);
  }
  j["specs"] = jspecs;
  nlohmann::json constraints = nlohmann::json::array();
  for (const auto& k : benchmark_constraints()) {
    constraints.push_back({{"lhs", k.lhs}, {"rhs", k.rhs}, {"name", k.name}});
  }
  j["causal_constraints"] = constraints;
  j["noise_fraction"] = kNoiseFraction;
  return j;
}

}  // namespace phantom
