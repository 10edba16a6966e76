#pragma once

// Checkpoint directory: manifest.json plus one little-endian float64 .npy
// file per parameter array.

#include <bit>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "phantom/dataset_io.hpp"
#include "phantom/error.hpp"
#include "phantom/trainer.hpp"

namespace phantom {

inline constexpr int kCheckpointFormatVersion = 1;

namespace npy {

static_assert(std::endian::native == std::endian::little, "npy writer assumes little-endian");

inline std::string encode(const Matrix& m) {
  std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                       std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + "), }";
  // magic(6) + version(2) + header_len(2) + header, padded to a multiple of 64.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::string out("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(header.size());
  out.push_back(static_cast<char>(len & 0xff));
  out.push_back(static_cast<char>(len >> 8));
  out += header;
  const auto* bytes = reinterpret_cast<const char*>(m.data());
  out.append(bytes, static_cast<std::size_t>(m.size()) * sizeof(double));
  return out;
}

inline Matrix decode(const std::string& data, const std::string& what) {
  if (data.size() < 10 || data.compare(0, 6, "\x93NUMPY") != 0) {
    throw FormatError(what + ": not an npy file");
  }
  const auto len = static_cast<std::size_t>(static_cast<unsigned char>(data[8])) |
                   (static_cast<std::size_t>(static_cast<unsigned char>(data[9])) << 8);
  const std::string header = data.substr(10, len);
  if (header.find("'<f8'") == std::string::npos || header.find("'fortran_order': False") == std::string::npos) {
    throw FormatError(what + ": expected C-ordered float64 array");
  }
  const auto open = header.find("'shape': (");
  if (open == std::string::npos) throw FormatError(what + ": missing shape");
  long rows = 0, cols = 0;
  if (std::sscanf(header.c_str() + open + 10, "%ld, %ld", &rows, &cols) != 2) {
    throw FormatError(what + ": expected a 2-D shape");
  }
  const std::size_t offset = 10 + len;
  const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
  if (data.size() != offset + bytes) throw FormatError(what + ": truncated data");
  Matrix m(rows, cols);
  std::memcpy(m.data(), data.data() + offset, bytes);
  return m;
}

}  // namespace npy

namespace detail {

struct ArrayRef {
  std::string name;
  Matrix* target;
};

inline void collect_mlp(std::vector<ArrayRef>& out, const std::string& prefix, nn::Mlp& net) {
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    out.push_back({prefix + ".layer" + std::to_string(k) + ".weight", &net.layer(k).weight});
    out.push_back({prefix + ".layer" + std::to_string(k) + ".bias", &net.layer(k).bias});
  }
}

inline nlohmann::json architecture_json(const ModelParameters& m) {
  return {{"encoder", m.encoder.net().widths()},
          {"generator", m.generator.net().widths()},
          {"critic", m.critic.net().widths()},
          {"classifier", m.classifier.net().widths()},
          {"hidden_activation", "leaky_relu"},
          {"leaky_slope", nn::kLeakySlope},
          {"output_activation", "linear"},
          {"generator_heads", "sigmoid(rate), softmax(categorical group), linear(other)"}};
}

inline nlohmann::json adam_json(const nn::Adam& a) {
  return {{"learning_rate", a.config().learning_rate},
          {"beta1", a.config().beta1},
          {"beta2", a.config().beta2},
          {"epsilon", a.config().epsilon},
          {"steps", a.steps()}};
}

}  // namespace detail

/// Writes the trained state. `config_echo` is stored verbatim in the manifest.
inline void save_checkpoint(const fs::path& dir, const TrainState& const_state,
                            const nlohmann::json& config_echo) {
  fs::create_directories(dir);
  TrainState state = const_state;  // mutable copy for uniform array access
  auto& m = state.models;
  std::vector<detail::ArrayRef> arrays;
  detail::collect_mlp(arrays, "encoder", m.encoder.net());
  detail::collect_mlp(arrays, "generator", m.generator.net());
  detail::collect_mlp(arrays, "critic", m.critic.net());
  detail::collect_mlp(arrays, "classifier", m.classifier.net());
  Matrix codec_mean = m.codec.mean();
  Matrix codec_scale = m.codec.scale();
  Matrix placeholder = m.generator.placeholder();
  arrays.push_back({"codec.mean", &codec_mean});
  arrays.push_back({"codec.scale", &codec_scale});
  arrays.push_back({"generator.placeholder", &placeholder});
  std::vector<Matrix> extractor_arrays;
  for (int b = 0; b < kNumBlocks; ++b) {
    extractor_arrays.push_back(state.extractors.weights(b));
    extractor_arrays.push_back(state.extractors.bias(b));
  }
  for (int b = 0; b < kNumBlocks; ++b) {
    const std::string block = to_string(static_cast<Block>(b));
    arrays.push_back({"extractor." + block + ".weight", &extractor_arrays[2 * b]});
    arrays.push_back({"extractor." + block + ".bias", &extractor_arrays[2 * b + 1]});
  }
  std::vector<Matrix> moments;
  std::vector<std::string> moment_names;
  auto add_moments = [&](const std::string& prefix, const nn::Adam& opt) {
    for (std::size_t i = 0; i < opt.first_moments().size(); ++i) {
      moments.push_back(opt.first_moments()[i]);
      moment_names.push_back("optimizer." + prefix + ".m" + std::to_string(i));
      moments.push_back(opt.second_moments()[i]);
      moment_names.push_back("optimizer." + prefix + ".v" + std::to_string(i));
    }
  };
  add_moments("D", state.opt_d);
  add_moments("GE", state.opt_ge);
  add_moments("C", state.opt_c);
  for (std::size_t i = 0; i < moments.size(); ++i) arrays.push_back({moment_names[i], &moments[i]});

  nlohmann::json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["config"] = config_echo;
  manifest["step"] = state.step;
  manifest["level"] = state.level;
  manifest["alpha"] = state.alpha;
  manifest["latent_dim"] = m.latent_dim;
  manifest["levels"] = m.levels;
  manifest["architecture"] = detail::architecture_json(m);
  manifest["extractor"] = {{"seed", state.extractors.seed()},
                           {"nonlinearity", ExtractorParams::kNonlinearity},
                           {"embedding_dim", kEmbeddingDim},
                           {"checksum", state.extractors.checksum()}};
  manifest["optimizers"] = {{"D", detail::adam_json(state.opt_d)},
                            {"GE", detail::adam_json(state.opt_ge)},
                            {"C", detail::adam_json(state.opt_c)}};
  manifest["replay_buffer"] = {{"capacity", state.buffer.capacity()}, {"size", state.buffer.size()}};
  nlohmann::json list = nlohmann::json::array();
  for (const auto& a : arrays) {
    const std::string file = a.name + ".npy";
    write_file_atomic(dir / file, npy::encode(*a.target));
    list.push_back({{"name", a.name}, {"file", file}, {"shape", {a.target->rows(), a.target->cols()}}});
  }
  manifest["arrays"] = list;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline nlohmann::json read_manifest(const fs::path& dir) {
  const auto text = read_file(dir / "manifest.json");
  auto manifest = nlohmann::json::parse(text, nullptr, false);
  if (manifest.is_discarded()) throw FormatError("checkpoint manifest is not valid JSON");
  if (manifest.value("format_version", 0) != kCheckpointFormatVersion) {
    throw FormatError("unsupported checkpoint format version");
  }
  return manifest;
}

/// Restores the generator-side model (all four networks and the codec).
inline ModelParameters load_models(const fs::path& dir) {
  const auto manifest = read_manifest(dir);
  ModelParameters m;
  m.latent_dim = manifest.at("latent_dim").get<int>();
  m.levels = manifest.at("levels").get<int>();
  const auto& arch = manifest.at("architecture");
  auto hidden = [](std::vector<int> w) { return std::vector<int>(w.begin() + 1, w.end() - 1); };
  m.architecture.encoder_hidden = hidden(arch.at("encoder").get<std::vector<int>>());
  m.architecture.generator_hidden = hidden(arch.at("generator").get<std::vector<int>>());
  m.architecture.critic_hidden = hidden(arch.at("critic").get<std::vector<int>>());
  m.architecture.classifier_hidden = hidden(arch.at("classifier").get<std::vector<int>>());
  m = ModelParameters::initialize(m.latent_dim, m.levels, m.architecture, 0);

  std::vector<detail::ArrayRef> arrays;
  detail::collect_mlp(arrays, "encoder", m.encoder.net());
  detail::collect_mlp(arrays, "generator", m.generator.net());
  detail::collect_mlp(arrays, "critic", m.critic.net());
  detail::collect_mlp(arrays, "classifier", m.classifier.net());
  Matrix codec_mean, codec_scale, placeholder;
  arrays.push_back({"codec.mean", &codec_mean});
  arrays.push_back({"codec.scale", &codec_scale});
  arrays.push_back({"generator.placeholder", &placeholder});

  for (auto& a : arrays) {
    const auto path = dir / (a.name + ".npy");
    Matrix loaded = npy::decode(read_file(path), path.string());
    if (a.target->size() != 0 && (loaded.rows() != a.target->rows() || loaded.cols() != a.target->cols())) {
      throw FormatError("array " + a.name + " has unexpected shape");
    }
    *a.target = std::move(loaded);
  }
  m.codec = FeatureCodec::from_arrays(codec_mean.row(0), codec_scale.row(0));
  m.generator.set_placeholder(placeholder.row(0));
  return m;
}

}  // namespace phantom
