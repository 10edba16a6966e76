#pragma once

// The four trainable components: encoder E, conditional generator G,
// conditional Wasserstein critic D and classifier C. All are MLPs; G and D
// receive the one-hot class label concatenated to their input.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "phantom/codec.hpp"
#include "phantom/error.hpp"
#include "phantom/nn.hpp"
#include "phantom/progressive.hpp"
#include "phantom/schema.hpp"
#include "phantom/tensor.hpp"

namespace phantom {

inline Matrix one_hot(const std::vector<int>& labels, int classes = kNumClasses) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw InputError("label " + std::to_string(labels[i]) + " outside 0.." +
                       std::to_string(classes - 1));
    }
    out(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return out;
}

inline Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("row count mismatch in concatenation");
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

struct LatentSample {
  Matrix mu;
  Matrix sigma;
  Matrix epsilon;
  Matrix z_c;
};

/// z_c = mu + sigma (elementwise) epsilon.
inline Matrix reparameterize(const Matrix& mu, const Matrix& sigma, const Matrix& epsilon) {
  require_same_shape(mu, sigma, "reparameterize(mu, sigma)");
  require_same_shape(mu, epsilon, "reparameterize(mu, epsilon)");
  return (mu.array() + sigma.array() * epsilon.array()).matrix();
}

struct Architecture {
  std::vector<int> encoder_hidden{128, 128};
  std::vector<int> generator_hidden{256, 256};
  std::vector<int> critic_hidden{128, 128};
  std::vector<int> classifier_hidden{128, 128};
};

namespace detail {
inline std::vector<int> widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}
}  // namespace detail

class Encoder {
 public:
  struct Cache {
    nn::MlpCache mlp;
    Matrix log_var;
  };

  Encoder() = default;
  Encoder(int latent_dim, const std::vector<int>& hidden, Rng& rng)
      : latent_dim_(latent_dim), net_(detail::widths(kNumFeatures, hidden, 2 * latent_dim), rng) {}

  int latent_dim() const { return latent_dim_; }
  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }

  /// Returns (mu, sigma) with sigma = exp(log_var / 2).
  std::pair<Matrix, Matrix> encode(const Matrix& x, Cache* cache = nullptr) const {
    require_finite(x, "encoder input");
    nn::MlpCache local;
    const Matrix out = net_.forward(x, cache ? &cache->mlp : &local);
    Matrix mu = out.leftCols(latent_dim_);
    Matrix log_var = out.rightCols(latent_dim_);
    Matrix sigma = (0.5 * log_var.array()).exp().matrix();
    if (cache) cache->log_var = log_var;
    return {std::move(mu), std::move(sigma)};
  }

  /// Backward from dL/dmu and dL/dsigma.
  void backward(const Cache& cache, const Matrix& d_mu, const Matrix& d_sigma,
                nn::Gradients* grads) const {
    const Matrix sigma = (0.5 * cache.log_var.array()).exp().matrix();
    const Matrix d_log_var = (d_sigma.array() * 0.5 * sigma.array()).matrix();
    net_.backward(cache.mlp, hconcat(d_mu, d_log_var), grads);
  }

 private:
  int latent_dim_ = 0;
  nn::Mlp net_;
};

/// Conditional generator with per-feature-type output heads and block fade-in.
class Generator {
 public:
  struct Cache {
    nn::MlpCache mlp;
    Matrix head;          // head outputs before fade-in
    RowVector coefficients;
  };

  Generator() = default;
  Generator(int latent_dim, const std::vector<int>& hidden, int levels, Rng& rng)
      : latent_dim_(latent_dim),
        levels_(levels),
        net_(detail::widths(latent_dim + kNumClasses, hidden, kNumFeatures), rng),
        placeholder_(RowVector::Zero(kNumFeatures)) {}

  int latent_dim() const { return latent_dim_; }
  int levels() const { return levels_; }
  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }
  const RowVector& placeholder() const { return placeholder_; }
  void set_placeholder(const RowVector& p) { placeholder_ = p; }

  Matrix generate(const Matrix& z, const std::vector<int>& labels, int level, double alpha,
                  Cache* cache = nullptr) const {
    if (z.cols() != latent_dim_) throw ShapeError("latent batch has wrong width");
    if (static_cast<Eigen::Index>(labels.size()) != z.rows()) {
      throw ShapeError("label count does not match latent batch");
    }
    const RowVector coeff = fade_coefficients(default_block_map(), level, levels_, alpha);
    nn::MlpCache local;
    const Matrix raw = net_.forward(hconcat(z, one_hot(labels)), cache ? &cache->mlp : &local);
    Matrix head = apply_heads(raw);
    Matrix out = apply_fade(head, coeff, placeholder_);
    if (cache) {
      cache->head = std::move(head);
      cache->coefficients = coeff;
    }
    return out;
  }

  /// Returns dL/dz.
  Matrix backward(const Cache& cache, const Matrix& grad_out, nn::Gradients* grads) const {
    Matrix d_head = grad_out;
    for (Eigen::Index j = 0; j < d_head.cols(); ++j) d_head.col(j) *= cache.coefficients(j);
    const Matrix d_raw = heads_backward(cache.head, d_head);
    const Matrix d_in = net_.backward(cache.mlp, d_raw, grads);
    return d_in.leftCols(latent_dim_);
  }

 private:
  static Matrix apply_heads(const Matrix& raw) {
    const auto& schema = benchmark_schema();
    Matrix out = raw;
    for (int j = 0; j < kNumFeatures; ++j) {
      if (schema.features[j].kind == FeatureKind::rate) {
        out.col(j) = (1.0 / (1.0 + (-raw.col(j).array()).exp())).matrix();
      }
    }
    for (const auto& g : schema.groups) {
      for (Eigen::Index r = 0; r < raw.rows(); ++r) {
        double peak = raw(r, g.columns.front());
        for (int c : g.columns) peak = std::max(peak, raw(r, c));
        double total = 0.0;
        for (int c : g.columns) total += (out(r, c) = std::exp(raw(r, c) - peak));
        for (int c : g.columns) out(r, c) /= total;
      }
    }
    return out;
  }

  static Matrix heads_backward(const Matrix& head, const Matrix& d_head) {
    const auto& schema = benchmark_schema();
    Matrix d_raw = d_head;
    for (int j = 0; j < kNumFeatures; ++j) {
      if (schema.features[j].kind == FeatureKind::rate) {
        d_raw.col(j) = (d_head.col(j).array() * head.col(j).array() * (1.0 - head.col(j).array()))
                           .matrix();
      }
    }
    for (const auto& g : schema.groups) {
      for (Eigen::Index r = 0; r < head.rows(); ++r) {
        double dot = 0.0;
        for (int c : g.columns) dot += d_head(r, c) * head(r, c);
        for (int c : g.columns) d_raw(r, c) = head(r, c) * (d_head(r, c) - dot);
      }
    }
    return d_raw;
  }

  int latent_dim_ = 0;
  int levels_ = 1;
  nn::Mlp net_;
  RowVector placeholder_;
};

/// Conditional Wasserstein critic: unbounded scalar score, no normalization.
class Critic {
 public:
  Critic() = default;
  Critic(const std::vector<int>& hidden, Rng& rng)
      : net_(detail::widths(kNumFeatures + kNumClasses, hidden, 1), rng) {}

  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }

  Vector criticize(const Matrix& x, const std::vector<int>& labels, nn::MlpCache* cache = nullptr) const {
    if (x.cols() != kNumFeatures) throw ShapeError("critic expects 40 columns");
    nn::MlpCache local;
    return net_.forward(hconcat(x, one_hot(labels)), cache ? cache : &local).col(0);
  }

  /// Level-checked entry point matching the generator's signature.
  Vector criticize(const Matrix& x, const std::vector<int>& labels, int level, int levels,
                   double alpha) const {
    fade_coefficients(default_block_map(), level, levels, alpha);
    return criticize(x, labels);
  }

  /// dL/dx (feature columns only) given dL/dscore.
  Matrix backward(const nn::MlpCache& cache, const Vector& d_scores, nn::Gradients* grads) const {
    const Matrix d_in = net_.backward(cache, Matrix(d_scores), grads);
    return d_in.leftCols(kNumFeatures);
  }

 private:
  nn::Mlp net_;
};

inline Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double peak = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - peak).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

class Classifier {
 public:
  Classifier() = default;
  Classifier(const std::vector<int>& hidden, Rng& rng, int inputs = kNumFeatures,
             int classes = kNumClasses)
      : net_(detail::widths(inputs, hidden, classes), rng, /*zero_last_layer=*/true) {}

  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }

  Matrix logits(const Matrix& x, nn::MlpCache* cache = nullptr) const {
    require_finite(x, "classifier input");
    nn::MlpCache local;
    return net_.forward(x, cache ? cache : &local);
  }

  /// Row-wise class probabilities.
  Matrix classify(const Matrix& x) const { return softmax_rows(logits(x)); }

 private:
  nn::Mlp net_;
};

struct ModelParameters {
  int latent_dim = 64;
  int levels = 1;
  Architecture architecture;
  Encoder encoder;
  Generator generator;
  Critic critic;
  Classifier classifier;
  FeatureCodec codec;  // raw <-> model-space transform fitted on training data

  static ModelParameters initialize(int latent_dim, int levels, const Architecture& arch,
                                    std::uint64_t seed) {
    ModelParameters p;
    p.latent_dim = latent_dim;
    p.levels = levels;
    p.architecture = arch;
    Rng e(child_seed(seed, 11)), g(child_seed(seed, 12)), d(child_seed(seed, 13)),
        c(child_seed(seed, 14));
    p.encoder = Encoder(latent_dim, arch.encoder_hidden, e);
    p.generator = Generator(latent_dim, arch.generator_hidden, levels, g);
    p.critic = Critic(arch.critic_hidden, d);
    p.classifier = Classifier(arch.classifier_hidden, c);
    return p;
  }

  bool all_finite() const {
    return encoder.net().all_finite() && generator.net().all_finite() && critic.net().all_finite() &&
           classifier.net().all_finite();
  }
};

}  // namespace phantom
