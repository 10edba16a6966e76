#pragma once

// Minimal dense-network machinery with hand-written reverse mode: multilayer
// perceptrons with leaky-rectifier hidden layers and a linear output layer,
// plus Adam.

#include <cmath>
#include <string>
#include <vector>

#include "phantom/error.hpp"
#include "phantom/random.hpp"
#include "phantom/tensor.hpp"

namespace phantom::nn {

inline constexpr double kLeakySlope = 0.2;

struct Dense {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

/// Parameter-aligned gradient storage: entry 2k is layer k's weight, 2k+1 its bias.
using Gradients = std::vector<Matrix>;

struct MlpCache {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
};

class Mlp {
 public:
  Mlp() = default;

  /// `widths` = {in, hidden..., out}. He-style initialization; the last layer
  /// can start at zero (zero logits).
  Mlp(const std::vector<int>& widths, Rng& rng, bool zero_last_layer = false) : widths_(widths) {
    if (widths.size() < 2) throw ConfigError("an MLP needs at least input and output widths");
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
      Dense layer;
      const double scale = std::sqrt(2.0 / (1.0 + kLeakySlope * kLeakySlope) / widths[k]);
      layer.weight = rng.normal_matrix(widths[k], widths[k + 1]) * scale;
      layer.bias = Matrix::Zero(1, widths[k + 1]);
      if (zero_last_layer && k + 2 == widths.size()) layer.weight.setZero();
      layers_.push_back(std::move(layer));
    }
  }

  const std::vector<int>& widths() const { return widths_; }
  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  std::size_t num_layers() const { return layers_.size(); }
  const Dense& layer(std::size_t k) const { return layers_[k]; }
  Dense& layer(std::size_t k) { return layers_[k]; }

  std::vector<Matrix*> parameters() {
    std::vector<Matrix*> out;
    for (auto& l : layers_) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    return out;
  }
  std::vector<const Matrix*> parameters() const {
    std::vector<const Matrix*> out;
    for (const auto& l : layers_) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    return out;
  }

  Gradients zero_gradients() const {
    Gradients g;
    for (const auto* p : parameters()) g.push_back(Matrix::Zero(p->rows(), p->cols()));
    return g;
  }

  Matrix forward(const Matrix& x, MlpCache* cache = nullptr) const {
    if (x.cols() != input_width()) {
      throw ShapeError("MLP expects " + std::to_string(input_width()) + " inputs, got " +
                       std::to_string(x.cols()));
    }
    if (cache) {
      cache->inputs.clear();
      cache->pre.clear();
    }
    Matrix h = x;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      Matrix a = h * layers_[k].weight;
      a.rowwise() += layers_[k].bias.row(0);
      if (cache) {
        cache->inputs.push_back(h);
        cache->pre.push_back(a);
      }
      h = k + 1 < layers_.size() ? leaky(a) : a;
    }
    return h;
  }

  /// Backpropagates `grad_out` (dL/doutput); accumulates parameter gradients
  /// into `grads` when non-null and returns dL/dinput.
  Matrix backward(const MlpCache& cache, const Matrix& grad_out, Gradients* grads) const {
    Matrix delta = grad_out;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      if (k + 1 < layers_.size()) delta = (delta.array() * leaky_slope(cache.pre[k]).array()).matrix();
      if (grads) {
        (*grads)[2 * k].noalias() += cache.inputs[k].transpose() * delta;
        (*grads)[2 * k + 1] += delta.colwise().sum();
      }
      delta = delta * layers_[k].weight.transpose();
    }
    return delta;
  }

  std::uint64_t checksum() const {
    Checksum sum;
    for (const auto* p : parameters()) sum.add(*p);
    return sum.value();
  }

  bool all_finite() const {
    for (const auto* p : parameters()) {
      if (!p->allFinite()) return false;
    }
    return true;
  }

  static Matrix leaky(const Matrix& a) {
    return a.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
  }
  static Matrix leaky_slope(const Matrix& a) {
    return a.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; });
  }

 private:
  std::vector<int> widths_;
  std::vector<Dense> layers_;
};

struct InputGradientPenalty {
  double value = 0.0;             // mean_i (||g_i|| - 1)^2
  Vector norms;                   // ||g_i|| per row
  Matrix input_gradients;         // dD/dx per row (all input columns)
};

/// Two-sided gradient penalty for a scalar-output MLP. Only the first
/// `penalized_columns` input columns enter the norm (conditioning columns are
/// excluded). When `grads` is non-null the penalty's parameter gradient is
/// accumulated. Hidden activations are piecewise linear, so the input
/// gradient is linear in each weight matrix for fixed activation pattern and
/// does not depend on biases.
inline InputGradientPenalty gradient_penalty(const Mlp& critic, const Matrix& x,
                                             int penalized_columns, Gradients* grads) {
  if (critic.output_width() != 1) throw ShapeError("gradient penalty needs a scalar critic");
  MlpCache cache;
  critic.forward(x, &cache);
  const auto m = x.rows();
  const std::size_t layers = critic.num_layers();

  // Forward chain of the input gradient: delta_K = 1, gamma_{k-1} = delta_k W_k^T,
  // delta_{k-1} = gamma_{k-1} * s_{k-1}.
  std::vector<Matrix> deltas(layers);
  std::vector<Matrix> slopes(layers);
  deltas[layers - 1] = Matrix::Ones(m, 1);
  for (std::size_t k = layers - 1; k > 0; --k) {
    slopes[k - 1] = Mlp::leaky_slope(cache.pre[k - 1]);
    const Matrix gamma = deltas[k] * critic.layer(k).weight.transpose();
    deltas[k - 1] = (gamma.array() * slopes[k - 1].array()).matrix();
  }
  InputGradientPenalty out;
  out.input_gradients = deltas[0] * critic.layer(0).weight.transpose();
  out.norms = out.input_gradients.leftCols(penalized_columns).rowwise().norm();
  out.value = (out.norms.array() - 1.0).square().mean();
  if (!out.input_gradients.allFinite()) {
    throw NumericalError("critic input gradient is not finite");
  }
  if (!grads) return out;

  // Reverse pass over the chain above.
  Matrix adj = Matrix::Zero(m, x.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const double n = out.norms(i);
    if (n == 0.0) continue;
    adj.row(i).head(penalized_columns) = (2.0 / static_cast<double>(m)) * (n - 1.0) / n *
                                         out.input_gradients.row(i).head(penalized_columns);
  }
  for (std::size_t k = 0; k < layers; ++k) {
    // gamma_{k-1} = delta_k W_k^T: dW_k += adj^T delta_k, d(delta_k) = adj W_k.
    (*grads)[2 * k].noalias() += adj.transpose() * deltas[k];
    if (k + 1 == layers) break;
    adj = ((adj * critic.layer(k).weight).array() * slopes[k].array()).matrix();
  }
  return out;
}

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig config) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  long steps() const { return t_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

  void step(const std::vector<Matrix*>& params, const Gradients& grads) {
    if (params.size() != grads.size()) throw ShapeError("parameter/gradient count mismatch");
    if (m_.empty()) {
      for (const auto* p : params) {
        m_.push_back(Matrix::Zero(p->rows(), p->cols()));
        v_.push_back(Matrix::Zero(p->rows(), p->cols()));
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
      v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i].array().square().matrix();
      params[i]->array() -= config_.learning_rate * (m_[i].array() / bc1) /
                            ((v_[i].array() / bc2).sqrt() + config_.epsilon);
    }
  }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

inline Gradients concat(Gradients a, const Gradients& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

template <typename T>
std::vector<T> concat(std::vector<T> a, const std::vector<T>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace phantom::nn
