#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "phantom/error.hpp"
#include "phantom/feature_extractors.hpp"
#include "phantom/networks.hpp"
#include "phantom/nn.hpp"
#include "phantom/random.hpp"
#include "phantom/schema.hpp"
#include "phantom/tensor.hpp"

namespace phantom {

struct LossWeights {
  double lambda1 = 1.0;   // adversarial
  double lambda2 = 10.0;  // reconstruction
  double lambda3 = 5.0;   // feature matching
  double lambda4 = 1.0;   // classification
  double lambda5 = 0.1;   // cyber
  double lambda_gp = 10.0;
  double beta = 1.0;      // KL weight
  BlockWeights omega{1.0, 1.0, 1.0};
  double tau = 0.1;       // diversity margin

  void validate() const {
    for (double v : {lambda1, lambda2, lambda3, lambda4, lambda5, lambda_gp, beta, tau, omega[0],
                     omega[1], omega[2]}) {
      if (!std::isfinite(v) || v < 0.0) throw ConfigError("loss weights must be finite and >= 0");
    }
  }
};

struct LossBreakdown {
  double recon = 0.0;  // mean squared reconstruction error
  double kl = 0.0;
  double adv_g = 0.0;
  double adv_d = 0.0;  // includes lambda_gp * gp
  double gp = 0.0;
  double fm = 0.0;
  double class_syn = 0.0;
  double class_real = 0.0;
  double temporal = 0.0;
  double causal = 0.0;
  double diversity = 0.0;
  double total_g = 0.0;
  double total_d = 0.0;
  double total_c = 0.0;

  static const std::vector<std::string>& field_names() {
    static const std::vector<std::string> names = {
        "recon", "kl", "adv_g", "adv_d", "gp", "fm", "class_syn", "class_real",
        "temporal", "causal", "diversity", "total_g", "total_d", "total_c"};
    return names;
  }
  std::vector<double> values() const {
    return {recon, kl, adv_g, adv_d, gp, fm, class_syn, class_real,
            temporal, causal, diversity, total_g, total_d, total_c};
  }
};

/// The five objective families weighted by lambda1..lambda5.
struct ObjectiveParts {
  double adv_g = 0.0;
  double recon = 0.0;  // MSE + beta * KL
  double fm = 0.0;
  double cls = 0.0;    // CE on synthetic + CE on real
  double cyber = 0.0;  // temporal + causal + diversity
};

inline ObjectiveParts objective_parts(const LossBreakdown& b, double beta) {
  return {b.adv_g, b.recon + beta * b.kl, b.fm, b.class_syn + b.class_real,
          b.temporal + b.causal + b.diversity};
}

inline double total_generator_objective(const ObjectiveParts& p, const LossWeights& w) {
  const std::pair<const char*, double> parts[] = {
      {"adv_g", p.adv_g}, {"recon", p.recon}, {"fm", p.fm}, {"class", p.cls}, {"cyber", p.cyber}};
  for (const auto& [name, value] : parts) {
    if (!std::isfinite(value)) {
      throw NumericalError(std::string("non-finite objective part '") + name + "'");
    }
  }
  return w.lambda1 * p.adv_g + w.lambda2 * p.recon + w.lambda3 * p.fm + w.lambda4 * p.cls +
         w.lambda5 * p.cyber;
}

// ---------------------------------------------------------------------------
// VAE terms

inline void check_sigma(const Matrix& sigma) {
  if (!(sigma.array() > 0.0).all()) throw DomainError("sigma must be strictly positive");
}

/// Batch mean of 0.5 * sum_d (mu^2 + sigma^2 - 1 - ln sigma^2).
inline double kl_divergence(const Matrix& mu, const Matrix& sigma) {
  require_same_shape(mu, sigma, "kl_divergence");
  check_sigma(sigma);
  if (mu.rows() == 0) return 0.0;
  const auto s2 = sigma.array().square();
  const double total = 0.5 * (mu.array().square() + s2 - 1.0 - s2.log()).sum();
  return total / static_cast<double>(mu.rows());
}

inline std::pair<Matrix, Matrix> kl_divergence_grad(const Matrix& mu, const Matrix& sigma) {
  const double m = static_cast<double>(mu.rows());
  return {mu / m, ((sigma.array() - 1.0 / sigma.array()) / m).matrix()};
}

inline double mean_squared_error(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "mean_squared_error");
  if (a.size() == 0) return 0.0;
  return (a - b).array().square().mean();
}

inline double reconstruction_loss(const Matrix& x_r, const Matrix& x_recon, const Matrix& mu,
                                  const Matrix& sigma, double beta) {
  require_same_shape(x_r, x_recon, "reconstruction_loss");
  return mean_squared_error(x_r, x_recon) + beta * kl_divergence(mu, sigma);
}

/// d MSE / d x_recon.
inline Matrix mse_grad(const Matrix& x_r, const Matrix& x_recon) {
  return 2.0 * (x_recon - x_r) / static_cast<double>(x_r.size());
}

// ---------------------------------------------------------------------------
// Wasserstein pair

struct GradientPenaltyResult {
  double value = 0.0;
  Matrix interpolates;
  Vector grad_norms;
};

/// Draws t ~ U(0,1) per row, penalizes (||grad_x D(t x_r + (1-t) x_syn, y)|| - 1)^2
/// averaged over rows. Accumulates the critic-parameter gradient of the
/// penalty into `grads` when given.
inline GradientPenaltyResult gradient_penalty(const Critic& critic, const Matrix& x_r,
                                              const Matrix& x_syn, const std::vector<int>& labels,
                                              Rng& rng, nn::Gradients* grads = nullptr) {
  require_same_shape(x_r, x_syn, "gradient_penalty");
  GradientPenaltyResult out;
  out.interpolates.resize(x_r.rows(), x_r.cols());
  for (Eigen::Index i = 0; i < x_r.rows(); ++i) {
    const double t = rng.uniform();
    out.interpolates.row(i) = t * x_r.row(i) + (1.0 - t) * x_syn.row(i);
  }
  const auto penalty = nn::gradient_penalty(critic.net(), hconcat(out.interpolates, one_hot(labels)),
                                            kNumFeatures, grads);
  out.value = penalty.value;
  out.grad_norms = penalty.norms;
  if (!std::isfinite(out.value)) throw NumericalError("gradient penalty is not finite");
  return out;
}

/// Returns (adv_g, adv_d).
inline std::pair<double, double> adversarial_losses(const Vector& real_scores,
                                                    const Vector& fake_scores, double gp,
                                                    double lambda_gp) {
  if (real_scores.size() == 0 || fake_scores.size() == 0) {
    throw InputError("adversarial losses need nonempty score batches");
  }
  const double fake = fake_scores.mean();
  const double real = real_scores.mean();
  return {-fake, fake - real + lambda_gp * gp};
}

// ---------------------------------------------------------------------------
// Classification

inline void check_labels(const std::vector<int>& labels, int classes = kNumClasses) {
  for (int y : labels) {
    if (y < 0 || y >= classes) throw InputError("label " + std::to_string(y) + " out of range");
  }
}

/// Mean of -ln p[y] over rows of a probability matrix.
inline double cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
  check_labels(labels, static_cast<int>(probs.cols()));
  if (static_cast<Eigen::Index>(labels.size()) != probs.rows()) {
    throw ShapeError("label count does not match probability rows");
  }
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total -= std::log(std::max(probs(static_cast<Eigen::Index>(i), labels[i]), 1e-300));
  }
  return total / static_cast<double>(labels.size());
}

/// Cross-entropy from logits and its gradient with respect to the logits.
inline std::pair<double, Matrix> cross_entropy_logits(const Matrix& logits,
                                                      const std::vector<int>& labels) {
  check_labels(labels, static_cast<int>(logits.cols()));
  const Matrix p = softmax_rows(logits);
  Matrix grad = p;
  double total = 0.0;
  const double m = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double peak = logits.row(r).maxCoeff();
    const double lse = peak + std::log((logits.row(r).array() - peak).exp().sum());
    total += lse - logits(r, labels[i]);
    grad(r, labels[i]) -= 1.0;
  }
  return {labels.empty() ? 0.0 : total / m, labels.empty() ? grad : Matrix(grad / m)};
}

inline double classification_loss(const Classifier& c, const Matrix& x_syn,
                                  const std::vector<int>& y_s, const Matrix& x_r,
                                  const std::vector<int>& y_r) {
  check_labels(y_s);
  check_labels(y_r);
  return cross_entropy_logits(c.logits(x_syn), y_s).first +
         cross_entropy_logits(c.logits(x_r), y_r).first;
}

// ---------------------------------------------------------------------------
// Cyber-specific terms

struct CyberLoss {
  double temporal = 0.0;
  double causal = 0.0;
  double diversity = 0.0;
  double total = 0.0;
};

struct CyberLossOptions {
  BlockMap block_map = default_block_map();
  std::vector<CausalConstraint> constraints = benchmark_constraints();
  double tau = 0.1;
};

namespace detail {

inline void check_constraints(const std::vector<CausalConstraint>& constraints) {
  for (const auto& k : constraints) {
    if (k.lhs < 0 || k.lhs >= kNumFeatures || k.rhs < 0 || k.rhs >= kNumFeatures) {
      throw ConfigError("constraint '" + k.name + "' references a feature index outside 0..39");
    }
  }
}

/// Batch means of first differences across ordered temporal columns.
inline Vector temporal_statistic(const Matrix& x, const std::vector<int>& cols) {
  Vector stat = Vector::Zero(cols.size() > 1 ? static_cast<Eigen::Index>(cols.size() - 1) : 0);
  if (x.rows() == 0) return stat;
  for (std::size_t j = 0; j + 1 < cols.size(); ++j) {
    stat(static_cast<Eigen::Index>(j)) = (x.col(cols[j + 1]) - x.col(cols[j])).mean();
  }
  return stat;
}

inline double mean_pairwise_distance(const Matrix& x) {
  const auto m = x.rows();
  if (m < 2) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) total += (x.row(i) - x.row(j)).norm();
  }
  return total / (0.5 * static_cast<double>(m) * static_cast<double>(m - 1));
}

}  // namespace detail

/// temporal: squared gap between real and synthetic first-difference
/// statistics over the temporal block; causal: per-row sum of hinge
/// violations max(0, x[lhs] - x[rhs]), averaged over rows; diversity:
/// max(0, tau - mean pairwise L2 distance within x_syn).
inline CyberLoss cyber_loss(const Matrix& x_syn, const Matrix& x_r,
                            const CyberLossOptions& options = {}, Matrix* grad_syn = nullptr) {
  if (x_syn.cols() != kNumFeatures || x_r.cols() != kNumFeatures) {
    throw ShapeError("cyber_loss expects 40-column batches");
  }
  detail::check_constraints(options.constraints);
  const auto cols = block_columns(options.block_map, Block::temporal);
  const auto m = x_syn.rows();
  const double md = static_cast<double>(m);
  if (grad_syn) *grad_syn = Matrix::Zero(m, kNumFeatures);

  CyberLoss out;
  const Vector gap = detail::temporal_statistic(x_syn, cols) - detail::temporal_statistic(x_r, cols);
  out.temporal = gap.squaredNorm();
  if (grad_syn && m > 0) {
    for (std::size_t j = 0; j + 1 < cols.size(); ++j) {
      const double g = 2.0 * gap(static_cast<Eigen::Index>(j)) / md;
      grad_syn->col(cols[j + 1]).array() += g;
      grad_syn->col(cols[j]).array() -= g;
    }
  }

  if (m > 0) {
    double total = 0.0;
    for (const auto& k : options.constraints) {
      for (Eigen::Index i = 0; i < m; ++i) {
        const double v = x_syn(i, k.lhs) - x_syn(i, k.rhs);
        if (v > 0.0) {
          total += v;
          if (grad_syn) {
            (*grad_syn)(i, k.lhs) += 1.0 / md;
            (*grad_syn)(i, k.rhs) -= 1.0 / md;
          }
        }
      }
    }
    out.causal = total / md;
  }

  const double spread = detail::mean_pairwise_distance(x_syn);
  out.diversity = std::max(0.0, options.tau - spread);
  if (grad_syn && out.diversity > 0.0 && m >= 2) {
    const double pairs = 0.5 * md * (md - 1.0);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const RowVector diff = x_syn.row(i) - x_syn.row(j);
        const double d = diff.norm();
        if (d == 0.0) continue;
        const RowVector g = -diff / (d * pairs);
        grad_syn->row(i) += g;
        grad_syn->row(j) -= g;
      }
    }
  }
  out.total = out.temporal + out.causal + out.diversity;
  return out;
}

}  // namespace phantom
