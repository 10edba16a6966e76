#pragma once

// Progressive dual-path training: per level, WGAN-GP critic updates with a
// replay buffer, a joint generator/encoder update on the weighted multi-task
// objective, a classifier update, then a critic-frozen L1 stabilization phase.

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "phantom/benchmark_data.hpp"
#include "phantom/codec.hpp"
#include "phantom/error.hpp"
#include "phantom/feature_extractors.hpp"
#include "phantom/losses.hpp"
#include "phantom/networks.hpp"
#include "phantom/nn.hpp"
#include "phantom/progressive.hpp"
#include "phantom/random.hpp"

namespace phantom {

inline constexpr double kDivergenceThreshold = 1e6;

struct OptimizerConfig {
  double eta = 2e-4;
  double beta1_D = 0.0;
  double beta1_GE = 0.0;
  double beta1_C = 0.5;
  double beta2 = 0.9;

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("optimizer.eta must be > 0");
    for (double b : {beta1_D, beta1_GE, beta1_C, beta2}) {
      if (!(b >= 0.0 && b < 1.0)) throw ConfigError("optimizer betas must lie in [0,1)");
    }
  }
};

struct ReplayConfig {
  std::size_t capacity = 4096;
  double fraction = 0.25;  // share of each critic fake batch drawn from the buffer
};

struct TrainConfig {
  int latent_dim = 64;  // Z
  int batch_size = 64;  // m
  int levels = 1;       // L
  int iters_per_level = 500;
  int stabilization_steps = 100;
  std::uint64_t seed = 42;
  LossWeights weights;
  OptimizerConfig optimizer;
  ReplayConfig replay;
  std::vector<double> label_prior = std::vector<double>(kNumClasses, 1.0 / kNumClasses);
  Architecture architecture;
  std::vector<CausalConstraint> constraints = benchmark_constraints();

  void validate() const {
    if (latent_dim < 1 || batch_size < 1 || levels < 1 || iters_per_level < 1) {
      throw ConfigError("Z, m, L and iters_per_level must be >= 1");
    }
    if (stabilization_steps < 0) throw ConfigError("stabilization_steps must be >= 0");
    weights.validate();
    optimizer.validate();
    if (!(replay.fraction >= 0.0 && replay.fraction <= 1.0)) {
      throw ConfigError("replay.fraction must lie in [0,1]");
    }
    if (label_prior.size() != static_cast<std::size_t>(kNumClasses)) {
      throw ConfigError("label_prior must have 5 entries");
    }
    double sum = 0.0;
    for (double p : label_prior) {
      if (!(p >= 0.0)) throw ConfigError("label_prior entries must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("label_prior must sum to 1");
    detail::check_constraints(constraints);
  }
};

/// FIFO store of generator outputs. Each row carries the tag assigned when G
/// emitted it.
class ReplayBuffer {
 public:
  struct Entry {
    RowVector x;
    int label;
    std::uint64_t tag;
  };

  explicit ReplayBuffer(std::size_t capacity = 4096) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return store_.size(); }
  const std::deque<Entry>& entries() const { return store_; }

  void push(const Matrix& x, const std::vector<int>& labels, const std::vector<std::uint64_t>& tags) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (capacity_ == 0) return;
      if (store_.size() == capacity_) store_.pop_front();
      store_.push_back({x.row(i), labels[static_cast<std::size_t>(i)], tags[static_cast<std::size_t>(i)]});
    }
  }

  /// Uniform draws with replacement; never more than min(k, size()) items.
  std::vector<const Entry*> sample(std::size_t k, Rng& rng) const {
    std::vector<const Entry*> out;
    if (store_.empty()) return out;
    k = std::min(k, store_.size());
    for (std::size_t i = 0; i < k; ++i) out.push_back(&store_[rng.index(store_.size())]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::deque<Entry> store_;
};

struct Batch {
  Matrix x;
  std::vector<int> y;
};

struct TrainState {
  ModelParameters models;
  ExtractorParams extractors;
  nn::Adam opt_d;
  nn::Adam opt_ge;
  nn::Adam opt_c;
  ReplayBuffer buffer;
  long step = 0;
  int level = 1;
  double alpha = 1.0;
  Rng rng;  // noise, label and replay draws
  std::uint64_t next_tag = 0;

  std::uint64_t critic_checksum() const { return models.critic.net().checksum(); }
  std::uint64_t classifier_checksum() const { return models.classifier.net().checksum(); }
};

inline TrainState initial_state(const TrainConfig& config, const FeatureCodec& codec,
                                const RowVector& placeholder) {
  config.validate();
  TrainState s;
  s.models = ModelParameters::initialize(config.latent_dim, config.levels, config.architecture,
                                         config.seed);
  s.models.codec = codec;
  s.models.generator.set_placeholder(placeholder);
  s.extractors = ExtractorParams(child_seed(config.seed, 21));
  const auto& o = config.optimizer;
  s.opt_d = nn::Adam({o.eta, o.beta1_D, o.beta2});
  s.opt_ge = nn::Adam({o.eta, o.beta1_GE, o.beta2});
  s.opt_c = nn::Adam({o.eta, o.beta1_C, o.beta2});
  s.buffer = ReplayBuffer(config.replay.capacity);
  s.rng = Rng(child_seed(config.seed, 31));
  s.level = 1;
  s.alpha = fade_in_factor(1, config.levels);
  return s;
}

namespace detail {

inline void guard(const LossBreakdown& b, long step) {
  const auto names = LossBreakdown::field_names();
  const auto values = b.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || std::abs(values[i]) > kDivergenceThreshold) {
      throw DivergenceError(names[i], values[i], step);
    }
  }
}

inline std::vector<Matrix*> ge_parameters(ModelParameters& m) {
  return nn::concat(m.generator.net().parameters(), m.encoder.net().parameters());
}

}  // namespace detail

/// One iteration of the inner loop. All gradients are taken at the pre-step
/// parameters; updates are then applied in the order D, (G,E), C.
inline LossBreakdown train_step(TrainState& state, const Batch& real, const TrainConfig& config) {
  const auto m = real.x.rows();
  if (m == 0 || static_cast<Eigen::Index>(real.y.size()) != m || real.x.cols() != kNumFeatures) {
    throw ShapeError("real batch must be a nonempty m x 40 matrix with m labels");
  }
  auto& models = state.models;
  const auto& w = config.weights;
  const int z_dim = models.latent_dim;
  const int level = state.level;
  const double alpha = state.alpha;

  // Encode + reparameterize, reconstruct.
  Encoder::Cache enc_cache;
  const auto [mu, sigma] = models.encoder.encode(real.x, &enc_cache);
  const Matrix epsilon = state.rng.normal_matrix(m, z_dim);
  const Matrix z_c = reparameterize(mu, sigma, epsilon);
  Generator::Cache recon_cache;
  const Matrix x_recon = models.generator.generate(z_c, real.y, level, alpha, &recon_cache);

  // Synthesize from the prior.
  std::vector<int> y_s(static_cast<std::size_t>(m));
  for (auto& y : y_s) y = state.rng.categorical(config.label_prior);
  const Matrix z = state.rng.normal_matrix(m, z_dim);
  Generator::Cache syn_cache;
  const Matrix x_syn = models.generator.generate(z, y_s, level, alpha, &syn_cache);

  // Features.
  const FeatureBundle f_real = extract(real.x, state.extractors);
  const FeatureBundle f_syn = extract(x_syn, state.extractors);

  LossBreakdown b;
  b.recon = mean_squared_error(real.x, x_recon);
  b.kl = kl_divergence(mu, sigma);

  // Critic inputs: fresh synthetic rows, the tail share replaced by replayed rows.
  Matrix x_fake = x_syn;
  std::vector<int> y_fake = y_s;
  const auto replay_count = static_cast<std::size_t>(std::floor(config.replay.fraction * static_cast<double>(m)));
  if (replay_count > 0 && state.buffer.size() >= replay_count) {
    const auto drawn = state.buffer.sample(replay_count, state.rng);
    for (std::size_t k = 0; k < drawn.size(); ++k) {
      const auto row = m - static_cast<Eigen::Index>(drawn.size()) + static_cast<Eigen::Index>(k);
      x_fake.row(row) = drawn[k]->x;
      y_fake[static_cast<std::size_t>(row)] = drawn[k]->label;
    }
  }

  nn::MlpCache d_real_cache, d_fake_cache, d_gen_cache;
  const Vector real_scores = models.critic.criticize(real.x, real.y, &d_real_cache);
  const Vector fake_scores = models.critic.criticize(x_fake, y_fake, &d_fake_cache);
  const Vector gen_scores = models.critic.criticize(x_syn, y_s, &d_gen_cache);
  nn::Gradients gp_grads = models.critic.net().zero_gradients();
  const auto gp = gradient_penalty(models.critic, real.x, x_fake, real.y, state.rng, &gp_grads);
  b.gp = gp.value;
  b.adv_d = adversarial_losses(real_scores, fake_scores, gp.value, w.lambda_gp).second;
  b.adv_g = adversarial_losses(real_scores, gen_scores, 0.0, 0.0).first;

  b.fm = feature_matching_distance(f_real, f_syn, w.omega);

  nn::MlpCache c_syn_cache, c_real_cache;
  const auto [ce_syn, d_logits_syn] = cross_entropy_logits(models.classifier.logits(x_syn, &c_syn_cache), y_s);
  const auto [ce_real, d_logits_real] =
      cross_entropy_logits(models.classifier.logits(real.x, &c_real_cache), real.y);
  b.class_syn = ce_syn;
  b.class_real = ce_real;

  Matrix d_cyber;
  const auto cyber = cyber_loss(x_syn, real.x, {default_block_map(), config.constraints, w.tau}, &d_cyber);
  b.temporal = cyber.temporal;
  b.causal = cyber.causal;
  b.diversity = cyber.diversity;

  detail::guard(b, state.step);  // before totals, so a blow-up is reported by term
  b.total_g = total_generator_objective(objective_parts(b, w.beta), w);
  b.total_d = b.adv_d;
  b.total_c = b.class_syn + b.class_real;
  detail::guard(b, state.step);

  // Critic gradient.
  const double md = static_cast<double>(m);
  nn::Gradients grads_d = models.critic.net().zero_gradients();
  models.critic.backward(d_fake_cache, Vector::Constant(m, 1.0 / md), &grads_d);
  models.critic.backward(d_real_cache, Vector::Constant(m, -1.0 / md), &grads_d);
  for (std::size_t i = 0; i < grads_d.size(); ++i) grads_d[i] += w.lambda_gp * gp_grads[i];

  // Classifier gradient; its input gradient on x_syn feeds the generator.
  nn::Gradients grads_c = models.classifier.net().zero_gradients();
  const Matrix dx_class = models.classifier.net().backward(c_syn_cache, d_logits_syn, &grads_c);
  models.classifier.net().backward(c_real_cache, d_logits_real, &grads_c);

  // Generator / encoder gradient.
  Matrix dx_syn = w.lambda1 * models.critic.backward(d_gen_cache, Vector::Constant(m, -1.0 / md), nullptr);
  if (w.lambda3 > 0.0) {
    dx_syn += w.lambda3 * extract_backward(f_syn, feature_matching_grad_b(f_real, f_syn, w.omega),
                                           state.extractors);
  }
  dx_syn += w.lambda4 * dx_class;
  dx_syn += w.lambda5 * d_cyber;

  nn::Gradients grads_g = models.generator.net().zero_gradients();
  models.generator.backward(syn_cache, dx_syn, &grads_g);
  const Matrix dz_c = models.generator.backward(recon_cache, w.lambda2 * mse_grad(real.x, x_recon), &grads_g);
  auto [d_mu, d_sigma] = kl_divergence_grad(mu, sigma);
  d_mu = w.lambda2 * w.beta * d_mu + dz_c;
  d_sigma = w.lambda2 * w.beta * d_sigma + (dz_c.array() * epsilon.array()).matrix();
  nn::Gradients grads_e = models.encoder.net().zero_gradients();
  models.encoder.backward(enc_cache, d_mu, d_sigma, &grads_e);

  state.opt_d.step(models.critic.net().parameters(), grads_d);
  state.opt_ge.step(detail::ge_parameters(models), nn::concat(grads_g, grads_e));
  state.opt_c.step(models.classifier.net().parameters(), grads_c);
  if (!models.all_finite()) throw DivergenceError("parameters", std::nan(""), state.step);

  std::vector<std::uint64_t> tags(static_cast<std::size_t>(m));
  for (auto& t : tags) t = state.next_tag++;
  state.buffer.push(x_syn, y_s, tags);
  ++state.step;
  return b;
}

/// Draws batches by walking seeded permutations of the level's table.
class BatchSampler {
 public:
  BatchSampler() = default;
  BatchSampler(const Matrix* data, const std::vector<int>* labels, std::uint64_t seed)
      : data_(data), labels_(labels), rng_(seed) {}

  Batch next(Eigen::Index m) {
    Batch b;
    b.x.resize(m, data_->cols());
    b.y.resize(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
      if (cursor_ >= order_.size()) reshuffle();
      const auto r = order_[cursor_++];
      b.x.row(i) = data_->row(r);
      b.y[static_cast<std::size_t>(i)] = (*labels_)[static_cast<std::size_t>(r)];
    }
    return b;
  }

 private:
  void reshuffle() {
    order_.resize(static_cast<std::size_t>(data_->rows()));
    std::iota(order_.begin(), order_.end(), 0);
    rng_.shuffle(order_);
    cursor_ = 0;
  }

  const Matrix* data_ = nullptr;
  const std::vector<int>* labels_ = nullptr;
  Rng rng_;
  std::vector<Eigen::Index> order_;
  std::size_t cursor_ = 0;
};

/// Mean |x - G(mu(x), y)| over a batch at the state's level.
inline double l1_reconstruction(const ModelParameters& models, const Batch& batch, int level,
                                double alpha) {
  const auto [mu, sigma] = models.encoder.encode(batch.x);
  const Matrix x_hat = models.generator.generate(mu, batch.y, level, alpha);
  return (batch.x - x_hat).array().abs().mean();
}

struct StabilizationReport {
  int level = 1;
  int steps = 0;
  double l1_before = 0.0;
  double l1_after = 0.0;
  std::uint64_t critic_before = 0, critic_after = 0;  // D, C must be unchanged
  std::uint64_t classifier_before = 0, classifier_after = 0;
};

/// Refines G and E on mean ||x_r - G(E(x_r))||_1 with D and C frozen. The
/// encoder's mean is used as the code. `probe` is the batch on which the
/// before/after error is reported.
inline StabilizationReport stabilization_phase(TrainState& state, BatchSampler& sampler,
                                               const Batch& probe, const TrainConfig& config) {
  StabilizationReport report;
  report.level = state.level;
  report.steps = config.stabilization_steps;
  auto& models = state.models;
  report.l1_before = l1_reconstruction(models, probe, state.level, state.alpha);
  report.critic_before = state.critic_checksum();
  report.classifier_before = state.classifier_checksum();
  for (int s = 0; s < config.stabilization_steps; ++s) {
    const Batch batch = sampler.next(config.batch_size);
    Encoder::Cache enc_cache;
    const auto [mu, sigma] = models.encoder.encode(batch.x, &enc_cache);
    Generator::Cache g_cache;
    const Matrix x_hat = models.generator.generate(mu, batch.y, state.level, state.alpha, &g_cache);
    const Matrix diff = x_hat - batch.x;
    const double l1 = diff.array().abs().mean();
    if (!std::isfinite(l1) || l1 > kDivergenceThreshold) {
      throw DivergenceError("stabilization_l1", l1, state.step);
    }
    const Matrix d_out = diff.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }) /
                         static_cast<double>(diff.size());
    nn::Gradients grads_g = models.generator.net().zero_gradients();
    const Matrix d_mu = models.generator.backward(g_cache, d_out, &grads_g);
    nn::Gradients grads_e = models.encoder.net().zero_gradients();
    models.encoder.backward(enc_cache, d_mu, Matrix::Zero(mu.rows(), mu.cols()), &grads_e);
    state.opt_ge.step(detail::ge_parameters(models), nn::concat(grads_g, grads_e));
    if (!models.all_finite()) throw DivergenceError("parameters", std::nan(""), state.step);
  }
  report.l1_after = l1_reconstruction(models, probe, state.level, state.alpha);
  report.critic_after = state.critic_checksum();
  report.classifier_after = state.classifier_checksum();
  return report;
}

struct LogRow {
  long step;
  int level;
  double alpha;
  LossBreakdown losses;
};

inline std::string training_log_csv(const std::vector<LogRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "step,level,alpha";
  for (const auto& n : LossBreakdown::field_names()) out << ',' << n;
  out << '\n';
  for (const auto& r : rows) {
    out << r.step << ',' << r.level << ',' << r.alpha;
    for (double v : r.losses.values()) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

struct TrainResult {
  TrainState state;
  std::vector<LogRow> log;
  std::vector<StabilizationReport> stabilization;
  std::uint64_t extractor_checksum_before = 0;
};

using StepCallback = std::function<void(const LogRow&)>;

inline TrainResult train(const TrainConfig& config, const DatasetTable& data,
                         const StepCallback& on_step = {}) {
  config.validate();
  if (data.empty()) throw InputError("training data is empty");
  if (data.features.cols() != kNumFeatures) throw SchemaError("training data must have 40 features");
  require_finite(data.features, "training data");

  const FeatureCodec codec = FeatureCodec::fit(data.features);
  DatasetTable model_table = data;
  model_table.features = codec.encode(data.features);
  const RowVector placeholder = model_table.features.colwise().mean();

  TrainResult result;
  result.state = initial_state(config, codec, placeholder);
  result.extractor_checksum_before = result.state.extractors.checksum();
  auto& state = result.state;

  for (int level = 1; level <= config.levels; ++level) {
    state.level = level;
    state.alpha = fade_in_factor(level, config.levels);
    const DatasetTable level_table =
        resize_samples(model_table, level, config.levels, state.alpha, &placeholder);
    BatchSampler sampler(&level_table.features, &level_table.labels,
                         child_seed(config.seed, 100 + static_cast<std::uint64_t>(level)));
    for (int t = 0; t < config.iters_per_level; ++t) {
      const Batch batch = sampler.next(config.batch_size);
      LogRow row{state.step, level, state.alpha, train_step(state, batch, config)};
      if (on_step) on_step(row);
      result.log.push_back(row);
    }
    Batch probe;
    const auto probe_rows = std::min<Eigen::Index>(level_table.rows(), 512);
    probe.x = level_table.features.topRows(probe_rows);
    probe.y.assign(level_table.labels.begin(), level_table.labels.begin() + probe_rows);
    result.stabilization.push_back(stabilization_phase(state, sampler, probe, config));
  }
  return result;
}

/// Draws labels (default: the benchmark mix), z ~ N(0, I), runs G at the top
/// level with alpha = 1 and decodes to raw feature space.
inline DatasetTable synthesize(const ModelParameters& models, long n,
                               const std::vector<long>* label_counts, std::uint64_t seed) {
  if (n < 0) throw ConfigError("n must be >= 0");
  std::vector<long> counts;
  if (label_counts) {
    if (label_counts->size() != static_cast<std::size_t>(kNumClasses)) {
      throw ConfigError("label counts must have 5 entries");
    }
    long total = 0;
    for (long c : *label_counts) {
      if (c < 0) throw ConfigError("label counts must be >= 0");
      total += c;
    }
    if (total != n) throw ConfigError("label counts sum to " + std::to_string(total) + ", expected n");
    counts = *label_counts;
  } else {
    counts = allocate_counts(n, proportions_of(default_class_specs()));
  }
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (int c = 0; c < kNumClasses; ++c) labels.insert(labels.end(), static_cast<std::size_t>(counts[static_cast<std::size_t>(c)]), c);
  Rng rng(seed);
  rng.shuffle(labels);

  DatasetTable out = empty_table(n);
  out.labels = labels;
  const int levels = models.levels;
  constexpr Eigen::Index kChunk = 1024;
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index rows = std::min<Eigen::Index>(kChunk, n - start);
    const Matrix z = rng.normal_matrix(rows, models.latent_dim);
    std::vector<int> chunk_labels(labels.begin() + start, labels.begin() + start + rows);
    const Matrix model_rows = models.generator.generate(z, chunk_labels, levels, 1.0);
    out.features.middleRows(start, rows) = models.codec.decode(model_rows);
  }
  return out;
}

}  // namespace phantom
