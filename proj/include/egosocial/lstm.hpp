#ifndef EGOSOCIAL_LSTM_HPP
#define EGOSOCIAL_LSTM_HPP

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "egosocial/error.hpp"
#include "egosocial/random.hpp"
#include "egosocial/signals.hpp"
#include "egosocial/types.hpp"

namespace egosocial {

struct NetworkConfig {
  int input_dim = 5;
  int cell_count = 100;
  double dropout_rate = 0.0;
  double learning_rate = 0.001;
  double momentum = 0.5;
  int batch_size = 20;
  int epochs = 100;
  std::uint64_t rng_seed = 42;
  double init_scale = 0.08;

  void validate() const {
    require(input_dim > 0 && cell_count > 0, ErrorCode::InvalidArgument, "dimensions must be positive");
    require(dropout_rate >= 0.0 && dropout_rate <= 0.9, ErrorCode::InvalidArgument, "dropout rate must be in [0, 0.9]");
    require(learning_rate >= 0.0 && momentum >= 0.0 && momentum < 1.0, ErrorCode::InvalidArgument,
            "learning rate must be >= 0 and momentum in [0, 1)");
    require(batch_size >= 1 && epochs >= 0, ErrorCode::InvalidArgument, "batch size must be >= 1");
    require(init_scale >= 0.0, ErrorCode::InvalidArgument, "init scale must be >= 0");
  }

  bool operator==(const NetworkConfig&) const = default;
};

/// Best-performing hyperparameters per feature setting, as published.
inline NetworkConfig preset_config(FeatureSetting setting, int input_dim) {
  NetworkConfig c;
  c.input_dim = input_dim;
  auto set = [&](double lr, double mom, double drop, int batch, int epochs, int cells) {
    c.learning_rate = lr;
    c.momentum = mom;
    c.dropout_rate = drop;
    c.batch_size = batch;
    c.epochs = epochs;
    c.cell_count = cells;
  };
  switch (setting) {
    case FeatureSetting::SID1: set(0.001, 0.7, 0.0, 20, 50, 30); break;
    case FeatureSetting::SID2: set(0.01, 0.8, 0.0, 30, 50, 35); break;
    case FeatureSetting::SID3: set(0.001, 0.7, 0.5, 50, 100, 30); break;
    case FeatureSetting::SID4: set(0.001, 0.5, 0.0, 20, 100, 100); break;
    case FeatureSetting::SIC1: set(0.001, 0.8, 0.0, 50, 50, 200); break;
    case FeatureSetting::SIC2: set(0.001, 0.9, 0.0, 50, 20, 150); break;
    case FeatureSetting::SIC3: set(0.01, 0.8, 0.5, 100, 50, 200); break;
  }
  return c;
}

/// Gate blocks are stacked in the order: cell input, input gate, forget gate,
/// output gate. Each block is `cell_count` rows tall.
struct LstmParameters {
  Matrix input_weights;      // [4H x I]
  Matrix recurrent_weights;  // [4H x H]
  Vector bias;               // [4H]
  Vector peep_input;         // [H], reads c(t-1)
  Vector peep_forget;        // [H], reads c(t-1)
  Vector peep_output;        // [H], reads c(t)
  Vector output_weights;     // [H]
  double output_bias = 0.0;

  static constexpr std::array<std::string_view, 8> kBlockNames = {
      "input_weights", "recurrent_weights", "bias",           "peep_input",
      "peep_forget",   "peep_output",       "output_weights", "output_bias"};

  static LstmParameters zeros(int input_dim, int cells) {
    LstmParameters p;
    p.input_weights = Matrix::Zero(4 * cells, input_dim);
    p.recurrent_weights = Matrix::Zero(4 * cells, cells);
    p.bias = Vector::Zero(4 * cells);
    p.peep_input = Vector::Zero(cells);
    p.peep_forget = Vector::Zero(cells);
    p.peep_output = Vector::Zero(cells);
    p.output_weights = Vector::Zero(cells);
    return p;
  }

  int cells() const { return static_cast<int>(peep_input.size()); }
  int input_dim() const { return static_cast<int>(input_weights.cols()); }

  std::array<std::span<double>, 8> blocks() {
    return {std::span<double>(input_weights.data(), static_cast<std::size_t>(input_weights.size())),
            std::span<double>(recurrent_weights.data(), static_cast<std::size_t>(recurrent_weights.size())),
            std::span<double>(bias.data(), static_cast<std::size_t>(bias.size())),
            std::span<double>(peep_input.data(), static_cast<std::size_t>(peep_input.size())),
            std::span<double>(peep_forget.data(), static_cast<std::size_t>(peep_forget.size())),
            std::span<double>(peep_output.data(), static_cast<std::size_t>(peep_output.size())),
            std::span<double>(output_weights.data(), static_cast<std::size_t>(output_weights.size())),
            std::span<double>(&output_bias, 1)};
  }

  std::array<std::span<const double>, 8> blocks() const {
    auto mutable_blocks = const_cast<LstmParameters*>(this)->blocks();
    std::array<std::span<const double>, 8> out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mutable_blocks[i];
    return out;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (auto b : blocks()) n += b.size();
    return n;
  }

  bool all_finite() const {
    for (auto b : blocks())
      for (double v : b)
        if (!std::isfinite(v)) return false;
    return true;
  }

  /// this += scale * other
  void add_scaled(const LstmParameters& other, double scale) {
    auto dst = blocks();
    auto src = other.blocks();
    for (std::size_t i = 0; i < dst.size(); ++i)
      for (std::size_t k = 0; k < dst[i].size(); ++k) dst[i][k] += scale * src[i][k];
  }

  void scale(double factor) {
    for (auto b : blocks())
      for (double& v : b) v *= factor;
  }

  bool operator==(const LstmParameters& o) const {
    auto a = blocks();
    auto b = o.blocks();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].size() != b[i].size() || !std::equal(a[i].begin(), a[i].end(), b[i].begin())) return false;
    }
    return true;
  }
};

struct Network {
  NetworkConfig config;
  LstmParameters params;
  FeatureScaling scaling;  // empty: inputs used as-is
};

struct TrainReport {
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
  double wall_clock_s = 0.0;
  std::uint64_t rng_seed = 0;
};

struct TrainResult {
  Network network;
  TrainReport report;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline constexpr double kProbabilityClamp = 1e-12;

inline double log_loss(double p, bool label) {
  p = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return label ? -std::log(p) : -std::log(1.0 - p);
}

/// Uniform init in [-init_scale, init_scale]; forget-gate bias starts at 1.
inline Network init_network(const NetworkConfig& config) {
  config.validate();
  Network net;
  net.config = config;
  net.params = LstmParameters::zeros(config.input_dim, config.cell_count);
  Rng rng(derive_seed(config.rng_seed, 0));
  for (auto block : net.params.blocks())
    for (double& v : block) v = config.init_scale * (2.0 * rng.uniform() - 1.0);
  net.params.bias.segment(2 * config.cell_count, config.cell_count).setConstant(1.0);
  return net;
}

/// Inverted-dropout keep mask (entries 0 or 1) for the final hidden state.
inline Vector sample_dropout_mask(int cells, double rate, Rng& rng) {
  Vector mask(cells);
  for (int j = 0; j < cells; ++j) mask(j) = rng.uniform() < rate ? 0.0 : 1.0;
  return mask;
}

namespace detail {

struct ForwardTrace {
  Matrix inputs;       // scaled inputs [T x I]
  Matrix cell_input;   // z   [T x H]
  Matrix input_gate;   // i
  Matrix forget_gate;  // f
  Matrix output_gate;  // o
  Matrix cell;         // c, row t+1 is c(t); row 0 is the zero initial state
  Matrix hidden;       // h, same convention
  Vector readout;      // h(T) after dropout
  double logit = 0.0;
  double probability = 0.5;
};

inline ForwardTrace run_forward(const Network& net, const TimeSeries& series, const Vector* dropout_mask) {
  const int cells = net.params.cells();
  require(series.dim() == net.params.input_dim(), ErrorCode::DimensionMismatch,
          series.id() + ": series dim " + std::to_string(series.dim()) + " != network input " +
              std::to_string(net.params.input_dim()));
  require(series.steps() >= 1, ErrorCode::EmptyInput, series.id() + ": series has no timesteps");
  const auto& p = net.params;
  const Eigen::Index steps = series.steps();

  ForwardTrace tr;
  tr.inputs = net.scaling.apply(series.values);
  const Matrix pre_in = (tr.inputs * p.input_weights.transpose()).rowwise() + p.bias.transpose();
  tr.cell_input.resize(steps, cells);
  tr.input_gate.resize(steps, cells);
  tr.forget_gate.resize(steps, cells);
  tr.output_gate.resize(steps, cells);
  tr.cell = Matrix::Zero(steps + 1, cells);
  tr.hidden = Matrix::Zero(steps + 1, cells);

  Vector pre(4 * cells);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const auto c_prev = tr.cell.row(t).transpose();
    pre.noalias() = pre_in.row(t).transpose() + p.recurrent_weights * tr.hidden.row(t).transpose();
    const Vector z = pre.segment(0, cells).array().tanh();
    const Vector i = (pre.segment(cells, cells).array() + p.peep_input.array() * c_prev.array()).unaryExpr(&sigmoid);
    const Vector f = (pre.segment(2 * cells, cells).array() + p.peep_forget.array() * c_prev.array()).unaryExpr(&sigmoid);
    const Vector c = z.cwiseProduct(i) + c_prev.cwiseProduct(f);
    const Vector o = (pre.segment(3 * cells, cells).array() + p.peep_output.array() * c.array()).unaryExpr(&sigmoid);
    tr.cell_input.row(t) = z.transpose();
    tr.input_gate.row(t) = i.transpose();
    tr.forget_gate.row(t) = f.transpose();
    tr.output_gate.row(t) = o.transpose();
    tr.cell.row(t + 1) = c.transpose();
    tr.hidden.row(t + 1) = (c.array().tanh() * o.array()).transpose();
  }

  tr.readout = tr.hidden.row(steps).transpose();
  if (dropout_mask) {
    require(dropout_mask->size() == cells, ErrorCode::DimensionMismatch, "dropout mask size");
    const double keep = 1.0 - net.config.dropout_rate;
    tr.readout = tr.readout.cwiseProduct(*dropout_mask) / keep;
  }
  tr.logit = p.output_weights.dot(tr.readout) + p.output_bias;
  tr.probability = sigmoid(tr.logit);
  if (!std::isfinite(tr.probability) || !std::isfinite(tr.logit))
    throw Error(ErrorCode::NumericalFailure, series.id() + ": non-finite network output");
  return tr;
}

}  // namespace detail

/// Probability of the positive class read from the final hidden state.
/// In train mode the dropout mask is applied to that state (inverted dropout).
inline double forward(const Network& net, const TimeSeries& series, bool train_mode = false,
                      const Vector* dropout_mask = nullptr) {
  const Vector* mask = train_mode && net.config.dropout_rate > 0.0 ? dropout_mask : nullptr;
  require(!(train_mode && net.config.dropout_rate > 0.0 && dropout_mask == nullptr), ErrorCode::InvalidArgument,
          "train-mode forward with dropout needs a mask");
  return detail::run_forward(net, series, mask).probability;
}

struct GradientResult {
  LstmParameters gradient;
  double loss = 0.0;
  double probability = 0.5;
};

/// Exact log-loss gradient for every parameter, unrolled over all timesteps.
inline GradientResult compute_gradients(const Network& net, const TimeSeries& series, bool label,
                                        const Vector* dropout_mask = nullptr) {
  const Vector* mask = net.config.dropout_rate > 0.0 ? dropout_mask : nullptr;
  const detail::ForwardTrace tr = detail::run_forward(net, series, mask);
  const auto& p = net.params;
  const int cells = p.cells();
  const Eigen::Index steps = series.steps();

  GradientResult out;
  out.probability = tr.probability;
  out.loss = log_loss(tr.probability, label);
  LstmParameters& g = out.gradient;
  g = LstmParameters::zeros(p.input_dim(), cells);

  const double dlogit = tr.probability - (label ? 1.0 : 0.0);
  g.output_weights = dlogit * tr.readout;
  g.output_bias = dlogit;
  Vector dh = dlogit * p.output_weights;
  if (mask) dh = dh.cwiseProduct(*mask) / (1.0 - net.config.dropout_rate);

  Matrix dpre(steps, 4 * cells);
  Vector dc_next = Vector::Zero(cells);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const Vector z = tr.cell_input.row(t).transpose();
    const Vector i = tr.input_gate.row(t).transpose();
    const Vector f = tr.forget_gate.row(t).transpose();
    const Vector o = tr.output_gate.row(t).transpose();
    const Vector c = tr.cell.row(t + 1).transpose();
    const Vector c_prev = tr.cell.row(t).transpose();
    const Vector tanh_c = c.array().tanh();

    const Vector da_o = (dh.array() * tanh_c.array() * o.array() * (1.0 - o.array())).matrix();
    const Vector dc = dc_next + (dh.array() * o.array() * (1.0 - tanh_c.array().square())).matrix() +
                      p.peep_output.cwiseProduct(da_o);
    const Vector da_i = (dc.array() * z.array() * i.array() * (1.0 - i.array())).matrix();
    const Vector da_f = (dc.array() * c_prev.array() * f.array() * (1.0 - f.array())).matrix();
    const Vector da_z = (dc.array() * i.array() * (1.0 - z.array().square())).matrix();

    dpre.row(t).segment(0, cells) = da_z.transpose();
    dpre.row(t).segment(cells, cells) = da_i.transpose();
    dpre.row(t).segment(2 * cells, cells) = da_f.transpose();
    dpre.row(t).segment(3 * cells, cells) = da_o.transpose();

    g.peep_input += da_i.cwiseProduct(c_prev);
    g.peep_forget += da_f.cwiseProduct(c_prev);
    g.peep_output += da_o.cwiseProduct(c);

    dc_next = dc.cwiseProduct(f) + p.peep_input.cwiseProduct(da_i) + p.peep_forget.cwiseProduct(da_f);
    dh.noalias() = p.recurrent_weights.transpose() * dpre.row(t).transpose();
  }
  g.input_weights.noalias() = dpre.transpose() * tr.inputs;
  g.recurrent_weights.noalias() = dpre.transpose() * tr.hidden.topRows(steps);
  g.bias = dpre.colwise().sum().transpose();

  if (!g.all_finite() || !std::isfinite(out.loss))
    throw Error(ErrorCode::NumericalFailure, series.id() + ": non-finite gradient");
  return out;
}

struct Prediction {
  bool label = false;
  double probability = 0.5;
};

/// Eval-mode forward; probability 0.5 maps to the positive label.
inline Prediction predict(const Network& net, const TimeSeries& series) {
  const double p = forward(net, series, false);
  return {p >= 0.5, p};
}

struct Metrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
};

/// Standard definitions; a ratio with an empty denominator is reported as 0.
inline Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  Metrics m{tp, fp, tn, fn};
  m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  const std::size_t total = tp + fp + tn + fn;
  m.accuracy = total ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
  return m;
}

inline Metrics score_predictions(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  require(predicted.size() == truth.size(), ErrorCode::DimensionMismatch, "prediction and label counts differ");
  require(!truth.empty(), ErrorCode::EmptyInput, "empty evaluation set");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (predicted[k] && truth[k]) ++tp;
    else if (predicted[k]) ++fp;
    else if (truth[k]) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

inline void require_labels(std::span<const TimeSeries> set) {
  for (const auto& s : set)
    if (!s.label) throw Error(ErrorCode::MissingLabel, "unlabeled series " + s.id());
}

inline Metrics evaluate(const Network& net, std::span<const TimeSeries> set) {
  require(!set.empty(), ErrorCode::EmptyInput, "empty evaluation set");
  require_labels(set);
  std::vector<bool> predicted, truth;
  for (const auto& s : set) {
    predicted.push_back(predict(net, s).label);
    truth.push_back(*s.label);
  }
  return score_predictions(predicted, truth);
}

struct TrainOptions {
  int threads = 1;
};

namespace detail {

/// Runs fn(k) for k in [0, count) on up to `threads` workers.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < count; k += workers) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline constexpr std::size_t kGradientChunk = 8;

}  // namespace detail

/// Classical momentum SGD over whole-sequence mini-batches:
///   v <- momentum * v - lr * mean_batch_gradient;  w <- w + v
/// Per-sequence gradients may be computed in parallel, but they are always
/// summed in batch order, so results do not depend on the thread count.
inline TrainResult train(const Network& initial, std::span<const TimeSeries> set, const NetworkConfig& config,
                         const TrainOptions& options = {}) {
  config.validate();
  require(!set.empty(), ErrorCode::EmptyInput, "empty training set");
  require_labels(set);
  for (const auto& s : set)
    require(s.dim() == initial.params.input_dim(), ErrorCode::DimensionMismatch, s.id() + ": dimension mismatch");

  const auto start = std::chrono::steady_clock::now();
  TrainResult result{initial, {}};
  Network& net = result.network;
  net.config.learning_rate = config.learning_rate;
  net.config.momentum = config.momentum;
  net.config.dropout_rate = config.dropout_rate;
  net.config.batch_size = config.batch_size;
  net.config.epochs = config.epochs;
  net.config.rng_seed = config.rng_seed;
  result.report.rng_seed = config.rng_seed;

  Rng order_rng(derive_seed(config.rng_seed, 1));
  Rng dropout_rng(derive_seed(config.rng_seed, 2));
  const int cells = net.params.cells();
  LstmParameters velocity = LstmParameters::zeros(net.params.input_dim(), cells);
  LstmParameters batch_grad = velocity;
  std::vector<LstmParameters> slots(detail::kGradientChunk, velocity);
  std::vector<double> slot_loss(detail::kGradientChunk);
  std::vector<Vector> masks(detail::kGradientChunk);

  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += batch) {
      const std::size_t b1 = std::min(order.size(), b0 + batch);
      batch_grad.scale(0.0);
      for (std::size_t c0 = b0; c0 < b1; c0 += detail::kGradientChunk) {
        const std::size_t c1 = std::min(b1, c0 + detail::kGradientChunk);
        const bool use_mask = config.dropout_rate > 0.0;
        for (std::size_t k = c0; k < c1; ++k)
          if (use_mask) masks[k - c0] = sample_dropout_mask(cells, config.dropout_rate, dropout_rng);
        try {
          detail::parallel_for(c1 - c0, options.threads, [&](std::size_t k) {
            const TimeSeries& s = set[order[c0 + k]];
            auto g = compute_gradients(net, s, *s.label, use_mask ? &masks[k] : nullptr);
            slots[k] = std::move(g.gradient);
            slot_loss[k] = g.loss;
          });
        } catch (const Error& e) {
          throw Error(ErrorCode::NumericalFailure,
                      "training diverged in epoch " + std::to_string(epoch + 1) + ": " + e.what());
        }
        for (std::size_t k = 0; k < c1 - c0; ++k) {
          batch_grad.add_scaled(slots[k], 1.0);
          epoch_loss += slot_loss[k];
        }
      }
      velocity.scale(config.momentum);
      velocity.add_scaled(batch_grad, -config.learning_rate / static_cast<double>(b1 - b0));
      net.params.add_scaled(velocity, 1.0);
    }
    epoch_loss /= static_cast<double>(set.size());
    if (!std::isfinite(epoch_loss) || !net.params.all_finite())
      throw Error(ErrorCode::NumericalFailure, "training diverged in epoch " + std::to_string(epoch + 1));
    result.report.epoch_loss.push_back(epoch_loss);
  }

  std::size_t correct = 0;
  for (const auto& s : set) correct += predict(net, s).label == *s.label ? 1 : 0;
  result.report.train_accuracy = static_cast<double>(correct) / static_cast<double>(set.size());
  result.report.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

/// Fits input standardization on the training set (unless disabled),
/// initializes a network for `config` and trains it.
inline TrainResult train_classifier(std::span<const TimeSeries> set, NetworkConfig config, bool standardize = true,
                                    const TrainOptions& options = {}) {
  require(!set.empty(), ErrorCode::EmptyInput, "empty training set");
  require_labels(set);
  config.input_dim = static_cast<int>(set.front().dim());
  Network net = init_network(config);
  if (standardize) net.scaling = fit_scaling(set, raw_columns(set.front().setting, set.front().dim()));
  return train(net, set, config, options);
}

// ---------------------------------------------------------------------------
// Hyperparameter search

struct SearchAxis {
  double lo = 0.0;
  double hi = 0.0;
  bool integer = false;
  std::vector<double> values;  // explicit candidates; overrides sampling when non-empty
};

/// Default intervals; every axis is sampled log-uniformly except when its lower
/// bound is 0 (dropout), where the draw is uniform.
struct SearchSpace {
  SearchAxis learning_rate{1e-4, 0.1, false, {}};
  SearchAxis momentum{0.1, 0.9, false, {}};
  SearchAxis dropout{0.0, 0.9, false, {}};
  SearchAxis batch_size{100, 1000, true, {}};
  SearchAxis epochs{10, 100, true, {}};
  SearchAxis cells{10, 200, true, {}};
  int samples_per_axis = 2;
  std::uint64_t seed = 7;
};

struct CvRow {
  NetworkConfig config;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

struct GridSearchResult {
  NetworkConfig best;
  std::vector<CvRow> table;
};

inline std::vector<double> sample_axis(const SearchAxis& axis, int samples, Rng& rng) {
  if (!axis.values.empty()) return axis.values;
  require(samples >= 1 && axis.hi >= axis.lo, ErrorCode::InvalidArgument, "invalid search axis");
  std::vector<double> out;
  for (int s = 0; s < samples; ++s) {
    double v = axis.lo > 0.0 ? std::exp(rng.uniform(std::log(axis.lo), std::log(axis.hi))) : rng.uniform(axis.lo, axis.hi);
    if (axis.integer) v = std::round(v);
    out.push_back(std::clamp(v, axis.lo, axis.hi));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Stratified fold index per series; classes are shuffled independently and
/// dealt round-robin.
inline std::vector<int> stratified_folds(std::span<const TimeSeries> set, int folds, std::uint64_t seed) {
  require_labels(set);
  std::vector<std::size_t> pos, neg;
  for (std::size_t k = 0; k < set.size(); ++k) (*set[k].label ? pos : neg).push_back(k);
  if (pos.size() < static_cast<std::size_t>(folds) || neg.size() < static_cast<std::size_t>(folds))
    throw Error(ErrorCode::InsufficientData, "need at least " + std::to_string(folds) + " series per class");
  Rng rng(derive_seed(seed, 3));
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<int> fold(set.size());
  for (std::size_t k = 0; k < pos.size(); ++k) fold[pos[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  for (std::size_t k = 0; k < neg.size(); ++k) fold[neg[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  return fold;
}

inline std::vector<NetworkConfig> enumerate_candidates(const SearchSpace& space, const NetworkConfig& base) {
  Rng rng(derive_seed(space.seed, 4));
  const int n = space.samples_per_axis;
  const auto lrs = sample_axis(space.learning_rate, n, rng);
  const auto moms = sample_axis(space.momentum, n, rng);
  const auto drops = sample_axis(space.dropout, n, rng);
  const auto batches = sample_axis(space.batch_size, n, rng);
  const auto epochs = sample_axis(space.epochs, n, rng);
  const auto cells = sample_axis(space.cells, n, rng);
  std::vector<NetworkConfig> out;
  for (double lr : lrs)
    for (double mom : moms)
      for (double drop : drops)
        for (double batch : batches)
          for (double ep : epochs)
            for (double cell : cells) {
              NetworkConfig c = base;
              c.learning_rate = lr;
              c.momentum = mom;
              c.dropout_rate = drop;
              c.batch_size = static_cast<int>(batch);
              c.epochs = static_cast<int>(ep);
              c.cell_count = static_cast<int>(cell);
              out.push_back(c);
            }
  return out;
}

/// k-fold stratified cross-validation over every candidate. Best = highest
/// mean validation accuracy; ties go to fewer cells, then fewer epochs.
inline GridSearchResult grid_search(std::span<const TimeSeries> set, const SearchSpace& space,
                                    const NetworkConfig& base, int folds = 3, bool standardize = true,
                                    const TrainOptions& options = {}) {
  require(folds >= 2, ErrorCode::InvalidArgument, "need at least 2 folds");
  const auto fold_of = stratified_folds(set, folds, space.seed);
  const auto candidates = enumerate_candidates(space, base);
  require(!candidates.empty(), ErrorCode::InvalidArgument, "empty search space");

  GridSearchResult result;
  for (const auto& candidate : candidates) {
    CvRow row{candidate, {}, 0.0};
    for (int f = 0; f < folds; ++f) {
      std::vector<TimeSeries> train_set, valid_set;
      for (std::size_t k = 0; k < set.size(); ++k) (fold_of[k] == f ? valid_set : train_set).push_back(set[k]);
      const auto trained = train_classifier(train_set, candidate, standardize, options);
      row.fold_accuracy.push_back(evaluate(trained.network, valid_set).accuracy);
    }
    row.mean_accuracy = std::accumulate(row.fold_accuracy.begin(), row.fold_accuracy.end(), 0.0) / folds;
    result.table.push_back(std::move(row));
  }
  const CvRow* best = &result.table.front();
  for (const auto& row : result.table) {
    const bool better = row.mean_accuracy > best->mean_accuracy ||
                        (row.mean_accuracy == best->mean_accuracy &&
                         (row.config.cell_count < best->config.cell_count ||
                          (row.config.cell_count == best->config.cell_count && row.config.epochs < best->config.epochs)));
    if (better) best = &row;
  }
  result.best = best->config;
  return result;
}

}  // namespace egosocial

#endif
