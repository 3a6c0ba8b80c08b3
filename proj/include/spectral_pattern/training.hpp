#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "spectral_pattern/errors.hpp"
#include "spectral_pattern/matrix.hpp"
#include "spectral_pattern/nn.hpp"

namespace spectral_pattern {

// ---------------------------------------------------------------------------
// Parallelism

/// Worker cap from SPECTRAL_PATTERN_THREADS, else the hardware concurrency.
inline std::size_t thread_budget() {
  if (const char* env = std::getenv("SPECTRAL_PATTERN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Callers write
/// results into per-index slots, so the outcome never depends on scheduling.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w)
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += threads) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// splitmix64 finalizer; derives independent RNG streams from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  auto step = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return step(step(step(seed) ^ a) ^ b);
}

// ---------------------------------------------------------------------------
// Samples and configuration

/// One model input: the (scaled) Laplacian and standardized features of a group.
struct GraphSample {
  std::string id;
  Matrix laplacian;
  Matrix features;
  std::optional<std::size_t> label;
};

struct TrainConfig {
  OptimizerConfig optimizer;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::uint64_t seed = 42;
  std::size_t early_stop_patience = 20;  // 0 disables early stopping
  std::size_t threads = 0;               // 0 = thread_budget()
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_loss = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
};

struct TrainResult {
  GcnnModel model;
  TrainHistory history;
};

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::size_t total = 0;
};

struct Prediction {
  std::vector<double> probabilities;
  std::size_t predicted = 0;
};

inline void validate(const TrainConfig& config) {
  if (!(config.optimizer.learning_rate > 0.0)) throw UsageError("learning rate must be positive");
  if (config.epochs < 1) throw UsageError("epochs must be at least 1");
  if (config.batch_size < 1) throw UsageError("batch size must be at least 1");
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

/// Deterministic forward pass with dropout off.
inline Prediction predict(const GcnnModel& model, const Matrix& laplacian, const Matrix& features) {
  ForwardCache cache = forward(model, laplacian, features);
  Prediction p;
  p.probabilities = std::move(cache.probabilities);
  p.predicted = argmax(p.probabilities);
  return p;
}

inline Prediction predict(const GcnnModel& model, const GraphSample& sample) {
  return predict(model, sample.laplacian, sample.features);
}

/// Accuracy, mean loss and confusion matrix over the labeled samples in `indices`.
inline Evaluation evaluate(const GcnnModel& model, std::span<const GraphSample> samples,
                           std::span<const std::size_t> indices, std::size_t threads = 0) {
  if (indices.empty()) throw EmptySplit("cannot evaluate an empty split");
  if (threads == 0) threads = thread_budget();
  std::vector<Prediction> preds(indices.size());
  parallel_for(indices.size(), threads, [&](std::size_t i) { preds[i] = predict(model, samples[indices[i]]); });

  Evaluation ev;
  const std::size_t classes = model.classes();
  ev.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  const double penalty = l2_penalty(model);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const GraphSample& s = samples[indices[i]];
    if (!s.label) throw InvalidLabel("sample '" + s.id + "' has no label");
    const std::size_t label = *s.label;
    if (label >= classes) throw InvalidLabel("sample '" + s.id + "' has label out of range");
    ++ev.confusion[label][preds[i].predicted];
    if (preds[i].predicted == label) ++correct;
    loss += cross_entropy_loss(preds[i].probabilities, label, model) - penalty;
  }
  ev.total = indices.size();
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(ev.total);
  ev.mean_loss = loss / static_cast<double>(ev.total) + penalty;
  return ev;
}

/// Mini-batch training with per-epoch seeded shuffles and early stopping on
/// validation loss. Per-sample gradients are summed in batch order, so any
/// thread count produces bit-identical parameters. Returns the snapshot with
/// the lowest validation loss.
inline TrainResult train(GcnnModel model, std::span<const GraphSample> samples, std::span<const std::size_t> train_idx,
                         std::span<const std::size_t> val_idx, const TrainConfig& config) {
  validate(config);
  validate(model);
  if (train_idx.empty()) throw EmptySplit("training split is empty");
  if (val_idx.empty()) throw EmptySplit("validation split is empty");
  for (std::size_t idx : train_idx)
    if (!samples[idx].label) throw InvalidLabel("training sample '" + samples[idx].id + "' has no label");
  const std::size_t threads = config.threads == 0 ? thread_budget() : config.threads;

  OptimizerState opt_state;
  TrainResult result{model, {}};
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(mix_seed(config.seed, 0x5u, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      std::vector<GcnnModel> grads(count);
      std::vector<double> losses(count);
      std::vector<std::size_t> hits(count);
      parallel_for(count, threads, [&](std::size_t b) {
        const GraphSample& s = samples[order[start + b]];
        std::mt19937_64 drop_rng(mix_seed(config.seed, epoch, start + b));
        ForwardCache cache = forward(model, s.laplacian, s.features, &drop_rng);
        losses[b] = cross_entropy_loss(cache.probabilities, *s.label, model);
        hits[b] = argmax(cache.probabilities) == *s.label ? 1 : 0;
        grads[b] = backward(model, s.laplacian, cache, *s.label);
      });

      for (std::size_t b = 0; b < count; ++b)
        if (!std::isfinite(losses[b]))
          throw DivergedLoss("non-finite loss at epoch " + std::to_string(epoch) + " on sample '" +
                             samples[order[start + b]].id + "'");

      GcnnModel total = std::move(grads[0]);
      std::vector<std::span<double>> acc;
      for_each_tensor(total, [&](std::span<double> t, bool) { acc.push_back(t); });
      for (std::size_t b = 1; b < count; ++b) {
        std::size_t idx = 0;
        for_each_tensor(grads[b], [&](std::span<const double> t, bool) {
          std::span<double> dst = acc[idx++];
          for (std::size_t i = 0; i < t.size(); ++i) dst[i] += t[i];
        });
      }
      const double inv = 1.0 / static_cast<double>(count);
      for (auto& t : acc)
        for (double& v : t) v *= inv;
      optimizer_step(opt_state, model, total, config.optimizer);

      for (std::size_t b = 0; b < count; ++b) {
        loss_sum += losses[b];
        correct += hits[b];
      }
    }

    const Evaluation val = evaluate(model, samples, val_idx, threads);
    if (!std::isfinite(val.mean_loss))
      throw DivergedLoss("non-finite validation loss at epoch " + std::to_string(epoch));
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    rec.validation_loss = val.mean_loss;
    rec.validation_accuracy = val.accuracy;
    result.history.epochs.push_back(rec);

    if (val.mean_loss < best_val) {
      best_val = val.mean_loss;
      result.model = model;
      result.history.best_epoch = epoch;
      since_best = 0;
    } else if (config.early_stop_patience > 0 && ++since_best >= config.early_stop_patience) {
      break;
    }
  }
  return result;
}

}  // namespace spectral_pattern
