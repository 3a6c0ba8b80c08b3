#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "spectral_pattern/checkpoint.hpp"
#include "spectral_pattern/data.hpp"
#include "spectral_pattern/nn.hpp"
#include "spectral_pattern/training.hpp"

namespace spectral_pattern {

/// One train/evaluate run. A single seed drives the split, the weight
/// initialization and the training streams.
struct ExperimentConfig {
  GraphOptions graph;
  ModelSpec model;
  TrainConfig train;
  std::vector<std::size_t> feature_columns{0, 1, 2, 3, 4};
  std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
  std::uint64_t seed = 42;
};

struct ExperimentResult {
  Checkpoint checkpoint;
  TrainHistory history;
  DatasetSplits splits;
  Evaluation validation;
  Evaluation test;
  double runtime_seconds = 0.0;
};

inline std::uint64_t init_seed(std::uint64_t seed) { return mix_seed(seed, 0x1417u); }
inline std::uint64_t train_seed(std::uint64_t seed) { return mix_seed(seed, 0x7a17u); }

/// Split, mask feature columns, fit the standardizer on the training split,
/// train and evaluate. `prepared` holds the unstandardized samples of
/// `dataset` (all feature columns) in dataset order.
inline ExperimentResult run_experiment(const Dataset& dataset, std::span<const GraphSample> prepared,
                                       const ExperimentConfig& config) {
  if (prepared.size() != dataset.groups.size()) throw DimensionMismatch("prepared samples do not match the dataset");
  if (config.feature_columns.empty()) throw UsageError("at least one feature column is required");
  const auto start = std::chrono::steady_clock::now();

  ExperimentResult result;
  result.splits = split_dataset(dataset, config.split_ratios, config.seed).splits;

  std::vector<GraphSample> samples = mask_features(prepared, config.feature_columns);
  const Standardizer standardizer = fit_standardizer(samples, result.splits.train);
  standardize_in_place(samples, standardizer);

  ModelSpec spec = config.model;
  spec.input_dim = config.feature_columns.size();
  spec.classes = kPatternClasses;
  GcnnModel model = make_model(spec, init_seed(config.seed));

  TrainConfig tc = config.train;
  tc.seed = train_seed(config.seed);
  TrainResult trained = train(std::move(model), samples, result.splits.train, result.splits.validation, tc);

  result.validation = evaluate(trained.model, samples, result.splits.validation, tc.threads);
  result.test = evaluate(trained.model, samples, result.splits.test, tc.threads);
  result.history = std::move(trained.history);
  result.checkpoint.model = std::move(trained.model);
  result.checkpoint.graph = config.graph;
  result.checkpoint.feature_columns = config.feature_columns;
  result.checkpoint.standardizer = standardizer;
  result.checkpoint.split_seed = config.seed;
  result.checkpoint.split_ratios = config.split_ratios;
  result.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

/// Builds graphs, then runs the experiment.
inline ExperimentResult run_experiment(const Dataset& dataset, const ExperimentConfig& config) {
  const auto prepared = prepare_samples(dataset, config.graph, config.train.threads);
  return run_experiment(dataset, prepared, config);
}

/// Standardized inference inputs for a dataset under a checkpoint.
inline std::vector<GraphSample> samples_for_checkpoint(const Dataset& dataset, const Checkpoint& ck,
                                                       std::size_t threads = 0) {
  auto samples = mask_features(prepare_samples(dataset, ck.graph, threads), ck.feature_columns);
  standardize_in_place(samples, ck.standardizer);
  return samples;
}

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
  std::string config;
  std::size_t order = 0;
  std::string features;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
  double validation_loss = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double runtime_seconds = 0.0;
};

using ExperimentReport = std::vector<ReportRow>;

inline constexpr const char* kReportCsvHeader =
    "config,k,features,train_accuracy,validation_accuracy,test_accuracy,validation_loss,best_epoch,epochs_run,"
    "runtime_seconds";

inline std::string feature_list(std::span<const std::size_t> columns) {
  std::string out;
  for (std::size_t c : columns) {
    if (!out.empty()) out += '+';
    out += c < BuildingFeatures::kCount ? kFeatureNames[c] : "?";
  }
  return out;
}

inline ReportRow make_row(std::string name, const ExperimentConfig& config, const ExperimentResult& r) {
  ReportRow row;
  row.config = std::move(name);
  row.order = config.model.order;
  row.features = feature_list(config.feature_columns);
  const EpochRecord& best = r.history.epochs.at(r.history.best_epoch - 1);
  row.train_accuracy = best.train_accuracy;
  row.validation_accuracy = r.validation.accuracy;
  row.test_accuracy = r.test.accuracy;
  row.validation_loss = r.validation.mean_loss;
  row.best_epoch = r.history.best_epoch;
  row.epochs_run = r.history.epochs.size();
  row.runtime_seconds = r.runtime_seconds;
  return row;
}

inline void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << kReportCsvHeader << '\n';
  out << std::setprecision(10);
  for (const ReportRow& r : report)
    out << r.config << ',' << r.order << ',' << r.features << ',' << r.train_accuracy << ',' << r.validation_accuracy
        << ',' << r.test_accuracy << ',' << r.validation_loss << ',' << r.best_epoch << ',' << r.epochs_run << ','
        << r.runtime_seconds << '\n';
}

inline void write_report_table(std::ostream& out, const ExperimentReport& report) {
  out << std::left << std::setw(16) << "config" << std::setw(4) << "K" << std::setw(34) << "features" << std::right
      << std::setw(9) << "val_acc" << std::setw(10) << "test_acc" << std::setw(10) << "val_loss" << std::setw(7)
      << "best" << std::setw(10) << "time_s" << '\n';
  out << std::fixed;
  for (const ReportRow& r : report)
    out << std::left << std::setw(16) << r.config << std::setw(4) << r.order << std::setw(34) << r.features
        << std::right << std::setprecision(4) << std::setw(9) << r.validation_accuracy << std::setw(10)
        << r.test_accuracy << std::setw(10) << r.validation_loss << std::setw(7) << r.best_epoch
        << std::setprecision(2) << std::setw(10) << r.runtime_seconds << '\n';
  out << std::defaultfloat;
}

inline void write_history_csv(std::ostream& out, const TrainHistory& history) {
  out << "epoch,train_loss,train_accuracy,validation_loss,validation_accuracy\n" << std::setprecision(12);
  for (const EpochRecord& e : history.epochs)
    out << e.epoch << ',' << e.train_loss << ',' << e.train_accuracy << ',' << e.validation_loss << ','
        << e.validation_accuracy << '\n';
}

/// Annotates errors raised inside one configuration of a sweep.
template <class Fn>
auto with_context(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericError& e) {
    throw NumericError(what + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(what + ": " + e.what());
  } catch (const UsageError& e) {
    throw UsageError(what + ": " + e.what());
  }
}

/// One run per polynomial order with everything else fixed; graphs are built once.
inline ExperimentReport sweep_k(const Dataset& dataset, std::span<const std::size_t> orders,
                                const ExperimentConfig& base) {
  const auto prepared = prepare_samples(dataset, base.graph, base.train.threads);
  ExperimentReport report;
  for (std::size_t k : orders) {
    if (k < 1) throw UsageError("polynomial order K must be at least 1");
    ExperimentConfig config = base;
    config.model.order = k;
    const std::string name = "K=" + std::to_string(k);
    const ExperimentResult r = with_context(name, [&] { return run_experiment(dataset, prepared, config); });
    report.push_back(make_row(name, config, r));
  }
  return report;
}

enum class AblationMode { only_one, all_but_one };

/// Five runs, each keeping one feature (only_one) or dropping one (all_but_one).
/// Masked columns are removed before the standardizer is fitted.
inline ExperimentReport ablate_features(const Dataset& dataset, AblationMode mode, const ExperimentConfig& base) {
  const auto prepared = prepare_samples(dataset, base.graph, base.train.threads);
  ExperimentReport report;
  for (std::size_t f = 0; f < BuildingFeatures::kCount; ++f) {
    ExperimentConfig config = base;
    config.feature_columns.clear();
    for (std::size_t c = 0; c < BuildingFeatures::kCount; ++c)
      if ((mode == AblationMode::only_one) == (c == f)) config.feature_columns.push_back(c);
    const std::string name = (mode == AblationMode::only_one ? "only:" : "without:") + std::string(kFeatureNames[f]);
    const ExperimentResult r = with_context(name, [&] { return run_experiment(dataset, prepared, config); });
    report.push_back(make_row(name, config, r));
  }
  return report;
}

}  // namespace spectral_pattern
