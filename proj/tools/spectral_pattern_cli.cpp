// Command-line front end: dataset generation, training, evaluation,
// prediction and the K-sweep / feature-ablation experiment harnesses.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "spectral_pattern.hpp"

namespace sp = spectral_pattern;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

const char* kReportHelp =
    "Report CSV columns: config,k,features,train_accuracy,validation_accuracy,test_accuracy,"
    "validation_loss,best_epoch,epochs_run,runtime_seconds (one row per configuration, in order).";

struct GraphFlags {
  std::string structure = "dt";
  std::string weighting = "binary";
  std::string laplacian = "sym";

  void attach(CLI::App* cmd) {
    cmd->add_option("--structure", structure, "Proximity graph: dt|mst")
        ->check(CLI::IsMember({"dt", "mst"}))
        ->capture_default_str();
    cmd->add_option("--weighting", weighting, "Edge weights: binary|invdist|gaussian")
        ->check(CLI::IsMember({"binary", "invdist", "gaussian"}))
        ->capture_default_str();
    cmd->add_option("--laplacian", laplacian, "Laplacian: comb|sym (always rescaled to [-1,1])")
        ->check(CLI::IsMember({"comb", "sym"}))
        ->capture_default_str();
  }

  sp::GraphOptions options() const {
    sp::GraphOptions g;
    g.structure = sp::parse_structure(structure);
    g.weighting = sp::parse_weighting(weighting);
    g.laplacian = sp::parse_laplacian(laplacian);
    return g;
  }
};

struct ExperimentFlags {
  GraphFlags graph;
  std::uint64_t seed = 42;
  std::size_t k = 3;
  std::size_t layers = 4;
  std::size_t channels = 24;
  std::string pool = "mean";
  std::string optimizer = "adam";
  double lr = 1e-3;
  double momentum = 0.9;
  std::size_t epochs = 200;
  std::size_t batch = 32;
  std::size_t patience = 20;
  double dropout = 0.5;
  double l2 = 5e-4;
  std::vector<std::string> features;

  void attach(CLI::App* cmd, bool with_k = true, bool with_features = true) {
    graph.attach(cmd);
    cmd->add_option("--seed", seed, "Seed for split, initialization and training")->capture_default_str();
    if (with_k) cmd->add_option("--k", k, "Polynomial order K (powers 0..K-1)")->capture_default_str();
    cmd->add_option("--layers", layers, "Graph convolution layers")->capture_default_str();
    cmd->add_option("--channels", channels, "Kernels per convolution layer")->capture_default_str();
    cmd->add_option("--pool", pool, "Global pooling: mean|max")->check(CLI::IsMember({"mean", "max"}))->capture_default_str();
    cmd->add_option("--optimizer", optimizer, "adam|sgd")->check(CLI::IsMember({"adam", "sgd"}))->capture_default_str();
    cmd->add_option("--lr", lr, "Learning rate")->capture_default_str();
    cmd->add_option("--momentum", momentum, "SGD momentum")->capture_default_str();
    cmd->add_option("--epochs", epochs, "Maximum epochs")->capture_default_str();
    cmd->add_option("--batch", batch, "Mini-batch size")->capture_default_str();
    cmd->add_option("--patience", patience, "Early-stopping patience in epochs (0 = off)")->capture_default_str();
    cmd->add_option("--dropout", dropout, "Dropout rate on the pooled embedding")->capture_default_str();
    cmd->add_option("--l2", l2, "L2 penalty on conv and dense weights")->capture_default_str();
    if (with_features)
      cmd->add_option("--features", features, "Feature subset: area,main_direction,R_lw,R_A,C (default all)")
          ->delimiter(',');
  }

  sp::ExperimentConfig config() const {
    sp::ExperimentConfig c;
    c.graph = graph.options();
    c.seed = seed;
    c.model.order = k;
    c.model.conv_layers = layers;
    c.model.channels = channels;
    c.model.pool = sp::parse_pool(pool);
    c.model.dropout_rate = dropout;
    c.model.l2_lambda = l2;
    c.train.optimizer.kind = optimizer == "sgd" ? sp::OptimizerKind::sgd : sp::OptimizerKind::adam;
    c.train.optimizer.learning_rate = lr;
    c.train.optimizer.momentum = momentum;
    c.train.epochs = epochs;
    c.train.batch_size = batch;
    c.train.early_stop_patience = patience;
    if (!features.empty()) {
      c.feature_columns.clear();
      for (const std::string& name : features) {
        std::size_t col = sp::BuildingFeatures::kCount;
        for (std::size_t f = 0; f < sp::BuildingFeatures::kCount; ++f)
          if (name == sp::kFeatureNames[f]) col = f;
        if (col == sp::BuildingFeatures::kCount) throw sp::UsageError("unknown feature '" + name + "'");
        c.feature_columns.push_back(col);
      }
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw sp::UsageError("--dropout must be in [0,1)");
    if (!(l2 >= 0.0)) throw sp::UsageError("--l2 must be nonnegative");
    if (k < 1) throw sp::UsageError("--k must be at least 1");
    if (channels < 1) throw sp::UsageError("--channels must be at least 1");
    return c;
  }
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sp::DataError("cannot write '" + path + "'");
  return out;
}

void print_confusion(std::ostream& out, const sp::Evaluation& ev) {
  out << "confusion [true][predicted]:\n";
  out << "  " << std::setw(12) << "" << std::setw(10) << "regular" << std::setw(10) << "irregular" << '\n';
  for (std::size_t t = 0; t < ev.confusion.size(); ++t) {
    out << "  " << std::left << std::setw(12) << sp::to_string(static_cast<sp::PatternLabel>(t)) << std::right;
    for (std::size_t p = 0; p < ev.confusion[t].size(); ++p) out << std::setw(10) << ev.confusion[t][p];
    out << '\n';
  }
}

int cmd_generate(const std::string& out_path, const sp::SyntheticOptions& options) {
  const sp::Dataset d = sp::generate_synthetic_dataset(options);
  sp::save_dataset(d, out_path);
  std::cout << "wrote " << d.groups.size() << " groups to " << out_path << '\n';
  return 0;
}

int cmd_train(const std::string& data, const std::string& checkpoint, const std::string& history_path,
              const ExperimentFlags& flags) {
  const sp::ExperimentConfig config = flags.config();
  const sp::Dataset d = sp::load_dataset(data);
  const sp::ExperimentResult r = sp::run_experiment(d, config);
  sp::save_checkpoint(r.checkpoint, checkpoint);
  if (!history_path.empty()) {
    auto out = open_output(history_path);
    sp::write_history_csv(out, r.history);
  }
  std::cout << "splits: train " << r.splits.train.size() << ", validation " << r.splits.validation.size()
            << ", test " << r.splits.test.size() << '\n'
            << "epochs run: " << r.history.epochs.size() << ", best epoch: " << r.history.best_epoch << '\n'
            << "validation accuracy: " << r.validation.accuracy << '\n'
            << "test accuracy: " << r.test.accuracy << '\n'
            << "checkpoint: " << checkpoint << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, const std::string& split,
             std::optional<std::uint64_t> seed) {
  const sp::Checkpoint ck = sp::load_checkpoint(checkpoint);
  const sp::Dataset d = sp::load_dataset(data);
  const auto samples = sp::samples_for_checkpoint(d, ck);
  std::vector<std::size_t> indices;
  if (split == "all") {
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (samples[i].label) indices.push_back(i);
  } else {
    indices = sp::split_dataset(d, ck.split_ratios, seed.value_or(ck.split_seed)).splits.test;
  }
  const sp::Evaluation ev = sp::evaluate(ck.model, samples, indices);
  std::cout << "samples: " << ev.total << '\n' << "accuracy: " << ev.accuracy << '\n';
  print_confusion(std::cout, ev);
  return 0;
}

int cmd_predict(const std::string& checkpoint, const std::string& data, const std::string& out_path) {
  const sp::Checkpoint ck = sp::load_checkpoint(checkpoint);
  const sp::Dataset d = sp::load_dataset(data);
  const auto samples = sp::samples_for_checkpoint(d, ck);
  std::ofstream file;
  if (!out_path.empty()) file = open_output(out_path);
  std::ostream& out = out_path.empty() ? std::cout : file;
  for (const sp::GraphSample& s : samples) {
    const sp::Prediction p = sp::predict(ck.model, s);
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["probabilities"] = {{"regular", p.probabilities[0]}, {"irregular", p.probabilities[1]}};
    j["predicted"] = sp::to_string(static_cast<sp::PatternLabel>(p.predicted));
    out << j.dump() << '\n';
  }
  return 0;
}

void emit_report(const sp::ExperimentReport& report, const std::string& out_path) {
  sp::write_report_table(std::cout, report);
  if (!out_path.empty()) {
    auto out = open_output(out_path);
    sp::write_report_csv(out, report);
  } else {
    std::cout << '\n';
    sp::write_report_csv(std::cout, report);
  }
}

int cmd_export_graph(const std::string& data, const std::string& group, const std::string& format,
                     const std::string& out_path, const GraphFlags& flags) {
  const sp::Dataset d = sp::load_dataset(data);
  if (d.groups.empty()) throw sp::DataError("dataset is empty");
  const sp::BuildingGroup* chosen = &d.groups.front();
  if (!group.empty()) {
    chosen = nullptr;
    for (const auto& g : d.groups)
      if (g.id == group) chosen = &g;
    if (!chosen) throw sp::DataError("no group with id '" + group + "'");
  }
  const sp::GraphOptions opts = flags.options();
  const sp::SpatialGraph g = sp::build_spatial_graph(chosen->buildings, opts.structure, opts.weighting);
  std::ofstream file;
  if (!out_path.empty()) file = open_output(out_path);
  std::ostream& out = out_path.empty() ? std::cout : file;
  if (format == "dot")
    sp::write_dot(out, g);
  else
    out << sp::graph_to_json(g).dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral graph CNN for building-group pattern classification"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic labeled dataset as NDJSON");
  std::string gen_out;
  sp::SyntheticOptions gen_opts;
  gen->add_option("--out", gen_out, "Output NDJSON path")->required();
  gen->add_option("--groups", gen_opts.n_groups, "Number of groups (even)")->capture_default_str();
  gen->add_option("--size-min", gen_opts.size_min, "Minimum buildings per group")->capture_default_str();
  gen->add_option("--size-max", gen_opts.size_max, "Maximum buildings per group")->capture_default_str();
  gen->add_option("--seed", gen_opts.seed, "Generator seed")->capture_default_str();

  // train
  auto* tr = app.add_subcommand("train", "Train on a 6:2:2 stratified split and write a checkpoint");
  std::string tr_data, tr_ckpt, tr_hist;
  ExperimentFlags tr_flags;
  tr->add_option("--data", tr_data, "Labeled NDJSON dataset")->required()->check(CLI::ExistingFile);
  tr->add_option("--checkpoint", tr_ckpt, "Checkpoint output path")->required();
  tr->add_option("--out", tr_hist,
                 "Training history CSV (epoch,train_loss,train_accuracy,validation_loss,validation_accuracy)");
  tr_flags.attach(tr);

  // eval
  auto* ev = app.add_subcommand("eval", "Accuracy and confusion matrix of a checkpoint");
  std::string ev_ckpt, ev_data, ev_split = "test";
  std::optional<std::uint64_t> ev_seed;
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint path")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ev_data, "Labeled NDJSON dataset")->required()->check(CLI::ExistingFile);
  ev->add_option("--split", ev_split, "test (split recorded in the checkpoint) or all")
      ->check(CLI::IsMember({"test", "all"}))
      ->capture_default_str();
  ev->add_option("--seed", ev_seed, "Override the split seed stored in the checkpoint");

  // predict
  auto* pr = app.add_subcommand("predict", "Per-group class probabilities as NDJSON");
  std::string pr_ckpt, pr_data, pr_out;
  pr->add_option("--checkpoint", pr_ckpt, "Checkpoint path")->required()->check(CLI::ExistingFile);
  pr->add_option("--data", pr_data, "NDJSON dataset (labels optional)")->required()->check(CLI::ExistingFile);
  pr->add_option("--out", pr_out, "Output NDJSON path (default stdout)");

  // sweep-k
  auto* sk = app.add_subcommand("sweep-k", "Train one model per polynomial order K");
  sk->footer(kReportHelp);
  std::string sk_data, sk_out;
  std::vector<std::size_t> sk_orders{1, 2, 3, 4, 5, 6};
  ExperimentFlags sk_flags;
  sk->add_option("--data", sk_data, "Labeled NDJSON dataset")->required()->check(CLI::ExistingFile);
  sk->add_option("--out", sk_out, "Report CSV path (default stdout)");
  sk->add_option("--k", sk_orders, "Comma-separated K values")->delimiter(',')->capture_default_str();
  sk_flags.attach(sk, false);

  // ablate
  auto* ab = app.add_subcommand("ablate", "Feature ablation: only-one or all-but-one");
  ab->footer(kReportHelp);
  std::string ab_data, ab_out, ab_mode = "only-one";
  ExperimentFlags ab_flags;
  ab->add_option("--data", ab_data, "Labeled NDJSON dataset")->required()->check(CLI::ExistingFile);
  ab->add_option("--out", ab_out, "Report CSV path (default stdout)");
  ab->add_option("--mode", ab_mode, "only-one|all-but-one")
      ->check(CLI::IsMember({"only-one", "all-but-one"}))
      ->capture_default_str();
  ab_flags.attach(ab, true, false);

  // export-graph
  auto* ex = app.add_subcommand("export-graph", "Export one group's proximity graph as JSON or DOT");
  std::string ex_data, ex_group, ex_format = "json", ex_out;
  GraphFlags ex_flags;
  ex->add_option("--data", ex_data, "NDJSON dataset")->required()->check(CLI::ExistingFile);
  ex->add_option("--group", ex_group, "Group id (default: first group)");
  ex->add_option("--format", ex_format, "json|dot")->check(CLI::IsMember({"json", "dot"}))->capture_default_str();
  ex->add_option("--out", ex_out, "Output path (default stdout)");
  ex_flags.attach(ex);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_out, gen_opts);
    if (tr->parsed()) return cmd_train(tr_data, tr_ckpt, tr_hist, tr_flags);
    if (ev->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_split, ev_seed);
    if (pr->parsed()) return cmd_predict(pr_ckpt, pr_data, pr_out);
    if (sk->parsed()) {
      emit_report(sp::sweep_k(sp::load_dataset(sk_data), sk_orders, sk_flags.config()), sk_out);
      return 0;
    }
    if (ab->parsed()) {
      const auto mode = ab_mode == "only-one" ? sp::AblationMode::only_one : sp::AblationMode::all_but_one;
      emit_report(sp::ablate_features(sp::load_dataset(ab_data), mode, ab_flags.config()), ab_out);
      return 0;
    }
    if (ex->parsed()) return cmd_export_graph(ex_data, ex_group, ex_format, ex_out, ex_flags);
  } catch (const sp::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const sp::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const sp::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
