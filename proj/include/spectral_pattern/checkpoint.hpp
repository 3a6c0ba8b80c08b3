#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "spectral_pattern/data.hpp"
#include "spectral_pattern/errors.hpp"
#include "spectral_pattern/nn.hpp"

namespace spectral_pattern {

/// Everything needed to rebuild the inference pipeline of a trained model.
struct Checkpoint {
  GcnnModel model;
  GraphOptions graph;
  std::vector<std::size_t> feature_columns;
  Standardizer standardizer;
  std::uint64_t split_seed = 0;
  std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
};

inline constexpr const char* kCheckpointFormat = "spectral-pattern-checkpoint";
inline constexpr int kCheckpointVersion = 1;

// Option spellings shared by the checkpoint and the CLI flags.

inline const char* to_string(GraphStructure s) { return s == GraphStructure::delaunay ? "dt" : "mst"; }
inline const char* to_string(LaplacianKind k) { return k == LaplacianKind::combinatorial ? "comb" : "sym"; }
inline const char* to_string(PoolKind p) { return p == PoolKind::mean ? "mean" : "max"; }
inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }
inline const char* to_string(EdgeWeighting w) {
  switch (w) {
    case EdgeWeighting::binary: return "binary";
    case EdgeWeighting::inverse_distance: return "invdist";
    case EdgeWeighting::gaussian: return "gaussian";
  }
  return "binary";
}

inline GraphStructure parse_structure(const std::string& s) {
  if (s == "dt") return GraphStructure::delaunay;
  if (s == "mst") return GraphStructure::mst;
  throw UsageError("unknown graph structure '" + s + "' (expected dt|mst)");
}

inline EdgeWeighting parse_weighting(const std::string& s) {
  if (s == "binary") return EdgeWeighting::binary;
  if (s == "invdist") return EdgeWeighting::inverse_distance;
  if (s == "gaussian") return EdgeWeighting::gaussian;
  throw UsageError("unknown weighting '" + s + "' (expected binary|invdist|gaussian)");
}

inline LaplacianKind parse_laplacian(const std::string& s) {
  if (s == "comb") return LaplacianKind::combinatorial;
  if (s == "sym") return LaplacianKind::symmetric_normalized;
  throw UsageError("unknown laplacian '" + s + "' (expected comb|sym)");
}

inline PoolKind parse_pool(const std::string& s) {
  if (s == "mean") return PoolKind::mean;
  if (s == "max") return PoolKind::max;
  throw UsageError("unknown pool '" + s + "' (expected mean|max)");
}

inline std::string sha256_hex(const std::string& payload) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

/// Serializes a checkpoint. Parameter arrays are flat and row-major:
/// conv theta as [k][c_in][c_out], dense weights as [c_in][class]. The
/// checksum is the SHA-256 of the compact, key-sorted dump of every other
/// field.
inline nlohmann::json checkpoint_to_json(const Checkpoint& ck) {
  using nlohmann::json;
  const GcnnModel& m = ck.model;
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;

  json conv = json::array();
  for (const GraphConvLayer& layer : m.conv_layers) {
    std::vector<double> theta;
    for (const Matrix& t : layer.theta) theta.insert(theta.end(), t.values().begin(), t.values().end());
    conv.push_back({{"order", layer.order()},
                    {"c_in", layer.c_in()},
                    {"c_out", layer.c_out()},
                    {"activation", to_string(layer.activation)},
                    {"theta", theta},
                    {"bias", layer.bias}});
  }
  j["architecture"] = {{"input_dim", m.input_dim()},
                       {"conv_layers", m.conv_layers.size()},
                       {"classes", m.classes()},
                       {"pool", to_string(m.pool)},
                       {"dropout_rate", m.dropout_rate},
                       {"l2_lambda", m.l2_lambda}};
  j["parameters"] = {{"conv", conv},
                     {"dense",
                      {{"c_in", m.dense.c_in()},
                       {"classes", m.dense.classes()},
                       {"weights", m.dense.weights.values()},
                       {"bias", m.dense.bias}}}};
  j["graph"] = {{"structure", to_string(ck.graph.structure)},
                {"weighting", to_string(ck.graph.weighting)},
                {"laplacian", to_string(ck.graph.laplacian)},
                {"scaled", ck.graph.scaled}};
  std::vector<std::string> names;
  for (std::size_t c : ck.feature_columns) names.push_back(c < BuildingFeatures::kCount ? kFeatureNames[c] : "?");
  j["features"] = {{"columns", ck.feature_columns}, {"names", names}};
  j["standardizer"] = {{"mean", ck.standardizer.mean}, {"std", ck.standardizer.std}};
  j["split"] = {{"seed", ck.split_seed}, {"ratios", ck.split_ratios}};
  j["checksum"] = "sha256:" + sha256_hex(j.dump());
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  using nlohmann::json;
  try {
    if (j.value("format", "") != kCheckpointFormat) throw CorruptCheckpoint("not a spectral-pattern checkpoint");
    if (j.value("version", 0) != kCheckpointVersion)
      throw CorruptCheckpoint("unsupported checkpoint version " + std::to_string(j.value("version", 0)));
    json payload = j;
    payload.erase("checksum");
    const std::string expected = "sha256:" + sha256_hex(payload.dump());
    if (j.value("checksum", "") != expected) throw CorruptCheckpoint("checkpoint checksum mismatch");

    Checkpoint ck;
    const json& arch = j.at("architecture");
    GcnnModel& m = ck.model;
    m.pool = parse_pool(arch.at("pool").get<std::string>());
    m.dropout_rate = arch.at("dropout_rate").get<double>();
    m.l2_lambda = arch.at("l2_lambda").get<double>();
    for (const json& lj : j.at("parameters").at("conv")) {
      const auto act = lj.at("activation").get<std::string>() == "relu" ? Activation::relu : Activation::identity;
      GraphConvLayer layer(lj.at("order").get<std::size_t>(), lj.at("c_in").get<std::size_t>(),
                           lj.at("c_out").get<std::size_t>(), act);
      const auto theta = lj.at("theta").get<std::vector<double>>();
      const std::size_t block = layer.c_in() * layer.c_out();
      if (theta.size() != block * layer.order()) throw CorruptCheckpoint("conv theta has the wrong length");
      for (std::size_t k = 0; k < layer.order(); ++k)
        std::copy(theta.begin() + k * block, theta.begin() + (k + 1) * block, layer.theta[k].values().begin());
      layer.bias = lj.at("bias").get<std::vector<double>>();
      if (layer.bias.size() != layer.c_out()) throw CorruptCheckpoint("conv bias has the wrong length");
      m.conv_layers.push_back(std::move(layer));
    }
    const json& dj = j.at("parameters").at("dense");
    m.dense = DenseLayer(dj.at("c_in").get<std::size_t>(), dj.at("classes").get<std::size_t>());
    const auto w = dj.at("weights").get<std::vector<double>>();
    if (w.size() != m.dense.weights.size()) throw CorruptCheckpoint("dense weights have the wrong length");
    m.dense.weights.values() = w;
    m.dense.bias = dj.at("bias").get<std::vector<double>>();
    validate(m);

    const json& g = j.at("graph");
    ck.graph.structure = parse_structure(g.at("structure").get<std::string>());
    ck.graph.weighting = parse_weighting(g.at("weighting").get<std::string>());
    ck.graph.laplacian = parse_laplacian(g.at("laplacian").get<std::string>());
    ck.graph.scaled = g.at("scaled").get<bool>();
    ck.feature_columns = j.at("features").at("columns").get<std::vector<std::size_t>>();
    ck.standardizer.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
    ck.standardizer.std = j.at("standardizer").at("std").get<std::vector<double>>();
    if (ck.standardizer.mean.size() != ck.feature_columns.size() ||
        ck.standardizer.std.size() != ck.feature_columns.size() || m.input_dim() != ck.feature_columns.size())
      throw CorruptCheckpoint("feature columns, standardizer and model input disagree");
    ck.split_seed = j.at("split").at("seed").get<std::uint64_t>();
    ck.split_ratios = j.at("split").at("ratios").get<std::array<double, 3>>();
    return ck;
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(std::string("malformed checkpoint: ") + e.what());
  } catch (const DimensionMismatch& e) {
    throw CorruptCheckpoint(std::string("inconsistent checkpoint: ") + e.what());
  } catch (const UsageError& e) {
    throw CorruptCheckpoint(std::string("inconsistent checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(ck).dump(2) << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint(std::string("malformed checkpoint: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace spectral_pattern
