#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectral_pattern/errors.hpp"
#include "spectral_pattern/geometry.hpp"
#include "spectral_pattern/graph.hpp"
#include "spectral_pattern/matrix.hpp"
#include "spectral_pattern/training.hpp"

namespace spectral_pattern {

enum class PatternLabel : std::size_t { regular = 0, irregular = 1 };

inline constexpr std::size_t kPatternClasses = 2;

inline const char* to_string(PatternLabel l) { return l == PatternLabel::regular ? "regular" : "irregular"; }

inline std::optional<PatternLabel> parse_label(std::string_view s) {
  if (s == "regular") return PatternLabel::regular;
  if (s == "irregular") return PatternLabel::irregular;
  return std::nullopt;
}

struct BuildingGroup {
  std::string id;
  std::vector<Polygon> buildings;
  std::optional<PatternLabel> label;

  bool operator==(const BuildingGroup&) const = default;
};

struct DatasetSplits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

struct Dataset {
  std::vector<BuildingGroup> groups;
  DatasetSplits splits;
};

// ---------------------------------------------------------------------------
// NDJSON
//
// One group per line:
//   {"id": "...", "label": "regular"|"irregular", "buildings": [{"ring": [[x,y], ...]}, ...]}
// "label" is optional. Doubles are written in shortest round-trip form.

inline nlohmann::ordered_json group_to_json(const BuildingGroup& g) {
  nlohmann::ordered_json j;
  j["id"] = g.id;
  if (g.label) j["label"] = to_string(*g.label);
  nlohmann::ordered_json buildings = nlohmann::ordered_json::array();
  for (const Polygon& p : g.buildings) {
    nlohmann::ordered_json ring = nlohmann::ordered_json::array();
    for (const Point2& pt : p.ring()) ring.push_back({pt.x, pt.y});
    buildings.push_back({{"ring", std::move(ring)}});
  }
  j["buildings"] = std::move(buildings);
  return j;
}

inline BuildingGroup group_from_json_line(const std::string& line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");
  if (!j.contains("id") || !j["id"].is_string()) throw ParseError(line_no, "missing string field \"id\"");
  if (!j.contains("buildings") || !j["buildings"].is_array())
    throw ParseError(line_no, "missing array field \"buildings\"");

  BuildingGroup g;
  g.id = j["id"].get<std::string>();
  if (j.contains("label") && !j["label"].is_null()) {
    if (!j["label"].is_string()) throw UnknownLabel(line_no, "label must be a string");
    const auto label = parse_label(j["label"].get<std::string>());
    if (!label) throw UnknownLabel(line_no, "unknown label \"" + j["label"].get<std::string>() + "\"");
    g.label = label;
  }
  std::size_t b = 0;
  for (const auto& building : j["buildings"]) {
    if (!building.is_object() || !building.contains("ring") || !building["ring"].is_array())
      throw ParseError(line_no, "building " + std::to_string(b) + " lacks a \"ring\" array");
    std::vector<Point2> ring;
    for (const auto& pt : building["ring"]) {
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number())
        throw ParseError(line_no, "building " + std::to_string(b) + " has a malformed coordinate");
      ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    try {
      g.buildings.emplace_back(std::move(ring));
    } catch (const DataError& e) {
      throw InvalidPolygon(line_no, "building " + std::to_string(b) + ": " + e.what());
    }
    ++b;
  }
  if (g.buildings.size() < 3)
    throw InvalidPolygon(line_no, "group '" + g.id + "' has fewer than 3 buildings");
  return g;
}

inline void write_ndjson(std::ostream& out, std::span<const BuildingGroup> groups) {
  for (const BuildingGroup& g : groups) out << group_to_json(g).dump() << '\n';
}

inline std::vector<BuildingGroup> read_ndjson(std::istream& in) {
  std::vector<BuildingGroup> groups;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    groups.push_back(group_from_json_line(line, line_no));
  }
  return groups;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  Dataset d;
  d.groups = read_ndjson(in);
  return d;
}

inline void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset '" + path + "'");
  write_ndjson(out, dataset.groups);
}

// ---------------------------------------------------------------------------
// Splitting

/// Stratified, seeded split; each class is shuffled on its own stream and cut
/// by the ratios, with at least one sample of each class in every split.
/// Unlabeled groups are left out. Index lists are returned ascending.
inline Dataset split_dataset(Dataset dataset, std::array<double, 3> ratios, std::uint64_t seed) {
  for (double r : ratios)
    if (!(r > 0.0)) throw UsageError("split ratios must be positive");
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw UsageError("split ratios must sum to 1");

  DatasetSplits splits;
  for (std::size_t c = 0; c < kPatternClasses; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dataset.groups.size(); ++i)
      if (dataset.groups[i].label && static_cast<std::size_t>(*dataset.groups[i].label) == c) members.push_back(i);
    if (members.size() < 3)
      throw InsufficientSamples("class '" + std::string(to_string(static_cast<PatternLabel>(c))) + "' has " +
                                std::to_string(members.size()) + " samples; at least 3 are needed");
    std::mt19937_64 rng(mix_seed(seed, 0x51u, c));
    std::shuffle(members.begin(), members.end(), rng);

    const double m = static_cast<double>(members.size());
    std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ratios[0] * m)));
    std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ratios[1] * m)));
    while (n_train + n_val + 1 > members.size()) (n_train > n_val ? n_train : n_val)--;

    splits.train.insert(splits.train.end(), members.begin(), members.begin() + n_train);
    splits.validation.insert(splits.validation.end(), members.begin() + n_train, members.begin() + n_train + n_val);
    splits.test.insert(splits.test.end(), members.begin() + n_train + n_val, members.end());
  }
  std::sort(splits.train.begin(), splits.train.end());
  std::sort(splits.validation.begin(), splits.validation.end());
  std::sort(splits.test.begin(), splits.test.end());
  dataset.splits = std::move(splits);
  return dataset;
}

// ---------------------------------------------------------------------------
// Standardization

struct Standardizer {
  static constexpr double kStdFloor = 1e-8;

  std::vector<double> mean;
  std::vector<double> std;
};

/// Per-column mean and population std pooled over every row of every block.
inline Standardizer fit_standardizer(std::span<const Matrix* const> blocks) {
  if (blocks.empty()) throw EmptySplit("cannot fit a standardizer on an empty split");
  const std::size_t d = blocks.front()->cols();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.std.assign(d, 0.0);
  std::size_t rows = 0;
  for (const Matrix* m : blocks) {
    if (m->cols() != d) throw DimensionMismatch("feature blocks disagree on column count");
    for (std::size_t i = 0; i < m->rows(); ++i)
      for (std::size_t c = 0; c < d; ++c) s.mean[c] += (*m)(i, c);
    rows += m->rows();
  }
  if (rows == 0) throw EmptySplit("cannot fit a standardizer without rows");
  for (double& v : s.mean) v /= static_cast<double>(rows);
  for (const Matrix* m : blocks)
    for (std::size_t i = 0; i < m->rows(); ++i)
      for (std::size_t c = 0; c < d; ++c) {
        const double dev = (*m)(i, c) - s.mean[c];
        s.std[c] += dev * dev;
      }
  for (double& v : s.std) v = std::max(std::sqrt(v / static_cast<double>(rows)), Standardizer::kStdFloor);
  return s;
}

/// Fits on the features of the samples listed in train_idx only.
inline Standardizer fit_standardizer(std::span<const GraphSample> samples, std::span<const std::size_t> train_idx) {
  std::vector<const Matrix*> blocks;
  for (std::size_t i : train_idx) blocks.push_back(&samples[i].features);
  return fit_standardizer(blocks);
}

inline Matrix apply_standardizer(const Standardizer& s, const Matrix& features) {
  if (features.cols() != s.mean.size()) throw DimensionMismatch("standardizer and features disagree on columns");
  Matrix out = features;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - s.mean[c]) / s.std[c];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graph preparation

struct GraphOptions {
  GraphStructure structure = GraphStructure::delaunay;
  EdgeWeighting weighting = EdgeWeighting::binary;
  LaplacianKind laplacian = LaplacianKind::symmetric_normalized;
  bool scaled = true;
};

inline GraphSample prepare_sample(const BuildingGroup& g, const GraphOptions& options) {
  const SpatialGraph graph = build_spatial_graph(g.buildings, options.structure, options.weighting);
  GraphSample s;
  s.id = g.id;
  s.laplacian = laplacian(graph, options.laplacian, options.scaled).values;
  s.features = graph.features;
  if (g.label) s.label = static_cast<std::size_t>(*g.label);
  return s;
}

/// Graph + Laplacian + raw features for every group, in dataset order.
inline std::vector<GraphSample> prepare_samples(const Dataset& dataset, const GraphOptions& options,
                                                std::size_t threads = 0) {
  std::vector<GraphSample> out(dataset.groups.size());
  parallel_for(out.size(), threads == 0 ? thread_budget() : threads, [&](std::size_t i) {
    try {
      out[i] = prepare_sample(dataset.groups[i], options);
    } catch (const DataError& e) {
      throw DataError("group '" + dataset.groups[i].id + "': " + e.what());
    }
  });
  return out;
}

inline Matrix select_columns(const Matrix& m, std::span<const std::size_t> columns) {
  Matrix out(m.rows(), columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] >= m.cols()) throw DimensionMismatch("feature column " + std::to_string(columns[c]) + " out of range");
    for (std::size_t i = 0; i < m.rows(); ++i) out(i, c) = m(i, columns[c]);
  }
  return out;
}

/// Keeps only `columns` of every sample's features.
inline std::vector<GraphSample> mask_features(std::span<const GraphSample> samples,
                                              std::span<const std::size_t> columns) {
  std::vector<GraphSample> out(samples.begin(), samples.end());
  for (GraphSample& s : out) s.features = select_columns(s.features, columns);
  return out;
}

inline void standardize_in_place(std::vector<GraphSample>& samples, const Standardizer& s) {
  for (GraphSample& g : samples) g.features = apply_standardizer(s, g.features);
}

// ---------------------------------------------------------------------------
// Synthetic building groups

struct NoiseProfile {
  double position_jitter = 0.5;          // meters, uniform +-
  double size_jitter = 0.03;             // relative, uniform +-
  double orientation_jitter_deg = 2.0;   // degrees, uniform +-
};

struct SyntheticOptions {
  std::size_t n_groups = 600;
  std::size_t size_min = 20;
  std::size_t size_max = 40;
  std::uint64_t seed = 42;
  NoiseProfile noise;
};

inline double area_cv(std::span<const Polygon> buildings) {
  double mean = 0.0;
  for (const Polygon& p : buildings) mean += polygon_area(p);
  mean /= static_cast<double>(buildings.size());
  double var = 0.0;
  for (const Polygon& p : buildings) {
    const double d = polygon_area(p) - mean;
    var += d * d;
  }
  return std::sqrt(var / static_cast<double>(buildings.size())) / mean;
}

namespace detail {

inline std::vector<Point2> place_ring(std::span<const Point2> local, double angle_rad, Point2 center) {
  std::vector<Point2> out;
  out.reserve(local.size());
  for (const Point2& p : local) out.push_back(rotate(p, angle_rad) + center);
  return out;
}

inline std::vector<Point2> rectangle_ring(double length, double width) {
  const double hl = 0.5 * length, hw = 0.5 * width;
  return {{-hl, -hw}, {hl, -hw}, {hl, hw}, {-hl, hw}};
}

/// Box with its upper-right corner notched out, centered on the box center.
inline std::vector<Point2> l_shape_ring(double length, double width, double notch_l, double notch_w) {
  const double hl = 0.5 * length, hw = 0.5 * width;
  return {{-hl, -hw}, {hl, -hw}, {hl, hw - notch_w}, {hl - notch_l, hw - notch_w}, {hl - notch_l, hw}, {-hl, hw}};
}

inline constexpr double kMinSeparation = 0.1;

inline bool well_separated(std::span<const Polygon> buildings) {
  for (std::size_t i = 0; i < buildings.size(); ++i)
    for (std::size_t j = i + 1; j < buildings.size(); ++j)
      if (polygon_distance(buildings[i], buildings[j]) < kMinSeparation) return false;
  return true;
}

inline std::vector<Polygon> regular_group(std::size_t n, const NoiseProfile& noise, std::mt19937_64& rng) {
  using U = std::uniform_real_distribution<double>;
  constexpr int kAttempts = 100;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const double length = U(12.0, 24.0)(rng);
    const double width = U(0.45, 0.8)(rng) * length;
    const double gap_x = U(4.0, 8.0)(rng);
    const double gap_y = U(4.0, 8.0)(rng);
    const double theta = U(0.0, std::numbers::pi)(rng);
    const std::size_t cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));

    U jitter(-noise.position_jitter, noise.position_jitter);
    U scale(1.0 - noise.size_jitter, 1.0 + noise.size_jitter);
    const double aj = noise.orientation_jitter_deg * std::numbers::pi / 180.0;
    U spin(-aj, aj);

    std::vector<Polygon> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double s = scale(rng);
      const Point2 cell{static_cast<double>(k % cols) * (length + gap_x) + jitter(rng),
                        static_cast<double>(k / cols) * (width + gap_y) + jitter(rng)};
      const double angle = theta + spin(rng);
      out.emplace_back(place_ring(rectangle_ring(s * length, s * width), angle, rotate(cell, theta)));
    }
    if (well_separated(out) && area_cv(out) <= 0.1) return out;
  }
  throw InfeasiblePacking("regular group could not be laid out");
}

inline std::vector<Polygon> irregular_group(std::size_t n, std::mt19937_64& rng) {
  using U = std::uniform_real_distribution<double>;
  constexpr int kAreaAttempts = 100;
  constexpr std::size_t kPlacementBudget = 50000;

  std::vector<double> areas(n);
  bool heterogeneous = false;
  for (int attempt = 0; attempt < kAreaAttempts && !heterogeneous; ++attempt) {
    std::lognormal_distribution<double> area_dist(std::log(200.0), 0.8);
    double mean = 0.0;
    for (double& a : areas) {
      a = std::clamp(area_dist(rng), 30.0, 3000.0);
      mean += a;
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : areas) var += (a - mean) * (a - mean);
    heterogeneous = std::sqrt(var / static_cast<double>(n)) / mean >= 0.55;
  }
  if (!heterogeneous) throw InfeasiblePacking("could not draw heterogeneous building areas");

  std::vector<std::vector<Point2>> shapes;
  std::vector<double> radii;
  for (double a : areas) {
    const double aspect = U(1.0, 3.0)(rng);
    std::vector<Point2> ring;
    if (std::bernoulli_distribution(0.5)(rng)) {
      ring = rectangle_ring(std::sqrt(a * aspect), std::sqrt(a / aspect));
    } else {
      const double fl = U(0.3, 0.6)(rng);
      const double fw = U(0.3, 0.6)(rng);
      const double box = a / (1.0 - fl * fw);
      const double length = std::sqrt(box * aspect);
      const double width = std::sqrt(box / aspect);
      ring = l_shape_ring(length, width, fl * length, fw * width);
    }
    double r = 0.0;
    for (const Point2& p : ring) r = std::max(r, std::hypot(p.x, p.y));
    shapes.push_back(std::move(ring));
    radii.push_back(r);
  }

  // rejection sampling of bounding circles; circles kept 0.1 m apart keep
  // the polygons at least that far apart too
  double footprint = 0.0;
  for (double r : radii) footprint += std::numbers::pi * r * r;
  double side = std::sqrt(2.5 * footprint);
  std::vector<Point2> centers;
  std::size_t spent = 0;
  for (std::size_t k = 0; k < n; ++k) {
    bool placed = false;
    for (int tries = 0; !placed; ++tries) {
      if (++spent > kPlacementBudget) throw InfeasiblePacking("irregular group exceeded its placement budget");
      if (tries > 0 && tries % 200 == 0) side *= 1.05;
      const Point2 c{U(0.0, side)(rng), U(0.0, side)(rng)};
      placed = true;
      for (std::size_t m = 0; m < centers.size() && placed; ++m)
        if (distance(c, centers[m]) < radii[k] + radii[m] + kMinSeparation) placed = false;
      if (placed) centers.push_back(c);
    }
  }

  std::vector<Polygon> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.emplace_back(place_ring(shapes[k], U(0.0, std::numbers::pi)(rng), centers[k]));
  return out;
}

}  // namespace detail

/// Balanced synthetic dataset: even-indexed groups are regular (aligned grid
/// of near-identical rectangles), odd-indexed ones irregular (scattered
/// rectangles and L-shapes with heterogeneous areas and orientations). Each
/// group draws from its own stream mix_seed(seed, index), so the result does
/// not depend on the thread count.
inline Dataset generate_synthetic_dataset(const SyntheticOptions& options, std::size_t threads = 0) {
  if (options.n_groups == 0 || options.n_groups % 2 != 0) throw UsageError("group count must be even and positive");
  if (options.size_min < 3 || options.size_max > 128 || options.size_min > options.size_max)
    throw UsageError("group size range must lie within [3, 128]");

  Dataset d;
  d.groups.resize(options.n_groups);
  parallel_for(options.n_groups, threads == 0 ? thread_budget() : threads, [&](std::size_t i) {
    std::mt19937_64 rng(mix_seed(options.seed, i));
    const std::size_t n = std::uniform_int_distribution<std::size_t>(options.size_min, options.size_max)(rng);
    BuildingGroup& g = d.groups[i];
    std::ostringstream id;
    id << 'g' << std::setw(5) << std::setfill('0') << i;
    g.id = id.str();
    if (i % 2 == 0) {
      g.label = PatternLabel::regular;
      g.buildings = detail::regular_group(n, options.noise, rng);
    } else {
      g.label = PatternLabel::irregular;
      g.buildings = detail::irregular_group(n, rng);
    }
  });
  return d;
}

}  // namespace spectral_pattern
