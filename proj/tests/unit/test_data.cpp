#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "spectral_pattern/data.hpp"

using namespace spectral_pattern;

namespace {

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() /
             ("spectral_pattern_data_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
  std::filesystem::create_directories(dir);
  return dir;
}

Polygon box(double x, double y, double w, double h) { return Polygon({{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}}); }

BuildingGroup three_boxes(std::string id, std::optional<PatternLabel> label, double shift = 0.0) {
  return {std::move(id), {box(shift, 0, 10, 5), box(shift + 20, 0, 10, 5.5), box(shift + 10, 15, 7.25, 5)}, label};
}

Dataset balanced(std::size_t n) {
  Dataset d;
  for (std::size_t i = 0; i < n; ++i)
    d.groups.push_back(three_boxes("g" + std::to_string(i), i % 2 == 0 ? PatternLabel::regular : PatternLabel::irregular,
                                   static_cast<double>(i)));
  return d;
}

std::size_t count_label(const Dataset& d, const std::vector<std::size_t>& idx, PatternLabel l) {
  std::size_t c = 0;
  for (std::size_t i : idx) c += d.groups[i].label == l ? 1 : 0;
  return c;
}

double shoelace(const std::vector<Point2>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Point2 a = r[i], b = r[(i + 1) % r.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(s);
}

double cv(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size())) / mean;
}

double seg_point(Point2 a, Point2 b, Point2 p) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
  return std::hypot(a.x + t * dx - p.x, a.y + t * dy - p.y);
}

bool inside(const std::vector<Point2>& ring, Point2 p) {
  bool in = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++)
    if ((ring[i].y > p.y) != (ring[j].y > p.y) &&
        p.x < (ring[j].x - ring[i].x) * (p.y - ring[i].y) / (ring[j].y - ring[i].y) + ring[i].x)
      in = !in;
  return in;
}

/// Boundary-to-boundary distance from vertex/edge pairs, 0 when one ring holds the other.
double ring_gap(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  if (inside(a, b[0]) || inside(b, a[0])) return 0.0;
  double best = 1e300;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      best = std::min(best, seg_point(b[j], b[(j + 1) % b.size()], a[i]));
      best = std::min(best, seg_point(a[i], a[(i + 1) % a.size()], b[j]));
    }
  return best;
}

double angle_mod_180(double deg) {
  double a = std::fmod(deg, 180.0);
  return a < 0 ? a + 180.0 : a;
}

}  // namespace

TEST(NdjsonTest, EmptyAndBlankInput) {
  std::istringstream empty("");
  EXPECT_TRUE(read_ndjson(empty).empty());
  std::istringstream blanks("\n   \n\t\n");
  EXPECT_TRUE(read_ndjson(blanks).empty());
  const auto path = scratch_dir() / "empty.ndjson";
  std::ofstream(path).close();
  EXPECT_TRUE(load_dataset(path.string()).groups.empty());
}

TEST(NdjsonTest, OneValidLine) {
  std::istringstream in(
      R"({"id": "a", "label": "irregular", "buildings": [{"ring": [[0,0],[1,0],[1,1],[0,1]]},)"
      R"({"ring": [[3,0],[4,0],[4,2],[3,2],[3,0]]}, {"ring": [[0,5],[0,6],[2,6],[2,5]]}]})");
  const auto groups = read_ndjson(in);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].id, "a");
  EXPECT_EQ(groups[0].label, PatternLabel::irregular);
  ASSERT_EQ(groups[0].buildings.size(), 3u);
  EXPECT_EQ(groups[0].buildings[1].size(), 4u);          // closing point dropped
  EXPECT_DOUBLE_EQ(polygon_area(groups[0].buildings[2]), 2.0);  // clockwise ring accepted
}

TEST(NdjsonTest, UnlabeledGroupAllowed) {
  std::istringstream in(R"({"id":"u","buildings":[{"ring":[[0,0],[1,0],[1,1]]},{"ring":[[5,0],[6,0],[6,1]]},)"
                        R"({"ring":[[0,5],[1,5],[1,6]]}]})");
  const auto groups = read_ndjson(in);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_FALSE(groups[0].label.has_value());
}

TEST(NdjsonTest, RoundTripHundredGroups) {
  const Dataset d = generate_synthetic_dataset({100, 3, 12, 9, {}}, 1);
  const auto path = scratch_dir() / "round.ndjson";
  save_dataset(d, path.string());
  const Dataset back = load_dataset(path.string());
  ASSERT_EQ(back.groups.size(), 100u);
  EXPECT_EQ(back.groups, d.groups);
  // and the re-serialization is byte-identical
  std::ostringstream a, b;
  write_ndjson(a, d.groups);
  write_ndjson(b, back.groups);
  EXPECT_EQ(a.str(), b.str());
}

TEST(NdjsonTest, ErrorsCarryLineNumbers) {
  const std::string good = group_to_json(three_boxes("ok", PatternLabel::regular)).dump();
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_ndjson(in);
    } catch (const LineError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of(good + "\n\n{not json\n"), 3u);
  {
    std::istringstream in(good + "\n" + R"({"id":"x","label":"blob","buildings":[]})" + "\n");
    EXPECT_THROW(read_ndjson(in), UnknownLabel);
  }
  {
    std::istringstream in(R"({"id":"x","buildings":[{"ring":[[0,0],[1,1],[1,0],[0,1]]},{"ring":[[5,0],[6,0],[6,1]]},)"
                          R"({"ring":[[0,5],[1,5],[1,6]]}]})");
    EXPECT_THROW(read_ndjson(in), InvalidPolygon);
  }
  {
    std::istringstream in(R"({"id":"x","buildings":[{"ring":[[0,0],[1,0],[1,1]]}]})");
    EXPECT_THROW(read_ndjson(in), InvalidPolygon);
  }
  {
    std::istringstream in(R"({"buildings":[]})");
    EXPECT_THROW(read_ndjson(in), ParseError);
  }
  {
    std::istringstream in(R"({"id":"x","buildings":[{"ring":[[0,"a"],[1,0],[1,1]]}]})");
    EXPECT_THROW(read_ndjson(in), ParseError);
  }
  EXPECT_EQ(line_of(good + "\n" + good + "\n" + R"({"id":"x","label":"blob","buildings":[]})"), 3u);
  EXPECT_THROW(load_dataset((scratch_dir() / "missing.ndjson").string()), DataError);
}

TEST(SplitTest, HundredBalancedSamples) {
  const Dataset d = split_dataset(balanced(100), {0.6, 0.2, 0.2}, 1);
  EXPECT_EQ(d.splits.train.size(), 60u);
  EXPECT_EQ(d.splits.validation.size(), 20u);
  EXPECT_EQ(d.splits.test.size(), 20u);
  for (const auto* split : {&d.splits.train, &d.splits.validation, &d.splits.test}) {
    const std::size_t reg = count_label(d, *split, PatternLabel::regular);
    const std::size_t irr = split->size() - reg;
    EXPECT_LE(std::max(reg, irr) - std::min(reg, irr), 2u);  // each class within +-1 of half
  }
  std::set<std::size_t> all;
  for (const auto* split : {&d.splits.train, &d.splits.validation, &d.splits.test}) all.insert(split->begin(), split->end());
  EXPECT_EQ(all.size(), 100u);
}

TEST(SplitTest, DeterministicAndSeedSensitive) {
  const Dataset a = split_dataset(balanced(50), {0.6, 0.2, 0.2}, 3);
  const Dataset b = split_dataset(balanced(50), {0.6, 0.2, 0.2}, 3);
  const Dataset c = split_dataset(balanced(50), {0.6, 0.2, 0.2}, 4);
  EXPECT_EQ(a.splits.train, b.splits.train);
  EXPECT_EQ(a.splits.validation, b.splits.validation);
  EXPECT_EQ(a.splits.test, b.splits.test);
  EXPECT_NE(a.splits.train, c.splits.train);
}

TEST(SplitTest, StratifiedOnUnbalancedData) {
  Dataset d = balanced(90);
  for (std::size_t i = 0; i < 30; ++i) d.groups[2 * i + 1].label = PatternLabel::regular;  // 75 regular, 15 irregular
  for (std::size_t i = 0; i < 5; ++i) d.groups.push_back(three_boxes("unlabeled", std::nullopt));
  const Dataset s = split_dataset(d, {0.6, 0.2, 0.2}, 11);
  const std::size_t reg = 75, irr = 15;
  const std::array<double, 3> ratios{0.6, 0.2, 0.2};
  const std::array<const std::vector<std::size_t>*, 3> parts{&s.splits.train, &s.splits.validation, &s.splits.test};
  std::size_t covered = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(static_cast<double>(count_label(s, *parts[k], PatternLabel::regular)), ratios[k] * reg, 1.0);
    EXPECT_NEAR(static_cast<double>(count_label(s, *parts[k], PatternLabel::irregular)), ratios[k] * irr, 1.0);
    for (std::size_t i : *parts[k]) EXPECT_TRUE(s.groups[i].label.has_value());
    covered += parts[k]->size();
  }
  EXPECT_EQ(covered, 90u);
}

TEST(SplitTest, Errors) {
  Dataset few = balanced(5);  // 3 regular, 2 irregular
  EXPECT_THROW(split_dataset(few, {0.6, 0.2, 0.2}, 1), InsufficientSamples);
  EXPECT_THROW(split_dataset(balanced(20), {0.6, 0.2, 0.1}, 1), UsageError);
  EXPECT_THROW(split_dataset(balanced(20), {0.8, 0.2, 0.0}, 1), UsageError);
  // smallest legal class still lands in every split
  const Dataset tiny = split_dataset(balanced(6), {0.6, 0.2, 0.2}, 1);
  EXPECT_EQ(tiny.splits.train.size(), 2u);
  EXPECT_EQ(tiny.splits.validation.size(), 2u);
  EXPECT_EQ(tiny.splits.test.size(), 2u);
}

TEST(StandardizerTest, TrainingFeaturesBecomeZeroMeanUnitStd) {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> nd(5.0, 3.0);
  std::vector<GraphSample> samples(6);
  for (auto& s : samples) {
    s.features = Matrix(7, 3);
    for (double& v : s.features.values()) v = nd(rng);
    for (std::size_t i = 0; i < 7; ++i) s.features(i, 2) = 4.25;  // constant column
  }
  const std::vector<std::size_t> train{0, 2, 3, 5};
  const Standardizer st = fit_standardizer(samples, train);
  EXPECT_EQ(st.std[2], Standardizer::kStdFloor);

  std::vector<double> sum(3, 0.0), sq(3, 0.0);
  std::size_t rows = 0;
  for (std::size_t i : train) {
    const Matrix z = apply_standardizer(st, samples[i].features);
    for (std::size_t r = 0; r < z.rows(); ++r, ++rows)
      for (std::size_t c = 0; c < 3; ++c) {
        sum[c] += z(r, c);
        sq[c] += z(r, c) * z(r, c);
      }
  }
  for (std::size_t c = 0; c < 2; ++c) {
    const double mean = sum[c] / static_cast<double>(rows);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(std::sqrt(sq[c] / static_cast<double>(rows) - mean * mean), 1.0, 1e-9);
  }
  EXPECT_EQ(sum[2], 0.0);
  EXPECT_EQ(sq[2], 0.0);
  EXPECT_THROW(fit_standardizer(samples, std::vector<std::size_t>{}), EmptySplit);
  EXPECT_THROW(apply_standardizer(st, Matrix(2, 4)), DimensionMismatch);
}

TEST(StandardizerTest, HeldOutDataUsesTrainingStatistics) {
  std::vector<GraphSample> samples(4);
  for (std::size_t k = 0; k < 4; ++k) {
    samples[k].features = Matrix(2, 1);
    samples[k].features(0, 0) = k < 2 ? 1.0 : 101.0;
    samples[k].features(1, 0) = k < 2 ? 3.0 : 103.0;
  }
  const Standardizer train_stats = fit_standardizer(samples, std::vector<std::size_t>{0, 1});
  const Standardizer test_stats = fit_standardizer(samples, std::vector<std::size_t>{2, 3});
  EXPECT_DOUBLE_EQ(train_stats.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(train_stats.std[0], 1.0);
  EXPECT_NE(train_stats.mean[0], test_stats.mean[0]);

  // held-out rows keep their offset under training statistics
  const Matrix z = apply_standardizer(train_stats, samples[2].features);
  EXPECT_DOUBLE_EQ(z(0, 0), 99.0);
  EXPECT_DOUBLE_EQ(z(1, 0), 101.0);

  // the experiment helpers standardize every split with the training fit
  std::vector<GraphSample> all = samples;
  standardize_in_place(all, train_stats);
  EXPECT_DOUBLE_EQ(all[3].features(0, 0), 99.0);
}

TEST(FeatureMaskTest, SelectsColumnsInOrder) {
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(select_columns(m, std::vector<std::size_t>{2, 0}), (Matrix{{3, 1}, {6, 4}}));
  EXPECT_THROW(select_columns(m, std::vector<std::size_t>{3}), DimensionMismatch);
}

TEST(PrepareSamplesTest, BuildsScaledLaplaciansAndRawFeatures) {
  const Dataset d = generate_synthetic_dataset({4, 5, 8, 3, {}}, 1);
  const auto samples = prepare_samples(d, GraphOptions{}, 2);
  ASSERT_EQ(samples.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(samples[i].id, d.groups[i].id);
    EXPECT_EQ(samples[i].features.rows(), d.groups[i].buildings.size());
    EXPECT_EQ(samples[i].features.cols(), 5u);
    EXPECT_DOUBLE_EQ(samples[i].features(0, 0), polygon_area(d.groups[i].buildings[0]));
    EXPECT_EQ(samples[i].label, static_cast<std::size_t>(*d.groups[i].label));
  }
}

TEST(GeneratorTest, DefaultDatasetShapeAndClasses) {
  const SyntheticOptions options;
  const Dataset d = generate_synthetic_dataset(options);
  ASSERT_EQ(d.groups.size(), 600u);
  std::size_t regular = 0;
  std::set<std::string> ids;
  for (const auto& g : d.groups) {
    ASSERT_TRUE(g.label.has_value());
    regular += *g.label == PatternLabel::regular ? 1 : 0;
    EXPECT_GE(g.buildings.size(), 20u);
    EXPECT_LE(g.buildings.size(), 40u);
    ids.insert(g.id);
  }
  EXPECT_EQ(regular, 300u);
  EXPECT_EQ(ids.size(), 600u);
}

TEST(GeneratorTest, ClassCuesSeparationAndValidity) {
  const Dataset d = generate_synthetic_dataset({120, 20, 40, 5, {}});
  for (const auto& g : d.groups) {
    std::vector<double> areas;
    std::vector<double> directions;
    for (const Polygon& p : g.buildings) {
      EXPECT_NO_THROW(Polygon(p.ring()));
      areas.push_back(shoelace(p.ring()));
      directions.push_back(extract_features(p).main_direction);
    }
    if (*g.label == PatternLabel::regular) {
      EXPECT_LE(cv(areas), 0.1) << g.id;
      for (double a : directions) {
        const double diff = std::abs(angle_mod_180(a - directions[0]));
        EXPECT_LE(std::min(diff, 180.0 - diff), 4.0 + 1e-9) << g.id;  // shared orientation +-2 deg jitter
      }
    } else {
      EXPECT_GE(cv(areas), 0.5) << g.id;
    }
    for (std::size_t i = 0; i < g.buildings.size(); ++i)
      for (std::size_t j = i + 1; j < g.buildings.size(); ++j)
        EXPECT_GE(ring_gap(g.buildings[i].ring(), g.buildings[j].ring()), 0.1 - 1e-9) << g.id;
  }
}

TEST(GeneratorTest, DeterministicAndThreadIndependent) {
  const SyntheticOptions options{60, 20, 40, 123, {}};
  std::ostringstream a, b, c, other;
  write_ndjson(a, generate_synthetic_dataset(options, 1).groups);
  write_ndjson(b, generate_synthetic_dataset(options, 1).groups);
  write_ndjson(c, generate_synthetic_dataset(options, 4).groups);
  write_ndjson(other, generate_synthetic_dataset({60, 20, 40, 124, {}}, 1).groups);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str(), c.str());
  EXPECT_NE(a.str(), other.str());
}

TEST(GeneratorTest, LargeGroupSizesAndErrors) {
  const Dataset d = generate_synthetic_dataset({4, 100, 128, 8, {}});
  for (const auto& g : d.groups) {
    EXPECT_GE(g.buildings.size(), 100u);
    EXPECT_LE(g.buildings.size(), 128u);
  }
  EXPECT_THROW(generate_synthetic_dataset({7, 20, 40, 1, {}}), UsageError);
  EXPECT_THROW(generate_synthetic_dataset({8, 2, 40, 1, {}}), UsageError);
  EXPECT_THROW(generate_synthetic_dataset({8, 20, 129, 1, {}}), UsageError);
  EXPECT_THROW(generate_synthetic_dataset({8, 30, 20, 1, {}}), UsageError);
}
