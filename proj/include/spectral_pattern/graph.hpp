#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "spectral_pattern/errors.hpp"
#include "spectral_pattern/geometry.hpp"
#include "spectral_pattern/matrix.hpp"

namespace spectral_pattern {

/// Undirected weighted edge with i < j.
struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  double weight = 1.0;
  bool operator==(const Edge&) const = default;
};

using EdgePair = std::pair<std::size_t, std::size_t>;
using Triangle = std::array<std::size_t, 3>;

enum class GraphStructure { delaunay, mst };
enum class EdgeWeighting { binary, inverse_distance, gaussian };
enum class LaplacianKind { combinatorial, symmetric_normalized };

/// Proximity graph over building centroids.
struct SpatialGraph {
  Matrix weights;                // n x n, symmetric, zero diagonal
  Matrix features;               // n x d
  std::vector<Point2> positions; // centroids
  std::vector<Edge> edges;       // nonzero upper-triangle entries of weights

  std::size_t n() const noexcept { return weights.rows(); }
};

/// Throws DataError when the graph breaks one of its invariants.
inline void validate(const SpatialGraph& g) {
  const std::size_t n = g.n();
  if (g.weights.cols() != n) throw DataError("weight matrix is not square");
  if (g.features.rows() != n || g.features.cols() < 1) throw DataError("feature matrix must be n x d with d >= 1");
  if (g.positions.size() != n) throw DataError("position count does not match vertex count");
  if (!is_symmetric(g.weights, 1e-12)) throw DataError("weight matrix is not symmetric");
  for (std::size_t i = 0; i < n; ++i) {
    if (g.weights(i, i) != 0.0) throw DataError("weight matrix diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j)
      if (!(g.weights(i, j) >= 0.0) || !std::isfinite(g.weights(i, j))) throw DataError("negative or non-finite weight");
  }
  if (!all_finite(g.features)) throw DataError("non-finite feature value");

  if (n == 0) return;
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t v = frontier.front();
    frontier.pop();
    for (std::size_t u = 0; u < n; ++u)
      if (!seen[u] && g.weights(v, u) > 0.0) {
        seen[u] = true;
        ++reached;
        frontier.push(u);
      }
  }
  if (reached != n) throw DisconnectedInput("spatial graph is not connected");
}

/// Relabels vertices: vertex i of the result is vertex perm[i] of the input.
inline SpatialGraph permute(const SpatialGraph& g, std::span<const std::size_t> perm) {
  const std::size_t n = g.n();
  if (perm.size() != n) throw DimensionMismatch("permutation length differs from vertex count");
  std::vector<std::size_t> inverse(n);
  for (std::size_t i = 0; i < n; ++i) inverse[perm[i]] = i;

  SpatialGraph out;
  out.weights = Matrix(n, n);
  out.features = Matrix(n, g.features.cols());
  out.positions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.weights(i, j) = g.weights(perm[i], perm[j]);
    for (std::size_t c = 0; c < g.features.cols(); ++c) out.features(i, c) = g.features(perm[i], c);
    out.positions[i] = g.positions[perm[i]];
  }
  for (const Edge& e : g.edges) {
    const std::size_t a = inverse[e.i];
    const std::size_t b = inverse[e.j];
    out.edges.push_back({std::min(a, b), std::max(a, b), e.weight});
  }
  std::sort(out.edges.begin(), out.edges.end(),
            [](const Edge& x, const Edge& y) { return std::tie(x.i, x.j) < std::tie(y.i, y.j); });
  return out;
}

// ---------------------------------------------------------------------------
// Delaunay triangulation

namespace detail {

/// Incremental Bowyer-Watson over a single ghost vertex at infinity.
///
/// Real triangles are stored counter-clockwise. A ghost triangle (u, v, ghost)
/// sits across hull edge v->u; its "circumcircle" is the open half-plane to
/// the left of u->v plus the open segment uv. Points are inserted in index
/// order, so co-circular ties keep the earliest-created diagonal.
class BowyerWatson {
 public:
  static constexpr std::size_t kGhost = static_cast<std::size_t>(-1);

  explicit BowyerWatson(std::span<const Point2> points) {
    // translate to the bounding-box center to keep the predicates well scaled
    double min_x = points[0].x, max_x = min_x, min_y = points[0].y, max_y = min_y;
    for (const Point2& p : points) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    const long double cx = 0.5L * (static_cast<long double>(min_x) + max_x);
    const long double cy = 0.5L * (static_cast<long double>(min_y) + max_y);
    pts_.reserve(points.size());
    for (const Point2& p : points) pts_.push_back({p.x - cx, p.y - cy});
  }

  std::vector<Triangle> run() {
    const std::size_t n = pts_.size();
    std::size_t third = n;
    for (std::size_t k = 2; k < n; ++k)
      if (orient_l(0, 1, k) != 0.0L) {
        third = k;
        break;
      }
    if (third == n) throw CollinearInput("all points are collinear");

    std::size_t a = 0, b = 1, c = third;
    if (orient_l(a, b, c) < 0.0L) std::swap(a, b);
    tris_ = {{a, b, c}, {b, a, kGhost}, {c, b, kGhost}, {a, c, kGhost}};

    for (std::size_t p = 2; p < n; ++p)
      if (p != third) insert(p);

    std::vector<Triangle> out;
    for (const Triangle& t : tris_)
      if (t[2] != kGhost) out.push_back(t);
    return out;
  }

 private:
  struct LPoint {
    long double x, y;
  };

  long double orient_l(std::size_t a, std::size_t b, std::size_t c) const {
    const LPoint& pa = pts_[a];
    const LPoint& pb = pts_[b];
    const LPoint& pc = pts_[c];
    return (pb.x - pa.x) * (pc.y - pa.y) - (pb.y - pa.y) * (pc.x - pa.x);
  }

  long double incircle(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    const LPoint& pd = pts_[d];
    const long double adx = pts_[a].x - pd.x, ady = pts_[a].y - pd.y;
    const long double bdx = pts_[b].x - pd.x, bdy = pts_[b].y - pd.y;
    const long double cdx = pts_[c].x - pd.x, cdy = pts_[c].y - pd.y;
    return (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
           (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
  }

  bool strictly_between(std::size_t u, std::size_t v, std::size_t p) const {
    const LPoint& a = pts_[u];
    const LPoint& b = pts_[v];
    const LPoint& q = pts_[p];
    const long double t = (q.x - a.x) * (b.x - a.x) + (q.y - a.y) * (b.y - a.y);
    const long double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
    return t > 0.0L && t < len2;
  }

  bool in_conflict(const Triangle& t, std::size_t p) const {
    if (t[2] != kGhost) return incircle(t[0], t[1], t[2], p) > 0.0L;
    const long double o = orient_l(t[0], t[1], p);
    return o > 0.0L || (o == 0.0L && strictly_between(t[0], t[1], p));
  }

  static bool share_edge(const Triangle& s, const Triangle& t) {
    int common = 0;
    for (std::size_t x : s)
      for (std::size_t y : t)
        if (x == y) ++common;
    return common >= 2;
  }

  void insert(std::size_t p) {
    std::vector<std::size_t> conflicts;
    for (std::size_t i = 0; i < tris_.size(); ++i)
      if (in_conflict(tris_[i], p)) conflicts.push_back(i);
    if (conflicts.empty()) throw DataError("delaunay insertion found no conflicting triangle");

    // seed with a real triangle that contains p if there is one, then keep
    // only the conflict region connected to it
    std::size_t seed = 0;
    for (std::size_t k = 0; k < conflicts.size(); ++k) {
      const Triangle& t = tris_[conflicts[k]];
      if (t[2] != kGhost && orient_l(t[0], t[1], p) >= 0.0L && orient_l(t[1], t[2], p) >= 0.0L &&
          orient_l(t[2], t[0], p) >= 0.0L) {
        seed = k;
        break;
      }
    }
    std::vector<bool> in_cavity(conflicts.size(), false);
    std::vector<std::size_t> stack{seed};
    in_cavity[seed] = true;
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      for (std::size_t m = 0; m < conflicts.size(); ++m)
        if (!in_cavity[m] && share_edge(tris_[conflicts[k]], tris_[conflicts[m]])) {
          in_cavity[m] = true;
          stack.push_back(m);
        }
    }

    std::vector<Triangle> cavity;
    std::vector<bool> remove(tris_.size(), false);
    for (std::size_t k = 0; k < conflicts.size(); ++k)
      if (in_cavity[k]) {
        cavity.push_back(tris_[conflicts[k]]);
        remove[conflicts[k]] = true;
      }

    // boundary = directed cavity edges whose reverse is not in the cavity
    std::vector<EdgePair> boundary;
    for (const Triangle& t : cavity)
      for (int e = 0; e < 3; ++e) {
        const std::size_t u = t[e];
        const std::size_t v = t[(e + 1) % 3];
        bool interior = false;
        for (const Triangle& s : cavity)
          for (int f = 0; f < 3 && !interior; ++f)
            if (s[f] == v && s[(f + 1) % 3] == u) interior = true;
        if (!interior) boundary.emplace_back(u, v);
      }

    std::vector<Triangle> next;
    next.reserve(tris_.size() + 2);
    for (std::size_t i = 0; i < tris_.size(); ++i)
      if (!remove[i]) next.push_back(tris_[i]);
    for (const auto& [u, v] : boundary) {
      if (u == kGhost)
        next.push_back({v, p, kGhost});
      else if (v == kGhost)
        next.push_back({p, u, kGhost});
      else
        next.push_back({u, v, p});
    }
    tris_ = std::move(next);
  }

  std::vector<LPoint> pts_;
  std::vector<Triangle> tris_;
};

inline void check_distinct(std::span<const Point2> points) {
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if (distance(points[i], points[j]) <= 1e-9)
        throw DuplicatePoints("points " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
}

}  // namespace detail

/// Delaunay triangles, each listed counter-clockwise by point index.
inline std::vector<Triangle> delaunay_triangles(std::span<const Point2> points) {
  if (points.size() < 3) throw DataError("delaunay triangulation needs at least 3 points");
  detail::check_distinct(points);
  return detail::BowyerWatson(points).run();
}

/// Delaunay edges as sorted (i < j) pairs.
inline std::vector<EdgePair> delaunay_triangulate(std::span<const Point2> points) {
  std::vector<EdgePair> edges;
  for (const Triangle& t : delaunay_triangles(points))
    for (int e = 0; e < 3; ++e) {
      const std::size_t u = t[e];
      const std::size_t v = t[(e + 1) % 3];
      edges.emplace_back(std::min(u, v), std::max(u, v));
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

// ---------------------------------------------------------------------------
// Minimum spanning tree

/// Kruskal with ties broken by (weight, i, j).
inline std::vector<Edge> minimum_spanning_tree(std::size_t n, std::span<const Edge> edges) {
  std::vector<Edge> sorted;
  sorted.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.i >= n || e.j >= n) throw DimensionMismatch("edge endpoint out of range");
    sorted.push_back({std::min(e.i, e.j), std::max(e.i, e.j), e.weight});
  }
  std::sort(sorted.begin(), sorted.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.weight, a.i, a.j) < std::tie(b.weight, b.i, b.j);
  });

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::vector<std::size_t> rank(n, 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };

  std::vector<Edge> tree;
  for (const Edge& e : sorted) {
    std::size_t a = find(e.i);
    std::size_t b = find(e.j);
    if (a == b) continue;
    if (rank[a] < rank[b]) std::swap(a, b);
    parent[b] = a;
    if (rank[a] == rank[b]) ++rank[a];
    tree.push_back(e);
    if (tree.size() + 1 == n) break;
  }
  if (n > 0 && tree.size() + 1 != n) throw DisconnectedInput("edge set does not span all vertices");
  return tree;
}

// ---------------------------------------------------------------------------
// Graph construction

/// Path through the points ordered by projection on their principal axis.
inline std::vector<EdgePair> principal_axis_path(std::span<const Point2> points) {
  const std::size_t n = points.size();
  double mx = 0.0, my = 0.0;
  for (const Point2& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const Point2& p : points) {
    sxx += (p.x - mx) * (p.x - mx);
    syy += (p.y - my) * (p.y - my);
    sxy += (p.x - mx) * (p.y - my);
  }
  const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  const Point2 axis{std::cos(angle), std::sin(angle)};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dot(points[a], axis) < dot(points[b], axis); });
  std::vector<EdgePair> path;
  for (std::size_t k = 0; k + 1 < n; ++k)
    path.emplace_back(std::min(order[k], order[k + 1]), std::max(order[k], order[k + 1]));
  std::sort(path.begin(), path.end());
  return path;
}

/// Centroid graph of a building group with raw (unstandardized) features.
///
/// Delaunay edges are computed first; the MST variant keeps the spanning
/// tree of those edges under centroid distance. Collinear centroids fall
/// back to a principal-axis path. The gaussian kernel width is the mean
/// length of the Delaunay (or fallback path) edges.
inline SpatialGraph build_spatial_graph(std::span<const Polygon> group, GraphStructure structure,
                                        EdgeWeighting weighting) {
  const std::size_t n = group.size();
  if (n < 3) throw DataError("a building group needs at least 3 buildings, got " + std::to_string(n));

  SpatialGraph g;
  g.positions.reserve(n);
  g.features = Matrix(n, BuildingFeatures::kCount);
  for (std::size_t i = 0; i < n; ++i) {
    g.positions.push_back(polygon_centroid(group[i]));
    const auto f = extract_features(group[i]).as_vector();
    std::copy(f.begin(), f.end(), g.features.row(i).begin());
  }

  std::vector<EdgePair> base;
  try {
    base = delaunay_triangulate(g.positions);
  } catch (const CollinearInput&) {
    base = principal_axis_path(g.positions);
  }

  std::vector<Edge> dist_edges;
  double sigma = 0.0;
  for (const auto& [i, j] : base) {
    const double d = distance(g.positions[i], g.positions[j]);
    dist_edges.push_back({i, j, d});
    sigma += d;
  }
  sigma /= static_cast<double>(dist_edges.size());

  std::vector<Edge> chosen = structure == GraphStructure::mst ? minimum_spanning_tree(n, dist_edges) : dist_edges;
  std::sort(chosen.begin(), chosen.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });

  g.weights = Matrix(n, n);
  for (Edge& e : chosen) {
    const double d = e.weight;
    switch (weighting) {
      case EdgeWeighting::binary: e.weight = 1.0; break;
      case EdgeWeighting::inverse_distance: e.weight = 1.0 / d; break;
      case EdgeWeighting::gaussian: e.weight = std::exp(-d * d / (2.0 * sigma * sigma)); break;
    }
    g.weights(e.i, e.j) = e.weight;
    g.weights(e.j, e.i) = e.weight;
  }
  g.edges = std::move(chosen);
  validate(g);
  return g;
}

// ---------------------------------------------------------------------------
// Laplacians and spectra

struct LaplacianMatrix {
  Matrix values;
  LaplacianKind kind = LaplacianKind::combinatorial;
  bool scaled = false;
  double lambda_max = 0.0;  // spectral radius used for scaling; 0 when unscaled

  std::size_t n() const noexcept { return values.rows(); }
};

/// Eigenpairs of a symmetric matrix, ascending; eigenvector l is column l.
struct EigenSystem {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;

  std::size_t n() const noexcept { return eigenvalues.size(); }
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// 1e-12 of the matrix norm. Each eigenvector is signed so its first entry
/// of magnitude above 1e-8 is positive.
inline EigenSystem eigendecompose(const Matrix& m) {
  constexpr int kMaxSweeps = 100;
  const std::size_t n = m.rows();
  if (m.cols() != n) throw DimensionMismatch("eigendecompose needs a square matrix");
  if (n > 4096) throw DimensionMismatch("eigendecompose supports n <= 4096");
  if (!is_symmetric(m, 1e-12 * std::max(1.0, max_abs(m)))) throw DimensionMismatch("eigendecompose needs a symmetric matrix");

  Matrix a = m;
  Matrix v = Matrix::identity(n);
  const double target = 1e-12 * frobenius_norm(m);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() >= target && target > 0.0) {
    if (sweep++ == kMaxSweeps)
      throw NonConvergence("jacobi eigendecomposition did not converge in 100 sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150)
          t = 0.5 / theta;
        else
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  EigenSystem out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t l = 0; l < n; ++l) {
    const std::size_t src = order[l];
    out.eigenvalues[l] = a(src, src);
    double sign = 1.0;
    for (std::size_t k = 0; k < n; ++k)
      if (std::abs(v(k, src)) > 1e-8) {
        sign = v(k, src) < 0.0 ? -1.0 : 1.0;
        break;
      }
    for (std::size_t k = 0; k < n; ++k) out.eigenvectors(k, l) = sign * v(k, src);
  }
  return out;
}

inline EigenSystem eigendecompose(const LaplacianMatrix& l) { return eigendecompose(l.values); }

/// Largest eigenvalue of a symmetric PSD matrix by power iteration from a
/// fixed-seed start vector. Stops when successive Rayleigh quotients agree
/// to 1e-10 relative.
inline double estimate_lambda_max(const Matrix& m) {
  constexpr int kMaxIterations = 10000;
  const std::size_t n = m.rows();
  if (m.cols() != n) throw DimensionMismatch("estimate_lambda_max needs a square matrix");
  if (n == 0) return 0.0;

  std::mt19937_64 rng(0x5eed5eedULL);
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  std::vector<double> x(n);
  for (double& xi : x) xi = unit(rng);
  // alternate signs so the start is never parallel to the constant vector
  for (std::size_t i = 1; i < n; i += 2) x[i] = -x[i];
  double nx = norm2(x);
  for (double& xi : x) xi /= nx;

  double previous = 0.0;
  for (int it = 0; it < kMaxIterations; ++it) {
    std::vector<double> y = matvec(m, x);
    double rq = 0.0;
    for (std::size_t i = 0; i < n; ++i) rq += x[i] * y[i];
    const double ny = norm2(y);
    if (ny == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
    if (it > 0 && std::abs(rq - previous) < 1e-10 * std::abs(rq)) return rq;
    previous = rq;
  }
  throw NonConvergence("power iteration did not converge in 10000 iterations");
}

inline double estimate_lambda_max(const LaplacianMatrix& l) { return estimate_lambda_max(l.values); }

/// Graph Laplacian of a weight matrix.
///
/// combinatorial: D - W; symmetric_normalized: I - D^-1/2 W D^-1/2. When
/// scaled, the result is 2L/lambda_max - I with lambda_max taken from the
/// exact spectrum, so the scaled spectrum lies in [-1, 1].
inline LaplacianMatrix laplacian(const Matrix& weights, LaplacianKind kind, bool scaled) {
  const std::size_t n = weights.rows();
  if (weights.cols() != n) throw DimensionMismatch("weight matrix must be square");
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) degree[i] += weights(i, j);

  LaplacianMatrix out;
  out.kind = kind;
  out.values = Matrix(n, n);
  if (kind == LaplacianKind::combinatorial) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out.values(i, j) = (i == j ? degree[i] : 0.0) - weights(i, j);
  } else {
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (degree[i] <= 0.0) throw IsolatedVertex("vertex " + std::to_string(i) + " has zero degree");
      inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out.values(i, j) = (i == j ? 1.0 : 0.0) - inv_sqrt[i] * weights(i, j) * inv_sqrt[j];
  }

  if (scaled) {
    const EigenSystem eig = eigendecompose(out.values);
    const double lmax = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues.back();
    if (!(lmax > 0.0)) throw DataError("cannot scale a Laplacian with no positive eigenvalue");
    out.values *= 2.0 / lmax;
    for (std::size_t i = 0; i < n; ++i) out.values(i, i) -= 1.0;
    out.scaled = true;
    out.lambda_max = lmax;
  }
  return out;
}

inline LaplacianMatrix laplacian(const SpatialGraph& g, LaplacianKind kind, bool scaled) {
  return laplacian(g.weights, kind, scaled);
}

}  // namespace spectral_pattern
