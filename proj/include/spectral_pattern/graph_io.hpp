#pragma once

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectral_pattern/graph.hpp"

namespace spectral_pattern {

/// {"n": n, "edges": [[i, j, w], ...], "features": [row-major n*d values],
///  "feature_dim": d, "positions": [[x, y], ...]}
inline nlohmann::ordered_json graph_to_json(const SpatialGraph& g) {
  nlohmann::ordered_json j;
  j["n"] = g.n();
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const Edge& e : g.edges) edges.push_back({e.i, e.j, e.weight});
  j["edges"] = std::move(edges);
  j["feature_dim"] = g.features.cols();
  j["features"] = g.features.values();
  nlohmann::ordered_json positions = nlohmann::ordered_json::array();
  for (const Point2& p : g.positions) positions.push_back({p.x, p.y});
  j["positions"] = std::move(positions);
  return j;
}

/// Undirected DOT graph; vertices are pinned at their centroids.
inline void write_dot(std::ostream& out, const SpatialGraph& g, const std::string& name = "G") {
  out << "graph " << name << " {\n";
  for (std::size_t i = 0; i < g.n(); ++i)
    out << "  " << i << " [pos=\"" << g.positions[i].x << ',' << g.positions[i].y << "!\"];\n";
  for (const Edge& e : g.edges) out << "  " << e.i << " -- " << e.j << " [weight=" << e.weight << "];\n";
  out << "}\n";
}

inline std::string graph_to_dot(const SpatialGraph& g, const std::string& name = "G") {
  std::ostringstream os;
  write_dot(os, g, name);
  return os.str();
}

}  // namespace spectral_pattern
