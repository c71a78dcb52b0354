#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

#include "nac/common.hpp"
#include "nac/graph_env.hpp"

namespace nac {

/// Compressed sparse adjacency of the known graph, in the state's local
/// (discovery-order) numbering.
struct SparseGraph {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> targets;

  std::size_t size() const { return offsets.size() - 1; }
  std::size_t degree(std::size_t v) const { return offsets[v + 1] - offsets[v]; }
  std::span<const std::uint32_t> neighbors(std::size_t v) const {
    return {targets.data() + offsets[v], targets.data() + offsets[v + 1]};
  }

  static SparseGraph from_adjacency(const std::vector<std::vector<std::uint32_t>>& adj) {
    SparseGraph g;
    g.offsets.assign(adj.size() + 1, 0);
    for (std::size_t v = 0; v < adj.size(); ++v) g.offsets[v + 1] = g.offsets[v] + adj[v].size();
    g.targets.reserve(g.offsets.back());
    for (const auto& nb : adj) g.targets.insert(g.targets.end(), nb.begin(), nb.end());
    return g;
  }

  static SparseGraph from_edges(std::size_t n, std::span<const Edge> edges) {
    std::vector<std::vector<std::uint32_t>> adj(n);
    for (auto [u, v] : edges) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    return from_adjacency(adj);
  }

  static SparseGraph known_graph(const ObservedState& s) {
    SparseGraph g;
    const std::size_t n = s.observed_count();
    g.offsets.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) g.offsets[v + 1] = g.offsets[v] + s.neighbors_local(v).size();
    g.targets.reserve(g.offsets.back());
    for (std::size_t v = 0; v < n; ++v) {
      auto nb = s.neighbors_local(v);
      g.targets.insert(g.targets.end(), nb.begin(), nb.end());
    }
    return g;
  }

  /// Connected-component id per node, numbered in order of first node.
  std::vector<std::size_t> components(std::size_t* count = nullptr) const {
    constexpr auto kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> comp(size(), kNone);
    std::vector<std::size_t> stack;
    std::size_t c = 0;
    for (std::size_t s = 0; s < size(); ++s) {
      if (comp[s] != kNone) continue;
      comp[s] = c;
      stack.push_back(s);
      while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        for (auto v : neighbors(u))
          if (comp[v] == kNone) {
            comp[v] = c;
            stack.push_back(v);
          }
      }
      ++c;
    }
    if (count) *count = c;
    return comp;
  }
};

/// Best-first ordering of every observed node.
struct Ranking {
  std::vector<NodeId> order;
  std::vector<double> scores;  // scores[i] belongs to order[i]

  std::size_t size() const { return order.size(); }

  void write_csv(std::ostream& os, bool header = true) const {
    if (header) os << "node,score,rank\n";
    for (std::size_t i = 0; i < order.size(); ++i) os << order[i] << ',' << scores[i] << ',' << i << '\n';
  }
};

/// Sorts nodes by descending score with ascending node id breaking ties.
/// A positive `resolution` first rounds scores to that multiple of the
/// largest |score|, so values equal up to solver noise tie exactly.
inline Ranking make_ranking(std::span<const NodeId> nodes, std::vector<double> scores, double resolution = 0.0) {
  require(nodes.size() == scores.size(), "ranking needs one score per node");
  if (resolution > 0.0) {
    double scale = 0.0;
    for (double s : scores)
      if (std::isfinite(s)) scale = std::max(scale, std::abs(s));
    const double q = resolution * std::max(scale, std::numeric_limits<double>::min());
    for (double& s : scores)
      if (std::isfinite(s)) s = std::round(s / q) * q;
  }
  std::vector<std::size_t> idx(nodes.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return nodes[a] < nodes[b];
  });
  Ranking r;
  r.order.reserve(idx.size());
  r.scores.reserve(idx.size());
  for (auto i : idx) {
    r.order.push_back(nodes[i]);
    r.scores.push_back(scores[i]);
  }
  return r;
}

/// Ranking over the observed nodes of `s` from scores in local order.
inline Ranking make_ranking(const ObservedState& s, std::vector<double> local_scores, double resolution = 0.0) {
  return make_ranking(s.observed_nodes(), std::move(local_scores), resolution);
}

}  // namespace nac
