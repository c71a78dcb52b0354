#pragma once

// Evaluation-side metrics: ranking accuracy, boundary-target rank entropy,
// and the ground-truth optimal traversal used to score embeddings.

#include <algorithm>
#include <cmath>
#include <bit>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nac/common.hpp"
#include "nac/embeddings.hpp"
#include "nac/graph_env.hpp"

namespace nac {

/// 1-based positions of boundary targets within the ranking restricted to
/// boundary nodes.
inline std::vector<std::size_t> boundary_target_positions(const Ranking& ranking, const ObservedState& s,
                                                          const GroundTruthGraph& gt) {
  std::vector<std::size_t> pos;
  std::size_t i = 0;
  for (NodeId v : ranking.order) {
    if (!s.in_boundary(v)) continue;
    ++i;
    if (gt.label(v) == 1) pos.push_back(i);
  }
  return pos;
}

/// Undiscovered targets among the top-k boundary-ranked nodes, k = number of
/// undiscovered targets, divided by the total number of targets.
inline double accuracy_index(const Ranking& ranking, const ObservedState& s, const GroundTruthGraph& gt) {
  const std::size_t total = gt.target_count();
  require<ConfigError>(total > 0, "accuracy needs at least one target node");
  const std::size_t k = total - s.probed_targets().size();
  std::size_t hits = 0, seen = 0;
  for (NodeId v : ranking.order) {
    if (seen == k) break;
    if (!s.in_boundary(v)) continue;
    ++seen;
    if (gt.label(v) == 1) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

inline double gaussian_entropy(double variance) {
  return 0.5 * (1.0 + std::log(2.0 * std::numbers::pi * variance));
}

/// Gaussian differential entropy of boundary-target rank positions
/// (population variance). Undefined with fewer than two boundary targets.
inline std::optional<double> boundary_entropy(const Ranking& ranking, const ObservedState& s,
                                              const GroundTruthGraph& gt) {
  auto pos = boundary_target_positions(ranking, s, gt);
  if (pos.size() < 2) return std::nullopt;
  double mean = 0.0;
  for (auto p : pos) mean += static_cast<double>(p);
  mean /= static_cast<double>(pos.size());
  double var = 0.0;
  for (auto p : pos) var += (static_cast<double>(p) - mean) * (static_cast<double>(p) - mean);
  var /= static_cast<double>(pos.size());
  return gaussian_entropy(var);
}

inline double auc(std::span<const double> accuracy) {
  double s = 0.0;
  for (double a : accuracy) s += a;
  return s;
}

struct MetricRecord {
  std::size_t step = 0;
  double accuracy = 0.0;
  std::optional<double> entropy;
  int reward = 0;
  std::size_t targets_found = 0;
};

/// Per-step metrics of one traversal; record 0 is the state before the
/// first probe.
struct MetricSeries {
  std::string instance_id;
  std::vector<MetricRecord> records;
  std::vector<NodeId> probes;

  std::size_t probe_count() const { return probes.size(); }
  // steps of the route counting the seed probe as the first
  std::size_t traversal_length() const { return probes.size() + 1; }
  std::vector<double> accuracy() const {
    std::vector<double> a;
    for (const auto& r : records) a.push_back(r.accuracy);
    return a;
  }
  double auc() const { return nac::auc(accuracy()); }

  static void write_header(std::ostream& os) { os << "instance_id,step,accuracy,entropy,reward,targets_found\n"; }
  void write_rows(std::ostream& os) const {
    for (const auto& r : records) {
      os << instance_id << ',' << r.step << ',' << r.accuracy << ',';
      if (r.entropy)
        os << *r.entropy;
      else
        os << "undefined";
      os << ',' << r.reward << ',' << r.targets_found << '\n';
    }
  }
};

namespace detail {

// Shortest paths where a path costs the number of non-target nodes on it,
// excluding the source.
inline void node_weighted_distances(const GroundTruthGraph& gt, const std::vector<NodeId>& sources,
                                    std::vector<std::size_t>& dist, std::vector<std::int64_t>* parent = nullptr) {
  constexpr auto kInf = std::numeric_limits<std::size_t>::max();
  dist.assign(gt.size(), kInf);
  if (parent) parent->assign(gt.size(), -1);
  for (NodeId v : sources) dist[v] = 0;
  using Item = std::pair<std::size_t, NodeId>;
  std::vector<Item> heap;
  for (NodeId v : sources) heap.emplace_back(dist[v], v);
  auto cmp = [](const Item& a, const Item& b) { return a > b; };
  std::make_heap(heap.begin(), heap.end(), cmp);
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), cmp);
    auto [d, u] = heap.back();
    heap.pop_back();
    if (d != dist[u]) continue;
    for (NodeId v : gt.neighbors(u)) {
      std::size_t nd = d + (gt.label(v) == 1 ? 0 : 1);
      if (nd < dist[v]) {
        dist[v] = nd;
        if (parent) (*parent)[v] = u;
        heap.emplace_back(nd, v);
        std::push_heap(heap.begin(), heap.end(), cmp);
      }
    }
  }
}

/// Minimum-weight connected node set containing every target (non-targets
/// weigh 1, targets 0). Exact Dreyfus-Wagner over target components when
/// there are at most `exact_limit` of them, nearest-component greedy beyond.
inline std::vector<NodeId> steiner_cover(const GroundTruthGraph& gt, NodeId seed, std::size_t exact_limit = 8) {
  constexpr auto kInf = std::numeric_limits<std::size_t>::max();
  const std::size_t n = gt.size();
  // target components
  std::vector<std::int64_t> comp(n, -1);
  std::vector<NodeId> reps;
  for (NodeId t : gt.target_nodes()) {
    if (comp[t] >= 0) continue;
    const auto c = static_cast<std::int64_t>(reps.size());
    reps.push_back(t);
    std::vector<NodeId> stack{t};
    comp[t] = c;
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : gt.neighbors(u))
        if (gt.label(v) == 1 && comp[v] < 0) {
          comp[v] = c;
          stack.push_back(v);
        }
    }
  }
  // seed component first
  std::swap(reps[0], reps[static_cast<std::size_t>(comp[seed])]);
  {
    std::vector<std::size_t> d;
    node_weighted_distances(gt, {seed}, d);
    for (NodeId r : reps)
      if (d[r] == kInf) throw GenerationError(concat("target node ", r, " is unreachable from seed ", seed));
  }
  std::vector<std::uint8_t> in_set(n, 0);
  for (NodeId t : gt.target_nodes()) in_set[t] = 1;
  const std::size_t c = reps.size();
  if (c == 1) return gt.target_nodes();

  if (c <= exact_limit) {
    const std::size_t full = (std::size_t{1} << c) - 1;
    // dp[S][v]: min weight of a tree spanning terminals S and v (v counted)
    std::vector<std::vector<std::size_t>> dp(full + 1, std::vector<std::size_t>(n, kInf));
    // back-pointers: split subset (>0) or predecessor node (encoded as -(v+1))
    std::vector<std::vector<std::int64_t>> back(full + 1, std::vector<std::int64_t>(n, 0));
    auto w = [&](NodeId v) -> std::size_t { return gt.label(v) == 1 ? 0 : 1; };
    for (std::size_t S = 1; S <= full; ++S) {
      auto& cur = dp[S];
      if ((S & (S - 1)) == 0) {
        const auto i = static_cast<std::size_t>(std::countr_zero(S));
        cur[reps[i]] = 0;
      } else {
        for (std::size_t A = (S - 1) & S; A > 0; A = (A - 1) & S) {
          if (A < (S ^ A)) continue;  // each split once
          const auto& a = dp[A];
          const auto& b = dp[S ^ A];
          for (NodeId v = 0; v < n; ++v) {
            if (a[v] == kInf || b[v] == kInf) continue;
            std::size_t val = a[v] + b[v] - w(v);
            if (val < cur[v]) {
              cur[v] = val;
              back[S][v] = static_cast<std::int64_t>(A);
            }
          }
        }
      }
      // relax along edges
      using Item = std::pair<std::size_t, NodeId>;
      std::vector<Item> heap;
      for (NodeId v = 0; v < n; ++v)
        if (cur[v] != kInf) heap.emplace_back(cur[v], v);
      auto cmp = [](const Item& x, const Item& y) { return x > y; };
      std::make_heap(heap.begin(), heap.end(), cmp);
      while (!heap.empty()) {
        std::pop_heap(heap.begin(), heap.end(), cmp);
        auto [d, u] = heap.back();
        heap.pop_back();
        if (d != cur[u]) continue;
        for (NodeId v : gt.neighbors(u)) {
          std::size_t nd = d + w(v);
          if (nd < cur[v]) {
            cur[v] = nd;
            back[S][v] = -static_cast<std::int64_t>(u) - 1;
            heap.emplace_back(nd, v);
            std::push_heap(heap.begin(), heap.end(), cmp);
          }
        }
      }
    }
    NodeId root = reps[0];  // any node works; the seed's component rep keeps it anchored
    std::vector<std::pair<std::size_t, NodeId>> todo{{full, root}};
    while (!todo.empty()) {
      auto [S, v] = todo.back();
      todo.pop_back();
      in_set[v] = 1;
      auto b = back[S][v];
      if (b > 0) {
        todo.emplace_back(static_cast<std::size_t>(b), v);
        todo.emplace_back(S ^ static_cast<std::size_t>(b), v);
      } else if (b < 0) {
        todo.emplace_back(S, static_cast<NodeId>(-b - 1));
      }
    }
  } else {
    std::vector<std::uint8_t> joined(c, 0);
    joined[0] = 1;
    for (std::size_t round = 1; round < c; ++round) {
      std::vector<NodeId> tree;
      for (NodeId v = 0; v < n; ++v)
        if (in_set[v] && (gt.label(v) == 0 || joined[static_cast<std::size_t>(comp[v])])) tree.push_back(v);
      std::vector<std::size_t> d;
      std::vector<std::int64_t> parent;
      node_weighted_distances(gt, tree, d, &parent);
      std::size_t best = kInf, best_c = 0;
      for (std::size_t i = 0; i < c; ++i)
        if (!joined[i] && d[reps[i]] < best) {
          best = d[reps[i]];
          best_c = i;
        }
      for (std::int64_t v = reps[best_c]; v >= 0; v = parent[static_cast<std::size_t>(v)])
        in_set[static_cast<std::size_t>(v)] = 1;
      joined[best_c] = 1;
    }
  }
  std::vector<NodeId> out;
  for (NodeId v = 0; v < n; ++v)
    if (in_set[v]) out.push_back(v);
  return out;
}

}  // namespace detail

/// Ground-truth guided traversal that probes a minimum connected cover of
/// all targets, scoring the embedding's ranking before every probe and after
/// the last one. Within the cover, boundary targets go first (most probed
/// target neighbours, then lowest id); otherwise the lowest-id connector.
inline MetricSeries optimal_traversal(const Instance& inst, const EmbedConfig& embed, bool score = true) {
  const auto& gt = inst.graph;
  auto cover = detail::steiner_cover(gt, inst.seed);
  std::vector<std::uint8_t> in_cover(gt.size(), 0);
  for (NodeId v : cover) in_cover[v] = 1;
  auto s = reset(gt, EpisodeConfig{inst.seed, cover.size() - 1});
  MetricSeries out;
  out.instance_id = inst.id;
  auto record = [&](int reward) {
    MetricRecord r;
    r.step = s.step();
    r.reward = reward;
    r.targets_found = s.targets_found();
    if (score) {
      auto ranking = rank(s, embed);
      r.accuracy = accuracy_index(ranking, s, gt);
      r.entropy = boundary_entropy(ranking, s, gt);
    }
    out.records.push_back(r);
  };
  record(0);
  while (s.step() < s.budget()) {
    std::optional<NodeId> best;
    std::size_t best_links = 0;
    for (NodeId v : s.boundary()) {
      if (!in_cover[v] || gt.label(v) != 1) continue;
      std::size_t links = 0;
      for (NodeId u : s.known_neighbors(v))
        if (s.known_label(u) == std::optional<std::uint8_t>{1}) ++links;
      if (!best || links > best_links) {
        best = v;
        best_links = links;
      }
    }
    if (!best)
      for (NodeId v : s.boundary())
        if (in_cover[v]) {
          best = v;
          break;
        }
    require(best.has_value(), "traversal cover is not connected to the probed set");
    out.probes.push_back(*best);
    int r = apply_probe(s, gt, *best);
    record(r);
  }
  return out;
}

}  // namespace nac
