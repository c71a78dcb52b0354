#pragma once

// Incomplete-network discovery environment: the hidden ground truth, the
// agent's partial view of it, and the probe dynamics that grow that view.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nac/common.hpp"

namespace nac {

using Edge = std::pair<NodeId, NodeId>;

/// Complete simple undirected graph with a binary label per node (1 = target).
/// Immutable once built; share it read-only between episodes.
class GroundTruthGraph {
 public:
  GroundTruthGraph() = default;

  /// Builds a simple graph from an edge list. Self-loops are dropped and
  /// duplicate edges (in either orientation) collapse to one.
  static GroundTruthGraph from_edges(std::size_t n, std::span<const Edge> edges,
                                     std::vector<std::uint8_t> labels = {},
                                     std::vector<int> communities = {}) {
    GroundTruthGraph g;
    g.n_ = n;
    std::vector<Edge> norm;
    norm.reserve(edges.size());
    for (auto [u, v] : edges) {
      require<ConfigError>(u < n && v < n, "edge (", u, ",", v, ") references a node outside [0,", n, ")");
      if (u == v) continue;
      norm.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(norm.begin(), norm.end());
    norm.erase(std::unique(norm.begin(), norm.end()), norm.end());
    g.m_ = norm.size();

    std::vector<std::size_t> deg(n, 0);
    for (auto [u, v] : norm) {
      ++deg[u];
      ++deg[v];
    }
    g.offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + deg[i];
    g.targets_.resize(g.offsets_[n]);
    std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
    for (auto [u, v] : norm) {
      g.targets_[fill[u]++] = v;
      g.targets_[fill[v]++] = u;
    }
    for (std::size_t i = 0; i < n; ++i)
      std::sort(g.targets_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]),
                g.targets_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]));

    if (labels.empty()) labels.assign(n, 0);
    require<ConfigError>(labels.size() == n, "label vector has length ", labels.size(), ", expected ", n);
    for (auto l : labels) require<ConfigError>(l <= 1, "labels must be 0 or 1");
    g.labels_ = std::move(labels);
    require<ConfigError>(communities.empty() || communities.size() == n, "community vector length mismatch");
    g.communities_ = std::move(communities);
    return g;
  }

  std::size_t size() const { return n_; }
  std::size_t edge_count() const { return m_; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {targets_.data() + offsets_[v], targets_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }

  bool has_edge(NodeId u, NodeId v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }

  std::uint8_t label(NodeId v) const { return labels_[v]; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }

  std::vector<NodeId> target_nodes() const {
    std::vector<NodeId> out;
    for (NodeId v = 0; v < n_; ++v)
      if (labels_[v]) out.push_back(v);
    return out;
  }
  std::size_t target_count() const { return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1)); }

  /// Community assignment from the generator (empty for loaded graphs).
  const std::vector<int>& communities() const { return communities_; }

  /// Original identifiers for graphs read from disk (empty for generated ones).
  const std::vector<std::string>& original_ids() const { return original_ids_; }
  void set_original_ids(std::vector<std::string> ids) {
    require<ConfigError>(ids.size() == n_, "id map length mismatch");
    original_ids_ = std::move(ids);
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(m_);
    for (NodeId u = 0; u < n_; ++u)
      for (NodeId v : neighbors(u))
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  GroundTruthGraph with_labels(std::vector<std::uint8_t> labels) const {
    require<ConfigError>(labels.size() == n_, "label vector length mismatch");
    GroundTruthGraph g = *this;
    g.labels_ = std::move(labels);
    return g;
  }

  friend bool operator==(const GroundTruthGraph&, const GroundTruthGraph&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> targets_;
  std::vector<std::uint8_t> labels_;
  std::vector<int> communities_;
  std::vector<std::string> original_ids_;
};

enum class InitialReveal {
  // The seed is probed; its neighbours are observed with unknown labels.
  kSeedOnly,
};

struct EpisodeConfig {
  NodeId seed_node = 0;
  std::size_t budget = 0;
  InitialReveal initial_reveal = InitialReveal::kSeedOnly;
  std::uint64_t rng_seed = 0;
};

class ObservedState;
ObservedState reset(const GroundTruthGraph& gt, const EpisodeConfig& cfg);
int apply_probe(ObservedState& state, const GroundTruthGraph& gt, NodeId a);

/// The agent's partial view of the network. Only labels of probed nodes are
/// stored, so nothing reachable from this type can leak a hidden label.
///
/// Nodes are kept under two numberings: the ground-truth id (stable, used in
/// every public result) and a local index in order of discovery (used for the
/// known-edge adjacency).
class ObservedState {
 public:
  static constexpr std::int32_t kUnobserved = -1;

  std::size_t universe_size() const { return local_of_.size(); }
  std::size_t observed_count() const { return nodes_.size(); }
  std::size_t probed_count() const { return probe_order_.size(); }
  std::size_t known_edge_count() const { return edge_count_; }
  NodeId seed() const { return seed_; }
  std::size_t step() const { return step_; }
  std::size_t budget() const { return budget_; }

  /// Episode ends on budget exhaustion or when nothing is left to probe.
  bool done() const { return step_ >= budget_ || boundary_.empty(); }

  bool is_observed(NodeId v) const { return v < local_of_.size() && local_of_[v] != kUnobserved; }
  bool is_probed(NodeId v) const { return is_observed(v) && probed_[static_cast<std::size_t>(local_of_[v])]; }
  bool in_boundary(NodeId v) const { return is_observed(v) && !is_probed(v); }

  /// Label of a probed node; empty for anything not yet probed.
  std::optional<std::uint8_t> known_label(NodeId v) const {
    if (!is_probed(v)) return std::nullopt;
    return labels_[static_cast<std::size_t>(local_of_[v])];
  }

  /// Observed-but-unprobed nodes, ascending id. This is the action set.
  std::span<const NodeId> boundary() const { return boundary_; }
  /// Probed nodes in probe order; element 0 is the seed.
  std::span<const NodeId> probed() const { return probe_order_; }
  /// Observed nodes in discovery order (local index -> node id).
  std::span<const NodeId> observed_nodes() const { return nodes_; }

  std::int32_t local_index(NodeId v) const { return v < local_of_.size() ? local_of_[v] : kUnobserved; }
  NodeId node_at(std::size_t local) const { return nodes_[local]; }
  bool probed_local(std::size_t local) const { return probed_[local]; }
  /// −1 unknown, 0 background, 1 target; indexed by local index.
  int label_local(std::size_t local) const { return probed_[local] ? labels_[local] : -1; }
  std::span<const std::uint32_t> neighbors_local(std::size_t local) const { return adj_[local]; }

  std::vector<NodeId> known_neighbors(NodeId v) const {
    std::vector<NodeId> out;
    if (!is_observed(v)) return out;
    for (auto l : adj_[static_cast<std::size_t>(local_of_[v])]) out.push_back(nodes_[l]);
    std::sort(out.begin(), out.end());
    return out;
  }

  bool has_known_edge(NodeId u, NodeId v) const {
    if (!is_observed(u) || !is_observed(v)) return false;
    const auto& nb = adj_[static_cast<std::size_t>(local_of_[u])];
    return std::find(nb.begin(), nb.end(), static_cast<std::uint32_t>(local_of_[v])) != nb.end();
  }

  /// Probed targets, excluding the seed.
  std::size_t targets_found() const {
    std::size_t c = 0;
    for (std::size_t i = 1; i < probe_order_.size(); ++i)
      if (labels_[static_cast<std::size_t>(local_of_[probe_order_[i]])]) ++c;
    return c;
  }

  /// Probed target nodes including the seed, in probe order.
  std::vector<NodeId> probed_targets() const {
    std::vector<NodeId> out;
    for (NodeId v : probe_order_)
      if (labels_[static_cast<std::size_t>(local_of_[v])]) out.push_back(v);
    return out;
  }

  friend bool operator==(const ObservedState&, const ObservedState&) = default;

 private:
  friend ObservedState reset(const GroundTruthGraph&, const EpisodeConfig&);
  friend int apply_probe(ObservedState&, const GroundTruthGraph&, NodeId);

  std::uint32_t observe(NodeId v) {
    if (local_of_[v] != kUnobserved) return static_cast<std::uint32_t>(local_of_[v]);
    auto l = static_cast<std::uint32_t>(nodes_.size());
    local_of_[v] = static_cast<std::int32_t>(l);
    nodes_.push_back(v);
    adj_.emplace_back();
    probed_.push_back(0);
    labels_.push_back(0);
    boundary_.insert(std::lower_bound(boundary_.begin(), boundary_.end(), v), v);
    return l;
  }

  // Marks v probed, reveals its label, and reveals all of its neighbours and
  // the edges to them. Edges to already-probed neighbours are known already.
  void reveal(NodeId v, const GroundTruthGraph& gt) {
    auto lv = observe(v);
    probed_[lv] = 1;
    labels_[lv] = gt.label(v);
    probe_order_.push_back(v);
    boundary_.erase(std::lower_bound(boundary_.begin(), boundary_.end(), v));
    for (NodeId u : gt.neighbors(v)) {
      bool fresh = local_of_[u] == kUnobserved;
      auto lu = observe(u);
      if (fresh || !probed_[lu]) {
        adj_[lv].push_back(lu);
        adj_[lu].push_back(lv);
        ++edge_count_;
      }
    }
  }

  std::vector<std::int32_t> local_of_;
  std::vector<NodeId> nodes_;
  std::vector<std::vector<std::uint32_t>> adj_;
  std::vector<std::uint8_t> probed_;
  std::vector<std::uint8_t> labels_;
  std::vector<NodeId> boundary_;
  std::vector<NodeId> probe_order_;
  std::size_t edge_count_ = 0;
  NodeId seed_ = 0;
  std::size_t step_ = 0;
  std::size_t budget_ = 0;
};

inline ObservedState reset(const GroundTruthGraph& gt, const EpisodeConfig& cfg) {
  require<ConfigError>(cfg.seed_node < gt.size(), "seed node ", cfg.seed_node, " out of range (n=", gt.size(), ")");
  require<ConfigError>(gt.label(cfg.seed_node) == 1, "seed node ", cfg.seed_node, " is not a target node");
  ObservedState s;
  s.local_of_.assign(gt.size(), ObservedState::kUnobserved);
  s.seed_ = cfg.seed_node;
  s.budget_ = cfg.budget;
  s.reveal(cfg.seed_node, gt);
  return s;
}

/// Probes boundary node `a` in place and returns the reward (its label).
inline int apply_probe(ObservedState& state, const GroundTruthGraph& gt, NodeId a) {
  require<EpisodeOverError>(state.step_ < state.budget_, "probe budget of ", state.budget_, " exhausted");
  require<InvalidActionError>(state.in_boundary(a), "node ", a, " is not in the boundary set");
  state.reveal(a, gt);
  ++state.step_;
  return gt.label(a);
}

struct ProbeOutcome {
  ObservedState state;
  int reward = 0;
};

inline ProbeOutcome probe(ObservedState state, const GroundTruthGraph& gt, NodeId a) {
  int r = apply_probe(state, gt, a);
  return {std::move(state), r};
}

/// Σ γ^t r_t with the first reward at exponent 0.
template <typename T>
double discounted_return(std::span<const T> rewards, double gamma) {
  require<ConfigError>(gamma >= 0.0 && gamma <= 1.0, "discount factor ", gamma, " outside [0,1]");
  require<ConfigError>(!rewards.empty(), "discounted_return of an empty reward sequence");
  double total = 0.0;
  double w = 1.0;
  for (const auto& r : rewards) {
    total += w * static_cast<double>(r);
    w *= gamma;
  }
  return total;
}

inline double discounted_return(std::initializer_list<double> rewards, double gamma) {
  return discounted_return(std::span<const double>(rewards.begin(), rewards.size()), gamma);
}

struct TraceRecord {
  std::size_t step = 0;
  NodeId action = 0;
  int reward = 0;
  std::size_t boundary_size = 0;
  std::size_t targets_found = 0;
};

/// Line-oriented episode log.
class EpisodeTrace {
 public:
  void record(const ObservedState& after, NodeId action, int reward) {
    records_.push_back({after.step(), action, reward, after.boundary().size(), after.targets_found()});
  }
  const std::vector<TraceRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  void write_csv(std::ostream& os, bool header = true) const {
    if (header) os << "step,action,reward,boundary_size,targets_found\n";
    for (const auto& r : records_)
      os << r.step << ',' << r.action << ',' << r.reward << ',' << r.boundary_size << ',' << r.targets_found << '\n';
  }

 private:
  std::vector<TraceRecord> records_;
};

/// A ground-truth graph together with the episode's seed node and, for
/// synthetic instances, the implanted anomaly host sets.
struct Instance {
  std::string id;
  GroundTruthGraph graph;
  NodeId seed = 0;
  std::vector<std::vector<NodeId>> anomalies;
};

using InstanceFactory = std::function<Instance(std::uint64_t seed)>;

/// Probe sequence of one harvesting run.
struct DiscoveryCurve {
  std::vector<NodeId> actions;
  std::vector<int> rewards;
  std::vector<std::size_t> targets_found;  // after each probe
  ObservedState final_state;
};

}  // namespace nac
