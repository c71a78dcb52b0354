#pragma once

// Ground-truth instance generation: SBM and LFR-style backgrounds, implanted
// Erdős–Rényi foregrounds, and edge-list ingestion.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "nac/common.hpp"
#include "nac/graph_env.hpp"

namespace nac {

struct SbmParams {
  std::size_t n = 0;
  std::size_t k = 1;
  std::vector<double> p;  // one per community, or a single value applied to all
  double r = 0.0;
};

struct LfrParams {
  std::size_t n = 0;
  double tau1 = 2.5;
  double tau2 = 1.5;
  double mu = 0.1;
  double avg_deg = 32.0;
  std::size_t d_max = 256;
  std::size_t min_c = 256;
  std::size_t max_c = 512;
  std::size_t max_retries = 20;
  std::size_t rewire_rounds = 20;
};

struct LfrReport {
  double achieved_mu = 0.0;
  std::size_t dropped_stubs = 0;
  std::size_t communities = 0;
  std::size_t attempts = 0;
};

enum class PlacementMode {
  kStrict,      // fewer candidates than needed -> GenerationError
  kBestEffort,  // fill the shortfall with the nodes nearest the hop window
};

struct ForegroundParams {
  std::size_t n_f = 40;
  std::size_t k_f = 1;
  double p_f = 1.0;
  // Shortest-path distance window (on the background) between a new host set
  // and the union of earlier host sets. min_hops == 0 disables the check.
  std::size_t min_hops = 0;
  std::size_t max_hops = std::numeric_limits<std::size_t>::max();
  PlacementMode mode = PlacementMode::kStrict;
  // Community of the first host set; -1 picks one uniformly.
  int community = -1;
};

struct ImplantReport {
  std::vector<std::vector<NodeId>> host_sets;
  // Distance from each host set (after the first) to the earlier ones.
  std::vector<std::size_t> separations;
  bool placement_satisfied = true;
};

namespace detail {

// Calls emit(i) for each index i in [0, count) independently with
// probability p, skipping geometrically between successes.
template <typename Emit>
void bernoulli_indices(std::uint64_t count, double p, Rng& rng, Emit&& emit) {
  if (count == 0 || p <= 0.0) return;
  if (p >= 1.0) {
    for (std::uint64_t i = 0; i < count; ++i) emit(i);
    return;
  }
  const double log_q = std::log1p(-p);
  std::uint64_t i = 0;
  while (true) {
    double u = uniform01(rng);
    double skip = std::floor(std::log1p(-u) / log_q);
    if (skip >= static_cast<double>(count - i)) return;
    i += static_cast<std::uint64_t>(skip);
    emit(i);
    if (++i >= count) return;
  }
}

// Unranks a linear index over the strictly-upper triangle of an s×s matrix.
inline std::pair<std::uint64_t, std::uint64_t> triangle_pair(std::uint64_t idx) {
  // row i owns indices [i(i-1)/2, i(i+1)/2) of pairs (j, i) with j < i
  auto i = static_cast<std::uint64_t>((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(idx))) / 2.0);
  while (i * (i - 1) / 2 > idx) --i;
  while ((i + 1) * i / 2 <= idx) ++i;
  std::uint64_t j = idx - i * (i - 1) / 2;
  return {j, i};
}

inline std::uint64_t edge_key(NodeId u, NodeId v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

inline std::vector<std::size_t> bfs_distances(const GroundTruthGraph& g, std::span<const NodeId> sources) {
  constexpr auto kInf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(g.size(), kInf);
  std::deque<NodeId> q;
  for (NodeId s : sources) {
    if (dist[s] == 0) continue;
    dist[s] = 0;
    q.push_back(s);
  }
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop_front();
    for (NodeId v : g.neighbors(u))
      if (dist[v] == kInf) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  return dist;
}

}  // namespace detail

/// Equal-split community sizes; the remainder goes to the first community.
inline std::vector<std::size_t> sbm_community_sizes(std::size_t n, std::size_t k) {
  std::vector<std::size_t> sizes(k, n / k);
  sizes[0] += n % k;
  return sizes;
}

inline GroundTruthGraph gen_sbm(const SbmParams& params, std::uint64_t rng_seed) {
  const auto& [n, k, p_in, r] = params;
  require<ConfigError>(k >= 1 && k <= n, "SBM needs 1 <= k <= n (k=", k, ", n=", n, ")");
  require<ConfigError>(p_in.size() == 1 || p_in.size() == k, "SBM needs 1 or k intra-community probabilities");
  require<ConfigError>(r >= 0.0 && r <= 1.0, "SBM inter-community probability ", r, " outside [0,1]");
  std::vector<double> p(k);
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = p_in.size() == 1 ? p_in[0] : p_in[i];
    require<ConfigError>(p[i] >= 0.0 && p[i] <= 1.0, "SBM probability p[", i, "]=", p[i], " outside [0,1]");
    require<ConfigError>(k == 1 || p[i] > r, "SBM requires p[", i, "]=", p[i], " > r=", r);
  }

  auto sizes = sbm_community_sizes(n, k);
  std::vector<std::size_t> start(k + 1, 0);
  for (std::size_t i = 0; i < k; ++i) start[i + 1] = start[i] + sizes[i];
  std::vector<int> community(n);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t v = start[c]; v < start[c + 1]; ++v) community[v] = static_cast<int>(c);

  Rng rng(rng_seed);
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < k; ++a) {
    const std::uint64_t s = sizes[a];
    detail::bernoulli_indices(s * (s - 1) / 2, p[a], rng, [&](std::uint64_t idx) {
      auto [j, i] = detail::triangle_pair(idx);
      edges.emplace_back(static_cast<NodeId>(start[a] + j), static_cast<NodeId>(start[a] + i));
    });
    for (std::size_t b = a + 1; b < k; ++b) {
      const std::uint64_t t = sizes[b];
      detail::bernoulli_indices(s * t, r, rng, [&](std::uint64_t idx) {
        edges.emplace_back(static_cast<NodeId>(start[a] + idx / t), static_cast<NodeId>(start[b] + idx % t));
      });
    }
  }
  return GroundTruthGraph::from_edges(n, edges, {}, std::move(community));
}

/// Samples from a discrete power law P(x) ∝ x^-tau on integer support,
/// realised as the floor of a continuous truncated power law on [x_min, x_max+1).
class PowerLawSampler {
 public:
  PowerLawSampler(double tau, double x_min, double x_max) : tau_(tau), lo_(x_min), hi_(x_max + 1.0) {
    require<ConfigError>(tau > 1.0, "power-law exponent must exceed 1 (got ", tau, ")");
    require<ConfigError>(x_min >= 1.0 && x_min <= x_max, "power-law support [", x_min, ",", x_max, "] is empty");
  }

  double cdf(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    const double e = 1.0 - tau_;
    return (std::pow(x, e) - std::pow(lo_, e)) / (std::pow(hi_, e) - std::pow(lo_, e));
  }

  std::size_t operator()(Rng& rng) const {
    const double e = 1.0 - tau_;
    const double u = uniform01(rng);
    const double a = std::pow(lo_, e), b = std::pow(hi_, e);
    double x = std::pow(a + u * (b - a), 1.0 / e);
    return static_cast<std::size_t>(std::min(std::floor(x), hi_ - 1.0));
  }

  /// Exact mean of the floored variable.
  double mean() const {
    double m = 0.0;
    for (auto d = static_cast<std::size_t>(std::floor(lo_)); static_cast<double>(d) < hi_; ++d)
      m += static_cast<double>(d) * (cdf(static_cast<double>(d) + 1.0) - cdf(static_cast<double>(d)));
    return m;
  }

  /// Lower cut-off giving the requested mean for a fixed exponent and cap.
  static PowerLawSampler with_mean(double tau, double mean, double x_max) {
    require<ConfigError>(mean >= 1.0 && mean < x_max, "target mean ", mean, " must lie in [1, d_max)");
    double lo = 1.0, hi = x_max;
    for (int it = 0; it < 100; ++it) {
      double mid = 0.5 * (lo + hi);
      (PowerLawSampler(tau, mid, x_max).mean() < mean ? lo : hi) = mid;
    }
    return PowerLawSampler(tau, 0.5 * (lo + hi), x_max);
  }

 private:
  double tau_, lo_, hi_;
};

inline std::vector<std::size_t> sample_powerlaw_degrees(std::size_t n, double tau, double mean, std::size_t d_max,
                                                        Rng& rng) {
  auto sampler = PowerLawSampler::with_mean(tau, mean, static_cast<double>(d_max));
  std::vector<std::size_t> deg(n);
  for (auto& d : deg) d = sampler(rng);
  return deg;
}

namespace detail {

// Random stub matching with bounded double-edge-swap repair. `allowed(u, v)`
// rejects pairs that violate the layer's constraint; failures that survive
// all rounds are dropped and counted.
template <typename Allowed>
std::vector<Edge> match_stubs(std::vector<NodeId> stubs, Rng& rng, std::size_t rounds, Allowed&& allowed,
                              std::unordered_set<std::uint64_t>& taken, std::size_t& dropped) {
  std::shuffle(stubs.begin(), stubs.end(), rng);
  std::vector<Edge> good;
  std::vector<Edge> bad;
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
    NodeId u = stubs[i], v = stubs[i + 1];
    if (u != v && allowed(u, v) && taken.insert(edge_key(u, v)).second)
      good.emplace_back(u, v);
    else
      bad.emplace_back(u, v);
  }
  if (stubs.size() % 2) ++dropped;
  for (std::size_t round = 0; round < rounds && !bad.empty() && !good.empty(); ++round) {
    std::vector<Edge> still_bad;
    for (auto [a, b] : bad) {
      auto pick = uniform_below(rng, good.size());
      auto [c, d] = good[pick];
      if (uniform01(rng) < 0.5) std::swap(c, d);
      auto ok = [&](NodeId x, NodeId y) { return x != y && allowed(x, y) && !taken.count(edge_key(x, y)); };
      if (ok(a, c) && ok(b, d) && edge_key(a, c) != edge_key(b, d)) {
        taken.erase(edge_key(good[pick].first, good[pick].second));
        taken.insert(edge_key(a, c));
        taken.insert(edge_key(b, d));
        good[pick] = {a, c};
        good.emplace_back(b, d);
      } else {
        still_bad.emplace_back(a, b);
      }
    }
    bad = std::move(still_bad);
  }
  dropped += 2 * bad.size();
  return good;
}

}  // namespace detail

/// LFR-style benchmark: power-law degrees and community sizes, configuration
/// model within and across communities, bounded rewiring. Mixing is
/// approximate; the achieved value is written to `report`.
inline GroundTruthGraph gen_lfr(const LfrParams& params, std::uint64_t rng_seed, LfrReport* report = nullptr) {
  const auto& P = params;
  require<ConfigError>(P.tau1 > 1.0 && P.tau2 > 1.0, "LFR exponents must exceed 1");
  require<ConfigError>(P.mu >= 0.0 && P.mu <= 1.0, "LFR mixing ", P.mu, " outside [0,1]");
  require<ConfigError>(P.min_c >= 2 && P.min_c <= P.max_c && P.max_c <= P.n, "LFR needs 2 <= min_c <= max_c <= n");
  require<ConfigError>(P.d_max < P.n, "LFR d_max must be below n");

  Rng rng(rng_seed);
  std::string last_failure;
  for (std::size_t attempt = 1; attempt <= P.max_retries; ++attempt) {
    auto deg = sample_powerlaw_degrees(P.n, P.tau1, P.avg_deg, P.d_max, rng);

    // community sizes summing to n
    PowerLawSampler size_sampler(P.tau2, static_cast<double>(P.min_c), static_cast<double>(P.max_c));
    std::vector<std::size_t> sizes;
    std::size_t total = 0;
    while (total < P.n) {
      sizes.push_back(size_sampler(rng));
      total += sizes.back();
    }
    std::size_t excess = total - P.n;
    for (auto it = sizes.rbegin(); it != sizes.rend() && excess > 0; ++it) {
      std::size_t cut = std::min(excess, *it - P.min_c);
      *it -= cut;
      excess -= cut;
    }
    if (excess > 0) {
      last_failure = "community sizes cannot sum to n within [min_c, max_c]";
      continue;
    }

    std::vector<std::size_t> k_int(P.n), k_ext(P.n);
    for (std::size_t v = 0; v < P.n; ++v) {
      k_int[v] = static_cast<std::size_t>(std::llround((1.0 - P.mu) * static_cast<double>(deg[v])));
      k_ext[v] = deg[v] - k_int[v];
    }

    // highest internal degree first; each node goes to a random community
    // that still has room and is large enough to host its internal degree
    std::vector<NodeId> order(P.n);
    std::iota(order.begin(), order.end(), NodeId{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return k_int[a] > k_int[b]; });
    std::vector<int> community(P.n, -1);
    std::vector<std::size_t> room = sizes;
    bool placed = true;
    for (NodeId v : order) {
      std::vector<std::size_t> fits;
      for (std::size_t c = 0; c < sizes.size(); ++c)
        if (room[c] > 0 && sizes[c] > k_int[v]) fits.push_back(c);
      if (fits.empty()) {
        last_failure = concat("node with internal degree ", k_int[v], " fits no community (largest ",
                              *std::max_element(sizes.begin(), sizes.end()), ")");
        placed = false;
        break;
      }
      auto c = fits[uniform_below(rng, fits.size())];
      community[v] = static_cast<int>(c);
      --room[c];
    }
    if (!placed) continue;

    std::unordered_set<std::uint64_t> taken;
    std::size_t dropped = 0;
    std::vector<Edge> edges;
    std::vector<std::vector<NodeId>> members(sizes.size());
    for (NodeId v = 0; v < P.n; ++v) members[static_cast<std::size_t>(community[v])].push_back(v);
    for (const auto& mem : members) {
      std::vector<NodeId> stubs;
      for (NodeId v : mem) stubs.insert(stubs.end(), k_int[v], v);
      auto e = detail::match_stubs(std::move(stubs), rng, P.rewire_rounds, [](NodeId, NodeId) { return true; },
                                   taken, dropped);
      edges.insert(edges.end(), e.begin(), e.end());
    }
    std::vector<NodeId> ext_stubs;
    for (NodeId v = 0; v < P.n; ++v) ext_stubs.insert(ext_stubs.end(), k_ext[v], v);
    auto cross = detail::match_stubs(
        std::move(ext_stubs), rng, P.rewire_rounds, [&](NodeId u, NodeId v) { return community[u] != community[v]; },
        taken, dropped);
    edges.insert(edges.end(), cross.begin(), cross.end());

    auto g = GroundTruthGraph::from_edges(P.n, edges, {}, community);
    if (report) {
      double mu_sum = 0.0;
      std::size_t counted = 0;
      for (NodeId v = 0; v < P.n; ++v) {
        if (g.degree(v) == 0) continue;
        std::size_t out = 0;
        for (NodeId u : g.neighbors(v)) out += community[u] != community[v];
        mu_sum += static_cast<double>(out) / static_cast<double>(g.degree(v));
        ++counted;
      }
      report->achieved_mu = counted ? mu_sum / static_cast<double>(counted) : 0.0;
      report->dropped_stubs = dropped;
      report->communities = sizes.size();
      report->attempts = attempt;
    }
    return g;
  }
  throw GenerationError(concat("LFR generation failed after ", P.max_retries, " attempts: ", last_failure));
}

/// Replaces the induced subgraph on k_f host sets with ER(n_f, p_f) graphs and
/// labels the hosts as targets.
inline GroundTruthGraph implant_foreground(const GroundTruthGraph& bg, const ForegroundParams& params,
                                           std::uint64_t rng_seed, ImplantReport* report = nullptr) {
  const auto& F = params;
  require<ConfigError>(F.p_f >= 0.0 && F.p_f <= 1.0, "foreground probability ", F.p_f, " outside [0,1]");
  require<ConfigError>(F.n_f >= 1 && F.k_f >= 1, "foreground needs n_f >= 1 and k_f >= 1");
  require<ConfigError>(F.k_f * F.n_f <= bg.size(), "k_f*n_f=", F.k_f * F.n_f, " exceeds n=", bg.size());
  require<ConfigError>(F.min_hops <= F.max_hops, "empty hop window");

  Rng rng(rng_seed);
  const std::size_t n = bg.size();
  std::vector<std::uint8_t> is_host(n, 0);
  ImplantReport rep;

  // first host set: uniform within one community (or the whole graph)
  {
    std::vector<NodeId> pool;
    const auto& comm = bg.communities();
    if (!comm.empty()) {
      int ncomm = *std::max_element(comm.begin(), comm.end()) + 1;
      std::vector<int> eligible;
      for (int c = 0; c < ncomm; ++c)
        if (static_cast<std::size_t>(std::count(comm.begin(), comm.end(), c)) >= F.n_f) eligible.push_back(c);
      require<GenerationError>(!eligible.empty(), "no community can host ", F.n_f, " nodes");
      int c = F.community >= 0 ? F.community : eligible[uniform_below(rng, eligible.size())];
      require<GenerationError>(std::find(eligible.begin(), eligible.end(), c) != eligible.end(), "community ", c,
                               " cannot host ", F.n_f, " nodes");
      for (NodeId v = 0; v < n; ++v)
        if (comm[v] == c) pool.push_back(v);
    } else {
      pool.resize(n);
      std::iota(pool.begin(), pool.end(), NodeId{0});
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(F.n_f);
    std::sort(pool.begin(), pool.end());
    for (NodeId v : pool) is_host[v] = 1;
    rep.host_sets.push_back(std::move(pool));
  }

  for (std::size_t a = 1; a < F.k_f; ++a) {
    std::vector<NodeId> prev;
    for (NodeId v = 0; v < n; ++v)
      if (is_host[v]) prev.push_back(v);
    auto dist = detail::bfs_distances(bg, prev);
    std::vector<NodeId> in_window;
    for (NodeId v = 0; v < n; ++v) {
      if (is_host[v]) continue;
      if (F.min_hops == 0 || (dist[v] >= F.min_hops && dist[v] <= F.max_hops)) in_window.push_back(v);
    }
    std::shuffle(in_window.begin(), in_window.end(), rng);
    std::vector<NodeId> hosts;
    if (in_window.size() >= F.n_f) {
      hosts.assign(in_window.begin(), in_window.begin() + static_cast<std::ptrdiff_t>(F.n_f));
    } else {
      require<GenerationError>(F.mode == PlacementMode::kBestEffort, "only ", in_window.size(),
                               " nodes lie within hop window [", F.min_hops, ",", F.max_hops, "] of earlier hosts; ",
                               F.n_f, " needed");
      rep.placement_satisfied = false;
      hosts = in_window;
      // shortfall: nodes closest to the window, then fewest edges into
      // earlier host sets, then random
      std::vector<std::tuple<std::size_t, std::size_t, std::uint64_t, NodeId>> fill;
      for (NodeId v = 0; v < n; ++v) {
        if (is_host[v] || (dist[v] >= F.min_hops && dist[v] <= F.max_hops)) continue;
        std::size_t gap = dist[v] < F.min_hops ? F.min_hops - dist[v] : dist[v] - F.max_hops;
        std::size_t links = 0;
        for (NodeId u : bg.neighbors(v)) links += is_host[u];
        fill.emplace_back(gap, links, rng(), v);
      }
      std::sort(fill.begin(), fill.end());
      for (std::size_t i = 0; hosts.size() < F.n_f && i < fill.size(); ++i) hosts.push_back(std::get<3>(fill[i]));
    }
    std::sort(hosts.begin(), hosts.end());
    std::size_t sep = std::numeric_limits<std::size_t>::max();
    for (NodeId v : hosts) sep = std::min(sep, dist[v]);
    rep.separations.push_back(sep);
    for (NodeId v : hosts) is_host[v] = 1;
    rep.host_sets.push_back(std::move(hosts));
  }

  std::vector<int> set_of(n, -1);
  for (std::size_t a = 0; a < rep.host_sets.size(); ++a)
    for (NodeId v : rep.host_sets[a]) set_of[v] = static_cast<int>(a);

  std::vector<Edge> edges;
  for (auto [u, v] : bg.edges())
    if (set_of[u] < 0 || set_of[u] != set_of[v]) edges.emplace_back(u, v);
  for (const auto& hosts : rep.host_sets) {
    const std::uint64_t s = hosts.size();
    detail::bernoulli_indices(s * (s - 1) / 2, F.p_f, rng, [&](std::uint64_t idx) {
      auto [j, i] = detail::triangle_pair(idx);
      edges.emplace_back(hosts[j], hosts[i]);
    });
  }
  std::vector<std::uint8_t> labels = bg.labels();
  for (NodeId v = 0; v < n; ++v)
    if (set_of[v] >= 0) labels[v] = 1;
  auto g = GroundTruthGraph::from_edges(n, edges, std::move(labels), bg.communities());
  if (!bg.original_ids().empty()) g.set_original_ids(bg.original_ids());
  if (report) *report = std::move(rep);
  return g;
}

struct LabelFile {
  std::string path;
};
struct SyntheticTargets {
  ForegroundParams params;
  std::uint64_t rng_seed = 0;
};
using TargetSpec = std::variant<std::monostate, LabelFile, SyntheticTargets>;

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != ',' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<std::int64_t> parse_id(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string_view strip_comment(std::string_view line) {
  auto pos = line.find('#');
  return pos == std::string_view::npos ? line : line.substr(0, pos);
}

}  // namespace detail

/// Reads an undirected edge list: one pair of integer ids per line separated
/// by whitespace or commas, '#' starts a comment. A non-numeric first data
/// line is treated as a column header. Ids are re-indexed to 0..n-1 in
/// ascending order of the original id.
inline GroundTruthGraph load_edgelist(const std::string& path, const TargetSpec& targets = {},
                                      ImplantReport* implant_report = nullptr) {
  std::ifstream in(path);
  require<ConfigError>(static_cast<bool>(in), "cannot open edge list '", path, "'");
  std::vector<std::pair<std::int64_t, std::int64_t>> raw;
  std::string line;
  std::size_t lineno = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = detail::strip_comment(line);
    auto fields = detail::split_fields(body);
    if (fields.empty()) continue;
    bool first = !seen_data;
    seen_data = true;
    if (fields.size() != 2)
      throw ParseError(concat(path, ":", lineno, ": expected 2 node ids, found ", fields.size(), " fields"));
    auto a = detail::parse_id(fields[0]);
    auto b = detail::parse_id(fields[1]);
    if (!a || !b) {
      if (first && !a && !b) continue;  // header row
      throw ParseError(concat(path, ":", lineno, ": malformed node id in '", std::string(body), "'"));
    }
    raw.emplace_back(*a, *b);
  }

  std::vector<std::int64_t> ids;
  ids.reserve(raw.size() * 2);
  for (auto [a, b] : raw) {
    ids.push_back(a);
    ids.push_back(b);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::unordered_map<std::int64_t, NodeId> index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<NodeId>(i);
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (auto [a, b] : raw) edges.emplace_back(index[a], index[b]);

  std::vector<std::uint8_t> labels(ids.size(), 0);
  if (const auto* lf = std::get_if<LabelFile>(&targets)) {
    std::ifstream lin(lf->path);
    require<ConfigError>(static_cast<bool>(lin), "cannot open label file '", lf->path, "'");
    std::size_t ln = 0;
    while (std::getline(lin, line)) {
      ++ln;
      auto fields = detail::split_fields(detail::strip_comment(line));
      if (fields.empty()) continue;
      auto id = detail::parse_id(fields[0]);
      if (!id || fields.size() != 1) throw ParseError(concat(lf->path, ":", ln, ": expected one node id"));
      auto it = index.find(*id);
      require<ConfigError>(it != index.end(), lf->path, ":", ln, ": target id ", *id, " does not occur in the graph");
      labels[it->second] = 1;
    }
  }
  auto g = GroundTruthGraph::from_edges(ids.size(), edges, std::move(labels));
  std::vector<std::string> names;
  names.reserve(ids.size());
  for (auto id : ids) names.push_back(std::to_string(id));
  g.set_original_ids(std::move(names));
  if (const auto* st = std::get_if<SyntheticTargets>(&targets)) return implant_foreground(g, st->params, st->rng_seed, implant_report);
  return g;
}

inline void write_edgelist(std::ostream& os, const GroundTruthGraph& g) {
  os << "# nodes " << g.size() << " edges " << g.edge_count() << '\n';
  for (auto [u, v] : g.edges()) os << u << ' ' << v << '\n';
}

inline void write_labels(std::ostream& os, const GroundTruthGraph& g) {
  for (NodeId v : g.target_nodes()) os << v << '\n';
}

}  // namespace nac
