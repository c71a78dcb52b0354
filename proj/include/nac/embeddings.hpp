#pragma once

// Seed-centric rankings of the observed graph and the reorder-and-truncate
// compression that turns a ranking into a fixed-size agent input.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nac/common.hpp"
#include "nac/graph_env.hpp"
#include "nac/node2vec.hpp"
#include "nac/ranking.hpp"
#include "nac/spectral.hpp"

namespace nac {

enum class EmbedAlgorithm { kPpr, kMod, kPca, kEigenmap, kGlee, kNode2vec };

inline std::string to_string(EmbedAlgorithm a) {
  switch (a) {
    case EmbedAlgorithm::kPpr: return "PPR";
    case EmbedAlgorithm::kMod: return "MOD";
    case EmbedAlgorithm::kPca: return "PCA";
    case EmbedAlgorithm::kEigenmap: return "EIGENMAP";
    case EmbedAlgorithm::kGlee: return "GLEE";
    case EmbedAlgorithm::kNode2vec: return "NODE2VEC";
  }
  return "?";
}

inline EmbedAlgorithm parse_embed_algorithm(std::string name) {
  for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (name == "PPR") return EmbedAlgorithm::kPpr;
  if (name == "MOD") return EmbedAlgorithm::kMod;
  if (name == "PCA") return EmbedAlgorithm::kPca;
  if (name == "EIGENMAP" || name == "LAPLACIAN" || name == "LAPLACE") return EmbedAlgorithm::kEigenmap;
  if (name == "GLEE") return EmbedAlgorithm::kGlee;
  if (name == "NODE2VEC") return EmbedAlgorithm::kNode2vec;
  throw ConfigError("unknown embedding algorithm '" + name + "'");
}

struct EmbedConfig {
  EmbedAlgorithm algorithm = EmbedAlgorithm::kPpr;
  double alpha = 0.8;  // PPR damping: probability of following an edge
  std::size_t dim = 64;
  Node2VecParams node2vec{};
  double ppr_tol = 1e-10;
  double eigen_tol = 1e-8;
  std::size_t max_iter = 10000;
  std::uint64_t seed = 0;

  void validate() const {
    require<ConfigError>(alpha > 0.0 && alpha < 1.0, "PPR damping alpha=", alpha, " must lie in (0,1)");
    require<ConfigError>(dim >= 1, "embedding dimension must be >= 1");
  }
};

struct PprResult {
  std::vector<double> scores;
  std::size_t iterations = 0;
  double delta = 0.0;  // L1 change of the final iteration
};

/// Personalised PageRank by power iteration: π = (1−α)v + α·πW with W the
/// random-walk matrix; mass at isolated nodes restarts from `teleport`.
inline PprResult personalized_pagerank(const SparseGraph& g, std::span<const double> teleport, double alpha,
                                       double tol = 1e-10, std::size_t max_iter = 10000) {
  const std::size_t n = g.size();
  require(teleport.size() == n, "teleport vector length mismatch");
  PprResult res;
  std::vector<double> pi(teleport.begin(), teleport.end()), next(n);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    double dangling = 0.0;
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t u = 0; u < n; ++u) {
      const auto deg = g.degree(u);
      if (deg == 0) {
        dangling += pi[u];
        continue;
      }
      const double share = pi[u] / static_cast<double>(deg);
      for (auto v : g.neighbors(u)) next[v] += share;
    }
    double delta = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      next[v] = (1.0 - alpha) * teleport[v] + alpha * (next[v] + dangling * teleport[v]);
      delta += std::abs(next[v] - pi[v]);
    }
    pi.swap(next);
    res.iterations = it;
    res.delta = delta;
    if (delta < tol) {
      res.scores = std::move(pi);
      return res;
    }
  }
  throw ConvergenceError(concat("PPR did not converge in ", max_iter, " iterations (last change ", res.delta, ")"));
}

inline std::vector<double> probed_target_teleport(const ObservedState& s) {
  std::vector<double> v(s.observed_count(), 0.0);
  auto targets = s.probed_targets();
  require<ConfigError>(!targets.empty(), "ranking needs at least one probed target node");
  for (NodeId t : targets) v[static_cast<std::size_t>(s.local_index(t))] = 1.0 / static_cast<double>(targets.size());
  return v;
}

inline std::vector<double> ppr_scores(const ObservedState& s, const EmbedConfig& cfg) {
  cfg.validate();
  auto g = SparseGraph::known_graph(s);
  auto v = probed_target_teleport(s);
  return personalized_pagerank(g, v, cfg.alpha, cfg.ppr_tol, cfg.max_iter).scores;
}

inline Ranking rank_ppr(const ObservedState& s, const EmbedConfig& cfg = {}) {
  return make_ranking(s, ppr_scores(s, cfg));
}

/// Number of known edges from each observed node to probed targets.
inline std::vector<double> mod_scores(const ObservedState& s) {
  std::vector<double> score(s.observed_count(), 0.0);
  for (std::size_t v = 0; v < s.observed_count(); ++v)
    for (auto u : s.neighbors_local(v))
      if (s.label_local(u) == 1) score[v] += 1.0;
  return score;
}

inline Ranking rank_mod(const ObservedState& s) { return make_ranking(s, mod_scores(s)); }

/// Node coordinates from a set of eigenvectors: coords[v*dim + j] = vec_j[v].
struct SpectralEmbedding {
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<double> residuals;
  std::vector<double> coords;

  std::span<const double> row(std::size_t v) const { return {coords.data() + v * dim, dim}; }
};

enum class SpectralOperator { kAdjacency, kLaplacian };

inline LanczosSolver::Apply make_operator(const SparseGraph& g, SpectralOperator op) {
  return [&g, op](std::span<const double> x, std::span<double> y) {
    for (std::size_t v = 0; v < g.size(); ++v) {
      double acc = 0.0;
      for (auto u : g.neighbors(v)) acc += x[u];
      y[v] = op == SpectralOperator::kAdjacency ? acc : static_cast<double>(g.degree(v)) * x[v] - acc;
    }
  };
}

inline SpectralEmbedding pack_embedding(const EigenPairs& eig, std::size_t first, std::size_t n) {
  SpectralEmbedding emb;
  emb.dim = eig.values.size() > first ? eig.values.size() - first : 0;
  emb.coords.assign(n * emb.dim, 0.0);
  for (std::size_t j = 0; j < emb.dim; ++j) {
    emb.values.push_back(eig.values[first + j]);
    emb.residuals.push_back(eig.residuals[first + j]);
    for (std::size_t v = 0; v < n; ++v) emb.coords[v * emb.dim + j] = eig.vectors[first + j][v];
  }
  return emb;
}

/// Leading eigenvectors (by |λ|) of the adjacency matrix; null directions are
/// dropped, so fewer than `dim` columns come back for low-rank graphs.
inline SpectralEmbedding pca_embedding(const SparseGraph& g, std::size_t dim, double tol, std::size_t max_iter,
                                       std::uint64_t seed = 0x5eed) {
  LanczosOptions opt;
  opt.tol = tol;
  opt.max_matvecs = max_iter;
  opt.seed = seed;
  opt.skip_null = true;
  opt.null_threshold = 1e-7;
  LanczosSolver solver(g.size(), make_operator(g, SpectralOperator::kAdjacency), opt);
  return pack_embedding(solver.solve(dim, Spectrum::kLargestMagnitude), 0, g.size());
}

/// Laplacian eigenvectors. The low end skips one null vector per connected
/// component; the high end is used as is.
inline SpectralEmbedding laplacian_embedding(const SparseGraph& g, std::size_t dim, Spectrum end, double tol,
                                             std::size_t max_iter, std::uint64_t seed = 0x5eed) {
  LanczosOptions opt;
  opt.tol = tol;
  opt.max_matvecs = max_iter;
  opt.seed = seed;
  LanczosSolver solver(g.size(), make_operator(g, SpectralOperator::kLaplacian), opt);
  std::size_t skip = 0;
  if (end == Spectrum::kSmallest) g.components(&skip);
  auto eig = solver.solve(std::min(g.size(), dim + skip), end);
  return pack_embedding(eig, std::min(skip, eig.values.size()), g.size());
}

namespace detail {

inline std::vector<std::size_t> probed_target_locals(const ObservedState& s) {
  std::vector<std::size_t> out;
  for (NodeId t : s.probed_targets()) out.push_back(static_cast<std::size_t>(s.local_index(t)));
  require<ConfigError>(!out.empty(), "ranking needs at least one probed target node");
  return out;
}

template <typename Row>
std::vector<double> mean_distance_scores(std::size_t n, std::size_t dim, Row&& row,
                                         const std::vector<std::size_t>& targets) {
  std::vector<double> score(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    double total = 0.0;
    auto rv = row(v);
    for (auto t : targets) {
      auto rt = row(t);
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        double d = static_cast<double>(rv[j]) - static_cast<double>(rt[j]);
        d2 += d * d;
      }
      total += std::sqrt(d2);
    }
    score[v] = -total / static_cast<double>(targets.size());
  }
  return score;
}

inline std::vector<double> dot_with_mean_scores(const SpectralEmbedding& emb, const std::vector<std::size_t>& targets,
                                                std::size_t n) {
  std::vector<double> mean(emb.dim, 0.0);
  for (auto t : targets)
    for (std::size_t j = 0; j < emb.dim; ++j) mean[j] += emb.row(t)[j] / static_cast<double>(targets.size());
  std::vector<double> score(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    double dot = 0.0;
    for (std::size_t j = 0; j < emb.dim; ++j) dot += emb.row(v)[j] * mean[j];
    score[v] = std::abs(dot);
  }
  return score;
}

// Eigen-based scores are only defined up to solver tolerance.
constexpr double kSpectralResolution = 1e-9;

}  // namespace detail

inline Ranking rank_pca(const ObservedState& s, const EmbedConfig& cfg = {}) {
  cfg.validate();
  auto g = SparseGraph::known_graph(s);
  auto emb = pca_embedding(g, cfg.dim, cfg.eigen_tol, cfg.max_iter, derive_seed(cfg.seed, g.size()));
  auto targets = detail::probed_target_locals(s);
  auto score = detail::mean_distance_scores(g.size(), emb.dim, [&](std::size_t v) { return emb.row(v); }, targets);
  return make_ranking(s, std::move(score), detail::kSpectralResolution);
}

inline Ranking rank_eigenmap(const ObservedState& s, const EmbedConfig& cfg = {}) {
  cfg.validate();
  auto g = SparseGraph::known_graph(s);
  auto emb = laplacian_embedding(g, cfg.dim, Spectrum::kSmallest, cfg.eigen_tol, cfg.max_iter,
                                 derive_seed(cfg.seed, g.size()));
  return make_ranking(s, detail::dot_with_mean_scores(emb, detail::probed_target_locals(s), g.size()),
                      detail::kSpectralResolution);
}

inline Ranking rank_glee(const ObservedState& s, const EmbedConfig& cfg = {}) {
  cfg.validate();
  auto g = SparseGraph::known_graph(s);
  auto emb = laplacian_embedding(g, cfg.dim, Spectrum::kLargest, cfg.eigen_tol, cfg.max_iter,
                                 derive_seed(cfg.seed, g.size()));
  return make_ranking(s, detail::dot_with_mean_scores(emb, detail::probed_target_locals(s), g.size()),
                      detail::kSpectralResolution);
}

/// node2vec ranking; nodes that took part in no training pair rank last.
inline Ranking rank_node2vec(const ObservedState& s, const EmbedConfig& cfg, std::uint64_t rng_seed) {
  cfg.validate();
  auto g = SparseGraph::known_graph(s);
  auto prm = cfg.node2vec;
  prm.dim = cfg.dim;
  auto model = train_node2vec(g, prm, rng_seed);
  auto targets = detail::probed_target_locals(s);
  auto score = detail::mean_distance_scores(g.size(), model.dim, [&](std::size_t v) { return model.row(v); }, targets);
  for (std::size_t v = 0; v < g.size(); ++v)
    if (!model.trained(v)) score[v] = -std::numeric_limits<double>::infinity();
  return make_ranking(s, std::move(score), detail::kSpectralResolution);
}

/// Dispatches on cfg.algorithm. node2vec draws its seed from cfg.seed and the
/// state's probe count so that successive steps use distinct streams.
inline Ranking rank(const ObservedState& s, const EmbedConfig& cfg) {
  switch (cfg.algorithm) {
    case EmbedAlgorithm::kPpr: return rank_ppr(s, cfg);
    case EmbedAlgorithm::kMod: return rank_mod(s);
    case EmbedAlgorithm::kPca: return rank_pca(s, cfg);
    case EmbedAlgorithm::kEigenmap: return rank_eigenmap(s, cfg);
    case EmbedAlgorithm::kGlee: return rank_glee(s, cfg);
    case EmbedAlgorithm::kNode2vec: return rank_node2vec(s, cfg, derive_seed(cfg.seed, s.probed_count()));
  }
  throw ConfigError("unknown embedding algorithm");
}

/// Fixed-size agent input: the top-k ranked nodes, their known adjacency and
/// known labels, and which of them may be probed.
struct RankedState {
  static constexpr NodeId kPadding = std::numeric_limits<NodeId>::max();

  std::size_t k = 0;
  std::vector<NodeId> slots;            // kPadding past the observed count
  std::vector<float> adj_channel;       // k×k, row-major
  std::vector<float> label_channel;     // k×k, diagonal only: +1 / −1 / 0
  std::vector<std::uint8_t> action_mask;

  std::size_t valid_actions() const {
    return static_cast<std::size_t>(std::count(action_mask.begin(), action_mask.end(), 1));
  }

  /// Channel-major 2×k×k input tensor.
  template <typename T = float>
  std::vector<T> tensor() const {
    std::vector<T> out(2 * k * k);
    std::copy(adj_channel.begin(), adj_channel.end(), out.begin());
    std::copy(label_channel.begin(), label_channel.end(), out.begin() + static_cast<std::ptrdiff_t>(k * k));
    return out;
  }

  friend bool operator==(const RankedState&, const RankedState&) = default;
};

inline RankedState compress(const ObservedState& s, const Ranking& ranking, std::size_t k) {
  require<ConfigError>(k >= 1, "truncation size k must be >= 1");
  require(ranking.size() == s.observed_count(), "ranking does not cover the observed node set");
  RankedState out;
  out.k = k;
  out.slots.assign(k, RankedState::kPadding);
  out.adj_channel.assign(k * k, 0.0f);
  out.label_channel.assign(k * k, 0.0f);
  out.action_mask.assign(k, 0);
  const std::size_t used = std::min(k, ranking.size());
  std::vector<std::int32_t> slot_of_local(s.observed_count(), -1);
  for (std::size_t i = 0; i < used; ++i) {
    const NodeId v = ranking.order[i];
    const auto local = static_cast<std::size_t>(s.local_index(v));
    out.slots[i] = v;
    slot_of_local[local] = static_cast<std::int32_t>(i);
    int lbl = s.label_local(local);
    out.label_channel[i * k + i] = lbl == 1 ? 1.0f : (lbl == 0 ? -1.0f : 0.0f);
    out.action_mask[i] = s.probed_local(local) ? 0 : 1;
  }
  for (std::size_t i = 0; i < used; ++i) {
    const auto local = static_cast<std::size_t>(s.local_index(out.slots[i]));
    for (auto u : s.neighbors_local(local)) {
      auto j = slot_of_local[u];
      if (j >= 0) out.adj_channel[i * k + static_cast<std::size_t>(j)] = 1.0f;
    }
  }
  return out;
}

}  // namespace nac
