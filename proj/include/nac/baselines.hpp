#pragma once

// Comparison strategies. Each sees only the ObservedState.

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nac/common.hpp"
#include "nac/embeddings.hpp"
#include "nac/graph_env.hpp"

namespace nac {

namespace detail {

template <typename Score>
NodeId argmax_boundary(const ObservedState& s, Score&& score) {
  require<EpisodeOverError>(!s.boundary().empty(), "boundary is empty");
  NodeId best = s.boundary().front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (NodeId v : s.boundary()) {  // ascending ids, so strict > keeps the lowest id on ties
    double sc = score(v);
    if (sc > best_score) {
      best_score = sc;
      best = v;
    }
  }
  return best;
}

}  // namespace detail

/// Boundary node with the most probed target neighbours.
inline NodeId mod_policy(const ObservedState& s) {
  auto counts = mod_scores(s);
  return detail::argmax_boundary(s, [&](NodeId v) { return counts[static_cast<std::size_t>(s.local_index(v))]; });
}

inline NodeId ppr_policy(const ObservedState& s, const EmbedConfig& cfg = {}) {
  auto score = ppr_scores(s, cfg);
  return detail::argmax_boundary(s, [&](NodeId v) { return score[static_cast<std::size_t>(s.local_index(v))]; });
}

inline NodeId random_policy(const ObservedState& s, Rng& rng) {
  require<EpisodeOverError>(!s.boundary().empty(), "boundary is empty");
  return s.boundary()[uniform_below(rng, s.boundary().size())];
}

/// NOL-style online regression: ridge least squares over per-node features,
/// ε-greedy selection on the predicted target probability.
struct NolModel {
  static constexpr std::size_t kFeatures = 5;
  static constexpr std::size_t kDim = kFeatures + 1;  // plus intercept
  using Features = std::array<double, kFeatures>;

  double epsilon = 0.1;
  double ridge = 1.0;
  Eigen::Matrix<double, kDim, kDim> gram = Eigen::Matrix<double, kDim, kDim>::Zero();
  Eigen::Matrix<double, kDim, 1> moment = Eigen::Matrix<double, kDim, 1>::Zero();
  Eigen::Matrix<double, kDim, 1> weights = Eigen::Matrix<double, kDim, 1>::Zero();
  std::size_t updates = 0;

  static Eigen::Matrix<double, kDim, 1> augment(const Features& x) {
    Eigen::Matrix<double, kDim, 1> z;
    z[0] = 1.0;
    for (std::size_t i = 0; i < kFeatures; ++i) z[static_cast<Eigen::Index>(i + 1)] = x[i];
    return z;
  }

  double predict(const Features& x) const { return weights.dot(augment(x)); }
};

/// [probed-target neighbours, probed-background neighbours, known degree,
///  fraction of known neighbours probed, PPR score]
inline NolModel::Features nol_features(const ObservedState& s, NodeId v, std::span<const double> ppr) {
  const auto local = static_cast<std::size_t>(s.local_index(v));
  double pos = 0, neg = 0, probed = 0;
  auto nb = s.neighbors_local(local);
  for (auto u : nb) {
    int l = s.label_local(u);
    if (l == 1) ++pos;
    if (l == 0) ++neg;
    if (l >= 0) ++probed;
  }
  double deg = static_cast<double>(nb.size());
  return {pos, neg, deg, deg > 0 ? probed / deg : 0.0, ppr[local]};
}

inline void nol_update(NolModel& m, const NolModel::Features& x, double reward) {
  auto z = NolModel::augment(x);
  m.gram += z * z.transpose();
  m.moment += reward * z;
  ++m.updates;
  Eigen::Matrix<double, NolModel::kDim, NolModel::kDim> a = m.gram;
  a.diagonal().array() += m.ridge;
  m.weights = a.ldlt().solve(m.moment);
}

struct NolChoice {
  NodeId node = 0;
  NolModel::Features features{};
};

inline NolChoice nol_policy(const ObservedState& s, const NolModel& m, Rng& rng, const EmbedConfig& cfg = {}) {
  require<EpisodeOverError>(!s.boundary().empty(), "boundary is empty");
  auto ppr = ppr_scores(s, cfg);
  NodeId v;
  if (uniform01(rng) < m.epsilon)
    v = s.boundary()[uniform_below(rng, s.boundary().size())];
  else
    v = detail::argmax_boundary(s, [&](NodeId u) { return m.predict(nol_features(s, u, ppr)); });
  return {v, nol_features(s, v, ppr)};
}

enum class BaselineKind { kMod, kPpr, kNol, kRandom };

inline std::string to_string(BaselineKind b) {
  switch (b) {
    case BaselineKind::kMod: return "MOD";
    case BaselineKind::kPpr: return "PPR";
    case BaselineKind::kNol: return "NOL-style";
    case BaselineKind::kRandom: return "random";
  }
  return "?";
}

/// Runs one baseline to budget. The ground truth is used only to answer
/// probes; the policy sees the observed state alone.
inline DiscoveryCurve run_baseline(BaselineKind kind, const Instance& inst, std::size_t budget, std::uint64_t rng_seed,
                                   const EmbedConfig& cfg = {}) {
  auto s = reset(inst.graph, EpisodeConfig{inst.seed, budget, InitialReveal::kSeedOnly, rng_seed});
  Rng rng(rng_seed);
  NolModel nol;
  DiscoveryCurve curve;
  while (!s.done()) {
    NodeId v = 0;
    std::optional<NolModel::Features> x;
    switch (kind) {
      case BaselineKind::kMod: v = mod_policy(s); break;
      case BaselineKind::kPpr: v = ppr_policy(s, cfg); break;
      case BaselineKind::kRandom: v = random_policy(s, rng); break;
      case BaselineKind::kNol: {
        auto c = nol_policy(s, nol, rng, cfg);
        v = c.node;
        x = c.features;
        break;
      }
    }
    int r = apply_probe(s, inst.graph, v);
    if (x) nol_update(nol, *x, r);
    curve.actions.push_back(v);
    curve.rewards.push_back(r);
    curve.targets_found.push_back(s.targets_found());
  }
  curve.final_state = std::move(s);
  return curve;
}

}  // namespace nac
