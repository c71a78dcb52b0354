#include <gtest/gtest.h>

#include <map>
#include <set>

#include "support/oracles.hpp"

using namespace nac;

namespace {

std::pair<GroundTruthGraph, ObservedState> random_state(std::uint64_t seed, std::size_t n, double p, std::size_t probes) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> labels(n);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng() % 3 == 0);
  labels[0] = 1;
  auto g = oracle::random_gnp(n, p, seed, labels);
  auto s = reset(g, EpisodeConfig{0, n});
  for (std::size_t i = 0; i < probes && !s.done(); ++i) apply_probe(s, g, s.boundary()[rng() % s.boundary().size()]);
  return {std::move(g), std::move(s)};
}

// Known graph in local indices, rebuilt from the visible neighbour lists.
SparseGraph local_known_graph(const ObservedState& s) {
  std::vector<Edge> e;
  for (NodeId v : s.observed_nodes())
    for (NodeId u : s.known_neighbors(v))
      if (u > v) e.emplace_back(static_cast<NodeId>(s.local_index(v)), static_cast<NodeId>(s.local_index(u)));
  return SparseGraph::from_edges(s.observed_count(), e);
}

}  // namespace

TEST(ModPolicy, PicksLargestTargetCount) {
  // probed targets 0,1,2; boundary 5 touches all three, 4 only the seed
  std::vector<Edge> e{{0, 1}, {0, 2}, {0, 4}, {0, 5}, {1, 5}, {2, 5}};
  auto g = GroundTruthGraph::from_edges(6, e, {1, 1, 1, 0, 0, 0});
  auto s = oracle::play(g, 0, {1, 2});
  EXPECT_EQ(mod_policy(s), 5u);
}

TEST(ModPolicy, ZeroCountsPickLowestId) {
  std::vector<Edge> e{{0, 1}, {1, 3}, {1, 2}};
  auto g = GroundTruthGraph::from_edges(4, e, {1, 0, 0, 0});
  auto s = oracle::play(g, 0, {1});
  EXPECT_EQ(mod_policy(s), 2u);
}

TEST(ModPolicy, MatchesExhaustiveCount) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto [g, s] = random_state(seed, 10, 0.35, seed % 5);
    if (s.done()) continue;
    NodeId best = 0;
    long best_count = -1;
    for (NodeId v = 0; v < g.size(); ++v) {
      if (!s.in_boundary(v)) continue;
      long c = 0;
      for (NodeId u = 0; u < g.size(); ++u)
        if (s.is_probed(u) && g.label(u) == 1 && g.has_edge(u, v)) ++c;
      if (c > best_count) best_count = c, best = v;
    }
    EXPECT_EQ(mod_policy(s), best) << "seed " << seed;
  }
}

TEST(PprPolicy, SymmetricTieGoesToLowestId) {
  std::vector<Edge> e{{0, 3}, {0, 2}};
  auto g = GroundTruthGraph::from_edges(4, e, {1, 0, 0, 0});
  auto s = reset(g, EpisodeConfig{0, 5});
  EXPECT_EQ(ppr_policy(s), 2u);
}

TEST(PprPolicy, PrefersNodeCloserToTargets) {
  // 2 hangs off the seed directly, 3 only through background node 1
  std::vector<Edge> e{{0, 1}, {0, 2}, {1, 3}};
  auto g = GroundTruthGraph::from_edges(4, e, {1, 0, 0, 0});
  auto s = oracle::play(g, 0, {1});
  EXPECT_EQ(ppr_policy(s), 2u);
}

TEST(PprPolicy, MatchesDenseSolveArgmax) {
  EmbedConfig cfg;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto [g, s] = random_state(seed, 12, 0.3, seed % 4);
    if (s.done()) continue;
    std::vector<double> tele(s.observed_count(), 0.0);
    auto targets = s.probed_targets();
    for (NodeId t : targets) tele[static_cast<std::size_t>(s.local_index(t))] = 1.0 / double(targets.size());
    auto pi = oracle::dense_ppr(local_known_graph(s), tele, cfg.alpha);
    double top = -1.0;
    for (NodeId v : s.boundary()) top = std::max(top, pi[static_cast<std::size_t>(s.local_index(v))]);
    NodeId got = ppr_policy(s, cfg);
    ASSERT_TRUE(s.in_boundary(got));
    EXPECT_NEAR(pi[static_cast<std::size_t>(s.local_index(got))], top, 1e-9) << "seed " << seed;
  }
}

TEST(RandomPolicy, UniformOverBoundary) {
  auto [g, s] = random_state(3, 30, 0.2, 2);
  const auto b = s.boundary();
  ASSERT_GE(b.size(), 3u);
  Rng rng(17);
  std::map<NodeId, std::size_t> hits;
  const std::size_t draws = 10000;
  for (std::size_t i = 0; i < draws; ++i) ++hits[random_policy(s, rng)];
  std::vector<std::size_t> counts;
  for (NodeId v : b) counts.push_back(hits[v]);
  EXPECT_EQ(hits.size(), b.size());
  EXPECT_TRUE(oracle::within_three_sigma(counts, std::vector<double>(b.size(), 1.0 / double(b.size())), draws));
}

TEST(RandomPolicy, SingleNodeBoundaryAndDeterminism) {
  auto g = oracle::path_graph(3, {1, 0, 0});
  auto s = reset(g, EpisodeConfig{0, 5});
  Rng rng(1);
  EXPECT_EQ(random_policy(s, rng), 1u);
  auto [g2, s2] = random_state(4, 30, 0.2, 2);
  Rng a(9), b(9);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(random_policy(s2, a), random_policy(s2, b));
}

TEST(Nol, FullExplorationIsUniform) {
  auto [g, s] = random_state(5, 30, 0.2, 2);
  const auto b = s.boundary();
  ASSERT_GE(b.size(), 3u);
  NolModel m;
  m.epsilon = 1.0;
  Rng rng(23);
  std::map<NodeId, std::size_t> hits;
  const std::size_t draws = 10000;
  for (std::size_t i = 0; i < draws; ++i) ++hits[nol_policy(s, m, rng).node];
  std::vector<std::size_t> counts;
  for (NodeId v : b) counts.push_back(hits[v]);
  EXPECT_TRUE(oracle::within_three_sigma(counts, std::vector<double>(b.size(), 1.0 / double(b.size())), draws));
}

TEST(Nol, RegressionReducesError) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> d;
  auto draw = [&] {
    NolModel::Features x;
    for (auto& v : x) v = d(rng);
    return x;
  };
  auto label = [](const NolModel::Features& x) { return 2.0 * x[0] - x[2] + 0.5 * x[4] > 0.0 ? 1.0 : 0.0; };
  std::vector<NolModel::Features> test(500);
  for (auto& x : test) x = draw();
  auto mse = [&](const NolModel& m) {
    double e = 0.0;
    for (const auto& x : test) e += std::pow(m.predict(x) - label(x), 2) / double(test.size());
    return e;
  };
  NolModel m;
  const double before = mse(m);
  for (int i = 0; i < 1000; ++i) {
    auto x = draw();
    nol_update(m, x, label(x));
  }
  EXPECT_EQ(m.updates, 1000u);
  EXPECT_LT(mse(m), before);
  EXPECT_LT(mse(m), 0.15);
}

TEST(Nol, FeaturesFromVisibleState) {
  // 3 touches probed target 0 and probed background 1; its known degree is 2
  std::vector<Edge> e{{0, 1}, {0, 3}, {1, 3}, {3, 4}};
  auto g = GroundTruthGraph::from_edges(5, e, {1, 0, 0, 0, 1});
  auto s = oracle::play(g, 0, {1});
  auto ppr = ppr_scores(s, EmbedConfig{});
  auto x = nol_features(s, 3, ppr);
  EXPECT_EQ(x[0], 1.0);
  EXPECT_EQ(x[1], 1.0);
  EXPECT_EQ(x[2], 2.0);
  EXPECT_EQ(x[3], 1.0);
  EXPECT_EQ(x[4], ppr[static_cast<std::size_t>(s.local_index(3))]);
}

TEST(RunBaseline, CurvesAreDeterministicAndConsistent) {
  auto g = oracle::random_gnp(60, 0.08, 2, [] {
    std::vector<std::uint8_t> l(60, 0);
    for (int i = 0; i < 12; ++i) l[i] = 1;
    return l;
  }());
  Instance inst{"t", g, 0, {}};
  for (auto kind : {BaselineKind::kMod, BaselineKind::kPpr, BaselineKind::kNol, BaselineKind::kRandom}) {
    auto a = run_baseline(kind, inst, 20, 5);
    auto b = run_baseline(kind, inst, 20, 5);
    EXPECT_EQ(a.actions, b.actions) << to_string(kind);
    ASSERT_FALSE(a.actions.empty());
    EXPECT_LE(a.actions.size(), 20u);
    std::set<NodeId> distinct(a.actions.begin(), a.actions.end());
    EXPECT_EQ(distinct.size(), a.actions.size());
    EXPECT_EQ(a.final_state.targets_found(), a.targets_found.back());
  }
}
