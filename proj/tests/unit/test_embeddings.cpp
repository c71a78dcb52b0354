#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <numbers>
#include <set>

#include "support/oracles.hpp"

using namespace nac;

namespace {

// Random graph with node 0 a target, then `probes` random boundary probes.
std::pair<GroundTruthGraph, ObservedState> random_state(std::uint64_t seed, std::size_t n, double p,
                                                        std::size_t probes) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> labels(n);
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng() % 3 == 0);
  labels[0] = 1;
  auto g = oracle::random_gnp(n, p, seed, labels);
  auto s = reset(g, EpisodeConfig{0, n});
  for (std::size_t i = 0; i < probes && !s.done(); ++i) apply_probe(s, g, s.boundary()[rng() % s.boundary().size()]);
  return {std::move(g), std::move(s)};
}

void expect_valid_ranking(const ObservedState& s, const Ranking& r) {
  ASSERT_EQ(r.order.size(), s.observed_count());
  std::set<NodeId> seen(r.order.begin(), r.order.end());
  ASSERT_EQ(seen.size(), s.observed_count());
  for (NodeId v : r.order) ASSERT_TRUE(s.is_observed(v));
  for (std::size_t i = 1; i < r.order.size(); ++i) {
    ASSERT_GE(r.scores[i - 1], r.scores[i]);
    if (r.scores[i - 1] == r.scores[i]) { ASSERT_LT(r.order[i - 1], r.order[i]); }
  }
}

double score_of(const Ranking& r, NodeId v) {
  return r.scores[static_cast<std::size_t>(std::find(r.order.begin(), r.order.end(), v) - r.order.begin())];
}

std::size_t position(const Ranking& r, NodeId v) {
  return static_cast<std::size_t>(std::find(r.order.begin(), r.order.end(), v) - r.order.begin());
}

// Sorted eigenvalues of a dense symmetric matrix.
std::vector<double> dense_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

}  // namespace

TEST(Lanczos, MatchesDenseSolverAtBothEnds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto gt = oracle::random_gnp(30, 0.2, seed);
    auto g = SparseGraph::from_edges(gt.size(), gt.edges());
    auto dense = dense_eigenvalues(oracle::dense_laplacian(g));
    LanczosSolver solver(g.size(), make_operator(g, SpectralOperator::kLaplacian), {1e-10, 100000});
    auto lo = solver.solve(5, Spectrum::kSmallest);
    auto hi = solver.solve(5, Spectrum::kLargest);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_NEAR(lo.values[i], dense[i], 1e-7);
      EXPECT_NEAR(hi.values[i], dense[dense.size() - 1 - i], 1e-7);
      EXPECT_LE(lo.residuals[i], 1e-8 * std::max(1.0, dense.back()));
    }
  }
}

TEST(Lanczos, TridiagonalSolver) {
  std::vector<double> d{2, 2, 2}, z;
  tridiagonal_eigen(d, {-1, -1}, z);
  std::sort(d.begin(), d.end());
  EXPECT_NEAR(d[0], 2 - std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(d[1], 2.0, 1e-12);
  EXPECT_NEAR(d[2], 2 + std::sqrt(2.0), 1e-12);
}

TEST(Ppr, MatchesDenseSolveOnSmallGraphs) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 2 + seed % 11;
    auto gt = oracle::random_gnp(n, 0.35, seed);
    auto g = SparseGraph::from_edges(n, gt.edges());
    std::vector<double> v(n, 0.0);
    std::size_t picks = 1 + rng() % 3;
    for (std::size_t i = 0; i < picks; ++i) v[rng() % n] = 1.0;
    double total = std::accumulate(v.begin(), v.end(), 0.0);
    for (auto& x : v) x /= total;
    auto got = personalized_pagerank(g, v, 0.8).scores;
    auto want = oracle::dense_ppr(g, v, 0.8);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got[i], want[i], 1e-8) << "seed " << seed;
    EXPECT_NEAR(std::accumulate(got.begin(), got.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(Ppr, ScoresSumToOneOnObservedStates) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto [g, s] = random_state(seed, 40, 0.1, 6);
    auto sc = ppr_scores(s, EmbedConfig{});
    EXPECT_NEAR(std::accumulate(sc.begin(), sc.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(Ppr, SymmetricNeighboursTie) {
  std::vector<Edge> e{{0, 1}, {0, 2}};
  auto g = GroundTruthGraph::from_edges(3, e, {1, 0, 0});
  auto s = reset(g, EpisodeConfig{0, 5});
  auto r = rank_ppr(s);
  EXPECT_EQ(score_of(r, 1), score_of(r, 2));
  EXPECT_EQ(r.order, (std::vector<NodeId>{0, 1, 2}));
}

TEST(Ppr, PathDecreasesWithDistance) {
  auto g = oracle::path_graph(3, {1, 0, 0});
  auto s = oracle::play(g, 0, {1});
  auto r = rank_ppr(s);
  EXPECT_GT(score_of(r, 1), score_of(r, 2));
}

TEST(Ppr, NeedsProbedTargetAndValidAlpha) {
  auto g = oracle::path_graph(3, {1, 0, 0});
  auto s = reset(g, EpisodeConfig{0, 5});
  EmbedConfig bad;
  bad.alpha = 1.0;
  EXPECT_THROW(rank_ppr(s, bad), ConfigError);
  bad.alpha = 0.8;
  bad.dim = 0;
  EXPECT_THROW(rank_ppr(s, bad), ConfigError);
}

TEST(Mod, CountsEdgesToProbedTargets) {
  // targets 0,1,2 probed; 3 touches all three, 4 touches one
  std::vector<Edge> e{{0, 1}, {0, 2}, {0, 3}, {1, 3}, {2, 3}, {2, 4}};
  auto g = GroundTruthGraph::from_edges(5, e, {1, 1, 1, 0, 0});
  auto s = oracle::play(g, 0, {1, 2});
  auto r = rank_mod(s);
  EXPECT_EQ(score_of(r, 3), 3.0);
  EXPECT_EQ(score_of(r, 4), 1.0);
  EXPECT_LT(position(r, 3), position(r, 4));
}

TEST(Mod, NoTargetContactMeansIdOrder) {
  // 2 and 3 only touch background node 1
  std::vector<Edge> e{{0, 1}, {1, 2}, {1, 3}};
  auto g = GroundTruthGraph::from_edges(4, e, {1, 0, 0, 0});
  auto s = oracle::play(g, 0, {1});
  auto r = rank_mod(s);
  EXPECT_EQ(score_of(r, 2), 0.0);
  EXPECT_EQ(score_of(r, 3), 0.0);
  EXPECT_LT(position(r, 2), position(r, 3));
  // all-zero scores: pure ascending id order
  auto z = make_ranking(s, std::vector<double>(s.observed_count(), 0.0));
  EXPECT_TRUE(std::is_sorted(z.order.begin(), z.order.end()));
}

TEST(Mod, CliqueMembersOutrankOutsidersAfterTwoProbes) {
  // 4-clique {0,1,2,3} of targets, outsiders 4 and 5 hang off node 0
  std::vector<Edge> e{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}, {0, 4}, {0, 5}};
  auto g = GroundTruthGraph::from_edges(6, e, {1, 1, 1, 1, 0, 0});
  for (NodeId a = 1; a <= 3; ++a)
    for (NodeId b = 1; b <= 3; ++b) {
      if (a == b) continue;
      auto s = oracle::play(g, 0, {a, b});
      auto r = rank_mod(s);
      NodeId rest = 6 - a - b;
      EXPECT_LT(position(r, rest), position(r, 4));
      EXPECT_LT(position(r, rest), position(r, 5));
    }
}

TEST(Pca, MatchesDenseEigenpairs) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto gt = oracle::random_gnp(8, 0.45, seed);
    auto g = SparseGraph::from_edges(8, gt.edges());
    auto emb = pca_embedding(g, 8, 1e-10, 10000);
    auto dense = dense_eigenvalues(oracle::dense_adjacency(g));
    std::vector<double> want;
    for (double l : dense)
      if (std::abs(l) > 1e-7) want.push_back(l);
    std::sort(want.begin(), want.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    ASSERT_EQ(emb.values.size(), want.size()) << "seed " << seed;
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_LE(std::abs(std::abs(emb.values[i]) - std::abs(want[i])), 1e-6 * std::abs(want[i]));
      EXPECT_LE(emb.residuals[i], 1e-6);
    }
    // recompute residuals independently
    auto a = oracle::dense_adjacency(g);
    for (std::size_t j = 0; j < emb.dim; ++j) {
      Eigen::VectorXd v(8);
      for (int i = 0; i < 8; ++i) v[i] = emb.row(std::size_t(i))[j];
      EXPECT_LE((a * v - emb.values[j] * v).norm(), 1e-6 * v.norm());
    }
  }
}

TEST(Pca, EquidistantNodesTieById) {
  std::vector<Edge> e{{0, 1}, {0, 2}, {0, 3}};
  auto g = GroundTruthGraph::from_edges(4, e, {1, 0, 0, 0});
  auto s = reset(g, EpisodeConfig{0, 5});
  auto r = rank_pca(s);
  expect_valid_ranking(s, r);
  EXPECT_EQ(score_of(r, 1), score_of(r, 3));
  EXPECT_LT(position(r, 1), position(r, 2));
  EXPECT_LT(position(r, 2), position(r, 3));
}

TEST(Eigenmap, TrivialVectorIsConstant) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto gt = oracle::random_gnp(20, 0.4, seed);
    auto g = SparseGraph::from_edges(20, gt.edges());
    std::size_t comps = 0;
    g.components(&comps);
    if (comps != 1) continue;
    LanczosSolver solver(20, make_operator(g, SpectralOperator::kLaplacian), {1e-12, 100000});
    auto eig = solver.solve(1, Spectrum::kSmallest);
    EXPECT_NEAR(eig.values[0], 0.0, 1e-8);
    const double c = eig.vectors[0][0];
    for (double x : eig.vectors[0]) EXPECT_NEAR(x, c, 1e-8);
    // the embedding skips it, so every column is orthogonal to the constant
    auto emb = laplacian_embedding(g, 4, Spectrum::kSmallest, 1e-10, 100000);
    for (std::size_t j = 0; j < emb.dim; ++j) {
      double sum = 0.0;
      for (std::size_t v = 0; v < 20; ++v) sum += emb.row(v)[j];
      EXPECT_NEAR(sum, 0.0, 1e-7);
      EXPECT_GT(emb.values[j], 1e-8);
    }
  }
}

TEST(Eigenmap, PathFiedlerVectorIsCosine) {
  auto gt = oracle::path_graph(4);
  auto g = SparseGraph::from_edges(4, gt.edges());
  auto lo = laplacian_embedding(g, 1, Spectrum::kSmallest, 1e-12, 10000);
  auto hi = laplacian_embedding(g, 1, Spectrum::kLargest, 1e-12, 10000);
  auto check = [](const SpectralEmbedding& emb, int k) {
    const double pi = std::numbers::pi;
    EXPECT_NEAR(emb.values[0], 2.0 - 2.0 * std::cos(pi * k / 4.0), 1e-9);
    std::vector<double> want(4);
    double norm = 0.0;
    for (int i = 0; i < 4; ++i) norm += std::pow(want[i] = std::cos(pi * k * (2 * i + 1) / 8.0), 2);
    norm = std::sqrt(norm);
    const double sign = emb.row(0)[0] * want[0] > 0 ? 1.0 : -1.0;
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(sign * emb.row(std::size_t(i))[0], want[i] / norm, 1e-8);
  };
  check(lo, 1);  // Fiedler vector
  check(hi, 3);  // largest Laplacian eigenvalue
}

TEST(Eigenmap, MatchesDenseSolverOnEightNodes) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto gt = oracle::random_gnp(8, 0.5, seed + 100);
    auto g = SparseGraph::from_edges(8, gt.edges());
    auto dense = dense_eigenvalues(oracle::dense_laplacian(g));
    std::size_t comps = 0;
    g.components(&comps);
    auto lo = laplacian_embedding(g, 8, Spectrum::kSmallest, 1e-10, 10000);
    auto hi = laplacian_embedding(g, 8, Spectrum::kLargest, 1e-10, 10000);
    ASSERT_EQ(lo.dim, 8 - comps);
    for (std::size_t i = 0; i < lo.dim; ++i) {
      EXPECT_LE(std::abs(lo.values[i] - dense[comps + i]), 1e-6 * std::max(1.0, dense[comps + i]));
      EXPECT_LE(lo.residuals[i], 1e-6);
    }
    for (std::size_t i = 0; i < hi.dim; ++i) {
      EXPECT_LE(std::abs(hi.values[i] - dense[7 - i]), 1e-6 * std::max(1.0, dense[7 - i]));
      EXPECT_LE(hi.residuals[i], 1e-6);
    }
  }
}

TEST(Rankings, EveryAlgorithmGivesValidPermutation) {
  for (auto alg : {EmbedAlgorithm::kPpr, EmbedAlgorithm::kMod, EmbedAlgorithm::kPca, EmbedAlgorithm::kEigenmap,
                   EmbedAlgorithm::kGlee, EmbedAlgorithm::kNode2vec}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto [g, s] = random_state(seed, 60, 0.08, 5);
      EmbedConfig cfg;
      cfg.algorithm = alg;
      cfg.dim = 8;
      cfg.seed = seed;
      auto r = rank(s, cfg);
      expect_valid_ranking(s, r);
      EXPECT_EQ(r.order, rank(s, cfg).order) << to_string(alg);
    }
  }
}

TEST(Rankings, AlgorithmNames) {
  for (auto alg : {EmbedAlgorithm::kPpr, EmbedAlgorithm::kMod, EmbedAlgorithm::kPca, EmbedAlgorithm::kEigenmap,
                   EmbedAlgorithm::kGlee, EmbedAlgorithm::kNode2vec})
    EXPECT_EQ(parse_embed_algorithm(to_string(alg)), alg);
  EXPECT_EQ(parse_embed_algorithm("ppr"), EmbedAlgorithm::kPpr);
  EXPECT_THROW(parse_embed_algorithm("spectral"), ConfigError);
}

TEST(Node2vec, DeterministicGivenSeed) {
  auto [g, s] = random_state(3, 50, 0.1, 5);
  EmbedConfig cfg;
  cfg.dim = 16;
  auto a = rank_node2vec(s, cfg, 77);
  auto b = rank_node2vec(s, cfg, 77);
  EXPECT_EQ(a.order, b.order);
  EXPECT_EQ(a.scores, b.scores);
}

TEST(Node2vec, MirroredComponentsAreExchangeable) {
  // two copies of the same random graph; target 0 in the first, its mirror in
  // the second. Mean distance to the own-component target should not favour
  // either copy systematically.
  const std::size_t m = 15;
  auto half = oracle::random_gnp(m, 0.3, 5);
  std::vector<Edge> e;
  for (auto [u, v] : half.edges()) {
    e.emplace_back(u, v);
    e.emplace_back(u + m, v + m);
  }
  auto g = SparseGraph::from_edges(2 * m, e);
  Node2VecParams prm;
  prm.dim = 16;
  int first_wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto model = train_node2vec(g, prm, seed);
    auto dist = [&](std::size_t a, std::size_t b) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < prm.dim; ++j) d2 += std::pow(model.row(a)[j] - model.row(b)[j], 2);
      return std::sqrt(d2);
    };
    double da = 0.0, db = 0.0;
    for (std::size_t v = 1; v < m; ++v) da += dist(v, 0), db += dist(v + m, m);
    first_wins += da < db;
  }
  // two-sided sign test at about the 0.3% level
  EXPECT_GE(first_wins, 3);
  EXPECT_LE(first_wins, 17);
}

TEST(Node2vec, CliqueMembersRankAboveBackground) {
  double clique_rank = 0.0, bg_rank = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto bg = gen_sbm({300, 1, {0.02}, 0.0}, seed);
    ImplantReport rep;
    auto g = implant_foreground(bg, ForegroundParams{40, 1, 1.0}, seed, &rep);
    const auto& hosts = rep.host_sets[0];
    auto s = reset(g, EpisodeConfig{hosts[0], 100});
    apply_probe(s, g, hosts[1]);
    apply_probe(s, g, hosts[2]);
    EmbedConfig cfg;
    auto r = rank_node2vec(s, cfg, seed);
    double cr = 0.0, br = 0.0;
    std::size_t cn = 0, bn = 0;
    for (std::size_t i = 0; i < r.order.size(); ++i) {
      NodeId v = r.order[i];
      if (s.is_probed(v)) continue;
      (g.label(v) ? cr : br) += double(i);
      ++(g.label(v) ? cn : bn);
    }
    clique_rank += cr / double(cn);
    bg_rank += br / double(bn);
  }
  EXPECT_LT(clique_rank, bg_rank);
}

TEST(Node2vec, UnvisitedNodesRankLast) {
  // a boundary node whose only known edge is to the seed still trains, so
  // construct the model directly on a graph with an isolated node
  std::vector<Edge> e{{0, 1}, {1, 2}};
  auto g = SparseGraph::from_edges(4, e);
  auto model = train_node2vec(g, Node2VecParams{}, 1);
  EXPECT_FALSE(model.trained(3));
  EXPECT_TRUE(model.trained(0));
}

TEST(Compress, PadsSmallStates) {
  std::vector<Edge> e{{0, 1}, {0, 2}};
  auto g = GroundTruthGraph::from_edges(3, e, {1, 0, 0});
  auto s = reset(g, EpisodeConfig{0, 5});
  auto rs = compress(s, rank_ppr(s), 5);
  EXPECT_EQ(rs.slots[0], 0u);
  EXPECT_EQ(rs.slots[3], RankedState::kPadding);
  EXPECT_EQ(rs.action_mask, (std::vector<std::uint8_t>{0, 1, 1, 0, 0}));
  EXPECT_EQ(rs.label_channel[0], 1.0f);
  EXPECT_EQ(rs.label_channel[1 * 5 + 1], 0.0f);
  for (std::size_t i = 3; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_EQ(rs.adj_channel[i * 5 + j], 0.0f);
      EXPECT_EQ(rs.adj_channel[j * 5 + i], 0.0f);
    }
  EXPECT_EQ(rs.valid_actions(), 2u);
  EXPECT_THROW(compress(s, rank_ppr(s), 0), ConfigError);
}

TEST(Compress, FullSizeIsPermutedAdjacency) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto [g, s] = random_state(seed, 30, 0.15, 4);
    auto r = rank_ppr(s);
    const std::size_t k = s.observed_count();
    auto rs = compress(s, r, k);
    for (std::size_t i = 0; i < k; ++i) {
      EXPECT_EQ(rs.action_mask[i], s.in_boundary(rs.slots[i]) ? 1 : 0);
      auto lbl = s.known_label(rs.slots[i]);
      EXPECT_EQ(rs.label_channel[i * k + i], !lbl ? 0.0f : (*lbl ? 1.0f : -1.0f));
      for (std::size_t j = 0; j < k; ++j) {
        EXPECT_EQ(rs.adj_channel[i * k + j], s.has_known_edge(rs.slots[i], rs.slots[j]) ? 1.0f : 0.0f);
        if (i != j) { EXPECT_EQ(rs.label_channel[i * k + j], 0.0f); }
      }
    }
    // the seed carries all teleport mass initially and stays near the top
    EXPECT_EQ(rs.slots[0], r.order[0]);
    EXPECT_TRUE(rs == compress(s, r, k));
  }
}

// Relabelling node ids leaves the compressed state unchanged once ties are
// broken by the relabelled ids on both sides.
TEST(Compress, InvariantUnderRelabelling) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 25;
    std::vector<std::uint8_t> labels(n);
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng() % 3 == 0);
    labels[0] = 1;
    auto g = oracle::random_gnp(n, 0.2, seed, labels);
    std::vector<NodeId> perm(n), inv(n);
    std::iota(perm.begin(), perm.end(), NodeId{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (NodeId v = 0; v < n; ++v) inv[perm[v]] = v;
    std::vector<Edge> pe;
    for (auto [u, v] : g.edges()) pe.emplace_back(perm[u], perm[v]);
    std::vector<std::uint8_t> pl(n);
    for (NodeId v = 0; v < n; ++v) pl[perm[v]] = labels[v];
    auto h = GroundTruthGraph::from_edges(n, pe, pl);

    auto s = reset(g, EpisodeConfig{0, n});
    auto t = reset(h, EpisodeConfig{perm[0], n});
    for (int i = 0; i < 4 && !s.done(); ++i) {
      NodeId a = s.boundary()[rng() % s.boundary().size()];
      apply_probe(s, g, a);
      apply_probe(t, h, perm[a]);
    }
    for (auto alg : {EmbedAlgorithm::kMod, EmbedAlgorithm::kPpr}) {
      EmbedConfig cfg;
      cfg.algorithm = alg;
      auto scores = alg == EmbedAlgorithm::kMod ? mod_scores(s) : ppr_scores(s, cfg);
      auto t_scores = alg == EmbedAlgorithm::kMod ? mod_scores(t) : ppr_scores(t, cfg);
      std::vector<NodeId> relabelled;
      for (NodeId v : s.observed_nodes()) relabelled.push_back(perm[v]);
      auto via_perm = make_ranking(relabelled, scores, 1e-9);
      for (auto& v : via_perm.order) v = inv[v];
      auto a = compress(s, via_perm, 12);
      auto b = compress(t, make_ranking(t, t_scores, 1e-9), 12);
      EXPECT_EQ(a.adj_channel, b.adj_channel) << "seed " << seed;
      EXPECT_EQ(a.label_channel, b.label_channel);
      EXPECT_EQ(a.action_mask, b.action_mask);
      for (std::size_t i = 0; i < 12; ++i)
        if (a.slots[i] != RankedState::kPadding) { EXPECT_EQ(perm[a.slots[i]], b.slots[i]); }
    }
  }
}

TEST(Compress, TensorLayout) {
  auto [g, s] = random_state(1, 20, 0.2, 3);
  auto rs = compress(s, rank_ppr(s), 8);
  auto x = rs.tensor<double>();
  ASSERT_EQ(x.size(), 2u * 64u);
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_EQ(x[i], rs.adj_channel[i]);
    EXPECT_EQ(x[64 + i], rs.label_channel[i]);
  }
}
