#pragma once

// node2vec: second-order biased random walks followed by skip-gram training
// with negative sampling.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "nac/common.hpp"
#include "nac/ranking.hpp"

namespace nac {

struct Node2VecParams {
  std::size_t dim = 64;
  std::size_t walks_per_node = 5;
  std::size_t walk_length = 40;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;  // a single pass leaves low-degree nodes near their init
  double learning_rate = 0.025;
  double p = 1.0;  // return parameter
  double q = 1.0;  // in-out parameter
};

struct Node2VecModel {
  std::size_t dim = 0;
  std::vector<float> vectors;            // size() * dim, row per node
  std::vector<std::size_t> pair_counts;  // training pairs seen per node

  std::span<const float> row(std::size_t v) const { return {vectors.data() + v * dim, dim}; }
  bool trained(std::size_t v) const { return pair_counts[v] > 0; }
};

inline std::vector<std::vector<std::uint32_t>> node2vec_walks(const SparseGraph& g, const Node2VecParams& prm,
                                                              Rng& rng) {
  const std::size_t n = g.size();
  std::vector<std::vector<std::uint32_t>> sorted(n);
  for (std::size_t v = 0; v < n; ++v) {
    auto nb = g.neighbors(v);
    sorted[v].assign(nb.begin(), nb.end());
    std::sort(sorted[v].begin(), sorted[v].end());
  }
  const double w_return = 1.0 / prm.p, w_out = 1.0 / prm.q;
  const double w_max = std::max({w_return, 1.0, w_out});
  const bool biased = prm.p != 1.0 || prm.q != 1.0;

  std::vector<std::uint32_t> starts(n);
  std::iota(starts.begin(), starts.end(), 0u);
  std::vector<std::vector<std::uint32_t>> walks;
  walks.reserve(n * prm.walks_per_node);
  for (std::size_t round = 0; round < prm.walks_per_node; ++round) {
    std::shuffle(starts.begin(), starts.end(), rng);
    for (auto s : starts) {
      std::vector<std::uint32_t> walk{s};
      walk.reserve(prm.walk_length);
      while (walk.size() < prm.walk_length) {
        const auto& nb = sorted[walk.back()];
        if (nb.empty()) break;
        if (!biased || walk.size() == 1) {
          walk.push_back(nb[uniform_below(rng, nb.size())]);
          continue;
        }
        const auto prev = walk[walk.size() - 2];
        const auto& prev_nb = sorted[prev];
        while (true) {  // rejection sampling against the unnormalised bias
          auto x = nb[uniform_below(rng, nb.size())];
          double w = x == prev ? w_return : (std::binary_search(prev_nb.begin(), prev_nb.end(), x) ? 1.0 : w_out);
          if (uniform01(rng) * w_max < w) {
            walk.push_back(x);
            break;
          }
        }
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

inline constexpr std::size_t kNoiseSlotsPerNode = 100;

// Multiply-shift range reduction; its bias is below 2^-40 for the table sizes used here.
inline std::size_t fast_below(Rng& rng, std::size_t bound) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * bound) >> 64);
}

namespace detail {

template <int D>
void sgns_epochs(const std::vector<std::vector<std::uint32_t>>& walks, std::size_t tokens,
                 const std::vector<std::uint32_t>& noise_table, const Node2VecParams& prm, Node2VecModel& model,
                 std::vector<float>& context, Rng& rng) {
  using Vec = Eigen::Matrix<float, D, 1>;
  using Row = Eigen::Map<Vec>;
  const auto dim = static_cast<Eigen::Index>(prm.dim);
  Vec grad(dim);
  const double total = static_cast<double>(tokens * prm.epochs);
  double processed = 0.0;
  for (std::size_t epoch = 0; epoch < prm.epochs; ++epoch) {
    for (const auto& walk : walks) {
      for (std::size_t i = 0; i < walk.size(); ++i, processed += 1.0) {
        const float lr = static_cast<float>(prm.learning_rate * std::max(1e-4, 1.0 - processed / total));
        const std::size_t shrink = fast_below(rng, prm.window);
        const std::size_t reach = prm.window - shrink;
        const std::size_t lo = i >= reach ? i - reach : 0;
        const std::size_t hi = std::min(walk.size() - 1, i + reach);
        const auto center = walk[i];
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          Row in(&model.vectors[walk[j] * prm.dim], dim);
          grad.setZero();
          for (std::size_t s = 0; s <= prm.negatives; ++s) {
            std::uint32_t out_node;
            float label;
            if (s == 0) {
              out_node = center;
              label = 1.0f;
            } else {
              out_node = noise_table[fast_below(rng, noise_table.size())];
              if (out_node == center) continue;
              label = 0.0f;
            }
            Row out(&context[out_node * prm.dim], dim);
            const float f = in.dot(out);
            const float sig = 1.0f / (1.0f + std::exp(-std::clamp(f, -6.0f, 6.0f)));
            const float gscale = (label - sig) * lr;
            grad.noalias() += gscale * out;
            out.noalias() += gscale * in;
          }
          in += grad;
          ++model.pair_counts[walk[j]];
          ++model.pair_counts[center];
        }
      }
    }
  }
}

}  // namespace detail

inline Node2VecModel train_node2vec(const SparseGraph& g, const Node2VecParams& prm, std::uint64_t rng_seed) {
  require<ConfigError>(prm.dim >= 1, "node2vec dimension must be positive");
  require<ConfigError>(prm.p > 0.0 && prm.q > 0.0, "node2vec p and q must be positive");
  const std::size_t n = g.size();
  Rng rng(rng_seed);
  auto walks = node2vec_walks(g, prm, rng);

  Node2VecModel model;
  model.dim = prm.dim;
  model.pair_counts.assign(n, 0);
  std::vector<double> freq(n, 0.0);
  std::size_t tokens = 0;
  for (const auto& w : walks) {
    for (auto v : w) freq[v] += 1.0;
    tokens += w.size();
  }
  // unigram^0.75 noise table, as in word2vec
  for (auto& f : freq) f = std::pow(f, 0.75);
  const double mass = std::accumulate(freq.begin(), freq.end(), 0.0);
  std::vector<std::uint32_t> noise_table;
  noise_table.reserve(kNoiseSlotsPerNode * n);
  for (std::uint32_t v = 0; v < n; ++v) {
    const auto slots = static_cast<std::size_t>(std::llround(freq[v] / mass * double(kNoiseSlotsPerNode * n)));
    noise_table.insert(noise_table.end(), std::max<std::size_t>(slots, freq[v] > 0.0 ? 1 : 0), v);
  }

  std::uniform_real_distribution<float> init(-0.5f / static_cast<float>(prm.dim), 0.5f / static_cast<float>(prm.dim));
  model.vectors.resize(n * prm.dim);
  for (auto& x : model.vectors) x = init(rng);
  std::vector<float> context(n * prm.dim, 0.0f);
  // the fixed-size path lets Eigen unroll the row kernels for the default width
  if (prm.dim == 64)
    detail::sgns_epochs<64>(walks, tokens, noise_table, prm, model, context, rng);
  else
    detail::sgns_epochs<Eigen::Dynamic>(walks, tokens, noise_table, prm, model, context, rng);
  return model;
}

}  // namespace nac
