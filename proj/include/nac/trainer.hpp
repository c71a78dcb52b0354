#pragma once

// Actor-critic training: multi-agent rollouts over ranked states, truncated
// discounted targets, an action-valued critic and a clipped policy update.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "nac/approximator.hpp"
#include "nac/common.hpp"
#include "nac/embeddings.hpp"
#include "nac/graph_env.hpp"

namespace nac {

/// One harvesting episode seen through the ranked, truncated view.
class RankedEnv {
 public:
  RankedEnv(std::shared_ptr<const Instance> inst, std::size_t budget, EmbedConfig embed, std::size_t k,
            std::size_t rerank_stride = 1)
      : inst_(std::move(inst)), embed_(std::move(embed)), k_(k), stride_(std::max<std::size_t>(1, rerank_stride)) {
    state_ = reset(inst_->graph, EpisodeConfig{inst_->seed, budget});
    refresh(true);
  }

  const Instance& instance() const { return *inst_; }
  const ObservedState& state() const { return state_; }
  const Ranking& ranking() const { return ranking_; }
  const RankedState& ranked() const { return ranked_; }
  bool done() const { return state_.done(); }
  bool has_action() const { return ranked_.valid_actions() > 0; }

  /// Probes the node in `slot`; returns its label.
  int step(std::size_t slot) {
    require<InvalidActionError>(slot < k_ && ranked_.action_mask[slot], "slot ", slot, " is masked");
    return probe_node(ranked_.slots[slot]);
  }

  /// Best-ranked boundary node; used when every top-k slot is already probed.
  NodeId fallback_node() const {
    for (NodeId v : ranking_.order)
      if (state_.in_boundary(v)) return v;
    throw EpisodeOverError("boundary is empty");
  }

  int probe_node(NodeId v) {
    int r = apply_probe(state_, inst_->graph, v);
    ++since_rank_;
    refresh(false);
    return r;
  }

 private:
  void refresh(bool force) {
    if (state_.done() && !force) return;
    if (force || since_rank_ >= stride_) {
      ranking_ = rank(state_, embed_);
      since_rank_ = 0;
    } else {
      // stale ranking: keep previous order, append newly observed nodes by id
      std::vector<double> score(state_.observed_count(), -1e300);
      for (std::size_t i = 0; i < ranking_.order.size(); ++i)
        score[static_cast<std::size_t>(state_.local_index(ranking_.order[i]))] = -static_cast<double>(i);
      ranking_ = make_ranking(state_, std::move(score));
    }
    ranked_ = compress(state_, ranking_, k_);
  }

  std::shared_ptr<const Instance> inst_;
  EmbedConfig embed_;
  std::size_t k_;
  std::size_t stride_;
  std::size_t since_rank_ = 0;
  ObservedState state_;
  Ranking ranking_;
  RankedState ranked_;
};

struct Transition {
  RankedState s;
  std::size_t a = 0;  // slot index; meaningless when forced
  int r = 0;
  RankedState s_next;
  bool terminal = false;
  bool forced = false;  // no unmasked slot: fallback probe, excluded from losses
  std::size_t agent = 0, episode = 0, t = 0;
  double behavior_prob = 1.0;
  std::uint64_t policy_version = 0;
};

/// On-policy buffer, partitioned per agent and kept in time order.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t agents, std::size_t window) : per_agent_(agents), window_(window) {}

  void add(Transition tr) {
    require(tr.agent < per_agent_.size(), "agent id out of range");
    require(per_agent_[tr.agent].size() < window_, "agent ", tr.agent, " exceeded the update window");
    require(tr.forced || tr.s.action_mask.at(tr.a), "transition action was masked");
    per_agent_[tr.agent].push_back(std::move(tr));
  }
  std::size_t agents() const { return per_agent_.size(); }
  std::size_t capacity() const { return window_ * per_agent_.size(); }
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& a : per_agent_) n += a.size();
    return n;
  }
  bool empty() const { return size() == 0; }
  const std::vector<Transition>& agent(std::size_t i) const { return per_agent_[i]; }
  void clear() {
    for (auto& a : per_agent_) a.clear();
  }

 private:
  std::vector<std::vector<Transition>> per_agent_;
  std::size_t window_;
};

struct Sample {
  const Transition* tr = nullptr;
  double q = 0.0;
};

/// Q_t = Σ_{i<m} γ^i r_{t+i}, m = min(H, steps left in the agent's episode
/// inside this window). With `tail`, a cut made by H or the window end adds
/// γ^m · tail(last included transition); episode ends never bootstrap.
inline std::vector<Sample> compute_targets(const ReplayBuffer& buf, std::size_t H, double gamma,
                                           const std::function<double(const Transition&)>& tail = {}) {
  require<ConfigError>(H >= 1, "return horizon H must be >= 1");
  require<ConfigError>(gamma >= 0.0 && gamma <= 1.0, "discount ", gamma, " outside [0,1]");
  std::vector<Sample> out;
  for (std::size_t ag = 0; ag < buf.agents(); ++ag) {
    const auto& seq = buf.agent(ag);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      double q = 0.0, w = 1.0;
      std::size_t i = t;
      bool ended = false;
      for (; i < seq.size() && i - t < H; ++i) {
        if (i > t && seq[i].episode != seq[t].episode) {
          ended = true;
          break;
        }
        q += w * seq[i].r;
        w *= gamma;
        if (seq[i].terminal) {
          ended = true;
          ++i;
          break;
        }
      }
      if (tail && !ended) q += w * tail(seq[i - 1]);
      if (!seq[t].forced) out.push_back({&seq[t], q});
    }
  }
  return out;
}

template <typename Scalar>
struct LossGrad {
  double loss = 0.0;
  ParamSet<Scalar> grad;
};

/// Mean squared error between Q targets and Q_φ(s_t)[a_t].
template <typename Scalar>
LossGrad<Scalar> value_loss(const Network<Scalar>& net, const ParamSet<Scalar>& phi, std::span<const Sample> batch) {
  require(net.spec().mode == OutputMode::kValues, "value_loss needs a VALUES network");
  LossGrad<Scalar> out{0.0, ParamSet<Scalar>(net.spec())};
  if (batch.empty()) return out;
  const double B = static_cast<double>(batch.size());
  Tape<Scalar> tape;
  std::vector<Scalar> up(net.spec().k, Scalar(0));
  for (const auto& smp : batch) {
    auto x = smp.tr->s.template tensor<Scalar>();
    auto y = net.forward(phi, x, smp.tr->s.action_mask, &tape);
    const double err = smp.q - static_cast<double>(y[smp.tr->a]);
    out.loss += err * err / B;
    std::fill(up.begin(), up.end(), Scalar(0));
    up[smp.tr->a] = static_cast<Scalar>(-2.0 * err / B);
    net.backward(phi, tape, up, out.grad);
  }
  return out;
}

enum class AdvantageMode { kMean, kSum };

/// Q(s,a) minus the mean (or the plain sum) of Q over unmasked slots.
template <typename Scalar>
double advantage_from_values(std::span<const Scalar> q, std::span<const std::uint8_t> mask, std::size_t a,
                             AdvantageMode mode) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (mask[i]) {
      sum += static_cast<double>(q[i]);
      ++n;
    }
  require(n > 0 && mask[a], "advantage of a masked action");
  double baseline = mode == AdvantageMode::kMean ? sum / static_cast<double>(n) : sum;
  return static_cast<double>(q[a]) - baseline;
}

template <typename Scalar>
double advantage(const Network<Scalar>& net, const ParamSet<Scalar>& phi, const RankedState& s, std::size_t a,
                 AdvantageMode mode = AdvantageMode::kMean) {
  auto q = net.forward(phi, s.tensor<Scalar>(), s.action_mask);
  return advantage_from_values<Scalar>(q, s.action_mask, a, mode);
}

template <typename Scalar>
std::vector<double> advantages(const Network<Scalar>& net, const ParamSet<Scalar>& phi, std::span<const Sample> batch,
                               AdvantageMode mode = AdvantageMode::kMean) {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const auto& smp : batch) out.push_back(advantage(net, phi, smp.tr->s, smp.tr->a, mode));
  return out;
}

template <typename Scalar>
struct PolicySnapshot {
  ParamSet<Scalar> params;
  std::uint64_t version = 0;
};

template <typename Scalar>
struct PpoResult {
  double loss = 0.0;       // negated objective
  double objective = 0.0;  // mean clipped surrogate + c · mean entropy
  double entropy = 0.0;    // mean policy entropy
  double entropy_ratio = 0.0;  // mean of S / log(#unmasked); 1 for a single unmasked slot
  double clip_fraction = 0.0;
  ParamSet<Scalar> grad;  // gradient of `loss`
};

/// Clipped surrogate: clipped term min(ρÂ, clip(ρ, 1−ε, 1+ε)Â).
inline double clipped_surrogate(double rho, double adv, double epsilon) {
  return std::min(rho * adv, std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon) * adv);
}

/// Clipped policy objective with entropy bonus; returns the gradient of its
/// negation. Behaviour probabilities are the ones recorded at rollout time
/// under `old`, whose version every sample must carry.
template <typename Scalar>
PpoResult<Scalar> ppo_loss(const Network<Scalar>& net, const ParamSet<Scalar>& theta, const PolicySnapshot<Scalar>& old,
                           std::span<const Sample> batch, std::span<const double> adv, double epsilon, double c) {
  require(net.spec().mode == OutputMode::kLogits, "ppo_loss needs a LOGITS network");
  require(adv.size() == batch.size(), "one advantage per sample required");
  PpoResult<Scalar> out{0, 0, 0, 0, 0, ParamSet<Scalar>(net.spec())};
  if (batch.empty()) return out;
  const double B = static_cast<double>(batch.size());
  const std::size_t k = net.spec().k;
  Tape<Scalar> tape;
  std::vector<Scalar> up(k);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& tr = *batch[i].tr;
    require(tr.policy_version == old.version, "transition from policy version ", tr.policy_version,
            " used with snapshot ", old.version);
    require(tr.behavior_prob > 0.0, "behaviour probability of the taken action is zero");
    auto logits = net.forward(theta, tr.s.tensor<Scalar>(), tr.s.action_mask, &tape);
    auto p = softmax_policy<Scalar>(logits, tr.s.action_mask);
    const double rho = p[tr.a] / tr.behavior_prob;
    const double A = adv[i];
    const double unclipped = rho * A;
    const double clipped = std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon) * A;
    const bool active = unclipped <= clipped;  // gradient flows through ρ only on this branch
    if (!active) out.clip_fraction += 1.0 / B;
    const double S = policy_entropy(p);
    const std::size_t n_valid = tr.s.valid_actions();
    out.entropy += S / B;
    out.entropy_ratio += (n_valid > 1 ? S / std::log(double(n_valid)) : 1.0) / B;
    out.objective += (std::min(unclipped, clipped) + c * S) / B;
    for (std::size_t j = 0; j < k; ++j) {
      if (!tr.s.action_mask[j]) {
        up[j] = Scalar(0);
        continue;
      }
      double g = 0.0;  // d objective_i / d z_j
      if (active) g += A * rho * ((j == tr.a ? 1.0 : 0.0) - p[j]);
      if (c != 0.0 && p[j] > 0.0) g += c * (-p[j] * (std::log(p[j]) + S));
      up[j] = static_cast<Scalar>(-g / B);
    }
    net.backward(theta, tape, up, out.grad);
  }
  out.loss = -out.objective;
  return out;
}

/// Plain score-function estimator: gradient of −mean Â·log π(a|s).
template <typename Scalar>
LossGrad<Scalar> vanilla_policy_gradient(const Network<Scalar>& net, const ParamSet<Scalar>& theta,
                                         std::span<const Sample> batch, std::span<const double> adv) {
  LossGrad<Scalar> out{0.0, ParamSet<Scalar>(net.spec())};
  const double B = static_cast<double>(batch.size());
  Tape<Scalar> tape;
  std::vector<Scalar> up(net.spec().k);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& tr = *batch[i].tr;
    auto logits = net.forward(theta, tr.s.tensor<Scalar>(), tr.s.action_mask, &tape);
    auto p = softmax_policy<Scalar>(logits, tr.s.action_mask);
    out.loss -= adv[i] * std::log(p[tr.a]) / B;
    for (std::size_t j = 0; j < up.size(); ++j)
      up[j] = tr.s.action_mask[j] ? static_cast<Scalar>(-adv[i] * ((j == tr.a ? 1.0 : 0.0) - p[j]) / B) : Scalar(0);
    net.backward(theta, tape, up, out.grad);
  }
  return out;
}

enum class ActionSelection { kSample, kGreedy };

inline std::size_t sample_action(std::span<const double> probs, Rng& rng) {
  std::discrete_distribution<std::size_t> d(probs.begin(), probs.end());
  return d(rng);
}

inline std::size_t greedy_action(std::span<const double> probs) {
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

struct TrainConfig {
  std::size_t T = 32;
  std::size_t H = 4;
  double c = 0.2;
  double epsilon = 0.1;
  double gamma = 0.1;
  double lambda_lr = 1e-4;
  std::size_t agents = 8;
  std::size_t epochs = 100;
  std::size_t k = 64;
  std::size_t channels = 64;
  std::size_t budget = 120;
  EmbedConfig embed{};
  AdvantageMode advantage_mode = AdvantageMode::kMean;
  bool bootstrap = false;
  std::size_t rerank_stride = 1;
  ActionSelection eval_selection = ActionSelection::kGreedy;
  bool online_updates = true;
  std::uint64_t seed = 1;
  std::string diagnostic_path;  // batch dump on non-finite loss

  static TrainConfig offline() { return {}; }
  static TrainConfig online() {
    TrainConfig c;
    c.T = 1;
    c.H = 1;
    c.gamma = 1.0;
    c.epsilon = 0.2;
    c.c = 0.0;
    c.lambda_lr = 1e-3;
    c.agents = 1;
    return c;
  }

  NetSpec net_spec(OutputMode mode) const { return NetSpec{k, 2, channels, 3, 3, mode}; }

  void validate() const {
    require<ConfigError>(T >= 1 && H >= 1 && agents >= 1 && k >= 1 && channels >= 1 && budget >= 1,
                         "T, H, agents, k, channels and budget must be positive");
    require<ConfigError>(epsilon > 0.0 && epsilon < 1.0, "PPO clip epsilon=", epsilon, " must lie in (0,1)");
    require<ConfigError>(c >= 0.0, "entropy coefficient must be non-negative");
    require<ConfigError>(gamma >= 0.0 && gamma <= 1.0, "gamma=", gamma, " outside [0,1]");
    require<ConfigError>(lambda_lr > 0.0, "learning rate must be positive");
    embed.validate();
  }
};

struct EpisodeStats {
  std::size_t agent = 0, episode = 0;
  double ret = 0.0;
  std::size_t targets_found = 0;
};

/// One rollout worker: owns its current instance, environment and rng.
struct Agent {
  std::size_t id = 0;
  InstanceFactory factory;
  std::uint64_t seed = 0;
  Rng rng;
  std::size_t episode = 0;
  double ret = 0.0;
  std::size_t t = 0;
  std::optional<RankedEnv> env;

  Agent(std::size_t id_, InstanceFactory f, std::uint64_t seed_) : id(id_), factory(std::move(f)), seed(seed_), rng(seed_) {}

  void start_episode(const TrainConfig& cfg) {
    for (std::size_t tries = 0;; ++tries) {
      require<GenerationError>(tries < 100, "agent ", id, ": no instance with a usable boundary in 100 draws");
      auto inst = std::make_shared<const Instance>(factory(derive_seed(seed, episode * 1000 + tries)));
      env.emplace(inst, cfg.budget, cfg.embed, cfg.k, cfg.rerank_stride);
      if (!env->done()) break;
    }
    ret = 0.0;
    t = 0;
  }
};

/// Collects up to T steps per agent under the snapshot policy. Finished
/// episodes are appended to `finished` and replaced by fresh instances.
template <typename Scalar>
ReplayBuffer rollout(std::vector<Agent>& agents, const Network<Scalar>& net, const PolicySnapshot<Scalar>& old,
                     const TrainConfig& cfg, std::vector<EpisodeStats>* finished = nullptr) {
  ReplayBuffer buf(agents.size(), cfg.T);
  for (auto& ag : agents) {
    for (std::size_t step = 0; step < cfg.T; ++step) {
      if (!ag.env || ag.env->done()) {
        if (ag.env) ++ag.episode;
        ag.start_episode(cfg);
      }
      Transition tr;
      tr.s = ag.env->ranked();
      tr.agent = ag.id;
      tr.episode = ag.episode;
      tr.t = ag.t;
      tr.policy_version = old.version;
      if (ag.env->has_action()) {
        auto logits = net.forward(old.params, tr.s.tensor<Scalar>(), tr.s.action_mask);
        auto p = softmax_policy<Scalar>(logits, tr.s.action_mask);
        tr.a = sample_action(p, ag.rng);
        tr.behavior_prob = p[tr.a];
        tr.r = ag.env->step(tr.a);
      } else {
        tr.forced = true;
        tr.r = ag.env->probe_node(ag.env->fallback_node());
      }
      tr.s_next = ag.env->ranked();
      tr.terminal = ag.env->done();
      ag.ret += tr.r;
      ++ag.t;
      if (tr.terminal && finished)
        finished->push_back({ag.id, ag.episode, ag.ret, ag.env->state().targets_found()});
      buf.add(std::move(tr));
    }
  }
  return buf;
}

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t episodes = 0;
  double mean_return = std::numeric_limits<double>::quiet_NaN();
  double mean_targets_found = std::numeric_limits<double>::quiet_NaN();
  double policy_entropy = 0.0;
  double entropy_ratio = 0.0;
  double value_loss = 0.0;
};

inline void write_epoch_header(std::ostream& os) {
  os << "epoch,episodes,mean_return,mean_targets_found,policy_entropy,entropy_ratio,value_loss\n";
}

inline void write_epoch_row(std::ostream& os, const EpochLog& e) {
  auto cell = [&](double v) {
    if (std::isfinite(v)) os << v;
  };
  os << e.epoch << ',' << e.episodes << ',';
  cell(e.mean_return);
  os << ',';
  cell(e.mean_targets_found);
  os << ',' << e.policy_entropy << ',' << e.entropy_ratio << ',' << e.value_loss << '\n';
}

/// Policy and value parameters plus their optimiser state.
struct ActorCritic {
  NetSpec policy_spec, value_spec;
  ParamSet<float> theta, phi;
  AdamState<float> adam_theta, adam_phi;
  std::uint64_t version = 0;

  explicit ActorCritic(const TrainConfig& cfg)
      : policy_spec(cfg.net_spec(OutputMode::kLogits)),
        value_spec(cfg.net_spec(OutputMode::kValues)),
        theta(init_params<float>(policy_spec, derive_seed(cfg.seed, 0x7e7a))),
        phi(init_params<float>(value_spec, derive_seed(cfg.seed, 0xf1))),
        adam_theta(theta.size(), cfg.lambda_lr),
        adam_phi(phi.size(), cfg.lambda_lr) {}

  void save(const std::string& prefix) const {
    save_checkpoint(prefix + "policy.bin", policy_spec, theta);
    save_checkpoint(prefix + "value.bin", value_spec, phi);
  }

  static ActorCritic load(const std::string& prefix, const TrainConfig& cfg) {
    ActorCritic ac(cfg);
    ac.theta = load_checkpoint<float>(prefix + "policy.bin", ac.policy_spec);
    ac.phi = load_checkpoint<float>(prefix + "value.bin", ac.value_spec);
    return ac;
  }
};

namespace detail {

inline void dump_batch(const std::string& path, std::span<const Sample> batch, std::span<const double> adv) {
  std::ofstream os(path);
  os << "agent,episode,t,action,reward,target,advantage,behavior_prob\n";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& tr = *batch[i].tr;
    os << tr.agent << ',' << tr.episode << ',' << tr.t << ',' << tr.a << ',' << tr.r << ',' << batch[i].q << ','
       << (i < adv.size() ? adv[i] : std::numeric_limits<double>::quiet_NaN()) << ',' << tr.behavior_prob << '\n';
  }
}

inline void check_finite(double loss, const char* what, const TrainConfig& cfg, std::span<const Sample> batch,
                         std::span<const double> adv) {
  if (std::isfinite(loss)) return;
  std::string where = "(set diagnostic_path to dump the batch)";
  if (!cfg.diagnostic_path.empty()) {
    dump_batch(cfg.diagnostic_path, batch, adv);
    where = "batch written to " + cfg.diagnostic_path;
  }
  throw NumericError(concat("non-finite ", what, " on a batch of ", batch.size(), " samples; ", where));
}

}  // namespace detail

/// Value update, advantages from the refreshed critic, policy update, then
/// the behaviour snapshot is refreshed. Returns (value loss, ppo result).
inline std::pair<double, PpoResult<float>> update_actor_critic(ActorCritic& ac, const Network<float>& pnet,
                                                               const Network<float>& vnet, const ReplayBuffer& buf,
                                                               const TrainConfig& cfg) {
  std::function<double(const Transition&)> tail;
  if (cfg.bootstrap)
    tail = [&](const Transition& last) {
      if (last.s_next.valid_actions() == 0) return 0.0;
      auto q = vnet.forward(ac.phi, last.s_next.tensor<float>(), last.s_next.action_mask);
      double sum = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i)
        if (last.s_next.action_mask[i]) sum += q[i];
      return sum / static_cast<double>(last.s_next.valid_actions());
    };
  auto batch = compute_targets(buf, cfg.H, cfg.gamma, tail);
  if (batch.empty()) return {0.0, PpoResult<float>{0, 0, 0, 0, 0, ParamSet<float>(ac.policy_spec)}};
  auto vl = value_loss(vnet, ac.phi, batch);
  detail::check_finite(vl.loss, "value loss", cfg, batch, {});
  adam_step(ac.adam_phi, ac.phi, vl.grad);

  auto adv = advantages(vnet, ac.phi, batch, cfg.advantage_mode);
  PolicySnapshot<float> old{{}, ac.version};  // behaviour probabilities were recorded at rollout
  auto pr = ppo_loss(pnet, ac.theta, old, batch, adv, cfg.epsilon, cfg.c);
  detail::check_finite(pr.loss, "policy loss", cfg, batch, adv);
  adam_step(ac.adam_theta, ac.theta, pr.grad);
  ++ac.version;
  return {vl.loss, std::move(pr)};
}

struct TrainResult {
  ActorCritic model;
  std::vector<EpochLog> log;
};

/// Offline training. `log` (if given) receives one CSV row per epoch, where
/// an epoch is one rollout window of T steps for each of the N agents
/// followed by one batch update.
inline TrainResult train_offline(const TrainConfig& cfg, const InstanceFactory& factory, std::ostream* log = nullptr,
                                 const std::function<void(const EpochLog&)>& on_epoch = {}) {
  cfg.validate();
  Network<float> pnet(cfg.net_spec(OutputMode::kLogits)), vnet(cfg.net_spec(OutputMode::kValues));
  TrainResult res{ActorCritic(cfg), {}};
  std::vector<Agent> agents;
  for (std::size_t i = 0; i < cfg.agents; ++i) agents.emplace_back(i, factory, derive_seed(cfg.seed, 1000 + i));
  if (log) write_epoch_header(*log);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    PolicySnapshot<float> old{res.model.theta, res.model.version};
    std::vector<EpisodeStats> finished;
    auto buf = rollout(agents, pnet, old, cfg, &finished);
    auto [vloss, pr] = update_actor_critic(res.model, pnet, vnet, buf, cfg);
    EpochLog e;
    e.epoch = epoch;
    e.episodes = finished.size();
    if (!finished.empty()) {
      e.mean_return = e.mean_targets_found = 0.0;
      for (const auto& f : finished) {
        e.mean_return += f.ret / static_cast<double>(finished.size());
        e.mean_targets_found += static_cast<double>(f.targets_found) / static_cast<double>(finished.size());
      }
    }
    e.policy_entropy = pr.entropy;
    e.entropy_ratio = pr.entropy_ratio;
    e.value_loss = vloss;
    if (log) {
      write_epoch_row(*log, e);
      log->flush();
    }
    if (on_epoch) on_epoch(e);
    res.log.push_back(e);
  }
  return res;
}


/// Single-agent harvesting of one instance to budget. With online updates
/// enabled, each probe is followed by a T=1 actor-critic update.
inline DiscoveryCurve evaluate_online(ActorCritic model, const Instance& inst, const TrainConfig& cfg) {
  cfg.validate();
  Network<float> pnet(model.policy_spec), vnet(model.value_spec);
  require<ConfigError>(model.policy_spec == cfg.net_spec(OutputMode::kLogits), "checkpoint does not match k/channels");
  model.adam_theta = AdamState<float>(model.theta.size(), cfg.lambda_lr);
  model.adam_phi = AdamState<float>(model.phi.size(), cfg.lambda_lr);
  auto shared = std::make_shared<const Instance>(inst);
  RankedEnv env(shared, cfg.budget, cfg.embed, cfg.k, cfg.rerank_stride);
  Rng rng(derive_seed(cfg.seed, 0xe7a1));
  DiscoveryCurve curve;
  ReplayBuffer buf(1, cfg.T);
  while (!env.done()) {
    Transition tr;
    tr.s = env.ranked();
    tr.t = env.state().step();
    tr.policy_version = model.version;
    NodeId node;
    if (env.has_action()) {
      auto logits = pnet.forward(model.theta, tr.s.tensor<float>(), tr.s.action_mask);
      auto p = softmax_policy<float>(logits, tr.s.action_mask);
      tr.a = cfg.eval_selection == ActionSelection::kGreedy ? greedy_action(p) : sample_action(p, rng);
      tr.behavior_prob = p[tr.a];
      node = tr.s.slots[tr.a];
      tr.r = env.step(tr.a);
    } else {
      tr.forced = true;
      node = env.fallback_node();
      tr.r = env.probe_node(node);
    }
    tr.s_next = env.ranked();
    tr.terminal = env.done();
    curve.actions.push_back(node);
    curve.rewards.push_back(tr.r);
    curve.targets_found.push_back(env.state().targets_found());
    if (cfg.online_updates) {
      buf.add(std::move(tr));
      if (buf.agent(0).size() == cfg.T || env.done()) {
        update_actor_critic(model, pnet, vnet, buf, cfg);
        buf.clear();
      }
    }
  }
  curve.final_state = env.state();
  return curve;
}

}  // namespace nac
