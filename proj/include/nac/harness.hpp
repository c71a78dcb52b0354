#pragma once

// Instance presets, hierarchical JSON configuration, experiment runs and the
// embedding benchmark grid.

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nac/baselines.hpp"
#include "nac/common.hpp"
#include "nac/embeddings.hpp"
#include "nac/generators.hpp"
#include "nac/graph_env.hpp"
#include "nac/metrics.hpp"
#include "nac/trainer.hpp"

namespace nac {

inline constexpr const char* kSoftwareVersion = "nac 1.0.0";

using Json = nlohmann::ordered_json;

enum class BackgroundKind { kSbm, kLfr };

struct GeneratorConfig {
  std::string name = "two-clique";
  BackgroundKind kind = BackgroundKind::kSbm;
  SbmParams sbm{2000, 2, {0.25}, 0.01};
  LfrParams lfr{};
  ForegroundParams fg{40, 2, 1.0, 2, 2, PlacementMode::kStrict, -1};
};

/// Named generator presets.
inline GeneratorConfig preset(const std::string& name) {
  GeneratorConfig g;
  g.name = name;
  if (name == "two-clique") return g;
  if (name == "embedbench") {  // one grid cell; r and p_f are overridden per cell
    g.fg = {40, 2, 1.0, 2, 3, PlacementMode::kBestEffort, -1};
    return g;
  }
  if (name == "fig4a" || name == "fig4b") {
    g.sbm = {4000, 2, {0.05}, 0.005};
    g.fg = {40, 2, name == "fig4a" ? 1.0 : 0.2, 2, 3, PlacementMode::kStrict, -1};
    return g;
  }
  if (name == "fig4a-small") {
    g.sbm = {800, 2, {0.05}, 0.005};
    g.fg = {20, 2, 1.0, 2, 2, PlacementMode::kStrict, -1};
    return g;
  }
  if (name == "trivial") {
    g.sbm = {200, 2, {0.05}, 0.01};
    g.fg = {10, 1, 1.0, 0, 0, PlacementMode::kStrict, -1};
    return g;
  }
  if (name == "lfr") {
    g.kind = BackgroundKind::kLfr;
    g.lfr.n = 4000;
    g.fg = {40, 2, 1.0, 2, 3, PlacementMode::kBestEffort, -1};
    return g;
  }
  throw ConfigError("unknown generator preset '" + name + "'");
}

/// Background, implanted anomalies, and a seed drawn uniformly from the
/// first anomaly.
inline Instance make_instance(const GeneratorConfig& g, std::uint64_t seed) {
  GroundTruthGraph bg = g.kind == BackgroundKind::kSbm ? gen_sbm(g.sbm, derive_seed(seed, 1))
                                                       : gen_lfr(g.lfr, derive_seed(seed, 1));
  ImplantReport rep;
  Instance inst;
  inst.graph = implant_foreground(bg, g.fg, derive_seed(seed, 2), &rep);
  inst.anomalies = rep.host_sets;
  Rng rng(derive_seed(seed, 3));
  const auto& first = inst.anomalies.front();
  inst.seed = first[uniform_below(rng, first.size())];
  inst.id = concat(g.name, '-', std::hex, std::setw(16), std::setfill('0'), seed);
  return inst;
}

inline InstanceFactory make_factory(GeneratorConfig g) {
  return [g = std::move(g)](std::uint64_t seed) { return make_instance(g, seed); };
}

// ---------------------------------------------------------------- config

struct DatasetConfig {
  std::string edges;
  std::string labels;  // empty: synthetic targets from the generator's foreground
  std::optional<std::string> seed_node;  // original id; default: random target
};

enum class AgentKind { kNac, kMod, kPpr, kNol, kRandom };

inline AgentKind parse_agent(const std::string& s) {
  if (s == "nac") return AgentKind::kNac;
  if (s == "mod") return AgentKind::kMod;
  if (s == "ppr") return AgentKind::kPpr;
  if (s == "nol") return AgentKind::kNol;
  if (s == "random") return AgentKind::kRandom;
  throw ConfigError("unknown agent '" + s + "' (nac, mod, ppr, nol, random)");
}

struct ExperimentConfig {
  GeneratorConfig generator = preset("two-clique");
  std::optional<DatasetConfig> dataset;
  EmbedConfig embed{};
  TrainConfig train = TrainConfig::offline();
  TrainConfig online = TrainConfig::online();
  AgentKind agent = AgentKind::kPpr;
  std::string checkpoint;  // directory holding policy.bin / value.bin
  std::size_t budget = 120;
  std::size_t repetitions = 10;
  std::uint64_t seed = 1;
  std::string output = "out";
  bool score_embedding = true;  // per-step accuracy/entropy along agent runs

  // embedbench grid
  std::vector<double> grid_r{0.01, 0.025, 0.05, 0.075, 0.1};
  std::vector<double> grid_pt{0.25, 0.5, 0.75, 1.0};
  std::size_t grid_reps = 10;
  std::vector<EmbedAlgorithm> algorithms{EmbedAlgorithm::kPpr,      EmbedAlgorithm::kMod,  EmbedAlgorithm::kPca,
                                         EmbedAlgorithm::kEigenmap, EmbedAlgorithm::kGlee, EmbedAlgorithm::kNode2vec};
  std::size_t score_steps = 0;  // 0: score every traversal step

  Json raw;  // resolved configuration

  void validate() const {
    require<ConfigError>(repetitions >= 1, "repetitions must be >= 1");
    require<ConfigError>(budget >= 1, "budget must be >= 1");
    if (dataset) {
      require<ConfigError>(std::filesystem::exists(dataset->edges), "edge list ", dataset->edges, " not found");
      if (!dataset->labels.empty())
        require<ConfigError>(std::filesystem::exists(dataset->labels), "label file ", dataset->labels, " not found");
    }
    if (agent == AgentKind::kNac) {
      require<ConfigError>(!checkpoint.empty(), "agent nac needs a checkpoint directory");
      require<ConfigError>(std::filesystem::exists(checkpoint + "/policy.bin"), "checkpoint ", checkpoint,
                           "/policy.bin not found");
    }
    embed.validate();
  }
};

namespace detail {

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(concat("config key '", key, "': ", e.what()));
  }
}

inline void read_embed(const Json& j, EmbedConfig& e) {
  if (j.contains("algorithm")) e.algorithm = parse_embed_algorithm(j.at("algorithm").get<std::string>());
  read(j, "alpha", e.alpha);
  read(j, "dim", e.dim);
  read(j, "ppr_tol", e.ppr_tol);
  read(j, "eigen_tol", e.eigen_tol);
  read(j, "max_iter", e.max_iter);
  read(j, "seed", e.seed);
  if (j.contains("node2vec")) {
    const auto& n = j.at("node2vec");
    read(n, "walks_per_node", e.node2vec.walks_per_node);
    read(n, "walk_length", e.node2vec.walk_length);
    read(n, "window", e.node2vec.window);
    read(n, "negatives", e.node2vec.negatives);
    read(n, "epochs", e.node2vec.epochs);
    read(n, "learning_rate", e.node2vec.learning_rate);
    read(n, "p", e.node2vec.p);
    read(n, "q", e.node2vec.q);
  }
}

inline Json write_embed(const EmbedConfig& e) {
  return Json{{"algorithm", to_string(e.algorithm)},
              {"alpha", e.alpha},
              {"dim", e.dim},
              {"ppr_tol", e.ppr_tol},
              {"eigen_tol", e.eigen_tol},
              {"max_iter", e.max_iter},
              {"seed", e.seed},
              {"node2vec",
               {{"walks_per_node", e.node2vec.walks_per_node},
                {"walk_length", e.node2vec.walk_length},
                {"window", e.node2vec.window},
                {"negatives", e.node2vec.negatives},
                {"epochs", e.node2vec.epochs},
                {"learning_rate", e.node2vec.learning_rate},
                {"p", e.node2vec.p},
                {"q", e.node2vec.q}}}};
}

inline void read_train(const Json& j, TrainConfig& t) {
  read(j, "T", t.T);
  read(j, "H", t.H);
  read(j, "c", t.c);
  read(j, "epsilon", t.epsilon);
  read(j, "gamma", t.gamma);
  read(j, "lambda_lr", t.lambda_lr);
  read(j, "agents", t.agents);
  read(j, "epochs", t.epochs);
  read(j, "k", t.k);
  read(j, "channels", t.channels);
  read(j, "budget", t.budget);
  read(j, "bootstrap", t.bootstrap);
  read(j, "rerank_stride", t.rerank_stride);
  read(j, "online_updates", t.online_updates);
  read(j, "seed", t.seed);
  read(j, "diagnostic_path", t.diagnostic_path);
  if (j.contains("advantage")) {
    auto m = j.at("advantage").get<std::string>();
    require<ConfigError>(m == "mean" || m == "sum", "advantage must be 'mean' or 'sum'");
    t.advantage_mode = m == "mean" ? AdvantageMode::kMean : AdvantageMode::kSum;
  }
  if (j.contains("selection")) {
    auto m = j.at("selection").get<std::string>();
    require<ConfigError>(m == "greedy" || m == "sample", "selection must be 'greedy' or 'sample'");
    t.eval_selection = m == "greedy" ? ActionSelection::kGreedy : ActionSelection::kSample;
  }
}

inline Json write_train(const TrainConfig& t) {
  return Json{{"T", t.T},
              {"H", t.H},
              {"c", t.c},
              {"epsilon", t.epsilon},
              {"gamma", t.gamma},
              {"lambda_lr", t.lambda_lr},
              {"agents", t.agents},
              {"epochs", t.epochs},
              {"k", t.k},
              {"channels", t.channels},
              {"budget", t.budget},
              {"advantage", t.advantage_mode == AdvantageMode::kMean ? "mean" : "sum"},
              {"bootstrap", t.bootstrap},
              {"rerank_stride", t.rerank_stride},
              {"selection", t.eval_selection == ActionSelection::kGreedy ? "greedy" : "sample"},
              {"online_updates", t.online_updates},
              {"seed", t.seed},
              {"diagnostic_path", t.diagnostic_path}};
}

inline void read_generator(const Json& j, GeneratorConfig& g) {
  if (j.contains("preset")) g = preset(j.at("preset").get<std::string>());
  if (j.contains("kind")) {
    auto k = j.at("kind").get<std::string>();
    require<ConfigError>(k == "sbm" || k == "lfr", "generator.kind must be 'sbm' or 'lfr'");
    g.kind = k == "sbm" ? BackgroundKind::kSbm : BackgroundKind::kLfr;
  }
  if (j.contains("sbm")) {
    const auto& s = j.at("sbm");
    read(s, "n", g.sbm.n);
    read(s, "k", g.sbm.k);
    if (s.contains("p")) {
      if (s.at("p").is_array())
        read(s, "p", g.sbm.p);
      else
        g.sbm.p = {s.at("p").get<double>()};
    }
    read(s, "r", g.sbm.r);
  }
  if (j.contains("lfr")) {
    const auto& l = j.at("lfr");
    read(l, "n", g.lfr.n);
    read(l, "tau1", g.lfr.tau1);
    read(l, "tau2", g.lfr.tau2);
    read(l, "mu", g.lfr.mu);
    read(l, "avg_deg", g.lfr.avg_deg);
    read(l, "d_max", g.lfr.d_max);
    read(l, "min_c", g.lfr.min_c);
    read(l, "max_c", g.lfr.max_c);
  }
  if (j.contains("foreground")) {
    const auto& f = j.at("foreground");
    read(f, "n_f", g.fg.n_f);
    read(f, "k_f", g.fg.k_f);
    read(f, "p_f", g.fg.p_f);
    read(f, "min_hops", g.fg.min_hops);
    read(f, "max_hops", g.fg.max_hops);
    read(f, "community", g.fg.community);
    if (f.contains("mode")) {
      auto m = f.at("mode").get<std::string>();
      require<ConfigError>(m == "strict" || m == "best_effort", "foreground.mode must be strict or best_effort");
      g.fg.mode = m == "strict" ? PlacementMode::kStrict : PlacementMode::kBestEffort;
    }
  }
}

inline Json write_generator(const GeneratorConfig& g) {
  return Json{{"preset", g.name},
              {"kind", g.kind == BackgroundKind::kSbm ? "sbm" : "lfr"},
              {"sbm", {{"n", g.sbm.n}, {"k", g.sbm.k}, {"p", g.sbm.p}, {"r", g.sbm.r}}},
              {"lfr",
               {{"n", g.lfr.n},
                {"tau1", g.lfr.tau1},
                {"tau2", g.lfr.tau2},
                {"mu", g.lfr.mu},
                {"avg_deg", g.lfr.avg_deg},
                {"d_max", g.lfr.d_max},
                {"min_c", g.lfr.min_c},
                {"max_c", g.lfr.max_c}}},
              {"foreground",
               {{"n_f", g.fg.n_f},
                {"k_f", g.fg.k_f},
                {"p_f", g.fg.p_f},
                {"min_hops", g.fg.min_hops},
                {"max_hops", g.fg.max_hops},
                {"mode", g.fg.mode == PlacementMode::kStrict ? "strict" : "best_effort"},
                {"community", g.fg.community}}}};
}

inline std::string agent_name(AgentKind a) {
  switch (a) {
    case AgentKind::kNac: return "nac";
    case AgentKind::kMod: return "mod";
    case AgentKind::kPpr: return "ppr";
    case AgentKind::kNol: return "nol";
    case AgentKind::kRandom: return "random";
  }
  return "?";
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace detail

/// Applies `a.b.c=value` to a JSON tree; value is parsed as JSON when it can
/// be, otherwise taken as a string.
inline void apply_override(Json& j, const std::string& assignment) {
  auto eq = assignment.find('=');
  require<ConfigError>(eq != std::string::npos && eq > 0, "override '", assignment, "' is not of the form key=value");
  std::string path = "/" + assignment.substr(0, eq);
  for (auto& ch : path)
    if (ch == '.') ch = '/';
  std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  j[Json::json_pointer(path)] = value;
}

inline Json to_json(const ExperimentConfig& c);

inline ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig c;
  if (j.contains("generator")) detail::read_generator(j.at("generator"), c.generator);
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    DatasetConfig ds;
    detail::read(d, "edges", ds.edges);
    detail::read(d, "labels", ds.labels);
    if (d.contains("seed_node")) ds.seed_node = d.at("seed_node").is_string() ? d.at("seed_node").get<std::string>()
                                                                               : d.at("seed_node").dump();
    require<ConfigError>(!ds.edges.empty(), "dataset.edges is required");
    c.dataset = ds;
  }
  if (j.contains("embed")) detail::read_embed(j.at("embed"), c.embed);
  c.train.embed = c.embed;
  c.online.embed = c.embed;
  if (j.contains("train")) detail::read_train(j.at("train"), c.train);
  if (j.contains("online")) detail::read_train(j.at("online"), c.online);
  // the online agent always matches the trained network's input size
  c.online.k = c.train.k;
  c.online.channels = c.train.channels;
  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    if (e.contains("agent")) c.agent = parse_agent(e.at("agent").get<std::string>());
    detail::read(e, "checkpoint", c.checkpoint);
    detail::read(e, "budget", c.budget);
    detail::read(e, "repetitions", c.repetitions);
    detail::read(e, "seed", c.seed);
    detail::read(e, "output", c.output);
    detail::read(e, "score_embedding", c.score_embedding);
  }
  c.online.budget = c.budget;
  if (j.contains("embedbench")) {
    const auto& b = j.at("embedbench");
    detail::read(b, "r", c.grid_r);
    detail::read(b, "p_t", c.grid_pt);
    detail::read(b, "reps", c.grid_reps);
    detail::read(b, "score_steps", c.score_steps);
    if (b.contains("algorithms")) {
      c.algorithms.clear();
      for (const auto& a : b.at("algorithms")) c.algorithms.push_back(parse_embed_algorithm(a.get<std::string>()));
    }
  }
  c.raw = to_json(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  Json j = Json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    require<ConfigError>(bool(in), "cannot open config file ", path);
    try {
      j = Json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(concat(path, ": ", e.what()));
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  return parse_config(j);
}

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["generator"] = detail::write_generator(c.generator);
  if (c.dataset) {
    j["dataset"] = {{"edges", c.dataset->edges}, {"labels", c.dataset->labels}};
    if (c.dataset->seed_node) j["dataset"]["seed_node"] = *c.dataset->seed_node;
  }
  j["embed"] = detail::write_embed(c.embed);
  j["train"] = detail::write_train(c.train);
  j["online"] = detail::write_train(c.online);
  j["experiment"] = {{"agent", detail::agent_name(c.agent)}, {"checkpoint", c.checkpoint},
                     {"budget", c.budget},                   {"repetitions", c.repetitions},
                     {"seed", c.seed},                       {"output", c.output},
                     {"score_embedding", c.score_embedding}};
  Json algs = Json::array();
  for (auto a : c.algorithms) algs.push_back(to_string(a));
  j["embedbench"] = {{"r", c.grid_r},
                     {"p_t", c.grid_pt},
                     {"reps", c.grid_reps},
                     {"algorithms", algs},
                     {"score_steps", c.score_steps}};
  return j;
}

inline std::string config_hash(const ExperimentConfig& c) { return detail::hex64(detail::fnv1a(to_json(c).dump())); }

// ---------------------------------------------------------------- runs

/// Replays a probe sequence and scores the embedding before the first probe
/// and after each one. Scoring stops after `score_steps` records if nonzero.
inline MetricSeries score_trajectory(const Instance& inst, std::span<const NodeId> probes, const EmbedConfig& embed,
                                     bool score = true, std::size_t score_steps = 0) {
  auto s = reset(inst.graph, EpisodeConfig{inst.seed, probes.size()});
  MetricSeries out;
  out.instance_id = inst.id;
  auto record = [&](int reward) {
    MetricRecord r;
    r.step = s.step();
    r.reward = reward;
    r.targets_found = s.targets_found();
    if (score && (score_steps == 0 || out.records.size() < score_steps) && !s.boundary().empty()) {
      auto ranking = rank(s, embed);
      r.accuracy = accuracy_index(ranking, s, inst.graph);
      r.entropy = boundary_entropy(ranking, s, inst.graph);
    }
    out.records.push_back(r);
  };
  record(0);
  for (NodeId v : probes) {
    int r = apply_probe(s, inst.graph, v);
    out.probes.push_back(v);
    record(r);
  }
  return out;
}

struct AggregateRow {
  std::size_t step = 0;
  std::size_t n = 0;
  double acc_mean = 0, acc_std = 0;
  std::size_t entropy_n = 0;
  double ent_mean = 0, ent_std = 0;
  double reward_mean = 0, tf_mean = 0, tf_std = 0;
};

/// Per-step mean ± population std over series; undefined entropies are
/// skipped and counted separately.
inline std::vector<AggregateRow> aggregate(std::span<const MetricSeries> runs) {
  std::size_t len = 0;
  for (const auto& r : runs) len = std::max(len, r.records.size());
  std::vector<AggregateRow> rows(len);
  for (std::size_t t = 0; t < len; ++t) {
    auto& row = rows[t];
    row.step = t;
    std::vector<double> acc, ent, tf, rew;
    for (const auto& r : runs) {
      if (t >= r.records.size()) continue;
      const auto& rec = r.records[t];
      acc.push_back(rec.accuracy);
      tf.push_back(static_cast<double>(rec.targets_found));
      rew.push_back(rec.reward);
      if (rec.entropy) ent.push_back(*rec.entropy);
    }
    auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
      mean = sd = 0.0;
      if (v.empty()) return;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      for (double x : v) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / static_cast<double>(v.size()));
    };
    double unused;
    row.n = acc.size();
    row.entropy_n = ent.size();
    stats(acc, row.acc_mean, row.acc_std);
    stats(ent, row.ent_mean, row.ent_std);
    stats(tf, row.tf_mean, row.tf_std);
    stats(rew, row.reward_mean, unused);
  }
  return rows;
}

inline void write_aggregate(std::ostream& os, std::span<const AggregateRow> rows) {
  os << "step,n,accuracy_mean,accuracy_std,entropy_n,entropy_mean,entropy_std,reward_mean,targets_found_mean,"
        "targets_found_std\n";
  for (const auto& r : rows) {
    os << r.step << ',' << r.n << ',' << r.acc_mean << ',' << r.acc_std << ',' << r.entropy_n << ',';
    if (r.entropy_n > 0)
      os << r.ent_mean << ',' << r.ent_std;
    else
      os << "undefined,undefined";
    os << ',' << r.reward_mean << ',' << r.tf_mean << ',' << r.tf_std << '\n';
  }
}

/// Reads series written by MetricSeries::write_rows (any number of
/// instances per file).
inline std::vector<MetricSeries> read_series_csv(const std::string& path) {
  std::ifstream in(path);
  require<ConfigError>(bool(in), "cannot open ", path);
  std::string line;
  std::getline(in, line);
  require<ParseError>(line == "instance_id,step,accuracy,entropy,reward,targets_found", path,
                      ":1: unexpected header '", line, "'");
  std::vector<MetricSeries> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    require<ParseError>(f.size() == 6, path, ":", lineno, ": expected 6 fields");
    if (out.empty() || out.back().instance_id != f[0]) out.push_back(MetricSeries{f[0], {}, {}});
    MetricRecord r;
    try {
      r.step = std::stoul(f[1]);
      r.accuracy = std::stod(f[2]);
      if (f[3] != "undefined") r.entropy = std::stod(f[3]);
      r.reward = std::stoi(f[4]);
      r.targets_found = std::stoul(f[5]);
    } catch (const std::exception&) {
      throw ParseError(concat(path, ":", lineno, ": malformed number"));
    }
    out.back().records.push_back(r);
  }
  return out;
}

/// Dataset instance: loads the edge list (once per call) and picks a seed.
inline Instance dataset_instance(const ExperimentConfig& c, std::uint64_t seed) {
  const auto& d = *c.dataset;
  TargetSpec targets;
  if (!d.labels.empty())
    targets = LabelFile{d.labels};
  else
    targets = SyntheticTargets{c.generator.fg, derive_seed(seed, 2)};
  ImplantReport rep;
  Instance inst;
  inst.graph = load_edgelist(d.edges, targets, &rep);
  inst.anomalies = rep.host_sets;
  require<ConfigError>(inst.graph.target_count() > 0, "dataset has no target nodes");
  if (d.seed_node) {
    const auto& ids = inst.graph.original_ids();
    auto it = std::find(ids.begin(), ids.end(), *d.seed_node);
    require<ConfigError>(it != ids.end(), "seed node ", *d.seed_node, " not in ", d.edges);
    inst.seed = static_cast<NodeId>(it - ids.begin());
  } else {
    auto t = inst.graph.target_nodes();
    Rng rng(derive_seed(seed, 3));
    inst.seed = t[uniform_below(rng, t.size())];
  }
  inst.id = concat(std::filesystem::path(d.edges).stem().string(), '-', detail::hex64(seed));
  return inst;
}

inline Instance experiment_instance(const ExperimentConfig& c, std::size_t rep) {
  const auto seed = derive_seed(c.seed, rep);
  return c.dataset ? dataset_instance(c, seed) : make_instance(c.generator, seed);
}

struct ExperimentResult {
  std::vector<MetricSeries> runs;
  std::vector<DiscoveryCurve> curves;
  std::vector<std::pair<std::size_t, std::string>> failures;
};

inline DiscoveryCurve run_agent(const ExperimentConfig& c, const Instance& inst, std::size_t rep,
                                const ActorCritic* model) {
  const auto seed = derive_seed(c.seed, 0x5eed0000 + rep);
  switch (c.agent) {
    case AgentKind::kNac: {
      auto cfg = c.online;
      cfg.seed = seed;
      return evaluate_online(*model, inst, cfg);
    }
    case AgentKind::kMod: return run_baseline(BaselineKind::kMod, inst, c.budget, seed, c.embed);
    case AgentKind::kPpr: return run_baseline(BaselineKind::kPpr, inst, c.budget, seed, c.embed);
    case AgentKind::kNol: return run_baseline(BaselineKind::kNol, inst, c.budget, seed, c.embed);
    case AgentKind::kRandom: return run_baseline(BaselineKind::kRandom, inst, c.budget, seed, c.embed);
  }
  throw ConfigError("unknown agent");
}

/// Runs all repetitions; writes run_<i>.csv, aggregate.csv and manifest.json
/// into c.output. Failed repetitions are recorded and left out of the
/// aggregate.
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  c.validate();
  namespace fs = std::filesystem;
  fs::create_directories(c.output);
  std::optional<ActorCritic> model;
  if (c.agent == AgentKind::kNac) model.emplace(ActorCritic::load(c.checkpoint + "/", c.train));
  ExperimentResult res;
  Json seeds = Json::array();
  for (std::size_t rep = 0; rep < c.repetitions; ++rep) {
    seeds.push_back(derive_seed(c.seed, rep));
    try {
      auto inst = experiment_instance(c, rep);
      auto curve = run_agent(c, inst, rep, model ? &*model : nullptr);
      auto series = score_trajectory(inst, curve.actions, c.embed, c.score_embedding);
      std::ofstream os(fs::path(c.output) / concat("run_", rep, ".csv"));
      MetricSeries::write_header(os);
      series.write_rows(os);
      res.runs.push_back(std::move(series));
      res.curves.push_back(std::move(curve));
    } catch (const Error& e) {
      res.failures.emplace_back(rep, e.what());
    }
  }
  {
    std::ofstream os(fs::path(c.output) / "aggregate.csv");
    write_aggregate(os, aggregate(res.runs));
  }
  Json fails = Json::array();
  for (const auto& [rep, what] : res.failures) fails.push_back({{"repetition", rep}, {"error", what}});
  Json manifest{{"software", kSoftwareVersion}, {"config_hash", config_hash(c)}, {"seeds", seeds},
                {"completed", res.runs.size()},  {"failures", fails},            {"config", to_json(c)}};
  std::ofstream(fs::path(c.output) / "manifest.json") << manifest.dump(2) << '\n';
  return res;
}

// ---------------------------------------------------------------- embedbench

struct GridCell {
  double r = 0.0;
  double p_t = 0.0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
};

inline std::vector<GridCell> embedbench_cells(const ExperimentConfig& c) {
  std::vector<GridCell> out;
  for (std::size_t i = 0; i < c.grid_r.size(); ++i)
    for (std::size_t j = 0; j < c.grid_pt.size(); ++j)
      for (std::size_t rep = 0; rep < c.grid_reps; ++rep)
        out.push_back({c.grid_r[i], c.grid_pt[j], rep, derive_seed(c.seed, (i * 1000 + j) * 1000 + rep)});
  return out;
}

inline Instance embedbench_instance(const ExperimentConfig& c, const GridCell& cell) {
  GeneratorConfig g = c.generator;
  g.name = concat("bench-r", cell.r, "-pt", cell.p_t, "-", cell.rep);
  g.sbm.r = cell.r;
  g.fg.p_f = cell.p_t;
  auto inst = make_instance(g, cell.seed);
  inst.id = g.name;
  return inst;
}

struct BenchRecord {
  GridCell cell;
  EmbedAlgorithm algorithm;
  MetricSeries series;
};

/// Optimal traversal per grid instance, scored by each configured embedding.
/// Writes embedbench_<ALG>.csv (per-step rows), embedbench_auc.csv and a
/// manifest into c.output when `write` is set. Eigensolver failures are
/// listed in the manifest and the affected series left out.
inline std::vector<BenchRecord> run_embedbench(const ExperimentConfig& c, bool write = true) {
  namespace fs = std::filesystem;
  std::vector<BenchRecord> out;
  std::map<EmbedAlgorithm, std::ofstream> files;
  std::ofstream auc_file;
  if (write) {
    fs::create_directories(c.output);
    for (auto a : c.algorithms) {
      files[a].open(fs::path(c.output) / ("embedbench_" + to_string(a) + ".csv"));
      MetricSeries::write_header(files[a]);
    }
    auc_file.open(fs::path(c.output) / "embedbench_auc.csv");
    auc_file << "instance_id,r,p_t,rep,algorithm,steps,auc\n";
  }
  Json seeds = Json::array(), failures = Json::array();
  for (const auto& cell : embedbench_cells(c)) {
    seeds.push_back(cell.seed);
    auto inst = embedbench_instance(c, cell);
    auto plan = optimal_traversal(inst, c.embed, false);
    for (auto a : c.algorithms) {
      EmbedConfig e = c.embed;
      e.algorithm = a;
      e.seed = derive_seed(cell.seed, static_cast<std::uint64_t>(a));
      MetricSeries series;
      try {
        series = score_trajectory(inst, plan.probes, e, true, c.score_steps);
      } catch (const ConvergenceError& err) {
        failures.push_back({{"instance_id", inst.id}, {"algorithm", to_string(a)}, {"error", err.what()}});
        continue;
      }
      if (write) {
        series.write_rows(files[a]);
        auc_file << inst.id << ',' << cell.r << ',' << cell.p_t << ',' << cell.rep << ',' << to_string(a) << ','
                 << series.records.size() << ',' << series.auc() << '\n';
      }
      out.push_back({cell, a, std::move(series)});
    }
  }
  if (write) {
    Json manifest{{"software", kSoftwareVersion}, {"config_hash", config_hash(c)}, {"instances", seeds.size()},
                  {"seeds", seeds},               {"failures", failures},         {"config", to_json(c)}};
    std::ofstream(fs::path(c.output) / "embedbench_manifest.json") << manifest.dump(2) << '\n';
  }
  return out;
}

}  // namespace nac
