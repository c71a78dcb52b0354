// Acceptance checks. `acceptance N` runs criterion N, no argument runs all.
// Each prints one "criterion N: PASS|FAIL ..." line and writes a short report
// to acceptance_reports/criterion_N.txt in the working directory.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "nac/harness.hpp"
#include "support/oracles.hpp"

using namespace nac;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string summary;
  std::ostringstream report;
};

// ------------------------------------------------------------------ 1

void criterion_1(Outcome& o) {
  const double q = discounted_return({0.0, 0.0, 1.0}, 0.5);
  o.pass = q == 0.25;
  o.summary = concat("discounted_return([0,0,1], 0.5) = ", q);
  o.report << o.summary << '\n';
}

// ------------------------------------------------------------------ 2

void criterion_2(Outcome& o) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed + 1000);
    const std::size_t n = 2 + seed % 11;
    auto gt = oracle::random_gnp(n, 0.2 + 0.01 * double(seed % 30), seed + 1000);
    auto g = SparseGraph::from_edges(n, gt.edges());
    std::vector<double> v(n, 0.0);
    const std::size_t picks = 1 + rng() % 3;
    for (std::size_t i = 0; i < picks; ++i) v[rng() % n] = 1.0;
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    for (auto& x : v) x /= total;
    auto got = personalized_pagerank(g, v, 0.8).scores;
    auto want = oracle::dense_ppr(g, v, 0.8);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(got[i] - want[i]));
    worst = std::max(worst, err);
    o.report << "graph " << seed << " n=" << n << " L-inf error " << err << '\n';
  }
  o.pass = worst <= 1e-8;
  o.summary = concat("50 graphs, max L-inf error ", worst, " (limit 1e-8)");
}

// ------------------------------------------------------------------ 3

void criterion_3(Outcome& o) {
  double worst = 0.0;
  for (auto mode : {OutputMode::kLogits, OutputMode::kValues}) {
    NetSpec spec;
    spec.k = 8;
    spec.channels = 4;
    spec.mode = mode;
    Network<double> net(spec);
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      std::mt19937_64 rng(trial + 77);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      auto p = init_params<double>(spec, 500 + trial);
      // zero biases leave empty patches on the rectifier kink
      for (auto& b : p.flat())
        if (b == 0.0) b = 0.2 * u(rng);
      std::vector<double> x(spec.input_size());
      for (auto& v : x) v = u(rng);
      std::vector<std::uint8_t> mask(spec.k);
      for (auto& m : mask) m = static_cast<std::uint8_t>(rng() % 4 != 0);
      mask[rng() % spec.k] = 1;
      std::vector<double> up(spec.k);
      for (auto& v : up) v = u(rng);

      Tape<double> tape;
      net.forward(p, x, mask, &tape);
      ParamSet<double> grad(spec);
      net.backward(p, tape, up, grad);
      auto f = [&](const std::vector<double>& flat) {
        auto y = net.forward(ParamSet<double>::from_flat(spec, flat), x, mask);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
          if (mask[i]) s += up[i] * y[i];
        return s;
      };
      const double err = oracle::max_relative_error(grad.flat(), oracle::numeric_gradient(f, p.flat()));
      worst = std::max(worst, err);
      o.report << (mode == OutputMode::kLogits ? "policy" : "value") << " input " << trial << " rel err " << err << '\n';
    }
  }
  o.pass = worst <= 1e-4;
  o.summary = concat("both heads x 20 inputs, max relative error ", worst, " (limit 1e-4)");
}

// ------------------------------------------------------------------ 4

void criterion_4(Outcome& o) {
  bool exact = true;
  for (double a : {-2.0, -0.3, 0.0, 0.7, 3.0}) exact &= clipped_surrogate(1.0, a, 0.2) == a;
  const double c1 = clipped_surrogate(1.5, 1.0, 0.2), c2 = clipped_surrogate(0.5, -1.0, 0.2);
  exact &= c1 == 1.2 && c2 == -0.8;
  o.report << "rho=1 returns the advantage: " << exact << "\nrho=1.5 A=1: " << c1 << "\nrho=0.5 A=-1: " << c2 << '\n';

  TrainConfig cfg;
  cfg.k = 8;
  cfg.channels = 4;
  cfg.T = 6;
  cfg.agents = 2;
  cfg.budget = 12;
  Network<double> pnet(cfg.net_spec(OutputMode::kLogits));
  PolicySnapshot<double> old{init_params<double>(pnet.spec(), 11), 0};
  std::vector<Agent> agents;
  for (std::size_t i = 0; i < cfg.agents; ++i) agents.emplace_back(i, make_factory(preset("trivial")), 300 + i);
  auto buf = rollout(agents, pnet, old, cfg);
  auto samples = compute_targets(buf, cfg.H, cfg.gamma);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> d;
  std::vector<double> adv(samples.size());
  for (auto& a : adv) a = d(rng);
  auto ppo = ppo_loss(pnet, old.params, old, samples, adv, 1e9, 0.0);
  auto pg = vanilla_policy_gradient(pnet, old.params, samples, adv);
  double gap = 0.0;
  for (std::size_t i = 0; i < pg.grad.size(); ++i) gap = std::max(gap, std::abs(ppo.grad.flat()[i] - pg.grad.flat()[i]));
  o.report << "batch of " << samples.size() << " samples, max |ppo - vanilla| " << gap << '\n';
  o.pass = exact && gap <= 1e-10;
  o.summary = concat("clip examples ", exact ? "exact" : "WRONG", "; max gradient gap vs vanilla ", gap,
                     " (limit 1e-10)");
}

// ------------------------------------------------------------------ 5

void criterion_5(Outcome& o) {
  auto c = load_config("", {"generator.preset=embedbench"});
  auto cells = embedbench_cells(c);
  std::set<std::string> ids;
  std::size_t generated = 0;
  for (const auto& cell : cells) {
    auto inst = embedbench_instance(c, cell);
    if (inst.graph.target_count() > 0 && inst.graph.label(inst.seed) == 1) ++generated;
    ids.insert(inst.id);
  }
  o.report << "embedbench instances generated: " << generated << ", distinct ids " << ids.size() << '\n';
  bool lengths = true;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto t = optimal_traversal(make_instance(preset("two-clique"), seed), EmbedConfig{}, false);
    o.report << "two-clique seed " << seed << ": traversal length " << t.traversal_length() << " (" << t.probe_count()
             << " probes after the seed)\n";
    lengths &= t.traversal_length() == 81;
  }
  o.pass = generated == 200 && ids.size() == 200 && lengths;
  o.summary = concat(generated, " embedbench instances; two-clique traversal length 81: ", lengths ? "yes" : "no");
}

// ------------------------------------------------------------------ 6

void criterion_6(Outcome& o) {
  const auto t0 = Clock::now();
  auto c = load_config("", {"generator.preset=embedbench", "embedbench.r=[0.01]", "embedbench.p_t=[1.0]",
                            "embedbench.reps=10", "embedbench.algorithms=[\"PPR\",\"MOD\"]"});
  auto full = run_embedbench(c, false);
  auto head = c;
  head.algorithms = {EmbedAlgorithm::kPca, EmbedAlgorithm::kNode2vec};
  head.score_steps = 40;
  auto first40 = run_embedbench(head, false);

  std::map<EmbedAlgorithm, std::vector<MetricSeries>> by_alg;
  for (auto& r : full) by_alg[r.algorithm].push_back(r.series);
  for (auto& r : first40) by_alg[r.algorithm].push_back(r.series);

  std::map<EmbedAlgorithm, double> acc40;
  for (const auto& [alg, runs] : by_alg) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : runs)
      for (std::size_t t = 0; t < std::min<std::size_t>(40, s.records.size()); ++t, ++n) sum += s.records[t].accuracy;
    acc40[alg] = n ? sum / double(n) : 0.0;
    o.report << to_string(alg) << ": " << runs.size() << " seeds, mean accuracy over steps 0..39 " << acc40[alg] << '\n';
  }
  bool ordinal = by_alg[EmbedAlgorithm::kPca].size() == 10 && by_alg[EmbedAlgorithm::kNode2vec].size() == 10 &&
                 acc40[EmbedAlgorithm::kPpr] > acc40[EmbedAlgorithm::kPca] &&
                 acc40[EmbedAlgorithm::kPpr] > acc40[EmbedAlgorithm::kNode2vec];

  bool early = true;
  for (auto alg : {EmbedAlgorithm::kPpr, EmbedAlgorithm::kMod}) {
    auto rows = aggregate(by_alg[alg]);
    std::size_t argmin = 0;
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& r : rows)
      if (r.entropy_n > 0 && r.ent_mean < lowest) lowest = r.ent_mean, argmin = r.step;
    o.report << to_string(alg) << ": seed-averaged entropy minimum " << lowest << " at step " << argmin << " of "
             << rows.size() << '\n';
    early &= argmin < 40;
  }
  const double elapsed = seconds_since(t0);
  o.report << "runtime " << elapsed << " s (limit 900 s)\n";
  o.pass = ordinal && early && elapsed <= 900.0;
  o.summary = concat("acc40 PPR ", acc40[EmbedAlgorithm::kPpr], " PCA ", acc40[EmbedAlgorithm::kPca], " node2vec ",
                     acc40[EmbedAlgorithm::kNode2vec], "; entropy minima before step 40: ", early ? "yes" : "no",
                     "; ", static_cast<int>(elapsed), " s");
}

// ------------------------------------------------------------------ 7

void criterion_7(Outcome& o) {
  const auto t0 = Clock::now();
  auto c = load_config("", {"generator.preset=embedbench", "embedbench.algorithms=[\"PPR\",\"MOD\"]"});
  auto recs = run_embedbench(c, false);
  // (r, p_t) -> algorithm -> AUCs over seeds
  std::map<std::pair<double, double>, std::map<EmbedAlgorithm, std::vector<double>>> cells;
  for (const auto& r : recs) cells[{r.cell.r, r.cell.p_t}][r.algorithm].push_back(r.series.auc());
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); };

  std::size_t ppr_wins = 0, complete = 0;
  bool monotone = true;
  for (double r : c.grid_r) {
    std::vector<double> pts = c.grid_pt;
    std::sort(pts.rbegin(), pts.rend());
    double prev = std::numeric_limits<double>::infinity();
    for (double pt : pts) {
      auto& cell = cells[{r, pt}];
      const auto& ppr = cell[EmbedAlgorithm::kPpr];
      const auto& mod = cell[EmbedAlgorithm::kMod];
      if (ppr.size() != c.grid_reps || mod.size() != c.grid_reps) {
        o.report << "r=" << r << " p_t=" << pt << ": incomplete\n";
        monotone = false;
        continue;
      }
      ++complete;
      const double a = mean(ppr), b = mean(mod);
      ppr_wins += a >= b;
      o.report << "r=" << r << " p_t=" << pt << ": AUC PPR " << a << " MOD " << b << (a > prev ? "  (rises)" : "")
               << '\n';
      monotone &= a <= prev;
      prev = a;
    }
  }
  std::size_t instance_wins = 0, instances = 0;
  for (const auto& [key, cell] : cells) {
    const auto& ppr = cell.at(EmbedAlgorithm::kPpr);
    const auto& mod = cell.at(EmbedAlgorithm::kMod);
    for (std::size_t i = 0; i < std::min(ppr.size(), mod.size()); ++i, ++instances) instance_wins += ppr[i] >= mod[i];
  }
  o.report << "per instance: PPR AUC >= MOD AUC on " << instance_wins << "/" << instances << '\n';
  const std::size_t total = c.grid_r.size() * c.grid_pt.size();
  const double share = double(ppr_wins) / double(total);
  const double elapsed = seconds_since(t0);
  o.report << "runtime " << elapsed << " s (limit 1800 s)\n";
  o.pass = complete == total && monotone && share >= 0.75 && elapsed <= 1800.0;
  o.summary = concat("PPR AUC non-increasing in p_t at every r: ", monotone ? "yes" : "no", "; PPR >= MOD on ",
                     ppr_wins, "/", total, " cells; ", static_cast<int>(elapsed), " s");
}

// ------------------------------------------------------------------ 8

constexpr std::size_t kOfflineEpochs = 50;
constexpr std::size_t kEvalBudget = 120;

double second_clique_recovery(const Instance& inst, const ObservedState& s) {
  const auto& clique = inst.anomalies.at(1);
  std::size_t hit = 0;
  for (NodeId v : clique) hit += s.is_probed(v);
  return double(hit) / double(clique.size());
}

// Mean targets found at budget 15 on the single-clique preset, per epoch and
// averaged over 10 training seeds, for a reduced network.
bool trivial_monotone_run(std::ostream& report) {
  constexpr std::size_t epochs = 200, block = 20, seeds = 10;
  std::vector<double> sum(epochs, 0.0);
  std::vector<std::size_t> cnt(epochs, 0);
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    TrainConfig cfg;
    cfg.k = 16;
    cfg.channels = 16;
    cfg.budget = 15;
    cfg.epochs = epochs;
    cfg.seed = seed;
    train_offline(cfg, make_factory(preset("trivial")), nullptr, [&](const EpochLog& e) {
      if (!std::isnan(e.mean_targets_found)) sum[e.epoch - 1] += e.mean_targets_found, ++cnt[e.epoch - 1];
    });
  }
  std::vector<double> blocks;
  for (std::size_t b = 0; b < epochs; b += block) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t e = b; e < b + block; ++e) s += sum[e], n += cnt[e];
    blocks.push_back(n ? s / double(n) : 0.0);
  }
  bool monotone = true;
  report << "trivial run, mean targets found per 20-epoch block:";
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    report << ' ' << blocks[i];
    if (i > 0) monotone &= blocks[i] >= blocks[i - 1];
  }
  const double last = cnt.back() ? sum.back() / double(cnt.back()) : 0.0;
  report << "\ntrivial run, epoch " << epochs << " mean targets found " << last << " of 9\n";
  return monotone && last >= 9.0;
}

void criterion_8(Outcome& o) {
  const auto t0 = Clock::now();
  const auto gen = preset("fig4a-small");
  TrainConfig cfg = TrainConfig::offline();
  cfg.k = 64;
  cfg.budget = kEvalBudget;
  cfg.epochs = kOfflineEpochs;
  cfg.embed.algorithm = EmbedAlgorithm::kPpr;
  auto trained = train_offline(cfg, make_factory(gen), nullptr, [&](const EpochLog& e) {
    o.report << "epoch " << e.epoch << " episodes " << e.episodes << " targets " << e.mean_targets_found
             << " entropy " << e.policy_entropy << " vloss " << e.value_loss << '\n';
    std::cerr << "epoch " << e.epoch << " (" << static_cast<int>(seconds_since(t0)) << " s)\n";
  });
  o.report << "training " << seconds_since(t0) << " s\n";

  TrainConfig online = TrainConfig::online();
  online.k = cfg.k;
  online.channels = cfg.channels;
  online.budget = kEvalBudget;
  online.embed = cfg.embed;

  const std::vector<std::string> names{"NAC", "MOD", "PPR", "NOL", "random"};
  std::map<std::string, double> found;
  std::map<std::string, std::size_t> recovered;
  for (std::uint64_t i = 0; i < 10; ++i) {
    // held-out seeds come from a stream the training factory never draws from
    const auto seed = derive_seed(0x4e1d0000ULL, i);
    auto inst = make_instance(gen, seed);
    std::map<std::string, DiscoveryCurve> curves;
    auto on = online;
    on.seed = derive_seed(seed, 9);
    curves["NAC"] = evaluate_online(trained.model, inst, on);
    curves["MOD"] = run_baseline(BaselineKind::kMod, inst, kEvalBudget, derive_seed(seed, 10), cfg.embed);
    curves["PPR"] = run_baseline(BaselineKind::kPpr, inst, kEvalBudget, derive_seed(seed, 11), cfg.embed);
    curves["NOL"] = run_baseline(BaselineKind::kNol, inst, kEvalBudget, derive_seed(seed, 12), cfg.embed);
    curves["random"] = run_baseline(BaselineKind::kRandom, inst, kEvalBudget, derive_seed(seed, 13), cfg.embed);
    o.report << "instance " << inst.id << ":";
    for (const auto& n : names) {
      const auto& cv = curves[n];
      const double f = double(cv.final_state.targets_found());
      const double rec = second_clique_recovery(inst, cv.final_state);
      found[n] += f / 10.0;
      recovered[n] += rec >= 0.9;
      o.report << ' ' << n << '=' << f << " (2nd " << rec << ')';
    }
    o.report << '\n';
  }
  bool a = true;
  for (const auto& n : names) {
    o.report << n << ": mean targets found " << found[n] << ", second clique >= 90% on " << recovered[n] << "/10\n";
    if (n != "NAC") a &= found["NAC"] >= found[n];
  }
  const bool b = recovered["NAC"] >= 7 && recovered["MOD"] < recovered["NAC"];
  const double elapsed = seconds_since(t0);
  o.report << "(a) " << (a ? "holds" : "fails") << "; (b) " << (b ? "holds" : "fails") << "; runtime " << elapsed
           << " s (target 3600 s)\n";
  bool fallback = false;
  if (a && !b) fallback = trivial_monotone_run(o.report);
  o.pass = a && (b || fallback) && elapsed <= 3600.0;
  o.summary = concat("NAC ", found["NAC"], " MOD ", found["MOD"], " PPR ", found["PPR"], " NOL ", found["NOL"],
                     " random ", found["random"], "; 2nd clique NAC ", recovered["NAC"], "/10 MOD ", recovered["MOD"],
                     "/10", b ? "" : (fallback ? "; trivial monotone run holds" : "; trivial monotone run not shown"),
                     "; ", static_cast<int>(elapsed), " s");
}

// ------------------------------------------------------------------ 9

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

bool run_twice(const std::string& name, const std::string& args, const fs::path& out, Outcome& o) {
  std::map<std::string, std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(out);
    const std::string cmd = concat('"', NACCTL, "\" ", args, " -o \"", out.string(), "\" > /dev/null 2>&1");
    if (std::system(cmd.c_str()) != 0) {
      o.report << name << ": command failed: " << cmd << '\n';
      return false;
    }
    auto files = snapshot(out);
    if (pass == 0) {
      first = std::move(files);
      continue;
    }
    bool same = files == first;
    o.report << name << ": " << files.size() << " files, " << (same ? "byte-identical" : "DIFFER") << '\n';
    for (const auto& [f, body] : files)
      if (!first.count(f) || first[f] != body) o.report << "  differs: " << f << '\n';
    return same && !files.empty();
  }
  return false;
}

void criterion_9(Outcome& o) {
  const auto root = fs::temp_directory_path() / "nac_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto ckpt_run = root / "train_keep";
  const std::string train_args =
      "train -s generator.preset=trivial -s train.k=8 -s train.channels=4 -s train.T=6 -s train.agents=2 "
      "-s train.epochs=3 -s train.budget=12";
  bool ok = run_twice("train", train_args, root / "train", o);
  ok &= std::system(concat('"', NACCTL, "\" ", train_args, " -o \"", ckpt_run.string(), "\" > /dev/null 2>&1").c_str()) == 0;
  ok &= run_twice("evaluate",
                  concat("evaluate -s generator.preset=trivial -s train.k=8 -s train.channels=4 -s experiment.agent=nac ",
                         "-s experiment.budget=12 -s experiment.repetitions=3 -s experiment.checkpoint=",
                         (ckpt_run / "checkpoint").string()),
                  root / "evaluate", o);
  ok &= run_twice("evaluate (nol)",
                  "evaluate -s generator.preset=trivial -s experiment.agent=nol -s experiment.budget=12 "
                  "-s experiment.repetitions=3",
                  root / "evaluate_nol", o);
  ok &= run_twice("embedbench",
                  "embedbench -s generator.preset=trivial -s embedbench.r=[0.01,0.02] -s embedbench.p_t=[1.0,0.5] "
                  "-s embedbench.reps=2 -s 'embedbench.algorithms=[\"PPR\",\"MOD\",\"PCA\",\"NODE2VEC\"]'",
                  root / "embedbench", o);
  fs::remove_all(root);
  o.pass = ok;
  o.summary = ok ? "train, evaluate and embedbench reruns are byte-identical" : "rerun outputs differ or a run failed";
}

using Criterion = void (*)(Outcome&);
const Criterion kCriteria[] = {criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                               criterion_6, criterion_7, criterion_8, criterion_9};

bool run(int n) {
  Outcome o;
  try {
    kCriteria[n - 1](o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.summary = concat("error: ", e.what());
    o.report << o.summary << '\n';
  }
  std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.summary << std::endl;
  fs::create_directories("acceptance_reports");
  std::ofstream(fs::path("acceptance_reports") / concat("criterion_", n, ".txt"))
      << (o.pass ? "PASS" : "FAIL") << "  " << o.summary << "\n\n"
      << o.report.str();
  if (!o.pass) std::cout << o.report.str();
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty())
    for (int i = 1; i <= 9; ++i) which.push_back(i);
  bool ok = true;
  for (int n : which) {
    if (n < 1 || n > 9) {
      std::cerr << "no criterion " << n << '\n';
      return 2;
    }
    ok &= run(n);
  }
  return ok ? 0 : 1;
}
