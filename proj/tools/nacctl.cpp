#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "nac/nac.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string output;

  nac::ExperimentConfig load() const {
    auto sets = overrides;
    if (!output.empty()) sets.push_back("experiment.output=\"" + output + "\"");
    return nac::load_config(config, sets);
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("-s,--set", c.overrides, "override, e.g. train.T=16 (repeatable)");
  app->add_option("-o,--output", c.output, "output directory");
}

int cmd_generate(const Common& common, std::size_t count) {
  auto cfg = common.load();
  fs::create_directories(cfg.output);
  nac::Json index = nac::Json::array();
  for (std::size_t i = 0; i < count; ++i) {
    auto inst = nac::experiment_instance(cfg, i);
    auto base = fs::path(cfg.output) / inst.id;
    {
      std::ofstream os(base.string() + ".edges");
      nac::write_edgelist(os, inst.graph);
    }
    {
      std::ofstream os(base.string() + ".labels");
      nac::write_labels(os, inst.graph);
    }
    index.push_back({{"id", inst.id},
                     {"nodes", inst.graph.size()},
                     {"edges", inst.graph.edge_count()},
                     {"seed_node", inst.seed},
                     {"anomalies", inst.anomalies}});
  }
  nac::Json manifest{{"software", nac::kSoftwareVersion},
                     {"config_hash", nac::config_hash(cfg)},
                     {"instances", index},
                     {"config", nac::to_json(cfg)}};
  std::ofstream(fs::path(cfg.output) / "instances.json") << manifest.dump(2) << '\n';
  std::cout << "wrote " << count << " instances to " << cfg.output << '\n';
  return 0;
}

int cmd_train(const Common& common) {
  auto cfg = common.load();
  cfg.train.embed = cfg.embed;
  fs::create_directories(cfg.output);
  std::ofstream log(fs::path(cfg.output) / "train_log.csv");
  auto res = nac::train_offline(cfg.train, nac::make_factory(cfg.generator), &log, [](const nac::EpochLog& e) {
    std::cerr << "epoch " << e.epoch << " episodes " << e.episodes << " targets " << e.mean_targets_found
              << " entropy " << e.policy_entropy << " vloss " << e.value_loss << '\n';
  });
  auto ckpt = fs::path(cfg.output) / "checkpoint";
  fs::create_directories(ckpt);
  res.model.save(ckpt.string() + "/");
  nac::Json manifest{{"software", nac::kSoftwareVersion},
                     {"config_hash", nac::config_hash(cfg)},
                     {"epochs", res.log.size()},
                     {"config", nac::to_json(cfg)}};
  std::ofstream(fs::path(cfg.output) / "train_manifest.json") << manifest.dump(2) << '\n';
  std::cout << "checkpoint written to " << ckpt.string() << '\n';
  return 0;
}

int cmd_evaluate(const Common& common) {
  auto cfg = common.load();
  auto res = nac::run_experiment(cfg);
  double found = 0.0;
  for (const auto& c : res.curves) found += c.targets_found.empty() ? 0.0 : double(c.targets_found.back());
  std::cout << "agent " << nac::to_json(cfg)["experiment"]["agent"].get<std::string>() << ": " << res.runs.size()
            << " runs, " << res.failures.size() << " failed, mean targets found "
            << (res.curves.empty() ? 0.0 : found / double(res.curves.size())) << '\n';
  return res.failures.empty() ? 0 : 1;
}

int cmd_embedbench(const Common& common) {
  auto cfg = common.load();
  auto res = nac::run_embedbench(cfg);
  std::map<std::string, std::pair<double, std::size_t>> auc;
  for (const auto& r : res) {
    auto& a = auc[nac::to_string(r.algorithm)];
    a.first += r.series.auc();
    ++a.second;
  }
  for (const auto& [name, v] : auc)
    std::cout << name << " mean AUC " << v.first / double(v.second) << " over " << v.second << " instances\n";
  return 0;
}

int cmd_report(const std::string& dir) {
  std::vector<nac::MetricSeries> runs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    auto name = entry.path().filename().string();
    if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".csv") {
      auto s = nac::read_series_csv(entry.path().string());
      runs.insert(runs.end(), s.begin(), s.end());
    }
  }
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.instance_id < b.instance_id; });
  if (runs.empty()) throw nac::ConfigError("no run_*.csv files in " + dir);
  std::ofstream os(fs::path(dir) / "aggregate.csv");
  nac::write_aggregate(os, nac::aggregate(runs));
  double auc = 0.0;
  for (const auto& r : runs) auc += r.auc();
  std::cout << runs.size() << " runs, mean AUC " << auc / double(runs.size()) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network discovery experiments: instance generation, training, evaluation and benchmarks"};
  app.require_subcommand(1);
  Common common;
  std::size_t count = 1;
  std::string report_dir;

  auto* gen = app.add_subcommand("generate", "write synthetic instances to disk");
  add_common(gen, common);
  gen->add_option("-n,--count", count, "number of instances");
  auto* train = app.add_subcommand("train", "offline actor-critic training");
  add_common(train, common);
  auto* eval = app.add_subcommand("evaluate", "run an agent or baseline on instances");
  add_common(eval, common);
  auto* bench = app.add_subcommand("embedbench", "embedding accuracy along optimal traversals");
  add_common(bench, common);
  auto* report = app.add_subcommand("report", "aggregate run CSVs in a directory");
  report->add_option("dir", report_dir, "directory with run_*.csv")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_generate(common, count);
    if (*train) return cmd_train(common);
    if (*eval) return cmd_evaluate(common);
    if (*bench) return cmd_embedbench(common);
    if (*report) return cmd_report(report_dir);
  } catch (const nac::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nac::exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
