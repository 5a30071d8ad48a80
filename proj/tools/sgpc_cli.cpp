// Benchmark harness: sweeps training cells over partitions, selectors and
// basis budgets, streaming one JSON record per line, plus a summarizer that
// aggregates those records per method.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgpc/sgpc.hpp"

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

struct Cell {
  int partition = 0;  // 1-based, as in benchmark distributions
  std::string selector;
  std::string site;
  std::string weighting;
  int d_max = 0;
  int kappa = 0;
  std::uint64_t seed = 0;
};

std::string cell_key(const std::string& dataset, const Cell& c) {
  std::ostringstream ss;
  ss << dataset << '|' << c.partition << '|' << c.selector << '|' << c.site
     << '|' << c.weighting << '|' << c.d_max << '|' << c.kappa << '|' << c.seed;
  return ss.str();
}

std::string record_key(const std::string& dataset, const ordered_json& r) {
  std::ostringstream ss;
  ss << dataset << '|' << r.value("partition", -1) << '|'
     << r.value("selector", "") << '|' << r.value("site", "") << '|'
     << r.value("weighting", "") << '|' << r.value("d_max", -1) << '|'
     << r.value("kappa", -1) << '|' << r.value("seed", std::uint64_t{0});
  return ss.str();
}

sgpc::Selector parse_selector(const std::string& name) {
  if (name == "entropy") return sgpc::Selector::entropy;
  if (name == "infogain") return sgpc::Selector::infogain;
  if (name == "validation") return sgpc::Selector::validation;
  if (name == "adaptive") return sgpc::Selector::adaptive;
  throw CLI::ValidationError("--selector", "unknown selector '" + name + "'");
}

int default_kappa(const std::string& selector) {
  if (selector == "validation") return 59;
  if (selector == "adaptive") return 2;
  return 1;  // exhaustive strategies ignore the working-set size
}

std::string dataset_label(const std::string& path) {
  std::filesystem::path p(path);
  std::string stem = p.stem().string();
  return stem.empty() ? path : stem;
}

struct RunOptions {
  std::string data_path;
  std::string format = "dense";
  std::string partitions_train;
  std::string partitions_test;
  int index_base = 1;
  int synth_count = 5;
  double train_frac = 0.5;
  std::vector<std::string> selectors{"adaptive"};
  std::string site = "moment";
  std::string weighting = "adaptive";
  std::vector<int> d_max{40};
  int kappa = 0;  // 0 = per-selector default
  int iter_max = 20;
  double tol = 1e-4;
  std::uint64_t seed = 0;
  int hyper_budget = 100;
  bool standardize = false;
  std::string out_path;
  std::string model_dir;
  int jobs = 1;
};

ordered_json run_cell(const sgpc::Dataset& data, const sgpc::PartitionSet& parts,
                      const RunOptions& opt, const std::string& dataset,
                      const Cell& cell) {
  ordered_json rec;
  rec["schema"] = kSchemaVersion;
  rec["dataset"] = dataset;
  rec["partition"] = cell.partition;
  rec["selector"] = cell.selector;
  rec["site"] = cell.site;
  rec["weighting"] = cell.weighting;
  rec["d_max"] = cell.d_max;
  rec["kappa"] = cell.kappa;
  rec["seed"] = cell.seed;
  try {
    const auto& train_rows = parts.train[static_cast<std::size_t>(cell.partition - 1)];
    const auto& test_rows = parts.test[static_cast<std::size_t>(cell.partition - 1)];
    sgpc::Dataset tr = sgpc::subset(data, train_rows);
    sgpc::Dataset te = sgpc::subset(data, test_rows);
    sgpc::require_two_classes(tr.y);
    if (opt.standardize) {
      auto std = sgpc::Standardizer::fit(tr.X);
      tr.X = std.apply(tr.X);
      te.X = std.apply(te.X);
    }

    sgpc::TrainConfig cfg;
    cfg.d_max = std::min(cell.d_max, tr.n());
    cfg.kappa = cell.kappa;
    cfg.selector = parse_selector(cell.selector);
    cfg.site_estimator = cell.site == "optimize" ? sgpc::SiteEstimator::optimize
                                                 : sgpc::SiteEstimator::moment;
    cfg.weighting = cell.weighting == "uniform" ? sgpc::Weighting::uniform
                                                : sgpc::Weighting::adaptive;
    cfg.iter_max = opt.iter_max;
    cfg.tol = opt.tol;
    cfg.hyper_budget = opt.hyper_budget;
    cfg.seed = sgpc::mix_seed(cell.seed, static_cast<std::uint64_t>(cell.partition));

    auto t0 = std::chrono::steady_clock::now();
    sgpc::TrainedModel tm = sgpc::train(tr.X, tr.y, cfg);
    auto t1 = std::chrono::steady_clock::now();
    sgpc::TestMetrics metrics = sgpc::evaluate_set(tm.model, te.X, te.y);

    rec["status"] = "ok";
    rec["test_error"] = metrics.error_rate;
    rec["test_nlp"] = metrics.nlp;
    rec["train_error"] = tm.train_error;
    rec["train_nlp"] = tm.train_nlp_holdout;
    rec["train_seconds"] = std::chrono::duration<double>(t1 - t0).count();
    rec["inclusions"] = tm.model.basis_size();
    rec["best_outer_iter"] = tm.best_outer_iter;

    if (!opt.model_dir.empty()) {
      std::filesystem::create_directories(opt.model_dir);
      std::ostringstream name;
      name << dataset << "_p" << cell.partition << '_' << cell.selector << '_'
           << cell.site << "_d" << cell.d_max << "_k" << cell.kappa << ".sgpc1";
      sgpc::save_model(tm.model, (std::filesystem::path(opt.model_dir) / name.str()).string());
    }
  } catch (const std::exception& e) {
    rec["status"] = "failed";
    rec["error"] = e.what();
  }
  return rec;
}

int cmd_run(const RunOptions& opt) {
  sgpc::Dataset data = sgpc::load_dataset(
      opt.data_path,
      opt.format == "sparse" ? sgpc::DataFormat::sparse : sgpc::DataFormat::dense);
  std::string dataset = dataset_label(opt.data_path);

  sgpc::PartitionSet parts;
  if (!opt.partitions_train.empty()) {
    parts = sgpc::load_partitions(opt.partitions_train, opt.partitions_test,
                                  data.n(), opt.index_base);
  } else {
    sgpc::Rng rng(sgpc::mix_seed(opt.seed, 0x706172746974ULL));
    parts = sgpc::synth_partitions(data.y, opt.synth_count, opt.train_frac, rng);
  }

  std::vector<Cell> cells;
  for (int p = 1; p <= parts.count(); ++p)
    for (const auto& sel : opt.selectors)
      for (int dm : opt.d_max) {
        Cell c;
        c.partition = p;
        c.selector = sel;
        c.site = opt.site;
        c.weighting = opt.weighting;
        c.d_max = dm;
        c.kappa = opt.kappa > 0 ? opt.kappa : default_kappa(sel);
        c.seed = opt.seed;
        cells.push_back(c);
      }

  // A crashed sweep resumes by skipping cells already recorded as ok.
  std::set<std::string> done;
  if (!opt.out_path.empty() && std::filesystem::exists(opt.out_path)) {
    std::ifstream prev(opt.out_path);
    std::string line;
    while (std::getline(prev, line)) {
      if (line.empty()) continue;
      ordered_json r = ordered_json::parse(line, nullptr, false);
      if (r.is_discarded() || r.value("status", "") != "ok") continue;
      done.insert(record_key(dataset, r));
    }
  }

  std::ofstream out_file;
  if (!opt.out_path.empty()) {
    out_file.open(opt.out_path, std::ios::app);
    if (!out_file) {
      std::cerr << "cannot open " << opt.out_path << " for append\n";
      return 1;
    }
  }
  std::ostream& out = opt.out_path.empty() ? std::cout : out_file;

  bool all_ok = true;
  std::size_t next = 0;
  int jobs = std::max(1, opt.jobs);
  while (next < cells.size()) {
    std::vector<std::pair<std::size_t, std::future<ordered_json>>> batch;
    while (next < cells.size() && static_cast<int>(batch.size()) < jobs) {
      const Cell& c = cells[next];
      if (done.count(cell_key(dataset, c))) {
        ++next;
        continue;
      }
      batch.emplace_back(next, std::async(std::launch::async, run_cell,
                                          std::cref(data), std::cref(parts),
                                          std::cref(opt), dataset, c));
      ++next;
    }
    for (auto& [idx, fut] : batch) {
      ordered_json rec = fut.get();
      if (rec.value("status", "") != "ok") all_ok = false;
      out << rec.dump() << '\n';
      out.flush();
    }
  }
  return all_ok ? 0 : 1;
}

struct GroupStats {
  std::vector<double> err, nlp;
};

int cmd_summarize(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) {
    std::cerr << "cannot open " << in_path << '\n';
    return 1;
  }
  std::map<std::tuple<std::string, std::string, std::string, int, int>, GroupStats>
      groups;
  std::string line;
  int parsed = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json r = ordered_json::parse(line, nullptr, false);
    if (r.is_discarded()) continue;
    if (r.value("status", "") != "ok") continue;
    auto key = std::make_tuple(r.value("dataset", ""), r.value("selector", ""),
                               r.value("site", ""), r.value("d_max", 0),
                               r.value("kappa", 0));
    groups[key].err.push_back(r.value("test_error", 0.0));
    groups[key].nlp.push_back(r.value("test_nlp", 0.0));
    ++parsed;
  }
  if (parsed == 0) {
    std::cerr << "no usable records in " << in_path << '\n';
    return 1;
  }

  auto mean_sd = [](const std::vector<double>& v) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return std::make_pair(mean, sd);
  };

  std::ofstream out_file;
  if (!out_path.empty()) {
    out_file.open(out_path);
    if (!out_file) {
      std::cerr << "cannot open " << out_path << '\n';
      return 1;
    }
  }
  std::ostream& out = out_path.empty() ? std::cout : out_file;
  out << "dataset\tselector\tsite\td_max\tkappa\truns\t"
         "err_mean\terr_sd\tnlp_mean\tnlp_sd\n";
  out << std::setprecision(6) << std::fixed;
  for (const auto& [key, g] : groups) {
    auto [em, es] = mean_sd(g.err);
    auto [nm, ns] = mean_sd(g.nlp);
    out << std::get<0>(key) << '\t' << std::get<1>(key) << '\t'
        << std::get<2>(key) << '\t' << std::get<3>(key) << '\t'
        << std::get<4>(key) << '\t' << g.err.size() << '\t' << em << '\t' << es
        << '\t' << nm << '\t' << ns << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse GP classifier benchmark harness"};
  app.require_subcommand(1);

  RunOptions opt;
  CLI::App* run = app.add_subcommand("run", "Train over a sweep and emit one JSON record per cell");
  run->add_option("--data", opt.data_path, "dataset file")->required();
  run->add_option("--format", opt.format, "dense | sparse")
      ->check(CLI::IsMember({"dense", "sparse"}));
  run->add_option("--partitions-train", opt.partitions_train,
                  "partition file of train index lines");
  run->add_option("--partitions-test", opt.partitions_test,
                  "partition file of test index lines");
  run->add_option("--index-base", opt.index_base,
                  "indexing origin of partition files");
  run->add_option("--synth-partitions", opt.synth_count,
                  "number of generated splits when no partition files are given");
  run->add_option("--train-frac", opt.train_frac,
                  "train fraction for generated splits");
  run->add_option("--selector", opt.selectors,
                  "entropy | infogain | validation | adaptive (repeatable)");
  run->add_option("--site", opt.site, "moment | optimize")
      ->check(CLI::IsMember({"moment", "optimize"}));
  run->add_option("--weighting", opt.weighting,
                  "adaptive | uniform (working-set sampler for the adaptive selector)")
      ->check(CLI::IsMember({"adaptive", "uniform"}));
  run->add_option("--dmax", opt.d_max, "basis budget (repeatable)");
  run->add_option("--kappa", opt.kappa,
                  "working-set size; 0 picks the per-selector default");
  run->add_option("--itermax", opt.iter_max, "outer iterations");
  run->add_option("--tol", opt.tol, "outer loss-change stop threshold");
  run->add_option("--seed", opt.seed, "sweep seed");
  run->add_option("--hyper-budget", opt.hyper_budget,
                  "hyperparameter objective evaluations per outer iteration");
  run->add_flag("--standardize", opt.standardize,
                "z-score features with train-split statistics");
  run->add_option("--out", opt.out_path, "records file (append); stdout if omitted");
  run->add_option("--model-dir", opt.model_dir, "directory for saved models");
  run->add_option("--jobs", opt.jobs, "concurrent cells");

  std::string sum_in, sum_out;
  CLI::App* summarize =
      app.add_subcommand("summarize", "Aggregate records per (dataset, method, d_max)");
  summarize->add_option("--in", sum_in, "records file")->required();
  summarize->add_option("--out", sum_out, "summary file; stdout if omitted");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (opt.partitions_train.empty() != opt.partitions_test.empty()) {
        std::cerr << "--partitions-train and --partitions-test go together\n";
        return 1;
      }
      for (const auto& s : opt.selectors) parse_selector(s);
      return cmd_run(opt);
    }
    return cmd_summarize(sum_in, sum_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
