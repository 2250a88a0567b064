#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "repsample/harness.hpp"
#include "repsample/ingest.hpp"
#include "repsample/theory.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace repsample;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  in >> j;
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
}

Metric metric_from_config(const json& cfg) {
  Metric m = metric_from_name(cfg.value("metric", "L2"));
  m.epsilon = cfg.value("metric_epsilon", 1e-6);
  return m;
}

std::vector<PolicyConfig> policies_from_config(const json& cfg) {
  std::vector<PolicyConfig> out;
  DpbrsOptions dpbrs;
  if (cfg.contains("dpbrs")) {
    dpbrs.max_iters = cfg.at("dpbrs").value("max_iters", 500);
    dpbrs.tol = cfg.at("dpbrs").value("tol", 1e-8);
  }
  if (!cfg.contains("policies")) {
    for (const char* name : {"OPT", "PBRS", "DPBRS", "Random"}) {
      PolicyConfig pc;
      pc.kind = policy_from_name(name);
      pc.dpbrs = dpbrs;
      out.push_back(pc);
    }
    return out;
  }
  for (const auto& p : cfg.at("policies")) {
    PolicyConfig pc;
    pc.dpbrs = dpbrs;
    if (p.is_string()) {
      pc.kind = policy_from_name(p.get<std::string>());
    } else {
      pc.kind = policy_from_name(p.at("name").get<std::string>());
      pc.epsilon = p.value("epsilon", 0.1);
    }
    out.push_back(pc);
  }
  return out;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed,
                 std::optional<int> replicates) {
  const json cfg = load_config(config_path);
  SimulateConfig sim;
  sim.m = cfg.value("m", 20);
  sim.d = cfg.value("d", 3);
  sim.T = cfg.value("T", 50);
  sim.k = cfg.value("k", 40);
  sim.replicates = replicates.value_or(cfg.value("replicates", 100));
  sim.seed = seed.value_or(cfg.value("seed", 0));

  // Empirical arm pool from an ingested CSV, resized to m per the sampling
  // procedure; otherwise a synthetic pool is drawn per replicate.
  std::optional<std::vector<Site>> base_sites;
  json pool_info;
  if (cfg.contains("csv") && cfg.contains("schema")) {
    const auto table = read_csv_file(cfg.at("csv").get<std::string>());
    const auto schema =
        schema_from_json_file(cfg.at("schema").get<std::string>());
    const auto ingest = preprocess(table, schema);
    auto part = partition_sites(ingest, schema.min_site_size);
    Rng pool_rng = Rng(sim.seed).derive(stream::kSites);
    auto sites = resize_arm_pool(std::move(part.sites), sim.m, pool_rng);
    const auto mask = majority_mask(sites);
    for (auto& s : sites) s.majority_one = mask;
    sim.d = static_cast<int>(sites.front().dim());
    pool_info = {{"csv", cfg.at("csv")},
                 {"qualifying_sites", part.site_keys.size()},
                 {"excluded_records", part.excluded_records}};
    base_sites = std::move(sites);
  }

  sim.v = cfg.contains("v") ? cfg.at("v").get<std::vector<double>>()
                            : std::vector<double>(sim.d, 0.5);
  sim.metric = metric_from_config(cfg);
  sim.policies = policies_from_config(cfg);
  if (cfg.contains("prior")) {
    const auto& p = cfg.at("prior");
    const std::string source = p.value("source", "truth_noisy");
    if (source == "uniform")
      sim.prior_source = PriorSource::Uniform;
    else if (source == "target")
      sim.prior_source = PriorSource::Target;
    else if (source == "truth_noisy")
      sim.prior_source = PriorSource::TruthNoisy;
    else
      throw std::runtime_error("unknown prior source: " + source);
    sim.prior_noise = p.value("noise", 0.1);
    sim.prior_strength = p.value("strength", 5.0);
  }
  sim.beta_boost = cfg.value("beta", 1.0);
  sim.improvement = cfg.value("improvement", "posterior_mean") == "sample"
                        ? ImprovementMode::Sample
                        : ImprovementMode::PosteriorMean;
  if (cfg.contains("bias")) {
    ResponseBiasConfig b;
    b.lambda = cfg.at("bias").value("lambda", 1.0);
    b.gamma = cfg.at("bias").value("gamma", 0);
    sim.bias = b;
  }
  sim.alpha = cfg.value("alpha", 0.0);
  if (cfg.contains("synthetic")) {
    const auto& s = cfg.at("synthetic");
    sim.synth.mean_lo = s.value("mean_lo", 0.1);
    sim.synth.mean_hi = s.value("mean_hi", 0.9);
    sim.synth.records_per_site = s.value("records_per_site", 0);
  }

  const auto out =
      base_sites ? run_simulation(sim, *base_sites) : run_simulation(sim);

  fs::create_directories(out_dir);
  write_trajectory_csv((fs::path(out_dir) / "trajectory.csv").string(), out,
                       sim.policies.size() > 1);
  write_final_csv((fs::path(out_dir) / "final.csv").string(), out);

  json summary;
  summary["command"] = "simulate";
  summary["seed"] = sim.seed;
  summary["config"] = cfg;
  summary["replicates"] = sim.replicates;
  if (!pool_info.is_null()) summary["arm_pool"] = pool_info;
  summary["biased_site_ids"] = out.biased_site_ids;
  json means;
  const auto mfd = mean_final_distance(out, sim);
  for (std::size_t i = 0; i < sim.policies.size(); ++i)
    means[policy_name(sim.policies[i].kind)] = format_double(mfd[i]);
  summary["mean_final_distance"] = means;
  write_json(fs::path(out_dir) / "summary.json", summary);
  std::cout << "wrote " << out_dir << "/trajectory.csv, final.csv, summary.json"
            << std::endl;
  return 0;
}

int cmd_theory(const std::string& config_path, const std::string& out_dir,
               std::optional<std::uint64_t> seed) {
  const json cfg = load_config(config_path);
  const std::uint64_t master_seed = seed.value_or(cfg.value("seed", 0));
  const int n_test = cfg.value("n_test", 1000);

  json rows = cfg.value("rows", json::array());
  if (rows.empty()) {
    rows = json::array({
        {{"sigma0", 2.0}, {"sigma1", 1.0}, {"n0", 100}, {"n1", 100}, {"trials", 20000}},
        {{"sigma0", 2.0}, {"sigma1", 1.0}, {"n0", 400}, {"n1", 400}, {"trials", 20000}},
        {{"sigma0", 2.0}, {"sigma1", 1.0}, {"n0", 200}, {"n1", 50}, {"trials", 20000}},
        {{"sigma0", 1.0}, {"sigma1", 1.0}, {"n0", 100}, {"n1", 100}, {"trials", 20000}},
    });
  }

  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / "theory.csv", std::ios::binary);
  csv << "sigma0,sigma1,n0,n1,trials,closed_form,mc_mean,mc_stderr,feasible_"
         "at_delta_005,min_n0,min_n1\n";
  int row_index = 0;
  for (const auto& row : rows) {
    const double s0 = row.at("sigma0").get<double>();
    const double s1 = row.at("sigma1").get<double>();
    const int n0 = row.at("n0").get<int>();
    const int n1 = row.at("n1").get<int>();
    const int trials = row.value("trials", 10000);
    Rng rng = Rng(master_seed).derive(stream::kTrial,
                                      static_cast<std::uint64_t>(row_index++));
    McConfig mc_cfg;
    mc_cfg.n_test = n_test;
    const auto mc = monte_carlo_unfairness(
        UnivariateGroupModel::with_sigmas(s0, s1), n0, n1, trials, rng, mc_cfg);
    const double closed = expected_unfairness(s0, s1, n0, n1);
    const auto bounds = sample_bounds(s0, s1, n0, n1, 0.05);
    csv << format_double(s0) << ',' << format_double(s1) << ',' << n0 << ','
        << n1 << ',' << trials << ',' << format_double(closed) << ','
        << format_double(mc.mean) << ',' << format_double(mc.stderr_mean)
        << ',' << (bounds.feasible ? 1 : 0) << ','
        << format_double(bounds.min_n0) << ',' << format_double(bounds.min_n1)
        << '\n';
  }
  csv.close();

  json summary;
  summary["command"] = "theory";
  summary["seed"] = master_seed;
  summary["config"] = cfg;
  write_json(fs::path(out_dir) / "summary.json", summary);
  std::cout << "wrote " << out_dir << "/theory.csv, summary.json" << std::endl;
  return 0;
}

struct LoadedData {
  std::vector<Record> records;
  std::vector<std::string> locations;
  json provenance;
};

LoadedData load_data(const json& cfg, std::uint64_t seed) {
  LoadedData out;
  if (cfg.contains("task")) {
    const auto& t = cfg.at("task");
    const std::string kind_name = t.value("kind", "noisy_minority");
    const TaskKind kind = kind_name == "xor_group" ? TaskKind::XorGroup
                                                   : TaskKind::NoisyMinority;
    Rng rng = Rng(seed).derive(stream::kTask);
    out.records = make_two_group_task(kind, t.value("n", 4000),
                                      t.value("p1", 0.5), rng);
    out.provenance = {{"task", kind_name}, {"n", out.records.size()}};
    return out;
  }
  if (cfg.contains("csv") && cfg.contains("schema")) {
    const auto table = read_csv_file(cfg.at("csv").get<std::string>());
    const auto schema = schema_from_json_file(cfg.at("schema").get<std::string>());
    auto ingest = preprocess(table, schema);
    out.records = std::move(ingest.records);
    out.locations = std::move(ingest.locations);
    out.provenance = {{"csv", cfg.at("csv")},
                      {"rows_in", ingest.rows_in},
                      {"rows_dropped", ingest.rows_dropped}};
    return out;
  }
  throw std::runtime_error(
      "config needs either a \"task\" block or \"csv\" + \"schema\"");
}

LearnerConfig learner_from_config(const json& cfg) {
  LearnerConfig learner;
  const json l = cfg.value("learner", json::object());
  const std::string kind = l.value("kind", "gbdt");
  if (kind == "logistic") {
    learner.kind = LearnerKind::Logistic;
    learner.logistic.class_balanced = l.value("class_balanced", true);
    learner.logistic.max_iter = l.value("max_iter", 500);
  } else {
    learner.kind = LearnerKind::Gbdt;
    learner.gbdt.max_depth = l.value("depth", 3);
    learner.gbdt.n_estimators = l.value("estimators", 100);
    learner.gbdt.learning_rate = l.value("learning_rate", 0.1);
    learner.gbdt.class_balanced = l.value("class_balanced", true);
  }
  return learner;
}

std::vector<double> proportions_from_config(const json& cfg, int def_count) {
  if (cfg.contains("proportions")) {
    const auto& p = cfg.at("proportions");
    if (p.is_array()) return p.get<std::vector<double>>();
    const int count = p.value("count", def_count);
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
      out[i] = count > 1 ? static_cast<double>(i) / (count - 1) : 0.5;
    return out;
  }
  std::vector<double> out(static_cast<std::size_t>(def_count));
  for (int i = 0; i < def_count; ++i)
    out[i] = def_count > 1 ? static_cast<double>(i) / (def_count - 1) : 0.5;
  return out;
}

// Partition a record pool into m site pools, either by their location values
// or by a seeded random split (for sources without locations).
std::vector<Site> sites_for_fold(const std::vector<Record>& train,
                                 const std::vector<std::string>& locations,
                                 const json& cfg, std::size_t group_coord,
                                 Rng& rng) {
  if (!locations.empty()) {
    IngestResult tmp;
    tmp.records = train;
    tmp.locations = locations;
    const int min_size = cfg.value("min_site_size", 1000);
    auto part = partition_sites(tmp, min_size);
    return std::move(part.sites);
  }
  const int m = cfg.value("sites", json::object()).value("random_split", 10);
  const auto perm = rng.permutation(train.size());
  std::vector<std::vector<Record>> buckets(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < perm.size(); ++i)
    buckets[i % static_cast<std::size_t>(m)].push_back(train[perm[i]]);
  std::vector<Site> sites;
  for (int j = 0; j < m; ++j)
    sites.push_back(Site::empirical(j, std::move(buckets[j])));
  (void)group_coord;
  return sites;
}

// Project records onto a single sensitive coordinate so arm-based collection
// can target a one-dimensional proportion.
std::vector<Record> project_group(const std::vector<Record>& records,
                                  std::size_t coord) {
  std::vector<Record> out = records;
  for (Record& r : out) r.a = {r.a.at(coord) != 0.0 ? 1.0 : 0.0};
  return out;
}

int cmd_fairness_sweep(const std::string& config_path,
                       const std::string& out_dir,
                       std::optional<std::uint64_t> seed) {
  const json cfg = load_config(config_path);
  const std::uint64_t master_seed = seed.value_or(cfg.value("seed", 0));
  auto data = load_data(cfg, master_seed);
  const std::size_t group_coord = cfg.value("group_coord", 0);
  const int folds = cfg.value("folds", 4);
  const int budget = cfg.value("budget", 2000);
  const int T = cfg.value("T", 50);
  const int k = cfg.value("k", 40);
  const LearnerConfig learner = learner_from_config(cfg);
  const auto proportions = proportions_from_config(cfg, 200);
  const auto samplers = cfg.value(
      "samplers", std::vector<std::string>{"SRS", "fair_direct"});

  const Rng root(master_seed);
  Rng fold_rng = root.derive(stream::kFolds);
  const auto fold_of = assign_folds(data.records.size(), folds, fold_rng);

  std::vector<FairnessCell> cells;
  for (int f = 0; f < folds; ++f) {
    std::vector<Record> train, test;
    std::vector<std::string> train_locations;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
      if (fold_of[i] == f) {
        test.push_back(data.records[i]);
      } else {
        train.push_back(data.records[i]);
        if (!data.locations.empty())
          train_locations.push_back(data.locations[i]);
      }
    }
    std::vector<int> test_labels, test_groups;
    for (const Record& r : test) {
      test_labels.push_back(r.y);
      test_groups.push_back(r.a.at(group_coord) != 0.0 ? 1 : 0);
    }

    for (const std::string& sampler : samplers) {
      Rng srng = root.derive(stream::kSample, static_cast<std::uint64_t>(f))
                     .derive(std::hash<std::string>{}(sampler));
      if (sampler == "SRS") {
        for (std::size_t pi = 0; pi < proportions.size(); ++pi) {
          Rng cell_rng = srng.derive(pi);
          SrsResult srs;
          try {
            srs = srs_sample(train, group_coord, proportions[pi], budget,
                             cell_rng);
          } catch (const std::runtime_error&) {
            continue;  // empty group at the sweep extreme
          }
          const auto scores = train_and_score(srs.records, test, learner);
          cells.push_back({sampler, proportions[pi], f,
                           group_report(scores, test_labels, test_groups)});
        }
      } else if (sampler == "OPT" || sampler == "DPBRS" ||
                 sampler == "arm_OPT" || sampler == "arm_DPBRS") {
        const std::string policy =
            sampler.rfind("arm_", 0) == 0 ? sampler.substr(4) : sampler;
        const auto projected = project_group(train, group_coord);
        for (std::size_t pi = 0; pi < proportions.size(); ++pi) {
          Rng cell_rng = srng.derive(pi);
          auto sites = sites_for_fold(projected, train_locations, cfg,
                                      group_coord, cell_rng);
          PolicyConfig pc;
          pc.kind = policy_from_name(policy);
          RunSpec spec;
          spec.T = T;
          spec.k = k;
          spec.v = {proportions[pi]};
          spec.metric = Metric{MetricKind::L2};
          PriorSpec prior;
          prior.kind = PriorSpec::Kind::Means;
          prior.strength = 5.0;
          for (const Site& s : sites)
            prior.means.push_back(s.effective_mean(std::nullopt));
          PolicyState state = make_binary_state(
              static_cast<int>(sites.size()), 1, T, spec.v, prior);
          auto res = run_collection(spec, std::move(sites), pc,
                                    std::move(state), cell_rng);
          const auto collected = res.dataset.all_records();
          const auto scores = train_and_score(collected, test, learner);
          cells.push_back({"arm_" + policy, proportions[pi], f,
                           group_report(scores, test_labels, test_groups)});
        }
      } else if (sampler == "fair_arm") {
        const int repeats = cfg.value("fair_repeats", 5);
        for (int rep = 0; rep < repeats; ++rep) {
          Rng cell_rng = srng.derive(static_cast<std::uint64_t>(rep));
          auto sites = sites_for_fold(train, train_locations, cfg, group_coord,
                                      cell_rng);
          auto res = fair_arm_loop(std::move(sites), learner, test,
                                   std::max(1, budget / k - 1), k, group_coord,
                                   cell_rng);
          double p1 = 0.0;
          for (const Record& r : res.dataset)
            p1 += r.a.at(group_coord) != 0.0 ? 1.0 : 0.0;
          p1 /= static_cast<double>(res.dataset.size());
          const auto scores = train_and_score(res.dataset, test, learner);
          cells.push_back({sampler, p1, f,
                           group_report(scores, test_labels, test_groups)});
        }
      } else if (sampler == "fair_direct") {
        const int repeats = cfg.value("fair_repeats", 5);
        for (int rep = 0; rep < repeats; ++rep) {
          Rng cell_rng = srng.derive(static_cast<std::uint64_t>(rep));
          auto res =
              fair_direct_loop(train, learner, budget, group_coord, cell_rng);
          double p1 = 0.0;
          for (const Record& r : res.dataset)
            p1 += r.a.at(group_coord) != 0.0 ? 1.0 : 0.0;
          p1 /= static_cast<double>(res.dataset.size());
          const auto scores = train_and_score(res.dataset, test, learner);
          cells.push_back({sampler, p1, f,
                           group_report(scores, test_labels, test_groups)});
        }
      } else {
        throw std::runtime_error("unknown sampler: " + sampler);
      }
    }
  }

  fs::create_directories(out_dir);
  write_fairness_csv((fs::path(out_dir) / "fairness.csv").string(), cells);
  json summary;
  summary["command"] = "fairness-sweep";
  summary["seed"] = master_seed;
  summary["config"] = cfg;
  summary["data"] = data.provenance;
  summary["cells"] = cells.size();
  write_json(fs::path(out_dir) / "summary.json", summary);
  std::cout << "wrote " << out_dir << "/fairness.csv, summary.json"
            << std::endl;
  return 0;
}

int cmd_complexity_sweep(const std::string& config_path,
                         const std::string& out_dir,
                         std::optional<std::uint64_t> seed) {
  const json cfg = load_config(config_path);
  const std::uint64_t master_seed = seed.value_or(cfg.value("seed", 0));
  auto data = load_data(cfg, master_seed);

  ComplexitySweepConfig sweep;
  sweep.depths = cfg.value("depths", std::vector<int>{1, 3});
  sweep.estimators = cfg.value("estimators", std::vector<int>{10, 100});
  sweep.proportions = proportions_from_config(cfg, 21);
  sweep.folds = cfg.value("folds", 10);
  sweep.group_coord = cfg.value("group_coord", 0);
  sweep.learning_rate = cfg.value("learning_rate", 0.1);
  sweep.class_balanced = cfg.value("class_balanced", true);
  sweep.seed = master_seed;

  const auto cells = complexity_sweep(data.records, sweep);

  fs::create_directories(out_dir);
  write_complexity_csv((fs::path(out_dir) / "complexity.csv").string(), cells);
  json summary;
  summary["command"] = "complexity-sweep";
  summary["seed"] = master_seed;
  summary["config"] = cfg;
  summary["data"] = data.provenance;
  summary["cells"] = cells.size();
  write_json(fs::path(out_dir) / "summary.json", summary);
  std::cout << "wrote " << out_dir << "/complexity.csv, summary.json"
            << std::endl;
  return 0;
}

int cmd_ingest(const std::string& schema_path, const std::string& input_path,
               const std::string& out_dir) {
  const auto table = read_csv_file(input_path);
  const auto schema = schema_from_json_file(schema_path);
  const auto result = preprocess(table, schema);

  json summary;
  summary["command"] = "ingest";
  summary["input"] = input_path;
  summary["rows_in"] = result.rows_in;
  summary["rows_dropped"] = result.rows_dropped;
  summary["rows_kept"] = result.records.size();
  summary["feature_columns"] = result.feature_names;
  summary["sensitive_columns"] = result.sensitive_names;

  if (!schema.location.empty()) {
    const auto part = partition_sites(result, schema.min_site_size);
    json sites = json::array();
    for (std::size_t i = 0; i < part.sites.size(); ++i)
      sites.push_back({{"location", part.site_keys[i]},
                       {"records", part.sites[i].records().size()}});
    summary["sites"] = sites;
    summary["excluded_locations"] = part.excluded_locations;
    summary["excluded_records"] = part.excluded_records;
  }

  fs::create_directories(out_dir);
  write_json(fs::path(out_dir) / "ingest_summary.json", summary);
  std::cout << "wrote " << out_dir << "/ingest_summary.json" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Representative multi-site sampling and downstream fairness"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", input_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;

  const auto add_common = [&](CLI::App* cmd, bool with_replicates = false) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "master seed (overrides config)");
    if (with_replicates)
      cmd->add_option("--replicates", replicates,
                      "replicate count (overrides config)");
  };

  auto* simulate = app.add_subcommand(
      "simulate", "Run site-selection policies on a synthetic pool");
  add_common(simulate, true);

  auto* theory = app.add_subcommand(
      "theory", "Closed-form vs Monte Carlo unfairness comparison");
  add_common(theory);

  auto* fsweep = app.add_subcommand(
      "fairness-sweep", "Group-proportion sweeps with fairness reports");
  add_common(fsweep);

  auto* csweep = app.add_subcommand(
      "complexity-sweep", "Model-complexity grids with fairness reports");
  add_common(csweep);

  auto* ingest = app.add_subcommand("ingest", "Load and preprocess a CSV");
  ingest->add_option("--config", config_path, "schema JSON")->required();
  ingest->add_option("--input", input_path, "CSV file")->required();
  ingest->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed())
      return cmd_simulate(config_path, out_dir, seed, replicates);
    if (theory->parsed()) return cmd_theory(config_path, out_dir, seed);
    if (fsweep->parsed()) return cmd_fairness_sweep(config_path, out_dir, seed);
    if (csweep->parsed())
      return cmd_complexity_sweep(config_path, out_dir, seed);
    if (ingest->parsed()) return cmd_ingest(config_path, input_path, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
