#include "repsample/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace repsample {

// ---------------------------------------------------------------------------
// Collection loop
// ---------------------------------------------------------------------------

CollectionResult run_collection(const RunSpec& spec, std::vector<Site> sites,
                                const PolicyConfig& policy, PolicyState state,
                                const Rng& rng) {
  if (spec.T < 1 || spec.k < 1)
    throw std::invalid_argument("run_collection: T and k must be >= 1");
  if (sites.empty()) throw std::invalid_argument("run_collection: no sites");

  CollectionResult result;
  result.dataset = CollectedDataset(spec.v.size());

  const auto compute_means = [&] {
    std::vector<std::vector<double>> means;
    means.reserve(sites.size());
    for (const Site& s : sites) means.push_back(s.effective_mean(spec.bias));
    return means;
  };
  auto true_means = compute_means();

  for (int t = 1; t <= spec.T; ++t) {
    Rng policy_rng = rng.derive(stream::kPolicy, static_cast<std::uint64_t>(t));
    const Allocation alloc =
        select_allocation(policy, state, result.dataset, spec.v, spec.metric,
                          spec.k, policy_rng, true_means);
    result.optimizer_warning |= alloc.warning;

    std::vector<Record> step_batch;
    std::vector<std::pair<int, std::vector<SensitiveVector>>> drawn;
    step_batch.reserve(static_cast<std::size_t>(spec.k));
    for (std::size_t j = 0; j < sites.size(); ++j) {
      const int c = alloc.counts[j];
      if (c <= 0) continue;
      Rng site_rng =
          rng.derive(stream::kSample, static_cast<std::uint64_t>(t)).derive(j);
      auto batch = sample_batch(sites[j], c, spec.bias, site_rng);
      std::vector<SensitiveVector> avecs;
      avecs.reserve(batch.size());
      for (const Record& r : batch) avecs.push_back(r.a);
      drawn.emplace_back(static_cast<int>(j), std::move(avecs));
      for (Record& r : batch) step_batch.push_back(std::move(r));
    }
    result.dataset.add_batch(std::move(step_batch));

    if (spec.alpha > 0.0) {
      for (std::size_t j = 0; j < sites.size(); ++j)
        if (alloc.rho[j] > 0.0)
          apply_causal_shift(sites[j], alloc.rho[j], spec.alpha);
      true_means = compute_means();
    }

    for (auto& [j, avecs] : drawn)
      update_priors(state, avecs, j, t, result.dataset, spec.v);

    result.trajectory.push_back(
        distance(spec.metric, spec.v, result.dataset.mean()));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Simulation experiments
// ---------------------------------------------------------------------------

namespace {

PriorSpec build_prior(const SimulateConfig& config,
                      const std::vector<Site>& sites, Rng prior_rng) {
  PriorSpec spec;
  spec.strength = config.prior_strength;
  switch (config.prior_source) {
    case PriorSource::Uniform:
      spec.kind = PriorSpec::Kind::Uniform;
      break;
    case PriorSource::Target:
      spec.kind = PriorSpec::Kind::Target;
      break;
    case PriorSource::TruthNoisy: {
      spec.kind = PriorSpec::Kind::Means;
      for (const Site& s : sites) {
        auto m = s.effective_mean(std::nullopt);  // unbiased demographics
        for (double& x : m)
          x = std::clamp(x + config.prior_noise * prior_rng.gaussian(), 0.02,
                         0.98);
        spec.means.push_back(std::move(m));
      }
      break;
    }
  }
  return spec;
}

}  // namespace

namespace {

SimulateOutput run_simulation_impl(const SimulateConfig& config,
                                   const std::vector<Site>* base_sites) {
  if (config.policies.empty())
    throw std::invalid_argument("run_simulation: no policies configured");
  if (config.replicates < 1)
    throw std::invalid_argument("run_simulation: replicates must be >= 1");
  if (config.v.size() != static_cast<std::size_t>(config.d))
    throw std::invalid_argument("run_simulation: target dimension != d");

  const Rng root(config.seed);
  SimulateOutput out;

  std::vector<bool> biased(static_cast<std::size_t>(config.m), false);
  if (config.bias && config.bias->gamma > 0) {
    if (config.bias->gamma > config.m)
      throw std::invalid_argument("run_simulation: gamma exceeds m");
    Rng bias_rng = root.derive(stream::kBias);
    const auto perm = bias_rng.permutation(static_cast<std::size_t>(config.m));
    for (int i = 0; i < config.bias->gamma; ++i) {
      biased[perm[static_cast<std::size_t>(i)]] = true;
      out.biased_site_ids.push_back(static_cast<int>(perm[i]));
    }
    std::sort(out.biased_site_ids.begin(), out.biased_site_ids.end());
  }

  RunSpec spec;
  spec.T = config.T;
  spec.k = config.k;
  spec.v = config.v;
  spec.metric = config.metric;
  spec.bias = config.bias;
  spec.alpha = config.alpha;

  SyntheticSitesConfig synth = config.synth;
  if (synth.ensure_straddle && synth.target.empty()) synth.target = config.v;

  for (const PolicyConfig& policy : config.policies) {
    for (int rep = 0; rep < config.replicates; ++rep) {
      const Rng rep_rng =
          root.derive(stream::kReplicate, static_cast<std::uint64_t>(rep));
      std::vector<Site> sites;
      if (base_sites) {
        sites = *base_sites;  // pristine copy, bias state reset
      } else {
        Rng site_rng = rep_rng.derive(stream::kSites);
        sites = make_synthetic_sites(config.m, config.d, synth, site_rng);
      }
      if (sites.size() != static_cast<std::size_t>(config.m))
        throw std::invalid_argument("run_simulation: site pool size != m");
      for (std::size_t j = 0; j < sites.size(); ++j)
        sites[j].response_biased = biased[j];

      const PriorSpec prior =
          build_prior(config, sites, rep_rng.derive(stream::kPrior));
      PolicyState state =
          make_binary_state(config.m, config.d, config.T, config.v, prior,
                            config.beta_boost, config.improvement);

      auto res = run_collection(spec, std::move(sites), policy,
                                std::move(state), rep_rng);
      PolicyRun run;
      run.policy = policy_name(policy.kind);
      run.replicate = rep;
      run.final_distance = res.trajectory.back();
      run.trajectory = std::move(res.trajectory);
      out.runs.push_back(std::move(run));
    }
  }
  return out;
}

}  // namespace

SimulateOutput run_simulation(const SimulateConfig& config) {
  return run_simulation_impl(config, nullptr);
}

SimulateOutput run_simulation(const SimulateConfig& config,
                              const std::vector<Site>& base_sites) {
  return run_simulation_impl(config, &base_sites);
}

std::vector<double> mean_final_distance(const SimulateOutput& out,
                                        const SimulateConfig& config) {
  std::vector<double> means(config.policies.size(), 0.0);
  for (std::size_t p = 0; p < config.policies.size(); ++p) {
    const std::string name = policy_name(config.policies[p].kind);
    double sum = 0.0;
    int n = 0;
    for (const auto& run : out.runs)
      if (run.policy == name) {
        sum += run.final_distance;
        ++n;
      }
    means[p] = n > 0 ? sum / n : 0.0;
  }
  return means;
}

// ---------------------------------------------------------------------------
// Group-targeted dataset construction
// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> group_indices(const std::vector<Record>& pool,
                                       std::size_t coord, int group) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if ((pool[i].a.at(coord) != 0.0) == (group == 1)) idx.push_back(i);
  return idx;
}

std::vector<std::size_t> draw_without_replacement(
    const std::vector<std::size_t>& from, std::size_t count, Rng& rng) {
  auto perm = rng.permutation(from.size());
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(from[perm[i]]);
  return out;
}

}  // namespace

SrsResult srs_sample(const std::vector<Record>& pool, std::size_t group_coord,
                     double proportion, int n, Rng& rng) {
  if (proportion < 0.0 || proportion > 1.0)
    throw std::invalid_argument("srs_sample: proportion outside [0,1]");
  if (n < 1) throw std::invalid_argument("srs_sample: n must be >= 1");

  const auto g0 = group_indices(pool, group_coord, 0);
  const auto g1 = group_indices(pool, group_coord, 1);
  std::size_t n1 = static_cast<std::size_t>(
      std::llround(proportion * static_cast<double>(n)));
  std::size_t n0 = static_cast<std::size_t>(n) - n1;

  SrsResult out;
  if (n1 > 0 && g1.empty())
    throw std::runtime_error("srs_sample: group 1 is empty");
  if (n0 > 0 && g0.empty())
    throw std::runtime_error("srs_sample: group 0 is empty");
  if (n1 > g1.size()) {
    n1 = g1.size();
    out.capped = true;
  }
  if (n0 > g0.size()) {
    n0 = g0.size();
    out.capped = true;
  }

  for (const std::size_t i : draw_without_replacement(g0, n0, rng))
    out.records.push_back(pool[i]);
  for (const std::size_t i : draw_without_replacement(g1, n1, rng))
    out.records.push_back(pool[i]);
  return out;
}

std::vector<double> train_and_score(const std::vector<Record>& train,
                                    const std::vector<Record>& eval,
                                    const LearnerConfig& learner) {
  std::vector<std::vector<double>> X, Xe;
  std::vector<int> y;
  X.reserve(train.size());
  y.reserve(train.size());
  for (const Record& r : train) {
    X.push_back(r.x);
    y.push_back(r.y);
  }
  Xe.reserve(eval.size());
  for (const Record& r : eval) Xe.push_back(r.x);

  if (learner.kind == LearnerKind::Logistic) {
    const auto model = fit_logistic(X, y, {}, learner.logistic);
    return predict_proba(model, Xe);
  }
  const auto model = fit_gbdt(X, y, {}, learner.gbdt);
  return predict_proba(model, Xe);
}

namespace {

struct LabeledEval {
  std::vector<int> labels;
  std::vector<int> groups;
};

LabeledEval eval_labels(const std::vector<Record>& records,
                        std::size_t group_coord) {
  LabeledEval e;
  e.labels.reserve(records.size());
  e.groups.reserve(records.size());
  for (const Record& r : records) {
    e.labels.push_back(r.y);
    e.groups.push_back(r.a.at(group_coord) != 0.0 ? 1 : 0);
  }
  return e;
}

}  // namespace

FairLoopResult fair_arm_loop(std::vector<Site> sites,
                             const LearnerConfig& learner,
                             const std::vector<Record>& validation,
                             int T, int k, std::size_t group_coord, Rng& rng) {
  if (sites.empty()) throw std::invalid_argument("fair_arm_loop: no sites");
  if (k < 1) throw std::invalid_argument("fair_arm_loop: k must be >= 1");
  const auto val = eval_labels(validation, group_coord);

  FairLoopResult out;
  std::vector<double> site_total(sites.size(), 0.0);
  std::vector<std::vector<double>> site_count_by_group(
      sites.size(), std::vector<double>(2, 0.0));

  const auto absorb = [&](std::size_t j, const std::vector<Record>& batch) {
    for (const Record& r : batch) {
      const int g = r.a.at(group_coord) != 0.0 ? 1 : 0;
      site_count_by_group[j][static_cast<std::size_t>(g)] += 1.0;
      site_total[j] += 1.0;
      out.dataset.push_back(r);
    }
  };

  Rng init_rng = rng.derive(stream::kSample, 0);
  const std::size_t first = static_cast<std::size_t>(
      init_rng.uniform_index(sites.size()));
  absorb(first, sample_batch(sites[first], k, std::nullopt, init_rng));

  for (int t = 1; t <= T; ++t) {
    const auto scores = train_and_score(out.dataset, validation, learner);
    const auto wg = worst_group(scores, val.labels, val.groups);
    out.warning |= wg.warning;

    // Highest smoothed observed share of the worst group; unvisited sites sit
    // at the 0.5 prior. Ties go to the lowest site id.
    std::size_t best = 0;
    double best_share = -1.0;
    for (std::size_t j = 0; j < sites.size(); ++j) {
      const double share =
          (site_count_by_group[j][static_cast<std::size_t>(wg.group)] + 1.0) /
          (site_total[j] + 2.0);
      if (share > best_share) {
        best_share = share;
        best = j;
      }
    }
    Rng step_rng =
        rng.derive(stream::kSample, static_cast<std::uint64_t>(t)).derive(best);
    absorb(best, sample_batch(sites[best], k, std::nullopt, step_rng));
  }

  out.validation_scores = train_and_score(out.dataset, validation, learner);
  return out;
}

FairLoopResult fair_direct_loop(const std::vector<Record>& pool,
                                const LearnerConfig& learner, int budget,
                                std::size_t group_coord, Rng& rng, int batch,
                                int init_per_cell) {
  if (batch < 1 || init_per_cell < 1)
    throw std::invalid_argument("fair_direct_loop: bad batch sizes");
  const auto pool_eval = eval_labels(pool, group_coord);

  // Remaining (unused) pool indices per group.
  std::vector<std::size_t> remaining[2];
  for (std::size_t i = 0; i < pool.size(); ++i)
    remaining[pool_eval.groups[i]].push_back(i);

  FairLoopResult out;
  const auto take = [&](int group, std::size_t position) {
    auto& rem = remaining[group];
    const std::size_t idx = rem[position];
    rem.erase(rem.begin() + static_cast<std::ptrdiff_t>(position));
    out.dataset.push_back(pool[idx]);
  };

  // Seed: one example per (group, label) cell.
  for (const int g : {0, 1}) {
    for (const int label : {0, 1}) {
      for (int c = 0; c < init_per_cell; ++c) {
        std::vector<std::size_t> positions;
        for (std::size_t p = 0; p < remaining[g].size(); ++p)
          if (pool[remaining[g][p]].y == label) positions.push_back(p);
        if (positions.empty())
          throw std::invalid_argument(
              "fair_direct_loop: pool lacks a (group,label) cell");
        take(g, positions[static_cast<std::size_t>(
                   rng.uniform_index(positions.size()))]);
      }
    }
  }

  while (static_cast<int>(out.dataset.size()) < budget) {
    const auto scores = train_and_score(out.dataset, pool, learner);
    auto wg = worst_group(scores, pool_eval.labels, pool_eval.groups);
    if (remaining[wg.group].empty()) {
      wg.group = 1 - wg.group;  // exhausted: continue from what is left
      out.warning = true;
      if (remaining[wg.group].empty()) break;
    }
    const int take_n = std::min<int>(
        batch, budget - static_cast<int>(out.dataset.size()));
    for (int i = 0; i < take_n && !remaining[wg.group].empty(); ++i)
      take(wg.group, static_cast<std::size_t>(
                         rng.uniform_index(remaining[wg.group].size())));
  }

  out.validation_scores = train_and_score(out.dataset, pool, learner);
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

std::vector<int> assign_folds(std::size_t n, int folds, Rng& rng) {
  if (folds < 2) throw std::invalid_argument("assign_folds: folds must be >= 2");
  const auto perm = rng.permutation(n);
  std::vector<int> fold(n);
  for (std::size_t i = 0; i < n; ++i)
    fold[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  return fold;
}

std::vector<SweepCell> complexity_sweep(const std::vector<Record>& data,
                                        const ComplexitySweepConfig& config) {
  if (data.empty()) throw std::invalid_argument("complexity_sweep: no data");
  const Rng root(config.seed);
  Rng fold_rng = root.derive(stream::kFolds);
  const auto fold_of = assign_folds(data.size(), config.folds, fold_rng);

  std::vector<SweepCell> cells;
  for (int f = 0; f < config.folds; ++f) {
    std::vector<Record> train, test;
    for (std::size_t i = 0; i < data.size(); ++i)
      (fold_of[i] == f ? test : train).push_back(data[i]);
    if (train.empty() || test.empty()) continue;
    const auto test_eval = eval_labels(test, config.group_coord);

    // Training set size: the smallest sensitive group in the training fold.
    const auto g0 = group_indices(train, config.group_coord, 0);
    const auto g1 = group_indices(train, config.group_coord, 1);
    const int n_train = static_cast<int>(std::min(g0.size(), g1.size()));
    if (n_train < 2) continue;

    for (std::size_t pi = 0; pi < config.proportions.size(); ++pi) {
      const double p = config.proportions[pi];
      Rng cell_rng = root.derive(stream::kSample,
                                 static_cast<std::uint64_t>(f))
                         .derive(pi);
      const auto srs =
          srs_sample(train, config.group_coord, p, n_train, cell_rng);

      for (const int depth : config.depths) {
        for (const int est : config.estimators) {
          LearnerConfig learner;
          learner.kind = LearnerKind::Gbdt;
          learner.gbdt = {depth, est, config.learning_rate,
                          config.class_balanced};
          const auto scores = train_and_score(srs.records, test, learner);
          SweepCell cell;
          cell.depth = depth;
          cell.estimators = est;
          cell.proportion = p;
          cell.fold = f;
          cell.report = group_report(scores, test_eval.labels,
                                     test_eval.groups);
          cells.push_back(std::move(cell));
        }
      }
    }
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Synthetic two-group tasks
// ---------------------------------------------------------------------------

std::vector<Record> make_two_group_task(TaskKind kind, int n, double p1,
                                        Rng& rng) {
  if (n < 8) throw std::invalid_argument("make_two_group_task: n too small");
  if (p1 <= 0.0 || p1 >= 1.0)
    throw std::invalid_argument("make_two_group_task: p1 must be in (0,1)");
  const int n1 = static_cast<int>(std::llround(p1 * n));

  std::vector<Record> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int g = i < n1 ? 1 : 0;
    Record r;
    const double x0 = rng.uniform();
    const double x1 = rng.uniform();
    const double x2 = g == 1 ? rng.uniform(0.55, 1.0) : rng.uniform(0.0, 0.45);
    r.x = {x0, x1, x2};
    r.a = {static_cast<double>(g)};
    switch (kind) {
      case TaskKind::NoisyMinority: {
        const bool base = g == 1 ? x1 >= 0.5 : x0 >= 0.5;
        const double flip = g == 1 ? 0.25 : 0.05;
        r.y = (rng.uniform() < flip ? !base : base) ? 1 : 0;
        break;
      }
      case TaskKind::XorGroup: {
        const bool base = g == 1 ? (x0 >= 0.5) != (x1 >= 0.5) : x0 >= 0.5;
        r.y = base ? 1 : 0;
        break;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

namespace {

std::string opt_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string{};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const SimulateOutput& out,
                          bool include_policy_column) {
  auto f = open_out(path);
  f << (include_policy_column ? "policy,replicate,step,distance\n"
                              : "replicate,step,distance\n");
  for (const auto& run : out.runs)
    for (std::size_t s = 0; s < run.trajectory.size(); ++s) {
      if (include_policy_column) f << run.policy << ',';
      f << run.replicate << ',' << s + 1 << ','
        << format_double(run.trajectory[s]) << '\n';
    }
}

void write_final_csv(const std::string& path, const SimulateOutput& out) {
  auto rows = out.runs;
  std::stable_sort(rows.begin(), rows.end(),
                   [](const PolicyRun& a, const PolicyRun& b) {
                     return a.replicate < b.replicate;
                   });
  auto f = open_out(path);
  f << "replicate,policy,distance\n";
  for (const auto& run : rows)
    f << run.replicate << ',' << run.policy << ','
      << format_double(run.final_distance) << '\n';
}

namespace {

void write_report_columns(std::ofstream& f, const FairnessReport& r) {
  f << opt_cell(r.population_auc) << ',' << opt_cell(r.g0.auc) << ','
    << opt_cell(r.g1.auc) << ',' << opt_cell(r.g0.tpr) << ','
    << opt_cell(r.g1.tpr) << ',' << opt_cell(r.g0.tnr) << ','
    << opt_cell(r.g1.tnr) << ',' << opt_cell(r.delta_auc) << ','
    << opt_cell(r.delta_tpr) << ',' << opt_cell(r.delta_tnr);
}

}  // namespace

void write_fairness_csv(const std::string& path,
                        const std::vector<FairnessCell>& cells) {
  auto rows = cells;
  std::stable_sort(rows.begin(), rows.end(),
                   [](const FairnessCell& a, const FairnessCell& b) {
                     if (a.sampler != b.sampler) return a.sampler < b.sampler;
                     if (a.proportion != b.proportion)
                       return a.proportion < b.proportion;
                     return a.fold < b.fold;
                   });
  auto f = open_out(path);
  f << "sampler,proportion,fold,population_auc,auc_g0,auc_g1,tpr_g0,tpr_g1,"
       "tnr_g0,tnr_g1,delta_auc,delta_tpr,delta_tnr\n";
  for (const auto& c : rows) {
    f << c.sampler << ',' << format_double(c.proportion) << ',' << c.fold
      << ',';
    write_report_columns(f, c.report);
    f << '\n';
  }
}

void write_complexity_csv(const std::string& path,
                          const std::vector<SweepCell>& cells) {
  auto rows = cells;
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SweepCell& a, const SweepCell& b) {
                     if (a.depth != b.depth) return a.depth < b.depth;
                     if (a.estimators != b.estimators)
                       return a.estimators < b.estimators;
                     if (a.proportion != b.proportion)
                       return a.proportion < b.proportion;
                     return a.fold < b.fold;
                   });
  auto f = open_out(path);
  f << "depth,estimators,proportion,fold,population_auc,auc_g0,auc_g1,tpr_g0,"
       "tpr_g1,tnr_g0,tnr_g1,delta_auc,delta_tpr,delta_tnr\n";
  for (const auto& c : rows) {
    f << c.depth << ',' << c.estimators << ',' << format_double(c.proportion)
      << ',' << c.fold << ',';
    write_report_columns(f, c.report);
    f << '\n';
  }
}

// ---------------------------------------------------------------------------
// Statistics helpers
// ---------------------------------------------------------------------------

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (const double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stderr_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (const double x : xs) ss += (x - m) * (x - m);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

double paired_t_statistic(std::span<const double> diffs) {
  if (diffs.size() < 2)
    throw std::invalid_argument("paired_t_statistic: need >= 2 differences");
  const double se = stderr_of(diffs);
  if (se == 0.0) return mean_of(diffs) > 0 ? 1e9 : 0.0;
  return mean_of(diffs) / se;
}

}  // namespace repsample
