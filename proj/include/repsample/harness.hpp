#pragma once

#include <optional>
#include <string>
#include <vector>

#include "repsample/core.hpp"
#include "repsample/fairness.hpp"
#include "repsample/learners.hpp"
#include "repsample/population.hpp"
#include "repsample/rng.hpp"
#include "repsample/samplers.hpp"

namespace repsample {

// ---------------------------------------------------------------------------
// Sequential collection loop
// ---------------------------------------------------------------------------

enum class PriorSource { Uniform, Target, TruthNoisy };

struct RunSpec {
  int T = 50;
  int k = 40;
  TargetVector v;
  Metric metric{MetricKind::L2};
  std::optional<ResponseBiasConfig> bias;
  double alpha = 0.0;  // causal distribution shift
};

struct CollectionResult {
  CollectedDataset dataset;
  std::vector<double> trajectory;  // distance to target after each step
  bool optimizer_warning = false;
};

// Runs T steps of allocate -> sample -> causal shift -> prior update on a
// private copy of the sites. Fully deterministic given rng: policy, sampling,
// and shift streams are derived per (step, site).
CollectionResult run_collection(const RunSpec& spec, std::vector<Site> sites,
                                const PolicyConfig& policy, PolicyState state,
                                const Rng& rng);

// ---------------------------------------------------------------------------
// Simulation experiments (synthetic or pre-built site pools)
// ---------------------------------------------------------------------------

struct SimulateConfig {
  int m = 20;
  int d = 3;
  int T = 50;
  int k = 40;
  int replicates = 100;
  std::uint64_t seed = 0;
  TargetVector v;
  Metric metric{MetricKind::L2};
  std::vector<PolicyConfig> policies;
  PriorSource prior_source = PriorSource::TruthNoisy;
  double prior_noise = 0.1;      // sd of the noise on true means
  double prior_strength = 5.0;   // pseudo-count mass behind the prior
  double beta_boost = 1.0;
  ImprovementMode improvement = ImprovementMode::PosteriorMean;
  std::optional<ResponseBiasConfig> bias;
  double alpha = 0.0;
  SyntheticSitesConfig synth;
};

struct PolicyRun {
  std::string policy;
  int replicate = 0;
  std::vector<double> trajectory;
  double final_distance = 0.0;
};

struct SimulateOutput {
  std::vector<PolicyRun> runs;  // ordered by (policy, replicate)
  std::vector<int> biased_site_ids;
};

// Sites are drawn fresh per replicate; every policy within a replicate sees
// the same pool and the same per-(step, site) sampling streams, so paired
// policy comparisons share their random numbers.
SimulateOutput run_simulation(const SimulateConfig& config);

// Same loop over a fixed (e.g. ingested) arm pool: every replicate starts
// from a pristine copy of base_sites.
SimulateOutput run_simulation(const SimulateConfig& config,
                              const std::vector<Site>& base_sites);

// Mean final distance per policy, in config order.
std::vector<double> mean_final_distance(const SimulateOutput& out,
                                        const SimulateConfig& config);

// ---------------------------------------------------------------------------
// Group-targeted dataset construction
// ---------------------------------------------------------------------------

struct SrsResult {
  std::vector<Record> records;
  bool capped = false;  // a group had fewer records than requested
};

// Stratified random sample of size n with round(p*n) records from G1 (the
// group whose sensitive coordinate equals 1) and the rest from G0, uniformly
// without replacement.
SrsResult srs_sample(const std::vector<Record>& pool, std::size_t group_coord,
                     double proportion, int n, Rng& rng);

enum class LearnerKind { Logistic, Gbdt };

struct LearnerConfig {
  LearnerKind kind = LearnerKind::Gbdt;
  GbdtConfig gbdt;
  LogisticConfig logistic;
};

// Trains on the records' non-sensitive features and returns P(y=1) scores
// for the evaluation records.
std::vector<double> train_and_score(const std::vector<Record>& train,
                                    const std::vector<Record>& eval,
                                    const LearnerConfig& learner);

struct FairLoopResult {
  std::vector<Record> dataset;
  std::vector<double> validation_scores;  // from the final model
  bool warning = false;
};

// Fair arm-based sampling: per step, train, find the worst group on the
// validation set, and pull the site with the highest (add-one smoothed)
// observed proportion of that group. Starts from one batch drawn from a
// uniformly random site.
FairLoopResult fair_arm_loop(std::vector<Site> sites,
                             const LearnerConfig& learner,
                             const std::vector<Record>& validation,
                             int T, int k, std::size_t group_coord, Rng& rng);

// Fair direct sampling: seeded with one example per (group, label) cell,
// then mini-batches of `batch` examples from the currently worse-performing
// group until `budget` records are collected. Draws are uniform without
// replacement; an exhausted group falls back to the remaining records.
FairLoopResult fair_direct_loop(const std::vector<Record>& pool,
                                const LearnerConfig& learner, int budget,
                                std::size_t group_coord, Rng& rng,
                                int batch = 5, int init_per_cell = 1);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepCell {
  int depth = 0;
  int estimators = 0;
  double proportion = 0.0;
  int fold = 0;
  FairnessReport report;
};

struct ComplexitySweepConfig {
  std::vector<int> depths;
  std::vector<int> estimators;
  std::vector<double> proportions;
  int folds = 10;
  std::size_t group_coord = 0;
  double learning_rate = 0.1;
  bool class_balanced = true;
  std::uint64_t seed = 0;
};

// For each (depth, estimators, proportion, fold): build the training set by
// SRS at the given proportion (size = smallest group in the training fold),
// fit a GBDT, and report group metrics on the held-out fold.
std::vector<SweepCell> complexity_sweep(const std::vector<Record>& data,
                                        const ComplexitySweepConfig& config);

// Deterministic seeded fold assignment; fold f's test set is every record
// whose shuffled position is congruent to f.
std::vector<int> assign_folds(std::size_t n, int folds, Rng& rng);

// ---------------------------------------------------------------------------
// Synthetic two-group prediction tasks
// ---------------------------------------------------------------------------

enum class TaskKind {
  // G0 labels follow feature 0 with light noise; G1 labels follow feature 1
  // with heavy noise. Group membership is recoverable from feature 2.
  NoisyMinority,
  // G0 labels are linear in feature 0; G1 labels are the XOR of features 0
  // and 1, which an additive (depth-1) model cannot represent.
  XorGroup,
};

std::vector<Record> make_two_group_task(TaskKind kind, int n, double p1,
                                        Rng& rng);

// ---------------------------------------------------------------------------
// Output writers (9 significant digits, sorted row order, '\n' endings)
// ---------------------------------------------------------------------------

std::string format_double(double x);

struct FairnessCell {
  std::string sampler;
  double proportion = 0.0;
  int fold = 0;
  FairnessReport report;
};

void write_trajectory_csv(const std::string& path, const SimulateOutput& out,
                          bool include_policy_column);
void write_final_csv(const std::string& path, const SimulateOutput& out);
void write_fairness_csv(const std::string& path,
                        const std::vector<FairnessCell>& cells);
void write_complexity_csv(const std::string& path,
                          const std::vector<SweepCell>& cells);

// ---------------------------------------------------------------------------
// Small statistics helpers for paired experiment comparisons
// ---------------------------------------------------------------------------

double mean_of(std::span<const double> xs);
double stderr_of(std::span<const double> xs);

// t statistic of mean(diffs) > 0 (one-sided); diffs.size() >= 2.
double paired_t_statistic(std::span<const double> diffs);

}  // namespace repsample
