#pragma once

#include <optional>
#include <span>
#include <vector>

#include "repsample/core.hpp"
#include "repsample/linalg.hpp"
#include "repsample/rng.hpp"

namespace repsample {

enum class PolicyKind { Pbrs, Dpbrs, Opt, Random, EpsGreedy, UcbLcb, OlVec };

PolicyKind policy_from_name(const std::string& name);
std::string policy_name(PolicyKind kind);

// How a site's next-batch mean is estimated when scoring improvements:
// a posterior-mean plug-in (default) or a Thompson-style posterior draw.
enum class ImprovementMode { PosteriorMean, Sample };

// Per-step budget split across sites. rho sums to 1 (one-hot for single-site
// policies); counts is the realized integer split of a k-sample budget.
struct Allocation {
  std::vector<double> rho;
  std::vector<int> counts;
  bool warning = false;  // set when the D-PBRS optimizer hit its iteration cap
};

// Beta pseudo-counts for one coordinate of a binary site posterior.
struct BetaPair {
  double ones = 1.0;
  double zeros = 1.0;
  double mean() const { return ones / (ones + zeros); }
};

// Normal-inverse-Wishart parameters for a continuous site posterior.
struct NiwParams {
  std::vector<double> mu;
  double kappa = 1.0;
  linalg::Mat psi;
  double nu = 0.0;
};

struct SitePosterior {
  std::vector<BetaPair> beta;  // binary mode, one per coordinate
  NiwParams niw;               // continuous mode
  std::vector<double> obs_sum;  // empirical tallies for the baselines
  double obs_count = 0.0;
  double visits = 0.0;
};

struct PriorSpec {
  enum class Kind { Uniform, Target, Means };
  Kind kind = Kind::Target;
  double strength = 2.0;  // pseudo-count mass per coordinate (binary mode)
  std::vector<std::vector<double>> means;  // per site, Kind::Means
};

struct PolicyState {
  bool binary_mode = true;
  std::size_t dim = 0;
  int horizon = 0;
  int step = 0;  // completed steps
  double beta_boost = 1.0;
  ImprovementMode improvement = ImprovementMode::PosteriorMean;
  std::vector<SitePosterior> sites;
  std::vector<double> olvec_direction;  // scalarization maintained by OL-Vec

  std::size_t num_sites() const { return sites.size(); }
};

PolicyState make_binary_state(int m, int d, int horizon, const TargetVector& v,
                              const PriorSpec& prior, double beta_boost = 1.0,
                              ImprovementMode mode = ImprovementMode::PosteriorMean);

// Continuous mode; prior covariance defaults to the identity.
PolicyState make_continuous_state(int m, int d, int horizon,
                                  const PriorSpec& prior,
                                  double beta_boost = 1.0,
                                  ImprovementMode mode = ImprovementMode::PosteriorMean);

// Distance to the target if `candidate` were collected as the next step's
// batch mean: M(v, (t*mean + candidate) / (t+1)) with t completed steps.
// Assumes fixed batch size, so the dataset mean equals the mean of per-step
// means.
double one_step_distance(const Metric& metric, const TargetVector& v,
                         const CollectedDataset& ds,
                         std::span<const double> candidate);

// Gradient of distance(metric, v, u) with respect to u (subgradient for L1;
// zero where KL clamping makes the objective flat).
std::vector<double> distance_gradient(const Metric& metric,
                                      const TargetVector& v,
                                      std::span<const double> u);

// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(std::vector<double> x);

// Thompson-style site selection: estimate each site's next-batch mean from
// its posterior and pick the site with the largest one-step improvement.
// Ties break toward the lowest site id.
Allocation pbrs_select(PolicyState& state, const CollectedDataset& ds,
                       const TargetVector& v, const Metric& metric, int k,
                       Rng& rng);

// Distributed variant: minimizes the one-step objective over the simplex by
// projected gradient descent (<= max_iters iterations, decaying step,
// converged when the max coordinate update drops below tol), then floors
// rho*k into counts and gives the remainder to the site minimizing M.
struct DpbrsOptions {
  int max_iters = 500;
  double tol = 1e-8;
};

Allocation dpbrs_allocate(PolicyState& state, const CollectedDataset& ds,
                          const TargetVector& v, const Metric& metric, int k,
                          Rng& rng, const DpbrsOptions& opt = {});

// Full-information myopic baseline: scores each site at its true mean.
Allocation opt_select(std::span<const std::vector<double>> true_means,
                      const CollectedDataset& ds, const TargetVector& v,
                      const Metric& metric, int k);

struct BaselineConfig {
  PolicyKind kind = PolicyKind::Random;
  double epsilon = 0.1;
};

Allocation baseline_select(const BaselineConfig& config, PolicyState& state,
                           const CollectedDataset& ds, const TargetVector& v,
                           const Metric& metric, int k, Rng& rng);

// Conjugate posterior update for site j with the step-t batch. Observations
// of the per-coordinate minority value (dataset frequency below the target)
// count with weight beta_boost^(1 - t/horizon). Also maintains the empirical
// tallies used by the baselines.
void update_priors(PolicyState& state,
                   std::span<const SensitiveVector> batch, int site_j,
                   int t, const CollectedDataset& ds, const TargetVector& v);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::Random;
  double epsilon = 0.1;
  DpbrsOptions dpbrs;
};

// Single entry point used by the experiment loop.
Allocation select_allocation(const PolicyConfig& config, PolicyState& state,
                             const CollectedDataset& ds, const TargetVector& v,
                             const Metric& metric, int k, Rng& rng,
                             std::span<const std::vector<double>> true_means);

}  // namespace repsample
