#include "repsample/theory.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "repsample/learners.hpp"

namespace repsample {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

UnivariateGroupModel UnivariateGroupModel::with_sigmas(double sigma0,
                                                       double sigma1) {
  UnivariateGroupModel m;
  m.g0 = {0.0, 0.0, sigma0, 0.0, sigma0};
  m.g1 = {0.0, 0.0, sigma1, 0.0, sigma1};
  return m;
}

double expected_unfairness(double sigma0, double sigma1, double n0, double n1) {
  if (!(sigma0 > 0) || !(sigma1 > 0) || !(n0 >= 1) || !(n1 >= 1))
    throw std::invalid_argument("expected_unfairness: nonpositive input");
  return std::sqrt(2.0 / kPi) *
         (sigma0 * std::sqrt(1.0 / n0) - sigma1 * std::sqrt(1.0 / n1));
}

SampleBounds sample_bounds(double sigma0, double sigma1, double n0, double n1,
                           double delta) {
  if (!(sigma0 > 0) || !(sigma1 > 0) || !(n0 > 0) || !(n1 > 0) || delta < 0)
    throw std::invalid_argument("sample_bounds: bad input");
  SampleBounds b;
  const double d0 = delta * std::sqrt(kPi / 2.0 * n1) + sigma1;
  const double d1 = delta * std::sqrt(kPi / 2.0 * n0) + sigma0;
  b.min_n0 = n1 * (sigma0 / d0) * (sigma0 / d0);
  b.min_n1 = n0 * (sigma1 / d1) * (sigma1 / d1);
  b.feasible = n0 >= b.min_n0 && n1 >= b.min_n1;
  return b;
}

double zero_unfairness_ratio(double sigma0, double sigma1, double n1) {
  if (!(sigma0 > 0) || !(sigma1 > 0) || !(n1 > 0))
    throw std::invalid_argument("zero_unfairness_ratio: bad input");
  return (sigma0 * sigma0) / (sigma1 * sigma1) * n1;
}

namespace {

// Misclassification rate of the threshold t on n_test fresh points of one
// group, against labels from the generative rule.
double group_test_error(const GroupParams& g, double threshold,
                        const McConfig& config, Rng& rng) {
  int errors = 0;
  for (int i = 0; i < config.n_test; ++i) {
    const double x =
        rng.uniform(g.theta - config.test_half_width,
                    g.theta + config.test_half_width);
    const bool truth = config.fresh_label_noise
                           ? x + rng.gaussian(g.mu, g.sigma) >= g.theta
                           : x >= g.theta;
    const bool pred = x >= threshold;
    errors += truth != pred;
  }
  return static_cast<double>(errors) / static_cast<double>(config.n_test);
}

}  // namespace

McResult monte_carlo_unfairness(const UnivariateGroupModel& model, int n0,
                                int n1, int trials, Rng& rng,
                                const McConfig& config) {
  if (trials < 100)
    throw std::invalid_argument("monte_carlo_unfairness: trials < 100");
  if (n0 < 1 || n1 < 1)
    throw std::invalid_argument("monte_carlo_unfairness: need n_g >= 1");

  double mean = 0.0, m2 = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng trial_rng = rng.derive(stream::kTrial, static_cast<std::uint64_t>(trial));

    std::vector<double> x;
    std::vector<int> grp;
    x.reserve(static_cast<std::size_t>(n0 + n1));
    grp.reserve(static_cast<std::size_t>(n0 + n1));
    for (int i = 0; i < n0; ++i) {
      x.push_back(trial_rng.gaussian(model.g0.feature_mean, model.g0.feature_sd));
      grp.push_back(0);
    }
    for (int i = 0; i < n1; ++i) {
      x.push_back(trial_rng.gaussian(model.g1.feature_mean, model.g1.feature_sd));
      grp.push_back(1);
    }
    const auto classifier = fit_threshold(x, grp);

    const double e0 = group_test_error(model.g0, classifier.threshold_for(0),
                                       config, trial_rng);
    const double e1 = group_test_error(model.g1, classifier.threshold_for(1),
                                       config, trial_rng);
    const double delta = e0 - e1;

    const double d = delta - mean;
    mean += d / static_cast<double>(trial + 1);
    m2 += d * (delta - mean);
  }

  McResult r;
  r.mean = mean;
  r.trials = trials;
  const double var = m2 / static_cast<double>(trials - 1);
  r.stderr_mean = std::sqrt(var / static_cast<double>(trials));
  return r;
}

}  // namespace repsample
