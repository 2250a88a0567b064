#pragma once

#include <optional>
#include <span>
#include <vector>

#include "repsample/core.hpp"
#include "repsample/rng.hpp"

namespace repsample {

// Response bias: majority-group members are lambda-times more likely to
// respond at biased sites. b = lambda / (1 + lambda); lambda = 1 (b = 0.5)
// recovers unbiased sampling.
struct ResponseBiasConfig {
  double lambda = 1.0;
  int gamma = 0;  // number of biased sites

  double b() const { return lambda / (1.0 + lambda); }
};

// Individual response weight under bias level b, for a binary-coded vector
// with 1 marking the majority value of each feature:
//   sum_l (b*a_l + (1-b)*(1-a_l))^2
double response_weight(std::span<const double> a, double b);

// A site (arm): either a finite record pool sampled by weight, or a
// parametric generator. Weights never mutate records; causal shift compounds
// a shared exponent on the normalized selection probabilities.
class Site {
 public:
  enum class Mode { Empirical, SyntheticBinary, SyntheticContinuous };

  static Site empirical(int id, std::vector<Record> records,
                        std::vector<double> base_weights = {});
  static Site synthetic_binary(int id, std::vector<double> probs);
  static Site synthetic_continuous(int id, std::vector<double> mean,
                                   std::vector<std::vector<double>> cov);

  int id() const { return id_; }
  Mode mode() const { return mode_; }
  std::size_t dim() const { return dim_; }
  const std::vector<Record>& records() const { return records_; }
  const std::vector<double>& binary_probs() const { return probs_; }
  double log_base(std::size_t i) const { return log_base_[i]; }

  bool response_biased = false;
  // Per feature, whether value 1 is the majority value; false means the
  // coding is flipped before the bias weight is computed.
  std::vector<bool> majority_one;

  // Cumulative causal-shift exponent E = prod_t (1 + alpha*rho_t), shared by
  // every record because rho is site-wide. Current selection probability is
  // proportional to (base * bias)^E.
  double shift_exponent() const { return shift_exponent_; }
  double shift_alpha = 0.0;

  // Expected sensitive vector of one draw under the current weights and the
  // given bias (simulator oracle; exact for empirical and binary sites).
  std::vector<double> effective_mean(
      const std::optional<ResponseBiasConfig>& bias) const;

 private:
  friend std::vector<Record> sample_batch(Site&, int,
                                          const std::optional<ResponseBiasConfig>&,
                                          Rng&, bool);
  friend void apply_causal_shift(Site&, double, double);

  int id_ = 0;
  Mode mode_ = Mode::Empirical;
  std::size_t dim_ = 0;
  std::vector<Record> records_;
  std::vector<double> log_base_;  // log of base weights, empirical mode
  std::vector<double> probs_;    // synthetic binary
  std::vector<double> mean_;     // synthetic continuous
  std::vector<std::vector<double>> chol_;  // lower Cholesky of covariance
  double shift_exponent_ = 1.0;
};

// Draw k records with replacement (or without, for ingestion realism),
// with probabilities proportional to base_weights * response_weight (when the
// site is among the biased ones and lambda != 1) raised to the causal-shift
// exponent. lambda == 1 takes the identical code path as no bias, so draws
// are bitwise-equal under the same seed.
std::vector<Record> sample_batch(Site& site, int k,
                                 const std::optional<ResponseBiasConfig>& bias,
                                 Rng& rng, bool with_replacement = true);

// Replace every record's normalized selection probability p with
// p^(1 + alpha*rho) and renormalize; compounds across calls.
void apply_causal_shift(Site& site, double rho, double alpha);

struct SyntheticSitesConfig {
  double mean_lo = 0.1;
  double mean_hi = 0.9;
  bool ensure_straddle = true;      // force mixtures reaching the target
  std::vector<double> target;       // required when ensure_straddle
  int records_per_site = 0;         // >0 materializes empirical sites
};

std::vector<Site> make_synthetic_sites(int m, int d,
                                       const SyntheticSitesConfig& config,
                                       Rng& rng);

// Per-feature mask: true where value 1 has the higher global frequency
// across all empirical records of the given sites.
std::vector<bool> majority_mask(std::span<const Site> sites);

}  // namespace repsample
