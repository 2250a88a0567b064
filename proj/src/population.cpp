#include "repsample/population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace repsample {

double response_weight(std::span<const double> a, double b) {
  if (!(b > 0.0 && b < 1.0))
    throw std::invalid_argument("response_weight: b must be in (0,1)");
  double s = 0.0;
  for (const double al : a) {
    const double t = b * al + (1.0 - b) * (1.0 - al);
    s += t * t;
  }
  return s;
}

Site Site::empirical(int id, std::vector<Record> records,
                     std::vector<double> base_weights) {
  if (records.empty())
    throw std::runtime_error("Site::empirical: no records");
  Site s;
  s.id_ = id;
  s.mode_ = Mode::Empirical;
  s.dim_ = records.front().a.size();
  if (base_weights.empty()) base_weights.assign(records.size(), 1.0);
  if (base_weights.size() != records.size())
    throw std::invalid_argument("Site::empirical: weight count mismatch");
  s.log_base_.resize(base_weights.size());
  for (std::size_t i = 0; i < base_weights.size(); ++i) {
    if (!(base_weights[i] > 0.0))
      throw std::invalid_argument("Site::empirical: weights must be positive");
    s.log_base_[i] = std::log(base_weights[i]);
  }
  s.records_ = std::move(records);
  s.majority_one.assign(s.dim_, true);
  return s;
}

Site Site::synthetic_binary(int id, std::vector<double> probs) {
  Site s;
  s.id_ = id;
  s.mode_ = Mode::SyntheticBinary;
  s.dim_ = probs.size();
  for (const double p : probs)
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("synthetic_binary: probs must lie in [0,1]");
  s.probs_ = std::move(probs);
  s.majority_one.assign(s.dim_, true);
  return s;
}

namespace {

// Lower Cholesky; throws if the matrix is not symmetric positive definite
// (a tiny jitter keeps positive semidefinite inputs usable).
std::vector<std::vector<double>> cholesky(std::vector<std::vector<double>> m) {
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (m[i].size() != n)
      throw std::invalid_argument("cholesky: matrix not square");
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(m[i][j] - m[j][i]) > 1e-9)
        throw std::invalid_argument("cholesky: matrix not symmetric");
  }
  std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = m[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (s < -1e-12)
          throw std::invalid_argument("cholesky: matrix not PSD");
        l[i][j] = std::sqrt(std::max(s, 1e-12));
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return l;
}

}  // namespace

Site Site::synthetic_continuous(int id, std::vector<double> mean,
                                std::vector<std::vector<double>> cov) {
  Site s;
  s.id_ = id;
  s.mode_ = Mode::SyntheticContinuous;
  s.dim_ = mean.size();
  s.mean_ = std::move(mean);
  s.chol_ = cholesky(std::move(cov));
  s.majority_one.assign(s.dim_, true);
  return s;
}

namespace {

// Bias weight with the site's majority coding applied virtually.
double coded_response_weight(const Site& site, std::span<const double> a,
                             double b) {
  double s = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    const double al = site.majority_one[l] ? a[l] : 1.0 - a[l];
    const double t = b * al + (1.0 - b) * (1.0 - al);
    s += t * t;
  }
  return s;
}

bool bias_active(const Site& site,
                 const std::optional<ResponseBiasConfig>& bias) {
  // lambda == 1 short-circuits so the unbiased code path is taken verbatim.
  return bias.has_value() && site.response_biased && bias->lambda != 1.0;
}

// Unnormalized selection weights of an empirical site: (base * bias)^E,
// assembled in log space so large shift exponents stay finite.
std::vector<double> selection_weights(const Site& site,
                                      const std::optional<ResponseBiasConfig>& bias,
                                      double shift_exponent) {
  const auto& records = site.records();
  const bool biased = bias_active(site, bias);
  const double b = biased ? bias->b() : 0.5;
  std::vector<double> lw(records.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < records.size(); ++i) {
    double v = site.log_base(i);
    if (biased) v += std::log(coded_response_weight(site, records[i].a, b));
    v *= shift_exponent;
    lw[i] = v;
    mx = std::max(mx, v);
  }
  for (double& v : lw) v = std::exp(v - mx);
  return lw;
}

std::size_t draw_index(const std::vector<double>& cumulative, double total,
                       Rng& rng) {
  const double target = rng.uniform() * total;
  const auto it =
      std::upper_bound(cumulative.begin(), cumulative.end(), target);
  std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
  if (idx >= cumulative.size()) idx = cumulative.size() - 1;
  return idx;
}

}  // namespace

std::vector<Record> sample_batch(Site& site, int k,
                                 const std::optional<ResponseBiasConfig>& bias,
                                 Rng& rng, bool with_replacement) {
  if (k <= 0) throw std::invalid_argument("sample_batch: k must be positive");
  std::vector<Record> out;
  out.reserve(static_cast<std::size_t>(k));

  switch (site.mode()) {
    case Site::Mode::Empirical: {
      auto w = selection_weights(site, bias, site.shift_exponent_);
      if (with_replacement) {
        std::vector<double> cum(w.size());
        double total = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
          total += w[i];
          cum[i] = total;
        }
        for (int j = 0; j < k; ++j)
          out.push_back(site.records_[draw_index(cum, total, rng)]);
      } else {
        if (static_cast<std::size_t>(k) > w.size())
          throw std::runtime_error(
              "sample_batch: k exceeds site size without replacement");
        for (int j = 0; j < k; ++j) {
          std::vector<double> cum(w.size());
          double run = 0.0;
          for (std::size_t i = 0; i < w.size(); ++i) {
            run += w[i];
            cum[i] = run;
          }
          const std::size_t idx = draw_index(cum, run, rng);
          out.push_back(site.records_[idx]);
          w[idx] = 0.0;
        }
      }
      break;
    }
    case Site::Mode::SyntheticBinary: {
      const bool biased = bias_active(site, bias);
      const double b = biased ? bias->b() : 0.5;
      const double max_w =
          static_cast<double>(site.dim()) * std::max(b, 1.0 - b) *
          std::max(b, 1.0 - b);
      for (int j = 0; j < k; ++j) {
        Record r;
        for (;;) {
          r.a.resize(site.dim());
          for (std::size_t l = 0; l < site.dim(); ++l)
            r.a[l] = rng.uniform() < site.probs_[l] ? 1.0 : 0.0;
          if (!biased) break;
          const double accept =
              coded_response_weight(site, r.a, b) / max_w;
          if (rng.uniform() < accept) break;
        }
        out.push_back(std::move(r));
      }
      break;
    }
    case Site::Mode::SyntheticContinuous: {
      // Response bias is defined for binary coding only; parametric
      // continuous sites ignore it.
      for (int j = 0; j < k; ++j) {
        std::vector<double> z(site.dim());
        for (double& zi : z) zi = rng.gaussian();
        Record r;
        r.a.resize(site.dim());
        for (std::size_t i = 0; i < site.dim(); ++i) {
          double s = site.mean_[i];
          for (std::size_t l = 0; l <= i; ++l) s += site.chol_[i][l] * z[l];
          r.a[i] = s;
        }
        out.push_back(std::move(r));
      }
      break;
    }
  }
  return out;
}

void apply_causal_shift(Site& site, double rho, double alpha) {
  if (alpha < 0.0)
    throw std::invalid_argument("apply_causal_shift: alpha must be >= 0");
  if (rho < 0.0 || rho > 1.0)
    throw std::invalid_argument("apply_causal_shift: rho must be in [0,1]");
  if (site.mode() != Site::Mode::Empirical) return;  // no record pool to skew
  site.shift_exponent_ *= 1.0 + alpha * rho;
}

std::vector<double> Site::effective_mean(
    const std::optional<ResponseBiasConfig>& bias) const {
  std::vector<double> mean(dim_, 0.0);
  switch (mode_) {
    case Mode::Empirical: {
      const auto w = selection_weights(*this, bias, shift_exponent_);
      double total = 0.0;
      for (const double x : w) total += x;
      for (std::size_t i = 0; i < records_.size(); ++i)
        for (std::size_t l = 0; l < dim_; ++l)
          mean[l] += w[i] / total * records_[i].a[l];
      break;
    }
    case Mode::SyntheticBinary: {
      if (!bias_active(*this, bias)) {
        mean = probs_;
        break;
      }
      // The bias weight is a sum of per-coordinate terms, so with
      // independent coordinates the tilted mean has a closed form.
      const double b = bias->b();
      const double w1 = b * b, w0 = (1.0 - b) * (1.0 - b);
      std::vector<double> p(dim_);
      for (std::size_t l = 0; l < dim_; ++l)
        p[l] = majority_one[l] ? probs_[l] : 1.0 - probs_[l];
      double ew = 0.0;
      for (std::size_t l = 0; l < dim_; ++l)
        ew += p[l] * w1 + (1.0 - p[l]) * w0;
      for (std::size_t l = 0; l < dim_; ++l) {
        const double e_coded =
            (p[l] * w1 + p[l] * (ew - (p[l] * w1 + (1.0 - p[l]) * w0))) / ew;
        mean[l] = majority_one[l] ? e_coded : 1.0 - e_coded;
      }
      break;
    }
    case Mode::SyntheticContinuous:
      mean = mean_;
      break;
  }
  return mean;
}

std::vector<Site> make_synthetic_sites(int m, int d,
                                       const SyntheticSitesConfig& config,
                                       Rng& rng) {
  if (m < 2 || d < 1)
    throw std::invalid_argument("make_synthetic_sites: need m >= 2, d >= 1");
  if (!(config.mean_lo < config.mean_hi) || config.mean_lo < 0.0 ||
      config.mean_hi > 1.0)
    throw std::invalid_argument("make_synthetic_sites: bad mean range");
  if (config.ensure_straddle &&
      config.target.size() != static_cast<std::size_t>(d))
    throw std::invalid_argument(
        "make_synthetic_sites: straddle requested without a d-dim target");

  std::vector<std::vector<double>> probs(m, std::vector<double>(d));
  for (int j = 0; j < m; ++j)
    for (int l = 0; l < d; ++l)
      probs[j][l] = rng.uniform(config.mean_lo, config.mean_hi);

  if (config.ensure_straddle) {
    for (int l = 0; l < d; ++l) {
      const double v = config.target[l];
      if (v < config.mean_lo || v > config.mean_hi)
        throw std::invalid_argument(
            "make_synthetic_sites: target outside mean range");
      bool below = false, above = false;
      for (int j = 0; j < m; ++j) {
        below = below || probs[j][l] <= v;
        above = above || probs[j][l] >= v;
      }
      const double half = 0.5 * std::min(v - config.mean_lo,
                                         config.mean_hi - v);
      if (!below) probs[0][l] = v - half;
      if (!above) probs[1][l] = v + half;
    }
  }

  std::vector<Site> sites;
  sites.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    if (config.records_per_site > 0) {
      std::vector<Record> recs(static_cast<std::size_t>(config.records_per_site));
      Rng site_rng = rng.derive(stream::kSites, static_cast<std::uint64_t>(j));
      for (auto& r : recs) {
        r.a.resize(static_cast<std::size_t>(d));
        for (int l = 0; l < d; ++l)
          r.a[static_cast<std::size_t>(l)] =
              site_rng.uniform() < probs[j][static_cast<std::size_t>(l)] ? 1.0 : 0.0;
      }
      sites.push_back(Site::empirical(j, std::move(recs)));
    } else {
      sites.push_back(Site::synthetic_binary(j, probs[j]));
    }
  }
  return sites;
}

std::vector<bool> majority_mask(std::span<const Site> sites) {
  if (sites.empty()) return {};
  const std::size_t d = sites.front().dim();
  std::vector<double> sum(d, 0.0);
  double n = 0.0;
  for (const Site& s : sites) {
    if (s.mode() == Site::Mode::Empirical) {
      for (const Record& r : s.records())
        for (std::size_t l = 0; l < d; ++l) sum[l] += r.a[l];
      n += static_cast<double>(s.records().size());
    } else if (s.mode() == Site::Mode::SyntheticBinary) {
      for (std::size_t l = 0; l < d; ++l) sum[l] += s.binary_probs()[l];
      n += 1.0;
    }
  }
  std::vector<bool> mask(d, true);
  if (n > 0)
    for (std::size_t l = 0; l < d; ++l) mask[l] = sum[l] / n >= 0.5;
  return mask;
}

}  // namespace repsample
