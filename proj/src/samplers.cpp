#include "repsample/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace repsample {

PolicyKind policy_from_name(const std::string& name) {
  if (name == "PBRS" || name == "pbrs") return PolicyKind::Pbrs;
  if (name == "DPBRS" || name == "dpbrs" || name == "D-PBRS")
    return PolicyKind::Dpbrs;
  if (name == "OPT" || name == "opt") return PolicyKind::Opt;
  if (name == "Random" || name == "random") return PolicyKind::Random;
  if (name == "EpsGreedy" || name == "eps_greedy" || name == "epsgreedy")
    return PolicyKind::EpsGreedy;
  if (name == "UcbLcb" || name == "ucb_lcb" || name == "ucblcb")
    return PolicyKind::UcbLcb;
  if (name == "OlVec" || name == "ol_vec" || name == "olvec")
    return PolicyKind::OlVec;
  throw std::invalid_argument("unknown policy: " + name);
}

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Pbrs: return "PBRS";
    case PolicyKind::Dpbrs: return "DPBRS";
    case PolicyKind::Opt: return "OPT";
    case PolicyKind::Random: return "Random";
    case PolicyKind::EpsGreedy: return "EpsGreedy";
    case PolicyKind::UcbLcb: return "UcbLcb";
    case PolicyKind::OlVec: return "OlVec";
  }
  return "?";
}

namespace {

constexpr double kMinPseudoCount = 1e-3;

std::vector<BetaPair> beta_prior(int d, const PriorSpec& prior,
                                 const TargetVector& v, int site) {
  std::vector<BetaPair> out(static_cast<std::size_t>(d));
  switch (prior.kind) {
    case PriorSpec::Kind::Uniform:
      break;  // Beta(1,1)
    case PriorSpec::Kind::Target:
      for (int l = 0; l < d; ++l) {
        out[l].ones = std::max(v.at(l) * prior.strength, kMinPseudoCount);
        out[l].zeros =
            std::max((1.0 - v.at(l)) * prior.strength, kMinPseudoCount);
      }
      break;
    case PriorSpec::Kind::Means:
      for (int l = 0; l < d; ++l) {
        const double p = prior.means.at(site).at(l);
        out[l].ones = std::max(p * prior.strength, kMinPseudoCount);
        out[l].zeros = std::max((1.0 - p) * prior.strength, kMinPseudoCount);
      }
      break;
  }
  return out;
}

Allocation one_hot(std::size_t m, std::size_t j, int k) {
  Allocation a;
  a.rho.assign(m, 0.0);
  a.counts.assign(m, 0);
  a.rho[j] = 1.0;
  a.counts[j] = k;
  return a;
}

}  // namespace

PolicyState make_binary_state(int m, int d, int horizon, const TargetVector& v,
                              const PriorSpec& prior, double beta_boost,
                              ImprovementMode mode) {
  if (m < 1 || d < 1 || horizon < 1)
    throw std::invalid_argument("make_binary_state: bad shape");
  if (beta_boost < 1.0)
    throw std::invalid_argument("make_binary_state: beta must be >= 1");
  PolicyState s;
  s.binary_mode = true;
  s.dim = static_cast<std::size_t>(d);
  s.horizon = horizon;
  s.beta_boost = beta_boost;
  s.improvement = mode;
  s.sites.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    s.sites[j].beta = beta_prior(d, prior, v, j);
    s.sites[j].obs_sum.assign(static_cast<std::size_t>(d), 0.0);
  }
  return s;
}

PolicyState make_continuous_state(int m, int d, int horizon,
                                  const PriorSpec& prior, double beta_boost,
                                  ImprovementMode mode) {
  if (m < 1 || d < 1 || horizon < 1)
    throw std::invalid_argument("make_continuous_state: bad shape");
  PolicyState s;
  s.binary_mode = false;
  s.dim = static_cast<std::size_t>(d);
  s.horizon = horizon;
  s.beta_boost = beta_boost;
  s.improvement = mode;
  s.sites.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    auto& niw = s.sites[j].niw;
    niw.mu.assign(static_cast<std::size_t>(d), 0.0);
    if (prior.kind == PriorSpec::Kind::Means) niw.mu = prior.means.at(j);
    niw.kappa = 1.0;
    niw.nu = static_cast<double>(d) + 2.0;  // smallest nu with a defined mean
    niw.psi = linalg::identity(static_cast<std::size_t>(d));
    s.sites[j].obs_sum.assign(static_cast<std::size_t>(d), 0.0);
  }
  return s;
}

double one_step_distance(const Metric& metric, const TargetVector& v,
                         const CollectedDataset& ds,
                         std::span<const double> candidate) {
  const std::size_t t = ds.batches().size();
  if (t == 0) return distance(metric, v, candidate);
  const auto u = ds.mean();
  std::vector<double> w(u.size());
  const double tt = static_cast<double>(t);
  for (std::size_t l = 0; l < u.size(); ++l)
    w[l] = (tt * u[l] + candidate[l]) / (tt + 1.0);
  return distance(metric, v, w);
}

std::vector<double> distance_gradient(const Metric& metric,
                                      const TargetVector& v,
                                      std::span<const double> u) {
  std::vector<double> g(u.size(), 0.0);
  switch (metric.kind) {
    case MetricKind::L1:
      for (std::size_t l = 0; l < u.size(); ++l)
        g[l] = u[l] > v[l] ? 1.0 : (u[l] < v[l] ? -1.0 : 0.0);
      break;
    case MetricKind::L2: {
      double norm = 0.0;
      for (std::size_t l = 0; l < u.size(); ++l) {
        const double d = u[l] - v[l];
        norm += d * d;
      }
      norm = std::sqrt(norm);
      if (norm > 0)
        for (std::size_t l = 0; l < u.size(); ++l) g[l] = (u[l] - v[l]) / norm;
      break;
    }
    case MetricKind::KL: {
      const double eps = metric.epsilon;
      for (std::size_t l = 0; l < u.size(); ++l) {
        if (u[l] <= eps || u[l] >= 1.0 - eps) continue;  // clamped: flat
        const double p = std::clamp(v[l], eps, 1.0 - eps);
        g[l] = -p / u[l] + (1.0 - p) / (1.0 - u[l]);
      }
      break;
    }
  }
  return g;
}

std::vector<double> project_simplex(std::vector<double> x) {
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cum = 0.0, tau = 0.0;
  std::size_t rho = 0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cum += sorted[j];
    const double t = (1.0 - cum) / static_cast<double>(j + 1);
    if (sorted[j] + t > 0) {
      rho = j + 1;
      tau = t;
    }
  }
  if (rho == 0) {  // all mass collapsed; fall back to uniform
    const double u = 1.0 / static_cast<double>(x.size());
    std::fill(x.begin(), x.end(), u);
    return x;
  }
  for (double& xi : x) xi = std::max(xi + tau, 0.0);
  return x;
}

namespace {

// Posterior estimate of site j's next-batch mean: the posterior mean, or a
// simulated draw (sample the parameters from the posterior, then simulate one
// individual from them).
std::vector<double> site_candidate(PolicyState& state, std::size_t j,
                                   Rng& rng) {
  const auto& sp = state.sites[j];
  std::vector<double> cand(state.dim);
  if (state.binary_mode) {
    for (std::size_t l = 0; l < state.dim; ++l) {
      if (state.improvement == ImprovementMode::Sample) {
        const double p = rng.beta(sp.beta[l].ones, sp.beta[l].zeros);
        cand[l] = rng.uniform() < p ? 1.0 : 0.0;
      } else {
        cand[l] = sp.beta[l].mean();
      }
    }
    return cand;
  }
  if (state.improvement == ImprovementMode::PosteriorMean) return sp.niw.mu;

  // Draw (theta, Sigma) from the normal-inverse-Wishart, then simulate a
  // batch mean from N(theta, Sigma).
  const std::size_t d = state.dim;
  const auto psi_inv = linalg::spd_inverse(sp.niw.psi);
  const auto l_pinv = linalg::cholesky(psi_inv);
  linalg::Mat bartlett(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    bartlett[i][i] =
        std::sqrt(rng.chi_squared(sp.niw.nu - static_cast<double>(i)));
    for (std::size_t k = 0; k < i; ++k) bartlett[i][k] = rng.gaussian();
  }
  const auto la = linalg::matmul(l_pinv, bartlett);
  const auto wishart = linalg::matmul(la, linalg::transpose(la));
  const auto sigma = linalg::spd_inverse(wishart);
  const auto l_sigma = linalg::cholesky(sigma);

  std::vector<double> z(d), theta(d);
  for (double& zi : z) zi = rng.gaussian();
  const double root_kappa = std::sqrt(sp.niw.kappa);
  for (std::size_t i = 0; i < d; ++i) {
    double s = sp.niw.mu[i];
    for (std::size_t k = 0; k <= i; ++k) s += l_sigma[i][k] * z[k] / root_kappa;
    theta[i] = s;
  }
  for (double& zi : z) zi = rng.gaussian();
  for (std::size_t i = 0; i < d; ++i) {
    double s = theta[i];
    for (std::size_t k = 0; k <= i; ++k) s += l_sigma[i][k] * z[k];
    cand[i] = s;
  }
  return cand;
}

// Dense two-phase simplex with Bland's rule: minimizes cost.x subject to
// a x = b, x >= 0. Problem sizes here are tiny (d+1 rows, m+2d columns).
std::vector<double> simplex_solve(std::vector<std::vector<double>> a,
                                  std::vector<double> b,
                                  const std::vector<double>& cost) {
  const std::size_t rows = a.size();
  const std::size_t n = cost.size();
  for (std::size_t r = 0; r < rows; ++r) {
    if (b[r] < 0) {
      for (double& x : a[r]) x = -x;
      b[r] = -b[r];
    }
  }
  const std::size_t total = n + rows;  // artificial column per row
  std::vector<std::vector<double>> tab(rows,
                                       std::vector<double>(total + 1, 0.0));
  std::vector<std::size_t> basis(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < n; ++c) tab[r][c] = a[r][c];
    tab[r][n + r] = 1.0;
    tab[r][total] = b[r];
    basis[r] = n + r;
  }

  const auto pivot = [&](std::size_t pr, std::size_t pc) {
    const double pv = tab[pr][pc];
    for (double& x : tab[pr]) x /= pv;
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == pr || tab[r][pc] == 0.0) continue;
      const double factor = tab[r][pc];
      for (std::size_t c = 0; c <= total; ++c)
        tab[r][c] -= factor * tab[pr][c];
    }
    basis[pr] = pc;
  };

  const auto run_phase = [&](const std::vector<double>& phase_cost,
                             std::size_t allowed) {
    for (int guard = 0; guard < 20000; ++guard) {
      std::size_t enter = total;
      for (std::size_t c = 0; c < allowed; ++c) {
        double reduced = phase_cost[c];
        for (std::size_t r = 0; r < rows; ++r)
          reduced -= phase_cost[basis[r]] * tab[r][c];
        if (reduced < -1e-10) {
          enter = c;  // Bland: first eligible column
          break;
        }
      }
      if (enter == total) return;
      std::size_t leave = rows;
      double best_ratio = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        if (tab[r][enter] <= 1e-12) continue;
        const double ratio = tab[r][total] / tab[r][enter];
        if (leave == rows || ratio < best_ratio - 1e-15 ||
            (std::abs(ratio - best_ratio) <= 1e-15 &&
             basis[r] < basis[leave])) {
          leave = r;
          best_ratio = ratio;
        }
      }
      if (leave == rows) return;  // unbounded; not reachable for this problem
      pivot(leave, enter);
    }
  };

  std::vector<double> phase1(total, 0.0);
  for (std::size_t r = 0; r < rows; ++r) phase1[n + r] = 1.0;
  run_phase(phase1, total);
  for (std::size_t r = 0; r < rows; ++r) {
    if (basis[r] < n) continue;
    for (std::size_t c = 0; c < n; ++c) {
      if (std::abs(tab[r][c]) > 1e-9) {
        pivot(r, c);
        break;
      }
    }
  }
  std::vector<double> phase2(total, 0.0);
  for (std::size_t c = 0; c < n; ++c) phase2[c] = cost[c];
  run_phase(phase2, n);

  std::vector<double> x(n, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    if (basis[r] < n) x[basis[r]] = tab[r][total];
  return x;
}

// Exact L1 allocation: min_rho sum_l |target_l - mix_l(rho)| over the simplex
// via the standard split |r| = p - q reformulation.
std::vector<double> l1_allocation_lp(
    const std::vector<std::vector<double>>& cands,
    const std::vector<double>& base, double t, const TargetVector& v) {
  const std::size_t m = cands.size();
  const std::size_t d = v.size();
  const std::size_t n = m + 2 * d;  // rho, p, q

  std::vector<std::vector<double>> a(d + 1, std::vector<double>(n, 0.0));
  std::vector<double> b(d + 1, 0.0);
  for (std::size_t l = 0; l < d; ++l) {
    for (std::size_t j = 0; j < m; ++j) a[l][j] = cands[j][l] / (t + 1.0);
    a[l][m + l] = -1.0;      // p_l
    a[l][m + d + l] = 1.0;   // q_l
    b[l] = v[l] - base[l] / (t + 1.0);
  }
  for (std::size_t j = 0; j < m; ++j) a[d][j] = 1.0;
  b[d] = 1.0;

  std::vector<double> cost(n, 0.0);
  for (std::size_t c = m; c < n; ++c) cost[c] = 1.0;

  auto x = simplex_solve(std::move(a), std::move(b), cost);
  std::vector<double> rho(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m));
  double sum = 0.0;
  for (double& r : rho) {
    r = std::max(r, 0.0);
    sum += r;
  }
  if (sum > 0)
    for (double& r : rho) r /= sum;
  else
    rho.assign(m, 1.0 / static_cast<double>(m));
  return rho;
}

std::size_t argmin_candidate(const std::vector<std::vector<double>>& cands,
                             const Metric& metric, const TargetVector& v,
                             const CollectedDataset& ds) {
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cands.size(); ++j) {
    const double s = one_step_distance(metric, v, ds, cands[j]);
    if (s < best_score) {
      best_score = s;
      best = j;
    }
  }
  return best;
}

}  // namespace

Allocation pbrs_select(PolicyState& state, const CollectedDataset& ds,
                       const TargetVector& v, const Metric& metric, int k,
                       Rng& rng) {
  if (state.sites.empty())
    throw std::runtime_error("pbrs_select: priors not initialized");
  std::vector<std::vector<double>> cands(state.num_sites());
  for (std::size_t j = 0; j < cands.size(); ++j)
    cands[j] = site_candidate(state, j, rng);
  return one_hot(state.num_sites(), argmin_candidate(cands, metric, v, ds), k);
}

Allocation dpbrs_allocate(PolicyState& state, const CollectedDataset& ds,
                          const TargetVector& v, const Metric& metric, int k,
                          Rng& rng, const DpbrsOptions& opt) {
  if (state.sites.empty())
    throw std::runtime_error("dpbrs_allocate: priors not initialized");
  const std::size_t m = state.num_sites();
  std::vector<std::vector<double>> cands(m);
  for (std::size_t j = 0; j < m; ++j) cands[j] = site_candidate(state, j, rng);

  const std::size_t t = ds.batches().size();
  const double tt = static_cast<double>(t);
  std::vector<double> base(state.dim, 0.0);
  if (t > 0) {
    const auto u = ds.mean();
    for (std::size_t l = 0; l < state.dim; ++l) base[l] = tt * u[l];
  }

  const auto mix_mean = [&](const std::vector<double>& rho) {
    std::vector<double> w(state.dim, 0.0);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t l = 0; l < state.dim; ++l) w[l] += rho[j] * cands[j][l];
    for (std::size_t l = 0; l < state.dim; ++l)
      w[l] = (base[l] + w[l]) / (tt + 1.0);
    return w;
  };
  const auto objective = [&](const std::vector<double>& rho) {
    return distance(metric, v, mix_mean(rho));
  };

  std::vector<double> rho(m, 1.0 / static_cast<double>(m));
  bool converged = false;

  if (metric.kind == MetricKind::L1) {
    // Piecewise-linear objective: gradient steps stall on the kink faces
    // where the optimum sits, so the L1 allocation is solved exactly as a
    // small linear program.
    rho = l1_allocation_lp(cands, base, tt, v);
    converged = true;
  } else {
    double f_cur = objective(rho);
    double eta = 1.0;
    for (int iter = 0; iter < opt.max_iters; ++iter) {
      const auto w = mix_mean(rho);
      const auto gu = distance_gradient(metric, v, w);
      std::vector<double> grad(m, 0.0);
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t l = 0; l < state.dim; ++l)
          grad[j] += cands[j][l] * gu[l] / (tt + 1.0);

      // Backtracking step: halve eta until the objective stops increasing.
      std::vector<double> next;
      double f_next = f_cur;
      for (;;) {
        std::vector<double> trial(m);
        for (std::size_t j = 0; j < m; ++j) trial[j] = rho[j] - eta * grad[j];
        trial = project_simplex(std::move(trial));
        const double f_trial = objective(trial);
        if (f_trial <= f_cur || eta < 1e-14) {
          next = std::move(trial);
          f_next = std::min(f_trial, f_cur);
          if (f_trial > f_cur) next = rho;  // no usable step
          break;
        }
        eta *= 0.5;
      }
      double delta = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        delta = std::max(delta, std::abs(next[j] - rho[j]));
      rho = std::move(next);
      f_cur = f_next;
      eta = std::min(eta * 1.5, 1.0);
      if (delta < opt.tol) {
        converged = true;
        break;
      }
    }
  }
  double f = objective(rho);

  // Pairwise mass-exchange polish at shrinking step sizes; the returned
  // iterate is an exchange optimum of the exact objective.
  for (double step = 0.25; step >= 1e-8; step *= 0.4) {
    for (int sweep = 0; sweep < 8; ++sweep) {
      bool improved = false;
      for (std::size_t from = 0; from < m; ++from) {
        if (rho[from] <= 0.0) continue;
        for (std::size_t to = 0; to < m; ++to) {
          if (to == from) continue;
          const double amount = std::min(step, rho[from]);
          std::vector<double> trial = rho;
          trial[from] -= amount;
          trial[to] += amount;
          const double f_trial = objective(trial);
          if (f_trial < f - 1e-15) {
            rho = std::move(trial);
            f = f_trial;
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
  }

  Allocation out;
  out.rho = rho;
  out.warning = !converged;
  out.counts.assign(m, 0);
  int assigned = 0;
  for (std::size_t j = 0; j < m; ++j) {
    out.counts[j] = static_cast<int>(
        std::floor(rho[j] * static_cast<double>(k) + 1e-9));
    assigned += out.counts[j];
  }
  const int remainder = k - assigned;
  if (remainder > 0)
    out.counts[argmin_candidate(cands, metric, v, ds)] += remainder;
  return out;
}

Allocation opt_select(std::span<const std::vector<double>> true_means,
                      const CollectedDataset& ds, const TargetVector& v,
                      const Metric& metric, int k) {
  if (true_means.empty())
    throw std::invalid_argument("opt_select: no site means");
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < true_means.size(); ++j) {
    const double s = one_step_distance(metric, v, ds, true_means[j]);
    if (s < best_score) {
      best_score = s;
      best = j;
    }
  }
  return one_hot(true_means.size(), best, k);
}

namespace {

std::optional<std::size_t> first_unvisited(const PolicyState& state) {
  for (std::size_t j = 0; j < state.num_sites(); ++j)
    if (state.sites[j].visits == 0.0) return j;
  return std::nullopt;
}

std::vector<double> empirical_mean(const SitePosterior& sp) {
  std::vector<double> m(sp.obs_sum.size(), 0.0);
  if (sp.obs_count > 0)
    for (std::size_t l = 0; l < m.size(); ++l)
      m[l] = sp.obs_sum[l] / sp.obs_count;
  return m;
}

}  // namespace

Allocation baseline_select(const BaselineConfig& config, PolicyState& state,
                           const CollectedDataset& ds, const TargetVector& v,
                           const Metric& metric, int k, Rng& rng) {
  const std::size_t m = state.num_sites();
  if (m == 0) throw std::runtime_error("baseline_select: no sites");

  switch (config.kind) {
    case PolicyKind::Random:
      return one_hot(m, static_cast<std::size_t>(rng.uniform_index(m)), k);

    case PolicyKind::EpsGreedy: {
      const double roll = rng.uniform();
      if (roll < config.epsilon)
        return one_hot(m, static_cast<std::size_t>(rng.uniform_index(m)), k);
      if (const auto j = first_unvisited(state)) return one_hot(m, *j, k);
      std::vector<std::vector<double>> means(m);
      for (std::size_t j = 0; j < m; ++j) means[j] = empirical_mean(state.sites[j]);
      return one_hot(m, argmin_candidate(means, metric, v, ds), k);
    }

    case PolicyKind::UcbLcb: {
      if (const auto j = first_unvisited(state)) return one_hot(m, *j, k);
      // Most favorable point of the per-coordinate confidence box: the value
      // closest to the mean that would land the dataset exactly on target.
      const std::size_t t = ds.batches().size();
      const double tt = static_cast<double>(t);
      std::vector<double> needed(state.dim);
      const auto u = t > 0 ? ds.mean() : std::vector<double>(state.dim, 0.0);
      for (std::size_t l = 0; l < state.dim; ++l)
        needed[l] = v[l] * (tt + 1.0) - tt * u[l];
      const double log_t = std::log(std::max<double>(state.step + 1, 2));
      std::vector<std::vector<double>> optimistic(m);
      for (std::size_t j = 0; j < m; ++j) {
        const auto mean = empirical_mean(state.sites[j]);
        const double h = std::sqrt(2.0 * log_t / state.sites[j].visits);
        optimistic[j].resize(state.dim);
        for (std::size_t l = 0; l < state.dim; ++l) {
          double x = std::clamp(needed[l], mean[l] - h, mean[l] + h);
          optimistic[j][l] = std::clamp(x, 0.0, 1.0);
        }
      }
      return one_hot(m, argmin_candidate(optimistic, metric, v, ds), k);
    }

    case PolicyKind::OlVec: {
      if (const auto j = first_unvisited(state)) return one_hot(m, *j, k);
      const auto u = ds.empty() ? v : ds.mean();
      state.olvec_direction = distance_gradient(metric, v, u);
      std::size_t best = 0;
      double best_score = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j) {
        const auto mean = empirical_mean(state.sites[j]);
        double s = 0.0;
        for (std::size_t l = 0; l < state.dim; ++l)
          s += state.olvec_direction[l] * mean[l];
        if (s < best_score) {
          best_score = s;
          best = j;
        }
      }
      return one_hot(m, best, k);
    }

    default:
      throw std::invalid_argument("baseline_select: not a baseline policy");
  }
}

void update_priors(PolicyState& state, std::span<const SensitiveVector> batch,
                   int site_j, int t, const CollectedDataset& ds,
                   const TargetVector& v) {
  if (site_j < 0 || static_cast<std::size_t>(site_j) >= state.num_sites())
    throw std::invalid_argument("update_priors: bad site index");
  if (t < 1 || t > state.horizon)
    throw std::invalid_argument("update_priors: step outside [1, horizon]");
  if (batch.empty()) return;
  auto& sp = state.sites[static_cast<std::size_t>(site_j)];

  const double boost =
      std::pow(state.beta_boost,
               1.0 - static_cast<double>(t) / static_cast<double>(state.horizon));
  std::vector<double> ds_mean;
  if (!ds.empty()) ds_mean = ds.mean();

  if (state.binary_mode) {
    for (std::size_t l = 0; l < state.dim; ++l) {
      double ones = 0.0;
      for (const auto& a : batch) ones += a[l];
      const double zeros = static_cast<double>(batch.size()) - ones;
      // Minority value: the one whose dataset frequency trails the target.
      const double freq = ds_mean.empty() ? 0.5 : ds_mean[l];
      const bool minority_is_one = freq < v[l];
      sp.beta[l].ones += minority_is_one ? boost * ones : ones;
      sp.beta[l].zeros += minority_is_one ? zeros : boost * zeros;
    }
  } else {
    std::vector<double> weights(batch.size(), 1.0);
    if (state.beta_boost > 1.0 && !ds_mean.empty()) {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        double align = 0.0;
        for (std::size_t l = 0; l < state.dim; ++l)
          align += (batch[i][l] - ds_mean[l]) * (v[l] - ds_mean[l]);
        if (align > 0) weights[i] = boost;
      }
    }
    double wsum = 0.0;
    std::vector<double> xbar(state.dim, 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      wsum += weights[i];
      for (std::size_t l = 0; l < state.dim; ++l)
        xbar[l] += weights[i] * batch[i][l];
    }
    for (double& x : xbar) x /= wsum;

    auto& niw = sp.niw;
    linalg::Mat scatter(state.dim, std::vector<double>(state.dim, 0.0));
    for (std::size_t i = 0; i < batch.size(); ++i)
      for (std::size_t r = 0; r < state.dim; ++r)
        for (std::size_t c = 0; c < state.dim; ++c)
          scatter[r][c] +=
              weights[i] * (batch[i][r] - xbar[r]) * (batch[i][c] - xbar[c]);
    const double shrink = niw.kappa * wsum / (niw.kappa + wsum);
    for (std::size_t r = 0; r < state.dim; ++r)
      for (std::size_t c = 0; c < state.dim; ++c)
        niw.psi[r][c] += scatter[r][c] +
                         shrink * (xbar[r] - niw.mu[r]) * (xbar[c] - niw.mu[c]);
    for (std::size_t l = 0; l < state.dim; ++l)
      niw.mu[l] = (niw.kappa * niw.mu[l] + wsum * xbar[l]) / (niw.kappa + wsum);
    niw.kappa += wsum;
    niw.nu += wsum;
  }

  for (const auto& a : batch)
    for (std::size_t l = 0; l < state.dim; ++l) sp.obs_sum[l] += a[l];
  sp.obs_count += static_cast<double>(batch.size());
  sp.visits += 1.0;
  state.step = std::max(state.step, t);
}

Allocation select_allocation(const PolicyConfig& config, PolicyState& state,
                             const CollectedDataset& ds, const TargetVector& v,
                             const Metric& metric, int k, Rng& rng,
                             std::span<const std::vector<double>> true_means) {
  switch (config.kind) {
    case PolicyKind::Pbrs:
      return pbrs_select(state, ds, v, metric, k, rng);
    case PolicyKind::Dpbrs:
      return dpbrs_allocate(state, ds, v, metric, k, rng, config.dpbrs);
    case PolicyKind::Opt:
      return opt_select(true_means, ds, v, metric, k);
    default:
      return baseline_select({config.kind, config.epsilon}, state, ds, v,
                             metric, k, rng);
  }
}

}  // namespace repsample
