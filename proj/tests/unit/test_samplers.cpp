#include <doctest.h>

#include <stdexcept>
#include <cmath>

#include "repsample/samplers.hpp"

using namespace repsample;

namespace {

const Metric kL1{MetricKind::L1, 1e-6};
const Metric kL2{MetricKind::L2, 1e-6};

Record rec1(double a0) {
  Record r;
  r.a = {a0};
  return r;
}

PriorSpec means_prior(std::vector<std::vector<double>> means, double strength) {
  PriorSpec p;
  p.kind = PriorSpec::Kind::Means;
  p.strength = strength;
  p.means = std::move(means);
  return p;
}

// Exhaustive search over the rho simplex at the given resolution (m <= 3).
double grid_best_objective(const std::vector<std::vector<double>>& cands,
                           const Metric& metric, const TargetVector& v,
                           const CollectedDataset& ds, double resolution) {
  const std::size_t m = cands.size();
  const std::size_t d = cands.front().size();
  const std::size_t steps = static_cast<std::size_t>(1.0 / resolution);
  const std::size_t t = ds.batches().size();
  std::vector<double> base(d, 0.0);
  if (t > 0) {
    const auto u = ds.mean();
    for (std::size_t l = 0; l < d; ++l) base[l] = static_cast<double>(t) * u[l];
  }
  const auto eval = [&](const std::vector<double>& rho) {
    std::vector<double> w(d, 0.0);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t l = 0; l < d; ++l) w[l] += rho[j] * cands[j][l];
    for (std::size_t l = 0; l < d; ++l)
      w[l] = (base[l] + w[l]) / static_cast<double>(t + 1);
    return distance(metric, v, w);
  };
  double best = std::numeric_limits<double>::infinity();
  if (m == 2) {
    for (std::size_t i = 0; i <= steps; ++i) {
      const double r0 = static_cast<double>(i) / steps;
      best = std::min(best, eval({r0, 1.0 - r0}));
    }
  } else if (m == 3) {
    for (std::size_t i = 0; i <= steps; ++i)
      for (std::size_t j = 0; i + j <= steps; ++j) {
        const double r0 = static_cast<double>(i) / steps;
        const double r1 = static_cast<double>(j) / steps;
        best = std::min(best, eval({r0, r1, 1.0 - r0 - r1}));
      }
  }
  return best;
}

}  // namespace

TEST_CASE("pbrs selection follows the one-step improvement") {
  const TargetVector v{0.5};
  Rng rng(1);
  PolicyState state =
      make_binary_state(2, 1, 10, v, means_prior({{0.9}, {0.1}}, 1e9));

  CollectedDataset ds;
  SUBCASE("empty dataset ties break to site 0") {
    const auto alloc = pbrs_select(state, ds, v, kL2, 4, rng);
    CHECK(alloc.rho[0] == 1.0);
    CHECK(alloc.counts[0] == 4);
  }
  SUBCASE("after an all-ones batch it switches to the low site") {
    ds.add_batch({rec1(1), rec1(1), rec1(1), rec1(1)});
    const auto alloc = pbrs_select(state, ds, v, kL2, 4, rng);
    CHECK(alloc.rho[1] == 1.0);
  }
}

TEST_CASE("pbrs degenerate and tie contracts") {
  const TargetVector v{0.5};
  Rng rng(2);
  CollectedDataset ds;
  PolicyState one = make_binary_state(1, 1, 10, v, means_prior({{0.8}}, 100));
  CHECK(pbrs_select(one, ds, v, kL2, 3, rng).rho[0] == 1.0);

  PolicyState tied =
      make_binary_state(3, 1, 10, v, means_prior({{0.7}, {0.7}, {0.7}}, 100));
  CHECK(pbrs_select(tied, ds, v, kL2, 3, rng).rho[0] == 1.0);

  PolicyState empty;
  CHECK_THROWS_AS(pbrs_select(empty, ds, v, kL2, 3, rng), std::runtime_error);
}

TEST_CASE("dpbrs symmetric two-site allocation") {
  const TargetVector v{0.5};
  Rng rng(3);
  PolicyState state =
      make_binary_state(2, 1, 10, v, means_prior({{0.2}, {0.8}}, 1e9));
  CollectedDataset ds;
  const auto alloc = dpbrs_allocate(state, ds, v, kL2, 40, rng);
  CHECK(alloc.rho[0] == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(alloc.rho[1] == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(alloc.counts[0] + alloc.counts[1] == 40);
  CHECK_FALSE(alloc.warning);
}

TEST_CASE("dpbrs count conversion floors and assigns the remainder") {
  // Sites at 0 and 1 with target 0.25: the optimum is rho = (0.75, 0.25),
  // which floors 40 samples into 30 and 10.
  const TargetVector v{0.25};
  Rng rng(4);
  PolicyState state =
      make_binary_state(2, 1, 10, v, means_prior({{0.0}, {1.0}}, 1e9));
  CollectedDataset ds;
  const auto alloc = dpbrs_allocate(state, ds, v, kL1, 40, rng);
  CHECK(alloc.rho[0] == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(alloc.counts[0] == 30);
  CHECK(alloc.counts[1] == 10);
}

TEST_CASE("dpbrs one-hot when a site already matches the target") {
  const TargetVector v{0.3, 0.6};
  Rng rng(5);
  PolicyState state = make_binary_state(
      3, 2, 10, v, means_prior({{0.9, 0.1}, {0.3, 0.6}, {0.5, 0.9}}, 1e9));
  CollectedDataset ds;
  const auto alloc = dpbrs_allocate(state, ds, v, kL2, 10, rng);
  CHECK(alloc.rho[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("dpbrs is no worse than the best one-hot or the simplex grid") {
  const Metric kKL{MetricKind::KL, 1e-6};
  for (const Metric& metric : {kL2, kL1, kKL}) {
    Rng seed_rng(6);
    for (int instance = 0; instance < 8; ++instance) {
      const int m = 2 + static_cast<int>(seed_rng.uniform_index(2));  // 2..3
      const int d = 1 + static_cast<int>(seed_rng.uniform_index(2));  // 1..2
      TargetVector v(d);
      std::vector<std::vector<double>> means(m, std::vector<double>(d));
      for (int l = 0; l < d; ++l) v[l] = seed_rng.uniform(0.2, 0.8);
      for (int j = 0; j < m; ++j)
        for (int l = 0; l < d; ++l) means[j][l] = seed_rng.uniform(0.05, 0.95);

      PolicyState state =
          make_binary_state(m, d, 10, v, means_prior(means, 1e9));
      CollectedDataset ds;
      ds.add_batch({rec1(1)});  // nonempty history, d=1 only
      if (d != 1) ds = CollectedDataset();

      Rng rng(100 + instance);
      const auto alloc = dpbrs_allocate(state, ds, v, metric, 60, rng);

      // optimizer objective at rho
      std::vector<double> mix(d, 0.0);
      for (int j = 0; j < m; ++j)
        for (int l = 0; l < d; ++l) mix[l] += alloc.rho[j] * means[j][l];
      const std::size_t t = ds.batches().size();
      if (t > 0) {
        const auto u = ds.mean();
        for (int l = 0; l < d; ++l)
          mix[l] = (static_cast<double>(t) * u[l] + mix[l]) /
                   static_cast<double>(t + 1);
      }
      const double f_opt = distance(metric, v, mix);

      double best_one_hot = std::numeric_limits<double>::infinity();
      for (int j = 0; j < m; ++j)
        best_one_hot =
            std::min(best_one_hot, one_step_distance(metric, v, ds, means[j]));
      CHECK(f_opt <= best_one_hot + 1e-6);

      const double grid = grid_best_objective(means, metric, v, ds, 1e-3);
      CHECK(f_opt <= grid + 1e-6);
    }
  }
}

TEST_CASE("allocations sum to one") {
  const TargetVector v{0.5, 0.5};
  Rng rng(7);
  PolicyState state = make_binary_state(
      4, 2, 10, v,
      means_prior({{0.2, 0.3}, {0.8, 0.7}, {0.5, 0.5}, {0.1, 0.9}}, 50));
  CollectedDataset ds;
  for (const PolicyKind kind :
       {PolicyKind::Pbrs, PolicyKind::Dpbrs, PolicyKind::Random,
        PolicyKind::EpsGreedy, PolicyKind::UcbLcb, PolicyKind::OlVec}) {
    PolicyConfig cfg;
    cfg.kind = kind;
    std::vector<std::vector<double>> truths{
        {0.2, 0.3}, {0.8, 0.7}, {0.5, 0.5}, {0.1, 0.9}};
    const auto alloc =
        select_allocation(cfg, state, ds, v, kL2, 12, rng, truths);
    double sum = 0.0;
    int count_sum = 0;
    for (std::size_t j = 0; j < alloc.rho.size(); ++j) {
      sum += alloc.rho[j];
      count_sum += alloc.counts[j];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(count_sum == 12);
  }
}

TEST_CASE("opt selection examples") {
  const TargetVector v{0.5};
  CollectedDataset ds;
  SUBCASE("mean 0.6 with sites 0.1 and 0.9 picks the low site") {
    ds.add_batch({rec1(1), rec1(1), rec1(1), rec1(0), rec1(0)});  // mean 0.6
    std::vector<std::vector<double>> means{{0.1}, {0.9}};
    const auto alloc = opt_select(means, ds, v, kL2, 5);
    CHECK(alloc.rho[0] == 1.0);
  }
  SUBCASE("on-target mean picks the site closest to v") {
    ds.add_batch({rec1(1), rec1(0)});  // mean 0.5
    std::vector<std::vector<double>> means{{0.9}, {0.55}};
    // brute force both options
    double s0 = one_step_distance(kL2, v, ds, means[0]);
    double s1 = one_step_distance(kL2, v, ds, means[1]);
    CHECK(s1 < s0);
    const auto alloc = opt_select(means, ds, v, kL2, 2);
    CHECK(alloc.rho[1] == 1.0);
  }
  SUBCASE("single site") {
    std::vector<std::vector<double>> means{{0.7}};
    CHECK(opt_select(means, ds, v, kL2, 2).rho[0] == 1.0);
  }
}

TEST_CASE("pbrs with frozen true-mean priors matches opt step by step") {
  const TargetVector v{0.5, 0.5};
  std::vector<std::vector<double>> truths{
      {0.15, 0.7}, {0.85, 0.3}, {0.45, 0.5}, {0.6, 0.85}};
  PolicyState state = make_binary_state(4, 2, 30, v, means_prior(truths, 1e12));
  CollectedDataset ds;
  Rng rng(8);
  Rng data_rng(9);
  for (int t = 1; t <= 30; ++t) {
    const auto pbrs = pbrs_select(state, ds, v, kL2, 6, rng);
    const auto opt = opt_select(truths, ds, v, kL2, 6);
    CHECK(pbrs.rho == opt.rho);
    // feed a batch from the chosen site's true distribution
    std::size_t j = 0;
    while (pbrs.rho[j] == 0.0) ++j;
    std::vector<Record> batch;
    std::vector<SensitiveVector> avecs;
    for (int i = 0; i < 6; ++i) {
      Record r;
      r.a = {data_rng.uniform() < truths[j][0] ? 1.0 : 0.0,
             data_rng.uniform() < truths[j][1] ? 1.0 : 0.0};
      avecs.push_back(r.a);
      batch.push_back(std::move(r));
    }
    ds.add_batch(std::move(batch));
    update_priors(state, avecs, static_cast<int>(j), t, ds, v);
  }
}

TEST_CASE("prior updates") {
  const TargetVector v{0.5};
  SUBCASE("beta=1 reproduces the textbook conjugate update") {
    PolicyState state = make_binary_state(1, 1, 10, v, PriorSpec{});
    const double a0 = state.sites[0].beta[0].ones;
    const double b0 = state.sites[0].beta[0].zeros;
    CollectedDataset ds;
    std::vector<SensitiveVector> batch{{1.0}, {1.0}, {0.0}};
    ds.add_batch({rec1(1), rec1(1), rec1(0)});
    update_priors(state, batch, 0, 5, ds, v);
    CHECK(state.sites[0].beta[0].ones == a0 + 2.0);
    CHECK(state.sites[0].beta[0].zeros == b0 + 1.0);
    CHECK(state.sites[0].visits == 1.0);
  }
  SUBCASE("boost is neutral at t == horizon") {
    PolicyState state = make_binary_state(1, 1, 10, v, PriorSpec{}, 3.0);
    const double a0 = state.sites[0].beta[0].ones;
    CollectedDataset ds;
    ds.add_batch({rec1(0), rec1(0), rec1(0), rec1(1)});  // mean 0.25 < v: 1 is minority
    std::vector<SensitiveVector> batch{{1.0}};
    update_priors(state, batch, 0, 10, ds, v);
    CHECK(state.sites[0].beta[0].ones == doctest::Approx(a0 + 1.0).epsilon(1e-12));
  }
  SUBCASE("beta=2 at half horizon weights a minority observation by sqrt(2)") {
    PolicyState state = make_binary_state(1, 1, 10, v, PriorSpec{}, 2.0);
    const double a0 = state.sites[0].beta[0].ones;
    CollectedDataset ds;
    ds.add_batch({rec1(0), rec1(0), rec1(0), rec1(1)});  // 1 is the minority
    std::vector<SensitiveVector> batch{{1.0}};
    update_priors(state, batch, 0, 5, ds, v);
    CHECK(state.sites[0].beta[0].ones ==
          doctest::Approx(a0 + std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("continuous NIW update matches the closed form for unit weights") {
    PolicyState state = make_continuous_state(1, 2, 10, PriorSpec{});
    CollectedDataset ds;
    Record r1, r2;
    r1.a = {1.0, 0.0};
    r2.a = {0.0, 2.0};
    ds.add_batch({r1, r2});
    std::vector<SensitiveVector> batch{{1.0, 0.0}, {0.0, 2.0}};
    const double kappa0 = state.sites[0].niw.kappa;
    const double nu0 = state.sites[0].niw.nu;
    update_priors(state, batch, 0, 10, ds, {0.5, 0.5});
    const auto& niw = state.sites[0].niw;
    CHECK(niw.kappa == kappa0 + 2.0);
    CHECK(niw.nu == nu0 + 2.0);
    // mu' = (kappa0*mu0 + n*xbar)/(kappa0+n) with mu0 = 0, xbar = (0.5, 1.0)
    CHECK(niw.mu[0] == doctest::Approx((2.0 * 0.5) / 3.0).epsilon(1e-12));
    CHECK(niw.mu[1] == doctest::Approx((2.0 * 1.0) / 3.0).epsilon(1e-12));
    // psi' = psi0 + scatter + kappa0*n/(kappa0+n) * xbar xbar^T
    // scatter diag: (0.5, 2.0); cross: -1.0
    CHECK(niw.psi[0][0] ==
          doctest::Approx(1.0 + 0.5 + (2.0 / 3.0) * 0.25).epsilon(1e-12));
    CHECK(niw.psi[1][1] ==
          doctest::Approx(1.0 + 2.0 + (2.0 / 3.0) * 1.0).epsilon(1e-12));
    CHECK(niw.psi[0][1] ==
          doctest::Approx(-1.0 + (2.0 / 3.0) * 0.5).epsilon(1e-12));
  }
}

TEST_CASE("continuous-mode selection") {
  PriorSpec prior;
  prior.kind = PriorSpec::Kind::Means;
  prior.strength = 1.0;
  prior.means = {{0.9, 0.9}, {0.31, 0.59}};
  const TargetVector v{0.3, 0.6};
  CollectedDataset ds;

  SUBCASE("posterior-mean mode picks the site closest to the target") {
    PolicyState state = make_continuous_state(2, 2, 10, prior);
    Rng rng(41);
    const auto alloc = pbrs_select(state, ds, v, kL2, 3, rng);
    CHECK(alloc.rho[1] == 1.0);
  }
  SUBCASE("sampled draws are valid, deterministic one-hots") {
    PolicyState state = make_continuous_state(2, 2, 10, prior, 1.0,
                                              ImprovementMode::Sample);
    Rng a(42), b(42);
    PolicyState state_b = state;
    for (int i = 0; i < 5; ++i) {
      const auto x = pbrs_select(state, ds, v, kL2, 3, a);
      const auto y = pbrs_select(state_b, ds, v, kL2, 3, b);
      CHECK(x.rho == y.rho);
      double sum = 0.0;
      for (const double r : x.rho) sum += r;
      CHECK(sum == doctest::Approx(1.0));
    }
  }
  SUBCASE("niw-sampled site means concentrate as evidence accumulates") {
    PolicyState state = make_continuous_state(1, 2, 10, prior, 1.0,
                                              ImprovementMode::Sample);
    // with heavy evidence at (0.2, 0.7), selection candidates should track it
    CollectedDataset heavy;
    std::vector<SensitiveVector> batch;
    Rng data_rng(43);
    std::vector<Record> recs;
    for (int i = 0; i < 400; ++i) {
      Record r;
      r.a = {0.2 + 0.01 * data_rng.gaussian(), 0.7 + 0.01 * data_rng.gaussian()};
      batch.push_back(r.a);
      recs.push_back(std::move(r));
    }
    heavy.add_batch(recs);
    update_priors(state, batch, 0, 1, heavy, v);
    CHECK(state.sites[0].niw.mu[0] == doctest::Approx(0.2).epsilon(0.05));
    CHECK(state.sites[0].niw.mu[1] == doctest::Approx(0.7).epsilon(0.05));
  }
}

TEST_CASE("baseline contracts") {
  const TargetVector v{0.5};
  CollectedDataset ds;
  SUBCASE("random is reproducible under a fixed seed") {
    PolicyState state = make_binary_state(5, 1, 10, v, PriorSpec{});
    Rng a(11), b(11);
    for (int i = 0; i < 10; ++i) {
      const auto x = baseline_select({PolicyKind::Random, 0}, state, ds, v,
                                     kL2, 1, a);
      const auto y = baseline_select({PolicyKind::Random, 0}, state, ds, v,
                                     kL2, 1, b);
      CHECK(x.rho == y.rho);
    }
  }
  SUBCASE("ucb visits every site once before exploiting") {
    PolicyState state = make_binary_state(4, 1, 10, v, PriorSpec{});
    Rng rng(12);
    for (int t = 1; t <= 4; ++t) {
      const auto alloc = baseline_select({PolicyKind::UcbLcb, 0}, state, ds, v,
                                         kL2, 2, rng);
      std::size_t j = 0;
      while (alloc.rho[j] == 0.0) ++j;
      CHECK(j == static_cast<std::size_t>(t - 1));
      std::vector<SensitiveVector> batch{{1.0}, {0.0}};
      ds.add_batch({rec1(1), rec1(0)});
      update_priors(state, batch, static_cast<int>(j), t, ds, v);
    }
  }
  SUBCASE("epsilon=1 matches the uniform distribution") {
    PolicyState state = make_binary_state(4, 1, 10, v, PriorSpec{});
    Rng rng(13);
    std::vector<int> hits(4, 0);
    for (int i = 0; i < 4000; ++i) {
      const auto alloc = baseline_select({PolicyKind::EpsGreedy, 1.0}, state,
                                         ds, v, kL2, 1, rng);
      for (std::size_t j = 0; j < 4; ++j)
        if (alloc.rho[j] == 1.0) ++hits[j];
    }
    for (const int h : hits) CHECK(std::abs(h - 1000) < 120);
  }
}

TEST_CASE("simplex projection") {
  const auto p1 = project_simplex({0.5, 0.5});
  CHECK(p1[0] == doctest::Approx(0.5));
  const auto p2 = project_simplex({2.0, 0.0});
  CHECK(p2[0] == doctest::Approx(1.0));
  CHECK(p2[1] == doctest::Approx(0.0));
  const auto p3 = project_simplex({-1.0, -2.0, 0.2});
  double sum = 0.0;
  for (const double x : p3) {
    CHECK(x >= 0.0);
    sum += x;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("policy names round trip") {
  for (const PolicyKind k :
       {PolicyKind::Pbrs, PolicyKind::Dpbrs, PolicyKind::Opt,
        PolicyKind::Random, PolicyKind::EpsGreedy, PolicyKind::UcbLcb,
        PolicyKind::OlVec})
    CHECK(policy_from_name(policy_name(k)) == k);
  CHECK_THROWS_AS(policy_from_name("nope"), std::invalid_argument);
}
