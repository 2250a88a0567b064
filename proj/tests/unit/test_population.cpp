#include <doctest.h>

#include <stdexcept>
#include <cmath>

#include "repsample/population.hpp"

using namespace repsample;

namespace {

Record rec1(double a0) {
  Record r;
  r.a = {a0};
  return r;
}

// Two-record site, half a=1 and half a=0.
Site half_half_site(int per_side) {
  std::vector<Record> records;
  for (int i = 0; i < per_side; ++i) records.push_back(rec1(1.0));
  for (int i = 0; i < per_side; ++i) records.push_back(rec1(0.0));
  return Site::empirical(0, std::move(records));
}

}  // namespace

TEST_CASE("response weight formula") {
  CHECK(response_weight(std::vector<double>{1.0, 0.0}, 0.5) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(response_weight(std::vector<double>{1.0}, 0.8) ==
        doctest::Approx(0.64).epsilon(1e-15));
  CHECK(response_weight(std::vector<double>{0.0}, 0.8) ==
        doctest::Approx(0.04).epsilon(1e-15));
  // lambda^2 ratio between all-majority and all-minority (d cancels)
  const double lambda = 4.0;
  const double b = lambda / (1 + lambda);
  CHECK(response_weight(std::vector<double>{1, 1, 1}, b) /
            response_weight(std::vector<double>{0, 0, 0}, b) ==
        doctest::Approx(lambda * lambda).epsilon(1e-12));
  CHECK(response_weight(std::vector<double>{0, 1, 0}, 0.5) ==
        doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(response_weight(std::vector<double>{1.0}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(response_weight(std::vector<double>{1.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("degenerate one-record site") {
  Site site = Site::empirical(0, {rec1(1.0)});
  Rng rng(1);
  const auto batch = sample_batch(site, 5, std::nullopt, rng);
  CHECK(batch.size() == 5);
  for (const auto& r : batch) CHECK(r.a[0] == 1.0);
}

TEST_CASE("seeded draws are reproducible") {
  Site site = half_half_site(50);
  Rng a(42), b(42);
  const auto batch_a = sample_batch(site, 20, std::nullopt, a);
  const auto batch_b = sample_batch(site, 20, std::nullopt, b);
  REQUIRE(batch_a.size() == batch_b.size());
  for (std::size_t i = 0; i < batch_a.size(); ++i)
    CHECK(batch_a[i].a[0] == batch_b[i].a[0]);
}

TEST_CASE("lambda=1 is bitwise identical to the unbiased path") {
  Site site = half_half_site(100);
  site.response_biased = true;
  Rng a(9), b(9);
  const ResponseBiasConfig no_bias{1.0, 1};
  const auto biased = sample_batch(site, 200, no_bias, a);
  const auto plain = sample_batch(site, 200, std::nullopt, b);
  REQUIRE(biased.size() == plain.size());
  for (std::size_t i = 0; i < biased.size(); ++i)
    CHECK(biased[i].a[0] == plain[i].a[0]);
}

TEST_CASE("lambda=4 majority fraction approaches 16/17") {
  Site site = half_half_site(200);
  site.response_biased = true;
  const ResponseBiasConfig bias{4.0, 1};
  Rng rng(123);
  int ones = 0;
  const int n = 20000;
  const auto batch = sample_batch(site, n, bias, rng);
  for (const auto& r : batch) ones += r.a[0] == 1.0;
  const double frac = static_cast<double>(ones) / n;
  CHECK(frac == doctest::Approx(16.0 / 17.0).epsilon(0.02));

  // the closed-form effective mean matches the weight arithmetic exactly
  const auto eff = site.effective_mean(bias);
  CHECK(eff[0] == doctest::Approx(16.0 / 17.0).epsilon(1e-12));
}

TEST_CASE("raising lambda raises the expected majority fraction") {
  Site site = half_half_site(100);
  site.response_biased = true;
  double prev = 0.5;
  for (const double lambda : {1.0, 2.0, 4.0, 10.0}) {
    const auto eff = site.effective_mean(ResponseBiasConfig{lambda, 1});
    CHECK(eff[0] >= prev - 1e-12);
    prev = eff[0];
  }
  CHECK(prev > 0.9);
}

TEST_CASE("synthetic binary site bias via rejection") {
  Site site = Site::synthetic_binary(0, {0.5});
  site.response_biased = true;
  const ResponseBiasConfig bias{4.0, 1};
  Rng rng(5);
  const auto batch = sample_batch(site, 20000, bias, rng);
  double ones = 0;
  for (const auto& r : batch) ones += r.a[0];
  CHECK(ones / 20000.0 == doctest::Approx(16.0 / 17.0).epsilon(0.02));
  CHECK(site.effective_mean(bias)[0] ==
        doctest::Approx(16.0 / 17.0).epsilon(1e-12));
}

TEST_CASE("causal shift compounds selection probabilities") {
  SUBCASE("alpha=0 and rho=0 change nothing") {
    Site site = half_half_site(10);
    apply_causal_shift(site, 1.0, 0.0);
    apply_causal_shift(site, 0.0, 1.0);
    CHECK(site.shift_exponent() == 1.0);
    CHECK(site.effective_mean(std::nullopt)[0] == doctest::Approx(0.5));
  }
  SUBCASE("hand arithmetic: p=(0.8,0.2) squares to (0.9412, 0.0588)") {
    Site site = Site::empirical(0, {rec1(1.0), rec1(0.0)}, {0.8, 0.2});
    apply_causal_shift(site, 1.0, 1.0);
    const auto eff = site.effective_mean(std::nullopt);
    CHECK(eff[0] == doctest::Approx(0.64 / 0.68).epsilon(1e-9));
  }
  SUBCASE("repeated sampling weakly shrinks the minority share") {
    Site site = Site::empirical(0, {rec1(1.0), rec1(0.0)}, {0.7, 0.3});
    double prev = site.effective_mean(std::nullopt)[0];
    for (int i = 0; i < 5; ++i) {
      apply_causal_shift(site, 1.0, 0.5);
      const double cur = site.effective_mean(std::nullopt)[0];
      CHECK(cur >= prev - 1e-12);
      prev = cur;
    }
    CHECK(prev > 0.9);
  }
}

TEST_CASE("make_synthetic_sites contracts") {
  SyntheticSitesConfig cfg;
  cfg.target = {0.5, 0.5, 0.5};
  SUBCASE("means stay in range, deterministic under a fixed seed") {
    Rng a(77), b(77);
    const auto sites_a = make_synthetic_sites(20, 3, cfg, a);
    const auto sites_b = make_synthetic_sites(20, 3, cfg, b);
    REQUIRE(sites_a.size() == 20);
    for (std::size_t j = 0; j < sites_a.size(); ++j) {
      for (int l = 0; l < 3; ++l) {
        CHECK(sites_a[j].binary_probs()[l] >= 0.1);
        CHECK(sites_a[j].binary_probs()[l] <= 0.9);
        CHECK(sites_a[j].binary_probs()[l] == sites_b[j].binary_probs()[l]);
      }
    }
  }
  SUBCASE("straddle guarantee") {
    Rng rng(3);
    const auto sites = make_synthetic_sites(2, 3, cfg, rng);
    for (int l = 0; l < 3; ++l) {
      bool below = false, above = false;
      for (const auto& s : sites) {
        below = below || s.binary_probs()[l] <= 0.5;
        above = above || s.binary_probs()[l] >= 0.5;
      }
      CHECK(below);
      CHECK(above);
    }
  }
  SUBCASE("bad configs throw") {
    Rng rng(1);
    CHECK_THROWS_AS(make_synthetic_sites(1, 3, cfg, rng),
                    std::invalid_argument);
    SyntheticSitesConfig bad = cfg;
    bad.mean_lo = 0.9;
    bad.mean_hi = 0.1;
    CHECK_THROWS_AS(make_synthetic_sites(5, 3, bad, rng),
                    std::invalid_argument);
  }
  SUBCASE("materialized sites hold records") {
    SyntheticSitesConfig mat = cfg;
    mat.records_per_site = 100;
    Rng rng(4);
    const auto sites = make_synthetic_sites(4, 3, mat, rng);
    for (const auto& s : sites) {
      CHECK(s.mode() == Site::Mode::Empirical);
      CHECK(s.records().size() == 100);
    }
  }
}

TEST_CASE("majority mask reflects global frequencies") {
  std::vector<Record> recs;
  for (int i = 0; i < 7; ++i) recs.push_back(rec1(1.0));
  for (int i = 0; i < 3; ++i) recs.push_back(rec1(0.0));
  std::vector<Site> sites;
  sites.push_back(Site::empirical(0, recs));
  const auto mask = majority_mask(sites);
  REQUIRE(mask.size() == 1);
  CHECK(mask[0] == true);

  // flipping the coding flips the bias direction
  Site site = Site::empirical(0, recs);
  site.response_biased = true;
  site.majority_one = {false};
  const auto eff = site.effective_mean(ResponseBiasConfig{4.0, 1});
  CHECK(eff[0] < 0.7);  // a=1 is now treated as minority and suppressed
}

TEST_CASE("sample_batch argument errors") {
  Site site = half_half_site(5);
  Rng rng(1);
  CHECK_THROWS_AS(sample_batch(site, 0, std::nullopt, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_batch(site, 11, std::nullopt, rng, false),
                  std::runtime_error);
  const auto no_repl = sample_batch(site, 10, std::nullopt, rng, false);
  double total = 0;
  for (const auto& r : no_repl) total += r.a[0];
  CHECK(total == 5.0);  // every record drawn exactly once
}
