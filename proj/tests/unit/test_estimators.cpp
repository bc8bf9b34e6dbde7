#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bitflip/estimators.hpp"
#include "bitflip/random.hpp"

using namespace bitflip;

namespace {

std::vector<double> pareto(double theta, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = std::pow(rng.uniform(), -1.0 / theta);
  return x;
}

ReturnOutcome returned_at(std::int64_t tau) { return ReturnOutcome{tau, 1'000'000, 0, 1}; }

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("return stats on a constant sample") {
  std::vector<ReturnOutcome> s(200, returned_at(2));
  const std::vector<double> r{0.25, 0.5};
  const auto out = return_stats(s, r);
  CHECK(out.n_samples == 200);
  CHECK(out.censored_fraction == 0.0);
  CHECK(*out.mean == 2.0);
  CHECK_FALSE(out.mean_unstable);
  REQUIRE(out.fractional_moments.size() == 2);
  CHECK(out.fractional_moments[0].estimate == doctest::Approx(std::pow(2.0, 0.25)));
  CHECK(out.fractional_moments[1].estimate == doctest::Approx(std::sqrt(2.0)));
  CHECK(out.fractional_moments[1].relative_change == doctest::Approx(0.0));
  CHECK_FALSE(out.tail_index.has_value());
}

TEST_CASE("return stats bookkeeping") {
  std::vector<ReturnOutcome> s(100, returned_at(4));
  for (std::size_t i = 0; i < 10; ++i) s[i] = ReturnOutcome{std::nullopt, 50, 0, 3};
  for (std::size_t i = 10; i < 20; ++i) s[i] = returned_at(40);
  const std::vector<double> r{0.5};
  const auto out = return_stats(s, r);
  CHECK(out.censored_fraction == doctest::Approx(0.1));
  // 10 x 40 + 80 x 4 over 90 uncensored.
  CHECK(*out.mean == doctest::Approx(720.0 / 90.0));
  CHECK_FALSE(out.subsample_mean.has_value());  // the first tenth is all censored
  CHECK_FALSE(out.notes.empty());
  CHECK_THROWS_AS(return_stats(std::span(s).first(99), r), std::domain_error);
  CHECK_THROWS_AS(return_stats(s, std::vector<double>{1.0}), std::domain_error);
}

TEST_CASE("Hill estimator on synthetic Pareto") {
  const auto x = pareto(0.5, 100'000, 1);
  const auto t = tail_index(x, 0.1);
  CHECK(t.theta >= 0.45);
  CHECK(t.theta <= 0.55);
  CHECK(t.ci_low < 0.5);
  CHECK(t.ci_high > 0.5);
  CHECK(t.k == 10'000);
  CHECK(t.heavy);
  CHECK(t.regression_theta == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("Hill CI covers the true index in at least 90 of 100 repetitions") {
  int covered = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const auto t = tail_index(pareto(0.5, 10'000, 1000 + rep), 0.1);
    covered += (t.ci_low <= 0.5 && 0.5 <= t.ci_high) ? 1 : 0;
  }
  CHECK(covered >= 90);
}

TEST_CASE("exponential tails are flagged light") {
  RngStream rng(5);
  std::vector<double> x(100'000);
  for (auto& v : x) v = rng.exponential(1.0);
  const auto t = tail_index(x, 0.1);
  CHECK(t.theta > 3.0);
  CHECK_FALSE(t.heavy);
}

TEST_CASE("censored Hill keeps the index") {
  auto x = pareto(0.5, 100'000, 2);
  std::vector<bool> censored(x.size(), false);
  const double cap = 1e6;  // P(X > cap) = 1e-3
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > cap) {
      x[i] = cap;
      censored[i] = true;
    }
  }
  const auto t = tail_index(x, censored, 0.1);
  CHECK(t.theta == doctest::Approx(0.5).epsilon(0.1));
  CHECK(t.exceedances < t.k);
}

TEST_CASE("tail index preconditions") {
  const auto x = pareto(0.5, 9'999, 3);
  CHECK_THROWS_AS(tail_index(x, 0.1), std::domain_error);
  const auto y = pareto(0.5, 20'000, 3);
  CHECK_THROWS_AS(tail_index(y, 0.3), std::domain_error);
  CHECK_THROWS_AS(tail_index(y, 0.0), std::domain_error);
  CHECK_THROWS_AS(tail_index(y, std::vector<bool>(3, false), 0.1), std::invalid_argument);
}

TEST_CASE("conditional moment growth") {
  const auto d = BitDistribution::geometric(0.4);
  const std::vector<BitIndex> grid{2, 3, 4, 5, 6};
  const auto fit = conditional_moment_growth(d, 0.1, grid, {1000, 100'000, 12, 0});
  CHECK(fit.bound == doctest::Approx(std::log(1.25)));
  CHECK(fit.slope <= fit.bound + 0.2);
  REQUIRE(fit.points.size() == 5);
  for (const auto& pt : fit.points) CHECK(pt.moment > 1.0);

  SUBCASE("m = 0 is the unconditional moment") {
    const std::vector<BitIndex> with_ground{0, 1, 2};
    const auto g = conditional_moment_growth(d, 0.1, with_ground, {500, 10'000, 12, 0});
    ReturnExperiment exp{Model::BF, 10'000, 0, 0};
    const auto runs = simulate_returns(d, exp, derive_seed(12, StreamTag::kSteps, 0), 500);
    double sum = 0.0;
    for (const auto& r : runs) sum += std::pow(static_cast<double>(r.value_or_horizon()), 0.1);
    CHECK(g.points[0].moment == doctest::Approx(sum / 500.0).epsilon(1e-12));
  }

  CHECK_THROWS_AS(conditional_moment_growth(BitDistribution::geometric(0.5), 0.1, grid, {}), std::domain_error);
  CHECK_THROWS_AS(conditional_moment_growth(d, 0.3, grid, {}), std::domain_error);  // r_lower(0.4) = 0.243
  CHECK_THROWS_AS(conditional_moment_growth(d, 0.1, std::vector<BitIndex>{2, 3}, {}), std::domain_error);
}

TEST_CASE("clt check on a small instance") {
  const auto d = BitDistribution::geometric(0.3);
  const auto c = clt_check(d, Model::DB, 1e3, {4000, 8, SnapshotMethod::PerBit, 0});
  CHECK(c.summary.n_samples == 4000);
  CHECK(std::abs(c.standardized_mean) < 0.1);
  CHECK(c.standardized_variance == doctest::Approx(1.0).epsilon(0.1));
  CHECK(c.summary.ks_statistic.has_value());
  const auto again = clt_check(d, Model::DB, 1e3, {4000, 8, SnapshotMethod::PerBit, 3});
  CHECK(*again.summary.ks_statistic == *c.summary.ks_statistic);
  CHECK(again.ks_continuity_corrected == c.ks_continuity_corrected);
  CHECK_THROWS_AS(clt_check(d, Model::BF, 1e3, {999, 8, SnapshotMethod::PerBit, 0}), std::domain_error);
  CHECK_THROWS_AS(clt_check(BitDistribution::table({1.0}), Model::BF, 1e-9, {1000, 8, SnapshotMethod::PerBit, 0}),
                  std::domain_error);
}

TEST_CASE("raising the horizon never loses an uncensored run") {
  const auto d = BitDistribution::geometric(0.3);
  const auto short_runs = simulate_returns(d, {Model::BF, 1'000, 0, 0}, 70, 2000);
  const auto long_runs = simulate_returns(d, {Model::BF, 100'000, 0, 0}, 70, 2000);
  for (std::size_t i = 0; i < short_runs.size(); ++i) {
    if (short_runs[i].tau) REQUIRE(long_runs[i].tau == short_runs[i].tau);
  }
}

}  // TEST_SUITE
