#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "rwu/diagnostics.hpp"
#include "rwu/kernel.hpp"
#include "rwu/random.hpp"
#include "rwu/ustat.hpp"
#include "rwu/walk.hpp"

using namespace rwu;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sin(d)/d - Ci(d) with the power series of Ci.
double sin_over_x2_series(double d) {
  long double ci = 0.5772156649015328606L + std::log(static_cast<long double>(d));
  long double term = 1.0L;
  for (int k = 1; k < 60; ++k) {
    term *= -static_cast<long double>(d) * d / ((2.0L * k - 1.0L) * (2.0L * k));
    ci += term / (2.0L * k);
  }
  return static_cast<double>(std::sin(static_cast<long double>(d)) / d - ci);
}

WeightedPointSet deterministic_set(std::int64_t n, const KernelSpec& k, std::uint64_t seed) {
  Rng rng(1);
  const auto f = simulate_occupation(Deterministic{}, n, std::vector<double>{1.0}, rng);
  const auto s = sample_scenery(f.sites, k, seed);
  return build_point_set(f, s, k, ThetaCombination{{1.0}, {1.0}}, normalization_a_n(Regime::Transient, n, k.beta));
}

}  // namespace

TEST(ExpectedCount, Examples) {
  const IntensitySpec s{0.7, 2.0, 0.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(expected_count(s, {1.0, kInf}), 2.0);
  EXPECT_DOUBLE_EQ(expected_count(s, {-kInf, -1.0}), 0.0);
  EXPECT_EQ(expected_count(s, {2.0, 2.0}), 0.0);
  EXPECT_THROW(expected_count(s, {-1.0, 1.0}), ParameterError);
  EXPECT_THROW(expected_count(s, {2.0, 1.0}), ParameterError);
}

TEST(ExpectedCount, AdditiveAndTotal) {
  const IntensitySpec s{1.3, 1.7, 0.4, 0.8, -0.3};
  for (double d : {0.1, 0.5, 2.0}) {
    const double d1 = 1.7 * d, d2 = 5.1 * d;
    EXPECT_NEAR(expected_count(s, {d, d1}) + expected_count(s, {d1, d2}), expected_count(s, {d, d2}), 1e-14 * std::pow(d, -1.3));
    EXPECT_NEAR(expected_count(s, {-d2, -d1}) + expected_count(s, {-d1, -d}), expected_count(s, {-d2, -d}),
                1e-14 * std::pow(d, -1.3));
    EXPECT_NEAR(expected_count(s, {d, kInf}) + expected_count(s, {-kInf, -d}), std::pow(d, -1.3) * 2.1 * 0.8,
                1e-14 * std::pow(d, -1.3));
  }
}

TEST(PointSet, SmallCases) {
  const auto k = power_kernel(1, 0.5);
  const std::vector<SiteKey> one{4, 4, 4};
  const auto f1 = occupation_from_path(SimpleWalk{1}, 3, one, std::vector<double>{1.0});
  EXPECT_TRUE(build_point_set(f1, sample_scenery(f1.sites, k, 1), k, {{1.0}, {1.0}}, 1.0).points.empty());
  const std::vector<SiteKey> two{4, 5, 4};
  const auto f2 = occupation_from_path(SimpleWalk{1}, 3, two, std::vector<double>{1.0});
  const auto s2 = sample_scenery(f2.sites, k, 1);
  const auto ps = build_point_set(f2, s2, k, {{1.0}, {1.0}}, 10.0);
  ASSERT_EQ(ps.points.size(), 2u);
  EXPECT_EQ(ps.points[0], ps.points[1]);
  EXPECT_DOUBLE_EQ(ps.points[0], 2.0 * eval_kernel(k, s2.value(4), s2.value(5)) / 10.0);
}

TEST(PointSet, OrderedPairsSymmetric) {
  const auto k = signed_power_kernel(1, 1.3);
  Rng rng(2);
  const std::vector<double> grid{0.5, 1.0};
  const auto f = simulate_occupation(SimpleWalk{3}, 300, grid, rng);
  const auto ps = build_point_set(f, sample_scenery(f.sites, k, 3), k, {{1.0, -0.5}, grid}, 50.0);
  const std::size_t r = f.sites.size();
  ASSERT_EQ(ps.points.size(), r * (r - 1));
  auto at = [&](std::size_t x, std::size_t y) { return ps.points[x * (r - 1) + (y < x ? y : y - 1)]; };
  for (std::size_t x = 0; x < r; ++x)
    for (std::size_t y = 0; y < r; ++y)
      if (x != y) EXPECT_EQ(at(x, y), at(y, x));
  const auto g = g_statistic(f, {{1.0, -0.5}, grid}, 50.0, 1.3, GMode::Increments);
  EXPECT_EQ(ps.G_plus, g.plus);
  EXPECT_EQ(ps.G_minus, g.minus);
}

TEST(PointSet, DeterministicTailCounts) {
  const auto k = power_kernel(1, 0.5);
  std::vector<WeightedPointSet> sets;
  for (int r = 0; r < 8000; ++r) sets.push_back(deterministic_set(50, k, 100 + r));
  EXPECT_NEAR(sets[0].G_plus, 1.0, 1e-12);
  const IntensitySpec spec{0.5, 2.0, 0.0, 1.0, 1.0};
  const std::vector<Interval> ivs{{1.0, kInf}, {4.0, kInf}, {16.0, kInf}, {1e9, kInf}};
  const auto rows = intensity_check(sets, spec, ivs);
  ASSERT_EQ(rows.size(), 4u);
  // n (n - 1) ordered pairs against n^2 in the normalization.
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(rows[i].empirical_mean, rows[i].eta * 49.0 / 50.0, 3.0 * rows[i].ci_halfwidth) << i;
  // Decay like d^-beta: a factor 2 per factor 4 in d.
  EXPECT_NEAR(rows[0].empirical_mean / rows[1].empirical_mean, 2.0, 0.3);
  EXPECT_NEAR(rows[1].empirical_mean / rows[2].empirical_mean, 2.0, 0.5);
  EXPECT_EQ(rows[3].empirical_mean, 0.0);
  EXPECT_EQ(rows[3].void_emp, 1.0);
  EXPECT_NEAR(rows[3].void_theory, 1.0, 1e-4);
  // Points come in equal pairs, so voids follow exp(-eta / 2).
  EXPECT_NEAR(rows[0].void_emp, rows[0].void_paired, 3.0 * std::sqrt(rows[0].void_paired / 2000.0) + 0.01);
  std::vector<WeightedPointSet> few(sets.begin(), sets.begin() + 50);
  EXPECT_THROW(intensity_check(few, spec, ivs), ParameterError);
}

TEST(PointSet, AnnealedAveragesEta) {
  std::vector<WeightedPointSet> sets(100);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    sets[i].G_plus = i % 2 ? 1.0 : 3.0;
    sets[i].G_minus = sets[i].G_plus;
  }
  const IntensitySpec spec{1.0, 1.0, 0.0, 0.0, 0.0};
  const std::vector<Interval> ivs{{1.0, kInf}};
  const auto rows = intensity_check(sets, spec, ivs, true);
  EXPECT_NEAR(rows[0].eta, 2.0, 1e-14);
  EXPECT_NEAR(rows[0].void_theory, 0.5 * (std::exp(-1.0) + std::exp(-3.0)), 1e-14);
  EXPECT_EQ(rows[0].void_emp, 1.0);
  std::ostringstream os;
  write_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "interval_lo,interval_hi,empirical_mean,eta,ci_halfwidth,void_emp,void_theory");
  EXPECT_EQ(os.str().substr(os.str().find('\n') + 1, 6), "1,inf,");
}

TEST(CompensatedSum, Examples) {
  const std::vector<double> none;
  EXPECT_EQ(compensated_truncated_sum(none, 0.1, 0.5, {2.0, 0.0, 0.5}, 1.0), 0.0);
  const std::vector<double> big{5.0, -3.0};
  EXPECT_EQ(compensated_truncated_sum(big, 0.1, 0.5, {2.0, 0.0, 0.5}, 1.0), 0.0);
  // 2 * (1.5 / 0.5) * 0.01^(-0.5) = 60.
  EXPECT_NEAR(compensated_truncated_sum(none, 0.01, 1.5, {2.0, 0.0, 1.5}, 1.0), 60.0, 1e-12);
  const std::vector<double> pts{0.005, -0.002, 0.5};
  EXPECT_NEAR(compensated_truncated_sum(pts, 0.01, 0.7, {2.0, 0.0, 0.7}, 1.0), 0.003, 1e-15);
  EXPECT_THROW(compensated_truncated_sum(pts, 0.0, 0.7, {2.0, 0.0, 0.7}, 1.0), ParameterError);
}

TEST(CompensatedSum, SecondMomentShrinks) {
  const auto k = signed_power_kernel(1, 1.5);
  const auto tail = tail_constants_of(k);
  const std::vector<double> deltas{1.0, 0.3, 0.1, 0.03};
  std::vector<double> m2(deltas.size(), 0.0);
  for (int r = 0; r < 500; ++r) {
    const auto ps = deterministic_set(50, k, 900 + r);
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      const double t = compensated_truncated_sum(ps.points, deltas[i], 1.5, tail, ps.G_minus);
      m2[i] += t * t;
    }
  }
  for (std::size_t i = 1; i < deltas.size(); ++i) EXPECT_LT(m2[i], m2[i - 1]) << deltas[i];
}

TEST(SinTail, MatchesSeries) {
  for (double d : {1e-3, 0.01, 0.3, 1.0, 2.5, 5.0}) EXPECT_NEAR(sin_over_x2_tail(d), sin_over_x2_series(d), 1e-9) << d;
  EXPECT_EQ(sin_over_x2_tail(0.3), sin_over_x2_tail(0.3));
  EXPECT_THROW(sin_over_x2_tail(0.0), ParameterError);
}

TEST(PoissonDrift, Cases) {
  EXPECT_EQ(poisson_drift(1.0, 0.0, 0.5, 0.01), 0.0);
  EXPECT_EQ(poisson_drift(1.0, 1.0, 1.0, 0.01), 0.0);
  EXPECT_NEAR(poisson_drift(1.0, 0.0, 1.0, 0.01), sin_over_x2_series(0.01), 1e-9);
  EXPECT_NEAR(poisson_drift(2.0, 0.5, 1.5, 0.04), 1.5 * 3.0 * 5.0, 1e-12);
}

TEST(PoissonLimit, SymmetricIsReal) {
  const std::vector<double> deltas{0.1, 0.01};
  for (double beta : {0.5, 1.0, 1.5}) {
    Rng rng = make_stream(60, 0, Role::poisson);
    const auto rep = poisson_truncation_limit(0.7, 0.7, beta, deltas, 20000, standard_z_grid(), rng);
    ASSERT_EQ(rep.rows.size(), 2u);
    EXPECT_EQ(rep.rows[1].drift, 0.0);
    EXPECT_EQ(rep.target.B, 0.0);
    EXPECT_LE(rep.final_distance(), 3.0 / std::sqrt(20000.0) + 0.01) << beta;
  }
}

TEST(PoissonLimit, OneSidedSmallDelta) {
  const std::vector<double> deltas{1e-3};
  Rng rng = make_stream(61, 0, Role::poisson);
  const auto rep = poisson_truncation_limit(1.0, 0.0, 0.5, deltas, 100000, standard_z_grid(), rng);
  EXPECT_LE(rep.final_distance(), 3.0 / std::sqrt(100000.0) + 0.01);
  for (const auto& t : rep.rows[0].tail_counts) EXPECT_TRUE(t.ok()) << t.z << ' ' << t.mean << ' ' << t.expected;
}

TEST(PoissonLimit, DistanceDecreasesAlongDeltas) {
  const std::vector<double> deltas{0.3, 0.1, 0.03, 0.01};
  Rng rng = make_stream(62, 0, Role::poisson);
  const auto rep = poisson_truncation_limit(1.0, 0.3, 1.4, deltas, 50000, standard_z_grid(), rng);
  EXPECT_LE(rep.worst_increase(), 2.0 / std::sqrt(50000.0));
  EXPECT_LT(rep.final_distance(), rep.rows[0].distance);
  for (const auto& row : rep.rows)
    for (const auto& t : row.tail_counts) EXPECT_TRUE(t.ok()) << row.delta << ' ' << t.z;
  std::ostringstream os;
  write_csv(os, rep);
  EXPECT_EQ(os.str().substr(0, 24), "delta,drift,ecf_distance");
}

TEST(PoissonLimit, RejectsBadInput) {
  Rng rng(1);
  const std::vector<double> ok{0.1}, bad{0.0};
  EXPECT_THROW(poisson_truncation_limit(0.0, 0.0, 0.5, ok, 10, standard_z_grid(), rng), ParameterError);
  EXPECT_THROW(poisson_truncation_limit(1.0, 0.0, 0.5, bad, 10, standard_z_grid(), rng), ParameterError);
}
