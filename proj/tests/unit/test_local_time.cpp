#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "rwu/local_time.hpp"
#include "rwu/random.hpp"
#include "rwu/sheet.hpp"
#include "rwu/ustat.hpp"
#include "rwu/walk.hpp"

using namespace rwu;

namespace {

OccupationField walk1(std::int64_t n, std::vector<double> grid, std::uint64_t seed, WalkModel m = SimpleWalk{1}) {
  Rng rng = make_stream(seed, 0, Role::walk);
  return simulate_occupation(m, n, grid, rng);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST(LocalTime, OccupationIdentity) {
  const std::vector<double> grid{0.0, 0.37, 1.0, 1.5};
  for (const WalkModel& m : {WalkModel{SimpleWalk{1}}, WalkModel{HeavyStepWalk{1.3}}}) {
    const double alpha = walk_alpha(m);
    const auto f = walk1(999, grid, 3, m);
    for (double t : grid) {
      const auto l = estimate_local_time(f, alpha, t);
      const double want = double(steps_at(999, t)) / 999.0;
      EXPECT_NEAR(l.mass(), want, 1e-12);
      EXPECT_NEAR(f_functional(l, kInf) - f_functional(l, -kInf), want, 1e-12);
      for (double v : l.values) EXPECT_GT(v, 0.0);
      for (std::size_t k = 0; k < l.bins.size(); ++k) {
        EXPECT_LE(std::abs(static_cast<double>(l.bins[k]) * l.dx), l.support_radius + 1e-12);
        EXPECT_LE(std::abs(static_cast<double>(l.bins[k] + 1) * l.dx), l.support_radius + 1e-12);
      }
    }
  }
}

TEST(LocalTime, EmptyAtTimeZero) {
  const auto f = walk1(100, {0.0, 1.0}, 4);
  const auto l = estimate_local_time(f, 2.0, 0.0);
  EXPECT_TRUE(l.values.empty());
  EXPECT_EQ(l.mass(), 0.0);
  EXPECT_EQ(f_functional(l, 3.0), 0.0);
  Rng rng(1);
  const auto g = sheet_for(l, TailConstants{1.0, 1.0, 1.2}, rng);
  EXPECT_EQ(limit_functional(l, g), 0.0);
}

TEST(LocalTime, RegimeChecked) {
  Rng rng(2);
  const auto f = simulate_occupation(SimpleWalk{2}, 100, std::vector<double>{1.0}, rng);
  EXPECT_THROW(estimate_local_time(f, 2.0, 1.0), RegimeError);
  const auto d = simulate_occupation(Deterministic{}, 100, std::vector<double>{1.0}, rng);
  EXPECT_THROW(estimate_local_time(d, 2.0, 1.0), RegimeError);
}

TEST(LocalTime, FunctionalMonotone) {
  const auto f = walk1(5000, {1.0}, 5);
  const auto l = estimate_local_time(f, 2.0, 1.0);
  EXPECT_EQ(f_functional(l, 0.0), 0.0);
  double prev = f_functional(l, -kInf);
  for (double b = -4.0; b <= 4.0; b += 0.013) {
    const double v = f_functional(l, b);
    EXPECT_GE(v, prev - 1e-15);
    prev = v;
  }
  EXPECT_LE(prev, f_functional(l, kInf) + 1e-15);
}

TEST(LocalTime, FunctionalHandBuilt) {
  // Path 1, 0, -1, 0: counts {-1: 1, 0: 2, 1: 1} with n = 4, alpha = 2.
  const std::vector<SiteKey> path{1, 0, -1, 0};
  const auto f = occupation_from_path(SimpleWalk{1}, 4, path, std::vector<double>{1.0});
  const auto l = estimate_local_time(f, 2.0, 1.0);
  EXPECT_EQ(l.dx, 0.5);
  EXPECT_EQ(l.values, (std::vector<double>{0.5, 1.0, 0.5}));
  EXPECT_DOUBLE_EQ(f_functional(l, 0.25), 0.25);
  EXPECT_DOUBLE_EQ(f_functional(l, 1.0), 0.75);
  EXPECT_DOUBLE_EQ(f_functional(l, -0.5), -0.25);
  EXPECT_DOUBLE_EQ(f_functional(l, -kInf), -0.25);
  EXPECT_DOUBLE_EQ(power_integral(l, 2.0), 0.5 * (0.25 + 1.0 + 0.25));
  std::ostringstream os;
  write_csv(os, l);
  EXPECT_EQ(os.str(), "bin_center,value\n-0.25,0.5\n0.25,1\n0.75,0.5\n");
}

TEST(LocalTime, MassIncreasesInTime) {
  const std::vector<double> grid{0.25, 0.5, 0.75, 1.0};
  const auto f = walk1(4000, grid, 6);
  double prev = 0.0;
  for (double t : grid) {
    const double m = estimate_local_time(f, 2.0, t).mass();
    EXPECT_GT(m, prev);
    prev = m;
  }
}

TEST(LocalTime, BrownianLocalTimeAtZero) {
  const std::int64_t n = 100000;
  const int reps = 400;
  double s1 = 0.0, s2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_stream(7, static_cast<std::uint64_t>(r), Role::walk);
    const auto f = simulate_occupation(SimpleWalk{1}, n, std::vector<double>{1.0}, rng);
    const auto l = estimate_local_time(f, 2.0, 1.0);
    double v = 0.0;
    for (std::size_t k = 0; k < l.bins.size(); ++k)
      if (l.bins[k] == 0) v = l.values[k];
    s1 += v;
    s2 += v * v;
  }
  const double mean = s1 / reps, se = std::sqrt((s2 / reps - mean * mean) / reps);
  EXPECT_NEAR(mean, std::sqrt(2.0 / std::numbers::pi), 3.0 * se + 0.01);
}

TEST(LocalTime, TensorFactorization) {
  const auto f = walk1(400, {1.0}, 8);
  const auto l = estimate_local_time(f, 2.0, 1.0);
  StepFunction2D h;
  for (std::size_t a = 0; a < l.bins.size(); ++a)
    for (std::size_t b = 0; b < l.bins.size(); ++b) {
      const double x0 = double(l.bins[a]) * l.dx, x1 = double(l.bins[a] + 1) * l.dx;
      const double y0 = double(l.bins[b]) * l.dx, y1 = double(l.bins[b] + 1) * l.dx;
      h.pieces.push_back({{x0, x1, y0, y1}, l.values[a] * l.values[b]});
    }
  for (const TailConstants& tail : {TailConstants{1.5, 0.5, 0.7}, TailConstants{1.0, 1.0, 1.0},
                                    TailConstants{0.3, 1.2, 1.6}}) {
    const auto step = limit_cf_of_integral(h, tail);
    const auto law = limit_law(l, tail);
    EXPECT_NEAR(step.A, law.A, 1e-10 * law.A);
    EXPECT_NEAR(step.B, law.B, 1e-10 * law.A);
    const double m = power_integral(l, tail.beta);
    EXPECT_NEAR(law.A, (tail.c0 + tail.c1) * m * m, 1e-12 * law.A);
  }
}

TEST(LocalTime, SheetIntegralLaw) {
  // Quenched in L: replicate sheets against the factorized law.
  const auto f = walk1(400, {1.0}, 9);
  const auto l = estimate_local_time(f, 2.0, 1.0);
  for (const TailConstants& tail : {TailConstants{1.5, 0.5, 0.7}, TailConstants{1.5, 0.5, 1.3}}) {
    std::vector<double> v;
    for (int r = 0; r < 10000; ++r) {
      Rng rng = make_stream(10, static_cast<std::uint64_t>(r), Role::sheet);
      v.push_back(limit_functional(l, sheet_for(l, tail, rng)));
    }
    EXPECT_LE(ecf(v, standard_z_grid(), limit_law(l, tail)).sup_abs_err, 3.0 / std::sqrt(10000.0) + 0.01)
        << tail.beta;
  }
}

TEST(LocalTime, SheetAlignmentAndRange) {
  const auto f = walk1(400, {1.0}, 11);
  const auto l = estimate_local_time(f, 2.0, 1.0);
  Rng rng(3);
  const TailConstants tail{1.0, 1.0, 0.8};
  EXPECT_THROW(limit_functional(l, simulate_sheet(0.8, tail, 2.0 * l.dx, 100, rng)), AlignmentError);
  EXPECT_THROW(limit_functional(l, simulate_sheet(0.8, tail, l.dx, 1, rng)), RangeError);
  // A larger sheet at the same resolution gives the same value on the shared cells.
  Rng a(4), b(4);
  const auto g = sheet_for(l, tail, a);
  EXPECT_EQ(g.extent, l.extent_in_bins());
  EXPECT_EQ(limit_functional(l, g), limit_functional(l, sheet_for(l, tail, b)));
}

TEST(LocalTime, GStatisticBridge) {
  // Levels mode, m = 1, theta = 1: G_n = (int L^beta)^2 exactly at the estimator level.
  const std::int64_t n = 3000;
  for (const WalkModel& m : {WalkModel{SimpleWalk{1}}, WalkModel{HeavyStepWalk{1.6}}}) {
    for (double beta : {0.7, 1.3}) {
      const auto f = walk1(n, {1.0}, 12, m);
      const auto l = estimate_local_time(f, walk_alpha(m), 1.0);
      const ThetaCombination combo{{1.0}, {1.0}};
      const auto g = g_statistic(f, combo, normalization_a_n(m, n, beta), beta, GMode::Levels);
      const double p = power_integral(l, beta);
      EXPECT_NEAR(g.plus, p * p, 1e-10 * p * p);
      EXPECT_EQ(g.plus, g.minus);
      const std::vector<LocalTimeField> fields{l};
      const auto lim = limit_G(combo, fields, beta);
      EXPECT_NEAR(lim.plus, p * p, 1e-10 * p * p);
    }
  }
}

TEST(LocalTime, GLimitTwoTimes) {
  // Levels mode with two times matches the estimator-level double integral.
  const std::int64_t n = 2000;
  const std::vector<double> grid{0.5, 1.0};
  const auto f = walk1(n, grid, 13);
  const ThetaCombination combo{{1.0, -0.6}, grid};
  const double beta = 1.2;
  const auto g = g_statistic(f, combo, normalization_a_n(SimpleWalk{1}, n, beta), beta, GMode::Levels);
  const std::vector<LocalTimeField> fields{estimate_local_time(f, 2.0, 0.5), estimate_local_time(f, 2.0, 1.0)};
  const auto lim = limit_G(combo, fields, beta);
  EXPECT_NEAR(g.plus, lim.plus, 1e-10 * lim.plus);
  EXPECT_NEAR(g.minus, lim.minus, 1e-10 * lim.plus);
}

TEST(LocalTime, ScalingBetweenNAnd2N) {
  auto ensemble = [](std::int64_t n, std::uint64_t seed) {
    std::vector<double> v;
    for (int r = 0; r < 2000; ++r) {
      Rng rng = make_stream(seed, static_cast<std::uint64_t>(r), Role::walk);
      const auto f = simulate_occupation(SimpleWalk{1}, n, std::vector<double>{1.0}, rng);
      const auto l = estimate_local_time(f, 2.0, 1.0);
      double x = 0.0;
      for (std::size_t k = 0; k < l.bins.size(); ++k)
        if (l.bins[k] == 0 || l.bins[k] == 1) x += 0.5 * l.values[k];  // parity-free
      v.push_back(x);
    }
    return v;
  };
  const auto a = ensemble(5000, 14), b = ensemble(10000, 15);
  double worst = 0.0;
  for (double z : standard_z_grid()) {
    complex ea{}, eb{};
    for (double x : a) ea += std::exp(complex(0.0, z * x));
    for (double x : b) eb += std::exp(complex(0.0, z * x));
    worst = std::max(worst, std::abs(ea / double(a.size()) - eb / double(b.size())));
  }
  EXPECT_LE(worst, 2.0 * (3.0 / std::sqrt(2000.0) + 0.01));
}
