#pragma once

// The point process of normalized pair contributions, its Poisson intensity,
// compensated truncated sums, and the Poisson truncation limit.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include "rwu/csv.hpp"
#include "rwu/errors.hpp"
#include "rwu/kernel.hpp"
#include "rwu/stable.hpp"
#include "rwu/ustat.hpp"
#include "rwu/walk.hpp"

namespace rwu {

struct WeightedPointSet {
  std::vector<double> points;  // a_n^-1 zeta(x,y) h(xi_x, xi_y), ordered pairs x != y
  double a_n = 1.0;
  double G_plus = 0.0;
  double G_minus = 0.0;
};

namespace detail {

inline double zeta_of(const std::vector<std::vector<std::int64_t>>& vec, std::size_t x, std::size_t y,
                      const ThetaCombination& combo, GMode mode) {
  const std::size_t m = combo.m();
  double z = 0.0;
  if (mode == GMode::Levels) {
    for (std::size_t i = 0; i < m; ++i)
      z += combo.thetas[i] * static_cast<double>(vec[x][i]) * static_cast<double>(vec[y][i]);
    return z;
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      z += combo.thetas[std::max(i, j)] * static_cast<double>(vec[x][i]) * static_cast<double>(vec[y][j]);
  return z;
}

}  // namespace detail

// All ordered pairs of visited sites; zeta follows the regime's mode.
inline WeightedPointSet build_point_set(const OccupationField& field, const SceneryField& scenery,
                                        const KernelSpec& k, const ThetaCombination& combo, double a_n) {
  validate(k);
  validate(combo);
  const GMode mode = mode_for(field.model);
  WeightedPointSet ps;
  ps.a_n = a_n;
  const GPair g = g_statistic(field, combo, a_n, k.beta, mode);
  ps.G_plus = g.plus;
  ps.G_minus = g.minus;

  std::vector<const Checkpoint*> cps;
  for (double t : combo.time_grid) cps.push_back(&checkpoint_at(field, t));
  std::vector<std::vector<std::int64_t>> vec;
  std::vector<ScenePoint> xi;
  for (std::size_t j = 0; j < field.sites.size(); ++j) {
    std::vector<std::int64_t> v(cps.size());
    std::int64_t prev = 0;
    bool any = false;
    for (std::size_t i = 0; i < cps.size(); ++i) {
      const std::int64_t c = cps[i]->counts[j];
      v[i] = mode == GMode::Increments ? c - prev : c;
      prev = c;
      any = any || c != 0;
    }
    if (!any) continue;
    vec.push_back(std::move(v));
    xi.push_back(scenery.value(field.sites[j]));
  }
  const std::size_t r = vec.size();
  ps.points.reserve(r * (r > 0 ? r - 1 : 0));
  for (std::size_t x = 0; x < r; ++x)
    for (std::size_t y = 0; y < r; ++y) {
      if (x == y) continue;
      const double v = detail::zeta_of(vec, x, y, combo, mode) * eval_kernel(k, xi[x], xi[y]) / a_n;
      if (!std::isfinite(v)) throw NumericError("point set: non-finite point");
      ps.points.push_back(v);
    }
  return ps;
}

struct IntensitySpec {
  double beta = 1.0;
  double c0 = 0.0, c1 = 0.0;
  double G_plus = 0.0, G_minus = 0.0;
};

// [lo, hi) with 0 < lo on the right, (lo, hi] with hi < 0 on the left.
struct Interval {
  double lo = 1.0;
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return lo > 0.0 ? (v >= lo && v < hi) : (v > lo && v <= hi); }
};

inline double expected_count(const IntensitySpec& s, const Interval& iv) {
  detail::require(s.beta > 0.0 && s.beta < 2.0, "expected_count: beta must lie in (0,2)");
  detail::require(iv.lo <= iv.hi, "expected_count: interval bounds out of order");
  const bool right = iv.lo > 0.0;
  detail::require(right || (iv.hi < 0.0), "expected_count: interval must stay away from 0 on one side");
  const double d = right ? iv.lo : -iv.hi;
  const double d2 = right ? iv.hi : -iv.lo;
  if (d == d2) return 0.0;
  const double span = std::pow(d, -s.beta) - (std::isinf(d2) ? 0.0 : std::pow(d2, -s.beta));
  const double side = (s.c0 + s.c1) * s.G_plus + (right ? 1.0 : -1.0) * (s.c0 - s.c1) * s.G_minus;
  return span * side / 2.0;
}

struct IntensityRow {
  Interval interval;
  double empirical_mean = 0.0;
  double eta = 0.0;
  double ci_halfwidth = 0.0;  // one standard error of the mean
  double void_emp = 0.0;
  double void_theory = 0.0;   // exp(-eta)
  double void_ci = 0.0;       // binomial standard error at void_theory
  double void_paired = 0.0;   // exp(-eta / 2): void probability when points come in equal pairs

  bool mean_ok(double k = 3.0) const { return std::abs(empirical_mean - eta) <= k * ci_halfwidth; }
  bool void_ok(double k = 3.0) const { return std::abs(void_emp - void_theory) <= k * void_ci; }
};

inline std::int64_t count_in(std::span<const double> pts, const Interval& iv) {
  std::int64_t c = 0;
  for (double v : pts) c += iv.contains(v) ? 1 : 0;
  return c;
}

// Per-interval replicate mean count vs eta, and void frequency vs exp(-eta).
// With per_set_G the intensity of each replicate uses that set's own G^+-
// (annealed runs) and eta, exp(-eta) are averaged over replicates; otherwise
// G comes from `spec`.
inline std::vector<IntensityRow> intensity_check(std::span<const WeightedPointSet> sets, const IntensitySpec& spec,
                                                 std::span<const Interval> intervals, bool per_set_G = false) {
  detail::require(sets.size() >= 100, "intensity_check: needs at least 100 replicates");
  std::vector<IntensityRow> rows;
  const double R = static_cast<double>(sets.size());
  for (const auto& iv : intervals) {
    IntensityRow row;
    row.interval = iv;
    double s1 = 0.0, s2 = 0.0, voids = 0.0;
    for (const auto& ps : sets) {
      const auto c = static_cast<double>(count_in(ps.points, iv));
      s1 += c;
      s2 += c * c;
      voids += c == 0.0 ? 1.0 : 0.0;
      if (!per_set_G) continue;
      IntensitySpec local = spec;
      local.G_plus = ps.G_plus;
      local.G_minus = ps.G_minus;
      const double eta = expected_count(local, iv);
      row.eta += eta / R;
      row.void_theory += std::exp(-eta) / R;
      row.void_paired += std::exp(-eta / 2.0) / R;
    }
    if (!per_set_G) {
      row.eta = expected_count(spec, iv);
      row.void_theory = std::exp(-row.eta);
      row.void_paired = std::exp(-row.eta / 2.0);
    }
    row.empirical_mean = s1 / R;
    const double var = std::max(0.0, (s2 - R * row.empirical_mean * row.empirical_mean) / (R - 1.0));
    row.ci_halfwidth = std::sqrt(var / R);
    row.void_emp = voids / R;
    row.void_ci = std::sqrt(row.void_theory * (1.0 - row.void_theory) / R);
    rows.push_back(row);
  }
  return rows;
}

// CSV: interval_lo, interval_hi, empirical_mean, eta, ci_halfwidth, void_emp, void_theory.
inline void write_csv(std::ostream& os, std::span<const IntensityRow> rows) {
  os << "interval_lo,interval_hi,empirical_mean,eta,ci_halfwidth,void_emp,void_theory\n";
  auto bound = [](double v) { return std::isinf(v) ? std::string(v > 0 ? "inf" : "-inf") : fmt_num(v, "bound"); };
  for (const auto& r : rows)
    os << bound(r.interval.lo) << ',' << bound(r.interval.hi) << ',' << fmt_num(r.empirical_mean, "mean") << ','
       << fmt_num(r.eta, "eta") << ',' << fmt_num(r.ci_halfwidth, "ci") << ',' << fmt_num(r.void_emp, "void") << ','
       << fmt_num(r.void_theory, "void theory") << '\n';
}

// Sum of the points with |point| <= delta, plus for beta > 1 the drift
// (c0 - c1) beta delta^(1-beta) / (beta - 1) G^-.
inline double compensated_truncated_sum(std::span<const double> points, double delta, double beta,
                                        const TailConstants& tail, double G_minus) {
  detail::require(delta > 0.0, "compensated_truncated_sum: delta must be > 0");
  detail::Kahan s;
  for (double v : points)
    if (std::abs(v) <= delta) s.add(v);
  if (beta > 1.0) s.add((tail.c0 - tail.c1) * beta * std::pow(delta, 1.0 - beta) / (beta - 1.0) * G_minus);
  return s.sum;
}

// Integral of sin(x) / x^2 over (delta, inf). With x = delta + u,
// sin(delta + u) = sin(delta) cos(u) + cos(delta) sin(u), leaving two
// Fourier integrals of the smooth weight (delta + u)^-2.
inline double sin_over_x2_tail(double delta) {
  detail::require(delta > 0.0, "sin_over_x2_tail: delta must be > 0");
  static std::mutex mu;
  static std::map<double, double> cache;
  {
    std::lock_guard lock(mu);
    if (const auto it = cache.find(delta); it != cache.end()) return it->second;
  }
  auto w = [delta](double u) { return 1.0 / ((delta + u) * (delta + u)); };
  boost::math::quadrature::ooura_fourier_sin<double> sin_int;
  boost::math::quadrature::ooura_fourier_cos<double> cos_int;
  const double s = sin_int.integrate(w, 1.0).first;
  const double c = cos_int.integrate(w, 1.0).first;
  const double v = std::cos(delta) * s + std::sin(delta) * c;
  std::lock_guard lock(mu);
  cache.emplace(delta, v);
  return v;
}

struct TailCountRow {
  double z = 0.0;
  double mean = 0.0;
  double expected = 0.0;  // a z^-beta
  double std_error = 0.0;

  bool ok(double k = 3.0) const { return std::abs(mean - expected) <= k * std_error; }
};

struct TruncationRow {
  double delta = 0.0;
  double drift = 0.0;
  double distance = 0.0;
  std::vector<TailCountRow> tail_counts;
};

struct PoissonTruncationReport {
  double a = 0.0, b = 0.0, beta = 1.0;
  StableLawParams target;
  std::vector<TruncationRow> rows;

  double final_distance() const { return rows.empty() ? 0.0 : rows.back().distance; }
  // Largest increase of the distance along the delta sequence.
  double worst_increase() const {
    double w = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) w = std::max(w, rows[i].distance - rows[i - 1].distance);
    return w;
  }
};

// Drift removed at truncation level delta.
inline double poisson_drift(double a, double b, double beta, double delta) {
  if (beta < 1.0) return 0.0;
  if (beta == 1.0) return a == b ? 0.0 : (a - b) * sin_over_x2_tail(delta);
  return (a - b) * beta * std::pow(delta, 1.0 - beta) / (beta - 1.0);
}

// Poisson process with density beta |z|^(-beta-1) (a 1{z>0} + b 1{z<0}),
// sampled by inversion on {|z| > delta_min}. The sums for larger delta are
// thresholded from the same realization, so the whole sequence is coupled.
template <class Engine>
PoissonTruncationReport poisson_truncation_limit(double a, double b, double beta, std::span<const double> deltas,
                                                 std::int64_t samples, std::span<const double> z_grid, Engine& rng) {
  detail::require(a >= 0.0 && b >= 0.0 && a + b > 0.0, "poisson_truncation_limit: a, b >= 0 with a + b > 0");
  detail::require(beta > 0.0 && beta < 2.0, "poisson_truncation_limit: beta must lie in (0,2)");
  detail::require(!deltas.empty() && samples >= 1, "poisson_truncation_limit: empty delta sequence or sample");
  for (double d : deltas) detail::require(d > 0.0, "poisson_truncation_limit: deltas must be > 0");
  PoissonTruncationReport rep;
  rep.a = a;
  rep.b = b;
  rep.beta = beta;
  rep.target = {beta, a + b, a - b};
  validate(rep.target);

  const double dmin = *std::min_element(deltas.begin(), deltas.end());
  const std::size_t D = deltas.size();
  std::vector<std::vector<double>> sums(D, std::vector<double>(static_cast<std::size_t>(samples)));
  // Positive-side counts above z in {delta, 2 delta, 10 delta}, per delta.
  static constexpr double kMultiples[3] = {1.0, 2.0, 10.0};
  std::vector<std::array<double, 3>> c1(D, {0, 0, 0}), c2(D, {0, 0, 0});

  std::poisson_distribution<std::int64_t> n_pos(a * std::pow(dmin, -beta));
  std::poisson_distribution<std::int64_t> n_neg(b * std::pow(dmin, -beta));
  std::vector<double> pts;
  for (std::int64_t s = 0; s < samples; ++s) {
    pts.clear();
    const std::int64_t np = a > 0.0 ? n_pos(rng) : 0;
    const std::int64_t nn = b > 0.0 ? n_neg(rng) : 0;
    for (std::int64_t i = 0; i < np; ++i) pts.push_back(dmin * std::pow(uniform_open(rng), -1.0 / beta));
    for (std::int64_t i = 0; i < nn; ++i) pts.push_back(-dmin * std::pow(uniform_open(rng), -1.0 / beta));
    for (std::size_t k = 0; k < D; ++k) {
      detail::Kahan acc;
      std::array<std::int64_t, 3> cnt{0, 0, 0};
      for (double v : pts) {
        if (std::abs(v) > deltas[k]) acc.add(v);
        for (int m = 0; m < 3; ++m) cnt[m] += v > kMultiples[m] * deltas[k] ? 1 : 0;
      }
      sums[k][static_cast<std::size_t>(s)] = acc.sum;
      for (int m = 0; m < 3; ++m) {
        c1[k][m] += static_cast<double>(cnt[m]);
        c2[k][m] += static_cast<double>(cnt[m]) * static_cast<double>(cnt[m]);
      }
    }
  }
  const double N = static_cast<double>(samples);
  for (std::size_t k = 0; k < D; ++k) {
    TruncationRow row;
    row.delta = deltas[k];
    row.drift = poisson_drift(a, b, beta, deltas[k]);
    for (double& v : sums[k]) v -= row.drift;
    row.distance = ecf_distance(sums[k], z_grid, rep.target);
    for (int m = 0; m < 3; ++m) {
      const double z = kMultiples[m] * deltas[k];
      const double mean = c1[k][m] / N;
      const double var = samples > 1 ? std::max(0.0, (c2[k][m] - N * mean * mean) / (N - 1.0)) : 0.0;
      row.tail_counts.push_back({z, mean, a * std::pow(z, -beta), std::sqrt(var / N)});
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// CSV: delta, drift, ecf_distance.
inline void write_csv(std::ostream& os, const PoissonTruncationReport& r) {
  os << "delta,drift,ecf_distance\n";
  for (const auto& row : r.rows)
    os << fmt_num(row.delta, "delta") << ',' << fmt_num(row.drift, "drift") << ',' << fmt_num(row.distance, "distance")
       << '\n';
}

}  // namespace rwu
