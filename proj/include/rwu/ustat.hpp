#pragma once

// U_n = sum_{x,y} h(xi_x, xi_y) N_n(x) N_n(y) over an occupation field, its
// normalizations a_n, and the statistics G_n^+- with their limits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "rwu/csv.hpp"
#include "rwu/errors.hpp"
#include "rwu/kernel.hpp"
#include "rwu/local_time.hpp"
#include "rwu/stable.hpp"
#include "rwu/walk.hpp"

namespace rwu {

namespace detail {

// Compensated accumulator.
struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double v) {
    const double y = v - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

// Kahan over four interleaved lanes: sum_j w[j] * f(x0, x[j]) for j in [lo, n).
template <class F>
double lane_sum(const double* w, const double* x, std::size_t lo, std::size_t n, double x0, F f) {
  double s[4] = {0, 0, 0, 0}, c[4] = {0, 0, 0, 0};
  std::size_t j = lo;
  for (; j + 4 <= n; j += 4) {
    for (int l = 0; l < 4; ++l) {
      const double y = w[j + l] * f(x0, x[j + l]) - c[l];
      const double t = s[l] + y;
      c[l] = (t - s[l]) - y;
      s[l] = t;
    }
  }
  Kahan tail;
  for (; j < n; ++j) tail.add(w[j] * f(x0, x[j]));
  Kahan all;
  for (int l = 0; l < 4; ++l) all.add(s[l]);
  all.add(-(c[0] + c[1] + c[2] + c[3]));
  all.add(tail.sum);
  return all.sum;
}

// d^(-k/4) for integer k >= 1 by square roots.
inline double quarter_inv_pow(double d, int k) {
  double r = 1.0;
  for (int i = 0; i < k / 4; ++i) r *= d;
  switch (k % 4) {
    case 1: r *= std::sqrt(std::sqrt(d)); break;
    case 2: r *= std::sqrt(d); break;
    case 3: r *= std::sqrt(d) * std::sqrt(std::sqrt(d)); break;
    default: break;
  }
  return 1.0 / r;
}

// 2 sum_{i<j} w_i w_j f(x_i, x_j) over one-dimensional points.
template <class F>
double pair_sum_1d(const std::vector<double>& w, const std::vector<double>& x, F f) {
  Kahan total;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i + 1 < n; ++i) total.add(w[i] * lane_sum(w.data(), x.data(), i + 1, n, x[i], f));
  return 2.0 * total.sum;
}

struct Gathered {
  std::vector<double> weight;  // N(x) times the sign of xi_x
  std::vector<double> coords;  // size() x p
  std::size_t size() const { return weight.size(); }
};

inline Gathered gather(const OccupationField& field, std::span<const std::int64_t> counts,
                       const SceneryField& scenery, const KernelSpec& k) {
  Gathered g;
  const bool signed_kernel = k.kind == KernelKind::SignedPower;
  const auto p = static_cast<std::size_t>(scenery.p);
  if (scenery.p != k.p) throw DataError("scenery dimension does not match the kernel");
  for (std::size_t j = 0; j < field.sites.size(); ++j) {
    if (counts[j] == 0) continue;
    const auto idx = scenery.index_of(field.sites[j]);
    if (!idx) throw DataError("no scenery value at visited site " + site_to_string(field.sites[j], field.d0()));
    const double sign = signed_kernel ? static_cast<double>(scenery.signs[*idx]) : 1.0;
    g.weight.push_back(sign * static_cast<double>(counts[j]));
    for (std::size_t c = 0; c < p; ++c) g.coords.push_back(scenery.coords[*idx * p + c]);
  }
  return g;
}

inline double pair_sum(const Gathered& g, const KernelSpec& k) {
  const std::size_t n = g.size();
  if (n < 2) return 0.0;
  if (k.kind == KernelKind::ReciprocalSum) {
    return pair_sum_1d(g.weight, g.coords, [](double a, double b) {
      const double s = a + b;
      return (a == b || s == 0.0) ? 0.0 : 1.0 / s;
    });
  }
  const double q = static_cast<double>(k.p) / k.beta;
  if (k.p == 1) {
    const double four_q = 4.0 * q;
    const long kq = std::lround(four_q);
    if (std::abs(four_q - static_cast<double>(kq)) < 1e-12 && kq >= 1 && kq <= 64) {
      const int ki = static_cast<int>(kq);
      if (ki == 5)  // beta = 0.8
        return pair_sum_1d(g.weight, g.coords, [](double a, double b) {
          const double d = std::abs(a - b);
          return d == 0.0 ? 0.0 : 1.0 / (d * std::sqrt(std::sqrt(d)));
        });
      return pair_sum_1d(g.weight, g.coords, [ki](double a, double b) {
        const double d = std::abs(a - b);
        return d == 0.0 ? 0.0 : quarter_inv_pow(d, ki);
      });
    }
    return pair_sum_1d(g.weight, g.coords, [q](double a, double b) {
      const double d = std::abs(a - b);
      return d == 0.0 ? 0.0 : std::pow(d, -q);
    });
  }
  // p > 1: sup-norm distance.
  const auto p = static_cast<std::size_t>(k.p);
  Kahan total;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    Kahan row;
    for (std::size_t j = i + 1; j < n; ++j) {
      double d = 0.0;
      for (std::size_t c = 0; c < p; ++c) d = std::max(d, std::abs(g.coords[i * p + c] - g.coords[j * p + c]));
      if (d != 0.0) row.add(g.weight[j] * std::pow(d, -q));
    }
    total.add(g.weight[i] * row.sum);
  }
  return 2.0 * total.sum;
}

}  // namespace detail

// U over the counts of one checkpoint (or of the whole path).
inline double compute_U(const OccupationField& field, std::span<const std::int64_t> counts,
                        const SceneryField& scenery, const KernelSpec& k) {
  validate(k);
  if (counts.size() != field.sites.size()) throw DataError("counts are not aligned with the field's sites");
  return detail::pair_sum(detail::gather(field, counts, scenery, k), k);
}

inline double compute_U(const OccupationField& field, const SceneryField& scenery, const KernelSpec& k) {
  return compute_U(field, std::span<const std::int64_t>(field.counts), scenery, k);
}

inline double normalization_a_n(Regime regime, std::int64_t n, double beta, double alpha = 2.0) {
  detail::require(beta > 0.0 && beta < 2.0, "normalization: beta must lie in (0,2)");
  detail::require(n >= 1, "normalization: n must be >= 1");
  const double x = static_cast<double>(n);
  switch (regime) {
    case Regime::Transient:
      return std::pow(x, 2.0 / beta);
    case Regime::RecurrentNoLocalTime:
      detail::require(n >= 2, "normalization: n must be >= 2 when log n enters");
      return std::pow(x, 2.0 / beta) * std::pow(std::log(x), 2.0 - 2.0 / beta);
    case Regime::RecurrentLocalTime: {
      detail::require(alpha > 1.0 && alpha <= 2.0, "normalization: alpha must lie in (1,2]");
      const double delta = 1.0 - 1.0 / alpha + 1.0 / (alpha * beta);
      return std::pow(x, 2.0 * delta);
    }
  }
  throw ParameterError("normalization: unknown regime");
}

inline double normalization_a_n(const WalkModel& model, std::int64_t n, double beta) {
  const Regime r = regime_of(model);
  return normalization_a_n(r, n, beta, r == Regime::RecurrentLocalTime ? walk_alpha(model) : 2.0);
}

struct UStatTrajectory {
  std::vector<double> time_grid;
  std::vector<double> raw;
  std::vector<double> scaled;
  Regime regime = Regime::Transient;
  double a_n = 1.0;
  std::int64_t n = 0;
};

inline UStatTrajectory trajectory_from(const OccupationField& field, const SceneryField& scenery,
                                       const KernelSpec& k) {
  UStatTrajectory tr;
  tr.regime = regime_of(field.model);
  tr.n = field.scale;
  tr.a_n = normalization_a_n(field.model, field.scale, k.beta);
  for (const auto& cp : field.checkpoints) {
    tr.time_grid.push_back(cp.t);
    tr.raw.push_back(compute_U(field, cp.counts, scenery, k));
    tr.scaled.push_back(tr.raw.back() / tr.a_n);
  }
  return tr;
}

// One (walk, scenery) pair: the walk from `walk_rng`, the scenery lazily from
// `scenery_seed` on exactly the visited sites.
template <class Engine>
UStatTrajectory scaled_trajectory(const WalkModel& model, const KernelSpec& k, std::int64_t n,
                                  std::span<const double> time_grid, Engine& walk_rng, std::uint64_t scenery_seed) {
  validate(k);
  const OccupationField f = simulate_occupation(model, n, time_grid, walk_rng);
  const SceneryField s = sample_scenery(f.sites, k, scenery_seed);
  return trajectory_from(f, s, k);
}

template <class Engine>
UStatTrajectory scaled_trajectory(const WalkModel& model, const KernelSpec& k, std::int64_t n,
                                  std::span<const double> time_grid, Engine& rng) {
  const std::uint64_t scenery_seed = rng();
  return scaled_trajectory(model, k, n, time_grid, rng, scenery_seed);
}

// CSV: replicate, t, n, raw, scaled.
inline void write_trajectory_header(std::ostream& os) { os << "replicate,t,n,raw,scaled\n"; }
inline void write_trajectory_rows(std::ostream& os, std::int64_t replicate, const UStatTrajectory& tr) {
  for (std::size_t i = 0; i < tr.time_grid.size(); ++i)
    os << replicate << ',' << fmt_num(tr.time_grid[i], "t") << ',' << tr.n << ',' << fmt_num(tr.raw[i], "U")
       << ',' << fmt_num(tr.scaled[i], "U / a_n") << '\n';
}

// ---------------------------------------------------------------------------
// G statistics.

struct ThetaCombination {
  std::vector<double> thetas;
  std::vector<double> time_grid;  // t_1 < ... < t_m, t_1 > 0

  std::size_t m() const { return thetas.size(); }
};

inline void validate(const ThetaCombination& c) {
  detail::require(!c.thetas.empty(), "theta combination: m must be >= 1");
  detail::require(c.thetas.size() == c.time_grid.size(), "theta combination: one theta per time");
  for (std::size_t i = 0; i < c.m(); ++i) {
    detail::require(std::isfinite(c.thetas[i]), "theta combination: thetas must be finite");
    detail::require(c.time_grid[i] > (i == 0 ? 0.0 : c.time_grid[i - 1]),
                    "theta combination: grid must be strictly increasing and start after 0");
  }
}

// theta_{i,j} = theta_{max(i,j)}.
inline std::vector<std::vector<double>> theta_matrix(const ThetaCombination& c) {
  std::vector<std::vector<double>> m(c.m(), std::vector<double>(c.m()));
  for (std::size_t i = 0; i < c.m(); ++i)
    for (std::size_t j = 0; j < c.m(); ++j) m[i][j] = c.thetas[std::max(i, j)];
  return m;
}

enum class GMode { Levels, Increments };

struct GPair {
  double plus = 0.0;
  double minus = 0.0;
};

inline GMode mode_for(const WalkModel& model) {
  return alpha0_of(model) > 1.0 ? GMode::Levels : GMode::Increments;
}

namespace detail {

// Distinct count vectors (one entry per time) with their multiplicities.
inline std::map<std::vector<std::int64_t>, std::int64_t> count_vectors(const OccupationField& field,
                                                                       std::span<const double> times,
                                                                       bool increments) {
  std::vector<const Checkpoint*> cps;
  for (double t : times) cps.push_back(&checkpoint_at(field, t));
  std::map<std::vector<std::int64_t>, std::int64_t> groups;
  std::vector<std::int64_t> v(times.size());
  for (std::size_t j = 0; j < field.sites.size(); ++j) {
    std::int64_t prev = 0;
    bool any = false;
    for (std::size_t i = 0; i < cps.size(); ++i) {
      const std::int64_t c = cps[i]->counts[j];
      v[i] = increments ? c - prev : c;
      prev = c;
      any = any || v[i] != 0;
    }
    if (any) ++groups[v];
  }
  return groups;
}

template <class Zeta>
GPair g_sum(const std::map<std::vector<std::int64_t>, std::int64_t>& groups, double a_n, double beta, Zeta zeta) {
  std::vector<const std::vector<std::int64_t>*> keys;
  std::vector<double> mult;
  for (const auto& [k, m] : groups) {
    keys.push_back(&k);
    mult.push_back(static_cast<double>(m));
  }
  Kahan plus, minus;
  for (std::size_t a = 0; a < keys.size(); ++a)
    for (std::size_t b = 0; b < keys.size(); ++b) {
      const double z = zeta(*keys[a], *keys[b]);
      if (z == 0.0) continue;
      const double w = mult[a] * mult[b];
      plus.add(w * abs_pow_plus(z, beta));
      minus.add(w * abs_pow_minus(z, beta));
    }
  const double scale = std::pow(a_n, -beta);
  return {scale * plus.sum, scale * minus.sum};
}

}  // namespace detail

// G_n^+- = a_n^-beta sum_{x,y} |zeta(x,y)|_+-^beta, summed over all ordered
// pairs including x = y. Levels: zeta = sum_i theta_i N_i(x) N_i(y).
// Increments: zeta = sum_{i,j} theta_{max(i,j)} d_i(x) d_j(y).
inline GPair g_statistic(const OccupationField& field, const ThetaCombination& combo, double a_n, double beta,
                         GMode mode) {
  validate(combo);
  detail::require(a_n > 0.0, "g_statistic: a_n must be > 0");
  detail::require(beta > 0.0 && beta < 2.0, "g_statistic: beta must lie in (0,2)");
  if (mode != mode_for(field.model))
    throw RegimeError(mode == GMode::Levels ? "g_statistic: levels mode needs alpha_0 > 1"
                                            : "g_statistic: increments mode needs alpha_0 = 1");
  const auto groups = detail::count_vectors(field, combo.time_grid, mode == GMode::Increments);
  const std::size_t m = combo.m();
  if (mode == GMode::Levels) {
    return detail::g_sum(groups, a_n, beta, [&](const auto& u, const auto& v) {
      double z = 0.0;
      for (std::size_t i = 0; i < m; ++i) z += combo.thetas[i] * static_cast<double>(u[i]) * static_cast<double>(v[i]);
      return z;
    });
  }
  const auto theta = theta_matrix(combo);
  return detail::g_sum(groups, a_n, beta, [&](const auto& u, const auto& v) {
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) z += theta[i][j] * static_cast<double>(u[i]) * static_cast<double>(v[j]);
    return z;
  });
}

// Increments form with a general theta_{i,j} matrix.
inline GPair g_statistic(const OccupationField& field, std::span<const double> time_grid,
                         const std::vector<std::vector<double>>& theta, double a_n, double beta) {
  detail::require(theta.size() == time_grid.size(), "g_statistic: theta matrix must be m x m");
  for (const auto& row : theta) detail::require(row.size() == time_grid.size(), "g_statistic: theta matrix must be m x m");
  if (mode_for(field.model) != GMode::Increments) throw RegimeError("g_statistic: increments mode needs alpha_0 = 1");
  detail::require(a_n > 0.0, "g_statistic: a_n must be > 0");
  const auto groups = detail::count_vectors(field, time_grid, true);
  const std::size_t m = time_grid.size();
  return detail::g_sum(groups, a_n, beta, [&](const auto& u, const auto& v) {
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) z += theta[i][j] * static_cast<double>(u[i]) * static_cast<double>(v[j]);
    return z;
  });
}

// K_beta = Gamma(beta + 1) / c3^(beta - 1) for walks with alpha = d0.
inline double planar_K_beta(double c3, double beta) {
  detail::require(c3 > 0.0, "planar K_beta: c3 must be > 0");
  return std::tgamma(beta + 1.0) / std::pow(c3, beta - 1.0);
}

// alpha_0 = 1: K_beta^2 sum_{i,j} |theta_{i,j}|_+-^beta (t_i - t_{i-1}) (t_j - t_{j-1}).
inline GPair limit_G(const ThetaCombination& combo, double K_beta, double beta) {
  validate(combo);
  detail::require(std::isfinite(K_beta) && K_beta > 0.0, "limit_G: K_beta must be supplied and > 0");
  detail::require(beta > 0.0 && beta < 2.0, "limit_G: beta must lie in (0,2)");
  const auto theta = theta_matrix(combo);
  GPair g;
  for (std::size_t i = 0; i < combo.m(); ++i) {
    const double di = combo.time_grid[i] - (i ? combo.time_grid[i - 1] : 0.0);
    for (std::size_t j = 0; j < combo.m(); ++j) {
      const double dj = combo.time_grid[j] - (j ? combo.time_grid[j - 1] : 0.0);
      g.plus += abs_pow_plus(theta[i][j], beta) * di * dj;
      g.minus += abs_pow_minus(theta[i][j], beta) * di * dj;
    }
  }
  return {K_beta * K_beta * g.plus, K_beta * K_beta * g.minus};
}

// alpha_0 > 1: integral of |sum_i theta_i L_i(x) L_i(y)|_+-^beta over bin x bin
// cells, one local-time field per grid time (all with the same bins width).
inline GPair limit_G(const ThetaCombination& combo, std::span<const LocalTimeField> fields, double beta) {
  validate(combo);
  detail::require(fields.size() == combo.m(), "limit_G: one local-time field per grid time is required");
  const double dx = fields[0].dx;
  for (const auto& f : fields)
    detail::require(std::abs(f.dx - dx) <= 1e-12 * dx, "limit_G: local-time fields must share their bins");
  std::map<std::int64_t, std::vector<double>> table;
  for (std::size_t i = 0; i < fields.size(); ++i)
    for (std::size_t k = 0; k < fields[i].bins.size(); ++k) {
      auto& row = table[fields[i].bins[k]];
      row.resize(fields.size(), 0.0);
      row[i] = fields[i].values[k];
    }
  std::vector<const std::vector<double>*> rows;
  for (const auto& [bin, v] : table) rows.push_back(&v);
  detail::Kahan plus, minus;
  for (const auto* u : rows)
    for (const auto* v : rows) {
      double z = 0.0;
      for (std::size_t i = 0; i < combo.m(); ++i) z += combo.thetas[i] * (*u)[i] * (*v)[i];
      if (z == 0.0) continue;
      plus.add(abs_pow_plus(z, beta));
      minus.add(abs_pow_minus(z, beta));
    }
  return {plus.sum * dx * dx, minus.sum * dx * dx};
}

// CSV: replicate, n, G_plus, G_minus.
inline void write_g_header(std::ostream& os) { os << "replicate,n,G_plus,G_minus\n"; }
inline void write_g_row(std::ostream& os, std::int64_t replicate, std::int64_t n, const GPair& g) {
  os << replicate << ',' << n << ',' << fmt_num(g.plus, "G_plus") << ',' << fmt_num(g.minus, "G_minus") << '\n';
}

}  // namespace rwu
