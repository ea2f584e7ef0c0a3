#pragma once

// The i.i.d. scenery and the heavy-tailed kernels h, with tail constants,
// truncation/compensation, and empirical checks of the kernel assumptions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rwu/csv.hpp"
#include "rwu/errors.hpp"
#include "rwu/random.hpp"
#include "rwu/stable.hpp"
#include "rwu/walk.hpp"

namespace rwu {

// Uniform law on the box [lo, hi]^p.
struct UniformBox {
  double lo = 0.0;
  double hi = 1.0;
};

// Coordinates i.i.d. N(0, sigma^2) conditioned on |x| <= radius.
struct TruncatedGaussian {
  double sigma = 1.0;
  double radius = 10.0;
};

using Density = std::variant<UniformBox, TruncatedGaussian>;

inline void validate(const Density& d) {
  if (const auto* u = std::get_if<UniformBox>(&d))
    detail::require(u->hi > u->lo, "uniform density: hi must exceed lo");
  if (const auto* g = std::get_if<TruncatedGaussian>(&d))
    detail::require(g->sigma > 0.0 && g->radius > 0.0, "gaussian density: sigma, radius must be > 0");
}

// One-dimensional marginal density value.
inline double density_1d(const Density& d, double x) {
  if (const auto* u = std::get_if<UniformBox>(&d))
    return (x >= u->lo && x <= u->hi) ? 1.0 / (u->hi - u->lo) : 0.0;
  const auto& g = std::get<TruncatedGaussian>(d);
  if (std::abs(x) > g.radius) return 0.0;
  const double mass = std::erf(g.radius / (g.sigma * std::numbers::sqrt2));
  return std::exp(-0.5 * x * x / (g.sigma * g.sigma)) / (g.sigma * std::sqrt(2.0 * std::numbers::pi) * mass);
}

// Closed form of the integral of f^2 over R^p.
inline double integral_f_squared(const Density& d, int p) {
  validate(d);
  double one_dim = 0.0;
  if (const auto* u = std::get_if<UniformBox>(&d)) {
    one_dim = 1.0 / (u->hi - u->lo);
  } else {
    const auto& g = std::get<TruncatedGaussian>(d);
    const double mass = std::erf(g.radius / (g.sigma * std::numbers::sqrt2));
    one_dim = std::erf(g.radius / g.sigma) / (2.0 * g.sigma * std::sqrt(std::numbers::pi) * mass * mass);
  }
  return std::pow(one_dim, p);
}

template <class Engine>
double draw_coordinate(const Density& d, Engine& rng) {
  if (const auto* u = std::get_if<UniformBox>(&d)) return u->lo + (u->hi - u->lo) * uniform_open(rng);
  const auto& g = std::get<TruncatedGaussian>(d);
  for (;;) {
    // Box-Muller keeps the draw a pure function of the engine output.
    const double r = std::sqrt(-2.0 * std::log(uniform_open(rng)));
    const double x = g.sigma * r * std::cos(2.0 * std::numbers::pi * uniform_open(rng));
    if (std::abs(x) <= g.radius) return x;
  }
}

// ---------------------------------------------------------------------------

enum class KernelKind {
  Power,          // ||x-y||_inf^(-p/beta), beta in (0,1)
  SignedPower,    // e e' ||x-y||_inf^(-p/beta) on {-1,1} x R^p, beta in [1,2)
  ReciprocalSum,  // 1/(x+y) on R, beta = 1
};

struct KernelSpec {
  KernelKind kind = KernelKind::Power;
  int p = 1;
  double beta = 0.5;
  Density density = UniformBox{};
  // Overrides the derived tail constants.
  std::optional<TailConstants> declared_tail;
};

inline void validate(const KernelSpec& k) {
  validate(k.density);
  detail::require(k.p >= 1, "kernel: p must be >= 1");
  switch (k.kind) {
    case KernelKind::Power:
      detail::require(k.beta > 0.0 && k.beta < 1.0, "power kernel: beta must lie in (0,1)");
      break;
    case KernelKind::SignedPower:
      detail::require(k.beta >= 1.0 && k.beta < 2.0, "signed power kernel: beta must lie in [1,2)");
      break;
    case KernelKind::ReciprocalSum:
      detail::require(k.beta == 1.0 && k.p == 1, "reciprocal-sum kernel: beta = 1 and p = 1");
      break;
  }
  if (k.declared_tail) {
    validate(*k.declared_tail);
    detail::require(k.declared_tail->beta == k.beta, "kernel: declared tail beta must equal kernel beta");
  }
}

inline KernelSpec power_kernel(int p, double beta, Density d = UniformBox{}) {
  KernelSpec k{KernelKind::Power, p, beta, d, std::nullopt};
  validate(k);
  return k;
}

inline KernelSpec signed_power_kernel(int p, double beta, Density d = UniformBox{}) {
  KernelSpec k{KernelKind::SignedPower, p, beta, d, std::nullopt};
  validate(k);
  return k;
}

// Standard Gaussian restricted to |x| <= 10.
inline KernelSpec reciprocal_sum_kernel(Density d = TruncatedGaussian{1.0, 10.0}) {
  KernelSpec k{KernelKind::ReciprocalSum, 1, 1.0, d, std::nullopt};
  validate(k);
  return k;
}

// A point of E: a sign (always +1 unless the kernel is signed) and p coordinates.
struct ScenePoint {
  int sign = 1;
  std::vector<double> x;
};

inline double sup_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

inline double eval_kernel(const KernelSpec& k, const ScenePoint& a, const ScenePoint& b) {
  if (k.kind == KernelKind::ReciprocalSum) {
    const double s = a.x[0] + b.x[0];
    // x = -y != x has probability zero; kept finite.
    if (a.x[0] == b.x[0] || s == 0.0) return 0.0;
    return 1.0 / s;
  }
  const double d = sup_distance(a.x, b.x);
  if (d == 0.0) return 0.0;
  const double v = std::pow(d, -static_cast<double>(k.p) / k.beta);
  return k.kind == KernelKind::SignedPower ? a.sign * b.sign * v : v;
}

inline TailConstants tail_constants_of(const KernelSpec& k) {
  validate(k);
  if (k.declared_tail) return *k.declared_tail;
  const double f2 = integral_f_squared(k.density, k.p);
  switch (k.kind) {
    case KernelKind::Power:
      return {std::ldexp(f2, k.p), 0.0, k.beta};
    case KernelKind::SignedPower:
      return {std::ldexp(f2, k.p - 1), std::ldexp(f2, k.p - 1), k.beta};
    case KernelKind::ReciprocalSum: {
      // c0 = c1 = density of xi_1 + xi_2 at 0.
      const Density d = k.density;
      auto integrand = [&d](double x) { return density_1d(d, x) * density_1d(d, -x); };
      double lo = -1.0, hi = 1.0;
      if (const auto* u = std::get_if<UniformBox>(&d)) {
        lo = std::max(u->lo, -u->hi);
        hi = std::min(u->hi, -u->lo);
      } else {
        const auto& g = std::get<TruncatedGaussian>(d);
        lo = -g.radius;
        hi = g.radius;
      }
      double c = 0.0;
      if (hi > lo) c = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, lo, hi, 15, 1e-13);
      if (!(c > 0.0)) throw ParameterError("reciprocal-sum kernel: density gives no mass near x+y = 0");
      return {c, c, 1.0};
    }
  }
  throw ParameterError("unknown kernel");
}

// h_M for a kernel value: h 1{|h| <= M} + [beta > 1] beta/(beta-1) (c0-c1) M^(1-beta).
inline double truncate_value(double h, double M, const TailConstants& tail) {
  detail::require(M > 0.0, "truncated_kernel: M must be > 0");
  double v = std::abs(h) <= M ? h : 0.0;
  if (tail.beta > 1.0) v += tail.beta / (tail.beta - 1.0) * (tail.c0 - tail.c1) * std::pow(M, 1.0 - tail.beta);
  return v;
}

inline double truncated_kernel(const KernelSpec& k, double M, const ScenePoint& a, const ScenePoint& b) {
  return truncate_value(eval_kernel(k, a, b), M, tail_constants_of(k));
}

template <class Engine>
ScenePoint draw_point(const KernelSpec& k, Engine& rng) {
  ScenePoint s;
  if (k.kind == KernelKind::SignedPower) s.sign = (rng() & 1u) ? 1 : -1;
  s.x.resize(static_cast<std::size_t>(k.p));
  for (auto& c : s.x) c = draw_coordinate(k.density, rng);
  return s;
}

// ---------------------------------------------------------------------------
// Scenery fields. The value at a site is a pure function of (seed, site), so
// a field drawn lazily over the visited sites in any order is reproducible.

inline ScenePoint scenery_value(const KernelSpec& k, std::uint64_t seed, SiteKey site) {
  SplitMix64 eng(hash_combine(seed, static_cast<std::uint64_t>(site)));
  return draw_point(k, eng);
}

struct SceneryField {
  std::uint64_t seed = 0;
  int p = 1;
  std::vector<SiteKey> sites;   // sorted
  std::vector<double> coords;   // sites.size() x p, row-major
  std::vector<int> signs;

  std::size_t size() const { return sites.size(); }

  std::optional<std::size_t> index_of(SiteKey s) const {
    const auto it = std::lower_bound(sites.begin(), sites.end(), s);
    if (it == sites.end() || *it != s) return std::nullopt;
    return static_cast<std::size_t>(it - sites.begin());
  }

  ScenePoint at(std::size_t i) const {
    ScenePoint s;
    s.sign = signs[i];
    s.x.assign(coords.begin() + static_cast<std::ptrdiff_t>(i * p),
               coords.begin() + static_cast<std::ptrdiff_t>((i + 1) * p));
    return s;
  }

  ScenePoint value(SiteKey s) const {
    const auto i = index_of(s);
    if (!i) throw DataError("no scenery value at site " + std::to_string(s));
    return at(*i);
  }
};

inline SceneryField sample_scenery(std::span<const SiteKey> sites, const KernelSpec& k, std::uint64_t seed) {
  validate(k);
  SceneryField f;
  f.seed = seed;
  f.p = k.p;
  f.sites.assign(sites.begin(), sites.end());
  std::sort(f.sites.begin(), f.sites.end());
  if (std::adjacent_find(f.sites.begin(), f.sites.end()) != f.sites.end())
    throw ParameterError("sample_scenery: sites must be distinct");
  f.coords.reserve(f.sites.size() * static_cast<std::size_t>(k.p));
  f.signs.reserve(f.sites.size());
  for (SiteKey s : f.sites) {
    const ScenePoint v = scenery_value(k, seed, s);
    f.signs.push_back(v.sign);
    f.coords.insert(f.coords.end(), v.x.begin(), v.x.end());
  }
  return f;
}

inline void write_csv(std::ostream& os, const SceneryField& f, int d0) {
  os << "site,sign";
  for (int c = 0; c < f.p; ++c) os << ",x" << c;
  os << '\n';
  for (std::size_t i = 0; i < f.size(); ++i) {
    os << site_to_string(f.sites[i], d0) << ',' << f.signs[i];
    for (int c = 0; c < f.p; ++c) os << ',' << fmt_num(f.coords[i * f.p + c], "scenery value");
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Assumption validators.

struct TailRow {
  double z;
  double right;  // z^beta P(h > z)
  double left;   // z^beta P(h < -z)
};

struct JointRow {
  double z;
  double z_prime;
  double probability;  // P(|h(x1,x2)| >= z and |h(x1,x3)| >= z')
};

struct ValidationReport {
  TailConstants declared;
  std::vector<TailRow> tail;
  double fitted_c0 = 0.0;
  double fitted_c1 = 0.0;
  std::vector<JointRow> joint;
  double gamma_hat = 0.0;
  // Only for beta > 1: E[h 1{|h| <= M}] M^(beta-1) against beta/(beta-1) (c1-c0).
  std::optional<double> truncation_level;
  std::optional<double> truncated_mean_scaled;
  std::optional<double> truncated_mean_expected;
  bool diagonal_ok = true;
  bool symmetry_ok = true;
  std::vector<std::string> violations;  // hard failures (diagonal, symmetry)
  std::vector<std::string> notes;       // soft findings

  bool ok() const { return violations.empty(); }
};

template <class Engine>
ValidationReport validate_assumptions(const KernelSpec& k, std::int64_t sample_count, Engine& rng) {
  detail::require(sample_count >= 10000, "validate_assumptions: sample_count must be >= 1e4");
  ValidationReport rep;
  rep.declared = tail_constants_of(k);
  const double beta = k.beta;
  const auto m = static_cast<std::size_t>(sample_count);

  std::vector<double> h12(m), h13(m);
  for (std::size_t i = 0; i < m; ++i) {
    const ScenePoint a = draw_point(k, rng), b = draw_point(k, rng), c = draw_point(k, rng);
    h12[i] = eval_kernel(k, a, b);
    h13[i] = eval_kernel(k, a, c);
    if (eval_kernel(k, b, a) != h12[i]) rep.symmetry_ok = false;
  }
  for (int i = 0; i < 1000; ++i) {
    const ScenePoint a = draw_point(k, rng);
    if (eval_kernel(k, a, a) != 0.0) rep.diagonal_ok = false;
  }
  if (!rep.diagonal_ok) rep.violations.push_back("h(x,x) != 0");
  if (!rep.symmetry_ok) rep.violations.push_back("h(x,y) != h(y,x)");

  const double mc = static_cast<double>(m);
  for (double z : {10.0, 30.0, 100.0}) {
    const auto right = std::count_if(h12.begin(), h12.end(), [z](double h) { return h > z; });
    const auto left = std::count_if(h12.begin(), h12.end(), [z](double h) { return h < -z; });
    const double zb = std::pow(z, beta);
    rep.tail.push_back({z, zb * static_cast<double>(right) / mc, zb * static_cast<double>(left) / mc});
  }
  // Two-point extrapolation in u = z^(-beta/p), the leading correction for box densities.
  const double u1 = std::pow(30.0, -beta / k.p), u2 = std::pow(100.0, -beta / k.p);
  auto extrapolate = [&](double l1, double l2) { return (l2 * u1 - l1 * u2) / (u1 - u2); };
  rep.fitted_c0 = std::max(0.0, extrapolate(rep.tail[1].right, rep.tail[2].right));
  rep.fitted_c1 = std::max(0.0, extrapolate(rep.tail[1].left, rep.tail[2].left));
  auto off = [](double fit, double want) { return std::abs(fit - want) > 0.25 * std::max(want, 0.05); };
  if (off(rep.fitted_c0, rep.declared.c0) || off(rep.fitted_c1, rep.declared.c1))
    rep.notes.push_back("fitted tail constants differ from declared by more than 25%");

  // Joint exceedance on levels with marginal probabilities 0.3 and 0.03.
  const double ctot = rep.declared.c0 + rep.declared.c1;
  const std::vector<double> levels{std::pow(ctot / 0.3, 1.0 / beta), std::pow(ctot / 0.03, 1.0 / beta)};
  for (double z : levels) {
    for (double zp : levels) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < m; ++i)
        if (std::abs(h12[i]) >= z && std::abs(h13[i]) >= zp) ++hits;
      rep.joint.push_back({z, zp, static_cast<double>(hits) / mc});
    }
  }
  const double p_lo = rep.joint.front().probability, p_hi = rep.joint.back().probability;
  if (p_lo > 0.0 && p_hi > 0.0) {
    rep.gamma_hat = std::log(p_lo / p_hi) / (2.0 * std::log(levels[1] / levels[0]));
    if (rep.gamma_hat <= 0.75 * beta) rep.notes.push_back("estimated gamma does not exceed 3 beta / 4");
  } else {
    rep.notes.push_back("joint exceedance too rare to estimate gamma");
  }

  if (beta > 1.0) {
    const double M = levels[1];
    double s = 0.0;
    for (double h : h12)
      if (std::abs(h) <= M) s += h;
    rep.truncation_level = M;
    rep.truncated_mean_scaled = s / mc * std::pow(M, beta - 1.0);
    rep.truncated_mean_expected = beta / (beta - 1.0) * (rep.declared.c1 - rep.declared.c0);
  }
  return rep;
}

// CSV in long form: quantity, z, z_prime, value.
inline void write_csv(std::ostream& os, const ValidationReport& r) {
  os << "quantity,z,z_prime,value\n";
  os << "declared_c0,,," << fmt_num(r.declared.c0) << "\ndeclared_c1,,," << fmt_num(r.declared.c1) << '\n';
  for (const auto& t : r.tail) {
    os << "tail_right," << fmt_num(t.z) << ",," << fmt_num(t.right) << '\n';
    os << "tail_left," << fmt_num(t.z) << ",," << fmt_num(t.left) << '\n';
  }
  os << "fitted_c0,,," << fmt_num(r.fitted_c0) << "\nfitted_c1,,," << fmt_num(r.fitted_c1) << '\n';
  for (const auto& j : r.joint)
    os << "joint," << fmt_num(j.z) << ',' << fmt_num(j.z_prime) << ',' << fmt_num(j.probability) << '\n';
  os << "gamma_hat,,," << fmt_num(r.gamma_hat) << '\n';
  if (r.truncation_level) {
    os << "truncated_mean_scaled," << fmt_num(*r.truncation_level) << ",," << fmt_num(*r.truncated_mean_scaled) << '\n';
    os << "truncated_mean_expected," << fmt_num(*r.truncation_level) << ",," << fmt_num(*r.truncated_mean_expected)
       << '\n';
  }
  os << "diagonal_ok,,," << (r.diagonal_ok ? 1 : 0) << "\nsymmetry_ok,,," << (r.symmetry_ok ? 1 : 0) << '\n';
}

}  // namespace rwu
