#pragma once

// Closed-form stable characteristic functions, the Chambers-Mallows-Stuck
// sampler bridged onto them, and empirical characteristic functions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rwu/errors.hpp"
#include "rwu/random.hpp"

namespace rwu {

using complex = std::complex<double>;

// Parameters (A, B, beta) of the law Phi_{A,B,beta}. A is scale-like, B is
// skew-like with |B| <= A. A == 0 is the point mass at zero.
struct StableLawParams {
  double beta = 1.0;
  double A = 0.0;
  double B = 0.0;

  bool degenerate() const noexcept { return A == 0.0; }
};

// Tail constants of a kernel: P(h >= z) ~ c0 z^-beta, P(h <= -z) ~ c1 z^-beta.
struct TailConstants {
  double c0 = 0.0;
  double c1 = 0.0;
  double beta = 1.0;
};

inline void validate(const StableLawParams& p) {
  detail::require(p.beta > 0.0 && p.beta < 2.0, "stable law: beta must lie in (0,2)");
  detail::require(p.A >= 0.0 && std::isfinite(p.A), "stable law: A must be finite and >= 0");
  detail::require(std::isfinite(p.B) && std::abs(p.B) <= p.A * (1.0 + 1e-12),
                  "stable law: |B| must not exceed A");
}

inline void validate(const TailConstants& t) {
  detail::require(t.beta > 0.0 && t.beta < 2.0, "tail constants: beta must lie in (0,2)");
  detail::require(t.c0 >= 0.0 && t.c1 >= 0.0, "tail constants: c0, c1 must be >= 0");
  detail::require(t.c0 + t.c1 > 0.0, "tail constants: c0 + c1 must be > 0");
  detail::require(t.beta != 1.0 || t.c0 == t.c1, "tail constants: beta = 1 requires c0 = c1");
}

// |z|^beta and |z|^beta sgn(z).
inline double abs_pow_plus(double z, double beta) { return std::pow(std::abs(z), beta); }
inline double abs_pow_minus(double z, double beta) {
  if (z == 0.0) return 0.0;
  return z > 0.0 ? std::pow(z, beta) : -std::pow(-z, beta);
}

// Integral of sin(t) t^-beta over (0, inf), via the reflection form
// pi / (2 Gamma(beta) sin(pi beta / 2)) of Gamma(1-beta) cos(pi beta / 2).
// The reflection form is regular at beta = 1 where it equals pi/2.
inline double sin_integral_constant(double beta) {
  detail::require(beta > 0.0 && beta < 2.0, "sin_integral_constant: beta must lie in (0,2)");
  if (beta == 1.0) return std::numbers::pi / 2.0;
  return std::numbers::pi / (2.0 * std::tgamma(beta) * std::sin(std::numbers::pi * beta / 2.0));
}

inline complex stable_cf(const StableLawParams& p, double z) {
  validate(p);
  if (z == 0.0 || p.degenerate()) return {1.0, 0.0};
  const double sgn = z > 0.0 ? 1.0 : -1.0;
  const double az = std::abs(z);
  if (p.beta == 1.0) {
    const complex e{-az * (std::numbers::pi / 2.0) * p.A, -az * p.B * sgn * std::log(az)};
    return std::exp(e);
  }
  const double scale = std::pow(az, p.beta) * sin_integral_constant(p.beta);
  const double tan_term = std::tan(std::numbers::pi * p.beta / 2.0);
  const complex e{-scale * p.A, scale * p.B * sgn * tan_term};
  return std::exp(e);
}

// Scale sigma and skewness b of the classical 1-parametrization that carries
// the same law: sigma^beta = I_beta * A, b = B / A.
struct ClassicalStable {
  double sigma;
  double skew;
};

inline ClassicalStable to_classical(const StableLawParams& p) {
  validate(p);
  if (p.degenerate()) return {0.0, 0.0};
  const double scale_pow =
      p.beta == 1.0 ? (std::numbers::pi / 2.0) * p.A : sin_integral_constant(p.beta) * p.A;
  return {std::pow(scale_pow, 1.0 / p.beta), std::clamp(p.B / p.A, -1.0, 1.0)};
}

// Chambers-Mallows-Stuck sampler for Phi_{A,B,beta}, with the per-law
// constants precomputed. The degenerate law (A == 0) yields 0 without
// consuming randomness; check StableLawParams::degenerate() to detect it.
class StableSampler {
 public:
  explicit StableSampler(const StableLawParams& p) : params_(p), classical_(to_classical(p)) {
    if (p.degenerate() || p.beta == 1.0) return;
    const double t = classical_.skew * std::tan(std::numbers::pi / 2.0 * p.beta);
    shift_ = std::atan(t) / p.beta;
    stretch_ = std::pow(1.0 + t * t, 1.0 / (2.0 * p.beta));
  }

  const StableLawParams& params() const noexcept { return params_; }

  template <class Engine>
  double operator()(Engine& rng) const {
    if (params_.degenerate()) return 0.0;
    const double v = (uniform_open(rng) - 0.5) * std::numbers::pi;
    const double w = -std::log(uniform_open(rng));
    const double a = params_.beta;
    if (a == 1.0) {
      const double b = classical_.skew;
      const double h = std::numbers::pi / 2.0 + b * v;
      const double x = (h * std::tan(v) - b * std::log((std::numbers::pi / 2.0) * w * std::cos(v) / h)) /
                       (std::numbers::pi / 2.0);
      return classical_.sigma * x + b * classical_.sigma * std::log(classical_.sigma) / (std::numbers::pi / 2.0);
    }
    const double x = stretch_ * std::sin(a * (v + shift_)) / std::pow(std::cos(v), 1.0 / a) *
                     std::pow(std::cos(v - a * (v + shift_)) / w, (1.0 - a) / a);
    return classical_.sigma * x;
  }

 private:
  StableLawParams params_;
  ClassicalStable classical_;
  double shift_ = 0.0;
  double stretch_ = 1.0;
};

template <class Engine>
double sample_stable(const StableLawParams& p, Engine& rng) {
  return StableSampler(p)(rng);
}

// 25 points: -3, -2.75, ..., 3.
inline std::vector<double> standard_z_grid() {
  std::vector<double> g;
  for (int k = -12; k <= 12; ++k) g.push_back(0.25 * k);
  return g;
}

inline complex empirical_cf(std::span<const double> samples, double z) {
  // Compensated sums: 1e5-1e6 unit-modulus terms.
  double re = 0.0, im = 0.0, cre = 0.0, cim = 0.0;
  for (double x : samples) {
    const double yr = std::cos(z * x) - cre;
    const double tr = re + yr;
    cre = (tr - re) - yr;
    re = tr;
    const double yi = std::sin(z * x) - cim;
    const double ti = im + yi;
    cim = (ti - im) - yi;
    im = ti;
  }
  const double n = static_cast<double>(samples.size());
  return {re / n, im / n};
}

struct EcfReport {
  std::vector<double> z_grid;
  std::vector<complex> ecf;
  std::vector<complex> target;
  double sup_abs_err = 0.0;
};

inline EcfReport ecf(std::span<const double> samples, std::span<const double> z_grid,
                     const StableLawParams& target) {
  detail::require(!samples.empty(), "ecf: empty sample");
  detail::require(!z_grid.empty(), "ecf: empty z grid");
  validate(target);
  EcfReport r;
  r.z_grid.assign(z_grid.begin(), z_grid.end());
  for (double z : z_grid) {
    r.ecf.push_back(z == 0.0 ? complex{1.0, 0.0} : empirical_cf(samples, z));
    r.target.push_back(stable_cf(target, z));
    r.sup_abs_err = std::max(r.sup_abs_err, std::abs(r.ecf.back() - r.target.back()));
  }
  return r;
}

// sup_k |ecf_a(z_k) - ecf_b(z_k)|, for comparing two simulated ensembles.
inline double two_sample_ecf_distance(std::span<const double> a, std::span<const double> b,
                                      std::span<const double> z_grid) {
  detail::require(!a.empty() && !b.empty() && !z_grid.empty(), "two_sample_ecf_distance: empty input");
  double d = 0.0;
  for (double z : z_grid) d = std::max(d, std::abs(empirical_cf(a, z) - empirical_cf(b, z)));
  return d;
}

// sup_k |ecf(z_k) - Phi(z_k)| without building a report.
inline double ecf_distance(std::span<const double> samples, std::span<const double> z_grid,
                           const StableLawParams& target) {
  return ecf(samples, z_grid, target).sup_abs_err;
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// CSV: z, ecf_re, ecf_im, target_re, target_im, abs_err at 17 significant digits.
inline void write_csv(std::ostream& os, const EcfReport& r) {
  os << "z,ecf_re,ecf_im,target_re,target_im,abs_err\n";
  for (std::size_t k = 0; k < r.z_grid.size(); ++k) {
    os << format_g17(r.z_grid[k]) << ',' << format_g17(r.ecf[k].real()) << ','
       << format_g17(r.ecf[k].imag()) << ',' << format_g17(r.target[k].real()) << ','
       << format_g17(r.target[k].imag()) << ',' << format_g17(std::abs(r.ecf[k] - r.target[k]))
       << '\n';
  }
}

}  // namespace rwu
