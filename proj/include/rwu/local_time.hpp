#pragma once

// Rescaled local-time estimates from one-dimensional occupation fields, the
// cumulative functional F, and the sheet integral of L(x) L(y).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include "rwu/csv.hpp"
#include "rwu/errors.hpp"
#include "rwu/sheet.hpp"
#include "rwu/stable.hpp"
#include "rwu/walk.hpp"

namespace rwu {

// Step function L(x) = values[k] on bin [bins[k] dx, (bins[k]+1) dx).
struct LocalTimeField {
  double alpha = 2.0;
  std::int64_t n = 1;
  double t = 1.0;
  double dx = 1.0;
  std::vector<std::int64_t> bins;  // sorted, only bins with a nonzero value
  std::vector<double> values;
  double support_radius = 0.0;

  double bin_center(std::size_t k) const { return (static_cast<double>(bins[k]) + 0.5) * dx; }
  double mass() const {
    double s = 0.0;
    for (double v : values) s += v * dx;
    return s;
  }
  // Largest index M so that every bin lies in [-M dx, M dx].
  std::int64_t extent_in_bins() const {
    std::int64_t m = 0;
    for (auto k : bins) m = std::max(m, k < 0 ? -k : k + 1);
    return m;
  }
};

inline LocalTimeField estimate_local_time(const OccupationField& field, double alpha, double t) {
  if (regime_of(field.model) != Regime::RecurrentLocalTime)
    throw RegimeError("estimate_local_time: walk is not in the local-time regime");
  detail::require(alpha > 1.0 && alpha <= 2.0, "estimate_local_time: alpha must lie in (1,2]");
  const Checkpoint& cp = checkpoint_at(field, t);
  LocalTimeField l;
  l.alpha = alpha;
  l.n = field.scale;
  l.t = t;
  const double n = static_cast<double>(field.scale);
  l.dx = std::pow(n, -1.0 / alpha);
  const double height = std::pow(n, 1.0 / alpha - 1.0);
  std::int64_t reach = 0;
  for (std::size_t j = 0; j < field.sites.size(); ++j) {
    if (cp.counts[j] == 0) continue;
    l.bins.push_back(field.sites[j]);
    l.values.push_back(height * static_cast<double>(cp.counts[j]));
    reach = std::max(reach, field.sites[j] < 0 ? -field.sites[j] : field.sites[j]);
  }
  if (!l.bins.empty()) l.support_radius = (static_cast<double>(reach) + 1.0) * l.dx;
  return l;
}

// Integral of L over [0, b], negated integral over [b, 0] when b < 0.
inline double f_functional(const LocalTimeField& l, double b) {
  double s = 0.0;
  if (b >= 0.0) {
    for (std::size_t k = 0; k < l.bins.size(); ++k) {
      const double lo = static_cast<double>(l.bins[k]) * l.dx;
      if (l.bins[k] < 0 || lo >= b) continue;
      s += l.values[k] * std::min(l.dx, b - lo);
    }
    return s;
  }
  for (std::size_t k = 0; k < l.bins.size(); ++k) {
    if (l.bins[k] >= 0) continue;
    const double hi = static_cast<double>(l.bins[k] + 1) * l.dx;
    if (hi <= b) continue;
    s += l.values[k] * std::min(l.dx, hi - b);
  }
  return -s;
}

// Integral of L^beta.
inline double power_integral(const LocalTimeField& l, double beta) {
  double s = 0.0;
  for (double v : l.values) s += std::pow(v, beta);
  return s * l.dx;
}

namespace detail {

inline std::int64_t cell_of_bin(std::int64_t k) { return k < 0 ? -k - 1 : k; }

}  // namespace detail

// Integral of L(x) L(y) against the sheet. The sheet cells must coincide with
// the bins; the integrand is constant on every cell, so the result is the
// midpoint integral of the tensor product, summed over the occupied cells.
inline double limit_functional(const LocalTimeField& l, const SheetGrid& g) {
  if (std::abs(g.tau - l.dx) > 1e-12 * l.dx) throw AlignmentError("limit_functional: sheet cells must match the bins");
  if (l.extent_in_bins() > g.extent) throw RangeError("limit_functional: local time support exceeds the sheet");
  double s = 0.0;
  for (std::size_t a = 0; a < l.bins.size(); ++a) {
    const int sx = l.bins[a] < 0 ? -1 : 1;
    const std::int64_t i = detail::cell_of_bin(l.bins[a]);
    double row = 0.0;
    for (std::size_t b = 0; b < l.bins.size(); ++b) {
      const int sy = l.bins[b] < 0 ? -1 : 1;
      row += l.values[b] * g.cell(quadrant_index(sx, sy), i, detail::cell_of_bin(l.bins[b]));
    }
    s += l.values[a] * row;
  }
  return s;
}

// Sheet at the bin resolution, just large enough for the support.
template <class Engine>
SheetGrid sheet_for(const LocalTimeField& l, const TailConstants& tail, Engine& rng) {
  return simulate_sheet(tail.beta, tail, l.dx, std::max<std::int64_t>(1, l.extent_in_bins()), rng);
}

// Law of limit_functional given L: A = (c0+c1) (int L^beta)^2, B likewise.
inline StableLawParams limit_law(const LocalTimeField& l, const TailConstants& tail) {
  validate(tail);
  const double m = power_integral(l, tail.beta);
  return {tail.beta, (tail.c0 + tail.c1) * m * m, (tail.c0 - tail.c1) * m * m};
}

// CSV: bin_center, value.
inline void write_csv(std::ostream& os, const LocalTimeField& l) {
  os << "bin_center,value\n";
  for (std::size_t k = 0; k < l.bins.size(); ++k)
    os << fmt_num(l.bin_center(k), "bin center") << ',' << fmt_num(l.values[k], "local time") << '\n';
}

}  // namespace rwu
