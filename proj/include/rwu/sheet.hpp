#pragma once

// Discretized beta-stable Levy sheet on four quadrants: i.i.d. stable cell
// increments, Z recovered by 2-D prefix sums, and stochastic integrals of
// step and continuous integrands.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rwu/csv.hpp"
#include "rwu/errors.hpp"
#include "rwu/random.hpp"
#include "rwu/stable.hpp"

namespace rwu {

// Quadrant q holds the copy Z^(e,e') with q = [e < 0] + 2 [e' < 0].
inline constexpr int quadrant_index(int sx, int sy) { return (sx < 0 ? 1 : 0) + (sy < 0 ? 2 : 0); }

struct SheetGrid {
  double beta = 1.0;
  TailConstants tail;
  double tau = 1.0;
  std::int64_t extent = 1;  // cells per axis and quadrant; the grid spans [-M tau, M tau]^2
  // cells[q][i * M + j]: increment over [i tau, (i+1) tau] x [j tau, (j+1) tau] in (|x|, |y|).
  std::array<std::vector<double>, 4> cells;
  // prefix[q][i * (M+1) + j] = Z^(q) at (i tau, j tau).
  std::array<std::vector<double>, 4> prefix;

  std::int64_t M() const { return extent; }

  double cell(int q, std::int64_t i, std::int64_t j) const {
    return cells[static_cast<std::size_t>(q)][static_cast<std::size_t>(i * extent + j)];
  }
  double node(int q, std::int64_t i, std::int64_t j) const {
    return prefix[static_cast<std::size_t>(q)][static_cast<std::size_t>(i * (extent + 1) + j)];
  }

  // Law of one cell increment.
  StableLawParams cell_law() const {
    const double area = tau * tau;
    return {beta, area * (tail.c0 + tail.c1), area * (tail.c0 - tail.c1)};
  }
};

namespace detail {

inline void build_prefix(SheetGrid& g) {
  const std::int64_t M = g.extent;
  for (int q = 0; q < 4; ++q) {
    auto& pre = g.prefix[static_cast<std::size_t>(q)];
    pre.assign(static_cast<std::size_t>((M + 1) * (M + 1)), 0.0);
    for (std::int64_t i = 1; i <= M; ++i) {
      double row = 0.0;
      for (std::int64_t j = 1; j <= M; ++j) {
        row += g.cell(q, i - 1, j - 1);
        pre[static_cast<std::size_t>(i * (M + 1) + j)] = pre[static_cast<std::size_t>((i - 1) * (M + 1) + j)] + row;
      }
    }
  }
}

inline void check_sheet_params(double beta, const TailConstants& tail, double tau, std::int64_t extent) {
  validate(tail);
  require(tail.beta == beta, "sheet: tail beta must equal beta");
  require(tau > 0.0 && std::isfinite(tau), "sheet: cell size must be > 0");
  require(extent >= 1, "sheet: extent must be >= 1");
}

}  // namespace detail

// Independent stable increments per cell; each quadrant draws from its own
// substream seeded from `rng`.
template <class Engine>
SheetGrid simulate_sheet(double beta, const TailConstants& tail, double tau, std::int64_t extent, Engine& rng) {
  detail::check_sheet_params(beta, tail, tau, extent);
  SheetGrid g;
  g.beta = beta;
  g.tail = tail;
  g.tau = tau;
  g.extent = extent;
  const StableSampler draw(g.cell_law());
  std::array<std::uint64_t, 4> seeds{};
  for (auto& s : seeds) s = rng();
  for (int q = 0; q < 4; ++q) {
    SplitMix64 eng(seeds[static_cast<std::size_t>(q)]);
    auto& c = g.cells[static_cast<std::size_t>(q)];
    c.resize(static_cast<std::size_t>(extent * extent));
    for (auto& v : c) v = draw(eng);
  }
  detail::build_prefix(g);
  return g;
}

// Grid of cell size 2 tau whose cells are the sums of their four children:
// a pathwise coupling of two resolutions of the same sheet.
inline SheetGrid coarsen(const SheetGrid& fine) {
  detail::require(fine.extent % 2 == 0, "coarsen: extent must be even");
  SheetGrid g;
  g.beta = fine.beta;
  g.tail = fine.tail;
  g.tau = 2.0 * fine.tau;
  g.extent = fine.extent / 2;
  for (int q = 0; q < 4; ++q) {
    auto& c = g.cells[static_cast<std::size_t>(q)];
    c.resize(static_cast<std::size_t>(g.extent * g.extent));
    for (std::int64_t i = 0; i < g.extent; ++i)
      for (std::int64_t j = 0; j < g.extent; ++j)
        c[static_cast<std::size_t>(i * g.extent + j)] =
            fine.cell(q, 2 * i, 2 * j) + fine.cell(q, 2 * i + 1, 2 * j) + fine.cell(q, 2 * i, 2 * j + 1) +
            fine.cell(q, 2 * i + 1, 2 * j + 1);
  }
  detail::build_prefix(g);
  return g;
}

// Axis-parallel rectangle [x0, x1] x [y0, y1].
struct Rectangle {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;

  double area() const { return (x1 - x0) * (y1 - y0); }
};

struct StepPiece {
  Rectangle rect;
  double coefficient = 0.0;
};

// H = sum_j h_j 1_{A_j} over pairwise disjoint rectangles.
struct StepFunction2D {
  std::vector<StepPiece> pieces;
};

namespace detail {

inline std::int64_t node_index(const SheetGrid& g, double x) {
  const double s = x / g.tau;
  const double r = std::round(s);
  if (std::abs(s - r) > 1e-9 * std::max(1.0, std::abs(s)))
    throw AlignmentError("rectangle corner " + std::to_string(x) + " is not on a grid node");
  const auto k = static_cast<std::int64_t>(r);
  if (k < -g.extent || k > g.extent) throw RangeError("rectangle corner outside the sheet extent");
  return k;
}

// Measure of the index box [i0, i1) x [j0, j1) in |.|-coordinates of quadrant q.
inline double quadrant_block(const SheetGrid& g, int q, std::int64_t i0, std::int64_t i1, std::int64_t j0,
                             std::int64_t j1) {
  if (i0 >= i1 || j0 >= j1) return 0.0;
  return g.node(q, i1, j1) + g.node(q, i0, j0) - g.node(q, i0, j1) - g.node(q, i1, j0);
}

}  // namespace detail

// Z at a grid node (x, y): Z^(sgn x, sgn y) at (|x|, |y|); zero on both axes.
inline double sheet_value(const SheetGrid& g, double x, double y) {
  const std::int64_t i = detail::node_index(g, x), j = detail::node_index(g, y);
  return g.node(quadrant_index(i < 0 ? -1 : 1, j < 0 ? -1 : 1), std::abs(i), std::abs(j));
}

// Random-measure value of an aligned rectangle. Inside one quadrant this is
// the four-corner combination Z_{b,b'} + Z_{a,a'} - Z_{a,b'} - Z_{b,a'} in the
// quadrant's own (|x|, |y|) coordinates; rectangles that cross an axis are
// split into their quadrant parts.
inline double rectangle_increment(const SheetGrid& g, const Rectangle& r) {
  detail::require(r.x0 <= r.x1 && r.y0 <= r.y1, "rectangle: corners must be ordered");
  const std::int64_t a = detail::node_index(g, r.x0), b = detail::node_index(g, r.x1);
  const std::int64_t c = detail::node_index(g, r.y0), d = detail::node_index(g, r.y1);
  double total = 0.0;
  for (int sx : {1, -1}) {
    // |x|-index interval of the part of [a, b] on side sx.
    const std::int64_t i0 = sx > 0 ? std::max<std::int64_t>(a, 0) : std::max<std::int64_t>(-b, 0);
    const std::int64_t i1 = sx > 0 ? std::max<std::int64_t>(b, 0) : std::max<std::int64_t>(-a, 0);
    for (int sy : {1, -1}) {
      const std::int64_t j0 = sy > 0 ? std::max<std::int64_t>(c, 0) : std::max<std::int64_t>(-d, 0);
      const std::int64_t j1 = sy > 0 ? std::max<std::int64_t>(d, 0) : std::max<std::int64_t>(-c, 0);
      total += detail::quadrant_block(g, quadrant_index(sx, sy), i0, i1, j0, j1);
    }
  }
  return total;
}

inline bool interiors_overlap(const Rectangle& a, const Rectangle& b) {
  return a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1;
}

inline void validate(const StepFunction2D& h) {
  for (std::size_t i = 0; i < h.pieces.size(); ++i) {
    const auto& r = h.pieces[i].rect;
    detail::require(r.x0 < r.x1 && r.y0 < r.y1, "step function: rectangles need positive area");
    detail::require(std::isfinite(h.pieces[i].coefficient), "step function: coefficients must be finite");
    for (std::size_t j = 0; j < i; ++j)
      if (interiors_overlap(r, h.pieces[j].rect)) throw ParameterError("step function: rectangles overlap");
  }
}

inline double integrate_step(const SheetGrid& g, const StepFunction2D& h) {
  validate(h);
  double s = 0.0;
  for (const auto& piece : h.pieces) s += piece.coefficient * rectangle_increment(g, piece.rect);
  return s;
}

using Integrand2D = std::function<double(double, double)>;

// Integral of the cell-midpoint discretization of H, a step function on the
// grid cells that meet `support`. The support must lie inside the extent.
inline double integrate_continuous(const SheetGrid& g, const Integrand2D& h, const Rectangle& support) {
  const double lim = g.tau * static_cast<double>(g.extent) * (1.0 + 1e-12);
  if (support.x0 < -lim || support.x1 > lim || support.y0 < -lim || support.y1 > lim)
    throw RangeError("integrand support exceeds the sheet extent");
  const auto lo = [&](double v) { return static_cast<std::int64_t>(std::floor(v / g.tau + 1e-9)); };
  const auto hi = [&](double v) { return static_cast<std::int64_t>(std::ceil(v / g.tau - 1e-9)); };
  const std::int64_t a = std::max(lo(support.x0), -g.extent), b = std::min(hi(support.x1), g.extent);
  const std::int64_t c = std::max(lo(support.y0), -g.extent), d = std::min(hi(support.y1), g.extent);
  double s = 0.0;
  for (std::int64_t i = a; i < b; ++i) {
    const double xm = (static_cast<double>(i) + 0.5) * g.tau;
    const int sx = i < 0 ? -1 : 1;
    const std::int64_t ci = i < 0 ? -i - 1 : i;
    for (std::int64_t j = c; j < d; ++j) {
      const double v = h(xm, (static_cast<double>(j) + 0.5) * g.tau);
      if (v == 0.0) continue;
      const int sy = j < 0 ? -1 : 1;
      const std::int64_t cj = j < 0 ? -j - 1 : j;
      s += v * g.cell(quadrant_index(sx, sy), ci, cj);
    }
  }
  return s;
}

// Law of the integral of H against the sheet: (c0+c1) int |H|^beta and
// (c0-c1) int |H|^beta sgn(H). Exact for step functions.
inline StableLawParams limit_cf_of_integral(const StepFunction2D& h, const TailConstants& tail) {
  validate(tail);
  validate(h);
  double plus = 0.0, minus = 0.0;
  for (const auto& piece : h.pieces) {
    plus += abs_pow_plus(piece.coefficient, tail.beta) * piece.rect.area();
    minus += abs_pow_minus(piece.coefficient, tail.beta) * piece.rect.area();
  }
  return {tail.beta, (tail.c0 + tail.c1) * plus, (tail.c0 - tail.c1) * minus};
}

// Handle version: nested adaptive Gauss-Kronrod over the declared support.
inline StableLawParams limit_cf_of_integral(const Integrand2D& h, const Rectangle& support,
                                            const TailConstants& tail) {
  validate(tail);
  detail::require(support.x0 < support.x1 && support.y0 < support.y1 && std::isfinite(support.area()),
                  "limit_cf_of_integral: support must be a bounded rectangle with positive area");
  using gk = boost::math::quadrature::gauss_kronrod<double, 21>;
  auto outer = [&](bool signed_part) {
    return gk::integrate(
        [&](double x) {
          return gk::integrate(
              [&](double y) {
                const double v = h(x, y);
                if (!std::isfinite(v)) throw ParameterError("limit_cf_of_integral: integrand is not bounded");
                return signed_part ? abs_pow_minus(v, tail.beta) : abs_pow_plus(v, tail.beta);
              },
              support.y0, support.y1, 8, 1e-10);
        },
        support.x0, support.x1, 8, 1e-10);
  };
  const double plus = outer(false), minus = outer(true);
  return {tail.beta, (tail.c0 + tail.c1) * plus, (tail.c0 - tail.c1) * minus};
}

// CSV: quadrant, i, j, increment (quadrant labelled by its signs, e.g. "+-").
inline void write_csv(std::ostream& os, const SheetGrid& g) {
  static constexpr std::array<const char*, 4> labels{"++", "-+", "+-", "--"};
  os << "quadrant,i,j,increment\n";
  for (int q = 0; q < 4; ++q)
    for (std::int64_t i = 0; i < g.extent; ++i)
      for (std::int64_t j = 0; j < g.extent; ++j)
        os << labels[static_cast<std::size_t>(q)] << ',' << i << ',' << j << ',' << fmt_num(g.cell(q, i, j), "sheet increment") << '\n';
}

}  // namespace rwu
