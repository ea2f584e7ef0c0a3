#pragma once

// Lattice random walks, their occupation fields, and the regime constants
// (K_beta for transient walks, c3 for the alpha = d0 range asymptotics).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rwu/errors.hpp"
#include "rwu/random.hpp"

namespace rwu {

// S_n = n on Z.
struct Deterministic {};

// Nearest-neighbour walk on Z^d0.
struct SimpleWalk {
  int d0 = 1;
};

// Symmetric walk on Z with P(X = +-k) = k^(-alpha-1) / (2 zeta(alpha+1)), k >= 1.
struct HeavyStepWalk {
  double alpha = 1.5;
};

using WalkModel = std::variant<Deterministic, SimpleWalk, HeavyStepWalk>;

enum class Regime { Transient, RecurrentNoLocalTime, RecurrentLocalTime };

inline constexpr int kMaxDimension = 4;

inline void validate(const WalkModel& m) {
  if (const auto* s = std::get_if<SimpleWalk>(&m))
    detail::require(s->d0 >= 1 && s->d0 <= kMaxDimension, "SimpleWalk: d0 must lie in [1,4]");
  if (const auto* h = std::get_if<HeavyStepWalk>(&m))
    detail::require(h->alpha > 1.0 && h->alpha <= 2.0, "HeavyStepWalk: alpha must lie in (1,2]");
}

inline int dimension(const WalkModel& m) {
  if (const auto* s = std::get_if<SimpleWalk>(&m)) return s->d0;
  return 1;
}

inline Regime regime_of(const WalkModel& m) {
  validate(m);
  if (std::holds_alternative<Deterministic>(m)) return Regime::Transient;
  if (const auto* s = std::get_if<SimpleWalk>(&m)) {
    if (s->d0 >= 3) return Regime::Transient;
    return s->d0 == 2 ? Regime::RecurrentNoLocalTime : Regime::RecurrentLocalTime;
  }
  return Regime::RecurrentLocalTime;
}

// Index alpha of the stable limit of n^(-1/alpha) S_n; NaN for transient walks.
inline double walk_alpha(const WalkModel& m) {
  validate(m);
  if (const auto* s = std::get_if<SimpleWalk>(&m)) return s->d0 <= 2 ? 2.0 : std::nan("");
  if (const auto* h = std::get_if<HeavyStepWalk>(&m)) return h->alpha;
  return std::nan("");
}

// alpha_0: one for transient and alpha = d0 walks, alpha / d0 otherwise.
inline double alpha0_of(const WalkModel& m) {
  return regime_of(m) == Regime::RecurrentLocalTime ? walk_alpha(m) / dimension(m) : 1.0;
}

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::Transient: return "transient";
    case Regime::RecurrentNoLocalTime: return "recurrent-no-local-time";
    case Regime::RecurrentLocalTime: return "recurrent-local-time";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Site keys: coordinates packed into one int64 (d0 == 1 keys are the
// coordinate itself, so key order is spatial order on Z).

using SiteKey = std::int64_t;
using Coords = std::array<std::int64_t, kMaxDimension>;

inline int bits_per_coord(int d0) { return 64 / d0; }

inline SiteKey pack_site(const Coords& c, int d0) {
  if (d0 == 1) return c[0];
  const int bits = bits_per_coord(d0);
  const std::int64_t half = std::int64_t{1} << (bits - 1);
  std::uint64_t key = 0;
  for (int k = 0; k < d0; ++k) {
    if (c[k] < -half || c[k] >= half) throw RangeError("site coordinate exceeds packed key range");
    key = (key << bits) | static_cast<std::uint64_t>(c[k] + half);
  }
  return static_cast<SiteKey>(key);
}

inline Coords unpack_site(SiteKey key, int d0) {
  Coords c{};
  if (d0 == 1) {
    c[0] = key;
    return c;
  }
  const int bits = bits_per_coord(d0);
  const std::int64_t half = std::int64_t{1} << (bits - 1);
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  auto u = static_cast<std::uint64_t>(key);
  for (int k = d0 - 1; k >= 0; --k) {
    c[k] = static_cast<std::int64_t>(u & mask) - half;
    u >>= bits;
  }
  return c;
}

inline std::string site_to_string(SiteKey key, int d0) {
  const Coords c = unpack_site(key, d0);
  std::string s;
  for (int k = 0; k < d0; ++k) {
    if (k) s += ':';
    s += std::to_string(c[k]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Step generation.

namespace detail {

// Devroye's rejection sampler for P(X = k) proportional to k^-(alpha+1), k >= 1.
template <class Engine>
std::int64_t zeta_draw(double alpha, Engine& rng) {
  const double b = std::pow(2.0, alpha);
  for (;;) {
    const double u = uniform_open(rng);
    const double v = uniform_open(rng);
    const double x = std::floor(std::pow(u, -1.0 / alpha));
    if (!(x < 0x1.0p53)) continue;
    const double t = std::pow(1.0 + 1.0 / x, alpha);
    if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<std::int64_t>(x);
  }
}

class Walker {
 public:
  explicit Walker(const WalkModel& m) : model_(m), d0_(dimension(m)) { validate(m); }

  template <class Engine>
  void step(Engine& rng) {
    std::visit([&](const auto& w) { advance(w, rng); }, model_);
  }

  SiteKey key() const { return pack_site(pos_, d0_); }
  bool at_origin() const {
    for (int k = 0; k < d0_; ++k)
      if (pos_[k] != 0) return false;
    return true;
  }

 private:
  template <class Engine>
  void advance(const Deterministic&, Engine&) { ++pos_[0]; }

  template <class Engine>
  void advance(const SimpleWalk& w, Engine& rng) {
    std::uniform_int_distribution<int> dir(0, 2 * w.d0 - 1);
    const int r = dir(rng);
    pos_[r >> 1] += (r & 1) ? 1 : -1;
  }

  template <class Engine>
  void advance(const HeavyStepWalk& w, Engine& rng) {
    const std::int64_t k = zeta_draw(w.alpha, rng);
    pos_[0] += (rng() & 1u) ? k : -k;
  }

  WalkModel model_;
  int d0_;
  Coords pos_{};
};

}  // namespace detail

// Sites S_1..S_n of one path started at S_0 = 0.
template <class Engine>
std::vector<SiteKey> simulate_path(const WalkModel& model, std::int64_t n, Engine& rng) {
  detail::require(n >= 0, "simulate_path: n must be >= 0");
  detail::Walker w(model);
  std::vector<SiteKey> path;
  path.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    w.step(rng);
    path.push_back(w.key());
  }
  return path;
}

// ---------------------------------------------------------------------------
// Occupation fields.

// Occupation counts N_{floor(scale t)}(x), aligned with OccupationField::sites.
struct Checkpoint {
  double t = 1.0;
  std::int64_t steps = 0;
  std::vector<std::int64_t> counts;
};

struct OccupationField {
  WalkModel model;
  std::int64_t scale = 0;  // the n of floor(n t)
  std::int64_t n = 0;      // simulated path length
  std::vector<SiteKey> sites;
  std::vector<std::int64_t> counts;
  std::int64_t range = 0;
  std::int64_t max_count = 0;
  std::vector<Checkpoint> checkpoints;

  int d0() const { return dimension(model); }
  std::int64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }
};

inline std::int64_t steps_at(std::int64_t scale, double t) {
  return static_cast<std::int64_t>(std::floor(static_cast<long double>(scale) * t + 1e-9L));
}

inline std::vector<double> normalized_grid(std::span<const double> time_grid) {
  if (time_grid.empty()) return {1.0};
  for (std::size_t i = 0; i < time_grid.size(); ++i) {
    detail::require(time_grid[i] >= 0.0 && std::isfinite(time_grid[i]), "time grid: entries must be finite and >= 0");
    detail::require(i == 0 || time_grid[i] >= time_grid[i - 1], "time grid: must be sorted");
  }
  return {time_grid.begin(), time_grid.end()};
}

// Builds a field from an explicit path S_1..S_len, with checkpoints at
// floor(scale t_i). Mostly useful for hand-built paths in tests.
inline OccupationField occupation_from_path(const WalkModel& model, std::int64_t scale,
                                            std::span<const SiteKey> path,
                                            std::span<const double> time_grid) {
  const std::vector<double> grid = normalized_grid(time_grid);
  OccupationField f;
  f.model = model;
  f.scale = scale;
  f.n = static_cast<std::int64_t>(path.size());

  std::unordered_map<SiteKey, std::int64_t> live;
  std::vector<std::unordered_map<SiteKey, std::int64_t>> snaps(grid.size());
  std::vector<std::int64_t> at(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    at[i] = steps_at(scale, grid[i]);
    if (at[i] > f.n) throw RangeError("checkpoint beyond the simulated path");
  }
  std::size_t next = 0;
  auto take = [&](std::int64_t done) {
    while (next < grid.size() && at[next] == done) snaps[next++] = live;
  };
  take(0);
  for (std::int64_t i = 0; i < f.n; ++i) {
    ++live[path[static_cast<std::size_t>(i)]];
    take(i + 1);
  }

  f.sites.reserve(live.size());
  for (const auto& [k, c] : live) f.sites.push_back(k);
  std::sort(f.sites.begin(), f.sites.end());
  f.counts.resize(f.sites.size());
  for (std::size_t j = 0; j < f.sites.size(); ++j) {
    f.counts[j] = live.at(f.sites[j]);
    f.max_count = std::max(f.max_count, f.counts[j]);
  }
  f.range = static_cast<std::int64_t>(f.sites.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Checkpoint cp{grid[i], at[i], std::vector<std::int64_t>(f.sites.size(), 0)};
    for (std::size_t j = 0; j < f.sites.size(); ++j) {
      const auto it = snaps[i].find(f.sites[j]);
      if (it != snaps[i].end()) cp.counts[j] = it->second;
    }
    f.checkpoints.push_back(std::move(cp));
  }
  return f;
}

// One sampled path of length max(n, floor(n t_max)) summarized by its
// occupation counts. An empty time grid means the single checkpoint t = 1.
template <class Engine>
OccupationField simulate_occupation(const WalkModel& model, std::int64_t n,
                                    std::span<const double> time_grid, Engine& rng) {
  detail::require(n >= 1, "simulate_occupation: n must be >= 1");
  const std::vector<double> grid = normalized_grid(time_grid);
  const std::int64_t len = std::max(n, steps_at(n, grid.back()));
  const std::vector<SiteKey> path = simulate_path(model, len, rng);
  return occupation_from_path(model, n, path, grid);
}

// Counts of the checkpoint at time t (exact match on t).
inline const Checkpoint& checkpoint_at(const OccupationField& f, double t) {
  for (const auto& cp : f.checkpoints)
    if (std::abs(cp.t - t) <= 1e-12 * std::max(1.0, std::abs(t))) return cp;
  throw DataError("no checkpoint at t = " + std::to_string(t));
}

// CSV: one "# n=.. range=.. max_count=.." line, then (site, count).
inline void write_csv(std::ostream& os, const OccupationField& f) {
  os << "# n=" << f.n << " range=" << f.range << " max_count=" << f.max_count << '\n';
  os << "site,count\n";
  for (std::size_t j = 0; j < f.sites.size(); ++j)
    os << site_to_string(f.sites[j], f.d0()) << ',' << f.counts[j] << '\n';
}

// ---------------------------------------------------------------------------
// Regime constants.

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

inline void require_transient(const WalkModel& m, const char* what) {
  if (regime_of(m) != Regime::Transient) throw RegimeError(std::string(what) + ": walk is not transient");
}

// 1 + visits to 0 of two independent forward paths of `horizon` steps: the
// two-sided count N_inf truncated at |time| <= horizon. The truncation bias
// decays polynomially in the horizon (about horizon^-1/2 in d0 = 3).
template <class Engine>
std::int64_t two_sided_visits_to_zero(const WalkModel& model, std::int64_t horizon, Engine& rng) {
  require_transient(model, "two_sided_visits_to_zero");
  detail::require(horizon >= 0, "two_sided_visits_to_zero: horizon must be >= 0");
  std::int64_t visits = 1;
  if (std::holds_alternative<Deterministic>(model)) return visits;
  for (int side = 0; side < 2; ++side) {
    detail::Walker w(model);
    for (std::int64_t i = 0; i < horizon; ++i) {
      w.step(rng);
      if (w.at_origin()) ++visits;
    }
  }
  return visits;
}

inline constexpr std::int64_t kDefaultHorizon = 10000;

// Monte Carlo E[N_inf^(beta-1)] with its standard error. Exact (value 1,
// zero error) for the deterministic walk and for beta = 1.
template <class Engine>
Estimate estimate_K_beta_transient(const WalkModel& model, double beta, std::int64_t horizon,
                                   std::int64_t replicates, Engine& rng) {
  require_transient(model, "estimate_K_beta_transient");
  detail::require(beta > 0.0 && beta < 2.0, "estimate_K_beta_transient: beta must lie in (0,2)");
  detail::require(replicates >= 1, "estimate_K_beta_transient: replicates must be >= 1");
  if (beta == 1.0 || std::holds_alternative<Deterministic>(model)) return {1.0, 0.0};
  // Tabulate the (small, integer) counts, then take moments.
  std::vector<std::int64_t> freq;
  for (std::int64_t r = 0; r < replicates; ++r) {
    const auto v = static_cast<std::size_t>(two_sided_visits_to_zero(model, horizon, rng));
    if (freq.size() <= v) freq.resize(v + 1, 0);
    ++freq[v];
  }
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t v = 1; v < freq.size(); ++v) {
    const double x = std::pow(static_cast<double>(v), beta - 1.0);
    s1 += static_cast<double>(freq[v]) * x;
    s2 += static_cast<double>(freq[v]) * x * x;
  }
  const double m = static_cast<double>(replicates);
  const double mean = s1 / m;
  const double var = replicates > 1 ? std::max(0.0, (s2 - m * mean * mean) / (m - 1.0)) : 0.0;
  return {mean, std::sqrt(var / m)};
}

// Replicate mean of R_n log(n) / n; biased at finite n (it approaches c3
// from below, roughly like 1/log n).
template <class Engine>
Estimate estimate_c3(const WalkModel& model, std::int64_t n, std::int64_t replicates, Engine& rng) {
  if (regime_of(model) != Regime::RecurrentNoLocalTime)
    throw RegimeError("estimate_c3: requires a walk with alpha = d0");
  detail::require(n >= 10, "estimate_c3: n must be >= 10");
  detail::require(replicates >= 1, "estimate_c3: replicates must be >= 1");
  const double logn = std::log(static_cast<double>(n));
  double s1 = 0.0, s2 = 0.0;
  for (std::int64_t r = 0; r < replicates; ++r) {
    const std::vector<double> grid{1.0};
    const OccupationField f = simulate_occupation(model, n, grid, rng);
    const double x = static_cast<double>(f.range) * logn / static_cast<double>(n);
    s1 += x;
    s2 += x * x;
  }
  const double m = static_cast<double>(replicates);
  const double mean = s1 / m;
  const double var = replicates > 1 ? std::max(0.0, (s2 - m * mean * mean) / (m - 1.0)) : 0.0;
  return {mean, std::sqrt(var / m)};
}

}  // namespace rwu
