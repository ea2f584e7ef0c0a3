#pragma once

// Batch experiment driver: one function per subcommand, seeded replicate
// fan-out, CSV files with comment headers.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rwu/config.hpp"
#include "rwu/csv.hpp"
#include "rwu/diagnostics.hpp"
#include "rwu/errors.hpp"
#include "rwu/kernel.hpp"
#include "rwu/local_time.hpp"
#include "rwu/parallel.hpp"
#include "rwu/random.hpp"
#include "rwu/sheet.hpp"
#include "rwu/stable.hpp"
#include "rwu/ustat.hpp"
#include "rwu/version.hpp"
#include "rwu/walk.hpp"

namespace rwu {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumeric = 3, kExitRegime = 4 };

namespace cli {

inline WalkModel walk_from(const ExperimentConfig& c) {
  const std::string& w = c.get("walk");
  WalkModel m;
  if (w == "deterministic") {
    m = Deterministic{};
  } else if (w == "simple") {
    m = SimpleWalk{static_cast<int>(c.integer("d0"))};
  } else if (w == "heavy") {
    m = HeavyStepWalk{c.number("alpha")};
  } else {
    throw ConfigError("walk: unknown model " + w);
  }
  validate(m);
  return m;
}

inline KernelSpec kernel_from(const ExperimentConfig& c) {
  KernelSpec k;
  const std::string& kind = c.get("kernel");
  if (kind == "power") {
    k.kind = KernelKind::Power;
  } else if (kind == "signed-power") {
    k.kind = KernelKind::SignedPower;
  } else if (kind == "reciprocal-sum") {
    k.kind = KernelKind::ReciprocalSum;
  } else {
    throw ConfigError("kernel: unknown kind " + kind);
  }
  k.p = static_cast<int>(c.integer("p"));
  k.beta = c.number("beta");
  const std::string& dens = c.get("density");
  if (dens == "uniform") {
    k.density = UniformBox{c.number("density_lo"), c.number("density_hi")};
  } else if (dens == "gaussian") {
    k.density = TruncatedGaussian{c.number("sigma"), c.number("radius")};
  } else {
    throw ConfigError("density: unknown kind " + dens);
  }
  const bool d0 = c.get("c0") == "derived", d1 = c.get("c1") == "derived";
  if (d0 != d1) throw ConfigError("c0 and c1 must be declared together");
  if (!d0) k.declared_tail = TailConstants{c.number("c0"), c.number("c1"), k.beta};
  validate(k);
  return k;
}

inline std::vector<double> z_grid_from(const ExperimentConfig& c) {
  if (c.get("z_grid") == "standard") return standard_z_grid();
  return c.numbers("z_grid");
}

inline std::vector<Interval> intervals_from(const ExperimentConfig& c) {
  std::vector<Interval> out;
  std::stringstream ss(c.get("intervals"));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("intervals: expected lo:hi, got " + item);
    ExperimentConfig tmp;
    tmp.values["lo"] = trim(item.substr(0, colon));
    tmp.values["hi"] = trim(item.substr(colon + 1));
    auto val = [&](const char* key) {
      const std::string& s = tmp.get(key);
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
      return tmp.number(key);
    };
    out.push_back({val("lo"), val("hi")});
  }
  return out;
}

struct Context {
  ExperimentConfig config;
  std::filesystem::path out;
  int workers = 1;
  std::uint64_t seed = 0;
  std::int64_t replicates = 1;
  std::vector<std::string> written;
  std::ostream* log = &std::cerr;

  // Builds the whole file in memory, so a numeric failure leaves no partial output.
  void emit(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ostringstream os;
    write_header(os, config);
    body(os);
    std::filesystem::create_directories(out);
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (out / name).string());
    f << os.str();
    written.push_back(name);
  }
};

// Per-replicate streams.
inline Rng stream(const Context& ctx, std::int64_t rep, Role role) {
  return make_stream(ctx.seed, static_cast<std::uint64_t>(rep), role);
}

// Replicate index reserved for one-off estimates (K_beta, quenched walk path).
inline constexpr std::int64_t kSharedReplicate = -1;

inline void write_ecf(Context& ctx, const std::string& name, const EcfReport& r) {
  ctx.emit(name, [&](std::ostream& os) { write_csv(os, r); });
}

// ---------------------------------------------------------------------------

inline void run_sample_stable(Context& ctx) {
  const auto& c = ctx.config;
  const double A = c.number("A");
  const std::int64_t N = c.integer("samples");
  detail::require(N >= 1, "samples must be >= 1");
  const auto z = z_grid_from(c);
  struct Row {
    StableLawParams law;
    double err;
  };
  std::vector<Row> rows;
  std::int64_t idx = 0;
  for (double beta : c.numbers("betas")) {
    for (double B : {0.0, A}) {
      const StableLawParams law{beta, A, B};
      validate(law);
      const StableSampler draw(law);
      // Chunked over workers: chunk k always uses stream (idx, k).
      constexpr std::int64_t kChunks = 16;
      const auto parts = parallel_map(kChunks, ctx.workers, [&](std::int64_t k) {
        Rng rng = make_stream(ctx.seed, static_cast<std::uint64_t>(idx * kChunks + k), Role::stable);
        const std::int64_t lo = N * k / kChunks, hi = N * (k + 1) / kChunks;
        std::vector<double> v(static_cast<std::size_t>(hi - lo));
        for (auto& x : v) x = draw(rng);
        return v;
      });
      std::vector<double> samples;
      for (const auto& p : parts) samples.insert(samples.end(), p.begin(), p.end());
      const EcfReport r = ecf(samples, z, law);
      write_ecf(ctx, "ecf_" + std::to_string(idx) + ".csv", r);
      rows.push_back({law, r.sup_abs_err});
      ++idx;
    }
  }
  ctx.emit("summary.csv", [&](std::ostream& os) {
    os << "index,beta,A,B,samples,sup_abs_err\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
      os << i << ',' << fmt_num(rows[i].law.beta) << ',' << fmt_num(rows[i].law.A) << ',' << fmt_num(rows[i].law.B)
         << ',' << N << ',' << fmt_num(rows[i].err, "ecf error") << '\n';
  });
}

// K_beta for the transient limit: configured value or a Monte Carlo estimate.
inline Estimate K_beta_for(const Context& ctx, const WalkModel& model, double beta) {
  const auto& c = ctx.config;
  if (c.get("K_beta") != "estimate") return {c.number("K_beta"), 0.0};
  if (std::holds_alternative<Deterministic>(model) || beta == 1.0) return {1.0, 0.0};
  const std::int64_t reps = c.integer("k_replicates");
  const std::int64_t horizon = c.integer("horizon");
  constexpr std::int64_t kChunks = 16;
  const auto parts = parallel_map(kChunks, ctx.workers, [&](std::int64_t k) {
    Rng rng = make_stream(ctx.seed, static_cast<std::uint64_t>(k), Role::auxiliary);
    const std::int64_t n = reps * (k + 1) / kChunks - reps * k / kChunks;
    std::vector<double> v;
    for (std::int64_t i = 0; i < n; ++i)
      v.push_back(std::pow(static_cast<double>(two_sided_visits_to_zero(model, horizon, rng)), beta - 1.0));
    return v;
  });
  double s1 = 0.0, s2 = 0.0, m = 0.0;
  for (const auto& p : parts)
    for (double x : p) {
      s1 += x;
      s2 += x * x;
      m += 1.0;
    }
  detail::require(m >= 1.0, "k_replicates must be >= 1");
  const double mean = s1 / m;
  const double var = m > 1.0 ? std::max(0.0, (s2 - m * mean * mean) / (m - 1.0)) : 0.0;
  return {mean, std::sqrt(var / m)};
}

inline double c3_for(const Context& ctx, const WalkModel& model) {
  const auto& c = ctx.config;
  if (c.get("c3") != "estimate") return c.number("c3");
  Rng rng = stream(ctx, kSharedReplicate, Role::auxiliary);
  return estimate_c3(model, c.integer("n"), std::max<std::int64_t>(1, c.integer("k_replicates") / 100), rng).value;
}

inline void run_estimate_constants(Context& ctx) {
  const auto& c = ctx.config;
  const WalkModel model = walk_from(c);
  const double beta = c.number("beta");
  std::vector<std::pair<std::string, Estimate>> rows;
  const Regime r = regime_of(model);
  if (r == Regime::Transient) {
    require_transient(model, "estimate-constants");
    ExperimentConfig tmp = c;
    tmp.values["K_beta"] = "estimate";
    Context sub = ctx;
    sub.config = tmp;
    rows.push_back({"K_beta", K_beta_for(sub, model, beta)});
  } else if (r == Regime::RecurrentNoLocalTime) {
    Rng rng = stream(ctx, kSharedReplicate, Role::auxiliary);
    const Estimate e = estimate_c3(model, c.integer("n"), ctx.replicates, rng);
    rows.push_back({"c3", e});
    rows.push_back({"K_beta", {planar_K_beta(e.value, beta), 0.0}});
  } else {
    throw RegimeError("estimate-constants: no constant to estimate in the local-time regime");
  }
  ctx.emit("constants.csv", [&](std::ostream& os) {
    os << "name,value,std_error\n";
    for (const auto& [name, e] : rows)
      os << name << ',' << fmt_num(e.value, name.c_str()) << ',' << fmt_num(e.std_error, "std error") << '\n';
  });
}

struct EnsembleRow {
  UStatTrajectory traj;
  GPair g;
};

// Replicates of U_{floor(nt)}/a_n on the time grid, one fresh (walk, scenery) pair each.
inline std::vector<EnsembleRow> ustat_ensemble(Context& ctx, const WalkModel& model, const KernelSpec& k,
                                               const ThetaCombination& combo) {
  const std::int64_t n = ctx.config.integer("n");
  return parallel_map(ctx.replicates, ctx.workers, [&](std::int64_t rep) {
    Rng walk = stream(ctx, rep, Role::walk);
    const std::uint64_t scenery_seed = stream(ctx, rep, Role::scenery)();
    const OccupationField f = simulate_occupation(model, n, combo.time_grid, walk);
    const SceneryField s = sample_scenery(f.sites, k, scenery_seed);
    EnsembleRow row{trajectory_from(f, s, k), {}};
    row.g = g_statistic(f, combo, row.traj.a_n, k.beta, mode_for(model));
    return row;
  });
}

inline ThetaCombination combo_from(const ExperimentConfig& c) {
  ThetaCombination combo{c.numbers("thetas"), c.numbers("time_grid")};
  if (combo.thetas.size() == 1 && combo.time_grid.size() > 1) combo.thetas.assign(combo.time_grid.size(), combo.thetas[0]);
  validate(combo);
  return combo;
}

inline void write_ensemble(Context& ctx, const std::vector<EnsembleRow>& rows) {
  ctx.emit("trajectory.csv", [&](std::ostream& os) {
    write_trajectory_header(os);
    for (std::size_t r = 0; r < rows.size(); ++r) write_trajectory_rows(os, static_cast<std::int64_t>(r), rows[r].traj);
  });
  ctx.emit("g.csv", [&](std::ostream& os) {
    write_g_header(os);
    for (std::size_t r = 0; r < rows.size(); ++r) write_g_row(os, static_cast<std::int64_t>(r), rows[r].traj.n, rows[r].g);
  });
}

// ECF of the scaled values at each grid time against Phi_{K^2 t^2 (c0+c1), K^2 t^2 (c0-c1), beta}.
inline void write_diagonal_ecfs(Context& ctx, const std::vector<EnsembleRow>& rows, const ThetaCombination& combo,
                                const TailConstants& tail, double K) {
  const auto z = z_grid_from(ctx.config);
  for (std::size_t i = 0; i < combo.time_grid.size(); ++i) {
    const double t = combo.time_grid[i];
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.traj.scaled[i]);
    const double w = K * K * t * t;
    const StableLawParams law{tail.beta, w * (tail.c0 + tail.c1), w * (tail.c0 - tail.c1)};
    write_ecf(ctx, "ecf_t" + std::to_string(i) + ".csv", ecf(v, z, law));
  }
}

inline void run_ustat_diagonal(Context& ctx, Regime expected) {
  const auto& c = ctx.config;
  const WalkModel model = walk_from(c);
  if (regime_of(model) != expected)
    throw RegimeError(ctx.config.subcommand + ": walk is in the " + to_string(regime_of(model)) + " regime");
  const KernelSpec k = kernel_from(c);
  const TailConstants tail = tail_constants_of(k);
  const ThetaCombination combo = combo_from(c);
  const double K = expected == Regime::Transient ? K_beta_for(ctx, model, k.beta).value
                                                 : planar_K_beta(c3_for(ctx, model), k.beta);
  const auto rows = ustat_ensemble(ctx, model, k, combo);
  write_ensemble(ctx, rows);
  write_diagonal_ecfs(ctx, rows, combo, tail, K);
  const GPair lim = limit_G(combo, K, k.beta);
  ctx.emit("constants.csv", [&](std::ostream& os) {
    os << "name,value\n";
    os << "K_beta," << fmt_num(K, "K_beta") << '\n';
    os << "G_plus_limit," << fmt_num(lim.plus) << "\nG_minus_limit," << fmt_num(lim.minus) << '\n';
  });
}

inline void run_ustat_localtime(Context& ctx) {
  const auto& c = ctx.config;
  const WalkModel model = walk_from(c);
  if (regime_of(model) != Regime::RecurrentLocalTime)
    throw RegimeError("ustat-localtime: walk is in the " + to_string(regime_of(model)) + " regime");
  const KernelSpec k = kernel_from(c);
  const TailConstants tail = tail_constants_of(k);
  const ThetaCombination combo = combo_from(c);
  const double alpha = walk_alpha(model);
  const std::int64_t n = c.integer("n");
  const auto rows = ustat_ensemble(ctx, model, k, combo);
  write_ensemble(ctx, rows);

  // Independent ensemble of the limit: fresh walk for the local time, fresh sheet.
  const auto limits = parallel_map(ctx.replicates, ctx.workers, [&](std::int64_t rep) {
    Rng walk = stream(ctx, rep, Role::auxiliary);
    Rng sheet_rng = stream(ctx, rep, Role::sheet);
    const OccupationField f = simulate_occupation(model, n, combo.time_grid, walk);
    std::vector<LocalTimeField> lts;
    for (double t : combo.time_grid) lts.push_back(estimate_local_time(f, alpha, t));
    const SheetGrid g = sheet_for(lts.back(), tail, sheet_rng);
    std::vector<double> v;
    for (const auto& l : lts) v.push_back(limit_functional(l, g));
    return v;
  });
  ctx.emit("limit.csv", [&](std::ostream& os) {
    os << "replicate,t,value\n";
    for (std::size_t r = 0; r < limits.size(); ++r)
      for (std::size_t i = 0; i < combo.time_grid.size(); ++i)
        os << r << ',' << fmt_num(combo.time_grid[i]) << ',' << fmt_num(limits[r][i], "limit functional") << '\n';
  });
  const auto z = z_grid_from(c);
  ctx.emit("two_sample.csv", [&](std::ostream& os) {
    os << "t,ecf_distance\n";
    for (std::size_t i = 0; i < combo.time_grid.size(); ++i) {
      std::vector<double> u, l;
      for (const auto& r : rows) u.push_back(r.traj.scaled[i]);
      for (const auto& v : limits) l.push_back(v[i]);
      os << fmt_num(combo.time_grid[i]) << ',' << fmt_num(two_sample_ecf_distance(u, l, z), "distance") << '\n';
    }
  });
}

// Fixed suite of cell-aligned step functions (in units of the cell size).
inline std::vector<StepFunction2D> step_suite(double tau) {
  auto R = [tau](double x0, double x1, double y0, double y1) { return Rectangle{x0 * tau, x1 * tau, y0 * tau, y1 * tau}; };
  return {
      {{{R(0, 2, 0, 2), 1.0}}},
      {{{R(-2, 0, 0, 2), -2.0}, {R(0, 2, -2, 0), 0.5}}},
      {{{R(-2, 2, -1, 1), 1.5}}},
      {{{R(0, 1, 0, 1), 1.0}, {R(1, 3, 1, 3), -1.0}, {R(-3, -1, -3, -2), 0.25}}},
  };
}

inline void run_sheet_integrals(Context& ctx) {
  const auto& c = ctx.config;
  const double beta = c.number("beta");
  const TailConstants tail{c.number("c0"), c.number("c1"), beta};
  validate(tail);
  const double tau = c.number("cell_size");
  const std::int64_t extent = c.integer("extent");
  const auto suite = step_suite(tau);
  const auto values = parallel_map(ctx.replicates, ctx.workers, [&](std::int64_t rep) {
    Rng rng = stream(ctx, rep, Role::sheet);
    const SheetGrid g = simulate_sheet(beta, tail, tau, extent, rng);
    std::vector<double> v;
    for (const auto& h : suite) v.push_back(integrate_step(g, h));
    return v;
  });
  ctx.emit("integrals.csv", [&](std::ostream& os) {
    os << "replicate,function,value\n";
    for (std::size_t r = 0; r < values.size(); ++r)
      for (std::size_t j = 0; j < suite.size(); ++j) os << r << ',' << j << ',' << fmt_num(values[r][j], "integral") << '\n';
  });
  const auto z = z_grid_from(c);
  for (std::size_t j = 0; j < suite.size(); ++j) {
    std::vector<double> v;
    for (const auto& r : values) v.push_back(r[j]);
    write_ecf(ctx, "ecf_h" + std::to_string(j) + ".csv", ecf(v, z, limit_cf_of_integral(suite[j], tail)));
  }
}

inline void run_point_process(Context& ctx) {
  const auto& c = ctx.config;
  const WalkModel model = walk_from(c);
  const KernelSpec k = kernel_from(c);
  const TailConstants tail = tail_constants_of(k);
  const ThetaCombination combo = combo_from(c);
  const std::int64_t n = c.integer("n");
  const std::string& mode = c.get("mode");
  if (mode != "quenched" && mode != "annealed") throw ConfigError("mode: quenched or annealed");
  const bool quenched = mode == "quenched";
  const double a_n = normalization_a_n(model, n, k.beta);

  std::optional<OccupationField> fixed;
  if (quenched) {
    Rng walk = stream(ctx, kSharedReplicate, Role::walk);
    fixed = simulate_occupation(model, n, combo.time_grid, walk);
  }
  const auto sets = parallel_map(ctx.replicates, ctx.workers, [&](std::int64_t rep) {
    const std::uint64_t scenery_seed = stream(ctx, rep, Role::scenery)();
    if (quenched) {
      const SceneryField s = sample_scenery(fixed->sites, k, scenery_seed);
      return build_point_set(*fixed, s, k, combo, a_n);
    }
    Rng walk = stream(ctx, rep, Role::walk);
    const OccupationField f = simulate_occupation(model, n, combo.time_grid, walk);
    const SceneryField s = sample_scenery(f.sites, k, scenery_seed);
    return build_point_set(f, s, k, combo, a_n);
  });
  const IntensitySpec spec{k.beta, tail.c0, tail.c1, sets.front().G_plus, sets.front().G_minus};
  const auto intervals = intervals_from(c);
  const auto rows = intensity_check(sets, spec, intervals, !quenched);
  ctx.emit("intensity.csv", [&](std::ostream& os) { write_csv(os, rows); });

  // Poisson truncation limit with weights (a, b) and the kernel's beta.
  Rng prng = stream(ctx, kSharedReplicate, Role::poisson);
  const auto deltas = c.numbers("deltas");
  const auto rep = poisson_truncation_limit(c.number("a"), c.number("b"), k.beta, deltas, c.integer("samples"),
                                            z_grid_from(c), prng);
  ctx.emit("truncation.csv", [&](std::ostream& os) { write_csv(os, rep); });
}

inline void run_validate_kernel(Context& ctx) {
  const auto& c = ctx.config;
  const KernelSpec k = kernel_from(c);
  Rng rng = stream(ctx, kSharedReplicate, Role::scenery);
  const ValidationReport r = validate_assumptions(k, c.integer("samples"), rng);
  ctx.emit("validation.csv", [&](std::ostream& os) { write_csv(os, r); });
  if (!r.ok()) {
    std::string what = "kernel assumption violated:";
    for (const auto& v : r.violations) what += " " + v + ";";
    throw DataError(what);
  }
}

}  // namespace cli

// Runs one experiment; throws rwu::Error subclasses on failure.
inline std::vector<std::string> run_experiment(const ExperimentConfig& config, std::ostream& log = std::cerr) {
  cli::Context ctx;
  ctx.config = config;
  ctx.out = config.get("out");
  ctx.workers = static_cast<int>(config.integer("workers"));
  ctx.seed = config.seed();
  ctx.replicates = config.integer("replicates");
  ctx.log = &log;
  detail::require(ctx.workers >= 1, "workers must be >= 1");
  detail::require(ctx.replicates >= 1, "replicates must be >= 1");
  const std::string& s = config.subcommand;
  if (s == "sample-stable") cli::run_sample_stable(ctx);
  else if (s == "estimate-constants") cli::run_estimate_constants(ctx);
  else if (s == "ustat-transient") cli::run_ustat_diagonal(ctx, Regime::Transient);
  else if (s == "ustat-planar") cli::run_ustat_diagonal(ctx, Regime::RecurrentNoLocalTime);
  else if (s == "ustat-localtime") cli::run_ustat_localtime(ctx);
  else if (s == "sheet-integrals") cli::run_sheet_integrals(ctx);
  else if (s == "point-process") cli::run_point_process(ctx);
  else if (s == "validate-kernel") cli::run_validate_kernel(ctx);
  else throw ConfigError("unknown subcommand " + s);
  return ctx.written;
}

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const RegimeError*>(&e)) return kExitRegime;
  if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const DataError*>(&e)) return kExitNumeric;
  return kExitConfig;
}

inline const char* kind_for(int code) {
  switch (code) {
    case kExitRegime: return "regime";
    case kExitNumeric: return "numeric";
    default: return "config";
  }
}

// Exit status plus one machine-readable line on `err` when something fails.
inline int run(const ExperimentConfig& config, std::ostream& err = std::cerr) {
  try {
    run_experiment(config, err);
    return kExitOk;
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    err << "error kind=" << kind_for(code) << " code=" << code << " reason=\"" << e.what() << "\"\n";
    return code;
  }
}

}  // namespace rwu
