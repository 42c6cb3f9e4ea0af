#pragma once

// Experiment runner: dispatch on the configured experiment, CSV outputs, and a
// manifest.json written last.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "kplab/config.hpp"
#include "kplab/control_ops.hpp"
#include "kplab/counterexample.hpp"
#include "kplab/errors.hpp"
#include "kplab/fit.hpp"
#include "kplab/hermitian.hpp"
#include "kplab/hum_synthesis.hpp"
#include "kplab/io.hpp"
#include "kplab/nonlinear_control.hpp"
#include "kplab/observability_lab.hpp"
#include "kplab/parallel.hpp"
#include "kplab/spectral_core.hpp"

#ifndef KPLAB_VERSION
#define KPLAB_VERSION "0.0.0"
#endif

namespace kplab {

inline constexpr const char* version() { return KPLAB_VERSION; }

enum ExitCode { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2 };

struct RunResult {
  int exit_code = kExitOk;
  std::filesystem::path manifest_path;
  Json manifest;
};

namespace detail {

struct RunContext {
  const ExperimentConfig& cfg;
  std::filesystem::path dir;
  Json metrics = Json::object();
  Json outputs = Json::array();
  std::vector<std::string> warnings;

  CsvWriter csv(const std::string& name, const std::vector<std::string>& header) {
    return CsvWriter(dir / name, header);
  }
  void done(CsvWriter& w, const std::string& name) {
    w.close();
    outputs.push_back(name);
  }
};

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline BumpProfile vertical_bump(const ExperimentConfig& c) {
  return make_bump(c.strip.a, c.strip.b, c.grid.K, c.bump.n_quad);
}

// ---------------------------------------------------------------------------

inline void run_hum(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const ModeGrid2D grid(c.grid.K, c.grid.L);
  const auto bump = vertical_bump(c);
  std::mt19937_64 rng(c.seed);
  HumOptions opts;
  opts.samples_per_unit_time = c.sweep.samples_per_unit_time;
  opts.monolithic = c.sweep.monolithic;

  auto summary = ctx.csv("hum.csv", {"pair", "residual", "control_norm", "norm_bound", "norm_bound_T",
                                     "condition", "min_eig", "verify_intervals"});
  auto blocks = ctx.csv("blocks.csv", {"pair", "l", "min_eig", "max_eig"});
  auto control = ctx.csv("control.csv", {"pair", "t", "k", "l", "re", "im"});
  std::vector<double> residuals, min_eigs, norms;
  for (int p = 0; p < c.sweep.pairs; ++p) {
    const auto u0 = random_spectrum(grid, rng, c.sweep.data_norm, true);
    const auto u1 = random_spectrum(grid, rng, c.sweep.data_norm, true);
    const auto sol = hum_solve(u0, u1, c.T, bump, opts);
    summary.row({p, sol.residual, sol.control_norm, sol.norm_bound, sol.norm_bound_T, sol.condition,
                 sol.smallest_eig(), sol.verify_intervals});
    for (int r = 0; r < grid.rows(); ++r) blocks.row({p, r - grid.L(), sol.min_eig[r], sol.max_eig[r]});
    for (std::size_t j = 0; j < sol.control_times.size(); ++j) {
      const auto& h = sol.control_coeffs[j];
      for (int i = 0; i < grid.size(); ++i) {
        const auto [k, l] = grid.mode(i);
        control.row({p, sol.control_times[j], k, l, h.coeffs[i].real(), h.coeffs[i].imag()});
      }
    }
    residuals.push_back(sol.residual);
    min_eigs.push_back(sol.smallest_eig());
    norms.push_back(sol.control_norm);
  }
  ctx.done(summary, "hum.csv");
  ctx.done(blocks, "blocks.csv");
  ctx.done(control, "control.csv");
  ctx.metrics["residuals"] = json_numbers(residuals);
  ctx.metrics["residual_max"] = json_number(*std::max_element(residuals.begin(), residuals.end()));
  ctx.metrics["min_eigs"] = json_numbers(min_eigs);
  ctx.metrics["control_norms"] = json_numbers(norms);
}

inline void run_scan_lambda(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto lambdas = c.lambda_values();
  const auto rows = lambda_scan(vertical_bump(c), c.grid.K, c.T, lambdas,
                                c.sweep.weak ? std::optional<double>(c.sweep.weak_kappa) : std::nullopt);
  auto w = ctx.csv("scan.csv", {"lambda", "min_eig", "condition", "gap"});
  double inf = std::numeric_limits<double>::infinity(), arg = 0.0;
  bool positive = true;
  std::optional<double> at_zero;
  for (const auto& r : rows) {
    w.row({r.lambda, r.min_eig, r.condition, r.gap});
    if (r.min_eig < inf) inf = r.min_eig, arg = r.lambda;
    positive = positive && r.min_eig > 0.0;
    if (r.lambda == 0.0) at_zero = r.min_eig;
  }
  ctx.done(w, "scan.csv");
  ctx.metrics["points"] = int(rows.size());
  ctx.metrics["min_eig_inf"] = json_number(inf);
  ctx.metrics["argmin_lambda"] = json_number(arg);
  ctx.metrics["all_positive"] = positive;
  if (at_zero) {
    ctx.metrics["min_eig_lambda0"] = json_number(*at_zero);
    ctx.metrics["inf_over_lambda0"] = json_number(inf / *at_zero);
  }
  if (!positive) ctx.warnings.push_back("non-positive min_eig in the scan");
}

inline void run_ingham(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto freqs = c.ingham_freqs();
  const std::vector<double> Ts = c.sweep.T_list.empty() ? std::vector<double>{c.T} : c.sweep.T_list;
  auto w = ctx.csv("ingham.csv", {"gamma", "T", "C1", "C2"});
  Json rows = Json::array();
  for (double T : Ts) {
    const auto r = ingham_estimate(freqs, T);
    w.row({r.gamma, T, r.C1, r.C2});
    rows.push_back(Json{{"T", T}, {"C1", json_number(r.C1)}, {"C2", json_number(r.C2)}});
    if (std::isfinite(r.gamma) && T <= kTwoPi / r.gamma)
      ctx.warnings.push_back("T = " + format_double(T) + " is not above 2 pi / gamma");
  }
  ctx.done(w, "ingham.csv");
  const double g = freqs.size() > 1 ? gap(freqs) : std::numeric_limits<double>::infinity();
  ctx.metrics["gamma"] = json_number(g);
  ctx.metrics["T_threshold"] = json_number(kTwoPi / g);
  ctx.metrics["constants"] = rows;
}

inline void run_counterexample(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const double alpha = c.strip.a;
  const auto bump = make_two_sided_bump(c.strip.a, c.strip.b, c.grid.K, c.bump.n_quad);
  QuotientOptions o;
  o.samples_per_unit_time = c.sweep.samples_per_unit_time;
  o.ny = c.sweep.ny;
  const double B = c.packet_B(), b = c.packet_b_small();
  const auto rows = observability_quotient(c.sweep.n_list, c.T, alpha, bump, B, b, o);
  auto w = ctx.csv("counterexample.csv",
                   {"n", "h", "eps", "mass", "Q", "sup_omega", "Q_refined", "Q_vertical"});
  std::vector<double> h, Q, eps, sup, mass;
  bool decreasing = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    w.row({r.n, r.h, r.eps, r.mass, r.Q, r.sup_omega, r.Q_refined, r.Q_vertical});
    h.push_back(r.h);
    Q.push_back(r.Q);
    eps.push_back(r.eps);
    sup.push_back(r.sup_omega);
    mass.push_back(r.mass / gaussian_l2_norm());
    if (i > 0) decreasing = decreasing && r.Q < rows[i - 1].Q;
  }
  ctx.done(w, "counterexample.csv");
  ctx.metrics["B"] = B;
  ctx.metrics["b_small"] = b;
  ctx.metrics["Q"] = json_numbers(Q);
  ctx.metrics["mass_over_reference"] = json_numbers(mass);
  ctx.metrics["Q_strictly_decreasing"] = decreasing;
  ctx.metrics["Q_last_over_first"] = json_number(Q.back() / Q.front());
  const bool fit = rows.size() >= 2 && std::all_of(Q.begin(), Q.end(), [](double q) { return q > 0; });
  if (fit) ctx.metrics["Q_decay_exponent_in_h"] = json_number(loglog_slope(h, Q));
  if (rows.size() >= 2 && std::all_of(sup.begin(), sup.end(), [](double s) { return s > 0; }))
    ctx.metrics["sup_omega_exponent_in_eps"] = json_number(loglog_slope(eps, sup));
}

inline void run_transit(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto rows = transit_report(c.strip.a, c.strip.b, c.lambda_values(), c.grid.K);
  auto w = ctx.csv("transit.csv", {"lambda", "v_min", "t_max"});
  double worst = 0.0;
  for (const auto& r : rows) {
    w.row({r.lambda, r.v_min, r.t_max});
    worst = std::max(worst, r.t_max);
  }
  ctx.done(w, "transit.csv");
  ctx.metrics["t_max_worst"] = json_number(worst);
}

inline void run_nonlinear_steer(RunContext& ctx) {
  const auto& c = ctx.cfg;
  const ModeGrid2D grid(c.grid.K, c.grid.L);
  std::mt19937_64 rng(c.seed);
  const auto u0 = random_spectrum(grid, rng, c.solver.R, true);
  const auto u1 = random_spectrum(grid, rng, c.solver.R, true);
  HumOptions opts;
  opts.samples_per_unit_time = c.sweep.samples_per_unit_time;

  auto write_history = [&](const std::vector<double>& hist) {
    auto w = ctx.csv("picard.csv", {"iteration", "distance"});
    for (std::size_t i = 0; i < hist.size(); ++i) w.row({i + 1, hist[i]});
    ctx.done(w, "picard.csv");
    ctx.metrics["picard_history"] = json_numbers(hist);
  };

  PicardResult res;
  try {
    res = picard_steer(u0, u1, c.T, c.solver, vertical_bump(c), opts);
  } catch (const NonConvergenceError& e) {
    write_history(e.history());
    throw;
  }
  write_history(res.history);

  std::vector<double> snaps = c.sweep.snapshots;
  if (snaps.empty()) snaps = {0.0, 0.5 * c.T, c.T};
  const int n = int(res.traj.times.size()) - 1;
  std::vector<double> times;
  std::vector<Spectrum2D> states;
  for (double t : snaps) {
    const int j = std::clamp(int(std::lround(t / c.T * n)), 0, n);
    times.push_back(res.traj.times[j]);
    states.push_back(res.traj.states[j]);
  }
  write_spectrum_series(ctx.dir / "trajectory.csv", times, states);
  ctx.outputs.push_back("trajectory.csv");
  write_spectrum_series(ctx.dir / "control.csv", res.control.control_times, res.control.control_coeffs);
  ctx.outputs.push_back("control.csv");

  for (const auto& w : res.traj.warnings) ctx.warnings.push_back(w);
  ctx.metrics["iterations"] = int(res.history.size());
  ctx.metrics["terminal_miss"] = json_number(res.terminal_miss);
  ctx.metrics["residual"] = json_number(res.control.residual);
  ctx.metrics["control_norm"] = json_number(res.control.control_norm);
  ctx.metrics["min_eig"] = json_number(res.control.smallest_eig());
  ctx.metrics["data_norm"] = json_number(c.solver.R);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Selftest

struct SelfCheck {
  std::string module;
  std::string name;
  std::function<bool()> run;
};

inline std::vector<SelfCheck> selftest_checks() {
  std::vector<SelfCheck> v;
  const std::string sc = "spectral_core", co = "control_ops", hs = "hum_synthesis",
                    ol = "observability_lab", ce = "counterexample", nc = "nonlinear_control",
                    lc = "lab_cli";
  v.push_back({sc, "propagate_at_zero_is_identity", [] {
                 std::mt19937_64 rng(1);
                 const auto u = random_spectrum(ModeGrid2D(4, 2), rng, 1.0, true);
                 return propagate_linear(u, 0.0).coeffs == u.coeffs;
               }});
  v.push_back({sc, "dispersion_values", [] {
                 return dispersion(1, 1, KP2D{}) == 0.0 && dispersion(2, 1, KP2D{}) == 7.5 &&
                        dispersion(1, Lambda1D{1.0}) == 0.0;
               }});
  v.push_back({sc, "transform_round_trip", [] {
                 std::mt19937_64 rng(2);
                 const auto u = random_spectrum(ModeGrid1D(4), rng, 1.0, false);
                 const auto back = to_spectrum(to_physical(u, 16), u.grid);
                 return (back.coeffs - u.coeffs).norm() <= 1e-13;
               }});
  v.push_back({sc, "zero_has_zero_norm", [] {
                 return norm(Spectrum2D(ModeGrid2D(3, 1))) == 0.0 &&
                        norm(Spectrum2D(ModeGrid2D(3, 1)), NormKind::Hminus1) == 0.0;
               }});
  v.push_back({"hermitian", "diagonal_min_eig", [] {
                 Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(3, 3);
                 A(0, 0) = 3.0, A(1, 1) = 1.0, A(2, 2) = 2.0;
                 return std::abs(min_eig(A).value - 1.0) <= 1e-14;
               }});
  v.push_back({co, "adjoint_is_conjugate_transpose", [] {
                 const auto M = control_matrix(make_bump(-kPi / 2, kPi / 2, 4), 4);
                 return M.adjoint == M.matrix.adjoint();
               }});
  v.push_back({co, "constants_annihilated", [] {
                 const auto g = make_bump(-1.0, 1.0, 4);
                 Samples1D s{Eigen::VectorXcd::Constant(64, cplx(2.0, -1.0))};
                 return apply_control_op(g, s).values.cwiseAbs().maxCoeff() <= 1e-12;
               }});
  v.push_back({hs, "time_kernel_values", [] {
                 return time_kernel(0.0, 2.0) == cplx(2.0, 0.0) &&
                        std::abs(time_kernel(kTwoPi / 0.7, 0.7)) <= 1e-15;
               }});
  v.push_back({hs, "free_target_needs_no_control", [] {
                 std::mt19937_64 rng(3);
                 const ModeGrid2D grid(4, 2);
                 const auto u0 = random_spectrum(grid, rng, 1.0, true);
                 HumOptions o;
                 o.verify = false;
                 const auto sol = hum_solve(u0, free_evolution(u0, 1.0), 1.0, make_bump(-1.5, 1.5, 4), o);
                 return sol.control_norm <= 1e-14;
               }});
  v.push_back({ol, "gap_example", [] { return gap({1.0, 8.0, 27.0}) == 7.0; }});
  v.push_back({ol, "ingham_single_frequency", [] {
                 const auto r = ingham_estimate({3.0}, 1.7);
                 return std::abs(r.C1 - 1.7) <= 1e-15 && std::abs(r.C2 - 1.7) <= 1e-15;
               }});
  v.push_back({ol, "transit_lambda_zero", [] {
                 return transit_report(-kPi / 2, kPi / 2, {0.0}, 4)[0].v_min == 3.0;
               }});
  v.push_back({ce, "gaussian_even", [] { return gaussian_coeff(0.3, 5) == gaussian_coeff(0.3, -5); }});
  v.push_back({ce, "cutoff_plateau", [] {
                 return plateau_cutoff(0.0, 0.36, 0.45) == 1.0 && plateau_cutoff(0.5, 0.36, 0.45) == 0.0;
               }});
  v.push_back({ce, "lift_phase", [] { return lift_phase_defect(build_packet(4, 0.45, 0.36, 2), 1.0) < 1e-12; }});
  v.push_back({nc, "zero_stays_zero", [] {
                 const auto tr = evolve_nonlinear(Spectrum2D(ModeGrid2D(4, 2)), std::nullopt, 0.1, SolverParams{});
                 return tr.final_state().coeffs.squaredNorm() == 0.0;
               }});
  v.push_back({nc, "fft_size", [] { return fft_friendly_size(17) == 18 && fft_friendly_size(31) == 32; }});
  v.push_back({nc, "picard_zero_data", [] {
                 const ModeGrid2D grid(4, 2);
                 const auto r = picard_steer(Spectrum2D(grid), Spectrum2D(grid), 1.0, SolverParams{},
                                             make_bump(-kPi / 2, kPi / 2, 4));
                 return r.history.size() == 1 && r.history[0] == 0.0;
               }});
  v.push_back({lc, "config_round_trip", [] {
                 const auto c = parse_config(std::string_view(R"({"experiment": "hum"})"));
                 return parse_config(serialize(c)) == c;
               }});
  v.push_back({lc, "strip_order_rule", [] {
                 try {
                   parse_config(std::string_view(R"({"experiment": "hum", "strip": {"a": 1, "b": 0}})"));
                 } catch (const ConfigViolations& e) {
                   return e.items().size() == 1 && e.items()[0].find("strip.a") != std::string::npos &&
                          e.items()[0].find("strip.b") != std::string::npos;
                 }
                 return false;
               }});
  return v;
}

namespace detail {

inline void run_selftest(RunContext& ctx) {
  const auto checks = selftest_checks();
  std::vector<char> ok(checks.size(), 0);
  std::vector<std::string> why(checks.size());
  parallel_for(int(checks.size()), [&](int i) {
    try {
      ok[i] = checks[i].run();
    } catch (const std::exception& e) {
      why[i] = e.what();
    }
  });
  auto w = ctx.csv("selftest.csv", {"module", "check", "passed"});
  int failed = 0;
  Json failures = Json::array();
  for (std::size_t i = 0; i < checks.size(); ++i) {
    w.row({checks[i].module, checks[i].name, ok[i] ? 1 : 0});
    if (!ok[i]) {
      ++failed;
      failures.push_back(checks[i].module + "/" + checks[i].name + (why[i].empty() ? "" : ": " + why[i]));
    }
  }
  ctx.done(w, "selftest.csv");
  ctx.metrics["checks"] = int(checks.size());
  ctx.metrics["failed"] = failed;
  ctx.metrics["failures"] = failures;
  if (failed) throw NumericalError("selftest: " + std::to_string(failed) + " checks failed");
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Manifest for a run that never started (configuration rejected).
inline Json failure_manifest(const Json& raw_config, const std::string& status, int exit_code,
                             const std::vector<std::string>& errors) {
  Json m;
  m["kplab_version"] = version();
  m["status"] = status;
  m["exit_code"] = exit_code;
  m["started_at"] = detail::utc_now();
  m["config"] = raw_config;
  m["errors"] = errors;
  return m;
}

/// Runs cfg into cfg.output_dir. Never throws for errors inside the
/// experiment; they are reported through the exit code and the manifest.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  RunResult res;
  const fs::path dir(cfg.output_dir);
  res.manifest_path = dir / "manifest.json";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    res.exit_code = kExitConfig;
    res.manifest = failure_manifest(serialize(cfg), "config_error", kExitConfig,
                                    {"output_dir: cannot create " + dir.string() + ": " + ec.message()});
    res.manifest_path.clear();
    return res;
  }

  detail::RunContext ctx{cfg, dir, Json::object(), Json::array(), {}};
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = detail::utc_now();
  std::string status = "ok";
  std::vector<std::string> errors;
  try {
    switch (cfg.experiment) {
      case Experiment::hum: detail::run_hum(ctx); break;
      case Experiment::scan_lambda: detail::run_scan_lambda(ctx); break;
      case Experiment::ingham: detail::run_ingham(ctx); break;
      case Experiment::counterexample: detail::run_counterexample(ctx); break;
      case Experiment::nonlinear_steer: detail::run_nonlinear_steer(ctx); break;
      case Experiment::transit: detail::run_transit(ctx); break;
      case Experiment::selftest: detail::run_selftest(ctx); break;
    }
  } catch (const ConfigError& e) {
    res.exit_code = kExitConfig, status = "config_error", errors.push_back(e.what());
  } catch (const DomainError& e) {
    res.exit_code = kExitConfig, status = "config_error", errors.push_back(e.what());
  } catch (const NumericalError& e) {
    res.exit_code = kExitNumerical, status = "numerical_error", errors.push_back(e.what());
  } catch (const std::exception& e) {
    res.exit_code = kExitNumerical, status = "error", errors.push_back(e.what());
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json& m = res.manifest;
  m["kplab_version"] = version();
  m["experiment"] = std::string(experiment_name(cfg.experiment));
  m["status"] = status;
  m["exit_code"] = res.exit_code;
  m["seed"] = cfg.seed;
  m["threads"] = default_threads();
  m["started_at"] = started;
  m["wall_clock_seconds"] = wall;
  m["config"] = serialize(cfg);
  m["metrics"] = ctx.metrics;
  m["outputs"] = ctx.outputs;
  m["warnings"] = ctx.warnings;
  m["errors"] = errors;
  try {
    write_json_atomic(res.manifest_path, m);
  } catch (const std::exception& e) {
    res.exit_code = kExitConfig;
    res.manifest_path.clear();
    m["errors"].push_back(e.what());
  }
  return res;
}

}  // namespace kplab
