#pragma once

// Full KP-II with forcing, d_t uhat = i omega uhat - (u u_x)^ + (G h)^, by an
// integrating-factor RK4 in Fourier variables, and the Picard iteration of
// the control map u -> hum_solve(u0, u1 - tail(u)).

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kplab/control_ops.hpp"
#include "kplab/errors.hpp"
#include "kplab/hum_synthesis.hpp"
#include "kplab/quadrature.hpp"
#include "kplab/spectral_core.hpp"

namespace kplab {

struct SolverParams {
  double dt = 1e-3;
  double dealias = 2.0 / 3.0;
  int max_picard = 20;
  double picard_tol = 1e-12;
  double R = 1e-2;
  bool nonlinear = true;

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("solver.dt must be positive");
    if (!(dealias > 0.0 && dealias <= 1.0)) throw ConfigError("solver.dealias must lie in (0, 1]");
    if (!(picard_tol > 0.0)) throw ConfigError("solver.picard_tol must be positive");
    if (max_picard < 1) throw ConfigError("solver.max_picard must be >= 1");
    if (!(R > 0.0)) throw ConfigError("solver.R must be positive");
  }

  bool operator==(const SolverParams&) const = default;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Spectrum2D> states;
  std::shared_ptr<const ControlSolution> control;
  bool nonlinear = true;
  double dt = 0.0;
  double dealias = 2.0 / 3.0;
  std::vector<std::string> warnings;

  const Spectrum2D& final_state() const { return states.back(); }
};

/// Smallest even 2^a 3^b 5^c >= n.
inline int fft_friendly_size(int n) {
  for (int m = std::max(2, n);; ++m) {
    if (m % 2) continue;
    int r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

/// (u u_x)^ = (1/2) i k (u^2)^ with u^2 formed on a zero-padded grid.
class Advection {
 public:
  Advection(const ModeGrid2D& grid, double dealias)
      : grid_(grid),
        nx_(fft_friendly_size(int(std::ceil(2.0 * grid.K() / dealias)) + 1)),
        ny_(fft_friendly_size(int(std::ceil(2.0 * grid.L() / dealias)) + 1)),
        tr_(std::max(nx_, 2 * grid.K() + 2), std::max(ny_, 2 * grid.L() + 2)) {}

  int nx() const { return tr_.nx(); }
  int ny() const { return tr_.ny(); }

  Spectrum2D operator()(const Spectrum2D& u) {
    Samples2D s = tr_.to_physical(u);
    s.values = s.values.cwiseProduct(s.values).eval();
    Spectrum2D sq = tr_.to_spectrum(s, grid_);
    for (int i = 0; i < grid_.size(); ++i) sq.coeffs[i] *= 0.5 * kI * double(grid_.mode(i).first);
    return sq;
  }

 private:
  ModeGrid2D grid_;
  int nx_, ny_;
  Transform2D tr_;
};

namespace detail {

inline void check_finite(const Spectrum2D& u, long step) {
  if (!u.coeffs.allFinite())
    throw InstabilityError("instability: non-finite coefficients at step " + std::to_string(step),
                           step);
}

inline int step_count(double T, double dt) {
  int n = std::max(2, int(std::ceil(T / dt - 1e-9)));
  return n + n % 2;
}

}  // namespace detail

/// Integrating-factor RK4 (Lawson) from u0 over [0, T]; every step is recorded.
inline Trajectory evolve_nonlinear(const Spectrum2D& u0,
                                   std::shared_ptr<const ControlSolution> control, double T,
                                   const SolverParams& params) {
  params.validate();
  if (!(T > 0.0)) throw ConfigError("evolve_nonlinear: T must be positive");
  if (control && !(control->grid == u0.grid))
    throw ConfigError("evolve_nonlinear: control and state on different grids");
  if (!u0.coeffs.allFinite()) throw ConfigError("evolve_nonlinear: u0 is not finite");
  const ModeGrid2D& grid = u0.grid;
  const int n = detail::step_count(T, params.dt);
  const double dt = T / n;

  Trajectory traj;
  traj.control = control;
  traj.nonlinear = params.nonlinear;
  traj.dt = dt;
  traj.dealias = params.dealias;
  const double K3 = double(grid.K()) * grid.K() * grid.K();
  if (dt * K3 > 10.0) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "dt*K^3 = %.3g exceeds 10", dt * K3);
    traj.warnings.emplace_back(buf);
  }

  Eigen::VectorXcd E(grid.size()), Eh(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const auto [k, l] = grid.mode(i);
    const double w = dispersion(k, l, KP2D{});
    E[i] = std::exp(kI * (dt * w));
    Eh[i] = std::exp(kI * (0.5 * dt * w));
  }

  Advection adv(grid, params.dealias);
  auto N = [&](const Eigen::VectorXcd& u, const Spectrum2D* forcing) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(u.size());
    if (params.nonlinear) {
      Spectrum2D s(grid);
      s.coeffs = u;
      out = -adv(s).coeffs;
    }
    if (forcing) out += forcing->coeffs;
    return out;
  };

  traj.times.reserve(n + 1);
  traj.states.reserve(n + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(u0);
  Eigen::VectorXcd u = u0.coeffs;
  std::optional<Spectrum2D> f0, fh, f1;
  if (control) f1 = control->forcing_at(0.0);
  for (int s = 0; s < n; ++s) {
    const double t = s * dt;
    if (control) {
      f0 = std::move(f1);
      fh = control->forcing_at(t + 0.5 * dt);
      f1 = control->forcing_at(t + dt);
    }
    const Spectrum2D* F0 = control ? &*f0 : nullptr;
    const Spectrum2D* Fh = control ? &*fh : nullptr;
    const Spectrum2D* F1 = control ? &*f1 : nullptr;
    const Eigen::VectorXcd k1 = N(u, F0);
    const Eigen::VectorXcd k2 = N(Eh.cwiseProduct(u + 0.5 * dt * k1), Fh);
    const Eigen::VectorXcd k3 = N(Eh.cwiseProduct(u) + 0.5 * dt * k2, Fh);
    const Eigen::VectorXcd k4 = N(E.cwiseProduct(u) + dt * Eh.cwiseProduct(k3), F1);
    u = E.cwiseProduct(u) +
        (dt / 6.0) * (E.cwiseProduct(k1) + 2.0 * Eh.cwiseProduct(k2 + k3) + k4);
    Spectrum2D st(grid);
    st.coeffs = u;
    detail::check_finite(st, s + 1);
    traj.times.push_back(s + 1 == n ? T : (s + 1) * dt);
    traj.states.push_back(std::move(st));
  }
  return traj;
}

inline Trajectory evolve_nonlinear(const Spectrum2D& u0, std::optional<ControlSolution> control,
                                   double T, const SolverParams& params) {
  std::shared_ptr<const ControlSolution> c;
  if (control) c = std::make_shared<const ControlSolution>(std::move(*control));
  return evolve_nonlinear(u0, c, T, params);
}

/// -int_0^T e^{i(T-t) omega} (u u_x)^(t) dt by Simpson over the recorded
/// states; zero when the trajectory was computed without the nonlinearity.
inline Spectrum2D duhamel_tail(const Trajectory& traj) {
  if (traj.states.size() < 3) throw DomainError("duhamel_tail: need at least 3 recorded states");
  if (traj.states.size() % 2 == 0) throw DomainError("duhamel_tail: need an odd number of states");
  const ModeGrid2D& grid = traj.states.front().grid;
  Spectrum2D acc(grid);
  if (!traj.nonlinear) return acc;
  const double T = traj.times.back();
  const std::size_t n = traj.states.size() - 1;
  const double dt = T / double(n);
  Eigen::VectorXd w(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const auto [k, l] = grid.mode(i);
    w[i] = dispersion(k, l, KP2D{});
  }
  Advection adv(grid, traj.dealias);
  for (std::size_t j = 0; j <= n; ++j) {
    const double t = traj.times[j];
    const Spectrum2D a = adv(traj.states[j]);
    const double wt = simpson_weight(j, n, dt);
    for (int i = 0; i < grid.size(); ++i)
      acc.coeffs[i] -= wt * std::exp(kI * ((T - t) * w[i])) * a.coeffs[i];
  }
  return acc;
}

inline double sup_distance(const Trajectory& a, const Trajectory& b) {
  if (a.states.size() != b.states.size()) throw DomainError("sup_distance: trajectory lengths differ");
  double d = 0.0;
  for (std::size_t j = 0; j < a.states.size(); ++j) {
    Spectrum2D diff = a.states[j];
    diff.coeffs -= b.states[j].coeffs;
    d = std::max(d, norm(diff));
  }
  return d;
}

struct PicardResult {
  ControlSolution control;
  Trajectory traj;
  std::vector<double> history;
  double terminal_miss = 0.0;
};

/// Fixed point of u -> evolve(u0, hum_solve(u0, u1 - tail(u))) started from
/// the linear controlled solution.
inline PicardResult picard_steer(const Spectrum2D& u0, const Spectrum2D& u1, double T,
                                 const SolverParams& params, const BumpProfile& bump,
                                 const HumOptions& hum = {}) {
  params.validate();
  if (!(u0.grid == u1.grid)) throw ConfigError("picard_steer: u0 and u1 on different grids");
  const double bound = params.R * (1.0 + 1e-12);
  if (norm(u0) > bound || norm(u1) > bound)
    throw ConfigError("picard_steer: data norm exceeds solver.R");
  HumOptions inner = hum;
  inner.verify = false;

  std::vector<double> history;
  auto fail = [&](const std::string& why) -> NonConvergenceError {
    return NonConvergenceError("outside contraction regime: " + why, history);
  };

  SolverParams linear = params;
  linear.nonlinear = false;
  auto control = std::make_shared<const ControlSolution>(hum_solve(u0, u1, T, bump, inner));
  Trajectory traj;
  try {
    traj = evolve_nonlinear(u0, control, T, linear);
  } catch (const InstabilityError& e) {
    throw fail(e.what());
  }
  // The starting guess is the linear solution; its tail is taken with the
  // model's nonlinearity.
  traj.nonlinear = params.nonlinear;

  for (int m = 0; m < params.max_picard; ++m) {
    Spectrum2D target = u1;
    target.coeffs -= duhamel_tail(traj).coeffs;
    auto next_control = std::make_shared<const ControlSolution>(hum_solve(u0, target, T, bump, inner));
    Trajectory next;
    try {
      next = evolve_nonlinear(u0, next_control, T, params);
    } catch (const InstabilityError& e) {
      throw fail(e.what());
    }
    const double d = sup_distance(next, traj);
    history.push_back(d);
    traj = std::move(next);
    control = std::move(next_control);
    if (!std::isfinite(d)) throw fail("non-finite Picard distance");
    if (d < params.picard_tol) {
      PicardResult r{*control, std::move(traj), std::move(history)};
      if (hum.verify) {
        const auto v = steer_verify(u0, target, r.control);
        r.control.residual = v.residual;
        r.control.verify_intervals = v.intervals;
        r.control.verify_change = v.last_change;
      }
      Spectrum2D miss = r.traj.final_state();
      miss.coeffs -= u1.coeffs;
      r.terminal_miss = norm(miss) / std::max(norm(u1), 1e-30);
      return r;
    }
    const std::size_t h = history.size();
    if (h >= 3 && history[h - 1] > history[h - 2]) throw fail("Picard distances increased");
  }
  throw fail("no convergence after " + std::to_string(params.max_picard) + " iterations");
}

}  // namespace kplab
