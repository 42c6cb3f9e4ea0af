#pragma once

// HUM synthesis for the linearized equation with the vertical control
//   d_t uhat = i omega uhat + M hhat(t)   on each transverse row l.
// Gramian  Lambda_l = int_0^T e^{i(T-t)omega} M M^* e^{-i(T-t)omega} dt,
// control  hhat_l(t) = M^* e^{-i(T-t)omega} phi_l  with  Lambda_l phi_l = defect_l.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>

#include "kplab/control_ops.hpp"
#include "kplab/errors.hpp"
#include "kplab/hermitian.hpp"
#include "kplab/parallel.hpp"
#include "kplab/spectral_core.hpp"

namespace kplab {

/// int_0^T e^{i s delta} ds.
inline cplx time_kernel(double delta, double T) {
  if (std::abs(delta) * T < 1e-12) return T;
  return (std::exp(kI * (T * delta)) - 1.0) / (kI * delta);
}

struct GramianBlock {
  double lambda = 0.0;
  double T = 0.0;
  Eigen::MatrixXcd matrix;
  double min_eig = 0.0;
  double max_eig = 0.0;
  Eigen::VectorXcd min_vec;

  double condition() const {
    return min_eig > 0.0 ? max_eig / min_eig : std::numeric_limits<double>::infinity();
  }
};

/// Gramian matrix (M M^*) o R without eigen-data.
inline Eigen::MatrixXcd gramian_matrix(const ControlMatrix& M, const Eigen::VectorXd& omega,
                                       double T) {
  const Eigen::MatrixXcd mm = M.matrix * M.adjoint;
  const int n = int(mm.rows());
  Eigen::MatrixXcd G(n, n);
  for (int r = 0; r < n; ++r) {
    G(r, r) = T * mm(r, r);
    for (int c = r + 1; c < n; ++c) {
      G(r, c) = mm(r, c) * time_kernel(omega[r] - omega[c], T);
      G(c, r) = std::conj(G(r, c));
    }
  }
  return G;
}

inline GramianBlock gramian_block(const ControlMatrix& M, double lambda, double T) {
  if (!(T > 0.0)) throw ConfigError("gramian_block: T must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("gramian_block: lambda must be non-negative");
  GramianBlock b;
  b.lambda = lambda;
  b.T = T;
  b.matrix = gramian_matrix(M, lambda_frequencies(M.grid(), lambda), T);
  const auto e = jacobi_eigen(b.matrix);
  b.min_eig = e.values[0];
  b.max_eig = e.values[e.values.size() - 1];
  b.min_vec = e.vectors.col(0);
  return b;
}

// ---------------------------------------------------------------------------
// Block solves

namespace detail {

/// Cholesky with iterative refinement.
inline Eigen::VectorXcd solve_llt(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b) {
  Eigen::LLT<Eigen::MatrixXcd> llt(A);
  if (llt.info() != Eigen::Success)
    throw UnobservableError("numerically unobservable at this truncation (Cholesky failed)");
  Eigen::VectorXcd x = llt.solve(b);
  const double bn = b.norm();
  for (int it = 0; it < 3 && bn > 0.0; ++it) {
    const Eigen::VectorXcd r = b - A * x;
    if (r.norm() <= 1e-15 * bn) break;
    x += llt.solve(r);
  }
  return x;
}

inline Eigen::VectorXcd solve_cg(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b) {
  Eigen::ConjugateGradient<Eigen::MatrixXcd, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<cplx>>
      cg;
  cg.setTolerance(1e-12);
  cg.setMaxIterations(10 * int(A.rows()));
  cg.compute(A);
  Eigen::VectorXcd x = cg.solve(b);
  if (cg.info() != Eigen::Success)
    throw UnobservableError("numerically unobservable at this truncation (CG did not converge)");
  return x;
}

inline Eigen::VectorXcd solve_gramian(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b) {
  if (b.squaredNorm() == 0.0) return Eigen::VectorXcd::Zero(b.size());
  return A.rows() <= 64 ? solve_llt(A, b) : solve_cg(A, b);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Control solution

struct ControlSolution {
  ModeGrid2D grid{1, 0};
  double T = 0.0;
  ControlMatrix M;
  std::vector<Eigen::VectorXd> omega;  // per row, index l + L
  std::vector<Eigen::VectorXcd> phi;   // per row
  std::vector<double> min_eig;         // per row
  std::vector<double> max_eig;         // per row

  std::vector<double> control_times;
  std::vector<Spectrum2D> control_coeffs;

  double residual = 0.0;
  double control_norm = 0.0;
  double condition = 0.0;
  double defect_norm = 0.0;
  /// Upper bound ||defect|| / sqrt(min_l min_eig) on control_norm.
  double norm_bound = 0.0;
  /// (T / min_l min_eig)^{1/2} ||defect|| ||M||; reported, not guaranteed.
  double norm_bound_T = 0.0;
  int verify_intervals = 0;
  double verify_change = 0.0;

  double smallest_eig() const { return *std::min_element(min_eig.begin(), min_eig.end()); }

  /// hhat(t) on the 2D grid.
  Spectrum2D control_at(double t) const {
    Spectrum2D h(grid);
    Eigen::VectorXcd w(grid.row_size());
    for (int r = 0; r < grid.rows(); ++r) {
      if (phi[r].squaredNorm() == 0.0) continue;
      for (int i = 0; i < w.size(); ++i)
        w[i] = std::exp(-kI * ((T - t) * omega[r][i])) * phi[r][i];
      h.coeffs.segment(r * grid.row_size(), grid.row_size()) = M.adjoint * w;
    }
    return h;
  }

  /// (G h)^ at time t.
  Spectrum2D forcing_at(double t) const { return apply_rows(control_at(t)); }

  Spectrum2D apply_rows(const Spectrum2D& h) const {
    Spectrum2D f(grid);
    const int n = grid.row_size();
    for (int r = 0; r < grid.rows(); ++r)
      f.coeffs.segment(r * n, n) = M.matrix * h.coeffs.segment(r * n, n);
    return f;
  }
};

struct HumOptions {
  double samples_per_unit_time = 64.0;  // exported control samples
  bool verify = true;
  bool monolithic = false;
  int threads = 0;
};

/// e^{i T omega} u0 row by row, identical to propagate_linear.
inline Spectrum2D free_evolution(const Spectrum2D& u0, double T) { return propagate_linear(u0, T); }

/// Terminal state by composite Simpson over control samples with adaptive
/// doubling; the time integral of the Gramian is not used.
struct SteerResult {
  Spectrum2D terminal;
  double residual = 0.0;
  int intervals = 0;
  double last_change = 0.0;
};

inline Spectrum2D duhamel_forcing_simpson(const ControlSolution& sol, int n) {
  const ModeGrid2D& grid = sol.grid;
  const double T = sol.T;
  const double dt = T / n;
  Spectrum2D acc(grid);
  for (int j = 0; j <= n; ++j) {
    const double t = j * dt;
    const double w = simpson_weight(std::size_t(j), std::size_t(n), dt);
    const Spectrum2D f = sol.forcing_at(t);
    for (int i = 0; i < grid.size(); ++i) {
      const auto [k, l] = grid.mode(i);
      acc.coeffs[i] += w * std::exp(kI * ((T - t) * dispersion(k, l, KP2D{}))) * f.coeffs[i];
    }
  }
  return acc;
}

inline SteerResult steer_verify(const Spectrum2D& u0, const Spectrum2D& u1,
                                const ControlSolution& sol, double tol = 1e-8,
                                int max_intervals = 1 << 20) {
  if (!(u0.grid == sol.grid) || !(u1.grid == sol.grid))
    throw ConfigError("steer_verify: spectra and control on different grids");
  const Spectrum2D free = free_evolution(u0, sol.T);
  const double u1n = std::max(norm(u1), 1e-30);
  SteerResult out{free};
  bool any = false;
  for (const auto& p : sol.phi) any = any || p.squaredNorm() > 0.0;
  if (!any) {
    Spectrum2D diff = free;
    diff.coeffs -= u1.coeffs;
    out.residual = norm(diff) / u1n;
    return out;
  }
  int n = std::max(2, 2 * int(std::ceil(0.5 * 64.0 * sol.T)));
  Spectrum2D prev = duhamel_forcing_simpson(sol, n);
  for (;;) {
    const int next = 2 * n;
    Spectrum2D fine = duhamel_forcing_simpson(sol, next);
    Spectrum2D d = fine;
    d.coeffs -= prev.coeffs;
    out.last_change = norm(d);
    n = next;
    prev = std::move(fine);
    const double scale = std::max(norm(prev), 1e-300);
    if (out.last_change <= tol * scale || n >= max_intervals) break;
  }
  out.intervals = n;
  out.terminal.coeffs += prev.coeffs;
  Spectrum2D diff = out.terminal;
  diff.coeffs -= u1.coeffs;
  out.residual = norm(diff) / u1n;
  return out;
}

namespace detail {

inline Eigen::VectorXd row_frequencies(const ModeGrid2D& grid, int l) {
  Eigen::VectorXd w(grid.row_size());
  for (int i = 0; i < w.size(); ++i) w[i] = dispersion(grid.k_of(i), l, KP2D{});
  return w;
}

inline void check_observable(double min_eig, double max_eig, int l) {
  if (!(min_eig >= 1e-14 * std::max(max_eig, 1e-300)))
    throw UnobservableError("numerically unobservable at this truncation (row l=" +
                            std::to_string(l) + ", min_eig=" + std::to_string(min_eig) + ")");
}

}  // namespace detail

/// Exact steering u0 -> u1 in time T by the minimal-norm control of the
/// vertical operator built from bump.
inline ControlSolution hum_solve(const Spectrum2D& u0, const Spectrum2D& u1, double T,
                                 const BumpProfile& bump, const HumOptions& opts = {}) {
  if (!(u0.grid == u1.grid)) throw ConfigError("hum_solve: u0 and u1 on different grids");
  if (!(T > 0.0)) throw ConfigError("hum_solve: T must be positive");
  const ModeGrid2D grid = u0.grid;
  const int rows = grid.rows(), n = grid.row_size(), L = grid.L();

  ControlSolution sol;
  sol.grid = grid;
  sol.T = T;
  sol.M = control_matrix(bump, grid.K());
  sol.omega.resize(rows);
  sol.phi.resize(rows);
  sol.min_eig.resize(rows);
  sol.max_eig.resize(rows);

  Spectrum2D defect = u1;
  defect.coeffs -= free_evolution(u0, T).coeffs;
  sol.defect_norm = norm(defect);

  std::vector<Eigen::MatrixXcd> blocks(rows);
  parallel_for(
      rows,
      [&](int r) {
        const int l = r - L;
        sol.omega[r] = detail::row_frequencies(grid, l);
        blocks[r] = gramian_matrix(sol.M, sol.omega[r], T);
        const auto e = jacobi_eigen(blocks[r]);
        sol.min_eig[r] = e.values[0];
        sol.max_eig[r] = e.values[e.values.size() - 1];
        detail::check_observable(sol.min_eig[r], sol.max_eig[r], l);
        if (!opts.monolithic)
          sol.phi[r] = detail::solve_gramian(blocks[r], defect.coeffs.segment(r * n, n));
      },
      opts.threads);

  if (opts.monolithic) {
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(grid.size(), grid.size());
    for (int r = 0; r < rows; ++r) full.block(r * n, r * n, n, n) = blocks[r];
    const Eigen::VectorXcd phi = grid.size() <= 64 ? detail::solve_llt(full, defect.coeffs)
                                                   : detail::solve_cg(full, defect.coeffs);
    for (int r = 0; r < rows; ++r) sol.phi[r] = phi.segment(r * n, n);
  }

  double q = 0.0;
  sol.condition = 0.0;
  for (int r = 0; r < rows; ++r) {
    q += std::max(0.0, sol.phi[r].dot(blocks[r] * sol.phi[r]).real());
    sol.condition = std::max(sol.condition, sol.max_eig[r] / sol.min_eig[r]);
  }
  sol.control_norm = kTwoPi * std::sqrt(q);
  sol.norm_bound = sol.defect_norm / std::sqrt(sol.smallest_eig());
  sol.norm_bound_T = std::sqrt(T / sol.smallest_eig()) * sol.defect_norm *
                     spectral_norm_power(sol.M.matrix);

  const int ns = std::max(2, 2 * int(std::ceil(0.5 * opts.samples_per_unit_time * T)));
  for (int j = 0; j <= ns; ++j) {
    const double t = T * j / ns;
    sol.control_times.push_back(t);
    sol.control_coeffs.push_back(sol.control_at(t));
  }

  if (opts.verify) {
    const auto v = steer_verify(u0, u1, sol);
    sol.residual = v.residual;
    sol.verify_intervals = v.intervals;
    sol.verify_change = v.last_change;
  }
  return sol;
}

}  // namespace kplab
