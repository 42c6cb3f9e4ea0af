#pragma once

// Gaussian wave packets for i h d_t v + h^2 d_y^2 v = 0, their lift to
// linearized KP-II as e^{i t/h^3} e^{i n x} v(t,y) with n = 1/h, and the
// observability quotient of a horizontal strip along the packet sequence.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "kplab/control_ops.hpp"
#include "kplab/errors.hpp"
#include "kplab/parallel.hpp"
#include "kplab/quadrature.hpp"
#include "kplab/spectral_core.hpp"

namespace kplab {

/// g^eps(k) = (1/2pi) int_{-pi}^{pi} eps^{-1/2} e^{-x^2/(2 eps^2)} e^{-ikx} dx.
inline double gaussian_coeff(double eps, int k) {
  if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("gaussian_coeff: need 0 < eps <= 1");
  const double ek = eps * std::abs(k);
  std::size_t n = std::size_t(std::ceil(4.0 * (ek + 10.0) / eps));
  n = std::max<std::size_t>(512, n + n % 2);
  const double zmax = kPi / eps;
  const double s = simpson([&](double z) { return std::exp(-0.5 * z * z) * std::cos(ek * z); },
                           -zmax, zmax, n);
  return std::sqrt(eps) / kTwoPi * s;
}

/// ||G^eps||_{L^2(R)} = pi^{1/4} for every eps.
inline double gaussian_l2_norm() { return std::pow(kPi, 0.25); }

/// Even C^2 cutoff: 1 on [-b, b], 0 outside (-B, B), quintic smoothstep between.
inline double plateau_cutoff(double s, double b, double B) {
  const double a = std::abs(s);
  if (a <= b) return 1.0;
  if (a >= B) return 0.0;
  const double t = (a - b) / (B - b);
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

struct WavePacket {
  int n = 0;
  double h = 0.0;
  double eps = 0.0;
  double B = 0.0;
  double b_small = 0.0;
  int K_pkt = 0;
  Spectrum1D coeffs{ModeGrid1D(1, true)};
  double off_band_mass = 0.0;
  double off_band_bound = 0.0;

  double mass() const { return norm(coeffs); }
};

namespace detail {
/// sum_{k >= m+1} 1/k^2.
inline double inverse_square_tail(long m) {
  double partial = 0.0;
  for (long k = m; k >= 1; --k) partial += 1.0 / (double(k) * k);
  return std::max(0.0, kPi * kPi / 6.0 - partial);
}
}  // namespace detail

inline WavePacket build_packet(int n, double B, double b_small, int K_pkt) {
  if (n < 2) throw ConfigError("build_packet: n must be >= 2");
  if (!(b_small > 0.0 && b_small < B)) throw ConfigError("build_packet: need 0 < b_small < B");
  if (K_pkt < B * n) throw ConfigError("build_packet: K_pkt must be >= B n to hold the cutoff");
  WavePacket p;
  p.n = n;
  p.h = 1.0 / n;
  p.eps = std::sqrt(p.h);
  p.B = B;
  p.b_small = b_small;
  p.K_pkt = K_pkt;
  p.coeffs = Spectrum1D(ModeGrid1D(K_pkt, true));
  for (int k = -K_pkt; k <= K_pkt; ++k)
    p.coeffs.coeffs[p.coeffs.grid.index(k)] =
        gaussian_coeff(p.eps, k) * plateau_cutoff(p.h * k, b_small, B);

  // Gaussian coefficients beyond 40/eps are below 1e-300.
  const long m = long(std::floor(b_small / p.h));
  const long kmax = m + long(std::ceil(40.0 / p.eps));
  for (long k = m + 1; k <= kmax; ++k) p.off_band_mass += 2.0 * std::pow(gaussian_coeff(p.eps, int(k)), 2);
  const double gp_l1 = 2.0;  // ||G'||_{L^1(R)} for G = e^{-x^2/2}
  p.off_band_bound = gp_l1 * gp_l1 / (4.0 * kPi * kPi * p.eps) * 2.0 * detail::inverse_square_tail(m);
  return p;
}

inline Spectrum1D schrodinger_evolve(const WavePacket& p, double t) {
  return propagate_linear(p.coeffs, t, Schrodinger{p.h});
}

/// Column k = n of a 2D spectrum carries the packet: uhat(n, l) = c_l.
inline Spectrum2D lift_packet(const WavePacket& p, const ModeGrid2D& grid) {
  if (p.n > grid.K()) throw ConfigError("lift_packet: packet column n exceeds the grid K");
  if (p.K_pkt > grid.L()) throw ConfigError("lift_packet: packet frequencies exceed the grid L");
  Spectrum2D u(grid);
  for (int l = -p.K_pkt; l <= p.K_pkt; ++l) u.coeffs[grid.index(p.n, l)] = coeff(p.coeffs, l);
  return u;
}

/// Largest |e^{i t omega(n,l)} - e^{i t/h^3} e^{-i h l^2 t}| over the packet rows.
inline double lift_phase_defect(const WavePacket& p, double t) {
  double worst = 0.0;
  for (int l = -p.K_pkt; l <= p.K_pkt; ++l) {
    const cplx kp = std::exp(kI * (t * dispersion(p.n, l, KP2D{})));
    const cplx tensor = std::exp(kI * (t * (double(p.n) * p.n * p.n))) *
                        std::exp(kI * (t * dispersion(l, Schrodinger{p.h})));
    worst = std::max(worst, std::abs(kp - tensor));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Observability quotient

struct QuotientRow {
  int n = 0;
  double h = 0.0;
  double eps = 0.0;
  double mass = 0.0;
  double Q = 0.0;
  double Q_refined = 0.0;
  double sup_omega = 0.0;
  double Q_vertical = 0.0;
};

struct QuotientOptions {
  double samples_per_unit_time = 128.0;
  int ny = 0;  // physical y samples; 0 picks a default from the packet width
};

namespace detail {

inline void check_horizontal_bump(const BumpProfile& bump, double alpha) {
  for (const auto& p : bump.pieces())
    if (!(p.a >= alpha || p.b <= -alpha))
      throw ConfigError("observability_quotient: bump overlaps [-alpha, alpha]");
}

inline int quotient_ny(const WavePacket& p, int requested) {
  if (requested > 0) return requested;
  int ny = 1024;
  while (ny < 16 * p.K_pkt) ny *= 2;
  return ny;
}

/// ||G v||^2 on T with G applied in physical space, trapezoid in y.
inline double applied_norm_sq(const BumpProfile& bump, const Samples1D& v) {
  const auto w = apply_control_op(bump, v);
  return w.values.squaredNorm() * kTwoPi / v.size();
}

inline double quotient_1d(const WavePacket& p, const BumpProfile& bump, double T, int nt, int ny) {
  const double dt = T / nt;
  std::vector<double> vals(nt + 1);
  for (int j = 0; j <= nt; ++j)
    vals[j] = applied_norm_sq(bump, to_physical(schrodinger_evolve(p, j * dt), ny));
  const double m = p.mass();
  return simpson_samples(std::span<const double>(vals), dt) / (m * m);
}

}  // namespace detail

/// Q for the lifted 2D field with G acting in y on the full (x, y) grid,
/// global phase e^{it/h^3} included.
inline double quotient_from_lift(const WavePacket& p, const BumpProfile& bump, double T,
                                 const QuotientOptions& opts = {}) {
  const ModeGrid2D grid(p.n, p.K_pkt);
  const Spectrum2D u0 = lift_packet(p, grid);
  const int nx = 2 * p.n + 2, ny = detail::quotient_ny(p, opts.ny);
  const int nt = std::max(2, 2 * int(std::ceil(0.5 * opts.samples_per_unit_time * T)));
  const double dt = T / nt;
  Transform2D tr(nx, ny);
  std::vector<double> vals(nt + 1);
  for (int j = 0; j <= nt; ++j) {
    const auto s = tr.to_physical(propagate_linear(u0, j * dt));
    const auto w = apply_control_op(bump, Orientation::horizontal, s, grid);
    vals[j] = w.values.squaredNorm() * (kTwoPi / nx) * (kTwoPi / ny);
  }
  const double m = norm(u0);
  return simpson_samples(std::span<const double>(vals), dt) / (m * m);
}

/// Q for the vertical operator acting in x on the same lifted packet:
/// T ||g (e^{inx} - int g e^{inx'})||^2 / 2pi, quadrature in x.
inline double vertical_quotient(int n, const BumpProfile& bump, double T, int nx = 4096) {
  Samples1D e{Eigen::VectorXcd(nx)};
  for (int j = 0; j < nx; ++j) e.values[j] = std::exp(kI * (n * Samples1D::x(j, nx)));
  return T * detail::applied_norm_sq(bump, e) / kTwoPi;
}

/// Largest |v(t, y)| over samples y in the complement of [-alpha, alpha].
inline double sup_outside(const WavePacket& p, double t, double alpha, int ny) {
  const auto v = to_physical(schrodinger_evolve(p, t), ny);
  double s = 0.0;
  for (int j = 0; j < ny; ++j)
    if (std::abs(Samples1D::x(j, ny)) > alpha) s = std::max(s, std::abs(v.values[j]));
  return s;
}

inline std::vector<QuotientRow> observability_quotient(const std::vector<int>& n_list, double T,
                                                       double alpha, const BumpProfile& bump,
                                                       double B, double b_small,
                                                       const QuotientOptions& opts = {},
                                                       int threads = 0) {
  if (!(T > 0.0)) throw ConfigError("observability_quotient: T must be positive");
  if (!(alpha > 0.0 && alpha < kPi)) throw ConfigError("observability_quotient: need 0 < alpha < pi");
  detail::check_horizontal_bump(bump, alpha);
  const int nt = std::max(2, 2 * int(std::ceil(0.5 * opts.samples_per_unit_time * T)));
  return parallel_map<QuotientRow>(
      int(n_list.size()),
      [&](int i) {
        const int n = n_list[i];
        const auto p = build_packet(n, B, b_small, std::max(1, int(std::ceil(B * n))));
        const int ny = detail::quotient_ny(p, opts.ny);
        QuotientRow r;
        r.n = n;
        r.h = p.h;
        r.eps = p.eps;
        r.mass = p.mass();
        r.Q = detail::quotient_1d(p, bump, T, nt, ny);
        r.Q_refined = detail::quotient_1d(p, bump, T, 2 * nt, ny);
        r.sup_omega = sup_outside(p, T, alpha, ny);
        r.Q_vertical = vertical_quotient(n, bump, T);
        return r;
      },
      threads);
}

/// |int_T g(y) v(t, y) dy| by quadrature.
inline double normalization_term(const WavePacket& p, const BumpProfile& bump, double t, int ny) {
  const auto v = to_physical(schrodinger_evolve(p, t), ny);
  cplx s = 0.0;
  for (int j = 0; j < ny; ++j) s += bump(Samples1D::x(j, ny)) * v.values[j];
  return std::abs(s * (kTwoPi / ny));
}

/// sqrt(eps) ||g|| sqrt(2M+1) + sqrt(2pi) ||G^eps|| (sum_{|k|>M} |ghat(k)|^2)^{1/2}.
inline double normalization_bound(const WavePacket& p, const BumpProfile& bump, int M) {
  if (M > bump.m_max()) throw ConfigError("normalization_bound: M exceeds the bump coefficients");
  const double g2 = bump.l2_norm_squared();
  double low = 0.0;
  for (int k = -M; k <= M; ++k) low += std::norm(bump.coeff(k));
  const double tail = std::max(0.0, g2 / kTwoPi - low);
  return std::sqrt(p.eps) * std::sqrt(g2) * std::sqrt(2.0 * M + 1.0) +
         std::sqrt(kTwoPi) * gaussian_l2_norm() * std::sqrt(tail);
}

}  // namespace kplab
