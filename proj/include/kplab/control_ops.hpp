#pragma once

// Localization profile g and the control operators
//   vertical:   (G h)(x,y) = g(x) (h(x,y) - int g(x') h(x',y) dx')
//   horizontal: (G h)(x,y) = g(y) (h(x,y) - int g(y') h(x,y') dy')
// in physical and Fourier form.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kplab/errors.hpp"
#include "kplab/quadrature.hpp"
#include "kplab/spectral_core.hpp"

namespace kplab {

enum class Orientation { vertical, horizontal };

inline std::string to_string(Orientation o) {
  return o == Orientation::vertical ? "vertical" : "horizontal";
}

/// One polynomial bump weight * c * (1 - s^2)^3 on [a, b], s = (2x-a-b)/(b-a),
/// with c chosen so that the piece integrates to weight.
struct BumpPiece {
  double a = 0.0;
  double b = 0.0;
  double weight = 1.0;

  double operator()(double x) const {
    if (x <= a || x >= b) return 0.0;
    const double s = (2.0 * x - a - b) / (b - a);
    const double q = 1.0 - s * s;
    return weight * (35.0 / (16.0 * (b - a))) * q * q * q;
  }
};

/// Non-negative C^2 profile with int_T g = 1 and its Fourier coefficients
/// ghat(m), |m| <= m_max.
class BumpProfile {
 public:
  BumpProfile(std::vector<BumpPiece> pieces, int m_max, int n_quad = 4096)
      : pieces_(std::move(pieces)), m_max_(m_max) {
    if (pieces_.empty()) throw ConfigError("BumpProfile: no pieces");
    for (const auto& p : pieces_) {
      if (!(p.a < p.b)) throw ConfigError("BumpProfile: strip requires a < b");
      if (p.a < -kPi - 1e-15 || p.b > kPi + 1e-15)
        throw ConfigError("BumpProfile: strip must lie inside [-pi, pi]");
    }
    if (m_max < 0) throw ConfigError("BumpProfile: m_max must be non-negative");
    compute_coefficients(n_quad);
  }

  /// Overall extent (first piece for multi-piece profiles).
  double a() const { return pieces_.front().a; }
  double b() const { return pieces_.front().b; }
  const std::vector<BumpPiece>& pieces() const { return pieces_; }
  int m_max() const { return m_max_; }
  int n_quad() const { return n_quad_; }

  double operator()(double x) const {
    const double xw = wrap_angle(x);
    double s = 0.0;
    for (const auto& p : pieces_) s += p(xw) + p(xw + kTwoPi) + p(xw - kTwoPi);
    return s;
  }

  cplx coeff(int m) const {
    if (std::abs(m) > m_max_)
      throw ConfigError("BumpProfile: coefficient " + std::to_string(m) +
                        " requested beyond m_max=" + std::to_string(m_max_));
    return coeffs_[m + m_max_];
  }

  /// int_T g dx computed by the same quadrature as the coefficients.
  double integral() const { return kTwoPi * coeffs_[m_max_].real(); }

  /// int_T g^2 dx by composite Simpson.
  double l2_norm_squared(int n = 1 << 14) const {
    double s = 0.0;
    for (const auto& p : pieces_)
      s += simpson([&](double x) { return p(x) * p(x); }, p.a, p.b, std::size_t(n));
    return s;
  }

 private:
  std::vector<cplx> coefficients_at(int n) const {
    std::vector<cplx> c(2 * m_max_ + 1, cplx{});
    for (const auto& p : pieces_) {
      const double dx = (p.b - p.a) / n;
      for (int i = 0; i <= n; ++i) {
        const double x = p.a + dx * i;
        const double w = simpson_weight(std::size_t(i), std::size_t(n), dx) * p(x) / kTwoPi;
        if (w == 0.0) continue;
        const cplx step = std::exp(-kI * x);
        cplx z = 1.0;
        c[m_max_] += w;
        for (int m = 1; m <= m_max_; ++m) {
          z *= step;
          c[m_max_ + m] += w * z;
          c[m_max_ - m] += w * std::conj(z);
        }
      }
    }
    return c;
  }

  void compute_coefficients(int n_quad) {
    int n = std::max(2, n_quad + (n_quad % 2));
    auto coarse = coefficients_at(n);
    for (int level = 0; level < 8; ++level) {
      auto fine = coefficients_at(2 * n);
      double diff = 0.0;
      for (std::size_t i = 0; i < fine.size(); ++i) diff = std::max(diff, std::abs(fine[i] - coarse[i]));
      n *= 2;
      coarse = std::move(fine);
      if (diff <= 1e-12) break;
    }
    n_quad_ = n;
    coeffs_ = std::move(coarse);
  }

  std::vector<BumpPiece> pieces_;
  int m_max_;
  int n_quad_ = 0;
  std::vector<cplx> coeffs_;
};

/// Single strip (a, b) with coefficients for |m| <= 2K+1.
inline BumpProfile make_bump(double a, double b, int K, int n_quad = 4096) {
  if (!(a < b)) throw ConfigError("make_bump: need a < b (strip.a, strip.b)");
  if (a < -kPi || b > kPi) throw ConfigError("make_bump: need -pi <= a < b <= pi");
  return BumpProfile({BumpPiece{a, b, 1.0}}, 2 * K + 1, n_quad);
}

/// Two mirrored bumps on (a, b) and (-b, -a) sharing int g = 1.
inline BumpProfile make_two_sided_bump(double a, double b, int K, int n_quad = 4096) {
  if (!(a > 0.0 && a < b && b <= kPi))
    throw ConfigError("make_two_sided_bump: need 0 < a < b <= pi");
  return BumpProfile({BumpPiece{a, b, 0.5}, BumpPiece{-b, -a, 0.5}}, 2 * K + 1, n_quad);
}

/// Mirrored bumps on (alpha, pi) and (-pi, -alpha).
inline BumpProfile make_two_sided_bump(double alpha, int K, int n_quad = 4096) {
  if (!(alpha > 0.0 && alpha < kPi)) throw ConfigError("make_two_sided_bump: need 0 < alpha < pi");
  return make_two_sided_bump(alpha, kPi, K, n_quad);
}

// ---------------------------------------------------------------------------
// Physical-space application
//
// The inner integral int g h uses trapezoid weights g(x_j) dx rescaled so that
// they sum to exactly 1 on the sample grid. Constants are then annihilated and
// the output mean vanishes to round-off at any resolution.

namespace detail {
inline Eigen::VectorXcd normalized_weights(const Eigen::VectorXd& gv) {
  return (gv / gv.sum()).cast<cplx>();
}
}  // namespace detail

/// G applied to samples along one periodic direction.
inline Samples1D apply_control_op(const BumpProfile& g, const Samples1D& h) {
  const int N = h.size();
  if (N < 2) throw ConfigError("apply_control_op: need at least 2 samples");
  Eigen::VectorXd gv(N);
  for (int j = 0; j < N; ++j) gv[j] = g(Samples1D::x(j, N));
  const cplx mean = detail::normalized_weights(gv).cwiseProduct(h.values).sum();
  Samples1D out{Eigen::VectorXcd(N)};
  for (int j = 0; j < N; ++j) out.values[j] = gv[j] * (h.values[j] - mean);
  return out;
}

inline Samples2D apply_control_op(const BumpProfile& g, Orientation orientation,
                                  const Samples2D& h, const ModeGrid2D& grid) {
  const int nx = h.nx(), ny = h.ny();
  if (nx < 2 * grid.K() + 2 || ny < 2 * grid.L() + 2)
    throw ConfigError("apply_control_op: sample grid inconsistent with the mode grid");
  Samples2D out{Eigen::MatrixXcd(nx, ny)};
  if (orientation == Orientation::vertical) {
    Eigen::VectorXd gv(nx);
    for (int i = 0; i < nx; ++i) gv[i] = g(Samples1D::x(i, nx));
    const Eigen::VectorXcd w = detail::normalized_weights(gv);
    for (int j = 0; j < ny; ++j) {
      const cplx mean = w.cwiseProduct(h.values.col(j)).sum();
      for (int i = 0; i < nx; ++i) out.values(i, j) = gv[i] * (h.values(i, j) - mean);
    }
  } else {
    Eigen::VectorXd gv(ny);
    for (int j = 0; j < ny; ++j) gv[j] = g(Samples1D::x(j, ny));
    const Eigen::VectorXcd w = detail::normalized_weights(gv);
    for (int i = 0; i < nx; ++i) {
      const cplx mean = w.cwiseProduct(h.values.row(i).transpose()).sum();
      for (int j = 0; j < ny; ++j) out.values(i, j) = gv[j] * (h.values(i, j) - mean);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fourier-side matrix

/// Fourier matrix of the vertical operator on modes k, k1 in {-K..K}\{0},
/// ordered as ModeGrid1D(K):
///   M(k,k1) = ghat(k-k1) - 2 pi ghat(k) ghat(-k1).
struct ControlMatrix {
  int K = 0;
  Eigen::MatrixXcd matrix;
  Eigen::MatrixXcd adjoint;

  ModeGrid1D grid() const { return ModeGrid1D(K, false); }
};

inline ControlMatrix control_matrix(const BumpProfile& g, int K) {
  if (K < 1) throw ConfigError("control_matrix: K must be positive");
  if (g.m_max() < 2 * K)
    throw ConfigError("control_matrix: bump coefficients needed up to |m| = 2K");
  const ModeGrid1D grid(K, false);
  ControlMatrix cm{K, Eigen::MatrixXcd(grid.size(), grid.size()), {}};
  for (int r = 0; r < grid.size(); ++r) {
    const int k = grid.mode(r);
    for (int c = 0; c < grid.size(); ++c) {
      const int k1 = grid.mode(c);
      cm.matrix(r, c) = g.coeff(k - k1) - kTwoPi * g.coeff(k) * g.coeff(-k1);
    }
  }
  cm.adjoint = cm.matrix.adjoint();
  return cm;
}

// ---------------------------------------------------------------------------
// Commutator [chi(hD), g] scaling

using Cutoff = std::function<double(double)>;

/// 0 for |xi| <= 1, 1 for |xi| >= 2, cubic smoothstep in between.
inline Cutoff high_pass_cutoff() {
  return [](double xi) {
    const double a = std::abs(xi);
    if (a <= 1.0) return 0.0;
    if (a >= 2.0) return 1.0;
    const double t = a - 1.0;
    return t * t * (3.0 - 2.0 * t);
  };
}

struct CommutatorRow {
  double h = 0.0;
  double norm = 0.0;
  int K_big = 0;
};

/// Spectral norm of a matrix by power iteration on A^* A.
inline double spectral_norm_power(const Eigen::MatrixXcd& A, int max_iter = 20000,
                                  double rtol = 1e-12, unsigned seed = 7) {
  if (A.size() == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXcd v(A.cols());
  for (int i = 0; i < v.size(); ++i) v[i] = cplx(nd(rng), nd(rng));
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXcd w = A.adjoint() * (A * v);
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    const double next = std::sqrt(n);
    v = w / n;
    if (std::abs(next - est) <= rtol * next) return next;
    est = next;
  }
  return est;
}

/// Norm of [chi(hD), g] on L^2(T) for each h. Modes with |k| >= 2/h see
/// chi = 1 and only couple to modes inside |k| <= ceil(2/h), so the matrix on
/// that range carries the whole operator.
inline std::vector<CommutatorRow> commutator_scaling(const std::function<cplx(int)>& ghat,
                                                     const Cutoff& chi,
                                                     const std::vector<double>& h_list) {
  std::vector<CommutatorRow> rows;
  for (double h : h_list) {
    if (!(h > 0.0)) throw DomainError("commutator_scaling: h must be positive");
    const int K_big = int(std::ceil(2.0 / h)) + 1;
    const int n = 2 * K_big + 1;
    Eigen::MatrixXcd C(n, n);
    for (int r = 0; r < n; ++r) {
      const int k = r - K_big;
      for (int c = 0; c < n; ++c) {
        const int k1 = c - K_big;
        C(r, c) = (chi(h * k) - chi(h * k1)) * ghat(k - k1);
      }
    }
    rows.push_back({h, spectral_norm_power(C), K_big});
  }
  return rows;
}

inline std::vector<CommutatorRow> commutator_scaling(const BumpProfile& g, const Cutoff& chi,
                                                     const std::vector<double>& h_list) {
  return commutator_scaling([&](int m) { return g.coeff(m); }, chi, h_list);
}

/// Profile needed by commutator_scaling at the smallest h of the list.
inline int commutator_coefficient_range(const std::vector<double>& h_list) {
  double hmin = *std::min_element(h_list.begin(), h_list.end());
  return 2 * (int(std::ceil(2.0 / hmin)) + 1);
}

}  // namespace kplab
