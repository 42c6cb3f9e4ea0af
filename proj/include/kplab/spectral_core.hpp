#pragma once

// Mode grids, dispersion relations, exact linear propagators, physical <->
// spectral transforms, norms and the explicit ray flows.
//
// Fourier convention used everywhere in kplab:
//   f(x) = sum_k fhat(k) e^{ikx},   fhat(k) = (1/2pi) int_T f(x) e^{-ikx} dx
// and physical grids are x_j = -pi + 2 pi j / N, j = 0..N-1.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "kplab/errors.hpp"

namespace kplab {

using cplx = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Reduce an angle to [-pi, pi).
inline double wrap_angle(double x) {
  double r = std::fmod(x + kPi, kTwoPi);
  if (r < 0) r += kTwoPi;
  r -= kPi;
  // fmod can land exactly on +pi after the shift for tiny negative inputs.
  if (r >= kPi) r -= kTwoPi;
  return r;
}

// ---------------------------------------------------------------------------
// Mode grids

/// Modes {k : |k| <= K}, without k = 0 unless include_zero. Enumeration is
/// ascending in k.
class ModeGrid1D {
 public:
  ModeGrid1D(int K, bool include_zero = false) : K_(K), include_zero_(include_zero) {
    if (K < 1) throw ConfigError("ModeGrid1D: K must be positive");
  }

  int K() const { return K_; }
  bool include_zero() const { return include_zero_; }
  int size() const { return include_zero_ ? 2 * K_ + 1 : 2 * K_; }

  bool contains(int k) const {
    return std::abs(k) <= K_ && (include_zero_ || k != 0);
  }
  int index(int k) const {
    if (include_zero_) return k + K_;
    return k < 0 ? k + K_ : k + K_ - 1;
  }
  int mode(int i) const {
    if (include_zero_) return i - K_;
    return i < K_ ? i - K_ : i - K_ + 1;
  }

  bool operator==(const ModeGrid1D&) const = default;

 private:
  int K_;
  bool include_zero_;
};

/// Modes {(k,l) : 1 <= |k| <= K, |l| <= L}. Row-major in l: index runs over
/// k ascending (k = 0 skipped) inside each l, l ascending from -L.
class ModeGrid2D {
 public:
  ModeGrid2D(int K, int L) : K_(K), L_(L) {
    if (K < 1) throw ConfigError("ModeGrid2D: K must be positive");
    if (L < 0) throw ConfigError("ModeGrid2D: L must be non-negative");
  }

  int K() const { return K_; }
  int L() const { return L_; }
  int row_size() const { return 2 * K_; }
  int rows() const { return 2 * L_ + 1; }
  int size() const { return row_size() * rows(); }

  bool contains(int k, int l) const {
    return k != 0 && std::abs(k) <= K_ && std::abs(l) <= L_;
  }
  /// Position of k inside one l-row.
  int k_index(int k) const { return k < 0 ? k + K_ : k + K_ - 1; }
  int k_of(int i) const { return i < K_ ? i - K_ : i - K_ + 1; }
  int index(int k, int l) const { return (l + L_) * row_size() + k_index(k); }
  std::pair<int, int> mode(int i) const {
    return {k_of(i % row_size()), i / row_size() - L_};
  }
  /// The 1D grid seen by a single transverse frequency.
  ModeGrid1D row_grid() const { return ModeGrid1D(K_, false); }

  bool operator==(const ModeGrid2D&) const = default;

 private:
  int K_;
  int L_;
};

template <class Grid>
struct Spectrum {
  Grid grid;
  Eigen::VectorXcd coeffs;

  explicit Spectrum(Grid g) : grid(g), coeffs(Eigen::VectorXcd::Zero(g.size())) {}
  Spectrum(Grid g, Eigen::VectorXcd c) : grid(g), coeffs(std::move(c)) {
    if (coeffs.size() != grid.size())
      throw ConfigError("Spectrum: coefficient count does not match grid");
  }
};

using Spectrum1D = Spectrum<ModeGrid1D>;
using Spectrum2D = Spectrum<ModeGrid2D>;

inline cplx coeff(const Spectrum1D& u, int k) {
  return u.grid.contains(k) ? u.coeffs[u.grid.index(k)] : cplx{};
}
inline cplx coeff(const Spectrum2D& u, int k, int l) {
  return u.grid.contains(k, l) ? u.coeffs[u.grid.index(k, l)] : cplx{};
}

/// Coefficients of one transverse frequency l (length 2K, k ascending).
inline Eigen::VectorXcd row(const Spectrum2D& u, int l) {
  return u.coeffs.segment((l + u.grid.L()) * u.grid.row_size(), u.grid.row_size());
}
inline void set_row(Spectrum2D& u, int l, const Eigen::VectorXcd& r) {
  u.coeffs.segment((l + u.grid.L()) * u.grid.row_size(), u.grid.row_size()) = r;
}

/// fhat(-k) == conj(fhat(k)) (1D) to within tol.
inline bool is_conjugate_symmetric(const Spectrum1D& u, double tol = 1e-12) {
  for (int i = 0; i < u.grid.size(); ++i) {
    const int k = u.grid.mode(i);
    if (!u.grid.contains(-k)) return false;
    if (std::abs(u.coeffs[i] - std::conj(coeff(u, -k))) > tol) return false;
  }
  return true;
}

inline bool is_conjugate_symmetric(const Spectrum2D& u, double tol = 1e-12) {
  for (int i = 0; i < u.grid.size(); ++i) {
    const auto [k, l] = u.grid.mode(i);
    if (std::abs(u.coeffs[i] - std::conj(coeff(u, -k, -l))) > tol) return false;
  }
  return true;
}

/// Replace u by its conjugate-symmetric part, (u + conj(u(-.)))/2.
template <class Grid>
Spectrum<Grid> symmetrize(const Spectrum<Grid>& u) {
  Spectrum<Grid> out(u.grid);
  for (int i = 0; i < u.grid.size(); ++i) {
    if constexpr (std::is_same_v<Grid, ModeGrid2D>) {
      const auto [k, l] = u.grid.mode(i);
      out.coeffs[i] = 0.5 * (u.coeffs[i] + std::conj(coeff(u, -k, -l)));
    } else {
      const int k = u.grid.mode(i);
      out.coeffs[i] = 0.5 * (u.coeffs[i] + std::conj(coeff(u, -k)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Norms

enum class NormKind { L2, Hminus1 };

inline double norm(const Spectrum1D& u, NormKind kind = NormKind::L2) {
  double s = 0.0;
  for (int i = 0; i < u.grid.size(); ++i) {
    const double k = u.grid.mode(i);
    const double w = kind == NormKind::L2 ? 1.0 : 1.0 / (1.0 + k * k);
    s += w * std::norm(u.coeffs[i]);
  }
  return std::sqrt(kTwoPi * s);
}

inline double norm(const Spectrum2D& u, NormKind kind = NormKind::L2) {
  double s = 0.0;
  for (int i = 0; i < u.grid.size(); ++i) {
    const auto [k, l] = u.grid.mode(i);
    const double w =
        kind == NormKind::L2 ? 1.0 : 1.0 / (1.0 + double(k) * k + double(l) * l);
    s += w * std::norm(u.coeffs[i]);
  }
  return std::sqrt(kTwoPi * kTwoPi * s);
}

// ---------------------------------------------------------------------------
// Dispersion relations

/// Linearized KP-II on T^2: omega(k,l) = k^3 - l^2/k.
struct KP2D {};
/// Transverse reduction with parameter lambda: omega(k) = k^3 - lambda^2/k.
struct Lambda1D {
  double lambda = 0.0;
};
/// h d_t u + (h d_x)^3 u - (h d_x)^{-1} u = 0: omega(k) = h^2 k^3 - 1/(h^2 k).
struct Semiclassical {
  double h = 0.5;
};
/// i h d_t u + h^2 d_x^2 u = 0: omega(k) = -h k^2.
struct Schrodinger {
  double h = 0.5;
};

using DispersionVariant = std::variant<KP2D, Lambda1D, Semiclassical, Schrodinger>;

inline std::string variant_name(const DispersionVariant& v) {
  static const char* names[] = {"KP2D", "Lambda1D", "Semiclassical", "Schrodinger"};
  return names[v.index()];
}

inline void validate(const DispersionVariant& v) {
  if (const auto* p = std::get_if<Lambda1D>(&v); p && !(p->lambda >= 0.0))
    throw DomainError("Lambda1D: lambda must be non-negative");
  if (const auto* p = std::get_if<Semiclassical>(&v); p && !(p->h > 0.0 && p->h < 1.0))
    throw DomainError("Semiclassical: h must lie in (0,1)");
  if (const auto* p = std::get_if<Schrodinger>(&v); p && !(p->h > 0.0 && p->h < 1.0))
    throw DomainError("Schrodinger: h must lie in (0,1)");
}

/// Frequency omega such that uhat(t) = e^{i t omega} uhat(0) solves the flow.
/// The transverse frequency l is only read by KP2D.
inline double dispersion(int k, int l, const DispersionVariant& v) {
  validate(v);
  if (k == 0 && !std::holds_alternative<Schrodinger>(v))
    throw DomainError("dispersion: k = 0 is not allowed for variant " + variant_name(v));
  const double kd = k;
  return std::visit(
      [&](const auto& var) -> double {
        using V = std::decay_t<decltype(var)>;
        if constexpr (std::is_same_v<V, KP2D>) {
          return kd * kd * kd - double(l) * double(l) / kd;
        } else if constexpr (std::is_same_v<V, Lambda1D>) {
          return kd * kd * kd - var.lambda * var.lambda / kd;
        } else if constexpr (std::is_same_v<V, Semiclassical>) {
          const double h2 = var.h * var.h;
          return h2 * kd * kd * kd - 1.0 / (h2 * kd);
        } else {
          return -var.h * kd * kd;
        }
      },
      v);
}

inline double dispersion(int k, const DispersionVariant& v) { return dispersion(k, 0, v); }

/// omega_lambda(k) for every mode of a 1D grid without k = 0.
inline Eigen::VectorXd lambda_frequencies(const ModeGrid1D& grid, double lambda) {
  Eigen::VectorXd w(grid.size());
  for (int i = 0; i < grid.size(); ++i) w[i] = dispersion(grid.mode(i), Lambda1D{lambda});
  return w;
}

/// Exact linear flow: every coefficient multiplied by e^{i t omega(mode)}.
inline Spectrum1D propagate_linear(const Spectrum1D& u, double t, const DispersionVariant& v) {
  if (std::holds_alternative<KP2D>(v))
    throw DomainError("propagate_linear: KP2D needs a 2D spectrum");
  Spectrum1D out(u.grid);
  for (int i = 0; i < u.grid.size(); ++i)
    out.coeffs[i] = std::exp(kI * (t * dispersion(u.grid.mode(i), v))) * u.coeffs[i];
  return out;
}

inline Spectrum2D propagate_linear(const Spectrum2D& u, double t,
                                   const DispersionVariant& v = KP2D{}) {
  if (!std::holds_alternative<KP2D>(v))
    throw DomainError("propagate_linear: 2D spectra only evolve with KP2D");
  Spectrum2D out(u.grid);
  for (int i = 0; i < u.grid.size(); ++i) {
    const auto [k, l] = u.grid.mode(i);
    out.coeffs[i] = std::exp(kI * (t * dispersion(k, l, v))) * u.coeffs[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Physical samples and transforms

/// Uniform samples f(x_j), x_j = -pi + 2 pi j / N.
struct Samples1D {
  Eigen::VectorXcd values;
  int size() const { return int(values.size()); }
  static double x(int j, int N) { return -kPi + kTwoPi * j / N; }
};

/// Uniform samples f(x_i, y_j); values(i, j) with i along x and j along y.
struct Samples2D {
  Eigen::MatrixXcd values;
  int nx() const { return int(values.rows()); }
  int ny() const { return int(values.cols()); }
};

namespace detail {
inline int wrap_index(int k, int N) { return ((k % N) + N) % N; }
inline double parity(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }
}  // namespace detail

/// Unscaled complex FFT pair of fixed length, reused across calls.
class Dft {
 public:
  explicit Dft(int n) : n_(n), buf_in_(n), buf_out_(n) {
    fft_.SetFlag(Eigen::FFT<double>::Unscaled);
  }
  int size() const { return n_; }
  /// out_j = sum_k in_k e^{+2 pi i jk/n}
  void synthesize(std::vector<cplx>& data) {
    fft_.inv(buf_out_, data);
    data.swap(buf_out_);
  }
  /// out_k = sum_j in_j e^{-2 pi i jk/n}
  void analyze(std::vector<cplx>& data) {
    fft_.fwd(buf_out_, data);
    data.swap(buf_out_);
  }

 private:
  int n_;
  Eigen::FFT<double> fft_;
  std::vector<cplx> buf_in_, buf_out_;
};

inline Samples1D to_physical(const Spectrum1D& u, int N) {
  if (N < 2 * u.grid.K() + 2)
    throw ConfigError("transform: need N >= 2K+2 samples (got N=" + std::to_string(N) + ")");
  std::vector<cplx> a(N, cplx{});
  for (int i = 0; i < u.grid.size(); ++i) {
    const int k = u.grid.mode(i);
    a[detail::wrap_index(k, N)] += detail::parity(k) * u.coeffs[i];
  }
  Dft dft(N);
  dft.synthesize(a);
  Samples1D s{Eigen::VectorXcd(N)};
  for (int j = 0; j < N; ++j) s.values[j] = a[j];
  return s;
}

/// Coefficients of the grid's modes from samples (exact for band-limited input).
inline Spectrum1D to_spectrum(const Samples1D& s, const ModeGrid1D& grid) {
  const int N = s.size();
  if (N < 2 * grid.K() + 2)
    throw ConfigError("transform: need N >= 2K+2 samples (got N=" + std::to_string(N) + ")");
  std::vector<cplx> a(s.values.data(), s.values.data() + N);
  Dft dft(N);
  dft.analyze(a);
  Spectrum1D u(grid);
  for (int i = 0; i < grid.size(); ++i) {
    const int k = grid.mode(i);
    u.coeffs[i] = detail::parity(k) * a[detail::wrap_index(k, N)] / double(N);
  }
  return u;
}

/// Reusable 2D transform pair on an Nx x Ny grid.
class Transform2D {
 public:
  Transform2D(int nx, int ny) : nx_(nx), ny_(ny), fx_(nx), fy_(ny), line_x_(nx), line_y_(ny) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }

  /// Samples of sum_{(k,l)} c(k,l) e^{i(kx+ly)}.
  Samples2D to_physical(const Spectrum2D& u) {
    check(u.grid);
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(nx_, ny_);
    for (int i = 0; i < u.grid.size(); ++i) {
      const auto [k, l] = u.grid.mode(i);
      a(detail::wrap_index(k, nx_), detail::wrap_index(l, ny_)) +=
          detail::parity(k + l) * u.coeffs[i];
    }
    apply(a, true);
    return Samples2D{std::move(a)};
  }

  Spectrum2D to_spectrum(const Samples2D& s, const ModeGrid2D& grid) {
    check(grid);
    if (s.nx() != nx_ || s.ny() != ny_) throw ConfigError("transform: sample grid mismatch");
    Eigen::MatrixXcd a = s.values;
    apply(a, false);
    Spectrum2D u(grid);
    const double scale = 1.0 / (double(nx_) * ny_);
    for (int i = 0; i < grid.size(); ++i) {
      const auto [k, l] = grid.mode(i);
      u.coeffs[i] = detail::parity(k + l) * scale *
                    a(detail::wrap_index(k, nx_), detail::wrap_index(l, ny_));
    }
    return u;
  }

  /// In-place unscaled 2D DFT (synthesis when inverse, analysis otherwise).
  void apply(Eigen::MatrixXcd& a, bool synthesis) {
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) line_x_[i] = a(i, j);
      synthesis ? fx_.synthesize(line_x_) : fx_.analyze(line_x_);
      for (int i = 0; i < nx_; ++i) a(i, j) = line_x_[i];
    }
    for (int i = 0; i < nx_; ++i) {
      for (int j = 0; j < ny_; ++j) line_y_[j] = a(i, j);
      synthesis ? fy_.synthesize(line_y_) : fy_.analyze(line_y_);
      for (int j = 0; j < ny_; ++j) a(i, j) = line_y_[j];
    }
  }

 private:
  void check(const ModeGrid2D& g) const {
    if (nx_ < 2 * g.K() + 2 || ny_ < 2 * g.L() + 2)
      throw ConfigError("transform: need Nx >= 2K+2 and Ny >= 2L+2 samples");
  }

  int nx_, ny_;
  Dft fx_, fy_;
  std::vector<cplx> line_x_, line_y_;
};

inline Samples2D to_physical(const Spectrum2D& u, int nx, int ny) {
  return Transform2D(nx, ny).to_physical(u);
}
inline Spectrum2D to_spectrum(const Samples2D& s, const ModeGrid2D& grid) {
  return Transform2D(s.nx(), s.ny()).to_spectrum(s, grid);
}

// ---------------------------------------------------------------------------
// Ray flows of the semiclassical symbols, with the cutoff identically 1 on
// the evaluation region.

struct RayState {
  double x = 0.0;
  double xi = 1.0;
  double epsilon = 1.0;
};

enum class RayBranch { P, Q };

/// Transport speed: P: eps^4/xi^2 + 3 xi^2, Q: 1/xi^2 + 3 eps^4 xi^2.
inline double ray_speed(double xi, double eps, RayBranch branch) {
  if (xi == 0.0) throw DomainError("ray_flow: xi = 0 is singular for the symbol");
  const double e4 = eps * eps * eps * eps;
  const double x2 = xi * xi;
  return branch == RayBranch::P ? e4 / x2 + 3.0 * x2 : 1.0 / x2 + 3.0 * e4 * x2;
}

inline RayState ray_flow(const RayState& s, double t, RayBranch branch) {
  if (!(s.epsilon > 0.0 && s.epsilon <= 1.0))
    throw DomainError("ray_flow: epsilon must lie in (0,1]");
  const double v = ray_speed(s.xi, s.epsilon, branch);
  return RayState{wrap_angle(s.x - v * t), s.xi, s.epsilon};
}

// ---------------------------------------------------------------------------
// Seeded random test data.

template <class Grid, class Rng>
Spectrum<Grid> random_spectrum(const Grid& grid, Rng& rng, double l2_norm, bool real_valued) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Spectrum<Grid> u(grid);
  for (int i = 0; i < grid.size(); ++i) u.coeffs[i] = cplx(nd(rng), nd(rng));
  if (real_valued) u = symmetrize(u);
  const double n = norm(u);
  if (n > 0) u.coeffs *= l2_norm / n;
  return u;
}

}  // namespace kplab
