#pragma once

// Observability experiments on the lambda family: Gramian scans, Ingham
// constants of exponential families, frequency gaps and ray transit times.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "kplab/control_ops.hpp"
#include "kplab/errors.hpp"
#include "kplab/hermitian.hpp"
#include "kplab/hum_synthesis.hpp"
#include "kplab/parallel.hpp"
#include "kplab/spectral_core.hpp"

namespace kplab {

/// Minimal consecutive difference after sorting.
inline double gap(std::vector<double> freqs) {
  if (freqs.size() < 2) throw DomainError("gap: need at least 2 frequencies");
  std::sort(freqs.begin(), freqs.end());
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < freqs.size(); ++i) g = std::min(g, freqs[i] - freqs[i - 1]);
  return g;
}

/// omega_lambda(l1 + 1) - omega_lambda(l1).
inline double consecutive_gap(double lambda, int l1) {
  const double a = l1, b = l1 + 1.0;
  return b * b * b - a * a * a - lambda * lambda / b + lambda * lambda / a;
}

/// Values lambda > 0 with omega_lambda(k) = omega_lambda(k') for some
/// 0 < |k|, |k'| <= kmax, k != k': lambda^2 = -k k' (k^2 + k k' + k'^2).
inline std::vector<double> resonant_lambdas(int kmax) {
  std::set<double> out;
  for (int k = -kmax; k <= kmax; ++k)
    for (int k2 = -kmax; k2 <= kmax; ++k2) {
      if (k == 0 || k2 == 0 || k == k2) continue;
      const double l2 = -double(k) * k2 * (double(k) * k + double(k) * k2 + double(k2) * k2);
      if (l2 > 0.0) out.insert(std::sqrt(l2));
    }
  return {out.begin(), out.end()};
}

struct ScanRow {
  double lambda = 0.0;
  double min_eig = 0.0;
  double condition = 0.0;
  double gap = 0.0;
};

/// Per lambda: extremal eigenvalues of the Gramian block, or of
/// Lambda + kappa diag(1/(1+k^2)) when weak_kappa is set.
inline std::vector<ScanRow> lambda_scan(const BumpProfile& bump, int K, double T,
                                        const std::vector<double>& lambdas,
                                        std::optional<double> weak_kappa = std::nullopt,
                                        int threads = 0) {
  if (lambdas.empty()) throw ConfigError("lambda_scan: empty lambda list");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw ConfigError("lambda_scan: lambdas must be non-negative");
  if (!(T > 0.0)) throw ConfigError("lambda_scan: T must be positive");
  if (weak_kappa && !(*weak_kappa >= 0.0)) throw ConfigError("lambda_scan: weak_kappa must be >= 0");
  const ControlMatrix M = control_matrix(bump, K);
  const ModeGrid1D grid = M.grid();
  return parallel_map<ScanRow>(
      int(lambdas.size()),
      [&](int i) {
        const double lambda = lambdas[i];
        const Eigen::VectorXd w = lambda_frequencies(grid, lambda);
        Eigen::MatrixXcd A = gramian_matrix(M, w, T);
        if (weak_kappa)
          for (int r = 0; r < grid.size(); ++r) {
            const double k = grid.mode(r);
            A(r, r) += *weak_kappa / (1.0 + k * k);
          }
        const auto e = jacobi_eigen(A);
        const double lo = e.values[0], hi = e.values[e.values.size() - 1];
        ScanRow row{lambda, lo, lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity(),
                    gap(std::vector<double>(w.data(), w.data() + w.size()))};
        return row;
      },
      threads);
}

struct InghamReport {
  std::vector<double> freqs;
  double T = 0.0;
  double gamma = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
};

/// Gram matrix of {e^{i t f_k}} in L^2(0,T).
inline Eigen::MatrixXcd exponential_gram(const std::vector<double>& freqs, double T) {
  const int n = int(freqs.size());
  Eigen::MatrixXcd A(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) A(j, k) = time_kernel(freqs[j] - freqs[k], T);
  return A;
}

inline InghamReport ingham_estimate(std::vector<double> freqs, double T) {
  if (freqs.empty()) throw DomainError("ingham_estimate: no frequencies");
  if (!(T > 0.0)) throw ConfigError("ingham_estimate: T must be positive");
  std::sort(freqs.begin(), freqs.end());
  for (std::size_t i = 1; i < freqs.size(); ++i)
    if (freqs[i] == freqs[i - 1]) throw DomainError("ingham_estimate: duplicate frequencies");
  InghamReport r;
  r.freqs = freqs;
  r.T = T;
  r.gamma = freqs.size() > 1 ? gap(freqs) : std::numeric_limits<double>::infinity();
  const auto e = jacobi_eigen(exponential_gram(freqs, T));
  r.C1 = e.values[0];
  r.C2 = e.values[e.values.size() - 1];
  return r;
}

struct TransitRow {
  double lambda = 0.0;
  double v_min = 0.0;
  double t_max = 0.0;
};

/// Group speed 3k^2 + lambda^2/k^2 minimized over 1 <= |k| <= K and the
/// worst-case entry time of a horizontal ray into the strip (a, b).
inline std::vector<TransitRow> transit_report(double a, double b, const std::vector<double>& lambdas,
                                              int K) {
  if (!(a >= -kPi && a < b && b <= kPi)) throw ConfigError("transit_report: need -pi <= a < b <= pi");
  if (K < 1) throw ConfigError("transit_report: K must be positive");
  std::vector<TransitRow> rows;
  for (double lambda : lambdas) {
    double v = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= K; ++k) {
      const double k2 = double(k) * k;
      v = std::min(v, 3.0 * k2 + lambda * lambda / k2);
    }
    rows.push_back({lambda, v, (kTwoPi - (b - a)) / v});
  }
  return rows;
}

}  // namespace kplab
