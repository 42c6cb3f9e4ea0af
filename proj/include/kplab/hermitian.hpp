#pragma once

// Dense Hermitian eigen-decomposition by cyclic complex Jacobi rotations.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "kplab/errors.hpp"

namespace kplab {

struct HermitianEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXcd vectors; // columns, unit norm, matching values
  int sweeps = 0;
};

inline double hermitian_defect(const Eigen::MatrixXcd& H) {
  return (H - H.adjoint()).cwiseAbs().maxCoeff();
}

inline HermitianEigen jacobi_eigen(const Eigen::MatrixXcd& H, double herm_tol = 1e-10,
                                   int max_sweeps = 100) {
  if (H.rows() != H.cols()) throw DomainError("jacobi_eigen: matrix must be square");
  const int n = int(H.rows());
  if (n == 0) return {};
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if (hermitian_defect(H) > herm_tol * scale)
    throw DomainError("jacobi_eigen: matrix is not Hermitian");

  Eigen::MatrixXcd A = 0.5 * (H + H.adjoint());
  Eigen::MatrixXcd V = Eigen::MatrixXcd::Identity(n, n);
  const double total = A.norm();
  const double stop = std::numeric_limits<double>::epsilon() * std::max(total, 1e-300);

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::norm(A(p, q));
    if (std::sqrt(2.0 * off) <= stop) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double r = std::abs(A(p, q));
        if (r == 0.0) continue;
        const std::complex<double> e = A(p, q) / r;
        const double tau = (A(q, q).real() - A(p, p).real()) / (2.0 * r);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // J(p,p)=c, J(p,q)=s e, J(q,p)=-s conj(e), J(q,q)=c; A <- J^H A J.
        for (int k = 0; k < n; ++k) {
          const auto akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * std::conj(e) * akq;
          A(k, q) = s * e * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const auto apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * e * aqk;
          A(q, k) = s * std::conj(e) * apk + c * aqk;
        }
        A(p, q) = 0.0;
        A(q, p) = 0.0;
        A(p, p) = A(p, p).real();
        A(q, q) = A(q, q).real();
        for (int k = 0; k < n; ++k) {
          const auto vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * std::conj(e) * vkq;
          V(k, q) = s * e * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return A(i, i).real() < A(j, j).real(); });
  HermitianEigen out{Eigen::VectorXd(n), Eigen::MatrixXcd(n, n), sweep};
  for (int i = 0; i < n; ++i) {
    out.values[i] = A(order[i], order[i]).real();
    out.vectors.col(i) = V.col(order[i]).normalized();
  }
  return out;
}

struct MinEig {
  double value = 0.0;
  Eigen::VectorXcd vector;
};

/// Smallest eigenvalue and a unit eigenvector.
inline MinEig min_eig(const Eigen::MatrixXcd& H) {
  auto e = jacobi_eigen(H);
  if (e.values.size() == 0) throw DomainError("min_eig: empty matrix");
  return {e.values[0], e.vectors.col(0)};
}

}  // namespace kplab
