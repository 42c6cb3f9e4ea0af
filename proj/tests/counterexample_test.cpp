#include "kplab/counterexample.hpp"

#include <gtest/gtest.h>

#include "kplab/fit.hpp"

namespace kplab {
namespace {

constexpr double kAlpha = 1.0, kT = 1.0;
constexpr double kB = 0.9 * kAlpha / (2 * kT), kb = 0.8 * kB;

TEST(GaussianCoeff, Examples) {
  EXPECT_NEAR(gaussian_coeff(0.25, 0), 0.19947, 1e-5);
  EXPECT_NEAR(gaussian_coeff(0.25, 0), std::sqrt(0.25) / std::sqrt(kTwoPi), 1e-10);
  for (int k : {1, 3, 17, 40}) {
    EXPECT_EQ(gaussian_coeff(0.3, -k), gaussian_coeff(0.3, k));
    const double eps = 0.3;
    const double closed = std::sqrt(eps / kTwoPi) * std::exp(-0.5 * eps * eps * k * k);
    EXPECT_NEAR(gaussian_coeff(eps, k), closed, 1e-12);
  }
  EXPECT_THROW(gaussian_coeff(0.0, 1), DomainError);
}

TEST(GaussianCoeff, SupScalesLikeSqrtEps) {
  std::vector<double> C;
  for (int p = 2; p <= 6; ++p) {
    const double eps = std::ldexp(1.0, -p);
    double sup = 0.0;
    for (int k = -200; k <= 200; ++k) sup = std::max(sup, std::abs(gaussian_coeff(eps, k)));
    C.push_back(sup / std::sqrt(eps));
  }
  const auto [lo, hi] = std::minmax_element(C.begin(), C.end());
  EXPECT_LE(*hi / *lo, 1.2);
}

TEST(Packet, StructureAndMass) {
  for (int n : {4, 8, 16, 32, 64}) {
    const auto p = build_packet(n, kB, kb, int(std::ceil(kB * n)));
    EXPECT_TRUE(is_conjugate_symmetric(p.coeffs, 0.0));
    for (int k = -p.K_pkt; k <= p.K_pkt; ++k) {
      if (std::abs(k) >= kB * n) {
        EXPECT_EQ(coeff(p.coeffs, k), 0.0);
      }
      EXPECT_EQ(coeff(p.coeffs, k).imag(), 0.0);
    }
    EXPECT_GE(p.mass(), 0.5);
    EXPECT_LE(p.mass(), 2.0);
    if (n >= 16) {
      EXPECT_GE(p.mass() / gaussian_l2_norm(), 0.9);
      EXPECT_LE(p.mass() / gaussian_l2_norm(), 1.1);
    }
    EXPECT_LE(p.off_band_mass, p.off_band_bound);
  }
  EXPECT_THROW(build_packet(8, kB, kb, 2), ConfigError);
  EXPECT_THROW(build_packet(8, kB, kB, 8), ConfigError);
}

TEST(Packet, CutoffIsAPlateau) {
  for (double s : {-0.2, 0.0, 0.36}) EXPECT_EQ(plateau_cutoff(s, 0.36, 0.45), 1.0);
  for (double s : {-0.45, 0.5}) EXPECT_EQ(plateau_cutoff(s, 0.36, 0.45), 0.0);
  EXPECT_NEAR(plateau_cutoff(0.405, 0.36, 0.45), 0.5, 1e-15);
  EXPECT_EQ(plateau_cutoff(-0.4, 0.36, 0.45), plateau_cutoff(0.4, 0.36, 0.45));
}

TEST(Schrodinger, UnitaryAndIdentityAtZero) {
  const auto p = build_packet(16, kB, kb, 8);
  EXPECT_EQ(schrodinger_evolve(p, 0.0).coeffs, p.coeffs.coeffs);
  for (double t : {0.3, 1.0, 7.0}) EXPECT_NEAR(norm(schrodinger_evolve(p, t)), p.mass(), 1e-12);
}

TEST(Schrodinger, OffStripAmplitudeDecaysAtLeastLikeSqrtEps) {
  std::vector<double> ratio;
  for (int n : {4, 8, 16, 32, 64}) {
    const auto p = build_packet(n, kB, kb, int(std::ceil(kB * n)));
    ratio.push_back(sup_outside(p, kT, kAlpha, 1024) / std::sqrt(p.eps));
  }
  for (double r : ratio) EXPECT_LE(r, ratio.front() * (1 + 1e-12));
}

TEST(Lift, SingleColumnAndKPDispersion) {
  const auto p = build_packet(4, kB, kb, 2);
  const ModeGrid2D grid(6, 3);
  const auto u = lift_packet(p, grid);
  for (int i = 0; i < grid.size(); ++i) {
    const auto [k, l] = grid.mode(i);
    if (k != 4) {
      EXPECT_EQ(u.coeffs[i], 0.0);
    }
  }
  EXPECT_DOUBLE_EQ(dispersion(4, 2, KP2D{}), 63.0);
  const auto ut = propagate_linear(u, 0.3);
  EXPECT_LT(std::abs(coeff(ut, 4, 2) - std::exp(kI * (0.3 * 63.0)) * coeff(u, 4, 2)), 1e-15);

  for (double t : {0.0, 0.3, 1.0, 2.5}) {
    EXPECT_LT(lift_phase_defect(p, t), 1e-12);
    const auto v = schrodinger_evolve(p, t);
    const cplx phase = std::exp(kI * (t * 64.0));
    const auto w = propagate_linear(u, t);
    for (int l = -2; l <= 2; ++l)
      EXPECT_LT(std::abs(coeff(w, 4, l) - phase * coeff(v, l)), 1e-12);
  }
  EXPECT_THROW(lift_packet(p, ModeGrid2D(3, 3)), ConfigError);
  EXPECT_THROW(lift_packet(p, ModeGrid2D(6, 1)), ConfigError);
}

TEST(Quotient, GlobalPhaseDropsOut) {
  const auto g = make_two_sided_bump(kAlpha, 8);
  for (int n : {4, 8}) {
    const auto p = build_packet(n, kB, kb, int(std::ceil(kB * n)));
    const auto row = observability_quotient({n}, kT, kAlpha, g, kB, kb)[0];
    EXPECT_NEAR(quotient_from_lift(p, g, kT), row.Q, 1e-12 * row.Q + 1e-15);
  }
}

TEST(Quotient, DecaysHorizontallyNotVertically) {
  const auto g = make_two_sided_bump(kAlpha, 8);
  const auto rows = observability_quotient({4, 8, 16, 32, 64}, kT, kAlpha, g, kB, kb);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_LE(std::abs(rows[i].Q_refined - rows[i].Q), 0.01 * rows[i].Q);
    EXPECT_GE(rows[i].Q_vertical, 0.1 * rows[0].Q_vertical);
    if (i > 0) {
      EXPECT_LT(rows[i].Q, rows[i - 1].Q);
    }
  }
  EXPECT_LE(rows.back().Q, 0.05 * rows.front().Q);
  EXPECT_THROW(observability_quotient({4}, kT, kAlpha, make_bump(-0.5, 2.0, 4), kB, kb),
               ConfigError);
}

TEST(Quotient, VerticalMatchesFourierClosedForm) {
  const auto g = make_two_sided_bump(kAlpha, 40);
  const double g2 = g.l2_norm_squared();
  for (int n : {4, 16}) {
    // c = int g e^{inx}; int g^2 e^{inx} by Simpson.
    const cplx c = kTwoPi * g.coeff(-n);
    cplx g2n = 0.0;
    for (const auto& piece : g.pieces())
      g2n += simpson([&](double x) { return g(x) * g(x) * std::exp(kI * (n * x)); }, piece.a,
                     piece.b, 1 << 14);
    const double expected = (g2 - 2.0 * (std::conj(c) * g2n).real() + std::norm(c) * g2) / kTwoPi;
    EXPECT_NEAR(vertical_quotient(n, g, 1.0), expected, 1e-10);
  }
}

TEST(Normalization, TermIsBelowTheSplitBound) {
  const auto g = make_two_sided_bump(kAlpha, 40);
  for (int n : {8, 32}) {
    const auto p = build_packet(n, kB, kb, int(std::ceil(kB * n)));
    for (int M : {8, 32})
      for (double t : {0.0, 0.5, 1.0})
        EXPECT_LE(normalization_term(p, g, t, 2048), normalization_bound(p, g, M));
  }
}

}  // namespace
}  // namespace kplab
