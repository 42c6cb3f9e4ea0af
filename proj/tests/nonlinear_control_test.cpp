#include "kplab/nonlinear_control.hpp"

#include <random>

#include <gtest/gtest.h>

namespace kplab {
namespace {

Spectrum2D diff(const Spectrum2D& a, const Spectrum2D& b) {
  Spectrum2D d = a;
  d.coeffs -= b.coeffs;
  return d;
}

TEST(Evolve, ZeroStaysZero) {
  const ModeGrid2D grid(6, 3);
  SolverParams p;
  const auto tr = evolve_nonlinear(Spectrum2D(grid), std::nullopt, 0.5, p);
  for (const auto& s : tr.states) EXPECT_EQ(s.coeffs.squaredNorm(), 0.0);
  EXPECT_EQ(tr.times.front(), 0.0);
  EXPECT_EQ(tr.times.back(), 0.5);
  for (std::size_t i = 1; i < tr.times.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
}

TEST(Evolve, ConservesMassAndReality) {
  std::mt19937_64 rng(1);
  const ModeGrid2D grid(16, 8);
  const auto u0 = random_spectrum(grid, rng, 0.01, true);
  SolverParams p;
  const auto tr = evolve_nonlinear(u0, std::nullopt, 1.0, p);
  EXPECT_TRUE(tr.warnings.empty());
  for (const auto& s : tr.states) EXPECT_NEAR(norm(s), 0.01, 1e-6 * 0.01);
  EXPECT_TRUE(is_conjugate_symmetric(tr.final_state(), 1e-15));
  EXPECT_GT(norm(diff(tr.final_state(), propagate_linear(u0, 1.0))), 0.0);
}

TEST(Evolve, NonlinearDeviationIsQuadraticInAmplitude) {
  std::mt19937_64 rng(2);
  const ModeGrid2D grid(8, 4);
  const auto u0 = random_spectrum(grid, rng, 0.01, true);
  Spectrum2D small = u0;
  small.coeffs /= 1000.0;
  SolverParams p;
  auto dev = [&](const Spectrum2D& v) {
    return norm(diff(evolve_nonlinear(v, std::nullopt, 1.0, p).final_state(), propagate_linear(v, 1.0)));
  };
  const double ratio = dev(u0) / dev(small);
  EXPECT_GE(ratio, 1e5);
  EXPECT_LE(ratio, 1e7);
}

TEST(Evolve, FourthOrderTrendUnderDtHalving) {
  std::mt19937_64 rng(4);
  const ModeGrid2D grid(8, 4);
  const auto u0 = random_spectrum(grid, rng, 0.1, true);
  SolverParams p;
  std::vector<Spectrum2D> finals;
  for (double dt : {2e-3, 1e-3, 5e-4}) {
    p.dt = dt;
    finals.push_back(evolve_nonlinear(u0, std::nullopt, 1.0, p).final_state());
  }
  const double c1 = norm(diff(finals[1], finals[0])), c2 = norm(diff(finals[2], finals[1]));
  EXPECT_GT(c2, 0.0);
  EXPECT_LE(c2, c1 / 10.0);
}

TEST(Evolve, ErrorsAndWarnings) {
  const ModeGrid2D grid(16, 2);
  std::mt19937_64 rng(5);
  SolverParams p;
  p.dt = 0.01;
  const auto u0 = random_spectrum(grid, rng, 1e-3, true);
  EXPECT_FALSE(evolve_nonlinear(u0, std::nullopt, 0.1, p).warnings.empty());
  Spectrum2D huge = u0;
  huge.coeffs *= 1e200;
  try {
    evolve_nonlinear(huge, std::nullopt, 0.1, p);
    FAIL();
  } catch (const InstabilityError& e) {
    EXPECT_GE(e.step(), 1);
  }
  p.dt = -1.0;
  EXPECT_THROW(evolve_nonlinear(u0, std::nullopt, 0.1, p), ConfigError);
}

TEST(DuhamelTail, TrivialCases) {
  const ModeGrid2D grid(4, 2);
  Trajectory t;
  t.states = {Spectrum2D(grid), Spectrum2D(grid)};
  t.times = {0.0, 1.0};
  EXPECT_THROW(duhamel_tail(t), DomainError);
  SolverParams p;
  EXPECT_EQ(duhamel_tail(evolve_nonlinear(Spectrum2D(grid), std::nullopt, 0.3, p)).coeffs.squaredNorm(),
            0.0);
  std::mt19937_64 rng(6);
  p.nonlinear = false;
  const auto lin = evolve_nonlinear(random_spectrum(grid, rng, 1.0, true), std::nullopt, 0.3, p);
  EXPECT_EQ(duhamel_tail(lin).coeffs.squaredNorm(), 0.0);
}

TEST(DuhamelTail, MatchesTheForcedRunRearranged) {
  std::mt19937_64 rng(7);
  const ModeGrid2D grid(8, 4);
  const auto g = make_bump(-kPi / 2, kPi / 2, 8);
  const auto u0 = random_spectrum(grid, rng, 0.01, true);
  const auto u1 = random_spectrum(grid, rng, 0.01, true);
  HumOptions o;
  o.verify = false;
  const auto sol = hum_solve(u0, u1, 1.0, g, o);
  SolverParams p;
  const auto tr = evolve_nonlinear(u0, sol, 1.0, p);
  EXPECT_TRUE(is_conjugate_symmetric(tr.final_state(), 1e-14));
  // S(T)u0 + int S G h = u1 by construction of the control.
  const auto lhs = diff(tr.final_state(), u1);
  const auto tail = duhamel_tail(tr);
  EXPECT_GT(norm(tail), 0.0);
  EXPECT_LE(norm(diff(lhs, tail)), 1e-6);
  EXPECT_LE(norm(diff(lhs, tail)), 1e-2 * norm(tail));
}

TEST(Picard, ZeroDataConvergesImmediately) {
  const ModeGrid2D grid(4, 2);
  const auto g = make_bump(-kPi / 2, kPi / 2, 4);
  SolverParams p;
  const auto r = picard_steer(Spectrum2D(grid), Spectrum2D(grid), 1.0, p, g);
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.history[0], 0.0);
  EXPECT_EQ(r.control.control_norm, 0.0);
  for (const auto& s : r.traj.states) EXPECT_EQ(s.coeffs.squaredNorm(), 0.0);
}

TEST(Picard, WithoutNonlinearityReproducesTheLinearControl) {
  std::mt19937_64 rng(8);
  const ModeGrid2D grid(4, 2);
  const auto g = make_bump(-kPi / 2, kPi / 2, 4);
  const auto u0 = random_spectrum(grid, rng, 1e-3, true);
  const auto u1 = random_spectrum(grid, rng, 1e-3, true);
  SolverParams p;
  p.nonlinear = false;
  const auto r = picard_steer(u0, u1, 1.0, p, g);
  EXPECT_EQ(r.history.size(), 1u);
  const auto lin = hum_solve(u0, u1, 1.0, g);
  for (int i = 0; i < grid.rows(); ++i) EXPECT_EQ(r.control.phi[i], lin.phi[i]);
}

TEST(Picard, SmallDataContractsAndSteers) {
  std::mt19937_64 rng(9);
  const ModeGrid2D grid(8, 4);
  const auto g = make_bump(-kPi / 2, kPi / 2, 8);
  const auto u0 = random_spectrum(grid, rng, 1e-3, true);
  const auto u1 = random_spectrum(grid, rng, 1e-3, true);
  SolverParams p;
  const auto r = picard_steer(u0, u1, 1.0, p, g);
  EXPECT_LE(r.history.size(), 20u);
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], 0.5 * r.history[i - 1]);
  EXPECT_LE(r.terminal_miss, 1e-4);
}

TEST(Picard, LargeDataLeavesTheContractionRegime) {
  std::mt19937_64 rng(10);
  const ModeGrid2D grid(8, 4);
  const auto g = make_bump(-kPi / 2, kPi / 2, 8);
  const auto u0 = random_spectrum(grid, rng, 100.0, true);
  const auto u1 = random_spectrum(grid, rng, 100.0, true);
  SolverParams p;
  p.R = 100.0;
  try {
    picard_steer(u0, u1, 1.0, p, g);
    FAIL();
  } catch (const NonConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("outside contraction regime"), std::string::npos);
    EXPECT_FALSE(e.history().empty());
  }
  p.R = 1.0;
  EXPECT_THROW(picard_steer(u0, u1, 1.0, p, g), ConfigError);
}

}  // namespace
}  // namespace kplab
