#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "stimemit/stim_prob.hpp"

using namespace stimemit;
using pulses::PulseShape;

namespace {

double exp_pstim(unsigned n, double x) { return pstim_exact(DriveSpec{n, PulseShape::exponential(x), 1.0}, asymptotic).p_stim; }

double n1_closed_form(double x) {
  return 8.0 * x * (3.0 - x) * (3.0 - x) / ((1.0 + x) * (1.0 + x) * (3.0 + x) * (3.0 + x));
}

}  // namespace

TEST(Prefactor, Examples) {
  EXPECT_NEAR(prefactor(1, 0, PrefactorKind::Stim).to_double(), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(prefactor(1, 1, PrefactorKind::Stim).to_double(), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(prefactor(144, 2, PrefactorKind::Stim).to_double(), std::sqrt(145.0) * 20592.0, 1e-9);
  EXPECT_EQ(prefactor(144, 2, PrefactorKind::P0).to_double(), 20592.0);
  try {
    prefactor(3, 4, PrefactorKind::Stim);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "term order exceeds photon number");
  }
}

TEST(PstimExact, ModeMatchForVacuum) {
  EXPECT_NEAR(exp_pstim(0, 1.0), 1.0, 1e-14);
  for (double x : {0.1, 0.5, 1.0, 2.0}) EXPECT_NEAR(exp_pstim(0, x), 4.0 * x / ((1.0 + x) * (1.0 + x)), 1e-14);
}

TEST(PstimExact, SinglePhotonClosedForm) {
  EXPECT_NEAR(exp_pstim(1, 1.0 / 3.0), 0.96, 1e-12);
  for (double x = 0.01; x < 20.0; x *= 1.37) EXPECT_NEAR(exp_pstim(1, x), n1_closed_form(x), 1e-12) << x;
  // n = 1, x = 3 is an exact zero of the amplitude.
  EXPECT_NEAR(exp_pstim(1, 3.0), 0.0, 1e-20);
}

TEST(PstimExact, FrozenReferenceValues) {
  // 60-digit evaluations of the closed-form series.
  EXPECT_NEAR(exp_pstim(2, 0.5), 0.61573058975656378254, 1e-13);
  EXPECT_NEAR(exp_pstim(5, 0.2), 0.72362738496172275574, 1e-13);
  EXPECT_NEAR(exp_pstim(64, 0.015625), 0.81744261762085628117, 1e-13);
  EXPECT_NEAR(exp_pstim(144, 0.01), 0.4526451638630663753, 1e-13);
  EXPECT_NEAR(exp_pstim(144, 0.001), 0.47590988541096004339, 1e-13);
  const double tiny = exp_pstim(144, 10.0);
  EXPECT_NEAR(tiny / 1.6456102995224302847e-10, 1.0, 1e-10);
}

TEST(PstimExact, LargeNAgreesWithSineSquared) {
  for (double x : {0.001, 0.005, 0.01, 0.02}) {
    EXPECT_LT(std::fabs(exp_pstim(144, x) - pstim_sin2(144, x, 1.0)), 0.02) << x;
  }
}

TEST(PstimExact, LargeNConvergenceIsMonotone) {
  double previous = 1.0;
  for (unsigned n : {4u, 16u, 64u, 256u}) {
    const double x = 1.0 / n;
    const double gap = std::fabs(exp_pstim(n, x) - pstim_sin2(n, x, 1.0));
    EXPECT_LT(gap, previous) << n;
    previous = gap;
  }
}

TEST(PstimExact, SinglePhotonOptimum) {
  double a = 0.2;
  double b = 0.6;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < 80; ++i) {
    const double c = b - g * (b - a);
    const double d = a + g * (b - a);
    if (exp_pstim(1, c) > exp_pstim(1, d)) {
      b = d;
    } else {
      a = c;
    }
  }
  const double best = 0.5 * (a + b);
  EXPECT_GE(best, 0.34);
  EXPECT_LE(best, 0.37);
  EXPECT_NEAR(best, 0.353371, 1e-5);
  EXPECT_NEAR(exp_pstim(1, best), 0.961413, 1e-6);
}

TEST(PstimExact, ProbabilityBoundsOnRandomInputs) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<unsigned> n_dist(0, 64);
  std::uniform_real_distribution<double> logx(std::log(1e-3), std::log(10.0));
  for (int i = 0; i < 60; ++i) {
    const unsigned n = n_dist(rng);
    const double x = std::exp(logx(rng));
    StimResult r = pstim_exact(DriveSpec{n, PulseShape::exponential(x), 1.0}, asymptotic);
    EXPECT_GE(r.p_stim, -1e-9);
    EXPECT_LE(r.p_stim, 1.0 + 1e-9) << n << " " << x;
    EXPECT_EQ(r.terms.size(), n + 1);
    EXPECT_FALSE(r.t.has_value());
    EXPECT_FALSE(r.p0.has_value());
  }
}

TEST(PstimExact, DeepCancellationStaysInRange) {
  StimResult r = pstim_exact(DriveSpec{144, PulseShape::exponential(10.0), 1.0}, asymptotic);
  EXPECT_GE(r.p_stim, 0.0);
  EXPECT_LE(r.p_stim, 1.0);
  // Largest term is ~e^54 against a sum near 1e-5.
  EXPECT_NEAR(r.max_term_magnitude.log2_abs(), std::log2(2.6738e23), 0.01);
  EXPECT_GE(r.precision_bits_used, 256u);
}

TEST(PstimExact, SquarePulseVacuumClosedForm) {
  for (double width : {0.3, 1.0, 4.0}) {
    StimResult r = pstim_exact(DriveSpec{0, PulseShape::square(width), 1.0}, asymptotic);
    const double amp = 2.0 / std::sqrt(width) * (1.0 - std::exp(-width / 2.0));
    EXPECT_NEAR(r.p_stim, amp * amp, 1e-9);
    EXPECT_GT(r.coefficient_error_bound, 0.0);
  }
}

TEST(PstimExact, GuardsDrive) {
  EXPECT_THROW(pstim_exact(DriveSpec{10'001, PulseShape::exponential(1.0), 1.0}, asymptotic), std::invalid_argument);
  EXPECT_THROW(pstim_exact(DriveSpec{1, PulseShape::exponential(1.0), 0.0}, asymptotic), std::invalid_argument);
}

TEST(PstimTimeseries, StartsInExcitedState) {
  const double t[] = {0.0};
  auto r = pstim_timeseries(DriveSpec{5, PulseShape::exponential(0.2), 1.0}, t);
  EXPECT_EQ(r[0].p_stim, 0.0);
  EXPECT_NEAR(*r[0].p0, 1.0, 1e-15);
}

TEST(PstimTimeseries, ApproachesAsymptote) {
  for (unsigned n : {0u, 1u, 3u, 12u}) {
    for (double x : {0.05, 0.35, 2.0}) {
      const double t = 40.0 * x + 40.0;
      EXPECT_NEAR(pstim_exact(DriveSpec{n, PulseShape::exponential(x), 1.0}, t).p_stim, exp_pstim(n, x), 1e-8)
          << n << " " << x;
    }
  }
}

TEST(PstimTimeseries, StimPlusP0NeverExceedsOne) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<unsigned> n_dist(0, 40);
  std::uniform_real_distribution<double> logx(std::log(1e-3), std::log(5.0));
  for (int trial = 0; trial < 12; ++trial) {
    const unsigned n = n_dist(rng);
    const double x = std::exp(logx(rng));
    std::vector<double> grid;
    for (int k = 0; k <= 30; ++k) grid.push_back(k * x / 2.0);
    for (const auto& r : pstim_timeseries(DriveSpec{n, PulseShape::exponential(x), 1.0}, grid)) {
      EXPECT_LE(r.p_stim + *r.p0, 1.0 + 1e-6) << n << " " << x << " " << *r.t;
      EXPECT_GE(*r.p0, -1e-9);
      EXPECT_LE(*r.p0, 1.0 + 1e-9);
    }
  }
}

TEST(PstimTimeseries, SinglePhotonP0AtLateTimes) {
  // After the pulse has passed and the atom has decayed, nothing is left in |n, e>.
  const double t[] = {80.0};
  auto r = pstim_timeseries(DriveSpec{1, PulseShape::exponential(1.0), 1.0}, t);
  EXPECT_NEAR(*r[0].p0, 0.0, 1e-12);
}

TEST(Sin2, Examples) {
  const unsigned n = 9;
  const double x = M_PI * M_PI / (16.0 * n);
  EXPECT_NEAR(pstim_sin2(n, x, 1.0), 1.0, 1e-15);
  EXPECT_EQ(pstim_sin2(7, 0.0, 1.0), 0.0);
  EXPECT_NEAR(pstim_sin2(144, 0.01, 1.0), 0.45625050828027675, 1e-15);
  EXPECT_EQ(p0_cos2(7, 0.0, 1.0), 1.0);
  EXPECT_NEAR(p0_cos2(144, 0.01, 1.0), 0.54374949171972325, 1e-15);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const double tau = u(rng);
    EXPECT_NEAR(pstim_sin2(i, tau, 1.0) + p0_cos2(i, tau, 1.0), 1.0, 1e-15);
  }
}

TEST(RabiShort, Endpoints) {
  const double tau = 0.001;
  const std::vector<double> grid{0.0, 60.0 * tau};
  auto r = rabi_timeseries_short(144, tau, 1.0, grid);
  EXPECT_EQ(r[0].p_stim, 0.0);
  EXPECT_NEAR(*r[0].p0, 1.0, 1e-15);
  EXPECT_NEAR(r[1].p_stim, pstim_sin2(144, tau, 1.0), 0.02);
  EXPECT_NEAR(*r[1].p0, p0_cos2(144, tau, 1.0), 0.02);
  EXPECT_TRUE(r[1].warnings.empty());
}

TEST(RabiShort, Completeness) {
  const double tau = 0.01;
  std::vector<double> grid;
  for (int k = 0; k <= 200; ++k) grid.push_back(k * 10.0 * tau / 200.0);
  double worst = 0.0;
  for (const auto& r : rabi_timeseries_short(16, tau, 1.0, grid)) worst = std::max(worst, std::fabs(1.0 - r.p_stim - *r.p0));
  EXPECT_LT(worst, 0.05);
}

TEST(RabiShort, WarnsOutsideValidity) {
  const double t[] = {1.0};
  auto r = rabi_timeseries_short(4, 0.5, 1.0, t);
  ASSERT_EQ(r[0].warnings.size(), 1u);
  EXPECT_NE(r[0].warnings[0].find("validity"), std::string::npos);
}

TEST(SquareRabi, Examples) {
  auto a = square_rabi(25, 0.01, 1.0, 0.0);
  EXPECT_EQ(a.p_stim, 0.0);
  EXPECT_EQ(a.p0, 1.0);
  const unsigned n = 10;
  const double width = M_PI * M_PI / (4.0 * n);
  auto b = square_rabi(n, width, 1.0, width);
  EXPECT_NEAR(b.p_stim, 1.0, 1e-15);
  EXPECT_NEAR(b.p0, 0.0, 1e-15);
  EXPECT_NEAR(b.rabi_frequency, std::sqrt(n / width), 1e-12);
  auto frozen = square_rabi(n, width, 1.0, 5.0 * width);
  EXPECT_EQ(frozen.p_stim, b.p_stim);
}

TEST(SquareRabi, EndOfPulseMatchesSineSquaredWithQuarterWidth) {
  for (unsigned n : {1u, 9u, 100u}) {
    for (double width : {0.001, 0.01, 0.04}) {
      EXPECT_NEAR(square_rabi(n, width, 1.0, width).p_stim, pstim_sin2(n, width / 4.0, 1.0), 1e-14);
    }
  }
}

TEST(SquareRabi, MatchesGeneralShortPulseMachinery) {
  const double width = 0.01;
  const double t[] = {width / 2.0};
  auto r = rabi_timeseries_short(DriveSpec{25, PulseShape::square(width), 1.0}, t);
  auto s = square_rabi(25, width, 1.0, t[0]);
  EXPECT_NEAR(r[0].p_stim, s.p_stim, 0.01);
  EXPECT_NEAR(*r[0].p0, s.p0, 0.01);
}
