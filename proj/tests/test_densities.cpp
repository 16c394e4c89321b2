#include <gtest/gtest.h>

#include "common.hpp"

using namespace kvmms;
using kvmms::testing::random_mat;
using kvmms::testing::random_tens;
using kvmms::testing::rel_err;

namespace {

MaterialParams anisotropic(double pt)
{
  MaterialParams mp;
  mp.p_tilde = pt;
  mp.A = Mat::from_rows({2.0, 0.3}, {-0.4, 1.5});
  return mp;
}

/// max_ij |analytic_ij - central FD_ij| / max(|analytic|, |FD|), step h.
template <class Fn>
double fd_mat_error(const Mat& x, const Mat& analytic, Fn f, double h = 1e-6)
{
  double worst = 0.0;
  Mat fd(x.d);
  for (int i = 0; i < x.d * x.d; ++i) {
    Mat xp = x, xm = x;
    xp.a[static_cast<std::size_t>(i)] += h;
    xm.a[static_cast<std::size_t>(i)] -= h;
    fd.a[static_cast<std::size_t>(i)] = (f(xp) - f(xm)) / (2 * h);
  }
  const double scale = std::max(frobenius(analytic), frobenius(fd));
  for (int i = 0; i < x.d * x.d; ++i)
    worst = std::max(worst, std::abs(analytic.a[static_cast<std::size_t>(i)] - fd.a[static_cast<std::size_t>(i)]) / scale);
  return worst;
}

}  // namespace

TEST(Densities, StoredEnergyExamples)
{
  MaterialParams mp;
  EXPECT_EQ(stored_energy(mp, Mat::identity(2)).value, 0.0);
  // |diag(4,1) - Id|^2 = 9, h_4(2) = 2^-4 + 4 - 1.
  EXPECT_DOUBLE_EQ(stored_energy(mp, Mat::diag(2, 1)).value, 12.0625);
  EXPECT_EQ(stored_energy(mp, Mat::diag(1, -1)).value, kInfinity);
  EXPECT_EQ(stored_energy(mp, Mat::diag(1, 0)).value, kInfinity);
  EXPECT_NEAR(stored_energy(mp, rotation(2, 1.1)).value, 0.0, 1e-28);
}

TEST(Densities, BarrierSeriesMatchesDirectFormula)
{
  for (double q : {4.0, 6.0})
    for (double s : {-0.2, -0.05, 1e-3, 0.1, 0.24}) {
      const double direct = std::pow(1.0 + s, -q) + q * s - 1.0;
      EXPECT_LT(rel_err(barrier_shifted(q, s), direct), 1e-10) << q << " " << s;
    }
  // Leading term q (q + 1) / 2 s^2, where the direct formula cancels completely.
  EXPECT_NEAR(barrier_shifted(4.0, 1e-9) / 1e-18, 10.0, 1e-6);
}

TEST(Densities, StrainGradientEnergy)
{
  MaterialParams mp;
  Tens3 g(2);
  EXPECT_EQ(strain_gradient_energy(mp, g).value, 0.0);
  g(0, 0, 0) = 2.0;
  EXPECT_DOUBLE_EQ(strain_gradient_energy(mp, g).value, 16.0 / 4.0);
}

TEST(Densities, ViscousPotentialExamples)
{
  MaterialParams mp;
  // F = Id, Fdot = S symmetric: Cdot = 2S, R = |2S|^2 / 2.
  const Mat s = Mat::from_rows({1, 0}, {0, 0});
  EXPECT_DOUBLE_EQ(viscous_potential(mp, Mat::identity(2), s).value, 2.0);
  // Rigid rate Fdot = W F dissipates nothing.
  const Mat f = Mat::from_rows({1.1, 0.2}, {0.0, 0.9});
  const Mat w = Mat::from_rows({0, 1}, {-1, 0});
  EXPECT_LT(viscous_potential(mp, f, w * f).value, 1e-28);
}

TEST(Densities, DissipationExamples)
{
  MaterialParams mp;
  EXPECT_EQ(dissipation_density(mp, Mat::diag(2, 1), Mat::diag(2, 1)), 0.0);
  EXPECT_DOUBLE_EQ(dissipation_density(mp, Mat::diag(2, 1), Mat::identity(2)), 3.0);
  const Mat q = rotation(2, 0.4);
  EXPECT_LT(dissipation_density(mp, q, Mat::identity(2)), 1e-15);
  const auto b = dissipation_bounds(Mat::diag(2.0, 0.5));
  EXPECT_NEAR(b.lower, 0.5, 1e-12);
  EXPECT_NEAR(b.upper, 2.0, 1e-12);
}

TEST(Densities, ValidationRejectsBadParameters)
{
  MaterialParams mp;
  EXPECT_NO_THROW(mp.validate());
  auto bad = mp;
  bad.q = 3.0;  // q >= p d / (p - d) = 4
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = mp;
  bad.p = 2.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = mp;
  bad.p_tilde = 1.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = mp;
  bad.A = Mat::zero(2);
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = mp;
  bad.kappa_P = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

// 100 seeded inputs per density, singular neighbourhoods excluded.
TEST(Densities, StoredEnergyDerivativeMatchesFiniteDifferences)
{
  MaterialParams mp;
  std::mt19937_64 rng(11);
  int checked = 0;
  while (checked < 100) {
    const Mat f = Mat::identity(2) + random_mat(rng, 2, 0.6);
    if (det(f) < 0.2) continue;
    ++checked;
    const auto w = stored_energy(mp, f);
    EXPECT_LE(fd_mat_error(f, w.grad, [&](const Mat& x) { return stored_energy(mp, x).value; }), 1e-6);
  }
}

TEST(Densities, StrainGradientDerivativeMatchesFiniteDifferences)
{
  MaterialParams mp;
  std::mt19937_64 rng(12);
  for (int k = 0; k < 100; ++k) {
    Tens3 g = random_tens(rng, 2, 1.0);
    if (frobenius(g) < 0.1) g(0, 0, 0) += 0.5;
    const auto pe = strain_gradient_energy(mp, g);
    double worst = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      Tens3 gp = g, gm = g;
      const double h = 1e-6;
      gp.a[static_cast<std::size_t>(i)] += h;
      gm.a[static_cast<std::size_t>(i)] -= h;
      const double fd = (strain_gradient_energy(mp, gp).value - strain_gradient_energy(mp, gm).value) / (2 * h);
      worst = std::max(worst, std::abs(fd - pe.grad.a[static_cast<std::size_t>(i)]) / frobenius(pe.grad));
    }
    EXPECT_LE(worst, 1e-6);
  }
}

TEST(Densities, ViscousDerivativeMatchesFiniteDifferences)
{
  for (double pt : {1.5, 2.0, 3.0}) {
    const auto mp = anisotropic(pt);
    std::mt19937_64 rng(13);
    int checked = 0;
    while (checked < 100) {
      const Mat f = Mat::identity(2) + random_mat(rng, 2, 0.5);
      const Mat fdot = random_mat(rng, 2, 1.0);
      if (det(f) < 0.2 || frobenius(mp.A * cauchy_green_rate(f, fdot)) < 0.1) continue;
      ++checked;
      const auto r = viscous_potential(mp, f, fdot);
      EXPECT_LE(fd_mat_error(fdot, r.grad, [&](const Mat& x) { return viscous_potential(mp, f, x).value; }), 1e-6)
          << pt;
    }
  }
}

TEST(Densities, FrameIndifference)
{
  const auto mp = anisotropic(1.5);
  std::mt19937_64 rng(21);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Mat q = random_rotation(2, 1000 + s);
    const Mat f1 = Mat::identity(2) + random_mat(rng, 2, 0.4);
    const Mat f2 = Mat::identity(2) + random_mat(rng, 2, 0.4);
    const Mat fdot = random_mat(rng, 2, 1.0);
    worst = std::max(worst, rel_err(stored_energy(mp, q * f1).value, stored_energy(mp, f1).value));
    worst = std::max(worst, rel_err(viscous_potential(mp, q * f1, q * fdot).value, viscous_potential(mp, f1, fdot).value));
    worst = std::max(worst, rel_err(dissipation_density(mp, q * f1, q * f2), dissipation_density(mp, f1, f2)));
  }
  EXPECT_LE(worst, 1e-12);
}

// (W.3)-type growth floor with the committed constants, on samples independent of the calibration grid.
TEST(Densities, GrowthFloorHoldsWithCalibratedConstants)
{
  MaterialParams mp;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ls(std::log(0.1), std::log(10.0));
  std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
  int checked = 0;
  while (checked < 1000) {
    const double s1 = std::exp(ls(rng));
    const double s2 = std::exp(ls(rng));
    if (s1 * s2 < 0.1 || s1 * s2 > 10.0) continue;
    ++checked;
    const Mat f = rotation(2, ang(rng)) * Mat::diag(s1, s2) * rotation(2, ang(rng));
    const double floor = calibrated::kGrowthFloorC * (std::pow(frobenius(f), 2) + std::pow(det(f), -mp.q)) -
                         calibrated::kGrowthFloorBigC;
    EXPECT_GE(stored_energy(mp, f).value, floor);
  }
}

TEST(Densities, GrowthFloorOracleReproducesCommittedConstant)
{
  MaterialParams mp;
  const double c = growth_floor_constant(mp, calibrated::kGrowthFloorC);
  EXPECT_LE(c, calibrated::kGrowthFloorBigC);
  EXPECT_GT(c, calibrated::kGrowthFloorBigC - 1e-3);
}
