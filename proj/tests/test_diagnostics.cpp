#include <gtest/gtest.h>

#include "common.hpp"

using namespace kvmms;

namespace {

Trajectory reference_run(double tau, double T = 1.0)
{
  const auto s = kvmms::testing::reference_setting();
  MmsConfig cfg;
  cfg.tau = tau;
  cfg.T = T;
  cfg.inner_tol = 1e-12;
  cfg.inner_max_iters = 20000;
  return run(s.adm, s.load, cfg, s.y0);
}

SlopeOptions tight()
{
  SlopeOptions o;
  o.tol = 1e-12;
  return o;
}

}  // namespace

TEST(Diagnostics, EdbRowsAreConsistent)
{
  const auto s = kvmms::testing::reference_setting();
  const auto traj = reference_run(0.02, 0.2);
  const auto rep = edb_report(s.adm, s.load, traj, tight());
  ASSERT_EQ(rep.rows.size(), traj.fields.size());
  EXPECT_EQ(rep.slope_flags, 0);
  EXPECT_EQ(rep.rows.front().residual, 0.0);
  for (std::size_t n = 1; n < rep.rows.size(); ++n) {
    const auto& r = rep.rows[n];
    EXPECT_GE(r.cum_metric, rep.rows[n - 1].cum_metric);
    EXPECT_GE(r.cum_slope, rep.rows[n - 1].cum_slope);
    EXPECT_NEAR(r.residual, r.cum_metric + r.cum_slope + r.phi - rep.rows.front().phi, 1e-12);
  }
}

TEST(Diagnostics, FlaggedTrajectoryRejected)
{
  const auto s = kvmms::testing::reference_setting();
  MmsConfig cfg;
  cfg.tau = 0.05;
  cfg.T = 0.1;
  cfg.inner_max_iters = 1;
  cfg.inner_tol = 1e-14;
  const auto traj = run(s.adm, s.load, cfg, s.y0);
  EXPECT_THROW(edb_report(s.adm, s.load, traj), std::domain_error);
  EXPECT_THROW(dissipation_identity_residual(s.adm, s.load, traj), std::domain_error);
}

// Halving tau contracts both residuals by at least 0.75.
TEST(Diagnostics, EdbRefinement)
{
  const auto s = kvmms::testing::reference_setting();
  std::vector<double> edb, ident;
  for (double tau : {1e-2, 5e-3, 2.5e-3}) {
    const auto traj = reference_run(tau);
    ASSERT_FALSE(traj.any_flagged());
    const auto rep = edb_report(s.adm, s.load, traj, tight());
    edb.push_back(std::abs(rep.final_residual));
    ident.push_back(std::abs(rep.dissipation_identity));
  }
  for (std::size_t i = 1; i < edb.size(); ++i) {
    EXPECT_LE(edb[i], 0.75 * edb[i - 1]);
    EXPECT_LE(ident[i], 0.75 * ident[i - 1]);
  }
}

TEST(Diagnostics, WeakResidualShrinksWithTau)
{
  const auto s = kvmms::testing::reference_setting();
  std::vector<double> res;
  for (double tau : {2e-2, 1e-2, 5e-3}) {
    const auto traj = reference_run(tau, 0.2);
    const int n = traj.steps();
    res.push_back(weak_residual(s.adm, s.load, traj.fields[static_cast<std::size_t>(n)], discrete_rate(traj, n)));
  }
  EXPECT_LT(res[1], res[0]);
  EXPECT_LT(res[2], res[1]);
}

TEST(Diagnostics, WeakResidualZeroAtRestingEquilibrium)
{
  const Grid g(2, 9);
  AdmissibleSet adm{MaterialParams{}, DeformationField::identity(g)};
  const std::vector<double> rate(g.num_dofs(), 0.0);
  EXPECT_EQ(weak_residual(adm, LoadField::zero(g), DeformationField::identity(g), rate), 0.0);
}

TEST(Diagnostics, TestBasisIsNormalized)
{
  const Grid g(2, 11);
  const auto basis = weak_test_basis(g, 4.0);
  EXPECT_EQ(basis.size(), 2u * 5u * 5u);
  for (const auto& v : basis) EXPECT_NEAR(discrete_w2p_norm(g, v, 4.0), 1.0, 1e-12);
}
