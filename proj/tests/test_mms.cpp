#include <gtest/gtest.h>

#include "common.hpp"

using namespace kvmms;
using kvmms::testing::perturb;

TEST(Mms, ConfigValidation)
{
  MmsConfig c;
  EXPECT_NO_THROW(c.validate());
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.T = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.tau = 0.3;
  c.T = 1.0;
  EXPECT_EQ(c.num_steps(), 4);
  c.tau = 0.1;
  EXPECT_EQ(c.num_steps(), 10);
}

TEST(Mms, EquilibriumIsStationary)
{
  const Grid g(2, 9);
  AdmissibleSet adm{MaterialParams{}, DeformationField::identity(g)};
  MmsConfig cfg;
  cfg.T = 0.05;
  const auto traj = run(adm, LoadField::zero(g), cfg, DeformationField::identity(g));
  for (const auto& y : traj.fields)
    for (double v : y.displacement()) EXPECT_EQ(v, 0.0);
  EXPECT_FALSE(traj.any_flagged());
}

TEST(Mms, DatumViolationRejected)
{
  const auto s = kvmms::testing::reference_setting();
  auto y = s.y0;
  y.displacement()[0] += 1e-3;
  EXPECT_THROW(run(s.adm, s.load, MmsConfig{}, y), std::domain_error);
}

TEST(Mms, ExactDescentEveryStep)
{
  for (double pt : {1.5, 2.0, 3.0}) {
    const auto s = kvmms::testing::reference_setting(pt);
    MmsConfig cfg;
    cfg.tau = 0.02;
    cfg.T = 0.5;
    const auto traj = run(s.adm, s.load, cfg, s.y0);
    const auto dc = descent_check(traj);
    EXPECT_TRUE(dc.ok()) << pt;
    EXPECT_EQ(dc.steps, 25);
    for (std::size_t n = 1; n < traj.records.size(); ++n) EXPECT_LE(traj.records[n].phi, traj.records[n - 1].phi);
  }
}

TEST(Mms, IterationCapFlagsButStillDescends)
{
  const auto s = kvmms::testing::reference_setting();
  MmsConfig cfg;
  cfg.tau = 0.05;
  cfg.T = 0.2;
  cfg.inner_max_iters = 2;
  cfg.inner_tol = 1e-14;
  const auto traj = run(s.adm, s.load, cfg, s.y0);
  EXPECT_TRUE(traj.any_flagged());
  const auto dc = descent_check(traj);
  EXPECT_EQ(dc.violations, 0);
  EXPECT_GT(dc.flagged, 0);
}

TEST(Mms, InterpolantIsPiecewiseConstant)
{
  const auto s = kvmms::testing::reference_setting();
  MmsConfig cfg;
  cfg.tau = 0.1;
  cfg.T = 0.3;
  const auto traj = run(s.adm, s.load, cfg, s.y0);
  EXPECT_EQ(&traj.at(0.0), &traj.fields[0]);
  EXPECT_EQ(&traj.at(0.05), &traj.fields[1]);
  EXPECT_EQ(&traj.at(0.1), &traj.fields[1]);
  EXPECT_EQ(&traj.at(0.1000001), &traj.fields[2]);
  EXPECT_EQ(&traj.at(7.0), &traj.fields[3]);
}

// With f = 0, rotating datum and initial field rotates the trajectory.
TEST(Mms, LeftRotationEquivariance)
{
  for (double pt : {1.5, 2.0, 3.0}) {
    RunConfig rc = reference_config();
    rc.small_strain.delta = 0.1;
    rc.material = with_viscosity(rc.material, pt, 1.0);
    const Grid g = rc.grid();
    const auto adm = rc.small_strain.admissible(rc.material, g);
    const auto load = LoadField::zero(g);
    std::mt19937_64 rng(51);
    const auto y0 = perturb(adm.yhat, rng, 0.1);
    MmsConfig cfg;
    cfg.tau = 0.02;
    cfg.T = 0.4;
    cfg.inner_tol = 1e-9;
    const auto traj = run(adm, load, cfg, y0);
    ASSERT_FALSE(traj.any_flagged());
    for (std::uint64_t seed : {1, 2, 3}) {
      const Mat q = random_rotation(2, seed);
      AdmissibleSet adm_q = adm;
      adm_q.yhat = adm.yhat.rotated(q);
      const auto traj_q = run(adm_q, load, cfg, y0.rotated(q));
      ASSERT_FALSE(traj_q.any_flagged());
      for (int n = 0; n <= traj.steps(); ++n)
        EXPECT_LE(metric(adm.params, traj.fields[static_cast<std::size_t>(n)].rotated(q),
                         traj_q.fields[static_cast<std::size_t>(n)]),
                  10 * cfg.inner_tol)
            << pt << " step " << n;
    }
  }
}
