#include <gtest/gtest.h>

#include "common.hpp"

using namespace kvmms;
using kvmms::testing::rel_err;

TEST(Propcheck, KornRatioSymmetricGradientIsHalf)
{
  for (int n : {9, 17, 33}) {
    const Grid g(2, n);
    const auto u = symmetric_gradient_field(g);
    for (const Mat& h : displacement_gradient_cells(g, u)) EXPECT_LE(std::abs(h(0, 1) - h(1, 0)), 1e-12);
    for (double pt : {1.5, 2.0, 3.0}) EXPECT_NEAR(korn_ratio(DeformationField::identity(g), u, pt), 0.5, 1e-12);
  }
}

// With y = id the quotient is |grad u| / (2 |sym grad u|), computed here independently.
TEST(Propcheck, KornRatioIdentityIsClassicalQuotient)
{
  const Grid g(2, 17);
  std::mt19937_64 rng(61);
  for (int k = 0; k < 20; ++k) {
    const auto u = random_bubble_field(g, rng, 0.1);
    double num = 0.0, den = 0.0;
    for (int c = 0; c < g.num_cells(); ++c) {
      const Mat h = cell_gradient(g, u, c);
      num += std::pow(frobenius(h), 2);
      den += std::pow(2 * frobenius(sym(h)), 2);
    }
    EXPECT_LT(rel_err(korn_ratio(DeformationField::identity(g), u, 2.0), std::sqrt(num / den)), 1e-12);
  }
}

TEST(Propcheck, KornRatioRejectsBoundaryValues)
{
  const Grid g(2, 9);
  std::vector<double> u(g.num_dofs(), 0.0);
  EXPECT_THROW(korn_ratio(DeformationField::identity(g), u, 2.0), std::invalid_argument);
  u[0] = 1.0;
  EXPECT_THROW(korn_ratio(DeformationField::identity(g), u, 2.0), std::invalid_argument);
}

// y1 = id + eps u: the rigidity ratio tends to the Korn ratio at the identity.
TEST(Propcheck, RigidityRatioTendsToKornRatio)
{
  const Grid g(2, 17);
  std::mt19937_64 rng(62);
  const auto u = random_bubble_field(g, rng, 1.0);
  const double korn = korn_ratio(DeformationField::identity(g), u, 2.0);
  double prev = kInfinity;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    auto v = u;
    for (auto& x : v) x *= eps;
    const double r = rigidity_ratio(DeformationField::identity(g), DeformationField::from_displacement(g, v), 2.0);
    const double err = std::abs(r - korn);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev / korn, 1e-3);
}

TEST(Propcheck, RigidityRatioIdenticalFieldsRejected)
{
  const Grid g(2, 9);
  const auto y = DeformationField::identity(g);
  EXPECT_THROW(rigidity_ratio(y, y, 2.0), std::invalid_argument);
}

TEST(Propcheck, RatioStatsHistogram)
{
  RatioStats st;
  st.add(0.5, 0);
  st.add(20.0, 1);
  st.add(0.001, 2);
  EXPECT_EQ(st.max, 20.0);
  EXPECT_EQ(st.argmax, 1);
  EXPECT_EQ(st.min, 0.001);
  EXPECT_EQ(st.histogram[0], 1);
  EXPECT_EQ(st.histogram[2], 1);
  EXPECT_EQ(st.histogram[4], 1);
  st.add(kInfinity, 3);
  EXPECT_EQ(st.infinite, 1);
  EXPECT_EQ(st.max, kInfinity);
}

TEST(Propcheck, AprioriIdentity)
{
  const Grid g(2, 9);
  AdmissibleSet adm{MaterialParams{}, DeformationField::identity(g)};
  const auto r = apriori_check(adm, LoadField::zero(g), DeformationField::identity(g));
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.min_det, 1.0);
  EXPECT_EQ(r.w2p_norm, 0.0);
}

TEST(Propcheck, SamplerIsDeterministicAndAdmissible)
{
  const RunConfig rc = reference_config();
  const auto st = static_setting(rc, 17);
  SampleSpec sp;
  sp.seed = 5;
  sp.count = 20;
  Sampler a(st.adm, st.load, sp), b(st.adm, st.load, sp);
  for (int i = 0; i < sp.count; ++i) {
    const auto ya = a.sample(i, 1);
    EXPECT_EQ(ya.displacement(), b.sample(i, 1).displacement());
    EXPECT_TRUE(st.adm.matches_boundary(ya));
    EXPECT_TRUE(apriori_check(st.adm, st.load, ya).ok);
  }
  EXPECT_NE(a.sample(0, 0).displacement(), a.sample(0, 1).displacement());
}

TEST(Propcheck, SamplerRejectsAboveCeiling)
{
  const RunConfig rc = reference_config();
  const auto st = static_setting(rc, 9);
  SampleSpec sp;
  sp.M = 1e-12;
  sp.max_attempts = 4;
  Sampler s(st.adm, st.load, sp);
  EXPECT_THROW(s.sample(0), SolverError);
  EXPECT_EQ(s.rejections(), 4);
}

TEST(Propcheck, MetricAxiomsSmallSample)
{
  const RunConfig rc = reference_config();
  const auto st = static_setting(rc, 17);
  SampleSpec sp;
  sp.seed = 7;
  sp.count = 50;
  Sampler s(st.adm, st.load, sp);
  const auto tri = triangle_study(s, rc.material);
  EXPECT_LE(tri.max_excess, 1e-12);
  EXPECT_EQ(tri.max_self_distance, 0.0);
  const auto ne = norm_equivalence_study(s, rc.material);
  EXPECT_GT(ne.min, 0.0);
  EXPECT_TRUE(std::isfinite(ne.max));
}

TEST(Propcheck, SlopeRepresentationAtMinimizerIsTrivial)
{
  const auto s = kvmms::testing::reference_setting();
  const auto ss = steady_state(s.adm, s.load);
  SampleSpec sp;
  sp.count = 20;
  sp.amplitude = 1e-3;
  const auto rec = slope_representation_check(s.adm, s.load, ss.y, sp, reference_representation_constants(2.0));
  EXPECT_LT(rec.slope, 1e-8);
  EXPECT_TRUE(rec.ok);
  EXPECT_LT(rec.max_ratio, 1e-6);
}

// The committed constants are reproduced bit for bit from the frozen seed set.
TEST(Propcheck, CommittedConstantsReproduce)
{
  const RunConfig rc = reference_config();
  const auto k17 = calibrate_korn(rc, 17);
  EXPECT_EQ(k17.rigidity, calibrated::kRigidity17);
  EXPECT_EQ(k17.korn, calibrated::kKorn17);
  const auto s = kvmms::testing::reference_setting();
  EXPECT_EQ(convexity_modulus(s.adm, s.load, reference_small_strain().delta, 100, calibrated::kConvexitySeed),
            calibrated::kConvexityModulus);
  EXPECT_EQ(calibrated::kLambdaHat, 0.5 * calibrated::kConvexityModulus);
}

TEST(Propcheck, DeltaPrimeIsConvex)
{
  EXPECT_TRUE(convex_at(reference_config(), reference_small_strain().delta));
  EXPECT_GT(calibrated::kDeltaPrime, reference_small_strain().delta);
}
