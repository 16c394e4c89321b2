#include <gtest/gtest.h>

#include "common.hpp"

using namespace kvmms;
using kvmms::testing::random_mat;

TEST(Tensor, SymExamples)
{
  const Mat m = Mat::from_rows({0, 1}, {0, 0});
  const Mat s = sym(m);
  EXPECT_EQ(s(0, 0), 0.0);
  EXPECT_EQ(s(0, 1), 0.5);
  EXPECT_EQ(s(1, 0), 0.5);
  const Mat sy = Mat::from_rows({1, 2}, {2, 3});
  EXPECT_EQ(sym(sy).a, sy.a);
  const Mat sk = Mat::from_rows({0, 2}, {-2, 0});
  EXPECT_EQ(frobenius(sym(sk)), 0.0);
}

TEST(Tensor, CauchyGreen)
{
  EXPECT_EQ(cauchy_green(Mat::identity(2)).a, Mat::identity(2).a);
  EXPECT_EQ(cauchy_green(Mat::diag(2, 1)).a, Mat::diag(4, 1).a);
  const Mat c = cauchy_green(rotation(2, 0.7));
  EXPECT_LT(frobenius(c - Mat::identity(2)), 1e-15);
}

TEST(Tensor, CauchyGreenRate)
{
  const Mat s = Mat::from_rows({1, 0.5}, {0.5, -2});
  EXPECT_EQ(cauchy_green_rate(Mat::identity(2), s).a, (2.0 * s).a);
  const Mat r = cauchy_green_rate(Mat::identity(2), Mat::from_rows({0, 1}, {0, 0}));
  EXPECT_EQ(r.a, Mat::from_rows({0, 1}, {1, 0}).a);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const Mat f = Mat::identity(2) + random_mat(rng, 2, 0.5);
    const Mat w = skew(random_mat(rng, 2, 1.0));
    EXPECT_LT(frobenius(cauchy_green_rate(f, w * f)), 1e-14);
  }
}

TEST(Tensor, Frobenius)
{
  EXPECT_DOUBLE_EQ(frobenius(Mat::identity(2)), std::sqrt(2.0));
  EXPECT_EQ(frobenius(Mat::zero(2)), 0.0);
  EXPECT_EQ(frobenius(Mat::from_rows({3, 4}, {0, 0})), 5.0);
}

TEST(Tensor, DetInv)
{
  EXPECT_EQ(det(Mat::identity(2)), 1.0);
  EXPECT_EQ(det(Mat::diag(2, 3)), 6.0);
  const auto i = inv(Mat::diag(2, 4));
  ASSERT_TRUE(i.has_value());
  EXPECT_EQ(i->a, Mat::diag(0.5, 0.25).a);
  EXPECT_FALSE(inv(Mat::zero(2)).has_value());
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    const Mat m = Mat::identity(2) + random_mat(rng, 2, 0.5);
    EXPECT_LT(frobenius(m * *inv(m) - Mat::identity(2)), 1e-12);
  }
}

TEST(Tensor, DetIdentityPlusMinusOne)
{
  std::mt19937_64 rng(7);
  for (int k = 0; k < 50; ++k) {
    const Mat h = random_mat(rng, 2, 0.3);
    EXPECT_NEAR(det_identity_plus_minus_one(h), det(Mat::identity(2) + h) - 1.0, 1e-15);
  }
  // Tiny H: the direct formula would lose every digit.
  const Mat h = Mat::diag(1e-17, 2e-17);
  EXPECT_DOUBLE_EQ(det_identity_plus_minus_one(h), 3e-17);
}

TEST(Tensor, RandomRotationsAreRotations)
{
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Mat q = random_rotation(2, s);
    EXPECT_LT(frobenius(transpose(q) * q - Mat::identity(2)), 1e-14);
    EXPECT_NEAR(det(q), 1.0, 1e-14);
  }
}

// (a+b)^2 = a^2 + b^2 + 2ab and (a+b)^3 = a^3 + b^3 + 3(a^2 b + a b^2): constants 2 and 3.
TEST(Tensor, PowerInequalityIntegerExponents)
{
  EXPECT_NEAR(power_inequality_constant(2.0), 2.0, 1e-12);
  EXPECT_NEAR(power_inequality_constant(3.0), 3.0, 1e-12);
}

TEST(Tensor, PowerInequalityBruteForce)
{
  for (double p : {1.25, 1.5, 2.5, 4.0}) {
    double best = 0.0;
    for (int i = 1; i < 200000; ++i) best = std::max(best, power_inequality_ratio(p, i / 200000.0));
    if (p >= 2.0) best = std::max(best, p);
    const double c = power_inequality_constant(p);
    EXPECT_GE(c, best - 1e-9) << p;
    EXPECT_LE(c, best + 1e-6) << p;
  }
  EXPECT_THROW(power_inequality_constant(1.0), std::invalid_argument);
}
