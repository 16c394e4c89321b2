#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <random>
#include <vector>

#include "kvmms/kvmms.hpp"

namespace kvmms::testing {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

inline Mat random_mat(std::mt19937_64& rng, int d, double scale)
{
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(d);
  for (int i = 0; i < d * d; ++i) m.a[static_cast<std::size_t>(i)] = u(rng);
  return m;
}

inline Tens3 random_tens(std::mt19937_64& rng, int d, double scale)
{
  std::uniform_real_distribution<double> u(-scale, scale);
  Tens3 g(d);
  for (int i = 0; i < g.size(); ++i) g.a[static_cast<std::size_t>(i)] = u(rng);
  return g;
}

/// Central difference of f at u along v.
inline double directional_fd(const std::function<double(std::span<const double>)>& f, const std::vector<double>& u,
                             const std::vector<double>& v, double h)
{
  auto up = u, um = u;
  for (std::size_t i = 0; i < u.size(); ++i) {
    up[i] += h * v[i];
    um[i] -= h * v[i];
  }
  return (f(up) - f(um)) / (2 * h);
}

/// Interior-supported random field of amplitude amp added to the base displacement.
inline DeformationField perturb(const DeformationField& y, std::mt19937_64& rng, double amp)
{
  auto u = y.displacement();
  const auto v = random_bubble_field(y.grid(), rng, amp);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] += v[i];
  return DeformationField::from_displacement(y.grid(), std::move(u));
}

/// Reference small-strain setting at viscosity exponent pt and anisotropy a Id.
inline Setting reference_setting(double pt = 2.0, double a = 1.0, int n = 9)
{
  RunConfig rc = reference_config();
  rc.grid_n = n;
  rc.material = with_viscosity(rc.material, pt, a);
  return make_setting(rc, rc.material);
}

}  // namespace kvmms::testing
