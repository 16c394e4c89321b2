#pragma once

/**
 * @file sampling.hpp
 *
 * @brief Smooth polynomial fields and seeded random perturbations that
 * vanish on the boundary layer.
 */

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "kvmms/field.hpp"

namespace kvmms {

/// Vector field sum_{i,j <= 2} c[a][i + 3 j] x1^i x2^j per component a.
struct PolyField {
  std::array<std::array<double, 9>, kMaxDim> c{};

  Vec operator()(const Vec& x) const
  {
    const std::array<double, 3> px{1.0, x[0], x[0] * x[0]};
    const std::array<double, 3> py{1.0, x[1], x[1] * x[1]};
    Vec out{};
    for (std::size_t a = 0; a < kMaxDim; ++a)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t i = 0; i < 3; ++i) out[a] += c[a][i + 3 * j] * px[i] * py[j];
    return out;
  }
};

/// 16 x1 (1 - x1) x2 (1 - x2) in 2D, 4 x (1 - x) in 1D; equals 1 at the centre.
inline double unit_bubble(const Vec& x, int d)
{
  double b = 4.0 * x[0] * (1.0 - x[0]);
  if (d == 2) b *= 4.0 * x[1] * (1.0 - x[1]);
  return b;
}

/// Independent, reproducible seed for sample `index` of a run seeded with `seed` (splitmix64).
inline std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index)
{
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Random polynomial with coefficients uniform in [-1, 1] on monomials x1^i x2^j, i, j <= degree.
inline PolyField random_poly(std::mt19937_64& rng, int degree = 2)
{
  if (degree < 0 || degree > 2) throw std::invalid_argument("random_poly: degree must lie in [0, 2]");
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  PolyField pf;
  for (auto& row : pf.c)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t i = 0; i < 3; ++i) row[i + 3 * j] = (static_cast<int>(std::max(i, j)) <= degree) ? coef(rng) : 0.0;
  return pf;
}

/// amplitude * b(x) * (random polynomial), zero on the boundary layer.
inline std::vector<double> random_bubble_field(const Grid& g, std::mt19937_64& rng, double amplitude, int degree = 2)
{
  const PolyField pf = random_poly(rng, degree);
  const int d = g.dim();
  std::vector<double> out(g.num_dofs(), 0.0);
  for (int k = 0; k < g.num_nodes(); ++k) {
    if (g.is_boundary(k)) continue;
    const Vec x = g.coords(k);
    const Vec v = pf(x);
    const double b = unit_bubble(x, d);
    for (int a = 0; a < d; ++a)
      out[static_cast<std::size_t>(k * d + a)] = amplitude * b * v[static_cast<std::size_t>(a)];
  }
  return out;
}

}  // namespace kvmms
