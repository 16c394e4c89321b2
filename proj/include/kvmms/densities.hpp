#pragma once

/**
 * @file densities.hpp
 *
 * @brief Pointwise stored energy W, strain-gradient energy P, viscous
 * potential R and dissipation density D, each with its analytic first
 * derivative.
 *
 * Catalog choices:
 *   W(F)        = alpha |F^T F - Id|^2 + beta h_q(det F),
 *                 h_q(s) = s^{-q} + q s - (q + 1), +inf for det F <= 0
 *   P(G)        = (kappa / p) |G|^p
 *   R(F, Fdot)  = (1 / pt) |A Cdot|^pt,  Cdot = Fdot^T F + F^T Fdot
 *   D(F1, F2)   = |A F1^T F1 - A F2^T F2|
 * where pt is the viscosity exponent. Material parameters are spatially
 * homogeneous; A is a single invertible matrix.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "kvmms/tensor.hpp"

namespace kvmms {

struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct MaterialParams {
  int d = 2;
  double p = 4.0;        ///< strain-gradient exponent, p > d
  double p_tilde = 2.0;  ///< viscosity exponent, > 1
  double q = 4.0;        ///< determinant barrier exponent, q >= p d / (p - d)
  double alpha_W = 1.0;
  double beta_W = 1.0;
  double kappa_P = 1.0;
  Mat A = Mat::identity(2);
  double c0 = 0.0;  ///< recorded lower bound constant, reporting only
  double C0 = 0.0;  ///< recorded upper bound constant, reporting only
  double delta = 0.0;

  double p_prime() const { return p_tilde / (p_tilde - 1.0); }

  void validate() const
  {
    auto fail = [](const std::string& msg) { throw ValidationError("MaterialParams: " + msg); };
    if (d < 1 || d > kMaxDim) fail("d must be 1 or 2");
    if (A.d != d) fail("anisotropy matrix dimension does not match d");
    if (!(p > d)) fail("p must exceed d");
    if (!(p >= 2.0)) fail("p must be at least 2 so that dP is defined at G = 0");
    if (!(q >= p * d / (p - d) - 1e-12)) {
      std::ostringstream os;
      os << "q must satisfy q >= p d / (p - d) = " << p * d / (p - d);
      fail(os.str());
    }
    if (!(p_tilde > 1.0)) fail("p_tilde must exceed 1");
    if (!(alpha_W >= 0.0) || !(beta_W >= 0.0)) fail("alpha_W and beta_W must be nonnegative");
    if (!(kappa_P > 0.0)) fail("kappa_P must be positive");
    if (!(std::abs(det(A)) > kSingularThreshold)) fail("anisotropy matrix A must be invertible");
    if (!(delta >= 0.0)) fail("delta must be nonnegative");
  }
};

/// Density value together with its first derivative in the natural argument.
template <class Deriv>
struct DensityEval {
  double value = 0.0;
  Deriv grad;

  bool finite() const { return std::isfinite(value); }
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Determinant barrier h_q(1 + s) and its derivative, accurate for small s.

/// h_q(1 + s) = (1+s)^{-q} + q s - 1. Requires s > -1.
inline double barrier_shifted(double q, double s)
{
  if (std::abs(s) < 0.25) {
    // Binomial series of (1+s)^{-q} from the quadratic term on.
    double term = q * (q + 1.0) / 2.0 * s * s;
    double sum = 0.0;
    for (int k = 2; k < 200; ++k) {
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
      term *= -(q + k) / (k + 1.0) * s;
    }
    return sum;
  }
  return std::expm1(-q * std::log1p(s)) + q * s;
}

/// h_q'(1 + s) = q (1 - (1+s)^{-q-1}).
inline double barrier_shifted_derivative(double q, double s)
{
  return -q * std::expm1(-(q + 1.0) * std::log1p(s));
}

inline double barrier(double q, double jac) { return barrier_shifted(q, jac - 1.0); }

// ---------------------------------------------------------------------------
// W

/// Stored energy from the displacement gradient H = F - Id.
inline DensityEval<Mat> stored_energy_from_displacement(const MaterialParams& mp, const Mat& h)
{
  const int d = h.d;
  const double s = det_identity_plus_minus_one(h);
  DensityEval<Mat> out{kInfinity, Mat(d)};
  if (!(s > -1.0)) return out;

  const Mat strain = green_strain_doubled(h);  // C - Id
  const Mat f = Mat::identity(d) + h;
  out.value = mp.alpha_W * ddot(strain, strain) + mp.beta_W * barrier_shifted(mp.q, s);
  out.grad = (4.0 * mp.alpha_W) * (f * strain) +
             (mp.beta_W * barrier_shifted_derivative(mp.q, s)) * cofactor(f);
  return out;
}

inline DensityEval<Mat> stored_energy(const MaterialParams& mp, const Mat& f)
{
  return stored_energy_from_displacement(mp, f - Mat::identity(f.d));
}

// ---------------------------------------------------------------------------
// P

inline DensityEval<Tens3> strain_gradient_energy(const MaterialParams& mp, const Tens3& g)
{
  const double n2 = tdot(g, g);
  DensityEval<Tens3> out{0.0, Tens3(g.d)};
  if (n2 == 0.0) return out;
  const double n = std::sqrt(n2);
  const double np2 = std::pow(n, mp.p - 2.0);
  out.value = mp.kappa_P / mp.p * np2 * n2;
  out.grad = (mp.kappa_P * np2) * g;
  return out;
}

// ---------------------------------------------------------------------------
// R

/// Viscous potential and its derivative in Fdot. The derivative is set to 0
/// where A Cdot = 0.
inline DensityEval<Mat> viscous_potential(const MaterialParams& mp, const Mat& f, const Mat& fdot)
{
  const Mat cdot = cauchy_green_rate(f, fdot);
  const Mat acdot = mp.A * cdot;
  const double n2 = ddot(acdot, acdot);
  DensityEval<Mat> out{0.0, Mat(f.d)};
  if (n2 == 0.0) return out;
  const double n = std::sqrt(n2);
  const double pt = mp.p_tilde;
  const double npm2 = std::pow(n, pt - 2.0);
  out.value = npm2 * n2 / pt;
  const Mat ata = transpose(mp.A) * mp.A;
  out.grad = npm2 * (f * cdot * ata + f * ata * cdot);
  return out;
}

// ---------------------------------------------------------------------------
// D

/// A (F1^T F1 - F2^T F2) assembled from dF = F1 - F2 without cancellation.
inline Mat transformed_strain_gap(const MaterialParams& mp, const Mat& f1, const Mat& f2, const Mat& df)
{
  return mp.A * (transpose(df) * f1 + transpose(f2) * df);
}

inline double dissipation_density(const MaterialParams& mp, const Mat& f1, const Mat& f2)
{
  return frobenius(transformed_strain_gap(mp, f1, f2, f1 - f2));
}

/**
 * @brief Extreme gains of S -> A S over symmetric S, i.e. the best constants
 * in c |S| <= |A S| <= C |S|. These bracket D against |F1^T F1 - F2^T F2|.
 */
struct DissipationBounds {
  double lower = 0.0;
  double upper = 0.0;
};

namespace detail {

// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations.
inline std::array<double, 3> sym3_eigenvalues(std::array<std::array<double, 3>, 3> m)
{
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) off += m[i][j] * m[i][j];
    if (off < 1e-30) break;
    for (int pi = 0; pi < 3; ++pi)
      for (int qi = pi + 1; qi < 3; ++qi) {
        if (m[pi][qi] == 0.0) continue;
        const double theta = (m[qi][qi] - m[pi][pi]) / (2.0 * m[pi][qi]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double mkp = m[k][pi];
          const double mkq = m[k][qi];
          m[k][pi] = c * mkp - s * mkq;
          m[k][qi] = s * mkp + c * mkq;
        }
        for (int k = 0; k < 3; ++k) {
          const double mpk = m[pi][k];
          const double mqk = m[qi][k];
          m[pi][k] = c * mpk - s * mqk;
          m[qi][k] = s * mpk + c * mqk;
        }
      }
  }
  return {m[0][0], m[1][1], m[2][2]};
}

}  // namespace detail

inline DissipationBounds dissipation_bounds(const Mat& a)
{
  if (a.d == 1) return {std::abs(a(0, 0)), std::abs(a(0, 0))};
  // Orthonormal basis of symmetric 2x2 matrices.
  const double r = 1.0 / std::sqrt(2.0);
  const std::array<Mat, 3> basis{Mat::from_rows({1, 0}, {0, 0}), Mat::from_rows({0, 0}, {0, 1}),
                                 Mat::from_rows({0, r}, {r, 0})};
  std::array<std::array<double, 3>, 3> gram{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) gram[i][j] = ddot(a * basis[i], a * basis[j]);
  const auto ev = detail::sym3_eigenvalues(gram);
  const auto [lo, hi] = std::minmax({ev[0], ev[1], ev[2]});
  return {std::sqrt(std::max(lo, 0.0)), std::sqrt(std::max(hi, 0.0))};
}

}  // namespace kvmms
