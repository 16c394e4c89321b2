#pragma once

/**
 * @file tensor.hpp
 *
 * @brief Dense small-dimension tensor algebra (d x d matrices and d x d x d
 * third-order tensors) evaluated pointwise by every density.
 *
 * The spatial dimension is a runtime value restricted to 1 or 2. Storage is
 * dense row-major in fixed-capacity arrays so all values stay on the stack.
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>

namespace kvmms {

inline constexpr int kMaxDim = 2;

inline void check_dim(int d)
{
  if (d < 1 || d > kMaxDim) {
    throw std::invalid_argument("spatial dimension must be 1 or 2");
  }
}

/// d x d matrix, row-major.
struct Mat {
  int d = 2;
  std::array<double, kMaxDim * kMaxDim> a{};

  Mat() = default;
  explicit Mat(int dim) : d(dim) { check_dim(dim); }

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i * d + j)]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i * d + j)]; }

  static Mat zero(int dim) { return Mat(dim); }
  static Mat identity(int dim)
  {
    Mat m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat diag(double a0, double a1)
  {
    Mat m(2);
    m(0, 0) = a0;
    m(1, 1) = a1;
    return m;
  }
  static Mat from_rows(std::array<double, 2> r0, std::array<double, 2> r1)
  {
    Mat m(2);
    m(0, 0) = r0[0];
    m(0, 1) = r0[1];
    m(1, 0) = r1[0];
    m(1, 1) = r1[1];
    return m;
  }
  static Mat scalar(double v)
  {
    Mat m(1);
    m(0, 0) = v;
    return m;
  }

  int size() const { return d * d; }
};

/// Third-order tensor with (G)_{ijk}; for a Hessian (G)_{ijk} = d^2 y_i / dx_j dx_k.
struct Tens3 {
  int d = 2;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> a{};

  Tens3() = default;
  explicit Tens3(int dim) : d(dim) { check_dim(dim); }

  double& operator()(int i, int j, int k) { return a[static_cast<std::size_t>((i * d + j) * d + k)]; }
  double operator()(int i, int j, int k) const { return a[static_cast<std::size_t>((i * d + j) * d + k)]; }

  int size() const { return d * d * d; }
};

// ---------------------------------------------------------------------------
// Elementwise arithmetic

inline Mat operator+(const Mat& x, const Mat& y)
{
  Mat r(x.d);
  for (int k = 0; k < x.size(); ++k) r.a[k] = x.a[k] + y.a[k];
  return r;
}

inline Mat operator-(const Mat& x, const Mat& y)
{
  Mat r(x.d);
  for (int k = 0; k < x.size(); ++k) r.a[k] = x.a[k] - y.a[k];
  return r;
}

inline Mat operator*(double s, const Mat& x)
{
  Mat r(x.d);
  for (int k = 0; k < x.size(); ++k) r.a[k] = s * x.a[k];
  return r;
}

inline Mat& operator+=(Mat& x, const Mat& y)
{
  for (int k = 0; k < x.size(); ++k) x.a[k] += y.a[k];
  return x;
}

inline Tens3 operator+(const Tens3& x, const Tens3& y)
{
  Tens3 r(x.d);
  for (int k = 0; k < x.size(); ++k) r.a[k] = x.a[k] + y.a[k];
  return r;
}

inline Tens3 operator-(const Tens3& x, const Tens3& y)
{
  Tens3 r(x.d);
  for (int k = 0; k < x.size(); ++k) r.a[k] = x.a[k] - y.a[k];
  return r;
}

inline Tens3 operator*(double s, const Tens3& x)
{
  Tens3 r(x.d);
  for (int k = 0; k < x.size(); ++k) r.a[k] = s * x.a[k];
  return r;
}

/// Left action on the first index: (Q G)_{ijk} = Q_{il} G_{ljk}.
inline Tens3 operator*(const Mat& q, const Tens3& g)
{
  Tens3 r(g.d);
  for (int i = 0; i < g.d; ++i)
    for (int j = 0; j < g.d; ++j)
      for (int k = 0; k < g.d; ++k) {
        double s = 0.0;
        for (int l = 0; l < g.d; ++l) s += q(i, l) * g(l, j, k);
        r(i, j, k) = s;
      }
  return r;
}

inline Mat operator*(const Mat& x, const Mat& y)
{
  Mat r(x.d);
  for (int i = 0; i < x.d; ++i)
    for (int j = 0; j < x.d; ++j) {
      double s = 0.0;
      for (int k = 0; k < x.d; ++k) s += x(i, k) * y(k, j);
      r(i, j) = s;
    }
  return r;
}

inline Mat transpose(const Mat& m)
{
  Mat r(m.d);
  for (int i = 0; i < m.d; ++i)
    for (int j = 0; j < m.d; ++j) r(i, j) = m(j, i);
  return r;
}

/// Matrix-vector product on a d-vector stored in the first d slots.
inline std::array<double, kMaxDim> apply(const Mat& m, const std::array<double, kMaxDim>& v)
{
  std::array<double, kMaxDim> r{};
  for (int i = 0; i < m.d; ++i)
    for (int j = 0; j < m.d; ++j) r[static_cast<std::size_t>(i)] += m(i, j) * v[static_cast<std::size_t>(j)];
  return r;
}

// ---------------------------------------------------------------------------
// Contractions and norms

/// Double contraction A : B = sum_ij A_ij B_ij.
inline double ddot(const Mat& x, const Mat& y)
{
  double s = 0.0;
  for (int k = 0; k < x.size(); ++k) s += x.a[k] * y.a[k];
  return s;
}

/// Triple contraction G ⋮ H = sum_ijk G_ijk H_ijk.
inline double tdot(const Tens3& x, const Tens3& y)
{
  double s = 0.0;
  for (int k = 0; k < x.size(); ++k) s += x.a[k] * y.a[k];
  return s;
}

inline double frobenius(const Mat& m) { return std::sqrt(ddot(m, m)); }
inline double frobenius(const Tens3& g) { return std::sqrt(tdot(g, g)); }

inline double max_abs(const Mat& m)
{
  double r = 0.0;
  for (int k = 0; k < m.size(); ++k) r = std::max(r, std::abs(m.a[k]));
  return r;
}

inline double trace(const Mat& m)
{
  double s = 0.0;
  for (int i = 0; i < m.d; ++i) s += m(i, i);
  return s;
}

inline Mat sym(const Mat& m) { return 0.5 * (m + transpose(m)); }
inline Mat skew(const Mat& m) { return 0.5 * (m - transpose(m)); }

inline double det(const Mat& m)
{
  if (m.d == 1) return m(0, 0);
  return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
}

/// Cofactor matrix, cof(M) = det(M) M^{-T}; defined for every M.
inline Mat cofactor(const Mat& m)
{
  if (m.d == 1) return Mat::scalar(1.0);
  Mat r(2);
  r(0, 0) = m(1, 1);
  r(0, 1) = -m(1, 0);
  r(1, 0) = -m(0, 1);
  r(1, 1) = m(0, 0);
  return r;
}

inline constexpr double kSingularThreshold = 1e-300;

/// Inverse, or nullopt when |det M| is below the singular threshold.
inline std::optional<Mat> inv(const Mat& m)
{
  const double dm = det(m);
  if (!(std::abs(dm) > kSingularThreshold) || !std::isfinite(dm)) return std::nullopt;
  return (1.0 / dm) * transpose(cofactor(m));
}

/// det(Id + H) - 1 evaluated without cancellation for small H.
inline double det_identity_plus_minus_one(const Mat& h)
{
  if (h.d == 1) return h(0, 0);
  return h(0, 0) + h(1, 1) + (h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0));
}

// ---------------------------------------------------------------------------
// Kinematics

/// Right Cauchy-Green tensor C = F^T F.
inline Mat cauchy_green(const Mat& f) { return transpose(f) * f; }

/// Rate of C along Fdot: Cdot = Fdot^T F + F^T Fdot.
inline Mat cauchy_green_rate(const Mat& f, const Mat& fdot)
{
  return transpose(fdot) * f + transpose(f) * fdot;
}

/// C - Id from the displacement gradient H = F - Id, free of cancellation.
inline Mat green_strain_doubled(const Mat& h)
{
  return h + transpose(h) + transpose(h) * h;
}

// ---------------------------------------------------------------------------
// Rotations

inline Mat rotation(int d, double angle)
{
  check_dim(d);
  if (d == 1) return Mat::scalar(1.0);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return Mat::from_rows({c, -s}, {s, c});
}

/// Uniformly distributed element of SO(d) drawn from a seeded engine.
inline Mat random_rotation(int d, std::uint64_t seed)
{
  check_dim(d);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  return rotation(d, angle(rng));
}

// ---------------------------------------------------------------------------
// Scalar inequality constants

/**
 * @brief Smallest C with (a+b)^p <= a^p + b^p + C (a^{p-1} b + b^{p-1} a)
 * for all a, b >= 0.
 *
 * By homogeneity the worst case is a one-dimensional maximization over
 * t = a/(a+b); the ratio is symmetric in t <-> 1-t, so golden-section
 * search runs on (0, 1/2] and the boundary limit t -> 0 is included.
 */
inline double power_inequality_ratio(double p, double t)
{
  const double s = 1.0 - t;
  const double num = 1.0 - std::pow(t, p) - std::pow(s, p);
  const double den = std::pow(t, p - 1.0) * s + std::pow(s, p - 1.0) * t;
  if (den <= 0.0) return 0.0;
  return num / den;
}

inline double power_inequality_constant(double p)
{
  if (!(p > 1.0)) throw std::invalid_argument("power_inequality_constant requires p > 1");
  // Limit t -> 0: the ratio tends to p for p >= 2 and to 0 for p < 2.
  const double edge = p >= 2.0 ? p : 0.0;
  constexpr double phi = 0.6180339887498949;
  double lo = 1e-12;
  double hi = 0.5;
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = power_inequality_ratio(p, x1);
  double f2 = power_inequality_ratio(p, x2);
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = power_inequality_ratio(p, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = power_inequality_ratio(p, x2);
    }
  }
  const double interior = std::max({f1, f2, power_inequality_ratio(p, 0.5)});
  return std::max(interior, edge);
}

}  // namespace kvmms
