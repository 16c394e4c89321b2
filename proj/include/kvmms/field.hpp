#pragma once

/**
 * @file field.hpp
 *
 * @brief Discrete deformation and load fields on a Grid together with the
 * assembled energy phi, dissipation distance D and their nodal gradients.
 *
 * A DeformationField stores the displacement u = y - id rather than y itself.
 * Every strain measure is then assembled from differences of u, which keeps
 * small-strain energies accurate to relative machine precision instead of
 * absolute machine precision.
 */

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kvmms/densities.hpp"
#include "kvmms/grid.hpp"
#include "kvmms/tensor.hpp"

namespace kvmms {

using Vec = std::array<double, kMaxDim>;
using PointMap = std::function<Vec(const Vec&)>;

class DeformationField {
 public:
  DeformationField() = default;

  static DeformationField identity(const Grid& g)
  {
    DeformationField f;
    f.grid_ = g;
    f.u_.assign(g.num_dofs(), 0.0);
    return f;
  }

  static DeformationField from_displacement(const Grid& g, std::vector<double> u)
  {
    if (u.size() != g.num_dofs()) throw std::invalid_argument("displacement vector has wrong length");
    DeformationField f;
    f.grid_ = g;
    f.u_ = std::move(u);
    return f;
  }

  /// Samples a displacement map u(x) at the nodes.
  static DeformationField from_displacement_map(const Grid& g, const PointMap& u_of_x)
  {
    auto f = identity(g);
    const int d = g.dim();
    for (int k = 0; k < g.num_nodes(); ++k) {
      const Vec u = u_of_x(g.coords(k));
      for (int a = 0; a < d; ++a) f.u_[static_cast<std::size_t>(k * d + a)] = u[static_cast<std::size_t>(a)];
    }
    return f;
  }

  /// Samples a deformation map y(x) at the nodes.
  static DeformationField from_map(const Grid& g, const PointMap& y_of_x)
  {
    auto f = identity(g);
    const int d = g.dim();
    for (int k = 0; k < g.num_nodes(); ++k) {
      const Vec x = g.coords(k);
      const Vec y = y_of_x(x);
      for (int a = 0; a < d; ++a)
        f.u_[static_cast<std::size_t>(k * d + a)] = y[static_cast<std::size_t>(a)] - x[static_cast<std::size_t>(a)];
    }
    return f;
  }

  /// Builds a field from absolute nodal positions (flat, d per node).
  static DeformationField from_positions(const Grid& g, std::span<const double> y)
  {
    if (y.size() != g.num_dofs()) throw std::invalid_argument("position vector has wrong length");
    auto f = identity(g);
    const int d = g.dim();
    for (int k = 0; k < g.num_nodes(); ++k) {
      const Vec x = g.coords(k);
      for (int a = 0; a < d; ++a) {
        const auto i = static_cast<std::size_t>(k * d + a);
        f.u_[i] = y[i] - x[static_cast<std::size_t>(a)];
      }
    }
    return f;
  }

  const Grid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }

  const std::vector<double>& displacement() const { return u_; }
  std::vector<double>& displacement() { return u_; }

  double u(int node, int comp) const { return u_[static_cast<std::size_t>(node * grid_.dim() + comp)]; }

  double y(int node, int comp) const { return grid_.coords(node)[static_cast<std::size_t>(comp)] + u(node, comp); }

  std::vector<double> positions() const
  {
    std::vector<double> out(u_.size());
    const int d = grid_.dim();
    for (int k = 0; k < grid_.num_nodes(); ++k)
      for (int a = 0; a < d; ++a) out[static_cast<std::size_t>(k * d + a)] = y(k, a);
    return out;
  }

  /// Applies x -> Q y(x) + b to the deformed configuration.
  DeformationField rotated(const Mat& q, const Vec& shift = {0.0, 0.0}) const
  {
    auto out = *this;
    const int d = grid_.dim();
    for (int k = 0; k < grid_.num_nodes(); ++k) {
      const Vec x = grid_.coords(k);
      Vec yk{};
      for (int a = 0; a < d; ++a) yk[static_cast<std::size_t>(a)] = y(k, a);
      const Vec qy = kvmms::apply(q, yk);
      for (int a = 0; a < d; ++a)
        out.u_[static_cast<std::size_t>(k * d + a)] =
            qy[static_cast<std::size_t>(a)] + shift[static_cast<std::size_t>(a)] - x[static_cast<std::size_t>(a)];
    }
    return out;
  }

 private:
  Grid grid_;
  std::vector<double> u_;
};

/// Nodal dead load (force density).
struct LoadField {
  Grid grid;
  std::vector<double> f;

  static LoadField zero(const Grid& g) { return {g, std::vector<double>(g.num_dofs(), 0.0)}; }

  static LoadField from_map(const Grid& g, const PointMap& f_of_x)
  {
    auto out = zero(g);
    const int d = g.dim();
    for (int k = 0; k < g.num_nodes(); ++k) {
      const Vec v = f_of_x(g.coords(k));
      for (int a = 0; a < d; ++a) out.f[static_cast<std::size_t>(k * d + a)] = v[static_cast<std::size_t>(a)];
    }
    return out;
  }

  LoadField scaled(double s) const
  {
    auto out = *this;
    for (auto& v : out.f) v *= s;
    return out;
  }
};

/// Admissible configurations: fields matching the datum yhat on the boundary layer with phi <= M.
struct AdmissibleSet {
  MaterialParams params;
  DeformationField yhat;
  double M = std::numeric_limits<double>::infinity();

  const Grid& grid() const { return yhat.grid(); }

  bool matches_boundary(const DeformationField& y) const
  {
    const auto& g = grid();
    if (y.grid() != g) return false;
    for (int k = 0; k < g.num_nodes(); ++k) {
      if (!g.is_boundary(k)) continue;
      for (int a = 0; a < g.dim(); ++a)
        if (y.u(k, a) != yhat.u(k, a)) return false;
    }
    return true;
  }

  /// Copy of y with the boundary layer overwritten by the datum.
  DeformationField clamp(const DeformationField& y) const
  {
    auto out = y;
    const auto& g = grid();
    const int d = g.dim();
    for (int k = 0; k < g.num_nodes(); ++k) {
      if (!g.is_boundary(k)) continue;
      for (int a = 0; a < d; ++a)
        out.displacement()[static_cast<std::size_t>(k * d + a)] = yhat.u(k, a);
    }
    return out;
  }
};

inline void require_same_grid(const Grid& a, const Grid& b)
{
  if (a != b) throw std::invalid_argument("grid mismatch");
}

// ---------------------------------------------------------------------------
// Stencil application

/// d_b u_a on one cell from a flat nodal vector.
inline Mat cell_gradient(const Grid& g, std::span<const double> u, int cell)
{
  const int d = g.dim();
  const auto& s = g.stencil(cell);
  Mat h(d);
  for (int b = 0; b < d; ++b)
    for (const Tap& t : s.grad[static_cast<std::size_t>(b)])
      for (int a = 0; a < d; ++a) h(a, b) += t.weight * u[static_cast<std::size_t>(t.node * d + a)];
  return h;
}

inline Tens3 cell_hessian(const Grid& g, std::span<const double> u, int cell)
{
  const int d = g.dim();
  const auto& s = g.stencil(cell);
  Tens3 out(d);
  for (int b = 0; b < d; ++b)
    for (int c = 0; c < d; ++c)
      for (const Tap& t : s.hess[static_cast<std::size_t>(b * d + c)])
        for (int a = 0; a < d; ++a) out(a, b, c) += t.weight * u[static_cast<std::size_t>(t.node * d + a)];
  return out;
}

/// out += scale * (gradient stencil)^T applied to a cell matrix.
inline void scatter_gradient(const Grid& g, int cell, const Mat& m, double scale, std::span<double> out)
{
  const int d = g.dim();
  const auto& s = g.stencil(cell);
  for (int b = 0; b < d; ++b)
    for (const Tap& t : s.grad[static_cast<std::size_t>(b)])
      for (int a = 0; a < d; ++a) out[static_cast<std::size_t>(t.node * d + a)] += scale * t.weight * m(a, b);
}

inline void scatter_hessian(const Grid& g, int cell, const Tens3& m, double scale, std::span<double> out)
{
  const int d = g.dim();
  const auto& s = g.stencil(cell);
  for (int b = 0; b < d; ++b)
    for (int c = 0; c < d; ++c)
      for (const Tap& t : s.hess[static_cast<std::size_t>(b * d + c)])
        for (int a = 0; a < d; ++a) out[static_cast<std::size_t>(t.node * d + a)] += scale * t.weight * m(a, b, c);
}

inline void zero_boundary(const Grid& g, std::span<double> v)
{
  const int d = g.dim();
  for (int k = 0; k < g.num_nodes(); ++k)
    if (g.is_boundary(k))
      for (int a = 0; a < d; ++a) v[static_cast<std::size_t>(k * d + a)] = 0.0;
}

/// Per-cell deformation gradients F = Id + grad u.
inline std::vector<Mat> gradient_cells(const DeformationField& y)
{
  const auto& g = y.grid();
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(g.num_cells()));
  const Mat id = Mat::identity(g.dim());
  for (int c = 0; c < g.num_cells(); ++c) out.push_back(id + cell_gradient(g, y.displacement(), c));
  return out;
}

/// Per-cell displacement gradients grad u = F - Id.
inline std::vector<Mat> displacement_gradient_cells(const Grid& g, std::span<const double> u)
{
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(g.num_cells()));
  for (int c = 0; c < g.num_cells(); ++c) out.push_back(cell_gradient(g, u, c));
  return out;
}

/// Per-cell Hessians (the identity map has none, so only u contributes).
inline std::vector<Tens3> hessian_cells(const DeformationField& y)
{
  const auto& g = y.grid();
  std::vector<Tens3> out;
  out.reserve(static_cast<std::size_t>(g.num_cells()));
  for (int c = 0; c < g.num_cells(); ++c) out.push_back(cell_hessian(g, y.displacement(), c));
  return out;
}

// ---------------------------------------------------------------------------
// Energy

struct EnergyParts {
  double bulk = 0.0;       ///< sum over cells of vol (W + P)
  double load_disp = 0.0;  ///< sum_nodes w f . u
  double load_ref = 0.0;   ///< sum_nodes w f . x (constant in u)

  double total() const { return bulk - load_disp - load_ref; }
  /// Energy up to the u-independent reference work.
  double shifted() const { return bulk - load_disp; }
};

/**
 * @brief Shifted energy (bulk minus load work on the displacement) and,
 * optionally, its exact gradient with respect to every nodal displacement.
 * Returns +inf when some cell has det F <= 0; the gradient is then left
 * unspecified.
 */
inline double shifted_energy(const MaterialParams& mp, const LoadField& load, std::span<const double> u,
                             std::span<double> grad = {})
{
  const Grid& g = load.grid;
  const double vol = g.cell_volume();
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  double bulk = 0.0;
  for (int c = 0; c < g.num_cells(); ++c) {
    const auto w = stored_energy_from_displacement(mp, cell_gradient(g, u, c));
    if (!w.finite()) return kInfinity;
    const auto pe = strain_gradient_energy(mp, cell_hessian(g, u, c));
    bulk += vol * (w.value + pe.value);
    if (want_grad) {
      scatter_gradient(g, c, w.grad, vol, grad);
      scatter_hessian(g, c, pe.grad, vol, grad);
    }
  }
  double work = 0.0;
  const int d = g.dim();
  for (int k = 0; k < g.num_nodes(); ++k) {
    const double wk = g.node_weight(k);
    for (int a = 0; a < d; ++a) {
      const auto i = static_cast<std::size_t>(k * d + a);
      work += wk * load.f[i] * u[i];
      if (want_grad) grad[i] -= wk * load.f[i];
    }
  }
  if (want_grad) zero_boundary(g, grad);
  return bulk - work;
}

inline EnergyParts energy_parts(const MaterialParams& mp, const LoadField& load, const DeformationField& y)
{
  require_same_grid(load.grid, y.grid());
  const Grid& g = y.grid();
  EnergyParts parts;
  const double vol = g.cell_volume();
  const auto& u = y.displacement();
  for (int c = 0; c < g.num_cells(); ++c) {
    const auto w = stored_energy_from_displacement(mp, cell_gradient(g, u, c));
    if (!w.finite()) {
      parts.bulk = kInfinity;
      break;
    }
    parts.bulk += vol * (w.value + strain_gradient_energy(mp, cell_hessian(g, u, c)).value);
  }
  const int d = g.dim();
  for (int k = 0; k < g.num_nodes(); ++k) {
    const double wk = g.node_weight(k);
    const Vec x = g.coords(k);
    for (int a = 0; a < d; ++a) {
      const auto i = static_cast<std::size_t>(k * d + a);
      parts.load_disp += wk * load.f[i] * u[i];
      parts.load_ref += wk * load.f[i] * x[static_cast<std::size_t>(a)];
    }
  }
  return parts;
}

/// Discrete energy phi(y); +inf if any cell has det F <= 0.
inline double energy(const AdmissibleSet& adm, const LoadField& load, const DeformationField& y)
{
  require_same_grid(adm.grid(), y.grid());
  return energy_parts(adm.params, load, y).total();
}

/// Gradient of phi with respect to interior nodal values (zero on the boundary layer).
inline std::vector<double> energy_gradient(const AdmissibleSet& adm, const LoadField& load, const DeformationField& y)
{
  require_same_grid(adm.grid(), y.grid());
  require_same_grid(load.grid, y.grid());
  std::vector<double> grad(y.grid().num_dofs());
  const double e = shifted_energy(adm.params, load, y.displacement(), grad);
  if (!std::isfinite(e)) throw std::domain_error("energy_gradient: infeasible field (det F <= 0)");
  return grad;
}

// ---------------------------------------------------------------------------
// Dissipation distance

/**
 * @brief Integral of D(F1, F2)^pt over cells and, optionally, its gradient
 * with respect to the nodal values of the second field.
 */
inline double metric_power(const MaterialParams& mp, const Grid& g, std::span<const double> u1,
                           std::span<const double> u2, std::span<double> grad2 = {})
{
  const int d = g.dim();
  const double vol = g.cell_volume();
  const double pt = mp.p_tilde;
  const bool want_grad = !grad2.empty();
  if (want_grad) std::fill(grad2.begin(), grad2.end(), 0.0);

  std::vector<double> du(u1.size());
  for (std::size_t i = 0; i < du.size(); ++i) du[i] = u1[i] - u2[i];

  const Mat id = Mat::identity(d);
  double sum = 0.0;
  for (int c = 0; c < g.num_cells(); ++c) {
    const Mat f1 = id + cell_gradient(g, u1, c);
    const Mat f2 = id + cell_gradient(g, u2, c);
    const Mat df = cell_gradient(g, du, c);
    const Mat m = transformed_strain_gap(mp, f1, f2, df);
    const double n2 = ddot(m, m);
    if (n2 == 0.0) continue;
    const double n = std::sqrt(n2);
    const double npm2 = std::pow(n, pt - 2.0);
    sum += vol * npm2 * n2;
    if (want_grad) {
      const Mat x = transpose(mp.A) * m;
      scatter_gradient(g, c, (-pt * npm2) * (f2 * (x + transpose(x))), vol, grad2);
    }
  }
  if (want_grad) zero_boundary(g, grad2);
  return sum;
}

inline double metric(const MaterialParams& mp, const DeformationField& y1, const DeformationField& y2)
{
  require_same_grid(y1.grid(), y2.grid());
  return std::pow(metric_power(mp, y1.grid(), y1.displacement(), y2.displacement()), 1.0 / mp.p_tilde);
}

/// Gradient of v -> D(y1, v)^pt at v = y2, supported on interior nodes.
inline std::vector<double> metric_gradient_second_arg(const MaterialParams& mp, const DeformationField& y1,
                                                      const DeformationField& y2)
{
  require_same_grid(y1.grid(), y2.grid());
  std::vector<double> grad(y1.grid().num_dofs());
  metric_power(mp, y1.grid(), y1.displacement(), y2.displacement(), grad);
  return grad;
}

// ---------------------------------------------------------------------------
// Viscous power

/**
 * @brief sum_cells vol R(F(y), grad w) and, optionally, its gradient in the
 * nodal values of the velocity field w (zero on the boundary layer).
 */
inline double viscous_power(const MaterialParams& mp, const Grid& g, std::span<const double> u,
                            std::span<const double> w, std::span<double> grad = {})
{
  const double vol = g.cell_volume();
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  const Mat id = Mat::identity(g.dim());
  double sum = 0.0;
  for (int c = 0; c < g.num_cells(); ++c) {
    const auto r = viscous_potential(mp, id + cell_gradient(g, u, c), cell_gradient(g, w, c));
    sum += vol * r.value;
    if (want_grad) scatter_gradient(g, c, r.grad, vol, grad);
  }
  if (want_grad) zero_boundary(g, grad);
  return sum;
}

// ---------------------------------------------------------------------------
// Cell norms

/// (sum_cells vol |M_c|^p)^{1/p}
inline double cell_lp_norm(const std::vector<Mat>& cells, double p, double vol)
{
  double s = 0.0;
  for (const auto& m : cells) s += vol * std::pow(frobenius(m), p);
  return std::pow(s, 1.0 / p);
}

inline double cell_linf_norm(const std::vector<Mat>& cells)
{
  double s = 0.0;
  for (const auto& m : cells) s = std::max(s, frobenius(m));
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace kvmms
