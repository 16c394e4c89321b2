#pragma once

/**
 * @file slope.hpp
 *
 * @brief Local slope of the energy in the dissipation distance, computed
 * from the dual velocity problem
 *
 *     min_w  sum_cells vol R(F, grad w) - <dphi(y), w>
 *
 * over velocity fields vanishing on the boundary layer. The minimizer wbar
 * satisfies dR(F, grad wbar) = dphi(y) in the discrete weak sense and the
 * slope equals (pt sum_cells vol R(F, grad wbar))^(1 - 1/pt).
 */

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kvmms/field.hpp"
#include "kvmms/mms.hpp"
#include "kvmms/optimizer.hpp"

namespace kvmms {

struct SlopeResult {
  Grid grid;
  std::vector<double> wbar;  ///< nodal velocities, zero on the boundary layer
  double slope = 0.0;
  double residual = 0.0;     ///< Euler-Lagrange residual, |grad J(wbar)|
  int iterations = 0;
  MinimizeStatus status = MinimizeStatus::converged;

  bool flagged() const { return status != MinimizeStatus::converged; }
};

struct SlopeOptions {
  double tol = 1e-11;
  int max_iters = 20000;
  /// Cells with |A Cdot| below this make the curvature model untrustworthy when pt < 2.
  double degenerate_rate = 1e-10;
};

/// Dual objective and gradient for the slope problem.
inline double slope_dual_objective(const MaterialParams& mp, const Grid& g, std::span<const double> u,
                                   std::span<const double> dphi, std::span<const double> w,
                                   std::span<double> grad = {})
{
  const double r = viscous_power(mp, g, u, w, grad);
  double lin = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) lin += dphi[i] * w[i];
  if (!grad.empty()) {
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] -= dphi[i];
    zero_boundary(g, grad);
  }
  return r - lin;
}

/// Slope value recomputed from a velocity field: (pt sum vol R(F, grad w))^(1 - 1/pt).
inline double slope_from_velocity(const MaterialParams& mp, const Grid& g, std::span<const double> u,
                                  std::span<const double> w)
{
  const double pt = mp.p_tilde;
  return std::pow(pt * viscous_power(mp, g, u, w), 1.0 - 1.0 / pt);
}

inline SlopeResult local_slope(const AdmissibleSet& adm, const LoadField& load, const DeformationField& y,
                               const SlopeOptions& opt = {}, std::span<const double> w_start = {})
{
  require_admissible(adm, load, y, "local_slope");
  const auto& mp = adm.params;
  const Grid& g = y.grid();
  const auto& u = y.displacement();
  const std::vector<double> dphi = energy_gradient(adm, load, y);

  auto fn = [&](std::span<const double> w, std::span<double> grad) {
    return slope_dual_objective(mp, g, u, dphi, w, grad);
  };
  DegeneracyFn degenerate;
  if (mp.p_tilde < 2.0) {
    degenerate = [&](std::span<const double> w) {
      const Mat id = Mat::identity(g.dim());
      for (int c = 0; c < g.num_cells(); ++c) {
        const Mat cdot = cauchy_green_rate(id + cell_gradient(g, u, c), cell_gradient(g, w, c));
        if (frobenius(mp.A * cdot) < opt.degenerate_rate) return true;
      }
      return false;
    };
  }

  std::vector<double> w0(g.num_dofs(), 0.0);
  if (!w_start.empty()) {
    if (w_start.size() != w0.size()) throw std::invalid_argument("local_slope: start field has wrong length");
    w0.assign(w_start.begin(), w_start.end());
    zero_boundary(g, w0);
  }
  MinimizeOptions mo;
  mo.grad_tol = opt.tol;
  mo.max_iters = opt.max_iters;
  auto res = inner_minimize(fn, std::move(w0), mo, degenerate);

  SlopeResult out;
  out.grid = g;
  out.wbar = std::move(res.x);
  out.slope = slope_from_velocity(mp, g, u, out.wbar);
  out.residual = res.grad_norm;
  out.iterations = res.iterations;
  out.status = res.status;
  return out;
}

/// Backward difference quotient D(Y^n, Y^{n-1}) / tau of the interpolant.
inline double metric_derivative(const MaterialParams& mp, const Trajectory& traj, int n)
{
  if (n < 1 || n > traj.steps()) throw std::out_of_range("metric_derivative: step index out of range");
  const auto& a = traj.fields[static_cast<std::size_t>(n)];
  const auto& b = traj.fields[static_cast<std::size_t>(n - 1)];
  return metric(mp, a, b) / traj.tau;
}

}  // namespace kvmms
