#pragma once

/**
 * @file diagnostics.hpp
 *
 * @brief Trajectory diagnostics: the energy-dissipation balance, the
 * dissipation identity and the residual of the weak momentum balance.
 *
 * Energy differences are taken between shifted energies so the constant
 * reference work of the load never enters a subtraction.
 */

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "kvmms/field.hpp"
#include "kvmms/mms.hpp"
#include "kvmms/slope.hpp"

namespace kvmms {

struct EdbRow {
  int n = 0;
  double t = 0.0;
  double phi = 0.0;
  double slope = 0.0;
  double cum_metric = 0.0;  ///< (1/pt) sum (D_k / tau)^pt tau
  double cum_slope = 0.0;   ///< (1/p') sum slope_k^p' tau
  double residual = 0.0;
};

struct EdbReport {
  double p_tilde = 2.0;
  double tau = 0.0;
  std::vector<EdbRow> rows;
  double final_residual = 0.0;
  double dissipation_identity = 0.0;
  int slope_flags = 0;
  double max_slope_residual = 0.0;
};

inline void require_unflagged(const Trajectory& traj, const char* who)
{
  if (traj.fields.empty()) throw std::invalid_argument(std::string(who) + ": empty trajectory");
  if (traj.any_flagged()) throw std::domain_error(std::string(who) + ": trajectory contains flagged steps");
}

/// p~ sum_n tau sum_cells vol R(F(Y^n), (F(Y^n) - F(Y^{n-1})) / tau) - (phi(Y^0) - phi(Y^N)).
inline double dissipation_identity_residual(const AdmissibleSet& adm, const LoadField& load, const Trajectory& traj)
{
  require_unflagged(traj, "dissipation_identity_residual");
  const auto& mp = adm.params;
  const Grid& g = adm.grid();
  double sum = 0.0;
  std::vector<double> rate(g.num_dofs());
  for (int n = 1; n <= traj.steps(); ++n) {
    const auto& un = traj.fields[static_cast<std::size_t>(n)].displacement();
    const auto& um = traj.fields[static_cast<std::size_t>(n - 1)].displacement();
    for (std::size_t i = 0; i < rate.size(); ++i) rate[i] = (un[i] - um[i]) / traj.tau;
    sum += traj.tau * viscous_power(mp, g, un, rate);
  }
  const double drop = shifted_energy(mp, load, traj.fields.front().displacement()) -
                      shifted_energy(mp, load, traj.fields.back().displacement());
  return mp.p_tilde * sum - drop;
}

inline EdbReport edb_report(const AdmissibleSet& adm, const LoadField& load, const Trajectory& traj,
                            const SlopeOptions& sopt = {})
{
  require_unflagged(traj, "edb_report");
  const auto& mp = adm.params;
  const double pt = mp.p_tilde;
  const double pp = mp.p_prime();
  const double tau = traj.tau;

  EdbReport rep;
  rep.p_tilde = pt;
  rep.tau = tau;
  const double phi0 = shifted_energy(mp, load, traj.fields.front().displacement());
  EdbRow row;
  row.phi = energy(adm, load, traj.fields.front());
  rep.rows.push_back(row);

  std::vector<double> w_prev;
  for (int n = 1; n <= traj.steps(); ++n) {
    const auto& y = traj.fields[static_cast<std::size_t>(n)];
    const double md = metric_derivative(mp, traj, n);
    auto sr = local_slope(adm, load, y, sopt, w_prev);
    if (sr.flagged()) ++rep.slope_flags;
    rep.max_slope_residual = std::max(rep.max_slope_residual, sr.residual);
    w_prev = sr.wbar;

    row.n = n;
    row.t = n * tau;
    row.phi = energy(adm, load, y);
    row.slope = sr.slope;
    row.cum_metric += std::pow(md, pt) * tau / pt;
    row.cum_slope += std::pow(sr.slope, pp) * tau / pp;
    row.residual = row.cum_metric + row.cum_slope + shifted_energy(mp, load, y.displacement()) - phi0;
    rep.rows.push_back(row);
  }
  rep.final_residual = rep.rows.back().residual;
  rep.dissipation_identity = dissipation_identity_residual(adm, load, traj);
  return rep;
}

// ---------------------------------------------------------------------------
// Weak residual

/// Discrete W^{2,p} norm of a nodal field: nodal L^p + cell gradient L^p + cell Hessian L^p.
inline double discrete_w2p_norm(const Grid& g, std::span<const double> v, double p)
{
  const int d = g.dim();
  double s = 0.0;
  for (int k = 0; k < g.num_nodes(); ++k) {
    double n2 = 0.0;
    for (int a = 0; a < d; ++a) n2 += v[static_cast<std::size_t>(k * d + a)] * v[static_cast<std::size_t>(k * d + a)];
    s += g.node_weight(k) * std::pow(std::sqrt(n2), p);
  }
  for (int c = 0; c < g.num_cells(); ++c) {
    s += g.cell_volume() * std::pow(frobenius(cell_gradient(g, v, c)), p);
    s += g.cell_volume() * std::pow(frobenius(cell_hessian(g, v, c)), p);
  }
  return std::pow(s, 1.0 / p);
}

/**
 * @brief Fixed test basis: tensor-product hat bumps of radius one node,
 * one per component, centred at every node whose bump vanishes on the
 * boundary layer and on the first interior layer. Each bump is normalized
 * to unit discrete W^{2,p} norm.
 */
inline std::vector<std::vector<double>> weak_test_basis(const Grid& g, double p)
{
  std::vector<std::vector<double>> basis;
  const int d = g.dim();
  const int n = g.nodes_per_axis();
  for (int k = 0; k < g.num_nodes(); ++k) {
    if (g.layer(k) < 3) continue;
    const auto ij = g.node_index(k);
    for (int a = 0; a < d; ++a) {
      std::vector<double> v(g.num_dofs(), 0.0);
      for (int dj = (d == 2 ? -1 : 0); dj <= (d == 2 ? 1 : 0); ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int i = ij[0] + di;
          const int j = ij[1] + dj;
          if (i < 0 || i >= n || j < 0 || j >= n) continue;
          const double w = (di == 0 ? 1.0 : 0.5) * (dj == 0 ? 1.0 : 0.5);
          v[static_cast<std::size_t>(g.node_at(i, j) * d + a)] = w;
        }
      const double nv = discrete_w2p_norm(g, v, p);
      for (auto& x : v) x /= nv;
      basis.push_back(std::move(v));
    }
  }
  return basis;
}

/// max over the test basis of |<dphi(y) + dR(F(y), grad ydot), phi>|.
inline double weak_residual(const AdmissibleSet& adm, const LoadField& load, const DeformationField& y,
                            std::span<const double> ydot)
{
  const auto& mp = adm.params;
  const Grid& g = y.grid();
  if (ydot.size() != g.num_dofs()) throw std::invalid_argument("weak_residual: rate has wrong length");
  std::vector<double> r = energy_gradient(adm, load, y);
  std::vector<double> vr(g.num_dofs());
  viscous_power(mp, g, y.displacement(), ydot, vr);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += vr[i];
  double worst = 0.0;
  for (const auto& phi : weak_test_basis(g, mp.p)) worst = std::max(worst, std::abs(dot(r, phi)));
  return worst;
}

/// Discrete rate (Y^n - Y^{n-1}) / tau.
inline std::vector<double> discrete_rate(const Trajectory& traj, int n)
{
  if (n < 1 || n > traj.steps()) throw std::out_of_range("discrete_rate: step index out of range");
  const auto& a = traj.fields[static_cast<std::size_t>(n)].displacement();
  const auto& b = traj.fields[static_cast<std::size_t>(n - 1)].displacement();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] - b[i]) / traj.tau;
  return out;
}

}  // namespace kvmms
