#pragma once

/**
 * @file decay.hpp
 *
 * @brief Small-strain scenarios, the discrete equilibrium and long-time
 * decay fits of the energy gap phi(Y^n) - phi(y_inf).
 *
 * Scenario data are tensor-product polynomials. The initial displacement is
 * built as u0 = uhat + b u0_bulk with the unit-box bubble
 * b(x) = 16 x1 (1 - x1) x2 (1 - x2), so y0 matches the datum on the boundary.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kvmms/field.hpp"
#include "kvmms/mms.hpp"
#include "kvmms/optimizer.hpp"
#include "kvmms/sampling.hpp"

namespace kvmms {

struct SmallStrainScenario {
  double delta = 0.01;
  PolyField uhat;
  PolyField ftilde;
  PolyField u0_bulk;
  double M_prime = 1e3;

  void validate() const
  {
    if (!(delta > 0.0)) throw ValidationError("SmallStrainScenario: delta must be positive");
    if (!(M_prime > 0.0)) throw ValidationError("SmallStrainScenario: M_prime must be positive");
  }

  double ceiling() const { return M_prime * delta * delta; }

  AdmissibleSet admissible(const MaterialParams& mp, const Grid& g) const
  {
    validate();
    AdmissibleSet adm;
    adm.params = mp;
    adm.params.delta = delta;
    adm.yhat = DeformationField::from_displacement_map(g, [&](const Vec& x) {
      const Vec u = uhat(x);
      return Vec{delta * u[0], delta * u[1]};
    });
    adm.M = ceiling();
    return adm;
  }

  LoadField load(const Grid& g) const
  {
    return LoadField::from_map(g, [&](const Vec& x) {
      const Vec f = ftilde(x);
      return Vec{delta * f[0], delta * f[1]};
    });
  }

  /// y0 = id + delta (uhat + b u0_bulk), clamped to the datum; checks phi(y0) <= M' delta^2.
  DeformationField initial(const AdmissibleSet& adm, const LoadField& load) const
  {
    const Grid& g = adm.grid();
    const int d = g.dim();
    auto y0 = adm.clamp(DeformationField::from_displacement_map(g, [&](const Vec& x) {
      const Vec u = uhat(x);
      const Vec v = u0_bulk(x);
      const double b = unit_bubble(x, d);
      return Vec{delta * (u[0] + b * v[0]), delta * (u[1] + b * v[1])};
    }));
    const double e = energy(adm, load, y0);
    if (!(e <= ceiling())) throw ValidationError("SmallStrainScenario: phi(y0) exceeds M' delta^2");
    return y0;
  }
};

// ---------------------------------------------------------------------------
// Equilibrium

struct SteadyStateOptions {
  int starts = 3;
  std::uint64_t seed = 1;
  double grad_tol = 1e-13;
  int max_iters = 100000;
  /// Largest admissible D-distance between the minimizers of different starts.
  double agreement = 1e-8;
  /// Amplitude of the random start perturbations, relative to delta.
  double start_amplitude = 1.0;
};

struct SteadyState {
  DeformationField y;
  double phi = 0.0;
  double grad_norm = 0.0;
  double spread = 0.0;  ///< max D-distance from the first start's minimizer
  std::vector<double> start_phi;
};

inline SteadyState steady_state(const AdmissibleSet& adm, const LoadField& load, const SteadyStateOptions& opt = {})
{
  if (opt.starts < 1) throw ValidationError("steady_state: at least one start is required");
  const auto& mp = adm.params;
  const Grid& g = adm.grid();
  const double amp = opt.start_amplitude * std::max(mp.delta, 1e-3);
  auto fn = [&](std::span<const double> v, std::span<double> grad) { return shifted_energy(mp, load, v, grad); };
  MinimizeOptions mo;
  mo.grad_tol = opt.grad_tol;
  mo.max_iters = opt.max_iters;

  std::mt19937_64 rng(opt.seed);
  SteadyState out;
  for (int s = 0; s < opt.starts; ++s) {
    std::vector<double> u0 = adm.yhat.displacement();
    for (int k = 0; k < g.num_nodes(); ++k)
      if (!g.is_boundary(k))
        for (int a = 0; a < g.dim(); ++a) u0[static_cast<std::size_t>(k * g.dim() + a)] = 0.0;
    if (s > 0) {
      const auto pert = random_bubble_field(g, rng, amp);
      for (std::size_t i = 0; i < u0.size(); ++i) u0[i] += pert[i];
    }
    if (!std::isfinite(shifted_energy(mp, load, u0)))
      throw SolverError("steady_state: start " + std::to_string(s) + " is infeasible");
    auto res = inner_minimize(fn, std::move(u0), mo);
    if (res.flagged())
      throw SolverError(std::string("steady_state: start ") + std::to_string(s) + " did not converge (" +
                        to_string(res.status) + ")");
    auto y = DeformationField::from_displacement(g, std::move(res.x));
    out.start_phi.push_back(energy(adm, load, y));
    if (s == 0) {
      out.y = std::move(y);
      out.phi = out.start_phi.back();
      out.grad_norm = res.grad_norm;
    } else {
      out.spread = std::max(out.spread, metric(mp, out.y, y));
    }
  }
  if (out.spread > opt.agreement)
    throw SolverError("steady_state: multi-start minimizers disagree (convexity violated, delta too large?)");
  return out;
}

// ---------------------------------------------------------------------------
// Decay fits

enum class FitKind { exponential, polynomial, extinction };

inline const char* to_string(FitKind k)
{
  switch (k) {
    case FitKind::exponential: return "exponential";
    case FitKind::polynomial: return "polynomial";
    case FitKind::extinction: return "extinction";
  }
  return "unknown";
}

/// Gap series phi(Y^n) - phi(y_inf) together with the data the fits need.
struct DecayInput {
  double p_tilde = 2.0;
  std::vector<double> t;
  std::vector<double> gap;
  double floor = 1e-10;
  double transient_fraction = 0.1;
};

struct DecayReport {
  FitKind kind = FitKind::exponential;
  double p_tilde = 2.0;
  double s = 1.0;  ///< pt / (2 pt - 2) for the polynomial fit
  std::vector<double> t;
  std::vector<double> gap;
  double floor = 0.0;
  double window_t0 = 0.0;
  double window_t1 = 0.0;
  int window_size = 0;
  double C = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  bool extinct = false;
  double T_ext = 0.0;
};

inline DecayInput decay_input(const Trajectory& traj, double phi_inf, double floor = 1e-10)
{
  DecayInput in;
  in.p_tilde = traj.p_tilde;
  in.floor = floor;
  for (std::size_t n = 0; n < traj.records.size(); ++n) {
    in.t.push_back(static_cast<double>(n) * traj.tau);
    in.gap.push_back(traj.records[n].phi - phi_inf);
  }
  return in;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinearFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y)
{
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ssr += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return f;
}

/// Indices after the transient whose gap lies in [10 floor, gap(0) / 10].
inline std::vector<std::size_t> fit_window(const DecayInput& in)
{
  std::vector<std::size_t> idx;
  if (in.gap.empty()) return idx;
  const auto first = static_cast<std::size_t>(std::ceil(in.transient_fraction * static_cast<double>(in.gap.size())));
  const double hi = in.gap.front() / 10.0;
  const double lo = 10.0 * in.floor;
  for (std::size_t i = first; i < in.gap.size(); ++i)
    if (in.gap[i] >= lo && in.gap[i] <= hi) idx.push_back(i);
  return idx;
}

inline DecayReport base_report(const DecayInput& in, FitKind kind)
{
  DecayReport r;
  r.kind = kind;
  r.p_tilde = in.p_tilde;
  r.t = in.t;
  r.gap = in.gap;
  r.floor = in.floor;
  return r;
}

inline DecayReport fit_transformed(const DecayInput& in, FitKind kind, double (*transform)(double, double),
                                   double param)
{
  const auto idx = fit_window(in);
  if (idx.size() < 3) throw std::domain_error("decay fit: window has fewer than 3 samples");
  std::vector<double> x, y;
  for (auto i : idx) {
    x.push_back(in.t[i]);
    y.push_back(transform(in.gap[i], param));
  }
  auto r = base_report(in, kind);
  const auto lf = least_squares_line(x, y);
  r.slope = lf.slope;
  r.intercept = lf.intercept;
  r.r2 = lf.r2;
  r.window_t0 = x.front();
  r.window_t1 = x.back();
  r.window_size = static_cast<int>(x.size());
  return r;
}

/// Least-squares line through log(gap) against t; C = -slope.
inline DecayReport fit_exponential(const DecayInput& in)
{
  auto r = fit_transformed(in, FitKind::exponential, [](double g, double) { return std::log(g); }, 0.0);
  r.C = -r.slope;
  return r;
}

/// Least-squares line through gap^(1-s) against t with s = pt / (2 pt - 2); slope = C (s - 1).
inline DecayReport fit_polynomial(const DecayInput& in)
{
  if (!(in.p_tilde > 1.0 && in.p_tilde < 2.0)) throw std::domain_error("fit_polynomial: requires 1 < p_tilde < 2");
  const double s = in.p_tilde / (2.0 * in.p_tilde - 2.0);
  auto r = fit_transformed(in, FitKind::polynomial, [](double g, double e) { return std::pow(g, e); }, 1.0 - s);
  r.s = s;
  r.C = r.slope / (s - 1.0);
  return r;
}

/// First t with gap <= floor that stays below the floor for the rest of the series.
inline DecayReport detect_extinction(const DecayInput& in)
{
  auto r = base_report(in, FitKind::extinction);
  std::optional<std::size_t> first;
  for (std::size_t i = in.gap.size(); i-- > 0;) {
    if (in.gap[i] > in.floor) break;
    first = i;
  }
  if (first) {
    r.extinct = true;
    r.T_ext = in.t[*first];
  }
  return r;
}

/// Cumulative discrete dissipation sum_k tau sum_cells vol R(F(Y^k), (F(Y^k) - F(Y^{k-1})) / tau), k <= n.
inline std::vector<double> cumulative_dissipation(const MaterialParams& mp, const Trajectory& traj)
{
  std::vector<double> out{0.0};
  const Grid& g = traj.fields.front().grid();
  std::vector<double> rate(g.num_dofs());
  for (int n = 1; n <= traj.steps(); ++n) {
    const auto& un = traj.fields[static_cast<std::size_t>(n)].displacement();
    const auto& um = traj.fields[static_cast<std::size_t>(n - 1)].displacement();
    for (std::size_t i = 0; i < rate.size(); ++i) rate[i] = (un[i] - um[i]) / traj.tau;
    out.push_back(out.back() + traj.tau * viscous_power(mp, g, un, rate));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convexity certificates

struct ConvexitySample {
  double gap = 0.0;       ///< (1-s) phi(y0) + s phi(y1) - phi(y_s)
  double strain_sq = 0.0; ///< |grad y1 - grad y0|_{L^2}^2
};

inline DeformationField interpolate(const DeformationField& y0, const DeformationField& y1, double s)
{
  require_same_grid(y0.grid(), y1.grid());
  std::vector<double> u(y0.displacement().size());
  for (std::size_t i = 0; i < u.size(); ++i)
    u[i] = (1.0 - s) * y0.displacement()[i] + s * y1.displacement()[i];
  return DeformationField::from_displacement(y0.grid(), std::move(u));
}

inline ConvexitySample convexity_sample(const AdmissibleSet& adm, const LoadField& load, const DeformationField& y0,
                                        const DeformationField& y1, double s)
{
  const auto& mp = adm.params;
  const auto ys = interpolate(y0, y1, s);
  ConvexitySample out;
  out.gap = (1.0 - s) * shifted_energy(mp, load, y0.displacement()) +
            s * shifted_energy(mp, load, y1.displacement()) - shifted_energy(mp, load, ys.displacement());
  std::vector<double> du(y0.displacement().size());
  for (std::size_t i = 0; i < du.size(); ++i) du[i] = y1.displacement()[i] - y0.displacement()[i];
  const auto cells = displacement_gradient_cells(y0.grid(), du);
  out.strain_sq = std::pow(cell_lp_norm(cells, 2.0, y0.grid().cell_volume()), 2.0);
  return out;
}

/// Ratio D(y_s, y0)^pt / (s^pt D(y1, y0)^pt (1 + C e^(pt-1) + C e)), e = |grad y1 - grad y0|_inf; <= 1 when the
/// generalized convexity estimate holds.
inline double metric_convexity_ratio(const MaterialParams& mp, const DeformationField& y0,
                                     const DeformationField& y1, double s, double C)
{
  const double pt = mp.p_tilde;
  const auto ys = interpolate(y0, y1, s);
  std::vector<double> du(y0.displacement().size());
  for (std::size_t i = 0; i < du.size(); ++i) du[i] = y1.displacement()[i] - y0.displacement()[i];
  const double e = cell_linf_norm(displacement_gradient_cells(y0.grid(), du));
  const double lhs = std::pow(metric(mp, ys, y0), pt);
  const double rhs = std::pow(s, pt) * std::pow(metric(mp, y1, y0), pt) * (1.0 + C * std::pow(e, pt - 1.0) + C * e);
  return rhs > 0.0 ? lhs / rhs : 0.0;
}

}  // namespace kvmms
