#pragma once

/**
 * @file mms.hpp
 *
 * @brief Minimizing-movement time stepping. Each step minimizes
 *
 *     Phi(tau, u; v) = D(v, u)^pt / (pt tau^(pt-1)) + phi(v)
 *
 * over admissible v, warm-started at the previous state u.
 */

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "kvmms/field.hpp"
#include "kvmms/optimizer.hpp"

namespace kvmms {

struct MmsConfig {
  double tau = 0.01;
  double T = 1.0;
  double inner_tol = 1e-9;
  int inner_max_iters = 5000;
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;

  void validate() const
  {
    if (!(tau > 0.0)) throw ValidationError("MmsConfig: tau must be positive");
    if (!(T >= tau)) throw ValidationError("MmsConfig: T must be at least tau");
    if (!(inner_tol > 0.0)) throw ValidationError("MmsConfig: inner_tol must be positive");
    if (inner_max_iters <= 0) throw ValidationError("MmsConfig: inner_max_iters must be positive");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ValidationError("MmsConfig: armijo_c must lie in (0,1)");
    if (!(armijo_shrink > 0.0 && armijo_shrink < 1.0))
      throw ValidationError("MmsConfig: armijo_shrink must lie in (0,1)");
  }

  int num_steps() const { return static_cast<int>(std::ceil(T / tau - 1e-9)); }

  MinimizeOptions minimize_options() const
  {
    MinimizeOptions o;
    o.grad_tol = inner_tol;
    o.max_iters = inner_max_iters;
    o.armijo_c = armijo_c;
    o.armijo_shrink = armijo_shrink;
    return o;
  }
};

struct StepRecord {
  int n = 0;
  double t = 0.0;
  double phi = 0.0;          ///< phi(Y^n)
  double phi_shifted = 0.0;  ///< phi(Y^n) without the constant reference work
  double increment = 0.0;    ///< D(Y^n, Y^{n-1})
  double metric_term = 0.0;  ///< D(Y^n, Y^{n-1})^pt / (pt tau^(pt-1)), as evaluated in the step objective
  int inner_iterations = 0;
  double grad_norm = 0.0;
  MinimizeStatus status = MinimizeStatus::converged;

  bool flagged() const { return status != MinimizeStatus::converged; }
};

/// Y^0 .. Y^N with per-step records; the piecewise-constant interpolant is exposed by at().
struct Trajectory {
  double tau = 0.0;
  double p_tilde = 2.0;
  std::vector<DeformationField> fields;
  std::vector<StepRecord> records;

  int steps() const { return static_cast<int>(fields.size()) - 1; }
  double time(int n) const { return n * tau; }

  /// Value of the interpolant: Y^n for t in ((n-1) tau, n tau].
  const DeformationField& at(double t) const
  {
    if (t <= 0.0) return fields.front();
    const int n = static_cast<int>(std::ceil(t / tau - 1e-9));
    return fields[static_cast<std::size_t>(std::min(n, steps()))];
  }

  bool any_flagged() const
  {
    for (const auto& r : records)
      if (r.flagged()) return true;
    return false;
  }
};

struct StepObjectiveParts {
  double metric_term = 0.0;
  double phi_shifted = 0.0;
  double total = 0.0;
};

/// Step objective on a raw displacement vector; gradient written when grad is non-empty.
inline StepObjectiveParts step_objective(const MaterialParams& mp, const LoadField& load, double tau,
                                         std::span<const double> u_prev, std::span<const double> v,
                                         std::span<double> grad = {})
{
  const Grid& g = load.grid;
  const double pt = mp.p_tilde;
  const double scale = 1.0 / (pt * std::pow(tau, pt - 1.0));
  StepObjectiveParts out;
  std::vector<double> mgrad;
  if (!grad.empty()) mgrad.resize(grad.size());
  out.phi_shifted = shifted_energy(mp, load, v, grad);
  if (!std::isfinite(out.phi_shifted)) {
    out.total = kInfinity;
    return out;
  }
  out.metric_term = scale * metric_power(mp, g, u_prev, v, mgrad);
  out.total = out.metric_term + out.phi_shifted;
  if (!grad.empty())
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += scale * mgrad[i];
  return out;
}

inline void require_admissible(const AdmissibleSet& adm, const LoadField& load, const DeformationField& y,
                               const char* who)
{
  require_same_grid(adm.grid(), y.grid());
  require_same_grid(load.grid, y.grid());
  if (!adm.matches_boundary(y)) throw std::domain_error(std::string(who) + ": field violates the Dirichlet datum");
  if (!std::isfinite(shifted_energy(adm.params, load, y.displacement())))
    throw std::domain_error(std::string(who) + ": field is infeasible (det F <= 0)");
}

struct StepResult {
  DeformationField y;
  StepRecord record;
};

inline StepResult step_with_record(const AdmissibleSet& adm, const LoadField& load, const MmsConfig& cfg,
                                   const DeformationField& y_prev)
{
  require_admissible(adm, load, y_prev, "mms::step");
  const auto& mp = adm.params;
  const std::vector<double>& u_prev = y_prev.displacement();
  auto fn = [&](std::span<const double> v, std::span<double> grad) {
    return step_objective(mp, load, cfg.tau, u_prev, v, grad).total;
  };
  auto res = inner_minimize(fn, u_prev, cfg.minimize_options());

  StepResult out{DeformationField::from_displacement(y_prev.grid(), std::move(res.x)), {}};
  const auto parts = step_objective(mp, load, cfg.tau, u_prev, out.y.displacement());
  auto& rec = out.record;
  rec.phi_shifted = parts.phi_shifted;
  rec.metric_term = parts.metric_term;
  rec.phi = energy(adm, load, out.y);
  rec.increment = metric(mp, out.y, y_prev);
  rec.inner_iterations = res.iterations;
  rec.grad_norm = res.grad_norm;
  rec.status = res.status;
  return out;
}

inline DeformationField step(const AdmissibleSet& adm, const LoadField& load, const MmsConfig& cfg,
                             const DeformationField& y_prev)
{
  return step_with_record(adm, load, cfg, y_prev).y;
}

/// Called after every step with the step index and the new state.
using StepObserver = std::function<void(int n, const DeformationField&, const StepRecord&)>;

inline Trajectory run(const AdmissibleSet& adm, const LoadField& load, const MmsConfig& cfg,
                      const DeformationField& y0, const StepObserver& observer = {})
{
  cfg.validate();
  adm.params.validate();
  require_admissible(adm, load, y0, "mms::run");

  Trajectory traj;
  traj.tau = cfg.tau;
  traj.p_tilde = adm.params.p_tilde;
  traj.fields.push_back(y0);
  StepRecord r0;
  r0.phi = energy(adm, load, y0);
  r0.phi_shifted = shifted_energy(adm.params, load, y0.displacement());
  if (r0.phi > adm.M) throw SolverError("mms::run: initial energy exceeds the ceiling M");
  traj.records.push_back(r0);

  const int steps = cfg.num_steps();
  for (int n = 1; n <= steps; ++n) {
    auto sr = step_with_record(adm, load, cfg, traj.fields.back());
    sr.record.n = n;
    sr.record.t = n * cfg.tau;
    if (sr.record.phi > adm.M) throw SolverError("mms::run: energy exceeded the ceiling M");
    if (observer) observer(n, sr.y, sr.record);
    traj.fields.push_back(std::move(sr.y));
    traj.records.push_back(sr.record);
  }
  return traj;
}

}  // namespace kvmms
