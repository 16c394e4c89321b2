#pragma once

/**
 * @file optimizer.hpp
 *
 * @brief Limited-memory quasi-Newton minimizer with Armijo backtracking.
 *
 * Trial points with a non-finite objective (the det F <= 0 barrier) are
 * rejected inside the line search, so every accepted iterate is feasible.
 * Curvature pairs failing s.y > 0 are dropped; with an empty history the
 * search direction is steepest descent.
 *
 * Near a minimizer the Armijo decrease can drop below the rounding noise of
 * the objective. A step is then also accepted under the approximate Wolfe
 * test of Hager and Zhang (value within a relative noise band, directional
 * derivative shrunk). The returned point never has a larger objective than
 * the starting point.
 */

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kvmms {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Value and (when grad is non-empty) gradient of a smooth objective.
using ObjectiveFn = std::function<double(std::span<const double> x, std::span<double> grad)>;
/// True where curvature information should not be trusted.
using DegeneracyFn = std::function<bool(std::span<const double> x)>;

struct MinimizeOptions {
  double grad_tol = 1e-9;
  int max_iters = 2000;
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  int memory = 12;
  /// Euclidean length of the very first (steepest descent) trial step.
  double initial_step = 1e-2;
  /// Relative noise band of the approximate Wolfe test.
  double noise_rel = 1e-13;
  int max_backtracks = 60;
};

enum class MinimizeStatus { converged, max_iters, line_search_failed };

inline const char* to_string(MinimizeStatus s)
{
  switch (s) {
    case MinimizeStatus::converged: return "converged";
    case MinimizeStatus::max_iters: return "max_iters";
    case MinimizeStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  MinimizeStatus status = MinimizeStatus::converged;

  bool flagged() const { return status != MinimizeStatus::converged; }
};

namespace detail {

inline double vdot(std::span<const double> a, std::span<const double> b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct CurvaturePair {
  std::vector<double> s, y;
  double rho;
};

}  // namespace detail

inline MinimizeResult inner_minimize(const ObjectiveFn& objective, std::vector<double> x0,
                                     const MinimizeOptions& opt = {}, const DegeneracyFn& degenerate = {})
{
  using detail::vdot;
  const std::size_t n = x0.size();
  MinimizeResult res;
  std::vector<double> g(n), gn(n), xn(n), dir(n);

  double f = objective(x0, g);
  res.evaluations = 1;
  if (!std::isfinite(f)) throw SolverError("inner_minimize: objective is not finite at the starting point");
  const double f0 = f;
  const std::vector<double> x_start = x0;
  std::vector<double> x = std::move(x0);

  std::deque<detail::CurvaturePair> hist;
  double gamma = 0.0;  // initial inverse-Hessian scaling, 0 until the first pair
  double gnorm = std::sqrt(vdot(g, g));
  res.status = MinimizeStatus::max_iters;

  if (gnorm <= opt.grad_tol) res.status = MinimizeStatus::converged;

  for (int it = 0; it < opt.max_iters && res.status != MinimizeStatus::converged; ++it) {
    const bool degen = degenerate && degenerate(x);
    auto steepest = [&] {
      const double scale = gamma > 0.0 ? gamma : opt.initial_step / std::max(std::sqrt(vdot(g, g)), 1e-300);
      for (std::size_t i = 0; i < n; ++i) dir[i] = -scale * g[i];
    };

    if (hist.empty() || degen) {
      steepest();
    } else {
      // Two-loop recursion.
      std::vector<double> qv(g.begin(), g.end());
      std::vector<double> alpha(hist.size());
      for (std::size_t k = hist.size(); k-- > 0;) {
        alpha[k] = hist[k].rho * vdot(hist[k].s, qv);
        for (std::size_t i = 0; i < n; ++i) qv[i] -= alpha[k] * hist[k].y[i];
      }
      for (auto& v : qv) v *= gamma;
      for (std::size_t k = 0; k < hist.size(); ++k) {
        const double beta = hist[k].rho * vdot(hist[k].y, qv);
        for (std::size_t i = 0; i < n; ++i) qv[i] += (alpha[k] - beta) * hist[k].s[i];
      }
      for (std::size_t i = 0; i < n; ++i) dir[i] = -qv[i];
    }

    double gd = vdot(g, dir);
    if (!(gd < 0.0)) {
      hist.clear();
      steepest();
      gd = vdot(g, dir);
    }

    const double noise = opt.noise_rel * std::max({std::abs(f), std::abs(f0), 1e-300});
    double step = 1.0;
    bool accepted = false;
    double fn = f;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + step * dir[i];
      fn = objective(xn, gn);
      ++res.evaluations;
      if (std::isfinite(fn)) {
        if (fn <= f + opt.armijo_c * step * gd) {
          accepted = true;
          break;
        }
        const double gnd = vdot(gn, dir);
        if (fn <= f + noise && gnd >= 0.9 * gd && gnd <= -0.8 * gd) {
          accepted = true;
          break;
        }
      }
      step *= opt.armijo_shrink;
    }
    if (!accepted) {
      res.status = MinimizeStatus::line_search_failed;
      break;
    }

    detail::CurvaturePair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = xn[i] - x[i];
      pair.y[i] = gn[i] - g[i];
    }
    const double sy = vdot(pair.s, pair.y);
    const double yy = vdot(pair.y, pair.y);
    if (!degen && sy > 1e-12 * std::sqrt(vdot(pair.s, pair.s) * yy) && sy > 0.0) {
      pair.rho = 1.0 / sy;
      gamma = sy / yy;
      hist.push_back(std::move(pair));
      if (static_cast<int>(hist.size()) > opt.memory) hist.pop_front();
    }

    x.swap(xn);
    g.swap(gn);
    f = fn;
    ++res.iterations;
    gnorm = std::sqrt(vdot(g, g));
    if (gnorm <= opt.grad_tol) res.status = MinimizeStatus::converged;
  }

  if (f > f0) {
    // Only reachable through noise-band acceptances; staying put is never worse.
    x = x_start;
    f = f0;
    objective(x, g);
    gnorm = std::sqrt(vdot(g, g));
  }
  res.x = std::move(x);
  res.value = f;
  res.grad_norm = gnorm;
  return res;
}

}  // namespace kvmms
