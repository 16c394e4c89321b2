#pragma once

/**
 * @file calibration.hpp
 *
 * @brief Empirical stand-ins for the existence-level constants, measured once
 * on frozen seed sets by tools/kvmms_calibrate and committed below. Tests
 * assert against these values times kSafetyFactor.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "kvmms/decay.hpp"
#include "kvmms/propcheck.hpp"
#include "kvmms/scenarios.hpp"

namespace kvmms {

namespace calibrated {

inline constexpr double kSafetyFactor = 1.5;

inline constexpr std::uint64_t kStaticSeed = 1000;     ///< rigidity, Korn, metric axioms
inline constexpr std::uint64_t kConvexitySeed = 2000;  ///< lambda_hat

// CALIBRATED-BEGIN
/// W(F) >= c (|F|^2 + det F^-q) - C for the reference densities; C is the dense-grid maximum 0.30077 rounded up.
inline constexpr double kGrowthFloorC = 0.1;
inline constexpr double kGrowthFloorBigC = 0.301;

/// Maxima over 500 samples at p~ = 2, datum delta = 0.1, amplitude 0.05.
inline constexpr double kRigidity17 = 0.65908680580634149;
inline constexpr double kRigidity33 = 0.65884653101805291;
inline constexpr double kKorn17 = 0.64208868790157658;
inline constexpr double kKorn33 = 0.6426385160890008;

/// Minimum convexity ratio over 100 pairs of the reference scenario; lambda_hat is half of it.
inline constexpr double kConvexityModulus = 12.675142148092714;
inline constexpr double kLambdaHat = 6.3375710740463571;

/// Largest delta (bisection, 5% width) at which 3-start steady states agree on the reference scenario.
inline constexpr double kDeltaPrime = 0.20535250264571461;
// CALIBRATED-END

}  // namespace calibrated

// ---------------------------------------------------------------------------
// Oracles

/**
 * @brief Smallest C with W(F) >= c (|F|^2 + det F^-q) - C over a dense
 * logarithmic grid of singular values in [smin, smax]. W depends on F only
 * through its singular values, so the grid covers all F with det F in
 * [smin^2, smax^2].
 */
inline double growth_floor_constant(const MaterialParams& mp, double c, double smin = 0.05, double smax = 20.0,
                                    int n = 801)
{
  double worst = -std::numeric_limits<double>::infinity();
  const double l0 = std::log(smin);
  const double dl = (std::log(smax) - l0) / (n - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < (mp.d == 2 ? n : 1); ++j) {
      const double s1 = std::exp(l0 + i * dl);
      const double s2 = mp.d == 2 ? std::exp(l0 + j * dl) : 1.0;
      Mat F = Mat::zero(mp.d);
      F(0, 0) = s1;
      if (mp.d == 2) F(1, 1) = s2;
      const double J = det(F);
      const double w = stored_energy(mp, F).value;
      worst = std::max(worst, c * (frobenius(F) * frobenius(F) + std::pow(J, -mp.q)) - w);
    }
  return worst;
}

/// Datum and load of the static property studies: the reference datum at delta = datum_scale, no load.
struct StaticSetting {
  AdmissibleSet adm;
  LoadField load;
};

inline StaticSetting static_setting(const RunConfig& rc, int n)
{
  SmallStrainScenario sc = rc.small_strain;
  sc.delta = rc.propcheck.datum_scale;
  const Grid g(rc.material.d, n);
  return {sc.admissible(rc.material, g), LoadField::zero(g)};
}

struct KornCalibration {
  double rigidity = 0.0;
  double korn = 0.0;
};

inline KornCalibration calibrate_korn(const RunConfig& rc, int n, std::uint64_t seed = calibrated::kStaticSeed)
{
  auto st = static_setting(rc, n);
  SampleSpec sp = rc.propcheck.samples;
  sp.seed = seed;
  Sampler s(st.adm, st.load, sp);
  const double pt = rc.material.p_tilde;
  return {rigidity_study(s, pt).max, korn_study(s, pt).max};
}

/// Minimum over pairs and s in {1/4, 1/2, 3/4} of the convexity gap over s(1-s)/2 |grad y1 - grad y0|^2.
inline double convexity_modulus(const AdmissibleSet& adm, const LoadField& load, double amplitude, int pairs,
                                std::uint64_t seed)
{
  SampleSpec sp;
  sp.count = pairs;
  sp.amplitude = amplitude;
  sp.seed = seed;
  Sampler s(adm, load, sp);
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i < pairs; ++i) {
    const auto a = s.sample(i, 0);
    const auto b = s.sample(i, 1);
    for (double t : {0.25, 0.5, 0.75}) {
      const auto cs = convexity_sample(adm, load, a, b, t);
      lo = std::min(lo, cs.gap / (0.5 * t * (1.0 - t) * cs.strain_sq));
    }
  }
  return lo;
}

/// True when the multi-start steady state succeeds at smallness delta.
inline bool convex_at(const RunConfig& rc, double delta)
{
  SmallStrainScenario sc = rc.small_strain;
  sc.delta = delta;
  const auto adm = sc.admissible(rc.material, rc.grid());
  const auto load = sc.load(rc.grid());
  try {
    steady_state(adm, load, rc.decay.steady);
    return true;
  } catch (const SolverError&) {
    return false;
  }
}

/// Largest delta in [lo, hi] (to relative width rel) at which the multi-start check passes.
inline double calibrate_delta_prime(const RunConfig& rc, double lo = 0.01, double hi = 1.0, double rel = 0.05)
{
  if (!convex_at(rc, lo)) return 0.0;
  if (convex_at(rc, hi)) return hi;
  while (hi - lo > rel * lo) {
    const double mid = std::sqrt(lo * hi);
    (convex_at(rc, mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace kvmms
