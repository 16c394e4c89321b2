#pragma once

/**
 * @file scenarios.hpp
 *
 * @brief Reference scenarios. configs/ref_small_strain.toml holds the same
 * numbers; a unit test keeps the two in sync.
 */

#include "kvmms/config.hpp"

namespace kvmms {

/// uhat = (0.5 x1 x2, 0.3 x1^2), ftilde = (1, -0.5), u0 = uhat + b (1, -0.5), delta = 0.01 on a 9x9 grid.
inline SmallStrainScenario reference_small_strain()
{
  SmallStrainScenario s;
  s.delta = 0.01;
  s.M_prime = 1e3;
  s.uhat.c[0][4] = 0.5;
  s.uhat.c[1][2] = 0.3;
  s.ftilde.c[0][0] = 1.0;
  s.ftilde.c[1][0] = -0.5;
  s.u0_bulk.c[0][0] = 1.0;
  s.u0_bulk.c[1][0] = -0.5;
  return s;
}

inline RunConfig reference_config()
{
  RunConfig rc;
  rc.scenario = "ref_small_strain";
  rc.seed = 1;
  rc.grid_n = 9;
  rc.small_strain = reference_small_strain();
  rc.material.delta = rc.small_strain.delta;
  rc.mms.tau = 0.01;
  rc.mms.T = 1.0;
  rc.mms.inner_tol = 1e-12;
  rc.mms.inner_max_iters = 20000;
  rc.slope.tol = 1e-12;
  return rc;
}

/// Reference run configuration at viscosity exponent pt with anisotropy A = a Id.
inline MaterialParams with_viscosity(MaterialParams mp, double pt, double a)
{
  mp.p_tilde = pt;
  mp.A = a * Mat::identity(mp.d);
  return mp;
}

}  // namespace kvmms
