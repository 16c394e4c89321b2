// Recomputes the constants committed in include/kvmms/calibration.hpp and
// prints them as C++ declarations.

#include <cstdio>

#include <CLI11.hpp>

#include "kvmms/kvmms.hpp"

using namespace kvmms;

int main(int argc, char** argv)
{
  CLI::App app{"kvmms calibration"};
  bool skip_delta = false;
  app.add_flag("--skip-delta", skip_delta, "skip the delta' bisection");
  CLI11_PARSE(app, argc, argv);

  const RunConfig rc = reference_config();
  const double growth_c = 0.1;
  std::printf("inline constexpr double kGrowthFloorC = %.17g;\n", growth_c);
  std::printf("inline constexpr double kGrowthFloorBigC = %.17g;\n", growth_floor_constant(rc.material, growth_c));

  const auto k17 = calibrate_korn(rc, 17);
  const auto k33 = calibrate_korn(rc, 33);
  std::printf("inline constexpr double kRigidity17 = %.17g;\n", k17.rigidity);
  std::printf("inline constexpr double kRigidity33 = %.17g;\n", k33.rigidity);
  std::printf("inline constexpr double kKorn17 = %.17g;\n", k17.korn);
  std::printf("inline constexpr double kKorn33 = %.17g;\n", k33.korn);

  const SmallStrainScenario& sc = rc.small_strain;
  const auto adm = sc.admissible(rc.material, rc.grid());
  const auto load = sc.load(rc.grid());
  const double modulus = convexity_modulus(adm, load, sc.delta, 100, calibrated::kConvexitySeed);
  std::printf("inline constexpr double kConvexityModulus = %.17g;\n", modulus);
  std::printf("inline constexpr double kLambdaHat = %.17g;\n", 0.5 * modulus);

  if (!skip_delta) std::printf("inline constexpr double kDeltaPrime = %.17g;\n", calibrate_delta_prime(rc));
  return 0;
}
