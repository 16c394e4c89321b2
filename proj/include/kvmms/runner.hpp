#pragma once

/**
 * @file runner.hpp
 *
 * @brief Scenario drivers shared by the command-line front end and the
 * acceptance suite: simulate, slope, decay, propcheck and the step-size
 * refinement study, each returning an immutable report with its JSON and CSV
 * encodings.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kvmms/calibration.hpp"
#include "kvmms/config.hpp"
#include "kvmms/decay.hpp"
#include "kvmms/diagnostics.hpp"
#include "kvmms/io.hpp"
#include "kvmms/mms.hpp"
#include "kvmms/propcheck.hpp"
#include "kvmms/slope.hpp"

namespace kvmms {

using Json = nlohmann::ordered_json;

/// Raised when a checked inequality or invariant fails; carries the replay data.
struct PropertyViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Runs fn(0..count-1) on up to `jobs` threads; results must be written by index.
inline void parallel_for(int count, int jobs, const std::function<void(int)>& fn)
{
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Datum, load and initial field of the configured small-strain scenario.
struct Setting {
  AdmissibleSet adm;
  LoadField load;
  DeformationField y0;
};

inline Setting make_setting(const RunConfig& rc, const MaterialParams& mp)
{
  const Grid g(mp.d, rc.grid_n);
  Setting s;
  s.adm = rc.small_strain.admissible(mp, g);
  s.load = rc.small_strain.load(g);
  s.y0 = rc.small_strain.initial(s.adm, s.load);
  return s;
}

// ---------------------------------------------------------------------------
// simulate

struct DescentCheck {
  int steps = 0;
  int violations = 0;
  int flagged = 0;
  double worst_excess = -kInfinity;  ///< max of phi(Y^n) + metric term - phi(Y^{n-1})
  bool ok() const { return violations == 0 && flagged == 0; }
};

/// Exact descent phi(Y^n) + D(Y^n, Y^{n-1})^pt / (pt tau^(pt-1)) <= phi(Y^{n-1}), on shifted energies.
inline DescentCheck descent_check(const Trajectory& traj)
{
  DescentCheck c;
  for (std::size_t n = 1; n < traj.records.size(); ++n) {
    const auto& r = traj.records[n];
    const double ex = r.phi_shifted + r.metric_term - traj.records[n - 1].phi_shifted;
    ++c.steps;
    if (r.flagged()) ++c.flagged;
    if (ex > 0.0) ++c.violations;
    c.worst_excess = std::max(c.worst_excess, ex);
  }
  return c;
}

struct SimulateResult {
  MaterialParams params;
  Trajectory traj;
  DescentCheck descent;
  EdbReport edb;
  int apriori_failures = 0;
  int apriori_first_failure = -1;
  double min_det = kInfinity;
};

inline SimulateResult simulate(const RunConfig& rc, const StepObserver& observer = {})
{
  SimulateResult out;
  out.params = rc.material;
  const auto s = make_setting(rc, rc.material);
  out.traj = run(s.adm, s.load, rc.mms, s.y0, observer);
  out.descent = descent_check(out.traj);
  if (out.traj.any_flagged())
    throw SolverError("simulate: " + std::to_string(out.descent.flagged) + " step(s) hit the inner iteration cap");
  for (std::size_t n = 0; n < out.traj.fields.size(); ++n) {
    const auto ar = apriori_check(s.adm, s.load, out.traj.fields[n]);
    out.min_det = std::min(out.min_det, ar.min_det);
    if (!ar.ok) {
      if (out.apriori_failures == 0) out.apriori_first_failure = static_cast<int>(n);
      ++out.apriori_failures;
    }
  }
  out.edb = edb_report(s.adm, s.load, out.traj, rc.slope);
  return out;
}

inline std::string edb_csv(const EdbReport& rep)
{
  std::ostringstream os;
  os << "n,t,phi,slope,cum_metric,cum_slope,residual\n";
  for (const auto& r : rep.rows)
    os << r.n << ',' << fmt17(r.t) << ',' << fmt17(r.phi) << ',' << fmt17(r.slope) << ',' << fmt17(r.cum_metric)
       << ',' << fmt17(r.cum_slope) << ',' << fmt17(r.residual) << '\n';
  return os.str();
}

inline Json to_json(const SimulateResult& r)
{
  Json j;
  j["params"] = to_json(r.params);
  j["tau"] = r.traj.tau;
  j["steps"] = r.traj.steps();
  j["phi_initial"] = r.traj.records.front().phi;
  j["phi_final"] = r.traj.records.back().phi;
  j["descent"] = {{"steps", r.descent.steps},
                  {"violations", r.descent.violations},
                  {"flagged", r.descent.flagged},
                  {"worst_excess", r.descent.worst_excess}};
  j["edb"] = {{"final_residual", r.edb.final_residual},
              {"dissipation_identity", r.edb.dissipation_identity},
              {"slope_flags", r.edb.slope_flags},
              {"max_slope_residual", r.edb.max_slope_residual}};
  j["apriori"] = {{"failures", r.apriori_failures}, {"min_det", r.min_det}};
  return j;
}

// ---------------------------------------------------------------------------
// slope

struct SlopeRun {
  SlopeResult slope;
  double recomputed = 0.0;  ///< slope re-evaluated from the returned wbar
  SlopeRepresentationRecord representation;
};

inline RepresentationConstants reference_representation_constants(double pt)
{
  return {calibrated::kLambdaHat, power_inequality_constant(pt), PenaltyForm::small_strain};
}

inline SlopeRun slope_at(const RunConfig& rc, const AdmissibleSet& adm, const LoadField& load, const DeformationField& y,
                         std::uint64_t seed)
{
  SlopeRun out;
  out.slope = local_slope(adm, load, y, rc.slope);
  out.recomputed = slope_from_velocity(adm.params, y.grid(), y.displacement(), out.slope.wbar);
  SampleSpec sp;
  sp.seed = seed;
  sp.count = rc.propcheck.slope_directions;
  sp.amplitude = rc.propcheck.slope_amplitude;
  out.representation = slope_representation_check(adm, load, y, sp, reference_representation_constants(adm.params.p_tilde),
                                                  1e-6, rc.slope);
  return out;
}

inline Json to_json(const SlopeRun& r)
{
  Json j;
  j["slope"] = r.slope.slope;
  j["recomputed"] = r.recomputed;
  j["residual"] = r.slope.residual;
  j["iterations"] = r.slope.iterations;
  j["status"] = to_string(r.slope.status);
  j["representation"] = {{"directions", r.representation.count},
                         {"max_ratio", r.representation.max_ratio},
                         {"argmax", r.representation.argmax},
                         {"tolerance", r.representation.tolerance},
                         {"ok", r.representation.ok},
                         {"lambda_hat", calibrated::kLambdaHat},
                         {"lambda_hat_provenance", "empirical (calibration.hpp)"}};
  return j;
}

// ---------------------------------------------------------------------------
// decay

struct DecayRun {
  DecayPreset preset;
  SteadyState steady;
  Trajectory traj;
  DecayReport report;
  std::vector<double> cum_dissipation;
  double min_gap = kInfinity;
  bool extinct = false;  ///< reached the floor within the horizon
  double T_ext = 0.0;
  /// 2 * cumulative dissipation >= (1 - exp(-0.9 C t)) gap(0) at every sample (pt = 2 only).
  std::optional<bool> dissipation_bound;
};

inline MaterialParams preset_params(const RunConfig& rc, const DecayPreset& p)
{
  MaterialParams mp = rc.material;
  mp.p_tilde = p.p_tilde;
  mp.A = p.A_scale * Mat::identity(mp.d);
  mp.validate();
  return mp;
}

inline DecayRun decay_run(const RunConfig& rc, const DecayPreset& preset)
{
  DecayRun out;
  out.preset = preset;
  const auto mp = preset_params(rc, preset);
  const auto s = make_setting(rc, mp);
  out.steady = steady_state(s.adm, s.load, rc.decay.steady);
  MmsConfig cfg = rc.mms;
  cfg.tau = rc.decay.tau;
  cfg.T = rc.decay.T;
  out.traj = run(s.adm, s.load, cfg, s.y0);
  if (out.traj.any_flagged()) throw SolverError("decay: trajectory contains flagged steps");
  const auto in = decay_input(out.traj, out.steady.phi, rc.decay.floor);
  for (double g : in.gap) out.min_gap = std::min(out.min_gap, g);
  const auto ext = detect_extinction(in);
  out.extinct = ext.extinct;
  out.T_ext = ext.T_ext;
  if (mp.p_tilde == 2.0)
    out.report = fit_exponential(in);
  else if (mp.p_tilde < 2.0)
    out.report = fit_polynomial(in);
  else
    out.report = ext;
  out.cum_dissipation = cumulative_dissipation(mp, out.traj);
  if (mp.p_tilde == 2.0) {
    bool ok = true;
    for (std::size_t i = 0; i < in.t.size(); ++i)
      ok = ok && 2.0 * out.cum_dissipation[i] >= (1.0 - std::exp(-0.9 * out.report.C * in.t[i])) * in.gap.front();
    out.dissipation_bound = ok;
  }
  return out;
}

inline std::vector<DecayRun> decay_study(const RunConfig& rc, int jobs = 1)
{
  std::vector<DecayRun> out(rc.decay.presets.size());
  parallel_for(static_cast<int>(out.size()), jobs,
               [&](int i) { out[static_cast<std::size_t>(i)] = decay_run(rc, rc.decay.presets[static_cast<std::size_t>(i)]); });
  return out;
}

inline std::string gap_csv(const DecayRun& r)
{
  std::ostringstream os;
  os << "n,t,gap,cum_dissipation\n";
  for (std::size_t i = 0; i < r.report.t.size(); ++i)
    os << i << ',' << fmt17(r.report.t[i]) << ',' << fmt17(r.report.gap[i]) << ',' << fmt17(r.cum_dissipation[i]) << '\n';
  return os.str();
}

inline Json to_json(const DecayRun& r, const RunConfig& rc)
{
  Json j;
  j["p_tilde"] = r.preset.p_tilde;
  j["A_scale"] = r.preset.A_scale;
  j["tau"] = rc.decay.tau;
  j["T"] = rc.decay.T;
  j["phi_inf"] = r.steady.phi;
  j["steady_grad_norm"] = r.steady.grad_norm;
  j["steady_spread"] = r.steady.spread;
  j["gap_initial"] = r.report.gap.front();
  j["gap_final"] = r.report.gap.back();
  j["min_gap"] = r.min_gap;
  j["floor"] = r.report.floor;
  Json fit;
  fit["kind"] = to_string(r.report.kind);
  if (r.report.kind != FitKind::extinction) {
    if (r.report.kind == FitKind::polynomial) fit["s"] = r.report.s;
    fit["C"] = r.report.C;
    fit["slope"] = r.report.slope;
    fit["intercept"] = r.report.intercept;
    fit["r2"] = r.report.r2;
    fit["window"] = {r.report.window_t0, r.report.window_t1};
    fit["window_size"] = r.report.window_size;
  }
  j["fit"] = fit;
  j["extinct"] = r.extinct;
  if (r.extinct) j["T_ext"] = r.T_ext;
  if (r.dissipation_bound) j["dissipation_bound"] = *r.dissipation_bound;
  return j;
}

// ---------------------------------------------------------------------------
// propcheck

struct GridStudy {
  int n = 0;
  RatioStats rigidity;
  RatioStats korn;
  TriangleStats triangle;
  RatioStats equivalence;
  int rejections = 0;
  int apriori_failures = 0;
  std::optional<double> rigidity_bound;  ///< calibrated constant times the safety factor
  std::optional<double> korn_bound;
};

struct PropcheckResult {
  std::vector<GridStudy> grids;
  double korn_identity = 0.0;  ///< korn_ratio(id, u) for u with symmetric gradient
  double equivalence_h_ratio = 1.0;  ///< worst ratio of the equivalence extremes across grid sizes
  SlopeRun slope;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

inline std::optional<double> calibrated_bound(const char* what, int n)
{
  const bool rig = std::string(what) == "rigidity";
  if (n == 17) return calibrated::kSafetyFactor * (rig ? calibrated::kRigidity17 : calibrated::kKorn17);
  if (n == 33) return calibrated::kSafetyFactor * (rig ? calibrated::kRigidity33 : calibrated::kKorn33);
  return std::nullopt;
}

inline GridStudy grid_study(const RunConfig& rc, int n, std::uint64_t seed)
{
  GridStudy st;
  st.n = n;
  const auto setting = static_setting(rc, n);
  SampleSpec sp = rc.propcheck.samples;
  sp.seed = seed;
  Sampler s(setting.adm, setting.load, sp);
  const double pt = rc.material.p_tilde;
  st.rigidity = rigidity_study(s, pt);
  st.korn = korn_study(s, pt);
  for (int i = 0; i < sp.count; ++i)
    if (!apriori_check(setting.adm, setting.load, s.sample(i, 0)).ok) ++st.apriori_failures;
  SampleSpec tp = sp;
  tp.count = rc.propcheck.triangle_count;
  Sampler ts(setting.adm, setting.load, tp);
  st.triangle = triangle_study(ts, rc.material);
  st.equivalence = norm_equivalence_study(ts, rc.material);
  st.rejections = s.rejections() + ts.rejections();
  st.rigidity_bound = calibrated_bound("rigidity", n);
  st.korn_bound = calibrated_bound("korn", n);
  return st;
}

inline Json to_json(const RatioStats& s)
{
  Json j;
  j["count"] = s.count;
  j["infinite"] = s.infinite;
  j["min"] = s.min;
  j["max"] = s.max;
  j["argmin"] = s.argmin;
  j["argmax"] = s.argmax;
  j["histogram"] = s.histogram;
  return j;
}

inline PropcheckResult propcheck(const RunConfig& rc, int jobs = 1)
{
  PropcheckResult out;
  const auto seed = rc.seed;
  out.grids.resize(rc.propcheck.grids.size());
  parallel_for(static_cast<int>(out.grids.size()), jobs, [&](int i) {
    out.grids[static_cast<std::size_t>(i)] = grid_study(rc, rc.propcheck.grids[static_cast<std::size_t>(i)], seed);
  });

  auto violate = [&](const std::string& msg) { out.violations.push_back(msg); };
  for (const auto& st : out.grids) {
    const std::string at = " on the " + std::to_string(st.n) + "^d grid";
    if (st.rigidity.infinite) violate("rigidity ratio infinite" + at);
    if (st.korn.infinite) violate("Korn ratio infinite" + at);
    if (st.rigidity_bound && st.rigidity.max > *st.rigidity_bound) violate("rigidity ratio above calibrated bound" + at);
    if (st.korn_bound && st.korn.max > *st.korn_bound) violate("Korn ratio above calibrated bound" + at);
    if (st.triangle.max_excess > 1e-12) violate("triangle inequality violated" + at);
    if (st.triangle.max_self_distance != 0.0) violate("D(y, y) nonzero" + at);
    if (!(st.equivalence.min > 0.0) || !std::isfinite(st.equivalence.max)) violate("norm equivalence degenerate" + at);
    if (st.apriori_failures) violate("a-priori bounds violated by sampled fields" + at);
  }
  for (std::size_t a = 0; a < out.grids.size(); ++a)
    for (std::size_t b = a + 1; b < out.grids.size(); ++b) {
      const auto& x = out.grids[a].equivalence;
      const auto& y = out.grids[b].equivalence;
      out.equivalence_h_ratio = std::max({out.equivalence_h_ratio, x.max / y.max, y.max / x.max, x.min / y.min, y.min / x.min});
    }
  if (!(out.equivalence_h_ratio <= 2.0)) violate("norm equivalence constants not h-stable within a factor 2");

  const Grid g0(rc.material.d, rc.propcheck.grids.front());
  const auto u = symmetric_gradient_field(g0);
  out.korn_identity = korn_ratio(DeformationField::identity(g0), u, rc.material.p_tilde);
  if (std::abs(out.korn_identity - 0.5) > 1e-12) violate("korn_ratio(id, symmetric gradient) differs from 1/2");

  const auto s = make_setting(rc, rc.material);
  out.slope = slope_at(rc, s.adm, s.load, s.y0, seed);
  if (!out.slope.representation.ok) violate("sampled descent ratio exceeds the local slope");
  return out;
}

inline Json to_json(const PropcheckResult& r)
{
  Json j;
  auto grids = Json::array();
  for (const auto& st : r.grids) {
    Json g;
    g["n"] = st.n;
    g["rigidity"] = to_json(st.rigidity);
    if (st.rigidity_bound) g["rigidity"]["bound"] = *st.rigidity_bound;
    g["korn"] = to_json(st.korn);
    if (st.korn_bound) g["korn"]["bound"] = *st.korn_bound;
    g["triangle"] = {{"count", st.triangle.count},
                     {"max_excess", st.triangle.max_excess},
                     {"argmax", st.triangle.argmax},
                     {"max_self_distance", st.triangle.max_self_distance}};
    g["norm_equivalence"] = to_json(st.equivalence);
    g["apriori_failures"] = st.apriori_failures;
    g["rejections"] = st.rejections;
    grids.push_back(g);
  }
  j["grids"] = grids;
  j["norm_equivalence_h_ratio"] = r.equivalence_h_ratio;
  j["korn_identity"] = r.korn_identity;
  j["slope_representation"] = to_json(r.slope);
  j["constants_provenance"] = "empirical, frozen seed set (calibration.hpp)";
  j["violations"] = r.violations;
  return j;
}

// ---------------------------------------------------------------------------
// convergence

struct ConvergenceRow {
  double tau = 0.0;
  double edb_residual = 0.0;
  double dissipation_identity = 0.0;
  double edb_ratio = 0.0;  ///< |residual(tau)| / |residual(previous tau)|, 0 on the first row
  double identity_ratio = 0.0;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  double max_edb_ratio = 0.0;
  double max_identity_ratio = 0.0;
  bool ok(double bound = 0.75) const { return max_edb_ratio <= bound && max_identity_ratio <= bound; }
};

inline ConvergenceResult convergence(const RunConfig& rc, int jobs = 1)
{
  ConvergenceResult out;
  out.rows.resize(rc.convergence.taus.size());
  parallel_for(static_cast<int>(out.rows.size()), jobs, [&](int i) {
    RunConfig c = rc;
    c.mms.tau = rc.convergence.taus[static_cast<std::size_t>(i)];
    const auto s = make_setting(c, c.material);
    const auto traj = run(s.adm, s.load, c.mms, s.y0);
    if (traj.any_flagged()) throw SolverError("convergence: trajectory contains flagged steps");
    const auto rep = edb_report(s.adm, s.load, traj, c.slope);
    auto& row = out.rows[static_cast<std::size_t>(i)];
    row.tau = c.mms.tau;
    row.edb_residual = rep.final_residual;
    row.dissipation_identity = rep.dissipation_identity;
  });
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    auto& r = out.rows[i];
    r.edb_ratio = std::abs(r.edb_residual) / std::abs(out.rows[i - 1].edb_residual);
    r.identity_ratio = std::abs(r.dissipation_identity) / std::abs(out.rows[i - 1].dissipation_identity);
    out.max_edb_ratio = std::max(out.max_edb_ratio, r.edb_ratio);
    out.max_identity_ratio = std::max(out.max_identity_ratio, r.identity_ratio);
  }
  return out;
}

inline std::string convergence_csv(const ConvergenceResult& r)
{
  std::ostringstream os;
  os << "tau,edb_residual,dissipation_identity,edb_ratio,identity_ratio\n";
  for (const auto& x : r.rows)
    os << fmt17(x.tau) << ',' << fmt17(x.edb_residual) << ',' << fmt17(x.dissipation_identity) << ','
       << fmt17(x.edb_ratio) << ',' << fmt17(x.identity_ratio) << '\n';
  return os.str();
}

inline Json to_json(const ConvergenceResult& r)
{
  Json j;
  auto rows = Json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"tau", x.tau},
                    {"edb_residual", x.edb_residual},
                    {"dissipation_identity", x.dissipation_identity},
                    {"edb_ratio", x.edb_ratio},
                    {"identity_ratio", x.identity_ratio}});
  j["rows"] = rows;
  j["max_edb_ratio"] = r.max_edb_ratio;
  j["max_identity_ratio"] = r.max_identity_ratio;
  j["ok"] = r.ok();
  return j;
}

}  // namespace kvmms
