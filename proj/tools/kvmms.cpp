// kvmms: batch front end for the minimizing-movement solver and its diagnostics.
//
// Exit codes: 0 success, 1 validation error, 2 solver failure, 3 property violation.
// Errors are reported as one human-readable line followed by one JSON record on stderr.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <unistd.h>

#include <CLI11.hpp>

#include "kvmms/kvmms.hpp"

namespace fs = std::filesystem;
using namespace kvmms;

namespace {

enum Exit { kOk = 0, kValidation = 1, kSolver = 2, kViolation = 3 };

struct Options {
  std::string config;
  std::string out = "kvmms_out";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::optional<double> tau;
  std::optional<double> p_tilde;
};

int report_error(Exit code, const std::string& kind, const std::string& message)
{
  std::cerr << "kvmms: " << kind << ": " << message << '\n';
  Json j;
  j["error"] = {{"code", static_cast<int>(code)}, {"kind", kind}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return code;
}

std::string utc_now()
{
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

/// Output directory staged next to the target and renamed into place by commit().
class Staging {
 public:
  explicit Staging(fs::path target) : target_(std::move(target))
  {
    const auto parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
    fs::create_directories(parent);
    tmp_ = parent / (".tmp-" + target_.filename().string() + "-" + std::to_string(::getpid()));
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;
  ~Staging()
  {
    std::error_code ec;
    if (!committed_) fs::remove_all(tmp_, ec);
  }

  const fs::path& dir() const { return tmp_; }

  void write(const std::string& name, const std::string& text) const { write_text_file(tmp_ / name, text); }

  void commit()
  {
    if (fs::exists(target_)) fs::remove_all(target_);
    fs::rename(tmp_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path tmp_;
  bool committed_ = false;
};

RunConfig load_config(const Options& o)
{
  if (o.config.empty()) throw ConfigError("--config is required");
  if (!fs::is_regular_file(o.config)) throw ConfigError("config file not found: " + o.config);
  RunConfig rc = load_run_config(o.config);
  if (o.seed) {
    rc.seed = *o.seed;
    rc.decay.steady.seed = *o.seed;
    rc.propcheck.samples.seed = *o.seed;
  }
  if (o.tau) rc.mms.tau = *o.tau;
  if (o.p_tilde) rc.material.p_tilde = *o.p_tilde;
  if (o.jobs < 1) throw ConfigError("--jobs must be positive");
  rc.validate();
  return rc;
}

void write_meta(const Staging& st, const std::string& command, const Options& o, const std::string& started)
{
  Json j;
  j["tool"] = "kvmms";
  j["command"] = command;
  j["config"] = o.config;
  j["jobs"] = o.jobs;
  j["started"] = started;
  j["finished"] = utc_now();
  st.write("meta.json", j.dump(2) + "\n");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

int cmd_simulate(const RunConfig& rc, Staging& st)
{
  fs::create_directories(st.dir() / "fields");
  const int every = rc.checkpoint_every;
  auto save = [&](int n, const DeformationField& y) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%06d.bin", n);
    save_checkpoint(st.dir() / "fields" / name, Checkpoint{y, rc.material.p_tilde, n * rc.mms.tau, n});
  };
  StepObserver obs;
  if (every > 0)
    obs = [&](int n, const DeformationField& y, const StepRecord&) {
      if (n % every == 0) save(n, y);
    };
  const auto r = simulate(rc, obs);
  save(0, r.traj.fields.front());
  if (every <= 0 || r.traj.steps() % every != 0) save(r.traj.steps(), r.traj.fields.back());

  std::ostringstream traj;
  write_trajectory_csv(traj, r.traj);
  st.write("trajectory.csv", traj.str());
  st.write("edb.csv", edb_csv(r.edb));
  Json j = to_json(r);
  j["scenario"] = rc.scenario;
  st.write("edb.json", dump(j));

  if (r.apriori_failures > 0) {
    dump_counterexample(st.dir() / "counterexamples", "apriori", rc.material,
                        {r.traj.fields[static_cast<std::size_t>(r.apriori_first_failure)]});
    throw PropertyViolation("a-priori bounds violated along the trajectory");
  }
  if (!r.descent.ok()) throw PropertyViolation("descent inequality violated");
  return kOk;
}

int cmd_slope(const RunConfig& rc, Staging& st)
{
  const auto s = make_setting(rc, rc.material);
  const auto r = slope_at(rc, s.adm, s.load, s.y0, rc.seed);
  if (r.slope.flagged()) throw SolverError(std::string("slope: dual problem ") + to_string(r.slope.status));
  fs::create_directories(st.dir() / "fields");
  save_checkpoint(st.dir() / "fields" / "y.bin", Checkpoint{s.y0, rc.material.p_tilde, 0.0, 0});
  save_checkpoint(st.dir() / "fields" / "wbar.bin",
                  Checkpoint{DeformationField::from_displacement(s.y0.grid(), r.slope.wbar), rc.material.p_tilde, 0.0, 0});
  Json j = to_json(r);
  j["scenario"] = rc.scenario;
  st.write("slope.json", dump(j));
  if (!r.representation.ok) {
    Sampler sampler(s.adm, s.load,
                    SampleSpec{rc.seed, rc.propcheck.slope_directions, rc.propcheck.slope_amplitude});
    dump_counterexample(st.dir() / "counterexamples", "slope_representation", rc.material,
                        {s.y0, sampler.sample(r.representation.argmax)});
    throw PropertyViolation("sampled descent ratio exceeds the local slope");
  }
  return kOk;
}

int cmd_decay(RunConfig rc, const Options& o, Staging& st)
{
  if (o.tau) rc.decay.tau = *o.tau;
  if (o.p_tilde) {
    DecayPreset chosen{*o.p_tilde, 1.0};
    for (const auto& p : rc.decay.presets)
      if (p.p_tilde == *o.p_tilde) chosen = p;
    rc.decay.presets = {chosen};
  }
  rc.validate();
  const auto runs = decay_study(rc, o.jobs);
  Json j;
  j["scenario"] = rc.scenario;
  j["constants_provenance"] = "fit constants are empirical";
  auto arr = Json::array();
  bool gap_ok = true;
  for (const auto& r : runs) {
    arr.push_back(to_json(r, rc));
    char name[40];
    std::snprintf(name, sizeof name, "gap_p%g.csv", r.preset.p_tilde);
    st.write(name, gap_csv(r));
    gap_ok = gap_ok && r.min_gap >= -1e-12;
  }
  j["runs"] = arr;
  st.write("decay.json", dump(j));
  if (!gap_ok) throw PropertyViolation("gap below -1e-12 along a trajectory");
  return kOk;
}

int cmd_propcheck(const RunConfig& rc, const Options& o, Staging& st)
{
  const auto r = propcheck(rc, o.jobs);
  Json j = to_json(r);
  j["scenario"] = rc.scenario;
  j["seed"] = rc.seed;
  st.write("propcheck.json", dump(j));
  if (!r.ok()) throw PropertyViolation(r.violations.front());
  return kOk;
}

int cmd_convergence(const RunConfig& rc, const Options& o, Staging& st)
{
  const auto r = convergence(rc, o.jobs);
  st.write("convergence.csv", convergence_csv(r));
  Json j = to_json(r);
  j["scenario"] = rc.scenario;
  st.write("convergence.json", dump(j));
  if (!r.ok()) throw PropertyViolation("EDB residual does not contract by 0.75 per halving of tau");
  return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Minimizing-movement solver for Kelvin-Voigt viscoelastic second-grade materials"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  double tau = 0.0;
  double pt = 0.0;
  const char* names[] = {"simulate", "slope", "decay", "propcheck", "convergence"};
  const char* help[] = {"run the minimizing-movement scheme and the energy-dissipation diagnostics",
                        "local slope and dual velocity at the initial field",
                        "long-time decay presets and fits",
                        "randomized property checks",
                        "step-size refinement of the energy-dissipation residual"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", o.config, "run configuration file");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "seed override");
    sub->add_option("--jobs", o.jobs, "parallel independent scenarios")->capture_default_str();
    sub->add_option("--tau", tau, "step size override");
    sub->add_option("--p-tilde", pt, "viscosity exponent override");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(kValidation, "validation", e.what());
  }

  std::string command;
  for (auto* sub : app.get_subcommands()) command = sub->get_name();
  auto* sub = app.get_subcommand(command);
  if (sub->count("--seed")) o.seed = seed;
  if (sub->count("--tau")) o.tau = tau;
  if (sub->count("--p-tilde")) o.p_tilde = pt;

  const std::string started = utc_now();
  RunConfig rc;
  try {
    rc = load_config(o);
  } catch (const std::exception& e) {
    return report_error(kValidation, "validation", e.what());
  }

  std::optional<Staging> st;
  try {
    st.emplace(o.out);
    int code = kOk;
    try {
      if (command == "simulate") code = cmd_simulate(rc, *st);
      else if (command == "slope") code = cmd_slope(rc, *st);
      else if (command == "decay") code = cmd_decay(rc, o, *st);
      else if (command == "propcheck") code = cmd_propcheck(rc, o, *st);
      else code = cmd_convergence(rc, o, *st);
    } catch (const PropertyViolation& e) {
      write_meta(*st, command, o, started);
      st->commit();
      return report_error(kViolation, "property violation", e.what());
    }
    write_meta(*st, command, o, started);
    st->commit();
    return code;
  } catch (const ValidationError& e) {
    return report_error(kValidation, "validation", e.what());
  } catch (const std::invalid_argument& e) {
    return report_error(kValidation, "validation", e.what());
  } catch (const std::exception& e) {
    return report_error(kSolver, "solver failure", e.what());
  }
}
