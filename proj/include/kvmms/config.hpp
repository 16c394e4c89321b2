#pragma once

/**
 * @file config.hpp
 *
 * @brief Run configuration: a flat key-value text file with [sections],
 * written in a small TOML subset (numbers, booleans, quoted strings, arrays
 * of numbers, '#' comments). Unknown sections or keys are rejected.
 */

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "kvmms/decay.hpp"
#include "kvmms/densities.hpp"
#include "kvmms/mms.hpp"
#include "kvmms/propcheck.hpp"
#include "kvmms/slope.hpp"

namespace kvmms {

inline constexpr int kSchemaVersion = 1;

struct ConfigError : ValidationError {
  using ValidationError::ValidationError;
};

// ---------------------------------------------------------------------------
// Key-value document

using ConfigValue = std::variant<double, bool, std::string, std::vector<double>>;

class ConfigDoc {
 public:
  static ConfigDoc parse(std::istream& is, const std::string& origin = "config")
  {
    ConfigDoc doc;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      auto fail = [&](const std::string& msg) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
      };
      line = strip(strip_comment(line));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail("malformed section header");
        section = strip(line.substr(1, line.size() - 2));
        if (section.empty()) fail("empty section name");
        if (!doc.sections_.insert(section).second) fail("duplicate section [" + section + "]");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail("expected key = value");
      const std::string key = strip(line.substr(0, eq));
      const std::string raw = strip(line.substr(eq + 1));
      if (key.empty()) fail("empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (doc.values_.count(full)) fail("duplicate key " + full);
      try {
        doc.values_[full] = parse_value(raw);
      } catch (const ConfigError& e) {
        fail(e.what());
      }
    }
    return doc;
  }

  static ConfigDoc parse_string(const std::string& text)
  {
    std::istringstream is(text);
    return parse(is);
  }

  static ConfigDoc load(const std::string& path)
  {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    return parse(is, path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }

  double number(const std::string& key) const
  {
    const auto* v = std::get_if<double>(&at(key));
    if (!v) throw ConfigError(key + ": expected a number");
    return *v;
  }

  int integer(const std::string& key) const
  {
    const double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 2e9) throw ConfigError(key + ": expected an integer");
    return static_cast<int>(v);
  }

  bool boolean(const std::string& key) const
  {
    const auto* v = std::get_if<bool>(&at(key));
    if (!v) throw ConfigError(key + ": expected true or false");
    return *v;
  }

  std::string string(const std::string& key) const
  {
    const auto* v = std::get_if<std::string>(&at(key));
    if (!v) throw ConfigError(key + ": expected a quoted string");
    return *v;
  }

  std::vector<double> array(const std::string& key) const
  {
    const auto* v = std::get_if<std::vector<double>>(&at(key));
    if (!v) throw ConfigError(key + ": expected an array of numbers");
    return *v;
  }

  /// Keys never read through one of the accessors above.
  std::vector<std::string> unused() const
  {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

 private:
  const ConfigValue& at(const std::string& key) const
  {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing key " + key);
    used_.insert(key);
    return it->second;
  }

  static std::string strip(const std::string& s)
  {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::string strip_comment(const std::string& s)
  {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static double parse_number(const std::string& s)
  {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number '" + s + "'");
    }
    if (pos != s.size() || !std::isfinite(v)) throw ConfigError("cannot parse number '" + s + "'");
    return v;
  }

  static ConfigValue parse_value(const std::string& raw)
  {
    if (raw.empty()) throw ConfigError("missing value");
    if (raw == "true") return true;
    if (raw == "false") return false;
    if (raw.front() == '"') {
      if (raw.size() < 2 || raw.back() != '"') throw ConfigError("unterminated string");
      return raw.substr(1, raw.size() - 2);
    }
    if (raw.front() == '[') {
      if (raw.back() != ']') throw ConfigError("unterminated array");
      std::vector<double> out;
      std::stringstream ss(raw.substr(1, raw.size() - 2));
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = strip(item);
        if (item.empty()) continue;
        out.push_back(parse_number(item));
      }
      return out;
    }
    return parse_number(raw);
  }

  std::map<std::string, ConfigValue> values_;
  std::set<std::string> sections_;
  mutable std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Run configuration

struct DecayPreset {
  double p_tilde = 2.0;
  double A_scale = 1.0;
};

struct DecayConfig {
  std::vector<DecayPreset> presets{{1.5, 1.0}, {2.0, 10.0}, {3.0, 10.0}};
  double tau = 0.05;
  double T = 50.0;
  double floor = 1e-10;
  SteadyStateOptions steady;
};

struct PropcheckConfig {
  std::vector<int> grids{17, 33};
  double datum_scale = 0.1;  ///< delta used for the datum of the static studies
  SampleSpec samples;
  int triangle_count = 200;
  int slope_directions = 50;
  double slope_amplitude = 1e-3;
};

struct ConvergenceConfig {
  std::vector<double> taus{1e-2, 5e-3, 2.5e-3};
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string scenario = "ref_small_strain";
  std::uint64_t seed = 1;
  MaterialParams material;
  int grid_n = 9;
  MmsConfig mms;
  int checkpoint_every = 0;
  SmallStrainScenario small_strain;
  SlopeOptions slope;
  DecayConfig decay;
  PropcheckConfig propcheck;
  ConvergenceConfig convergence;

  Grid grid() const { return Grid(material.d, grid_n); }

  void validate() const
  {
    if (schema_version != kSchemaVersion) throw ConfigError("unsupported schema_version");
    material.validate();
    Grid(material.d, grid_n);
    mms.validate();
    small_strain.validate();
    if (checkpoint_every < 0) throw ConfigError("mms.checkpoint_every must be nonnegative");
    if (!(slope.tol > 0.0) || slope.max_iters < 1) throw ConfigError("slope: tol and max_iters must be positive");
    if (decay.presets.empty()) throw ConfigError("decay: at least one preset is required");
    for (const auto& p : decay.presets)
      if (!(p.p_tilde > 1.0) || !(p.A_scale > 0.0)) throw ConfigError("decay: presets need p_tilde > 1 and A_scale > 0");
    if (!(decay.tau > 0.0) || !(decay.T >= decay.tau) || !(decay.floor > 0.0))
      throw ConfigError("decay: tau, T and floor must be positive with T >= tau");
    for (int n : propcheck.grids) Grid(material.d, n);
    propcheck.samples.validate();
    if (propcheck.triangle_count < 1 || propcheck.slope_directions < 1)
      throw ConfigError("propcheck: counts must be positive");
    if (!(propcheck.datum_scale >= 0.0) || !(propcheck.slope_amplitude > 0.0))
      throw ConfigError("propcheck: datum_scale must be nonnegative and slope_amplitude positive");
    if (convergence.taus.size() < 2) throw ConfigError("convergence: at least two step sizes are required");
    for (double t : convergence.taus)
      if (!(t > 0.0)) throw ConfigError("convergence: step sizes must be positive");
  }
};

namespace detail {

inline PolyField poly_from_arrays(const ConfigDoc& doc, const std::string& prefix, int d)
{
  PolyField pf;
  for (int a = 0; a < d; ++a) {
    const std::string key = prefix + (a == 0 ? "_x" : "_y");
    if (!doc.has(key)) continue;
    const auto v = doc.array(key);
    if (v.size() != 9) throw ConfigError(key + ": expected 9 coefficients (x1^i x2^j, i fastest)");
    for (std::size_t i = 0; i < 9; ++i) pf.c[static_cast<std::size_t>(a)][i] = v[i];
  }
  return pf;
}

}  // namespace detail

inline RunConfig run_config_from(const ConfigDoc& doc)
{
  RunConfig rc;
  auto opt_num = [&](const std::string& k, double& dst) {
    if (doc.has(k)) dst = doc.number(k);
  };
  auto opt_int = [&](const std::string& k, int& dst) {
    if (doc.has(k)) dst = doc.integer(k);
  };

  if (!doc.has("schema_version")) throw ConfigError("missing key schema_version");
  rc.schema_version = doc.integer("schema_version");
  if (rc.schema_version != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(rc.schema_version));
  if (doc.has("scenario")) rc.scenario = doc.string("scenario");
  if (doc.has("seed")) {
    const int s = doc.integer("seed");
    if (s < 0) throw ConfigError("seed must be nonnegative");
    rc.seed = static_cast<std::uint64_t>(s);
  }

  auto& m = rc.material;
  opt_int("material.d", m.d);
  check_dim(m.d);
  m.A = Mat::identity(m.d);
  opt_num("material.p", m.p);
  opt_num("material.p_tilde", m.p_tilde);
  opt_num("material.q", m.q);
  opt_num("material.alpha_W", m.alpha_W);
  opt_num("material.beta_W", m.beta_W);
  opt_num("material.kappa_P", m.kappa_P);
  opt_num("material.c0", m.c0);
  opt_num("material.C0", m.C0);
  if (doc.has("material.A")) {
    const auto a = doc.array("material.A");
    if (a.size() != static_cast<std::size_t>(m.d * m.d)) throw ConfigError("material.A: expected d*d entries");
    for (int i = 0; i < m.d * m.d; ++i) m.A.a[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)];
  }

  opt_int("grid.n", rc.grid_n);

  opt_num("mms.tau", rc.mms.tau);
  opt_num("mms.T", rc.mms.T);
  opt_num("mms.inner_tol", rc.mms.inner_tol);
  opt_int("mms.inner_max_iters", rc.mms.inner_max_iters);
  opt_num("mms.armijo_c", rc.mms.armijo_c);
  opt_num("mms.armijo_shrink", rc.mms.armijo_shrink);
  opt_int("mms.checkpoint_every", rc.checkpoint_every);

  auto& ss = rc.small_strain;
  opt_num("small_strain.delta", ss.delta);
  opt_num("small_strain.M_prime", ss.M_prime);
  ss.uhat = detail::poly_from_arrays(doc, "small_strain.uhat", m.d);
  ss.ftilde = detail::poly_from_arrays(doc, "small_strain.ftilde", m.d);
  ss.u0_bulk = detail::poly_from_arrays(doc, "small_strain.u0", m.d);
  m.delta = ss.delta;

  opt_num("slope.tol", rc.slope.tol);
  opt_int("slope.max_iters", rc.slope.max_iters);

  auto& dc = rc.decay;
  if (doc.has("decay.p_tilde") || doc.has("decay.A_scale")) {
    const auto pts = doc.array("decay.p_tilde");
    const auto as = doc.array("decay.A_scale");
    if (pts.size() != as.size()) throw ConfigError("decay: p_tilde and A_scale must have equal length");
    dc.presets.clear();
    for (std::size_t i = 0; i < pts.size(); ++i) dc.presets.push_back({pts[i], as[i]});
  }
  opt_num("decay.tau", dc.tau);
  opt_num("decay.T", dc.T);
  opt_num("decay.floor", dc.floor);
  opt_int("decay.starts", dc.steady.starts);
  opt_num("decay.steady_tol", dc.steady.grad_tol);
  opt_num("decay.agreement", dc.steady.agreement);
  dc.steady.seed = rc.seed;

  auto& pc = rc.propcheck;
  if (doc.has("propcheck.grids")) {
    pc.grids.clear();
    for (double v : doc.array("propcheck.grids")) pc.grids.push_back(static_cast<int>(v));
  }
  opt_num("propcheck.datum_scale", pc.datum_scale);
  opt_int("propcheck.count", pc.samples.count);
  opt_num("propcheck.amplitude", pc.samples.amplitude);
  opt_int("propcheck.degree", pc.samples.degree);
  opt_int("propcheck.triangle_count", pc.triangle_count);
  opt_int("propcheck.slope_directions", pc.slope_directions);
  opt_num("propcheck.slope_amplitude", pc.slope_amplitude);
  pc.samples.seed = rc.seed;

  if (doc.has("convergence.taus")) rc.convergence.taus = doc.array("convergence.taus");

  const auto unused = doc.unused();
  if (!unused.empty()) throw ConfigError("unknown key " + unused.front());
  rc.validate();
  return rc;
}

inline RunConfig load_run_config(const std::string& path) { return run_config_from(ConfigDoc::load(path)); }

}  // namespace kvmms
