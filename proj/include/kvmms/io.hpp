#pragma once

/**
 * @file io.hpp
 *
 * @brief Field serialization (CSV and binary checkpoints), JSON encoding of
 * parameters and the 17-significant-digit number format used by every
 * report.
 *
 * Binary checkpoint layout, little-endian:
 *   char[8]  magic "KVMSFLD1"
 *   u32      d, n
 *   f64      p_tilde, t
 *   i64      step
 *   f64[]    displacement u = y - x, d values per node, nodes in grid order
 */

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "kvmms/densities.hpp"
#include "kvmms/field.hpp"
#include "kvmms/mms.hpp"

namespace kvmms {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string fmt17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_field_csv(std::ostream& os, const DeformationField& y)
{
  const Grid& g = y.grid();
  const int d = g.dim();
  os << "node";
  for (int a = 0; a < d; ++a) os << ",x" << a + 1;
  for (int a = 0; a < d; ++a) os << ",y" << a + 1;
  os << '\n';
  for (int k = 0; k < g.num_nodes(); ++k) {
    os << k;
    const Vec x = g.coords(k);
    for (int a = 0; a < d; ++a) os << ',' << fmt17(x[static_cast<std::size_t>(a)]);
    for (int a = 0; a < d; ++a) os << ',' << fmt17(y.y(k, a));
    os << '\n';
  }
}

/// Per-step trajectory table: n, t, phi, D increment, inner iterations, flag.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
  os << "n,t,phi,D_increment,inner_iterations,flag\n";
  for (const auto& r : traj.records)
    os << r.n << ',' << fmt17(r.t) << ',' << fmt17(r.phi) << ',' << fmt17(r.increment) << ','
       << r.inner_iterations << ',' << (r.flagged() ? to_string(r.status) : "") << '\n';
}

// ---------------------------------------------------------------------------
// Binary checkpoints

struct Checkpoint {
  DeformationField y;
  double p_tilde = 2.0;
  double t = 0.0;
  std::int64_t step = 0;
};

namespace detail {

inline constexpr std::array<char, 8> kFieldMagic{'K', 'V', 'M', 'S', 'F', 'L', 'D', '1'};

template <class T>
void put_le(std::ostream& os, T v)
{
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  os.write(reinterpret_cast<const char*>(b.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& is)
{
  std::array<unsigned char, sizeof(T)> b;
  is.read(reinterpret_cast<char*>(b.data()), sizeof(T));
  if (!is) throw IoError("checkpoint: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Checkpoint& c)
{
  const Grid& g = c.y.grid();
  os.write(detail::kFieldMagic.data(), detail::kFieldMagic.size());
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.nodes_per_axis()));
  detail::put_le<double>(os, c.p_tilde);
  detail::put_le<double>(os, c.t);
  detail::put_le<std::int64_t>(os, c.step);
  for (double v : c.y.displacement()) detail::put_le<double>(os, v);
}

inline Checkpoint read_checkpoint(std::istream& is)
{
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != detail::kFieldMagic) throw IoError("checkpoint: bad magic");
  const auto d = detail::get_le<std::uint32_t>(is);
  const auto n = detail::get_le<std::uint32_t>(is);
  if (d < 1 || d > kMaxDim || n < 5 || n > 100000) throw IoError("checkpoint: bad grid header");
  Checkpoint c;
  c.p_tilde = detail::get_le<double>(is);
  c.t = detail::get_le<double>(is);
  c.step = detail::get_le<std::int64_t>(is);
  const Grid g(static_cast<int>(d), static_cast<int>(n));
  std::vector<double> u(g.num_dofs());
  for (auto& v : u) v = detail::get_le<double>(is);
  c.y = DeformationField::from_displacement(g, std::move(u));
  return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(os, c);
  if (!os) throw IoError("write failed: " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_checkpoint(is);
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const Mat& m)
{
  auto rows = nlohmann::ordered_json::array();
  for (int i = 0; i < m.d; ++i) {
    auto r = nlohmann::ordered_json::array();
    for (int j = 0; j < m.d; ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

inline nlohmann::ordered_json to_json(const MaterialParams& mp)
{
  nlohmann::ordered_json j;
  j["d"] = mp.d;
  j["p"] = mp.p;
  j["p_tilde"] = mp.p_tilde;
  j["q"] = mp.q;
  j["alpha_W"] = mp.alpha_W;
  j["beta_W"] = mp.beta_W;
  j["kappa_P"] = mp.kappa_P;
  j["A"] = to_json(mp.A);
  j["c0"] = mp.c0;
  j["C0"] = mp.C0;
  j["delta"] = mp.delta;
  return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

/// Replayable record of an inequality violation: the offending field(s) plus the parameters.
inline void dump_counterexample(const std::filesystem::path& dir, const std::string& name, const MaterialParams& mp,
                                const std::vector<DeformationField>& fields, const nlohmann::ordered_json& extra = {})
{
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["property"] = name;
  j["params"] = to_json(mp);
  if (!extra.is_null()) j["details"] = extra;
  auto files = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string fn = name + "_" + std::to_string(i) + ".bin";
    save_checkpoint(dir / fn, Checkpoint{fields[i], mp.p_tilde, 0.0, 0});
    files.push_back(fn);
  }
  j["fields"] = files;
  write_text_file(dir / (name + ".json"), j.dump(2) + "\n");
}

}  // namespace kvmms
