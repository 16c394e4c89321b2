#pragma once

/**
 * @file propcheck.hpp
 *
 * @brief Seeded sampling studies of the static inequalities: rigidity and
 * Korn quotients, metric axioms and norm equivalence, a-priori bounds and
 * the sampled form of the slope representation.
 *
 * Sample i is drawn from its own engine seeded with sample_seed(seed, i), so
 * every sample can be replayed in isolation.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "kvmms/decay.hpp"
#include "kvmms/field.hpp"
#include "kvmms/sampling.hpp"
#include "kvmms/slope.hpp"
#include "kvmms/tensor.hpp"

namespace kvmms {

struct SampleSpec {
  std::uint64_t seed = 1;
  int count = 500;
  double amplitude = 0.05;
  int degree = 2;
  double M = std::numeric_limits<double>::infinity();
  int max_attempts = 64;  ///< draws per sample before giving up

  void validate() const
  {
    if (count < 1) throw ValidationError("SampleSpec: count must be positive");
    if (!(amplitude > 0.0)) throw ValidationError("SampleSpec: amplitude must be positive");
    if (degree < 0 || degree > 2) throw ValidationError("SampleSpec: degree must lie in [0, 2]");
    if (!(M > 0.0)) throw ValidationError("SampleSpec: M must be positive");
    if (max_attempts < 1) throw ValidationError("SampleSpec: max_attempts must be positive");
  }
};

/// Draws admissible fields base + b(x) * random polynomial, rejecting det F <= 0 or phi > M.
class Sampler {
 public:
  Sampler(const AdmissibleSet& adm, const LoadField& load, SampleSpec spec, DeformationField base)
      : adm_(adm), load_(load), spec_(spec), base_(std::move(base))
  {
    spec_.validate();
    require_same_grid(adm_.grid(), base_.grid());
  }

  Sampler(const AdmissibleSet& adm, const LoadField& load, SampleSpec spec) : Sampler(adm, load, spec, adm.yhat) {}

  /// Admissible perturbation of the base field for stream `stream`, sample `index`.
  DeformationField sample(int index, int stream = 0)
  {
    std::mt19937_64 rng(sample_seed(spec_.seed, static_cast<std::uint64_t>(index) * 16 + static_cast<std::uint64_t>(stream)));
    for (int attempt = 0; attempt < spec_.max_attempts; ++attempt) {
      auto y = perturbed(rng);
      const double e = energy(adm_, load_, y);
      if (std::isfinite(e) && e <= spec_.M) return y;
      ++rejections_;
    }
    throw SolverError("Sampler: no admissible sample found; reduce the amplitude");
  }

  /// Velocity-like field zero on the boundary layer, same distribution as the perturbations.
  std::vector<double> direction(int index, int stream = 0) const
  {
    std::mt19937_64 rng(sample_seed(spec_.seed, static_cast<std::uint64_t>(index) * 16 + static_cast<std::uint64_t>(stream)));
    return random_bubble_field(base_.grid(), rng, spec_.amplitude, spec_.degree);
  }

  int rejections() const { return rejections_; }
  const SampleSpec& spec() const { return spec_; }

 private:
  DeformationField perturbed(std::mt19937_64& rng) const
  {
    auto u = base_.displacement();
    const auto v = random_bubble_field(base_.grid(), rng, spec_.amplitude, spec_.degree);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += v[i];
    return DeformationField::from_displacement(base_.grid(), std::move(u));
  }

  AdmissibleSet adm_;
  LoadField load_;
  SampleSpec spec_;
  DeformationField base_;
  int rejections_ = 0;
};

// ---------------------------------------------------------------------------
// Ratios

inline std::vector<Mat> strain_difference_cells(const DeformationField& y0, const DeformationField& y1)
{
  const auto f0 = gradient_cells(y0);
  const auto f1 = gradient_cells(y1);
  const auto& g = y0.grid();
  std::vector<double> du(y0.displacement().size());
  for (std::size_t i = 0; i < du.size(); ++i) du[i] = y1.displacement()[i] - y0.displacement()[i];
  std::vector<Mat> out;
  for (int c = 0; c < g.num_cells(); ++c) {
    const Mat df = cell_gradient(g, du, c);
    const auto ci = static_cast<std::size_t>(c);
    out.push_back(transpose(df) * f1[ci] + transpose(f0[ci]) * df);
  }
  return out;
}

/// |grad y1 - grad y0|_{L^pt} / |C1 - C0|_{L^pt}; +inf when only the denominator vanishes.
inline double rigidity_ratio(const DeformationField& y0, const DeformationField& y1, double pt)
{
  require_same_grid(y0.grid(), y1.grid());
  const auto& g = y0.grid();
  std::vector<double> du(y0.displacement().size());
  for (std::size_t i = 0; i < du.size(); ++i) du[i] = y1.displacement()[i] - y0.displacement()[i];
  const double num = cell_lp_norm(displacement_gradient_cells(g, du), pt, g.cell_volume());
  const double den = cell_lp_norm(strain_difference_cells(y0, y1), pt, g.cell_volume());
  if (num == 0.0) throw std::invalid_argument("rigidity_ratio: fields have identical gradients");
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

/// |grad u|_{L^pt} / |(grad u)^T grad y + (grad y)^T grad u|_{L^pt}; u must vanish on the boundary layer.
inline double korn_ratio(const DeformationField& y, std::span<const double> u, double pt)
{
  const auto& g = y.grid();
  if (u.size() != g.num_dofs()) throw std::invalid_argument("korn_ratio: field has wrong length");
  for (int k = 0; k < g.num_nodes(); ++k)
    if (g.is_boundary(k))
      for (int a = 0; a < g.dim(); ++a)
        if (u[static_cast<std::size_t>(k * g.dim() + a)] != 0.0)
          throw std::invalid_argument("korn_ratio: u must vanish on the boundary layer");
  const auto fy = gradient_cells(y);
  std::vector<Mat> gu, sy;
  for (int c = 0; c < g.num_cells(); ++c) {
    const Mat h = cell_gradient(g, u, c);
    gu.push_back(h);
    sy.push_back(transpose(h) * fy[static_cast<std::size_t>(c)] + transpose(fy[static_cast<std::size_t>(c)]) * h);
  }
  const double num = cell_lp_norm(gu, pt, g.cell_volume());
  const double den = cell_lp_norm(sy, pt, g.cell_volume());
  if (num == 0.0) throw std::invalid_argument("korn_ratio: u has zero gradient");
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

/**
 * @brief Field vanishing on the boundary layer whose cell gradient is
 * symmetric on every cell: u = D psi for a cell-centred potential psi, with
 * D the node-centred analogue of the cell gradient stencil. The two
 * difference-average operators commute, so du1/dx2 = du2/dx1 cellwise.
 */
inline std::vector<double> symmetric_gradient_field(const Grid& g)
{
  const int d = g.dim();
  const int n = g.nodes_per_axis();
  const int m = n - 1;
  const double h = 1.0 / m;
  std::vector<double> u(g.num_dofs(), 0.0);
  if (d == 1) {
    for (int k = 1; k < n - 1; ++k) {
      const double x = k * h;
      u[static_cast<std::size_t>(k)] = x * (1.0 - x);
    }
    return u;
  }
  auto psi = [&](int ci, int cj) {
    if (ci < 1 || cj < 1 || ci > m - 2 || cj > m - 2) return 0.0;
    const double x = (ci + 0.5) * h;
    const double y = (cj + 0.5) * h;
    return x * x * (1.0 - x) * y * (1.0 - y) * (1.0 + y);
  };
  for (int j = 1; j < n - 1; ++j)
    for (int i = 1; i < n - 1; ++i) {
      const int k = g.node_at(i, j);
      u[static_cast<std::size_t>(2 * k)] = (psi(i, j - 1) + psi(i, j) - psi(i - 1, j - 1) - psi(i - 1, j)) / (2.0 * h);
      u[static_cast<std::size_t>(2 * k + 1)] = (psi(i - 1, j) + psi(i, j) - psi(i - 1, j - 1) - psi(i, j - 1)) / (2.0 * h);
    }
  return u;
}

/// Running summary of a sampled quotient.
struct RatioStats {
  int count = 0;
  int infinite = 0;
  double min = std::numeric_limits<double>::infinity();
  double max = 0.0;
  int argmax = -1;
  int argmin = -1;
  /// Counts per decade: [<1e-2, 1e-2..1e-1, 1e-1..1, 1..10, 10..100, >=100].
  std::array<int, 6> histogram{};

  void add(double r, int index)
  {
    ++count;
    if (!std::isfinite(r)) {
      ++infinite;
      max = r;
      argmax = index;
      return;
    }
    if (r > max) {
      max = r;
      argmax = index;
    }
    if (r < min) {
      min = r;
      argmin = index;
    }
    const int b = r <= 0.0 ? 0 : static_cast<int>(std::floor(std::log10(r))) + 3;
    ++histogram[static_cast<std::size_t>(std::clamp(b, 0, 5))];
  }
};

inline RatioStats rigidity_study(Sampler& sampler, double pt)
{
  RatioStats st;
  for (int i = 0; i < sampler.spec().count; ++i)
    st.add(rigidity_ratio(sampler.sample(i, 0), sampler.sample(i, 1), pt), i);
  return st;
}

inline RatioStats korn_study(Sampler& sampler, double pt)
{
  RatioStats st;
  for (int i = 0; i < sampler.spec().count; ++i) st.add(korn_ratio(sampler.sample(i, 0), sampler.direction(i, 2), pt), i);
  return st;
}

/// Largest D(y1,y3) - D(y1,y2) - D(y2,y3) over sampled triples (<= 0 when the triangle inequality holds).
struct TriangleStats {
  int count = 0;
  double max_excess = -std::numeric_limits<double>::infinity();
  int argmax = -1;
  double max_self_distance = 0.0;
};

inline TriangleStats triangle_study(Sampler& sampler, const MaterialParams& mp)
{
  TriangleStats st;
  for (int i = 0; i < sampler.spec().count; ++i) {
    const auto a = sampler.sample(i, 0);
    const auto b = sampler.sample(i, 1);
    const auto c = sampler.sample(i, 2);
    const double ex = metric(mp, a, c) - metric(mp, a, b) - metric(mp, b, c);
    ++st.count;
    if (ex > st.max_excess) {
      st.max_excess = ex;
      st.argmax = i;
    }
    st.max_self_distance = std::max(st.max_self_distance, metric(mp, a, a));
  }
  return st;
}

/// Sampled range of D(y, y~) / |grad y - grad y~|_{L^pt}.
inline RatioStats norm_equivalence_study(Sampler& sampler, const MaterialParams& mp)
{
  RatioStats st;
  for (int i = 0; i < sampler.spec().count; ++i) {
    const auto a = sampler.sample(i, 0);
    const auto b = sampler.sample(i, 1);
    std::vector<double> du(a.displacement().size());
    for (std::size_t k = 0; k < du.size(); ++k) du[k] = b.displacement()[k] - a.displacement()[k];
    const auto& g = a.grid();
    const double den = cell_lp_norm(displacement_gradient_cells(g, du), mp.p_tilde, g.cell_volume());
    st.add(metric(mp, a, b) / den, i);
  }
  return st;
}

// ---------------------------------------------------------------------------
// A-priori bounds

struct AprioriRecord {
  double phi = 0.0;
  double w2p_norm = 0.0;  ///< discrete W^{2,p} norm of the displacement
  double max_grad = 0.0;  ///< max over cells of |F|
  double min_det = 0.0;
  bool ok = false;
};

inline AprioriRecord apriori_check(const AdmissibleSet& adm, const LoadField& load, const DeformationField& y)
{
  const auto& g = y.grid();
  const auto& u = y.displacement();
  AprioriRecord r;
  r.phi = energy(adm, load, y);
  const double p = adm.params.p;
  double s = 0.0;
  r.min_det = std::numeric_limits<double>::infinity();
  for (int c = 0; c < g.num_cells(); ++c) {
    const Mat h = cell_gradient(g, u, c);
    const Mat f = Mat::identity(g.dim()) + h;
    r.max_grad = std::max(r.max_grad, frobenius(f));
    r.min_det = std::min(r.min_det, 1.0 + det_identity_plus_minus_one(h));
    s += g.cell_volume() * (std::pow(frobenius(h), p) + std::pow(frobenius(cell_hessian(g, u, c)), p));
  }
  for (int k = 0; k < g.num_nodes(); ++k) {
    double n2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) n2 += y.u(k, a) * y.u(k, a);
    s += g.node_weight(k) * std::pow(std::sqrt(n2), p);
  }
  r.w2p_norm = std::pow(s, 1.0 / p);
  r.ok = r.min_det > 0.0 && std::isfinite(r.w2p_norm) && std::isfinite(r.max_grad) && std::isfinite(r.phi);
  return r;
}

// ---------------------------------------------------------------------------
// Slope representation

enum class PenaltyForm { large_strain, small_strain };

struct RepresentationConstants {
  double lambda_hat = 0.0;
  double C_hat = 0.0;
  PenaltyForm form = PenaltyForm::small_strain;
};

struct SlopeRepresentationRecord {
  double slope = 0.0;
  double max_ratio = 0.0;
  int argmax = -1;
  int count = 0;
  double tolerance = 0.0;
  bool ok = true;
  std::vector<double> ratios;
};

/**
 * @brief Ratio (phi(y) - phi(w) + lambda/2 penalty)^+ / (D(y,w) (1 + C e^(pt-1) + C e)^(1/pt)),
 * e = |grad w - grad y|_inf, penalty = D^pt (large strain) or |grad y - grad w|_{L^2}^2 (small strain).
 */
inline double slope_representation_ratio(const AdmissibleSet& adm, const LoadField& load, const DeformationField& y,
                                         const DeformationField& w, const RepresentationConstants& k)
{
  const auto& mp = adm.params;
  const double pt = mp.p_tilde;
  const auto& g = y.grid();
  std::vector<double> du(y.displacement().size());
  for (std::size_t i = 0; i < du.size(); ++i) du[i] = w.displacement()[i] - y.displacement()[i];
  const auto cells = displacement_gradient_cells(g, du);
  const double e = cell_linf_norm(cells);
  const double dist = metric(mp, y, w);
  if (dist == 0.0) return 0.0;
  const double penalty =
      k.form == PenaltyForm::large_strain ? std::pow(dist, pt) : std::pow(cell_lp_norm(cells, 2.0, g.cell_volume()), 2.0);
  const double drop = shifted_energy(mp, load, y.displacement()) - shifted_energy(mp, load, w.displacement());
  const double num = std::max(0.0, drop + 0.5 * k.lambda_hat * penalty);
  return num / (dist * std::pow(1.0 + k.C_hat * std::pow(e, pt - 1.0) + k.C_hat * e, 1.0 / pt));
}

inline SlopeRepresentationRecord slope_representation_check(const AdmissibleSet& adm, const LoadField& load,
                                                            const DeformationField& y, const SampleSpec& spec,
                                                            const RepresentationConstants& k, double tolerance = 1e-6,
                                                            const SlopeOptions& sopt = {})
{
  spec.validate();
  SlopeRepresentationRecord rec;
  rec.tolerance = tolerance;
  rec.slope = local_slope(adm, load, y, sopt).slope;
  Sampler sampler(adm, load, spec, y);
  for (int i = 0; i < spec.count; ++i) {
    const double r = slope_representation_ratio(adm, load, y, sampler.sample(i), k);
    rec.ratios.push_back(r);
    if (r > rec.max_ratio) {
      rec.max_ratio = r;
      rec.argmax = i;
    }
  }
  rec.count = spec.count;
  rec.ok = rec.max_ratio <= rec.slope + tolerance;
  return rec;
}

}  // namespace kvmms
