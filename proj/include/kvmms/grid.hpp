#pragma once

/**
 * @file grid.hpp
 *
 * @brief Uniform tensor grid on the unit box (0,1)^d with the finite
 * difference stencils that map nodal values to per-cell gradients and
 * Hessians.
 *
 * Nodes are numbered lexicographically with the first axis fastest; cells
 * likewise. Every cell owns one gradient stencil per axis and one Hessian
 * stencil per axis pair, so assembly and its transpose share a single table.
 */

#include <algorithm>
#include <array>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

#include "kvmms/tensor.hpp"

namespace kvmms {

struct Tap {
  int node;
  double weight;
};

struct CellStencil {
  std::array<std::vector<Tap>, kMaxDim> grad;              ///< d/dx_b
  std::array<std::vector<Tap>, kMaxDim * kMaxDim> hess;   ///< d^2/dx_b dx_c at [b*d + c]
};

class Grid {
 public:
  Grid() = default;

  Grid(int d, int n) : d_(d), n_(n)
  {
    check_dim(d);
    if (n < 5) throw std::invalid_argument("Grid: at least 5 nodes per axis are required");
    h_ = 1.0 / (n - 1);
    stencils_ = std::make_shared<const std::vector<CellStencil>>(build());
  }

  int dim() const { return d_; }
  int nodes_per_axis() const { return n_; }
  double spacing() const { return h_; }

  int num_nodes() const { return d_ == 1 ? n_ : n_ * n_; }
  int num_cells() const { return d_ == 1 ? n_ - 1 : (n_ - 1) * (n_ - 1); }
  double cell_volume() const { return d_ == 1 ? h_ : h_ * h_; }
  /// Length of a flat nodal vector (d components per node).
  std::size_t num_dofs() const { return static_cast<std::size_t>(num_nodes() * d_); }

  std::array<int, kMaxDim> node_index(int node) const
  {
    if (d_ == 1) return {node, 0};
    return {node % n_, node / n_};
  }

  int node_at(int i, int j = 0) const { return d_ == 1 ? i : i + n_ * j; }

  std::array<double, kMaxDim> coords(int node) const
  {
    const auto ij = node_index(node);
    if (d_ == 1) return {ij[0] * h_, 0.0};
    return {ij[0] * h_, ij[1] * h_};
  }

  /// Centre of a cell.
  std::array<double, kMaxDim> cell_center(int cell) const
  {
    if (d_ == 1) return {(cell + 0.5) * h_, 0.0};
    const int m = n_ - 1;
    return {(cell % m + 0.5) * h_, (cell / m + 0.5) * h_};
  }

  /// Outermost node layer, where the Dirichlet datum is imposed.
  bool is_boundary(int node) const
  {
    const auto ij = node_index(node);
    auto edge = [&](int i) { return i == 0 || i == n_ - 1; };
    return d_ == 1 ? edge(ij[0]) : (edge(ij[0]) || edge(ij[1]));
  }

  /// Distance (in layers) from the boundary: 0 on the boundary, 1 on the first interior layer.
  int layer(int node) const
  {
    const auto ij = node_index(node);
    int l = std::min(ij[0], n_ - 1 - ij[0]);
    if (d_ == 2) l = std::min({l, ij[1], n_ - 1 - ij[1]});
    return l;
  }

  /// Trapezoidal quadrature weight of a node.
  double node_weight(int node) const
  {
    const auto ij = node_index(node);
    auto w1 = [&](int i) { return (i == 0 || i == n_ - 1) ? 0.5 * h_ : h_; };
    return d_ == 1 ? w1(ij[0]) : w1(ij[0]) * w1(ij[1]);
  }

  const CellStencil& stencil(int cell) const { return (*stencils_)[static_cast<std::size_t>(cell)]; }

  bool operator==(const Grid& o) const { return d_ == o.d_ && n_ == o.n_; }
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  // Second derivative along one axis of the line values a_k, k = 0..n-1,
  // evaluated at the centre of segment [i, i+1]. Central four-point rule in
  // the interior, one-sided three-point rule next to the boundary; both are
  // exact for quadratics.
  std::vector<std::pair<int, double>> second_difference(int i) const
  {
    const double h2 = h_ * h_;
    if (i == 0) return {{0, 1.0 / h2}, {1, -2.0 / h2}, {2, 1.0 / h2}};
    if (i == n_ - 2) return {{n_ - 3, 1.0 / h2}, {n_ - 2, -2.0 / h2}, {n_ - 1, 1.0 / h2}};
    const double c = 0.5 / h2;
    return {{i - 1, c}, {i, -c}, {i + 1, -c}, {i + 2, c}};
  }

  std::vector<CellStencil> build() const
  {
    std::vector<CellStencil> table(static_cast<std::size_t>(num_cells()));
    if (d_ == 1) {
      for (int i = 0; i < n_ - 1; ++i) {
        auto& s = table[static_cast<std::size_t>(i)];
        s.grad[0] = {{i + 1, 1.0 / h_}, {i, -1.0 / h_}};
        for (auto [k, w] : second_difference(i)) s.hess[0].push_back({k, w});
      }
      return table;
    }
    const int m = n_ - 1;
    const double g = 0.5 / h_;
    const double h2 = 1.0 / (h_ * h_);
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        auto& s = table[static_cast<std::size_t>(i + m * j)];
        const int n00 = node_at(i, j);
        const int n10 = node_at(i + 1, j);
        const int n01 = node_at(i, j + 1);
        const int n11 = node_at(i + 1, j + 1);
        s.grad[0] = {{n10, g}, {n11, g}, {n00, -g}, {n01, -g}};
        s.grad[1] = {{n01, g}, {n11, g}, {n00, -g}, {n10, -g}};
        // Along-axis second differences act on averages across the cell.
        for (auto [k, w] : second_difference(i)) {
          s.hess[0].push_back({node_at(k, j), 0.5 * w});
          s.hess[0].push_back({node_at(k, j + 1), 0.5 * w});
        }
        for (auto [k, w] : second_difference(j)) {
          s.hess[3].push_back({node_at(i, k), 0.5 * w});
          s.hess[3].push_back({node_at(i + 1, k), 0.5 * w});
        }
        s.hess[1] = {{n11, h2}, {n10, -h2}, {n01, -h2}, {n00, h2}};
        s.hess[2] = s.hess[1];
      }
    }
    return table;
  }

  int d_ = 2;
  int n_ = 0;
  double h_ = 0.0;
  std::shared_ptr<const std::vector<CellStencil>> stencils_;
};

}  // namespace kvmms
