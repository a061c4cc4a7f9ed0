#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "ldpx/periodic_function.hpp"

namespace ldpx {

/// Uniform periodic lattice on the unit torus, `n` points per axis.
class PeriodicGrid {
 public:
  /// Throws PreconditionError unless n >= 8, n even, and dim is 1 or 2.
  PeriodicGrid(int dim, std::size_t n);

  int dim() const { return dim_; }
  std::size_t n() const { return n_; }
  double spacing() const { return 1.0 / static_cast<double>(n_); }
  double cell_volume() const { return dim_ == 1 ? spacing() : spacing() * spacing(); }
  /// Total number of nodes, n^dim.
  std::size_t size() const { return dim_ == 1 ? n_ : n_ * n_; }

  /// Flattened index of node (i, j); x-fastest. Indices wrap periodically.
  std::size_t index(long long i, long long j = 0) const;
  Point point(std::size_t flat) const;
  /// Nearest node to a torus point.
  std::size_t nearest(const Point& x) const;

  bool operator==(const PeriodicGrid&) const = default;

 private:
  int dim_;
  std::size_t n_;
};

/// Stationary law of the base dynamics as probability weights per node (or state).
struct InvariantDensity {
  /// Nonnegative, summing to one.
  Eigen::VectorXd weights;
  /// Volume represented by one node: spacing^dim for torus grids, 1 for chains.
  double cell_volume = 1.0;
  /// Residual of the stationarity equation, max-norm.
  double residual = 0.0;

  Eigen::VectorXd density() const { return weights / cell_volume; }
};

}  // namespace ldpx
