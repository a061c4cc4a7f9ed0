#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ldpx {

/// Point on the unit torus. The second coordinate is ignored by one-dimensional models.
using Point = std::array<double, 2>;

/// One harmonic `cos_coef * cos(2 pi k.x) + sin_coef * sin(2 pi k.x)`.
struct FourierTerm {
  std::array<int, 2> k{0, 0};
  double cos_coef = 0.0;
  double sin_coef = 0.0;

  bool operator==(const FourierTerm&) const = default;
};

/// Values on a uniform periodic lattice `x_j = j / m` (per axis), interpolated with
/// periodic cubic convolution. Two-dimensional tables are stored x-fastest.
struct PeriodicTable {
  int dim = 1;
  std::size_t m = 0;
  std::vector<double> values;

  bool operator==(const PeriodicTable&) const = default;
};

/// Verdict of the seam check for one tabulated function.
struct SeamCheck {
  bool ok = true;
  /// Largest ratio (seam difference) / (interior difference scale) over difference orders 1..3.
  double worst_ratio = 0.0;
  int worst_order = 0;
};

/// Smooth function on the unit torus: a finite Fourier sum plus an optional table.
///
/// The closed-form part covers the built-in catalog (constants, single harmonics,
/// finite Fourier sums); the table part carries user-supplied grid data and
/// eigenfunction-derived drifts.
class PeriodicFunction {
 public:
  PeriodicFunction() = default;

  static PeriodicFunction constant(double c);
  static PeriodicFunction fourier(double c0, std::vector<FourierTerm> terms);
  static PeriodicFunction cosine(int k, double amplitude);
  static PeriodicFunction sine(int k, double amplitude);
  static PeriodicFunction table(PeriodicTable table);

  double operator()(const Point& x) const;
  double operator()(double x) const { return (*this)({x, 0.0}); }

  /// Exact gradient of the closed-form part plus the derivative of the interpolant.
  std::array<double, 2> gradient(const Point& x) const;

  /// Values at the nodes of an n (or n x n) periodic lattice, x-fastest.
  std::vector<double> sample(int dim, std::size_t n) const;

  bool is_constant() const { return terms_.empty() && !table_; }
  double mean_part() const { return c0_; }
  const std::vector<FourierTerm>& terms() const { return terms_; }
  const std::optional<PeriodicTable>& table_part() const { return table_; }

  /// Highest harmonic index present; a table of m points counts as m / 2.
  int max_harmonic() const;
  /// Smallest torus dimension able to represent the function (1 or 2).
  int min_dim() const;

  SeamCheck seam_check(double abs_tol = 1e-9) const;

  PeriodicFunction shifted(double c) const;
  PeriodicFunction scaled(double factor) const;
  /// Sum of two functions; tables of different resolution are resampled onto the finer one.
  PeriodicFunction plus(const PeriodicFunction& other) const;

  bool operator==(const PeriodicFunction&) const = default;

 private:
  double c0_ = 0.0;
  std::vector<FourierTerm> terms_;
  std::optional<PeriodicTable> table_;
};

/// Cubic-convolution interpolation of a periodic table and its gradient.
double interpolate(const PeriodicTable& table, const Point& x);
std::array<double, 2> interpolate_gradient(const PeriodicTable& table, const Point& x);

}  // namespace ldpx
