#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "ommap/rng.hpp"

namespace ommap {

/// Uniform time grid t0, t0+dt, ..., t0+n_steps*dt.
struct GridShape {
  double t0 = 0.0;
  double dt = 1e-2;
  std::size_t n_steps = 1;

  double horizon() const { return static_cast<double>(n_steps) * dt; }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  void validate() const;
};

/// A scalar function sampled on a uniform grid: the discrete stand-in for a
/// continuous path on [t0, t0+T]. Immutable once built.
class GridPath {
 public:
  GridPath(double t0, double dt, std::vector<double> values);
  GridPath(const GridShape& shape, std::vector<double> values)
      : GridPath(shape.t0, shape.dt, std::move(values)) {}

  static GridPath constant(const GridShape& shape, double value);

  double t0() const noexcept { return t0_; }
  double dt() const noexcept { return dt_; }
  std::size_t n_steps() const noexcept { return values_.size() - 1; }
  std::size_t size() const noexcept { return values_.size(); }
  double horizon() const noexcept { return static_cast<double>(n_steps()) * dt_; }
  double time(std::size_t i) const noexcept { return t0_ + static_cast<double>(i) * dt_; }
  GridShape shape() const noexcept { return {t0_, dt_, n_steps()}; }

  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  double front() const { return values_.front(); }
  double back() const { return values_.back(); }

  /// Same grid, new node values.
  GridPath with_values(std::vector<double> values) const;

  /// Grid with each interval split in two by linear interpolation.
  GridPath refined() const;

 private:
  double t0_;
  double dt_;
  std::vector<double> values_;
};

bool same_grid(const GridShape& a, const GridShape& b);

/// Nodewise a - b on a shared grid.
GridPath difference(const GridPath& a, const GridPath& b);

/// max_i |a_i - b_i| on a shared grid.
double sup_distance(const GridPath& a, const GridPath& b);

/// Forward-difference H^1 seminorm squared, sum (v_{i+1}-v_i)^2 / dt.
/// Exact for piecewise-linear paths.
double h1_seminorm_sq(const GridPath& path);

/// Cameron-Martin norm squared of the scaled Wiener measure: |v|_{H^1}^2 / sigma^2.
double cameron_martin_norm_sq(const GridPath& path, double sigma);

/// Mean of the Brownian bridge from u_minus at t0 to u_plus at t0+T.
GridPath bridge_mean(double u_minus, double u_plus, const GridShape& grid);

void write_csv(std::ostream& out, const GridPath& path);
GridPath read_grid_csv(std::istream& in);

/// Centred Gaussian on R^n with diagonal covariance, eigenvalues sorted
/// non-increasing so that a_1 = 1/lambda_1 is the smallest precision.
class FiniteGaussian {
 public:
  explicit FiniteGaussian(std::vector<double> eigenvalues);

  std::size_t dimension() const noexcept { return eigenvalues_.size(); }
  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
  double precision(std::size_t j) const { return 1.0 / eigenvalues_[j]; }
  double smallest_precision() const { return 1.0 / eigenvalues_.front(); }

  /// 1/2 sum_j z_j^2 / lambda_j
  double half_cameron_martin_sq(std::span<const double> z) const;

 private:
  std::vector<double> eigenvalues_;
};

std::vector<double> sample_finite_gaussian(const FiniteGaussian& measure, Rng& rng);

}  // namespace ommap
