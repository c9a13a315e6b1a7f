#include "ommap/gaussian.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ommap/errors.hpp"

namespace ommap {

void GridShape::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("grid step dt must be positive and finite");
  if (n_steps < 1) throw InvalidParameter("grid needs at least one step");
  if (!std::isfinite(t0)) throw InvalidParameter("grid start must be finite");
}

GridPath::GridPath(double t0, double dt, std::vector<double> values)
    : t0_(t0), dt_(dt), values_(std::move(values)) {
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InvalidInput("grid step dt must be positive and finite");
  if (!std::isfinite(t0_)) throw InvalidInput("grid start must be finite");
  if (values_.size() < 2) throw InvalidInput("a grid path needs at least two nodes");
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidInput("grid path contains a non-finite value");
  }
}

GridPath GridPath::constant(const GridShape& shape, double value) {
  shape.validate();
  return GridPath(shape, std::vector<double>(shape.n_steps + 1, value));
}

GridPath GridPath::with_values(std::vector<double> values) const {
  if (values.size() != values_.size()) throw InvalidInput("replacement values do not match the grid");
  return GridPath(t0_, dt_, std::move(values));
}

GridPath GridPath::refined() const {
  std::vector<double> fine;
  fine.reserve(2 * values_.size() - 1);
  for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
    fine.push_back(values_[i]);
    fine.push_back(0.5 * (values_[i] + values_[i + 1]));
  }
  fine.push_back(values_.back());
  return GridPath(t0_, 0.5 * dt_, std::move(fine));
}

bool same_grid(const GridShape& a, const GridShape& b) {
  return a.n_steps == b.n_steps && std::abs(a.dt - b.dt) <= 1e-14 * std::abs(a.dt) &&
         std::abs(a.t0 - b.t0) <= 1e-12 * std::max(1.0, std::abs(a.t0));
}

GridPath difference(const GridPath& a, const GridPath& b) {
  if (!same_grid(a.shape(), b.shape())) throw InvalidInput("paths live on different grids");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
  return a.with_values(std::move(d));
}

double sup_distance(const GridPath& a, const GridPath& b) {
  if (a.size() != b.size()) throw InvalidInput("paths live on different grids");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double h1_seminorm_sq(const GridPath& path) {
  const auto v = path.values();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const double d = v[i + 1] - v[i];
    acc += d * d;
  }
  return acc / path.dt();
}

double cameron_martin_norm_sq(const GridPath& path, double sigma) {
  if (!(sigma > 0.0)) throw InvalidParameter("sigma must be positive");
  return h1_seminorm_sq(path) / (sigma * sigma);
}

GridPath bridge_mean(double u_minus, double u_plus, const GridShape& grid) {
  grid.validate();
  const auto n = grid.n_steps;
  std::vector<double> m(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(n);
    m[i] = (1.0 - s) * u_minus + s * u_plus;
  }
  m.front() = u_minus;
  m.back() = u_plus;
  return GridPath(grid, std::move(m));
}

void write_csv(std::ostream& out, const GridPath& path) {
  const auto old_precision = out.precision();
  out << "t,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < path.size(); ++i) out << path.time(i) << ',' << path[i] << '\n';
  out.precision(old_precision);
}

GridPath read_grid_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,value", 0) != 0) throw InvalidInput("expected CSV header 't,value'");
  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double t = 0.0;
    double v = 0.0;
    char comma = 0;
    if (!(row >> t >> comma >> v) || comma != ',') throw InvalidInput("malformed CSV row: " + line);
    times.push_back(t);
    values.push_back(v);
  }
  if (times.size() < 2) throw InvalidInput("grid CSV needs at least two rows");
  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  return GridPath(times.front(), dt, std::move(values));
}

FiniteGaussian::FiniteGaussian(std::vector<double> eigenvalues) : eigenvalues_(std::move(eigenvalues)) {
  if (eigenvalues_.empty()) throw InvalidParameter("finite Gaussian needs dimension >= 1");
  for (std::size_t j = 0; j < eigenvalues_.size(); ++j) {
    if (!(eigenvalues_[j] > 0.0) || !std::isfinite(eigenvalues_[j]))
      throw InvalidParameter("covariance eigenvalues must be positive and finite");
    if (j > 0 && eigenvalues_[j] > eigenvalues_[j - 1])
      throw InvalidParameter("covariance eigenvalues must be non-increasing");
  }
}

double FiniteGaussian::half_cameron_martin_sq(std::span<const double> z) const {
  if (z.size() != eigenvalues_.size()) throw InvalidInput("point dimension does not match the measure");
  double acc = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) acc += z[j] * z[j] / eigenvalues_[j];
  return 0.5 * acc;
}

std::vector<double> sample_finite_gaussian(const FiniteGaussian& measure, Rng& rng) {
  std::vector<double> x(measure.dimension());
  const auto lambda = measure.eigenvalues();
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::sqrt(lambda[j]) * rng.normal();
  return x;
}

}  // namespace ommap
