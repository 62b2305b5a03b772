#include "cavity_bayes/observation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cavity_bayes/parallel.hpp"

namespace cavity_bayes {

void ObservationGrid::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("grid horizon must be positive");
  if (time_cells < 1 || arc_cells < 1) throw std::invalid_argument("grid cell counts must be positive");
  if (refinement < 1) throw std::invalid_argument("grid refinement must be positive");
  const double span = arc_end - arc_begin;
  if (!(span > 0.0) || span > 2.0 * std::numbers::pi + 1e-12) {
    throw std::invalid_argument("grid arc must satisfy 0 < arc_end - arc_begin <= 2 pi");
  }
}

std::vector<double> ObservationGrid::quadrature_times() const {
  const int n = time_cells * refinement;
  std::vector<double> times(static_cast<std::size_t>(n));
  const double dt = horizon / static_cast<double>(n);
  for (int i = 0; i < n; ++i) times[static_cast<std::size_t>(i)] = (static_cast<double>(i) + 0.5) * dt;
  return times;
}

std::vector<Point> ObservationGrid::quadrature_points(const geometry::OuterDomain& outer) const {
  const int n = arc_cells * refinement;
  std::vector<Point> points(static_cast<std::size_t>(n));
  const double dtheta = (arc_end - arc_begin) / static_cast<double>(n);
  for (int j = 0; j < n; ++j) {
    const double theta = arc_begin + (static_cast<double>(j) + 0.5) * dtheta;
    points[static_cast<std::size_t>(j)] =
        outer.center + make_point(outer.radius * std::cos(theta), outer.radius * std::sin(theta));
  }
  return points;
}

double euclidean_norm(const std::vector<double>& v) {
  CompensatedSum s;
  for (double x : v) s.add(x * x);
  return std::sqrt(s.value());
}

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector length mismatch");
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s.add(d * d);
  }
  return std::sqrt(s.value());
}

}  // namespace cavity_bayes
