#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cavity_bayes/geometry.hpp"

namespace cavity_bayes {

/// Space-time cells of the observed boundary portion: [0, T] split into
/// `time_cells` equal intervals and the arc [arc_begin, arc_end] of the outer
/// circle into `arc_cells` equal sub-arcs. Each cell is integrated by a
/// midpoint rule on a refinement x refinement sub-lattice.
struct ObservationGrid {
  double horizon = 1.0;
  int time_cells = 4;
  double arc_begin = 0.0;
  double arc_end = 1.5707963267948966;
  int arc_cells = 4;
  int refinement = 1;

  /// m = time_cells * arc_cells.
  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(time_cells) * static_cast<std::size_t>(arc_cells);
  }
  [[nodiscard]] std::size_t index(int time_cell, int arc_cell) const {
    return static_cast<std::size_t>(time_cell) * static_cast<std::size_t>(arc_cells) +
           static_cast<std::size_t>(arc_cell);
  }
  /// |A| = R (arc_end - arc_begin).
  [[nodiscard]] double arc_length(const geometry::OuterDomain& outer) const {
    return outer.radius * (arc_end - arc_begin);
  }
  /// Throws std::invalid_argument when the grid is malformed.
  void validate() const;

  /// Sorted quadrature times, time_cells * refinement of them.
  [[nodiscard]] std::vector<double> quadrature_times() const;
  /// Quadrature points on the arc, arc_cells * refinement of them.
  [[nodiscard]] std::vector<Point> quadrature_points(const geometry::OuterDomain& outer) const;

  friend bool operator==(const ObservationGrid&, const ObservationGrid&) = default;
};

/// Data vector y in R^m, components ordered time-major.
struct ObservationVector {
  std::vector<double> values;
  /// Per-component Monte Carlo standard errors; empty when not applicable.
  std::vector<double> std_errors;
  std::optional<ObservationGrid> grid;

  [[nodiscard]] std::size_t size() const { return values.size(); }
};

[[nodiscard]] double euclidean_norm(const std::vector<double>& v);
[[nodiscard]] double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace cavity_bayes
