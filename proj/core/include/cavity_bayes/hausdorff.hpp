#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "cavity_bayes/geometry.hpp"

namespace cavity_bayes::geometry {

using CubeIndex = std::array<std::int64_t, 2>;

struct Box {
  Point lo{};
  Point hi{};
};

/// Open axis-aligned rectangle (lo, hi).
struct OpenBox {
  Point lo{};
  Point hi{};
};

/// Int of the union of closed grid cubes Q(a, eps) = prod [a_i eps, (a_i + 1) eps].
class GridDomain {
 public:
  GridDomain(double resolution, std::vector<CubeIndex> cubes);

  [[nodiscard]] double resolution() const { return resolution_; }
  /// Sorted, unique.
  [[nodiscard]] const std::vector<CubeIndex>& cubes() const { return cubes_; }
  [[nodiscard]] std::size_t size() const { return cubes_.size(); }
  [[nodiscard]] bool empty() const { return cubes_.empty(); }

  [[nodiscard]] bool has_cube(const CubeIndex& a) const;
  /// Any cube with a0 <= a[0] <= a1 and b0 <= a[1] <= b1.
  [[nodiscard]] bool any_cube_in(std::int64_t a0, std::int64_t a1, std::int64_t b0, std::int64_t b1) const;

  /// Membership in the open interior of the union.
  [[nodiscard]] bool contains(const Point& x) const;
  [[nodiscard]] double distance_to_closure(const Point& x) const;
  [[nodiscard]] Box bounds() const;

  /// Edge-adjacency connectivity of the cube set (a diagnostic; not enforced).
  [[nodiscard]] bool is_connected() const;

  friend bool operator==(const GridDomain& a, const GridDomain& b) {
    return a.resolution_ == b.resolution_ && a.cubes_ == b.cubes_;
  }

 private:
  struct Mask;
  double resolution_;
  std::vector<CubeIndex> cubes_;
  std::shared_ptr<const Mask> mask_;
};

using Shape = std::variant<ConductorDomain, GridDomain, OpenBox>;

[[nodiscard]] bool contains(const Shape& shape, const Point& x);
[[nodiscard]] double distance_to_closure(const Shape& shape, const Point& x);
[[nodiscard]] Box bounds(const Shape& shape);

/// 1e-3 of the half-extent of the joint bounding box (1e-3 R for conductors).
[[nodiscard]] double default_hausdorff_pitch(const Shape& a, const Shape& b);

/// Hausdorff distance of the two open sets, taken as the larger of the two
/// directed sup-distances over lattice samples (pitch `pitch`) of each set.
/// Distances to the other set are exact, so the result never exceeds the
/// true value and is within 2 * pitch of it for the shipped shape kinds.
[[nodiscard]] double hausdorff_distance(const Shape& a, const Shape& b, double pitch);
[[nodiscard]] double hausdorff_distance(const Shape& a, const Shape& b);

/// sup over lattice samples of `from` of the distance to `to`.
[[nodiscard]] double directed_hausdorff(const Shape& from, const Shape& to, double pitch);

/// S(D, eps): interior of the union of closed eps-cubes meeting D.
[[nodiscard]] GridDomain approximate_domain(const Shape& domain, double eps);

}  // namespace cavity_bayes::geometry
