#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cavity_bayes/point.hpp"

namespace cavity_bayes::geometry {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two cavity closures closer than the separation margin.
class TangentialCavities : public GeometryError {
 public:
  TangentialCavities(std::size_t first, std::size_t second, double gap);
  std::size_t first;
  std::size_t second;
  double gap;
};

/// A cavity closure within the containment margin of the outer boundary.
class CavityEscapesOmega : public GeometryError {
 public:
  CavityEscapesOmega(std::size_t index, double clearance);
  std::size_t index;
  double clearance;
};

class EmptyDomain : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

/// Fixed outer conductor boundary. Only disks are shipped, which keeps the
/// boundary smooth and the reflection a radial projection.
struct OuterDomain {
  Point center{};
  double radius = 1.0;

  static OuterDomain unit_disk() { return OuterDomain{}; }

  /// Open disk membership.
  [[nodiscard]] bool contains(const Point& x) const {
    return squared_distance(x, center) < radius * radius;
  }
  [[nodiscard]] bool closure_contains(const Point& x) const {
    return squared_distance(x, center) <= radius * radius;
  }
  /// Euclidean projection onto the closed disk.
  [[nodiscard]] Point project(const Point& x) const;
  [[nodiscard]] double boundary_length() const;

  friend bool operator==(const OuterDomain&, const OuterDomain&) = default;
};

struct DiskCavity {
  Point center{};
  double radius = 0.0;

  [[nodiscard]] bool closure_contains(const Point& x) const {
    return squared_distance(x, center) <= radius * radius;
  }

  friend bool operator==(const DiskCavity&, const DiskCavity&) = default;
};

struct CavitySet {
  std::vector<DiskCavity> cavities;
  double separation_margin = 1e-2;
  double containment_margin = 1e-2;

  /// Margins scaled to the outer radius (1% of R).
  static CavitySet with_default_margins(std::vector<DiskCavity> cavities, const OuterDomain& outer);
};

/// Returns `cavities` unchanged when every cavity has positive radius,
/// clears the outer boundary by the containment margin, and is separated
/// from every other cavity by the separation margin. Throws otherwise.
CavitySet validate_cavity_set(CavitySet cavities, const OuterDomain& outer);

/// D = Omega minus the closed cavities. Immutable once constructed.
class ConductorDomain {
 public:
  /// Validates `cavities` against `outer`.
  ConductorDomain(OuterDomain outer, CavitySet cavities);

  [[nodiscard]] const OuterDomain& outer() const { return outer_; }
  [[nodiscard]] const CavitySet& cavity_set() const { return cavities_; }
  [[nodiscard]] const std::vector<DiskCavity>& cavities() const { return cavities_.cavities; }
  /// Hex SHA-256 of the canonical domain JSON.
  [[nodiscard]] const std::string& hash() const { return hash_; }

  /// True iff x is in the open outer disk and outside every closed cavity.
  [[nodiscard]] bool contains(const Point& x) const;
  [[nodiscard]] bool in_cavity_closure(const Point& x) const;
  /// Distance from x to the closure of D.
  [[nodiscard]] double distance_to_closure(const Point& x) const;

  friend bool operator==(const ConductorDomain& a, const ConductorDomain& b) { return a.hash_ == b.hash_; }

 private:
  OuterDomain outer_;
  CavitySet cavities_;
  std::string hash_;
};

/// Free-function form of membership, the characteristic function of D.
[[nodiscard]] inline bool contains(const ConductorDomain& domain, const Point& x) { return domain.contains(x); }

/// {"outer": {"type":"disk","center":[x,y],"radius":R}, "cavities": [{"center":[x,y],"radius":r},...]}
/// Keys sorted, numbers in shortest round-trip form.
[[nodiscard]] std::string canonical_json(const ConductorDomain& domain);

/// Parses the domain JSON schema. Margins are not part of the schema; the
/// defaults for `outer` apply unless overridden.
[[nodiscard]] ConductorDomain domain_from_json(const std::string& text);
[[nodiscard]] ConductorDomain domain_from_json(const std::string& text, double separation_margin,
                                               double containment_margin);

}  // namespace cavity_bayes::geometry
