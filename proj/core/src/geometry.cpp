#include "cavity_bayes/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "cavity_bayes/digest.hpp"

namespace cavity_bayes::geometry {

namespace {

std::string describe_tangential(std::size_t a, std::size_t b, double gap) {
  std::ostringstream os;
  os << "cavities " << a << " and " << b << " are tangential or overlapping (closure gap " << gap << ")";
  return os.str();
}

std::string describe_escape(std::size_t i, double clearance) {
  std::ostringstream os;
  os << "cavity " << i << " escapes the outer domain (clearance " << clearance << ")";
  return os.str();
}

nlohmann::json point_json(const Point& p) { return nlohmann::json::array({p[0], p[1]}); }

Point point_from(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw GeometryError(std::string("domain JSON: '") + what + "' must be a [x, y] array");
  }
  return make_point(j[0].get<double>(), j[1].get<double>());
}

double number_from(const nlohmann::json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_number()) {
    throw GeometryError(std::string("domain JSON: missing numeric field '") + key + "'");
  }
  return obj.at(key).get<double>();
}

}  // namespace

TangentialCavities::TangentialCavities(std::size_t a, std::size_t b, double g)
    : GeometryError(describe_tangential(a, b, g)), first(a), second(b), gap(g) {}

CavityEscapesOmega::CavityEscapesOmega(std::size_t i, double c)
    : GeometryError(describe_escape(i, c)), index(i), clearance(c) {}

Point OuterDomain::project(const Point& x) const {
  const Point offset = x - center;
  const double r = offset.norm();
  if (r <= radius) return x;
  return center + offset * (radius / r);
}

double OuterDomain::boundary_length() const { return 2.0 * std::numbers::pi * radius; }

CavitySet CavitySet::with_default_margins(std::vector<DiskCavity> cavities, const OuterDomain& outer) {
  return CavitySet{std::move(cavities), 1e-2 * outer.radius, 1e-2 * outer.radius};
}

CavitySet validate_cavity_set(CavitySet cs, const OuterDomain& outer) {
  if (!(outer.radius > 0.0) || !outer.center.is_finite()) {
    throw GeometryError("outer domain must have a finite center and positive radius");
  }
  if (!(cs.separation_margin > 0.0) || !(cs.containment_margin > 0.0)) {
    throw GeometryError("cavity margins must be positive");
  }
  for (std::size_t i = 0; i < cs.cavities.size(); ++i) {
    const auto& c = cs.cavities[i];
    if (!(c.radius > 0.0) || !std::isfinite(c.radius) || !c.center.is_finite()) {
      throw GeometryError("cavity " + std::to_string(i) + " must have a finite center and positive radius");
    }
    const double clearance = outer.radius - distance(c.center, outer.center) - c.radius;
    if (clearance < cs.containment_margin) throw CavityEscapesOmega(i, clearance);
  }
  for (std::size_t i = 0; i < cs.cavities.size(); ++i) {
    for (std::size_t j = i + 1; j < cs.cavities.size(); ++j) {
      const auto& a = cs.cavities[i];
      const auto& b = cs.cavities[j];
      const double gap = distance(a.center, b.center) - a.radius - b.radius;
      if (gap < cs.separation_margin) throw TangentialCavities(i, j, gap);
    }
  }
  return cs;
}

ConductorDomain::ConductorDomain(OuterDomain outer, CavitySet cavities)
    : outer_(outer), cavities_(validate_cavity_set(std::move(cavities), outer)) {
  hash_ = sha256_hex(canonical_json(*this));
}

bool ConductorDomain::in_cavity_closure(const Point& x) const {
  for (const auto& c : cavities_.cavities) {
    if (c.closure_contains(x)) return true;
  }
  return false;
}

bool ConductorDomain::contains(const Point& x) const { return outer_.contains(x) && !in_cavity_closure(x); }

double ConductorDomain::distance_to_closure(const Point& x) const {
  const double r = distance(x, outer_.center);
  if (r > outer_.radius) return r - outer_.radius;
  // Cavities are disjoint, so at most one contains x.
  for (const auto& c : cavities_.cavities) {
    const double s = distance(x, c.center);
    if (s < c.radius) return c.radius - s;
  }
  return 0.0;
}

std::string canonical_json(const ConductorDomain& domain) {
  nlohmann::json j;
  j["outer"] = {{"type", "disk"}, {"center", point_json(domain.outer().center)}, {"radius", domain.outer().radius}};
  auto cavities = nlohmann::json::array();
  for (const auto& c : domain.cavities()) {
    cavities.push_back({{"center", point_json(c.center)}, {"radius", c.radius}});
  }
  j["cavities"] = std::move(cavities);
  return j.dump();
}

ConductorDomain domain_from_json(const std::string& text, double separation_margin, double containment_margin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw GeometryError(std::string("domain JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("outer") || !j.at("outer").is_object()) {
    throw GeometryError("domain JSON: missing 'outer' object");
  }
  const auto& o = j.at("outer");
  if (o.value("type", std::string("disk")) != "disk") {
    throw GeometryError("domain JSON: only outer type 'disk' is supported");
  }
  if (!o.contains("center")) throw GeometryError("domain JSON: missing 'outer.center'");
  OuterDomain outer{point_from(o.at("center"), "outer.center"), number_from(o, "radius")};

  std::vector<DiskCavity> cavities;
  if (j.contains("cavities")) {
    if (!j.at("cavities").is_array()) throw GeometryError("domain JSON: 'cavities' must be an array");
    for (const auto& c : j.at("cavities")) {
      if (!c.is_object() || !c.contains("center")) throw GeometryError("domain JSON: cavity needs 'center'");
      cavities.push_back(DiskCavity{point_from(c.at("center"), "cavity.center"), number_from(c, "radius")});
    }
  }
  return ConductorDomain(outer, CavitySet{std::move(cavities), separation_margin, containment_margin});
}

ConductorDomain domain_from_json(const std::string& text) {
  // Outer radius is needed for the default margins; parse once to peek.
  double radius = 1.0;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.contains("outer") && j["outer"].contains("radius") && j["outer"]["radius"].is_number()) {
      radius = j["outer"]["radius"].get<double>();
    }
  } catch (const nlohmann::json::parse_error&) {
    // Reported by the full parse below.
  }
  return domain_from_json(text, 1e-2 * radius, 1e-2 * radius);
}

}  // namespace cavity_bayes::geometry
