#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace cavity_bayes {

/// Point (or displacement) in R^Dim.
template <std::size_t Dim>
struct BasicPoint {
  static_assert(Dim >= 1);
  std::array<double, Dim> coords{};

  constexpr double& operator[](std::size_t i) { return coords[i]; }
  constexpr double operator[](std::size_t i) const { return coords[i]; }

  constexpr BasicPoint& operator+=(const BasicPoint& o) {
    for (std::size_t i = 0; i < Dim; ++i) coords[i] += o.coords[i];
    return *this;
  }
  constexpr BasicPoint& operator-=(const BasicPoint& o) {
    for (std::size_t i = 0; i < Dim; ++i) coords[i] -= o.coords[i];
    return *this;
  }
  constexpr BasicPoint& operator*=(double s) {
    for (auto& c : coords) c *= s;
    return *this;
  }

  friend constexpr BasicPoint operator+(BasicPoint a, const BasicPoint& b) { return a += b; }
  friend constexpr BasicPoint operator-(BasicPoint a, const BasicPoint& b) { return a -= b; }
  friend constexpr BasicPoint operator*(BasicPoint a, double s) { return a *= s; }
  friend constexpr BasicPoint operator*(double s, BasicPoint a) { return a *= s; }
  friend constexpr bool operator==(const BasicPoint&, const BasicPoint&) = default;

  [[nodiscard]] constexpr double squared_norm() const {
    double s = 0.0;
    for (double c : coords) s += c * c;
    return s;
  }
  [[nodiscard]] double norm() const { return std::sqrt(squared_norm()); }

  [[nodiscard]] bool is_finite() const {
    for (double c : coords) {
      if (!std::isfinite(c)) return false;
    }
    return true;
  }
};

template <std::size_t Dim>
[[nodiscard]] double distance(const BasicPoint<Dim>& a, const BasicPoint<Dim>& b) {
  return (a - b).norm();
}

template <std::size_t Dim>
[[nodiscard]] constexpr double squared_distance(const BasicPoint<Dim>& a, const BasicPoint<Dim>& b) {
  return (a - b).squared_norm();
}

/// All shipped algorithms work in the plane.
using Point = BasicPoint<2>;

constexpr Point make_point(double x, double y) { return Point{{x, y}}; }

}  // namespace cavity_bayes
