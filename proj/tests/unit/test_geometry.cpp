#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "cavity_bayes/geometry.hpp"
#include "cavity_bayes/hausdorff.hpp"
#include "cavity_bayes/random.hpp"

namespace geo = cavity_bayes::geometry;
using cavity_bayes::make_point;
using cavity_bayes::Point;

namespace {

const geo::OuterDomain kUnit = geo::OuterDomain::unit_disk();

geo::ConductorDomain conductor(std::vector<geo::DiskCavity> cavities) {
  return geo::ConductorDomain(kUnit, geo::CavitySet::with_default_margins(std::move(cavities), kUnit));
}

// Squared 1-D distance transform (Felzenszwalb and Huttenlocher).
void edt_1d(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
      if (s > z[k] || k == 0) break;
      --k;
    }
    if (s <= z[k]) {
      v[k] = q;
      z[k + 1] = std::numeric_limits<double>::infinity();
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    d[q] = (q - v[k]) * (q - v[k]) + f[v[k]];
  }
}

// Raster d_H oracle: both sets sampled on the same lattice of pitch h over
// [-1, 1]^2, directed distances read off exact Euclidean distance transforms.
double raster_hausdorff(const std::function<bool(const Point&)>& in_a, const std::function<bool(const Point&)>& in_b,
                        double h) {
  const int n = static_cast<int>(std::lround(2.0 / h)) + 1;
  const double big = 1e12;
  std::vector<char> a(static_cast<std::size_t>(n) * n);
  std::vector<char> b(a.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Point p = make_point(-1.0 + i * h, -1.0 + j * h);
      a[static_cast<std::size_t>(i) * n + j] = in_a(p);
      b[static_cast<std::size_t>(i) * n + j] = in_b(p);
    }
  }
  auto transform = [&](const std::vector<char>& mask) {
    std::vector<double> g(mask.size());
    std::vector<double> f(n);
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) f[j] = mask[static_cast<std::size_t>(i) * n + j] ? 0.0 : big;
      edt_1d(f, d);
      for (int j = 0; j < n; ++j) g[static_cast<std::size_t>(i) * n + j] = d[j];
    }
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) f[i] = g[static_cast<std::size_t>(i) * n + j];
      edt_1d(f, d);
      for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i) * n + j] = d[i];
    }
    return g;
  };
  const auto da = transform(a);
  const auto db = transform(b);
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k]) worst = std::max(worst, db[k]);
    if (b[k]) worst = std::max(worst, da[k]);
  }
  return std::sqrt(worst) * h;
}

}  // namespace

TEST_CASE("membership") {
  const auto empty = conductor({});
  const auto ring = conductor({{make_point(0, 0), 0.3}});
  CHECK_FALSE(empty.contains(make_point(2, 0)));
  CHECK_FALSE(ring.contains(make_point(0, 0)));
  CHECK(ring.contains(make_point(0.6, 0)));
  CHECK_FALSE(ring.contains(make_point(0.3, 0)));
  CHECK_FALSE(ring.contains(make_point(1.0, 0)));

  for (int i = 0; i < 64; ++i) {
    const double th = 2.0 * M_PI * i / 64.0;
    for (double r : {1.0, 1.0 + 1e-12, 1.5, 3.0}) {
      const Point x = make_point(r * std::cos(th), r * std::sin(th));
      if (x.squared_norm() >= 1.0) CHECK_FALSE(ring.contains(x));
    }
  }
}

TEST_CASE("cavity validation") {
  CHECK_THROWS_AS((void)conductor({{make_point(-0.2, 0), 0.2}, {make_point(0.2, 0), 0.2}}), geo::TangentialCavities);
  CHECK_THROWS_AS((void)conductor({{make_point(0.9, 0), 0.2}}), geo::CavityEscapesOmega);
  const geo::CavitySet ok{{{make_point(0, 0), 0.3}}, 1e-2, 0.05};
  CHECK(geo::validate_cavity_set(ok, kUnit).cavities == ok.cavities);
  CHECK_THROWS((void)conductor({{make_point(0, 0), 0.0}}));
  CHECK_THROWS_AS((void)conductor({{make_point(0.0, 0), 0.995}}), geo::CavityEscapesOmega);
}

TEST_CASE("content hash and json round trip") {
  const auto d = conductor({{make_point(0.15, -0.25), 0.2}, {make_point(-0.4, 0.3), 0.1}});
  const auto again = geo::domain_from_json(geo::canonical_json(d));
  CHECK(again.hash() == d.hash());
  CHECK(again.cavities() == d.cavities());
  CHECK(d.hash().size() == 64);
  CHECK(conductor({{make_point(0.15, -0.25), 0.2}}).hash() != d.hash());
}

TEST_CASE("hausdorff distance against a raster oracle") {
  const double pitch = 1e-3;
  SUBCASE("concentric cavities") {
    const auto a = conductor({{make_point(0, 0), 0.3}});
    const auto b = conductor({{make_point(0, 0), 0.5}});
    const double oracle = raster_hausdorff([&](const Point& p) { return a.contains(p); },
                                           [&](const Point& p) { return b.contains(p); }, pitch);
    const double got = geo::hausdorff_distance(a, b);
    CHECK(std::abs(oracle - 0.2) <= 2.0 * pitch);
    CHECK(std::abs(got - 0.2) <= 2.0 * pitch);
    CHECK(std::abs(got - oracle) <= 2.0 * pitch);
  }
  SUBCASE("shifted cavities") {
    const auto a = conductor({{make_point(0, 0), 0.2}});
    const auto b = conductor({{make_point(0.1, 0), 0.2}});
    const double oracle = raster_hausdorff([&](const Point& p) { return a.contains(p); },
                                           [&](const Point& p) { return b.contains(p); }, pitch);
    const double got = geo::hausdorff_distance(a, b);
    CHECK(std::abs(oracle - 0.1) <= 2.0 * pitch);
    CHECK(std::abs(got - 0.1) <= 2.0 * pitch);
    CHECK(got <= 0.1 + 1e-12);
  }
}

TEST_CASE("hausdorff metric properties") {
  const auto d = conductor({{make_point(0.1, 0.2), 0.25}});
  CHECK(geo::hausdorff_distance(d, d) == 0.0);

  cavity_bayes::RandomStream s(99, 0);
  auto draw = [&] {
    const double r = 0.1 + 0.2 * s.next_uniform();
    const double reach = 0.95 - r;
    return conductor({{make_point(reach * (2 * s.next_uniform() - 1) / std::sqrt(2.0),
                                  reach * (2 * s.next_uniform() - 1) / std::sqrt(2.0)),
                       r}});
  };
  const double delta = 1e-3;
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = draw();
    const auto b = draw();
    const auto c = draw();
    const double ab = geo::hausdorff_distance(a, b);
    const double ba = geo::hausdorff_distance(b, a);
    const double bc = geo::hausdorff_distance(b, c);
    const double ac = geo::hausdorff_distance(a, c);
    CHECK(std::abs(ab - ba) <= 4.0 * delta);
    CHECK(ac <= ab + bc + 4.0 * delta);
  }
}

TEST_CASE("hausdorff rejects empty shapes") {
  const geo::GridDomain none(0.5, {});
  CHECK_THROWS((void)geo::hausdorff_distance(none, conductor({})));
}

TEST_CASE("grid-cube approximation") {
  SUBCASE("open unit square at eps 1/2") {
    const geo::GridDomain s = geo::approximate_domain(geo::OpenBox{make_point(0, 0), make_point(1, 1)}, 0.5);
    const std::vector<geo::CubeIndex> expected{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    CHECK(s.cubes() == expected);
    CHECK(geo::hausdorff_distance(geo::OpenBox{make_point(0, 0), make_point(1, 1)}, s) == 0.0);
  }
  SUBCASE("union of grid cubes is a fixed point") {
    const geo::GridDomain l(0.25, {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {-3, 2}});
    const geo::GridDomain s = geo::approximate_domain(l, 0.25);
    CHECK(s == l);
    CHECK(geo::hausdorff_distance(l, s) == 0.0);
  }
  SUBCASE("error below sqrt(2) eps and cube count bound") {
    const auto d = conductor({{make_point(0.2, -0.1), 0.3}, {make_point(-0.5, 0.4), 0.15}});
    for (double eps : {0.25, 0.125, 0.0625, 0.03125, 0.015625}) {
      const geo::GridDomain s = geo::approximate_domain(d, eps);
      CHECK(geo::hausdorff_distance(d, s) < std::sqrt(2.0) * eps);
      const double side = std::ceil(2.0 / eps) + 2.0;
      CHECK(static_cast<double>(s.size()) <= side * side);
      CHECK(s.contains(make_point(0.9, 0.0)));
    }
  }
  SUBCASE("connectivity diagnostic") {
    CHECK(geo::GridDomain(1.0, {{0, 0}, {0, 1}}).is_connected());
    CHECK_FALSE(geo::GridDomain(1.0, {{0, 0}, {1, 1}}).is_connected());
  }
}
