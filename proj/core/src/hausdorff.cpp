#include "cavity_bayes/hausdorff.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

namespace cavity_bayes::geometry {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double distance_to_box(const Point& p, const Box& b) {
  const double dx = std::max({b.lo[0] - p[0], 0.0, p[0] - b.hi[0]});
  const double dy = std::max({b.lo[1] - p[1], 0.0, p[1] - b.hi[1]});
  return std::hypot(dx, dy);
}

std::array<Point, 4> corners(const Box& b) {
  return {b.lo, make_point(b.hi[0], b.lo[1]), b.hi, make_point(b.lo[0], b.hi[1])};
}

bool box_in_closed_disk(const Box& b, const Point& center, double radius) {
  const double r2 = radius * radius;
  for (const auto& c : corners(b)) {
    if (squared_distance(c, center) > r2) return false;
  }
  return true;
}

// True only if no point of the open set lies in the closed box.
bool box_disjoint(const Shape& s, const Box& box) {
  return std::visit(
      Overloaded{
          [&](const ConductorDomain& d) {
            if (distance_to_box(d.outer().center, box) >= d.outer().radius) return true;
            for (const auto& c : d.cavities()) {
              if (box_in_closed_disk(box, c.center, c.radius)) return true;
            }
            return false;
          },
          [&](const GridDomain& g) {
            const double e = g.resolution();
            const auto a0 = static_cast<std::int64_t>(std::ceil(box.lo[0] / e)) - 1;
            const auto a1 = static_cast<std::int64_t>(std::floor(box.hi[0] / e));
            const auto b0 = static_cast<std::int64_t>(std::ceil(box.lo[1] / e)) - 1;
            const auto b1 = static_cast<std::int64_t>(std::floor(box.hi[1] / e));
            return !g.any_cube_in(a0, a1, b0, b1);
          },
          [&](const OpenBox& o) {
            return box.hi[0] <= o.lo[0] || box.lo[0] >= o.hi[0] || box.hi[1] <= o.lo[1] || box.lo[1] >= o.hi[1];
          },
      },
      s);
}

// True only if the closed box lies in the closure of the set.
bool box_in_closure(const Shape& s, const Box& box) {
  return std::visit(
      Overloaded{
          [&](const ConductorDomain& d) {
            if (!box_in_closed_disk(box, d.outer().center, d.outer().radius)) return false;
            for (const auto& c : d.cavities()) {
              if (distance_to_box(c.center, box) < c.radius) return false;
            }
            return true;
          },
          [&](const GridDomain& g) {
            const double e = g.resolution();
            const auto a0 = static_cast<std::int64_t>(std::floor(box.lo[0] / e));
            const auto a1 = static_cast<std::int64_t>(std::floor(box.hi[0] / e));
            const auto b0 = static_cast<std::int64_t>(std::floor(box.lo[1] / e));
            const auto b1 = static_cast<std::int64_t>(std::floor(box.hi[1] / e));
            for (auto a = a0; a <= a1; ++a) {
              for (auto b = b0; b <= b1; ++b) {
                if (!g.has_cube({a, b})) return false;
              }
            }
            return true;
          },
          [&](const OpenBox& o) {
            return box.lo[0] >= o.lo[0] && box.hi[0] <= o.hi[0] && box.lo[1] >= o.lo[1] && box.hi[1] <= o.hi[1];
          },
      },
      s);
}

bool is_empty(const Shape& s) {
  return std::visit(Overloaded{
                        [](const ConductorDomain&) { return false; },
                        [](const GridDomain& g) { return g.empty(); },
                        [](const OpenBox& o) { return !(o.lo[0] < o.hi[0] && o.lo[1] < o.hi[1]); },
                    },
                    s);
}

// Closed cube Q(a, eps) meets the open set.
bool cube_meets(const Shape& s, const CubeIndex& a, double eps) {
  const Box q{make_point(static_cast<double>(a[0]) * eps, static_cast<double>(a[1]) * eps),
              make_point(static_cast<double>(a[0] + 1) * eps, static_cast<double>(a[1] + 1) * eps)};
  return std::visit(
      Overloaded{
          [&](const ConductorDomain& d) {
            if (!(distance_to_box(d.outer().center, q) < d.outer().radius)) return false;
            // The part of Q inside Omega is convex, so it avoids D only if it sits
            // inside a single closed cavity; cavities are interior to Omega, hence
            // that happens iff Q itself does.
            for (const auto& c : d.cavities()) {
              if (box_in_closed_disk(q, c.center, c.radius)) return false;
            }
            return true;
          },
          [&](const GridDomain& g) {
            // Int(G) is open, so it meets Q iff it meets Int(Q), iff some cube of G
            // overlaps Q with positive area.
            const double ratio = eps / g.resolution();
            const double lo0 = static_cast<double>(a[0]) * ratio;
            const double lo1 = static_cast<double>(a[1]) * ratio;
            const double hi0 = static_cast<double>(a[0] + 1) * ratio;
            const double hi1 = static_cast<double>(a[1] + 1) * ratio;
            const auto b0 = static_cast<std::int64_t>(std::floor(lo0 - 1.0)) + 1;
            const auto b1 = static_cast<std::int64_t>(std::ceil(hi0)) - 1;
            const auto c0 = static_cast<std::int64_t>(std::floor(lo1 - 1.0)) + 1;
            const auto c1 = static_cast<std::int64_t>(std::ceil(hi1)) - 1;
            return g.any_cube_in(b0, b1, c0, c1);
          },
          [&](const OpenBox& o) {
            return q.hi[0] > o.lo[0] && q.lo[0] < o.hi[0] && q.hi[1] > o.lo[1] && q.lo[1] < o.hi[1];
          },
      },
      s);
}

}  // namespace

struct GridDomain::Mask {
  std::int64_t min0 = 0;
  std::int64_t min1 = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> bits;
  // (width + 1) x (height + 1) inclusive prefix counts.
  std::vector<std::int64_t> prefix;

  [[nodiscard]] bool has(std::int64_t a, std::int64_t b) const {
    const auto i = a - min0;
    const auto j = b - min1;
    if (i < 0 || j < 0 || i >= width || j >= height) return false;
    return bits[static_cast<std::size_t>(j * width + i)] != 0;
  }

  [[nodiscard]] std::int64_t count(std::int64_t a0, std::int64_t a1, std::int64_t b0, std::int64_t b1) const {
    a0 = std::max(a0, min0) - min0;
    b0 = std::max(b0, min1) - min1;
    a1 = std::min(a1, min0 + width - 1) - min0;
    b1 = std::min(b1, min1 + height - 1) - min1;
    if (a0 > a1 || b0 > b1) return 0;
    const auto at = [&](std::int64_t i, std::int64_t j) { return prefix[static_cast<std::size_t>(j * (width + 1) + i)]; };
    return at(a1 + 1, b1 + 1) - at(a0, b1 + 1) - at(a1 + 1, b0) + at(a0, b0);
  }
};

GridDomain::GridDomain(double resolution, std::vector<CubeIndex> cubes)
    : resolution_(resolution), cubes_(std::move(cubes)) {
  if (!(resolution_ > 0.0) || !std::isfinite(resolution_)) {
    throw GeometryError("grid resolution must be positive and finite");
  }
  std::sort(cubes_.begin(), cubes_.end());
  cubes_.erase(std::unique(cubes_.begin(), cubes_.end()), cubes_.end());

  auto mask = std::make_shared<Mask>();
  if (!cubes_.empty()) {
    std::int64_t max0 = cubes_.front()[0];
    std::int64_t max1 = cubes_.front()[1];
    mask->min0 = max0;
    mask->min1 = max1;
    for (const auto& a : cubes_) {
      mask->min0 = std::min(mask->min0, a[0]);
      mask->min1 = std::min(mask->min1, a[1]);
      max0 = std::max(max0, a[0]);
      max1 = std::max(max1, a[1]);
    }
    mask->width = max0 - mask->min0 + 1;
    mask->height = max1 - mask->min1 + 1;
    mask->bits.assign(static_cast<std::size_t>(mask->width * mask->height), 0);
    for (const auto& a : cubes_) {
      mask->bits[static_cast<std::size_t>((a[1] - mask->min1) * mask->width + (a[0] - mask->min0))] = 1;
    }
    const auto w1 = mask->width + 1;
    mask->prefix.assign(static_cast<std::size_t>(w1 * (mask->height + 1)), 0);
    for (std::int64_t j = 0; j < mask->height; ++j) {
      for (std::int64_t i = 0; i < mask->width; ++i) {
        const auto idx = [&](std::int64_t x, std::int64_t y) { return static_cast<std::size_t>(y * w1 + x); };
        mask->prefix[idx(i + 1, j + 1)] = mask->bits[static_cast<std::size_t>(j * mask->width + i)] +
                                          mask->prefix[idx(i, j + 1)] + mask->prefix[idx(i + 1, j)] -
                                          mask->prefix[idx(i, j)];
      }
    }
  }
  mask_ = std::move(mask);
}

bool GridDomain::has_cube(const CubeIndex& a) const { return mask_->has(a[0], a[1]); }

bool GridDomain::any_cube_in(std::int64_t a0, std::int64_t a1, std::int64_t b0, std::int64_t b1) const {
  if (cubes_.empty()) return false;
  return mask_->count(a0, a1, b0, b1) > 0;
}

bool GridDomain::contains(const Point& x) const {
  // Every closed cube containing x must belong to the set.
  std::array<std::array<std::int64_t, 2>, 2> candidates{};
  std::array<int, 2> n{};
  for (int k = 0; k < 2; ++k) {
    const double f = x[static_cast<std::size_t>(k)] / resolution_;
    const double fl = std::floor(f);
    const auto a = static_cast<std::int64_t>(fl);
    if (f == fl) {
      candidates[k] = {a - 1, a};
      n[k] = 2;
    } else {
      candidates[k] = {a, a};
      n[k] = 1;
    }
  }
  for (int i = 0; i < n[0]; ++i) {
    for (int j = 0; j < n[1]; ++j) {
      if (!mask_->has(candidates[0][i], candidates[1][j])) return false;
    }
  }
  return !cubes_.empty();
}

double GridDomain::distance_to_closure(const Point& x) const {
  if (cubes_.empty()) return std::numeric_limits<double>::infinity();
  const Mask& m = *mask_;
  const double e = resolution_;
  const auto c0 = static_cast<std::int64_t>(std::floor(x[0] / e));
  const auto c1 = static_cast<std::int64_t>(std::floor(x[1] / e));
  const auto cube_distance = [&](std::int64_t a, std::int64_t b) {
    const double dx = std::max({static_cast<double>(a) * e - x[0], 0.0, x[0] - static_cast<double>(a + 1) * e});
    const double dy = std::max({static_cast<double>(b) * e - x[1], 0.0, x[1] - static_cast<double>(b + 1) * e});
    return std::hypot(dx, dy);
  };
  const std::int64_t lo0 = m.min0, hi0 = m.min0 + m.width - 1;
  const std::int64_t lo1 = m.min1, hi1 = m.min1 + m.height - 1;
  const std::int64_t start =
      std::max({lo0 - c0, c0 - hi0, lo1 - c1, c1 - hi1, std::int64_t{0}});
  const std::int64_t stop = std::max({c0 - lo0, hi0 - c0, c1 - lo1, hi1 - c1, std::int64_t{0}});
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t r = start; r <= stop; ++r) {
    if (static_cast<double>(r - 1) * e > best) break;
    const auto visit_row = [&](std::int64_t b, std::int64_t a_begin, std::int64_t a_end) {
      if (b < lo1 || b > hi1) return;
      for (auto a = std::max(a_begin, lo0); a <= std::min(a_end, hi0); ++a) {
        if (m.has(a, b)) best = std::min(best, cube_distance(a, b));
      }
    };
    const auto visit_col = [&](std::int64_t a, std::int64_t b_begin, std::int64_t b_end) {
      if (a < lo0 || a > hi0) return;
      for (auto b = std::max(b_begin, lo1); b <= std::min(b_end, hi1); ++b) {
        if (m.has(a, b)) best = std::min(best, cube_distance(a, b));
      }
    };
    if (r == 0) {
      visit_row(c1, c0, c0);
      continue;
    }
    visit_row(c1 - r, c0 - r, c0 + r);
    visit_row(c1 + r, c0 - r, c0 + r);
    visit_col(c0 - r, c1 - r + 1, c1 + r - 1);
    visit_col(c0 + r, c1 - r + 1, c1 + r - 1);
  }
  return best;
}

Box GridDomain::bounds() const {
  if (cubes_.empty()) return Box{};
  const Mask& m = *mask_;
  return Box{make_point(static_cast<double>(m.min0) * resolution_, static_cast<double>(m.min1) * resolution_),
             make_point(static_cast<double>(m.min0 + m.width) * resolution_,
                        static_cast<double>(m.min1 + m.height) * resolution_)};
}

bool GridDomain::is_connected() const {
  if (cubes_.size() <= 1) return true;
  std::vector<std::uint8_t> seen(cubes_.size(), 0);
  const auto index_of = [&](const CubeIndex& a) -> std::ptrdiff_t {
    auto it = std::lower_bound(cubes_.begin(), cubes_.end(), a);
    if (it == cubes_.end() || *it != a) return -1;
    return it - cubes_.begin();
  };
  std::deque<std::size_t> queue{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const auto a = cubes_[queue.front()];
    queue.pop_front();
    const std::array<CubeIndex, 4> nbrs{CubeIndex{a[0] + 1, a[1]}, CubeIndex{a[0] - 1, a[1]},
                                        CubeIndex{a[0], a[1] + 1}, CubeIndex{a[0], a[1] - 1}};
    for (const auto& nb : nbrs) {
      const auto k = index_of(nb);
      if (k >= 0 && !seen[static_cast<std::size_t>(k)]) {
        seen[static_cast<std::size_t>(k)] = 1;
        ++reached;
        queue.push_back(static_cast<std::size_t>(k));
      }
    }
  }
  return reached == cubes_.size();
}

bool contains(const Shape& shape, const Point& x) {
  return std::visit(Overloaded{
                        [&](const ConductorDomain& d) { return d.contains(x); },
                        [&](const GridDomain& g) { return g.contains(x); },
                        [&](const OpenBox& o) {
                          return x[0] > o.lo[0] && x[0] < o.hi[0] && x[1] > o.lo[1] && x[1] < o.hi[1];
                        },
                    },
                    shape);
}

double distance_to_closure(const Shape& shape, const Point& x) {
  return std::visit(Overloaded{
                        [&](const ConductorDomain& d) { return d.distance_to_closure(x); },
                        [&](const GridDomain& g) { return g.distance_to_closure(x); },
                        [&](const OpenBox& o) { return distance_to_box(x, Box{o.lo, o.hi}); },
                    },
                    shape);
}

Box bounds(const Shape& shape) {
  return std::visit(Overloaded{
                        [](const ConductorDomain& d) {
                          const auto& o = d.outer();
                          return Box{o.center - make_point(o.radius, o.radius),
                                     o.center + make_point(o.radius, o.radius)};
                        },
                        [](const GridDomain& g) { return g.bounds(); },
                        [](const OpenBox& o) { return Box{o.lo, o.hi}; },
                    },
                    shape);
}

double default_hausdorff_pitch(const Shape& a, const Shape& b) {
  const Box ba = bounds(a);
  const Box bb = bounds(b);
  const double w = std::max(ba.hi[0], bb.hi[0]) - std::min(ba.lo[0], bb.lo[0]);
  const double h = std::max(ba.hi[1], bb.hi[1]) - std::min(ba.lo[1], bb.lo[1]);
  const double pitch = 1e-3 * 0.5 * std::max(w, h);
  return pitch > 0.0 ? pitch : 1e-3;
}

double directed_hausdorff(const Shape& from, const Shape& to, double pitch) {
  if (!(pitch > 0.0)) throw GeometryError("hausdorff pitch must be positive");
  if (is_empty(from) || is_empty(to)) throw EmptyDomain("hausdorff distance of an empty domain");

  const Box b = bounds(from);
  const auto i0 = static_cast<std::int64_t>(std::ceil(b.lo[0] / pitch));
  const auto i1 = static_cast<std::int64_t>(std::floor(b.hi[0] / pitch));
  const auto j0 = static_cast<std::int64_t>(std::ceil(b.lo[1] / pitch));
  const auto j1 = static_cast<std::int64_t>(std::floor(b.hi[1] / pitch));
  if (i0 > i1 || j0 > j1) throw EmptyDomain("no lattice samples in domain");

  struct Node {
    std::int64_t i0, i1, j0, j1;
    double upper;
    bool operator<(const Node& o) const { return upper < o.upper; }
  };
  const auto real_box = [&](const Node& n) {
    return Box{make_point(static_cast<double>(n.i0) * pitch, static_cast<double>(n.j0) * pitch),
               make_point(static_cast<double>(n.i1) * pitch, static_cast<double>(n.j1) * pitch)};
  };
  const auto make_node = [&](std::int64_t a0, std::int64_t a1, std::int64_t c0, std::int64_t c1) {
    Node n{a0, a1, c0, c1, 0.0};
    const Box rb = real_box(n);
    if (box_in_closure(to, rb)) return n;
    const Point centre = (rb.lo + rb.hi) * 0.5;
    n.upper = distance_to_closure(to, centre) + 0.5 * distance(rb.lo, rb.hi);
    return n;
  };

  constexpr std::int64_t kLeafSide = 8;
  std::priority_queue<Node> queue;
  queue.push(make_node(i0, i1, j0, j1));
  double best = -1.0;
  bool found = false;
  while (!queue.empty()) {
    const Node n = queue.top();
    queue.pop();
    if (n.upper <= best) continue;
    const Box rb = real_box(n);
    if (box_disjoint(from, rb)) continue;
    if (n.upper == 0.0) {
      // Entirely inside the closure of `to`: contributes 0 once some sample exists.
      if (!found) {
        for (auto i = n.i0; i <= n.i1 && !found; ++i) {
          for (auto j = n.j0; j <= n.j1 && !found; ++j) {
            if (contains(from, make_point(static_cast<double>(i) * pitch, static_cast<double>(j) * pitch))) {
              found = true;
              best = std::max(best, 0.0);
            }
          }
        }
      }
      continue;
    }
    const auto w = n.i1 - n.i0 + 1;
    const auto h = n.j1 - n.j0 + 1;
    if (w <= kLeafSide && h <= kLeafSide) {
      for (auto i = n.i0; i <= n.i1; ++i) {
        for (auto j = n.j0; j <= n.j1; ++j) {
          const Point p = make_point(static_cast<double>(i) * pitch, static_cast<double>(j) * pitch);
          if (!contains(from, p)) continue;
          found = true;
          best = std::max(best, distance_to_closure(to, p));
        }
      }
      continue;
    }
    if (w >= h) {
      const auto mid = n.i0 + w / 2;
      queue.push(make_node(n.i0, mid - 1, n.j0, n.j1));
      queue.push(make_node(mid, n.i1, n.j0, n.j1));
    } else {
      const auto mid = n.j0 + h / 2;
      queue.push(make_node(n.i0, n.i1, n.j0, mid - 1));
      queue.push(make_node(n.i0, n.i1, mid, n.j1));
    }
  }
  if (!found) throw EmptyDomain("no lattice samples in domain at this pitch");
  return best;
}

double hausdorff_distance(const Shape& a, const Shape& b, double pitch) {
  return std::max(directed_hausdorff(a, b, pitch), directed_hausdorff(b, a, pitch));
}

double hausdorff_distance(const Shape& a, const Shape& b) {
  return hausdorff_distance(a, b, default_hausdorff_pitch(a, b));
}

GridDomain approximate_domain(const Shape& domain, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw GeometryError("approximation resolution must be positive");
  std::vector<CubeIndex> cubes;
  if (is_empty(domain)) return GridDomain(eps, std::move(cubes));
  const Box b = bounds(domain);
  const auto a0 = static_cast<std::int64_t>(std::floor(b.lo[0] / eps)) - 1;
  const auto a1 = static_cast<std::int64_t>(std::floor(b.hi[0] / eps)) + 1;
  const auto c0 = static_cast<std::int64_t>(std::floor(b.lo[1] / eps)) - 1;
  const auto c1 = static_cast<std::int64_t>(std::floor(b.hi[1] / eps)) + 1;
  for (auto a = a0; a <= a1; ++a) {
    for (auto c = c0; c <= c1; ++c) {
      if (cube_meets(domain, {a, c}, eps)) cubes.push_back({a, c});
    }
  }
  return GridDomain(eps, std::move(cubes));
}

}  // namespace cavity_bayes::geometry
