#include "cavity_bayes/forward.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cavity_bayes/parallel.hpp"
#include "cavity_bayes/random.hpp"

namespace cavity_bayes::forward {

namespace {

using geometry::ConductorDomain;
using geometry::OuterDomain;

// Horizon t = full_steps * h + remainder, remainder in [0, h).
struct StepPlan {
  std::size_t full_steps = 0;
  double remainder = 0.0;
};

StepPlan plan_steps(double horizon, double h) {
  const double ratio = horizon / h;
  auto n = static_cast<std::size_t>(std::floor(ratio + 1e-9));
  double rem = horizon - static_cast<double>(n) * h;
  if (rem <= 1e-9 * h) rem = 0.0;
  return StepPlan{n, rem};
}

bool segment_hits_disk(const Point& a, const Point& b, const geometry::DiskCavity& c) {
  const Point ab = b - a;
  const double len2 = ab.squared_norm();
  double s = 0.0;
  if (len2 > 0.0) {
    const Point ac = c.center - a;
    s = std::clamp((ac[0] * ab[0] + ac[1] * ab[1]) / len2, 0.0, 1.0);
  }
  return squared_distance(a + ab * s, c.center) <= c.radius * c.radius;
}

class CavityTest {
 public:
  CavityTest(const ConductorDomain& domain, CrossingCheck mode, bool enabled)
      : cavities_(domain.cavities()), mode_(mode), enabled_(enabled && !domain.cavities().empty()) {}

  [[nodiscard]] bool hit(const Point& from, const Point& proposed, const Point& landed) const {
    if (!enabled_) return false;
    for (const auto& c : cavities_) {
      if (c.closure_contains(landed)) return true;
      if (mode_ == CrossingCheck::bridge && segment_hits_disk(from, proposed, c)) return true;
    }
    return false;
  }

 private:
  const std::vector<geometry::DiskCavity>& cavities_;
  CrossingCheck mode_;
  bool enabled_;
};

Point checked_start(const Point& x0, const ConductorDomain& domain, bool stop_at_cavity) {
  const OuterDomain& outer = domain.outer();
  if (!x0.is_finite() || distance(x0, outer.center) > outer.radius * (1.0 + 1e-12)) {
    throw std::invalid_argument("path start must lie in the closed outer domain");
  }
  if (stop_at_cavity && domain.in_cavity_closure(x0)) {
    throw StartInsideCavity("path start lies in a closed cavity");
  }
  return outer.project(x0);
}

double run_path(const Point& x0, std::span<const double> horizons, const ConductorDomain& domain,
                const BoundaryFlux& flux, const SolverConfig& cfg, std::uint64_t path_index, bool stop_at_cavity,
                std::span<double> out, const PathObserver* observer) {
  std::fill(out.begin(), out.end(), 0.0);
  if (horizons.empty()) return kNeverStopped;
  Point x = checked_start(x0, domain, stop_at_cavity);

  const double h = cfg.step;
  const double sqrt_h = std::sqrt(h);
  const OuterDomain& outer = domain.outer();
  const CavityTest cavity(domain, cfg.crossing, stop_at_cavity);
  RandomStream stream(cfg.base_seed, path_index);

  constexpr std::size_t kInline = 16;
  std::array<StepPlan, kInline> inline_plans{};
  std::vector<StepPlan> heap_plans;
  std::span<StepPlan> plans;
  if (horizons.size() <= kInline) {
    plans = std::span<StepPlan>(inline_plans.data(), horizons.size());
  } else {
    heap_plans.resize(horizons.size());
    plans = heap_plans;
  }
  for (std::size_t k = 0; k < horizons.size(); ++k) plans[k] = plan_steps(horizons[k], h);
  const std::size_t last_full = plans.back().full_steps;

  ReflectedPathState state{x, 0.0, 0.0, false, kNeverStopped};
  std::size_t first_open = 0;
  for (std::size_t n = 0;; ++n) {
    const double r_n = static_cast<double>(n) * h;
    // Horizons whose full steps are exhausted finish with their remainder step.
    bool need_draw = false;
    for (std::size_t k = first_open; k < plans.size() && plans[k].full_steps <= n; ++k) {
      if (plans[k].remainder > 0.0) need_draw = true;
    }
    if (n >= last_full && !need_draw) break;

    const auto [z0, z1] = stream.next_gaussian_pair();
    const Point z = make_point(z0, z1);

    while (first_open < plans.size() && plans[first_open].full_steps <= n) {
      const StepPlan& p = plans[first_open];
      if (p.remainder > 0.0) {
        const Point proposed = x + z * std::sqrt(p.remainder);
        const ReflectResult r = reflect_step(x, z * std::sqrt(p.remainder), outer);
        const bool hit = cavity.hit(x, proposed, r.position);
        if (!hit && r.local_time_increment > 0.0) {
          out[first_open] += flux(horizons[first_open] - r_n, r.position) * r.local_time_increment;
        }
        if (hit && first_open + 1 == plans.size()) state.stop_time = horizons[first_open];
      }
      ++first_open;
    }
    if (n >= last_full) break;

    const Point increment = z * sqrt_h;
    const Point proposed = x + increment;
    const ReflectResult r = reflect_step(x, increment, outer);
    if (cavity.hit(x, proposed, r.position)) {
      state.stop_time = r_n + h;
      if (observer) {
        state.position = r.position;
        state.time = r_n + h;
        state.stopped = true;
        (*observer)(state);
      }
      break;
    }
    if (r.local_time_increment > 0.0) {
      for (std::size_t k = first_open; k < plans.size(); ++k) {
        out[k] += flux(horizons[k] - r_n, r.position) * r.local_time_increment;
      }
    }
    x = r.position;
    if (observer) {
      state.position = x;
      state.local_time += r.local_time_increment;
      state.time = r_n + h;
      (*observer)(state);
    }
  }
  return state.stop_time;
}

}  // namespace

bool BoundaryFlux::identically_zero() const {
  if (amplitude == 0.0) return true;
  if (part == Part::positive) return amplitude < 0.0;
  if (part == Part::negative) return amplitude > 0.0;
  return false;
}

void SolverConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("solver step must be positive");
  if (paths < 1) throw std::invalid_argument("solver needs at least one path");
}

ReflectResult reflect_step(const Point& x, const Point& increment, const OuterDomain& outer) {
  const Point proposed = x + increment;
  const Point offset = proposed - outer.center;
  const double r2 = offset.squared_norm();
  if (r2 <= outer.radius * outer.radius) return ReflectResult{proposed, 0.0};
  const double r = std::sqrt(r2);
  return ReflectResult{outer.center + offset * (outer.radius / r), r - outer.radius};
}

PathResult simulate_path(const Point& x0, double horizon, const ConductorDomain& domain, const BoundaryFlux& flux,
                         const SolverConfig& cfg, std::uint64_t path_index, bool stop_at_cavity,
                         const PathObserver* observer) {
  cfg.validate();
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
  double functional = 0.0;
  const double horizons[1] = {horizon};
  const double tau = run_path(x0, horizons, domain, flux, cfg, path_index, stop_at_cavity,
                              std::span<double>(&functional, 1), observer);
  return PathResult{functional, tau <= horizon ? tau : kNeverStopped};
}

double simulate_path_horizons(const Point& x0, std::span<const double> horizons, const ConductorDomain& domain,
                              const BoundaryFlux& flux, const SolverConfig& cfg, std::uint64_t path_index,
                              bool stop_at_cavity, std::span<double> out) {
  if (out.size() != horizons.size()) throw std::invalid_argument("output span must match horizon count");
  if (!std::is_sorted(horizons.begin(), horizons.end())) throw std::invalid_argument("horizons must be sorted");
  if (!horizons.empty() && !(horizons.front() >= 0.0)) throw std::invalid_argument("horizons must be nonnegative");
  return run_path(x0, horizons, domain, flux, cfg, path_index, stop_at_cavity, out, nullptr);
}

FieldEstimate estimate_u(double t, const Point& x, const ConductorDomain& domain, const BoundaryFlux& flux,
                         const SolverConfig& cfg) {
  cfg.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("time must be nonnegative");
  checked_start(x, domain, true);
  if (t == 0.0) return FieldEstimate{0.0, 0.0, cfg.paths};
  std::vector<double> values(cfg.paths);
  const double horizons[1] = {t};
  parallel_for(cfg.paths, cfg.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      run_path(x, horizons, domain, flux, cfg, p, true, std::span<double>(&values[p], 1), nullptr);
    }
  });
  const SampleMoments m = sample_moments(values);
  return FieldEstimate{m.mean, m.std_error, cfg.paths};
}

ObservationVector finitize_table(std::span<const FieldEstimate> table, const ObservationGrid& grid,
                                 const OuterDomain& outer) {
  grid.validate();
  const auto q = static_cast<std::size_t>(grid.refinement);
  const auto n_times = static_cast<std::size_t>(grid.time_cells) * q;
  const auto n_points = static_cast<std::size_t>(grid.arc_cells) * q;
  if (table.size() != n_times * n_points) throw std::invalid_argument("node table does not match grid");

  const double sub_area = (grid.horizon / static_cast<double>(n_times)) *
                          (grid.arc_length(outer) / static_cast<double>(n_points));
  ObservationVector out;
  out.values.assign(grid.size(), 0.0);
  out.std_errors.assign(grid.size(), 0.0);
  out.grid = grid;
  for (int i = 0; i < grid.time_cells; ++i) {
    for (int j = 0; j < grid.arc_cells; ++j) {
      CompensatedSum sum;
      CompensatedSum var;
      for (std::size_t a = 0; a < q; ++a) {
        for (std::size_t b = 0; b < q; ++b) {
          const auto& node = table[(static_cast<std::size_t>(i) * q + a) * n_points + static_cast<std::size_t>(j) * q + b];
          sum.add(node.mean);
          var.add(node.std_error * node.std_error);
        }
      }
      const std::size_t idx = grid.index(i, j);
      out.values[idx] = sub_area * sum.value();
      out.std_errors[idx] = sub_area * std::sqrt(var.value());
    }
  }
  return out;
}

ObservationVector finitize(const FieldSampler& u, const ObservationGrid& grid, const OuterDomain& outer) {
  grid.validate();
  const auto times = grid.quadrature_times();
  const auto points = grid.quadrature_points(outer);
  std::vector<FieldEstimate> table;
  table.reserve(times.size() * points.size());
  for (double t : times) {
    for (const Point& x : points) table.push_back(u(t, x));
  }
  return finitize_table(table, grid, outer);
}

ObservationVector forward(const ConductorDomain& domain, const ObservationGrid& grid, const BoundaryFlux& flux,
                          const SolverConfig& cfg, bool stop_at_cavity) {
  grid.validate();
  cfg.validate();
  const auto times = grid.quadrature_times();
  const auto points = grid.quadrature_points(domain.outer());
  const std::size_t n_t = times.size();
  const std::size_t n_x = points.size();
  const std::size_t n_p = cfg.paths;

  // samples[(point * n_p + path) * n_t + time]
  std::vector<double> samples(n_x * n_p * n_t, 0.0);
  if (!flux.identically_zero()) {
    parallel_for(n_x * n_p, cfg.workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t task = begin; task < end; ++task) {
        const std::size_t point = task / n_p;
        const std::size_t path = task % n_p;
        run_path(points[point], times, domain, flux, cfg, path, stop_at_cavity,
                 std::span<double>(samples.data() + task * n_t, n_t), nullptr);
      }
    });
  }

  std::vector<FieldEstimate> table(n_t * n_x);
  std::vector<double> column(n_p);
  for (std::size_t point = 0; point < n_x; ++point) {
    for (std::size_t ti = 0; ti < n_t; ++ti) {
      for (std::size_t path = 0; path < n_p; ++path) column[path] = samples[(point * n_p + path) * n_t + ti];
      const SampleMoments m = sample_moments(column);
      table[ti * n_x + point] = FieldEstimate{m.mean, m.std_error, n_p};
    }
  }
  return finitize_table(table, grid, domain.outer());
}

ForwardBound envelope_bound(const ObservationVector& plus, const ObservationVector& minus) {
  if (plus.size() != minus.size()) throw std::invalid_argument("envelope operands differ in length");
  const std::size_t m = plus.size();
  std::vector<double> envelope(m);
  std::vector<double> se(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double p = std::abs(plus.values[i]);
    const double q = std::abs(minus.values[i]);
    envelope[i] = std::max(p, q);
    const auto& src = p >= q ? plus.std_errors : minus.std_errors;
    if (i < src.size()) se[i] = src[i];
  }
  const double norm = euclidean_norm(envelope);
  CompensatedSum var;
  if (norm > 0.0) {
    for (std::size_t i = 0; i < m; ++i) {
      const double w = envelope[i] / norm;
      var.add(w * w * se[i] * se[i]);
    }
  }
  return ForwardBound{norm, std::sqrt(var.value())};
}

ForwardBound bound_CF(const BoundaryFlux& flux, const ObservationGrid& grid, const OuterDomain& outer,
                      const SolverConfig& cfg) {
  const ConductorDomain free_domain(outer, geometry::CavitySet::with_default_margins({}, outer));
  const ObservationVector plus = forward(free_domain, grid, flux.positive_part(), cfg, false);
  const ObservationVector minus = forward(free_domain, grid, flux.negative_part(), cfg, false);
  return envelope_bound(plus, minus);
}

}  // namespace cavity_bayes::forward
