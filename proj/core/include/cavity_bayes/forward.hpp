#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "cavity_bayes/geometry.hpp"
#include "cavity_bayes/observation.hpp"

namespace cavity_bayes::forward {

/// Heat flux psi(t, x) prescribed on the outer boundary.
struct BoundaryFlux {
  enum class Kind { constant, sinusoidal };
  /// Restriction used by the psi_+ / psi_- decomposition.
  enum class Part { full, positive, negative };

  Kind kind = Kind::constant;
  double amplitude = 1.0;
  /// omega in c (1 + sin(omega t)); unused for constant flux.
  double angular_frequency = 0.0;
  Part part = Part::full;

  static BoundaryFlux constant(double c) { return BoundaryFlux{Kind::constant, c, 0.0, Part::full}; }
  static BoundaryFlux sinusoidal(double c, double omega) {
    return BoundaryFlux{Kind::sinusoidal, c, omega, Part::full};
  }

  [[nodiscard]] double operator()(double t, const Point& /*x*/) const {
    double v = kind == Kind::constant ? amplitude : amplitude * (1.0 + std::sin(angular_frequency * t));
    if (part == Part::positive) v = v >= 0.0 ? v : 0.0;
    if (part == Part::negative) v = v < 0.0 ? v : 0.0;
    return v;
  }
  /// Lipschitz constant in (t, x).
  [[nodiscard]] double lipschitz_constant() const {
    return kind == Kind::constant ? 0.0 : std::abs(amplitude * angular_frequency);
  }
  [[nodiscard]] bool identically_zero() const;

  [[nodiscard]] BoundaryFlux positive_part() const {
    BoundaryFlux f = *this;
    f.part = Part::positive;
    return f;
  }
  [[nodiscard]] BoundaryFlux negative_part() const {
    BoundaryFlux f = *this;
    f.part = Part::negative;
    return f;
  }

  friend bool operator==(const BoundaryFlux&, const BoundaryFlux&) = default;
};

enum class CrossingCheck {
  /// Stop when a step endpoint lands in a closed cavity.
  endpoint,
  /// Also stop when the unconstrained step segment passes through a cavity.
  bridge,
};

struct SolverConfig {
  double step = 1e-3;
  std::size_t paths = 1000;
  std::uint64_t base_seed = 0;
  CrossingCheck crossing = CrossingCheck::endpoint;
  /// 0: default_worker_count(). Never affects results.
  unsigned workers = 0;

  void validate() const;
};

class StartInsideCavity : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kNeverStopped = std::numeric_limits<double>::infinity();

struct ReflectedPathState {
  Point position{};
  double local_time = 0.0;
  double time = 0.0;
  bool stopped = false;
  double stop_time = kNeverStopped;
};

struct ReflectResult {
  Point position{};
  double local_time_increment = 0.0;
};

/// One projected-Euler step of dX = dB + N(X) dL: an exit from the closed
/// disk is projected radially back and the projection distance is the local
/// time increment.
[[nodiscard]] ReflectResult reflect_step(const Point& x, const Point& increment, const geometry::OuterDomain& outer);

struct PathResult {
  double functional = 0.0;
  /// tau(D); kNeverStopped if no cavity was hit before the horizon.
  double stop_time = kNeverStopped;
};

/// Observer for stored path states; receives every state after each step.
using PathObserver = std::function<void(const ReflectedPathState&)>;

/// One path of the Feynman-Kac functional sum_n psi(t - r_n, X_{n+1}) dL_n up
/// to min(t, tau). Increments come from the stream (cfg.base_seed, path_index).
/// When `stop_at_cavity` is false the cavities are ignored, which gives the
/// unstopped functional on the same increments.
[[nodiscard]] PathResult simulate_path(const Point& x0, double horizon, const geometry::ConductorDomain& domain,
                                       const BoundaryFlux& flux, const SolverConfig& cfg, std::uint64_t path_index,
                                       bool stop_at_cavity = true, const PathObserver* observer = nullptr);

/// Same path evaluated at several horizons at once. `horizons` must be sorted
/// ascending; out[k] equals simulate_path(..., horizons[k], ...).functional
/// bit for bit. Returns the stop time of the path over the longest horizon.
double simulate_path_horizons(const Point& x0, std::span<const double> horizons,
                              const geometry::ConductorDomain& domain, const BoundaryFlux& flux,
                              const SolverConfig& cfg, std::uint64_t path_index, bool stop_at_cavity,
                              std::span<double> out);

struct FieldEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t paths = 0;
};

/// Monte Carlo estimate of u^D(t, x).
[[nodiscard]] FieldEstimate estimate_u(double t, const Point& x, const geometry::ConductorDomain& domain,
                                       const BoundaryFlux& flux, const SolverConfig& cfg);

using FieldSampler = std::function<FieldEstimate(double t, const Point& x)>;

/// G2: midpoint-rule cell integrals of u over the observation grid.
[[nodiscard]] ObservationVector finitize(const FieldSampler& u, const ObservationGrid& grid,
                                         const geometry::OuterDomain& outer);

/// G2 applied to a table of node values, table[time_node][arc_node], laid out
/// as quadrature_times() x quadrature_points().
[[nodiscard]] ObservationVector finitize_table(std::span<const FieldEstimate> table, const ObservationGrid& grid,
                                               const geometry::OuterDomain& outer);

/// F(D) = G2(G1(D)) by Monte Carlo. Paths are shared across the time nodes
/// of each arc node, and across arc nodes (common random numbers).
[[nodiscard]] ObservationVector forward(const geometry::ConductorDomain& domain, const ObservationGrid& grid,
                                        const BoundaryFlux& flux, const SolverConfig& cfg,
                                        bool stop_at_cavity = true);

struct ForwardBound {
  double value = 0.0;
  double std_error = 0.0;
};

/// Norm of the componentwise envelope max(|plus_i|, |minus_i|), with a
/// delta-method standard error.
[[nodiscard]] ForwardBound envelope_bound(const ObservationVector& plus, const ObservationVector& minus);

/// C_F with ||F(D)|| <= C_F for every conductor in the outer domain: the norm
/// of the componentwise envelope of G2 applied to the unstopped psi_+ and
/// psi_- functionals.
[[nodiscard]] ForwardBound bound_CF(const BoundaryFlux& flux, const ObservationGrid& grid,
                                    const geometry::OuterDomain& outer, const SolverConfig& cfg);

}  // namespace cavity_bayes::forward
