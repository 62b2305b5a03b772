#pragma once

#include <array>

namespace cavity_bayes::forward {

/// Crank-Nicolson (Rannacher start) solution of u_t = (u_rr + u_r / r) / 2 on
/// [inner_radius, outer_radius] with u = 0 on the inner circle, u_r = flux on
/// the outer circle and u(0, .) = 0; the radially symmetric annulus case of
/// the heat problem. Evaluated at (t, r) with quadratic interpolation.
/// Throws std::invalid_argument for n_r < 8 or n_t < 8.
[[nodiscard]] double radial_oracle(double t, double r, double outer_radius, double inner_radius, double flux,
                                   int n_r, int n_t);

struct RadialRefinement {
  /// Values with n_r = n_t = base, 2 base, 4 base.
  std::array<double, 3> values{};
  /// Richardson (4 u_2n - u_n) / 3 from the two coarser and the two finer levels.
  std::array<double, 2> extrapolated{};
  /// log2 of successive difference ratios; ~2 for a second-order solver.
  double observed_order = 0.0;
};

[[nodiscard]] RadialRefinement radial_oracle_refined(double t, double r, double outer_radius, double inner_radius,
                                                     double flux, int base = 64);

/// Finest Richardson value of radial_oracle_refined.
[[nodiscard]] double radial_oracle_extrapolated(double t, double r, double outer_radius, double inner_radius,
                                                double flux, int base = 64);

}  // namespace cavity_bayes::forward
