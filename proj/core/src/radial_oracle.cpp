#include "cavity_bayes/radial_oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cavity_bayes::forward {

namespace {

// Solves a tridiagonal system in place (Thomas algorithm); `rhs` receives x.
void solve_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                       const std::vector<double>& upper, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  std::vector<double> c(n);
  double denom = diag[0];
  c[0] = upper[0] / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - lower[i] * c[i - 1];
    c[i] = i + 1 < n ? upper[i] / denom : 0.0;
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

}  // namespace

double radial_oracle(double t, double r, double outer_radius, double inner_radius, double flux, int n_r, int n_t) {
  if (n_r < 8 || n_t < 8) throw std::invalid_argument("radial oracle mesh too coarse (need n_r, n_t >= 8)");
  if (!(inner_radius > 0.0) || !(inner_radius < outer_radius)) {
    throw std::invalid_argument("radial oracle needs 0 < inner_radius < outer_radius");
  }
  if (!(r >= inner_radius) || !(r <= outer_radius)) throw std::invalid_argument("radius outside the annulus");
  if (!(t >= 0.0)) throw std::invalid_argument("time must be nonnegative");
  if (t == 0.0 || flux == 0.0) return 0.0;

  const auto n = static_cast<std::size_t>(n_r);
  const double dr = (outer_radius - inner_radius) / static_cast<double>(n_r);
  const double inv_dr2 = 1.0 / (dr * dr);

  // A u + b with unknowns u_1..u_n (u_0 = 0); index k holds u_{k+1}.
  std::vector<double> a_lo(n), a_di(n), a_up(n);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double ri = inner_radius + static_cast<double>(k + 1) * dr;
    a_lo[k] = 0.5 * (inv_dr2 - 1.0 / (2.0 * ri * dr));
    a_di[k] = -inv_dr2;
    a_up[k] = 0.5 * (inv_dr2 + 1.0 / (2.0 * ri * dr));
  }
  // Ghost node u_{n+1} = u_{n-1} + 2 dr flux.
  a_lo[n - 1] = inv_dr2;
  a_di[n - 1] = -inv_dr2;
  a_up[n - 1] = 0.0;
  const double b_last = 0.5 * (2.0 * flux / dr + flux / outer_radius);

  std::vector<double> u(n, 0.0);
  std::vector<double> lo(n), di(n), up(n), rhs(n);
  const auto theta_step = [&](double dt, double theta) {
    for (std::size_t k = 0; k < n; ++k) {
      lo[k] = -theta * dt * a_lo[k];
      di[k] = 1.0 - theta * dt * a_di[k];
      up[k] = -theta * dt * a_up[k];
      double au = a_di[k] * u[k];
      if (k > 0) au += a_lo[k] * u[k - 1];
      if (k + 1 < n) au += a_up[k] * u[k + 1];
      rhs[k] = u[k] + (1.0 - theta) * dt * au;
    }
    rhs[n - 1] += dt * b_last;
    solve_tridiagonal(lo, di, up, rhs);
    u.swap(rhs);
  };

  const double dt = t / static_cast<double>(n_t);
  // Rannacher start: four half-size implicit Euler steps damp the
  // incompatibility between u(0) = 0 and the boundary flux.
  for (int s = 0; s < 4; ++s) theta_step(0.5 * dt, 1.0);
  for (int s = 2; s < n_t; ++s) theta_step(dt, 0.5);

  const auto node = [&](std::size_t i) { return i == 0 ? 0.0 : u[i - 1]; };
  const double pos = (r - inner_radius) / dr;
  auto i = static_cast<std::size_t>(std::llround(pos));
  if (std::abs(pos - static_cast<double>(i)) < 1e-12) return node(std::min(i, n));
  // Quadratic through the three nearest nodes.
  std::size_t c = std::clamp<std::size_t>(i, 1, n - 1);
  const double x = pos - static_cast<double>(c);
  const double f0 = node(c - 1), f1 = node(c), f2 = node(c + 1);
  return f1 + 0.5 * x * (f2 - f0) + 0.5 * x * x * (f2 - 2.0 * f1 + f0);
}

RadialRefinement radial_oracle_refined(double t, double r, double outer_radius, double inner_radius, double flux,
                                       int base) {
  RadialRefinement out;
  for (int k = 0; k < 3; ++k) {
    const int n = base << k;
    out.values[static_cast<std::size_t>(k)] = radial_oracle(t, r, outer_radius, inner_radius, flux, n, n);
  }
  out.extrapolated[0] = (4.0 * out.values[1] - out.values[0]) / 3.0;
  out.extrapolated[1] = (4.0 * out.values[2] - out.values[1]) / 3.0;
  const double d0 = out.values[1] - out.values[0];
  const double d1 = out.values[2] - out.values[1];
  out.observed_order = (d0 != 0.0 && d1 != 0.0) ? std::log2(std::abs(d0 / d1)) : 0.0;
  return out;
}

double radial_oracle_extrapolated(double t, double r, double outer_radius, double inner_radius, double flux,
                                  int base) {
  return radial_oracle_refined(t, r, outer_radius, inner_radius, flux, base).extrapolated[1];
}

}  // namespace cavity_bayes::forward
