// h-refinement sweep of the annulus benchmark. Prints the Monte Carlo error
// against the radial oracle for each step and C_bias = max |error| / sqrt(h).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cavity_bayes/forward.hpp"
#include "cavity_bayes/radial_oracle.hpp"

namespace cb = cavity_bayes;

int main(int argc, char** argv) {
  CLI::App app{"Calibrate the step-size bias constant of the forward solver"};
  std::size_t paths = 100000;
  std::uint64_t seed = 0x5eedca1bULL;
  std::vector<double> steps{4e-3, 1e-3, 2.5e-4};
  app.add_option("--paths", paths, "Paths per step size")->capture_default_str();
  app.add_option("--seed", seed, "Base seed")->capture_default_str();
  app.add_option("--steps", steps, "Step sizes")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const cb::geometry::OuterDomain outer = cb::geometry::OuterDomain::unit_disk();
  const cb::geometry::ConductorDomain annulus(
      outer, cb::geometry::CavitySet::with_default_margins({cb::geometry::DiskCavity{{}, 0.5}}, outer));
  const double oracle = cb::forward::radial_oracle_extrapolated(1.0, 1.0, 1.0, 0.5, 1.0);
  std::printf("oracle %.10f\n", oracle);
  std::printf("%-10s %-12s %-12s %-12s %-10s %s\n", "h", "estimate", "std_error", "error", "error/sqrt(h)",
              "seconds");

  double c_bias = 0.0;
  for (double h : steps) {
    cb::forward::SolverConfig cfg;
    cfg.step = h;
    cfg.paths = paths;
    cfg.base_seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    const auto est = cb::forward::estimate_u(1.0, cb::make_point(1.0, 0.0), annulus,
                                             cb::forward::BoundaryFlux::constant(1.0), cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double err = est.mean - oracle;
    const double scaled = std::abs(err) / std::sqrt(h);
    c_bias = std::max(c_bias, scaled);
    std::printf("%-10g %-12.6f %-12.6f %-+12.6f %-13.4f %.2f\n", h, est.mean, est.std_error, err, scaled, secs);
  }
  std::printf("C_bias %.4f\n", c_bias);
  return 0;
}
