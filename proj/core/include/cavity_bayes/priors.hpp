#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cavity_bayes/geometry.hpp"

namespace cavity_bayes::priors {

/// Prior mu_0 as a weighted list of conductors. Finite priors carry exact
/// masses; sampled priors carry 1/K each.
struct PriorEnsemble {
  enum class Kind { finite, sampled };

  std::vector<geometry::ConductorDomain> domains;
  std::vector<double> masses;
  Kind kind = Kind::finite;

  [[nodiscard]] std::size_t size() const { return domains.size(); }
};

class PriorNormalizationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rejection sampling could not find admissible configurations.
class PriorInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FiniteEntry {
  std::vector<geometry::DiskCavity> cavities;
  double probability = 0.0;
};

/// Cavity count uniform on [1, k_max], radii uniform on [r_min, r_max],
/// centres uniform over the disk of admissible centres for that radius.
/// Configurations violating the separation margin are rejected and redrawn.
struct ParametricSpec {
  int k_max = 1;
  double r_min = 0.1;
  double r_max = 0.3;
  /// Degenerate centre distribution.
  std::optional<Point> fixed_center;
};

struct PriorSpec {
  enum class Mode { finite_list, parametric };

  Mode mode = Mode::finite_list;
  geometry::OuterDomain outer;
  /// Defaults to 1% of the outer radius when unset.
  std::optional<double> separation_margin;
  std::optional<double> containment_margin;
  std::vector<FiniteEntry> entries;
  ParametricSpec parametric;

  [[nodiscard]] double delta_sep() const { return separation_margin.value_or(1e-2 * outer.radius); }
  [[nodiscard]] double delta_in() const { return containment_margin.value_or(1e-2 * outer.radius); }
};

/// Single-cavity domains of equal radius at every (x, y) centre pair, equal
/// probabilities, x-major order.
[[nodiscard]] PriorSpec grid_family(const geometry::OuterDomain& outer, const std::vector<double>& xs,
                                    const std::vector<double>& ys, double radius);
/// 4 x 4 centres at {-0.45, -0.15, 0.15, 0.45}^2, radius 0.2.
[[nodiscard]] PriorSpec benchmark_family(const geometry::OuterDomain& outer = {});
/// 4 x 2 centres, x in {-0.45, -0.15, 0.15, 0.45}, y in {-0.3, 0.3}, radius 0.2.
[[nodiscard]] PriorSpec small_family(const geometry::OuterDomain& outer = {});

/// Throws PriorNormalizationError when probabilities are negative or do not
/// sum to 1 within 1e-12, and geometry errors for invalid cavity lists.
[[nodiscard]] PriorEnsemble enumerate_finite(const PriorSpec& spec);

struct SampledPrior {
  PriorEnsemble ensemble;
  /// Rejected draws over all draws.
  double rejection_rate = 0.0;
};

/// K i.i.d. draws, draw i from substream i of `seed`. A probe batch of 1000
/// draws rejecting more than 99% raises PriorInfeasible.
[[nodiscard]] SampledPrior sample_prior(const PriorSpec& spec, std::size_t k, std::uint64_t seed);

}  // namespace cavity_bayes::priors
