#include "cavity_bayes/priors.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cavity_bayes/parallel.hpp"
#include "cavity_bayes/random.hpp"

namespace cavity_bayes::priors {

namespace {

using geometry::CavitySet;
using geometry::ConductorDomain;
using geometry::DiskCavity;

constexpr std::size_t kProbeBatch = 1000;
constexpr std::size_t kMaxAttemptsPerDraw = 1000000;

void validate_parametric(const PriorSpec& spec) {
  const ParametricSpec& p = spec.parametric;
  if (p.k_max < 1) throw std::invalid_argument("prior k_max must be at least 1");
  if (!(p.r_min > 0.0) || !(p.r_max >= p.r_min) || !std::isfinite(p.r_max)) {
    throw std::invalid_argument("prior radius range must satisfy 0 < r_min <= r_max");
  }
  if (!(p.r_max < spec.outer.radius - spec.delta_in())) {
    throw std::invalid_argument("prior r_max leaves no admissible cavity centre");
  }
}

std::vector<DiskCavity> draw_configuration(const PriorSpec& spec, RandomStream& stream) {
  const ParametricSpec& p = spec.parametric;
  const auto count = 1 + static_cast<int>(stream.next_uniform() * p.k_max);
  std::vector<DiskCavity> cavities;
  cavities.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < std::min(count, p.k_max); ++i) {
    const double r = p.r_min + stream.next_uniform() * (p.r_max - p.r_min);
    Point c;
    if (p.fixed_center) {
      c = *p.fixed_center;
    } else {
      const double reach = spec.outer.radius - spec.delta_in() - r;
      const double rho = reach * std::sqrt(stream.next_uniform());
      const double theta = 2.0 * std::numbers::pi * stream.next_uniform();
      c = spec.outer.center + make_point(rho * std::cos(theta), rho * std::sin(theta));
    }
    cavities.push_back(DiskCavity{c, r});
  }
  return cavities;
}

std::optional<ConductorDomain> admissible(const PriorSpec& spec, std::vector<DiskCavity> cavities) {
  try {
    return ConductorDomain(spec.outer, CavitySet{std::move(cavities), spec.delta_sep(), spec.delta_in()});
  } catch (const geometry::GeometryError&) {
    return std::nullopt;
  }
}

}  // namespace

PriorSpec grid_family(const geometry::OuterDomain& outer, const std::vector<double>& xs,
                      const std::vector<double>& ys, double radius) {
  PriorSpec spec;
  spec.mode = PriorSpec::Mode::finite_list;
  spec.outer = outer;
  const double p = 1.0 / static_cast<double>(xs.size() * ys.size());
  for (double x : xs) {
    for (double y : ys) {
      spec.entries.push_back(FiniteEntry{{DiskCavity{outer.center + make_point(x, y), radius}}, p});
    }
  }
  return spec;
}

PriorSpec benchmark_family(const geometry::OuterDomain& outer) {
  const std::vector<double> c{-0.45, -0.15, 0.15, 0.45};
  return grid_family(outer, c, c, 0.2);
}

PriorSpec small_family(const geometry::OuterDomain& outer) {
  return grid_family(outer, {-0.45, -0.15, 0.15, 0.45}, {-0.3, 0.3}, 0.2);
}

PriorEnsemble enumerate_finite(const PriorSpec& spec) {
  if (spec.mode != PriorSpec::Mode::finite_list) throw std::invalid_argument("prior is not a finite list");
  if (spec.entries.empty()) throw std::invalid_argument("finite prior has no domains");
  PriorEnsemble out;
  out.kind = PriorEnsemble::Kind::finite;
  CompensatedSum total;
  for (const auto& e : spec.entries) {
    if (!(e.probability >= 0.0) || !std::isfinite(e.probability)) {
      throw PriorNormalizationError("prior probabilities must be finite and nonnegative");
    }
    total.add(e.probability);
  }
  if (std::abs(total.value() - 1.0) > 1e-12) {
    throw PriorNormalizationError("prior probabilities sum to " + std::to_string(total.value()) + ", not 1");
  }
  for (const auto& e : spec.entries) {
    out.domains.emplace_back(spec.outer, CavitySet{e.cavities, spec.delta_sep(), spec.delta_in()});
    out.masses.push_back(e.probability);
  }
  return out;
}

SampledPrior sample_prior(const PriorSpec& spec, std::size_t k, std::uint64_t seed) {
  if (spec.mode != PriorSpec::Mode::parametric) throw std::invalid_argument("prior is not parametric");
  if (k < 1) throw std::invalid_argument("sample_prior needs k >= 1");
  validate_parametric(spec);

  std::size_t probe_accepted = 0;
  const std::uint64_t probe_seed = derive_seed(seed, "probe");
  for (std::size_t i = 0; i < kProbeBatch; ++i) {
    RandomStream s(probe_seed, i);
    if (admissible(spec, draw_configuration(spec, s))) ++probe_accepted;
  }
  if (probe_accepted * 100 < kProbeBatch) {
    throw PriorInfeasible("prior constraints rejected " + std::to_string(kProbeBatch - probe_accepted) + " of " +
                          std::to_string(kProbeBatch) + " probe draws");
  }

  std::vector<std::optional<ConductorDomain>> drawn(k);
  std::vector<std::size_t> attempts(k, 0);
  parallel_for(k, 0, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RandomStream s(seed, i);
      while (!drawn[i]) {
        if (++attempts[i] > kMaxAttemptsPerDraw) throw PriorInfeasible("prior draw exceeded attempt limit");
        drawn[i] = admissible(spec, draw_configuration(spec, s));
      }
    }
  });

  SampledPrior out;
  out.ensemble.kind = PriorEnsemble::Kind::sampled;
  out.ensemble.domains.reserve(k);
  std::size_t total = 0;
  for (std::size_t i = 0; i < k; ++i) {
    out.ensemble.domains.push_back(std::move(*drawn[i]));
    total += attempts[i];
  }
  out.ensemble.masses.assign(k, 1.0 / static_cast<double>(k));
  out.rejection_rate = static_cast<double>(total - k) / static_cast<double>(total);
  return out;
}

}  // namespace cavity_bayes::priors
