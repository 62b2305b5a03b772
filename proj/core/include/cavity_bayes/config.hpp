#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavity_bayes/bayes.hpp"
#include "cavity_bayes/priors.hpp"

namespace cavity_bayes::harness {

/// Malformed or invalid configuration, with the offending field and, when
/// known, its line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message, std::optional<int> line = std::nullopt);

  std::string field;
  std::optional<int> line;
};

struct NoiseSpec {
  bool enabled = true;
  /// Absolute sigma; when unset, `relative` times the range of F over the prior.
  std::optional<double> sigma;
  double relative = 0.05;
};

struct TruthSpec {
  std::optional<std::size_t> family_index;
  std::vector<geometry::DiskCavity> cavities;
};

struct StabilitySpec {
  bool enabled = true;
  std::size_t pairs = 100;
  bayes::PairPolicy policy;
  /// Data norms are capped at norm_cap_factor * C_F.
  double norm_cap_factor = 3.0;
};

struct RatioSpec {
  bool enabled = true;
  std::size_t resolution = 64;
};

struct DisintegrationSpec {
  bool enabled = false;
  std::size_t samples = 100000;
};

struct AveragingSpec {
  bool enabled = false;
  std::vector<std::size_t> replicates{1, 4, 16, 64};
  std::size_t seeds = 50;
};

struct LemmaSpec {
  std::size_t domains = 100;
  std::vector<double> eps{0.25, 0.125, 0.0625, 0.03125, 0.015625};
  priors::ParametricSpec shapes{3, 0.05, 0.3, std::nullopt};
};

struct ExperimentConfig {
  std::string scenario = "experiment";
  std::uint64_t seed = 0;
  geometry::OuterDomain outer;
  forward::BoundaryFlux flux;
  ObservationGrid grid;
  forward::SolverConfig solver;
  /// Solver stream seed given explicitly instead of derived from `seed`.
  bool solver_seed_explicit = false;
  NoiseSpec noise;
  priors::PriorSpec prior;
  /// Ensemble size for parametric priors.
  std::size_t prior_samples = 64;
  TruthSpec truth;
  StabilitySpec stability;
  RatioSpec ratio;
  DisintegrationSpec disintegration;
  AveragingSpec averaging;
  LemmaSpec lemma;
  std::optional<std::filesystem::path> cache_directory;
  bool allow_compute = true;

  /// Replaces the global seed and every seed derived from it.
  void reseed(std::uint64_t new_seed);
};

/// Parses TOML text; `source` labels diagnostics.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text, const std::string& source = "config");
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Observation grid (and optional [outer] and [flux]) from a grid TOML file.
struct GridFile {
  ObservationGrid grid;
  std::optional<forward::BoundaryFlux> flux;
};
[[nodiscard]] GridFile load_grid_file(const std::filesystem::path& path);

/// Canonical JSON of every field that influences results.
[[nodiscard]] std::string canonical_config_json(const ExperimentConfig& cfg);
[[nodiscard]] std::string config_digest(const ExperimentConfig& cfg);

}  // namespace cavity_bayes::harness
