#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavity_bayes/config.hpp"
#include "cavity_bayes/disintegration.hpp"

namespace cavity_bayes::harness {

inline constexpr int kArtifactSchemaVersion = 1;

enum class Stage { forward, data, posterior, ratio, stability, disintegration, averaging, lemma };

[[nodiscard]] const char* stage_name(Stage s);

/// Library version recorded in manifests.
[[nodiscard]] const char* library_version();

/// An error raised inside a pipeline stage.
class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& message);
  Stage stage;
};

struct LemmaRecord {
  std::size_t domain_id = 0;
  double eps = 0.0;
  double hausdorff = 0.0;
  /// hausdorff / eps, to be compared with sqrt(2).
  double ratio = 0.0;
  std::size_t cubes = 0;
  std::size_t cube_bound = 0;
  bool violation = false;
};

struct PipelineResult {
  std::filesystem::path out_dir;
  bool complete = false;
  std::optional<Stage> failed_stage;
  std::string error;

  double sigma = 0.0;
  double c_f = 0.0;
  double c_f_std_error = 0.0;
  std::optional<bayes::PosteriorEnsemble> posterior;
  std::optional<bayes::StabilityReport> stability;
  std::optional<bayes::DisintegrationReport> disintegration;
  double dual_discrepancy = 0.0;
  std::vector<bayes::AveragingRow> averaging;
  std::vector<LemmaRecord> lemma;

  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t simulations = 0;

  /// Any stability violation, failed disintegration entry, increasing
  /// averaging median or lemma violation.
  [[nodiscard]] bool bound_violation() const;
};

/// Stages run by `run`: forward, data, posterior, then whichever of ratio,
/// stability, disintegration and averaging the config enables.
[[nodiscard]] std::vector<Stage> default_stages(const ExperimentConfig& cfg);

/// Runs `stages` (in pipeline order) and writes their artifacts to `out_dir`
/// together with manifest.json. A failing stage stops the run; the manifest
/// is still written, flagged incomplete, and the StageError is rethrown.
PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                            std::vector<Stage> stages = {});

/// Shortest round-trip decimal form; "inf", "-inf" or "nan" otherwise.
[[nodiscard]] std::string format_number(double v);

}  // namespace cavity_bayes::harness
