#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>

#include "cavity_bayes/pipeline.hpp"

namespace cavity_bayes::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolation = 2;

enum class Command { run, verify_bounds, ratio_field, check_disintegration, average, approx_lemma };

[[nodiscard]] std::vector<Stage> command_stages(Command c, const ExperimentConfig& cfg);

/// Runs the stages behind `c`, prints a summary to `out` and diagnostics to
/// `err`. Returns kExitOk, kExitViolation or kExitError.
int run_command(Command c, const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out,
                std::ostream& err);

/// Loads the config, applies the seed override and runs the command.
int run_command(Command c, const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);

struct ForwardRequest {
  std::filesystem::path domain;
  std::filesystem::path grid;
  std::size_t paths = 1000;
  double step = 1e-3;
  std::uint64_t seed = 0;
  forward::CrossingCheck crossing = forward::CrossingCheck::endpoint;
  std::filesystem::path out_dir = "cache";
};

/// F(D) for one domain file, stored in the cache directory.
int cmd_forward(const ForwardRequest& req, std::ostream& out, std::ostream& err);

}  // namespace cavity_bayes::harness
