#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>

#include "cavity_bayes/forward.hpp"

namespace cavity_bayes::forward {

/// Canonical JSON descriptions used in cache keys and artifacts.
[[nodiscard]] std::string grid_json(const ObservationGrid& grid);
[[nodiscard]] std::string flux_json(const BoundaryFlux& flux);
/// Excludes the worker count, which never affects results.
[[nodiscard]] std::string solver_json(const SolverConfig& cfg);

struct ForwardKey {
  std::string domain_hash;
  ObservationGrid grid;
  BoundaryFlux flux;
  SolverConfig solver;
  bool stop_at_cavity = true;

  [[nodiscard]] std::string cfg_digest() const;
  /// Digest of every field; names the cache file.
  [[nodiscard]] std::string digest() const;
};

class MissingForwardValue : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// In-memory map of forward values, optionally persisted as one JSON file per
/// key: {schema_version, domain_hash, grid, psi, cfg_digest, stop_at_cavity,
/// y, se, base_seed}. Concurrent lookups, exclusive stores.
class ForwardCache {
 public:
  ForwardCache() = default;
  explicit ForwardCache(std::filesystem::path directory);

  [[nodiscard]] std::optional<ObservationVector> lookup(const ForwardKey& key);
  void store(const ForwardKey& key, const ObservationVector& value);

  [[nodiscard]] std::size_t hits() const { return hits_.load(); }
  [[nodiscard]] std::size_t misses() const { return misses_.load(); }
  [[nodiscard]] const std::optional<std::filesystem::path>& directory() const { return directory_; }

  [[nodiscard]] static std::string to_json(const ForwardKey& key, const ObservationVector& value);
  /// Parses a cache file body; throws std::runtime_error on schema mismatch.
  [[nodiscard]] static ObservationVector from_json(const std::string& text, const ForwardKey* expected = nullptr);

 private:
  std::optional<std::filesystem::path> directory_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, ObservationVector> entries_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

/// Anything that maps a conductor to F(D).
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;
  [[nodiscard]] virtual ObservationVector evaluate(const geometry::ConductorDomain& domain) = 0;
};

/// F(D) through a ForwardCache; simulates on a miss unless computation is
/// disabled, in which case a miss throws MissingForwardValue.
class CachedForward final : public ForwardModel {
 public:
  CachedForward(ForwardCache& cache, ObservationGrid grid, BoundaryFlux flux, SolverConfig solver,
                bool allow_compute = true);

  [[nodiscard]] ObservationVector evaluate(const geometry::ConductorDomain& domain) override;
  [[nodiscard]] ObservationVector evaluate(const geometry::ConductorDomain& domain, const BoundaryFlux& flux,
                                           bool stop_at_cavity);
  /// C_F from cached unstopped psi_+ / psi_- evaluations on the cavity-free
  /// conductor.
  [[nodiscard]] ForwardBound bound(const geometry::OuterDomain& outer);

  [[nodiscard]] std::size_t simulations() const { return simulations_.load(); }
  [[nodiscard]] const ObservationGrid& grid() const { return grid_; }
  [[nodiscard]] const BoundaryFlux& flux() const { return flux_; }
  [[nodiscard]] const SolverConfig& solver() const { return solver_; }

 private:
  ForwardCache& cache_;
  ObservationGrid grid_;
  BoundaryFlux flux_;
  SolverConfig solver_;
  bool allow_compute_;
  std::atomic<std::size_t> simulations_{0};
};

}  // namespace cavity_bayes::forward
