#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cavity_bayes/bayes.hpp"

namespace cavity_bayes::bayes {

/// Bounded nonnegative f(D_k, y), with D_k given by its prior index.
struct TestFunction {
  std::string name;
  std::function<double(std::size_t domain_index, const std::vector<double>& y)> f;
};

/// f = 1, the indicator of the first domain, and eight random bounded
/// functions mixing a per-domain factor with a sigmoid, squared cosine or
/// half-space indicator of a random projection of y. `data_scale` sets the
/// spread of the projections (typically sigma).
[[nodiscard]] std::vector<TestFunction> standard_battery(const EvaluatedPrior& prior, double data_scale,
                                                         std::uint64_t seed);

struct DisintegrationEntry {
  std::string name;
  /// (1/n) sum f(D_i, y_i) over joint draws.
  double joint_mean = 0.0;
  /// (1/n) sum_i sum_k w_k(y_i) f(D_k, y_i).
  double posterior_mean = 0.0;
  double difference = 0.0;
  /// Standard error of the per-sample difference.
  double std_error = 0.0;
  bool pass = false;
};

struct DisintegrationReport {
  std::vector<DisintegrationEntry> entries;
  std::size_t samples = 0;

  [[nodiscard]] bool passed() const;
};

/// Draws (D_i, y_i) from the joint law, D_i ~ mu_0 and y_i = F(D_i) + eta_i
/// (draw i from substream i of `seed`), and compares both sides of the
/// integration identity. An entry passes iff |difference| <= max(3 SE, 1e-12).
[[nodiscard]] DisintegrationReport check_disintegration(const EvaluatedPrior& prior, const NoiseModel& noise,
                                                        const std::vector<TestFunction>& tests,
                                                        std::size_t n_samples, std::uint64_t seed);

}  // namespace cavity_bayes::bayes
