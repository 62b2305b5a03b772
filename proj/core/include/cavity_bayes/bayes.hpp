#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavity_bayes/forward_cache.hpp"
#include "cavity_bayes/priors.hpp"

namespace cavity_bayes::bayes {

using priors::PriorEnsemble;

/// eta_i ~ N(0, sigma^2), i = 1..m.
struct NoiseModel {
  double sigma = 1.0;
  std::size_t m = 0;

  void validate() const;
};

class SupportMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// -||y - F||^2 / (2 sigma^2).
[[nodiscard]] double log_potential(const std::vector<double>& y, const std::vector<double>& f,
                                   const NoiseModel& noise);
/// exp(log_potential), in (0, 1].
[[nodiscard]] double potential(const std::vector<double>& y, const std::vector<double>& f, const NoiseModel& noise);
[[nodiscard]] double potential(const geometry::ConductorDomain& domain, const std::vector<double>& y,
                               const NoiseModel& noise, forward::ForwardModel& fwd);

/// A prior together with F(D_k) for each of its domains.
struct EvaluatedPrior {
  PriorEnsemble prior;
  std::vector<std::vector<double>> forward_values;

  [[nodiscard]] std::size_t size() const { return prior.size(); }
};

[[nodiscard]] EvaluatedPrior evaluate_prior(PriorEnsemble prior, forward::ForwardModel& fwd);

struct Evidence {
  double value = 0.0;
  double log_value = 0.0;
  /// Zero for finite priors; Monte Carlo standard error for sampled priors.
  double std_error = 0.0;
};

/// Z(y) = sum_k p_k Phi(D_k; y).
[[nodiscard]] Evidence evidence(const EvaluatedPrior& prior, const std::vector<double>& y, const NoiseModel& noise);

enum class PotentialNormalization {
  /// Phi, Z.
  potential,
  /// Psi = (2 pi sigma^2)^{-m/2} Phi, Z_Psi.
  gaussian_density,
};

/// mu^y on the prior support.
struct PosteriorEnsemble {
  std::vector<geometry::ConductorDomain> domains;
  std::vector<double> prior_masses;
  std::vector<double> weights;
  double evidence = 0.0;
  double log_evidence = 0.0;
  double evidence_std_error = 0.0;
  /// True when the Gaussian constant is included (Psi, Z_Psi).
  bool normalized = false;

  /// Digest of the domain hashes and weights.
  [[nodiscard]] std::string id() const;
};

/// Weights p_k Phi_k / Z, computed in log space with max-log normalization.
[[nodiscard]] PosteriorEnsemble posterior(const EvaluatedPrior& prior, const std::vector<double>& y,
                                          const NoiseModel& noise,
                                          PotentialNormalization kind = PotentialNormalization::potential);

/// Direct (linear-space) construction p_k Psi_k / Z_Psi or p_k Phi_k / Z, used
/// to cross-check the log-space weights.
[[nodiscard]] std::vector<double> direct_weights(const EvaluatedPrior& prior, const std::vector<double>& y,
                                                 const NoiseModel& noise, PotentialNormalization kind);

/// max_k |w_k(Phi) - w_k(Psi)| between the two direct constructions.
[[nodiscard]] double dual_construction_discrepancy(const EvaluatedPrior& prior, const std::vector<double>& y,
                                                   const NoiseModel& noise);

struct DomainRatioField {
  std::vector<Point> points;
  std::vector<double> rho;
  std::string provenance;
};

/// n x n cell centres of the square [c - R, c + R]^2 around the outer disk,
/// x-major.
[[nodiscard]] std::vector<Point> ratio_grid(const geometry::OuterDomain& outer, std::size_t n);

/// rho(x|y) = sum_k w_k chi_{D_k}(x).
[[nodiscard]] DomainRatioField domain_ratio(const PosteriorEnsemble& post, const std::vector<Point>& points);

/// sqrt(1/2 sum_k (sqrt(w_k) - sqrt(w'_k))^2). Throws SupportMismatch unless
/// both posteriors share domains and prior masses.
[[nodiscard]] double hellinger(const PosteriorEnsemble& a, const PosteriorEnsemble& b);
/// sum_k |w_k - w'_k|.
[[nodiscard]] double l1_distance(const PosteriorEnsemble& a, const PosteriorEnsemble& b);

/// max over the family of max(||y - F(D)||, ||y' - F(D)||).
[[nodiscard]] double sigma_sup(const std::vector<double>& y, const std::vector<double>& y_prime,
                               const std::vector<std::vector<double>>& family);
/// max(||y||, ||y'||) + C_F.
[[nodiscard]] double sigma_sup_bound(const std::vector<double>& y, const std::vector<double>& y_prime, double c_f);

/// exp(3 s^2 / 4 sigma^2) (s / sigma) (||y - y'|| / sigma), s = sigma_sup.
[[nodiscard]] double stability_rhs_hellinger(double dy_norm, double sigma, double sigma_sup);
[[nodiscard]] double stability_rhs_hellinger(const std::vector<double>& y, const std::vector<double>& y_prime,
                                             double sigma, double sigma_sup);
/// 2 exp(s^2 / 2 sigma^2) (s / sigma) (||y - y'|| / sigma).
[[nodiscard]] double stability_rhs_ratio(double dy_norm, double sigma, double sigma_sup);
[[nodiscard]] double stability_rhs_ratio(const std::vector<double>& y, const std::vector<double>& y_prime,
                                         double sigma, double sigma_sup);

struct DataPair {
  std::vector<double> y;
  std::vector<double> y_prime;
};

struct StabilityRecord {
  std::size_t pair_id = 0;
  double dy_norm = 0.0;
  double sigma_sup = 0.0;
  double hell = 0.0;
  double rhs_hell = 0.0;
  double l1 = 0.0;
  double max_drho = 0.0;
  double rhs_ratio = 0.0;
  double margin_hell = 0.0;
  double margin_ratio = 0.0;
  bool hell_violation = false;
  bool ratio_violation = false;
  bool chain_violation = false;
};

struct StabilityReport {
  std::vector<StabilityRecord> records;
  std::size_t hellinger_violations = 0;
  std::size_t ratio_violations = 0;
  /// L1 <= 2 sqrt(2) d_Hell or max |drho| <= L1 failing beyond 1e-12.
  std::size_t chain_violations = 0;

  [[nodiscard]] std::size_t violations() const {
    return hellinger_violations + ratio_violations + chain_violations;
  }
};

inline constexpr double kBoundRelativeTolerance = 1e-9;
inline constexpr double kChainTolerance = 1e-12;

/// Evaluates both stability bounds on every pair. Finite priors use the
/// exact sigma_sup of the family; sampled priors need `c_f` and use the upper
/// bound max(|y|, |y'|) + C_F, which keeps the check sound.
[[nodiscard]] StabilityReport verify_stability(const EvaluatedPrior& prior, const std::vector<DataPair>& pairs,
                                               const NoiseModel& noise, const std::vector<Point>& ratio_points,
                                               std::optional<double> c_f = std::nullopt);

struct PairPolicy {
  enum class Kind {
    /// y = F(D_k) + eta, y' = y + s u with |u| = 1, s log-uniform on
    /// [scale_min sigma, scale_max sigma].
    perturbed,
    /// y, y' uniform in the ball of radius norm_cap.
    ball,
  };
  Kind kind = Kind::perturbed;
  double scale_min = 1e-3;
  double scale_max = 1.0;
  /// Both data vectors are kept within this norm (3 C_F by default).
  double norm_cap = 0.0;
};

/// `count` pairs, pair i from substream i of `seed`.
[[nodiscard]] std::vector<DataPair> generate_pairs(const EvaluatedPrior& prior, const NoiseModel& noise,
                                                   const PairPolicy& policy, std::size_t count, std::uint64_t seed);

/// Componentwise mean; throws std::invalid_argument on an empty or ragged list.
[[nodiscard]] ObservationVector average_observations(const std::vector<ObservationVector>& ys);

/// y + eta with eta from substream `stream_id` of `seed`.
[[nodiscard]] std::vector<double> add_noise(const std::vector<double>& y, const NoiseModel& noise,
                                            std::uint64_t seed, std::uint64_t stream_id);

/// F(D_true) + eta, or F(D_true) when `noise` is empty.
[[nodiscard]] ObservationVector simulate_data(const geometry::ConductorDomain& truth, forward::ForwardModel& fwd,
                                              const std::optional<NoiseModel>& noise, std::uint64_t seed,
                                              std::uint64_t replicate = 0);

/// sigma as a fraction of the largest componentwise range of F over the
/// family; falls back to the fraction of max |F| when the range vanishes.
[[nodiscard]] double default_sigma(const std::vector<std::vector<double>>& family, double fraction = 0.05);

struct AveragingRow {
  std::size_t replicates = 0;
  double median_hellinger = 0.0;
  std::vector<double> hellinger;
};

/// For each seed s < seeds, the first N of a nested replicate sequence
/// F(D_true) + eta_r are averaged and the posterior compared with the
/// noise-free posterior.
[[nodiscard]] std::vector<AveragingRow> averaging_study(const EvaluatedPrior& prior,
                                                        const std::vector<double>& f_true, const NoiseModel& noise,
                                                        const std::vector<std::size_t>& replicate_counts,
                                                        std::size_t seeds, std::uint64_t seed);

[[nodiscard]] double median(std::vector<double> xs);

}  // namespace cavity_bayes::bayes
