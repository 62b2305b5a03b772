#include "cavity_bayes/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "cavity_bayes/digest.hpp"
#include "cavity_bayes/parallel.hpp"
#include "cavity_bayes/random.hpp"

namespace cavity_bayes::bayes {

namespace {

double log_gaussian_constant(const NoiseModel& noise) {
  return -0.5 * static_cast<double>(noise.m) * std::log(2.0 * std::numbers::pi * noise.sigma * noise.sigma);
}

void require_same_support(const PosteriorEnsemble& a, const PosteriorEnsemble& b) {
  if (a.domains.size() != b.domains.size() || a.prior_masses != b.prior_masses) {
    throw SupportMismatch("posteriors are built on different prior ensembles");
  }
  for (std::size_t k = 0; k < a.domains.size(); ++k) {
    if (a.domains[k].hash() != b.domains[k].hash()) {
      throw SupportMismatch("posteriors are built on different prior ensembles");
    }
  }
}

std::vector<double> gaussians(RandomStream& stream, std::size_t n) {
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; i += 2) {
    const auto [a, b] = stream.next_gaussian_pair();
    z[i] = a;
    if (i + 1 < n) z[i + 1] = b;
  }
  return z;
}

std::size_t draw_index(RandomStream& stream, const std::vector<double>& masses) {
  const double u = stream.next_uniform();
  CompensatedSum acc;
  for (std::size_t k = 0; k < masses.size(); ++k) {
    acc.add(masses[k]);
    if (u < acc.value()) return k;
  }
  return masses.size() - 1;
}

std::vector<double> log_potentials(const EvaluatedPrior& prior, const std::vector<double>& y,
                                   const NoiseModel& noise) {
  std::vector<double> out(prior.size());
  for (std::size_t k = 0; k < prior.size(); ++k) out[k] = log_potential(y, prior.forward_values[k], noise);
  return out;
}

}  // namespace

void NoiseModel::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("noise sigma must be positive");
}

double log_potential(const std::vector<double>& y, const std::vector<double>& f, const NoiseModel& noise) {
  if (y.size() != f.size()) throw std::invalid_argument("data and forward value differ in length");
  const double d = euclidean_distance(y, f);
  return -(d * d) / (2.0 * noise.sigma * noise.sigma);
}

double potential(const std::vector<double>& y, const std::vector<double>& f, const NoiseModel& noise) {
  return std::exp(log_potential(y, f, noise));
}

double potential(const geometry::ConductorDomain& domain, const std::vector<double>& y, const NoiseModel& noise,
                 forward::ForwardModel& fwd) {
  return potential(y, fwd.evaluate(domain).values, noise);
}

EvaluatedPrior evaluate_prior(PriorEnsemble prior, forward::ForwardModel& fwd) {
  EvaluatedPrior out;
  out.forward_values.reserve(prior.size());
  for (const auto& d : prior.domains) out.forward_values.push_back(fwd.evaluate(d).values);
  out.prior = std::move(prior);
  return out;
}

Evidence evidence(const EvaluatedPrior& prior, const std::vector<double>& y, const NoiseModel& noise) {
  const PosteriorEnsemble post = posterior(prior, y, noise);
  return Evidence{post.evidence, post.log_evidence, post.evidence_std_error};
}

PosteriorEnsemble posterior(const EvaluatedPrior& prior, const std::vector<double>& y, const NoiseModel& noise,
                            PotentialNormalization kind) {
  noise.validate();
  if (prior.size() == 0) throw std::invalid_argument("prior is empty");
  const std::size_t n = prior.size();
  const std::vector<double> log_phi = log_potentials(prior, y, noise);

  std::vector<double> la(n, -std::numeric_limits<double>::infinity());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (prior.prior.masses[k] > 0.0) la[k] = std::log(prior.prior.masses[k]) + log_phi[k];
    top = std::max(top, la[k]);
  }
  std::vector<double> scaled(n);
  for (std::size_t k = 0; k < n; ++k) scaled[k] = std::exp(la[k] - top);
  const double total = compensated_sum(scaled);

  PosteriorEnsemble post;
  post.domains = prior.prior.domains;
  post.prior_masses = prior.prior.masses;
  post.weights.resize(n);
  for (std::size_t k = 0; k < n; ++k) post.weights[k] = scaled[k] / total;
  const double shift = kind == PotentialNormalization::gaussian_density ? log_gaussian_constant(noise) : 0.0;
  post.log_evidence = top + std::log(total) + shift;
  post.evidence = std::exp(post.log_evidence);
  post.normalized = kind == PotentialNormalization::gaussian_density;

  if (prior.prior.kind == PriorEnsemble::Kind::sampled && n > 1) {
    const double phi_top = *std::max_element(log_phi.begin(), log_phi.end());
    std::vector<double> rel(n);
    for (std::size_t k = 0; k < n; ++k) rel[k] = std::exp(log_phi[k] - phi_top);
    post.evidence_std_error = sample_moments(rel).std_error * std::exp(phi_top + shift);
  }
  return post;
}

std::vector<double> direct_weights(const EvaluatedPrior& prior, const std::vector<double>& y,
                                   const NoiseModel& noise, PotentialNormalization kind) {
  noise.validate();
  const std::size_t n = prior.size();
  const double c = kind == PotentialNormalization::gaussian_density ? std::exp(log_gaussian_constant(noise)) : 1.0;
  std::vector<double> mass(n);
  for (std::size_t k = 0; k < n; ++k) mass[k] = prior.prior.masses[k] * (c * potential(y, prior.forward_values[k], noise));
  const double z = compensated_sum(mass);
  if (!(z > 0.0) || !std::isfinite(z)) return posterior(prior, y, noise, kind).weights;
  for (double& w : mass) w /= z;
  return mass;
}

double dual_construction_discrepancy(const EvaluatedPrior& prior, const std::vector<double>& y,
                                     const NoiseModel& noise) {
  const auto phi = direct_weights(prior, y, noise, PotentialNormalization::potential);
  const auto psi = direct_weights(prior, y, noise, PotentialNormalization::gaussian_density);
  double worst = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) worst = std::max(worst, std::abs(phi[k] - psi[k]));
  return worst;
}

std::string PosteriorEnsemble::id() const {
  nlohmann::json j;
  j["domains"] = nlohmann::json::array();
  for (const auto& d : domains) j["domains"].push_back(d.hash());
  j["weights"] = weights;
  j["normalized"] = normalized;
  return sha256_hex(j.dump());
}

std::vector<Point> ratio_grid(const geometry::OuterDomain& outer, std::size_t n) {
  if (n == 0) throw std::invalid_argument("ratio grid needs at least one point per side");
  std::vector<Point> pts;
  pts.reserve(n * n);
  const double cell = 2.0 * outer.radius / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      pts.push_back(outer.center + make_point(-outer.radius + (static_cast<double>(i) + 0.5) * cell,
                                              -outer.radius + (static_cast<double>(j) + 0.5) * cell));
    }
  }
  return pts;
}

DomainRatioField domain_ratio(const PosteriorEnsemble& post, const std::vector<Point>& points) {
  DomainRatioField field;
  field.points = points;
  field.rho.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CompensatedSum s;
    for (std::size_t k = 0; k < post.domains.size(); ++k) {
      if (post.domains[k].contains(points[i])) s.add(post.weights[k]);
    }
    field.rho[i] = std::clamp(s.value(), 0.0, 1.0);
  }
  field.provenance = post.id();
  return field;
}

double hellinger(const PosteriorEnsemble& a, const PosteriorEnsemble& b) {
  require_same_support(a, b);
  CompensatedSum s;
  for (std::size_t k = 0; k < a.weights.size(); ++k) {
    const double d = std::sqrt(a.weights[k]) - std::sqrt(b.weights[k]);
    s.add(d * d);
  }
  return std::sqrt(0.5 * s.value());
}

double l1_distance(const PosteriorEnsemble& a, const PosteriorEnsemble& b) {
  require_same_support(a, b);
  CompensatedSum s;
  for (std::size_t k = 0; k < a.weights.size(); ++k) s.add(std::abs(a.weights[k] - b.weights[k]));
  return s.value();
}

double sigma_sup(const std::vector<double>& y, const std::vector<double>& y_prime,
                 const std::vector<std::vector<double>>& family) {
  if (family.empty()) throw std::invalid_argument("sigma_sup needs a nonempty family");
  double worst = 0.0;
  for (const auto& f : family) {
    worst = std::max({worst, euclidean_distance(y, f), euclidean_distance(y_prime, f)});
  }
  return worst;
}

double sigma_sup_bound(const std::vector<double>& y, const std::vector<double>& y_prime, double c_f) {
  return std::max(euclidean_norm(y), euclidean_norm(y_prime)) + c_f;
}

double stability_rhs_hellinger(double dy_norm, double sigma, double sigma_sup) {
  if (!(sigma > 0.0)) throw std::invalid_argument("noise sigma must be positive");
  if (dy_norm == 0.0 || sigma_sup == 0.0) return 0.0;
  const double r = sigma_sup / sigma;
  return std::exp(0.75 * r * r) * r * (dy_norm / sigma);
}

double stability_rhs_hellinger(const std::vector<double>& y, const std::vector<double>& y_prime, double sigma,
                               double sigma_sup) {
  return stability_rhs_hellinger(euclidean_distance(y, y_prime), sigma, sigma_sup);
}

double stability_rhs_ratio(double dy_norm, double sigma, double sigma_sup) {
  if (!(sigma > 0.0)) throw std::invalid_argument("noise sigma must be positive");
  if (dy_norm == 0.0 || sigma_sup == 0.0) return 0.0;
  const double r = sigma_sup / sigma;
  return 2.0 * std::exp(0.5 * r * r) * r * (dy_norm / sigma);
}

double stability_rhs_ratio(const std::vector<double>& y, const std::vector<double>& y_prime, double sigma,
                           double sigma_sup) {
  return stability_rhs_ratio(euclidean_distance(y, y_prime), sigma, sigma_sup);
}

StabilityReport verify_stability(const EvaluatedPrior& prior, const std::vector<DataPair>& pairs,
                                 const NoiseModel& noise, const std::vector<Point>& ratio_points,
                                 std::optional<double> c_f) {
  const bool exact = prior.prior.kind == PriorEnsemble::Kind::finite;
  if (!exact && !c_f) throw std::invalid_argument("verify_stability on a sampled prior needs C_F");
  const std::size_t n = prior.size();
  // membership[i * n + k] = chi_{D_k}(x_i)
  std::vector<unsigned char> membership(ratio_points.size() * n);
  for (std::size_t i = 0; i < ratio_points.size(); ++i) {
    for (std::size_t k = 0; k < n; ++k) membership[i * n + k] = prior.prior.domains[k].contains(ratio_points[i]);
  }
  const auto rho = [&](const PosteriorEnsemble& post, std::size_t i) {
    CompensatedSum s;
    for (std::size_t k = 0; k < n; ++k) {
      if (membership[i * n + k]) s.add(post.weights[k]);
    }
    return s.value();
  };

  StabilityReport report;
  report.records.resize(pairs.size());
  parallel_for(pairs.size(), 0, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const DataPair& pair = pairs[p];
      const PosteriorEnsemble a = posterior(prior, pair.y, noise);
      const PosteriorEnsemble b = posterior(prior, pair.y_prime, noise);
      StabilityRecord& r = report.records[p];
      r.pair_id = p;
      r.dy_norm = euclidean_distance(pair.y, pair.y_prime);
      r.sigma_sup = exact ? sigma_sup(pair.y, pair.y_prime, prior.forward_values)
                          : sigma_sup_bound(pair.y, pair.y_prime, *c_f);
      r.hell = hellinger(a, b);
      r.l1 = l1_distance(a, b);
      for (std::size_t i = 0; i < ratio_points.size(); ++i) r.max_drho = std::max(r.max_drho, std::abs(rho(a, i) - rho(b, i)));
      r.rhs_hell = stability_rhs_hellinger(r.dy_norm, noise.sigma, r.sigma_sup);
      r.rhs_ratio = stability_rhs_ratio(r.dy_norm, noise.sigma, r.sigma_sup);
      r.margin_hell = r.rhs_hell - r.hell;
      r.margin_ratio = r.rhs_ratio - r.max_drho;
      r.hell_violation = r.hell > r.rhs_hell * (1.0 + kBoundRelativeTolerance);
      r.ratio_violation = r.max_drho > r.rhs_ratio * (1.0 + kBoundRelativeTolerance);
      r.chain_violation = r.l1 > 2.0 * std::numbers::sqrt2 * r.hell + kChainTolerance ||
                          r.max_drho > r.l1 + kChainTolerance;
    }
  });
  for (const auto& r : report.records) {
    report.hellinger_violations += r.hell_violation;
    report.ratio_violations += r.ratio_violation;
    report.chain_violations += r.chain_violation;
  }
  return report;
}

std::vector<DataPair> generate_pairs(const EvaluatedPrior& prior, const NoiseModel& noise, const PairPolicy& policy,
                                     std::size_t count, std::uint64_t seed) {
  noise.validate();
  if (prior.size() == 0) throw std::invalid_argument("prior is empty");
  if (policy.kind == PairPolicy::Kind::ball && !(policy.norm_cap > 0.0)) {
    throw std::invalid_argument("ball pair policy needs a positive norm cap");
  }
  if (!(policy.scale_min > 0.0) || !(policy.scale_max >= policy.scale_min)) {
    throw std::invalid_argument("pair perturbation scales must satisfy 0 < min <= max");
  }
  const std::size_t m = prior.forward_values.front().size();
  const auto within_cap = [&](const std::vector<double>& v) {
    return policy.norm_cap <= 0.0 || euclidean_norm(v) <= policy.norm_cap;
  };
  const auto ball_point = [&](RandomStream& s) {
    std::vector<double> z = gaussians(s, m);
    const double len = euclidean_norm(z);
    const double radius = policy.norm_cap * std::pow(s.next_uniform(), 1.0 / static_cast<double>(m));
    for (double& v : z) v *= radius / len;
    return z;
  };

  std::vector<DataPair> pairs(count);
  parallel_for(count, 0, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RandomStream s(seed, i);
      for (int attempt = 0;; ++attempt) {
        if (attempt >= 10000) throw std::runtime_error("could not draw a data pair within the norm cap");
        DataPair p;
        if (policy.kind == PairPolicy::Kind::ball) {
          p.y = ball_point(s);
          p.y_prime = ball_point(s);
        } else {
          const std::size_t k = draw_index(s, prior.prior.masses);
          const std::vector<double> eta = gaussians(s, m);
          p.y = prior.forward_values[k];
          for (std::size_t c = 0; c < m; ++c) p.y[c] += noise.sigma * eta[c];
          std::vector<double> dir = gaussians(s, m);
          const double len = euclidean_norm(dir);
          const double lo = std::log(policy.scale_min);
          const double hi = std::log(policy.scale_max);
          const double step = noise.sigma * std::exp(lo + s.next_uniform() * (hi - lo));
          p.y_prime = p.y;
          for (std::size_t c = 0; c < m; ++c) p.y_prime[c] += step * dir[c] / len;
        }
        if (within_cap(p.y) && within_cap(p.y_prime)) {
          pairs[i] = std::move(p);
          break;
        }
      }
    }
  });
  return pairs;
}

ObservationVector average_observations(const std::vector<ObservationVector>& ys) {
  if (ys.empty()) throw std::invalid_argument("cannot average an empty list of observations");
  const std::size_t m = ys.front().size();
  ObservationVector out;
  out.grid = ys.front().grid;
  out.values.resize(m);
  for (const auto& y : ys) {
    if (y.size() != m) throw std::invalid_argument("observations differ in length");
  }
  for (std::size_t c = 0; c < m; ++c) {
    CompensatedSum s;
    for (const auto& y : ys) s.add(y.values[c]);
    out.values[c] = s.value() / static_cast<double>(ys.size());
  }
  return out;
}

std::vector<double> add_noise(const std::vector<double>& y, const NoiseModel& noise, std::uint64_t seed,
                              std::uint64_t stream_id) {
  noise.validate();
  RandomStream s(seed, stream_id);
  const std::vector<double> eta = gaussians(s, y.size());
  std::vector<double> out = y;
  for (std::size_t c = 0; c < y.size(); ++c) out[c] += noise.sigma * eta[c];
  return out;
}

ObservationVector simulate_data(const geometry::ConductorDomain& truth, forward::ForwardModel& fwd,
                                const std::optional<NoiseModel>& noise, std::uint64_t seed,
                                std::uint64_t replicate) {
  const ObservationVector f = fwd.evaluate(truth);
  ObservationVector y;
  y.grid = f.grid;
  y.values = noise ? add_noise(f.values, *noise, seed, replicate) : f.values;
  return y;
}

double default_sigma(const std::vector<std::vector<double>>& family, double fraction) {
  if (family.empty()) throw std::invalid_argument("default_sigma needs a nonempty family");
  if (!(fraction > 0.0)) throw std::invalid_argument("noise fraction must be positive");
  double range = 0.0;
  double scale = 0.0;
  for (std::size_t c = 0; c < family.front().size(); ++c) {
    double lo = family.front()[c];
    double hi = lo;
    for (const auto& f : family) {
      lo = std::min(lo, f[c]);
      hi = std::max(hi, f[c]);
      scale = std::max(scale, std::abs(f[c]));
    }
    range = std::max(range, hi - lo);
  }
  if (range > 0.0) return fraction * range;
  if (scale > 0.0) return fraction * scale;
  return fraction;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of an empty list");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<AveragingRow> averaging_study(const EvaluatedPrior& prior, const std::vector<double>& f_true,
                                          const NoiseModel& noise, const std::vector<std::size_t>& replicate_counts,
                                          std::size_t seeds, std::uint64_t seed) {
  noise.validate();
  if (!std::is_sorted(replicate_counts.begin(), replicate_counts.end()) || replicate_counts.empty() ||
      replicate_counts.front() < 1) {
    throw std::invalid_argument("replicate counts must be positive and ascending");
  }
  const PosteriorEnsemble reference = posterior(prior, f_true, noise);
  const std::size_t m = f_true.size();
  std::vector<AveragingRow> rows(replicate_counts.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    rows[j].replicates = replicate_counts[j];
    rows[j].hellinger.resize(seeds);
  }
  parallel_for(seeds, 0, [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      RandomStream stream(seed, s);
      std::vector<CompensatedSum> sums(m);
      std::size_t drawn = 0;
      for (std::size_t j = 0; j < rows.size(); ++j) {
        for (; drawn < replicate_counts[j]; ++drawn) {
          const std::vector<double> eta = gaussians(stream, m);
          for (std::size_t c = 0; c < m; ++c) sums[c].add(f_true[c] + noise.sigma * eta[c]);
        }
        std::vector<double> ybar(m);
        for (std::size_t c = 0; c < m; ++c) ybar[c] = sums[c].value() / static_cast<double>(drawn);
        rows[j].hellinger[s] = hellinger(posterior(prior, ybar, noise), reference);
      }
    }
  });
  for (auto& row : rows) row.median_hellinger = median(row.hellinger);
  return rows;
}

}  // namespace cavity_bayes::bayes
