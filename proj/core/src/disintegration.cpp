#include "cavity_bayes/disintegration.hpp"

#include <algorithm>
#include <cmath>

#include "cavity_bayes/parallel.hpp"
#include "cavity_bayes/random.hpp"

namespace cavity_bayes::bayes {

namespace {

constexpr double kAbsoluteFloor = 1e-12;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
  return s.value();
}

}  // namespace

bool DisintegrationReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const DisintegrationEntry& e) { return e.pass; });
}

std::vector<TestFunction> standard_battery(const EvaluatedPrior& prior, double data_scale, std::uint64_t seed) {
  if (prior.size() == 0) throw std::invalid_argument("prior is empty");
  if (!(data_scale > 0.0)) throw std::invalid_argument("battery data scale must be positive");
  const std::size_t n = prior.size();
  const std::size_t m = prior.forward_values.front().size();
  std::vector<double> centre(m, 0.0);
  for (const auto& f : prior.forward_values) {
    for (std::size_t c = 0; c < m; ++c) centre[c] += f[c] / static_cast<double>(n);
  }

  std::vector<TestFunction> battery;
  battery.push_back({"one", [](std::size_t, const std::vector<double>&) { return 1.0; }});
  battery.push_back({"indicator_first", [](std::size_t k, const std::vector<double>&) { return k == 0 ? 1.0 : 0.0; }});

  RandomStream s(seed, 0);
  const char* kinds[3] = {"sigmoid", "cos2", "halfspace"};
  for (int j = 0; j < 8; ++j) {
    const int kind = j % 3;
    std::vector<double> factor(n);
    for (double& g : factor) g = s.next_uniform();
    std::vector<double> dir(m);
    for (double& v : dir) v = s.next_gaussian();
    const double len = euclidean_norm(dir);
    for (double& v : dir) v /= len;
    const double offset = dot(dir, centre) + data_scale * s.next_gaussian();
    const double width = data_scale * (0.5 + 1.5 * s.next_uniform());
    battery.push_back({std::string(kinds[kind]) + "_" + std::to_string(j),
                       [=](std::size_t k, const std::vector<double>& y) {
                         const double t = (dot(dir, y) - offset) / width;
                         double h = 0.0;
                         if (kind == 0) h = 1.0 / (1.0 + std::exp(-t));
                         if (kind == 1) h = std::cos(t) * std::cos(t);
                         if (kind == 2) h = t > 0.0 ? 1.0 : 0.0;
                         return factor[k] * h;
                       }});
  }
  return battery;
}

DisintegrationReport check_disintegration(const EvaluatedPrior& prior, const NoiseModel& noise,
                                          const std::vector<TestFunction>& tests, std::size_t n_samples,
                                          std::uint64_t seed) {
  noise.validate();
  if (prior.prior.kind != PriorEnsemble::Kind::finite) {
    throw std::invalid_argument("check_disintegration needs a finite prior");
  }
  if (n_samples < 2) throw std::invalid_argument("check_disintegration needs at least two samples");
  const std::size_t n = prior.size();
  const std::size_t m = prior.forward_values.front().size();
  const std::size_t nt = tests.size();

  // joint[t * n_samples + i], cond[t * n_samples + i]
  std::vector<double> joint(nt * n_samples);
  std::vector<double> cond(nt * n_samples);
  parallel_for(n_samples, 0, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RandomStream s(seed, i);
      const double u = s.next_uniform();
      std::size_t k = n - 1;
      CompensatedSum acc;
      for (std::size_t c = 0; c < n; ++c) {
        acc.add(prior.prior.masses[c]);
        if (u < acc.value()) {
          k = c;
          break;
        }
      }
      std::vector<double> y = prior.forward_values[k];
      for (std::size_t c = 0; c < m; c += 2) {
        const auto [a, b] = s.next_gaussian_pair();
        y[c] += noise.sigma * a;
        if (c + 1 < m) y[c + 1] += noise.sigma * b;
      }
      const PosteriorEnsemble post = posterior(prior, y, noise);
      for (std::size_t t = 0; t < nt; ++t) {
        joint[t * n_samples + i] = tests[t].f(k, y);
        CompensatedSum e;
        for (std::size_t c = 0; c < n; ++c) e.add(post.weights[c] * tests[t].f(c, y));
        cond[t * n_samples + i] = e.value();
      }
    }
  });

  DisintegrationReport report;
  report.samples = n_samples;
  std::vector<double> diff(n_samples);
  for (std::size_t t = 0; t < nt; ++t) {
    const std::span<const double> js(joint.data() + t * n_samples, n_samples);
    const std::span<const double> cs(cond.data() + t * n_samples, n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) diff[i] = js[i] - cs[i];
    const SampleMoments d = sample_moments(diff);
    DisintegrationEntry e;
    e.name = tests[t].name;
    e.joint_mean = sample_moments(js).mean;
    e.posterior_mean = sample_moments(cs).mean;
    e.difference = d.mean;
    e.std_error = d.std_error;
    e.pass = std::abs(d.mean) <= std::max(3.0 * d.std_error, kAbsoluteFloor);
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace cavity_bayes::bayes
