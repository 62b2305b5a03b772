// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavity_bayes/calibration.hpp"
#include "cavity_bayes/commands.hpp"
#include "cavity_bayes/radial_oracle.hpp"
#include "cavity_bayes/random.hpp"

namespace cb = cavity_bayes;
namespace fs = std::filesystem;
using cb::harness::ExperimentConfig;
using cb::harness::Stage;

namespace {

constexpr std::uint64_t kAcceptanceSeed = 0xacce97ab1eULL;
static_assert(kAcceptanceSeed != cb::calibration::kCalibrationSeed);

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Ledger {
  int failed = 0;
  void line(bool pass, const std::string& name, const std::string& detail) {
    std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    failed += !pass;
  }
  void note(const std::string& name, const std::string& detail) {
    std::printf("INFO  %-28s %s\n", name.c_str(), detail.c_str());
    std::fflush(stdout);
  }
};

ExperimentConfig config(const std::string& name) {
  return cb::harness::load_config(fs::path(CAVITY_BAYES_CONFIG_DIR) / name);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every file of an output directory; manifest wall times are dropped.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string body = slurp(e.path());
    if (e.path().filename() == "manifest.json") {
      auto j = nlohmann::json::parse(body);
      j.erase("timings");
      body = j.dump();
    }
    out[fs::relative(e.path(), dir).generic_string()] = body;
  }
  return out;
}

struct Benchmark {
  ExperimentConfig cfg;
  fs::path out;
  cb::harness::PipelineResult result;
};

Benchmark run_benchmark(const fs::path& work) {
  Benchmark b{config("benchmark.toml"), work / "benchmark", {}};
  fs::remove_all(b.out);
  b.result = cb::harness::run_pipeline(b.cfg, b.out);
  return b;
}

void stability(Ledger& ledger, const Benchmark& bench) {
  const ExperimentConfig& cfg = bench.cfg;
  const auto t0 = Clock::now();
  cb::forward::ForwardCache cache(bench.out / "cache");
  cb::forward::CachedForward fwd(cache, cfg.grid, cfg.flux, cfg.solver, false);
  const auto prior = cb::bayes::evaluate_prior(cb::priors::enumerate_finite(cfg.prior), fwd);
  const double c_f = fwd.bound(cfg.outer).value;
  const cb::bayes::NoiseModel noise{cfg.noise.sigma.value_or(cb::bayes::default_sigma(prior.forward_values)),
                                    cfg.grid.size()};
  cb::bayes::PairPolicy policy = cfg.stability.policy;
  policy.norm_cap = 3.0 * c_f;
  const auto pairs = cb::bayes::generate_pairs(prior, noise, policy, 100, cb::derive_seed(kAcceptanceSeed, "pairs"));
  const auto points = cb::bayes::ratio_grid(cfg.outer, 64);
  const auto rep = cb::bayes::verify_stability(prior, pairs, noise, points);
  const double elapsed = seconds_since(t0);

  std::size_t over_cap = 0;
  for (const auto& p : pairs) {
    over_cap += cb::euclidean_norm(p.y) > policy.norm_cap || cb::euclidean_norm(p.y_prime) > policy.norm_cap;
  }
  std::size_t finite = 0;
  double worst_hell = 0.0;
  double worst_ratio = 0.0;
  for (const auto& r : rep.records) {
    finite += std::isfinite(r.rhs_hell);
    if (r.rhs_hell > 0 && std::isfinite(r.rhs_hell)) worst_hell = std::max(worst_hell, r.hell / r.rhs_hell);
    if (r.rhs_ratio > 0 && std::isfinite(r.rhs_ratio)) worst_ratio = std::max(worst_ratio, r.max_drho / r.rhs_ratio);
  }
  const bool cached = fwd.simulations() == 0 && cache.misses() == 0;
  const bool timely = elapsed < 60.0;
  const std::string common = ", " + std::to_string(pairs.size()) + " pairs, " + std::to_string(over_cap) +
                             " over 3 C_F, cached " + (cached ? "yes" : "no") + ", " + fmt(elapsed) + " s";

  ledger.line(rep.hellinger_violations == 0 && over_cap == 0 && cached && timely && pairs.size() == 100,
              "stability-hellinger", std::to_string(rep.hellinger_violations) + " violations" + common +
                                         ", finite rhs on " + std::to_string(finite) + ", max lhs/rhs " +
                                         fmt(worst_hell));
  ledger.line(rep.ratio_violations == 0 && over_cap == 0 && points.size() == 64 * 64, "stability-ratio",
              std::to_string(rep.ratio_violations) + " violations on a 64x64 grid, max lhs/rhs " + fmt(worst_ratio));
  ledger.line(rep.chain_violations == 0, "proof-chain",
              std::to_string(rep.chain_violations) + " violations of L1 <= 2 sqrt2 d_Hell or |drho| <= L1 (tol 1e-12)");

  // sigma_sup / sigma is about 40 on the benchmark, so both right-hand sides
  // overflow; a larger sigma on the same family makes them finite.
  cb::bayes::NoiseModel wide = noise;
  wide.sigma = c_f / 6.0;
  const auto wide_pairs =
      cb::bayes::generate_pairs(prior, wide, policy, 100, cb::derive_seed(kAcceptanceSeed, "wide-pairs"));
  const auto wide_rep = cb::bayes::verify_stability(prior, wide_pairs, wide, points);
  std::size_t wide_finite = 0;
  double wide_worst = 0.0;
  for (const auto& r : wide_rep.records) {
    wide_finite += std::isfinite(r.rhs_hell) && std::isfinite(r.rhs_ratio);
    if (r.rhs_hell > 0) wide_worst = std::max(wide_worst, r.hell / r.rhs_hell);
  }
  ledger.note("stability-wide-sigma", "sigma = C_F/6: " + std::to_string(wide_rep.violations()) +
                                          " violations, finite rhs on " + std::to_string(wide_finite) + "/" +
                                          std::to_string(wide_rep.records.size()) + ", max d_Hell/rhs " +
                                          fmt(wide_worst));
}

void oracle(Ledger& ledger) {
  const cb::geometry::OuterDomain outer = cb::geometry::OuterDomain::unit_disk();
  const cb::geometry::ConductorDomain annulus(
      outer, cb::geometry::CavitySet::with_default_margins({cb::geometry::DiskCavity{{}, 0.5}}, outer));
  cb::forward::SolverConfig cfg;
  cfg.paths = 100000;
  cfg.step = 1e-3;
  cfg.base_seed = cb::derive_seed(kAcceptanceSeed, "oracle");
  const auto t0 = Clock::now();
  const double reference = cb::forward::radial_oracle_extrapolated(1.0, 1.0, 1.0, 0.5, 1.0);
  const auto est = cb::forward::estimate_u(1.0, cb::make_point(1.0, 0.0), annulus,
                                           cb::forward::BoundaryFlux::constant(1.0), cfg);
  const double elapsed = seconds_since(t0);
  const double err = std::abs(est.mean - reference);
  const double budget = 3.0 * est.std_error + cb::calibration::kBiasConstant * std::sqrt(cfg.step);
  ledger.line(err <= budget && elapsed < 300.0 && std::abs(reference - cb::calibration::kAnnulusOracle) < 1e-9,
              "forward-oracle",
              "MC " + fmt(est.mean) + " vs " + fmt(reference) + ", |err| " + fmt(err) + " <= " + fmt(budget) +
                  " (3 SE + C_bias sqrt h), " + fmt(elapsed) + " s");
}

void c_f_bound(Ledger& ledger, const Benchmark& bench) {
  const ExperimentConfig& cfg = bench.cfg;
  cb::priors::PriorSpec spec;
  spec.mode = cb::priors::PriorSpec::Mode::parametric;
  spec.outer = cfg.outer;
  spec.parametric = cfg.lemma.shapes;
  const auto family = cb::priors::sample_prior(spec, 64, cb::derive_seed(kAcceptanceSeed, "conductors")).ensemble;

  const auto t0 = Clock::now();
  cb::forward::ForwardCache cache(bench.out / "cache");
  cb::forward::CachedForward fwd(cache, cfg.grid, cfg.flux, cfg.solver);
  const auto bound = fwd.bound(cfg.outer);

  const auto times = cfg.grid.quadrature_times();
  const auto nodes = cfg.grid.quadrature_points(cfg.outer);
  const std::size_t paths = 200;
  std::vector<double> stopped(times.size());
  std::vector<double> free(times.size());
  std::size_t pathwise = 0;
  std::size_t compared = 0;
  double worst_norm = 0.0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (const auto& d : family.domains) {
    for (const auto& x : nodes) {
      for (std::size_t p = 0; p < paths; ++p) {
        cb::forward::simulate_path_horizons(x, times, d, cfg.flux, cfg.solver, p, true, stopped);
        cb::forward::simulate_path_horizons(x, times, d, cfg.flux, cfg.solver, p, false, free);
        for (std::size_t k = 0; k < times.size(); ++k) {
          pathwise += stopped[k] > free[k];
          ++compared;
        }
      }
    }
    const auto y = fwd.evaluate(d);
    const double norm = cb::euclidean_norm(y.values);
    double var = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double g = norm > 0 ? y.values[i] / norm : 0.0;
      var += g * g * y.std_errors[i] * y.std_errors[i];
    }
    const double se = std::sqrt(var + bound.std_error * bound.std_error);
    worst_norm = std::max(worst_norm, norm);
    worst_excess = std::max(worst_excess, norm - bound.value - 3.0 * se);
  }
  ledger.line(pathwise == 0 && worst_excess <= 0.0, "c_f-bound",
              std::to_string(pathwise) + "/" + std::to_string(compared) +
                  " pathwise stopped > unstopped, max |F(D)| " + fmt(worst_norm) + " vs C_F " + fmt(bound.value) +
                  " over " + std::to_string(family.size()) + " conductors, " + fmt(seconds_since(t0)) + " s");
}

void g2_norm(Ledger& ledger, const ExperimentConfig& cfg) {
  std::size_t violations = 0;
  double worst = 0.0;
  cb::RandomStream s(cb::derive_seed(kAcceptanceSeed, "g2"), 0);
  const int n = 1000;
  for (int trial = 0; trial < 100; ++trial) {
    cb::ObservationGrid grid = cfg.grid;
    grid.refinement = 1 + trial % 3;
    grid.time_cells = 1 + static_cast<int>(s.next_uniform() * 6);
    grid.arc_cells = 1 + static_cast<int>(s.next_uniform() * 6);
    const int modes = 4;
    double a[modes][modes];
    double ft[modes];
    double fa[modes];
    for (int i = 0; i < modes; ++i) {
      ft[i] = 4.0 * s.next_uniform();
      fa[i] = 4.0 * s.next_uniform();
      for (int j = 0; j < modes; ++j) a[i][j] = s.next_gaussian() / (1 + i + j);
    }
    const double th0 = grid.arc_begin;
    auto basis_t = [&](int i, double t) { return std::cos(ft[i] * t + i); };
    auto basis_a = [&](int j, double u) { return std::sin(fa[j] * u + 0.5 * j); };
    auto value = [&](double t, double u) {
      double acc = 0.0;
      for (int i = 0; i < modes; ++i)
        for (int j = 0; j < modes; ++j) acc += a[i][j] * basis_t(i, t) * basis_a(j, u);
      return acc;
    };
    const auto g = cb::forward::finitize(
        [&](double t, const cb::Point& x) {
          double th = std::atan2(x[1] - cfg.outer.center[1], x[0] - cfg.outer.center[0]);
          while (th < th0) th += 2.0 * M_PI;
          return cb::forward::FieldEstimate{value(t, (th - th0) * cfg.outer.radius), 0.0, 1};
        },
        grid, cfg.outer);

    // Reference L2 norm on an n x n midpoint grid, with the separable basis tabulated.
    const double area = grid.arc_length(cfg.outer);
    std::vector<double> row(static_cast<std::size_t>(n) * modes);
    for (int q = 0; q < n; ++q) {
      const double u = (q + 0.5) / n * area;
      for (int j = 0; j < modes; ++j) row[static_cast<std::size_t>(q) * modes + j] = basis_a(j, u);
    }
    double l2 = 0.0;
    for (int p = 0; p < n; ++p) {
      const double t = (p + 0.5) / n * grid.horizon;
      double coef[modes];
      for (int j = 0; j < modes; ++j) {
        coef[j] = 0.0;
        for (int i = 0; i < modes; ++i) coef[j] += a[i][j] * basis_t(i, t);
      }
      for (int q = 0; q < n; ++q) {
        double v = 0.0;
        for (int j = 0; j < modes; ++j) v += coef[j] * row[static_cast<std::size_t>(q) * modes + j];
        l2 += v * v;
      }
    }
    l2 = std::sqrt(l2 * (grid.horizon / n) * (area / n));
    const double lhs = cb::euclidean_norm(g.values);
    const double rhs = std::sqrt(static_cast<double>(grid.size()) * area) * l2;
    violations += lhs > rhs + 1e-6;
    if (rhs > 0) worst = std::max(worst, lhs / rhs);
  }
  ledger.line(violations == 0, "g2-norm-bound",
              std::to_string(violations) + "/100 violations beyond 1e-6, max |G2 v| / (sqrt(m|A|) |v|) " + fmt(worst));
}

void lemma(Ledger& ledger, const fs::path& work) {
  const ExperimentConfig cfg = config("lemma.toml");
  const auto t0 = Clock::now();
  const auto res = cb::harness::run_pipeline(cfg, work / "lemma", {Stage::lemma});
  const double elapsed = seconds_since(t0);
  std::size_t bad = 0;
  std::size_t over_bound = 0;
  double worst = 0.0;
  for (const auto& r : res.lemma) {
    bad += !(r.ratio < std::sqrt(2.0));
    over_bound += r.cubes > r.cube_bound;
    worst = std::max(worst, r.ratio);
  }
  ledger.line(bad == 0 && over_bound == 0 && res.lemma.size() == 500 && elapsed < 60.0, "cube-lemma",
              std::to_string(bad) + "/" + std::to_string(res.lemma.size()) + " with d_H >= sqrt2 eps, max d_H/eps " +
                  fmt(worst) + ", " + std::to_string(over_bound) + " over the cube-count bound, " + fmt(elapsed) +
                  " s");
}

void disintegration(Ledger& ledger, const fs::path& work) {
  const ExperimentConfig cfg = config("disintegration.toml");
  const fs::path out = work / "disintegration";
  fs::remove_all(out);
  const auto t0 = Clock::now();
  const auto res = cb::harness::run_pipeline(
      cfg, out, cb::harness::command_stages(cb::harness::Command::check_disintegration, cfg));
  const double elapsed = seconds_since(t0);
  std::size_t passed = 0;
  for (const auto& e : res.disintegration->entries) passed += e.pass;

  // Dual constructions compared on joint draws, not only on the observed data.
  cb::forward::ForwardCache cache(out / "cache");
  cb::forward::CachedForward fwd(cache, cfg.grid, cfg.flux, cfg.solver, false);
  const auto prior = cb::bayes::evaluate_prior(cb::priors::enumerate_finite(cfg.prior), fwd);
  const cb::bayes::NoiseModel noise{res.sigma, cfg.grid.size()};
  double dual = res.dual_discrepancy;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const auto& f = prior.forward_values[i % prior.size()];
    dual = std::max(dual, cb::bayes::dual_construction_discrepancy(
                              prior, cb::bayes::add_noise(f, noise, cb::derive_seed(kAcceptanceSeed, "dual"), i), noise));
  }
  const double machine = 4.0 * std::numeric_limits<double>::epsilon();
  ledger.line(res.disintegration->entries.size() == 10 && passed == 10 && res.disintegration->samples == 100000 &&
                  prior.size() == 8 && dual <= machine,
              "disintegration", std::to_string(passed) + "/" + std::to_string(res.disintegration->entries.size()) +
                                    " at 3 SE with " + std::to_string(res.disintegration->samples) +
                                    " samples, dual max |dw| " + fmt(dual) + " (limit 4 eps), " + fmt(elapsed) + " s");
}

void averaging(Ledger& ledger, const Benchmark& bench) {
  const auto& rows = bench.result.averaging;
  bool monotone = rows.size() == 4;
  std::string detail = "medians";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].median_hellinger > rows[i - 1].median_hellinger) monotone = false;
    monotone = monotone && rows[i].hellinger.size() == 50;
    detail += " N=" + std::to_string(rows[i].replicates) + ":" + fmt(rows[i].median_hellinger);
  }
  ledger.line(monotone, "n-averaging", detail + " over 50 seeds");
}

void determinism(Ledger& ledger, const fs::path& work) {
  bool identical = true;
  std::string detail;
  for (const char* name : {"benchmark.toml", "disintegration.toml"}) {
    const ExperimentConfig cfg = config(name);
    std::map<std::string, std::string> reference;
    std::size_t files = 0;
    for (const char* threads : {"1", "4", "8", "1"}) {
      setenv("CAVITY_BAYES_THREADS", threads, 1);
      const fs::path out = work / ("determinism_" + cfg.scenario + "_" + threads);
      fs::remove_all(out);
      (void)cb::harness::run_pipeline(cfg, out);
      const auto snap = snapshot(out);
      fs::remove_all(out);
      if (reference.empty()) {
        reference = snap;
        files = snap.size();
      } else if (snap != reference) {
        identical = false;
      }
    }
    detail += cfg.scenario + " " + std::to_string(files) + " files; ";
  }
  unsetenv("CAVITY_BAYES_THREADS");
  ledger.line(identical, "determinism", detail + "workers 1, 4, 8 and a repeat run compared byte for byte");
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "cavity_bayes_acceptance";
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--work") work = argv[i + 1];
  }
  fs::create_directories(work);

  Ledger ledger;
  try {
    const auto t0 = Clock::now();
    const Benchmark bench = run_benchmark(work);
    ledger.note("benchmark-run", "first run " + fmt(seconds_since(t0)) + " s, C_F " + fmt(bench.result.c_f) +
                                     ", sigma " + fmt(bench.result.sigma) + ", " +
                                     std::to_string(bench.result.simulations) + " forward simulations");
    stability(ledger, bench);
    oracle(ledger);
    c_f_bound(ledger, bench);
    g2_norm(ledger, bench.cfg);
    lemma(ledger, work);
    disintegration(ledger, work);
    averaging(ledger, bench);
    determinism(ledger, work);
  } catch (const std::exception& e) {
    std::printf("FAIL  %-28s %s\n", "acceptance-harness", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", ledger.failed);
  return ledger.failed == 0 ? 0 : 1;
}
