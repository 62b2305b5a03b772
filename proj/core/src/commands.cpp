#include "cavity_bayes/commands.hpp"

#include <fstream>
#include <sstream>

#include "cavity_bayes/forward_cache.hpp"

namespace cavity_bayes::harness {

namespace {

void print_summary(const PipelineResult& r, std::ostream& out) {
  out << "artifacts: " << r.out_dir.string() << "\n";
  if (r.cache_hits + r.cache_misses > 0) {
    out << "sigma: " << format_number(r.sigma) << "  C_F: " << format_number(r.c_f) << " (se "
        << format_number(r.c_f_std_error) << ")\n";
    out << "forward cache: " << r.cache_hits << " hits, " << r.cache_misses << " misses, " << r.simulations
        << " simulations\n";
  }
  if (r.posterior) out << "evidence: " << format_number(r.posterior->evidence) << "\n";
  if (r.stability) {
    out << "stability: " << r.stability->records.size() << " pairs, " << r.stability->hellinger_violations
        << " hellinger / " << r.stability->ratio_violations << " ratio / " << r.stability->chain_violations
        << " chain violations\n";
  }
  if (r.disintegration) {
    std::size_t passed = 0;
    for (const auto& e : r.disintegration->entries) passed += e.pass;
    out << "disintegration: " << passed << "/" << r.disintegration->entries.size() << " test functions pass\n";
  }
  if (!r.averaging.empty()) {
    out << "averaging medians:";
    for (const auto& row : r.averaging) out << " N=" << row.replicates << ":" << format_number(row.median_hellinger);
    out << "\n";
  }
  if (!r.lemma.empty()) {
    double worst = 0.0;
    std::size_t bad = 0;
    for (const auto& rec : r.lemma) {
      worst = std::max(worst, rec.ratio);
      bad += rec.violation;
    }
    out << "approximation lemma: " << r.lemma.size() << " cases, max d_H/eps " << format_number(worst) << ", "
        << bad << " violations\n";
  }
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::vector<Stage> command_stages(Command c, const ExperimentConfig& cfg) {
  switch (c) {
    case Command::run: return default_stages(cfg);
    case Command::verify_bounds: return {Stage::forward, Stage::stability};
    case Command::ratio_field: return {Stage::forward, Stage::data, Stage::posterior, Stage::ratio};
    case Command::check_disintegration: return {Stage::forward, Stage::data, Stage::posterior, Stage::disintegration};
    case Command::average: return {Stage::forward, Stage::averaging};
    case Command::approx_lemma: return {Stage::lemma};
  }
  return {};
}

int run_command(Command c, const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out,
                std::ostream& err) {
  try {
    const PipelineResult r = run_pipeline(cfg, out_dir, command_stages(c, cfg));
    print_summary(r, out);
    return r.bound_violation() ? kExitViolation : kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

int run_command(Command c, const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "error: " << config_path.string() << ": " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << config_path.string() << ": " << e.what() << "\n";
    return kExitError;
  }
  if (seed) cfg.reseed(*seed);
  return run_command(c, cfg, out_dir, out, err);
}

int cmd_forward(const ForwardRequest& req, std::ostream& out, std::ostream& err) {
  try {
    const geometry::ConductorDomain domain = geometry::domain_from_json(read_text(req.domain));
    const GridFile grid = load_grid_file(req.grid);
    forward::SolverConfig solver;
    solver.paths = req.paths;
    solver.step = req.step;
    solver.base_seed = req.seed;
    solver.crossing = req.crossing;
    solver.validate();
    if (solver.step > grid.grid.horizon) throw std::invalid_argument("step must not exceed the grid horizon");
    forward::ForwardCache cache(req.out_dir);
    forward::CachedForward fwd(cache, grid.grid, grid.flux.value_or(forward::BoundaryFlux::constant(1.0)), solver);
    const ObservationVector y = fwd.evaluate(domain);
    const forward::ForwardKey key{domain.hash(), grid.grid, fwd.flux(), solver, true};
    out << "domain " << domain.hash() << "\n";
    out << (fwd.simulations() > 0 ? "computed " : "cached ") << (req.out_dir / (key.digest() + ".json")).string()
        << "\n";
    out << "norm " << format_number(euclidean_norm(y.values)) << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << req.grid.string() << ": " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace cavity_bayes::harness
