#include "cavity_bayes/forward_cache.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "cavity_bayes/digest.hpp"

namespace cavity_bayes::forward {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

json grid_object(const ObservationGrid& g) {
  return json{{"horizon", g.horizon},     {"time_cells", g.time_cells}, {"arc_begin", g.arc_begin},
              {"arc_end", g.arc_end},     {"arc_cells", g.arc_cells},   {"refinement", g.refinement}};
}

const char* part_name(BoundaryFlux::Part p) {
  switch (p) {
    case BoundaryFlux::Part::positive: return "positive";
    case BoundaryFlux::Part::negative: return "negative";
    default: return "full";
  }
}

json flux_object(const BoundaryFlux& f) {
  return json{{"kind", f.kind == BoundaryFlux::Kind::constant ? "constant" : "sinusoidal"},
              {"amplitude", f.amplitude},
              {"angular_frequency", f.angular_frequency},
              {"part", part_name(f.part)}};
}

json solver_object(const SolverConfig& c) {
  return json{{"step", c.step},
              {"paths", c.paths},
              {"base_seed", c.base_seed},
              {"crossing", c.crossing == CrossingCheck::endpoint ? "endpoint" : "bridge"}};
}

void write_atomically(const std::filesystem::path& path, const std::string& body) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << body;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string grid_json(const ObservationGrid& grid) { return grid_object(grid).dump(); }
std::string flux_json(const BoundaryFlux& flux) { return flux_object(flux).dump(); }
std::string solver_json(const SolverConfig& cfg) { return solver_object(cfg).dump(); }

std::string ForwardKey::cfg_digest() const {
  const json j{{"solver", solver_object(solver)}, {"stop_at_cavity", stop_at_cavity}};
  return sha256_hex(j.dump());
}

std::string ForwardKey::digest() const {
  const json j{{"domain_hash", domain_hash},
               {"grid", grid_object(grid)},
               {"psi", flux_object(flux)},
               {"cfg_digest", cfg_digest()}};
  return sha256_hex(j.dump());
}

ForwardCache::ForwardCache(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(*directory_);
}

std::optional<ObservationVector> ForwardCache::lookup(const ForwardKey& key) {
  const std::string id = key.digest();
  {
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(id); it != entries_.end()) {
      ++hits_;
      return it->second;
    }
  }
  if (directory_) {
    const auto path = *directory_ / (id + ".json");
    std::ifstream in(path, std::ios::binary);
    if (in) {
      std::stringstream buf;
      buf << in.rdbuf();
      ObservationVector v = from_json(buf.str(), &key);
      std::unique_lock lock(mutex_);
      entries_.emplace(id, v);
      ++hits_;
      return v;
    }
  }
  ++misses_;
  return std::nullopt;
}

void ForwardCache::store(const ForwardKey& key, const ObservationVector& value) {
  const std::string id = key.digest();
  std::unique_lock lock(mutex_);
  entries_[id] = value;
  if (directory_) write_atomically(*directory_ / (id + ".json"), to_json(key, value));
}

std::string ForwardCache::to_json(const ForwardKey& key, const ObservationVector& value) {
  const json j{{"schema_version", kSchemaVersion},
               {"domain_hash", key.domain_hash},
               {"grid", grid_object(key.grid)},
               {"psi", flux_object(key.flux)},
               {"cfg_digest", key.cfg_digest()},
               {"stop_at_cavity", key.stop_at_cavity},
               {"y", value.values},
               {"se", value.std_errors},
               {"base_seed", key.solver.base_seed}};
  return j.dump(1) + "\n";
}

ObservationVector ForwardCache::from_json(const std::string& text, const ForwardKey* expected) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("forward cache entry is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw std::runtime_error("unsupported forward cache schema version");
    }
    if (expected) {
      if (j.at("domain_hash").get<std::string>() != expected->domain_hash ||
          j.at("cfg_digest").get<std::string>() != expected->cfg_digest() ||
          j.at("grid") != grid_object(expected->grid) || j.at("psi") != flux_object(expected->flux)) {
        throw std::runtime_error("forward cache entry does not match its key");
      }
    }
    ObservationVector v;
    v.values = j.at("y").get<std::vector<double>>();
    v.std_errors = j.at("se").get<std::vector<double>>();
    if (!v.std_errors.empty() && v.std_errors.size() != v.values.size()) {
      throw std::runtime_error("forward cache entry has mismatched y/se lengths");
    }
    if (expected) {
      if (v.values.size() != expected->grid.size()) throw std::runtime_error("forward cache entry has wrong length");
      v.grid = expected->grid;
    }
    return v;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed forward cache entry: ") + e.what());
  }
}

CachedForward::CachedForward(ForwardCache& cache, ObservationGrid grid, BoundaryFlux flux, SolverConfig solver,
                             bool allow_compute)
    : cache_(cache), grid_(grid), flux_(flux), solver_(solver), allow_compute_(allow_compute) {
  grid_.validate();
  solver_.validate();
}

ObservationVector CachedForward::evaluate(const geometry::ConductorDomain& domain) {
  return evaluate(domain, flux_, true);
}

ObservationVector CachedForward::evaluate(const geometry::ConductorDomain& domain, const BoundaryFlux& flux,
                                          bool stop_at_cavity) {
  const ForwardKey key{domain.hash(), grid_, flux, solver_, stop_at_cavity};
  if (auto hit = cache_.lookup(key)) return *hit;
  if (!allow_compute_) throw MissingForwardValue("no cached forward value for domain " + domain.hash());
  ObservationVector v = forward(domain, grid_, flux, solver_, stop_at_cavity);
  if (!flux.identically_zero()) ++simulations_;
  cache_.store(key, v);
  return v;
}

ForwardBound CachedForward::bound(const geometry::OuterDomain& outer) {
  const geometry::ConductorDomain free_domain(outer, geometry::CavitySet::with_default_margins({}, outer));
  const ObservationVector plus = evaluate(free_domain, flux_.positive_part(), false);
  const ObservationVector minus = evaluate(free_domain, flux_.negative_part(), false);
  return envelope_bound(plus, minus);
}

}  // namespace cavity_bayes::forward
