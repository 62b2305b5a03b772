#include "cavity_bayes/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include "cavity_bayes/digest.hpp"
#include "cavity_bayes/forward_cache.hpp"
#include "cavity_bayes/random.hpp"

namespace cavity_bayes::harness {

namespace {

using nlohmann::json;

std::string describe(const std::string& field, const std::string& message, std::optional<int> line) {
  std::string s;
  if (line) s += "line " + std::to_string(*line) + ": ";
  return s + field + ": " + message;
}

std::optional<int> line_of(const toml::node& n) {
  const auto& src = n.source();
  if (src.begin.line == 0) return std::nullopt;
  return static_cast<int>(src.begin.line);
}

/// One TOML table plus its dotted path, for diagnostics.
class Section {
 public:
  Section(const toml::table* table, std::string path) : table_(table), path_(std::move(path)) {}

  [[nodiscard]] bool present() const { return table_ != nullptr; }
  [[nodiscard]] std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void allow(std::initializer_list<const char*> keys) const {
    if (!table_) return;
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : *table_) {
      const std::string key(k.str());
      if (!ok.count(key)) throw ConfigError(field(key), "unknown key", line_of(v));
    }
  }

  [[nodiscard]] const toml::node* node(const std::string& key) const {
    return table_ ? table_->get(key) : nullptr;
  }

  [[nodiscard]] std::optional<Section> sub(const std::string& key) const {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    if (!n->is_table()) throw ConfigError(field(key), "expected a table", line_of(*n));
    return Section(n->as_table(), field(key));
  }

  [[nodiscard]] std::optional<double> number(const std::string& key) const {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    if (auto v = n->value_exact<double>()) return *v;
    if (auto v = n->value_exact<std::int64_t>()) return static_cast<double>(*v);
    throw ConfigError(field(key), "expected a number", line_of(*n));
  }

  [[nodiscard]] std::optional<std::int64_t> integer(const std::string& key) const {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    if (auto v = n->value_exact<std::int64_t>()) return *v;
    throw ConfigError(field(key), "expected an integer", line_of(*n));
  }

  [[nodiscard]] std::optional<std::size_t> count(const std::string& key, std::int64_t min = 1) const {
    const auto v = integer(key);
    if (!v) return std::nullopt;
    if (*v < min) throw ConfigError(field(key), "must be at least " + std::to_string(min), line_of(*node(key)));
    return static_cast<std::size_t>(*v);
  }

  [[nodiscard]] std::optional<bool> boolean(const std::string& key) const {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    if (auto v = n->value_exact<bool>()) return *v;
    throw ConfigError(field(key), "expected true or false", line_of(*n));
  }

  [[nodiscard]] std::optional<std::string> string(const std::string& key) const {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    if (auto v = n->value_exact<std::string>()) return *v;
    throw ConfigError(field(key), "expected a string", line_of(*n));
  }

  [[nodiscard]] std::optional<std::vector<double>> numbers(const std::string& key) const {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    const toml::array* arr = n->as_array();
    if (!arr) throw ConfigError(field(key), "expected an array of numbers", line_of(*n));
    std::vector<double> out;
    for (const auto& e : *arr) {
      if (auto v = e.value_exact<double>()) {
        out.push_back(*v);
      } else if (auto i = e.value_exact<std::int64_t>()) {
        out.push_back(static_cast<double>(*i));
      } else {
        throw ConfigError(field(key), "expected an array of numbers", line_of(e));
      }
    }
    return out;
  }

  [[nodiscard]] std::optional<Point> point(const std::string& key) const {
    const auto v = numbers(key);
    if (!v) return std::nullopt;
    if (v->size() != 2) throw ConfigError(field(key), "expected [x, y]", line_of(*node(key)));
    return make_point((*v)[0], (*v)[1]);
  }

  [[nodiscard]] std::optional<std::vector<const toml::table*>> tables(const std::string& key) const {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    const toml::array* arr = n->as_array();
    if (!arr) throw ConfigError(field(key), "expected an array of tables", line_of(*n));
    std::vector<const toml::table*> out;
    for (const auto& e : *arr) {
      if (!e.is_table()) throw ConfigError(field(key), "expected an array of tables", line_of(e));
      out.push_back(e.as_table());
    }
    return out;
  }

  [[nodiscard]] std::optional<int> line(const std::string& key) const {
    const toml::node* n = node(key);
    return n ? line_of(*n) : std::nullopt;
  }

 private:
  const toml::table* table_;
  std::string path_;
};

double positive(const Section& s, const std::string& key, double fallback) {
  const double v = s.number(key).value_or(fallback);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(s.field(key), "must be positive", s.line(key));
  return v;
}

std::vector<geometry::DiskCavity> parse_cavities(const Section& s, const std::string& key) {
  std::vector<geometry::DiskCavity> out;
  const auto list = s.tables(key);
  if (!list) return out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const Section c((*list)[i], s.field(key) + "[" + std::to_string(i) + "]");
    c.allow({"center", "radius"});
    const auto centre = c.point("center");
    if (!centre) throw ConfigError(c.field("center"), "missing");
    out.push_back(geometry::DiskCavity{*centre, positive(c, "radius", -1.0)});
  }
  return out;
}

void parse_outer(const Section& root, ExperimentConfig& cfg) {
  const auto s = root.sub("outer");
  if (!s) return;
  s->allow({"type", "center", "radius"});
  if (const auto type = s->string("type"); type && *type != "disk") {
    throw ConfigError(s->field("type"), "only \"disk\" is supported", s->line("type"));
  }
  cfg.outer.center = s->point("center").value_or(cfg.outer.center);
  cfg.outer.radius = positive(*s, "radius", cfg.outer.radius);
}

forward::BoundaryFlux parse_flux(const Section& s) {
  s.allow({"kind", "amplitude", "angular_frequency"});
  forward::BoundaryFlux f;
  const std::string kind = s.string("kind").value_or("constant");
  if (kind == "constant") {
    f.kind = forward::BoundaryFlux::Kind::constant;
  } else if (kind == "sinusoidal") {
    f.kind = forward::BoundaryFlux::Kind::sinusoidal;
  } else {
    throw ConfigError(s.field("kind"), "expected \"constant\" or \"sinusoidal\"", s.line("kind"));
  }
  f.amplitude = s.number("amplitude").value_or(1.0);
  f.angular_frequency = s.number("angular_frequency").value_or(0.0);
  if (!std::isfinite(f.amplitude) || !std::isfinite(f.angular_frequency)) {
    throw ConfigError(s.field("amplitude"), "must be finite", s.line("amplitude"));
  }
  return f;
}

ObservationGrid parse_grid(const Section& s) {
  s.allow({"horizon", "time_cells", "arc_begin", "arc_end", "arc_cells", "refinement"});
  ObservationGrid g;
  g.horizon = positive(s, "horizon", g.horizon);
  g.time_cells = static_cast<int>(s.count("time_cells").value_or(static_cast<std::size_t>(g.time_cells)));
  g.arc_begin = s.number("arc_begin").value_or(g.arc_begin);
  g.arc_end = s.number("arc_end").value_or(g.arc_end);
  g.arc_cells = static_cast<int>(s.count("arc_cells").value_or(static_cast<std::size_t>(g.arc_cells)));
  g.refinement = static_cast<int>(s.count("refinement").value_or(static_cast<std::size_t>(g.refinement)));
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.field("arc_end"), e.what(), s.line("arc_end"));
  }
  return g;
}

void parse_solver(const Section& root, ExperimentConfig& cfg) {
  const auto s = root.sub("solver");
  if (!s) return;
  s->allow({"step", "paths", "crossing", "seed"});
  cfg.solver.step = positive(*s, "step", cfg.solver.step);
  if (cfg.solver.step > cfg.grid.horizon) {
    throw ConfigError(s->field("step"), "must not exceed the grid horizon", s->line("step"));
  }
  cfg.solver.paths = s->count("paths").value_or(cfg.solver.paths);
  const std::string crossing = s->string("crossing").value_or("endpoint");
  if (crossing == "endpoint") {
    cfg.solver.crossing = forward::CrossingCheck::endpoint;
  } else if (crossing == "bridge") {
    cfg.solver.crossing = forward::CrossingCheck::bridge;
  } else {
    throw ConfigError(s->field("crossing"), "expected \"endpoint\" or \"bridge\"", s->line("crossing"));
  }
  if (const auto seed = s->integer("seed")) {
    cfg.solver.base_seed = static_cast<std::uint64_t>(*seed);
    cfg.solver_seed_explicit = true;
  }
}

void parse_noise(const Section& root, ExperimentConfig& cfg) {
  const auto s = root.sub("noise");
  if (!s) return;
  s->allow({"enabled", "sigma", "relative"});
  cfg.noise.enabled = s->boolean("enabled").value_or(true);
  if (s->node("sigma")) cfg.noise.sigma = positive(*s, "sigma", 1.0);
  cfg.noise.relative = positive(*s, "relative", cfg.noise.relative);
}

void parse_prior(const Section& root, ExperimentConfig& cfg) {
  const auto s = root.sub("prior");
  priors::PriorSpec& p = cfg.prior;
  if (!s) {
    p = priors::benchmark_family(cfg.outer);
    return;
  }
  s->allow({"mode", "delta_sep", "delta_in", "domains", "xs", "ys", "radius", "k_max", "r_min", "r_max",
            "fixed_center", "samples"});
  const std::string mode = s->string("mode").value_or("benchmark");
  if (mode == "benchmark") {
    p = priors::benchmark_family(cfg.outer);
  } else if (mode == "small") {
    p = priors::small_family(cfg.outer);
  } else if (mode == "grid") {
    const auto xs = s->numbers("xs");
    const auto ys = s->numbers("ys");
    if (!xs || xs->empty()) throw ConfigError(s->field("xs"), "missing or empty");
    if (!ys || ys->empty()) throw ConfigError(s->field("ys"), "missing or empty");
    p = priors::grid_family(cfg.outer, *xs, *ys, positive(*s, "radius", 0.2));
  } else if (mode == "finite") {
    p = priors::PriorSpec{};
    p.mode = priors::PriorSpec::Mode::finite_list;
    p.outer = cfg.outer;
    const auto list = s->tables("domains");
    if (!list || list->empty()) throw ConfigError(s->field("domains"), "finite prior needs [[prior.domains]] entries");
    for (std::size_t i = 0; i < list->size(); ++i) {
      const Section d((*list)[i], s->field("domains") + "[" + std::to_string(i) + "]");
      d.allow({"cavities", "probability"});
      const auto prob = d.number("probability");
      if (!prob) throw ConfigError(d.field("probability"), "missing");
      p.entries.push_back(priors::FiniteEntry{parse_cavities(d, "cavities"), *prob});
    }
  } else if (mode == "parametric") {
    p = priors::PriorSpec{};
    p.mode = priors::PriorSpec::Mode::parametric;
    p.outer = cfg.outer;
    p.parametric.k_max = static_cast<int>(s->count("k_max").value_or(1));
    p.parametric.r_min = positive(*s, "r_min", p.parametric.r_min);
    p.parametric.r_max = positive(*s, "r_max", p.parametric.r_max);
    p.parametric.fixed_center = s->point("fixed_center");
    cfg.prior_samples = s->count("samples").value_or(cfg.prior_samples);
  } else {
    throw ConfigError(s->field("mode"), "expected benchmark, small, grid, finite or parametric", s->line("mode"));
  }
  if (s->node("delta_sep")) p.separation_margin = positive(*s, "delta_sep", 1.0);
  if (s->node("delta_in")) p.containment_margin = positive(*s, "delta_in", 1.0);
}

void parse_truth(const Section& root, ExperimentConfig& cfg) {
  const auto s = root.sub("truth");
  if (!s) {
    cfg.truth.family_index = 0;
    return;
  }
  s->allow({"family_index", "cavities"});
  cfg.truth.family_index = s->count("family_index", 0);
  cfg.truth.cavities = parse_cavities(*s, "cavities");
  if (cfg.truth.family_index && !cfg.truth.cavities.empty()) {
    throw ConfigError(s->field("cavities"), "give either family_index or cavities", s->line("cavities"));
  }
  if (!cfg.truth.family_index && cfg.truth.cavities.empty()) cfg.truth.family_index = 0;
}

void parse_studies(const Section& root, ExperimentConfig& cfg) {
  if (const auto s = root.sub("stability")) {
    s->allow({"enabled", "pairs", "policy", "scale_min", "scale_max", "norm_cap_factor"});
    cfg.stability.enabled = s->boolean("enabled").value_or(true);
    cfg.stability.pairs = s->count("pairs").value_or(cfg.stability.pairs);
    const std::string policy = s->string("policy").value_or("perturbed");
    if (policy == "perturbed") {
      cfg.stability.policy.kind = bayes::PairPolicy::Kind::perturbed;
    } else if (policy == "ball") {
      cfg.stability.policy.kind = bayes::PairPolicy::Kind::ball;
    } else {
      throw ConfigError(s->field("policy"), "expected \"perturbed\" or \"ball\"", s->line("policy"));
    }
    cfg.stability.policy.scale_min = positive(*s, "scale_min", cfg.stability.policy.scale_min);
    cfg.stability.policy.scale_max = positive(*s, "scale_max", cfg.stability.policy.scale_max);
    if (cfg.stability.policy.scale_max < cfg.stability.policy.scale_min) {
      throw ConfigError(s->field("scale_max"), "must not be below scale_min", s->line("scale_max"));
    }
    cfg.stability.norm_cap_factor = positive(*s, "norm_cap_factor", cfg.stability.norm_cap_factor);
  }
  if (const auto s = root.sub("ratio")) {
    s->allow({"enabled", "resolution"});
    cfg.ratio.enabled = s->boolean("enabled").value_or(true);
    cfg.ratio.resolution = s->count("resolution").value_or(cfg.ratio.resolution);
  }
  if (const auto s = root.sub("disintegration")) {
    s->allow({"enabled", "samples"});
    cfg.disintegration.enabled = s->boolean("enabled").value_or(true);
    cfg.disintegration.samples = s->count("samples", 2).value_or(cfg.disintegration.samples);
  }
  if (const auto s = root.sub("averaging")) {
    s->allow({"enabled", "replicates", "seeds"});
    cfg.averaging.enabled = s->boolean("enabled").value_or(true);
    if (const auto reps = s->numbers("replicates")) {
      cfg.averaging.replicates.clear();
      for (double r : *reps) {
        if (!(r >= 1.0) || r != std::floor(r)) {
          throw ConfigError(s->field("replicates"), "entries must be positive integers", s->line("replicates"));
        }
        cfg.averaging.replicates.push_back(static_cast<std::size_t>(r));
      }
      if (cfg.averaging.replicates.empty() ||
          !std::is_sorted(cfg.averaging.replicates.begin(), cfg.averaging.replicates.end())) {
        throw ConfigError(s->field("replicates"), "must be nonempty and ascending", s->line("replicates"));
      }
    }
    cfg.averaging.seeds = s->count("seeds").value_or(cfg.averaging.seeds);
  }
  if (const auto s = root.sub("lemma")) {
    s->allow({"domains", "eps", "k_max", "r_min", "r_max"});
    cfg.lemma.domains = s->count("domains").value_or(cfg.lemma.domains);
    if (const auto eps = s->numbers("eps")) {
      for (double e : *eps) {
        if (!(e > 0.0)) throw ConfigError(s->field("eps"), "entries must be positive", s->line("eps"));
      }
      if (eps->empty()) throw ConfigError(s->field("eps"), "must be nonempty", s->line("eps"));
      cfg.lemma.eps = *eps;
    }
    cfg.lemma.shapes.k_max = static_cast<int>(s->count("k_max").value_or(static_cast<std::size_t>(cfg.lemma.shapes.k_max)));
    cfg.lemma.shapes.r_min = positive(*s, "r_min", cfg.lemma.shapes.r_min);
    cfg.lemma.shapes.r_max = positive(*s, "r_max", cfg.lemma.shapes.r_max);
  }
  if (const auto s = root.sub("cache")) {
    s->allow({"directory", "allow_compute"});
    if (const auto dir = s->string("directory")) cfg.cache_directory = *dir;
    cfg.allow_compute = s->boolean("allow_compute").value_or(true);
  }
}

toml::table parse_toml(const std::string& text, const std::string& source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError("<syntax>", std::string(e.description()), static_cast<int>(e.source().begin.line));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json cavities_json(const std::vector<geometry::DiskCavity>& cs) {
  json arr = json::array();
  for (const auto& c : cs) arr.push_back({{"center", {c.center[0], c.center[1]}}, {"radius", c.radius}});
  return arr;
}

}  // namespace

ConfigError::ConfigError(std::string field_name, const std::string& message, std::optional<int> line_number)
    : std::runtime_error(describe(field_name, message, line_number)), field(std::move(field_name)), line(line_number) {}

void ExperimentConfig::reseed(std::uint64_t new_seed) {
  seed = new_seed;
  if (!solver_seed_explicit) solver.base_seed = derive_seed(new_seed, "forward");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  const toml::table tbl = parse_toml(text, source);
  const Section root(&tbl, "");
  root.allow({"scenario", "seed", "outer", "flux", "grid", "solver", "noise", "prior", "truth", "stability", "ratio",
              "disintegration", "averaging", "lemma", "cache"});
  ExperimentConfig cfg;
  cfg.scenario = root.string("scenario").value_or(cfg.scenario);
  const auto seed = root.integer("seed");
  if (!seed) throw ConfigError("seed", "missing (a global seed is mandatory)");
  if (*seed < 0) throw ConfigError("seed", "must be nonnegative", root.line("seed"));
  cfg.reseed(static_cast<std::uint64_t>(*seed));

  parse_outer(root, cfg);
  if (const auto s = root.sub("flux")) cfg.flux = parse_flux(*s);
  if (const auto s = root.sub("grid")) cfg.grid = parse_grid(*s);
  parse_solver(root, cfg);
  parse_noise(root, cfg);
  parse_prior(root, cfg);
  parse_truth(root, cfg);
  parse_studies(root, cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.string());
}

GridFile load_grid_file(const std::filesystem::path& path) {
  const toml::table tbl = parse_toml(read_file(path), path.string());
  const Section root(&tbl, "");
  root.allow({"grid", "flux"});
  GridFile out;
  if (const auto s = root.sub("grid")) {
    out.grid = parse_grid(*s);
  } else {
    throw ConfigError("grid", "missing [grid] section");
  }
  if (const auto s = root.sub("flux")) out.flux = parse_flux(*s);
  return out;
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
  json prior;
  prior["mode"] = cfg.prior.mode == priors::PriorSpec::Mode::finite_list ? "finite_list" : "parametric";
  prior["delta_sep"] = cfg.prior.delta_sep();
  prior["delta_in"] = cfg.prior.delta_in();
  if (cfg.prior.mode == priors::PriorSpec::Mode::finite_list) {
    json entries = json::array();
    for (const auto& e : cfg.prior.entries) entries.push_back({{"cavities", cavities_json(e.cavities)}, {"probability", e.probability}});
    prior["entries"] = entries;
  } else {
    const auto& p = cfg.prior.parametric;
    prior["k_max"] = p.k_max;
    prior["r_min"] = p.r_min;
    prior["r_max"] = p.r_max;
    prior["fixed_center"] = p.fixed_center ? json{(*p.fixed_center)[0], (*p.fixed_center)[1]} : json(nullptr);
    prior["samples"] = cfg.prior_samples;
  }
  json truth;
  truth["family_index"] = cfg.truth.family_index ? json(*cfg.truth.family_index) : json(nullptr);
  truth["cavities"] = cavities_json(cfg.truth.cavities);

  json j;
  j["scenario"] = cfg.scenario;
  j["seed"] = cfg.seed;
  j["outer"] = {{"center", {cfg.outer.center[0], cfg.outer.center[1]}}, {"radius", cfg.outer.radius}};
  j["flux"] = json::parse(forward::flux_json(cfg.flux));
  j["grid"] = json::parse(forward::grid_json(cfg.grid));
  j["solver"] = json::parse(forward::solver_json(cfg.solver));
  j["noise"] = {{"enabled", cfg.noise.enabled},
                {"sigma", cfg.noise.sigma ? json(*cfg.noise.sigma) : json(nullptr)},
                {"relative", cfg.noise.relative}};
  j["prior"] = prior;
  j["truth"] = truth;
  j["stability"] = {{"enabled", cfg.stability.enabled},
                    {"pairs", cfg.stability.pairs},
                    {"policy", cfg.stability.policy.kind == bayes::PairPolicy::Kind::perturbed ? "perturbed" : "ball"},
                    {"scale_min", cfg.stability.policy.scale_min},
                    {"scale_max", cfg.stability.policy.scale_max},
                    {"norm_cap_factor", cfg.stability.norm_cap_factor}};
  j["ratio"] = {{"enabled", cfg.ratio.enabled}, {"resolution", cfg.ratio.resolution}};
  j["disintegration"] = {{"enabled", cfg.disintegration.enabled}, {"samples", cfg.disintegration.samples}};
  j["averaging"] = {{"enabled", cfg.averaging.enabled},
                    {"replicates", cfg.averaging.replicates},
                    {"seeds", cfg.averaging.seeds}};
  j["lemma"] = {{"domains", cfg.lemma.domains},
                {"eps", cfg.lemma.eps},
                {"k_max", cfg.lemma.shapes.k_max},
                {"r_min", cfg.lemma.shapes.r_min},
                {"r_max", cfg.lemma.shapes.r_max}};
  j["cache"] = {{"directory", cfg.cache_directory ? json(cfg.cache_directory->generic_string()) : json(nullptr)},
                {"allow_compute", cfg.allow_compute}};
  return j.dump();
}

std::string config_digest(const ExperimentConfig& cfg) { return sha256_hex(canonical_config_json(cfg)); }

}  // namespace cavity_bayes::harness
