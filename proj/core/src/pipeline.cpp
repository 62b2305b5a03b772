#include "cavity_bayes/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include <json.hpp>

#include "cavity_bayes/digest.hpp"
#include "cavity_bayes/hausdorff.hpp"
#include "cavity_bayes/parallel.hpp"
#include "cavity_bayes/random.hpp"

#ifndef CAVITY_BAYES_VERSION
#define CAVITY_BAYES_VERSION "0.0.0"
#endif

namespace cavity_bayes::harness {

namespace {

using nlohmann::json;

constexpr Stage kOrder[] = {Stage::forward,   Stage::data,           Stage::posterior, Stage::ratio,
                            Stage::stability, Stage::disintegration, Stage::averaging, Stage::lemma};

bool needs_forward(Stage s) { return s != Stage::forward && s != Stage::lemma; }

std::vector<Stage> close_dependencies(std::vector<Stage> stages) {
  const auto has = [&](Stage s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
  if (has(Stage::ratio) && !has(Stage::posterior)) stages.push_back(Stage::posterior);
  if (has(Stage::posterior) && !has(Stage::data)) stages.push_back(Stage::data);
  if (std::any_of(stages.begin(), stages.end(), needs_forward) && !has(Stage::forward)) {
    stages.push_back(Stage::forward);
  }
  std::vector<Stage> ordered;
  for (Stage s : kOrder) {
    if (has(s)) ordered.push_back(s);
  }
  return ordered;
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& body) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << body;
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    digests_[name] = sha256_hex(body);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  [[nodiscard]] const std::map<std::string, std::string>& digests() const { return digests_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> digests_;
};

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string line;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) line += ',';
    line += c;
    first = false;
  }
  return line + "\n";
}

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }

/// Everything the stages share.
struct Context {
  std::optional<forward::ForwardCache> cache;
  std::optional<forward::CachedForward> fwd;
  std::optional<bayes::EvaluatedPrior> prior;
  std::optional<geometry::ConductorDomain> truth;
  std::vector<double> f_true;
  std::optional<bayes::NoiseModel> noise;
  std::vector<double> y;
};

geometry::ConductorDomain resolve_truth(const ExperimentConfig& cfg, const bayes::EvaluatedPrior& prior) {
  if (cfg.truth.family_index) {
    if (*cfg.truth.family_index >= prior.size()) {
      throw std::invalid_argument("truth.family_index " + std::to_string(*cfg.truth.family_index) +
                                  " is outside the prior of size " + std::to_string(prior.size()));
    }
    return prior.prior.domains[*cfg.truth.family_index];
  }
  return geometry::ConductorDomain(cfg.outer, geometry::CavitySet{cfg.truth.cavities, cfg.prior.delta_sep(),
                                                                  cfg.prior.delta_in()});
}

priors::PriorEnsemble resolve_prior(const ExperimentConfig& cfg) {
  if (cfg.prior.mode == priors::PriorSpec::Mode::finite_list) return priors::enumerate_finite(cfg.prior);
  return priors::sample_prior(cfg.prior, cfg.prior_samples, derive_seed(cfg.seed, "prior")).ensemble;
}

json domain_list(const std::vector<geometry::ConductorDomain>& domains) {
  json arr = json::array();
  for (const auto& d : domains) arr.push_back(d.hash());
  return arr;
}

void stage_forward(const ExperimentConfig& cfg, const std::filesystem::path& out, Context& ctx, PipelineResult& res,
                   ArtifactWriter& w) {
  ctx.cache.emplace(cfg.cache_directory.value_or(out / "cache"));
  ctx.fwd.emplace(*ctx.cache, cfg.grid, cfg.flux, cfg.solver, cfg.allow_compute);
  ctx.prior = bayes::evaluate_prior(resolve_prior(cfg), *ctx.fwd);
  ctx.truth.emplace(resolve_truth(cfg, *ctx.prior));
  ctx.f_true = ctx.fwd->evaluate(*ctx.truth).values;
  const forward::ForwardBound bound = ctx.fwd->bound(cfg.outer);
  res.c_f = bound.value;
  res.c_f_std_error = bound.std_error;
  res.sigma = cfg.noise.sigma.value_or(bayes::default_sigma(ctx.prior->forward_values, cfg.noise.relative));
  ctx.noise = bayes::NoiseModel{res.sigma, cfg.grid.size()};

  json domains = json::array();
  for (std::size_t k = 0; k < ctx.prior->size(); ++k) {
    domains.push_back({{"hash", ctx.prior->prior.domains[k].hash()},
                       {"canonical", json::parse(geometry::canonical_json(ctx.prior->prior.domains[k]))},
                       {"mass", ctx.prior->prior.masses[k]},
                       {"forward", ctx.prior->forward_values[k]}});
  }
  w.write_json("forward.json", {{"schema_version", kArtifactSchemaVersion},
                                {"c_f", res.c_f},
                                {"c_f_std_error", res.c_f_std_error},
                                {"sigma", res.sigma},
                                {"truth_hash", ctx.truth->hash()},
                                {"f_true", ctx.f_true},
                                {"domains", domains}});
}

void stage_data(const ExperimentConfig& cfg, Context& ctx, ArtifactWriter& w) {
  std::optional<bayes::NoiseModel> noise;
  if (cfg.noise.enabled) noise = ctx.noise;
  ctx.y = bayes::simulate_data(*ctx.truth, *ctx.fwd, noise, derive_seed(cfg.seed, "noise")).values;
  w.write_json("data.json", {{"schema_version", kArtifactSchemaVersion},
                             {"truth_hash", ctx.truth->hash()},
                             {"truth", json::parse(geometry::canonical_json(*ctx.truth))},
                             {"noise_enabled", cfg.noise.enabled},
                             {"sigma", ctx.noise->sigma},
                             {"f_true", ctx.f_true},
                             {"y", ctx.y}});
}

void stage_posterior(Context& ctx, PipelineResult& res, ArtifactWriter& w) {
  res.posterior = bayes::posterior(*ctx.prior, ctx.y, *ctx.noise);
  res.dual_discrepancy = bayes::dual_construction_discrepancy(*ctx.prior, ctx.y, *ctx.noise);
  const auto& p = *res.posterior;
  w.write_json("posterior.json", {{"schema_version", kArtifactSchemaVersion},
                                  {"id", p.id()},
                                  {"evidence", p.evidence},
                                  {"log_evidence", p.log_evidence},
                                  {"evidence_std_error", p.evidence_std_error},
                                  {"normalized", p.normalized},
                                  {"dual_construction_discrepancy", res.dual_discrepancy},
                                  {"domains", domain_list(p.domains)},
                                  {"weights", p.weights}});
}

void stage_ratio(const ExperimentConfig& cfg, PipelineResult& res, ArtifactWriter& w) {
  const bayes::DomainRatioField field =
      bayes::domain_ratio(*res.posterior, bayes::ratio_grid(cfg.outer, cfg.ratio.resolution));
  std::string body = "x,y,rho\n";
  for (std::size_t i = 0; i < field.points.size(); ++i) {
    body += csv_row({num(field.points[i][0]), num(field.points[i][1]), num(field.rho[i])});
  }
  w.write("ratio.csv", body);
}

void stage_stability(const ExperimentConfig& cfg, Context& ctx, PipelineResult& res, ArtifactWriter& w) {
  bayes::PairPolicy policy = cfg.stability.policy;
  policy.norm_cap = cfg.stability.norm_cap_factor * res.c_f;
  const auto pairs =
      bayes::generate_pairs(*ctx.prior, *ctx.noise, policy, cfg.stability.pairs, derive_seed(cfg.seed, "stability"));
  std::optional<double> c_f;
  if (ctx.prior->prior.kind == priors::PriorEnsemble::Kind::sampled) c_f = res.c_f;
  res.stability = bayes::verify_stability(*ctx.prior, pairs, *ctx.noise,
                                          bayes::ratio_grid(cfg.outer, cfg.ratio.resolution), c_f);
  std::string body = "pair_id,dy_norm,sigma_sup,hell,rhs_hell,max_drho,rhs_ratio,margin_hell,margin_ratio,l1\n";
  for (const auto& r : res.stability->records) {
    body += csv_row({num(r.pair_id), num(r.dy_norm), num(r.sigma_sup), num(r.hell), num(r.rhs_hell),
                     num(r.max_drho), num(r.rhs_ratio), num(r.margin_hell), num(r.margin_ratio), num(r.l1)});
  }
  w.write("stability.csv", body);
}

void stage_disintegration(const ExperimentConfig& cfg, Context& ctx, PipelineResult& res, ArtifactWriter& w) {
  const auto battery = bayes::standard_battery(*ctx.prior, ctx.noise->sigma, derive_seed(cfg.seed, "battery"));
  res.disintegration = bayes::check_disintegration(*ctx.prior, *ctx.noise, battery, cfg.disintegration.samples,
                                                   derive_seed(cfg.seed, "disint"));
  std::string body = "name,joint_mean,posterior_mean,difference,std_error,pass\n";
  for (const auto& e : res.disintegration->entries) {
    body += csv_row({e.name, num(e.joint_mean), num(e.posterior_mean), num(e.difference), num(e.std_error),
                     e.pass ? "true" : "false"});
  }
  w.write("disintegration.csv", body);
}

void stage_averaging(const ExperimentConfig& cfg, Context& ctx, PipelineResult& res, ArtifactWriter& w) {
  res.averaging = bayes::averaging_study(*ctx.prior, ctx.f_true, *ctx.noise, cfg.averaging.replicates,
                                         cfg.averaging.seeds, derive_seed(cfg.seed, "average"));
  std::string body = "replicates,median_hellinger\n";
  for (const auto& row : res.averaging) body += csv_row({num(row.replicates), num(row.median_hellinger)});
  w.write("averaging.csv", body);
}

void stage_lemma(const ExperimentConfig& cfg, PipelineResult& res, ArtifactWriter& w) {
  priors::PriorSpec spec;
  spec.mode = priors::PriorSpec::Mode::parametric;
  spec.outer = cfg.outer;
  spec.separation_margin = cfg.prior.separation_margin;
  spec.containment_margin = cfg.prior.containment_margin;
  spec.parametric = cfg.lemma.shapes;
  const auto sampled = priors::sample_prior(spec, cfg.lemma.domains, derive_seed(cfg.seed, "lemma"));
  const auto& domains = sampled.ensemble.domains;
  const std::size_t ne = cfg.lemma.eps.size();
  res.lemma.assign(domains.size() * ne, LemmaRecord{});
  parallel_for(res.lemma.size(), 0, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const std::size_t d = t / ne;
      const double eps = cfg.lemma.eps[t % ne];
      const geometry::Shape shape = domains[d];
      const geometry::GridDomain approx = geometry::approximate_domain(shape, eps);
      LemmaRecord& r = res.lemma[t];
      r.domain_id = d;
      r.eps = eps;
      r.hausdorff = geometry::hausdorff_distance(shape, geometry::Shape(approx));
      r.ratio = r.hausdorff / eps;
      r.cubes = approx.size();
      const auto side = static_cast<std::size_t>(std::ceil(2.0 * cfg.outer.radius / eps)) + 2;
      r.cube_bound = side * side;
      r.violation = !(r.hausdorff < std::numbers::sqrt2 * eps) || r.cubes > r.cube_bound;
    }
  });
  std::string body = "domain_id,eps,hausdorff,ratio,cubes,cube_bound,violation\n";
  for (const auto& r : res.lemma) {
    body += csv_row({num(r.domain_id), num(r.eps), num(r.hausdorff), num(r.ratio), num(r.cubes), num(r.cube_bound),
                     r.violation ? "true" : "false"});
  }
  w.write("lemma.csv", body);
}

}  // namespace

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::forward: return "forward";
    case Stage::data: return "data";
    case Stage::posterior: return "posterior";
    case Stage::ratio: return "ratio";
    case Stage::stability: return "stability";
    case Stage::disintegration: return "disintegration";
    case Stage::averaging: return "averaging";
    case Stage::lemma: return "lemma";
  }
  return "unknown";
}

const char* library_version() { return CAVITY_BAYES_VERSION; }

StageError::StageError(Stage s, const std::string& message)
    : std::runtime_error(std::string("stage ") + stage_name(s) + ": " + message), stage(s) {}

bool PipelineResult::bound_violation() const {
  if (stability && stability->violations() > 0) return true;
  if (disintegration && !disintegration->passed()) return true;
  for (std::size_t i = 1; i < averaging.size(); ++i) {
    if (averaging[i].median_hellinger > averaging[i - 1].median_hellinger) return true;
  }
  return std::any_of(lemma.begin(), lemma.end(), [](const LemmaRecord& r) { return r.violation; });
}

std::vector<Stage> default_stages(const ExperimentConfig& cfg) {
  std::vector<Stage> s{Stage::forward, Stage::data, Stage::posterior};
  if (cfg.ratio.enabled) s.push_back(Stage::ratio);
  if (cfg.stability.enabled) s.push_back(Stage::stability);
  if (cfg.disintegration.enabled) s.push_back(Stage::disintegration);
  if (cfg.averaging.enabled) s.push_back(Stage::averaging);
  return s;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                            std::vector<Stage> stages) {
  if (stages.empty()) stages = default_stages(cfg);
  stages = close_dependencies(std::move(stages));
  std::filesystem::create_directories(out_dir);

  PipelineResult res;
  res.out_dir = out_dir;
  Context ctx;
  ArtifactWriter w(out_dir);
  json timings = json::object();
  std::optional<StageError> failure;

  for (Stage s : stages) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      switch (s) {
        case Stage::forward: stage_forward(cfg, out_dir, ctx, res, w); break;
        case Stage::data: stage_data(cfg, ctx, w); break;
        case Stage::posterior: stage_posterior(ctx, res, w); break;
        case Stage::ratio: stage_ratio(cfg, res, w); break;
        case Stage::stability: stage_stability(cfg, ctx, res, w); break;
        case Stage::disintegration: stage_disintegration(cfg, ctx, res, w); break;
        case Stage::averaging: stage_averaging(cfg, ctx, res, w); break;
        case Stage::lemma: stage_lemma(cfg, res, w); break;
      }
    } catch (const std::exception& e) {
      failure.emplace(s, e.what());
    }
    timings[stage_name(s)] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (failure) break;
  }

  if (ctx.cache) {
    res.cache_hits = ctx.cache->hits();
    res.cache_misses = ctx.cache->misses();
  }
  if (ctx.fwd) res.simulations = ctx.fwd->simulations();
  res.complete = !failure;
  if (failure) {
    res.failed_stage = failure->stage;
    res.error = failure->what();
  }

  json stage_names = json::array();
  for (Stage s : stages) stage_names.push_back(stage_name(s));
  json summary = {{"sigma", res.sigma}, {"c_f", res.c_f}, {"c_f_std_error", res.c_f_std_error}};
  if (res.stability) {
    summary["stability_violations"] = {{"hellinger", res.stability->hellinger_violations},
                                       {"ratio", res.stability->ratio_violations},
                                       {"chain", res.stability->chain_violations}};
  }
  if (res.disintegration) summary["disintegration_passed"] = res.disintegration->passed();
  if (!res.averaging.empty()) {
    json medians = json::array();
    for (const auto& row : res.averaging) medians.push_back(row.median_hellinger);
    summary["averaging_medians"] = medians;
  }
  if (!res.lemma.empty()) {
    double worst = 0.0;
    for (const auto& r : res.lemma) worst = std::max(worst, r.ratio);
    summary["lemma_max_ratio"] = worst;
  }
  summary["bound_violation"] = res.bound_violation();

  const json manifest = {{"schema_version", kArtifactSchemaVersion},
                         {"version", library_version()},
                         {"scenario", cfg.scenario},
                         {"seed", cfg.seed},
                         {"config_digest", config_digest(cfg)},
                         {"stages", stage_names},
                         {"complete", res.complete},
                         {"failed_stage", res.failed_stage ? json(stage_name(*res.failed_stage)) : json(nullptr)},
                         {"error", res.complete ? json(nullptr) : json(res.error)},
                         {"artifacts", w.digests()},
                         {"cache", {{"hits", res.cache_hits}, {"misses", res.cache_misses},
                                    {"simulations", res.simulations}}},
                         {"summary", summary},
                         {"timings", timings}};
  {
    std::ofstream out(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
    out << manifest.dump(2) << "\n";
  }
  if (failure) throw *failure;
  return res;
}

}  // namespace cavity_bayes::harness
