#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cavity_bayes/commands.hpp"
#include "cavity_bayes/digest.hpp"

namespace harness = cavity_bayes::harness;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("cavity_bayes_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string body = slurp(e.path());
    if (e.path().filename() == "manifest.json") {
      json j = json::parse(body);
      j.erase("timings");
      body = j.dump();
    }
    out[fs::relative(e.path(), dir).generic_string()] = body;
  }
  return out;
}

const std::string kSmall = R"(
scenario = "small"
seed = 5

[solver]
step = 4e-3
paths = 200

[prior]
mode = "finite"

[[prior.domains]]
probability = 0.5
cavities = [{ center = [0.3, 0.0], radius = 0.2 }]

[[prior.domains]]
probability = 0.5
cavities = [{ center = [-0.3, 0.0], radius = 0.2 }]

[truth]
family_index = 0

[stability]
pairs = 10

[ratio]
resolution = 16
)";

}  // namespace

TEST_CASE("configuration diagnostics") {
  SUBCASE("unknown key carries its line") {
    try {
      (void)harness::parse_config("scenario = \"x\"\nseed = 1\n\n[solver]\nstepp = 0.1\n");
      FAIL("expected ConfigError");
    } catch (const harness::ConfigError& e) {
      CHECK(e.line == 5);
      CHECK(std::string(e.what()).find("line 5") != std::string::npos);
      CHECK(e.field.find("stepp") != std::string::npos);
    }
  }
  SUBCASE("seed is mandatory") {
    CHECK_THROWS_AS((void)harness::parse_config("scenario = \"x\"\n"), harness::ConfigError);
  }
  SUBCASE("syntax errors") {
    try {
      (void)harness::parse_config("scenario = \"x\"\nseed = = 1\n");
      FAIL("expected ConfigError");
    } catch (const harness::ConfigError& e) {
      CHECK(e.line == 2);
    }
  }
  SUBCASE("invalid values") {
    CHECK_THROWS_AS((void)harness::parse_config("scenario = \"x\"\nseed = 1\n[solver]\nstep = -1.0\n"),
                    harness::ConfigError);
    CHECK_THROWS_AS((void)harness::parse_config("scenario = \"x\"\nseed = 1\n[solver]\nstep = 2.0\n"),
                    harness::ConfigError);
  }
  SUBCASE("malformed config exits with status 1") {
    const fs::path dir = scratch("badcfg");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.toml") << "scenario = \"x\"\nseed = 1\n[prior]\nmode = \"nonsense\"\n";
    std::ostringstream out;
    std::ostringstream err;
    CHECK(harness::run_command(harness::Command::run, dir / "bad.toml", dir / "out", std::nullopt, out, err) ==
          harness::kExitError);
    CHECK(err.str().find("line 4") != std::string::npos);
    CHECK(err.str().find("prior.mode") != std::string::npos);
    fs::remove_all(dir);
  }
  SUBCASE("shipped configs parse") {
    for (const char* name : {"benchmark.toml", "degenerate.toml", "disintegration.toml", "lemma.toml"}) {
      CHECK_NOTHROW((void)harness::load_config(fs::path(CAVITY_BAYES_CONFIG_DIR) / name));
    }
    CHECK(harness::load_grid_file(fs::path(CAVITY_BAYES_CONFIG_DIR) / "grid.toml").grid.size() == 16);
  }
}

TEST_CASE("config digest tracks every input") {
  const auto base = harness::parse_config(kSmall);
  auto same = harness::parse_config(kSmall);
  CHECK(harness::config_digest(base) == harness::config_digest(same));
  same.solver.paths += 1;
  CHECK(harness::config_digest(base) != harness::config_digest(same));
  auto reseeded = base;
  reseeded.reseed(6);
  CHECK(harness::config_digest(base) != harness::config_digest(reseeded));
  CHECK(reseeded.solver.base_seed != base.solver.base_seed);
  auto threads = base;
  threads.solver.workers = 3;
  CHECK(harness::config_digest(base) == harness::config_digest(threads));
}

TEST_CASE("degenerate pipeline") {
  const auto cfg = harness::load_config(fs::path(CAVITY_BAYES_CONFIG_DIR) / "degenerate.toml");
  const fs::path out = scratch("degenerate");
  const auto res = harness::run_pipeline(cfg, out);
  REQUIRE(res.posterior);
  CHECK(res.posterior->weights == std::vector<double>{1.0});
  CHECK(res.complete);

  std::istringstream csv(slurp(out / "ratio.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "x,y,rho");
  const auto& truth = res.posterior->domains.front();
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    double x = 0;
    double y = 0;
    double rho = 0;
    char c1 = 0;
    char c2 = 0;
    std::istringstream(line) >> x >> c1 >> y >> c2 >> rho;
    CHECK(rho == (truth.contains(cavity_bayes::make_point(x, y)) ? 1.0 : 0.0));
    ++rows;
  }
  CHECK(rows == 64 * 64);

  const json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["complete"] == true);
  CHECK(manifest["schema_version"] == harness::kArtifactSchemaVersion);
  CHECK(manifest["config_digest"] == harness::config_digest(cfg));
  for (const auto& [name, digest] : manifest["artifacts"].items()) {
    CHECK(digest == cavity_bayes::sha256_hex(slurp(out / name)));
  }
  fs::remove_all(out);
}

TEST_CASE("reruns are byte-identical and reuse the forward cache") {
  const auto cfg = harness::parse_config(kSmall);
  const fs::path a = scratch("rerun_a");
  const fs::path b = scratch("rerun_b");
  const auto first = harness::run_pipeline(cfg, a);
  (void)harness::run_pipeline(cfg, b);
  CHECK(first.simulations > 0);
  CHECK(snapshot(a) == snapshot(b));

  const auto again = harness::run_pipeline(cfg, a);
  CHECK(again.simulations == 0);
  CHECK(again.cache_misses == 0);
  CHECK(again.cache_hits > 0);
  CHECK(snapshot(a).at("posterior.json") == snapshot(b).at("posterior.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("stage failures are tagged and flagged in the manifest") {
  auto cfg = harness::parse_config(kSmall);
  cfg.allow_compute = false;
  const fs::path out = scratch("nocompute");
  CHECK_THROWS_AS((void)harness::run_pipeline(cfg, out), harness::StageError);
  const json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["complete"] == false);
  CHECK(manifest["failed_stage"] == "forward");

  std::ostringstream o;
  std::ostringstream e;
  CHECK(harness::run_command(harness::Command::run, cfg, out, o, e) == harness::kExitError);
  CHECK(e.str().find("stage forward") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("exit codes") {
  auto cfg = harness::parse_config(kSmall);
  const fs::path out = scratch("exit");
  std::ostringstream o;
  std::ostringstream e;
  CHECK(harness::run_command(harness::Command::verify_bounds, cfg, out, o, e) == harness::kExitOk);
  CHECK(o.str().find("0 hellinger / 0 ratio / 0 chain violations") != std::string::npos);

  harness::PipelineResult violated;
  violated.stability = cavity_bayes::bayes::StabilityReport{};
  CHECK_FALSE(violated.bound_violation());
  violated.stability->hellinger_violations = 1;
  CHECK(violated.bound_violation());

  cfg.lemma.domains = 5;
  cfg.lemma.eps = {0.25, 0.125};
  CHECK(harness::run_command(harness::Command::approx_lemma, cfg, out, o, e) == harness::kExitOk);
  fs::remove_all(out);
}

TEST_CASE("forward subcommand") {
  const fs::path out = scratch("fwdcmd");
  harness::ForwardRequest req;
  req.domain = fs::path(CAVITY_BAYES_CONFIG_DIR) / "domain.json";
  req.grid = fs::path(CAVITY_BAYES_CONFIG_DIR) / "grid.toml";
  req.paths = 100;
  req.step = 4e-3;
  req.seed = 3;
  req.out_dir = out;
  std::ostringstream o;
  std::ostringstream e;
  CHECK(harness::cmd_forward(req, o, e) == harness::kExitOk);
  CHECK(o.str().find("computed ") != std::string::npos);
  std::ostringstream o2;
  CHECK(harness::cmd_forward(req, o2, e) == harness::kExitOk);
  CHECK(o2.str().find("cached ") != std::string::npos);
  req.step = 5.0;
  CHECK(harness::cmd_forward(req, o2, e) == harness::kExitError);
  fs::remove_all(out);
}
