#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cavity_bayes/commands.hpp"

namespace harness = cavity_bayes::harness;

int main(int argc, char** argv) {
  CLI::App app{"Bayesian cavity identification from boundary heat data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", harness::library_version());

  struct PipelineArgs {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
  };
  const std::map<std::string, std::pair<harness::Command, std::string>> pipeline_commands{
      {"run", {harness::Command::run, "Run every stage enabled in the config"}},
      {"verify-bounds", {harness::Command::verify_bounds, "Audit both stability bounds on random data pairs"}},
      {"ratio-field", {harness::Command::ratio_field, "Posterior and domain-ratio field for simulated data"}},
      {"check-disintegration", {harness::Command::check_disintegration, "Disintegration battery and dual posterior check"}},
      {"average", {harness::Command::average, "Hellinger distance versus number of averaged replicates"}},
      {"approx-lemma", {harness::Command::approx_lemma, "Hausdorff error of grid-cube approximations"}},
  };

  std::map<std::string, PipelineArgs> args;
  for (const auto& [name, entry] : pipeline_commands) {
    auto* sub = app.add_subcommand(name, entry.second);
    auto& a = args[name];
    sub->add_option("--config", a.config, "Experiment TOML file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a.out, "Artifact directory")->capture_default_str();
    sub->add_option("--seed", a.seed, "Override the global seed");
  }

  harness::ForwardRequest fwd;
  std::string crossing = "endpoint";
  auto* forward = app.add_subcommand("forward", "Compute F(D) for one domain into the forward cache");
  forward->add_option("--domain", fwd.domain, "Domain JSON file")->required()->check(CLI::ExistingFile);
  forward->add_option("--grid", fwd.grid, "Grid TOML file")->required()->check(CLI::ExistingFile);
  forward->add_option("--paths", fwd.paths, "Paths per quadrature node")->capture_default_str()->check(CLI::PositiveNumber);
  forward->add_option("--step", fwd.step, "Time step h")->capture_default_str()->check(CLI::PositiveNumber);
  forward->add_option("--seed", fwd.seed, "Base seed of the path streams")->capture_default_str();
  forward->add_option("--crossing", crossing, "Cavity test")->check(CLI::IsMember({"endpoint", "bridge"}));
  forward->add_option("--out", fwd.out_dir, "Cache directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? harness::kExitOk : harness::kExitError;
  }

  if (forward->parsed()) {
    fwd.crossing = crossing == "bridge" ? cavity_bayes::forward::CrossingCheck::bridge
                                        : cavity_bayes::forward::CrossingCheck::endpoint;
    return harness::cmd_forward(fwd, std::cout, std::cerr);
  }
  for (const auto& [name, entry] : pipeline_commands) {
    if (app.got_subcommand(name)) {
      const auto& a = args[name];
      return harness::run_command(entry.first, a.config, a.out, a.seed, std::cout, std::cerr);
    }
  }
  return harness::kExitError;
}
