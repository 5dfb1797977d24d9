// Command-line front end: sim / portrait / check-descent / embed.
// Exit codes: 0 success, 2 config error, 3 runtime budget or degeneracy.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "geosmc/scenario.hpp"

namespace {

struct CommonFlags {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> step;
  std::optional<double> regularize;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--out", flags.out_dir, "Output directory")
      ->default_val(".");
  cmd->add_option("--seed", flags.seed, "Override the scenario seed");
  cmd->add_option("--step", flags.step, "Override the integrator step");
  cmd->add_option("--regularize", flags.regularize,
                  "Override the boundary-layer width epsilon");
  cmd->add_flag("--quiet", flags.quiet, "Suppress per-run progress lines");
}

geosmc::Scenario load_with_overrides(const std::string& path,
                                     const CommonFlags& flags) {
  geosmc::Scenario sc = geosmc::Scenario::load(path);
  if (flags.seed) sc.seed = *flags.seed;
  if (flags.step) {
    sc.integrator.step = *flags.step;
    sc.integrator.validate();
  }
  if (flags.regularize) {
    if (*flags.regularize <= 0.0)
      throw geosmc::ConfigError("--regularize must be positive");
    sc.controller.boundary_layer = *flags.regularize;
    sc.build_system();  // re-run constructor checks
  }
  return sc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliding-mode control simulation on non-Euclidean state spaces"};
  app.require_subcommand(1);

  std::string config_path;
  CommonFlags flags;

  CLI::App* sim = app.add_subcommand("sim", "Run a simulation scenario");
  sim->add_option("config", config_path, "Scenario TOML file")->required();
  add_common(sim, flags);

  CLI::App* portrait =
      app.add_subcommand("portrait", "Run a phase-portrait scenario");
  portrait->add_option("config", config_path, "Scenario TOML file")->required();
  add_common(portrait, flags);

  CLI::App* descent =
      app.add_subcommand("check-descent", "Run a descent-condition check");
  descent->add_option("config", config_path, "Scenario TOML file")->required();
  add_common(descent, flags);

  std::string embed_manifold, embed_in, embed_out;
  CLI::App* embed = app.add_subcommand(
      "embed", "Map theta/omega CSV columns through a manifold embedding");
  embed->add_option("manifold", embed_manifold, "mobius or cylinder")->required();
  embed->add_option("csv-in", embed_in, "Input CSV")->required();
  embed->add_option("csv-out", embed_out, "Output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (embed->parsed()) {
      geosmc::embed_csv(geosmc::manifold_from_string(embed_manifold), embed_in,
                        embed_out);
      return 0;
    }
    const geosmc::Scenario sc = load_with_overrides(config_path, flags);
    geosmc::RunResult result;
    if (sim->parsed())
      result = geosmc::run_scenario(sc, flags.out_dir, flags.quiet);
    else if (portrait->parsed())
      result = geosmc::run_portrait(sc, flags.out_dir, flags.quiet);
    else
      result = geosmc::run_check_descent(sc, flags.out_dir, flags.quiet);
    return result.exit_code;
  } catch (const geosmc::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const geosmc::Unsupported& err) {
    std::cerr << "unsupported: " << err.what() << "\n";
    return 2;
  } catch (const geosmc::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
}
