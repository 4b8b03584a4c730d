#include "cli_app.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "holosect/cli.hpp"
#include "holosect/errors.hpp"

namespace holosect {

namespace {

std::vector<std::string> split_suites(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    std::string s;
    while (std::getline(ss, s, ',')) {
      if (!s.empty()) out.push_back(s);
    }
  }
  return out;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Numerical checks for continuous families of complex manifolds"};
  app.require_subcommand(1);

  std::string fixture;
  std::string config_path;
  std::size_t grid = 0;
  std::vector<std::string> suites;
  std::uint64_t seed = 0;
  std::string out;
  bool timing = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--fixture", fixture, "Built-in fixture name");
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--grid", grid, "Number of base grid points")->check(CLI::Range(3, 4096));
    cmd->add_option("--seed", seed, "Random seed");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "Run verification suites and write a JSON report");
  add_common(run_cmd);
  run_cmd->add_option("--suite", suites, "Suite name or 'all' (repeatable, comma separated)");
  run_cmd->add_option("--out", out, "Report path (default: stdout)");
  run_cmd->add_flag("--timing", timing, "Include wall times in the report");
  CLI::App* describe_cmd = app.add_subcommand("describe", "Summarize a fixture");
  add_common(describe_cmd);
  CLI::App* constants_cmd = app.add_subcommand("constants", "Estimate and print constants");
  add_common(constants_cmd);
  constants_cmd->add_option("--out", out, "Output path (default: stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!fixture.empty()) {
      cfg.fixture = fixture;
      cfg.family.reset();
    }
    if (grid != 0) cfg.grid = grid;
    CLI::App* active = app.get_subcommands().front();
    if (active->count("--seed") > 0) cfg.seed = seed;
    if (!suites.empty()) {
      RunConfig probe;
      probe = parse_config(nlohmann::json{{"suites", split_suites(suites)}});
      cfg.suites = probe.suites;
    }
    if (!out.empty()) cfg.out = out;
    if (timing) cfg.timing = true;

    auto emit = [&](const std::string& text) {
      if (cfg.out.empty()) {
        std::cout << text;
        return;
      }
      std::ofstream f(cfg.out);
      if (!f) throw ConfigError("cannot write '" + cfg.out + "'");
      f << text;
    };

    if (app.got_subcommand(describe_cmd)) {
      std::cout << describe_fixture(cfg);
      return 0;
    }
    if (app.got_subcommand(constants_cmd)) {
      const auto report = constants_report(cfg);
      emit(report.dump(2) + "\n");
      return report["passed"].get<bool>() ? 0 : 1;
    }
    const RunResult result = run(cfg);
    emit(result.report.dump(2) + "\n");
    if (!result.passed) std::cerr << "one or more suites failed\n";
    return result.passed ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const FixtureError& e) {
    std::cerr << "fixture error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace holosect
