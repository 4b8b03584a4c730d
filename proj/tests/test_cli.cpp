#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "cli_app.hpp"
#include "holosect/cli.hpp"
#include "holosect/errors.hpp"

using namespace holosect;
using nlohmann::json;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("holosect_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  return {std::istreambuf_iterator<char>(f), {}};
}

const json& suite(const json& report, const std::string& name) {
  for (const auto& s : report["suites"]) {
    if (s["name"] == name) return s;
  }
  throw std::runtime_error("suite missing: " + name);
}

}  // namespace

TEST_CASE("config parsing") {
  CHECK_THROWS_AS(parse_config(json{{"fixure", "product-p1"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"suites", {"atlas", "nope"}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"grid", 2}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"schema", "other/9"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"tolerances", {{"holomorphy", -1.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json::array()), ConfigError);

  const RunConfig c = parse_config(json{{"fixture", "twisted-p1"},
                                        {"grid", 8},
                                        {"suite", "atlas"},
                                        {"seed", 42},
                                        {"tolerances", {{"holomorphy", 1e-3}}}});
  CHECK(c.fixture == "twisted-p1");
  CHECK(c.grid == 8);
  CHECK(c.suites == std::vector<std::string>{"atlas"});
  CHECK(c.seed == 42);
  CHECK(c.tolerances.holomorphy == 1e-3);
  CHECK(c.tolerances.cocycle == 1e-9);
}

TEST_CASE("inline family description") {
  RunConfig c = parse_config(json{{"family", {{"kind", "p1"}, {"params", {{"twist", "winding"}, {"winding", 2}}}}}});
  const auto atlas = build_family(c, 8);
  CHECK(atlas->chart_count() == 2);
  c = parse_config(json{{"family", {{"kind", "p1"}, {"params", {{"twist", "spiral"}}}}}});
  CHECK_THROWS_AS(build_family(c, 8), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"family", {{"params", json::object()}}}}), ConfigError);
}

TEST_CASE("exit codes") {
  CHECK(cli_main({"run", "--fixture", "no-such-family"}) == 2);
  CHECK(cli_main({"run", "--suite", "bogus"}) == 2);
  CHECK(cli_main({"frobnicate"}) == 2);
  CHECK(cli_main({"run", "--config", temp_path("missing.json")}) == 2);

  const std::string out = temp_path("corrupt.json");
  CHECK(cli_main({"run", "--fixture", "twisted-p1-corrupt", "--suite", "atlas", "--out", out}) == 1);
  const json report = json::parse(slurp(out));
  const json& atlas = suite(report, "atlas");
  CHECK_FALSE(atlas["passed"].get<bool>());
  CHECK(atlas.contains("witnesses"));
  std::remove(out.c_str());
}

TEST_CASE("healthy product family passes every suite") {
  RunConfig c;
  c.fixture = "product-p1";
  const RunResult r = run(c);
  CHECK(r.passed);
  CHECK(r.report["suites"].size() == 5);
  for (const auto& s : r.report["suites"]) {
    CAPTURE(s["name"].get<std::string>());
    CHECK(s["passed"].get<bool>());
    CHECK_FALSE(s.contains("wall_time_s"));
  }
}

TEST_CASE("failing suite blocks later suites") {
  RunConfig c;
  c.fixture = "twisted-p1-corrupt";
  c.suites = {"atlas", "bumps"};
  const RunResult r = run(c);
  CHECK_FALSE(r.passed);
  CHECK(suite(r.report, "bumps").contains("skipped"));
}

TEST_CASE("same seed gives identical reports") {
  const std::string a = temp_path("det_a.json");
  const std::string b = temp_path("det_b.json");
  const std::vector<std::string> common{"run", "--fixture", "twisted-p1", "--grid", "8", "--suite", "atlas,bumps,metric",
                                        "--seed", "7"};
  auto with_out = [&](const std::string& path) {
    auto args = common;
    args.push_back("--out");
    args.push_back(path);
    return args;
  };
  CHECK(cli_main(with_out(a)) == 0);
  CHECK(cli_main(with_out(b)) == 0);
  const std::string ra = slurp(a);
  CHECK_FALSE(ra.empty());
  CHECK(ra == slurp(b));
  CHECK(json::parse(ra)["seed"] == 7);
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST_CASE("describe output") {
  RunConfig c;
  c.fixture = "product-p1";
  std::string text = describe_fixture(c);
  CHECK(text.find("charts: 2") != std::string::npos);
  CHECK(text.find("circle") != std::string::npos);
  c.fixture = "torus-pencil";
  text = describe_fixture(c);
  CHECK(text.find("charts: 9") != std::string::npos);
  CHECK(text.find("interval") != std::string::npos);
  CHECK(text.find("tau") != std::string::npos);
  CHECK(cli_main({"describe", "--fixture", "twisted-p1"}) == 0);
}
