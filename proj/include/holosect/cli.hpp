#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "holosect/family.hpp"

namespace holosect {

inline constexpr const char* kConfigSchema = "holosect.config/1";
inline constexpr const char* kReportSchema = "holosect.report/1";

struct Tolerances {
  double holomorphy = 1e-6;
  double cocycle = 1e-9;
  double point_equality = 1e-9;
  double christoffel_symmetry = 0.0;
  double exp_identity = 1e-6;
  double picard_agreement = 1e-6;
  double inverse_roundtrip = 1e-9;
  double chart_roundtrip = 1e-8;
  double commutation = 1e-8;
  double frame = 1e-10;
  double partition = 1e-12;
  // Continuity modulus must shrink by this factor when the grid doubles.
  double refinement_ratio = 0.75;
};

struct SectionPoint {
  ChartId chart = 0;
  Vec z;
  GridIndex t = 0;
};

struct RunConfig {
  std::string fixture = "product-p1";
  // Inline family description {"kind": ..., "params": {...}}; overrides `fixture`.
  std::optional<nlohmann::json> family;
  std::size_t grid = 16;
  std::vector<std::string> suites{"all"};
  std::string out;
  std::uint64_t seed = 1;
  double margin = 0.1;
  bool timing = false;
  Tolerances tolerances;
  // Base section for the sections suite; empty means the fixture default.
  std::vector<SectionPoint> section;
};

const std::vector<std::string>& suite_names();

// Throws ConfigError on malformed input.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json tolerances_json(const Tolerances& tol);

// Builds the family named or described by the config. FixtureError when unknown.
std::shared_ptr<const Atlas> build_family(const RunConfig& config, std::size_t grid);

struct RunResult {
  nlohmann::json report;
  bool passed = false;
};

RunResult run(const RunConfig& config);
// Estimated constants with their revalidation verdicts.
nlohmann::json constants_report(const RunConfig& config);
std::string describe_fixture(const RunConfig& config);

}  // namespace holosect
