#pragma once

// Declarative scenarios: a YAML file names a kind, a parameter block and
// optional sweep axes. Each cartesian cell of the sweep runs one pipeline;
// results go to CSV or JSON, wall time to a separate timing file so result
// files stay byte-identical across runs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qlmi::scenario {

using Json = nlohmann::ordered_json;

enum class Kind {
  DissipativeSteadyState,
  DissipativeTimecourse,
  Memory,
  Magnetometry,
  SqueezingScan,
  HybridOptomech,
  ZParameter,
};

const char* to_string(Kind kind) noexcept;
std::optional<Kind> kind_from_string(std::string_view name) noexcept;

enum class Format { Csv, Json };

std::optional<Format> format_from_string(std::string_view name) noexcept;

struct SweepAxis {
  std::string name;
  std::vector<Json> values;
};

struct ScenarioConfig {
  std::string id;
  std::string kind_name;
  std::string description;
  std::string anchor;  // the physical quantity or figure of merit reproduced
  std::optional<std::uint64_t> seed;
  Json params = Json::object();
  std::vector<SweepAxis> sweep;
  std::string format_name;  // "", "csv" or "json"
  std::string output_name;
  std::filesystem::path source;
};

/// Throws Error(ParseError) for unreadable or structurally malformed files.
ScenarioConfig parse_scenario(const std::filesystem::path& path);

struct Violation {
  std::string field;  // e.g. "params.eta", "sweep[0].name"
  std::string message;
};

/// Schema and physics preconditions of every cell; no pipeline is executed.
std::vector<Violation> validate_scenario(const ScenarioConfig& config);

struct RunOptions {
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;  // overrides the file's seed
  unsigned jobs = 1;
  std::optional<Format> format;       // overrides the file's format
};

struct CellResult {
  std::size_t index = 0;
  std::optional<std::uint64_t> seed;
  Json params = Json::object();
  Json outputs = Json::object();
  Json diagnostics = Json::object();
  std::vector<Json> series;
  bool physical = true;
  double wall_seconds = 0.0;
};

struct RunReport {
  std::string id;
  std::vector<CellResult> cells;
  std::vector<std::filesystem::path> files;
  bool physical = true;
  double wall_seconds = 0.0;
};

/// Validates, runs all cells on `jobs` workers and writes the result files.
/// Throws Error(ValidationError) listing violations; numerical failures
/// propagate with their own codes.
RunReport run_scenario(const ScenarioConfig& config, const RunOptions& options);

/// Per-cell seed from the root seed and the cell index (splitmix64).
std::uint64_t cell_seed(std::uint64_t root, std::size_t index) noexcept;

/// Cells of the sweep, first axis slowest; parameters merged over defaults.
std::vector<Json> expand_cells(const ScenarioConfig& config);

bool is_stochastic(const ScenarioConfig& config);

struct ScenarioInfo {
  std::string id;
  std::string kind;
  std::string anchor;
  std::filesystem::path file;
};

/// Scenarios in `dir`, sorted by id.
std::vector<ScenarioInfo> list_scenarios(const std::filesystem::path& dir);
std::filesystem::path default_scenario_dir();

/// Human-readable one-line summary per cell.
std::string summarize(const RunReport& report);

}  // namespace qlmi::scenario
