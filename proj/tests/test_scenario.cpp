#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qlmi/error.hpp"
#include "qlmi/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace qlmi;
using namespace qlmi::scenario;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "qlmi_test_scenario";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_field(const std::vector<Violation>& v, const std::string& field) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.field == field; });
}

}  // namespace

TEST_CASE("valid scenario passes") {
  const auto cfg = parse_scenario(write_file("ok.yaml", "kind: squeezing_scan\nparams:\n  d: 100\n"));
  CHECK(cfg.id == "ok");
  CHECK(validate_scenario(cfg).empty());
  CHECK_FALSE(is_stochastic(cfg));
}

TEST_CASE("eta out of range names the field") {
  const auto cfg = parse_scenario(write_file("eta.yaml", "kind: squeezing_scan\nparams:\n  eta: 1.2\n"));
  const auto v = validate_scenario(cfg);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "params.eta");
}

TEST_CASE("unknown parameters and axes") {
  const auto cfg = parse_scenario(write_file("axis.yaml",
                                             "kind: hybrid_optomech\n"
                                             "params:\n  n_bar: 1\n  bogus: 3\n"
                                             "sweep:\n  - name: kappa\n    values: [0.5, 1]\n"
                                             "  - name: temperature_typo\n    values: [1]\n"));
  const auto v = validate_scenario(cfg);
  CHECK(has_field(v, "params.bogus"));
  CHECK(has_field(v, "sweep[1].name"));
  CHECK_FALSE(has_field(v, "sweep[0].name"));
}

TEST_CASE("sweep values are checked per value") {
  const auto cfg = parse_scenario(
      write_file("values.yaml", "kind: dissipative_steady_state\nsweep:\n  - name: z\n    values: [2.5, -1]\n"));
  CHECK(has_field(validate_scenario(cfg), "sweep[0].values[1]"));
  // Z < 1 passes the schema but not the ideal model: a per-cell precondition
  const auto cell = parse_scenario(
      write_file("cell.yaml", "kind: dissipative_steady_state\nsweep:\n  - name: z\n    values: [2.5, 0.5]\n"));
  const auto v = validate_scenario(cell);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "cell[1]");
}

TEST_CASE("stochastic scenarios need a seed") {
  const auto cfg = parse_scenario(write_file("noseed.yaml", "kind: memory\nparams:\n  shots: 100\n"));
  CHECK(is_stochastic(cfg));
  CHECK(has_field(validate_scenario(cfg), "seed"));
  auto seeded = cfg;
  seeded.seed = 7;
  CHECK(validate_scenario(seeded).empty());
  RunOptions opts;
  opts.out_dir = scratch() / "noseed_out";
  CHECK_THROWS_AS(run_scenario(cfg, opts), Error);
  opts.seed = 9;
  CHECK_NOTHROW(run_scenario(cfg, opts));
}

TEST_CASE("malformed files are parse errors") {
  const auto check_parse = [](const fs::path& p) {
    try {
      parse_scenario(p);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
    }
  };
  check_parse(write_file("broken.yaml", "kind: memory\nparams: [1, 2\n"));
  check_parse(write_file("listroot.yaml", "- 1\n- 2\n"));
  check_parse(scratch() / "missing.yaml");
}

TEST_CASE("missing or unknown kind is a violation") {
  CHECK(has_field(validate_scenario(parse_scenario(write_file("nokind.yaml", "params:\n  z: 2\n"))), "kind"));
  CHECK(has_field(validate_scenario(parse_scenario(write_file("badkind.yaml", "kind: teleportation\n"))), "kind"));
}

TEST_CASE("cells expand first axis slowest") {
  const auto cfg = parse_scenario(write_file("grid.yaml",
                                             "kind: hybrid_optomech\n"
                                             "sweep:\n  - name: n_bar\n    values: [0, 10]\n"
                                             "  - name: kappa\n    values: [0.5, 1, 2]\n"));
  const auto cells = expand_cells(cfg);
  REQUIRE(cells.size() == 6);
  CHECK(cells[0]["n_bar"] == 0);
  CHECK(cells[2]["kappa"] == 2);
  CHECK(cells[3]["n_bar"] == 10);
  CHECK(cells[3]["kappa"] == 0.5);
  CHECK(cells[0].contains("temperature"));
}

TEST_CASE("cell seeds are distinct and reproducible") {
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < 1000; ++i)
    seen.insert(cell_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(cell_seed(42, 3) == cell_seed(42, 3));
  CHECK(cell_seed(42, 3) != cell_seed(43, 3));
}

TEST_CASE("runs write byte-identical results across job counts") {
  const auto cfg = parse_scenario(write_file("mem.yaml",
                                             "kind: memory\nseed: 5\n"
                                             "params:\n  shots: 200\n  grid_points: 3\n"
                                             "sweep:\n  - name: input_x\n    values: [0, 1, 2]\n"));
  RunOptions a;
  a.out_dir = scratch() / "run_a";
  RunOptions b = a;
  b.out_dir = scratch() / "run_b";
  b.jobs = 3;
  const auto ra = run_scenario(cfg, a);
  run_scenario(cfg, b);
  CHECK(ra.physical);
  REQUIRE(ra.cells.size() == 3);
  CHECK(ra.cells[1].seed.value() == cell_seed(5, 1));
  CHECK(slurp(a.out_dir / "mem.csv") == slurp(b.out_dir / "mem.csv"));
  CHECK(fs::exists(a.out_dir / "mem.timing.json"));
  const std::string csv = slurp(a.out_dir / "mem.csv");
  CHECK(csv.rfind("cell,seed,", 0) == 0);

  RunOptions j = a;
  j.out_dir = scratch() / "run_json";
  j.format = Format::Json;
  run_scenario(cfg, j);
  const auto doc = Json::parse(slurp(j.out_dir / "mem.json"));
  CHECK(doc["cells"].size() == 3);
  CHECK(doc["cells"][0]["outputs"]["var_x"].get<double>() == doctest::Approx(0.92));
}

TEST_CASE("steady-state scenario outputs") {
  const auto cfg = parse_scenario(write_file("ss.yaml", "kind: dissipative_steady_state\nparams:\n  z: 2.5\n"));
  RunOptions opts;
  opts.out_dir = scratch() / "ss";
  const auto r = run_scenario(cfg, opts);
  REQUIRE(r.cells.size() == 1);
  CHECK(r.cells[0].outputs["epr_variance"].get<double>() == doctest::Approx(0.16).epsilon(1e-10));
  CHECK(r.cells[0].outputs["unique"].get<bool>());
  CHECK(summarize(r).find("epr_variance") != std::string::npos);
}

TEST_CASE("shipped scenarios list in stable order and validate") {
  const auto list = list_scenarios(default_scenario_dir());
  CHECK(list.size() >= 7);
  CHECK(std::is_sorted(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.id < b.id; }));
  std::set<std::string> kinds;
  for (const auto& s : list) {
    CHECK_FALSE(s.anchor.empty());
    kinds.insert(s.kind);
    CHECK(validate_scenario(parse_scenario(s.file)).empty());
  }
  CHECK(kinds.size() == 7);
}
