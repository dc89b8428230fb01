// qlmi: run, validate and list declarative scenarios through the C API.

#include "qlmi/qlmi.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

namespace {

enum Exit { kOk = 0, kParse = 2, kValidation = 3, kRuntime = 4 };

int exit_for(qlmi_status status) {
  switch (status) {
    case QLMI_OK: return kOk;
    case QLMI_PARSE_ERROR: return kParse;
    case QLMI_VALIDATION_ERROR: return kValidation;
    default: return kRuntime;
  }
}

int report(qlmi_status status, const std::string& path) {
  std::cerr << "qlmi: " << path << ": " << qlmi_status_name(status) << "\n" << qlmi_last_error() << "\n";
  return exit_for(status);
}

std::string default_out_dir() {
  const char* env = std::getenv("QLMI_OUTPUT_DIR");
  return env && *env ? env : "results";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum light-matter interface scenarios"};
  app.set_version_flag("--version", qlmi_version());
  app.require_subcommand(1);

  std::string file;
  std::string out_dir = default_out_dir();
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string format;
  std::string dir;

  auto* run = app.add_subcommand("run", "Run a scenario and write result files");
  run->add_option("file", file, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory (default $QLMI_OUTPUT_DIR or ./results)");
  auto* seed_opt = run->add_option("--seed", seed, "Root seed, overrides the file");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
  run->add_option("--format", format, "Result format")->check(CLI::IsMember({"csv", "json"}));

  auto* validate = app.add_subcommand("validate", "Check a scenario without running it");
  validate->add_option("file", file, "Scenario file")->required();

  auto* list = app.add_subcommand("list", "List shipped scenarios");
  list->add_option("--dir", dir, "Scenario directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }

  if (*run) {
    qlmi_run_options opts{};
    opts.out_dir = out_dir.c_str();
    opts.has_seed = seed_opt->count() > 0;
    opts.seed = seed;
    opts.jobs = jobs;
    opts.format = format.empty() ? nullptr : format.c_str();
    int physical = 1;
    char* summary = nullptr;
    const auto status = qlmi_scenario_run(file.c_str(), &opts, &physical, &summary);
    if (status != QLMI_OK)
      return report(status, file);
    std::cout << summary;
    qlmi_string_free(summary);
    if (!physical) {
      std::cerr << "qlmi: " << file << ": physicality violation in at least one cell\n";
      return kRuntime;
    }
    return kOk;
  }

  if (*validate) {
    char* violations = nullptr;
    const auto status = qlmi_scenario_validate(file.c_str(), &violations);
    if (status == QLMI_VALIDATION_ERROR) {
      std::cerr << violations;
      qlmi_string_free(violations);
      return kValidation;
    }
    qlmi_string_free(violations);
    if (status != QLMI_OK)
      return report(status, file);
    std::cout << "ok\n";
    return kOk;
  }

  char* listing = nullptr;
  const auto status = qlmi_scenario_list(dir.empty() ? nullptr : dir.c_str(), &listing);
  if (status != QLMI_OK)
    return report(status, dir);
  std::cout << listing;
  qlmi_string_free(listing);
  return kOk;
}
