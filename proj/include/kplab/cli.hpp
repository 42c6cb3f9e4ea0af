#pragma once

// kplab <experiment> --config <path> [--output <dir>] [--seed <n>] [--threads <n>]

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "kplab/config.hpp"
#include "kplab/io.hpp"
#include "kplab/lab.hpp"
#include "kplab/parallel.hpp"

namespace kplab {

namespace detail {

inline void report_config_failure(const std::optional<std::string>& dir, const Json& raw,
                                  const std::vector<std::string>& errors, std::ostream& err) {
  for (const auto& e : errors) err << "kplab: " << e << '\n';
  if (!dir) return;
  std::error_code ec;
  std::filesystem::create_directories(*dir, ec);
  if (ec) return;
  try {
    write_json_atomic(std::filesystem::path(*dir) / "manifest.json",
                      failure_manifest(raw, "config_error", kExitConfig, errors));
  } catch (const std::exception&) {
  }
}

}  // namespace detail

/// Output directory precedence: --output, then KPLAB_OUTPUT, then the config.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"kplab: control lab for linearized and nonlinear KP-II on the torus"};
  std::string experiment, config_path, output;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  app.add_option("experiment", experiment, "One of: " + experiment_name_list())->required();
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--output", output, "Output directory (overrides KPLAB_OUTPUT and output_dir)");
  app.add_option("--seed", seed, "Seed for random test data (overrides the config)");
  app.add_option("--threads", threads, "Worker threads for sweeps")->check(CLI::Range(1, 4096));
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "kplab: " << e.what() << '\n' << app.help();
    return kExitConfig;
  }
  if (threads > 0) set_default_threads(threads);

  std::optional<std::string> dir;
  if (!output.empty())
    dir = output;
  else if (const char* env = std::getenv("KPLAB_OUTPUT"); env && *env)
    dir = env;

  Json raw;
  {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
      detail::report_config_failure(dir, Json(), {"--config: cannot read " + config_path}, err);
      return kExitConfig;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      raw = Json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      detail::report_config_failure(dir, Json(), {std::string("malformed JSON: ") + e.what()}, err);
      return kExitConfig;
    }
  }
  if (!dir && raw.is_object() && raw.contains("output_dir") && raw["output_dir"].is_string())
    dir = raw["output_dir"].get<std::string>();

  if (!experiment_from_name(experiment)) {
    detail::report_config_failure(dir, raw,
                                  {"experiment: unknown experiment '" + experiment +
                                   "'; valid names: " + experiment_name_list()},
                                  err);
    return kExitConfig;
  }
  if (raw.is_object() && !raw.contains("experiment")) raw["experiment"] = experiment;
  if (raw.is_object() && raw["experiment"].is_string() && raw["experiment"] != experiment) {
    detail::report_config_failure(dir, raw,
                                  {"experiment: config names '" + raw["experiment"].get<std::string>() +
                                   "' but the command line asks for '" + experiment + "'"},
                                  err);
    return kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    cfg = parse_config(raw);
  } catch (const ConfigViolations& e) {
    detail::report_config_failure(dir, raw, e.items(), err);
    return kExitConfig;
  } catch (const ConfigError& e) {
    detail::report_config_failure(dir, raw, {e.what()}, err);
    return kExitConfig;
  }
  if (dir) cfg.output_dir = *dir;
  if (seed) cfg.seed = *seed;

  const RunResult r = run_experiment(cfg);
  for (const auto& w : r.manifest["warnings"]) err << "kplab: warning: " << w.get<std::string>() << '\n';
  for (const auto& e : r.manifest["errors"]) err << "kplab: " << e.get<std::string>() << '\n';
  out << "kplab " << experiment << ": " << r.manifest["status"].get<std::string>();
  if (!r.manifest_path.empty()) out << " (" << r.manifest_path.string() << ")";
  out << '\n';
  return r.exit_code;
}

}  // namespace kplab
