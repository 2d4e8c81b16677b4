#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlscale/bootstrap.hpp"

namespace rlscale::cli {

enum class OutputFormat { csv, structured };

struct PipelineConfig {
  std::string manifest_path;
  std::vector<std::string> input_paths;
  std::string output_dir;
  std::size_t m_thresholds = 20;
  BootstrapConfig bootstrap;
  std::string fit_mode = "independent";
  std::size_t n_extrapolate = 5;
  double k = 1.0;
  std::uint64_t rng_seed = 0;

  /// ArgumentError on a bad value.
  void validate() const;
};

struct CommandOptions {
  PipelineConfig pipeline;
  std::string fit_path;
  std::string batch_fit_path;
  std::string spec_path;
  std::string task;
  std::optional<double> threshold;
  std::optional<double> data_budget;
  std::optional<double> compute_budget;
  std::optional<double> delta;
  std::vector<double> d_targets;
  bool allow_unstable = false;
  OutputFormat format = OutputFormat::csv;
};

// Each command writes its artifacts under output_dir and returns a summary document.
// Input problems throw InputError subclasses, numerical failures NumericalError subclasses.
nlohmann::json cmd_ingest(const CommandOptions& opts);
nlohmann::json cmd_preprocess(const CommandOptions& opts);
nlohmann::json cmd_fit_batch(const CommandOptions& opts);
nlohmann::json cmd_fit_data(const CommandOptions& opts);
nlohmann::json cmd_allocate(const CommandOptions& opts);
nlohmann::json cmd_frontier(const CommandOptions& opts);
nlohmann::json cmd_sensitivity(const CommandOptions& opts);
nlohmann::json cmd_evaluate(const CommandOptions& opts);
nlohmann::json cmd_synth(const CommandOptions& opts);
nlohmann::json cmd_report(const CommandOptions& opts);

/// Summary as "key,value" rows (JSON-pointer keys) or as one JSON document.
void print_summary(std::ostream& out, const nlohmann::json& summary, OutputFormat format);

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// Full command line without the program name. Returns the process exit code.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace rlscale::cli
