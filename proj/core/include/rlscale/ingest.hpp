#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace rlscale {

/// Per-task constants: the optimal-policy return used for normalization, the
/// threshold range (normalized units, [0, 1000]) and δ, the FLOPs-equivalent
/// cost of one environment step.
struct TaskMeta {
  std::string task_id;
  double optimal_return = 1000.0;
  double j_min = 0.0;
  double j_max = 1000.0;
  double delta = 0.0;
  /// Gradient steps between full-parameter resets, if the algorithm resets.
  std::optional<std::int64_t> reset_period;

  /// Throws ValidationError when an invariant is violated.
  void validate() const;

  bool operator==(const TaskMeta&) const = default;
};

/// Identifies one training run: task, UTD ratio σ, parameter count N, batch size B, seed.
struct RunKey {
  std::string task_id;
  double utd = 1.0;
  double model_size = 1.0;
  std::int64_t batch_size = 1;
  std::int64_t seed = 0;

  auto operator<=>(const RunKey&) const = default;
  bool operator==(const RunKey&) const = default;
};

struct CurvePoint {
  std::int64_t env_step = 0;
  double value = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

struct LearningCurve {
  RunKey key;
  /// Strictly increasing env_step.
  std::vector<CurvePoint> points;
  /// Env-step positions of parameter resets (empty when the run never resets).
  std::vector<std::int64_t> reset_steps;

  bool operator==(const LearningCurve&) const = default;
};

/// All runs of one task; curves sorted by RunKey, no duplicate keys.
struct RunSet {
  TaskMeta meta;
  std::vector<LearningCurve> curves;

  bool operator==(const RunSet&) const = default;
};

inline constexpr const char* kRunLogHeader = "task,utd,model_size,batch_size,seed,env_step,return";

/// Parse a run-log CSV (header required, columns exactly kRunLogHeader) for a single task.
/// Returns stay in raw units. Reset markers are derived from meta.reset_period.
RunSet parse_run_log(std::istream& text, const TaskMeta& meta);

/// Parse a run log that may contain several tasks; every task must be present in `metas`.
/// Result is ordered by task id.
std::vector<RunSet> parse_run_logs(std::istream& text, const std::vector<TaskMeta>& metas);

/// Serialize in the run-log CSV schema (header included, rows in canonical order).
void write_run_log(std::ostream& out, const RunSet& runs);

/// Validate a manifest document and return its tasks ordered by task id.
///
/// Accepted shapes: {"tasks": {"<id>": {...}}} or {"tasks": [{"task": "<id>", ...}]}.
/// Each block holds optimal_return (defaults to 1000, the pre-normalized scale),
/// j_min, j_max, delta and optionally reset_period.
std::vector<TaskMeta> validate_manifest(const nlohmann::json& doc);

nlohmann::json manifest_to_json(const std::vector<TaskMeta>& tasks);

/// Env-step positions of resets for a run with UTD σ that resets every
/// `reset_period` gradient steps: round(k·period/σ) for k ≥ 1, up to last_step.
std::vector<std::int64_t> reset_markers(std::int64_t reset_period, double utd, std::int64_t last_step);

}  // namespace rlscale
