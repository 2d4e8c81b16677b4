#include "rlscale/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "rlscale/error.hpp"
#include "rlscale/util.hpp"

namespace rlscale {

namespace {

constexpr std::array<const char*, 7> kColumns = {"task",     "utd",      "model_size", "batch_size",
                                                 "seed",     "env_step", "return"};

double field_real(std::string_view text, std::size_t line, const char* column) {
  auto v = parse_double(text);
  if (!v || !std::isfinite(*v)) {
    throw ParseError(line, column, "expected a real number, got '" + std::string(text) + "'");
  }
  return *v;
}

std::int64_t field_int(std::string_view text, std::size_t line, const char* column) {
  auto v = parse_int(text);
  if (!v) throw ParseError(line, column, "expected an integer, got '" + std::string(text) + "'");
  return *v;
}

struct Row {
  RunKey key;
  CurvePoint point;
};

Row parse_row(std::string_view line, std::size_t line_no) {
  const auto fields = split_commas(line);
  if (fields.size() != kColumns.size()) {
    throw ParseError(line_no, "",
                     "expected " + std::to_string(kColumns.size()) + " columns, got " +
                         std::to_string(fields.size()));
  }
  Row row;
  row.key.task_id = std::string(trim(fields[0]));
  if (row.key.task_id.empty()) throw ParseError(line_no, "task", "empty task id");
  row.key.utd = field_real(trim(fields[1]), line_no, "utd");
  if (!(row.key.utd > 0.0)) throw ParseError(line_no, "utd", "must be positive");
  row.key.model_size = field_real(trim(fields[2]), line_no, "model_size");
  if (!(row.key.model_size > 0.0)) throw ParseError(line_no, "model_size", "must be positive");
  row.key.batch_size = field_int(trim(fields[3]), line_no, "batch_size");
  if (row.key.batch_size < 1) throw ParseError(line_no, "batch_size", "must be >= 1");
  row.key.seed = field_int(trim(fields[4]), line_no, "seed");
  row.point.env_step = field_int(trim(fields[5]), line_no, "env_step");
  if (row.point.env_step < 0) throw ParseError(line_no, "env_step", "must be nonnegative");
  row.point.value = field_real(trim(fields[6]), line_no, "return");
  return row;
}

double require_number(const nlohmann::json& block, const std::string& task, const char* key) {
  if (!block.contains(key)) throw ValidationError("task '" + task + "': missing " + key);
  const auto& v = block.at(key);
  if (!v.is_number()) throw ValidationError("task '" + task + "': " + key + " must be a number");
  return v.get<double>();
}

TaskMeta task_from_block(const std::string& task, const nlohmann::json& block) {
  if (!block.is_object()) throw ValidationError("task '" + task + "': entry must be an object");
  TaskMeta meta;
  meta.task_id = task;
  if (block.contains("optimal_return")) {
    meta.optimal_return = require_number(block, task, "optimal_return");
  }
  meta.j_min = require_number(block, task, "j_min");
  meta.j_max = require_number(block, task, "j_max");
  meta.delta = require_number(block, task, "delta");
  if (block.contains("reset_period") && !block.at("reset_period").is_null()) {
    const auto& rp = block.at("reset_period");
    if (!rp.is_number()) throw ValidationError("task '" + task + "': reset_period must be a number");
    const double v = rp.get<double>();
    if (v != std::floor(v)) throw ValidationError("task '" + task + "': reset_period must be an integer");
    meta.reset_period = static_cast<std::int64_t>(v);
  }
  meta.validate();
  return meta;
}

}  // namespace

void TaskMeta::validate() const {
  const std::string who = "task '" + task_id + "': ";
  if (task_id.empty()) throw ValidationError("task id must be nonempty");
  if (task_id.find(',') != std::string::npos) throw ValidationError(who + "task id must not contain ','");
  if (!(optimal_return > 0.0) || !std::isfinite(optimal_return)) {
    throw ValidationError(who + "optimal_return must be positive");
  }
  if (!(j_min >= 0.0) || !(j_max <= 1000.0)) throw ValidationError(who + "thresholds must lie in [0, 1000]");
  if (!(j_min < j_max)) throw ValidationError(who + "j_min must be below j_max");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ValidationError(who + "delta must be positive");
  if (reset_period && *reset_period <= 0) throw ValidationError(who + "reset_period must be positive");
}

std::vector<std::int64_t> reset_markers(std::int64_t reset_period, double utd, std::int64_t last_step) {
  std::vector<std::int64_t> markers;
  if (reset_period <= 0 || !(utd > 0.0)) return markers;
  const double spacing = static_cast<double>(reset_period) / utd;
  for (std::int64_t k = 1;; ++k) {
    const auto step = static_cast<std::int64_t>(std::llround(static_cast<double>(k) * spacing));
    if (step > last_step) break;
    if (markers.empty() || step > markers.back()) markers.push_back(step);
  }
  return markers;
}

std::vector<RunSet> parse_run_logs(std::istream& text, const std::vector<TaskMeta>& metas) {
  std::map<std::string, const TaskMeta*> by_id;
  for (const auto& m : metas) by_id[m.task_id] = &m;

  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::map<std::string, std::map<RunKey, std::map<std::int64_t, double>>> grouped;
  std::size_t rows = 0;

  while (std::getline(text, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!header_seen) {
      if (view != kRunLogHeader) {
        throw ParseError(line_no, "", "header must be exactly '" + std::string(kRunLogHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    Row row = parse_row(view, line_no);
    if (!by_id.contains(row.key.task_id)) {
      throw ParseError(line_no, "task", "task '" + row.key.task_id + "' is not in the manifest");
    }
    auto& points = grouped[row.key.task_id][row.key];
    if (!points.emplace(row.point.env_step, row.point.value).second) {
      throw DuplicateError("line " + std::to_string(line_no) + ": duplicate env_step " +
                           std::to_string(row.point.env_step) + " for run (" + row.key.task_id +
                           ", utd " + format_double(row.key.utd) + ", model_size " +
                           format_double(row.key.model_size) + ", batch_size " +
                           std::to_string(row.key.batch_size) + ", seed " +
                           std::to_string(row.key.seed) + ")");
    }
    ++rows;
  }
  if (!header_seen || rows == 0) throw EmptyInputError("run log contains no data rows");

  std::vector<RunSet> out;
  for (auto& [task, runs] : grouped) {
    RunSet set;
    set.meta = *by_id.at(task);
    for (auto& [key, points] : runs) {
      LearningCurve curve;
      curve.key = key;
      curve.points.reserve(points.size());
      for (const auto& [step, value] : points) curve.points.push_back({step, value});
      if (set.meta.reset_period) {
        curve.reset_steps = reset_markers(*set.meta.reset_period, key.utd, curve.points.back().env_step);
      }
      set.curves.push_back(std::move(curve));
    }
    out.push_back(std::move(set));
  }
  return out;
}

RunSet parse_run_log(std::istream& text, const TaskMeta& meta) {
  auto sets = parse_run_logs(text, {meta});
  return std::move(sets.front());
}

void write_run_log(std::ostream& out, const RunSet& runs) {
  out << kRunLogHeader << '\n';
  for (const auto& curve : runs.curves) {
    const std::string prefix = curve.key.task_id + ',' + format_double(curve.key.utd) + ',' +
                               format_double(curve.key.model_size) + ',' +
                               std::to_string(curve.key.batch_size) + ',' +
                               std::to_string(curve.key.seed) + ',';
    for (const auto& p : curve.points) {
      out << prefix << p.env_step << ',' << format_double(p.value) << '\n';
    }
  }
}

std::vector<TaskMeta> validate_manifest(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("tasks")) {
    throw ValidationError("manifest must be an object with a 'tasks' entry");
  }
  const auto& tasks = doc.at("tasks");
  std::vector<TaskMeta> out;
  if (tasks.is_object()) {
    for (const auto& [id, block] : tasks.items()) out.push_back(task_from_block(id, block));
  } else if (tasks.is_array()) {
    for (const auto& block : tasks) {
      if (!block.is_object() || !block.contains("task") || !block.at("task").is_string()) {
        throw ValidationError("manifest task entries need a string 'task' field");
      }
      out.push_back(task_from_block(block.at("task").get<std::string>(), block));
    }
  } else {
    throw ValidationError("'tasks' must be an object or an array");
  }
  if (out.empty()) throw ValidationError("manifest declares no tasks");
  std::sort(out.begin(), out.end(),
            [](const TaskMeta& a, const TaskMeta& b) { return a.task_id < b.task_id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].task_id == out[i - 1].task_id) {
      throw ValidationError("task '" + out[i].task_id + "' declared twice");
    }
  }
  return out;
}

nlohmann::json manifest_to_json(const std::vector<TaskMeta>& tasks) {
  nlohmann::json doc;
  doc["tasks"] = nlohmann::json::object();
  for (const auto& t : tasks) {
    nlohmann::json block = {{"optimal_return", t.optimal_return},
                            {"j_min", t.j_min},
                            {"j_max", t.j_max},
                            {"delta", t.delta}};
    if (t.reset_period) block["reset_period"] = *t.reset_period;
    doc["tasks"][t.task_id] = block;
  }
  return doc;
}

}  // namespace rlscale
