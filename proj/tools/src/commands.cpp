#include "rlscale/cli/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "rlscale/allocate.hpp"
#include "rlscale/error.hpp"
#include "rlscale/ingest.hpp"
#include "rlscale/preprocess.hpp"
#include "rlscale/rng.hpp"
#include "rlscale/scaling_laws.hpp"
#include "rlscale/serialize.hpp"
#include "rlscale/synth.hpp"
#include "rlscale/util.hpp"

namespace rlscale::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Raised after artifacts are written when some fit did not pass the stability checks.
class FitInstabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Reads files and keeps a digest of everything read, in order.
class InputReader {
 public:
  std::string text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open input file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string content = buf.str();
    seen_ += path;
    seen_ += '\n';
    seen_ += content;
    return content;
  }

  json document(const std::string& path) {
    const std::string content = text(path);
    try {
      return json::parse(content);
    } catch (const json::parse_error& e) {
      throw InputError("'" + path + "' is not valid JSON: " + e.what());
    }
  }

  std::string digest() const { return fnv1a_digest(seen_); }

 private:
  std::string seen_;
};

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw InputError("cannot write '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

fs::path require_out(const CommandOptions& opts) {
  if (opts.pipeline.output_dir.empty()) throw ArgumentError("--out is required");
  return fs::path(opts.pipeline.output_dir);
}

const std::string& require(const std::string& value, const char* flag) {
  if (value.empty()) throw ArgumentError(std::string(flag) + " is required");
  return value;
}

const std::vector<std::string>& require_inputs(const CommandOptions& opts) {
  if (opts.pipeline.input_paths.empty()) throw ArgumentError("--input is required");
  return opts.pipeline.input_paths;
}

std::vector<TaskMeta> load_manifest(InputReader& reader, const std::string& path) {
  return validate_manifest(reader.document(require(path, "--manifest")));
}

std::vector<EfficiencyPoint> load_efficiency(InputReader& reader, const std::vector<std::string>& paths) {
  std::vector<EfficiencyPoint> points;
  for (const auto& path : paths) {
    std::istringstream in(reader.text(path));
    auto more = read_efficiency_csv(in);
    points.insert(points.end(), more.begin(), more.end());
  }
  return points;
}

/// Run logs from every input, merged per task; a run appearing in two files is an error.
std::vector<RunSet> load_runs(InputReader& reader, const std::vector<std::string>& paths,
                              const std::vector<TaskMeta>& metas) {
  std::map<std::string, RunSet> merged;
  for (const auto& path : paths) {
    std::istringstream in(reader.text(path));
    for (auto& set : parse_run_logs(in, metas)) {
      auto [it, fresh] = merged.emplace(set.meta.task_id, set);
      if (fresh) continue;
      auto& curves = it->second.curves;
      for (auto& c : set.curves) {
        const auto pos = std::lower_bound(curves.begin(), curves.end(), c,
                                          [](const LearningCurve& x, const LearningCurve& y) { return x.key < y.key; });
        if (pos != curves.end() && pos->key == c.key) {
          throw DuplicateError("run (" + c.key.task_id + ", utd " + format_double(c.key.utd) + ", model_size " +
                               format_double(c.key.model_size) + ", batch_size " + std::to_string(c.key.batch_size) +
                               ", seed " + std::to_string(c.key.seed) + ") appears in more than one input");
        }
        curves.insert(pos, std::move(c));
      }
    }
  }
  std::vector<RunSet> out;
  for (auto& [task, set] : merged) out.push_back(std::move(set));
  return out;
}

std::string run_log_text(const std::vector<RunSet>& sets) {
  std::ostringstream out;
  out << kRunLogHeader << '\n';
  for (const auto& set : sets) {
    std::ostringstream one;
    write_run_log(one, set);
    const std::string text = one.str();
    out << text.substr(text.find('\n') + 1);
  }
  return out.str();
}

FitOptions fit_options(const CommandOptions& opts) {
  FitOptions o;
  o.rng_seed = opts.pipeline.rng_seed;
  return o;
}

Provenance provenance(const InputReader& reader, std::optional<std::uint64_t> seed = std::nullopt) {
  return Provenance{reader.digest(), seed};
}

/// The fit a single-law command works on: --task (needed when several tasks are present)
/// and --threshold (defaults to the highest one).
const DataFitResult& select_fit(const std::vector<DataFitResult>& fits, const CommandOptions& opts) {
  std::set<std::string> tasks;
  for (const auto& f : fits) tasks.insert(f.task_id);
  if (tasks.empty()) throw ValidationError("fit document holds no fits");
  std::string task = opts.task;
  if (task.empty()) {
    if (tasks.size() > 1) throw ArgumentError("fit document covers several tasks; pass --task");
    task = *tasks.begin();
  }
  const DataFitResult* best = nullptr;
  for (const auto& f : fits) {
    if (f.task_id != task) continue;
    if (opts.threshold) {
      if (f.fit.threshold == *opts.threshold) return f;
    } else if (!best || f.fit.threshold > best->fit.threshold) {
      best = &f;
    }
  }
  if (!best) {
    throw ArgumentError("no fit for task '" + task + "'" +
                        (opts.threshold ? " at threshold " + format_double(*opts.threshold) : std::string()));
  }
  return *best;
}

std::vector<DataFitResult> fits_for_task(const std::vector<DataFitResult>& fits, const std::string& task) {
  std::vector<DataFitResult> out;
  for (const auto& f : fits) {
    if (f.task_id == task) out.push_back(f);
  }
  std::sort(out.begin(), out.end(),
            [](const DataFitResult& x, const DataFitResult& y) { return x.fit.threshold < y.fit.threshold; });
  return out;
}

/// Task constants for the frontier: the manifest entry, with --delta taking precedence.
TaskMeta frontier_meta(InputReader& reader, const CommandOptions& opts, const std::string& task) {
  TaskMeta meta;
  meta.task_id = task;
  if (!opts.pipeline.manifest_path.empty()) {
    bool found = false;
    for (const auto& m : load_manifest(reader, opts.pipeline.manifest_path)) {
      if (m.task_id == task) {
        meta = m;
        found = true;
      }
    }
    if (!found && !opts.delta) throw ArgumentError("task '" + task + "' is not in the manifest");
  } else if (!opts.delta) {
    throw ArgumentError("frontier needs --manifest or --delta");
  }
  if (opts.delta) meta.delta = *opts.delta;
  if (!(meta.delta > 0.0)) throw ArgumentError("environment-step cost delta must be positive");
  return meta;
}

json fit_identity(const DataFitResult& f) { return json{{"task", f.task_id}, {"threshold", f.fit.threshold}}; }

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace

void PipelineConfig::validate() const {
  if (m_thresholds < 2) throw ArgumentError("--thresholds must be >= 2");
  bootstrap.validate();
  if (fit_mode != "independent" && fit_mode != "shared" && fit_mode != "aggregated") {
    throw ArgumentError("--mode must be independent, shared or aggregated");
  }
  if (!(k > 0.0)) throw ArgumentError("--k must be positive");
}

json cmd_ingest(const CommandOptions& opts) {
  InputReader reader;
  const auto metas = load_manifest(reader, opts.pipeline.manifest_path);
  const auto sets = load_runs(reader, require_inputs(opts), metas);
  const auto out = require_out(opts);
  write_text(out / "runs.csv", run_log_text(sets));
  write_json(out / "manifest.json", manifest_to_json(metas));

  json summary = {{"command", "ingest"}, {"input_digest", reader.digest()}, {"tasks", json::array()}};
  for (const auto& set : sets) {
    std::size_t points = 0;
    for (const auto& c : set.curves) points += c.points.size();
    summary["tasks"].push_back({{"task", set.meta.task_id}, {"runs", set.curves.size()}, {"points", points}});
  }
  summary["outputs"] = {(out / "runs.csv").string(), (out / "manifest.json").string()};
  return summary;
}

json cmd_preprocess(const CommandOptions& opts) {
  opts.pipeline.validate();
  InputReader reader;
  const auto metas = load_manifest(reader, opts.pipeline.manifest_path);
  const auto sets = load_runs(reader, require_inputs(opts), metas);
  const auto out = require_out(opts);

  std::vector<EfficiencyPoint> points;
  std::vector<BestBatchRecord> best;
  json tasks = json::array();
  std::vector<std::string> warnings;
  for (std::size_t ti = 0; ti < sets.size(); ++ti) {
    const auto& set = sets[ti];
    BootstrapConfig cfg = opts.pipeline.bootstrap;
    cfg.rng_seed = stream_key(opts.pipeline.rng_seed, ti);

    const auto curves = process_runset(set);
    const auto grid = threshold_grid(set.meta, opts.pipeline.m_thresholds);
    auto table = extract_efficiency_table(curves, set.meta.task_id, grid);
    attach_bootstrap_std(table, curves, grid, cfg);
    points.insert(points.end(), table.points.begin(), table.points.end());
    for (const auto& w : table.warnings) warnings.push_back(set.meta.task_id + ": " + w);

    const auto groups = group_by_config(curves);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      try {
        best.push_back(best_batch_record(set.meta.task_id, bootstrap_best_batch(groups[g].arms, grid, cfg, g)));
      } catch (const EstimationError& e) {
        warnings.push_back(set.meta.task_id + " utd " + format_double(groups[g].sigma) + " model_size " +
                           format_double(groups[g].model_size) + ": " + e.what());
      }
    }

    json task = {{"task", set.meta.task_id},
                 {"bootstrap_seed", cfg.rng_seed},
                 {"thresholds", grid.thresholds},
                 {"suggested_j_max", suggest_j_max(curves)}};
    const auto j_min = suggest_j_min(groups, set.meta.j_max, grid.thresholds, cfg);
    task["suggested_j_min"] = j_min ? json(*j_min) : json(nullptr);
    tasks.push_back(task);
  }

  std::ostringstream eff;
  write_efficiency_csv(eff, points);
  write_text(out / "efficiency.csv", eff.str());
  std::ostringstream bb;
  write_best_batch_csv(bb, best);
  write_text(out / "best_batch.csv", bb.str());

  json report = {{"tasks", tasks},
                 {"warnings", warnings},
                 {"bootstrap_replicates", opts.pipeline.bootstrap.replicates},
                 {"provenance", {{"input_digest", reader.digest()},
                                 {"rng_seed", opts.pipeline.rng_seed},
                                 {"rng", CounterRng::kName}}}};
  write_json(out / "preprocess.json", report);

  return json{{"command", "preprocess"},
              {"efficiency_points", points.size()},
              {"best_batch_rows", best.size()},
              {"warnings", warnings.size()},
              {"rng_seed", opts.pipeline.rng_seed},
              {"outputs", {(out / "efficiency.csv").string(), (out / "best_batch.csv").string(),
                           (out / "preprocess.json").string()}}};
}

json cmd_fit_batch(const CommandOptions& opts) {
  InputReader reader;
  std::vector<BestBatchRecord> records;
  for (const auto& path : require_inputs(opts)) {
    std::istringstream in(reader.text(path));
    auto more = read_best_batch_csv(in);
    records.insert(records.end(), more.begin(), more.end());
  }
  std::set<std::string> tasks;
  for (const auto& r : records) tasks.insert(r.task_id);
  if (tasks.empty()) throw EmptyInputError("no best-batch rows");
  std::string task = opts.task;
  if (task.empty()) {
    if (tasks.size() > 1) throw ArgumentError("best-batch table covers several tasks; pass --task");
    task = *tasks.begin();
  }
  std::vector<BatchObservation> obs;
  for (const auto& r : records) {
    if (r.task_id == task) obs.push_back({r.sigma, r.model_size, r.b_bootstrap});
  }
  if (obs.empty()) throw ArgumentError("no best-batch rows for task '" + task + "'");

  const auto result = fit_batch_rule(obs, fit_options(opts));
  json doc = batch_rule_to_json(result, provenance(reader, opts.pipeline.rng_seed));
  doc["fits"][0]["task"] = task;
  const auto out = require_out(opts);
  write_json(out / "batch_fit.json", doc);
  return json{{"command", "fit-batch"},
              {"task", task},
              {"params", doc["fits"][0]["params"]},
              {"loss", result.diagnostics.loss},
              {"converged", result.diagnostics.converged},
              {"outputs", {(out / "batch_fit.json").string()}}};
}

json cmd_fit_data(const CommandOptions& opts) {
  opts.pipeline.validate();
  InputReader reader;
  const auto points = select_best_batch(load_efficiency(reader, require_inputs(opts)));
  const auto options = fit_options(opts);
  const auto prov = provenance(reader, opts.pipeline.rng_seed);
  const auto& mode = opts.pipeline.fit_mode;

  json doc;
  std::vector<std::string> unstable;
  std::size_t fit_count = 0;
  if (mode == "independent") {
    const auto set = fit_data_efficiency(points, options);
    if (set.fits.empty()) throw EstimationError("no threshold had enough points to fit");
    for (const auto& f : set.fits) {
      if (f.unstable) unstable.push_back(f.task_id + " J=" + format_double(f.fit.threshold));
    }
    fit_count = set.fits.size();
    doc = data_fits_to_json(set, prov);
  } else {
    // Tasks are pooled threshold by threshold; a threshold present in only one task is skipped.
    std::map<double, std::map<std::string, std::vector<EfficiencyPoint>>> by_threshold;
    for (const auto& p : points) by_threshold[p.threshold][p.task_id].push_back(p);
    std::vector<std::string> warnings;
    std::vector<SharedFitResult> shared;
    std::vector<AggregatedFitResult> aggregated;
    for (const auto& [threshold, tables] : by_threshold) {
      if (tables.size() < 2) {
        warnings.push_back("J=" + format_double(threshold) + ": only one task, threshold skipped");
        continue;
      }
      const std::string label = "J=" + format_double(threshold);
      if (mode == "shared") {
        std::vector<EfficiencyPoint> pooled;
        for (const auto& [task, pts] : tables) pooled.insert(pooled.end(), pts.begin(), pts.end());
        shared.push_back(fit_data_shared(pooled, options));
        if (shared.back().unstable) unstable.push_back(label);
      } else {
        aggregated.push_back(fit_data_aggregated(tables, options));
        if (aggregated.back().result.unstable) unstable.push_back(label);
      }
    }
    fit_count = shared.size() + aggregated.size();
    if (fit_count == 0) throw ArgumentError("--mode " + mode + " needs thresholds shared by at least 2 tasks");
    doc = mode == "shared" ? shared_fits_to_json(shared, warnings, prov) : aggregated_fits_to_json(aggregated, warnings, prov);
  }

  const auto out = require_out(opts);
  write_json(out / "data_fit.json", doc);
  json summary = {{"command", "fit-data"},
                  {"mode", mode},
                  {"fits", fit_count},
                  {"unstable", unstable},
                  {"outputs", {(out / "data_fit.json").string()}}};
  if (!unstable.empty() && !opts.allow_unstable) {
    std::string what = "unstable fits (diagnostics in " + (out / "data_fit.json").string() + "):";
    for (const auto& u : unstable) what += " " + u;
    throw FitInstabilityError(what);
  }
  return summary;
}

json cmd_allocate(const CommandOptions& opts) {
  opts.pipeline.validate();
  if (!opts.data_budget && !opts.compute_budget && !opts.delta) {
    throw ArgumentError("allocate needs --data-budget, --compute-budget or --delta");
  }
  InputReader reader;
  const auto fits = data_fits_from_json(reader.document(require(opts.fit_path, "--fit")));
  const auto& chosen = select_fit(fits, opts);
  const ComputeModel model{opts.pipeline.k};

  json doc = {{"fit", fit_identity(chosen)}, {"k", model.k}};
  if (opts.data_budget) doc["data_budget"] = solution_to_json(optimal_for_data_budget(chosen.fit, *opts.data_budget, model));
  if (opts.compute_budget) {
    doc["compute_budget"] = solution_to_json(optimal_for_compute_budget(chosen.fit, model, *opts.compute_budget));
  }
  if (opts.delta) doc["total_budget"] = solution_to_json(minimize_budget(chosen.fit, model, *opts.delta));
  doc["provenance"] = {{"input_digest", reader.digest()}};

  if (!opts.pipeline.output_dir.empty()) write_json(fs::path(opts.pipeline.output_dir) / "allocation.json", doc);
  json summary = doc;
  summary["command"] = "allocate";
  return summary;
}

json cmd_frontier(const CommandOptions& opts) {
  opts.pipeline.validate();
  InputReader reader;
  const auto fits = data_fits_from_json(reader.document(require(opts.fit_path, "--fit")));
  const auto& top = select_fit(fits, opts);
  const TaskMeta meta = frontier_meta(reader, opts, top.task_id);
  const ComputeModel model{opts.pipeline.k};

  const auto task_fits = fits_for_task(fits, top.task_id);
  const auto frontier = budget_frontier(task_fits, meta, model);
  const auto laws = fit_frontier_laws(frontier.points, opts.pipeline.n_extrapolate);

  // Fixed-allocation baselines at the frontier's budgets, scored on the top-threshold law.
  std::vector<double> budgets;
  for (const auto& p : frontier.points) budgets.push_back(p.budget);
  const auto& middle = frontier.points[frontier.points.size() / 2].solution;
  std::vector<Strategy> strategies = {{Strategy::Kind::compute_optimal, 0.0},
                                      {Strategy::Kind::sigma_only, middle.n_star},
                                      {Strategy::Kind::n_only, middle.sigma_star}};
  ComparisonOptions comparison_opts;
  if (!opts.batch_fit_path.empty()) {
    comparison_opts.batch_rule = batch_rule_from_json(reader.document(opts.batch_fit_path));
    strategies.push_back({Strategy::Kind::fixed_batch_compute_optimal, 0.0});
  }
  json comparison;
  try {
    comparison = comparison_to_json(compare_allocations(top.fit, model, budgets, strategies, comparison_opts));
  } catch (const InfeasibleError& e) {
    comparison = {{"error", e.what()}};
  }

  const auto out = require_out(opts);
  std::ostringstream csv;
  write_frontier_csv(csv, frontier.points);
  write_text(out / "frontier.csv", csv.str());
  json doc = {{"task", meta.task_id},
              {"delta", meta.delta},
              {"k", model.k},
              {"laws", frontier_laws_to_json(laws)},
              {"comparison", comparison},
              {"warnings", frontier.warnings},
              {"provenance", {{"input_digest", reader.digest()}}}};
  write_json(out / "frontier.json", doc);
  return json{{"command", "frontier"},
              {"task", meta.task_id},
              {"points", frontier.points.size()},
              {"laws", doc["laws"]},
              {"warnings", frontier.warnings},
              {"outputs", {(out / "frontier.csv").string(), (out / "frontier.json").string()}}};
}

json cmd_sensitivity(const CommandOptions& opts) {
  InputReader reader;
  const auto points = load_efficiency(reader, require_inputs(opts));
  const auto rule = batch_rule_from_json(reader.document(require(opts.batch_fit_path, "--batch-fit")));
  std::vector<EfficiencyPoint> selected;
  for (const auto& p : points) {
    if (opts.task.empty() || p.task_id == opts.task) selected.push_back(p);
  }
  const auto bins = default_sensitivity_bins();
  const auto rows = batch_sensitivity(selected, rule, bins);
  json doc = {{"rows", sensitivity_to_json(rows)}, {"provenance", {{"input_digest", reader.digest()}}}};
  if (!opts.pipeline.output_dir.empty()) write_json(fs::path(opts.pipeline.output_dir) / "sensitivity.json", doc);
  doc["command"] = "sensitivity";
  return doc;
}

json cmd_evaluate(const CommandOptions& opts) {
  InputReader reader;
  const auto fits = data_fits_from_json(reader.document(require(opts.fit_path, "--fit")));
  const auto points = select_best_batch(load_efficiency(reader, require_inputs(opts)));

  std::map<std::pair<std::string, double>, std::vector<const EfficiencyPoint*>> held_out;
  for (const auto& p : points) held_out[{p.task_id, p.threshold}].push_back(&p);

  json rows = json::array();
  std::vector<double> all_pred;
  std::vector<double> all_actual;
  for (const auto& f : fits) {
    const auto it = held_out.find({f.task_id, f.fit.threshold});
    if (it == held_out.end()) continue;
    std::vector<double> pred;
    std::vector<double> actual;
    for (const auto* p : it->second) {
      pred.push_back(eval_data_fit(f.fit, p->sigma, p->model_size));
      actual.push_back(p->data);
    }
    all_pred.insert(all_pred.end(), pred.begin(), pred.end());
    all_actual.insert(all_actual.end(), actual.begin(), actual.end());
    rows.push_back({{"task", f.task_id},
                    {"threshold", f.fit.threshold},
                    {"points", pred.size()},
                    {"relative_error", relative_error(pred, actual)}});
  }
  if (all_pred.empty()) throw ArgumentError("no held-out point matches a (task, threshold) of the fit document");

  json doc = {{"relative_error", relative_error(all_pred, all_actual)},
              {"points", all_pred.size()},
              {"per_fit", rows},
              {"provenance", {{"input_digest", reader.digest()}}}};
  if (!opts.pipeline.output_dir.empty()) write_json(fs::path(opts.pipeline.output_dir) / "evaluation.json", doc);
  doc["command"] = "evaluate";
  return doc;
}

json cmd_synth(const CommandOptions& opts) {
  InputReader reader;
  SynthSpec spec = synth_spec_from_json(reader.document(require(opts.spec_path, "--spec")));
  if (opts.pipeline.rng_seed != 0) spec.rng_seed = opts.pipeline.rng_seed;
  const auto out = require_out(opts);

  json outputs = json::array();
  write_json(out / "manifest.json", manifest_to_json({spec.meta}));
  outputs.push_back((out / "manifest.json").string());

  std::ostringstream eff;
  const auto grid_points = gen_efficiency_grid(spec);
  write_efficiency_csv(eff, grid_points);
  write_text(out / "efficiency.csv", eff.str());
  outputs.push_back((out / "efficiency.csv").string());

  std::size_t runs = 0;
  if (!spec.b_grid.empty()) {
    const auto set = gen_learning_curves(spec);
    runs = set.curves.size();
    write_text(out / "runs.csv", run_log_text({set}));
    outputs.push_back((out / "runs.csv").string());
  }

  // The ground-truth law at every threshold of the generated grid, as a fit document.
  DataFitSet truth;
  for (double j : threshold_grid(spec.meta, spec.thresholds).thresholds) {
    DataFitResult r;
    r.task_id = spec.meta.task_id;
    r.fit = truth_for_threshold(spec, j);
    r.diagnostics.status = "ground truth";
    truth.fits.push_back(std::move(r));
  }
  json truth_doc = data_fits_to_json(truth, Provenance{reader.digest(), spec.rng_seed});
  truth_doc["mode"] = "truth";
  write_json(out / "truth.json", truth_doc);
  outputs.push_back((out / "truth.json").string());
  write_json(out / "spec.json", synth_spec_to_json(spec));
  outputs.push_back((out / "spec.json").string());

  return json{{"command", "synth"},
              {"task", spec.meta.task_id},
              {"efficiency_points", grid_points.size()},
              {"runs", runs},
              {"rng_seed", spec.rng_seed},
              {"outputs", outputs}};
}

json cmd_report(const CommandOptions& opts) {
  opts.pipeline.validate();
  InputReader reader;
  const auto fits = data_fits_from_json(reader.document(require(opts.fit_path, "--fit")));
  const auto& chosen = select_fit(fits, opts);
  const auto out = require_out(opts);
  const SearchBox box;

  std::vector<double> targets = opts.d_targets;
  if (targets.empty()) {
    for (double m : {1.25, 1.5, 2.0, 3.0, 5.0}) targets.push_back(m * chosen.fit.d_min);
  }
  std::vector<Contour> contours;
  std::vector<std::string> warnings;
  for (double d : targets) {
    try {
      contours.push_back({d, iso_data_contour(chosen.fit, d, box.sigma_lo, box.sigma_hi)});
    } catch (const Error& e) {
      warnings.push_back("contour D=" + format_double(d) + ": " + e.what());
    }
  }
  std::ostringstream contour_csv;
  write_contour_csv(contour_csv, contours);
  write_text(out / "contours.csv", contour_csv.str());
  json outputs = {(out / "contours.csv").string()};

  std::size_t frontier_points = 0;
  if (!opts.pipeline.manifest_path.empty() || opts.delta) {
    const TaskMeta meta = frontier_meta(reader, opts, chosen.task_id);
    const auto frontier = budget_frontier(fits_for_task(fits, chosen.task_id), meta, ComputeModel{opts.pipeline.k});
    std::ostringstream csv;
    write_frontier_csv(csv, frontier.points);
    write_text(out / "frontier.csv", csv.str());
    outputs.push_back((out / "frontier.csv").string());
    frontier_points = frontier.points.size();
    warnings.insert(warnings.end(), frontier.warnings.begin(), frontier.warnings.end());
  } else {
    warnings.push_back("no --manifest or --delta: frontier.csv not written");
  }
  return json{{"command", "report"},
              {"fit", fit_identity(chosen)},
              {"contours", contours.size()},
              {"frontier_points", frontier_points},
              {"warnings", warnings},
              {"outputs", outputs}};
}

void print_summary(std::ostream& out, const json& summary, OutputFormat format) {
  if (format == OutputFormat::structured) {
    out << summary.dump(2) << '\n';
    return;
  }
  out << "key,value\n";
  const json flat = summary.flatten();
  for (const auto& [key, value] : flat.items()) {
    out << csv_cell(key) << ',' << csv_cell(value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
}

}  // namespace rlscale::cli
