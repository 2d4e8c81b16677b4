#include "rlscale/serialize.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "rlscale/error.hpp"
#include "rlscale/util.hpp"

namespace rlscale {

namespace {

using nlohmann::json;

/// Reads header + rows; calls `row(fields, line_no)` for every nonblank data line.
template <typename RowFn>
void read_csv(std::istream& in, std::string_view header, RowFn&& row) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  const std::size_t columns = split_commas(header).size();
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    if (!header_seen) {
      if (view != header) throw ParseError(line_no, "", "header must be exactly '" + std::string(header) + "'");
      header_seen = true;
      continue;
    }
    auto fields = split_commas(view);
    if (fields.size() != columns) {
      throw ParseError(line_no, "",
                       "expected " + std::to_string(columns) + " columns, got " + std::to_string(fields.size()));
    }
    for (auto& f : fields) f = trim(f);
    row(fields, line_no);
  }
  if (!header_seen) throw EmptyInputError("table has no header");
}

double real_field(std::string_view text, std::size_t line, const char* column) {
  const auto v = parse_double(text);
  if (!v || !std::isfinite(*v)) throw ParseError(line, column, "expected a real number, got '" + std::string(text) + "'");
  return *v;
}

double positive_field(std::string_view text, std::size_t line, const char* column) {
  const double v = real_field(text, line, column);
  if (!(v > 0.0)) throw ParseError(line, column, "must be positive");
  return v;
}

std::uint64_t seed_field(std::string_view text, std::size_t line, const char* column) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw ParseError(line, column, "expected an unsigned 64-bit integer, got '" + std::string(text) + "'");
  }
  return v;
}

std::int64_t int_field(std::string_view text, std::size_t line, const char* column) {
  const auto v = parse_int(text);
  if (!v) throw ParseError(line, column, "expected an integer, got '" + std::string(text) + "'");
  return *v;
}

std::string csv_real(double v) { return format_double(v); }

json provenance_json(const Provenance& p) {
  json j = {{"input_digest", p.input_digest}};
  if (p.rng_seed) {
    j["rng_seed"] = *p.rng_seed;
    j["rng"] = CounterRng::kName;
  }
  return j;
}

json document(const char* family, const char* mode, const Provenance& provenance) {
  return json{{"schema", kFitSchema}, {"family", family}, {"mode", mode}, {"provenance", provenance_json(provenance)}};
}

double number_at(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number()) {
    throw ValidationError(std::string(where) + ": missing numeric field '" + key + "'");
  }
  return j.at(key).get<double>();
}

void require_fit_document(const json& doc) {
  if (!doc.is_object() || doc.value("schema", "") != kFitSchema) {
    throw ValidationError("not a fit document (schema '" + std::string(kFitSchema) + "' expected)");
  }
}

json warnings_json(std::span<const std::string> warnings) { return json(std::vector<std::string>(warnings.begin(), warnings.end())); }

}  // namespace

void write_efficiency_csv(std::ostream& out, std::span<const EfficiencyPoint> points) {
  out << kEfficiencyHeader << '\n';
  for (const auto& p : points) {
    out << p.task_id << ',' << csv_real(p.sigma) << ',' << csv_real(p.model_size) << ',' << csv_real(p.batch_size)
        << ',' << csv_real(p.threshold) << ',' << csv_real(p.data) << ',';
    if (p.data_std) out << csv_real(*p.data_std);
    out << '\n';
  }
}

std::vector<EfficiencyPoint> read_efficiency_csv(std::istream& in) {
  std::vector<EfficiencyPoint> points;
  read_csv(in, kEfficiencyHeader, [&](const std::vector<std::string_view>& f, std::size_t line) {
    EfficiencyPoint p;
    p.task_id = std::string(f[0]);
    if (p.task_id.empty()) throw ParseError(line, "task", "empty task id");
    p.sigma = positive_field(f[1], line, "utd");
    p.model_size = positive_field(f[2], line, "model_size");
    p.batch_size = positive_field(f[3], line, "batch_size");
    p.threshold = real_field(f[4], line, "threshold");
    p.data = positive_field(f[5], line, "data");
    if (!f[6].empty()) p.data_std = real_field(f[6], line, "data_std");
    points.push_back(std::move(p));
  });
  return points;
}

BestBatchRecord best_batch_record(const std::string& task_id, const BootstrapBatchResult& result) {
  return BestBatchRecord{task_id,
                         result.sigma,
                         result.model_size,
                         result.b_bootstrap,
                         result.replicate_choices.size(),
                         result.dropped_replicates,
                         result.rng_seed};
}

void write_best_batch_csv(std::ostream& out, std::span<const BestBatchRecord> records) {
  out << kBestBatchHeader << '\n';
  for (const auto& r : records) {
    out << r.task_id << ',' << csv_real(r.sigma) << ',' << csv_real(r.model_size) << ',' << csv_real(r.b_bootstrap)
        << ',' << r.kept << ',' << r.dropped << ',' << r.rng_seed << '\n';
  }
}

std::vector<BestBatchRecord> read_best_batch_csv(std::istream& in) {
  std::vector<BestBatchRecord> records;
  read_csv(in, kBestBatchHeader, [&](const std::vector<std::string_view>& f, std::size_t line) {
    BestBatchRecord r;
    r.task_id = std::string(f[0]);
    r.sigma = positive_field(f[1], line, "utd");
    r.model_size = positive_field(f[2], line, "model_size");
    r.b_bootstrap = positive_field(f[3], line, "b_bootstrap");
    const auto kept = int_field(f[4], line, "kept_replicates");
    const auto dropped = int_field(f[5], line, "dropped_replicates");
    if (kept < 0 || dropped < 0) throw ParseError(line, "kept_replicates", "counts must be nonnegative");
    r.kept = static_cast<std::size_t>(kept);
    r.dropped = static_cast<std::size_t>(dropped);
    r.rng_seed = seed_field(f[6], line, "rng_seed");
    records.push_back(std::move(r));
  });
  return records;
}

void write_frontier_csv(std::ostream& out, std::span<const FrontierPoint> frontier) {
  out << kFrontierHeader << '\n';
  for (const auto& p : frontier) {
    out << csv_real(p.threshold) << ',' << csv_real(p.budget) << ',' << csv_real(p.solution.sigma_star) << ','
        << csv_real(p.solution.n_star) << ',' << csv_real(p.solution.data) << ',' << csv_real(p.solution.compute)
        << '\n';
  }
}

void write_contour_csv(std::ostream& out, std::span<const Contour> contours) {
  out << kContourHeader << '\n';
  for (const auto& c : contours) {
    for (const auto& p : c.points) out << csv_real(c.d_target) << ',' << csv_real(p.sigma) << ',' << csv_real(p.n) << '\n';
  }
}

json diagnostics_to_json(const FitResult& d) {
  json norm = json::array();
  for (const auto& n : d.input_norm) norm.push_back({{"s", n.s}, {"m", n.m}, {"degenerate", n.degenerate}});
  return json{{"loss", d.loss},
              {"converged", d.converged},
              {"iterations", d.iterations},
              {"starts", d.starts},
              {"grad_norm", d.grad_norm},
              {"status", d.status},
              {"optimizer", d.optimizer},
              {"input_normalization", norm},
              {"y_scale", d.y_scale}};
}

json batch_rule_to_json(const BatchRuleResult& result, const Provenance& provenance) {
  json doc = document("batch_rule", "independent", provenance);
  const auto& f = result.fit;
  doc["fits"] = json::array({json{{"params", {{"a_B", f.a_b}, {"alpha_B", f.alpha_b}, {"b_B", f.b_b}, {"beta_B", f.beta_b}}},
                                  {"diagnostics", diagnostics_to_json(result.diagnostics)}}});
  return doc;
}

json data_fit_to_json(const DataFit& f) {
  return json{{"d_min", f.d_min}, {"a", f.a}, {"alpha", f.alpha}, {"b", f.b}, {"beta", f.beta}};
}

DataFit data_fit_from_json(const json& j) {
  const char* where = "data-efficiency coefficients";
  if (j.is_object() && j.value("form", "additive") == "factored") {
    FactoredDataFit f{number_at(j, "d_min", where), number_at(j, "a", where), number_at(j, "alpha", where),
                      number_at(j, "b", where), number_at(j, "beta", where)};
    return DataFit::from_factored(f, j.value("threshold", 0.0));
  }
  return DataFit{number_at(j, "d_min", where), number_at(j, "a", where), number_at(j, "alpha", where),
                 number_at(j, "b", where),     number_at(j, "beta", where), j.is_object() ? j.value("threshold", 0.0) : 0.0};
}

json data_fits_to_json(const DataFitSet& set, const Provenance& provenance) {
  json doc = document("data_efficiency", "independent", provenance);
  doc["fits"] = json::array();
  for (const auto& r : set.fits) {
    json diag = diagnostics_to_json(r.diagnostics);
    diag["unstable"] = r.unstable;
    diag["warnings"] = r.warnings;
    doc["fits"].push_back({{"task", r.task_id}, {"threshold", r.fit.threshold}, {"params", data_fit_to_json(r.fit)},
                           {"diagnostics", diag}});
  }
  doc["warnings"] = set.warnings;
  return doc;
}

json shared_fits_to_json(std::span<const SharedFitResult> fits, std::span<const std::string> warnings,
                         const Provenance& provenance) {
  json doc = document("shared_data_efficiency", "shared", provenance);
  doc["fits"] = json::array();
  for (const auto& r : fits) {
    json per_task = json::object();
    for (const auto& [task, c] : r.family.per_task) per_task[task] = {{"d_min", c.d_min}, {"a", c.a}, {"b", c.b}};
    json diag = diagnostics_to_json(r.diagnostics);
    diag["unstable"] = r.unstable;
    diag["warnings"] = r.warnings;
    doc["fits"].push_back({{"threshold", r.family.threshold},
                           {"params", {{"alpha", r.family.alpha}, {"beta", r.family.beta}}},
                           {"per_task", per_task},
                           {"diagnostics", diag}});
  }
  doc["warnings"] = warnings_json(warnings);
  return doc;
}

json aggregated_fits_to_json(std::span<const AggregatedFitResult> fits, std::span<const std::string> warnings,
                             const Provenance& provenance) {
  json doc = document("data_efficiency", "aggregated", provenance);
  doc["fits"] = json::array();
  for (const auto& r : fits) {
    json diag = diagnostics_to_json(r.result.diagnostics);
    diag["unstable"] = r.result.unstable;
    diag["warnings"] = r.result.warnings;
    doc["fits"].push_back({{"task", r.result.task_id},
                           {"threshold", r.result.fit.threshold},
                           {"params", data_fit_to_json(r.result.fit)},
                           {"normalization",
                            {{"per_env_median", r.normalization.per_env_median},
                             {"global_median", r.normalization.global_median}}},
                           {"diagnostics", diag}});
  }
  doc["warnings"] = warnings_json(warnings);
  return doc;
}

BatchRuleFit batch_rule_from_json(const json& doc) {
  require_fit_document(doc);
  if (doc.value("family", "") != "batch_rule" || !doc.contains("fits") || !doc["fits"].is_array() ||
      doc["fits"].empty()) {
    throw ValidationError("document does not hold a batch-size rule");
  }
  const auto& p = doc["fits"][0].at("params");
  const char* where = "batch-size rule";
  return BatchRuleFit{number_at(p, "a_B", where), number_at(p, "alpha_B", where), number_at(p, "b_B", where),
                      number_at(p, "beta_B", where)};
}

std::vector<DataFitResult> data_fits_from_json(const json& doc) {
  require_fit_document(doc);
  const std::string family = doc.value("family", "");
  if (!doc.contains("fits") || !doc["fits"].is_array()) throw ValidationError("fit document has no 'fits' array");
  std::vector<DataFitResult> out;
  for (const auto& entry : doc["fits"]) {
    const bool unstable = entry.contains("diagnostics") && entry["diagnostics"].value("unstable", false);
    const double threshold = number_at(entry, "threshold", "fit entry");
    if (family == "data_efficiency") {
      DataFitResult r;
      r.task_id = entry.value("task", "");
      r.fit = data_fit_from_json(entry.at("params"));
      r.fit.threshold = threshold;
      r.unstable = unstable;
      out.push_back(std::move(r));
    } else if (family == "shared_data_efficiency") {
      const double alpha = number_at(entry.at("params"), "alpha", "shared fit");
      const double beta = number_at(entry.at("params"), "beta", "shared fit");
      for (const auto& [task, c] : entry.at("per_task").items()) {
        DataFitResult r;
        r.task_id = task;
        r.fit = DataFit{number_at(c, "d_min", "shared fit"), number_at(c, "a", "shared fit"), alpha,
                        number_at(c, "b", "shared fit"), beta, threshold};
        r.unstable = unstable;
        out.push_back(std::move(r));
      }
    } else {
      throw ValidationError("document family '" + family + "' is not a data-efficiency fit");
    }
  }
  return out;
}

json solution_to_json(const AllocationSolution& s) {
  json j = {{"sigma_star", s.sigma_star},
            {"n_star", s.n_star},
            {"data", s.data},
            {"compute", s.compute},
            {"active_constraint", s.active_constraint},
            {"certified", s.certified},
            {"warnings", s.warnings}};
  j["budget"] = s.budget ? json(*s.budget) : json(nullptr);
  return j;
}

json frontier_laws_to_json(const FrontierLaws& laws) {
  auto law = [](const PowerLawSummary& s) {
    json j = {{"scale", s.scale}, {"exponent", s.exponent}, {"r_squared", s.r_squared}};
    j["r_squared_held_out"] = s.r_squared_held_out ? json(*s.r_squared_held_out) : json(nullptr);
    return j;
  };
  return json{{"compute", law(laws.compute_law)},
              {"data", law(laws.data_law)},
              {"sigma", law(laws.sigma_law)},
              {"n", law(laws.n_law)},
              {"n_fit", laws.n_fit},
              {"n_extrapolate", laws.n_extrapolate}};
}

json comparison_to_json(const ComparisonTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    json ratios = json::array();
    for (const auto& v : r.ratios) ratios.push_back(v ? json(*v) : json("infeasible"));
    rows.push_back({{"approach", r.strategy},
                    {"ratios", ratios},
                    {"average", r.average ? json(*r.average) : json(nullptr)},
                    {"median", r.median ? json(*r.median) : json(nullptr)}});
  }
  return json{{"budgets", table.budgets}, {"rows", rows}};
}

json sensitivity_to_json(std::span<const SensitivityRow> rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"batch_size_range", r.bin.label},
                   {"data_efficiency_ratio", r.ratio ? json(*r.ratio) : json("empty")},
                   {"groups", r.groups}});
  }
  return out;
}

json synth_spec_to_json(const SynthSpec& spec) {
  json task = {{"task", spec.meta.task_id},
               {"optimal_return", spec.meta.optimal_return},
               {"j_min", spec.meta.j_min},
               {"j_max", spec.meta.j_max},
               {"delta", spec.meta.delta}};
  if (spec.meta.reset_period) task["reset_period"] = *spec.meta.reset_period;
  json j = {{"task", task},
            {"truth_data", data_fit_to_json(spec.truth_data)},
            {"sigma_grid", spec.sigma_grid},
            {"n_grid", spec.n_grid},
            {"b_grid", spec.b_grid},
            {"seeds_per_cell", spec.seeds_per_cell},
            {"noise_sigma", spec.noise_sigma},
            {"rng_seed", spec.rng_seed},
            {"kappa", spec.kappa},
            {"plateau", spec.plateau},
            {"eval_points", spec.eval_points},
            {"thresholds", spec.thresholds}};
  if (spec.truth_batch) {
    const auto& b = spec.truth_batch;
    j["truth_batch"] = {{"a_B", b->a_b}, {"alpha_B", b->alpha_b}, {"b_B", b->b_b}, {"beta_B", b->beta_b}};
  }
  return j;
}

SynthSpec synth_spec_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("synth spec must be a JSON object");
  try {
    SynthSpec spec;
    const auto& task = j.at("task");
    spec.meta.task_id = task.at("task").get<std::string>();
    spec.meta.optimal_return = task.value("optimal_return", 1000.0);
    spec.meta.j_min = task.at("j_min").get<double>();
    spec.meta.j_max = task.at("j_max").get<double>();
    spec.meta.delta = task.at("delta").get<double>();
    if (task.contains("reset_period") && !task["reset_period"].is_null()) {
      spec.meta.reset_period = task["reset_period"].get<std::int64_t>();
    }
    spec.truth_data = data_fit_from_json(j.at("truth_data"));
    spec.truth_data.threshold = spec.meta.j_max;
    if (j.contains("truth_batch") && !j["truth_batch"].is_null()) {
      const auto& b = j["truth_batch"];
      const char* where = "truth_batch";
      spec.truth_batch = BatchRuleFit{number_at(b, "a_B", where), number_at(b, "alpha_B", where),
                                      number_at(b, "b_B", where), number_at(b, "beta_B", where)};
    }
    spec.sigma_grid = j.at("sigma_grid").get<std::vector<double>>();
    spec.n_grid = j.at("n_grid").get<std::vector<double>>();
    spec.b_grid = j.value("b_grid", std::vector<std::int64_t>{});
    spec.seeds_per_cell = j.value("seeds_per_cell", std::size_t{1});
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    spec.rng_seed = j.value("rng_seed", std::uint64_t{0});
    spec.kappa = j.value("kappa", 0.5);
    spec.plateau = j.value("plateau", 1000.0);
    spec.eval_points = j.value("eval_points", std::size_t{2000});
    spec.thresholds = j.value("thresholds", std::size_t{20});
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed synth spec: ") + e.what());
  }
}

}  // namespace rlscale
