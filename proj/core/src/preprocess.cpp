#include "rlscale/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "rlscale/error.hpp"
#include "rlscale/util.hpp"

namespace rlscale {

LearningCurve normalize_returns(const LearningCurve& curve, const TaskMeta& meta) {
  LearningCurve out = curve;
  const double scale = 1000.0 / meta.optimal_return;
  for (auto& p : out.points) p.value *= scale;
  return out;
}

LearningCurve remove_reset_dips(const LearningCurve& curve) {
  if (curve.reset_steps.empty()) return curve;

  LearningCurve out;
  out.key = curve.key;
  out.reset_steps = curve.reset_steps;
  out.points.reserve(curve.points.size());

  auto next_marker = curve.reset_steps.begin();
  double running_max = -std::numeric_limits<double>::infinity();
  bool recovering = false;
  double recover_to = 0.0;

  for (const auto& p : curve.points) {
    // Entering a reset: remember the level the run had reached before it.
    while (next_marker != curve.reset_steps.end() && p.env_step >= *next_marker) {
      if (!out.points.empty()) {
        recover_to = recovering ? std::max(recover_to, running_max) : running_max;
        recovering = true;
      }
      ++next_marker;
    }
    if (recovering) {
      if (p.value < recover_to) continue;
      recovering = false;
    }
    out.points.push_back(p);
    running_max = std::max(running_max, p.value);
  }
  if (out.points.empty()) {
    throw UnusableCurveError("every evaluation point of the curve was removed as a post-reset dip");
  }
  return out;
}

std::vector<double> isotonic(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("isotonic regression of an empty sequence");
  // Blocks of pooled values: (sum, count). A block's level is sum/count.
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  sums.reserve(values.size());
  counts.reserve(values.size());
  for (double v : values) {
    sums.push_back(v);
    counts.push_back(1);
    while (sums.size() > 1) {
      const std::size_t last = sums.size() - 1;
      const double lhs = sums[last - 1] * static_cast<double>(counts[last]);
      const double rhs = sums[last] * static_cast<double>(counts[last - 1]);
      if (lhs <= rhs) break;  // previous level <= current level
      sums[last - 1] += sums[last];
      counts[last - 1] += counts[last];
      sums.pop_back();
      counts.pop_back();
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t b = 0; b < sums.size(); ++b) {
    const double level = sums[b] / static_cast<double>(counts[b]);
    out.insert(out.end(), counts[b], level);
  }
  return out;
}

ThresholdGrid threshold_grid(const TaskMeta& meta, std::size_t m) {
  if (m < 2) throw ArgumentError("threshold grid needs m >= 2, got " + std::to_string(m));
  ThresholdGrid grid;
  grid.thresholds.resize(m);
  const double step = (meta.j_max - meta.j_min) / static_cast<double>(m - 1);
  for (std::size_t i = 0; i < m; ++i) grid.thresholds[i] = meta.j_min + step * static_cast<double>(i);
  grid.thresholds.back() = meta.j_max;
  return grid;
}

std::optional<std::int64_t> data_efficiency(const ProcessedCurve& curve, double threshold) {
  if (!curve.monotone) throw ContractError("data_efficiency requires a monotone (isotonic) curve");
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    if (curve.points[i].value < curve.points[i - 1].value) {
      throw ContractError("curve flagged monotone has a decreasing step");
    }
  }
  auto it = std::lower_bound(curve.points.begin(), curve.points.end(), threshold,
                             [](const CurvePoint& p, double j) { return p.value < j; });
  if (it == curve.points.end()) return std::nullopt;
  return it->env_step;
}

ProcessedCurve process_curve(const LearningCurve& curve, const TaskMeta& meta) {
  const LearningCurve cleaned = remove_reset_dips(normalize_returns(curve, meta));
  std::vector<double> values;
  values.reserve(cleaned.points.size());
  for (const auto& p : cleaned.points) values.push_back(p.value);
  const auto fitted = isotonic(values);

  ProcessedCurve out;
  out.key = curve.key;
  out.points = cleaned.points;
  for (std::size_t i = 0; i < fitted.size(); ++i) out.points[i].value = fitted[i];
  out.monotone = true;
  return out;
}

std::vector<ProcessedCurve> process_runset(const RunSet& runs) {
  std::vector<ProcessedCurve> out;
  out.reserve(runs.curves.size());
  for (const auto& c : runs.curves) out.push_back(process_curve(c, runs.meta));
  return out;
}

std::optional<double> aggregate_seeds(std::span<const std::optional<std::int64_t>> per_seed) {
  std::vector<double> reached;
  for (const auto& d : per_seed) {
    if (d) reached.push_back(static_cast<double>(*d));
  }
  const std::size_t censored = per_seed.size() - reached.size();
  if (per_seed.empty() || 2 * censored >= per_seed.size()) return std::nullopt;
  return median(std::move(reached));
}

namespace {

using ArmKey = std::tuple<double, double, std::int64_t>;  // (σ, N, B)

std::string describe(const ArmKey& k) {
  return "utd " + format_double(std::get<0>(k)) + ", model_size " + format_double(std::get<1>(k)) +
         ", batch_size " + std::to_string(std::get<2>(k));
}

}  // namespace

EfficiencyTable extract_efficiency_table(std::span<const ProcessedCurve> curves, const std::string& task_id,
                                         const ThresholdGrid& grid) {
  if (curves.empty()) throw ArgumentError("cannot extract efficiencies from an empty run set");
  std::map<ArmKey, std::vector<const ProcessedCurve*>> arms;
  for (const auto& c : curves) arms[{c.key.utd, c.key.model_size, c.key.batch_size}].push_back(&c);

  EfficiencyTable table;
  for (const auto& [arm, seeds] : arms) {
    bool any_point = false;
    std::vector<double> skipped;
    for (double j : grid.thresholds) {
      std::vector<std::optional<std::int64_t>> per_seed;
      per_seed.reserve(seeds.size());
      for (const auto* c : seeds) per_seed.push_back(data_efficiency(*c, j));
      if (j == grid.front() && std::none_of(per_seed.begin(), per_seed.end(),
                                            [](const auto& d) { return d.has_value(); })) {
        table.warnings.push_back(task_id + " (" + describe(arm) +
                                 "): no seed reaches j_min; group excluded");
        break;
      }
      const auto data = aggregate_seeds(per_seed);
      if (!data) {
        skipped.push_back(j);
        continue;
      }
      table.points.push_back({task_id, std::get<0>(arm), std::get<1>(arm),
                              static_cast<double>(std::get<2>(arm)), j, *data, std::nullopt});
      any_point = true;
    }
    if (!any_point && !skipped.empty()) {
      table.warnings.push_back(task_id + " (" + describe(arm) +
                               "): at least half the seeds censored at every threshold; group excluded");
    } else if (!skipped.empty()) {
      table.warnings.push_back(task_id + " (" + describe(arm) + "): at least half the seeds censored at " +
                               std::to_string(skipped.size()) + " threshold(s) from J=" +
                               format_double(skipped.front()));
    }
  }
  return table;
}

EfficiencyTable extract_efficiency_table(const RunSet& runs, const ThresholdGrid& grid) {
  if (runs.curves.empty()) throw ArgumentError("cannot extract efficiencies from an empty run set");
  const auto processed = process_runset(runs);
  return extract_efficiency_table(processed, runs.meta.task_id, grid);
}

double suggest_j_max(std::span<const ProcessedCurve> curves, double coverage) {
  if (curves.empty()) throw ArgumentError("suggest_j_max needs at least one curve");
  if (!(coverage > 0.0 && coverage <= 1.0)) throw ArgumentError("coverage must lie in (0, 1]");
  std::map<ArmKey, std::vector<double>> finals;
  for (const auto& c : curves) {
    if (c.points.empty()) continue;
    finals[{c.key.utd, c.key.model_size, c.key.batch_size}].push_back(c.points.back().value);
  }
  // Best arm per (σ, N) by median final return.
  std::map<std::pair<double, double>, double> best;
  for (auto& [arm, values] : finals) {
    const double m = median(values);
    auto [it, inserted] = best.try_emplace({std::get<0>(arm), std::get<1>(arm)}, m);
    if (!inserted) it->second = std::max(it->second, m);
  }
  std::vector<double> tops;
  for (const auto& [k, v] : best) tops.push_back(v);
  std::sort(tops.begin(), tops.end(), std::greater<>());
  const auto need = static_cast<std::size_t>(std::ceil(coverage * static_cast<double>(tops.size()) - 1e-12));
  return std::min(1000.0, tops[std::max<std::size_t>(need, 1) - 1]);
}

}  // namespace rlscale
