#include "rlscale/scaling_laws.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "rlscale/error.hpp"
#include "rlscale/util.hpp"

namespace rlscale {

namespace {

constexpr double kExponentFloor = 1e-3;
constexpr double kFlatTerm = 1e-3;
constexpr std::size_t kMinDataPoints = 5;

void check_positive(double sigma, double n) {
  if (!(sigma > 0.0) || !(n > 0.0)) throw ArgumentError("sigma and N must be positive");
}

FitProblem data_problem(std::span<const EfficiencyPoint> points) {
  FitProblem problem;
  problem.model = Family::data_efficiency;
  for (const auto& p : points) {
    problem.inputs.push_back({p.sigma, p.model_size});
    problem.targets.push_back(p.data);
  }
  return problem;
}

DataFit data_fit_from(const FitResult& r, double threshold) {
  return DataFit{r.params[0], r.params[1], r.params[2], r.params[3], r.params[4], threshold};
}

void require_single_threshold(std::span<const EfficiencyPoint> points, const char* who) {
  for (const auto& p : points) {
    if (p.threshold != points.front().threshold) {
      throw ArgumentError(std::string(who) + ": points span more than one threshold");
    }
  }
}

}  // namespace

double eval_batch_rule(const BatchRuleFit& fit, double sigma, double n) {
  check_positive(sigma, n);
  const double s = std::pow(sigma, fit.alpha_b);
  return fit.a_b / (s + fit.b_b * s * std::pow(n, -fit.beta_b));
}

double eval_batch_rule_factored(const BatchRuleFit& fit, double sigma, double n) {
  check_positive(sigma, n);
  return (fit.a_b / std::pow(sigma, fit.alpha_b)) / (1.0 + fit.b_b * std::pow(n, -fit.beta_b));
}

double batch_rule_asymptote(const BatchRuleFit& fit, double sigma) {
  check_positive(sigma, 1.0);
  return fit.a_b / std::pow(sigma, fit.alpha_b);
}

double batch_mismatch_penalty(double batch, double best, double kappa) {
  if (!(batch > 0.0) || !(best > 0.0)) throw ArgumentError("batch sizes must be positive");
  if (!(kappa >= 0.0)) throw ArgumentError("kappa must be nonnegative");
  const double l = std::log(batch / best);
  return 1.0 + kappa * l * l;
}

BatchRuleResult fit_batch_rule(std::span<const BatchObservation> points, const FitOptions& options) {
  if (points.size() < 4) {
    throw ArgumentError("batch-size rule needs at least 4 points, got " + std::to_string(points.size()));
  }
  std::set<double> sigmas, sizes;
  FitProblem problem;
  problem.model = Family::batch_rule;
  for (const auto& p : points) {
    if (!(p.sigma > 0.0) || !(p.model_size > 0.0) || !(p.batch_size > 0.0)) {
      throw ArgumentError("batch-size observations must be positive");
    }
    sigmas.insert(p.sigma);
    sizes.insert(p.model_size);
    problem.inputs.push_back({p.sigma, p.model_size});
    problem.targets.push_back(p.batch_size);
  }
  if (sigmas.size() < 2 || sizes.size() < 2) {
    throw ArgumentError("batch-size rule needs at least 2 distinct UTD values and 2 distinct model sizes");
  }
  BatchRuleResult out;
  out.diagnostics = minimize(problem, options);
  const auto& q = out.diagnostics.params;
  out.fit = BatchRuleFit{q[0], q[1], q[2], q[3]};
  return out;
}

DataFit DataFit::from_factored(const FactoredDataFit& f, double threshold) {
  return DataFit{f.d_min, f.a * std::pow(f.d_min, 1.0 / f.alpha), f.alpha, f.b * std::pow(f.d_min, 1.0 / f.beta),
                 f.beta, threshold};
}

FactoredDataFit DataFit::to_factored() const {
  return FactoredDataFit{d_min, a / std::pow(d_min, 1.0 / alpha), alpha, b / std::pow(d_min, 1.0 / beta), beta};
}

double eval_data_fit(const DataFit& fit, double sigma, double n) {
  check_positive(sigma, n);
  return fit.d_min + std::pow(fit.a / sigma, fit.alpha) + std::pow(fit.b / n, fit.beta);
}

std::vector<EfficiencyPoint> select_best_batch(std::span<const EfficiencyPoint> points) {
  using Key = std::tuple<std::string, double, double, double>;
  std::map<Key, EfficiencyPoint> best;
  for (const auto& p : points) {
    const Key key{p.task_id, p.sigma, p.model_size, p.threshold};
    auto [it, inserted] = best.try_emplace(key, p);
    if (inserted) continue;
    auto& cur = it->second;
    if (p.data < cur.data || (p.data == cur.data && p.batch_size < cur.batch_size)) cur = p;
  }
  std::vector<EfficiencyPoint> out;
  out.reserve(best.size());
  for (auto& [k, p] : best) out.push_back(std::move(p));
  return out;
}

std::vector<std::string> stability_issues(const DataFit& fit, std::span<const EfficiencyPoint> points) {
  std::vector<std::string> issues;
  if (fit.alpha < kExponentFloor) issues.push_back("alpha = " + format_double(fit.alpha) + " collapsed below 1e-3");
  if (fit.beta < kExponentFloor) issues.push_back("beta = " + format_double(fit.beta) + " collapsed below 1e-3");
  if (points.empty()) return issues;

  std::vector<double> data;
  double s_lo = points.front().sigma, s_hi = s_lo;
  double n_lo = points.front().model_size, n_hi = n_lo;
  for (const auto& p : points) {
    data.push_back(p.data);
    s_lo = std::min(s_lo, p.sigma);
    s_hi = std::max(s_hi, p.sigma);
    n_lo = std::min(n_lo, p.model_size);
    n_hi = std::max(n_hi, p.model_size);
  }
  const double scale = median(data);
  const double sigma_range = std::pow(fit.a / s_lo, fit.alpha) - std::pow(fit.a / s_hi, fit.alpha);
  const double n_range = std::pow(fit.b / n_lo, fit.beta) - std::pow(fit.b / n_hi, fit.beta);
  if (sigma_range < kFlatTerm * scale) issues.push_back("UTD term is flat over the observed UTD values");
  if (n_range < kFlatTerm * scale) issues.push_back("model-size term is flat over the observed model sizes");
  return issues;
}

DataFitResult fit_data_threshold(std::span<const EfficiencyPoint> points, const FitOptions& options) {
  if (points.size() < kMinDataPoints) {
    throw ArgumentError("data-efficiency fit needs at least 5 points, got " + std::to_string(points.size()));
  }
  require_single_threshold(points, "fit_data_threshold");
  DataFitResult out;
  out.task_id = points.front().task_id;
  out.diagnostics = minimize(data_problem(points), options);
  out.fit = data_fit_from(out.diagnostics, points.front().threshold);
  const auto issues = stability_issues(out.fit, points);
  if (!issues.empty()) {
    out.unstable = true;
    for (const auto& issue : issues) {
      out.warnings.push_back(out.task_id + " J=" + format_double(out.fit.threshold) + ": " + issue +
                             "; consider the shared_exponent or aggregated modes");
    }
  }
  return out;
}

DataFitSet fit_data_efficiency(std::span<const EfficiencyPoint> points, const FitOptions& options) {
  std::map<std::pair<std::string, double>, std::vector<EfficiencyPoint>> groups;
  for (const auto& p : points) groups[{p.task_id, p.threshold}].push_back(p);
  DataFitSet set;
  for (const auto& [key, pts] : groups) {
    if (pts.size() < kMinDataPoints) {
      set.warnings.push_back(key.first + " J=" + format_double(key.second) + ": only " + std::to_string(pts.size()) +
                             " points, threshold skipped");
      continue;
    }
    auto r = fit_data_threshold(pts, options);
    set.warnings.insert(set.warnings.end(), r.warnings.begin(), r.warnings.end());
    set.fits.push_back(std::move(r));
  }
  return set;
}

DataFit SharedExponentFamily::for_task(const std::string& task_id) const {
  const auto it = per_task.find(task_id);
  if (it == per_task.end()) throw ArgumentError("shared fit has no task '" + task_id + "'");
  return DataFit{it->second.d_min, it->second.a, alpha, it->second.b, beta, threshold};
}

SharedFitResult fit_data_shared(std::span<const EfficiencyPoint> points, const FitOptions& options) {
  require_single_threshold(points, "fit_data_shared");
  std::map<std::string, std::size_t> task_index;
  for (const auto& p : points) task_index.emplace(p.task_id, 0);
  if (task_index.size() < 2) throw ArgumentError("shared-exponent fit needs at least 2 tasks");
  std::size_t next = 0;
  for (auto& [task, idx] : task_index) idx = next++;

  FitProblem problem;
  problem.model = Family::shared_data_efficiency;
  for (const auto& p : points) {
    problem.inputs.push_back({p.sigma, p.model_size});
    problem.targets.push_back(p.data);
    problem.groups.push_back(task_index.at(p.task_id));
  }
  SharedFitResult out;
  out.diagnostics = minimize(problem, options);
  const auto& q = out.diagnostics.params;
  out.family.alpha = q[0];
  out.family.beta = q[1];
  out.family.threshold = points.front().threshold;
  for (const auto& [task, idx] : task_index) {
    const std::size_t o = 2 + 3 * idx;
    out.family.per_task[task] = {q[o], q[o + 1], q[o + 2]};
  }
  for (const auto& [task, idx] : task_index) {
    std::vector<EfficiencyPoint> own;
    for (const auto& p : points) {
      if (p.task_id == task) own.push_back(p);
    }
    for (const auto& issue : stability_issues(out.family.for_task(task), own)) {
      out.unstable = true;
      out.warnings.push_back(task + " J=" + format_double(out.family.threshold) + ": " + issue);
    }
  }
  return out;
}

std::pair<std::vector<EfficiencyPoint>, AggregateNormalization> normalize_across_tasks(
    const std::map<std::string, std::vector<EfficiencyPoint>>& tables) {
  if (tables.empty()) throw ArgumentError("normalize_across_tasks needs at least one env");
  AggregateNormalization norm;
  std::vector<double> medians;
  for (const auto& [env, pts] : tables) {
    if (pts.empty()) throw ArgumentError("env '" + env + "' has no efficiency points");
    std::vector<double> data;
    for (const auto& p : pts) data.push_back(p.data);
    const double m = median(std::move(data));
    if (!(m > 0.0)) throw ArgumentError("env '" + env + "' has a nonpositive median data efficiency");
    norm.per_env_median[env] = m;
    medians.push_back(m);
  }
  norm.global_median = median(std::move(medians));
  std::vector<EfficiencyPoint> out;
  for (const auto& [env, pts] : tables) {
    const double factor = norm.global_median / norm.per_env_median.at(env);
    for (auto p : pts) {
      p.data *= factor;
      if (p.data_std) *p.data_std *= factor;
      out.push_back(std::move(p));
    }
  }
  return {std::move(out), std::move(norm)};
}

AggregatedFitResult fit_data_aggregated(const std::map<std::string, std::vector<EfficiencyPoint>>& tables,
                                        const FitOptions& options) {
  if (tables.size() < 2) throw ArgumentError("aggregated fit needs at least 2 envs");
  auto [points, norm] = normalize_across_tasks(tables);
  for (auto& p : points) p.task_id = "aggregate";
  AggregatedFitResult out;
  out.result = fit_data_threshold(points, options);
  out.normalization = std::move(norm);
  return out;
}

double relative_error(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw ArgumentError("relative_error: length mismatch");
  if (actual.empty()) throw ArgumentError("relative_error needs at least one value");
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (!(actual[i] > 0.0) || !(predicted[i] > 0.0)) throw ArgumentError("relative_error needs positive values");
    sum += std::abs(predicted[i] - actual[i]) / actual[i];
  }
  return sum / static_cast<double>(actual.size());
}

std::vector<SensitivityBin> default_sensitivity_bins() {
  return {
      {"[1/16 B*, 1/8 B*]", 1.0 / 16.0, 1.0 / 8.0, false},
      {"[1/8 B*, 1/4 B*]", 1.0 / 8.0, 1.0 / 4.0, false},
      {"[1/4 B*, 1/2 B*]", 1.0 / 4.0, 1.0 / 2.0, false},
      {"[1/2 B*, 2/3 B*]", 1.0 / 2.0, 2.0 / 3.0, false},
      {"B*", 1.0, 1.0, true},
      {"[1.5 B*, 2 B*]", 1.5, 2.0, false},
      {"[2 B*, 4 B*]", 2.0, 4.0, false},
      {"[4 B*, 8 B*]", 4.0, 8.0, false},
      {"[8 B*, 16 B*]", 8.0, 16.0, false},
  };
}

std::vector<SensitivityRow> batch_sensitivity(std::span<const EfficiencyPoint> points, const BatchRuleFit& fit,
                                              std::span<const SensitivityBin> bins) {
  using Key = std::tuple<std::string, double, double, double>;
  std::map<Key, std::map<double, double>> groups;  // B → D
  for (const auto& p : points) groups[{p.task_id, p.sigma, p.model_size, p.threshold}][p.batch_size] = p.data;

  std::vector<double> ratio_sum(bins.size(), 0.0);
  std::vector<std::size_t> ratio_count(bins.size(), 0);
  for (const auto& [key, arms] : groups) {
    const double b_star = eval_batch_rule(fit, std::get<1>(key), std::get<2>(key));
    double nearest_d = 0.0, nearest_dist = 0.0;
    bool have = false;
    for (const auto& [b, d] : arms) {
      const double dist = std::abs(std::log(b / b_star));
      if (!have || dist < nearest_dist) {
        nearest_d = d;
        nearest_dist = dist;
        have = true;
      }
    }
    for (std::size_t k = 0; k < bins.size(); ++k) {
      if (bins[k].center) {
        ratio_sum[k] += 1.0;
        ++ratio_count[k];
        continue;
      }
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& [b, d] : arms) {
        const double r = b / b_star;
        if (r >= bins[k].lo * (1.0 - 1e-12) && r <= bins[k].hi * (1.0 + 1e-12)) {
          sum += d;
          ++count;
        }
      }
      if (count > 0) {
        ratio_sum[k] += (sum / static_cast<double>(count)) / nearest_d;
        ++ratio_count[k];
      }
    }
  }

  std::vector<SensitivityRow> rows;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    SensitivityRow row;
    row.bin = bins[k];
    row.groups = ratio_count[k];
    if (ratio_count[k] > 0) row.ratio = ratio_sum[k] / static_cast<double>(ratio_count[k]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace rlscale
