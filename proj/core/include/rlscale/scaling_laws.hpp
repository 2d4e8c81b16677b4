#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlscale/fitkit.hpp"
#include "rlscale/preprocess.hpp"

namespace rlscale {

/// Best batch size as a function of UTD σ and model size N:
/// B(σ, N) = a_B / (σ^α_B + b_B σ^α_B N^-β_B).
struct BatchRuleFit {
  double a_b = 0.0;
  double alpha_b = 0.0;
  double b_b = 0.0;
  double beta_b = 0.0;

  bool operator==(const BatchRuleFit&) const = default;
};

double eval_batch_rule(const BatchRuleFit& fit, double sigma, double n);
/// The same law written as (a_B / σ^α_B) · 1 / (1 + b_B N^-β_B).
double eval_batch_rule_factored(const BatchRuleFit& fit, double sigma, double n);
/// Large-model limit a_B / σ^α_B.
double batch_rule_asymptote(const BatchRuleFit& fit, double sigma);

/// Data multiplier of training at `batch` instead of the best batch: 1 + kappa·log²(batch / best).
double batch_mismatch_penalty(double batch, double best, double kappa);

struct BatchObservation {
  double sigma = 0.0;
  double model_size = 0.0;
  double batch_size = 0.0;  // bootstrap-optimal B
};

struct BatchRuleResult {
  BatchRuleFit fit;
  FitResult diagnostics;
};

/// Needs ≥ 4 observations covering ≥ 2 distinct σ and ≥ 2 distinct N (ArgumentError otherwise).
BatchRuleResult fit_batch_rule(std::span<const BatchObservation> points, const FitOptions& options = {});

/// Factored coefficients: D = d_min (1 + (a'/σ)^α + (b'/N)^β).
struct FactoredDataFit {
  double d_min = 0.0;
  double a = 0.0;
  double alpha = 0.0;
  double b = 0.0;
  double beta = 0.0;
};

/// Data needed to reach `threshold`: D(σ, N) = d_min + (a/σ)^α + (b/N)^β.
struct DataFit {
  double d_min = 0.0;
  double a = 0.0;
  double alpha = 0.0;
  double b = 0.0;
  double beta = 0.0;
  double threshold = 0.0;

  static DataFit from_factored(const FactoredDataFit& f, double threshold = 0.0);
  FactoredDataFit to_factored() const;

  bool operator==(const DataFit&) const = default;
};

double eval_data_fit(const DataFit& fit, double sigma, double n);

struct DataFitResult {
  std::string task_id;
  DataFit fit;
  FitResult diagnostics;
  /// An exponent collapsed below 1e-3 or one term is flat over the data.
  bool unstable = false;
  std::vector<std::string> warnings;
};

struct DataFitSet {
  std::vector<DataFitResult> fits;  // ordered by (task, threshold)
  std::vector<std::string> warnings;
};

/// Per (task, σ, N, threshold), keep the batch-size arm with the least data (ties: smaller batch).
std::vector<EfficiencyPoint> select_best_batch(std::span<const EfficiencyPoint> points);

/// Fit one threshold of one task. Needs ≥ 5 points (ArgumentError otherwise).
DataFitResult fit_data_threshold(std::span<const EfficiencyPoint> points, const FitOptions& options = {});

/// Independent fits for every (task, threshold) present. Thresholds with fewer than 5
/// points are skipped with a warning. Points should already be reduced by select_best_batch.
DataFitSet fit_data_efficiency(std::span<const EfficiencyPoint> points, const FitOptions& options = {});

/// Exponents shared across tasks, per-task {d_min, a, b}; one threshold.
struct SharedExponentFamily {
  struct TaskCoefficients {
    double d_min = 0.0;
    double a = 0.0;
    double b = 0.0;
  };
  double alpha = 0.0;
  double beta = 0.0;
  double threshold = 0.0;
  std::map<std::string, TaskCoefficients> per_task;

  /// Throws ArgumentError for an unknown task.
  DataFit for_task(const std::string& task_id) const;
};

struct SharedFitResult {
  SharedExponentFamily family;
  FitResult diagnostics;
  bool unstable = false;
  std::vector<std::string> warnings;
};

/// Points of a single threshold from ≥ 2 tasks (ArgumentError otherwise).
SharedFitResult fit_data_shared(std::span<const EfficiencyPoint> points, const FitOptions& options = {});

struct AggregateNormalization {
  std::map<std::string, double> per_env_median;
  double global_median = 0.0;
};

/// D_norm = D · global_median / env_median, with global_median the median of per-env medians.
/// Throws ArgumentError for an empty env or an empty map.
std::pair<std::vector<EfficiencyPoint>, AggregateNormalization> normalize_across_tasks(
    const std::map<std::string, std::vector<EfficiencyPoint>>& tables);

struct AggregatedFitResult {
  DataFitResult result;
  AggregateNormalization normalization;
};

/// normalize_across_tasks, then one fit on the pooled points (task_id "aggregate").
/// Needs ≥ 2 envs; points must share one threshold.
AggregatedFitResult fit_data_aggregated(const std::map<std::string, std::vector<EfficiencyPoint>>& tables,
                                        const FitOptions& options = {});

/// Reasons a fit should not be trusted on these points; empty when it looks fine.
std::vector<std::string> stability_issues(const DataFit& fit, std::span<const EfficiencyPoint> points);

/// Mean of |pred - actual| / actual.
double relative_error(std::span<const double> predicted, std::span<const double> actual);

struct SensitivityBin {
  std::string label;
  double lo = 1.0;  // multiples of B*
  double hi = 1.0;
  /// The bin of the arm nearest B* itself (ratio 1 by construction).
  bool center = false;
};

/// The nine ranges reported in the batch-size sensitivity table.
std::vector<SensitivityBin> default_sensitivity_bins();

struct SensitivityRow {
  SensitivityBin bin;
  /// Average over (σ, N) groups of mean D in the bin / D at the arm nearest B*; empty when no group populated the bin.
  std::optional<double> ratio;
  std::size_t groups = 0;
};

/// Groups points by (task, σ, N, threshold), predicts B* with the batch rule and bins arms by B / B*.
std::vector<SensitivityRow> batch_sensitivity(std::span<const EfficiencyPoint> points, const BatchRuleFit& fit,
                                              std::span<const SensitivityBin> bins);

}  // namespace rlscale
