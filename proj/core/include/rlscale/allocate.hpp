#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlscale/ingest.hpp"
#include "rlscale/scaling_laws.hpp"

namespace rlscale {

/// C(σ, N) = k σ N D(σ, N).
struct ComputeModel {
  double k = 1.0;

  void validate() const;
};

double compute_flops(const ComputeModel& model, double sigma, double n, double data);

/// Cost of one environment step in FLOPs: the FLOPs the learner could have spent
/// while the environment produced it.
double delta_from_timing(double flops_per_grad_step, double grad_steps_per_second, double env_steps_per_second);

/// Box for numerical searches (log-uniform in both coordinates).
struct SearchBox {
  double sigma_lo = 1e-3;
  double sigma_hi = 1e3;
  double n_lo = 1e3;
  double n_hi = 1e12;

  void validate() const;
};

struct AllocationSolution {
  double sigma_star = 0.0;
  double n_star = 0.0;
  double data = 0.0;
  double compute = 0.0;
  std::optional<double> budget;
  bool active_constraint = false;
  /// False when the result comes from a numerical fallback outside the closed form's guarantees.
  bool certified = true;
  std::vector<std::string> warnings;
};

/// Model size on the optimality relation N = (β b^β / (α a^α))^(1/β) σ^(α/β).
double relation_n(const DataFit& fit, double sigma);

/// Least compute reaching data D0: closed form, or a 1-D numerical search when α ≥ 1 and β ≥ 1.
/// Throws InfeasibleError (bound = d_min) when D0 ≤ d_min.
AllocationSolution optimal_for_data_budget(const DataFit& fit, double d0, const ComputeModel& model = {});

/// Least compute along the optimality relation inside the box.
double minimal_compute(const DataFit& fit, const ComputeModel& model, const SearchBox& box = {});

/// Least data under compute C0, searched along the optimality relation.
/// Throws InfeasibleError (bound = minimal compute) when C0 is below the minimum in the box.
AllocationSolution optimal_for_compute_budget(const DataFit& fit, const ComputeModel& model, double c0,
                                              const SearchBox& box = {});

/// Unconstrained minimum of F = C + δ D along the optimality relation.
AllocationSolution minimize_budget(const DataFit& fit, const ComputeModel& model, double delta,
                                   const SearchBox& box = {});

struct ContourPoint {
  double sigma = 0.0;
  double n = 0.0;
};

/// Points of D(σ, N) = D_target for `count` log-spaced σ in [sigma_lo, sigma_hi] where a positive N exists.
/// InfeasibleError when D_target ≤ d_min; ArgumentError when no σ in range works.
std::vector<ContourPoint> iso_data_contour(const DataFit& fit, double d_target, double sigma_lo, double sigma_hi,
                                           std::size_t count = 200);

struct FrontierPoint {
  double threshold = 0.0;
  double budget = 0.0;
  AllocationSolution solution;
};

struct Frontier {
  std::vector<FrontierPoint> points;  // sorted by threshold
  std::vector<std::string> warnings;
};

/// minimize_budget per threshold with δ = meta.delta. Unstable fits are skipped with a warning.
/// Needs ≥ 2 fits (ArgumentError).
Frontier budget_frontier(std::span<const DataFitResult> fits, const TaskMeta& meta, const ComputeModel& model,
                         const SearchBox& box = {});

struct PowerLawSummary {
  double scale = 0.0;
  double exponent = 0.0;
  /// Log-space R² over every frontier point, held-out ones included.
  double r_squared = 0.0;
  /// Log-space R² over the held-out top points only (set when at least 2 are held out).
  std::optional<double> r_squared_held_out;
};

struct FrontierLaws {
  PowerLawSummary compute_law;  // C*(F)
  PowerLawSummary data_law;     // D*(F)
  PowerLawSummary sigma_law;    // σ*(F)
  PowerLawSummary n_law;        // N*(F)
  std::size_t n_fit = 0;
  std::size_t n_extrapolate = 0;
};

/// Fit y = (scale / F)^exponent on the lowest (size - n_extrapolate) frontier points.
/// ArgumentError when fewer than 2 points remain for the fit.
FrontierLaws fit_frontier_laws(std::span<const FrontierPoint> frontier, std::size_t n_extrapolate);

struct Strategy {
  enum class Kind { compute_optimal, fixed_batch_compute_optimal, sigma_only, n_only };
  Kind kind = Kind::compute_optimal;
  /// N for sigma_only, σ for n_only.
  double fixed = 0.0;

  std::string name() const;
};

struct ComparisonRow {
  std::string strategy;
  /// D(strategy) / D(compute_optimal) per budget; empty where the strategy is infeasible.
  std::vector<std::optional<double>> ratios;
  std::optional<double> average;
  std::optional<double> median;
};

struct ComparisonTable {
  std::vector<double> budgets;
  std::vector<ComparisonRow> rows;
};

struct ComparisonOptions {
  /// Needed by fixed_batch_compute_optimal: the batch rule and the data penalty
  /// 1 + kappa·log²(B / B̃) of running at a mismatched batch size.
  std::optional<BatchRuleFit> batch_rule;
  double kappa = 0.5;
  SearchBox box;
};

ComparisonTable compare_allocations(const DataFit& fit, const ComputeModel& model, std::span<const double> budgets,
                                    std::span<const Strategy> strategies, const ComparisonOptions& options = {});

}  // namespace rlscale
