#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rlscale/lbfgs.hpp"

namespace rlscale {

/// Log-space affine map sending [min x, max x] onto [0.5, 2]:
/// x' = exp((log x - m) / s).
struct NormalizationState {
  double s = 1.0;
  double m = 0.0;
  /// Set when every input was equal and the fixed-scale fallback (s = 1, x ↦ 1) was used.
  bool degenerate = false;

  double apply(double x) const;
  double invert(double x_normalized) const;
};

/// Throws ArgumentError for nonpositive or non-finite x, or when max x = min x.
std::pair<std::vector<double>, NormalizationState> normalize_inputs(std::span<const double> x);

/// Like normalize_inputs but maps a single distinct value to 1.0 with s = 1.
std::pair<std::vector<double>, NormalizationState> normalize_inputs_or_fallback(std::span<const double> x);

/// log(1 + e^θ), stable for large |θ|.
double softplus(double theta);
/// Inverse of softplus; p must be > 0.
double inverse_softplus(double p);
/// d softplus / dθ.
double sigmoid(double theta);

enum class Family {
  constant,                // y = c
  power_law,               // y = (a / x)^α
  batch_rule,              // y = a / (σ^α (1 + b N^-β))
  data_efficiency,         // y = d + (a/σ)^α + (b/N)^β
  shared_data_efficiency,  // per group g: y = d_g + (a_g/σ)^α + (b_g/N)^β
};

std::string_view family_name(Family family);
Family family_from_name(std::string_view name);
std::size_t input_arity(Family family);
std::size_t parameter_count(Family family, std::size_t groups = 1);
std::vector<std::string> parameter_names(Family family, std::size_t groups = 1);

/// Evaluate a family at raw inputs with (positive) parameters in the order of parameter_names.
double evaluate_family(Family family, std::span<const double> params, std::span<const double> input,
                       std::size_t group = 0);

struct FitProblem {
  Family model = Family::constant;
  /// One tuple per observation, input_arity(model) entries each.
  std::vector<std::vector<double>> inputs;
  std::vector<double> targets;
  /// Group index per observation (shared families only); empty means one group.
  std::vector<std::size_t> groups;
  /// Initial raw parameters θ; empty means all zeros.
  std::vector<double> raw_params;
};

struct FitOptions {
  double grad_tol = 1e-10;
  std::size_t max_iterations = 2000;
  std::size_t memory = 10;
  /// Extra starts with θ ~ N(0, 1) when the first fit ends above `plateau_loss`
  /// or without converging.
  std::size_t restarts = 8;
  double plateau_loss = 1e-6;
  std::uint64_t rng_seed = 0x5eed;
  bool record_history = false;
};

struct FitResult {
  Family model = Family::constant;
  std::vector<std::string> names;
  /// Positive parameters in raw units, aligned with names.
  std::vector<double> params;
  /// Mean squared log error over the observations.
  double loss = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t starts = 0;
  double grad_norm = 0.0;
  std::string status;
  std::string optimizer;
  /// Positive parameters of the fit in normalized units (before denormalization).
  std::vector<double> normalized_params;
  std::vector<NormalizationState> input_norm;
  /// Target divisor per group.
  std::vector<double> y_scale;
  /// Objective after each accepted step of the winning start (record_history only).
  std::vector<double> history;

  /// Throws ArgumentError for an unknown name.
  double param(std::string_view name) const;
  /// Prediction from the normalized parameters (inputs are normalized on the fly).
  double predict_normalized(std::span<const double> input, std::size_t group = 0) const;
  /// Prediction from the denormalized parameters.
  double predict(std::span<const double> input, std::size_t group = 0) const;
};

/// Mean squared log error of a family on already normalized data, as a function of θ.
class LogMseObjective {
 public:
  LogMseObjective(Family family, std::vector<std::vector<double>> inputs, std::vector<double> targets,
                  std::vector<std::size_t> groups, std::size_t group_count);

  double operator()(std::span<const double> theta, std::span<double> grad) const;
  double value(std::span<const double> theta) const;
  std::size_t dimension() const noexcept { return dim_; }

 private:
  Family family_;
  std::vector<std::vector<double>> inputs_;
  std::vector<double> log_targets_;
  std::vector<std::size_t> groups_;
  std::size_t dim_;
};

/// Normalize inputs and targets, run L-BFGS from θ (plus restarts), denormalize.
/// Throws ArgumentError on malformed problems and OptimizationError when no start
/// yields a finite objective.
FitResult minimize(const FitProblem& problem, const FitOptions& options = {});

struct PowerLawFit {
  double a = 0.0;
  double alpha = 0.0;  // may be negative (y increasing in x)
  double r_squared = 0.0;

  double operator()(double x) const;
};

/// Least-squares line in log-log space for y = (a / x)^α.
/// Needs ≥ 2 points with distinct x; throws ArgumentError otherwise and
/// EstimationError when the slope is exactly zero.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y);

struct LoglinearFit {
  double intercept = 0.0;
  double slope_sigma = 0.0;
  double slope_n = 0.0;

  double operator()(double sigma, double n) const;
};

/// OLS of log y on (1, log σ, log N). Throws ArgumentError for < 3 points or a rank-deficient design.
LoglinearFit fit_loglinear(std::span<const double> sigma, std::span<const double> n, std::span<const double> y);

}  // namespace rlscale
