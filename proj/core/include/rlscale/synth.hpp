#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rlscale/ingest.hpp"
#include "rlscale/preprocess.hpp"
#include "rlscale/scaling_laws.hpp"

namespace rlscale {

/// Ground truth and grids for synthetic experiments.
///
/// truth_data is the law at the top threshold meta.j_max. Learning curves follow
/// r(t) = plateau · t / (t + t_half) in normalized units, so the data needed for a lower
/// threshold J is the same law scaled by c_J = J (plateau - j_max) / (j_max (plateau - J)).
struct SynthSpec {
  TaskMeta meta;
  DataFit truth_data;
  std::optional<BatchRuleFit> truth_batch;
  std::vector<double> sigma_grid;
  std::vector<double> n_grid;
  std::vector<std::int64_t> b_grid;
  std::size_t seeds_per_cell = 1;
  /// Std of the multiplicative lognormal noise, in log space.
  double noise_sigma = 0.0;
  std::uint64_t rng_seed = 0;
  /// Data penalty 1 + kappa·log²(B / B̃) for running away from the best batch size.
  double kappa = 0.5;
  /// Asymptotic normalized return of every curve; must exceed meta.j_max.
  double plateau = 1000.0;
  /// Regular evaluation points per curve (log-spaced env steps).
  std::size_t eval_points = 2000;
  /// Threshold count m used by gen_efficiency_grid.
  std::size_t thresholds = 20;

  /// Throws ValidationError when an invariant is violated.
  void validate() const;
};

/// The truth law at threshold J (J in [meta.j_min, meta.j_max]).
DataFit truth_for_threshold(const SynthSpec& spec, double threshold);

/// One point per (σ, N, threshold, replicate) with replicate = 0..seeds_per_cell-1:
/// D = truth_J(σ, N) · exp(ε), ε ~ N(0, noise_sigma²).
std::vector<EfficiencyPoint> gen_efficiency_grid(const SynthSpec& spec);

/// Exact (unquantized) env steps a generated run needs to reach `threshold`.
/// Indices address sigma_grid, n_grid and b_grid (b_grid may be empty, then batch_index is ignored).
double intended_data(const SynthSpec& spec, std::size_t sigma_index, std::size_t n_index, std::size_t batch_index,
                     std::size_t seed_index, double threshold);

/// Learning curves for every (σ, N, B, seed), returns in raw units (scaled by optimal_return / 1000).
///
/// With meta.reset_period set, each reset (at env step round(k·period/σ)) adds three extra
/// evaluations between the marker and the next regular evaluation, at 70%, 80% and 90% of
/// the current return.
RunSet gen_learning_curves(const SynthSpec& spec);

/// Regular (dip-free) evaluation steps shared by every generated curve.
std::vector<std::int64_t> synth_eval_steps(const SynthSpec& spec);

}  // namespace rlscale
