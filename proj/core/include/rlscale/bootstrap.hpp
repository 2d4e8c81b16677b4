#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlscale/preprocess.hpp"
#include "rlscale/rng.hpp"

namespace rlscale {

struct BootstrapConfig {
  std::size_t replicates = 100;  // K
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Seeds of one (σ, N) configuration, keyed by batch size.
using BatchArms = std::map<std::int64_t, std::vector<ProcessedCurve>>;

struct ConfigGroup {
  double sigma = 0.0;
  double model_size = 0.0;
  BatchArms arms;
};

struct BootstrapBatchResult {
  double sigma = 0.0;
  double model_size = 0.0;
  /// Geometric mean of the per-replicate winners.
  double b_bootstrap = 0.0;
  /// Std (over replicates) of the winning arm's data efficiency at each threshold.
  std::map<double, double> per_threshold_std;
  /// B_k for every replicate that was kept, in replicate order.
  std::vector<double> replicate_choices;
  std::size_t dropped_replicates = 0;
  std::uint64_t rng_seed = 0;
  std::string rng_name = CounterRng::kName;
};

/// Indices of n draws with replacement from [0, n).
std::vector<std::size_t> resample_indices(std::size_t n, CounterRng& rng);

/// n curves drawn with replacement; deterministic given the generator state.
/// Throws ArgumentError on empty input.
std::vector<ProcessedCurve> resample_seeds(std::span<const ProcessedCurve> curves, CounterRng& rng);

/// Bootstrap the best batch size of one (σ, N) configuration.
///
/// Each replicate resamples seeds within every arm, rebuilds the seed-aggregated data
/// efficiency at the last grid threshold (j_max) and picks the arm with the least data
/// (ties go to the smaller batch). Replicates in which no arm reaches j_max are dropped.
/// `stream` selects an independent substream so several configurations can share a seed.
/// Throws EstimationError if every replicate is dropped.
BootstrapBatchResult bootstrap_best_batch(const BatchArms& arms, const ThresholdGrid& grid,
                                          const BootstrapConfig& cfg, std::uint64_t stream = 0);

/// Bootstrap std of one arm's seed-aggregated data efficiency at each threshold.
/// Thresholds at which no replicate yields a value are absent from the result.
std::map<double, double> bootstrap_data_std(std::span<const ProcessedCurve> seeds, const ThresholdGrid& grid,
                                            const BootstrapConfig& cfg, std::uint64_t stream = 0);

/// Group processed curves by (σ, N), then by batch size. Ordered by (σ, N).
std::vector<ConfigGroup> group_by_config(std::span<const ProcessedCurve> curves);

/// Fill data_std for every point of `table` from bootstrap over the matching arm's seeds.
void attach_bootstrap_std(EfficiencyTable& table, std::span<const ProcessedCurve> curves,
                          const ThresholdGrid& grid, const BootstrapConfig& cfg);

/// Lowest candidate threshold at which some configuration has two batch-size arms (both
/// reaching j_max) whose [D - std, D + std] intervals do not overlap.
std::optional<double> suggest_j_min(std::span<const ConfigGroup> groups, double j_max,
                                    std::span<const double> candidates, const BootstrapConfig& cfg);

}  // namespace rlscale
