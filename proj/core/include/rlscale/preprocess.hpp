#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlscale/ingest.hpp"

namespace rlscale {

/// A curve after normalization, reset-dip removal and (optionally) isotonic regression.
struct ProcessedCurve {
  RunKey key;
  std::vector<CurvePoint> points;  // values in normalized return units
  bool monotone = false;
};

/// m thresholds spaced uniformly between j_min and j_max inclusive.
struct ThresholdGrid {
  std::vector<double> thresholds;

  std::size_t m() const noexcept { return thresholds.size(); }
  double front() const { return thresholds.front(); }
  double back() const { return thresholds.back(); }
};

/// Environment steps needed to first reach `threshold`, for one (task, σ, N, B) group.
struct EfficiencyPoint {
  std::string task_id;
  double sigma = 0.0;
  double model_size = 0.0;
  double batch_size = 0.0;
  double threshold = 0.0;
  double data = 0.0;
  std::optional<double> data_std;

  bool operator==(const EfficiencyPoint&) const = default;
};

struct EfficiencyTable {
  std::vector<EfficiencyPoint> points;
  /// Human-readable notes about excluded groups and thresholds.
  std::vector<std::string> warnings;
};

/// Map every return r to 1000·r/optimal_return.
LearningCurve normalize_returns(const LearningCurve& curve, const TaskMeta& meta);

/// Drop post-reset evaluation points while they sit below the running maximum reached
/// before the reset; keep everything again once that level is re-attained.
/// Identity when the curve has no reset markers. Throws UnusableCurveError if nothing is left.
LearningCurve remove_reset_dips(const LearningCurve& curve);

/// L2 isotonic regression (pool adjacent violators). Input must be nonempty.
std::vector<double> isotonic(std::span<const double> values);

/// Throws ArgumentError when m < 2.
ThresholdGrid threshold_grid(const TaskMeta& meta, std::size_t m);

/// Smallest logged env_step whose processed return is ≥ threshold, or nullopt if the
/// curve never gets there. Throws ContractError on a non-monotone curve.
std::optional<std::int64_t> data_efficiency(const ProcessedCurve& curve, double threshold);

/// normalize → remove dips → isotonic.
ProcessedCurve process_curve(const LearningCurve& curve, const TaskMeta& meta);
std::vector<ProcessedCurve> process_runset(const RunSet& runs);

/// Seed aggregation: median of the reached values, or nullopt when at least half of the
/// seeds are censored (never reached the threshold).
std::optional<double> aggregate_seeds(std::span<const std::optional<std::int64_t>> per_seed);

/// Per (σ, N, B) group and threshold, the seed-aggregated data efficiency.
/// data_std is left empty; the bootstrap module fills it.
EfficiencyTable extract_efficiency_table(const RunSet& runs, const ThresholdGrid& grid);

/// Same pipeline on curves that were already processed.
EfficiencyTable extract_efficiency_table(std::span<const ProcessedCurve> curves, const std::string& task_id,
                                         const ThresholdGrid& grid);

/// Highest threshold reached by `coverage` of the (σ, N) groups, each group represented by
/// its run (over batch sizes) with the highest median final processed return.
double suggest_j_max(std::span<const ProcessedCurve> curves, double coverage = 0.8);

}  // namespace rlscale
