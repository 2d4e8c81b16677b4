#include "rlscale/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "rlscale/error.hpp"
#include "rlscale/util.hpp"

namespace rlscale {

namespace {

// First-crossing env steps of every seed at every threshold: crossings[seed][j].
using CrossingTable = std::vector<std::vector<std::optional<std::int64_t>>>;

CrossingTable crossings_for(std::span<const ProcessedCurve> seeds, std::span<const double> thresholds) {
  CrossingTable table;
  table.reserve(seeds.size());
  for (const auto& c : seeds) {
    std::vector<std::optional<std::int64_t>> row;
    row.reserve(thresholds.size());
    for (double j : thresholds) row.push_back(data_efficiency(c, j));
    table.push_back(std::move(row));
  }
  return table;
}

std::optional<double> aggregate_resample(const CrossingTable& table, std::span<const std::size_t> picks,
                                         std::size_t threshold_index) {
  std::vector<std::optional<std::int64_t>> per_seed;
  per_seed.reserve(picks.size());
  for (std::size_t i : picks) per_seed.push_back(table[i][threshold_index]);
  return aggregate_seeds(per_seed);
}

}  // namespace

void BootstrapConfig::validate() const {
  if (replicates < 1) throw ArgumentError("bootstrap needs at least one replicate");
}

std::vector<std::size_t> resample_indices(std::size_t n, CounterRng& rng) {
  std::vector<std::size_t> picks(n);
  for (auto& p : picks) p = rng.index(n);
  return picks;
}

std::vector<ProcessedCurve> resample_seeds(std::span<const ProcessedCurve> curves, CounterRng& rng) {
  if (curves.empty()) throw ArgumentError("cannot resample an empty set of seeds");
  std::vector<ProcessedCurve> out;
  out.reserve(curves.size());
  for (std::size_t i : resample_indices(curves.size(), rng)) out.push_back(curves[i]);
  return out;
}

BootstrapBatchResult bootstrap_best_batch(const BatchArms& arms, const ThresholdGrid& grid,
                                          const BootstrapConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  if (arms.empty()) throw ArgumentError("bootstrap_best_batch needs at least one batch-size arm");
  if (grid.m() == 0) throw ArgumentError("bootstrap_best_batch needs a nonempty threshold grid");

  BootstrapBatchResult result;
  result.rng_seed = cfg.rng_seed;
  const auto& first = arms.begin()->second;
  if (first.empty()) throw ArgumentError("batch-size arm without seeds");
  result.sigma = first.front().key.utd;
  result.model_size = first.front().key.model_size;

  std::vector<std::int64_t> batch_sizes;
  std::vector<CrossingTable> tables;
  for (const auto& [b, seeds] : arms) {
    if (seeds.empty()) throw ArgumentError("batch-size arm " + std::to_string(b) + " has no seeds");
    batch_sizes.push_back(b);
    tables.push_back(crossings_for(seeds, grid.thresholds));
  }
  const std::size_t top = grid.m() - 1;

  std::vector<std::vector<double>> winner_data(grid.m());
  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    CounterRng rng(stream_key(cfg.rng_seed, stream, r));
    std::optional<std::size_t> best;
    double best_data = 0.0;
    std::vector<std::vector<std::size_t>> picks(tables.size());
    for (std::size_t a = 0; a < tables.size(); ++a) {
      picks[a] = resample_indices(tables[a].size(), rng);
      const auto d = aggregate_resample(tables[a], picks[a], top);
      if (d && (!best || *d < best_data)) {
        best = a;
        best_data = *d;
      }
    }
    if (!best) {
      ++result.dropped_replicates;
      continue;
    }
    result.replicate_choices.push_back(static_cast<double>(batch_sizes[*best]));
    for (std::size_t j = 0; j < grid.m(); ++j) {
      if (const auto d = aggregate_resample(tables[*best], picks[*best], j)) winner_data[j].push_back(*d);
    }
  }
  if (result.replicate_choices.empty()) {
    throw EstimationError("no bootstrap replicate had an arm reaching j_max (" + format_double(grid.back()) +
                          ") at utd " + format_double(result.sigma) + ", model_size " +
                          format_double(result.model_size));
  }
  result.b_bootstrap = log_space_mean(result.replicate_choices);
  for (std::size_t j = 0; j < grid.m(); ++j) {
    if (!winner_data[j].empty()) result.per_threshold_std[grid.thresholds[j]] = stddev(winner_data[j]);
  }
  return result;
}

std::map<double, double> bootstrap_data_std(std::span<const ProcessedCurve> seeds, const ThresholdGrid& grid,
                                            const BootstrapConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  if (seeds.empty()) throw ArgumentError("bootstrap_data_std needs at least one seed");
  const auto table = crossings_for(seeds, grid.thresholds);
  std::vector<std::vector<double>> samples(grid.m());
  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    CounterRng rng(stream_key(cfg.rng_seed, stream, r));
    const auto picks = resample_indices(seeds.size(), rng);
    for (std::size_t j = 0; j < grid.m(); ++j) {
      if (const auto d = aggregate_resample(table, picks, j)) samples[j].push_back(*d);
    }
  }
  std::map<double, double> out;
  for (std::size_t j = 0; j < grid.m(); ++j) {
    if (!samples[j].empty()) out[grid.thresholds[j]] = stddev(samples[j]);
  }
  return out;
}

std::vector<ConfigGroup> group_by_config(std::span<const ProcessedCurve> curves) {
  std::map<std::pair<double, double>, BatchArms> grouped;
  for (const auto& c : curves) grouped[{c.key.utd, c.key.model_size}][c.key.batch_size].push_back(c);
  std::vector<ConfigGroup> out;
  out.reserve(grouped.size());
  for (auto& [k, arms] : grouped) out.push_back({k.first, k.second, std::move(arms)});
  return out;
}

void attach_bootstrap_std(EfficiencyTable& table, std::span<const ProcessedCurve> curves,
                          const ThresholdGrid& grid, const BootstrapConfig& cfg) {
  using ArmKey = std::tuple<double, double, std::int64_t>;
  std::map<ArmKey, std::vector<ProcessedCurve>> arms;
  for (const auto& c : curves) arms[{c.key.utd, c.key.model_size, c.key.batch_size}].push_back(c);

  std::map<ArmKey, std::map<double, double>> stds;
  std::uint64_t stream = 0;
  for (const auto& [key, seeds] : arms) stds[key] = bootstrap_data_std(seeds, grid, cfg, stream++);

  for (auto& p : table.points) {
    const ArmKey key{p.sigma, p.model_size, static_cast<std::int64_t>(std::llround(p.batch_size))};
    const auto arm = stds.find(key);
    if (arm == stds.end()) continue;
    const auto s = arm->second.find(p.threshold);
    if (s != arm->second.end()) p.data_std = s->second;
  }
}

std::optional<double> suggest_j_min(std::span<const ConfigGroup> groups, double j_max,
                                    std::span<const double> candidates, const BootstrapConfig& cfg) {
  std::vector<double> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::remove_if(sorted.begin(), sorted.end(), [&](double j) { return j > j_max; }), sorted.end());
  if (sorted.empty()) return std::nullopt;
  sorted.push_back(j_max);
  ThresholdGrid grid{sorted};

  // (mean D, std) per arm and candidate, for arms that reach j_max.
  struct Interval {
    double lo, hi;
  };
  std::vector<std::vector<std::vector<std::optional<Interval>>>> per_group;
  std::uint64_t stream = 0;
  for (const auto& g : groups) {
    std::vector<std::vector<std::optional<Interval>>> arms;
    for (const auto& [b, seeds] : g.arms) {
      std::vector<std::optional<std::int64_t>> top;
      for (const auto& c : seeds) top.push_back(data_efficiency(c, j_max));
      const std::uint64_t s = stream++;
      if (!aggregate_seeds(top)) continue;
      const auto stds = bootstrap_data_std(seeds, grid, cfg, s);
      std::vector<std::optional<Interval>> row;
      for (double j : grid.thresholds) {
        std::vector<std::optional<std::int64_t>> per_seed;
        for (const auto& c : seeds) per_seed.push_back(data_efficiency(c, j));
        const auto d = aggregate_seeds(per_seed);
        const auto sd = stds.find(j);
        if (d && sd != stds.end()) {
          row.push_back(Interval{*d - sd->second, *d + sd->second});
        } else {
          row.push_back(std::nullopt);
        }
      }
      arms.push_back(std::move(row));
    }
    per_group.push_back(std::move(arms));
  }

  for (std::size_t j = 0; j + 1 < grid.m(); ++j) {
    for (const auto& arms : per_group) {
      for (std::size_t a = 0; a < arms.size(); ++a) {
        for (std::size_t b = a + 1; b < arms.size(); ++b) {
          const auto& x = arms[a][j];
          const auto& y = arms[b][j];
          if (x && y && (x->hi < y->lo || y->hi < x->lo)) return grid.thresholds[j];
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace rlscale
