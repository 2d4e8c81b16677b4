#include "rlscale/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rlscale/error.hpp"
#include "rlscale/rng.hpp"
#include "rlscale/util.hpp"

namespace rlscale {

namespace {

constexpr std::uint64_t kGridStream = 1;
constexpr std::uint64_t kCurveStream = 2;
constexpr double kDipLevels[] = {0.7, 0.8, 0.9};

double threshold_scale(const SynthSpec& spec, double threshold) {
  const double top = spec.meta.j_max;
  const double a = spec.plateau;
  return threshold * (a - top) / (top * (a - threshold));
}

// Relative to the best arm of the cell, so that arm carries the truth exactly.
double batch_penalty_at(const SynthSpec& spec, double sigma, double n, std::size_t batch_index) {
  if (!spec.truth_batch || spec.b_grid.empty()) return 1.0;
  const double best = eval_batch_rule(*spec.truth_batch, sigma, n);
  double floor = std::numeric_limits<double>::infinity();
  for (auto b : spec.b_grid) floor = std::min(floor, batch_mismatch_penalty(static_cast<double>(b), best, spec.kappa));
  return batch_mismatch_penalty(static_cast<double>(spec.b_grid.at(batch_index)), best, spec.kappa) / floor;
}

/// Env steps to reach j_max for one run; every lower threshold scales from it.
double top_data(const SynthSpec& spec, std::size_t is, std::size_t in, std::size_t ib, std::size_t seed) {
  const double sigma = spec.sigma_grid.at(is);
  const double n = spec.n_grid.at(in);
  double noise = 0.0;
  if (spec.noise_sigma > 0.0) {
    CounterRng rng(stream_key(spec.rng_seed, kCurveStream, is, in, ib, seed));
    noise = spec.noise_sigma * rng.normal();
  }
  return eval_data_fit(spec.truth_data, sigma, n) * batch_penalty_at(spec, sigma, n, ib) * std::exp(noise);
}

std::size_t batch_arms(const SynthSpec& spec) { return spec.b_grid.empty() ? 1 : spec.b_grid.size(); }

}  // namespace

void SynthSpec::validate() const {
  meta.validate();
  if (sigma_grid.empty() || n_grid.empty()) throw ValidationError("synth grids must be nonempty");
  for (double v : sigma_grid) {
    if (!(v > 0.0)) throw ValidationError("synth UTD values must be positive");
  }
  for (double v : n_grid) {
    if (!(v > 0.0)) throw ValidationError("synth model sizes must be positive");
  }
  for (auto b : b_grid) {
    if (b < 1) throw ValidationError("synth batch sizes must be >= 1");
  }
  for (double v : {truth_data.d_min, truth_data.a, truth_data.alpha, truth_data.b, truth_data.beta}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("synth truth coefficients must be positive");
  }
  if (seeds_per_cell < 1) throw ValidationError("seeds_per_cell must be >= 1");
  if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be >= 0");
  if (!(kappa >= 0.0)) throw ValidationError("kappa must be >= 0");
  if (!(plateau > meta.j_max)) throw ValidationError("plateau must exceed j_max");
  if (!(meta.j_min > 0.0)) throw ValidationError("synth needs j_min > 0");
  if (eval_points < 10) throw ValidationError("eval_points must be >= 10");
  if (thresholds < 2) throw ValidationError("synth needs at least 2 thresholds");
}

DataFit truth_for_threshold(const SynthSpec& spec, double threshold) {
  if (!(threshold > 0.0 && threshold < spec.plateau)) {
    throw ArgumentError("threshold must lie in (0, plateau)");
  }
  const double c = threshold_scale(spec, threshold);
  const auto& t = spec.truth_data;
  return DataFit{t.d_min * c, t.a * std::pow(c, 1.0 / t.alpha), t.alpha, t.b * std::pow(c, 1.0 / t.beta), t.beta,
                 threshold};
}

std::vector<EfficiencyPoint> gen_efficiency_grid(const SynthSpec& spec) {
  spec.validate();
  const auto grid = threshold_grid(spec.meta, spec.thresholds);
  std::vector<EfficiencyPoint> out;
  for (std::size_t is = 0; is < spec.sigma_grid.size(); ++is) {
    for (std::size_t in = 0; in < spec.n_grid.size(); ++in) {
      const double sigma = spec.sigma_grid[is];
      const double n = spec.n_grid[in];
      double batch = 1.0;
      if (spec.truth_batch) {
        batch = eval_batch_rule(*spec.truth_batch, sigma, n);
      } else if (!spec.b_grid.empty()) {
        batch = static_cast<double>(spec.b_grid.front());
      }
      for (std::size_t k = 0; k < grid.m(); ++k) {
        const DataFit truth = truth_for_threshold(spec, grid.thresholds[k]);
        const double clean = eval_data_fit(truth, sigma, n);
        for (std::size_t r = 0; r < spec.seeds_per_cell; ++r) {
          double noise = 0.0;
          if (spec.noise_sigma > 0.0) {
            CounterRng rng(stream_key(spec.rng_seed, kGridStream, is, in, k, r));
            noise = spec.noise_sigma * rng.normal();
          }
          out.push_back({spec.meta.task_id, sigma, n, batch, grid.thresholds[k], clean * std::exp(noise), std::nullopt});
        }
      }
    }
  }
  return out;
}

double intended_data(const SynthSpec& spec, std::size_t sigma_index, std::size_t n_index, std::size_t batch_index,
                     std::size_t seed_index, double threshold) {
  return top_data(spec, sigma_index, n_index, spec.b_grid.empty() ? 0 : batch_index, seed_index) *
         threshold_scale(spec, threshold);
}

std::vector<std::int64_t> synth_eval_steps(const SynthSpec& spec) {
  spec.validate();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t is = 0; is < spec.sigma_grid.size(); ++is) {
    for (std::size_t in = 0; in < spec.n_grid.size(); ++in) {
      for (std::size_t ib = 0; ib < batch_arms(spec); ++ib) {
        for (std::size_t s = 0; s < spec.seeds_per_cell; ++s) {
          lo = std::min(lo, intended_data(spec, is, in, ib, s, spec.meta.j_min));
          hi = std::max(hi, intended_data(spec, is, in, ib, s, spec.meta.j_max));
        }
      }
    }
  }
  std::vector<std::int64_t> steps;
  for (double t : log_space(std::max(1.0, 0.25 * lo), std::max(2.0, 4.0 * hi), spec.eval_points)) {
    const auto step = static_cast<std::int64_t>(std::llround(t));
    if (steps.empty() || step > steps.back()) steps.push_back(step);
  }
  return steps;
}

RunSet gen_learning_curves(const SynthSpec& spec) {
  spec.validate();
  if (spec.b_grid.empty()) throw ValidationError("learning-curve synthesis needs a batch-size grid");
  const auto base_steps = synth_eval_steps(spec);
  const double raw_scale = spec.meta.optimal_return / 1000.0;
  const double a = spec.plateau;
  const double top = spec.meta.j_max;

  RunSet set;
  set.meta = spec.meta;
  for (std::size_t is = 0; is < spec.sigma_grid.size(); ++is) {
    const double sigma = spec.sigma_grid[is];
    std::vector<std::int64_t> markers;
    if (spec.meta.reset_period) markers = reset_markers(*spec.meta.reset_period, sigma, base_steps.back());

    // Keep regular evaluations off the reset steps so each reset starts a fresh post-reset window.
    std::vector<std::int64_t> steps = base_steps;
    for (auto m : markers) {
      auto it = std::lower_bound(steps.begin(), steps.end(), m);
      if (it != steps.end() && *it == m && it != steps.begin() && *(it - 1) < m - 1) *it = m - 1;
    }

    for (std::size_t in = 0; in < spec.n_grid.size(); ++in) {
      for (std::size_t ib = 0; ib < spec.b_grid.size(); ++ib) {
        for (std::size_t s = 0; s < spec.seeds_per_cell; ++s) {
          const double t_half = top_data(spec, is, in, ib, s) * (a - top) / top;
          auto value = [&](std::int64_t t) {
            const double x = static_cast<double>(t);
            return a * x / (x + t_half);
          };

          LearningCurve curve;
          curve.key = RunKey{spec.meta.task_id, sigma, spec.n_grid[in], spec.b_grid[ib], static_cast<std::int64_t>(s)};
          curve.reset_steps = markers;
          std::vector<CurvePoint> points;
          points.reserve(steps.size() + 3 * markers.size());
          for (auto t : steps) points.push_back({t, value(t)});
          for (std::size_t i = 0; i < markers.size(); ++i) {
            const auto m = markers[i];
            const auto next = std::upper_bound(steps.begin(), steps.end(), m);
            if (next == steps.end() || m <= steps.front()) continue;
            if (std::binary_search(steps.begin(), steps.end(), m)) continue;
            // Dips of one reset end before the next evaluation or the next reset, whichever comes first.
            std::int64_t end = *next;
            if (i + 1 < markers.size()) end = std::min(end, markers[i + 1]);
            const std::int64_t gap = end - m;
            if (gap < 3) continue;
            const std::int64_t dip_steps[] = {m, m + gap / 3, m + 2 * gap / 3};
            for (std::size_t d = 0; d < 3; ++d) {
              points.push_back({dip_steps[d], kDipLevels[d] * value(dip_steps[d])});
            }
          }
          std::sort(points.begin(), points.end(),
                    [](const CurvePoint& x, const CurvePoint& y) { return x.env_step < y.env_step; });
          for (auto& p : points) p.value *= raw_scale;
          curve.points = std::move(points);
          set.curves.push_back(std::move(curve));
        }
      }
    }
  }
  std::sort(set.curves.begin(), set.curves.end(),
            [](const LearningCurve& x, const LearningCurve& y) { return x.key < y.key; });
  return set;
}

}  // namespace rlscale
