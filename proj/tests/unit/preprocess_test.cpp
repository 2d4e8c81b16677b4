#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles/oracles.hpp"
#include "rlscale/error.hpp"
#include "rlscale/preprocess.hpp"
#include "rlscale/rng.hpp"

using namespace rlscale;

namespace {

TaskMeta meta(double optimal = 1000.0, double j_min = 0.0, double j_max = 1000.0) {
  TaskMeta m;
  m.task_id = "t";
  m.optimal_return = optimal;
  m.j_min = j_min;
  m.j_max = j_max;
  m.delta = 1.0;
  return m;
}

LearningCurve curve(std::vector<CurvePoint> points, std::vector<std::int64_t> resets = {}, std::int64_t seed = 0) {
  LearningCurve c;
  c.key = RunKey{"t", 1.0, 1e6, 64, seed};
  c.points = std::move(points);
  c.reset_steps = std::move(resets);
  return c;
}

ProcessedCurve monotone(std::vector<CurvePoint> points, std::int64_t seed = 0) {
  ProcessedCurve c;
  c.key = RunKey{"t", 1.0, 1e6, 64, seed};
  c.points = std::move(points);
  c.monotone = true;
  return c;
}

}  // namespace

TEST(NormalizeReturns, Rescale) {
  const auto out = normalize_returns(curve({{0, 0.0}, {1, 700.0}, {2, 350.0}}), meta(700.0));
  EXPECT_DOUBLE_EQ(out.points[0].value, 0.0);
  EXPECT_DOUBLE_EQ(out.points[1].value, 1000.0);
  EXPECT_DOUBLE_EQ(out.points[2].value, 500.0);
}

TEST(RemoveResetDips, HandTrace) {
  const auto out = remove_reset_dips(curve({{0, 100}, {10, 200}, {20, 50}, {30, 210}}, {20}));
  ASSERT_EQ(out.points.size(), 3U);
  EXPECT_EQ(out.points[0], (CurvePoint{0, 100}));
  EXPECT_EQ(out.points[1], (CurvePoint{10, 200}));
  EXPECT_EQ(out.points[2], (CurvePoint{30, 210}));
}

TEST(RemoveResetDips, NoMarkersIsIdentity) {
  const auto c = curve({{0, 100}, {10, 50}, {20, 70}});
  EXPECT_EQ(remove_reset_dips(c), c);
}

TEST(RemoveResetDips, NeverRecovers) {
  const auto out = remove_reset_dips(curve({{0, 100}, {10, 200}, {20, 50}, {30, 150}}, {20}));
  ASSERT_EQ(out.points.size(), 2U);
  EXPECT_EQ(out.points.back().env_step, 10);
}

TEST(RemoveResetDips, KeepsSubsetOfOriginalPairs) {
  CounterRng rng(stream_key(5));
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CurvePoint> pts;
    std::vector<std::int64_t> resets;
    for (std::int64_t s = 0; s < 30; ++s) {
      pts.push_back({s * 10, 1000.0 * rng.uniform()});
      if (s > 0 && rng.uniform() < 0.1) resets.push_back(s * 10 - 5);
    }
    const auto c = curve(pts, resets);
    const auto out = remove_reset_dips(c);
    EXPECT_LE(out.points.size(), c.points.size());
    std::size_t j = 0;
    for (const auto& p : out.points) {
      while (j < c.points.size() && !(c.points[j] == p)) ++j;
      ASSERT_LT(j, c.points.size()) << "retained pair not in the original curve";
    }
  }
}

TEST(Isotonic, Examples) {
  EXPECT_EQ(isotonic(std::vector<double>{1, 2, 3}), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(isotonic(std::vector<double>{3, 1, 2}), (std::vector<double>{2, 2, 2}));
  EXPECT_EQ(isotonic(std::vector<double>{5}), (std::vector<double>{5}));
  EXPECT_THROW(isotonic(std::vector<double>{}), ArgumentError);
}

TEST(Isotonic, MatchesBruteForceAndIsIdempotent) {
  CounterRng rng(stream_key(17));
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.index(10);
    std::vector<double> y(n);
    for (auto& v : y) v = std::floor(rng.uniform() * 20.0) - 10.0 + rng.uniform();
    const auto fitted = isotonic(y);
    const auto expected = oracle::isotonic_bruteforce(y);
    ASSERT_EQ(fitted.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(fitted[i], expected[i], 1e-9);
      if (i > 0) EXPECT_LE(fitted[i - 1], fitted[i]);
    }
    EXPECT_EQ(isotonic(fitted), fitted);
  }
}

TEST(ThresholdGrid, Spacing) {
  const auto grid = threshold_grid(meta(700, 450, 780), 20);
  ASSERT_EQ(grid.m(), 20U);
  EXPECT_DOUBLE_EQ(grid.front(), 450.0);
  EXPECT_DOUBLE_EQ(grid.back(), 780.0);
  EXPECT_NEAR(grid.thresholds[1] - grid.thresholds[0], 330.0 / 19.0, 1e-12);
  EXPECT_EQ(threshold_grid(meta(), 5).thresholds, (std::vector<double>{0, 250, 500, 750, 1000}));
  EXPECT_EQ(threshold_grid(meta(1000, 10, 20), 2).thresholds, (std::vector<double>{10, 20}));
  EXPECT_THROW(threshold_grid(meta(), 1), ArgumentError);
}

TEST(DataEfficiency, FirstCrossingWithoutInterpolation) {
  const auto c = monotone({{1000, 400}, {2000, 600}});
  EXPECT_EQ(data_efficiency(c, 500), 2000);
  EXPECT_EQ(data_efficiency(c, 400), 1000);
  EXPECT_EQ(data_efficiency(c, 700), std::nullopt);
  auto raw = c;
  raw.monotone = false;
  EXPECT_THROW(data_efficiency(raw, 500), ContractError);
}

TEST(DataEfficiency, NondecreasingInThreshold) {
  CounterRng rng(stream_key(3));
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CurvePoint> pts;
    double v = 0.0;
    for (std::int64_t s = 1; s <= 40; ++s) {
      v += 30.0 * rng.uniform();
      pts.push_back({s * 100, v});
    }
    const auto c = monotone(pts);
    std::optional<std::int64_t> prev = 0;
    for (double j = 0.0; j < 1200.0; j += 17.0) {
      const auto d = data_efficiency(c, j);
      if (prev && d) EXPECT_GE(*d, *prev);
      if (!prev) EXPECT_FALSE(d.has_value());
      prev = d;
    }
  }
}

TEST(AggregateSeeds, MedianAndCensoring) {
  using O = std::optional<std::int64_t>;
  EXPECT_EQ(aggregate_seeds(std::vector<O>{1000, 2000}), 1500.0);
  EXPECT_EQ(aggregate_seeds(std::vector<O>{1000, std::nullopt}), std::nullopt);
  EXPECT_EQ(aggregate_seeds(std::vector<O>{1000, 3000, std::nullopt}), 2000.0);
  EXPECT_EQ(aggregate_seeds(std::vector<O>{}), std::nullopt);
}

TEST(ExtractEfficiency, SingleSeedSingleThreshold) {
  const std::vector<ProcessedCurve> curves{monotone({{100, 10}, {200, 600}})};
  ThresholdGrid grid{{500.0}};
  const auto table = extract_efficiency_table(curves, "t", grid);
  ASSERT_EQ(table.points.size(), 1U);
  EXPECT_EQ(table.points[0].data, 200.0);
  EXPECT_FALSE(table.points[0].data_std.has_value());
}

TEST(ExtractEfficiency, TwoSeedsMedian) {
  const std::vector<ProcessedCurve> curves{monotone({{1000, 600}}, 0), monotone({{1000, 0}, {2000, 600}}, 1)};
  ThresholdGrid grid{{500.0}};
  const auto table = extract_efficiency_table(curves, "t", grid);
  ASSERT_EQ(table.points.size(), 1U);
  EXPECT_EQ(table.points[0].data, 1500.0);
}

TEST(ExtractEfficiency, FullyCensoredGroupWarns) {
  const std::vector<ProcessedCurve> curves{monotone({{1000, 10}, {2000, 20}})};
  const auto table = extract_efficiency_table(curves, "t", threshold_grid(meta(1000, 100, 500), 3));
  EXPECT_TRUE(table.points.empty());
  EXPECT_EQ(table.warnings.size(), 1U);
}

TEST(ProcessCurve, PipelineOrder) {
  const auto m = meta(500.0);
  const auto p = process_curve(curve({{0, 50}, {10, 100}, {20, 25}, {30, 90}, {40, 120}}, {20}), m);
  ASSERT_TRUE(p.monotone);
  // Dip at 20 and the not-yet-recovered 30 go; the rest is already monotone after doubling.
  ASSERT_EQ(p.points.size(), 3U);
  EXPECT_DOUBLE_EQ(p.points.back().value, 240.0);
}

TEST(SuggestJMax, CoverageQuantile) {
  std::vector<ProcessedCurve> curves;
  for (int i = 0; i < 5; ++i) {
    auto c = monotone({{100, 100.0 * (i + 1)}});
    c.key.model_size = 1e6 * (i + 1);
    curves.push_back(c);
  }
  EXPECT_DOUBLE_EQ(suggest_j_max(curves, 0.8), 200.0);
  EXPECT_DOUBLE_EQ(suggest_j_max(curves, 1.0), 100.0);
}
