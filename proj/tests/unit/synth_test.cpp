#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "rlscale/bootstrap.hpp"
#include "rlscale/error.hpp"
#include "rlscale/preprocess.hpp"
#include "rlscale/scaling_laws.hpp"
#include "rlscale/synth.hpp"

using namespace rlscale;

namespace {

SynthSpec crawl_spec() {
  SynthSpec s;
  s.meta.task_id = "h1-crawl";
  s.meta.optimal_return = 700.0;
  s.meta.j_min = 450.0;
  s.meta.j_max = 780.0;
  s.meta.delta = 2e12;
  s.truth_data = DataFit::from_factored({5.11e4, 2.59e5, 0.15, 1.70e7, 0.75}, 780.0);
  s.sigma_grid = {1, 2, 4, 8};
  s.n_grid = {1e6, 4e6, 1.6e7, 6.4e7};
  s.plateau = 900.0;
  return s;
}

SynthSpec curve_spec() {
  auto s = crawl_spec();
  s.truth_data = DataFit::from_factored({1e5, 2.0, 0.8, 2e6, 0.6}, 780.0);
  s.sigma_grid = {0.5, 2.0};
  s.n_grid = {1e6, 1e7};
  s.b_grid = {64, 256};
  s.truth_batch = BatchRuleFit{1680.64, 0.30, 6.01e7, 1.12};
  s.meta.reset_period = 200000;
  s.seeds_per_cell = 2;
  s.noise_sigma = 0.05;
  s.rng_seed = 5;
  s.eval_points = 400;
  s.thresholds = 6;
  return s;
}

std::string serialized(const RunSet& runs) {
  std::ostringstream out;
  write_run_log(out, runs);
  return out.str();
}

}  // namespace

TEST(SynthSpec, Validation) {
  auto s = crawl_spec();
  EXPECT_NO_THROW(s.validate());
  s.sigma_grid.clear();
  EXPECT_THROW(s.validate(), ValidationError);
  s = crawl_spec();
  s.noise_sigma = -1.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = crawl_spec();
  s.plateau = 700.0;
  EXPECT_THROW(s.validate(), ValidationError);
  EXPECT_THROW(gen_learning_curves(crawl_spec()), ValidationError);
}

TEST(TruthForThreshold, TopThresholdIsTheTruth) {
  const auto s = crawl_spec();
  const auto top = truth_for_threshold(s, s.meta.j_max);
  EXPECT_NEAR(top.d_min, s.truth_data.d_min, 1e-9 * s.truth_data.d_min);
  EXPECT_NEAR(top.alpha, s.truth_data.alpha, 0.0);
  // Lower thresholds need proportionally less data everywhere.
  const auto low = truth_for_threshold(s, 500.0);
  const double ratio = eval_data_fit(low, 2.0, 3e6) / eval_data_fit(top, 2.0, 3e6);
  EXPECT_NEAR(eval_data_fit(low, 7.0, 9e7) / eval_data_fit(top, 7.0, 9e7), ratio, 1e-12);
  EXPECT_LT(ratio, 1.0);
}

TEST(GenEfficiencyGrid, NoiselessEqualsTruth) {
  const auto s = crawl_spec();
  const auto pts = gen_efficiency_grid(s);
  EXPECT_EQ(pts.size(), 16U * s.thresholds);
  for (const auto& p : pts) {
    EXPECT_EQ(p.data, eval_data_fit(truth_for_threshold(s, p.threshold), p.sigma, p.model_size));
  }
}

TEST(GenEfficiencyGrid, DeterministicUnderSeed) {
  auto s = crawl_spec();
  s.noise_sigma = 0.1;
  s.seeds_per_cell = 3;
  s.rng_seed = 77;
  const auto a = gen_efficiency_grid(s);
  EXPECT_EQ(gen_efficiency_grid(s), a);
  s.rng_seed = 78;
  EXPECT_NE(gen_efficiency_grid(s), a);
}

TEST(GenEfficiencyGrid, CrawlTruthRefits) {
  const auto s = crawl_spec();
  std::vector<EfficiencyPoint> top;
  for (const auto& p : gen_efficiency_grid(s)) {
    if (p.threshold == s.meta.j_max) top.push_back(p);
  }
  ASSERT_EQ(top.size(), 16U);
  const auto r = fit_data_threshold(top);
  EXPECT_NEAR(r.fit.alpha, 0.15, 1e-3 * 0.15);
  EXPECT_NEAR(r.fit.beta, 0.75, 1e-3 * 0.75);
}

TEST(GenLearningCurves, DeterministicBytes) {
  const auto s = curve_spec();
  const auto a = gen_learning_curves(s);
  EXPECT_EQ(a.curves.size(), 2U * 2U * 2U * 2U);
  EXPECT_EQ(serialized(gen_learning_curves(s)), serialized(a));
}

TEST(GenLearningCurves, PipelineRecoversIntendedData) {
  const auto s = curve_spec();
  const auto runs = gen_learning_curves(s);
  const auto steps = synth_eval_steps(s);
  double step_ratio = 1.0;
  for (std::size_t i = 1; i < steps.size(); ++i) {
    step_ratio = std::max(step_ratio, static_cast<double>(steps[i]) / static_cast<double>(steps[i - 1]));
  }
  const auto grid = threshold_grid(s.meta, s.thresholds);
  std::size_t checked = 0;
  for (const auto& curve : runs.curves) {
    const auto processed = process_curve(curve, s.meta);
    const auto is = static_cast<std::size_t>(
        std::find(s.sigma_grid.begin(), s.sigma_grid.end(), curve.key.utd) - s.sigma_grid.begin());
    const auto in = static_cast<std::size_t>(
        std::find(s.n_grid.begin(), s.n_grid.end(), curve.key.model_size) - s.n_grid.begin());
    const auto ib = static_cast<std::size_t>(
        std::find(s.b_grid.begin(), s.b_grid.end(), curve.key.batch_size) - s.b_grid.begin());
    for (double j : grid.thresholds) {
      const auto measured = data_efficiency(processed, j);
      ASSERT_TRUE(measured.has_value());
      const double intended = intended_data(s, is, in, ib, static_cast<std::size_t>(curve.key.seed), j);
      EXPECT_GE(static_cast<double>(*measured), intended * (1.0 - 1e-9));
      EXPECT_LE(static_cast<double>(*measured), intended * step_ratio + 1.0);
      ++checked;
    }
  }
  EXPECT_EQ(checked, runs.curves.size() * grid.m());
}

TEST(GenLearningCurves, DipRemovalRestoresEnvelope) {
  const auto s = curve_spec();
  const auto runs = gen_learning_curves(s);
  std::size_t with_dips = 0;
  for (const auto& curve : runs.curves) {
    const auto cleaned = remove_reset_dips(normalize_returns(curve, s.meta));
    // The dip-free curve: rows at regular evaluation steps only (a step landing on a reset moves back by one).
    auto regular = synth_eval_steps(s);
    for (auto m : curve.reset_steps) {
      auto it = std::lower_bound(regular.begin(), regular.end(), m);
      if (it != regular.end() && *it == m && it != regular.begin() && *(it - 1) < m - 1) *it = m - 1;
    }
    std::vector<double> clean_values;
    std::vector<double> reference;
    for (const auto& p : cleaned.points) clean_values.push_back(p.value);
    const auto normalized = normalize_returns(curve, s.meta);
    for (const auto& p : normalized.points) {
      if (std::binary_search(regular.begin(), regular.end(), p.env_step)) reference.push_back(p.value);
    }
    if (normalized.points.size() > reference.size()) ++with_dips;
    const auto a = isotonic(clean_values);
    const auto b = isotonic(reference);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  }
  EXPECT_GT(with_dips, 0U);
}

TEST(GenLearningCurves, NoPenaltyTiesToSmallestBatch) {
  auto s = curve_spec();
  s.kappa = 0.0;
  s.noise_sigma = 0.0;
  s.meta.reset_period.reset();
  s.seeds_per_cell = 1;
  const auto runs = gen_learning_curves(s);
  const auto processed = process_runset(runs);
  const auto grid = threshold_grid(s.meta, s.thresholds);
  for (const auto& group : group_by_config(processed)) {
    const auto r = bootstrap_best_batch(group.arms, grid, BootstrapConfig{10, 3});
    EXPECT_EQ(r.b_bootstrap, 64.0);
  }
}

TEST(GenLearningCurves, NoiselessRoundTripRecoversBatchRule) {
  auto s = crawl_spec();
  s.truth_data = DataFit::from_factored({1e5, 2.0, 0.8, 2e6, 0.6}, 780.0);
  s.truth_batch = BatchRuleFit{1680.64, 0.30, 6.01e7, 1.12};
  s.kappa = 50.0;
  s.eval_points = 4000;
  s.thresholds = 4;
  // Integer arms about 2% apart, wide enough to bracket B̃ over the whole grid.
  for (double b = 48.0; b < 2000.0; b *= 1.02) {
    const double rounded = std::round(b);
    if (s.b_grid.empty() || rounded > s.b_grid.back()) s.b_grid.push_back(rounded);
  }
  const auto processed = process_runset(gen_learning_curves(s));
  const auto grid = threshold_grid(s.meta, s.thresholds);
  std::vector<BatchObservation> obs;
  for (const auto& group : group_by_config(processed)) {
    const auto r = bootstrap_best_batch(group.arms, grid, BootstrapConfig{10, 3});
    obs.push_back({group.sigma, group.model_size, r.b_bootstrap});
  }
  ASSERT_EQ(obs.size(), 16U);
  const auto fit = fit_batch_rule(obs).fit;
  EXPECT_NEAR(fit.a_b, s.truth_batch->a_b, 0.02 * s.truth_batch->a_b);
  EXPECT_NEAR(fit.alpha_b, s.truth_batch->alpha_b, 0.02 * s.truth_batch->alpha_b);
  EXPECT_NEAR(fit.b_b, s.truth_batch->b_b, 0.02 * s.truth_batch->b_b);
  EXPECT_NEAR(fit.beta_b, s.truth_batch->beta_b, 0.02 * s.truth_batch->beta_b);
}

TEST(GenLearningCurves, NoiselessRoundTripRecoversDataExponents) {
  auto s = crawl_spec();
  s.meta.j_min = 300.0;
  s.truth_data = DataFit::from_factored({1e5, 2.0, 0.8, 2e6, 0.6}, 780.0);
  s.truth_batch = BatchRuleFit{1680.64, 0.30, 6.01e7, 1.12};
  s.sigma_grid = {0.5, 1, 2, 4};
  s.n_grid = {1e5, 4e5, 1.6e6, 6.4e6};
  s.b_grid = {8, 16, 32, 64, 128, 256, 512, 1024};
  s.meta.reset_period = 100000;
  s.eval_points = 20000;
  s.thresholds = 5;
  const auto grid = threshold_grid(s.meta, s.thresholds);
  const auto table = extract_efficiency_table(gen_learning_curves(s), grid);
  std::vector<EfficiencyPoint> top;
  for (const auto& p : select_best_batch(table.points)) {
    if (p.threshold == s.meta.j_max) top.push_back(p);
  }
  ASSERT_EQ(top.size(), 16U);
  const auto r = fit_data_threshold(top);
  EXPECT_NEAR(r.fit.alpha, 0.8, 1e-3 * 0.8);
  EXPECT_NEAR(r.fit.beta, 0.6, 1e-3 * 0.6);
}
