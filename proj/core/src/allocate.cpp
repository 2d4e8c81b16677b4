#include "rlscale/allocate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "rlscale/error.hpp"
#include "rlscale/util.hpp"

namespace rlscale {

namespace {

constexpr std::size_t kScanPoints = 2001;
constexpr double kGoldenWidth = 1e-10;  // relative width in σ, i.e. absolute in log σ
constexpr double kInvPhi = 0.6180339887498949;

void check_fit(const DataFit& fit) {
  for (double v : {fit.d_min, fit.a, fit.alpha, fit.b, fit.beta}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError("data-efficiency coefficients must be positive");
  }
}

/// log of the relation constant: N = K σ^(α/β).
double log_relation_constant(const DataFit& f) {
  return (std::log(f.beta) + f.beta * std::log(f.b) - std::log(f.alpha) - f.alpha * std::log(f.a)) / f.beta;
}

struct Interval {
  double lo;
  double hi;
};

/// log σ range where both σ and the relation's N lie inside the box.
Interval relation_range(const DataFit& f, const SearchBox& box) {
  const double lk = log_relation_constant(f);
  const double ratio = f.beta / f.alpha;
  Interval r{std::max(std::log(box.sigma_lo), (std::log(box.n_lo) - lk) * ratio),
             std::min(std::log(box.sigma_hi), (std::log(box.n_hi) - lk) * ratio)};
  if (!(r.lo < r.hi)) {
    throw InfeasibleError("the optimality relation does not cross the search box", std::numeric_limits<double>::quiet_NaN());
  }
  return r;
}

AllocationSolution solution_at(const DataFit& f, const ComputeModel& model, double sigma, double n) {
  AllocationSolution s;
  s.sigma_star = sigma;
  s.n_star = n;
  s.data = eval_data_fit(f, sigma, n);
  s.compute = compute_flops(model, sigma, n, s.data);
  return s;
}

AllocationSolution on_relation(const DataFit& f, const ComputeModel& model, double log_sigma) {
  const double sigma = std::exp(log_sigma);
  return solution_at(f, model, sigma, relation_n(f, sigma));
}

/// Minimizer of fn over [lo, hi]: coarse scan, then golden section around the best grid point.
double scan_golden(const std::function<double(double)>& fn, Interval range) {
  const double step = (range.hi - range.lo) / static_cast<double>(kScanPoints - 1);
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kScanPoints; ++i) {
    const double v = fn(range.lo + step * static_cast<double>(i));
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  double a = range.lo + step * static_cast<double>(best == 0 ? 0 : best - 1);
  double b = range.lo + step * static_cast<double>(std::min(best + 1, kScanPoints - 1));
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = fn(x1);
  double f2 = fn(x2);
  while (b - a > kGoldenWidth) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = fn(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = fn(x2);
    }
  }
  // Keep the best of the bracket midpoint and the scan winner (edges of the range).
  const double mid = 0.5 * (a + b);
  const double edge = range.lo + step * static_cast<double>(best);
  return fn(mid) <= fn(edge) ? mid : edge;
}

/// Largest u in [lo, hi] with h(u) ≤ target, or nullopt when no scanned point is feasible.
std::optional<double> largest_feasible(const std::function<double(double)>& h, double target, Interval range) {
  const double step = (range.hi - range.lo) / static_cast<double>(kScanPoints - 1);
  for (std::size_t i = kScanPoints; i-- > 0;) {
    const double u = range.lo + step * static_cast<double>(i);
    if (!(h(u) <= target)) continue;
    if (i == kScanPoints - 1) return range.hi;
    double lo = u;
    double hi = u + step;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (h(mid) <= target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return lo;
  }
  return std::nullopt;
}

}  // namespace

void ComputeModel::validate() const {
  if (!(k > 0.0) || !std::isfinite(k)) throw ArgumentError("compute model needs k > 0");
}

double compute_flops(const ComputeModel& model, double sigma, double n, double data) {
  model.validate();
  if (!(sigma > 0.0) || !(n > 0.0) || !(data > 0.0)) throw ArgumentError("compute_flops needs positive inputs");
  return model.k * sigma * n * data;
}

double delta_from_timing(double flops_per_grad_step, double grad_steps_per_second, double env_steps_per_second) {
  if (!(flops_per_grad_step > 0.0) || !(grad_steps_per_second > 0.0) || !(env_steps_per_second > 0.0)) {
    throw ArgumentError("timing inputs must be positive");
  }
  return flops_per_grad_step * grad_steps_per_second / env_steps_per_second;
}

void SearchBox::validate() const {
  if (!(sigma_lo > 0.0 && sigma_lo < sigma_hi && n_lo > 0.0 && n_lo < n_hi)) {
    throw ArgumentError("search box needs 0 < sigma_lo < sigma_hi and 0 < n_lo < n_hi");
  }
}

double relation_n(const DataFit& fit, double sigma) {
  check_fit(fit);
  return std::exp(log_relation_constant(fit) + fit.alpha / fit.beta * std::log(sigma));
}

AllocationSolution optimal_for_data_budget(const DataFit& fit, double d0, const ComputeModel& model) {
  check_fit(fit);
  model.validate();
  if (!(d0 > fit.d_min)) {
    throw InfeasibleError("data budget " + format_double(d0) + " does not exceed d_min = " + format_double(fit.d_min),
                          fit.d_min);
  }
  const double slack = d0 - fit.d_min;
  AllocationSolution sol;
  if (fit.alpha >= 1.0 && fit.beta >= 1.0) {
    // Minimize log σ + log N(σ) on the constraint surface N(σ) = b (slack - (a/σ)^α)^(-1/β).
    const double u_min = std::log(fit.a) - std::log(slack) / fit.alpha;
    auto objective = [&](double u) {
      const double rest = slack - std::pow(fit.a * std::exp(-u), fit.alpha);
      if (!(rest > 0.0)) return std::numeric_limits<double>::infinity();
      return u - std::log(rest) / fit.beta;
    };
    const double u = scan_golden(objective, {u_min + 1e-12, u_min + 60.0});
    const double sigma = std::exp(u);
    const double n = fit.b * std::pow(slack - std::pow(fit.a / sigma, fit.alpha), -1.0 / fit.beta);
    sol = solution_at(fit, model, sigma, n);
    sol.certified = false;
    sol.warnings.push_back("alpha >= 1 and beta >= 1: closed form not guaranteed, used a numerical search");
  } else {
    const double sigma = fit.a * std::pow((1.0 + fit.alpha / fit.beta) / slack, 1.0 / fit.alpha);
    const double n = fit.b * std::pow((1.0 + fit.beta / fit.alpha) / slack, 1.0 / fit.beta);
    sol = solution_at(fit, model, sigma, n);
  }
  sol.active_constraint = true;
  return sol;
}

double minimal_compute(const DataFit& fit, const ComputeModel& model, const SearchBox& box) {
  check_fit(fit);
  model.validate();
  box.validate();
  const Interval range = relation_range(fit, box);
  auto log_c = [&](double u) { return std::log(on_relation(fit, model, u).compute); };
  return on_relation(fit, model, scan_golden(log_c, range)).compute;
}

AllocationSolution optimal_for_compute_budget(const DataFit& fit, const ComputeModel& model, double c0,
                                              const SearchBox& box) {
  check_fit(fit);
  model.validate();
  box.validate();
  if (!(c0 > 0.0)) throw ArgumentError("compute budget must be positive");
  const Interval range = relation_range(fit, box);
  auto log_c = [&](double u) { return std::log(on_relation(fit, model, u).compute); };
  const double u_min = scan_golden(log_c, range);
  const double c_min = on_relation(fit, model, u_min).compute;
  if (c0 < c_min * (1.0 - 1e-12)) {
    throw InfeasibleError("compute budget " + format_double(c0) + " is below the minimal compute " +
                              format_double(c_min) + " in the search box",
                          c_min);
  }
  // Data falls along the relation as σ grows, so the answer is the largest feasible σ.
  const auto u = largest_feasible(log_c, std::log(c0), {u_min, range.hi});
  // No feasible point past u_min only when c0 equals C_min up to rounding.
  AllocationSolution sol = on_relation(fit, model, u.value_or(u_min));
  sol.budget = c0;
  sol.active_constraint = true;
  if (u && *u >= range.hi) {
    sol.active_constraint = false;
    sol.certified = false;
    sol.warnings.push_back("compute budget exceeds what the search box can spend; result sits on the box edge");
  }
  return sol;
}

AllocationSolution minimize_budget(const DataFit& fit, const ComputeModel& model, double delta,
                                   const SearchBox& box) {
  check_fit(fit);
  model.validate();
  box.validate();
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ArgumentError("delta must be positive");
  const Interval range = relation_range(fit, box);
  auto log_f = [&](double u) {
    const auto s = on_relation(fit, model, u);
    return std::log(s.compute + delta * s.data);
  };
  const double u = scan_golden(log_f, range);
  AllocationSolution sol = on_relation(fit, model, u);
  sol.budget = sol.compute + delta * sol.data;
  if (!(fit.alpha < 1.0 && fit.beta < 1.0)) {
    sol.certified = false;
    sol.warnings.push_back("alpha or beta >= 1: uniqueness of the budget optimum is not guaranteed");
  }
  if (u - range.lo < 1e-6 || range.hi - u < 1e-6) {
    sol.certified = false;
    sol.warnings.push_back("budget optimum lies on the search-box boundary");
  }
  return sol;
}

std::vector<ContourPoint> iso_data_contour(const DataFit& fit, double d_target, double sigma_lo, double sigma_hi,
                                           std::size_t count) {
  check_fit(fit);
  if (!(d_target > fit.d_min)) {
    throw InfeasibleError("target " + format_double(d_target) + " does not exceed d_min = " + format_double(fit.d_min),
                          fit.d_min);
  }
  if (count < 2) throw ArgumentError("contour needs at least 2 sample points");
  std::vector<ContourPoint> out;
  for (double sigma : log_space(sigma_lo, sigma_hi, count)) {
    const double rest = d_target - fit.d_min - std::pow(fit.a / sigma, fit.alpha);
    if (!(rest > 0.0)) continue;
    out.push_back({sigma, fit.b * std::pow(rest, -1.0 / fit.beta)});
  }
  if (out.empty()) throw ArgumentError("iso-data contour is empty over the requested UTD range");
  return out;
}

Frontier budget_frontier(std::span<const DataFitResult> fits, const TaskMeta& meta, const ComputeModel& model,
                         const SearchBox& box) {
  if (fits.size() < 2) throw ArgumentError("budget frontier needs fits for at least 2 thresholds");
  Frontier frontier;
  for (const auto& r : fits) {
    const std::string where = "J=" + format_double(r.fit.threshold);
    if (r.unstable) {
      frontier.warnings.push_back(where + ": fit flagged unstable, frontier point skipped");
      continue;
    }
    try {
      FrontierPoint p;
      p.threshold = r.fit.threshold;
      p.solution = minimize_budget(r.fit, model, meta.delta, box);
      p.budget = *p.solution.budget;
      for (const auto& w : p.solution.warnings) frontier.warnings.push_back(where + ": " + w);
      frontier.points.push_back(std::move(p));
    } catch (const NumericalError& e) {
      frontier.warnings.push_back(where + ": " + e.what());
    }
  }
  std::sort(frontier.points.begin(), frontier.points.end(),
            [](const FrontierPoint& a, const FrontierPoint& b) { return a.threshold < b.threshold; });
  return frontier;
}

FrontierLaws fit_frontier_laws(std::span<const FrontierPoint> frontier, std::size_t n_extrapolate) {
  if (n_extrapolate >= frontier.size() || frontier.size() - n_extrapolate < 2) {
    throw ArgumentError("frontier laws need at least 2 points left after holding out " + std::to_string(n_extrapolate));
  }
  std::vector<FrontierPoint> sorted(frontier.begin(), frontier.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const FrontierPoint& a, const FrontierPoint& b) { return a.budget < b.budget; });
  const std::size_t n_fit = sorted.size() - n_extrapolate;

  std::vector<double> budgets;
  for (const auto& p : sorted) budgets.push_back(p.budget);

  auto summarize = [&](auto&& pick) {
    std::vector<double> y;
    for (const auto& p : sorted) y.push_back(pick(p.solution));
    const auto law = fit_power_law(std::span(budgets).first(n_fit), std::span(y).first(n_fit));
    auto r2 = [&](std::size_t from, std::size_t to) {
      std::vector<double> ly;
      for (std::size_t i = from; i < to; ++i) ly.push_back(std::log(y[i]));
      const double m = mean(ly);
      double ss_res = 0.0, ss_tot = 0.0;
      for (std::size_t i = from; i < to; ++i) {
        const double r = std::log(y[i]) - std::log(law(budgets[i]));
        ss_res += r * r;
        ss_tot += (std::log(y[i]) - m) * (std::log(y[i]) - m);
      }
      if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
      return 1.0 - ss_res / ss_tot;
    };
    PowerLawSummary s;
    s.scale = law.a;
    s.exponent = law.alpha;
    s.r_squared = r2(0, sorted.size());
    if (n_extrapolate >= 2) s.r_squared_held_out = r2(n_fit, sorted.size());
    return s;
  };

  FrontierLaws laws;
  laws.compute_law = summarize([](const AllocationSolution& s) { return s.compute; });
  laws.data_law = summarize([](const AllocationSolution& s) { return s.data; });
  laws.sigma_law = summarize([](const AllocationSolution& s) { return s.sigma_star; });
  laws.n_law = summarize([](const AllocationSolution& s) { return s.n_star; });
  laws.n_fit = n_fit;
  laws.n_extrapolate = n_extrapolate;
  return laws;
}

std::string Strategy::name() const {
  switch (kind) {
    case Kind::compute_optimal:
      return "compute_optimal";
    case Kind::fixed_batch_compute_optimal:
      return "compute_optimal+fixed_batch";
    case Kind::sigma_only:
      return "sigma_only(N=" + format_double(fixed) + ")";
    case Kind::n_only:
      return "n_only(sigma=" + format_double(fixed) + ")";
  }
  return "unknown";
}

ComparisonTable compare_allocations(const DataFit& fit, const ComputeModel& model, std::span<const double> budgets,
                                    std::span<const Strategy> strategies, const ComparisonOptions& options) {
  if (budgets.empty()) throw ArgumentError("compare_allocations needs at least one budget");
  ComparisonTable table;
  table.budgets.assign(budgets.begin(), budgets.end());
  std::sort(table.budgets.begin(), table.budgets.end());

  std::vector<AllocationSolution> optimal;
  for (double c0 : table.budgets) optimal.push_back(optimal_for_compute_budget(fit, model, c0, options.box));

  for (const auto& strategy : strategies) {
    ComparisonRow row;
    row.strategy = strategy.name();
    for (std::size_t i = 0; i < table.budgets.size(); ++i) {
      const double c0 = table.budgets[i];
      const auto& opt = optimal[i];
      std::optional<double> data;
      switch (strategy.kind) {
        case Strategy::Kind::compute_optimal:
          data = opt.data;
          break;
        case Strategy::Kind::fixed_batch_compute_optimal: {
          if (!options.batch_rule) throw ArgumentError("fixed-batch strategy needs a batch-size rule");
          const double fixed = eval_batch_rule(*options.batch_rule, optimal.front().sigma_star, optimal.front().n_star);
          const double best = eval_batch_rule(*options.batch_rule, opt.sigma_star, opt.n_star);
          data = opt.data * batch_mismatch_penalty(fixed, best, options.kappa);
          break;
        }
        case Strategy::Kind::sigma_only: {
          const double n = strategy.fixed;
          if (!(n > 0.0)) throw ArgumentError("sigma_only needs a positive fixed model size");
          auto log_c = [&](double u) {
            const double s = std::exp(u);
            return std::log(compute_flops(model, s, n, eval_data_fit(fit, s, n)));
          };
          if (auto u = largest_feasible(log_c, std::log(c0), {std::log(options.box.sigma_lo), std::log(options.box.sigma_hi)})) {
            data = eval_data_fit(fit, std::exp(*u), n);
          }
          break;
        }
        case Strategy::Kind::n_only: {
          const double sigma = strategy.fixed;
          if (!(sigma > 0.0)) throw ArgumentError("n_only needs a positive fixed UTD");
          auto log_c = [&](double u) {
            const double n = std::exp(u);
            return std::log(compute_flops(model, sigma, n, eval_data_fit(fit, sigma, n)));
          };
          if (auto u = largest_feasible(log_c, std::log(c0), {std::log(options.box.n_lo), std::log(options.box.n_hi)})) {
            data = eval_data_fit(fit, sigma, std::exp(*u));
          }
          break;
        }
      }
      if (data) {
        row.ratios.push_back(*data / opt.data);
      } else {
        row.ratios.push_back(std::nullopt);
      }
    }
    std::vector<double> feasible;
    for (const auto& r : row.ratios) {
      if (r) feasible.push_back(*r);
    }
    if (!feasible.empty()) {
      row.average = mean(feasible);
      row.median = median(feasible);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace rlscale
