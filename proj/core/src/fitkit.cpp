#include "rlscale/fitkit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "rlscale/error.hpp"
#include "rlscale/rng.hpp"
#include "rlscale/util.hpp"

namespace rlscale {

namespace {

constexpr double kLow = 0.5;
constexpr double kHigh = 2.0;

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

/// log f(x; p) and, when dlog is non-null, ∂ log f / ∂p (dlog must hold parameter_count entries).
double log_model(Family family, std::span<const double> p, std::span<const double> x, std::size_t group,
                 double* dlog) {
  switch (family) {
    case Family::constant:
      if (dlog) dlog[0] = 1.0 / p[0];
      return std::log(p[0]);
    case Family::power_law: {
      const double la = std::log(p[0]);
      const double lx = std::log(x[0]);
      if (dlog) {
        dlog[0] = p[1] / p[0];
        dlog[1] = la - lx;
      }
      return p[1] * (la - lx);
    }
    case Family::batch_rule: {
      const double ls = std::log(x[0]);
      const double ln = std::log(x[1]);
      const double u = std::exp(std::log(p[2]) - p[3] * ln);  // b N^-β
      if (dlog) {
        dlog[0] = 1.0 / p[0];
        dlog[1] = -ls;
        dlog[2] = -(u / p[2]) / (1.0 + u);
        dlog[3] = u * ln / (1.0 + u);
      }
      return std::log(p[0]) - p[1] * ls - std::log1p(u);
    }
    case Family::data_efficiency:
    case Family::shared_data_efficiency: {
      // Index of d, a, α, b, β within p.
      std::size_t id = 0, ia = 1, ial = 2, ib = 3, ibe = 4;
      if (family == Family::shared_data_efficiency) {
        ial = 0;
        ibe = 1;
        id = 2 + 3 * group;
        ia = id + 1;
        ib = id + 2;
      }
      const double ra = std::log(p[ia]) - std::log(x[0]);
      const double rb = std::log(p[ib]) - std::log(x[1]);
      const double t1 = std::exp(p[ial] * ra);
      const double t2 = std::exp(p[ibe] * rb);
      const double f = p[id] + t1 + t2;
      if (dlog) {
        dlog[id] = 1.0 / f;
        dlog[ia] = t1 * p[ial] / p[ia] / f;
        dlog[ial] += t1 * ra / f;
        dlog[ib] = t2 * p[ibe] / p[ib] / f;
        dlog[ibe] += t2 * rb / f;
      }
      return std::log(f);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> softplus_all(std::span<const double> theta) {
  std::vector<double> p(theta.size());
  std::transform(theta.begin(), theta.end(), p.begin(), softplus);
  return p;
}

/// Raw-unit parameters from normalized ones.
std::vector<double> denormalize(Family family, std::span<const double> q, std::span<const NormalizationState> norm,
                                std::span<const double> y_scale) {
  // (a'/x')^α' · ȳ with x' = exp((log x - m)/s) equals (A/x)^(α'/s), log A = m + s log a' + s log ȳ / α'.
  auto scale_of = [](double a_norm, double alpha_norm, const NormalizationState& ns, double ybar) {
    return std::exp(ns.m + ns.s * std::log(a_norm) + ns.s * std::log(ybar) / alpha_norm);
  };
  std::vector<double> out(q.size());
  switch (family) {
    case Family::constant:
      out[0] = y_scale[0] * q[0];
      break;
    case Family::power_law:
      out[0] = scale_of(q[0], q[1], norm[0], y_scale[0]);
      out[1] = q[1] / norm[0].s;
      break;
    case Family::batch_rule: {
      const double alpha = q[1] / norm[0].s;
      const double beta = q[3] / norm[1].s;
      out[0] = y_scale[0] * q[0] * std::exp(norm[0].m * alpha);
      out[1] = alpha;
      out[2] = q[2] * std::exp(norm[1].m * beta);
      out[3] = beta;
      break;
    }
    case Family::data_efficiency:
      out[0] = y_scale[0] * q[0];
      out[1] = scale_of(q[1], q[2], norm[0], y_scale[0]);
      out[2] = q[2] / norm[0].s;
      out[3] = scale_of(q[3], q[4], norm[1], y_scale[0]);
      out[4] = q[4] / norm[1].s;
      break;
    case Family::shared_data_efficiency: {
      out[0] = q[0] / norm[0].s;
      out[1] = q[1] / norm[1].s;
      for (std::size_t g = 0; g < y_scale.size(); ++g) {
        const std::size_t o = 2 + 3 * g;
        out[o] = y_scale[g] * q[o];
        out[o + 1] = scale_of(q[o + 1], q[0], norm[0], y_scale[g]);
        out[o + 2] = scale_of(q[o + 2], q[1], norm[1], y_scale[g]);
      }
      break;
    }
  }
  return out;
}

}  // namespace

double NormalizationState::apply(double x) const { return std::exp((std::log(x) - m) / s); }

double NormalizationState::invert(double x_normalized) const { return std::exp(s * std::log(x_normalized) + m); }

std::pair<std::vector<double>, NormalizationState> normalize_inputs(std::span<const double> x) {
  if (x.empty()) throw ArgumentError("normalize_inputs needs at least one value");
  for (double v : x) {
    if (!positive_finite(v)) throw ArgumentError("normalize_inputs needs positive finite values");
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo == *hi) throw ArgumentError("degenerate input: every value equals " + format_double(*lo));
  NormalizationState st;
  st.s = (std::log(*hi) - std::log(*lo)) / (std::log(kHigh) - std::log(kLow));
  st.m = std::log(*lo) - st.s * std::log(kLow);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = st.apply(x[i]);
  return {std::move(out), st};
}

std::pair<std::vector<double>, NormalizationState> normalize_inputs_or_fallback(std::span<const double> x) {
  if (x.empty()) throw ArgumentError("normalize_inputs needs at least one value");
  for (double v : x) {
    if (!positive_finite(v)) throw ArgumentError("normalize_inputs needs positive finite values");
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*lo != *hi) return normalize_inputs(x);
  NormalizationState st;
  st.s = 1.0;
  st.m = std::log(*lo);
  st.degenerate = true;
  return {std::vector<double>(x.size(), 1.0), st};
}

double softplus(double theta) {
  if (theta > 0.0) return theta + std::log1p(std::exp(-theta));
  return std::log1p(std::exp(theta));
}

double inverse_softplus(double p) {
  if (!(p > 0.0)) throw ArgumentError("inverse_softplus needs p > 0");
  if (p > 20.0) return p + std::log1p(-std::exp(-p));
  return std::log(std::expm1(p));
}

double sigmoid(double theta) {
  if (theta >= 0.0) return 1.0 / (1.0 + std::exp(-theta));
  const double e = std::exp(theta);
  return e / (1.0 + e);
}

std::string_view family_name(Family family) {
  switch (family) {
    case Family::constant:
      return "constant";
    case Family::power_law:
      return "power_law";
    case Family::batch_rule:
      return "batch_rule";
    case Family::data_efficiency:
      return "data_efficiency";
    case Family::shared_data_efficiency:
      return "shared_data_efficiency";
  }
  return "unknown";
}

Family family_from_name(std::string_view name) {
  for (Family f : {Family::constant, Family::power_law, Family::batch_rule, Family::data_efficiency,
                   Family::shared_data_efficiency}) {
    if (family_name(f) == name) return f;
  }
  throw ArgumentError("unknown model family '" + std::string(name) + "'");
}

std::size_t input_arity(Family family) {
  switch (family) {
    case Family::constant:
      return 0;
    case Family::power_law:
      return 1;
    default:
      return 2;
  }
}

std::size_t parameter_count(Family family, std::size_t groups) {
  switch (family) {
    case Family::constant:
      return 1;
    case Family::power_law:
      return 2;
    case Family::batch_rule:
      return 4;
    case Family::data_efficiency:
      return 5;
    case Family::shared_data_efficiency:
      return 2 + 3 * groups;
  }
  return 0;
}

std::vector<std::string> parameter_names(Family family, std::size_t groups) {
  switch (family) {
    case Family::constant:
      return {"c"};
    case Family::power_law:
      return {"a", "alpha"};
    case Family::batch_rule:
      return {"a_B", "alpha_B", "b_B", "beta_B"};
    case Family::data_efficiency:
      return {"d_min", "a", "alpha", "b", "beta"};
    case Family::shared_data_efficiency: {
      std::vector<std::string> names{"alpha", "beta"};
      for (std::size_t g = 0; g < groups; ++g) {
        const std::string idx = "[" + std::to_string(g) + "]";
        names.push_back("d_min" + idx);
        names.push_back("a" + idx);
        names.push_back("b" + idx);
      }
      return names;
    }
  }
  return {};
}

double evaluate_family(Family family, std::span<const double> params, std::span<const double> input,
                       std::size_t group) {
  return std::exp(log_model(family, params, input, group, nullptr));
}

double FitResult::param(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return params[i];
  }
  throw ArgumentError("fit has no parameter '" + std::string(name) + "'");
}

double FitResult::predict_normalized(std::span<const double> input, std::size_t group) const {
  std::vector<double> x(input.size());
  for (std::size_t k = 0; k < input.size(); ++k) x[k] = input_norm.at(k).apply(input[k]);
  return y_scale.at(group) * evaluate_family(model, normalized_params, x, group);
}

double FitResult::predict(std::span<const double> input, std::size_t group) const {
  return evaluate_family(model, params, input, group);
}

LogMseObjective::LogMseObjective(Family family, std::vector<std::vector<double>> inputs,
                                 std::vector<double> targets, std::vector<std::size_t> groups,
                                 std::size_t group_count)
    : family_(family),
      inputs_(std::move(inputs)),
      groups_(std::move(groups)),
      dim_(parameter_count(family, group_count)) {
  log_targets_.reserve(targets.size());
  for (double y : targets) log_targets_.push_back(std::log(y));
  if (groups_.empty()) groups_.assign(inputs_.size(), 0);
}

double LogMseObjective::operator()(std::span<const double> theta, std::span<double> grad) const {
  const auto p = softplus_all(theta);
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> dlog(dim_);
  double sum = 0.0;
  const double n = static_cast<double>(inputs_.size());
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    std::fill(dlog.begin(), dlog.end(), 0.0);
    const double r = log_model(family_, p, inputs_[i], groups_[i], dlog.data()) - log_targets_[i];
    sum += r * r;
    for (std::size_t k = 0; k < dim_; ++k) grad[k] += 2.0 * r * dlog[k] / n;
  }
  for (std::size_t k = 0; k < dim_; ++k) grad[k] *= sigmoid(theta[k]);
  return sum / n;
}

double LogMseObjective::value(std::span<const double> theta) const {
  const auto p = softplus_all(theta);
  double sum = 0.0;
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    const double r = log_model(family_, p, inputs_[i], groups_[i], nullptr) - log_targets_[i];
    sum += r * r;
  }
  return sum / static_cast<double>(inputs_.size());
}

FitResult minimize(const FitProblem& problem, const FitOptions& options) {
  const Family family = problem.model;
  const std::size_t n = problem.inputs.size();
  const std::size_t arity = input_arity(family);
  if (problem.targets.size() != n) throw ArgumentError("inputs and targets differ in length");
  if (!problem.groups.empty() && problem.groups.size() != n) {
    throw ArgumentError("group labels and targets differ in length");
  }
  if (!problem.groups.empty() && family != Family::shared_data_efficiency) {
    throw ArgumentError("group labels are only meaningful for shared families");
  }

  std::size_t group_count = 1;
  if (!problem.groups.empty()) group_count = *std::max_element(problem.groups.begin(), problem.groups.end()) + 1;
  const std::size_t dim = parameter_count(family, group_count);
  if (n < dim) {
    throw ArgumentError(std::string(family_name(family)) + " fit needs at least " + std::to_string(dim) +
                        " observations, got " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (problem.inputs[i].size() != arity) {
      throw ArgumentError("observation " + std::to_string(i) + " has " + std::to_string(problem.inputs[i].size()) +
                          " inputs, expected " + std::to_string(arity));
    }
    if (!positive_finite(problem.targets[i])) throw ArgumentError("targets must be positive and finite");
  }
  if (!problem.raw_params.empty() && problem.raw_params.size() != dim) {
    throw ArgumentError("raw_params has " + std::to_string(problem.raw_params.size()) + " entries, expected " +
                        std::to_string(dim));
  }

  FitResult result;
  result.model = family;
  result.names = parameter_names(family, group_count);

  // Inputs: one normalization per column, shared across groups.
  std::vector<std::vector<double>> x_norm(n, std::vector<double>(arity));
  for (std::size_t k = 0; k < arity; ++k) {
    std::vector<double> column(n);
    for (std::size_t i = 0; i < n; ++i) column[i] = problem.inputs[i][k];
    auto [normalized, state] = normalize_inputs_or_fallback(column);
    for (std::size_t i = 0; i < n; ++i) x_norm[i][k] = normalized[i];
    result.input_norm.push_back(state);
  }
  // Targets: divide by the mean of each group.
  std::vector<std::size_t> groups = problem.groups;
  if (groups.empty()) groups.assign(n, 0);
  std::vector<double> sums(group_count, 0.0);
  std::vector<std::size_t> counts(group_count, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sums[groups[i]] += problem.targets[i];
    ++counts[groups[i]];
  }
  for (std::size_t g = 0; g < group_count; ++g) {
    if (counts[g] == 0) throw ArgumentError("group " + std::to_string(g) + " has no observations");
    result.y_scale.push_back(sums[g] / static_cast<double>(counts[g]));
  }
  std::vector<double> y_norm(n);
  for (std::size_t i = 0; i < n; ++i) y_norm[i] = problem.targets[i] / result.y_scale[groups[i]];

  const LogMseObjective objective(family, x_norm, y_norm, groups, group_count);
  const Objective fn = [&objective](std::span<const double> theta, std::span<double> grad) {
    return objective(theta, grad);
  };

  LbfgsOptions lopt;
  lopt.grad_tol = options.grad_tol;
  lopt.max_iterations = options.max_iterations;
  lopt.memory = options.memory;
  lopt.record_history = options.record_history;
  result.optimizer = "lbfgs(memory=" + std::to_string(lopt.memory) + ", strong-wolfe c1=" + format_double(lopt.c1) +
                     " c2=" + format_double(lopt.c2) + ", grad_tol=" + format_double(lopt.grad_tol) +
                     ", max_iterations=" + std::to_string(lopt.max_iterations) + ")";

  std::optional<LbfgsResult> best;
  std::size_t total_iterations = 0;
  std::string last_failure;
  for (std::size_t start = 0; start <= options.restarts; ++start) {
    std::vector<double> theta0(dim, 0.0);
    if (start == 0) {
      if (!problem.raw_params.empty()) theta0 = problem.raw_params;
    } else {
      CounterRng rng(stream_key(options.rng_seed, start));
      for (auto& t : theta0) t = rng.normal();
    }
    ++result.starts;
    try {
      auto run = lbfgs_minimize(fn, std::move(theta0), lopt);
      total_iterations += run.iterations;
      if (!best || run.f < best->f) best = std::move(run);
    } catch (const OptimizationError& e) {
      last_failure = e.what();
    }
    if (best && best->converged && best->f <= options.plateau_loss) break;
  }
  if (!best) throw OptimizationError("every start of the " + std::string(family_name(family)) + " fit failed: " + last_failure);

  result.normalized_params = softplus_all(best->x);
  result.params = denormalize(family, result.normalized_params, result.input_norm, result.y_scale);
  result.loss = best->f;
  result.converged = best->converged;
  result.iterations = total_iterations;
  result.grad_norm = best->grad_norm;
  result.status = best->status;
  result.history = std::move(best->history);
  for (double v : result.params) {
    if (!positive_finite(v)) {
      throw OptimizationError(std::string(family_name(family)) +
                              " fit produced a parameter that is not positive and finite after denormalization");
    }
  }
  return result;
}

double PowerLawFit::operator()(double x) const { return std::pow(a / x, alpha); }

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("fit_power_law: x and y differ in length");
  if (x.size() < 2) throw ArgumentError("fit_power_law needs at least 2 points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!positive_finite(x[i]) || !positive_finite(y[i])) {
      throw ArgumentError("fit_power_law needs positive finite data");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = mean(lx);
  const double my = mean(ly);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 1e-300) throw ArgumentError("fit_power_law: degenerate x (all values equal)");
  const double slope = sxy / sxx;
  if (slope == 0.0) throw EstimationError("fit_power_law: zero slope, the scale is undefined");
  const double intercept = my - slope * mx;

  PowerLawFit fit;
  fit.alpha = -slope;
  fit.a = std::exp(intercept / fit.alpha);
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (intercept + slope * lx[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
  if (n == 2) fit.r_squared = 1.0;
  return fit;
}

double LoglinearFit::operator()(double sigma, double n) const {
  return std::exp(intercept + slope_sigma * std::log(sigma) + slope_n * std::log(n));
}

LoglinearFit fit_loglinear(std::span<const double> sigma, std::span<const double> n, std::span<const double> y) {
  if (sigma.size() != n.size() || sigma.size() != y.size()) {
    throw ArgumentError("fit_loglinear: inputs differ in length");
  }
  if (y.size() < 3) throw ArgumentError("fit_loglinear needs at least 3 points");
  const auto rows = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd design(rows, 3);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!positive_finite(sigma[k]) || !positive_finite(n[k]) || !positive_finite(y[k])) {
      throw ArgumentError("fit_loglinear needs positive finite data");
    }
    design(i, 0) = 1.0;
    design(i, 1) = std::log(sigma[k]);
    design(i, 2) = std::log(n[k]);
    rhs(i) = std::log(y[k]);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw ArgumentError("fit_loglinear: rank-deficient design (inputs must vary independently)");
  const Eigen::Vector3d coef = qr.solve(rhs);
  return {coef(0), coef(1), coef(2)};
}

}  // namespace rlscale
