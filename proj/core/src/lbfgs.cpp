#include "rlscale/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>

#include "rlscale/error.hpp"

namespace rlscale {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct Point {
  double step = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative along the search direction
  std::vector<double> x;
  std::vector<double> g;
  bool finite = true;
};

class LineSearch {
 public:
  LineSearch(const Objective& f, const Point& origin, std::span<const double> dir, const LbfgsOptions& opt)
      : f_(f), origin_(origin), dir_(dir), opt_(opt) {}

  /// Strong-Wolfe step, or the best sufficient-decrease point seen when the budget runs out.
  std::optional<Point> search(double first_step) {
    Point prev = origin_;
    double step = first_step;
    for (std::size_t i = 0; evals_ < opt_.max_line_evaluations; ++i) {
      Point cur = evaluate(step);
      if (!cur.finite) {
        // Overshot into a region where the model is not finite: pull back.
        step = prev.step + 0.5 * (step - prev.step);
        if (step - prev.step <= 1e-16 * std::max(1.0, prev.step)) break;
        continue;
      }
      if (cur.f > armijo(cur.step) || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
      if (std::abs(cur.slope) <= -opt_.c2 * origin_.slope) return cur;
      if (cur.slope >= 0.0) return zoom(cur, prev);
      prev = std::move(cur);
      step *= 2.0;
    }
    return fallback();
  }

  std::size_t evaluations() const noexcept { return evals_; }

 private:
  double armijo(double step) const { return origin_.f + opt_.c1 * step * origin_.slope; }

  Point evaluate(double step) {
    ++evals_;
    Point p;
    p.step = step;
    p.x.resize(origin_.x.size());
    p.g.resize(origin_.x.size());
    for (std::size_t k = 0; k < p.x.size(); ++k) p.x[k] = origin_.x[k] + step * dir_[k];
    p.f = f_(p.x, p.g);
    p.finite = std::isfinite(p.f) && std::all_of(p.g.begin(), p.g.end(), [](double v) { return std::isfinite(v); });
    if (p.finite) {
      p.slope = dot(p.g, dir_);
      if (p.f <= armijo(step) && p.f < origin_.f && (!best_ || p.f < best_->f)) best_ = p;
    }
    return p;
  }

  static double cubic_min(const Point& a, const Point& b) {
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.step - b.step);
    const double disc = d1 * d1 - a.slope * b.slope;
    if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
    return b.step - (b.step - a.step) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
  }

  std::optional<Point> zoom(Point lo, Point hi) {
    while (evals_ < opt_.max_line_evaluations) {
      const double left = std::min(lo.step, hi.step);
      const double right = std::max(lo.step, hi.step);
      const double width = right - left;
      if (width <= 1e-16 * std::max(1.0, right)) break;
      double step = hi.finite ? cubic_min(lo, hi) : std::numeric_limits<double>::quiet_NaN();
      if (!std::isfinite(step) || step < left + 0.1 * width || step > right - 0.1 * width) {
        step = 0.5 * (left + right);
      }
      Point cur = evaluate(step);
      if (!cur.finite || cur.f > armijo(cur.step) || cur.f >= lo.f) {
        hi = std::move(cur);
        continue;
      }
      if (std::abs(cur.slope) <= -opt_.c2 * origin_.slope) return cur;
      if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
      lo = std::move(cur);
    }
    return fallback();
  }

  std::optional<Point> fallback() const { return best_; }

  const Objective& f_;
  const Point& origin_;
  std::span<const double> dir_;
  const LbfgsOptions& opt_;
  std::size_t evals_ = 0;
  std::optional<Point> best_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& options) {
  const std::size_t n = x0.size();
  LbfgsResult result;

  Point cur;
  cur.x = std::move(x0);
  cur.g.assign(n, 0.0);
  cur.f = f(cur.x, cur.g);
  result.evaluations = 1;
  if (!std::isfinite(cur.f) ||
      !std::all_of(cur.g.begin(), cur.g.end(), [](double v) { return std::isfinite(v); })) {
    throw OptimizationError("objective is not finite at the initial point");
  }
  if (options.record_history) result.history.push_back(cur.f);

  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> dir(n);
  std::vector<double> alpha(options.memory);

  double gnorm = norm(cur.g);
  result.status = "max iterations";
  while (true) {
    if (gnorm < options.grad_tol) {
      result.converged = true;
      result.status = "gradient tolerance";
      break;
    }
    if (result.iterations >= options.max_iterations) break;

    // Two-loop recursion: dir = -H·g.
    for (std::size_t k = 0; k < n; ++k) dir[k] = -cur.g[k];
    const std::size_t m = s_hist.size();
    for (std::size_t i = m; i-- > 0;) {
      alpha[i] = rho_hist[i] * dot(s_hist[i], dir);
      for (std::size_t k = 0; k < n; ++k) dir[k] -= alpha[i] * y_hist[i][k];
    }
    if (m > 0) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (auto& v : dir) v *= gamma;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * dot(y_hist[i], dir);
      for (std::size_t k = 0; k < n; ++k) dir[k] += (alpha[i] - beta) * s_hist[i][k];
    }
    cur.slope = dot(cur.g, dir);
    if (!(cur.slope < 0.0)) {
      // Not a descent direction: drop the curvature memory and use steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t k = 0; k < n; ++k) dir[k] = -cur.g[k];
      cur.slope = -gnorm * gnorm;
    }
    cur.step = 0.0;

    const double first_step = m == 0 ? std::min(1.0, 1.0 / gnorm) : 1.0;
    LineSearch ls(f, cur, dir, options);
    auto next = ls.search(first_step);
    result.evaluations += ls.evaluations();
    if (!next) {
      // No representable decrease along the direction; treat a small gradient as stationary.
      result.status = "line search stalled";
      result.converged = gnorm < std::sqrt(options.grad_tol);
      break;
    }

    std::vector<double> s(n);
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = next->x[k] - cur.x[k];
      y[k] = next->g[k] - cur.g[k];
    }
    const double sy = dot(s, y);
    if (options.memory > 0 && sy > 1e-12 * norm(s) * norm(y)) {
      if (s_hist.size() == options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }

    cur.x = std::move(next->x);
    cur.g = std::move(next->g);
    cur.f = next->f;
    gnorm = norm(cur.g);
    ++result.iterations;
    if (options.record_history) result.history.push_back(cur.f);
  }

  result.x = std::move(cur.x);
  result.f = cur.f;
  result.grad_norm = gnorm;
  return result;
}

}  // namespace rlscale
