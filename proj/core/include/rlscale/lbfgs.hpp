#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rlscale {

/// f(x), writing ∇f(x) into grad. May return a non-finite value; the line search backs off.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  std::size_t memory = 10;
  double grad_tol = 1e-10;  // on the Euclidean gradient norm
  std::size_t max_iterations = 2000;
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature (strong Wolfe)
  std::size_t max_line_evaluations = 60;
  bool record_history = false;
};

struct LbfgsResult {
  std::vector<double> x;
  double f = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  /// Gradient below tolerance, or stalled with no representable decrease left.
  bool converged = false;
  std::string status;
  /// f after each accepted step, starting with f(x0), when record_history is set.
  std::vector<double> history;
};

/// Limited-memory BFGS with a strong-Wolfe bracketing line search.
/// Throws OptimizationError if f(x0) is not finite.
LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double> x0, const LbfgsOptions& options = {});

}  // namespace rlscale
