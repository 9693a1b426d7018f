#pragma once

// Limited-memory BFGS with a backtracking (halving) Armijo line search.

#include <Eigen/Dense>

#include <functional>
#include <utility>
#include <vector>

#include "structcv/autodiff.hpp"

namespace structcv {

struct OptimizerOptions {
  double tol = 1e-8;  // on the gradient infinity norm
  int max_iters = 1000;
  int history = 10;
  int threads = 1;    // for gradient passes
};

struct TrajectoryPoint {
  Eigen::VectorXd theta;
  double objective = 0.0;  // minimized value
  double grad_norm = 0.0;  // infinity norm
  double seconds = 0.0;    // cumulative wall time
};

struct FitResult {
  Eigen::VectorXd theta_hat;
  std::vector<TrajectoryPoint> trajectory;  // starts with theta_0
  bool converged = false;
  double grad_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;  // objective evaluations, including line search trials
};

using ValueFn = std::function<double(const Eigen::VectorXd&)>;
using ValueGradFn = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

// Minimizes f from x0. Throws NumericalError when f(x0) is not finite and
// OptimizationError (carrying the last iterate) when 50 halvings fail.
FitResult minimize(const ValueFn& value, const ValueGradFn& value_grad, const Eigen::VectorXd& x0,
                   const OptimizerOptions& options = {});

// Maximizes F(theta, w) of an objective at fixed weights, i.e. minimizes -F.
FitResult fit(const ScalarFunction& f, const Eigen::VectorXd& w, const Eigen::VectorXd& theta0,
              const OptimizerOptions& options = {});

// Iterate s of the trajectory, counting theta_0 as s = 1.
Eigen::VectorXd truncate_at(const FitResult& fit, Index s);

}  // namespace structcv
