#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <span>
#include <utility>

#include "structcv/dual.hpp"

namespace structcv {

using Index = Eigen::Index;

// An objective F(theta, w) that can be evaluated on plain reals and on the
// dual scalars. Implementations must be pure: the same inputs always give the
// same result.
class ScalarFunction {
 public:
  virtual ~ScalarFunction() = default;

  virtual Index num_params() const = 0;
  virtual Index num_weights() const = 0;

  virtual double eval(std::span<const double> theta, std::span<const double> w) const = 0;
  virtual Dual eval(std::span<const Dual> theta, std::span<const double> w) const = 0;
  virtual Dual2 eval(std::span<const Dual2> theta, std::span<const double> w) const = 0;
  virtual Dual2 eval(std::span<const Dual2> theta, std::span<const Dual2> w) const = 0;

  double operator()(const Eigen::VectorXd& theta, const Eigen::VectorXd& w) const {
    return eval(std::span<const double>(theta.data(), theta.size()),
                std::span<const double>(w.data(), w.size()));
  }
};

// Wraps a generic callable fn(span<const S> theta, span<const W> w) -> S-ish.
template <class Fn>
class GenericFunction final : public ScalarFunction {
 public:
  GenericFunction(Index num_params, Index num_weights, Fn fn)
      : num_params_(num_params), num_weights_(num_weights), fn_(std::move(fn)) {}

  Index num_params() const override { return num_params_; }
  Index num_weights() const override { return num_weights_; }

  double eval(std::span<const double> t, std::span<const double> w) const override { return fn_(t, w); }
  Dual eval(std::span<const Dual> t, std::span<const double> w) const override { return Dual(fn_(t, w)); }
  Dual2 eval(std::span<const Dual2> t, std::span<const double> w) const override { return Dual2(fn_(t, w)); }
  Dual2 eval(std::span<const Dual2> t, std::span<const Dual2> w) const override { return Dual2(fn_(t, w)); }

 private:
  Index num_params_;
  Index num_weights_;
  Fn fn_;
};

template <class Fn>
GenericFunction<Fn> make_function(Index num_params, Index num_weights, Fn fn) {
  return GenericFunction<Fn>(num_params, num_weights, std::move(fn));
}

// dF/dtheta at (theta, w); one Dual pass per coordinate.
Eigen::VectorXd gradient(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                         int threads = 1);

// Value and gradient together (the value comes from the first pass).
std::pair<double, Eigen::VectorXd> value_and_gradient(const ScalarFunction& f, const Eigen::VectorXd& theta,
                                                      const Eigen::VectorXd& w, int threads = 1);

// Second derivatives in theta before symmetrization; entry (i, j) comes from
// the hyper-dual pass seeded with e_i and e_j.
Eigen::MatrixXd raw_hessian(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                            int threads = 1);

// (H + H^T) / 2 of raw_hessian.
Eigen::MatrixXd hessian(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                        int threads = 1);

// Entry (d, t) = d^2 F / dtheta_d dw_t at (theta, w).
Eigen::MatrixXd mixed_jacobian(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                               int threads = 1);

struct FdDeviation {
  double gradient = 0.0;
  double hessian = 0.0;
  double mixed_jacobian = 0.0;
  double max() const { return std::max({gradient, hessian, mixed_jacobian}); }
};

// Test oracle. fd_gradient uses central differences of values; the Hessian
// and mixed Jacobian use central differences of the first-order gradient.
// fd_check reports ||autodiff - fd||_max / ||fd||_max for each.
Eigen::VectorXd fd_gradient(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                            double step);
Eigen::MatrixXd fd_hessian(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                           double step);
Eigen::MatrixXd fd_mixed_jacobian(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                                  double step);
FdDeviation fd_check(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w, double step);

double max_relative_deviation(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& expected);

}  // namespace structcv
