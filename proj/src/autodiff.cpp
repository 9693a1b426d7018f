#include "structcv/autodiff.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "structcv/errors.hpp"
#include "structcv/parallel.hpp"

namespace structcv {
namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void check_sizes(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w) {
  if (theta.size() != f.num_params() || w.size() != f.num_weights()) {
    throw ArgumentError("autodiff: expected " + std::to_string(f.num_params()) + " parameters and " +
                        std::to_string(f.num_weights()) + " weights, got " + std::to_string(theta.size()) +
                        " and " + std::to_string(w.size()));
  }
}

Dual gradient_pass(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w, Index d) {
  std::vector<Dual> lifted(theta.size());
  for (Index i = 0; i < theta.size(); ++i) lifted[i] = Dual(theta[i], i == d ? 1.0 : 0.0);
  const Dual out = f.eval(std::span<const Dual>(lifted), as_span(w));
  if (!all_finite(out)) throw NumericalError("gradient: non-finite value along coordinate " + std::to_string(d), d);
  return out;
}

}  // namespace

std::pair<double, Eigen::VectorXd> value_and_gradient(const ScalarFunction& f, const Eigen::VectorXd& theta,
                                                      const Eigen::VectorXd& w, int threads) {
  check_sizes(f, theta, w);
  const Index D = theta.size();
  Eigen::VectorXd g(D);
  std::vector<double> values(D);
  parallel_for(static_cast<std::size_t>(D), threads, [&](std::size_t d) {
    const Dual out = gradient_pass(f, theta, w, static_cast<Index>(d));
    g[static_cast<Index>(d)] = out.du;
    values[d] = out.value;
  });
  double value = D > 0 ? values[0] : f(theta, w);
  if (!std::isfinite(value)) throw NumericalError("gradient: non-finite objective");
  return {value, g};
}

Eigen::VectorXd gradient(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                         int threads) {
  return value_and_gradient(f, theta, w, threads).second;
}

Eigen::MatrixXd raw_hessian(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                            int threads) {
  check_sizes(f, theta, w);
  const Index D = theta.size();
  Eigen::MatrixXd H(D, D);
  // One task per column; each column runs D hyper-dual passes.
  parallel_for(static_cast<std::size_t>(D), threads, [&](std::size_t col) {
    const auto j = static_cast<Index>(col);
    std::vector<Dual2> lifted(D);
    for (Index i = 0; i < D; ++i) {
      for (Index k = 0; k < D; ++k) lifted[k] = Dual2(theta[k], k == i ? 1.0 : 0.0, k == j ? 1.0 : 0.0, 0.0);
      const Dual2 out = f.eval(std::span<const Dual2>(lifted), as_span(w));
      if (!all_finite(out)) {
        throw NumericalError("hessian: non-finite entry (" + std::to_string(i) + ", " + std::to_string(j) + ")",
                             i);
      }
      H(i, j) = out.d2;
    }
  });
  return H;
}

Eigen::MatrixXd hessian(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                        int threads) {
  const Eigen::MatrixXd H = raw_hessian(f, theta, w, threads);
  return 0.5 * (H + H.transpose());
}

Eigen::MatrixXd mixed_jacobian(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                               int threads) {
  check_sizes(f, theta, w);
  const Index D = theta.size();
  const Index T = w.size();
  Eigen::MatrixXd J(D, T);
  parallel_for(static_cast<std::size_t>(T), threads, [&](std::size_t col) {
    const auto t = static_cast<Index>(col);
    std::vector<Dual2> lw(T);
    for (Index s = 0; s < T; ++s) lw[s] = Dual2(w[s], 0.0, s == t ? 1.0 : 0.0, 0.0);
    std::vector<Dual2> lt(D);
    for (Index d = 0; d < D; ++d) {
      for (Index k = 0; k < D; ++k) lt[k] = Dual2(theta[k], k == d ? 1.0 : 0.0, 0.0, 0.0);
      const Dual2 out = f.eval(std::span<const Dual2>(lt), std::span<const Dual2>(lw));
      if (!all_finite(out)) {
        throw NumericalError("mixed_jacobian: non-finite entry (" + std::to_string(d) + ", " + std::to_string(t) +
                                 ")",
                             d);
      }
      J(d, t) = out.d2;
    }
  });
  return J;
}

Eigen::VectorXd fd_gradient(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                            double step) {
  if (!(step > 0.0)) throw ArgumentError("fd_check: step must be positive");
  Eigen::VectorXd g(theta.size());
  for (Index d = 0; d < theta.size(); ++d) {
    Eigen::VectorXd p = theta, m = theta;
    p[d] += step;
    m[d] -= step;
    g[d] = (f(p, w) - f(m, w)) / (2.0 * step);
  }
  return g;
}

// Second-order oracles difference the first-order (Dual) gradient, which
// fd_gradient checks against plain values. Differencing values twice loses
// about eps / step^2 to roundoff, too much for a 1e-9 comparison.
Eigen::MatrixXd fd_hessian(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                           double step) {
  if (!(step > 0.0)) throw ArgumentError("fd_check: step must be positive");
  const Index D = theta.size();
  Eigen::MatrixXd H(D, D);
  for (Index j = 0; j < D; ++j) {
    Eigen::VectorXd p = theta, m = theta;
    p[j] += step;
    m[j] -= step;
    H.col(j) = (gradient(f, p, w) - gradient(f, m, w)) / (2.0 * step);
  }
  return 0.5 * (H + H.transpose());
}

Eigen::MatrixXd fd_mixed_jacobian(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                                  double step) {
  if (!(step > 0.0)) throw ArgumentError("fd_check: step must be positive");
  Eigen::MatrixXd J(theta.size(), w.size());
  for (Index t = 0; t < w.size(); ++t) {
    Eigen::VectorXd p = w, m = w;
    p[t] += step;
    m[t] -= step;
    J.col(t) = (gradient(f, theta, p) - gradient(f, theta, m)) / (2.0 * step);
  }
  return J;
}

double max_relative_deviation(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& expected) {
  if (actual.rows() != expected.rows() || actual.cols() != expected.cols()) {
    throw ArgumentError("max_relative_deviation: shape mismatch");
  }
  if (actual.size() == 0) return 0.0;
  const double scale = expected.cwiseAbs().maxCoeff();
  const double diff = (actual - expected).cwiseAbs().maxCoeff();
  if (scale == 0.0) return diff;
  return diff / scale;
}

FdDeviation fd_check(const ScalarFunction& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& w, double step) {
  if (!(step > 0.0)) throw ArgumentError("fd_check: step must be positive");
  FdDeviation out;
  out.gradient = max_relative_deviation(gradient(f, theta, w), fd_gradient(f, theta, w, step));
  out.hessian = max_relative_deviation(hessian(f, theta, w), fd_hessian(f, theta, w, step));
  out.mixed_jacobian = max_relative_deviation(mixed_jacobian(f, theta, w), fd_mixed_jacobian(f, theta, w, step));
  return out;
}

}  // namespace structcv
