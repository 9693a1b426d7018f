#include "structcv/optimize.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <string>

#include "structcv/errors.hpp"

namespace structcv {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 50;

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Two-loop recursion: approximate inverse Hessian times g.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& g, const std::deque<Eigen::VectorXd>& S,
                                const std::deque<Eigen::VectorXd>& Y) {
  Eigen::VectorXd q = g;
  const std::size_t m = S.size();
  std::vector<double> alpha(m), rho(m);
  for (std::size_t i = m; i-- > 0;) {
    rho[i] = 1.0 / Y[i].dot(S[i]);
    alpha[i] = rho[i] * S[i].dot(q);
    q -= alpha[i] * Y[i];
  }
  if (m > 0) {
    q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
  } else {
    q /= std::max(1.0, g.lpNorm<Eigen::Infinity>());
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double beta = rho[i] * Y[i].dot(q);
    q += (alpha[i] - beta) * S[i];
  }
  return -q;
}

}  // namespace

FitResult minimize(const ValueFn& value, const ValueGradFn& value_grad, const Eigen::VectorXd& x0,
                   const OptimizerOptions& options) {
  if (!(options.tol > 0.0) || options.max_iters < 0 || options.history < 1) {
    throw ArgumentError("optimizer: tol must be positive, max_iters >= 0 and history >= 1");
  }
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  FitResult out;
  Eigen::VectorXd x = x0;
  auto [f, g] = value_grad(x);
  out.evaluations = 1;
  if (!std::isfinite(f) || !g.allFinite()) throw NumericalError("optimizer: objective is not finite at the start");
  double gnorm = g.lpNorm<Eigen::Infinity>();
  out.trajectory.push_back({x, f, gnorm, elapsed()});

  std::deque<Eigen::VectorXd> S, Y;
  while (gnorm > options.tol && out.iterations < options.max_iters) {
    Eigen::VectorXd p = lbfgs_direction(g, S, Y);
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      S.clear();
      Y.clear();
      p = lbfgs_direction(g, S, Y);
      slope = g.dot(p);
    }

    // Backtracking: Armijo, or (once differences in f are at roundoff level)
    // any trial within the noise floor of f whose gradient is smaller.
    const double noise = 1e-12 * std::max(1.0, std::abs(f));
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new, g_new;
    double f_new = 0.0;
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
      x_new = x + step * p;
      f_new = value(x_new);
      ++out.evaluations;
      if (!std::isfinite(f_new)) continue;
      if (f_new <= f + kArmijo * step * slope) {
        accepted = true;
      } else if (f_new <= f + noise) {
        auto [fv, gv] = value_grad(x_new);
        ++out.evaluations;
        if (gv.allFinite() && gv.lpNorm<Eigen::Infinity>() < gnorm) {
          f_new = fv;
          g_new = std::move(gv);
          accepted = true;
        }
      }
      if (accepted) break;
    }
    if (!accepted) {
      throw OptimizationError("line search failed after " + std::to_string(kMaxHalvings) +
                                  " halvings (gradient norm " + std::to_string(gnorm) + ")",
                              to_std(x));
    }
    if (g_new.size() == 0) {
      auto [fv, gv] = value_grad(x_new);
      ++out.evaluations;
      f_new = fv;
      g_new = std::move(gv);
    }
    if (!g_new.allFinite()) throw NumericalError("optimizer: non-finite gradient");

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      S.push_back(s);
      Y.push_back(y);
      if (static_cast<int>(S.size()) > options.history) {
        S.pop_front();
        Y.pop_front();
      }
    }
    x = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
    gnorm = g.lpNorm<Eigen::Infinity>();
    ++out.iterations;
    out.trajectory.push_back({x, f, gnorm, elapsed()});
  }
  out.theta_hat = x;
  out.grad_norm = gnorm;
  out.converged = gnorm <= options.tol;
  return out;
}

FitResult fit(const ScalarFunction& f, const Eigen::VectorXd& w, const Eigen::VectorXd& theta0,
              const OptimizerOptions& options) {
  if (theta0.size() != f.num_params() || w.size() != f.num_weights()) {
    throw ArgumentError("fit: parameter or weight length mismatch");
  }
  const ValueFn value = [&](const Eigen::VectorXd& th) { return -f(th, w); };
  const ValueGradFn value_grad = [&](const Eigen::VectorXd& th) {
    auto [v, g] = value_and_gradient(f, th, w, options.threads);
    return std::pair<double, Eigen::VectorXd>(-v, -g);
  };
  return minimize(value, value_grad, theta0, options);
}

Eigen::VectorXd truncate_at(const FitResult& fit, Index s) {
  if (s < 1 || s > static_cast<Index>(fit.trajectory.size())) {
    throw ArgumentError("truncate_at: s must lie in [1, " + std::to_string(fit.trajectory.size()) + "]");
  }
  return fit.trajectory[static_cast<std::size_t>(s - 1)].theta;
}

}  // namespace structcv
