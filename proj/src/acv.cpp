#include "structcv/acv.hpp"

#include <chrono>
#include <string>

#include "structcv/errors.hpp"

namespace structcv {

namespace {

// A factorization also counts as failed when a pivot is negligible next to
// the largest curvature, since the solve would then amplify roundoff.
bool usable(const Eigen::LLT<Eigen::MatrixXd>& chol, double scale) {
  if (chol.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = chol.matrixLLT().diagonal();
  if (!d.allFinite()) return false;
  return d.size() == 0 || d.cwiseAbs2().minCoeff() >= 1e-12 * scale;
}

WeightVector fold_weights(const Objective& obj, const Fold& fold) {
  for (Index t : fold.indices()) {
    if (t < 0 || t >= obj.num_weights()) {
      throw ArgumentError("fold index " + std::to_string(t) + " outside [0, " + std::to_string(obj.num_weights()) + ")");
    }
  }
  return fold_to_weights(fold, obj.num_weights(), obj.target());
}

}  // namespace

NegativeFactor factorize_negative(const Eigen::MatrixXd& H) {
  if (H.rows() != H.cols()) throw ArgumentError("factorize_negative: H must be square");
  if (!H.allFinite()) throw NumericalError("Hessian has non-finite entries");
  const Eigen::MatrixXd A = -H;
  const double scale = std::max(1.0, A.diagonal().cwiseAbs().maxCoeff());
  const Eigen::Index D = H.rows();
  for (double ridge : {0.0, 1e-5, 1e-4, 1e-3, 1e-2}) {
    NegativeFactor out;
    out.chol.compute(A + ridge * Eigen::MatrixXd::Identity(D, D));
    if (usable(out.chol, scale)) {
      out.ridge = ridge;
      return out;
    }
  }
  throw SingularHessianError("-H is not positive definite even with ridge 1e-2");
}

HessianBundle build_bundle(const Objective& obj, const Eigen::VectorXd& theta1, int threads) {
  if (theta1.size() != obj.num_params()) throw ArgumentError("build_bundle: parameter length mismatch");
  if (!theta1.allFinite()) throw ArgumentError("build_bundle: theta_1 must be finite");
  const auto start = std::chrono::steady_clock::now();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(obj.num_weights());
  HessianBundle b;
  b.theta = theta1;
  b.H = obj.hessian_at(theta1, ones, threads);
  b.J = obj.jacobian_at(theta1, ones, threads);
  if (!b.J.allFinite()) throw NumericalError("weight Jacobian has non-finite entries");
  auto f = factorize_negative(b.H);
  b.chol = std::move(f.chol);
  b.ridge = f.ridge;
  b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return b;
}

Eigen::VectorXd ij_params(const HessianBundle& bundle, const Fold& fold) {
  if (fold.empty()) return bundle.theta;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(bundle.theta.size());
  for (Index t : fold.indices()) {
    if (t < 0 || t >= bundle.J.cols()) throw ArgumentError("fold index " + std::to_string(t) + " outside J");
    rhs += bundle.J.col(t);
  }
  return bundle.theta - bundle.chol.solve(rhs);
}

Eigen::VectorXd ij_params_at(const HessianBundle& bundle, const Eigen::VectorXd& w) {
  if (w.size() != bundle.J.cols()) throw ArgumentError("ij_params_at: weight length mismatch");
  const Eigen::VectorXd dw = w - Eigen::VectorXd::Ones(w.size());
  return bundle.theta + bundle.chol.solve(bundle.J * dw);
}

Eigen::VectorXd ns_params(const Objective& obj, const Eigen::VectorXd& theta1, const Fold& fold, int threads) {
  if (theta1.size() != obj.num_params()) throw ArgumentError("ns_params: parameter length mismatch");
  const WeightVector wo = fold_weights(obj, fold);
  const Eigen::MatrixXd Ho = obj.hessian_at(theta1, wo.values, threads);
  const Eigen::VectorXd g = gradient(obj, theta1, wo.values, threads);
  if (!g.allFinite()) throw NumericalError("leave-out gradient has non-finite entries");
  const auto f = factorize_negative(Ho);
  return theta1 + f.chol.solve(g);
}

}  // namespace structcv
