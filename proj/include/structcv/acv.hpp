#pragma once

// Approximate refits from one Hessian/Jacobian evaluation (infinitesimal
// jackknife, IJ) and the per-fold Newton-step baseline (NS).

#include <Eigen/Dense>

#include "structcv/core.hpp"
#include "structcv/objective.hpp"

namespace structcv {

// Cholesky of -H + ridge * I with the ridge escalated 0, 1e-5, 1e-4, ..., 1e-2.
struct NegativeFactor {
  Eigen::LLT<Eigen::MatrixXd> chol;
  double ridge = 0.0;
};

// Throws SingularHessianError once the ladder is exhausted.
NegativeFactor factorize_negative(const Eigen::MatrixXd& H);

struct HessianBundle {
  Eigen::VectorXd theta;  // expansion point theta_1
  Eigen::MatrixXd H;      // d2F / dtheta2 at (theta_1, 1)
  Eigen::MatrixXd J;      // d2F / dtheta dw at (theta_1, 1), one column per weight
  Eigen::LLT<Eigen::MatrixXd> chol;
  double ridge = 0.0;
  double seconds = 0.0;
};

HessianBundle build_bundle(const Objective& obj, const Eigen::VectorXd& theta1, int threads = 1);

// theta_1 + H^{-1} sum_{t in o} J_t
Eigen::VectorXd ij_params(const HessianBundle& bundle, const Fold& fold);
// theta_1 + (-H)^{-1} J (w - 1), the same expansion at arbitrary weights.
Eigen::VectorXd ij_params_at(const HessianBundle& bundle, const Eigen::VectorXd& w);

// theta_1 - H_o^{-1} grad F(theta_1, w_o)
Eigen::VectorXd ns_params(const Objective& obj, const Eigen::VectorXd& theta1, const Fold& fold, int threads = 1);

}  // namespace structcv
