#pragma once

// Weighted log-posterior objectives F(theta, w) for the two CV targets.
//
// Within-structure (LWCV): F = log p(x_s; theta, w) + log p(theta), with w one
// weight per node of the designated structure s.
// Structure-level (LSCV):  F = sum_n w_n log p(x_n; theta) + log p(theta)
// (log p(z_n | x_n; theta) for conditional models).

#include <Eigen/Dense>

#include <vector>

#include "structcv/autodiff.hpp"
#include "structcv/core.hpp"
#include "structcv/model.hpp"

namespace structcv {

class Objective : public ScalarFunction {
 public:
  Objective(const Model& model, const StructuredDataset& data) : model_(model), data_(data) {}

  virtual WeightTarget target() const = 0;
  const Model& model() const { return model_; }
  const StructuredDataset& data() const { return data_; }

  Index num_params() const override { return model_.num_params(); }

  // Hessian in theta and mixed Jacobian, using per-family fast paths.
  virtual Eigen::MatrixXd hessian_at(const Eigen::VectorXd& theta, const Eigen::VectorXd& w, int threads) const;
  virtual Eigen::MatrixXd jacobian_at(const Eigen::VectorXd& theta, const Eigen::VectorXd& w, int threads) const;

  // Held-out loss of a whole fold at theta, and its per-index breakdown.
  virtual double fold_loss(const Eigen::VectorXd& theta, const Fold& fold) const = 0;
  virtual std::vector<double> point_losses(const Eigen::VectorXd& theta, const Fold& fold) const = 0;

 protected:
  const Model& model_;
  const StructuredDataset& data_;
};

class LwcvObjective final : public Objective {
 public:
  LwcvObjective(const Model& model, const StructuredDataset& data, Index structure, Scheme scheme);

  WeightTarget target() const override { return WeightTarget::WithinStructure; }
  Index num_weights() const override { return data_.structures[static_cast<std::size_t>(structure_)].length(); }
  Scheme scheme() const { return scheme_; }
  Index structure() const { return structure_; }

  double eval(std::span<const double> t, std::span<const double> w) const override { return run(t, w); }
  Dual eval(std::span<const Dual> t, std::span<const double> w) const override { return run(t, w); }
  Dual2 eval(std::span<const Dual2> t, std::span<const double> w) const override { return run(t, w); }
  Dual2 eval(std::span<const Dual2> t, std::span<const Dual2> w) const override { return run(t, w); }

  Eigen::MatrixXd jacobian_at(const Eigen::VectorXd& theta, const Eigen::VectorXd& w, int threads) const override;

  // -[log p(x; theta, 1) - log p(x; theta, w_o)]
  double fold_loss(const Eigen::VectorXd& theta, const Fold& fold) const override;
  // -[log p(x; theta, w_o + e_t) - log p(x; theta, w_o)] for each t in o
  std::vector<double> point_losses(const Eigen::VectorXd& theta, const Fold& fold) const override;

 private:
  template <class S, class W>
  S run(std::span<const S> t, std::span<const W> w) const {
    return model_.log_likelihood(data_.structures[static_cast<std::size_t>(structure_)], t, w, scheme_) +
           model_.log_prior(t);
  }

  Index structure_;
  Scheme scheme_;
};

class LscvObjective final : public Objective {
 public:
  LscvObjective(const Model& model, const StructuredDataset& data);

  WeightTarget target() const override { return WeightTarget::Structure; }
  Index num_weights() const override { return data_.size(); }

  double eval(std::span<const double> t, std::span<const double> w) const override { return run(t, w); }
  Dual eval(std::span<const Dual> t, std::span<const double> w) const override { return run(t, w); }
  Dual2 eval(std::span<const Dual2> t, std::span<const double> w) const override { return run(t, w); }
  Dual2 eval(std::span<const Dual2> t, std::span<const Dual2> w) const override { return run(t, w); }

  // Per-structure Hessians summed in index order; column n of J is the
  // gradient of log p(x_n; theta).
  Eigen::MatrixXd hessian_at(const Eigen::VectorXd& theta, const Eigen::VectorXd& w, int threads) const override;
  Eigen::MatrixXd jacobian_at(const Eigen::VectorXd& theta, const Eigen::VectorXd& w, int threads) const override;

  // sum over n in o of -log p(x_n; theta)
  double fold_loss(const Eigen::VectorXd& theta, const Fold& fold) const override;
  std::vector<double> point_losses(const Eigen::VectorXd& theta, const Fold& fold) const override;

 private:
  template <class S, class W>
  S run(std::span<const S> t, std::span<const W> w) const {
    S out = model_.log_prior(t);
    for (std::size_t n = 0; n < data_.structures.size(); ++n) {
      const auto& s = data_.structures[n];
      const std::vector<double> ones(static_cast<std::size_t>(s.length()), 1.0);
      out += w[n] * model_.log_likelihood(s, t, std::span<const double>(ones), Scheme::A);
    }
    return out;
  }
};

}  // namespace structcv
