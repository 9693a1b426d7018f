#include "structcv/objective.hpp"

#include "structcv/errors.hpp"
#include "structcv/parallel.hpp"

namespace structcv {

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// log p(x_n; theta) of one structure at unit weights, as a ScalarFunction.
class StructureTerm final : public ScalarFunction {
 public:
  StructureTerm(const Model& model, const Structure& s) : model_(model), s_(s), ones_(s.length(), 1.0) {}
  Index num_params() const override { return model_.num_params(); }
  Index num_weights() const override { return 0; }
  double eval(std::span<const double> t, std::span<const double>) const override { return run(t); }
  Dual eval(std::span<const Dual> t, std::span<const double>) const override { return run(t); }
  Dual2 eval(std::span<const Dual2> t, std::span<const double>) const override { return run(t); }
  Dual2 eval(std::span<const Dual2> t, std::span<const Dual2>) const override { return run(t); }

 private:
  template <class S>
  S run(std::span<const S> t) const {
    return model_.log_likelihood(s_, t, std::span<const double>(ones_), Scheme::A);
  }
  const Model& model_;
  const Structure& s_;
  std::vector<double> ones_;
};

class PriorTerm final : public ScalarFunction {
 public:
  explicit PriorTerm(const Model& model) : model_(model) {}
  Index num_params() const override { return model_.num_params(); }
  Index num_weights() const override { return 0; }
  double eval(std::span<const double> t, std::span<const double>) const override { return model_.log_prior(t); }
  Dual eval(std::span<const Dual> t, std::span<const double>) const override { return model_.log_prior(t); }
  Dual2 eval(std::span<const Dual2> t, std::span<const double>) const override { return model_.log_prior(t); }
  Dual2 eval(std::span<const Dual2> t, std::span<const Dual2>) const override { return model_.log_prior(t); }

 private:
  const Model& model_;
};

}  // namespace

Eigen::MatrixXd Objective::hessian_at(const Eigen::VectorXd& theta, const Eigen::VectorXd& w, int threads) const {
  return hessian(*this, theta, w, threads);
}

Eigen::MatrixXd Objective::jacobian_at(const Eigen::VectorXd& theta, const Eigen::VectorXd& w, int threads) const {
  return mixed_jacobian(*this, theta, w, threads);
}

LwcvObjective::LwcvObjective(const Model& model, const StructuredDataset& data, Index structure, Scheme scheme)
    : Objective(model, data), structure_(structure), scheme_(scheme) {
  data.validate();
  if (model.conditional()) throw ArgumentError(model.family() + ": within-structure CV is not defined for CRFs");
  if (structure < 0 || structure >= data.size()) throw ArgumentError("designated structure index out of range");
  model.check(data.structures[static_cast<std::size_t>(structure)]);
}

Eigen::MatrixXd LwcvObjective::jacobian_at(const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                                           int threads) const {
  if (w.size() != num_weights()) throw ArgumentError("jacobian: weight length mismatch");
  if (auto J = model_.weight_jacobian(data_.structures[static_cast<std::size_t>(structure_)], theta, as_span(w),
                                      scheme_)) {
    return *J;
  }
  return mixed_jacobian(*this, theta, w, threads);
}

double LwcvObjective::fold_loss(const Eigen::VectorXd& theta, const Fold& fold) const {
  if (fold.empty()) return 0.0;
  const auto& s = data_.structures[static_cast<std::size_t>(structure_)];
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(s.length());
  const WeightVector wo = fold_to_weights(fold, s.length());
  return -(model_.log_likelihood(s, theta, ones, scheme_) - model_.log_likelihood(s, theta, wo.values, scheme_));
}

std::vector<double> LwcvObjective::point_losses(const Eigen::VectorXd& theta, const Fold& fold) const {
  const auto& s = data_.structures[static_cast<std::size_t>(structure_)];
  const WeightVector wo = fold_to_weights(fold, s.length());
  const double base = model_.log_likelihood(s, theta, wo.values, scheme_);
  std::vector<double> out;
  Eigen::VectorXd w = wo.values;
  for (Index t : fold.indices()) {
    w[t] = 1.0;
    out.push_back(-(model_.log_likelihood(s, theta, w, scheme_) - base));
    w[t] = 0.0;
  }
  return out;
}

LscvObjective::LscvObjective(const Model& model, const StructuredDataset& data) : Objective(model, data) {
  data.validate();
  for (const auto& s : data.structures) model.check(s);
}

Eigen::MatrixXd LscvObjective::hessian_at(const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                                          int threads) const {
  if (w.size() != num_weights()) throw ArgumentError("hessian: weight length mismatch");
  const Index N = data_.size();
  std::vector<Eigen::MatrixXd> parts(static_cast<std::size_t>(N));
  const Eigen::VectorXd none(0);
  parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t n) {
    if (w[static_cast<Index>(n)] == 0.0) return;
    parts[n] = hessian(StructureTerm(model_, data_.structures[n]), theta, none);
  });
  Eigen::MatrixXd H = hessian(PriorTerm(model_), theta, none);
  for (Index n = 0; n < N; ++n) {
    if (w[n] != 0.0) H += w[n] * parts[static_cast<std::size_t>(n)];
  }
  return H;
}

Eigen::MatrixXd LscvObjective::jacobian_at(const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                                           int threads) const {
  if (w.size() != num_weights()) throw ArgumentError("jacobian: weight length mismatch");
  Eigen::MatrixXd J(theta.size(), data_.size());
  const Eigen::VectorXd none(0);
  parallel_for(static_cast<std::size_t>(data_.size()), threads, [&](std::size_t n) {
    J.col(static_cast<Index>(n)) = gradient(StructureTerm(model_, data_.structures[n]), theta, none);
  });
  return J;
}

double LscvObjective::fold_loss(const Eigen::VectorXd& theta, const Fold& fold) const {
  double out = 0.0;
  for (double v : point_losses(theta, fold)) out += v;
  return out;
}

std::vector<double> LscvObjective::point_losses(const Eigen::VectorXd& theta, const Fold& fold) const {
  std::vector<double> out;
  for (Index n : fold.indices()) {
    if (n >= data_.size()) throw ArgumentError("fold index " + std::to_string(n) + " outside the dataset");
    out.push_back(-model_.log_likelihood(data_.structures[static_cast<std::size_t>(n)], theta));
  }
  return out;
}

}  // namespace structcv
