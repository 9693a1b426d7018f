#include "structcv/chain.hpp"

namespace structcv {

Eigen::MatrixXd forward_table(const ChainPotentials<double>& pot, const Eigen::VectorXd& w, Scheme scheme) {
  pot.validate();
  std::vector<double> alpha;
  detail::forward_pass<double, double>(pot, std::span<const double>(w.data(), static_cast<std::size_t>(w.size())),
                                       scheme, true, &alpha);
  Eigen::MatrixXd out(pot.length(), pot.K);
  for (Index t = 0; t < pot.length(); ++t) {
    for (Index k = 0; k < pot.K; ++k) out(t, k) = alpha[static_cast<std::size_t>(t * pot.K + k)];
  }
  return out;
}

double conditional_loss(const ChainPotentials<double>& pot, const Fold& fold, Scheme scheme) {
  if (fold.empty()) return 0.0;
  const Index T = pot.length();
  const Eigen::VectorXd full = Eigen::VectorXd::Ones(T);
  const WeightVector held = fold_to_weights(fold, T);
  return -(weighted_forward(pot, full, scheme) - weighted_forward(pot, held.values, scheme));
}

std::vector<double> point_losses(const ChainPotentials<double>& pot, const Fold& fold, Scheme scheme) {
  const Index T = pot.length();
  const WeightVector held = fold_to_weights(fold, T);
  const double base = weighted_forward(pot, held.values, scheme);
  std::vector<double> out;
  out.reserve(fold.indices().size());
  Eigen::VectorXd w = held.values;
  for (Index t : fold.indices()) {
    w[t] = 1.0;
    out.push_back(-(weighted_forward(pot, w, scheme) - base));
    w[t] = 0.0;
  }
  return out;
}

}  // namespace structcv
