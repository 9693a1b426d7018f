#include "structcv/model.hpp"

#include <cmath>

namespace structcv {

Eigen::VectorXd gauge_logits(const Eigen::VectorXd& probs) {
  const Index K = probs.size();
  if (K < 1 || !(probs.array() > 0.0).all()) throw ArgumentError("gauge_logits: probabilities must be positive");
  Eigen::VectorXd out(K - 1);
  for (Index k = 0; k + 1 < K; ++k) out[k] = std::log(probs[k]) - std::log(probs[K - 1]);
  return out;
}

double lgamma_checked(double x) {
  int sign = 0;
  const double v = lgamma_r(x, &sign);
  if (!std::isfinite(v)) throw NumericalError("log-gamma of " + std::to_string(x) + " is not finite");
  return v;
}

double log_factorial(long n) {
  if (n < 0) throw ArgumentError("log_factorial: negative argument");
  static const std::vector<double> table = [] {
    std::vector<double> t(4096);
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  if (static_cast<std::size_t>(n) < table.size()) return table[static_cast<std::size_t>(n)];
  return lgamma_checked(static_cast<double>(n) + 1.0);
}

}  // namespace structcv
