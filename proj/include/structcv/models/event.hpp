#pragma once

// Two-state event-count HMM for traffic-style counts. Background counts are
// Poisson(lambda_t) with lambda_t = lambda0 * delta_{d_t} for day-of-week
// index d_t; during an event (z = 1) a NegBinomial(a, b / (1 + b)) excess is
// added and marginalized by finite convolution.
//
// theta (D = 11): log lambda0, six free day logits (delta = 7 * softmax of
// (logits, 0)), log a, log b, logit A00, logit A11. The initial state is
// uniform.

#include <algorithm>

#include "structcv/model.hpp"

namespace structcv {

struct EventConfig {
  bool prior = true;
  double lambda_shape = 2.0, lambda_rate = 0.05;
  double a_shape = 2.0, a_rate = 0.2;
  double b_shape = 2.0, b_rate = 0.2;
  double stay0_a = 20.0, stay0_b = 2.0;  // Beta on A00
  double stay1_a = 5.0, stay1_b = 2.0;   // Beta on A11
  Index steps_per_day = 288;             // simulation only
};

// log Poisson(x; lambda) (z = 0) or the Poisson + NegBinomial convolution
// (z = 1), from log lambda, log a and log b.
template <class S>
S event_emission_logpsi(long x, int z, const S& log_lambda, const S& log_a, const S& log_b) {
  if (x < 0) throw ArgumentError("event emission: negative count");
  const S lambda = exp(log_lambda);
  if (z == 0) return static_cast<double>(x) * log_lambda - lambda - log_factorial(x);
  const S a = exp(log_a);
  const S log_1mp = -softplus(log_b);    // log(1 - p), p = b / (1 + b)
  const S log_p = log_b + log_1mp;
  const S base = a * log_1mp - lambda;
  std::vector<S> terms(static_cast<std::size_t>(x + 1));
  S rising(0.0);  // log Gamma(e + a) - log Gamma(a)
  for (long e = 0; e <= x; ++e) {
    if (e > 0) rising += log(a + static_cast<double>(e - 1));
    terms[static_cast<std::size_t>(e)] = static_cast<double>(x - e) * log_lambda - log_factorial(x - e) + rising -
                                         log_factorial(e) + static_cast<double>(e) * log_p;
  }
  return log_sum_exp(terms) + base;
}

class EventModel final : public ChainModelBase<EventModel> {
 public:
  explicit EventModel(EventConfig config = {});

  std::string family() const override { return "event"; }
  Index num_params() const override { return 11; }
  const EventConfig& config() const { return cfg_; }

  void check(const Structure& s) const override;
  NaturalParams unpack(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd pack(const NaturalParams& natural) const override;
  Eigen::VectorXd default_truth() const override;
  Eigen::VectorXd initial_params(const StructuredDataset& data) const override;
  StructuredDataset simulate(const Eigen::VectorXd& theta, const SimulationSpec& spec,
                             std::uint64_t seed) const override;

  template <class S>
  std::vector<S> log_delta(std::span<const S> th) const {
    auto ld = log_softmax_gauge<S>(th.subspan(1, 6));
    for (auto& v : ld) v += std::log(7.0);
    return ld;
  }

  template <class S>
  ChainPotentials<S> potentials(const Structure& s, std::span<const S> th) const {
    const Index T = s.length();
    ChainPotentials<S> p;
    p.K = 2;
    p.log_init = {S(-std::log(2.0)), S(-std::log(2.0))};
    p.log_trans = {-softplus(-th[9]), -softplus(th[9]), -softplus(th[10]), -softplus(-th[10])};
    const auto ld = log_delta(th);

    // The emission depends only on (day, count): evaluate each pair once.
    long max_count = 0;
    for (Index t = 0; t < T; ++t) max_count = std::max(max_count, s.count(t));
    const auto width = static_cast<std::size_t>(max_count + 1);
    std::vector<int> used(7 * width, 0);
    for (Index t = 0; t < T; ++t) used[static_cast<std::size_t>(s.day[t]) * width + static_cast<std::size_t>(s.count(t))] = 1;
    std::vector<S> cache0(used.size()), cache1(used.size());
    for (std::size_t key = 0; key < used.size(); ++key) {
      if (!used[key]) continue;
      const S log_lambda = th[0] + ld[key / width];
      const auto x = static_cast<long>(key % width);
      cache0[key] = event_emission_logpsi<S>(x, 0, log_lambda, th[7], th[8]);
      cache1[key] = event_emission_logpsi<S>(x, 1, log_lambda, th[7], th[8]);
    }
    p.log_emit.resize(static_cast<std::size_t>(2 * T));
    for (Index t = 0; t < T; ++t) {
      const std::size_t key = static_cast<std::size_t>(s.day[t]) * width + static_cast<std::size_t>(s.count(t));
      p.log_emit[2 * t] = cache0[key];
      p.log_emit[2 * t + 1] = cache1[key];
    }
    return p;
  }

  template <class S>
  S prior(std::span<const S> th) const {
    if (!cfg_.prior) return S(0.0);
    S out = log_gamma_density(exp(th[0]), th[0], cfg_.lambda_shape, cfg_.lambda_rate);
    out += log_gamma_density(exp(th[7]), th[7], cfg_.a_shape, cfg_.a_rate);
    out += log_gamma_density(exp(th[8]), th[8], cfg_.b_shape, cfg_.b_rate);
    out += log_beta_density(S(-softplus(-th[9])), S(-softplus(th[9])), cfg_.stay0_a, cfg_.stay0_b);
    out += log_beta_density(S(-softplus(-th[10])), S(-softplus(th[10])), cfg_.stay1_a, cfg_.stay1_b);
    // Dirichlet(1, ..., 1) on delta / 7 is the constant log Gamma(7).
    out += lgamma_checked(7.0);
    return out;
  }

 private:
  EventConfig cfg_;
};

}  // namespace structcv
