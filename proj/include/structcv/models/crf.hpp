#pragma once

// Linear-chain CRF p(z | x) with linear emission scores over F real features
// per position:
//   score(z) = sum_t W_{z_t} . x_t + start_{z_0} + sum_t trans(z_{t-1}, z_t)
//   log p(z | x) = score(z) - log Z(x)
// theta = (W row-major K x F, trans K x K, start K), D = K F + K^2 + K, with
// an isotropic Gaussian prior of precision tau.

#include "structcv/model.hpp"

namespace structcv {

struct CrfConfig {
  Index K = 3;
  Index F = 5;
  double precision = 1.0;  // tau; 0 disables the prior
  Index vocabulary = 200;  // simulation only: token ids hashed to features
};

class CrfModel final : public ModelBase<CrfModel> {
 public:
  explicit CrfModel(CrfConfig config = {});

  std::string family() const override { return "crf"; }
  Index num_params() const override { return cfg_.K * cfg_.F + cfg_.K * cfg_.K + cfg_.K; }
  bool conditional() const override { return true; }
  const CrfConfig& config() const { return cfg_; }

  void check(const Structure& s) const override;
  NaturalParams unpack(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd pack(const NaturalParams& natural) const override;
  Eigen::VectorXd default_truth() const override;
  Eigen::VectorXd initial_params(const StructuredDataset& data) const override;
  StructuredDataset simulate(const Eigen::VectorXd& theta, const SimulationSpec& spec,
                             std::uint64_t seed) const override;

  // Unnormalized chain factors: start scores, transition scores, W x_t.
  template <class S>
  ChainPotentials<S> potentials(const Structure& s, std::span<const S> th) const {
    const Index K = cfg_.K, F = cfg_.F, T = s.length();
    ChainPotentials<S> p;
    p.K = K;
    p.normalized_prior = false;
    p.log_trans.assign(th.begin() + K * F, th.begin() + K * F + K * K);
    p.log_init.assign(th.begin() + K * F + K * K, th.begin() + K * F + K * K + K);
    p.log_emit.assign(static_cast<std::size_t>(T * K), S(0.0));
    for (Index t = 0; t < T; ++t) {
      for (Index k = 0; k < K; ++k) {
        S v(0.0);
        for (Index f = 0; f < F; ++f) v += th[k * F + f] * s.x(t, f);
        p.log_emit[t * K + k] = v;
      }
    }
    return p;
  }

  // log p(z | x; theta); within-structure weights do not apply to CRFs.
  template <class S, class W>
  S likelihood(const Structure& s, std::span<const S> th, std::span<const W>, Scheme) const {
    if (!s.has_labels()) throw ArgumentError("crf: every position needs a label");
    const auto p = potentials<S>(s, th);
    const Index T = s.length();
    S score = p.log_init[s.labels[0]];
    for (Index t = 0; t < T; ++t) {
      score += p.emit(t, s.labels[t]);
      if (t > 0) score += p.trans(s.labels[t - 1], s.labels[t]);
    }
    const std::vector<double> ones(static_cast<std::size_t>(T), 1.0);
    return score - detail::forward_pass<S, double>(p, std::span<const double>(ones), Scheme::A, true);
  }

  template <class S>
  S prior(std::span<const S> th) const {
    if (cfg_.precision == 0.0) return S(0.0);
    S ss(0.0);
    for (const auto& v : th) ss += v * v;
    return -0.5 * cfg_.precision * ss +
           0.5 * static_cast<double>(th.size()) * std::log(cfg_.precision / (2.0 * M_PI));
  }

 private:
  CrfConfig cfg_;
};

// Hashed feature vector of a token id: entries in {-1, 0, 1}.
Eigen::VectorXd hashed_token_features(std::uint64_t token, Index F);

}  // namespace structcv
