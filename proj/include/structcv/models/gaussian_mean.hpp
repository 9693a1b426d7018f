#pragma once

// iid Gaussian observations with unknown mean and unit variance, no latents:
//   log p(x; theta, w) = sum_t w_t log N(x_t; theta, I)
// plus an optional N(0, I / precision) prior. The closed-form toy behind the
// leave-one-out and quadratic checks.

#include "structcv/model.hpp"

namespace structcv {

struct GaussianMeanConfig {
  Index R = 1;
  double precision = 0.0;  // 0 gives a flat prior
};

class GaussianMeanModel final : public ModelBase<GaussianMeanModel> {
 public:
  explicit GaussianMeanModel(GaussianMeanConfig config = {});

  std::string family() const override { return "gaussian-mean"; }
  Index num_params() const override { return cfg_.R; }
  const GaussianMeanConfig& config() const { return cfg_; }

  void check(const Structure& s) const override;
  NaturalParams unpack(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd pack(const NaturalParams& natural) const override;
  Eigen::VectorXd default_truth() const override;
  Eigen::VectorXd initial_params(const StructuredDataset& data) const override;
  StructuredDataset simulate(const Eigen::VectorXd& theta, const SimulationSpec& spec,
                             std::uint64_t seed) const override;

  template <class S, class W>
  S likelihood(const Structure& s, std::span<const S> th, std::span<const W> w, Scheme) const {
    const double c = -0.5 * static_cast<double>(cfg_.R) * std::log(2.0 * M_PI);
    W total(0.0);
    S out(0.0);
    for (Index t = 0; t < s.length(); ++t) {
      S q(0.0);
      for (Index r = 0; r < cfg_.R; ++r) {
        const S d = s.x(t, r) - th[static_cast<std::size_t>(r)];
        q += d * d;
      }
      out += w[static_cast<std::size_t>(t)] * (-0.5 * q);
      total += w[static_cast<std::size_t>(t)];
    }
    return out + total * c;
  }

  template <class S>
  S prior(std::span<const S> th) const {
    if (cfg_.precision <= 0.0) return S(0.0);
    S q(0.0);
    for (const auto& v : th) q += v * v;
    return -0.5 * cfg_.precision * q +
           0.5 * static_cast<double>(cfg_.R) * std::log(cfg_.precision / (2.0 * M_PI));
  }

 private:
  GaussianMeanConfig cfg_;
};

}  // namespace structcv
