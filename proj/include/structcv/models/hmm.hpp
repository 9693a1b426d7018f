#pragma once

// K-state HMMs with categorical, Poisson, Gaussian or AR(p)-Gaussian
// emissions.
//
// Parameter layout: K-1 initial logits, then K rows of K-1 transition logits
// (last entry of each row gauge-fixed to 0), then the emission block:
//   categorical  K rows of V-1 symbol logits
//   poisson      K log rates
//   gaussian     K*R means (state-major), then K log variances (isotropic)
//   ar           per state: p matrices B_{k,m} (R x R, row-major), offset b_k;
//                then one shared log sigma^2
// AR lags before t = 0 are taken as zero vectors.

#include "structcv/model.hpp"

namespace structcv {

enum class Emission { Categorical, Poisson, Gaussian, AR };

std::string to_string(Emission e);
Emission parse_emission(const std::string& s);

struct HmmConfig {
  Emission emission = Emission::Gaussian;
  Index K = 2;
  Index R = 1;           // observation dimension (gaussian, ar)
  Index categories = 2;  // symbols (categorical)
  Index order = 0;       // p (ar)
  // Optional conjugate-style priors; off means maximum likelihood.
  bool prior = false;
  double dirichlet = 2.0;     // on pi, rows of A, categorical rows
  double gamma_shape = 2.0;   // on Poisson rates and Gaussian/AR precisions
  double gamma_rate = 1.0;
  double normal_sd = 10.0;    // on Gaussian means (AR coefficients use 1)
};

class HmmModel final : public ChainModelBase<HmmModel> {
 public:
  explicit HmmModel(HmmConfig config);

  std::string family() const override { return "hmm-" + to_string(cfg_.emission); }
  Index num_params() const override { return num_params_; }
  const HmmConfig& config() const { return cfg_; }
  Index emission_offset() const { return (cfg_.K - 1) + cfg_.K * (cfg_.K - 1); }

  void check(const Structure& s) const override;
  NaturalParams unpack(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd pack(const NaturalParams& natural) const override;
  Eigen::VectorXd default_truth() const override;
  Eigen::VectorXd initial_params(const StructuredDataset& data) const override;
  StructuredDataset simulate(const Eigen::VectorXd& theta, const SimulationSpec& spec,
                             std::uint64_t seed) const override;

  template <class S>
  ChainPotentials<S> potentials(const Structure& s, std::span<const S> th) const {
    const Index K = cfg_.K;
    const Index T = s.length();
    ChainPotentials<S> p;
    p.K = K;
    p.log_init = log_softmax_gauge<S>(th.subspan(0, static_cast<std::size_t>(K - 1)));
    for (Index k = 0; k < K; ++k) {
      const auto row = log_softmax_gauge<S>(th.subspan(static_cast<std::size_t>(K - 1 + k * (K - 1)),
                                                       static_cast<std::size_t>(K - 1)));
      p.log_trans.insert(p.log_trans.end(), row.begin(), row.end());
    }
    p.log_emit.assign(static_cast<std::size_t>(T * K), S(0.0));
    const auto e = th.subspan(static_cast<std::size_t>(emission_offset()));
    switch (cfg_.emission) {
      case Emission::Categorical: {
        const Index V = cfg_.categories;
        std::vector<std::vector<S>> logp;
        for (Index k = 0; k < K; ++k) {
          logp.push_back(log_softmax_gauge<S>(e.subspan(static_cast<std::size_t>(k * (V - 1)),
                                                        static_cast<std::size_t>(V - 1))));
        }
        for (Index t = 0; t < T; ++t) {
          const long v = s.count(t);
          for (Index k = 0; k < K; ++k) p.log_emit[t * K + k] = logp[k][static_cast<std::size_t>(v)];
        }
        break;
      }
      case Emission::Poisson: {
        std::vector<S> rate;
        for (Index k = 0; k < K; ++k) rate.push_back(exp(e[k]));
        for (Index t = 0; t < T; ++t) {
          const long x = s.count(t);
          for (Index k = 0; k < K; ++k) {
            p.log_emit[t * K + k] = static_cast<double>(x) * e[k] - rate[k] - log_factorial(x);
          }
        }
        break;
      }
      case Emission::Gaussian: {
        const Index R = cfg_.R;
        for (Index k = 0; k < K; ++k) {
          const S& logvar = e[K * R + k];
          const S prec = exp(-logvar);
          const S norm = -0.5 * static_cast<double>(R) * (std::log(2.0 * M_PI) + logvar);
          for (Index t = 0; t < T; ++t) {
            S ss(0.0);
            for (Index r = 0; r < R; ++r) {
              const S d = s.x(t, r) - e[k * R + r];
              ss += d * d;
            }
            p.log_emit[t * K + k] = norm - 0.5 * prec * ss;
          }
        }
        break;
      }
      case Emission::AR: {
        const Index R = cfg_.R;
        const Index P = cfg_.order;
        const Index block = P * R * R + R;
        const S& logvar = e[K * block];
        const S prec = exp(-logvar);
        const S norm = -0.5 * static_cast<double>(R) * (std::log(2.0 * M_PI) + logvar);
        std::vector<S> mean(static_cast<std::size_t>(R));
        for (Index k = 0; k < K; ++k) {
          const auto bk = e.subspan(static_cast<std::size_t>(k * block), static_cast<std::size_t>(block));
          for (Index t = 0; t < T; ++t) {
            for (Index r = 0; r < R; ++r) mean[r] = bk[P * R * R + r];
            for (Index m = 1; m <= P && t - m >= 0; ++m) {
              for (Index r = 0; r < R; ++r) {
                for (Index c = 0; c < R; ++c) {
                  mean[r] += bk[(m - 1) * R * R + r * R + c] * s.x(t - m, c);
                }
              }
            }
            S ss(0.0);
            for (Index r = 0; r < R; ++r) {
              const S d = s.x(t, r) - mean[r];
              ss += d * d;
            }
            p.log_emit[t * K + k] = norm - 0.5 * prec * ss;
          }
        }
        break;
      }
    }
    return p;
  }

  template <class S>
  S prior(std::span<const S> th) const {
    if (!cfg_.prior) return S(0.0);
    const Index K = cfg_.K;
    S out = log_dirichlet_density(log_softmax_gauge<S>(th.subspan(0, static_cast<std::size_t>(K - 1))), cfg_.dirichlet);
    for (Index k = 0; k < K; ++k) {
      out += log_dirichlet_density(log_softmax_gauge<S>(th.subspan(static_cast<std::size_t>(K - 1 + k * (K - 1)),
                                                                  static_cast<std::size_t>(K - 1))),
                                   cfg_.dirichlet);
    }
    const auto e = th.subspan(static_cast<std::size_t>(emission_offset()));
    switch (cfg_.emission) {
      case Emission::Categorical: {
        const Index V = cfg_.categories;
        for (Index k = 0; k < K; ++k) {
          out += log_dirichlet_density(
              log_softmax_gauge<S>(e.subspan(static_cast<std::size_t>(k * (V - 1)), static_cast<std::size_t>(V - 1))),
              cfg_.dirichlet);
        }
        break;
      }
      case Emission::Poisson:
        for (Index k = 0; k < K; ++k) out += log_gamma_density(exp(e[k]), e[k], cfg_.gamma_shape, cfg_.gamma_rate);
        break;
      case Emission::Gaussian: {
        const Index R = cfg_.R;
        for (Index i = 0; i < K * R; ++i) out += log_normal_density(e[i], 0.0, cfg_.normal_sd);
        for (Index k = 0; k < K; ++k) {
          const S& logvar = e[K * R + k];
          out += log_gamma_density(exp(-logvar), S(-logvar), cfg_.gamma_shape, cfg_.gamma_rate);
        }
        break;
      }
      case Emission::AR: {
        const Index block = cfg_.order * cfg_.R * cfg_.R + cfg_.R;
        for (Index i = 0; i < K * block; ++i) out += log_normal_density(e[i], 0.0, 1.0);
        const S& logvar = e[K * block];
        out += log_gamma_density(exp(-logvar), S(-logvar), cfg_.gamma_shape, cfg_.gamma_rate);
        break;
      }
    }
    return out;
  }

 private:
  HmmConfig cfg_;
  Index num_params_ = 0;
};

}  // namespace structcv
