#pragma once

// Poisson mixture over a graph with an Ising-style latent field:
//   log p(x, z) = sum_t log Poisson(x_t; lambda_{z_t})
//               + beta * sum_t sum_{t' adjacent to t} 1{z_t = z_t'} - log Z(beta)
// The double sum visits each edge twice, so every edge carries 2 beta.
// State 0 is the low level (z = -1), state 1 the high level (z = +1).
// theta = (log lambda_{-1}, log lambda_1); beta is a fixed hyperparameter.

#include <list>
#include <mutex>

#include "structcv/model.hpp"

namespace structcv {

struct SpatialConfig {
  double beta = 0.5;
  bool prior = false;
  double gamma_shape = 2.0, gamma_rate = 0.2;
};

class SpatialModel final : public ModelBase<SpatialModel> {
 public:
  explicit SpatialModel(SpatialConfig config = {});

  std::string family() const override { return "spatial"; }
  Index num_params() const override { return 2; }
  bool chain_structured() const override { return false; }
  const SpatialConfig& config() const { return cfg_; }

  void check(const Structure& s) const override;
  NaturalParams unpack(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd pack(const NaturalParams& natural) const override;
  Eigen::VectorXd default_truth() const override;
  Eigen::VectorXd initial_params(const StructuredDataset& data) const override;
  StructuredDataset simulate(const Eigen::VectorXd& theta, const SimulationSpec& spec,
                             std::uint64_t seed) const override;

  template <class S>
  GraphPotentials<S> potentials(const Structure& s, std::span<const S> th) const {
    GraphPotentials<S> p;
    p.K = 2;
    p.graph = s.graph;
    p.normalized_prior = false;
    const S rate[2] = {exp(th[0]), exp(th[1])};
    p.log_emit.resize(static_cast<std::size_t>(2 * s.length()));
    for (Index t = 0; t < s.length(); ++t) {
      const long x = s.count(t);
      for (int k = 0; k < 2; ++k) {
        p.log_emit[2 * t + k] = static_cast<double>(x) * th[k] - rate[k] - log_factorial(x);
      }
    }
    const double c = 2.0 * cfg_.beta;
    for (std::size_t e = 0; e < s.graph.edges.size(); ++e) {
      p.log_pair.insert(p.log_pair.end(), {S(c), S(0.0), S(0.0), S(c)});
    }
    return p;
  }

  template <class S, class W>
  S likelihood(const Structure& s, std::span<const S> th, std::span<const W> w, Scheme scheme) const {
    return eliminate_weighted<S, W>(potentials<S>(s, th), w, scheme, order_for(s.graph));
  }

  template <class S>
  S prior(std::span<const S> th) const {
    if (!cfg_.prior) return S(0.0);
    return log_gamma_density(exp(th[0]), th[0], cfg_.gamma_shape, cfg_.gamma_rate) +
           log_gamma_density(exp(th[1]), th[1], cfg_.gamma_shape, cfg_.gamma_rate);
  }

 private:
  // One min-fill order per graph; the graph never changes across folds.
  const std::vector<Index>& order_for(const Graph& g) const;

  SpatialConfig cfg_;
  mutable std::mutex order_mutex_;
  mutable std::list<std::pair<Graph, std::vector<Index>>> orders_;  // stable references
};

}  // namespace structcv
