#pragma once

// Model interface shared by every family. Log likelihoods are generic over
// the autodiff scalar; the virtual overloads below are filled in by
// ModelBase from a derived class's templated implementation.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "structcv/chain.hpp"
#include "structcv/core.hpp"
#include "structcv/dual.hpp"
#include "structcv/errors.hpp"
#include "structcv/graph.hpp"

namespace structcv {

// Named blocks of natural (constrained) parameters, e.g. "pi", "A", "rate".
using NaturalParams = std::map<std::string, Eigen::MatrixXd>;

struct SimulationSpec {
  Index num_structures = 1;
  Index length = 100;          // per structure; CRFs draw lengths in [min_length, length]
  Index min_length = 0;        // 0 means fixed length
  Index grid_rows = 0;         // spatial models
  Index grid_cols = 0;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual std::string family() const = 0;
  virtual Index num_params() const = 0;
  // CRFs model p(z | x); their likelihood ignores within-structure weights.
  virtual bool conditional() const { return false; }
  // Whether the within-structure likelihood runs the chain recursion.
  virtual bool chain_structured() const { return true; }

  // Throws ArgumentError when the structure does not fit this model.
  virtual void check(const Structure& s) const = 0;

  // log p(x; theta, w) (or log p(z | x; theta) for conditional models).
  virtual double log_likelihood(const Structure& s, std::span<const double> theta, std::span<const double> w,
                                Scheme scheme) const = 0;
  virtual Dual log_likelihood(const Structure& s, std::span<const Dual> theta, std::span<const double> w,
                              Scheme scheme) const = 0;
  virtual Dual2 log_likelihood(const Structure& s, std::span<const Dual2> theta, std::span<const double> w,
                               Scheme scheme) const = 0;
  virtual Dual2 log_likelihood(const Structure& s, std::span<const Dual2> theta, std::span<const Dual2> w,
                               Scheme scheme) const = 0;

  virtual double log_prior(std::span<const double> theta) const = 0;
  virtual Dual log_prior(std::span<const Dual> theta) const = 0;
  virtual Dual2 log_prior(std::span<const Dual2> theta) const = 0;

  // d^2 log p(x; theta, w) / dtheta dw (D x T) when the family has a faster
  // route than generic hyper-dual passes.
  virtual std::optional<Eigen::MatrixXd> weight_jacobian(const Structure&, const Eigen::VectorXd&,
                                                         std::span<const double>, Scheme) const {
    return std::nullopt;
  }

  virtual NaturalParams unpack(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd pack(const NaturalParams& natural) const = 0;

  // Parameters used to simulate data when the config does not give any.
  virtual Eigen::VectorXd default_truth() const = 0;
  // Deterministic data-driven starting point for fitting.
  virtual Eigen::VectorXd initial_params(const StructuredDataset& data) const = 0;
  virtual StructuredDataset simulate(const Eigen::VectorXd& theta, const SimulationSpec& spec,
                                     std::uint64_t seed) const = 0;

  // Convenience wrappers on plain vectors.
  double log_likelihood(const Structure& s, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                        Scheme scheme) const {
    return log_likelihood(s, std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())),
                          std::span<const double>(w.data(), static_cast<std::size_t>(w.size())), scheme);
  }
  double log_likelihood(const Structure& s, const Eigen::VectorXd& theta) const {
    return log_likelihood(s, theta, Eigen::VectorXd::Ones(s.length()), Scheme::A);
  }
  double log_prior(const Eigen::VectorXd& theta) const {
    return log_prior(std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
  }

 protected:
  void check_size(std::size_t n) const {
    if (static_cast<Index>(n) != num_params()) {
      throw ArgumentError(family() + ": expected " + std::to_string(num_params()) + " parameters, got " +
                          std::to_string(n));
    }
  }
};

// Derived must provide
//   template <class S, class W> S likelihood(const Structure&, span<const S>, span<const W>, Scheme) const;
//   template <class S> S prior(span<const S>) const;
template <class Derived>
class ModelBase : public Model {
 public:
  double log_likelihood(const Structure& s, std::span<const double> t, std::span<const double> w,
                        Scheme scheme) const override {
    return run<double, double>(s, t, w, scheme);
  }
  Dual log_likelihood(const Structure& s, std::span<const Dual> t, std::span<const double> w,
                      Scheme scheme) const override {
    return run<Dual, double>(s, t, w, scheme);
  }
  Dual2 log_likelihood(const Structure& s, std::span<const Dual2> t, std::span<const double> w,
                       Scheme scheme) const override {
    return run<Dual2, double>(s, t, w, scheme);
  }
  Dual2 log_likelihood(const Structure& s, std::span<const Dual2> t, std::span<const Dual2> w,
                       Scheme scheme) const override {
    return run<Dual2, Dual2>(s, t, w, scheme);
  }
  double log_prior(std::span<const double> t) const override { return prior_checked<double>(t); }
  Dual log_prior(std::span<const Dual> t) const override { return prior_checked<Dual>(t); }
  Dual2 log_prior(std::span<const Dual2> t) const override { return prior_checked<Dual2>(t); }
  using Model::log_likelihood;
  using Model::log_prior;

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }

  template <class S, class W>
  S run(const Structure& s, std::span<const S> t, std::span<const W> w, Scheme scheme) const {
    check_size(t.size());
    if (static_cast<Index>(w.size()) != s.length()) {
      throw ArgumentError(family() + ": weight length " + std::to_string(w.size()) + " does not match T=" +
                          std::to_string(s.length()));
    }
    return self().template likelihood<S, W>(s, t, w, scheme);
  }

  template <class S>
  S prior_checked(std::span<const S> t) const {
    check_size(t.size());
    return self().template prior<S>(t);
  }
};

// Chain families: Derived provides
//   template <class S> ChainPotentials<S> potentials(const Structure&, span<const S>) const;
template <class Derived>
class ChainModelBase : public ModelBase<Derived> {
 public:
  template <class S, class W>
  S likelihood(const Structure& s, std::span<const S> theta, std::span<const W> w, Scheme scheme) const {
    if (!s.graph.is_path()) throw ArgumentError(this->family() + ": weighted forward needs a chain structure");
    return weighted_forward<S, W>(static_cast<const Derived&>(*this).template potentials<S>(s, theta), w, scheme);
  }

  // One Dual pass per parameter through the adjoint of the weighted recursion.
  std::optional<Eigen::MatrixXd> weight_jacobian(const Structure& s, const Eigen::VectorXd& theta,
                                                 std::span<const double> w, Scheme scheme) const override {
    this->check_size(static_cast<std::size_t>(theta.size()));
    if (!s.graph.is_path()) throw ArgumentError(this->family() + ": weighted forward needs a chain structure");
    if (static_cast<Index>(w.size()) != s.length()) throw ArgumentError("weight length does not match T");
    const Index D = theta.size();
    Eigen::MatrixXd J(D, s.length());
    std::vector<Dual> lifted(static_cast<std::size_t>(D));
    for (Index d = 0; d < D; ++d) {
      for (Index i = 0; i < D; ++i) lifted[i] = Dual(theta[i], i == d ? 1.0 : 0.0);
      const auto pot = static_cast<const Derived&>(*this).template potentials<Dual>(s, std::span<const Dual>(lifted));
      const std::vector<Dual> g = weighted_forward_weight_gradient<Dual>(pot, w, scheme);
      for (Index t = 0; t < s.length(); ++t) {
        if (!std::isfinite(g[t].du)) throw NumericalError("weight_jacobian: non-finite entry", d);
        J(d, t) = g[t].du;
      }
    }
    return J;
  }
};

// ---- shared parameter transforms and prior densities ----

// log softmax of (logits..., 0): K values from K-1 free logits.
template <class S>
std::vector<S> log_softmax_gauge(std::span<const S> logits) {
  std::vector<S> full(logits.begin(), logits.end());
  full.emplace_back(0.0);
  const S lse = log_sum_exp(full);
  for (auto& v : full) v -= lse;
  return full;
}

// Inverse of log_softmax_gauge on a probability vector.
Eigen::VectorXd gauge_logits(const Eigen::VectorXd& probs);

double lgamma_checked(double x);

template <class S>
S log_gamma_density(const S& x, const S& log_x, double shape, double rate) {
  return S((shape - 1.0)) * log_x - rate * x + (shape * std::log(rate) - lgamma_checked(shape));
}

template <class S>
S log_beta_density(const S& log_p, const S& log_1mp, double a, double b) {
  return (a - 1.0) * log_p + (b - 1.0) * log_1mp - (lgamma_checked(a) + lgamma_checked(b) - lgamma_checked(a + b));
}

template <class S>
S log_normal_density(const S& x, double mean, double sd) {
  const S z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
}

// Dirichlet(alpha) on a log-probability vector.
template <class S>
S log_dirichlet_density(const std::vector<S>& log_p, double alpha) {
  const auto K = static_cast<double>(log_p.size());
  S out(lgamma_checked(K * alpha) - K * lgamma_checked(alpha));
  for (const auto& lp : log_p) out += (alpha - 1.0) * lp;
  return out;
}

// log(n!) for n >= 0 (table lookup below 4096).
double log_factorial(long n);

}  // namespace structcv
