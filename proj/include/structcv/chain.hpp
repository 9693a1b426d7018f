#pragma once

// Weighted forward algorithm for chain-structured models, in log space and
// generic over the scalar type so the same recursion runs on plain reals and
// on dual numbers.
//
// With emission log-potentials psi_t(k), initial clique log_init(k) and
// homogeneous transition log-potentials phi(l, k):
//
//   a_0(k) = w_0 psi_0(k) + c_0 log_init(k)
//   a_t(k) = w_t psi_t(k) + lse_l [ a_{t-1}(l) + c_t phi(l, k) ]
//
// where c_0 = c_t = 1 under scheme A, c_0 = w_0 and c_t = w_{t-1} w_t under
// scheme B. The weighted log marginal is lse_k a_{T-1}(k) minus the same
// recursion run without emissions (the weighted latent normalizer). For a
// self-normalized latent chain under scheme A that normalizer is exactly zero
// and is skipped.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "structcv/core.hpp"
#include "structcv/dual.hpp"
#include "structcv/errors.hpp"

namespace structcv {

template <class S>
struct ChainPotentials {
  Index K = 0;
  std::vector<S> log_init;   // K
  std::vector<S> log_trans;  // K*K, entry [prev * K + next]
  std::vector<S> log_emit;   // T*K, entry [t * K + k]
  // log_init and every transition row are normalized distributions.
  bool normalized_prior = true;

  Index length() const { return K == 0 ? 0 : static_cast<Index>(log_emit.size()) / K; }
  const S& emit(Index t, Index k) const { return log_emit[static_cast<std::size_t>(t * K + k)]; }
  const S& trans(Index prev, Index next) const { return log_trans[static_cast<std::size_t>(prev * K + next)]; }

  void validate() const {
    if (K < 1) throw ArgumentError("chain potentials need K >= 1");
    if (static_cast<Index>(log_init.size()) != K || static_cast<Index>(log_trans.size()) != K * K ||
        static_cast<Index>(log_emit.size()) % K != 0) {
      throw ArgumentError("chain potentials have inconsistent sizes");
    }
    auto check = [](const std::vector<S>& v, const char* what) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(value_of(v[i]))) {
          throw NumericalError(std::string("non-finite ") + what + " potential at entry " + std::to_string(i),
                               static_cast<long>(i));
        }
      }
    };
    check(log_init, "initial");
    check(log_trans, "transition");
    check(log_emit, "emission");
  }
};

namespace detail {

template <class W>
W chain_clique_weight(Scheme scheme, std::span<const W> w, Index t) {
  if (scheme == Scheme::A) return W(1.0);
  return t == 0 ? w[0] : w[static_cast<std::size_t>(t - 1)] * w[static_cast<std::size_t>(t)];
}

// Runs the recursion, optionally recording a_t (alpha) and the pre-emission
// message m_t in T*K tables.
template <class S, class W>
S forward_pass(const ChainPotentials<S>& pot, std::span<const W> w, Scheme scheme, bool with_emissions,
               std::vector<S>* alpha = nullptr, std::vector<S>* message = nullptr) {
  const Index T = pot.length();
  const Index K = pot.K;
  if (static_cast<Index>(w.size()) != T) {
    throw ArgumentError("weighted_forward: weight length " + std::to_string(w.size()) + " does not match T=" +
                        std::to_string(T));
  }
  if (T == 0) return S(0.0);
  if (alpha) alpha->assign(static_cast<std::size_t>(T * K), S(0.0));
  if (message) message->assign(static_cast<std::size_t>(T * K), S(0.0));

  std::vector<S> prev(static_cast<std::size_t>(K)), cur(static_cast<std::size_t>(K)), terms(static_cast<std::size_t>(K));
  const W c0 = chain_clique_weight(scheme, w, 0);
  for (Index k = 0; k < K; ++k) {
    S m = scheme == Scheme::A ? pot.log_init[k] : S(c0 * pot.log_init[k]);
    if (message) (*message)[k] = m;
    prev[k] = with_emissions ? S(m + w[0] * pot.emit(0, k)) : m;
    if (alpha) (*alpha)[k] = prev[k];
  }
  for (Index t = 1; t < T; ++t) {
    const W ct = chain_clique_weight(scheme, w, t);
    for (Index k = 0; k < K; ++k) {
      for (Index l = 0; l < K; ++l) {
        terms[l] = scheme == Scheme::A ? S(prev[l] + pot.trans(l, k)) : S(prev[l] + ct * pot.trans(l, k));
      }
      const S m = log_sum_exp(std::span<const S>(terms));
      if (message) (*message)[t * K + k] = m;
      cur[k] = with_emissions ? S(m + w[t] * pot.emit(t, k)) : m;
      if (alpha) (*alpha)[t * K + k] = cur[k];
    }
    std::swap(prev, cur);
  }
  return log_sum_exp(std::span<const S>(prev));
}

// Gradient of forward_pass's result with respect to each weight, computed by
// the adjoint (reverse) sweep of the recursion. Adjoint of a_t(k) is the
// weighted posterior marginal of z_t = k.
template <class S>
std::vector<S> forward_pass_weight_gradient(const ChainPotentials<S>& pot, std::span<const double> w, Scheme scheme,
                                            bool with_emissions) {
  const Index T = pot.length();
  const Index K = pot.K;
  std::vector<S> grad(static_cast<std::size_t>(T), S(0.0));
  if (T == 0) return grad;
  std::vector<S> alpha, message;
  const S total = forward_pass<S, double>(pot, w, scheme, with_emissions, &alpha, &message);

  std::vector<S> abar(static_cast<std::size_t>(K)), abar_prev(static_cast<std::size_t>(K));
  for (Index k = 0; k < K; ++k) abar[k] = exp(alpha[(T - 1) * K + k] - total);

  for (Index t = T - 1; t >= 1; --t) {
    if (with_emissions) {
      for (Index k = 0; k < K; ++k) grad[t] += abar[k] * pot.emit(t, k);
    }
    const double ct = detail::chain_clique_weight<double>(scheme, w, t);
    S cbar(0.0);
    for (Index l = 0; l < K; ++l) abar_prev[l] = S(0.0);
    for (Index k = 0; k < K; ++k) {
      const S& m = message[t * K + k];
      for (Index l = 0; l < K; ++l) {
        const S r = exp(alpha[(t - 1) * K + l] + ct * pot.trans(l, k) - m);
        const S flow = abar[k] * r;
        abar_prev[l] += flow;
        if (scheme == Scheme::B) cbar += flow * pot.trans(l, k);
      }
    }
    if (scheme == Scheme::B) {
      grad[t] += cbar * w[static_cast<std::size_t>(t - 1)];
      grad[t - 1] += cbar * w[static_cast<std::size_t>(t)];
    }
    std::swap(abar, abar_prev);
  }
  for (Index k = 0; k < K; ++k) {
    if (with_emissions) grad[0] += abar[k] * pot.emit(0, k);
    if (scheme == Scheme::B) grad[0] += abar[k] * pot.log_init[k];
  }
  return grad;
}

}  // namespace detail

inline bool needs_latent_normalizer(bool normalized_prior, Scheme scheme) {
  return !(normalized_prior && scheme == Scheme::A);
}

// log p(x; theta, w) for a chain. W is double or the same scalar as S.
template <class S, class W>
S weighted_forward(const ChainPotentials<S>& pot, std::span<const W> w, Scheme scheme) {
  static_assert(std::is_same_v<W, double> || std::is_same_v<W, S>);
  pot.validate();
  S out = detail::forward_pass<S, W>(pot, w, scheme, true);
  if (needs_latent_normalizer(pot.normalized_prior, scheme)) out -= detail::forward_pass<S, W>(pot, w, scheme, false);
  if (!std::isfinite(value_of(out))) throw NumericalError("weighted_forward: non-finite log marginal");
  return out;
}

template <class S>
S weighted_forward(const ChainPotentials<S>& pot, const Eigen::VectorXd& w, Scheme scheme) {
  return weighted_forward<S, double>(pot, std::span<const double>(w.data(), static_cast<std::size_t>(w.size())),
                                     scheme);
}

// log alpha table (T x K) of the emission-weighted recursion.
Eigen::MatrixXd forward_table(const ChainPotentials<double>& pot, const Eigen::VectorXd& w, Scheme scheme);

// d log p(x; theta, w) / dw_t for every t, at the given w.
template <class S>
std::vector<S> weighted_forward_weight_gradient(const ChainPotentials<S>& pot, std::span<const double> w,
                                                Scheme scheme) {
  pot.validate();
  std::vector<S> grad = detail::forward_pass_weight_gradient(pot, w, scheme, true);
  if (needs_latent_normalizer(pot.normalized_prior, scheme)) {
    const std::vector<S> norm = detail::forward_pass_weight_gradient(pot, w, scheme, false);
    for (std::size_t t = 0; t < grad.size(); ++t) grad[t] -= norm[t];
  }
  return grad;
}

// -[log p(x; theta, 1) - log p(x; theta, w_o)], the negative log predictive of
// the held-out block given the rest.
double conditional_loss(const ChainPotentials<double>& pot, const Fold& fold, Scheme scheme);

// Per held-out index t: -[log p(x; theta, w_o + e_t) - log p(x; theta, w_o)].
std::vector<double> point_losses(const ChainPotentials<double>& pot, const Fold& fold, Scheme scheme);

}  // namespace structcv
