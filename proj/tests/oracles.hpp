#pragma once

// Independent reference implementations used only by tests: plain
// enumeration in exp space with long double accumulation.

#include <cmath>
#include <random>
#include <vector>

#include "structcv/chain.hpp"
#include "structcv/graph.hpp"

namespace oracle {

using structcv::Index;
using structcv::Scheme;

// log sum_z exp(energy(z)) over all K^T assignments.
template <class Energy>
double enumerate(Index T, Index K, Energy energy) {
  std::vector<Index> z(T, 0);
  std::vector<double> e;
  while (true) {
    e.push_back(energy(z));
    Index p = 0;
    for (; p < T; ++p) {
      if (++z[p] < K) break;
      z[p] = 0;
    }
    if (p == T) break;
  }
  double m = e[0];
  for (double v : e) m = std::max(m, v);
  long double s = 0;
  for (double v : e) s += std::exp(static_cast<long double>(v - m));
  return m + static_cast<double>(std::log(s));
}

inline double chain_marginal(const structcv::ChainPotentials<double>& p, const std::vector<double>& w, Scheme s) {
  const Index T = p.length(), K = p.K;
  auto energy = [&](const std::vector<Index>& z, bool emit) {
    double e = (s == Scheme::B ? w[0] : 1.0) * p.log_init[z[0]];
    for (Index t = 0; t < T; ++t) {
      if (emit) e += w[t] * p.emit(t, z[t]);
      if (t > 0) e += (s == Scheme::B ? w[t - 1] * w[t] : 1.0) * p.trans(z[t - 1], z[t]);
    }
    return e;
  };
  return enumerate(T, K, [&](auto& z) { return energy(z, true); }) -
         enumerate(T, K, [&](auto& z) { return energy(z, false); });
}

inline double graph_marginal(const structcv::GraphPotentials<double>& p, const std::vector<double>& w, Scheme s) {
  const Index T = p.num_nodes(), K = p.K;
  auto energy = [&](const std::vector<Index>& z, bool emit) {
    double e = 0;
    for (Index t = 0; t < T; ++t) {
      if (emit) e += w[t] * p.emit(t, z[t]);
      if (!p.log_unary.empty()) e += (s == Scheme::B ? w[t] : 1.0) * p.log_unary[t * K + z[t]];
    }
    for (std::size_t i = 0; i < p.graph.edges.size(); ++i) {
      auto [a, b] = p.graph.edges[i];
      e += (s == Scheme::B ? w[a] * w[b] : 1.0) * p.pair(static_cast<Index>(i), z[a], z[b]);
    }
    return e;
  };
  return enumerate(T, K, [&](auto& z) { return energy(z, true); }) -
         enumerate(T, K, [&](auto& z) { return energy(z, false); });
}

inline std::vector<double> normal_vec(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

inline std::vector<double> log_softmax_rows(std::vector<double> v, Index K) {
  for (std::size_t r = 0; r < v.size() / K; ++r) {
    double m = -1e300;
    for (Index k = 0; k < K; ++k) m = std::max(m, v[r * K + k]);
    double s = 0;
    for (Index k = 0; k < K; ++k) s += std::exp(v[r * K + k] - m);
    for (Index k = 0; k < K; ++k) v[r * K + k] -= m + std::log(s);
  }
  return v;
}

// Random HMM-like chain: normalized init/transitions, arbitrary emissions.
inline structcv::ChainPotentials<double> random_chain(std::mt19937_64& rng, Index T, Index K) {
  structcv::ChainPotentials<double> p;
  p.K = K;
  p.log_init = log_softmax_rows(normal_vec(rng, K), K);
  p.log_trans = log_softmax_rows(normal_vec(rng, K * K), K);
  p.log_emit = normal_vec(rng, T * K, 2.0);
  return p;
}

inline std::vector<double> uniform_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline structcv::GraphPotentials<double> random_graph(std::mt19937_64& rng, const structcv::Graph& g, Index K,
                                                      bool unary = true) {
  structcv::GraphPotentials<double> p;
  p.K = K;
  p.graph = g;
  p.log_emit = normal_vec(rng, g.num_nodes * K, 1.5);
  if (unary) p.log_unary = normal_vec(rng, g.num_nodes * K, 0.5);
  p.log_pair = normal_vec(rng, g.edges.size() * K * K, 1.0);
  return p;
}

}  // namespace oracle
