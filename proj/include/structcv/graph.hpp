#pragma once

// Weighted marginalization for pairwise discrete MRFs with one emission factor
// per latent: exhaustive enumeration (test oracle) and variable elimination.
//
// Weighted log joint energy:
//   sum_t w_t psi_t(z_t) + sum_t c_t u_t(z_t) + sum_{(a,b)} c_ab phi_ab(z_a, z_b)
// with clique multipliers c = 1 (scheme A) or the product of member weights
// (scheme B). The returned log marginal subtracts log sum_z exp(latent-only
// energy) so the latent field is a normalized distribution for every w.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "structcv/chain.hpp"
#include "structcv/core.hpp"
#include "structcv/dual.hpp"
#include "structcv/errors.hpp"

namespace structcv {

inline constexpr double kMaxStates = 1e6;

template <class S>
struct GraphPotentials {
  Index K = 0;
  Graph graph;
  std::vector<S> log_emit;   // T*K
  std::vector<S> log_unary;  // T*K latent unary factors; empty means none
  std::vector<S> log_pair;   // |E|*K*K, entry [e*K*K + za*K + zb] for edge e = (a, b)
  // The latent-only energy already sums to one under scheme A.
  bool normalized_prior = false;

  Index num_nodes() const { return graph.num_nodes; }
  const S& emit(Index t, Index k) const { return log_emit[static_cast<std::size_t>(t * K + k)]; }
  const S& pair(Index e, Index a, Index b) const {
    return log_pair[static_cast<std::size_t>(e * K * K + a * K + b)];
  }

  void validate() const {
    if (K < 1) throw ArgumentError("graph potentials need K >= 1");
    graph.validate();
    const Index T = graph.num_nodes;
    const auto E = static_cast<Index>(graph.edges.size());
    if (static_cast<Index>(log_emit.size()) != T * K || static_cast<Index>(log_pair.size()) != E * K * K ||
        !(log_unary.empty() || static_cast<Index>(log_unary.size()) == T * K)) {
      throw ArgumentError("graph potentials have inconsistent sizes");
    }
    for (const auto* v : {&log_emit, &log_unary, &log_pair}) {
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!std::isfinite(value_of((*v)[i]))) {
          throw NumericalError("non-finite potential at entry " + std::to_string(i), static_cast<long>(i));
        }
      }
    }
  }
};

// Chain potentials as a path-graph MRF (initial factor becomes node 0's unary).
template <class S>
GraphPotentials<S> to_graph(const ChainPotentials<S>& chain) {
  GraphPotentials<S> g;
  g.K = chain.K;
  const Index T = chain.length();
  g.graph = Graph::path(T);
  g.log_emit = chain.log_emit;
  g.log_unary.assign(static_cast<std::size_t>(T * chain.K), S(0.0));
  for (Index k = 0; k < chain.K; ++k) g.log_unary[static_cast<std::size_t>(k)] = chain.log_init[k];
  for (Index e = 0; e + 1 < T; ++e) g.log_pair.insert(g.log_pair.end(), chain.log_trans.begin(), chain.log_trans.end());
  g.normalized_prior = chain.normalized_prior;
  return g;
}

// ---- factors ----

// Log-space table over sorted variables; variable vars[0] varies fastest.
template <class S>
struct LogFactor {
  std::vector<Index> vars;
  std::vector<S> table;
};

namespace detail {

inline std::size_t table_size(std::size_t num_vars, Index K) {
  double n = std::pow(static_cast<double>(K), static_cast<double>(num_vars));
  if (n > kMaxStates) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(n);
}

template <class S>
LogFactor<S> multiply(const std::vector<const LogFactor<S>*>& factors, Index K) {
  LogFactor<S> out;
  for (const auto* f : factors) out.vars.insert(out.vars.end(), f->vars.begin(), f->vars.end());
  std::sort(out.vars.begin(), out.vars.end());
  out.vars.erase(std::unique(out.vars.begin(), out.vars.end()), out.vars.end());
  const std::size_t n = table_size(out.vars.size(), K);
  out.table.assign(n, S(0.0));

  // Stride of each output variable inside each input factor.
  std::vector<std::vector<std::size_t>> strides(factors.size(), std::vector<std::size_t>(out.vars.size(), 0));
  for (std::size_t f = 0; f < factors.size(); ++f) {
    std::size_t stride = 1;
    for (Index v : factors[f]->vars) {
      const auto pos = static_cast<std::size_t>(std::lower_bound(out.vars.begin(), out.vars.end(), v) - out.vars.begin());
      strides[f][pos] = stride;
      stride *= static_cast<std::size_t>(K);
    }
  }
  std::vector<Index> assign(out.vars.size(), 0);
  std::vector<std::size_t> offset(factors.size(), 0);
  for (std::size_t idx = 0; idx < n; ++idx) {
    S acc(0.0);
    for (std::size_t f = 0; f < factors.size(); ++f) acc += factors[f]->table[offset[f]];
    out.table[idx] = acc;
    // Odometer increment.
    for (std::size_t p = 0; p < assign.size(); ++p) {
      if (++assign[p] < K) {
        for (std::size_t f = 0; f < factors.size(); ++f) offset[f] += strides[f][p];
        break;
      }
      for (std::size_t f = 0; f < factors.size(); ++f) offset[f] -= strides[f][p] * static_cast<std::size_t>(K - 1);
      assign[p] = 0;
    }
  }
  return out;
}

template <class S>
LogFactor<S> sum_out(const LogFactor<S>& f, Index var, Index K) {
  const auto pos = static_cast<std::size_t>(std::find(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
  LogFactor<S> out;
  out.vars = f.vars;
  out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
  std::size_t inner = 1;
  for (std::size_t p = 0; p < pos; ++p) inner *= static_cast<std::size_t>(K);
  const std::size_t outer = f.table.size() / (inner * static_cast<std::size_t>(K));
  out.table.resize(inner * outer);
  std::vector<S> terms(static_cast<std::size_t>(K));
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      for (Index k = 0; k < K; ++k) terms[k] = f.table[(o * static_cast<std::size_t>(K) + k) * inner + i];
      out.table[o * inner + i] = log_sum_exp(std::span<const S>(terms));
    }
  }
  return out;
}

template <class S, class W>
std::vector<LogFactor<S>> weighted_factors(const GraphPotentials<S>& pot, std::span<const W> w, Scheme scheme,
                                           bool with_emissions) {
  const Index T = pot.num_nodes();
  const Index K = pot.K;
  std::vector<LogFactor<S>> out;
  for (Index t = 0; t < T; ++t) {
    LogFactor<S> f{{t}, std::vector<S>(static_cast<std::size_t>(K), S(0.0))};
    const W c = scheme == Scheme::A ? W(1.0) : w[static_cast<std::size_t>(t)];
    for (Index k = 0; k < K; ++k) {
      S v(0.0);
      if (with_emissions) v += w[static_cast<std::size_t>(t)] * pot.emit(t, k);
      if (!pot.log_unary.empty()) v += c * pot.log_unary[static_cast<std::size_t>(t * K + k)];
      f.table[k] = v;
    }
    out.push_back(std::move(f));
  }
  for (std::size_t e = 0; e < pot.graph.edges.size(); ++e) {
    const auto [a, b] = pot.graph.edges[e];
    const W c = scheme == Scheme::A ? W(1.0) : W(w[static_cast<std::size_t>(a)] * w[static_cast<std::size_t>(b)]);
    LogFactor<S> f;
    f.vars = {std::min(a, b), std::max(a, b)};
    f.table.resize(static_cast<std::size_t>(K * K));
    for (Index za = 0; za < K; ++za) {
      for (Index zb = 0; zb < K; ++zb) {
        // vars[0] is the smaller node and varies fastest.
        const Index lo = a < b ? za : zb;
        const Index hi = a < b ? zb : za;
        f.table[static_cast<std::size_t>(hi * K + lo)] = c * pot.pair(static_cast<Index>(e), za, zb);
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

template <class S>
S eliminate_all(std::vector<LogFactor<S>> factors, const std::vector<Index>& order, Index K) {
  std::vector<bool> alive(factors.size(), true);
  for (std::size_t step = 0; step < order.size(); ++step) {
    const Index v = order[step];
    std::vector<const LogFactor<S>*> touching;
    std::vector<Index> vars;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (!alive[i]) continue;
      if (std::find(factors[i].vars.begin(), factors[i].vars.end(), v) != factors[i].vars.end()) {
        touching.push_back(&factors[i]);
        vars.insert(vars.end(), factors[i].vars.begin(), factors[i].vars.end());
      }
    }
    if (touching.empty()) continue;
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    if (table_size(vars.size(), K) == static_cast<std::size_t>(-1)) {
      throw CapacityError("variable elimination: eliminating node " + std::to_string(v) + " at step " +
                          std::to_string(step) + " needs a factor over " + std::to_string(vars.size()) +
                          " variables (more than 1e6 entries)");
    }
    LogFactor<S> merged = sum_out(multiply(touching, K), v, K);
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (alive[i] && std::find(factors[i].vars.begin(), factors[i].vars.end(), v) != factors[i].vars.end()) {
        alive[i] = false;
      }
    }
    factors.push_back(std::move(merged));
    alive.push_back(true);
  }
  S total(0.0);
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (!alive[i]) continue;
    if (!factors[i].vars.empty()) throw ArgumentError("elimination order does not cover every node");
    total += factors[i].table[0];
  }
  return total;
}

template <class S, class W>
S brute_force_log_partition(const GraphPotentials<S>& pot, std::span<const W> w, Scheme scheme, bool with_emissions) {
  const Index T = pot.num_nodes();
  const Index K = pot.K;
  const auto E = pot.graph.edges.size();
  std::vector<Index> z(static_cast<std::size_t>(T), 0);
  LogSumExpAccumulator<S> acc;
  std::vector<W> edge_c(E);
  for (std::size_t e = 0; e < E; ++e) {
    const auto [a, b] = pot.graph.edges[e];
    edge_c[e] = scheme == Scheme::A ? W(1.0) : W(w[static_cast<std::size_t>(a)] * w[static_cast<std::size_t>(b)]);
  }
  while (true) {
    S energy(0.0);
    for (Index t = 0; t < T; ++t) {
      const Index k = z[static_cast<std::size_t>(t)];
      if (with_emissions) energy += w[static_cast<std::size_t>(t)] * pot.emit(t, k);
      if (!pot.log_unary.empty()) {
        const W c = scheme == Scheme::A ? W(1.0) : w[static_cast<std::size_t>(t)];
        energy += c * pot.log_unary[static_cast<std::size_t>(t * K + k)];
      }
    }
    for (std::size_t e = 0; e < E; ++e) {
      const auto [a, b] = pot.graph.edges[e];
      energy += edge_c[e] * pot.pair(static_cast<Index>(e), z[static_cast<std::size_t>(a)], z[static_cast<std::size_t>(b)]);
    }
    acc.add(energy);
    Index p = 0;
    for (; p < T; ++p) {
      if (++z[static_cast<std::size_t>(p)] < K) break;
      z[static_cast<std::size_t>(p)] = 0;
    }
    if (p == T) break;
  }
  return acc.result();
}

}  // namespace detail

// Greedy min-fill ordering; ties go to the lowest node index.
std::vector<Index> minfill_order(const Graph& graph);

// Largest neighbourhood size met when eliminating in `order` (treewidth bound).
Index induced_width(const Graph& graph, const std::vector<Index>& order);

template <class S, class W>
S brute_force_weighted_marginal(const GraphPotentials<S>& pot, std::span<const W> w, Scheme scheme) {
  static_assert(std::is_same_v<W, double> || std::is_same_v<W, S>);
  pot.validate();
  if (static_cast<Index>(w.size()) != pot.num_nodes()) throw ArgumentError("brute force: weight length mismatch");
  if (std::pow(static_cast<double>(pot.K), static_cast<double>(pot.num_nodes())) > kMaxStates) {
    throw CapacityError("brute force: K^T exceeds 1e6 joint states");
  }
  S out = detail::brute_force_log_partition<S, W>(pot, w, scheme, true);
  out -= detail::brute_force_log_partition<S, W>(pot, w, scheme, false);
  return out;
}

template <class S>
S brute_force_weighted_marginal(const GraphPotentials<S>& pot, const Eigen::VectorXd& w, Scheme scheme) {
  return brute_force_weighted_marginal<S, double>(
      pot, std::span<const double>(w.data(), static_cast<std::size_t>(w.size())), scheme);
}

// Same value as brute force, by variable elimination along `order` (min-fill
// when empty).
template <class S, class W>
S eliminate_weighted(const GraphPotentials<S>& pot, std::span<const W> w, Scheme scheme,
                     const std::vector<Index>& order = {}) {
  static_assert(std::is_same_v<W, double> || std::is_same_v<W, S>);
  pot.validate();
  if (static_cast<Index>(w.size()) != pot.num_nodes()) throw ArgumentError("eliminate: weight length mismatch");
  const std::vector<Index> ord = order.empty() ? minfill_order(pot.graph) : order;
  if (static_cast<Index>(ord.size()) != pot.num_nodes()) throw ArgumentError("eliminate: order must list every node");
  S out = detail::eliminate_all(detail::weighted_factors<S, W>(pot, w, scheme, true), ord, pot.K);
  if (!(pot.normalized_prior && scheme == Scheme::A)) {
    out -= detail::eliminate_all(detail::weighted_factors<S, W>(pot, w, scheme, false), ord, pot.K);
  }
  if (!std::isfinite(value_of(out))) throw NumericalError("eliminate_weighted: non-finite log marginal");
  return out;
}

template <class S>
S eliminate_weighted(const GraphPotentials<S>& pot, const Eigen::VectorXd& w, Scheme scheme,
                     const std::vector<Index>& order = {}) {
  return eliminate_weighted<S, double>(pot, std::span<const double>(w.data(), static_cast<std::size_t>(w.size())),
                                       scheme, order);
}

// Exact joint sample of z from the (unweighted) latent field, optionally
// including emission factors (posterior sampling). Forward elimination keeps
// each eliminated variable's factor; sampling runs the order backwards.
std::vector<Index> sample_latent_field(const GraphPotentials<double>& pot, bool with_emissions, std::mt19937_64& rng,
                                       const std::vector<Index>& order = {});

}  // namespace structcv
