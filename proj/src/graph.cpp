#include "structcv/graph.hpp"

#include <algorithm>
#include <set>

namespace structcv {

namespace {

std::vector<std::set<Index>> neighbour_sets(const Graph& graph) {
  std::vector<std::set<Index>> adj(static_cast<std::size_t>(graph.num_nodes));
  for (const auto& [a, b] : graph.edges) {
    adj[static_cast<std::size_t>(a)].insert(b);
    adj[static_cast<std::size_t>(b)].insert(a);
  }
  return adj;
}

void eliminate_node(std::vector<std::set<Index>>& adj, Index v) {
  const auto& nb = adj[static_cast<std::size_t>(v)];
  for (Index a : nb) {
    for (Index b : nb) {
      if (a != b) adj[static_cast<std::size_t>(a)].insert(b);
    }
    adj[static_cast<std::size_t>(a)].erase(v);
  }
  adj[static_cast<std::size_t>(v)].clear();
}

}  // namespace

std::vector<Index> minfill_order(const Graph& graph) {
  graph.validate();
  auto adj = neighbour_sets(graph);
  std::vector<bool> done(static_cast<std::size_t>(graph.num_nodes), false);
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(graph.num_nodes));
  for (Index step = 0; step < graph.num_nodes; ++step) {
    Index best = -1;
    long best_fill = 0;
    for (Index v = 0; v < graph.num_nodes; ++v) {
      if (done[static_cast<std::size_t>(v)]) continue;
      const auto& nb = adj[static_cast<std::size_t>(v)];
      long fill = 0;
      for (auto i = nb.begin(); i != nb.end(); ++i) {
        for (auto j = std::next(i); j != nb.end(); ++j) {
          if (!adj[static_cast<std::size_t>(*i)].count(*j)) ++fill;
        }
      }
      if (best < 0 || fill < best_fill) {
        best = v;
        best_fill = fill;
      }
    }
    order.push_back(best);
    done[static_cast<std::size_t>(best)] = true;
    eliminate_node(adj, best);
  }
  return order;
}

Index induced_width(const Graph& graph, const std::vector<Index>& order) {
  graph.validate();
  if (static_cast<Index>(order.size()) != graph.num_nodes) throw ArgumentError("order must list every node");
  auto adj = neighbour_sets(graph);
  Index width = 0;
  for (Index v : order) {
    if (v < 0 || v >= graph.num_nodes) throw ArgumentError("order contains an out-of-range node");
    width = std::max(width, static_cast<Index>(adj[static_cast<std::size_t>(v)].size()));
    eliminate_node(adj, v);
  }
  return width;
}

std::vector<Index> sample_latent_field(const GraphPotentials<double>& pot, bool with_emissions, std::mt19937_64& rng,
                                       const std::vector<Index>& order) {
  pot.validate();
  const Index T = pot.num_nodes();
  const Index K = pot.K;
  const std::vector<Index> ord = order.empty() ? minfill_order(pot.graph) : order;
  const std::vector<double> ones(static_cast<std::size_t>(T), 1.0);
  std::vector<LogFactor<double>> factors =
      detail::weighted_factors<double, double>(pot, std::span<const double>(ones), Scheme::A, with_emissions);
  std::vector<bool> alive(factors.size(), true);

  // Product factor in place when each variable was eliminated.
  std::vector<LogFactor<double>> kept;
  kept.reserve(ord.size());
  for (Index v : ord) {
    std::vector<const LogFactor<double>*> touching;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      if (alive[i] && std::find(factors[i].vars.begin(), factors[i].vars.end(), v) != factors[i].vars.end()) {
        touching.push_back(&factors[i]);
        alive[i] = false;
      }
    }
    LogFactor<double> prod = detail::multiply(touching, K);
    LogFactor<double> msg = detail::sum_out(prod, v, K);
    kept.push_back(std::move(prod));
    factors.push_back(std::move(msg));
    alive.push_back(true);
  }

  std::vector<Index> z(static_cast<std::size_t>(T), -1);
  std::vector<double> logp(static_cast<std::size_t>(K));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t s = ord.size(); s-- > 0;) {
    const Index v = ord[s];
    const LogFactor<double>& f = kept[s];
    std::size_t base = 0, stride = 1, vstride = 0;
    for (Index u : f.vars) {
      if (u == v) {
        vstride = stride;
      } else {
        base += static_cast<std::size_t>(z[static_cast<std::size_t>(u)]) * stride;
      }
      stride *= static_cast<std::size_t>(K);
    }
    for (Index k = 0; k < K; ++k) logp[k] = f.table[base + static_cast<std::size_t>(k) * vstride];
    const double lse = log_sum_exp(std::span<const double>(logp));
    double u = unif(rng);
    Index pick = K - 1;
    for (Index k = 0; k < K; ++k) {
      u -= std::exp(logp[k] - lse);
      if (u < 0.0) {
        pick = k;
        break;
      }
    }
    z[static_cast<std::size_t>(v)] = pick;
  }
  return z;
}

}  // namespace structcv
