#include "doctest.h"

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "structcv/errors.hpp"
#include "structcv/graph.hpp"

using namespace structcv;

namespace {
std::span<const double> sp(const std::vector<double>& v) { return {v.data(), v.size()}; }
double wf(const ChainPotentials<double>& p, std::span<const double> w, Scheme s) {
  return weighted_forward<double, double>(p, w, s);
}
double bf(const GraphPotentials<double>& p, std::span<const double> w, Scheme s) {
  return brute_force_weighted_marginal<double, double>(p, w, s);
}
double ew(const GraphPotentials<double>& p, std::span<const double> w, Scheme s, const std::vector<Index>& order = {}) {
  return eliminate_weighted<double, double>(p, w, s, order);
}

Graph random_graph(std::mt19937_64& rng, Index n, double p) {
  Graph g{n, {}};
  std::bernoulli_distribution coin(p);
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) {
      if (coin(rng)) g.edges.emplace_back(a, b);
    }
  }
  return g;
}
}  // namespace

TEST_CASE("single node") {
  GraphPotentials<double> p;
  p.K = 3;
  p.graph = Graph{1, {}};
  p.log_emit = {0.2, -1.0, 0.7};
  p.log_unary = oracle::log_softmax_rows({0.1, 0.5, -0.3}, 3);
  const std::vector<double> w = {0.6};
  double s = 0.0;
  for (int k = 0; k < 3; ++k) s += std::exp(0.6 * p.log_emit[k] + p.log_unary[k]);
  CHECK(bf(p, sp(w), Scheme::A) == doctest::Approx(std::log(s)).epsilon(1e-14));
}

TEST_CASE("brute force agrees with the chain recursion") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const auto chain = oracle::random_chain(rng, 5, 3);
    const auto g = to_graph(chain);
    const auto w = oracle::uniform_vec(rng, 5);
    for (Scheme s : {Scheme::A, Scheme::B}) {
      const double fw = wf(chain, sp(w), s);
      CHECK(std::abs(bf(g, sp(w), s) - fw) <= 1e-9);
      std::vector<Index> natural(5);
      for (Index t = 0; t < 5; ++t) natural[t] = t;
      CHECK(std::abs(ew(g, sp(w), s, natural) - fw) <= 1e-9);
    }
  }
}

TEST_CASE("brute force against an independent enumeration") {
  std::mt19937_64 rng(2);
  const auto p = oracle::random_graph(rng, Graph::ring(5), 3);
  const auto w = oracle::uniform_vec(rng, 5);
  for (Scheme s : {Scheme::A, Scheme::B}) {
    CHECK(std::abs(bf(p, sp(w), s) - oracle::graph_marginal(p, w, s)) <= 1e-10);
  }
}

TEST_CASE("four-node ring separates the schemes") {
  std::mt19937_64 rng(3);
  double biggest = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = oracle::random_graph(rng, Graph::ring(4), 2);
    const std::vector<double> w = {0.0, 1.0, 1.0, 1.0};
    biggest = std::max(biggest, std::abs(bf(p, sp(w), Scheme::A) -
                                         bf(p, sp(w), Scheme::B)));
  }
  CHECK(biggest > 1e-3);
}

TEST_CASE("elimination equals brute force on random small graphs") {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int rep = 0; rep < 40; ++rep) {
    const Index n = 2 + rep % 11;
    const Index K = 2 + rep % 2;
    if (std::pow(K, n) > 2e5) continue;
    const auto p = oracle::random_graph(rng, random_graph(rng, n, 0.35), K, rep % 3 != 0);
    const auto w = oracle::uniform_vec(rng, n);
    for (Scheme s : {Scheme::A, Scheme::B}) {
      worst = std::max(worst, std::abs(ew(p, sp(w), s) -
                                       bf(p, sp(w), s)));
    }
  }
  CHECK(worst <= 1e-9);

  const auto grid = oracle::random_graph(rng, Graph::grid(3, 3), 3);
  const auto w = oracle::uniform_vec(rng, 9);
  CHECK(std::abs(ew(grid, sp(w), Scheme::B) -
                 bf(grid, sp(w), Scheme::B)) <= 1e-9);
}

TEST_CASE("order invariance") {
  std::mt19937_64 rng(5);
  const auto p = oracle::random_graph(rng, Graph::grid(3, 3), 2);
  const auto w = oracle::uniform_vec(rng, 9);
  std::vector<Index> order(9);
  for (Index i = 0; i < 9; ++i) order[i] = i;
  const double ref = ew(p, sp(w), Scheme::B, order);
  for (int rep = 0; rep < 10; ++rep) {
    std::shuffle(order.begin(), order.end(), rng);
    CHECK(std::abs(ew(p, sp(w), Scheme::B, order) - ref) <= 1e-9);
  }
}

TEST_CASE("disconnected graph factorizes") {
  std::mt19937_64 rng(6);
  const auto a = oracle::random_graph(rng, Graph::ring(3), 2);
  const auto b = oracle::random_graph(rng, Graph::path(2), 2);
  GraphPotentials<double> both;
  both.K = 2;
  both.graph = Graph{5, {{0, 1}, {1, 2}, {2, 0}, {3, 4}}};
  both.log_emit = a.log_emit;
  both.log_emit.insert(both.log_emit.end(), b.log_emit.begin(), b.log_emit.end());
  both.log_unary = a.log_unary;
  both.log_unary.insert(both.log_unary.end(), b.log_unary.begin(), b.log_unary.end());
  both.log_pair = a.log_pair;
  both.log_pair.insert(both.log_pair.end(), b.log_pair.begin(), b.log_pair.end());
  const std::vector<double> w = {0.3, 1.0, 0.0, 0.5, 0.9};
  const std::vector<double> wa = {0.3, 1.0, 0.0}, wb = {0.5, 0.9};
  CHECK(ew(both, sp(w), Scheme::B) ==
        doctest::Approx(ew(a, sp(wa), Scheme::B) +
                        ew(b, sp(wb), Scheme::B))
            .epsilon(1e-12));
}

TEST_CASE("constant-zero emissions give a zero marginal") {
  std::mt19937_64 rng(7);
  auto p = oracle::random_graph(rng, Graph::grid(2, 3), 3);
  std::fill(p.log_emit.begin(), p.log_emit.end(), 0.0);
  const auto w = oracle::uniform_vec(rng, 6);
  for (Scheme s : {Scheme::A, Scheme::B}) CHECK(std::abs(ew(p, sp(w), s)) <= 1e-12);
}

TEST_CASE("min-fill orders") {
  const auto path = minfill_order(Graph::path(6));
  CHECK((path.front() == 0 || path.front() == 5));
  CHECK(induced_width(Graph::path(6), path) <= 1);

  Graph star{6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}}};
  const auto so = minfill_order(star);
  CHECK(std::find(so.begin(), so.end(), 0) - so.begin() >= 4);

  const Graph g = Graph::grid(4, 4);
  const auto order = minfill_order(g);
  std::vector<Index> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < 16; ++i) CHECK(sorted[i] == i);
  CHECK(induced_width(g, order) <= 4);
}

TEST_CASE("capacity limits") {
  std::mt19937_64 rng(8);
  const auto big = oracle::random_graph(rng, Graph::path(21), 2);
  const std::vector<double> w(21, 1.0);
  CHECK_THROWS_AS(bf(big, sp(w), Scheme::A), CapacityError);

  // A 12-clique over K=4 needs a 4^12 table.
  Graph clique{12, {}};
  for (Index a = 0; a < 12; ++a)
    for (Index b = a + 1; b < 12; ++b) clique.edges.emplace_back(a, b);
  const auto dense = oracle::random_graph(rng, clique, 4);
  const std::vector<double> w12(12, 1.0);
  try {
    ew(dense, sp(w12), Scheme::A);
    FAIL("expected CapacityError");
  } catch (const CapacityError& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("exact joint sampling matches enumerated marginals") {
  std::mt19937_64 rng(9);
  const auto p = oracle::random_graph(rng, Graph::ring(4), 2);
  // Exact P(z_0 = 1, z_2 = 1) under the latent field.
  const std::vector<double> zero(4, 0.0);
  double num = 0, den = 0;
  for (int code = 0; code < 16; ++code) {
    std::vector<Index> z = {code & 1, (code >> 1) & 1, (code >> 2) & 1, (code >> 3) & 1};
    double e = 0;
    for (Index t = 0; t < 4; ++t) e += p.log_unary[t * 2 + z[t]];
    for (std::size_t i = 0; i < 4; ++i) e += p.pair(static_cast<Index>(i), z[p.graph.edges[i].first], z[p.graph.edges[i].second]);
    den += std::exp(e);
    if (z[0] == 1 && z[2] == 1) num += std::exp(e);
  }
  const double exact = num / den;
  std::mt19937_64 srng(10);
  int hits = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const auto z = sample_latent_field(p, false, srng);
    hits += (z[0] == 1 && z[2] == 1);
  }
  const double se = std::sqrt(exact * (1 - exact) / n);
  CHECK(std::abs(hits / double(n) - exact) <= 5 * se);
}
