#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "structcv/chain.hpp"
#include "structcv/errors.hpp"

using namespace structcv;

namespace {
std::span<const double> sp(const std::vector<double>& v) { return {v.data(), v.size()}; }
double wf(const ChainPotentials<double>& p, std::span<const double> w, Scheme s) {
  return weighted_forward<double, double>(p, w, s);
}
}  // namespace

TEST_CASE("weighted forward at all-ones equals the plain forward algorithm") {
  std::mt19937_64 rng(1);
  const auto p = oracle::random_chain(rng, 6, 3);
  const std::vector<double> ones(6, 1.0);
  // Exp-space forward algorithm.
  std::vector<double> a(3);
  for (Index k = 0; k < 3; ++k) a[k] = std::exp(p.log_init[k] + p.emit(0, k));
  for (Index t = 1; t < 6; ++t) {
    std::vector<double> b(3, 0.0);
    for (Index k = 0; k < 3; ++k) {
      for (Index l = 0; l < 3; ++l) b[k] += a[l] * std::exp(p.trans(l, k));
      b[k] *= std::exp(p.emit(t, k));
    }
    a = b;
  }
  const double ll = std::log(a[0] + a[1] + a[2]);
  CHECK(wf(p, sp(ones), Scheme::A) == doctest::Approx(ll).epsilon(1e-13));
  CHECK(wf(p, sp(ones), Scheme::B) == doctest::Approx(ll).epsilon(1e-13));
}

TEST_CASE("zero weights under scheme A give a zero log marginal") {
  std::mt19937_64 rng(2);
  const auto p = oracle::random_chain(rng, 7, 3);
  const std::vector<double> zeros(7, 0.0);
  CHECK(std::abs(wf(p, sp(zeros), Scheme::A)) <= 1e-14);
}

TEST_CASE("brute-force equivalence over random instances") {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Index T = 1 + rep % 6;
    const Index K = 1 + (rep / 6) % 3;
    auto p = oracle::random_chain(rng, T, K);
    const auto w = oracle::uniform_vec(rng, T);
    const Scheme s = rep % 2 ? Scheme::B : Scheme::A;
    worst = std::max(worst, std::abs(wf(p, sp(w), s) - oracle::chain_marginal(p, w, s)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("unnormalized priors use the latent normalizer") {
  std::mt19937_64 rng(4);
  auto p = oracle::random_chain(rng, 5, 3);
  p.log_init = oracle::normal_vec(rng, 3);
  p.log_trans = oracle::normal_vec(rng, 9);
  p.normalized_prior = false;
  const auto w = oracle::uniform_vec(rng, 5);
  for (Scheme s : {Scheme::A, Scheme::B}) {
    CHECK(wf(p, sp(w), s) == doctest::Approx(oracle::chain_marginal(p, w, s)).epsilon(1e-11));
  }
}

TEST_CASE("forward table rows") {
  std::mt19937_64 rng(5);
  const auto p = oracle::random_chain(rng, 5, 2);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(5);
  const Eigen::MatrixXd a = forward_table(p, w, Scheme::A);
  CHECK(a.rows() == 5);
  CHECK(a.allFinite());
  const double last = std::log(a.row(4).array().exp().sum());
  CHECK(last == doctest::Approx(weighted_forward(p, w, Scheme::A)).epsilon(1e-13));
}

TEST_CASE("leave-future-out gives the same marginal under both schemes") {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Index T = 8;
    const auto p = oracle::random_chain(rng, T, 3);
    for (Index first = 1; first < T; ++first) {
      std::vector<double> w(T, 1.0);
      for (Index t = first; t < T; ++t) w[t] = 0.0;
      worst = std::max(worst, std::abs(wf(p, sp(w), Scheme::A) -
                                       wf(p, sp(w), Scheme::B)));
    }
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("conditional loss") {
  std::mt19937_64 rng(7);
  const auto p = oracle::random_chain(rng, 6, 2);
  CHECK(conditional_loss(p, Fold(), Scheme::A) == 0.0);

  // Brute-force conditional for o = {2, 3} (0-based).
  const Fold o({2, 3});
  const std::vector<double> ones(6, 1.0);
  std::vector<double> wo = ones;
  wo[2] = wo[3] = 0.0;
  const double expected = -(oracle::chain_marginal(p, ones, Scheme::A) - oracle::chain_marginal(p, wo, Scheme::A));
  CHECK(conditional_loss(p, o, Scheme::A) == doctest::Approx(expected).epsilon(1e-11));

  // K = 1 Gaussian chain: loss is -log N(x_t | mu, s2).
  ChainPotentials<double> g;
  g.K = 1;
  g.log_init = {0.0};
  g.log_trans = {0.0};
  const double mu = 0.5, s2 = 2.0;
  const std::vector<double> x = {0.1, 1.3, -0.4, 2.2};
  for (double xi : x) g.log_emit.push_back(-0.5 * std::log(2 * M_PI * s2) - 0.5 * (xi - mu) * (xi - mu) / s2);
  CHECK(conditional_loss(g, Fold({2}), Scheme::A) == doctest::Approx(-g.log_emit[2]).epsilon(1e-14));
  CHECK(point_losses(g, Fold({1, 3}), Scheme::A)[1] == doctest::Approx(-g.log_emit[3]).epsilon(1e-14));
}

TEST_CASE("held-out observations do not affect the scheme A marginal") {
  std::mt19937_64 rng(8);
  auto p = oracle::random_chain(rng, 6, 3);
  std::vector<double> w(6, 1.0);
  w[1] = w[4] = 0.0;
  const double before = wf(p, sp(w), Scheme::A);
  for (Index k = 0; k < 3; ++k) {
    p.log_emit[1 * 3 + k] += 5.0 * (k + 1);
    p.log_emit[4 * 3 + k] -= 2.0;
  }
  CHECK(wf(p, sp(w), Scheme::A) == before);
}

TEST_CASE("adjoint weight gradient matches differences and hyper-duals") {
  std::mt19937_64 rng(9);
  for (Scheme s : {Scheme::A, Scheme::B}) {
    for (bool normalized : {true, false}) {
      auto p = oracle::random_chain(rng, 7, 3);
      p.normalized_prior = normalized;
      const auto w = oracle::uniform_vec(rng, 7);
      const auto g = weighted_forward_weight_gradient<double>(p, sp(w), s);
      for (Index t = 0; t < 7; ++t) {
        auto wp = w, wm = w;
        wp[t] += 1e-6;
        wm[t] -= 1e-6;
        const double fd = (wf(p, sp(wp), s) - wf(p, sp(wm), s)) / 2e-6;
        CHECK(g[t] == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("non-finite potentials and bad sizes") {
  std::mt19937_64 rng(10);
  auto p = oracle::random_chain(rng, 4, 2);
  const std::vector<double> w(3, 1.0);
  CHECK_THROWS_AS(wf(p, sp(w), Scheme::A), ArgumentError);
  p.log_emit[3] = std::nan("");
  const std::vector<double> w4(4, 1.0);
  CHECK_THROWS_AS(wf(p, sp(w4), Scheme::A), NumericalError);
}
