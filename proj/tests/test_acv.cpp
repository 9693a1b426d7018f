#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "structcv/acv.hpp"
#include "structcv/models.hpp"
#include "structcv/optimize.hpp"

using namespace structcv;

namespace {

StructuredDataset column(std::vector<double> ys) {
  Structure s;
  s.x = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Index>(ys.size()));
  s.graph = Graph::path(s.length());
  return {{s}};
}

// One single-point structure per observation.
StructuredDataset points(const std::vector<double>& ys) {
  StructuredDataset d;
  for (double y : ys) d.structures.push_back(column({y}).structures[0]);
  return d;
}

Eigen::VectorXd vec(std::mt19937_64& rng, Index D, double sd) {
  const auto v = oracle::normal_vec(rng, static_cast<std::size_t>(D), sd);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), D);
}

}  // namespace

TEST_CASE("gaussian mean bundle has H = -N and J_n = x_n - theta") {
  const std::vector<double> ys = {1, 2, 3, 6, -1.5};
  GaussianMeanModel flat;
  const auto data = points(ys);
  LscvObjective obj(flat, data);
  const Eigen::VectorXd th = Eigen::VectorXd::Constant(1, 0.4);
  const HessianBundle b = build_bundle(obj, th);
  CHECK(b.H(0, 0) == doctest::Approx(-5.0).epsilon(1e-12));
  for (Index n = 0; n < 5; ++n) CHECK(b.J(0, n) == doctest::Approx(ys[n] - 0.4).epsilon(1e-12));
  CHECK(b.ridge == 0.0);

  GaussianMeanModel tau({.precision = 2.5});
  LscvObjective obj2(tau, data);
  CHECK(build_bundle(obj2, th).H(0, 0) == doctest::Approx(-7.5).epsilon(1e-12));

  // The same numbers within one structure.
  const auto col = column(ys);
  LwcvObjective lw(flat, col, 0, Scheme::A);
  const HessianBundle c = build_bundle(lw, th);
  CHECK(c.H(0, 0) == doctest::Approx(-5.0).epsilon(1e-12));
  for (Index n = 0; n < 5; ++n) CHECK(c.J(0, n) == doctest::Approx(ys[n] - 0.4).epsilon(1e-12));
}

TEST_CASE("gaussian leave-one-out: exact 2, NS 2, IJ 2.25") {
  const auto data = column({1, 2, 3, 6});
  GaussianMeanModel m;
  LwcvObjective obj(m, data, 0, Scheme::A);
  const Eigen::VectorXd theta1 = Eigen::VectorXd::Constant(1, 3.0);
  const Fold o(std::vector<Index>{3});
  const HessianBundle b = build_bundle(obj, theta1);
  CHECK(ij_params(b, o)[0] == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(std::abs(ns_params(obj, theta1, o)[0] - 2.0) <= 1e-10);
  const FitResult refit = fit(obj, fold_to_weights(o, 4).values, theta1);
  CHECK(std::abs(refit.theta_hat[0] - 2.0) <= 1e-8);

  // Dropping the largest value moves the estimate down.
  CHECK(ij_params(b, o)[0] < theta1[0]);
  CHECK(ij_params(b, Fold())[0] == 3.0);
  CHECK(ns_params(obj, theta1, Fold())[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(ij_params_at(b, fold_to_weights(o, 4).values)[0] == doctest::Approx(2.25).epsilon(1e-15));
  CHECK_THROWS_AS(ij_params(b, Fold(std::vector<Index>{4})), ArgumentError);
  CHECK_THROWS_AS(ns_params(obj, theta1, Fold(std::vector<Index>{4})), ArgumentError);
}

TEST_CASE("a zero column leaves theta unchanged") {
  const auto data = column({1, 3, 5});
  GaussianMeanModel m;
  LwcvObjective obj(m, data, 0, Scheme::A);
  const HessianBundle b = build_bundle(obj, Eigen::VectorXd::Constant(1, 3.0));
  CHECK(b.J(0, 1) == 0.0);
  CHECK(ij_params(b, Fold(std::vector<Index>{1}))[0] == 3.0);
}

TEST_CASE("quadratic objective: IJ = NS = exact refit at the optimum") {
  GaussianMeanModel m({.R = 3, .precision = 0.7});
  const auto data = m.simulate(Eigen::Vector3d(1, -2, 0.5), {.length = 12}, 4);
  LwcvObjective obj(m, data, 0, Scheme::A);
  const FitResult full = fit(obj, Eigen::VectorXd::Ones(12), Eigen::VectorXd::Zero(3), {.tol = 1e-12});
  const HessianBundle b = build_bundle(obj, full.theta_hat);
  for (const Fold& o : {Fold({0}), Fold({2, 5, 7}), Fold({1, 2, 3, 4, 5, 6})}) {
    const Eigen::VectorXd exact = fit(obj, fold_to_weights(o, 12).values, full.theta_hat, {.tol = 1e-12}).theta_hat;
    const Eigen::VectorXd ns = ns_params(obj, full.theta_hat, o);
    CHECK((ns - exact).cwiseAbs().maxCoeff() <= 1e-10);
    // With a weight-dependent curvature IJ is first order only; here the
    // curvature is -(sum w + tau) so it is exact only for |o| = 0.
  }
  CHECK((ij_params(b, Fold()) - full.theta_hat).norm() == 0.0);
}

TEST_CASE("second-order accuracy of the IJ expansion") {
  HmmModel m({.emission = Emission::Poisson, .K = 2});
  const auto data = m.simulate(m.default_truth(), {.length = 60}, 8);
  LwcvObjective obj(m, data, 0, Scheme::A);
  const FitResult full = fit(obj, Eigen::VectorXd::Ones(60), m.initial_params(data), {.tol = 1e-10});
  const HessianBundle b = build_bundle(obj, full.theta_hat);
  const Fold o({4, 5, 6, 30});
  std::vector<double> ratio;
  for (double eps : {0.2, 0.1, 0.05}) {
    Eigen::VectorXd w = Eigen::VectorXd::Ones(60);
    for (Index t : o.indices()) w[t] = 1.0 - eps;
    const Eigen::VectorXd exact = fit(obj, w, full.theta_hat, {.tol = 1e-11}).theta_hat;
    ratio.push_back((exact - ij_params_at(b, w)).norm() / (eps * eps));
  }
  const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
  CHECK(*hi <= 4.0 * *lo);
}

TEST_CASE("ridge ladder") {
  CHECK(factorize_negative(-Eigen::MatrixXd::Identity(3, 3)).ridge == 0.0);
  CHECK_THROWS_AS(factorize_negative(Eigen::MatrixXd::Identity(3, 3)), SingularHessianError);
  Eigen::MatrixXd H = -Eigen::MatrixXd::Identity(3, 3);
  H(2, 2) = 0.0;
  CHECK(factorize_negative(H).ridge == 1e-5);

  // An unregularized CRF is invariant to shifting all start scores, so -H is
  // singular and the first rung applies.
  CrfModel m({.K = 3, .F = 4, .precision = 0.0});
  const auto data = m.simulate(m.default_truth(), {.num_structures = 6, .length = 8}, 5);
  LscvObjective obj(m, data);
  const HessianBundle b = build_bundle(obj, Eigen::VectorXd::Zero(m.num_params()));
  CHECK(b.ridge == 1e-5);
}

TEST_CASE("chain jacobian fast path matches the generic mixed jacobian") {
  std::mt19937_64 rng(12);
  HmmModel m({.emission = Emission::Poisson, .K = 3});
  const auto data = m.simulate(m.default_truth(), {.length = 9}, 3);
  for (Scheme scheme : {Scheme::A, Scheme::B}) {
    LwcvObjective obj(m, data, 0, scheme);
    const Eigen::VectorXd th = m.default_truth() + vec(rng, m.num_params(), 0.2);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(9);
    w[2] = 0.0;
    w[5] = 0.4;
    const Eigen::MatrixXd fast = obj.jacobian_at(th, w, 1);
    const Eigen::MatrixXd slow = mixed_jacobian(obj, th, w);
    CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, slow.cwiseAbs().maxCoeff()));
  }
  EventModel ev;
  const auto ed = ev.simulate(ev.default_truth(), {.length = 12}, 4);
  LwcvObjective eobj(ev, ed, 0, Scheme::A);
  const Eigen::VectorXd th = ev.default_truth();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(12);
  const Eigen::MatrixXd slow = mixed_jacobian(eobj, th, ones);
  CHECK((eobj.jacobian_at(th, ones, 1) - slow).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, slow.cwiseAbs().maxCoeff()));
}

TEST_CASE("structure-level hessian equals the generic hessian") {
  HmmModel m({.emission = Emission::Gaussian, .K = 2, .prior = true});
  const auto data = m.simulate(m.default_truth(), {.num_structures = 4, .length = 10}, 6);
  LscvObjective obj(m, data);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
  w[1] = 0.0;
  const Eigen::VectorXd th = m.default_truth();
  const Eigen::MatrixXd a = obj.hessian_at(th, w, 2);
  const Eigen::MatrixXd b = hessian(obj, th, w);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff()));
  CHECK(obj.hessian_at(th, w, 1) == a);
}
