#include <doctest.h>

#include <cmath>
#include <set>

#include "structcv/cv.hpp"
#include "structcv/models.hpp"

using namespace structcv;

namespace {

StructuredDataset column(std::vector<double> ys) {
  Structure s;
  s.x = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Index>(ys.size()));
  s.graph = Graph::path(s.length());
  return {{s}};
}

double log_normal(double x, double mu) { return -0.5 * std::log(2 * M_PI) - 0.5 * (x - mu) * (x - mu); }

// The Gaussian-mean objective, except that it is NaN away from theta = 3
// whenever index 0 is held out, so those refits cannot make progress.
class Sabotaged final : public Objective {
 public:
  Sabotaged(const Model& m, const StructuredDataset& d) : Objective(m, d), inner_(m, d, 0, Scheme::A) {}
  WeightTarget target() const override { return WeightTarget::WithinStructure; }
  Index num_weights() const override { return inner_.num_weights(); }
  double eval(std::span<const double> t, std::span<const double> w) const override {
    if (w[0] == 0.0 && t[0] != 3.0) return std::nan("");
    return inner_.eval(t, w);
  }
  Dual eval(std::span<const Dual> t, std::span<const double> w) const override { return inner_.eval(t, w); }
  Dual2 eval(std::span<const Dual2> t, std::span<const double> w) const override { return inner_.eval(t, w); }
  Dual2 eval(std::span<const Dual2> t, std::span<const Dual2> w) const override { return inner_.eval(t, w); }
  double fold_loss(const Eigen::VectorXd& th, const Fold& f) const override { return inner_.fold_loss(th, f); }
  std::vector<double> point_losses(const Eigen::VectorXd& th, const Fold& f) const override {
    return inner_.point_losses(th, f);
  }

 private:
  LwcvObjective inner_;
};

}  // namespace

TEST_CASE("iid folds") {
  const FoldPlan a = make_folds_iid(100, 10, 5, 7);
  REQUIRE(a.size() == 5);
  for (const auto& f : a.folds) CHECK(f.size() == 10);
  CHECK(make_folds_iid(100, 10, 5, 7).folds == a.folds);
  CHECK_FALSE(make_folds_iid(100, 10, 5, 8).folds == a.folds);
  a.validate(100);

  const FoldPlan big = make_folds_iid(10000, 2, 10, 1);
  std::set<std::vector<Index>> distinct;
  for (const auto& f : big.folds) distinct.insert(f.indices());
  CHECK(distinct.size() == 10);

  CHECK_THROWS_AS(make_folds_iid(100, 0.5, 1, 1), ArgumentError);
  CHECK_THROWS_AS(make_folds_iid(100, 100, 1, 1), ArgumentError);
  CHECK_THROWS_AS(make_folds_iid(3, 40, 4, 1), ArgumentError);
}

TEST_CASE("contiguous folds follow the block formula literally") {
  const Fold f = contiguous_fold(100, 10, 50);
  REQUIRE(f.size() == 11);
  CHECK(f.indices().front() == 39);
  CHECK(f.indices().back() == 49);
  const Fold last = contiguous_fold(100, 10, 100);
  CHECK(last.indices().back() == 99);
  CHECK(last.indices().front() == 89);
  CHECK_THROWS_AS(contiguous_fold(100, 10, 10), ArgumentError);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const FoldPlan p = make_folds_contiguous(100, 10, 3, seed);
    for (const auto& fold : p.folds) {
      CHECK(fold.size() == 11);
      CHECK(fold.indices().front() >= 0);
      CHECK(fold.indices().back() <= 99);
    }
  }
}

TEST_CASE("future and leave-one-out folds") {
  CHECK(make_folds_future(10, 9).folds[0].indices() == std::vector<Index>{9});
  const FoldPlan mocap = make_folds_future(1484, 1454);
  CHECK(mocap.folds[0].size() == 30);
  CHECK(mocap.folds[0].indices().back() == 1483);
  CHECK_THROWS_AS(make_folds_future(10, 0), ArgumentError);
  CHECK_THROWS_AS(make_folds_future(10, 10), ArgumentError);
  const FoldPlan loo = make_folds_loo(4);
  CHECK(loo.size() == 4);
  CHECK(loo.folds[2].indices() == std::vector<Index>{2});
}

TEST_CASE("gaussian leave-one-out against closed forms") {
  const std::vector<double> ys = {1, 2, 3, 6, -0.5};
  const auto data = column(ys);
  GaussianMeanModel m;
  LwcvObjective obj(m, data, 0, Scheme::A);
  const double N = 5, mean = data.structures[0].x.mean();
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, mean);
  const FoldPlan plan = make_folds_loo(5);

  const CVReport exact = exact_cv(obj, plan, theta);
  const CVReport ij = approx_cv(obj, plan, theta, Method::IJ);
  const CVReport ns = approx_cv(obj, plan, theta, Method::NS);
  CHECK(exact.refits == 5);
  CHECK(ij.refits == 0);
  CHECK(ns.refits == 0);
  for (Index t = 0; t < 5; ++t) {
    const double y = ys[static_cast<std::size_t>(t)];
    const double loo = mean - (y - mean) / (N - 1);
    const double ijm = mean - (y - mean) / N;
    CHECK(exact.folds[t].loss == doctest::Approx(-log_normal(y, loo)).epsilon(1e-9));
    CHECK(ns.folds[t].loss == doctest::Approx(-log_normal(y, loo)).epsilon(1e-12));
    CHECK(ij.folds[t].loss == doctest::Approx(-log_normal(y, ijm)).epsilon(1e-12));
    CHECK(exact.folds[t].point_losses.size() == 1);
  }
  double mean_loss = 0;
  for (const auto& f : exact.folds) mean_loss += f.loss / 5;
  CHECK(exact.mean_loss == doctest::Approx(mean_loss).epsilon(1e-14));

  const Comparison c = compare_reports(exact, ij);
  CHECK(c.folds.size() == 5);
  CHECK(c.points.size() == 5);
  CHECK(c.points[3].t == 3);
  CHECK(c.fold_stats.correlation > 0.99);
}

TEST_CASE("empty plans and empty folds") {
  const auto data = column({1, 2, 3});
  GaussianMeanModel m;
  LwcvObjective obj(m, data, 0, Scheme::A);
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 2.0);
  CHECK(exact_cv(obj, FoldPlan{}, theta).folds.empty());
  FoldPlan plan;
  plan.folds.push_back(Fold());
  const CVReport r = approx_cv(obj, plan, theta, Method::IJ);
  CHECK(r.folds[0].theta == theta);
  CHECK(r.folds[0].loss == 0.0);
}

TEST_CASE("comparison statistics") {
  const auto data = column({1, 2, 3, 6});
  GaussianMeanModel m;
  LwcvObjective obj(m, data, 0, Scheme::A);
  const CVReport a = exact_cv(obj, make_folds_loo(4), Eigen::VectorXd::Constant(1, 3.0));
  const Comparison same = compare_reports(a, a);
  CHECK(same.fold_stats.mean == 0.0);
  CHECK(same.fold_stats.correlation == doctest::Approx(1.0).epsilon(1e-14));
  CVReport scaled = a;
  for (auto& f : scaled.folds) f.loss *= 1.01;
  for (const auto& row : compare_reports(a, scaled).folds) CHECK(row.rel_err == doctest::Approx(0.01).epsilon(1e-12));
  CVReport shorter = a;
  shorter.folds.pop_back();
  CHECK_THROWS_AS(compare_reports(a, shorter), ArgumentError);
  CVReport moved = a;
  moved.folds[0].fold = Fold({1});
  CHECK_THROWS_AS(compare_reports(a, moved), ArgumentError);
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("hmm refits converge and folds line up across methods") {
  HmmModel m({.emission = Emission::Poisson, .K = 2});
  const auto data = m.simulate(m.default_truth(), {.length = 200}, 31);
  LwcvObjective obj(m, data, 0, Scheme::A);
  const FitResult full = fit(obj, Eigen::VectorXd::Ones(200), m.initial_params(data));
  FoldPlan plan = make_folds_iid(200, 5, 5, 3);
  const CVOptions opts{.threads = 2, .point_losses = true};
  const CVReport exact = exact_cv(obj, plan, full.theta_hat, opts);
  const CVReport ij = approx_cv(obj, plan, full.theta_hat, Method::IJ, opts);
  REQUIRE(exact.folds.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& f = exact.folds[i];
    CHECK_FALSE(f.failed);
    const Eigen::VectorXd g = gradient(obj, f.theta, fold_to_weights(f.fold, 200).values);
    CHECK(g.lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(f.fold == ij.folds[i].fold);
    CHECK(f.point_losses.size() == 10);
  }
  const Comparison c = compare_reports(exact, ij);
  CHECK(c.points.size() == 50);
  CHECK(c.fold_stats.median < 0.05);
  CHECK(c.speedup > 0.0);

  // Threads do not change results.
  const CVReport serial = exact_cv(obj, plan, full.theta_hat, {.threads = 1, .point_losses = true});
  for (std::size_t i = 0; i < 5; ++i) CHECK(serial.folds[i].loss == exact.folds[i].loss);

  plan.scheme = Scheme::B;
  CHECK_THROWS_AS(exact_cv(obj, plan, full.theta_hat), ArgumentError);
}

TEST_CASE("failed refits are listed and the report is still produced") {
  const auto data = column({1, 2, 3, 6});
  GaussianMeanModel m;
  Sabotaged obj(m, data);
  const CVReport r = exact_cv(obj, make_folds_loo(4), Eigen::VectorXd::Constant(1, 3.0));
  CHECK(r.failures() == std::vector<Index>{0});
  CHECK(r.folds[0].failed);
  CHECK_FALSE(r.folds[1].failed);
  CHECK(std::isfinite(r.mean_loss));
}

TEST_CASE("nonnegative line fit") {
  const LinearFit exact = nonnegative_line_fit({1, 2, 3}, {2.5, 4.5, 6.5});
  CHECK(exact.slope == doctest::Approx(2.0));
  CHECK(exact.intercept == doctest::Approx(0.5));
  CHECK(exact.r_squared == doctest::Approx(1.0));
  const LinearFit down = nonnegative_line_fit({1, 2, 3}, {3, 2, 1});
  CHECK(down.slope == 0.0);
  CHECK(down.intercept == doctest::Approx(2.0));
  const LinearFit through = nonnegative_line_fit({1, 2, 3}, {-1, 2, 5});
  CHECK(through.intercept == 0.0);
  CHECK(through.slope >= 0.0);
}

TEST_CASE("inexact sweep on the gaussian mean") {
  GaussianMeanModel m({.precision = 0.1});
  const auto data = m.simulate(Eigen::VectorXd::Constant(1, 2.0), {.length = 30}, 41);
  LwcvObjective obj(m, data, 0, Scheme::A);
  const FitResult full = fit(obj, Eigen::VectorXd::Ones(30), Eigen::VectorXd::Constant(1, -20.0), {.tol = 1e-10});
  const FoldPlan plan = make_folds_iid(30, 10, 6, 2);
  const CVReport exact = exact_cv(obj, plan, full.theta_hat, {.optimizer = {.tol = 1e-10}});
  const InexactSweepRecord rec = inexact_sweep(obj, plan, full, exact);
  REQUIRE(rec.points.size() == full.trajectory.size());
  const CVReport ij = approx_cv(obj, plan, full.theta_hat, Method::IJ);
  const double eps_ij = std::abs(ij.mean_loss - exact.mean_loss);
  CHECK(rec.points.back().error == doctest::Approx(eps_ij).epsilon(1e-12));
  CHECK(rec.points.back().eps_theta == 0.0);
  CHECK(rec.points.front().error >= rec.points.back().error);
  CHECK(rec.slope >= 0.0);
  CHECK(rec.intercept >= 0.0);
  CHECK(tail_non_increasing(rec, 10, 0.1));

  const auto S = static_cast<Index>(full.trajectory.size());
  const InexactSweepRecord one = inexact_sweep(obj, plan, full, exact, {.stride = S + 3});
  REQUIRE(one.points.size() == 1);
  CHECK(one.points[0].s == S);
  CHECK_THROWS_AS(inexact_sweep(obj, plan, full, ij), ArgumentError);
}
