#include "doctest.h"

#include "structcv/core.hpp"
#include "structcv/errors.hpp"

using namespace structcv;

TEST_CASE("fold_to_weights") {
  CHECK(fold_to_weights(Fold({1}), 3).values == Eigen::Vector3d(1, 0, 1));
  CHECK(fold_to_weights(Fold({0, 1, 2}), 3).values == Eigen::Vector3d::Zero());

  const WeightVector future = fold_to_weights(Fold({3, 4, 5, 6, 7, 8, 9}), 10);
  CHECK(future.values.head(3).isOnes());
  CHECK(future.values.tail(7).isZero());
  CHECK_THROWS_AS(fold_to_weights(Fold({3}), 3), ArgumentError);
}

TEST_CASE("weights_to_fold inverts fold_to_weights") {
  for (const auto& idx : std::vector<std::vector<Index>>{{}, {0}, {2, 5, 6}, {0, 1, 2, 3, 4, 5, 6, 7}}) {
    const Fold f(idx);
    CHECK(weights_to_fold(fold_to_weights(f, 8)) == f);
  }
}

TEST_CASE("folds reject bad index sets") {
  CHECK_THROWS_AS(Fold({2, 1}), ArgumentError);
  CHECK_THROWS_AS(Fold({1, 1}), ArgumentError);
  CHECK_THROWS_AS(Fold({-1}), ArgumentError);
  FoldPlan plan{{Fold({1}), Fold({1})}, Scheme::A, WeightTarget::WithinStructure, 0};
  CHECK_THROWS_AS(plan.validate(4), ArgumentError);
  plan.folds[1] = Fold({4});
  CHECK_THROWS_AS(plan.validate(4), ArgumentError);
  plan.folds[1] = Fold({3});
  CHECK_NOTHROW(plan.validate(4));
}

TEST_CASE("clique_weight") {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
  w[0] = 1.0;
  w[1] = 0.0;
  CHECK(clique_weight(Scheme::A, {0, 1}, w) == 1.0);
  CHECK(clique_weight(Scheme::B, {0, 1}, w) == 0.0);
  w.setConstant(0.5);
  CHECK(clique_weight(Scheme::B, {0, 1}, w) == 0.25);
  CHECK_THROWS_AS(clique_weight(Scheme::B, {0, 4}, w), ArgumentError);
}

TEST_CASE("graph validation") {
  CHECK(Graph::path(5).is_path());
  CHECK_FALSE(Graph::ring(4).is_path());
  CHECK(Graph::grid(3, 3).edges.size() == 12);
  CHECK_THROWS_AS((Graph{3, {{0, 3}}}.validate()), ArgumentError);
  CHECK_THROWS_AS((Graph{3, {{1, 1}}}.validate()), ArgumentError);
  CHECK_THROWS_AS((Graph{3, {{0, 1}, {1, 0}}}.validate()), ArgumentError);
}

TEST_CASE("structures and datasets") {
  Structure s;
  s.x = Eigen::MatrixXd::Constant(3, 1, 2.0);
  s.graph = Graph::path(3);
  CHECK_NOTHROW(s.validate());
  CHECK(s.count(1) == 2);
  s.x(1, 0) = 1.5;
  CHECK_THROWS_AS(s.count(1), ArgumentError);
  s.labels = {0, 1, 3};
  CHECK_THROWS_AS(s.validate(3), ArgumentError);
  CHECK_THROWS_AS(StructuredDataset{}.validate(), ArgumentError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(2);
  bad << 1.0, std::nan("");
  CHECK_THROWS_AS(ParamVector{bad}, ArgumentError);
  CHECK(parse_scheme("B") == Scheme::B);
  CHECK_THROWS_AS(parse_scheme("C"), ArgumentError);
}
