#pragma once

// Shared data types: datasets, parameters, weights, folds and weighting
// schemes. All indices are zero-based.

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "structcv/dual.hpp"

namespace structcv {

using Index = Eigen::Index;

// (A) weights only emission factors; (B) also weights every latent clique
// factor by the product of its members' weights.
enum class Scheme { A, B };

enum class WeightTarget { WithinStructure, Structure };

std::string to_string(Scheme s);
std::string to_string(WeightTarget t);
Scheme parse_scheme(const std::string& s);
WeightTarget parse_target(const std::string& s);

using Edge = std::pair<Index, Index>;

struct Graph {
  Index num_nodes = 0;
  std::vector<Edge> edges;

  static Graph path(Index n);
  static Graph grid(Index rows, Index cols);
  static Graph ring(Index n);

  bool is_path() const;
  std::vector<std::vector<Index>> adjacency() const;
  void validate() const;
};

// One structured observation: T nodes with R-dimensional observations, an
// optional label per node (CRFs), an optional day-of-week index (event
// counts), and the node graph.
struct Structure {
  Eigen::MatrixXd x;            // T x R
  std::vector<Index> labels;    // empty, or T entries in [0, K)
  std::vector<Index> day;       // empty, or T entries in [0, 7)
  Graph graph;

  Index length() const { return x.rows(); }
  Index dim() const { return x.cols(); }
  bool has_labels() const { return !labels.empty(); }

  // Integer count at (t, r); throws ArgumentError when negative or fractional.
  long count(Index t, Index r = 0) const;

  void validate(std::optional<Index> num_labels = std::nullopt) const;
};

struct StructuredDataset {
  std::vector<Structure> structures;

  Index size() const { return static_cast<Index>(structures.size()); }
  void validate(std::optional<Index> num_labels = std::nullopt) const;
};

// Unconstrained parameter vector; every entry must be finite.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(Eigen::VectorXd values);

  const Eigen::VectorXd& values() const { return values_; }
  Index size() const { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }
  std::span<const double> span() const { return {values_.data(), static_cast<std::size_t>(values_.size())}; }

 private:
  Eigen::VectorXd values_;
};

struct WeightVector {
  WeightTarget target = WeightTarget::WithinStructure;
  Eigen::VectorXd values;

  static WeightVector ones(WeightTarget target, Index length);
  std::span<const double> span() const { return {values.data(), static_cast<std::size_t>(values.size())}; }
};

// Strictly increasing index set left out in one CV round.
class Fold {
 public:
  Fold() = default;
  explicit Fold(std::vector<Index> indices);

  const std::vector<Index>& indices() const { return indices_; }
  Index size() const { return static_cast<Index>(indices_.size()); }
  bool empty() const { return indices_.empty(); }
  bool operator==(const Fold& o) const { return indices_ == o.indices_; }

 private:
  std::vector<Index> indices_;
};

struct FoldPlan {
  std::vector<Fold> folds;
  Scheme scheme = Scheme::A;
  WeightTarget target = WeightTarget::WithinStructure;
  Index structure = 0;  // designated structure for within-structure plans

  Index size() const { return static_cast<Index>(folds.size()); }
  // Rejects duplicate folds and indices outside [0, length).
  void validate(Index length) const;
};

// Ones everywhere except zeros at the fold's indices.
WeightVector fold_to_weights(const Fold& fold, Index length, WeightTarget target = WeightTarget::WithinStructure);

// The zero positions of a 0/1 weight vector.
Fold weights_to_fold(const WeightVector& w);

// Multiplier applied to a latent clique factor: 1 under scheme A, the product
// of member weights under scheme B.
template <class W>
W clique_weight(Scheme scheme, std::span<const Index> clique, std::span<const W> w) {
  if (scheme == Scheme::A) return W(1.0);
  W out(1.0);
  for (Index t : clique) out *= w[static_cast<std::size_t>(t)];
  return out;
}

double clique_weight(Scheme scheme, std::initializer_list<Index> clique, const Eigen::VectorXd& w);

}  // namespace structcv
