#include "structcv/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "structcv/errors.hpp"

namespace structcv {

std::string to_string(Scheme s) { return s == Scheme::A ? "A" : "B"; }

std::string to_string(WeightTarget t) { return t == WeightTarget::WithinStructure ? "within" : "structure"; }

Scheme parse_scheme(const std::string& s) {
  if (s == "A" || s == "a") return Scheme::A;
  if (s == "B" || s == "b") return Scheme::B;
  throw ArgumentError("unknown weighting scheme '" + s + "' (expected A or B)");
}

WeightTarget parse_target(const std::string& s) {
  if (s == "within" || s == "lwcv") return WeightTarget::WithinStructure;
  if (s == "structure" || s == "lscv") return WeightTarget::Structure;
  throw ArgumentError("unknown CV target '" + s + "' (expected within or structure)");
}

Graph Graph::path(Index n) {
  Graph g{n, {}};
  for (Index t = 1; t < n; ++t) g.edges.emplace_back(t - 1, t);
  return g;
}

Graph Graph::grid(Index rows, Index cols) {
  Graph g{rows * cols, {}};
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const Index v = r * cols + c;
      if (c + 1 < cols) g.edges.emplace_back(v, v + 1);
      if (r + 1 < rows) g.edges.emplace_back(v, v + cols);
    }
  }
  return g;
}

Graph Graph::ring(Index n) {
  Graph g = path(n);
  if (n > 2) g.edges.emplace_back(n - 1, 0);
  return g;
}

bool Graph::is_path() const {
  if (static_cast<Index>(edges.size()) != std::max<Index>(num_nodes - 1, 0)) return false;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [a, b] = edges[i];
    const auto t = static_cast<Index>(i) + 1;
    if (!((a == t - 1 && b == t) || (a == t && b == t - 1))) return false;
  }
  return true;
}

std::vector<std::vector<Index>> Graph::adjacency() const {
  std::vector<std::vector<Index>> adj(static_cast<std::size_t>(num_nodes));
  for (const auto& [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& n : adj) std::sort(n.begin(), n.end());
  return adj;
}

void Graph::validate() const {
  std::set<std::pair<Index, Index>> seen;
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= num_nodes || b >= num_nodes) {
      throw ArgumentError("graph edge (" + std::to_string(a) + ", " + std::to_string(b) + ") out of range");
    }
    if (a == b) throw ArgumentError("graph self-loop at node " + std::to_string(a));
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      throw ArgumentError("duplicate graph edge (" + std::to_string(a) + ", " + std::to_string(b) + ")");
    }
  }
}

long Structure::count(Index t, Index r) const {
  const double v = x(t, r);
  if (!(v >= 0.0) || std::floor(v) != v) {
    throw ArgumentError("observation at t=" + std::to_string(t) + " is not a nonnegative integer count");
  }
  return static_cast<long>(v);
}

void Structure::validate(std::optional<Index> num_labels) const {
  if (graph.num_nodes != length()) throw ArgumentError("structure graph size does not match its length");
  graph.validate();
  if (!x.allFinite()) throw ArgumentError("structure has non-finite observations");
  if (!labels.empty()) {
    if (static_cast<Index>(labels.size()) != length()) throw ArgumentError("label count does not match length");
    for (Index z : labels) {
      if (z < 0 || (num_labels && z >= *num_labels)) throw ArgumentError("label out of range");
    }
  }
  if (!day.empty()) {
    if (static_cast<Index>(day.size()) != length()) throw ArgumentError("day index count does not match length");
    for (Index d : day) {
      if (d < 0 || d >= 7) throw ArgumentError("day-of-week index out of range");
    }
  }
}

void StructuredDataset::validate(std::optional<Index> num_labels) const {
  if (structures.empty()) throw ArgumentError("dataset has no structures");
  for (const auto& s : structures) s.validate(num_labels);
}

ParamVector::ParamVector(Eigen::VectorXd values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw ArgumentError("parameter vector has non-finite entries");
}

WeightVector WeightVector::ones(WeightTarget target, Index length) {
  return {target, Eigen::VectorXd::Ones(length)};
}

Fold::Fold(std::vector<Index> indices) : indices_(std::move(indices)) {
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] < 0) throw ArgumentError("fold index must be nonnegative");
    if (i > 0 && indices_[i] <= indices_[i - 1]) throw ArgumentError("fold indices must be strictly increasing");
  }
}

void FoldPlan::validate(Index length) const {
  for (std::size_t i = 0; i < folds.size(); ++i) {
    for (Index t : folds[i].indices()) {
      if (t >= length) {
        throw ArgumentError("fold " + std::to_string(i) + " index " + std::to_string(t) + " outside [0, " +
                            std::to_string(length) + ")");
      }
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (folds[i] == folds[j]) throw ArgumentError("duplicate fold " + std::to_string(i));
    }
  }
}

WeightVector fold_to_weights(const Fold& fold, Index length, WeightTarget target) {
  WeightVector w = WeightVector::ones(target, length);
  for (Index t : fold.indices()) {
    if (t >= length) {
      throw ArgumentError("fold index " + std::to_string(t) + " outside [0, " + std::to_string(length) + ")");
    }
    w.values[t] = 0.0;
  }
  return w;
}

Fold weights_to_fold(const WeightVector& w) {
  std::vector<Index> zeros;
  for (Index t = 0; t < w.values.size(); ++t) {
    if (w.values[t] == 0.0) zeros.push_back(t);
  }
  return Fold(std::move(zeros));
}

double clique_weight(Scheme scheme, std::initializer_list<Index> clique, const Eigen::VectorXd& w) {
  for (Index t : clique) {
    if (t < 0 || t >= w.size()) throw ArgumentError("clique index out of range");
  }
  std::vector<Index> c(clique);
  return clique_weight<double>(scheme, std::span<const Index>(c),
                               std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
}

}  // namespace structcv
