#include "structcv/models/spatial.hpp"

#include <algorithm>
#include <cmath>

namespace structcv {

SpatialModel::SpatialModel(SpatialConfig config) : cfg_(config) {
  if (!(cfg_.beta >= 0.0) || !std::isfinite(cfg_.beta)) throw ArgumentError("spatial: beta must be nonnegative");
  if (cfg_.prior && !(cfg_.gamma_shape > 0 && cfg_.gamma_rate > 0)) {
    throw ArgumentError("spatial: prior hyperparameters must be positive");
  }
}

const std::vector<Index>& SpatialModel::order_for(const Graph& g) const {
  std::lock_guard<std::mutex> lock(order_mutex_);
  for (const auto& [graph, order] : orders_) {
    if (graph.num_nodes == g.num_nodes && graph.edges == g.edges) return order;
  }
  orders_.emplace_back(g, minfill_order(g));
  return orders_.back().second;
}

void SpatialModel::check(const Structure& s) const {
  s.graph.validate();
  if (s.graph.num_nodes != s.length()) throw ArgumentError("spatial: graph size does not match the data");
  if (s.dim() != 1) throw ArgumentError("spatial: expected one count column");
  for (Index t = 0; t < s.length(); ++t) s.count(t);
}

NaturalParams SpatialModel::unpack(const Eigen::VectorXd& theta) const {
  check_size(static_cast<std::size_t>(theta.size()));
  NaturalParams n;
  n["rate"] = theta.array().exp().matrix();
  n["beta"] = Eigen::MatrixXd::Constant(1, 1, cfg_.beta);
  return n;
}

Eigen::VectorXd SpatialModel::pack(const NaturalParams& n) const {
  const auto it = n.find("rate");
  if (it == n.end() || it->second.size() != 2) throw ArgumentError("spatial: 'rate' needs 2 entries");
  Eigen::VectorXd th(2);
  th << std::log(it->second(0)), std::log(it->second(1));
  if (!th.allFinite()) throw ArgumentError("spatial: rates must be positive");
  return th;
}

Eigen::VectorXd SpatialModel::default_truth() const {
  Eigen::VectorXd th(2);
  th << std::log(2.0), std::log(8.0);
  return th;
}

Eigen::VectorXd SpatialModel::initial_params(const StructuredDataset& data) const {
  data.validate();
  std::vector<double> counts;
  for (const auto& s : data.structures) {
    check(s);
    for (Index t = 0; t < s.length(); ++t) counts.push_back(s.x(t, 0));
  }
  std::sort(counts.begin(), counts.end());
  Eigen::VectorXd th(2);
  th << std::log(counts[counts.size() / 4] + 0.5), std::log(counts[(3 * counts.size()) / 4] + 1.0);
  return th;
}

StructuredDataset SpatialModel::simulate(const Eigen::VectorXd& theta, const SimulationSpec& spec,
                                         std::uint64_t seed) const {
  check_size(static_cast<std::size_t>(theta.size()));
  if (spec.grid_rows < 1 || spec.grid_cols < 1) throw ArgumentError("spatial: simulation needs grid dimensions");
  std::mt19937_64 rng(seed);
  StructuredDataset data;
  for (Index i = 0; i < spec.num_structures; ++i) {
    Structure s;
    s.graph = Graph::grid(spec.grid_rows, spec.grid_cols);
    const Index T = s.graph.num_nodes;
    s.x = Eigen::MatrixXd::Zero(T, 1);
    std::vector<double> th(theta.data(), theta.data() + 2);
    GraphPotentials<double> field = potentials<double>(s, std::span<const double>(th));
    const auto z = sample_latent_field(field, false, rng, order_for(s.graph));
    for (Index t = 0; t < T; ++t) {
      std::poisson_distribution<long> pois(std::exp(theta[z[t]]));
      s.x(t, 0) = static_cast<double>(pois(rng));
    }
    data.structures.push_back(std::move(s));
  }
  return data;
}

}  // namespace structcv
