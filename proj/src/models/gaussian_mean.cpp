#include "structcv/models/gaussian_mean.hpp"

#include <random>

namespace structcv {

GaussianMeanModel::GaussianMeanModel(GaussianMeanConfig config) : cfg_(config) {
  if (cfg_.R < 1) throw ArgumentError("gaussian-mean: R must be positive");
  if (!(cfg_.precision >= 0.0)) throw ArgumentError("gaussian-mean: precision must be nonnegative");
}

void GaussianMeanModel::check(const Structure& s) const {
  if (s.dim() != cfg_.R) throw ArgumentError("gaussian-mean: expected " + std::to_string(cfg_.R) + " columns");
  if (!s.x.allFinite()) throw ArgumentError("gaussian-mean: observations must be finite");
}

NaturalParams GaussianMeanModel::unpack(const Eigen::VectorXd& theta) const {
  check_size(static_cast<std::size_t>(theta.size()));
  return {{"mean", theta}};
}

Eigen::VectorXd GaussianMeanModel::pack(const NaturalParams& natural) const {
  const auto it = natural.find("mean");
  if (it == natural.end() || it->second.size() != cfg_.R) throw ArgumentError("gaussian-mean: bad 'mean'");
  return Eigen::Map<const Eigen::VectorXd>(it->second.data(), cfg_.R);
}

Eigen::VectorXd GaussianMeanModel::default_truth() const { return Eigen::VectorXd::Ones(cfg_.R); }

Eigen::VectorXd GaussianMeanModel::initial_params(const StructuredDataset& data) const {
  data.validate();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(cfg_.R);
  Index n = 0;
  for (const auto& s : data.structures) {
    check(s);
    sum += s.x.colwise().sum().transpose();
    n += s.length();
  }
  return n > 0 ? Eigen::VectorXd(sum / static_cast<double>(n)) : sum;
}

StructuredDataset GaussianMeanModel::simulate(const Eigen::VectorXd& theta, const SimulationSpec& spec,
                                              std::uint64_t seed) const {
  check_size(static_cast<std::size_t>(theta.size()));
  if (spec.num_structures < 1 || spec.length < 1) throw ArgumentError("gaussian-mean: empty simulation spec");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  StructuredDataset data;
  for (Index i = 0; i < spec.num_structures; ++i) {
    Structure s;
    s.x.resize(spec.length, cfg_.R);
    for (Index t = 0; t < spec.length; ++t) {
      for (Index r = 0; r < cfg_.R; ++r) s.x(t, r) = theta[r] + noise(rng);
    }
    s.graph = Graph::path(spec.length);
    data.structures.push_back(std::move(s));
  }
  return data;
}

}  // namespace structcv
