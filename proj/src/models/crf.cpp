#include "structcv/models/crf.hpp"

#include <cmath>

namespace structcv {

namespace {

CrfConfig validated(CrfConfig c) {
  if (c.K < 1 || c.F < 1) throw ArgumentError("crf: K and F must be positive");
  if (!(c.precision >= 0.0) || !std::isfinite(c.precision)) throw ArgumentError("crf: prior precision must be >= 0");
  if (c.vocabulary < 1) throw ArgumentError("crf: vocabulary must be positive");
  return c;
}

}  // namespace

CrfModel::CrfModel(CrfConfig config) : cfg_(validated(config)) {}

void CrfModel::check(const Structure& s) const {
  if (!s.graph.is_path()) throw ArgumentError("crf: structures must be chains");
  if (s.dim() != cfg_.F) {
    throw ArgumentError("crf: expected " + std::to_string(cfg_.F) + " features, got " + std::to_string(s.dim()));
  }
  if (static_cast<Index>(s.labels.size()) != s.length()) throw ArgumentError("crf: every position needs a label");
  for (Index z : s.labels) {
    if (z < 0 || z >= cfg_.K) throw ArgumentError("crf: label out of range");
  }
}

NaturalParams CrfModel::unpack(const Eigen::VectorXd& theta) const {
  check_size(static_cast<std::size_t>(theta.size()));
  const Index K = cfg_.K, F = cfg_.F;
  NaturalParams n;
  n["emission"] = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      theta.data(), K, F);
  n["transition"] = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      theta.data() + K * F, K, K);
  n["start"] = theta.tail(K);
  return n;
}

Eigen::VectorXd CrfModel::pack(const NaturalParams& n) const {
  const Index K = cfg_.K, F = cfg_.F;
  auto get = [&](const std::string& key, Index rows, Index cols) -> const Eigen::MatrixXd& {
    const auto it = n.find(key);
    if (it == n.end() || it->second.rows() != rows || it->second.cols() != cols) {
      throw ArgumentError("crf: natural parameter '" + key + "' missing or mis-shaped");
    }
    return it->second;
  };
  Eigen::VectorXd th(num_params());
  const Eigen::MatrixXd& W = get("emission", K, F);
  const Eigen::MatrixXd& A = get("transition", K, K);
  for (Index k = 0; k < K; ++k) {
    th.segment(k * F, F) = W.row(k).transpose();
    th.segment(K * F + k * K, K) = A.row(k).transpose();
  }
  th.tail(K) = get("start", K, 1).col(0);
  return th;
}

Eigen::VectorXd CrfModel::default_truth() const {
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd th(num_params());
  for (Index i = 0; i < th.size(); ++i) th[i] = normal(rng);
  const Index K = cfg_.K, F = cfg_.F;
  for (Index a = 0; a < K; ++a) {
    for (Index b = 0; b < K; ++b) th[K * F + a * K + b] = 0.5 * th[K * F + a * K + b] + (a == b ? 1.0 : 0.0);
  }
  th.tail(K) *= 0.5;
  return th;
}

Eigen::VectorXd CrfModel::initial_params(const StructuredDataset& data) const {
  data.validate(cfg_.K);
  for (const auto& s : data.structures) check(s);
  return Eigen::VectorXd::Zero(num_params());
}

Eigen::VectorXd hashed_token_features(std::uint64_t token, Index F) {
  Eigen::VectorXd x(F);
  for (Index f = 0; f < F; ++f) {
    // splitmix64 of (token, f)
    std::uint64_t z = token * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(f) + 1;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    x[f] = static_cast<double>(z % 3) - 1.0;
  }
  return x;
}

StructuredDataset CrfModel::simulate(const Eigen::VectorXd& theta, const SimulationSpec& spec,
                                     std::uint64_t seed) const {
  check_size(static_cast<std::size_t>(theta.size()));
  if (spec.num_structures < 1 || spec.length < 1) throw ArgumentError("crf: empty simulation spec");
  const Index lo = spec.min_length > 0 ? spec.min_length : spec.length;
  if (lo > spec.length) throw ArgumentError("crf: min_length exceeds length");
  const Index K = cfg_.K;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> length(lo, spec.length);
  std::uniform_int_distribution<std::uint64_t> token(0, static_cast<std::uint64_t>(cfg_.vocabulary - 1));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> th(theta.data(), theta.data() + theta.size());
  StructuredDataset data;
  for (Index i = 0; i < spec.num_structures; ++i) {
    const Index T = length(rng);
    Structure s;
    s.graph = Graph::path(T);
    s.x.resize(T, cfg_.F);
    for (Index t = 0; t < T; ++t) s.x.row(t) = hashed_token_features(token(rng), cfg_.F).transpose();
    // Forward filter, backward sample.
    const auto p = potentials<double>(s, std::span<const double>(th));
    const Eigen::MatrixXd alpha = forward_table(p, Eigen::VectorXd::Ones(T), Scheme::A);
    s.labels.assign(static_cast<std::size_t>(T), 0);
    std::vector<double> logp(static_cast<std::size_t>(K));
    for (Index t = T - 1; t >= 0; --t) {
      for (Index k = 0; k < K; ++k) {
        logp[k] = alpha(t, k) + (t + 1 < T ? p.trans(k, s.labels[t + 1]) : 0.0);
      }
      const double lse = log_sum_exp(std::span<const double>(logp));
      double r = unif(rng);
      Index pick = K - 1;
      for (Index k = 0; k < K; ++k) {
        r -= std::exp(logp[k] - lse);
        if (r < 0.0) {
          pick = k;
          break;
        }
      }
      s.labels[t] = pick;
    }
    data.structures.push_back(std::move(s));
  }
  return data;
}

}  // namespace structcv
