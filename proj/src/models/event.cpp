#include "structcv/models/event.hpp"

#include <algorithm>
#include <cmath>

namespace structcv {

namespace {
double logit(double p) { return std::log(p) - std::log1p(-p); }
double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }
}  // namespace

EventModel::EventModel(EventConfig config) : cfg_(config) {
  for (double v : {cfg_.lambda_shape, cfg_.lambda_rate, cfg_.a_shape, cfg_.a_rate, cfg_.b_shape, cfg_.b_rate,
                   cfg_.stay0_a, cfg_.stay0_b, cfg_.stay1_a, cfg_.stay1_b}) {
    if (!(v > 0.0)) throw ArgumentError("event: prior hyperparameters must be positive");
  }
  if (cfg_.steps_per_day < 1) throw ArgumentError("event: steps_per_day must be positive");
}

void EventModel::check(const Structure& s) const {
  if (!s.graph.is_path()) throw ArgumentError("event: structures must be chains");
  if (s.dim() != 1) throw ArgumentError("event: expected one count column");
  if (static_cast<Index>(s.day.size()) != s.length()) throw ArgumentError("event: every time step needs a day_of_week");
  for (Index t = 0; t < s.length(); ++t) s.count(t);
}

NaturalParams EventModel::unpack(const Eigen::VectorXd& theta) const {
  check_size(static_cast<std::size_t>(theta.size()));
  std::vector<double> th(theta.data(), theta.data() + theta.size());
  const auto ld = log_delta<double>(std::span<const double>(th));
  NaturalParams n;
  n["lambda0"] = Eigen::MatrixXd::Constant(1, 1, std::exp(theta[0]));
  Eigen::VectorXd delta(7);
  for (Index d = 0; d < 7; ++d) delta[d] = std::exp(ld[d]);
  n["delta"] = delta;
  n["a"] = Eigen::MatrixXd::Constant(1, 1, std::exp(theta[7]));
  n["b"] = Eigen::MatrixXd::Constant(1, 1, std::exp(theta[8]));
  n["A00"] = Eigen::MatrixXd::Constant(1, 1, sigmoid(theta[9]));
  n["A11"] = Eigen::MatrixXd::Constant(1, 1, sigmoid(theta[10]));
  return n;
}

Eigen::VectorXd EventModel::pack(const NaturalParams& n) const {
  auto scalar = [&](const std::string& key) {
    const auto it = n.find(key);
    if (it == n.end() || it->second.size() != 1) throw ArgumentError("event: missing scalar '" + key + "'");
    return it->second(0, 0);
  };
  const auto it = n.find("delta");
  if (it == n.end() || it->second.size() != 7) throw ArgumentError("event: 'delta' needs 7 entries");
  const Eigen::VectorXd delta = Eigen::Map<const Eigen::VectorXd>(it->second.data(), 7);
  if (std::abs(delta.sum() - 7.0) > 1e-8) throw ArgumentError("event: day multipliers must sum to 7");
  Eigen::VectorXd th(11);
  th[0] = std::log(scalar("lambda0"));
  th.segment(1, 6) = gauge_logits(delta / 7.0);
  th[7] = std::log(scalar("a"));
  th[8] = std::log(scalar("b"));
  th[9] = logit(scalar("A00"));
  th[10] = logit(scalar("A11"));
  if (!th.allFinite()) throw ArgumentError("event: natural parameters outside their domain");
  return th;
}

Eigen::VectorXd EventModel::default_truth() const {
  NaturalParams n;
  n["lambda0"] = Eigen::MatrixXd::Constant(1, 1, 20.0);
  Eigen::VectorXd delta(7);
  delta << 0.8, 1.0, 1.0, 1.05, 1.05, 1.2, 0.9;
  n["delta"] = delta;
  n["a"] = Eigen::MatrixXd::Constant(1, 1, 4.0);
  n["b"] = Eigen::MatrixXd::Constant(1, 1, 3.0);
  n["A00"] = Eigen::MatrixXd::Constant(1, 1, 0.99);
  n["A11"] = Eigen::MatrixXd::Constant(1, 1, 0.9);
  return pack(n);
}

Eigen::VectorXd EventModel::initial_params(const StructuredDataset& data) const {
  data.validate();
  std::vector<double> counts;
  for (const auto& s : data.structures) {
    check(s);
    for (Index t = 0; t < s.length(); ++t) counts.push_back(s.x(t, 0));
  }
  std::sort(counts.begin(), counts.end());
  NaturalParams n;
  n["lambda0"] = Eigen::MatrixXd::Constant(1, 1, counts[counts.size() / 2] + 0.5);
  n["delta"] = Eigen::VectorXd::Ones(7);
  n["a"] = Eigen::MatrixXd::Constant(1, 1, 2.0);
  n["b"] = Eigen::MatrixXd::Constant(1, 1, 2.0);
  n["A00"] = Eigen::MatrixXd::Constant(1, 1, 0.95);
  n["A11"] = Eigen::MatrixXd::Constant(1, 1, 0.8);
  return pack(n);
}

StructuredDataset EventModel::simulate(const Eigen::VectorXd& theta, const SimulationSpec& spec,
                                       std::uint64_t seed) const {
  if (spec.num_structures < 1 || spec.length < 1) throw ArgumentError("event: empty simulation spec");
  const NaturalParams n = unpack(theta);
  const double lambda0 = n.at("lambda0")(0, 0), a = n.at("a")(0, 0), b = n.at("b")(0, 0);
  const double stay[2] = {n.at("A00")(0, 0), n.at("A11")(0, 0)};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::gamma_distribution<double> excess_rate(a, b);
  StructuredDataset data;
  for (Index i = 0; i < spec.num_structures; ++i) {
    const Index T = spec.length;
    Structure s;
    s.x = Eigen::MatrixXd::Zero(T, 1);
    s.graph = Graph::path(T);
    s.day.resize(static_cast<std::size_t>(T));
    int z = unif(rng) < 0.5 ? 0 : 1;
    for (Index t = 0; t < T; ++t) {
      if (t > 0 && unif(rng) >= stay[z]) z = 1 - z;
      const Index d = (t / cfg_.steps_per_day) % 7;
      s.day[t] = d;
      std::poisson_distribution<long> background(lambda0 * n.at("delta")(d, 0));
      long x = background(rng);
      if (z == 1) {
        std::poisson_distribution<long> excess(std::max(excess_rate(rng), 1e-12));
        x += excess(rng);
      }
      s.x(t, 0) = static_cast<double>(x);
    }
    data.structures.push_back(std::move(s));
  }
  return data;
}

}  // namespace structcv
