#include "structcv/models/hmm.hpp"

#include <algorithm>
#include <cmath>

namespace structcv {

std::string to_string(Emission e) {
  switch (e) {
    case Emission::Categorical: return "categorical";
    case Emission::Poisson: return "poisson";
    case Emission::Gaussian: return "gaussian";
    case Emission::AR: return "ar";
  }
  return "?";
}

Emission parse_emission(const std::string& s) {
  if (s == "categorical") return Emission::Categorical;
  if (s == "poisson") return Emission::Poisson;
  if (s == "gaussian") return Emission::Gaussian;
  if (s == "ar") return Emission::AR;
  throw ArgumentError("unknown HMM emission '" + s + "' (expected categorical, poisson, gaussian or ar)");
}

namespace {

Eigen::VectorXd softmax_gauge(const Eigen::VectorXd& logits) {
  std::vector<double> l(logits.data(), logits.data() + logits.size());
  const auto lp = log_softmax_gauge<double>(std::span<const double>(l));
  Eigen::VectorXd out(static_cast<Index>(lp.size()));
  for (std::size_t i = 0; i < lp.size(); ++i) out[static_cast<Index>(i)] = std::exp(lp[i]);
  return out;
}

std::size_t sample_categorical(const Eigen::VectorXd& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  for (Index k = 0; k < p.size(); ++k) {
    r -= p[k];
    if (r < 0.0) return static_cast<std::size_t>(k);
  }
  return static_cast<std::size_t>(p.size() - 1);
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const auto i = static_cast<std::size_t>(std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1));
  return v[i];
}

}  // namespace

HmmModel::HmmModel(HmmConfig config) : cfg_(config) {
  if (cfg_.K < 1) throw ArgumentError("hmm: K must be at least 1");
  if (cfg_.R < 1) throw ArgumentError("hmm: observation dimension must be at least 1");
  if (cfg_.order < 0) throw ArgumentError("hmm: AR order must be nonnegative");
  if (cfg_.emission == Emission::Categorical && cfg_.categories < 2) {
    throw ArgumentError("hmm: categorical emissions need at least 2 symbols");
  }
  if ((cfg_.emission == Emission::Categorical || cfg_.emission == Emission::Poisson) && cfg_.R != 1) {
    throw ArgumentError("hmm: categorical and Poisson emissions are one-dimensional");
  }
  if (cfg_.prior && (cfg_.dirichlet <= 0 || cfg_.gamma_shape <= 0 || cfg_.gamma_rate <= 0 || cfg_.normal_sd <= 0)) {
    throw ArgumentError("hmm: prior hyperparameters must be positive");
  }
  const Index K = cfg_.K, R = cfg_.R;
  Index emission = 0;
  switch (cfg_.emission) {
    case Emission::Categorical: emission = K * (cfg_.categories - 1); break;
    case Emission::Poisson: emission = K; break;
    case Emission::Gaussian: emission = K * R + K; break;
    case Emission::AR: emission = K * (cfg_.order * R * R + R) + 1; break;
  }
  num_params_ = emission_offset() + emission;
}

void HmmModel::check(const Structure& s) const {
  if (!s.graph.is_path()) throw ArgumentError(family() + ": structures must be chains");
  if (s.dim() != cfg_.R) {
    throw ArgumentError(family() + ": expected " + std::to_string(cfg_.R) + " covariates, got " +
                        std::to_string(s.dim()));
  }
  for (Index t = 0; t < s.length(); ++t) {
    if (cfg_.emission == Emission::Poisson) s.count(t);
    if (cfg_.emission == Emission::Categorical && s.count(t) >= cfg_.categories) {
      throw ArgumentError(family() + ": symbol at t=" + std::to_string(t) + " out of range");
    }
  }
}

NaturalParams HmmModel::unpack(const Eigen::VectorXd& theta) const {
  check_size(static_cast<std::size_t>(theta.size()));
  const Index K = cfg_.K, R = cfg_.R;
  NaturalParams out;
  out["pi"] = softmax_gauge(theta.head(K - 1));
  Eigen::MatrixXd A(K, K);
  for (Index k = 0; k < K; ++k) A.row(k) = softmax_gauge(theta.segment(K - 1 + k * (K - 1), K - 1)).transpose();
  out["A"] = A;
  const Eigen::VectorXd e = theta.tail(num_params_ - emission_offset());
  switch (cfg_.emission) {
    case Emission::Categorical: {
      const Index V = cfg_.categories;
      Eigen::MatrixXd B(K, V);
      for (Index k = 0; k < K; ++k) B.row(k) = softmax_gauge(e.segment(k * (V - 1), V - 1)).transpose();
      out["emission"] = B;
      break;
    }
    case Emission::Poisson: out["rate"] = e.array().exp().matrix(); break;
    case Emission::Gaussian: {
      Eigen::MatrixXd mean(K, R);
      for (Index k = 0; k < K; ++k) mean.row(k) = e.segment(k * R, R).transpose();
      out["mean"] = mean;
      out["variance"] = e.segment(K * R, K).array().exp().matrix();
      break;
    }
    case Emission::AR: {
      const Index P = cfg_.order, block = P * R * R + R;
      Eigen::MatrixXd coef(K, P * R * R), offset(K, R);
      for (Index k = 0; k < K; ++k) {
        coef.row(k) = e.segment(k * block, P * R * R).transpose();
        offset.row(k) = e.segment(k * block + P * R * R, R).transpose();
      }
      out["coef"] = coef;
      out["offset"] = offset;
      out["sigma2"] = Eigen::MatrixXd::Constant(1, 1, std::exp(e[K * block]));
      break;
    }
  }
  return out;
}

Eigen::VectorXd HmmModel::pack(const NaturalParams& natural) const {
  const Index K = cfg_.K, R = cfg_.R;
  auto get = [&](const std::string& key, Index rows, Index cols) -> const Eigen::MatrixXd& {
    const auto it = natural.find(key);
    if (it == natural.end()) throw ArgumentError(family() + ": missing natural parameter '" + key + "'");
    if (it->second.rows() != rows || it->second.cols() != cols) {
      throw ArgumentError(family() + ": natural parameter '" + key + "' has the wrong shape");
    }
    return it->second;
  };
  Eigen::VectorXd th(num_params_);
  th.head(K - 1) = gauge_logits(get("pi", K, 1).col(0));
  const Eigen::MatrixXd& A = get("A", K, K);
  for (Index k = 0; k < K; ++k) th.segment(K - 1 + k * (K - 1), K - 1) = gauge_logits(A.row(k).transpose());
  auto e = th.tail(num_params_ - emission_offset());
  switch (cfg_.emission) {
    case Emission::Categorical: {
      const Index V = cfg_.categories;
      const Eigen::MatrixXd& B = get("emission", K, V);
      for (Index k = 0; k < K; ++k) e.segment(k * (V - 1), V - 1) = gauge_logits(B.row(k).transpose());
      break;
    }
    case Emission::Poisson: e = get("rate", K, 1).array().log().matrix(); break;
    case Emission::Gaussian: {
      const Eigen::MatrixXd& mean = get("mean", K, R);
      for (Index k = 0; k < K; ++k) e.segment(k * R, R) = mean.row(k).transpose();
      e.segment(K * R, K) = get("variance", K, 1).array().log().matrix();
      break;
    }
    case Emission::AR: {
      const Index P = cfg_.order, block = P * R * R + R;
      const Eigen::MatrixXd& coef = get("coef", K, P * R * R);
      const Eigen::MatrixXd& offset = get("offset", K, R);
      for (Index k = 0; k < K; ++k) {
        e.segment(k * block, P * R * R) = coef.row(k).transpose();
        e.segment(k * block + P * R * R, R) = offset.row(k).transpose();
      }
      e[K * block] = std::log(get("sigma2", 1, 1)(0, 0));
      break;
    }
  }
  if (!th.allFinite()) throw ArgumentError(family() + ": natural parameters outside their domain");
  return th;
}

Eigen::VectorXd HmmModel::default_truth() const {
  const Index K = cfg_.K, R = cfg_.R;
  NaturalParams n;
  n["pi"] = Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  Eigen::MatrixXd A = Eigen::MatrixXd::Constant(K, K, K > 1 ? 0.2 / static_cast<double>(K - 1) : 1.0);
  if (K > 1) A.diagonal().setConstant(0.8);
  n["A"] = A;
  auto spread = [&](Index k) { return K > 1 ? -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(K - 1) : 0.0; };
  switch (cfg_.emission) {
    case Emission::Categorical: {
      const Index V = cfg_.categories;
      Eigen::MatrixXd B = Eigen::MatrixXd::Constant(K, V, 1.0);
      for (Index k = 0; k < K; ++k) B(k, k % V) += 2.0 * static_cast<double>(V);
      for (Index k = 0; k < K; ++k) B.row(k) /= B.row(k).sum();
      n["emission"] = B;
      break;
    }
    case Emission::Poisson: {
      Eigen::VectorXd rate(K);
      for (Index k = 0; k < K; ++k) rate[k] = 2.0 * std::pow(4.0, static_cast<double>(k) / std::max<Index>(K - 1, 1));
      n["rate"] = rate;
      break;
    }
    case Emission::Gaussian: {
      Eigen::MatrixXd mean(K, R);
      for (Index k = 0; k < K; ++k) mean.row(k).setConstant(2.0 * spread(k));
      n["mean"] = mean;
      n["variance"] = Eigen::VectorXd::Constant(K, 1.0);
      break;
    }
    case Emission::AR: {
      const Index P = cfg_.order;
      Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(K, P * R * R), offset(K, R);
      for (Index k = 0; k < K; ++k) {
        for (Index m = 0; m < P; ++m) {
          for (Index r = 0; r < R; ++r) coef(k, m * R * R + r * R + r) = (0.5 - 0.2 * spread(k)) / static_cast<double>(P);
        }
        offset.row(k).setConstant(2.0 * spread(k));
      }
      n["coef"] = coef;
      n["offset"] = offset;
      n["sigma2"] = Eigen::MatrixXd::Constant(1, 1, 0.5);
      break;
    }
  }
  return pack(n);
}

Eigen::VectorXd HmmModel::initial_params(const StructuredDataset& data) const {
  data.validate();
  const Index K = cfg_.K, R = cfg_.R;
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(R));
  for (const auto& s : data.structures) {
    check(s);
    for (Index t = 0; t < s.length(); ++t)
      for (Index r = 0; r < R; ++r) cols[r].push_back(s.x(t, r));
  }
  if (cols[0].empty()) throw ArgumentError(family() + ": no observations to initialize from");
  auto q = [&](Index r, Index k) { return quantile(cols[r], (static_cast<double>(k) + 0.5) / static_cast<double>(K)); };
  double var = 0.0;
  for (Index r = 0; r < R; ++r) {
    const Eigen::Map<const Eigen::VectorXd> v(cols[r].data(), static_cast<Index>(cols[r].size()));
    var += (v.array() - v.mean()).square().mean() / static_cast<double>(R);
  }
  var = std::max(var, 1e-3);

  NaturalParams n;
  n["pi"] = Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
  Eigen::MatrixXd A = Eigen::MatrixXd::Constant(K, K, K > 1 ? 0.2 / static_cast<double>(K - 1) : 1.0);
  if (K > 1) A.diagonal().setConstant(0.8);
  n["A"] = A;
  switch (cfg_.emission) {
    case Emission::Categorical: {
      const Index V = cfg_.categories;
      Eigen::VectorXd freq = Eigen::VectorXd::Constant(V, 1.0);
      for (double x : cols[0]) freq[static_cast<Index>(x)] += 1.0;
      Eigen::MatrixXd B(K, V);
      for (Index k = 0; k < K; ++k) {
        Eigen::VectorXd row = freq;
        row[k % V] *= 1.5;  // break the symmetry between states
        B.row(k) = (row / row.sum()).transpose();
      }
      n["emission"] = B;
      break;
    }
    case Emission::Poisson: {
      Eigen::VectorXd rate(K);
      for (Index k = 0; k < K; ++k) rate[k] = q(0, k) + 0.5 + 0.1 * static_cast<double>(k);
      n["rate"] = rate;
      break;
    }
    case Emission::Gaussian: {
      Eigen::MatrixXd mean(K, R);
      for (Index k = 0; k < K; ++k)
        for (Index r = 0; r < R; ++r) mean(k, r) = q(r, k);
      n["mean"] = mean;
      n["variance"] = Eigen::VectorXd::Constant(K, var / static_cast<double>(K));
      break;
    }
    case Emission::AR: {
      Eigen::MatrixXd offset(K, R);
      for (Index k = 0; k < K; ++k)
        for (Index r = 0; r < R; ++r) offset(k, r) = q(r, k);
      n["coef"] = Eigen::MatrixXd::Zero(K, cfg_.order * R * R);
      n["offset"] = offset;
      n["sigma2"] = Eigen::MatrixXd::Constant(1, 1, var / static_cast<double>(K));
      break;
    }
  }
  return pack(n);
}

StructuredDataset HmmModel::simulate(const Eigen::VectorXd& theta, const SimulationSpec& spec,
                                     std::uint64_t seed) const {
  if (spec.num_structures < 1 || spec.length < 1) throw ArgumentError(family() + ": empty simulation spec");
  const NaturalParams n = unpack(theta);
  const Index K = cfg_.K, R = cfg_.R;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  StructuredDataset data;
  for (Index i = 0; i < spec.num_structures; ++i) {
    const Index T = spec.length;
    Structure s;
    s.x = Eigen::MatrixXd::Zero(T, R);
    s.graph = Graph::path(T);
    std::size_t z = sample_categorical(n.at("pi").col(0), rng);
    for (Index t = 0; t < T; ++t) {
      if (t > 0) z = sample_categorical(n.at("A").row(static_cast<Index>(z)).transpose(), rng);
      const auto k = static_cast<Index>(z);
      switch (cfg_.emission) {
        case Emission::Categorical:
          s.x(t, 0) = static_cast<double>(sample_categorical(n.at("emission").row(k).transpose(), rng));
          break;
        case Emission::Poisson: {
          std::poisson_distribution<long> pois(n.at("rate")(k, 0));
          s.x(t, 0) = static_cast<double>(pois(rng));
          break;
        }
        case Emission::Gaussian: {
          const double sd = std::sqrt(n.at("variance")(k, 0));
          for (Index r = 0; r < R; ++r) s.x(t, r) = n.at("mean")(k, r) + sd * normal(rng);
          break;
        }
        case Emission::AR: {
          const Index P = cfg_.order;
          const double sd = std::sqrt(n.at("sigma2")(0, 0));
          for (Index r = 0; r < R; ++r) {
            double m = n.at("offset")(k, r);
            for (Index lag = 1; lag <= P && t - lag >= 0; ++lag)
              for (Index c = 0; c < R; ++c) m += n.at("coef")(k, (lag - 1) * R * R + r * R + c) * s.x(t - lag, c);
            s.x(t, r) = m + sd * normal(rng);
          }
          break;
        }
      }
    }
    data.structures.push_back(std::move(s));
  }
  return data;
}

}  // namespace structcv
