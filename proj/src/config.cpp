#include "structcv/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "structcv/errors.hpp"
#include "structcv/io.hpp"

namespace structcv {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"model",
       {"family", "K", "emission", "R", "categories", "order", "prior", "dirichlet", "gamma_shape", "gamma_rate",
        "normal_sd", "beta", "precision", "F", "vocabulary", "steps_per_day"}},
      {"data", {"path", "structures", "length", "min_length", "grid_rows", "grid_cols", "seed"}},
      {"cv", {"target", "structure", "scheme", "folds", "m", "n_folds", "first", "seed", "methods", "point_losses"}},
      {"optimizer", {"tol", "max_iters", "history"}},
      {"sweep", {"stride", "fit_window", "exact_report"}},
      {"bench", {"sizes", "folds", "exact_folds"}},
      {"output", {"dir"}},
  };
  return keys;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ArgumentError("config key '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  }

  template <class T, class Fn>
  void set(const std::string& section, const std::string& key, T& target, Fn convert) const {
    if (auto v = get(section, key)) {
      try {
        target = convert(*v);
      } catch (const ArgumentError& e) {
        throw ArgumentError("[" + section + "] " + key + ": " + e.what());
      }
    }
  }

 private:
  const pt::ptree& tree_;
};

Index positive_index(const std::string& v) {
  const Index n = parse_index(v);
  if (n < 0) throw ArgumentError("must be nonnegative");
  return n;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end() || body.data() != "") throw ArgumentError("config: unknown section '" + section + "'");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ArgumentError("config: unknown key '" + key + "' in [" + section + "]");
    }
  }
  const Reader r(tree);
  RunConfig c;
  auto& m = c.model;
  auto idx = [](const std::string& v) { return parse_index(v); };
  auto dbl = [](const std::string& v) { return parse_double(v); };
  auto str = [](const std::string& v) { return v; };

  r.set("model", "family", m.family, str);
  if (auto v = r.get("model", "K")) {
    m.hmm.K = m.crf.K = parse_index(*v);
  }
  r.set("model", "emission", m.hmm.emission, [](const std::string& v) { return parse_emission(v); });
  if (auto v = r.get("model", "R")) m.hmm.R = m.gaussian_mean.R = parse_index(*v);
  r.set("model", "categories", m.hmm.categories, idx);
  r.set("model", "order", m.hmm.order, idx);
  if (auto v = r.get("model", "prior")) {
    m.hmm.prior = m.event.prior = m.spatial.prior = parse_bool("prior", *v);
  }
  r.set("model", "dirichlet", m.hmm.dirichlet, dbl);
  if (auto v = r.get("model", "gamma_shape")) m.hmm.gamma_shape = m.spatial.gamma_shape = parse_double(*v);
  if (auto v = r.get("model", "gamma_rate")) m.hmm.gamma_rate = m.spatial.gamma_rate = parse_double(*v);
  r.set("model", "normal_sd", m.hmm.normal_sd, dbl);
  r.set("model", "beta", m.spatial.beta, dbl);
  if (auto v = r.get("model", "precision")) m.crf.precision = m.gaussian_mean.precision = parse_double(*v);
  r.set("model", "F", m.crf.F, idx);
  r.set("model", "vocabulary", m.crf.vocabulary, idx);
  r.set("model", "steps_per_day", m.event.steps_per_day, idx);

  r.set("data", "path", c.data.path, str);
  r.set("data", "structures", c.data.simulation.num_structures, idx);
  r.set("data", "length", c.data.simulation.length, idx);
  r.set("data", "min_length", c.data.simulation.min_length, idx);
  r.set("data", "grid_rows", c.data.simulation.grid_rows, idx);
  r.set("data", "grid_cols", c.data.simulation.grid_cols, idx);
  r.set("data", "seed", c.data.seed, [](const std::string& v) { return static_cast<std::uint64_t>(positive_index(v)); });

  r.set("cv", "target", c.target, [](const std::string& v) { return parse_target(v); });
  r.set("cv", "structure", c.structure, positive_index);
  r.set("cv", "scheme", c.scheme, [](const std::string& v) { return parse_scheme(v); });
  r.set("cv", "folds", c.plan.kind, [](const std::string& v) {
    if (v != "iid" && v != "contiguous" && v != "future" && v != "loo") {
      throw ArgumentError("expected iid, contiguous, future or loo");
    }
    return v;
  });
  r.set("cv", "m", c.plan.m_percent, dbl);
  r.set("cv", "n_folds", c.plan.n_folds, positive_index);
  r.set("cv", "first", c.plan.first, idx);
  r.set("cv", "seed", c.plan.seed, [](const std::string& v) { return static_cast<std::uint64_t>(positive_index(v)); });
  r.set("cv", "methods", c.methods, [](const std::string& v) {
    std::vector<Method> out;
    for (const auto& s : list(v)) out.push_back(parse_method(s));
    if (out.empty()) throw ArgumentError("at least one method is required");
    return out;
  });
  r.set("cv", "point_losses", c.point_losses, [](const std::string& v) { return parse_bool("point_losses", v); });

  r.set("optimizer", "tol", c.optimizer.tol, dbl);
  r.set("optimizer", "max_iters", c.optimizer.max_iters, [](const std::string& v) { return static_cast<int>(positive_index(v)); });
  r.set("optimizer", "history", c.optimizer.history, [](const std::string& v) { return static_cast<int>(positive_index(v)); });

  r.set("sweep", "stride", c.sweep.stride, positive_index);
  r.set("sweep", "fit_window", c.sweep.fit_window, positive_index);
  r.set("sweep", "exact_report", c.exact_report, str);

  r.set("bench", "sizes", c.bench_sizes, [](const std::string& v) {
    std::vector<Index> out;
    for (const auto& s : list(v)) out.push_back(positive_index(s));
    return out;
  });
  r.set("bench", "folds", c.bench_folds, positive_index);
  r.set("bench", "exact_folds", c.bench_exact_folds, positive_index);
  r.set("output", "dir", c.out_dir, str);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config '" + path + "'");
  RunConfig c = parse_config(in);
  if (!c.data.path.empty()) {
    std::filesystem::path p(c.data.path);
    if (p.is_relative()) p = std::filesystem::path(path).parent_path() / p;
    if (!std::filesystem::exists(p)) throw ArgumentError("data file '" + p.string() + "' does not exist");
    c.data.path = p.string();
  }
  if (!c.exact_report.empty()) {
    std::filesystem::path p(c.exact_report);
    if (p.is_relative()) p = std::filesystem::path(path).parent_path() / p;
    c.exact_report = p.string();
  }
  return c;
}

void apply_seed(RunConfig& config, std::uint64_t seed) {
  config.data.seed = seed;
  config.plan.seed = seed;
}

std::string RunConfig::canonical() const {
  std::ostringstream o;
  const auto& m = model;
  o << "model.family=" << m.family << '\n'
    << "model.hmm=" << to_string(m.hmm.emission) << ',' << m.hmm.K << ',' << m.hmm.R << ',' << m.hmm.categories << ','
    << m.hmm.order << ',' << m.hmm.prior << ',' << format_double(m.hmm.dirichlet) << ','
    << format_double(m.hmm.gamma_shape) << ',' << format_double(m.hmm.gamma_rate) << ','
    << format_double(m.hmm.normal_sd) << '\n'
    << "model.event=" << m.event.prior << ',' << m.event.steps_per_day << '\n'
    << "model.spatial=" << format_double(m.spatial.beta) << ',' << m.spatial.prior << ','
    << format_double(m.spatial.gamma_shape) << ',' << format_double(m.spatial.gamma_rate) << '\n'
    << "model.crf=" << m.crf.K << ',' << m.crf.F << ',' << format_double(m.crf.precision) << ','
    << m.crf.vocabulary << '\n'
    << "model.gaussian_mean=" << m.gaussian_mean.R << ',' << format_double(m.gaussian_mean.precision) << '\n'
    << "data.path=" << data.path << '\n'
    << "data.simulation=" << data.simulation.num_structures << ',' << data.simulation.length << ','
    << data.simulation.min_length << ',' << data.simulation.grid_rows << ',' << data.simulation.grid_cols << '\n'
    << "data.seed=" << data.seed << '\n'
    << "cv.target=" << to_string(target) << '\n'
    << "cv.structure=" << structure << '\n'
    << "cv.scheme=" << to_string(scheme) << '\n'
    << "cv.plan=" << plan.kind << ',' << format_double(plan.m_percent) << ',' << plan.n_folds << ',' << plan.first
    << ',' << plan.seed << '\n'
    << "cv.methods=";
  for (auto me : methods) o << to_string(me) << ';';
  o << '\n'
    << "cv.point_losses=" << point_losses << '\n'
    << "optimizer=" << format_double(optimizer.tol) << ',' << optimizer.max_iters << ',' << optimizer.history << '\n'
    << "sweep=" << sweep.stride << ',' << sweep.fit_window << ',' << exact_report << '\n'
    << "bench=";
  for (auto s : bench_sizes) o << s << ';';
  o << ',' << bench_folds << ',' << bench_exact_folds << '\n';
  return o.str();
}

std::string RunConfig::hash() const { return fnv1a_hex(canonical()); }

StructuredDataset load_or_simulate(const RunConfig& config, const Model& model) {
  StructuredDataset data = config.data.path.empty()
                               ? model.simulate(model.default_truth(), config.data.simulation, config.data.seed)
                               : load_dataset(config.data.path);
  for (const auto& s : data.structures) model.check(s);
  return data;
}

FoldPlan make_plan(const RunConfig& config, const StructuredDataset& data) {
  const Index length = config.target == WeightTarget::Structure
                           ? data.size()
                           : (config.structure < data.size()
                                  ? data.structures[static_cast<std::size_t>(config.structure)].length()
                                  : throw ArgumentError("cv.structure is outside the dataset"));
  FoldPlan plan;
  const auto& p = config.plan;
  if (p.kind == "iid") {
    plan = make_folds_iid(length, p.m_percent, p.n_folds, p.seed);
  } else if (p.kind == "contiguous") {
    plan = make_folds_contiguous(length, p.m_percent, p.n_folds, p.seed);
  } else if (p.kind == "future") {
    plan = make_folds_future(length, p.first);
  } else {
    plan = make_folds_loo(length);
  }
  plan.scheme = config.scheme;
  plan.target = config.target;
  plan.structure = config.target == WeightTarget::Structure ? 0 : config.structure;
  return plan;
}

}  // namespace structcv
