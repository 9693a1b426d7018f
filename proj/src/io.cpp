#include "structcv/io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "structcv/errors.hpp"

namespace structcv {

namespace {

using nlohmann::json;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

std::string join_indices(const std::vector<Index>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<Index> parse_index_list(const std::string& s) {
  std::vector<Index> out;
  if (s.empty()) return out;
  for (const auto& tok : split(s, ';')) out.push_back(parse_index(tok));
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const auto& tok : split(s, ';')) out.push_back(parse_double(tok));
  return out;
}

// Column positions of a header, checked against the expected prefix.
std::vector<std::string> read_header(std::istream& in, const std::vector<std::string>& prefix, const char* what) {
  std::string line;
  if (!next_line(in, line)) throw ArgumentError(std::string(what) + ": empty file");
  auto cols = split(line, ',');
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (i >= cols.size() || cols[i] != prefix[i]) {
      throw ArgumentError(std::string(what) + ": header column " + std::to_string(i + 1) + " should be '" +
                          prefix[i] + "'");
    }
  }
  return cols;
}

Index count_prefixed(const std::vector<std::string>& cols, std::size_t from, const std::string& stem) {
  Index n = 0;
  while (from + static_cast<std::size_t>(n) < cols.size() &&
         cols[from + static_cast<std::size_t>(n)] == stem + std::to_string(n + 1)) {
    ++n;
  }
  return n;
}

Index one_based(const std::string& s, Index max, const char* what, Index row) {
  const Index v = parse_index(s);
  if (v < 1 || (max > 0 && v > max)) {
    throw ArgumentError(std::string(what) + " out of range on data row " + std::to_string(row));
  }
  return v - 1;
}

json structure_to_json(const Structure& s) {
  json nodes = json::array();
  for (Index t = 0; t < s.length(); ++t) {
    json node = {{"id", t}};
    std::vector<double> x(static_cast<std::size_t>(s.dim()));
    for (Index r = 0; r < s.dim(); ++r) x[static_cast<std::size_t>(r)] = s.x(t, r);
    node["x"] = x;
    if (s.has_labels()) node["label"] = s.labels[static_cast<std::size_t>(t)] + 1;
    if (!s.day.empty()) node["day_of_week"] = s.day[static_cast<std::size_t>(t)] + 1;
    nodes.push_back(node);
  }
  json edges = json::array();
  for (auto [a, b] : s.graph.edges) edges.push_back({a, b});
  return {{"nodes", nodes}, {"edges", edges}};
}

Structure structure_from_json(const json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array()) {
    throw ArgumentError("graph JSON needs a 'nodes' array");
  }
  const auto& nodes = j["nodes"];
  const auto n = static_cast<Index>(nodes.size());
  if (n == 0) throw ArgumentError("graph JSON has no nodes");
  Structure s;
  Index R = -1;
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  bool labels = false, days = false;
  for (const auto& node : nodes) {
    labels = labels || node.contains("label");
    days = days || node.contains("day_of_week");
  }
  if (labels) s.labels.assign(static_cast<std::size_t>(n), 0);
  if (days) s.day.assign(static_cast<std::size_t>(n), 0);
  for (const auto& node : nodes) {
    if (!node.contains("id") || !node["id"].is_number_integer()) throw ArgumentError("graph node without integer id");
    const Index id = node["id"].get<Index>();
    if (id < 0 || id >= n || seen[static_cast<std::size_t>(id)]++) {
      throw ArgumentError("graph node ids must be 0..n-1 without repeats");
    }
    const auto x = node.at("x").get<std::vector<double>>();
    if (R < 0) {
      R = static_cast<Index>(x.size());
      s.x.resize(n, R);
    }
    if (static_cast<Index>(x.size()) != R) throw ArgumentError("graph nodes have differing observation lengths");
    for (Index r = 0; r < R; ++r) s.x(id, r) = x[static_cast<std::size_t>(r)];
    if (labels) {
      const Index l = node.at("label").get<Index>();
      if (l < 1) throw ArgumentError("graph node labels start at 1");
      s.labels[static_cast<std::size_t>(id)] = l - 1;
    }
    if (days) {
      const Index d = node.at("day_of_week").get<Index>();
      if (d < 1 || d > 7) throw ArgumentError("day_of_week must lie in 1..7");
      s.day[static_cast<std::size_t>(id)] = d - 1;
    }
  }
  s.graph.num_nodes = n;
  if (j.contains("edges")) {
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 2) throw ArgumentError("graph edges must be [i, j] pairs");
      s.graph.edges.emplace_back(e[0].get<Index>(), e[1].get<Index>());
    }
  }
  s.validate();
  return s;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ArgumentError("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw ArgumentError("not a number: '" + s + "'");
  return v;
}

Index parse_index(const std::string& s) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw ArgumentError("not an integer: '" + s + "'");
  }
  if (pos != s.size()) throw ArgumentError("not an integer: '" + s + "'");
  return static_cast<Index>(v);
}

StructuredDataset read_dataset_csv(std::istream& in) {
  const auto cols = read_header(in, {"structure_id", "t"}, "dataset CSV");
  const Index R = count_prefixed(cols, 2, "covariate_");
  if (R == 0) throw ArgumentError("dataset CSV: expected covariate_1 after t");
  std::size_t next = 2 + static_cast<std::size_t>(R);
  const bool has_label = next < cols.size() && cols[next] == "label";
  if (has_label) ++next;
  const bool has_day = next < cols.size() && cols[next] == "day_of_week";
  if (has_day) ++next;
  if (next != cols.size()) throw ArgumentError("dataset CSV: unexpected column '" + cols[next] + "'");

  struct Row {
    Index t;
    std::vector<double> x;
    Index label = 0, day = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> rows;
  std::string line;
  Index lineno = 0;
  while (next_line(in, line)) {
    ++lineno;
    const auto f = split(line, ',');
    if (f.size() != cols.size()) {
      throw ArgumentError("dataset CSV: data row " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                          " fields, expected " + std::to_string(cols.size()));
    }
    Row r;
    r.t = parse_index(f[1]);
    for (Index k = 0; k < R; ++k) r.x.push_back(parse_double(f[2 + static_cast<std::size_t>(k)]));
    std::size_t c = 2 + static_cast<std::size_t>(R);
    if (has_label) r.label = one_based(f[c++], 0, "label", lineno);
    if (has_day) r.day = one_based(f[c++], 7, "day_of_week", lineno);
    if (!rows.count(f[0])) order.push_back(f[0]);
    rows[f[0]].push_back(std::move(r));
  }
  StructuredDataset data;
  for (const auto& id : order) {
    auto& rs = rows[id];
    std::sort(rs.begin(), rs.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    const auto T = static_cast<Index>(rs.size());
    Structure s;
    s.x.resize(T, R);
    for (Index t = 0; t < T; ++t) {
      const Row& r = rs[static_cast<std::size_t>(t)];
      if (r.t != t) throw ArgumentError("dataset CSV: structure '" + id + "' must have t = 0..T-1 exactly once");
      for (Index k = 0; k < R; ++k) s.x(t, k) = r.x[static_cast<std::size_t>(k)];
      if (has_label) s.labels.push_back(r.label);
      if (has_day) s.day.push_back(r.day);
    }
    s.graph = Graph::path(T);
    data.structures.push_back(std::move(s));
  }
  data.validate();
  return data;
}

void write_dataset_csv(std::ostream& out, const StructuredDataset& data) {
  if (data.structures.empty()) throw ArgumentError("cannot write an empty dataset");
  const auto& first = data.structures.front();
  const Index R = first.dim();
  const bool labels = first.has_labels(), days = !first.day.empty();
  for (const auto& s : data.structures) {
    if (!s.graph.is_path()) throw ArgumentError("CSV holds chains only; write graphs as JSON");
    if (s.dim() != R || s.has_labels() != labels || s.day.empty() == days) {
      throw ArgumentError("CSV needs the same columns in every structure");
    }
  }
  out << "structure_id,t";
  for (Index r = 0; r < R; ++r) out << ",covariate_" << r + 1;
  if (labels) out << ",label";
  if (days) out << ",day_of_week";
  out << '\n';
  for (std::size_t n = 0; n < data.structures.size(); ++n) {
    const auto& s = data.structures[n];
    for (Index t = 0; t < s.length(); ++t) {
      out << n << ',' << t;
      for (Index r = 0; r < R; ++r) out << ',' << format_double(s.x(t, r));
      if (labels) out << ',' << s.labels[static_cast<std::size_t>(t)] + 1;
      if (days) out << ',' << s.day[static_cast<std::size_t>(t)] + 1;
      out << '\n';
    }
  }
}

StructuredDataset read_graph_json(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("graph JSON: ") + e.what());
  }
  StructuredDataset data;
  try {
    if (j.contains("structures")) {
      for (const auto& s : j["structures"]) data.structures.push_back(structure_from_json(s));
    } else {
      data.structures.push_back(structure_from_json(j));
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("graph JSON: ") + e.what());
  }
  return data;
}

void write_graph_json(std::ostream& out, const StructuredDataset& data) {
  if (data.structures.size() == 1) {
    out << structure_to_json(data.structures[0]).dump(1) << '\n';
    return;
  }
  json all = json::array();
  for (const auto& s : data.structures) all.push_back(structure_to_json(s));
  out << json{{"structures", all}}.dump(1) << '\n';
}

StructuredDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open data file '" + path + "'");
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".csv") return read_dataset_csv(in);
  if (ext == ".json") return read_graph_json(in);
  throw ArgumentError("data file '" + path + "' must end in .csv or .json");
}

void save_dataset(const std::string& path, const StructuredDataset& data) {
  std::ostringstream out;
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".csv") {
    write_dataset_csv(out, data);
  } else if (ext == ".json") {
    write_graph_json(out, data);
  } else {
    throw ArgumentError("data file '" + path + "' must end in .csv or .json");
  }
  write_file(path, out.str());
}

void write_params_json(std::ostream& out, const Model& model, const Eigen::VectorXd& theta, const std::string& hash) {
  json natural = json::object();
  for (const auto& [key, m] : model.unpack(theta)) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(m.cols()));
      for (Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(i, c);
      rows.push_back(row);
    }
    natural[key] = rows;
  }
  const json j = {{"family", model.family()},
                  {"config_hash", hash},
                  {"theta", std::vector<double>(theta.data(), theta.data() + theta.size())},
                  {"natural", natural}};
  out << j.dump(1) << '\n';
}

Eigen::VectorXd read_params_json(std::istream& in) {
  try {
    const json j = json::parse(in);
    const auto th = j.at("theta").get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(th.data(), static_cast<Index>(th.size()));
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("parameter file: ") + e.what());
  }
}

void write_trajectory_csv(std::ostream& out, const FitResult& fit) {
  const Index D = fit.trajectory.empty() ? 0 : fit.trajectory.front().theta.size();
  out << "s,objective,grad_norm";
  for (Index d = 0; d < D; ++d) out << ",theta_" << d + 1;
  out << '\n';
  for (std::size_t s = 0; s < fit.trajectory.size(); ++s) {
    const auto& p = fit.trajectory[s];
    out << s + 1 << ',' << format_double(p.objective) << ',' << format_double(p.grad_norm);
    for (Index d = 0; d < D; ++d) out << ',' << format_double(p.theta[d]);
    out << '\n';
  }
}

void write_trajectory_timing_csv(std::ostream& out, const FitResult& fit) {
  out << "s,seconds\n";
  for (std::size_t s = 0; s < fit.trajectory.size(); ++s) {
    out << s + 1 << ',' << format_double(fit.trajectory[s].seconds) << '\n';
  }
}

FitResult read_trajectory_csv(std::istream& in) {
  const auto cols = read_header(in, {"s", "objective", "grad_norm"}, "trajectory CSV");
  const Index D = count_prefixed(cols, 3, "theta_");
  FitResult fit;
  std::string line;
  while (next_line(in, line)) {
    const auto f = split(line, ',');
    if (f.size() != 3 + static_cast<std::size_t>(D)) throw ArgumentError("trajectory CSV: ragged row");
    if (parse_index(f[0]) != static_cast<Index>(fit.trajectory.size()) + 1) {
      throw ArgumentError("trajectory CSV: s must count up from 1");
    }
    TrajectoryPoint p;
    p.objective = parse_double(f[1]);
    p.grad_norm = parse_double(f[2]);
    p.theta.resize(D);
    for (Index d = 0; d < D; ++d) p.theta[d] = parse_double(f[3 + static_cast<std::size_t>(d)]);
    fit.trajectory.push_back(std::move(p));
  }
  if (fit.trajectory.empty()) throw ArgumentError("trajectory CSV has no rows");
  fit.theta_hat = fit.trajectory.back().theta;
  fit.grad_norm = fit.trajectory.back().grad_norm;
  fit.iterations = static_cast<int>(fit.trajectory.size()) - 1;
  return fit;
}

void write_report_csv(std::ostream& out, const CVReport& report) {
  Index D = 0;
  for (const auto& f : report.folds) D = std::max(D, f.theta.size());
  out << "fold_id,method,indices,loss,failed,point_losses";
  for (Index d = 0; d < D; ++d) out << ",theta_" << d + 1;
  out << '\n';
  for (const auto& f : report.folds) {
    out << f.fold_id << ',' << to_string(report.method) << ',' << join_indices(f.fold.indices()) << ','
        << format_double(f.failed ? std::nan("") : f.loss) << ',' << (f.failed ? 1 : 0) << ','
        << join_doubles(f.point_losses);
    for (Index d = 0; d < D; ++d) out << ',' << format_double(d < f.theta.size() ? f.theta[d] : std::nan(""));
    out << '\n';
  }
}

void write_report_json(std::ostream& out, const CVReport& report, const std::string& hash) {
  json failures = json::array();
  for (const auto& f : report.folds) {
    if (f.failed) failures.push_back({{"fold_id", f.fold_id}, {"error", f.error}});
  }
  const json j = {{"method", to_string(report.method)}, {"target", to_string(report.target)},
                  {"scheme", to_string(report.scheme)}, {"num_folds", report.folds.size()},
                  {"mean_loss", report.mean_loss},      {"refits", report.refits},
                  {"failures", failures},               {"config_hash", hash}};
  out << j.dump(1) << '\n';
}

void write_report_timing_csv(std::ostream& out, const CVReport& report) {
  out << "fold_id,seconds\n";
  out << "setup," << format_double(report.setup_seconds) << '\n';
  for (const auto& f : report.folds) out << f.fold_id << ',' << format_double(f.seconds) << '\n';
  out << "total," << format_double(report.total_seconds) << '\n';
}

CVReport read_report_csv(std::istream& in) {
  const auto cols = read_header(in, {"fold_id", "method", "indices", "loss", "failed", "point_losses"}, "report CSV");
  const Index D = count_prefixed(cols, 6, "theta_");
  CVReport r;
  std::string line;
  double sum = 0.0;
  Index ok = 0;
  while (next_line(in, line)) {
    const auto f = split(line, ',');
    if (f.size() != 6 + static_cast<std::size_t>(D)) throw ArgumentError("report CSV: ragged row");
    FoldRecord rec;
    rec.fold_id = parse_index(f[0]);
    r.method = parse_method(f[1]);
    rec.fold = Fold(parse_index_list(f[2]));
    rec.loss = parse_double(f[3]);
    rec.failed = f[4] == "1";
    rec.point_losses = parse_double_list(f[5]);
    rec.theta.resize(D);
    for (Index d = 0; d < D; ++d) rec.theta[d] = parse_double(f[6 + static_cast<std::size_t>(d)]);
    if (!rec.failed) {
      sum += rec.loss;
      ++ok;
    }
    r.folds.push_back(std::move(rec));
  }
  r.mean_loss = ok > 0 ? sum / static_cast<double>(ok) : 0.0;
  if (r.method == Method::Exact) r.refits = static_cast<int>(r.folds.size());
  return r;
}

CVReport read_report(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ArgumentError("cannot open report '" + csv_path + "'");
  CVReport r = read_report_csv(in);
  const auto sidecar = std::filesystem::path(csv_path).replace_extension(".json");
  if (std::filesystem::exists(sidecar)) {
    std::ifstream js(sidecar);
    try {
      const json j = json::parse(js);
      r.method = parse_method(j.at("method").get<std::string>());
      r.target = parse_target(j.at("target").get<std::string>());
      r.scheme = parse_scheme(j.at("scheme").get<std::string>());
      r.refits = j.at("refits").get<int>();
    } catch (const json::exception& e) {
      throw ArgumentError("report sidecar '" + sidecar.string() + "': " + e.what());
    }
  }
  return r;
}

void write_comparison_csv(std::ostream& out, const Comparison& c) {
  out << "fold_id,t,exact_loss,approx_loss,rel_err\n";
  for (const auto& row : c.points.empty() ? c.folds : c.points) {
    out << row.fold_id << ',' << row.t << ',' << format_double(row.exact) << ',' << format_double(row.approx) << ','
        << format_double(row.rel_err) << '\n';
  }
}

void write_comparison_json(std::ostream& out, const Comparison& c, const std::string& hash) {
  auto stats = [](const SummaryStats& s, std::size_t n) {
    return json{{"n", n},
                {"mean_rel_err", s.mean},
                {"sd_rel_err", s.sd},
                {"median_rel_err", s.median},
                {"correlation", s.correlation}};
  };
  const json j = {{"folds", stats(c.fold_stats, c.folds.size())},
                  {"points", stats(c.point_stats, c.points.size())},
                  {"config_hash", hash}};
  out << j.dump(1) << '\n';
}

std::vector<ComparisonRow> read_comparison_csv(std::istream& in) {
  read_header(in, {"fold_id", "t", "exact_loss", "approx_loss", "rel_err"}, "comparison CSV");
  std::vector<ComparisonRow> rows;
  std::string line;
  while (next_line(in, line)) {
    const auto f = split(line, ',');
    if (f.size() != 5) throw ArgumentError("comparison CSV: ragged row");
    rows.push_back({parse_index(f[0]), parse_index(f[1]), parse_double(f[2]), parse_double(f[3]), parse_double(f[4])});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const InexactSweepRecord& r) {
  out << "s,eps_theta,grad_norm,loss_ij,error,ridge,fold_errors\n";
  for (const auto& p : r.points) {
    out << p.s << ',' << format_double(p.eps_theta) << ',' << format_double(p.grad_norm) << ','
        << format_double(p.loss_ij) << ',' << format_double(p.error) << ',' << format_double(p.ridge) << ','
        << join_doubles(p.fold_errors) << '\n';
  }
}

void write_sweep_json(std::ostream& out, const InexactSweepRecord& r, bool tail_monotone, const std::string& hash) {
  const json j = {{"cv_loss", r.cv_loss},     {"slope", r.slope},
                  {"intercept", r.intercept}, {"r_squared", r.r_squared},
                  {"fit_window", r.fit_window}, {"tail_non_increasing", tail_monotone},
                  {"skipped_iterates", r.skipped},
                  {"config_hash", hash}};
  out << j.dump(1) << '\n';
}

InexactSweepRecord read_sweep_csv(std::istream& in) {
  read_header(in, {"s", "eps_theta", "grad_norm", "loss_ij", "error", "ridge", "fold_errors"}, "sweep CSV");
  InexactSweepRecord r;
  std::string line;
  while (next_line(in, line)) {
    const auto f = split(line, ',');
    if (f.size() != 7) throw ArgumentError("sweep CSV: ragged row");
    SweepPoint p;
    p.s = parse_index(f[0]);
    p.eps_theta = parse_double(f[1]);
    p.grad_norm = parse_double(f[2]);
    p.loss_ij = parse_double(f[3]);
    p.error = parse_double(f[4]);
    p.ridge = parse_double(f[5]);
    p.fold_errors = parse_double_list(f[6]);
    r.points.push_back(std::move(p));
  }
  return r;
}

void write_file(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot write '" + path + "'");
    out << contents;
    if (!out) throw ArgumentError("failed writing '" + path + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace structcv
