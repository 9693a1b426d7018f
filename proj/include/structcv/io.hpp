#pragma once

// Dataset, parameter and report serialization.
//
// Sequences: CSV with header structure_id,t,covariate_1..covariate_R[,label][,day_of_week].
//   t is zero-based; labels are written 1..K and days 1..7.
// Graphs: JSON {"nodes": [{"id", "x": [...]}], "edges": [[i, j], ...]}, or
//   {"structures": [<graph>, ...]} for several.
// Reports: CSV rows plus a JSON sidecar of aggregates. Wall-clock numbers go
//   to separate *_timing.csv files so the reports themselves are reproducible.
// CSV floats use 17 significant digits.

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>

#include "structcv/cv.hpp"
#include "structcv/model.hpp"
#include "structcv/optimize.hpp"

namespace structcv {

std::string format_double(double v);
double parse_double(const std::string& s);
Index parse_index(const std::string& s);

StructuredDataset read_dataset_csv(std::istream& in);
void write_dataset_csv(std::ostream& out, const StructuredDataset& data);
StructuredDataset read_graph_json(std::istream& in);
void write_graph_json(std::ostream& out, const StructuredDataset& data);
// Dispatches on the extension (.csv or .json).
StructuredDataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const StructuredDataset& data);

void write_params_json(std::ostream& out, const Model& model, const Eigen::VectorXd& theta, const std::string& hash);
Eigen::VectorXd read_params_json(std::istream& in);

void write_trajectory_csv(std::ostream& out, const FitResult& fit);
void write_trajectory_timing_csv(std::ostream& out, const FitResult& fit);
FitResult read_trajectory_csv(std::istream& in);

void write_report_csv(std::ostream& out, const CVReport& report);
void write_report_json(std::ostream& out, const CVReport& report, const std::string& hash);
void write_report_timing_csv(std::ostream& out, const CVReport& report);
// Reads the rows; method, target and scheme come from the sidecar when given.
CVReport read_report_csv(std::istream& in);
CVReport read_report(const std::string& csv_path);

void write_comparison_csv(std::ostream& out, const Comparison& c);
void write_comparison_json(std::ostream& out, const Comparison& c, const std::string& hash);
std::vector<ComparisonRow> read_comparison_csv(std::istream& in);

void write_sweep_csv(std::ostream& out, const InexactSweepRecord& r);
void write_sweep_json(std::ostream& out, const InexactSweepRecord& r, bool tail_monotone, const std::string& hash);
InexactSweepRecord read_sweep_csv(std::istream& in);

// Writes via a temporary file and rename.
void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace structcv
