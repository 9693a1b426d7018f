#pragma once

// Run configuration: a flat INI file with [model], [data], [cv],
// [optimizer], [sweep], [bench] and [output] sections. Unknown keys are
// rejected so typos surface as usage errors.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "structcv/cv.hpp"
#include "structcv/models.hpp"

namespace structcv {

struct DataSource {
  std::string path;  // .csv or .json; empty means simulate
  SimulationSpec simulation;
  std::uint64_t seed = 1;
};

struct PlanSpec {
  std::string kind = "loo";  // iid | contiguous | future | loo
  double m_percent = 10.0;
  Index n_folds = 10;
  Index first = -1;          // future: zero-based first held-out index
  std::uint64_t seed = 1;
};

struct RunConfig {
  ModelConfig model;
  DataSource data;
  WeightTarget target = WeightTarget::WithinStructure;
  Index structure = 0;
  Scheme scheme = Scheme::A;
  PlanSpec plan;
  std::vector<Method> methods = {Method::Exact, Method::IJ};
  bool point_losses = true;
  OptimizerOptions optimizer;
  SweepOptions sweep;
  std::string exact_report;  // sweep input
  std::vector<Index> bench_sizes = {500, 1000};
  Index bench_folds = 100;
  Index bench_exact_folds = 10;
  std::string out_dir = "out";
  int threads = 1;

  // Canonical key=value listing of everything that affects results.
  std::string canonical() const;
  std::string hash() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

// Applies --seed: data and fold seeds both follow it.
void apply_seed(RunConfig& config, std::uint64_t seed);

StructuredDataset load_or_simulate(const RunConfig& config, const Model& model);
FoldPlan make_plan(const RunConfig& config, const StructuredDataset& data);

}  // namespace structcv
