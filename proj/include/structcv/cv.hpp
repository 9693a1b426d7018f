#pragma once

// Fold generation, exact and approximate CV, report comparison and the
// inexact-optimization sweep.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "structcv/acv.hpp"
#include "structcv/core.hpp"
#include "structcv/objective.hpp"
#include "structcv/optimize.hpp"

namespace structcv {

// m_percent of T chosen uniformly without replacement, floor(m T / 100) each.
FoldPlan make_folds_iid(Index T, double m_percent, Index n_folds, std::uint64_t seed);
// Blocks {t - k, ..., t} (1-based) with k = floor(m T / 100) and t uniform in
// [k + 1, T], so each fold holds k + 1 indices.
FoldPlan make_folds_contiguous(Index T, double m_percent, Index n_folds, std::uint64_t seed);
// The zero-based block for a given 1-based right end t.
Fold contiguous_fold(Index T, double m_percent, Index t);
// Single fold {first, ..., T - 1}; first must leave a training prefix.
FoldPlan make_folds_future(Index T, Index first);
// One fold per index.
FoldPlan make_folds_loo(Index n);

enum class Method { Exact, IJ, NS };
std::string to_string(Method m);
Method parse_method(const std::string& s);

struct FoldRecord {
  Index fold_id = 0;
  Fold fold;
  Eigen::VectorXd theta;
  double loss = 0.0;
  std::vector<double> point_losses;  // per held-out index, when requested
  double seconds = 0.0;
  int iterations = 0;                // refit iterations (exact only)
  bool failed = false;
  std::string error;
};

struct CVReport {
  Method method = Method::Exact;
  WeightTarget target = WeightTarget::WithinStructure;
  Scheme scheme = Scheme::A;
  std::vector<FoldRecord> folds;
  double mean_loss = 0.0;      // over folds that did not fail
  double setup_seconds = 0.0;  // bundle construction (IJ)
  double total_seconds = 0.0;  // setup plus the serial-equivalent fold sum
  int refits = 0;

  std::vector<Index> failures() const;
};

struct CVOptions {
  int threads = 1;
  bool point_losses = false;  // computed outside the timed region
  OptimizerOptions optimizer;
};

// Refits at w_o from a warm start at theta_hat for every fold.
CVReport exact_cv(const Objective& obj, const FoldPlan& plan, const Eigen::VectorXd& theta_hat,
                  const CVOptions& options = {});
// IJ (one bundle) or NS (one Hessian per fold) estimates evaluated with the
// same losses as exact_cv.
CVReport approx_cv(const Objective& obj, const FoldPlan& plan, const Eigen::VectorXd& theta1, Method method,
                   const CVOptions& options = {});
// IJ with a prebuilt bundle.
CVReport approx_cv(const Objective& obj, const FoldPlan& plan, const HessianBundle& bundle,
                   const CVOptions& options = {});

struct ComparisonRow {
  Index fold_id = 0;
  Index t = -1;  // held-out index, or -1 for a whole-fold row
  double exact = 0.0;
  double approx = 0.0;
  double rel_err = 0.0;  // |approx - exact| / |exact|
};

struct SummaryStats {
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double correlation = 0.0;  // Pearson, over (exact, approx)
};

struct Comparison {
  std::vector<ComparisonRow> folds;
  std::vector<ComparisonRow> points;  // empty unless both reports carry point losses
  SummaryStats fold_stats;
  SummaryStats point_stats;
  double speedup = 0.0;  // exact total time / approx total time
};

Comparison compare_reports(const CVReport& exact, const CVReport& approx);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
double median(std::vector<double> v);

struct SweepPoint {
  Index s = 0;  // 1-based trajectory index
  double eps_theta = 0.0;
  double grad_norm = 0.0;
  double loss_ij = 0.0;
  double error = 0.0;  // |L_IJ(theta_s) - L_CV|
  std::vector<double> fold_errors;
  double ridge = 0.0;
};

struct InexactSweepRecord {
  std::vector<SweepPoint> points;  // increasing s
  std::vector<Index> skipped;      // iterates where -H stayed singular
  double cv_loss = 0.0;
  double slope = 0.0;      // C in error ~ C eps_theta + eps_IJ, both >= 0
  double intercept = 0.0;
  double r_squared = 0.0;
  Index fit_window = 0;    // number of trailing points used in the fit
};

struct SweepOptions {
  Index stride = 1;
  Index fit_window = 10;  // trailing points in the regression; 0 uses all
  int threads = 1;
};

// Strided iterates are anchored at the final one: S, S - stride, ...
InexactSweepRecord inexact_sweep(const Objective& obj, const FoldPlan& plan, const FitResult& fit,
                                 const CVReport& exact, const SweepOptions& options = {});

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
// Least squares y ~ slope x + intercept subject to both being nonnegative.
LinearFit nonnegative_line_fit(const std::vector<double>& x, const std::vector<double>& y);

// Going from the largest to the smallest eps_theta over the last `window`
// points, the error never rises by more than band * max(previous, final).
bool tail_non_increasing(const InexactSweepRecord& record, Index window, double band);

}  // namespace structcv
