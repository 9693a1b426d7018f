#include "structcv/cv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "structcv/errors.hpp"
#include "structcv/parallel.hpp"

namespace structcv {

namespace {

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Index fold_length(Index T, double m_percent) {
  if (T < 2) throw ArgumentError("fold generation needs at least two indices");
  if (!(m_percent > 0.0 && m_percent < 100.0)) throw ArgumentError("m_percent must lie in (0, 100)");
  const auto k = static_cast<Index>(std::floor(m_percent * static_cast<double>(T) / 100.0));
  if (k < 1) throw ArgumentError("floor(m T / 100) is zero: fold would be empty");
  return k;
}

// log C(n, k), to decide whether n_folds distinct folds exist.
double log_choose(Index n, Index k) {
  return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
         std::lgamma(static_cast<double>(n - k) + 1);
}

void check_plan(const Objective& obj, const FoldPlan& plan) {
  if (plan.target != obj.target()) throw ArgumentError("fold plan target does not match the objective");
  if (const auto* lw = dynamic_cast<const LwcvObjective*>(&obj)) {
    if (plan.scheme != lw->scheme()) throw ArgumentError("fold plan scheme does not match the objective");
    if (plan.structure != lw->structure()) throw ArgumentError("fold plan structure does not match the objective");
  }
  plan.validate(obj.num_weights());
}

void finish(CVReport& r) {
  double sum = 0.0, seconds = 0.0;
  Index ok = 0;
  for (const auto& f : r.folds) {
    seconds += f.seconds;
    if (f.failed) continue;
    sum += f.loss;
    ++ok;
  }
  r.mean_loss = ok > 0 ? sum / static_cast<double>(ok) : 0.0;
  r.total_seconds = r.setup_seconds + seconds;
}

void fill_points(const Objective& obj, FoldRecord& rec, bool requested) {
  if (rec.failed) return;
  if (rec.fold.size() == 1) {
    rec.point_losses = {rec.loss};
  } else if (requested) {
    rec.point_losses = obj.point_losses(rec.theta, rec.fold);
  }
}

SummaryStats summarize(const std::vector<ComparisonRow>& rows) {
  SummaryStats s;
  if (rows.empty()) return s;
  std::vector<double> rel, ex, ap;
  for (const auto& r : rows) {
    rel.push_back(r.rel_err);
    ex.push_back(r.exact);
    ap.push_back(r.approx);
  }
  const double n = static_cast<double>(rel.size());
  s.mean = std::accumulate(rel.begin(), rel.end(), 0.0) / n;
  if (rel.size() > 1) {
    double ss = 0.0;
    for (double v : rel) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  s.median = median(rel);
  s.correlation = pearson(ex, ap);
  return s;
}

ComparisonRow make_row(Index fold_id, Index t, double exact, double approx) {
  double rel = std::abs(approx - exact) / std::abs(exact);
  if (exact == approx) rel = 0.0;
  return {fold_id, t, exact, approx, rel};
}

}  // namespace

FoldPlan make_folds_iid(Index T, double m_percent, Index n_folds, std::uint64_t seed) {
  const Index k = fold_length(T, m_percent);
  if (n_folds < 0) throw ArgumentError("n_folds must be nonnegative");
  if (log_choose(T, k) < std::log(static_cast<double>(std::max<Index>(n_folds, 1)))) {
    throw ArgumentError("fewer distinct folds exist than requested");
  }
  std::mt19937_64 rng(seed);
  std::vector<Index> pool(static_cast<std::size_t>(T));
  FoldPlan plan;
  std::set<std::vector<Index>> seen;
  while (plan.size() < n_folds) {
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index i = 0; i < k; ++i) {
      std::uniform_int_distribution<Index> pick(i, T - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<Index> idx(pool.begin(), pool.begin() + k);
    std::sort(idx.begin(), idx.end());
    if (!seen.insert(idx).second) continue;
    plan.folds.emplace_back(std::move(idx));
  }
  return plan;
}

Fold contiguous_fold(Index T, double m_percent, Index t) {
  const Index k = fold_length(T, m_percent);
  if (k + 1 > T - 1) throw ArgumentError("contiguous folds would leave no training data");
  if (t < k + 1 || t > T) throw ArgumentError("contiguous fold end must lie in [k + 1, T]");
  std::vector<Index> idx;
  for (Index i = t - k; i <= t; ++i) idx.push_back(i - 1);
  return Fold(std::move(idx));
}

FoldPlan make_folds_contiguous(Index T, double m_percent, Index n_folds, std::uint64_t seed) {
  const Index k = fold_length(T, m_percent);
  if (n_folds < 0) throw ArgumentError("n_folds must be nonnegative");
  if (n_folds > T - k) throw ArgumentError("fewer distinct contiguous folds exist than requested");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> end(k + 1, T);
  FoldPlan plan;
  std::set<Index> seen;
  while (plan.size() < n_folds) {
    const Index t = end(rng);
    if (!seen.insert(t).second) continue;
    plan.folds.push_back(contiguous_fold(T, m_percent, t));
  }
  return plan;
}

FoldPlan make_folds_future(Index T, Index first) {
  if (first <= 0) throw ArgumentError("leave-future-out needs a nonempty training prefix");
  if (first >= T) throw ArgumentError("leave-future-out start must be below T");
  std::vector<Index> idx;
  for (Index t = first; t < T; ++t) idx.push_back(t);
  FoldPlan plan;
  plan.folds.emplace_back(std::move(idx));
  return plan;
}

FoldPlan make_folds_loo(Index n) {
  if (n < 2) throw ArgumentError("leave-one-out needs at least two indices");
  FoldPlan plan;
  for (Index t = 0; t < n; ++t) plan.folds.emplace_back(std::vector<Index>{t});
  return plan;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Exact: return "exact";
    case Method::IJ: return "ij";
    case Method::NS: return "ns";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "exact") return Method::Exact;
  if (s == "ij" || s == "IJ") return Method::IJ;
  if (s == "ns" || s == "NS") return Method::NS;
  throw ArgumentError("unknown method '" + s + "' (expected exact, ij or ns)");
}

std::vector<Index> CVReport::failures() const {
  std::vector<Index> out;
  for (const auto& f : folds) {
    if (f.failed) out.push_back(f.fold_id);
  }
  return out;
}

CVReport exact_cv(const Objective& obj, const FoldPlan& plan, const Eigen::VectorXd& theta_hat,
                  const CVOptions& options) {
  check_plan(obj, plan);
  if (theta_hat.size() != obj.num_params()) throw ArgumentError("exact_cv: parameter length mismatch");
  CVReport r;
  r.method = Method::Exact;
  r.target = plan.target;
  r.scheme = plan.scheme;
  r.folds.resize(plan.folds.size());
  OptimizerOptions opt = options.optimizer;
  opt.threads = 1;
  parallel_for(plan.folds.size(), options.threads, [&](std::size_t i) {
    FoldRecord& rec = r.folds[i];
    rec.fold_id = static_cast<Index>(i);
    rec.fold = plan.folds[i];
    const auto t0 = Clock::now();
    try {
      const WeightVector wo = fold_to_weights(rec.fold, obj.num_weights(), obj.target());
      const FitResult fr = fit(obj, wo.values, theta_hat, opt);
      rec.theta = fr.theta_hat;
      rec.iterations = fr.iterations;
      rec.loss = obj.fold_loss(rec.theta, rec.fold);
      if (!std::isfinite(rec.loss)) throw NumericalError("non-finite fold loss");
    } catch (const OptimizationError& e) {
      rec.failed = true;
      rec.error = e.what();
      rec.theta = Eigen::Map<const Eigen::VectorXd>(e.last_iterate().data(),
                                                    static_cast<Index>(e.last_iterate().size()));
    } catch (const NumericalError& e) {
      rec.failed = true;
      rec.error = e.what();
    }
    rec.seconds = since(t0);
    fill_points(obj, rec, options.point_losses);
  });
  r.refits = static_cast<int>(plan.folds.size());
  finish(r);
  return r;
}

CVReport approx_cv(const Objective& obj, const FoldPlan& plan, const HessianBundle& bundle,
                   const CVOptions& options) {
  check_plan(obj, plan);
  if (bundle.J.cols() != obj.num_weights()) throw ArgumentError("bundle does not match the objective");
  CVReport r;
  r.method = Method::IJ;
  r.target = plan.target;
  r.scheme = plan.scheme;
  r.setup_seconds = bundle.seconds;
  r.folds.resize(plan.folds.size());
  parallel_for(plan.folds.size(), options.threads, [&](std::size_t i) {
    FoldRecord& rec = r.folds[i];
    rec.fold_id = static_cast<Index>(i);
    rec.fold = plan.folds[i];
    const auto t0 = Clock::now();
    rec.theta = ij_params(bundle, rec.fold);
    rec.loss = obj.fold_loss(rec.theta, rec.fold);
    rec.seconds = since(t0);
    if (!std::isfinite(rec.loss)) throw NumericalError("non-finite IJ loss in fold " + std::to_string(i));
    fill_points(obj, rec, options.point_losses);
  });
  finish(r);
  return r;
}

CVReport approx_cv(const Objective& obj, const FoldPlan& plan, const Eigen::VectorXd& theta1, Method method,
                   const CVOptions& options) {
  if (method == Method::Exact) throw ArgumentError("approx_cv: method must be ij or ns");
  if (method == Method::IJ) {
    check_plan(obj, plan);
    return approx_cv(obj, plan, build_bundle(obj, theta1, options.threads), options);
  }
  check_plan(obj, plan);
  CVReport r;
  r.method = Method::NS;
  r.target = plan.target;
  r.scheme = plan.scheme;
  r.folds.resize(plan.folds.size());
  parallel_for(plan.folds.size(), options.threads, [&](std::size_t i) {
    FoldRecord& rec = r.folds[i];
    rec.fold_id = static_cast<Index>(i);
    rec.fold = plan.folds[i];
    const auto t0 = Clock::now();
    try {
      rec.theta = ns_params(obj, theta1, rec.fold, 1);
    } catch (const SingularHessianError& e) {
      throw SingularHessianError(std::string(e.what()) + " (NS fold " + std::to_string(i) + ")");
    }
    rec.loss = obj.fold_loss(rec.theta, rec.fold);
    rec.seconds = since(t0);
    if (!std::isfinite(rec.loss)) throw NumericalError("non-finite NS loss in fold " + std::to_string(i));
    fill_points(obj, rec, options.point_losses);
  });
  finish(r);
  return r;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ArgumentError("pearson: length mismatch");
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return x == y ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

Comparison compare_reports(const CVReport& exact, const CVReport& approx) {
  if (exact.folds.size() != approx.folds.size() || exact.target != approx.target || exact.scheme != approx.scheme) {
    throw ArgumentError("compare_reports: reports come from different plans");
  }
  Comparison c;
  for (std::size_t i = 0; i < exact.folds.size(); ++i) {
    const auto& e = exact.folds[i];
    const auto& a = approx.folds[i];
    if (!(e.fold == a.fold)) throw ArgumentError("compare_reports: fold " + std::to_string(i) + " differs");
    if (e.failed || a.failed) continue;
    c.folds.push_back(make_row(e.fold_id, -1, e.loss, a.loss));
    if (e.point_losses.size() == static_cast<std::size_t>(e.fold.size()) &&
        a.point_losses.size() == e.point_losses.size()) {
      for (std::size_t j = 0; j < e.point_losses.size(); ++j) {
        c.points.push_back(make_row(e.fold_id, e.fold.indices()[j], e.point_losses[j], a.point_losses[j]));
      }
    }
  }
  c.fold_stats = summarize(c.folds);
  c.point_stats = summarize(c.points);
  c.speedup = approx.total_seconds > 0.0 ? exact.total_seconds / approx.total_seconds : 0.0;
  return c;
}

LinearFit nonnegative_line_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw ArgumentError("line fit: need matching nonempty inputs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, sst = 0.0, xx = 0.0, xy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    sst += (y[i] - my) * (y[i] - my);
    xx += x[i] * x[i];
    xy += x[i] * y[i];
  }
  auto ssr = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (y[i] - a * x[i] - b) * (y[i] - a * x[i] - b);
    return s;
  };
  // Candidate solutions for each active set; keep the best feasible one.
  std::vector<std::pair<double, double>> cand = {{0.0, 0.0}, {0.0, std::max(0.0, my)}};
  if (xx > 0.0) cand.emplace_back(std::max(0.0, xy / xx), 0.0);
  if (sxx > 0.0) {
    const double a = sxy / sxx;
    const double b = my - a * mx;
    if (a >= 0.0 && b >= 0.0) cand.emplace_back(a, b);
  }
  LinearFit best;
  double best_ssr = std::numeric_limits<double>::infinity();
  for (auto [a, b] : cand) {
    const double s = ssr(a, b);
    if (s < best_ssr) {
      best_ssr = s;
      best.slope = a;
      best.intercept = b;
    }
  }
  best.r_squared = sst > 0.0 ? 1.0 - best_ssr / sst : (best_ssr == 0.0 ? 1.0 : 0.0);
  return best;
}

InexactSweepRecord inexact_sweep(const Objective& obj, const FoldPlan& plan, const FitResult& fit,
                                 const CVReport& exact, const SweepOptions& options) {
  if (exact.method != Method::Exact) throw ArgumentError("inexact_sweep needs an exact CV report");
  if (exact.folds.size() != plan.folds.size()) throw ArgumentError("exact report does not match the plan");
  for (std::size_t i = 0; i < plan.folds.size(); ++i) {
    if (!(exact.folds[i].fold == plan.folds[i])) throw ArgumentError("exact report does not match the plan");
    if (exact.folds[i].failed) throw ArgumentError("exact report has failed folds");
  }
  if (fit.trajectory.empty()) throw ArgumentError("inexact_sweep: empty trajectory");
  if (options.stride < 1) throw ArgumentError("inexact_sweep: stride must be positive");
  check_plan(obj, plan);

  const auto S = static_cast<Index>(fit.trajectory.size());
  std::vector<Index> steps;
  for (Index s = S; s >= 1; s -= options.stride) steps.push_back(s);
  std::reverse(steps.begin(), steps.end());

  InexactSweepRecord rec;
  rec.cv_loss = exact.mean_loss;
  CVOptions cvo;
  cvo.threads = options.threads;
  for (Index s : steps) {
    const auto& tp = fit.trajectory[static_cast<std::size_t>(s - 1)];
    HessianBundle b;
    try {
      b = build_bundle(obj, tp.theta, options.threads);
    } catch (const SingularHessianError&) {
      // Far from the optimum of a nonconvex objective -H can be indefinite.
      rec.skipped.push_back(s);
      continue;
    }
    const CVReport ij = approx_cv(obj, plan, b, cvo);
    SweepPoint p;
    p.s = s;
    p.eps_theta = (tp.theta - fit.theta_hat).norm();
    p.grad_norm = tp.grad_norm;
    p.loss_ij = ij.mean_loss;
    p.error = std::abs(ij.mean_loss - exact.mean_loss);
    p.ridge = b.ridge;
    for (std::size_t i = 0; i < plan.folds.size(); ++i) {
      p.fold_errors.push_back(std::abs(ij.folds[i].loss - exact.folds[i].loss));
    }
    rec.points.push_back(std::move(p));
  }

  if (rec.points.empty()) throw SingularHessianError("inexact_sweep: no iterate had a usable Hessian");
  const auto n = static_cast<Index>(rec.points.size());
  rec.fit_window = options.fit_window > 0 ? std::min(options.fit_window, n) : n;
  std::vector<double> x, y;
  for (Index i = n - rec.fit_window; i < n; ++i) {
    x.push_back(rec.points[static_cast<std::size_t>(i)].eps_theta);
    y.push_back(rec.points[static_cast<std::size_t>(i)].error);
  }
  const LinearFit lf = nonnegative_line_fit(x, y);
  rec.slope = lf.slope;
  rec.intercept = lf.intercept;
  rec.r_squared = lf.r_squared;
  return rec;
}

bool tail_non_increasing(const InexactSweepRecord& record, Index window, double band) {
  const auto n = static_cast<Index>(record.points.size());
  if (n == 0) return true;
  const Index start = n - std::min(window > 0 ? window : n, n);
  std::vector<SweepPoint> tail(record.points.begin() + start, record.points.end());
  std::stable_sort(tail.begin(), tail.end(),
                   [](const SweepPoint& a, const SweepPoint& b) { return a.eps_theta > b.eps_theta; });
  const double final_err = record.points.back().error;
  for (std::size_t i = 1; i < tail.size(); ++i) {
    if (tail[i].error > tail[i - 1].error + band * std::max(tail[i - 1].error, final_err)) return false;
  }
  return true;
}

}  // namespace structcv
