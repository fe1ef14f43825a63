#pragma once

// Per-iteration checks of the inequalities satisfied by Douglas-Rachford
// trajectories. All checks are stated in the lambda = 1 normal form; for a
// general stepsize they are applied to the rescaled iteration with operators
// (lambda A, lambda B), whose iterates are (x_n, lambda b_n) and
// (y_n, lambda a_n) and whose extended solution set holds (z, lambda w).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "drsplit/engine.hpp"
#include "drsplit/errors.hpp"
#include "drsplit/operators.hpp"
#include "drsplit/space.hpp"

namespace drsplit {

struct TraceRecord {
  std::size_t n = 0;
  double res_ab = 0.0;      // ||a_n + b_n||
  double res_xy = 0.0;      // ||x_n - y_n||
  double res_step_x = 0.0;  // ||x_n - x_{n-1}||
  double res_step_b = 0.0;  // ||b_n - b_{n-1}||
  std::optional<double> res_step_y;  // ||y_n - y_{n-1}||, n >= 2
  std::optional<double> res_step_a;  // ||a_n - a_{n-1}||, n >= 2
  double res_cross = 0.0;   // ||a_n + b_{n-1}||
  std::optional<double> fejer_gap;
  std::optional<double> dist_to_solution;  // ||x_n - z*||
};

/// A pair (z, w) that has been checked to lie in S_e(A, B).
class CertifiedReference {
public:
  static constexpr double kDefaultTolerance = 1e-8;

  static CertifiedReference certify(const MonotoneOp& A, const MonotoneOp& B, PairPoint p,
                                    double tol = kDefaultTolerance) {
    const double residual = se_residual(A, B, p);
    if (!(residual <= tol)) {
      throw ReferenceNotInSolutionSet("reference not in extended solution set (se_residual = " +
                                      std::to_string(residual) + ")");
    }
    return CertifiedReference(std::move(p), residual);
  }

  const PairPoint& point() const noexcept { return point_; }
  double residual() const noexcept { return residual_; }

private:
  CertifiedReference(PairPoint p, double residual) : point_(std::move(p)), residual_(residual) {}

  PairPoint point_;
  double residual_;
};

namespace detail {

inline void require_step(const DRState& prev, const DRState& next, const char* what) {
  if (!next.y || !next.a || next.n != prev.n + 1) {
    throw Error(std::string(what) + ": states are not consecutive iterates");
  }
}

/// ||(z, lambda w) - (x, lambda b)||^2
inline double scaled_pair_dist2(const PairPoint& p, const DRState& s, double lambda) {
  require_same_dim(p.z, s.x, "reference");
  return (p.z - s.x).squaredNorm() + lambda * lambda * (p.w - s.b).squaredNorm();
}

}  // namespace detail

/// ||p - p_{n-1}||^2 - ||p - p_n||^2 - ||a_n + b_{n-1}||^2, nonnegative in
/// exact arithmetic.
inline double fejer_gap(const CertifiedReference& ref, const DRState& prev, const DRState& next,
                        double lambda = 1.0) {
  detail::require_step(prev, next, "fejer_gap");
  const double before = detail::scaled_pair_dist2(ref.point(), prev, lambda);
  const double after = detail::scaled_pair_dist2(ref.point(), next, lambda);
  const double cross = lambda * lambda * (*next.a + prev.b).squaredNorm();
  return before - after - cross;
}

struct FejerReport {
  std::vector<double> per_step_gaps;
  std::vector<double> partial_sums;
  std::vector<double> distances;  // ||p - p_n||, n = 0, 1, ...
  double bound = 0.0;             // ||p - p_0||^2
  double gap_tolerance = 0.0;
  double sum_tolerance = 0.0;
  bool gaps_ok = true;
  bool sums_ok = true;
  bool monotone_ok = true;

  bool passed() const { return gaps_ok && sums_ok && monotone_ok; }
};

/// Incremental form of fejer_summability, for trajectories too long to keep.
class FejerMonitor {
public:
  FejerMonitor(CertifiedReference ref, const DRState& start, double lambda, double gap_tol = 1e-9,
               double sum_tol = 1e-8)
      : ref_(std::move(ref)), lambda_(lambda), gap_tol_(gap_tol) {
    report_.bound = detail::scaled_pair_dist2(ref_.point(), start, lambda);
    report_.gap_tolerance = gap_tol * (1.0 + report_.bound);
    report_.sum_tolerance = sum_tol;
    report_.distances.push_back(std::sqrt(report_.bound));
  }

  void observe(const DRState& prev, const DRState& next) {
    const double gap = fejer_gap(ref_, prev, next, lambda_);
    const double summand = lambda_ * lambda_ * (*next.a + prev.b).squaredNorm();
    sum_ += summand;
    report_.per_step_gaps.push_back(gap);
    report_.partial_sums.push_back(sum_);
    const double dist = std::sqrt(detail::scaled_pair_dist2(ref_.point(), next, lambda_));
    if (gap < -report_.gap_tolerance) report_.gaps_ok = false;
    if (sum_ > report_.bound + report_.sum_tolerance) report_.sums_ok = false;
    if (dist > report_.distances.back() + gap_tol_ * (1.0 + std::sqrt(report_.bound))) report_.monotone_ok = false;
    report_.distances.push_back(dist);
    last_summand_ = summand;
    if (!first_summand_) first_summand_ = summand;
  }

  const FejerReport& report() const noexcept { return report_; }
  std::optional<double> first_summand() const noexcept { return first_summand_; }
  double last_summand() const noexcept { return last_summand_; }

private:
  CertifiedReference ref_;
  double lambda_;
  double gap_tol_;
  double sum_ = 0.0;
  double last_summand_ = 0.0;
  std::optional<double> first_summand_;
  FejerReport report_;
};

/// Both Fejer inequalities over a stored trajectory (states 0..N).
inline FejerReport fejer_summability(const CertifiedReference& ref, const std::vector<DRState>& trajectory,
                                     double lambda = 1.0) {
  if (trajectory.empty()) throw Error("fejer_summability: empty trajectory");
  FejerMonitor monitor(ref, trajectory.front(), lambda);
  for (std::size_t k = 1; k < trajectory.size(); ++k) monitor.observe(trajectory[k - 1], trajectory[k]);
  return monitor.report();
}

struct ContractionResult {
  double lhs = 0.0;      // ||a_n + b_n||^2 + ||x_n - y_n||^2
  double lhs_alt = 0.0;  // ||b_n - b_{n-1}||^2 + ||x_n - x_{n-1}||^2
  double rhs = 0.0;      // ||a_n + b_{n-1}||^2
  double scale = 1.0;
  bool equality_pass = true;
  bool pass = true;
};

/// The step-n contraction compares zeta_n with x_{n-1} + lambda b_{n-1}, which
/// is a B-resolvent input for x_{n-1} only if b_{n-1} lies in B(x_{n-1}).
/// Every computed state satisfies this; a raw start may not.
inline bool contraction_applicable(const MonotoneOp& B, const DRState& prev) {
  return prev.n > 0 || in_graph(B, prev.x, prev.b);
}

/// Nonexpansiveness of the B-resolvent along one step:
/// ||a_n+b_n||^2 + ||x_n-y_n||^2 = ||b_n-b_{n-1}||^2 + ||x_n-x_{n-1}||^2 <= ||a_n+b_{n-1}||^2.
inline ContractionResult contraction_check(const DRState& prev, const DRState& next, double lambda = 1.0,
                                           double tol = 1e-9) {
  detail::require_step(prev, next, "contraction_check");
  const double l2 = lambda * lambda;
  const Vector& y = *next.y;
  const Vector& a = *next.a;
  ContractionResult r;
  r.lhs = l2 * (a + next.b).squaredNorm() + (next.x - y).squaredNorm();
  r.lhs_alt = l2 * (next.b - prev.b).squaredNorm() + (next.x - prev.x).squaredNorm();
  r.rhs = l2 * (a + prev.b).squaredNorm();
  r.scale = 1.0 + prev.x.squaredNorm() + next.x.squaredNorm() + y.squaredNorm() +
            l2 * (prev.b.squaredNorm() + next.b.squaredNorm() + a.squaredNorm());
  const double slack = tol * r.scale;
  r.equality_pass = std::abs(r.lhs - r.lhs_alt) <= slack;
  r.pass = r.equality_pass && r.lhs <= r.rhs + slack && r.lhs_alt <= r.rhs + slack;
  return r;
}

/// Nonexpansiveness of the A-resolvent between steps n-1 and n (n >= 2):
/// ||a_n-a_{n-1}||^2 + ||y_n-y_{n-1}||^2 <= ||x_{n-1} - y_{n-1} - (a_{n-1}+b_{n-1})||^2.
inline ContractionResult a_y_contraction_check(const DRState& prev, const DRState& next, double lambda = 1.0,
                                               double tol = 1e-9) {
  detail::require_step(prev, next, "a_y_contraction_check");
  if (!prev.y || !prev.a) throw Error("a_y_contraction_check: requires n >= 2");
  const double l2 = lambda * lambda;
  ContractionResult r;
  r.lhs = l2 * (*next.a - *prev.a).squaredNorm() + (*next.y - *prev.y).squaredNorm();
  r.lhs_alt = r.lhs;
  r.rhs = (prev.x - *prev.y - lambda * (*prev.a + prev.b)).squaredNorm();
  r.scale = 1.0 + prev.x.squaredNorm() + prev.y->squaredNorm() + next.y->squaredNorm() +
            l2 * (prev.a->squaredNorm() + next.a->squaredNorm() + prev.b.squaredNorm());
  r.pass = r.lhs <= r.rhs + tol * r.scale;
  return r;
}

/// ||x_{n-1} - y_n|| / lambda; equals ||a_n + b_{n-1}|| by the first step equation.
inline double res_cross_via_iterates(const DRState& prev, const DRState& next, double lambda) {
  detail::require_step(prev, next, "res_cross_via_iterates");
  return (prev.x - *next.y).norm() / lambda;
}

inline TraceRecord make_trace_record(const DRState& prev, const DRState& next, double lambda,
                                     const CertifiedReference* reference = nullptr,
                                     const Vector* solution = nullptr) {
  detail::require_step(prev, next, "make_trace_record");
  const Vector& y = *next.y;
  const Vector& a = *next.a;
  TraceRecord rec;
  rec.n = next.n;
  rec.res_ab = (a + next.b).norm();
  rec.res_xy = (next.x - y).norm();
  rec.res_step_x = (next.x - prev.x).norm();
  rec.res_step_b = (next.b - prev.b).norm();
  if (prev.y && prev.a) {
    rec.res_step_y = (y - *prev.y).norm();
    rec.res_step_a = (a - *prev.a).norm();
  }
  rec.res_cross = (a + prev.b).norm();
  if (reference) rec.fejer_gap = fejer_gap(*reference, prev, next, lambda);
  if (solution) rec.dist_to_solution = (next.x - *solution).norm();
  return rec;
}

struct SeriesLimit {
  std::string name;
  double head_max = 0.0;
  double tail_max = 0.0;
  bool decayed = true;
  std::optional<bool> below_threshold;
  bool pass = true;
};

struct LimitsReport {
  std::vector<SeriesLimit> series;
  bool passed = true;
};

inline constexpr double kDefaultTailFraction = 0.05;

/// Tail-vs-head maxima of the six vanishing residual series. When
/// `threshold` is given (converged runs), tail maxima must also lie below it.
inline LimitsReport limits_check(const std::vector<TraceRecord>& trace, double tail_fraction = kDefaultTailFraction,
                                 std::optional<double> threshold = std::nullopt) {
  if (trace.size() < 10) throw Error("limits_check: trace must have at least 10 records");
  if (!(tail_fraction > 0.0 && tail_fraction <= 0.5)) throw Error("limits_check: tail_fraction must be in (0, 0.5]");

  using Getter = std::optional<double> (*)(const TraceRecord&);
  const std::pair<const char*, Getter> fields[] = {
      {"res_ab", [](const TraceRecord& r) -> std::optional<double> { return r.res_ab; }},
      {"res_xy", [](const TraceRecord& r) -> std::optional<double> { return r.res_xy; }},
      {"res_step_x", [](const TraceRecord& r) -> std::optional<double> { return r.res_step_x; }},
      {"res_step_b", [](const TraceRecord& r) -> std::optional<double> { return r.res_step_b; }},
      {"res_step_y", [](const TraceRecord& r) { return r.res_step_y; }},
      {"res_step_a", [](const TraceRecord& r) { return r.res_step_a; }},
  };

  LimitsReport report;
  for (const auto& [name, get] : fields) {
    std::vector<double> values;
    values.reserve(trace.size());
    for (const auto& rec : trace) {
      if (auto v = get(rec)) values.push_back(*v);
    }
    if (values.empty()) continue;
    const auto window = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(tail_fraction * values.size())));
    SeriesLimit s;
    s.name = name;
    s.head_max = *std::max_element(values.begin(), values.begin() + window);
    s.tail_max = *std::max_element(values.end() - window, values.end());
    s.decayed = s.tail_max == 0.0 || s.tail_max < s.head_max;
    s.pass = s.decayed;
    if (threshold) {
      s.below_threshold = s.tail_max <= *threshold;
      s.pass = s.pass && *s.below_threshold;
    }
    report.passed = report.passed && s.pass;
    report.series.push_back(std::move(s));
  }
  return report;
}

}  // namespace drsplit
