#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "drsplit/diagnostics.hpp"
#include "drsplit/engine.hpp"
#include "drsplit/operators.hpp"

namespace drsplit {

struct SolveConfig {
  double lambda = 1.0;
  std::size_t max_iters = 100000;
  double tol_residual = 1e-8;  // stop when max(||a_n + b_n||, ||x_n - y_n||) <= tol
  bool record_trace = true;

  void validate() const {
    require_lambda(lambda, "SolveConfig");
    if (max_iters < 1) throw Error("SolveConfig: max_iters must be at least 1");
    if (!(tol_residual > 0.0) || !std::isfinite(tol_residual)) throw Error("SolveConfig: tol_residual must be positive");
  }
};

enum class StopReason { converged, iteration_limit };

inline const char* to_string(StopReason r) {
  return r == StopReason::converged ? "converged" : "iteration-limit";
}

/// Optional known solution data attached to trace records.
struct SolveReferences {
  std::optional<CertifiedReference> se_point;
  std::optional<Vector> solution;
};

struct SolveResult {
  DRState final_state;
  std::vector<TraceRecord> trace;
  StopReason stop = StopReason::iteration_limit;
  std::size_t iterations = 0;
  double res_ab = 0.0;
  double res_xy = 0.0;
};

using StepObserver = std::function<void(const DRState& prev, const DRState& next)>;

inline SolveResult solve(const MonotoneOp& A, const MonotoneOp& B, const SolveConfig& config, DRState start,
                         const SolveReferences& refs = {}, const StepObserver& observer = {}) {
  config.validate();
  require_dims(A, B, start.x, "solve");
  SolveResult result;
  DRState state = std::move(start);
  const CertifiedReference* ref = refs.se_point ? &*refs.se_point : nullptr;
  const Vector* sol = refs.solution ? &*refs.solution : nullptr;
  for (std::size_t k = 0; k < config.max_iters; ++k) {
    DRState next = dr_step(state, A, B, config.lambda);
    result.res_ab = (*next.a + next.b).norm();
    result.res_xy = (next.x - *next.y).norm();
    if (config.record_trace) result.trace.push_back(make_trace_record(state, next, config.lambda, ref, sol));
    if (observer) observer(state, next);
    state = std::move(next);
    ++result.iterations;
    if (std::max(result.res_ab, result.res_xy) <= config.tol_residual) {
      result.stop = StopReason::converged;
      break;
    }
  }
  result.final_state = std::move(state);
  return result;
}

inline SolveResult solve(const MonotoneOp& A, const MonotoneOp& B, const SolveConfig& config, Vector x0, Vector b0,
                         const SolveReferences& refs = {}, const StepObserver& observer = {}) {
  config.validate();
  return solve(A, B, config, init_state(A, B, config.lambda, std::move(x0), std::move(b0)), refs, observer);
}

struct RescalingReport {
  bool passed = true;
  std::size_t steps_run = 0;
  std::optional<std::size_t> first_divergence;
  double max_x_deviation = 0.0;  // relative
  double max_b_deviation = 0.0;  // relative, ||lambda b_n - b~_n||
};

/// Compares DR(A, B, lambda) from (x0, b0) against DR(lambda A, lambda B, 1)
/// from (x0, lambda b0): x iterates must coincide and b iterates differ by
/// the factor lambda.
inline RescalingReport rescaled_equivalence_check(const MonotoneOp& A, const MonotoneOp& B, double lambda,
                                                  const Vector& x0, const Vector& b0, std::size_t steps,
                                                  double tol = 1e-10) {
  require_lambda(lambda, "rescaled_equivalence_check");
  const MonotoneOp As = rescaled(A, lambda);
  const MonotoneOp Bs = rescaled(B, lambda);
  DRState original = init_state(A, B, lambda, x0, b0);
  DRState rescaled = init_state(As, Bs, 1.0, x0, lambda * b0);
  RescalingReport report;
  for (std::size_t k = 1; k <= steps; ++k) {
    original = dr_step(original, A, B, lambda);
    rescaled = dr_step(rescaled, As, Bs, 1.0);
    const double dx = (original.x - rescaled.x).norm() / (1.0 + original.x.norm());
    const double db = (lambda * original.b - rescaled.b).norm() / (1.0 + rescaled.b.norm());
    report.max_x_deviation = std::max(report.max_x_deviation, dx);
    report.max_b_deviation = std::max(report.max_b_deviation, db);
    ++report.steps_run;
    if ((dx > tol || db > tol) && !report.first_divergence) {
      report.first_divergence = k;
      report.passed = false;
    }
  }
  return report;
}

}  // namespace drsplit
