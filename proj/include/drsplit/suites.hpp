#pragma once

// Monitored runs over seeded instance corpora. Each run checks every
// per-step inequality online, so arbitrarily long trajectories are verified
// without being stored.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "drsplit/diagnostics.hpp"
#include "drsplit/engine.hpp"
#include "drsplit/problems.hpp"
#include "drsplit/solver.hpp"

namespace drsplit {

enum class Family { linear, feasibility, lasso };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::linear: return "linear";
    case Family::feasibility: return "feasibility";
    case Family::lasso: return "lasso";
  }
  return "unknown";
}

/// Deterministic corpus member: dimensions and parameters are drawn from the seed.
inline ProblemInstance corpus_instance(Family family, std::uint64_t seed) {
  switch (family) {
    case Family::linear: {
      const double conditionings[] = {1.0, 3.0, 10.0, 30.0};
      return gen_linear(1 + seed % 20, seed, conditionings[seed % 4]);
    }
    case Family::feasibility:
      return gen_feasibility(1 + seed % 10, seed, seed % 2 == 0 ? FeasibilityShape::boxes : FeasibilityShape::box_ball);
    case Family::lasso: {
      const std::size_t cols = 2 + seed % 9;
      const std::size_t rows = cols + seed % 7;
      const double mus[] = {0.05, 0.2, 0.5};
      return gen_lasso(rows, cols, seed, mus[seed % 3]);
    }
  }
  throw Error("corpus_instance: unknown family");
}

/// Seeded raw start (x0, b0); b0 is not required to lie in B(x0).
inline DRState corpus_start(const ProblemInstance& inst, double lambda, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const auto n = static_cast<Eigen::Index>(inst.dim);
  return init_state(inst.A, inst.B, lambda, detail::gaussian_vector(rng, n, 2.0), detail::gaussian_vector(rng, n, 1.0));
}

struct MonitorOptions {
  double lambda = 1.0;
  std::size_t min_steps = 200;
  std::size_t max_steps = 100000;
  double tol_residual = 1e-10;
  double inequality_tol = 1e-9;
  double equation_tol = 1e-10;
  bool keep_trace = true;
};

struct MonitoredRun {
  bool converged = false;
  std::size_t converged_at = 0;
  std::size_t steps = 0;
  DRState final_state;
  std::vector<TraceRecord> trace;
  std::optional<FejerReport> fejer;
  std::optional<double> first_summand;
  double last_summand = 0.0;
  std::size_t contraction_checks = 0;
  std::size_t contraction_failures = 0;
  std::size_t equality_failures = 0;
  std::size_t a_y_failures = 0;
  std::size_t equation_failures = 0;
  std::size_t cross_identity_failures = 0;
  double worst_contraction_excess = 0.0;  // max (lhs - rhs) / scale
  double worst_a_y_excess = 0.0;
  double worst_equality_defect = 0.0;
  double final_se_residual = 0.0;
};

inline MonitoredRun run_monitored(const ProblemInstance& inst, DRState start, const MonitorOptions& opt = {}) {
  MonitoredRun run;
  std::optional<FejerMonitor> fejer;
  if (inst.oracle_se_point) {
    fejer.emplace(CertifiedReference::certify(inst.A, inst.B, *inst.oracle_se_point), start, opt.lambda,
                  opt.inequality_tol);
  }
  DRState state = std::move(start);
  // After convergence keep stepping until the limits tail window holds only post-convergence records.
  const MonotoneOp& B = inst.B;
  auto settled = [&] {
    if (!run.converged || run.steps < opt.min_steps) return false;
    const auto window = static_cast<std::size_t>(std::ceil(kDefaultTailFraction * static_cast<double>(run.steps)));
    return run.steps - run.converged_at >= window + 1;
  };
  while (run.steps < opt.max_steps && !settled()) {
    DRState next = dr_step(state, inst.A, inst.B, opt.lambda);
    ++run.steps;

    if (!step_equation_residuals(state, next, opt.lambda).within(opt.equation_tol)) ++run.equation_failures;

    if (contraction_applicable(B, state)) {
      const ContractionResult c = contraction_check(state, next, opt.lambda, opt.inequality_tol);
      run.worst_contraction_excess =
          std::max(run.worst_contraction_excess, (std::max(c.lhs, c.lhs_alt) - c.rhs) / c.scale);
      run.worst_equality_defect = std::max(run.worst_equality_defect, std::abs(c.lhs - c.lhs_alt) / c.scale);
      if (!c.pass) ++run.contraction_failures;
      if (!c.equality_pass) ++run.equality_failures;
      ++run.contraction_checks;
    }
    if (state.y) {
      const ContractionResult ay = a_y_contraction_check(state, next, opt.lambda, opt.inequality_tol);
      run.worst_a_y_excess = std::max(run.worst_a_y_excess, (ay.lhs - ay.rhs) / ay.scale);
      if (!ay.pass) ++run.a_y_failures;
    }

    const TraceRecord rec = make_trace_record(state, next, opt.lambda);
    const double via_iterates = res_cross_via_iterates(state, next, opt.lambda);
    if (std::abs(via_iterates - rec.res_cross) > 1e-10 * (1.0 + rec.res_cross + next.x.norm() / opt.lambda)) {
      ++run.cross_identity_failures;
    }
    if (fejer) fejer->observe(state, next);
    if (!run.converged && std::max(rec.res_ab, rec.res_xy) <= opt.tol_residual) {
      run.converged = true;
      run.converged_at = run.steps;
    }
    if (opt.keep_trace) run.trace.push_back(rec);
    state = std::move(next);
  }
  if (fejer) {
    run.fejer = fejer->report();
    run.first_summand = fejer->first_summand();
    run.last_summand = fejer->last_summand();
  }
  run.final_se_residual = se_residual(inst.A, inst.B, state.pair());
  run.final_state = std::move(state);
  return run;
}

// ---------------------------------------------------------------------------
// verification suites

enum class Suite { fejer, contraction, limits, zeta_equivalence, rescaling };

inline const char* to_string(Suite s) {
  switch (s) {
    case Suite::fejer: return "fejer";
    case Suite::contraction: return "contraction";
    case Suite::limits: return "limits";
    case Suite::zeta_equivalence: return "zeta-equivalence";
    case Suite::rescaling: return "rescaling";
  }
  return "unknown";
}

inline std::optional<Suite> suite_from_string(const std::string& name) {
  for (Suite s : {Suite::fejer, Suite::contraction, Suite::limits, Suite::zeta_equivalence, Suite::rescaling}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

enum class Verdict { pass, fail, not_applicable };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::not_applicable: return "not applicable";
  }
  return "unknown";
}

struct CaseOutcome {
  Family family;
  std::uint64_t seed;
  Verdict verdict;
  std::string detail;
};

inline constexpr double kRescalingLambdas[] = {0.1, 0.5, 2.0, 10.0};

/// Trajectory of zeta_step from zeta_start compared with the engine's zeta_n
/// for n = first_n, ..., first_n + steps - 1.
inline double zeta_equivalence_deviation(const ProblemInstance& inst, DRState state, double lambda, std::size_t steps,
                                         bool consistent) {
  double worst = 0.0;
  std::optional<Vector> zeta;
  if (consistent) zeta = Vector(state.x + lambda * state.b);
  for (std::size_t k = 1; k <= steps; ++k) {
    state = dr_step(state, inst.A, inst.B, lambda);
    if (!zeta) {
      // raw start: the recursion is seeded with the engine's zeta_1
      zeta = *state.zeta;
      continue;
    }
    *zeta = zeta_step(*zeta, inst.A, inst.B, lambda);
    worst = std::max(worst, (*zeta - *state.zeta).norm() / (1.0 + state.zeta->norm()));
  }
  return worst;
}

inline CaseOutcome run_case(Suite suite, Family family, std::uint64_t seed) {
  const ProblemInstance inst = corpus_instance(family, seed);
  CaseOutcome out{family, seed, Verdict::pass, ""};
  switch (suite) {
    case Suite::fejer: {
      if (!inst.oracle_se_point) return {family, seed, Verdict::not_applicable, "no reference point"};
      MonitorOptions opt;
      opt.keep_trace = false;
      const MonitoredRun run = run_monitored(inst, corpus_start(inst, 1.0, seed), opt);
      const double min_gap = *std::min_element(run.fejer->per_step_gaps.begin(), run.fejer->per_step_gaps.end());
      out.detail = "min gap " + std::to_string(min_gap);
      if (!run.fejer->passed()) out.verdict = Verdict::fail;
      break;
    }
    case Suite::contraction: {
      MonitorOptions opt;
      opt.keep_trace = false;
      const MonitoredRun run = run_monitored(inst, corpus_start(inst, 1.0, seed), opt);
      out.detail = std::to_string(run.steps) + " steps";
      if (run.contraction_failures + run.a_y_failures + run.equality_failures + run.equation_failures +
              run.cross_identity_failures >
          0) {
        out.verdict = Verdict::fail;
        out.detail += ", failures: contraction " + std::to_string(run.contraction_failures) + " a/y " +
                      std::to_string(run.a_y_failures);
      }
      break;
    }
    case Suite::limits: {
      MonitorOptions opt;
      const MonitoredRun run = run_monitored(inst, corpus_start(inst, 1.0, seed), opt);
      if (!run.converged) return {family, seed, Verdict::fail, "did not converge"};
      const LimitsReport lim = limits_check(run.trace, kDefaultTailFraction, 10.0 * opt.tol_residual);
      out.detail = std::to_string(run.steps) + " steps";
      if (!lim.passed) out.verdict = Verdict::fail;
      break;
    }
    case Suite::zeta_equivalence: {
      std::mt19937_64 rng(seed + 17);
      const Vector z0 = detail::gaussian_vector(rng, static_cast<Eigen::Index>(inst.dim), 2.0);
      const double consistent = zeta_equivalence_deviation(inst, init_consistent(inst.A, inst.B, 1.0, z0), 1.0, 100, true);
      const double raw = zeta_equivalence_deviation(inst, corpus_start(inst, 1.0, seed), 1.0, 100, false);
      out.detail = "consistent " + std::to_string(consistent) + ", raw " + std::to_string(raw);
      if (consistent > 1e-10 || raw > 1e-10) out.verdict = Verdict::fail;
      break;
    }
    case Suite::rescaling: {
      std::mt19937_64 rng(seed + 29);
      const auto n = static_cast<Eigen::Index>(inst.dim);
      const Vector x0 = detail::gaussian_vector(rng, n, 2.0);
      const Vector b0 = detail::gaussian_vector(rng, n, 1.0);
      for (double lambda : kRescalingLambdas) {
        const RescalingReport r = rescaled_equivalence_check(inst.A, inst.B, lambda, x0, b0, 50);
        if (!r.passed) {
          out.verdict = Verdict::fail;
          out.detail = "lambda " + std::to_string(lambda) + " diverged at step " + std::to_string(*r.first_divergence);
          break;
        }
      }
      break;
    }
  }
  return out;
}

struct SuiteSummary {
  Suite suite;
  Family family;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t not_applicable = 0;
  std::vector<CaseOutcome> failures;
};

/// Runs `seeds` cases (seeds 0..seeds-1) concurrently; outcomes are
/// collected in seed order.
inline SuiteSummary run_suite(Suite suite, Family family, std::size_t seeds, unsigned jobs = 0) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<CaseOutcome> outcomes(seeds);
  for (std::size_t begin = 0; begin < seeds; begin += jobs) {
    const std::size_t end = std::min<std::size_t>(seeds, begin + jobs);
    std::vector<std::future<CaseOutcome>> pending;
    for (std::size_t s = begin; s < end; ++s) {
      pending.push_back(std::async(std::launch::async, [=] {
        try {
          return run_case(suite, family, s);
        } catch (const std::exception& e) {
          return CaseOutcome{family, s, Verdict::fail, e.what()};
        }
      }));
    }
    for (std::size_t s = begin; s < end; ++s) outcomes[s] = pending[s - begin].get();
  }
  SuiteSummary summary{suite, family, 0, 0, 0, {}};
  for (auto& o : outcomes) {
    switch (o.verdict) {
      case Verdict::pass: ++summary.passed; break;
      case Verdict::fail:
        ++summary.failed;
        summary.failures.push_back(std::move(o));
        break;
      case Verdict::not_applicable: ++summary.not_applicable; break;
    }
  }
  return summary;
}

}  // namespace drsplit
