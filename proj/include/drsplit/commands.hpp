#pragma once

// Implementation of the drsplit command-line subcommands. Each command
// writes human-readable output to `out`, diagnostics to `err`, and returns
// the process exit status.

#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "drsplit/diagnostics.hpp"
#include "drsplit/io.hpp"
#include "drsplit/problems.hpp"
#include "drsplit/solver.hpp"
#include "drsplit/suites.hpp"

namespace drsplit::cli {

enum ExitCode : int {
  kSuccess = 0,
  kConvergenceFailure = 1,
  kInvariantViolation = 2,
  kInputError = 3,
};

/// Parses "1,2.5,-3" into a vector.
inline Vector parse_csv_vector(const std::string& text, const std::string& what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      values.push_back(v);
    } catch (const std::logic_error&) {
      throw ParseError(what, "cannot parse '" + item + "' as a number");
    }
  }
  if (values.empty()) throw ParseError(what, "empty vector");
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  require_finite(v, what.c_str());
  return v;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOptions {
  std::string family;
  std::uint64_t seed = 0;
  std::size_t dim = 5;
  std::size_t rows = 4;
  std::size_t cols = 6;
  double mu = 0.5;
  double conditioning = 1.0;
  std::string shape = "boxes";
  std::string out_path;
};

inline int cmd_generate(const GenerateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    std::optional<ProblemInstance> inst;
    if (opt.family == "linear") {
      inst = gen_linear(opt.dim, opt.seed, opt.conditioning);
    } else if (opt.family == "feasibility") {
      FeasibilityShape shape;
      if (opt.shape == "boxes") shape = FeasibilityShape::boxes;
      else if (opt.shape == "box-ball") shape = FeasibilityShape::box_ball;
      else throw ParseError("--shape", "unknown shape '" + opt.shape + "' (expected boxes or box-ball)");
      inst = gen_feasibility(opt.dim, opt.seed, shape);
    } else if (opt.family == "lasso") {
      inst = gen_lasso(opt.rows, opt.cols, opt.seed, opt.mu);
    } else {
      err << "error: unknown family '" << opt.family << "' (expected linear, feasibility or lasso)\n";
      return kInputError;
    }
    const std::string text = io::canonical_dump(io::to_json(*inst));
    if (opt.out_path.empty() || opt.out_path == "-") {
      out << text;
    } else {
      io::write_text_file(opt.out_path, text);
      out << "wrote " << inst->family << " instance (dim " << inst->dim << ", seed " << inst->seed << ") to "
          << opt.out_path << "\n";
    }
    if (inst->oracle_se_point) {
      out << "oracle: ||z*|| = " << inst->oracle_se_point->z.norm() << ", ||w*|| = " << inst->oracle_se_point->w.norm()
          << ", se_residual = " << se_residual(inst->A, inst->B, *inst->oracle_se_point) << "\n";
    } else {
      out << "oracle: unavailable\n";
    }
    return kSuccess;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

// ---------------------------------------------------------------------------
// run

struct ZerosInit {};
struct RawInit {
  Vector x0;
  Vector b0;
};
struct ConsistentInit {
  Vector z0;
};
struct SeededInit {
  std::uint64_t seed = 0;
};
using InitMode = std::variant<ZerosInit, RawInit, ConsistentInit, SeededInit>;

struct RunSpec {
  std::variant<std::string, io::Json> problem;  // file path or inline document
  SolveConfig solve;
  InitMode init = ZerosInit{};
  std::string trace_path;
  std::string report_path;
  bool check_rescaling = false;
};

/// Reads a RunSpec document:
///   {"problem": "path" | {...}, "solve": {...},
///    "init": {"mode": "zeros"} | {"mode": "raw", "x0": [...], "b0": [...]} | {"mode": "consistent", "z0": [...]}
///             | {"mode": "seeded", "seed": n},
///    "trace": "path", "report": "path", "check_rescaling": bool}
inline RunSpec run_spec_from_json(const io::Json& j, const std::string& path = "") {
  if (!j.is_object()) throw ParseError(path, "expected a run specification object");
  RunSpec spec;
  const io::Json& problem = io::field(j, path, "problem");
  if (problem.is_string()) spec.problem = problem.get<std::string>();
  else if (problem.is_object()) spec.problem = problem;
  else throw ParseError(path + "/problem", "expected a path or an inline problem object");
  if (j.contains("solve")) spec.solve = io::config_from_json(j["solve"], path + "/solve");
  if (j.contains("init")) {
    const io::Json& init = j["init"];
    const std::string ipath = path + "/init";
    const io::Json& mode = io::field(init, ipath, "mode");
    if (mode == "zeros") {
      spec.init = ZerosInit{};
    } else if (mode == "raw") {
      spec.init = RawInit{io::vector_from_json(io::field(init, ipath, "x0"), ipath + "/x0"),
                          io::vector_from_json(io::field(init, ipath, "b0"), ipath + "/b0")};
    } else if (mode == "consistent") {
      spec.init = ConsistentInit{io::vector_from_json(io::field(init, ipath, "z0"), ipath + "/z0")};
    } else if (mode == "seeded") {
      spec.init = SeededInit{io::count(io::field(init, ipath, "seed"), ipath + "/seed")};
    } else {
      throw ParseError(ipath + "/mode", "expected zeros, raw, consistent or seeded");
    }
  }
  if (j.contains("trace")) spec.trace_path = io::field(j, path, "trace").get<std::string>();
  if (j.contains("report")) spec.report_path = io::field(j, path, "report").get<std::string>();
  if (j.contains("check_rescaling")) spec.check_rescaling = j["check_rescaling"].get<bool>();
  return spec;
}

inline ProblemInstance load_problem(const RunSpec& spec) {
  if (const auto* p = std::get_if<std::string>(&spec.problem)) {
    return io::instance_from_json(io::read_json_file(*p), *p + ":");
  }
  return io::instance_from_json(std::get<io::Json>(spec.problem), "problem:");
}

inline DRState start_state(const ProblemInstance& inst, const RunSpec& spec) {
  const double lambda = spec.solve.lambda;
  const auto n = static_cast<Eigen::Index>(inst.dim);
  return std::visit(
      [&](const auto& init) -> DRState {
        using I = std::decay_t<decltype(init)>;
        if constexpr (std::is_same_v<I, ZerosInit>) {
          return init_state(inst.A, inst.B, lambda, Vector::Zero(n), Vector::Zero(n));
        } else if constexpr (std::is_same_v<I, RawInit>) {
          if (init.x0.size() != n) throw DimensionError("init: x0 has dimension " + std::to_string(init.x0.size()));
          return init_state(inst.A, inst.B, lambda, init.x0, init.b0);
        } else if constexpr (std::is_same_v<I, SeededInit>) {
          return corpus_start(inst, lambda, init.seed);
        } else {
          if (init.z0.size() != n) throw DimensionError("init: z0 has dimension " + std::to_string(init.z0.size()));
          return init_consistent(inst.A, inst.B, lambda, init.z0);
        }
      },
      spec.init);
}

inline const char* verdict_word(bool pass) { return pass ? "pass" : "fail"; }

inline int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  std::optional<ProblemInstance> inst;
  std::optional<DRState> start;
  std::optional<CertifiedReference> reference;
  try {
    spec.solve.validate();
    inst = load_problem(spec);
    start = start_state(*inst, spec);
    if (inst->oracle_se_point) reference = CertifiedReference::certify(inst->A, inst->B, *inst->oracle_se_point);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  const double lambda = spec.solve.lambda;
  SolveConfig config = spec.solve;
  config.record_trace = true;

  std::optional<FejerMonitor> fejer;
  if (reference) fejer.emplace(*reference, *start, lambda);
  bool contraction_ok = true;
  bool a_y_ok = true;
  auto observer = [&](const DRState& prev, const DRState& next) {
    if (fejer) fejer->observe(prev, next);
    if (contraction_applicable(inst->B, prev) && !contraction_check(prev, next, lambda).pass) contraction_ok = false;
    if (prev.y && !a_y_contraction_check(prev, next, lambda).pass) a_y_ok = false;
  };

  SolveReferences refs;
  refs.se_point = reference;
  refs.solution = inst->oracle_solution;
  const Vector x0 = start->x;
  const Vector b0 = start->b;
  SolveResult result;
  try {
    result = solve(inst->A, inst->B, config, *start, refs, observer);
  } catch (const Error& e) {
    err << "error: solve failed: " << e.what() << "\n";
    return kInvariantViolation;
  }
  const bool converged = result.stop == StopReason::converged;

  io::Json verdicts;
  io::Json report;
  report["stop_reason"] = to_string(result.stop);
  report["iterations"] = result.iterations;
  report["config"] = io::to_json(spec.solve);
  io::Json final_block;
  final_block["res_ab"] = result.res_ab;
  final_block["res_xy"] = result.res_xy;
  final_block["se_residual"] = se_residual(inst->A, inst->B, result.final_state.pair());
  final_block["x"] = io::to_json(result.final_state.x);
  final_block["b"] = io::to_json(result.final_state.b);
  report["final"] = final_block;

  bool all_pass = true;
  if (fejer) {
    const FejerReport& fr = fejer->report();
    verdicts["fejer"] = verdict_word(fr.gaps_ok && fr.monotone_ok);
    verdicts["summability"] = verdict_word(fr.sums_ok);
    all_pass = all_pass && fr.passed();
    report["fejer"] = io::to_json(fr);
  } else {
    verdicts["fejer"] = "not applicable";
    verdicts["summability"] = "not applicable";
  }
  verdicts["contraction"] = verdict_word(contraction_ok);
  verdicts["a_y_contraction"] = verdict_word(a_y_ok);
  all_pass = all_pass && contraction_ok && a_y_ok;

  if (result.trace.size() >= 10) {
    const LimitsReport lim = limits_check(result.trace, kDefaultTailFraction,
                                          converged ? std::optional<double>(10.0 * config.tol_residual) : std::nullopt);
    verdicts["limits"] = verdict_word(lim.passed);
    report["limits"] = io::to_json(lim);
    all_pass = all_pass && lim.passed;
  } else {
    verdicts["limits"] = "not applicable";
  }

  if (spec.check_rescaling) {
    const std::size_t steps = std::clamp<std::size_t>(result.iterations, 1, 100);
    const RescalingReport rr = rescaled_equivalence_check(inst->A, inst->B, lambda, x0, b0, steps);
    verdicts["rescaling"] = verdict_word(rr.passed);
    report["rescaling"] = io::to_json(rr);
    all_pass = all_pass && rr.passed;
  }

  if (inst->oracle_se_point) {
    io::Json o;
    o["dist_x"] = (result.final_state.x - inst->oracle_se_point->z).norm();
    o["dist_b"] = (result.final_state.b - inst->oracle_se_point->w).norm();
    report["oracle"] = o;
  } else if (inst->oracle_solution) {
    io::Json o;
    o["dist_x"] = (result.final_state.x - *inst->oracle_solution).norm();
    report["oracle"] = o;
  }
  report["verdicts"] = verdicts;

  try {
    if (!spec.trace_path.empty() && spec.solve.record_trace) {
      std::ostringstream trace_text;
      io::write_trace_jsonl(trace_text, result.trace);
      io::write_text_file(spec.trace_path, trace_text.str());
    }
    if (!spec.report_path.empty()) io::write_text_file(spec.report_path, io::canonical_dump(report));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  out << "stop reason: " << to_string(result.stop) << " after " << result.iterations << " iterations\n";
  out << "residuals: ||a+b|| = " << result.res_ab << ", ||x-y|| = " << result.res_xy << "\n";
  for (const auto& [name, v] : verdicts.items()) out << "  " << name << ": " << v.get<std::string>() << "\n";

  if (!all_pass) return kInvariantViolation;
  return converged ? kSuccess : kConvergenceFailure;
}

// ---------------------------------------------------------------------------
// verify

inline int cmd_verify(const std::string& suite_name, std::size_t seeds, std::ostream& out, std::ostream& err,
                      unsigned jobs = 0) {
  std::vector<Suite> suites;
  if (suite_name == "all") {
    suites = {Suite::fejer, Suite::contraction, Suite::limits, Suite::zeta_equivalence, Suite::rescaling};
  } else if (auto s = suite_from_string(suite_name)) {
    suites = {*s};
  } else {
    err << "error: unknown suite '" << suite_name
        << "' (expected fejer, contraction, limits, zeta-equivalence, rescaling or all)\n";
    return kInputError;
  }
  if (seeds == 0) {
    err << "warning: --seeds 0 runs no instances; suite passes vacuously\n";
  }

  bool all_pass = true;
  out << std::left << std::setw(18) << "suite" << std::setw(13) << "family" << std::setw(10) << "passed"
      << "n/a\n";
  for (Suite suite : suites) {
    for (Family family : {Family::linear, Family::feasibility, Family::lasso}) {
      const SuiteSummary s = run_suite(suite, family, seeds, jobs);
      const std::size_t applicable = s.passed + s.failed;
      out << std::left << std::setw(18) << to_string(suite) << std::setw(13) << to_string(family) << std::setw(10)
          << (std::to_string(s.passed) + "/" + std::to_string(applicable)) << s.not_applicable << "\n";
      for (const auto& f : s.failures) {
        out << "    FAIL seed " << f.seed << ": " << f.detail << "\n";
      }
      all_pass = all_pass && s.failed == 0;
    }
  }
  out << (all_pass ? "all suites passed\n" : "some suites FAILED\n");
  return all_pass ? kSuccess : kInvariantViolation;
}

}  // namespace drsplit::cli
