#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "drsplit/commands.hpp"

namespace {

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("DRSPLIT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace drsplit;
  configure_logging();

  CLI::App app{"Douglas-Rachford splitting solver with per-iteration convergence diagnostics"};
  app.require_subcommand(1);

  cli::GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Write a seeded problem instance as JSON");
  generate->add_option("family", gen.family, "linear | feasibility | lasso")->required();
  generate->add_option("--seed", gen.seed, "Generator seed");
  generate->add_option("--dim", gen.dim, "Dimension (linear, feasibility)");
  generate->add_option("--rows", gen.rows, "Rows of D (lasso)");
  generate->add_option("--cols", gen.cols, "Columns of D (lasso)");
  generate->add_option("--mu", gen.mu, "l1 weight (lasso)");
  generate->add_option("--conditioning", gen.conditioning, "Spectrum ratio of the symmetric parts (linear)");
  generate->add_option("--shape", gen.shape, "boxes | box-ball (feasibility)");
  generate->add_option("--out", gen.out_path, "Output path (default stdout)");

  std::string spec_path, problem_path, config_path, z0_csv, x0_csv, b0_csv, trace_path, report_path;
  std::optional<double> lambda, tol;
  std::optional<std::size_t> max_iters;
  std::optional<std::uint64_t> run_seed;
  bool check_rescaling = false;
  auto* run = app.add_subcommand("run", "Solve an instance and report invariant verdicts");
  run->add_option("--spec", spec_path, "Run specification JSON");
  run->add_option("--problem", problem_path, "Problem instance JSON");
  run->add_option("--config", config_path, "Solve configuration JSON");
  run->add_option("--lambda", lambda, "Stepsize");
  run->add_option("--max-iters", max_iters, "Iteration limit");
  run->add_option("--tol", tol, "Stopping tolerance on max(||a+b||, ||x-y||)");
  auto* z0_opt = run->add_option("--init-z0", z0_csv, "Consistent start from seed z0 (CSV)");
  auto* x0_opt = run->add_option("--init-x0", x0_csv, "Raw start x0 (CSV)");
  auto* b0_opt = run->add_option("--init-b0", b0_csv, "Raw start b0 (CSV)");
  auto* seed_opt = run->add_option("--seed", run_seed, "Seeded random raw start");
  seed_opt->excludes(z0_opt)->excludes(x0_opt)->excludes(b0_opt);
  x0_opt->needs(b0_opt);
  b0_opt->needs(x0_opt);
  z0_opt->excludes(x0_opt)->excludes(b0_opt);
  run->add_option("--trace", trace_path, "Write per-iteration trace (JSONL)");
  run->add_option("--report", report_path, "Write report (JSON)");
  run->add_flag("--check-rescaling", check_rescaling, "Also verify the lambda-rescaling equivalence");

  std::string suite;
  std::size_t seeds = 10;
  unsigned jobs = 0;
  auto* verify = app.add_subcommand("verify", "Run invariant suites over seeded corpora");
  verify->add_option("suite", suite, "fejer | contraction | limits | zeta-equivalence | rescaling | all")->required();
  verify->add_option("--seeds", seeds, "Instances per family");
  verify->add_option("--jobs", jobs, "Concurrent instances (default: hardware threads)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInputError;
  }

  if (*generate) {
    spdlog::debug("generate family={} seed={}", gen.family, gen.seed);
    return cli::cmd_generate(gen, std::cout, std::cerr);
  }

  if (*run) {
    cli::RunSpec spec;
    try {
      if (!spec_path.empty()) {
        spec = cli::run_spec_from_json(io::read_json_file(spec_path), spec_path + ":");
      } else if (problem_path.empty()) {
        std::cerr << "error: run needs --problem or --spec\n";
        return cli::kInputError;
      }
      if (!problem_path.empty()) spec.problem = problem_path;
      if (!config_path.empty()) spec.solve = io::config_from_json(io::read_json_file(config_path), config_path + ":");
      if (lambda) spec.solve.lambda = *lambda;
      if (max_iters) spec.solve.max_iters = *max_iters;
      if (tol) spec.solve.tol_residual = *tol;
      if (run_seed) spec.init = cli::SeededInit{*run_seed};
      if (!z0_csv.empty()) spec.init = cli::ConsistentInit{cli::parse_csv_vector(z0_csv, "--init-z0")};
      if (!x0_csv.empty()) {
        spec.init = cli::RawInit{cli::parse_csv_vector(x0_csv, "--init-x0"), cli::parse_csv_vector(b0_csv, "--init-b0")};
      }
      if (!trace_path.empty()) spec.trace_path = trace_path;
      if (!report_path.empty()) spec.report_path = report_path;
      if (check_rescaling) spec.check_rescaling = true;
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return cli::kInputError;
    }
    spdlog::debug("run lambda={} max_iters={} tol={}", spec.solve.lambda, spec.solve.max_iters, spec.solve.tol_residual);
    const int code = cli::cmd_run(spec, std::cout, std::cerr);
    spdlog::info("run finished with exit code {}", code);
    return code;
  }

  spdlog::debug("verify suite={} seeds={}", suite, seeds);
  return cli::cmd_verify(suite, seeds, std::cout, std::cerr, jobs);
}
