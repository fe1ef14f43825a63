#include <filesystem>
#include <fstream>
#include <sstream>

#include <catch_amalgamated.hpp>

#include "drsplit/commands.hpp"

using namespace drsplit;
using io::Json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "drsplit_test_commands";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json identity_problem() {
  return Json::parse(R"({
    "family": "custom", "dim": 1,
    "A": {"kind": "linear_affine", "M": [[1.0]], "q": [0.0]},
    "B": {"kind": "linear_affine", "M": [[1.0]], "q": [0.0]},
    "oracle": {"z": [0.0], "w": [0.0]}
  })");
}

Json generate_to_file(cli::GenerateOptions opt, const std::string& name) {
  opt.out_path = scratch(name).string();
  std::ostringstream out, err;
  REQUIRE(cli::cmd_generate(opt, out, err) == cli::kSuccess);
  CHECK(err.str().empty());
  return io::read_json_file(opt.out_path);
}

}  // namespace

TEST_CASE("parse_csv_vector") {
  const Vector v = cli::parse_csv_vector("1, 2.5,-3", "--init-x0");
  REQUIRE(v.size() == 3);
  CHECK(v[1] == 2.5);
  CHECK_THROWS_AS(cli::parse_csv_vector("1,x", "--init-x0"), ParseError);
  CHECK_THROWS_AS(cli::parse_csv_vector("", "--init-x0"), ParseError);
  CHECK_THROWS_AS(cli::parse_csv_vector("1,nan", "--init-x0"), Error);
}

TEST_CASE("generate writes the requested families") {
  SECTION("linear") {
    cli::GenerateOptions opt;
    opt.family = "linear";
    opt.dim = 5;
    opt.seed = 7;
    const Json j = generate_to_file(opt, "linear.json");
    CHECK(j["A"]["kind"] == "linear_affine");
    CHECK(j["B"]["kind"] == "linear_affine");
    CHECK(j["oracle"]["z"].size() == 5);
    CHECK(j["oracle"]["w"].size() == 5);
    const auto inst = io::instance_from_json(j);
    CHECK(se_residual(inst.A, inst.B, *inst.oracle_se_point) <= 1e-8);
  }
  SECTION("feasibility") {
    cli::GenerateOptions opt;
    opt.family = "feasibility";
    opt.dim = 3;
    opt.seed = 1;
    const Json j = generate_to_file(opt, "feasibility.json");
    CHECK(j["A"]["kind"] == "box");
    CHECK(j["B"]["kind"] == "box");
    CHECK(j["oracle"]["w"] == Json::array({0.0, 0.0, 0.0}));
  }
  SECTION("lasso") {
    cli::GenerateOptions opt;
    opt.family = "lasso";
    opt.rows = 4;
    opt.cols = 6;
    opt.mu = 0.5;
    opt.seed = 2;
    const Json j = generate_to_file(opt, "lasso.json");
    CHECK(j["A"]["kind"] == "l1");
    CHECK(j["B"]["kind"] == "linear_affine");
    CHECK(j["dim"] == 6);
    const auto inst = io::instance_from_json(j);
    CHECK(se_residual(inst.A, inst.B, *inst.oracle_se_point) <= 1e-8);
  }
  SECTION("unknown family") {
    cli::GenerateOptions opt;
    opt.family = "quadratic";
    std::ostringstream out, err;
    CHECK(cli::cmd_generate(opt, out, err) == cli::kInputError);
    CHECK(err.str().find("unknown family") != std::string::npos);
  }
  SECTION("same seed gives identical files") {
    cli::GenerateOptions opt;
    opt.family = "lasso";
    opt.seed = 5;
    generate_to_file(opt, "a.json");
    generate_to_file(opt, "b.json");
    CHECK(slurp(scratch("a.json")) == slurp(scratch("b.json")));
  }
}

TEST_CASE("run on the identity instance") {
  cli::RunSpec spec;
  spec.problem = identity_problem();
  spec.init = cli::RawInit{Vector::Ones(1), Vector::Ones(1)};
  spec.report_path = scratch("identity_report.json").string();
  spec.trace_path = scratch("identity_trace.jsonl").string();
  std::ostringstream out, err;
  REQUIRE(cli::cmd_run(spec, out, err) == cli::kSuccess);
  const Json report = io::read_json_file(spec.report_path);
  CHECK(report["stop_reason"] == "converged");
  for (const auto& [name, v] : report["verdicts"].items()) {
    INFO(name);
    CHECK(v == "pass");
  }
  std::ifstream trace_in(spec.trace_path);
  const auto trace = io::read_trace_jsonl(trace_in);
  REQUIRE(trace.size() >= 10);
  CHECK(trace[0].res_step_x == Catch::Approx(0.5).margin(1e-15));
  CHECK(*trace[0].fejer_gap == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("run stops at the iteration limit") {
  cli::RunSpec spec;
  spec.problem = identity_problem();
  spec.init = cli::RawInit{Vector::Ones(1), Vector::Ones(1)};
  spec.solve.max_iters = 1;
  spec.report_path = scratch("limit_report.json").string();
  std::ostringstream out, err;
  const int code = cli::cmd_run(spec, out, err);
  CHECK(code == cli::kConvergenceFailure);
  CHECK(out.str().find("iteration-limit") != std::string::npos);
  CHECK(io::read_json_file(spec.report_path)["stop_reason"] == "iteration-limit");
}

TEST_CASE("run with a non-unit stepsize checks rescaling") {
  cli::GenerateOptions gen;
  gen.family = "linear";
  gen.dim = 4;
  gen.seed = 3;
  gen.conditioning = 5.0;
  const Json problem = generate_to_file(gen, "rescale_problem.json");
  cli::RunSpec spec;
  spec.problem = problem;
  spec.solve.lambda = 2.0;
  spec.check_rescaling = true;
  spec.init = cli::SeededInit{11};
  spec.report_path = scratch("rescale_report.json").string();
  std::ostringstream out, err;
  CHECK(cli::cmd_run(spec, out, err) == cli::kSuccess);
  const Json report = io::read_json_file(spec.report_path);
  CHECK(report["verdicts"]["rescaling"] == "pass");
  CHECK(report["verdicts"]["fejer"] == "pass");
  CHECK(report["oracle"]["dist_x"].get<double>() <= 1e-6);
}

TEST_CASE("run rejects bad input with exit code 3") {
  std::ostringstream out, err;
  SECTION("malformed problem file") {
    const fs::path p = scratch("malformed.json");
    std::ofstream(p) << "{\"A\": {\"kind\": \"l1\", ";
    cli::RunSpec spec;
    spec.problem = p.string();
    CHECK(cli::cmd_run(spec, out, err) == cli::kInputError);
  }
  SECTION("missing file") {
    cli::RunSpec spec;
    spec.problem = scratch("does_not_exist.json").string();
    CHECK(cli::cmd_run(spec, out, err) == cli::kInputError);
  }
  SECTION("start of the wrong dimension") {
    cli::RunSpec spec;
    spec.problem = identity_problem();
    spec.init = cli::ConsistentInit{Vector::Ones(2)};
    CHECK(cli::cmd_run(spec, out, err) == cli::kInputError);
  }
  SECTION("oracle outside the solution set") {
    Json problem = identity_problem();
    problem["oracle"]["z"] = Json::array({1.0});
    cli::RunSpec spec;
    spec.problem = problem;
    CHECK(cli::cmd_run(spec, out, err) == cli::kInputError);
    CHECK(err.str().find("reference not in extended solution set") != std::string::npos);
  }
  SECTION("invalid stepsize") {
    cli::RunSpec spec;
    spec.problem = identity_problem();
    spec.solve.lambda = 0.0;
    CHECK(cli::cmd_run(spec, out, err) == cli::kInputError);
  }
}

TEST_CASE("run specs parse from JSON") {
  const auto spec = cli::run_spec_from_json(Json::parse(R"({
    "problem": "p.json", "solve": {"lambda": 0.5},
    "init": {"mode": "consistent", "z0": [1, 2]},
    "trace": "t.jsonl", "check_rescaling": true
  })"));
  CHECK(std::get<std::string>(spec.problem) == "p.json");
  CHECK(spec.solve.lambda == 0.5);
  CHECK(std::get<cli::ConsistentInit>(spec.init).z0.size() == 2);
  CHECK(spec.trace_path == "t.jsonl");
  CHECK(spec.check_rescaling);
  CHECK(std::get<cli::SeededInit>(cli::run_spec_from_json(Json::parse(
                                      R"({"problem": {}, "init": {"mode": "seeded", "seed": 4}})"))
                                      .init)
            .seed == 4);
  CHECK_THROWS_AS(cli::run_spec_from_json(Json::parse(R"({"problem": "p", "init": {"mode": "other"}})")), ParseError);
  CHECK_THROWS_AS(cli::run_spec_from_json(Json::parse(R"({"solve": {}})")), ParseError);
}

TEST_CASE("runs are reproducible byte for byte") {
  cli::GenerateOptions gen;
  gen.family = "lasso";
  gen.rows = 6;
  gen.cols = 4;
  gen.seed = 9;
  const Json problem = generate_to_file(gen, "repro_problem.json");
  std::string traces[2], reports[2];
  for (int k = 0; k < 2; ++k) {
    cli::RunSpec spec;
    spec.problem = problem;
    spec.init = cli::SeededInit{21};
    spec.trace_path = scratch("repro_trace_" + std::to_string(k) + ".jsonl").string();
    spec.report_path = scratch("repro_report_" + std::to_string(k) + ".json").string();
    std::ostringstream out, err;
    CHECK(cli::cmd_run(spec, out, err) == cli::kSuccess);
    traces[k] = slurp(spec.trace_path);
    reports[k] = slurp(spec.report_path);
  }
  CHECK_FALSE(traces[0].empty());
  CHECK(traces[0] == traces[1]);
  CHECK(reports[0] == reports[1]);
}

TEST_CASE("verify suites") {
  SECTION("fejer over 100 seeds") {
    std::ostringstream out, err;
    CHECK(cli::cmd_verify("fejer", 100, out, err) == cli::kSuccess);
    CHECK(out.str().find("100/100") != std::string::npos);
  }
  SECTION("all suites over 10 seeds") {
    std::ostringstream out, err;
    CHECK(cli::cmd_verify("all", 10, out, err) == cli::kSuccess);
    const std::string table = out.str();
    for (const char* name : {"fejer", "contraction", "limits", "zeta-equivalence", "rescaling"}) {
      CHECK(table.find(name) != std::string::npos);
    }
    CHECK(table.find("all suites passed") != std::string::npos);
  }
  SECTION("zero seeds pass vacuously with a warning") {
    std::ostringstream out, err;
    CHECK(cli::cmd_verify("contraction", 0, out, err) == cli::kSuccess);
    CHECK(err.str().find("vacuous") != std::string::npos);
  }
  SECTION("unknown suite") {
    std::ostringstream out, err;
    CHECK(cli::cmd_verify("sorting", 1, out, err) == cli::kInputError);
  }
  SECTION("output order does not depend on concurrency") {
    std::ostringstream a, b, err;
    cli::cmd_verify("limits", 8, a, err, 1);
    cli::cmd_verify("limits", 8, b, err, 4);
    CHECK(a.str() == b.str());
  }
}
