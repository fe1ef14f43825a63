#pragma once

// JSON encodings of vectors, operators, instances, solve configurations,
// trace records and reports. Output uses insertion-ordered objects so that
// the same value always serializes to the same bytes.

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drsplit/diagnostics.hpp"
#include "drsplit/errors.hpp"
#include "drsplit/operators.hpp"
#include "drsplit/problems.hpp"
#include "drsplit/solver.hpp"
#include "drsplit/space.hpp"

namespace drsplit::io {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// reading helpers

inline const Json& field(const Json& j, const std::string& path, const char* key) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + "/" + key, "missing field");
  return *it;
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(path, "non-finite number");
  return v;
}

inline std::uint64_t count(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
    throw ParseError(path, "expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

/// Numbers, plus the strings "inf" / "-inf" when allow_infinite is set.
inline double extended_number(const Json& j, const std::string& path, bool allow_infinite) {
  if (j.is_string() && allow_infinite) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ParseError(path, "unknown numeric string '" + s + "'");
  }
  return number(j, path);
}

inline Vector vector_from_json(const Json& j, const std::string& path, bool allow_infinite = false) {
  if (!j.is_array()) throw ParseError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = extended_number(j[i], path + "/" + std::to_string(i), allow_infinite);
  }
  return v;
}

inline Matrix matrix_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ParseError(path, "expected a nonempty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string row_path = path + "/" + std::to_string(r);
    const Vector row = vector_from_json(j[r], row_path);
    if (static_cast<std::size_t>(row.size()) != cols) throw ParseError(row_path, "ragged matrix row");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

// ---------------------------------------------------------------------------
// writing helpers

inline Json to_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

inline Json bound_to_json(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isinf(v[i])) j.push_back(v[i] > 0 ? "inf" : "-inf");
    else j.push_back(v[i]);
  }
  return j;
}

inline Json to_json(const Matrix& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(to_json(Vector(m.row(r).transpose())));
  return j;
}

inline Json to_json(const PairPoint& p) {
  Json j;
  j["z"] = to_json(p.z);
  j["w"] = to_json(p.w);
  return j;
}

inline PairPoint pair_from_json(const Json& j, const std::string& path) {
  PairPoint p{vector_from_json(field(j, path, "z"), path + "/z"), vector_from_json(field(j, path, "w"), path + "/w")};
  if (p.z.size() != p.w.size()) throw ParseError(path, "z and w have different dimensions");
  return p;
}

// ---------------------------------------------------------------------------
// operators

inline Json to_json(const MonotoneOp& T) {
  Json j;
  j["kind"] = to_string(T.kind());
  std::visit(
      [&](const auto& op) {
        using Op = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<Op, LinearAffine>) {
          j["M"] = to_json(op.M);
          j["q"] = to_json(op.q);
        } else if constexpr (std::is_same_v<Op, SubdiffL1>) {
          j["mu"] = op.mu;
        } else if constexpr (std::is_same_v<Op, NormalConeBox>) {
          j["lo"] = bound_to_json(op.lo);
          j["hi"] = bound_to_json(op.hi);
        } else if constexpr (std::is_same_v<Op, NormalConeBall>) {
          j["center"] = to_json(op.center);
          j["radius"] = op.radius;
        } else if constexpr (std::is_same_v<Op, Zero>) {
          j["dim"] = op.dim;
        } else {
          j["lambda"] = op.lambda;
          j["inner"] = to_json(*op.inner);
        }
      },
      T.variant());
  return j;
}

inline MonotoneOp op_from_json(const Json& j, const std::string& path) {
  const Json& kind_j = field(j, path, "kind");
  if (!kind_j.is_string()) throw ParseError(path + "/kind", "expected a string");
  const auto& kind = kind_j.get_ref<const std::string&>();
  try {
    if (kind == "linear_affine") {
      return MonotoneOp::linear_affine(matrix_from_json(field(j, path, "M"), path + "/M"),
                                       vector_from_json(field(j, path, "q"), path + "/q"));
    }
    if (kind == "l1") return MonotoneOp::l1(number(field(j, path, "mu"), path + "/mu"));
    if (kind == "box") {
      return MonotoneOp::box(vector_from_json(field(j, path, "lo"), path + "/lo", true),
                             vector_from_json(field(j, path, "hi"), path + "/hi", true));
    }
    if (kind == "ball") {
      return MonotoneOp::ball(vector_from_json(field(j, path, "center"), path + "/center"),
                              number(field(j, path, "radius"), path + "/radius"));
    }
    if (kind == "zero") return MonotoneOp::zero(count(field(j, path, "dim"), path + "/dim"));
    if (kind == "scaled") {
      return MonotoneOp::scaled(op_from_json(field(j, path, "inner"), path + "/inner"),
                                number(field(j, path, "lambda"), path + "/lambda"));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(path, e.what());
  }
  throw ParseError(path + "/kind", "unknown operator kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// problem instances

inline Json to_json(const ProblemInstance& inst) {
  Json j;
  j["family"] = inst.family;
  j["dim"] = inst.dim;
  j["seed"] = inst.seed;
  j["A"] = to_json(inst.A);
  j["B"] = to_json(inst.B);
  if (inst.oracle_se_point) {
    j["oracle"] = to_json(*inst.oracle_se_point);
  } else if (inst.oracle_solution) {
    Json o;
    o["z"] = to_json(*inst.oracle_solution);
    j["oracle"] = o;
  }
  return j;
}

inline ProblemInstance instance_from_json(const Json& j, const std::string& path = "") {
  if (!j.is_object()) throw ParseError(path, "expected a problem object");
  MonotoneOp A = op_from_json(field(j, path, "A"), path + "/A");
  MonotoneOp B = op_from_json(field(j, path, "B"), path + "/B");
  const std::string family = j.contains("family") && j["family"].is_string() ? j["family"].get<std::string>() : "custom";
  const std::uint64_t seed = j.contains("seed") ? count(j["seed"], path + "/seed") : 0;
  std::size_t dim = 0;
  if (j.contains("dim")) {
    dim = count(j["dim"], path + "/dim");
  } else if (auto d = A.dim().has_value() ? A.dim() : B.dim()) {
    dim = *d;
  } else {
    throw ParseError(path + "/dim", "dimension cannot be inferred from the operators");
  }
  for (const auto& [name, op] : {std::pair<const char*, const MonotoneOp*>{"A", &A}, {"B", &B}}) {
    if (auto d = op->dim(); d && *d != dim) throw ParseError(path + "/" + name, "operator dimension does not match dim");
  }
  ProblemInstance inst{family, std::move(A), std::move(B), dim, seed, std::nullopt, std::nullopt};
  if (j.contains("oracle")) {
    const Json& o = j["oracle"];
    const std::string opath = path + "/oracle";
    Vector z = vector_from_json(field(o, opath, "z"), opath + "/z");
    if (static_cast<std::size_t>(z.size()) != dim) throw ParseError(opath + "/z", "dimension does not match dim");
    if (o.contains("w")) inst.oracle_se_point = pair_from_json(o, opath);
    inst.oracle_solution = std::move(z);
  }
  return inst;
}

// ---------------------------------------------------------------------------
// solve configuration

inline Json to_json(const SolveConfig& c) {
  Json j;
  j["lambda"] = c.lambda;
  j["max_iters"] = c.max_iters;
  j["tol_residual"] = c.tol_residual;
  j["record_trace"] = c.record_trace;
  return j;
}

/// Missing fields keep their defaults.
inline SolveConfig config_from_json(const Json& j, const std::string& path = "") {
  if (!j.is_object()) throw ParseError(path, "expected a solve configuration object");
  SolveConfig c;
  if (j.contains("lambda")) c.lambda = number(j["lambda"], path + "/lambda");
  if (j.contains("max_iters")) c.max_iters = count(j["max_iters"], path + "/max_iters");
  if (j.contains("tol_residual")) c.tol_residual = number(j["tol_residual"], path + "/tol_residual");
  if (j.contains("record_trace")) {
    if (!j["record_trace"].is_boolean()) throw ParseError(path + "/record_trace", "expected a boolean");
    c.record_trace = j["record_trace"].get<bool>();
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw ParseError(path, e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// traces and reports

inline Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json to_json(const TraceRecord& r) {
  Json j;
  j["n"] = r.n;
  j["res_ab"] = r.res_ab;
  j["res_xy"] = r.res_xy;
  j["res_step_x"] = r.res_step_x;
  j["res_step_b"] = r.res_step_b;
  j["res_step_y"] = optional_number(r.res_step_y);
  j["res_step_a"] = optional_number(r.res_step_a);
  j["res_cross"] = r.res_cross;
  j["fejer_gap"] = optional_number(r.fejer_gap);
  j["dist_to_solution"] = optional_number(r.dist_to_solution);
  return j;
}

inline TraceRecord trace_record_from_json(const Json& j, const std::string& path = "") {
  auto opt = [&](const char* key) -> std::optional<double> {
    const Json& v = field(j, path, key);
    if (v.is_null()) return std::nullopt;
    return number(v, path + "/" + key);
  };
  TraceRecord r;
  r.n = count(field(j, path, "n"), path + "/n");
  r.res_ab = number(field(j, path, "res_ab"), path + "/res_ab");
  r.res_xy = number(field(j, path, "res_xy"), path + "/res_xy");
  r.res_step_x = number(field(j, path, "res_step_x"), path + "/res_step_x");
  r.res_step_b = number(field(j, path, "res_step_b"), path + "/res_step_b");
  r.res_step_y = opt("res_step_y");
  r.res_step_a = opt("res_step_a");
  r.res_cross = number(field(j, path, "res_cross"), path + "/res_cross");
  r.fejer_gap = opt("fejer_gap");
  r.dist_to_solution = opt("dist_to_solution");
  return r;
}

inline void write_trace_jsonl(std::ostream& out, const std::vector<TraceRecord>& trace) {
  for (const auto& rec : trace) out << to_json(rec).dump() << '\n';
}

inline std::vector<TraceRecord> read_trace_jsonl(std::istream& in) {
  std::vector<TraceRecord> trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      trace.push_back(trace_record_from_json(Json::parse(line), "line " + std::to_string(lineno)));
    } catch (const Json::parse_error& e) {
      throw ParseError("line " + std::to_string(lineno), e.what());
    }
  }
  return trace;
}

inline Json to_json(const FejerReport& r) {
  Json j;
  j["bound"] = r.bound;
  j["steps"] = r.per_step_gaps.size();
  j["min_gap"] = r.per_step_gaps.empty() ? 0.0 : *std::min_element(r.per_step_gaps.begin(), r.per_step_gaps.end());
  j["final_partial_sum"] = r.partial_sums.empty() ? 0.0 : r.partial_sums.back();
  j["gap_tolerance"] = r.gap_tolerance;
  j["sum_tolerance"] = r.sum_tolerance;
  j["fejer_inequality"] = r.gaps_ok ? "pass" : "fail";
  j["summability"] = r.sums_ok ? "pass" : "fail";
  j["fejer_monotone"] = r.monotone_ok ? "pass" : "fail";
  return j;
}

inline Json to_json(const LimitsReport& r) {
  Json j;
  j["verdict"] = r.passed ? "pass" : "fail";
  Json series = Json::array();
  for (const auto& s : r.series) {
    Json e;
    e["name"] = s.name;
    e["head_max"] = s.head_max;
    e["tail_max"] = s.tail_max;
    e["pass"] = s.pass;
    series.push_back(std::move(e));
  }
  j["series"] = std::move(series);
  return j;
}

inline Json to_json(const RescalingReport& r) {
  Json j;
  j["verdict"] = r.passed ? "pass" : "fail";
  j["steps"] = r.steps_run;
  j["max_x_deviation"] = r.max_x_deviation;
  j["max_b_deviation"] = r.max_b_deviation;
  j["first_divergence"] = r.first_divergence ? Json(*r.first_divergence) : Json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// files

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(origin, std::string("malformed JSON: ") + e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_json_text(buffer.str(), path);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

inline std::string canonical_dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace drsplit::io
