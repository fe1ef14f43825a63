#pragma once

// Douglas-Rachford iteration with fixed stepsize lambda. Each step solves two
// proximal subproblems:
//
//   a_n in A(y_n),   lambda a_n + y_n = x_{n-1} - lambda b_{n-1}
//   b_n in B(x_n),   lambda b_n + x_n = y_n + lambda b_{n-1}
//
// and records zeta_n = y_n + lambda b_{n-1}, the variable of the classical
// fixed-point presentation zeta_n = J_A(2 J_B - I) zeta_{n-1} + (I - J_B) zeta_{n-1}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>

#include "drsplit/errors.hpp"
#include "drsplit/operators.hpp"
#include "drsplit/space.hpp"

namespace drsplit {

/// Iterate n of a trajectory. y, a and zeta are undefined at n = 0.
struct DRState {
  std::size_t n = 0;
  Vector x;
  Vector b;
  std::optional<Vector> y;
  std::optional<Vector> a;
  std::optional<Vector> zeta;

  PairPoint pair() const { return {x, b}; }
};

inline void require_lambda(double lambda, const char* what) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(std::string(what) + ": lambda must be positive and finite");
  }
}

inline void require_dims(const MonotoneOp& A, const MonotoneOp& B, const Vector& v, const char* what) {
  require_compatible(A, v, what);
  require_compatible(B, v, what);
}

/// Raw start: any (x0, b0).
inline DRState init_state(const MonotoneOp& A, const MonotoneOp& B, double lambda, Vector x0, Vector b0) {
  require_lambda(lambda, "init_state");
  require_same_dim(x0, b0, "init_state");
  if (x0.size() < 1) throw DimensionError("init_state: empty start vector");
  require_finite(x0, "init_state: x0");
  require_finite(b0, "init_state: b0");
  require_dims(A, B, x0, "init_state");
  DRState s;
  s.x = std::move(x0);
  s.b = std::move(b0);
  return s;
}

/// Consistent start from a seed z0: x0 = J_{lambda B}(z0), b0 = (z0 - x0) / lambda,
/// so that b0 in B(x0).
inline DRState init_consistent(const MonotoneOp& A, const MonotoneOp& B, double lambda, const Vector& z0) {
  require_lambda(lambda, "init_consistent");
  require_dims(A, B, z0, "init_consistent");
  ResolventResult r = resolvent(B, lambda, z0);
  return init_state(A, B, lambda, std::move(r.x), std::move(r.y));
}

inline DRState dr_step(const DRState& state, const MonotoneOp& A, const MonotoneOp& B, double lambda) {
  require_lambda(lambda, "dr_step");
  require_same_dim(state.x, state.b, "dr_step");
  ResolventResult ya = resolvent(A, lambda, state.x - lambda * state.b);
  Vector zeta = ya.x + lambda * state.b;
  ResolventResult xb = resolvent(B, lambda, zeta);
  DRState next;
  next.n = state.n + 1;
  next.x = std::move(xb.x);
  next.b = std::move(xb.y);
  next.y = std::move(ya.x);
  next.a = std::move(ya.y);
  next.zeta = std::move(zeta);
  return next;
}

/// zeta -> J_{lambda A}(2 J_{lambda B}(zeta) - zeta) + (zeta - J_{lambda B}(zeta)).
inline Vector zeta_step(const Vector& zeta, const MonotoneOp& A, const MonotoneOp& B, double lambda) {
  require_lambda(lambda, "zeta_step");
  const Vector jb = resolvent(B, lambda, zeta).x;
  const Vector reflected = 2.0 * jb - zeta;
  return resolvent(A, lambda, reflected).x + (zeta - jb);
}

/// Residuals of the two defining equations of a step, relative to
/// 1 + ||state||.
struct StepEquationResiduals {
  double first_line;   // ||lambda a_n + y_n - (x_{n-1} - lambda b_{n-1})||
  double second_line;  // ||lambda b_n + x_n - (y_n + lambda b_{n-1})||
  double zeta_line;    // ||zeta_n - (y_n + lambda b_{n-1})||
  double scale;

  bool within(double tol) const {
    return std::max({first_line, second_line, zeta_line}) <= tol * scale;
  }
};

inline StepEquationResiduals step_equation_residuals(const DRState& prev, const DRState& next, double lambda) {
  if (!next.y || !next.a || !next.zeta || next.n != prev.n + 1) {
    throw Error("step_equation_residuals: states are not consecutive");
  }
  const Vector& y = *next.y;
  const Vector& a = *next.a;
  StepEquationResiduals r{};
  r.first_line = (lambda * a + y - (prev.x - lambda * prev.b)).norm();
  r.second_line = (lambda * next.b + next.x - (y + lambda * prev.b)).norm();
  r.zeta_line = (*next.zeta - (y + lambda * prev.b)).norm();
  r.scale = 1.0 + std::sqrt(prev.x.squaredNorm() + lambda * lambda * prev.b.squaredNorm() + next.x.squaredNorm() +
                            lambda * lambda * next.b.squaredNorm() + y.squaredNorm() +
                            lambda * lambda * a.squaredNorm());
  return r;
}

}  // namespace drsplit
