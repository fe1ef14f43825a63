#pragma once

// Seeded generators of solvable instances of 0 in A(x) + B(x), each paired
// with a reference solution computed without touching the resolvent code:
// dense Gaussian elimination for linear instances, an interior point for
// feasibility instances and coordinate descent for lasso instances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "drsplit/errors.hpp"
#include "drsplit/operators.hpp"
#include "drsplit/space.hpp"

namespace drsplit {

struct ProblemInstance {
  std::string family;
  MonotoneOp A;
  MonotoneOp B;
  std::size_t dim;
  std::uint64_t seed;
  std::optional<Vector> oracle_solution;   // z* with 0 in A(z*) + B(z*)
  std::optional<PairPoint> oracle_se_point;  // (z*, w*) in S_e(A, B)
};

namespace oracle {

/// Gaussian elimination with partial pivoting. Returns nullopt when a pivot
/// falls below rel_tol times the largest entry of the matrix.
inline std::optional<Vector> gauss_solve(Matrix M, Vector rhs, double rel_tol = 1e-13) {
  const Eigen::Index n = M.rows();
  if (M.cols() != n || rhs.size() != n) throw DimensionError("gauss_solve: shape mismatch");
  const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index r = col + 1; r < n; ++r) {
      if (std::abs(M(r, col)) > std::abs(M(pivot, col))) pivot = r;
    }
    if (std::abs(M(pivot, col)) <= rel_tol * scale) return std::nullopt;
    if (pivot != col) {
      M.row(pivot).swap(M.row(col));
      std::swap(rhs[pivot], rhs[col]);
    }
    for (Eigen::Index r = col + 1; r < n; ++r) {
      const double factor = M(r, col) / M(col, col);
      if (factor == 0.0) continue;
      for (Eigen::Index c = col; c < n; ++c) M(r, c) -= factor * M(col, c);
      rhs[r] -= factor * rhs[col];
    }
  }
  Vector x(n);
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    double acc = rhs[r];
    for (Eigen::Index c = r + 1; c < n; ++c) acc -= M(r, c) * x[c];
    x[r] = acc / M(r, r);
  }
  return x;
}

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

/// Worst violation of the lasso optimality condition
/// D^T (c - D z) in mu d||z||_1.
inline double lasso_kkt_violation(const Matrix& D, const Vector& c, double mu, const Vector& z) {
  const Vector g = D.transpose() * (c - D * z);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double v = z[j] == 0.0 ? std::max(0.0, std::abs(g[j]) - mu) : std::abs(g[j] - std::copysign(mu, z[j]));
    worst = std::max(worst, v);
  }
  return worst;
}

/// Cyclic coordinate descent for min 1/2 ||D z - c||^2 + mu ||z||_1.
inline Vector lasso_coordinate_descent(const Matrix& D, const Vector& c, double mu, double kkt_tol = 1e-10,
                                       std::size_t max_sweeps = 200000) {
  const Eigen::Index p = D.cols();
  const Vector col_sq = D.colwise().squaredNorm().transpose();
  Vector z = Vector::Zero(p);
  Vector r = c;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq[j] == 0.0) continue;
      const double rho = D.col(j).dot(r) + col_sq[j] * z[j];
      const double zj = soft_threshold(rho, mu) / col_sq[j];
      const double delta = zj - z[j];
      if (delta != 0.0) {
        r -= delta * D.col(j);
        z[j] = zj;
        max_move = std::max(max_move, std::abs(delta) * std::sqrt(col_sq[j]));
      }
    }
    if (sweep % 16 == 15 || max_move == 0.0) {
      if (lasso_kkt_violation(D, c, mu, z) <= kkt_tol * (1.0 + mu)) return z;
    }
  }
  throw OracleUnavailable("lasso oracle: coordinate descent did not converge");
}

/// Re-solves the lasso optimality system exactly on the support found by
/// coordinate descent. Keeps the candidate only if it keeps the sign
/// pattern and improves the optimality residual.
inline Vector lasso_polish(const Matrix& D, const Vector& c, double mu, const Vector& z) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    if (z[j] != 0.0) support.push_back(j);
  }
  if (support.empty()) return z;
  const auto k = static_cast<Eigen::Index>(support.size());
  Matrix DS(D.rows(), k);
  Vector signs(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    DS.col(i) = D.col(support[i]);
    signs[i] = z[support[i]] > 0.0 ? 1.0 : -1.0;
  }
  const auto zs = gauss_solve(DS.transpose() * DS, DS.transpose() * c - mu * signs);
  if (!zs) return z;
  Vector candidate = Vector::Zero(z.size());
  for (Eigen::Index i = 0; i < k; ++i) {
    if ((*zs)[i] * signs[i] <= 0.0) return z;
    candidate[support[i]] = (*zs)[i];
  }
  return lasso_kkt_violation(D, c, mu, candidate) <= lasso_kkt_violation(D, c, mu, z) ? candidate : z;
}

}  // namespace oracle

inline constexpr double kOracleTolerance = 1e-8;

/// Reference pair for LinearAffine A, B: (M_A + M_B) z = -(q_A + q_B),
/// w = M_B z + q_B.
inline PairPoint oracle_linear(const MonotoneOp& A, const MonotoneOp& B) {
  if (A.kind() != OpKind::linear_affine || B.kind() != OpKind::linear_affine) {
    throw Error("oracle_linear: both operators must be linear_affine");
  }
  const auto& la = A.as<LinearAffine>();
  const auto& lb = B.as<LinearAffine>();
  if (la.M.rows() != lb.M.rows()) throw DimensionError("oracle_linear: operator dimensions differ");
  auto z = oracle::gauss_solve(la.M + lb.M, -(la.q + lb.q));
  if (!z) throw OracleUnavailable("oracle_linear: M_A + M_B is singular");
  PairPoint p{*z, lb.M * *z + lb.q};
  const Vector a_residual = la.M * p.z + la.q + p.w;
  const double scale = 1.0 + p.z.norm() + p.w.norm();
  if (!(a_residual.norm() <= kOracleTolerance * scale) || !(se_residual(A, B, p) <= kOracleTolerance)) {
    throw OracleUnavailable("oracle_linear: reference pair failed certification");
  }
  return p;
}

namespace detail {

inline Vector gaussian_vector(std::mt19937_64& rng, Eigen::Index n, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

inline Vector uniform_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

/// S + K with S symmetric, spectrum in [1/conditioning, 1], and K skew.
inline Matrix monotone_matrix(std::mt19937_64& rng, Eigen::Index n, double conditioning, double skew_scale) {
  const Matrix Q = Eigen::HouseholderQR<Matrix>(gaussian_matrix(rng, n, n)).householderQ();
  Vector spectrum = uniform_vector(rng, n, 1.0 / conditioning, 1.0);
  spectrum[0] = 1.0 / conditioning;
  if (n > 1) spectrum[1] = 1.0;
  const Matrix S = Q * spectrum.asDiagonal() * Q.transpose();
  const Matrix G = gaussian_matrix(rng, n, n, skew_scale);
  const Matrix sym = 0.5 * (S + S.transpose());
  return sym + 0.5 * (G - G.transpose());
}

inline bool strictly_inside(const MonotoneOp& T, const Vector& z) {
  switch (T.kind()) {
    case OpKind::box: {
      const auto& b = T.as<NormalConeBox>();
      return ((z - b.lo).array() > 0.0).all() && ((b.hi - z).array() > 0.0).all();
    }
    case OpKind::ball: {
      const auto& b = T.as<NormalConeBall>();
      return (z - b.center).norm() < b.radius;
    }
    default: return false;
  }
}

}  // namespace detail

/// Instance with A(x) = M_A x + q_A and B(x) = M_B x + q_B.
inline ProblemInstance gen_linear(std::size_t dim, std::uint64_t seed, double conditioning = 1.0,
                                  double skew_scale = 0.5) {
  if (dim < 1) throw DimensionError("gen_linear: dim must be at least 1");
  if (!(conditioning >= 1.0)) throw Error("gen_linear: conditioning must be >= 1");
  std::mt19937_64 rng(seed);
  const auto n = static_cast<Eigen::Index>(dim);
  Matrix MA = detail::monotone_matrix(rng, n, conditioning, skew_scale);
  Vector qA = detail::gaussian_vector(rng, n);
  Matrix MB = detail::monotone_matrix(rng, n, conditioning, skew_scale);
  Vector qB = detail::gaussian_vector(rng, n);
  ProblemInstance inst{"linear",
                       MonotoneOp::linear_affine(std::move(MA), std::move(qA)),
                       MonotoneOp::linear_affine(std::move(MB), std::move(qB)),
                       dim,
                       seed,
                       std::nullopt,
                       std::nullopt};
  try {
    PairPoint p = oracle_linear(inst.A, inst.B);
    inst.oracle_solution = p.z;
    inst.oracle_se_point = std::move(p);
  } catch (const OracleUnavailable&) {
    // instance stays usable without a reference
  }
  return inst;
}

/// Feasibility instance A = N_C, B = N_D with a common interior point z*,
/// for which (z*, 0) lies in S_e(A, B).
inline ProblemInstance make_feasibility(MonotoneOp A, MonotoneOp B, Vector z_star, std::uint64_t seed = 0) {
  if (!detail::strictly_inside(A, z_star) || !detail::strictly_inside(B, z_star)) {
    throw Error("make_feasibility: reference point is not interior to both sets");
  }
  const auto dim = static_cast<std::size_t>(z_star.size());
  PairPoint p{z_star, Vector::Zero(z_star.size())};
  return {"feasibility", std::move(A), std::move(B), dim, seed, std::move(z_star), std::move(p)};
}

enum class FeasibilityShape { boxes, box_ball };

inline ProblemInstance gen_feasibility(std::size_t dim, std::uint64_t seed,
                                       FeasibilityShape shape = FeasibilityShape::boxes) {
  if (dim < 1) throw DimensionError("gen_feasibility: dim must be at least 1");
  std::mt19937_64 rng(seed);
  const auto n = static_cast<Eigen::Index>(dim);
  const Vector z_star = detail::uniform_vector(rng, n, -2.0, 2.0);
  auto random_box = [&] {
    Vector lo = z_star - detail::uniform_vector(rng, n, 0.2, 1.5);
    Vector hi = z_star + detail::uniform_vector(rng, n, 0.2, 1.5);
    return MonotoneOp::box(std::move(lo), std::move(hi));
  };
  MonotoneOp A = random_box();
  if (shape == FeasibilityShape::boxes) {
    MonotoneOp B = random_box();
    return make_feasibility(std::move(A), std::move(B), z_star, seed);
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double radius = 0.5 + 1.5 * u(rng);
  Vector direction = detail::gaussian_vector(rng, n);
  direction /= std::max(direction.norm(), 1e-12);
  Vector center = z_star + (0.8 * radius * u(rng)) * direction;
  return make_feasibility(std::move(A), MonotoneOp::ball(std::move(center), radius), z_star, seed);
}

/// Lasso instance A = d(mu ||.||_1), B(x) = D^T (D x - c), with the
/// coordinate-descent reference attached.
inline ProblemInstance lasso_instance(const Matrix& D, const Vector& c, double mu, std::uint64_t seed = 0) {
  if (D.rows() < 1 || D.cols() < 1) throw DimensionError("lasso: D must be nonempty");
  if (c.size() != D.rows()) throw DimensionError("lasso: c does not match D");
  if (!(mu > 0.0)) throw Error("lasso: mu must be positive");
  const auto dim = static_cast<std::size_t>(D.cols());
  ProblemInstance inst{"lasso",
                       MonotoneOp::l1(mu),
                       MonotoneOp::linear_affine(D.transpose() * D, -(D.transpose() * c)),
                       dim,
                       seed,
                       std::nullopt,
                       std::nullopt};
  try {
    Vector z = oracle::lasso_coordinate_descent(D, c, mu);
    z = oracle::lasso_polish(D, c, mu, z);
    PairPoint p{z, D.transpose() * (D * z - c)};
    if (se_residual(inst.A, inst.B, p) <= kOracleTolerance) {
      inst.oracle_solution = z;
      inst.oracle_se_point = std::move(p);
    }
  } catch (const OracleUnavailable&) {
  }
  return inst;
}

inline ProblemInstance gen_lasso(std::size_t rows, std::size_t cols, std::uint64_t seed, double mu) {
  if (rows < 1 || cols < 1) throw DimensionError("gen_lasso: rows and cols must be at least 1");
  std::mt19937_64 rng(seed);
  const Matrix D = detail::gaussian_matrix(rng, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols),
                                           1.0 / std::sqrt(static_cast<double>(rows)));
  const Vector c = detail::gaussian_vector(rng, static_cast<Eigen::Index>(rows));
  return lasso_instance(D, c, mu, seed);
}

}  // namespace drsplit
