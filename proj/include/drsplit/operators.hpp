#pragma once

// Maximal monotone operators known through their resolvents
//
//   J_{lambda T} = (I + lambda T)^{-1},   x + lambda y = z,  y in T(x).
//
// Every variant has a closed-form (or direct-factorization) resolvent, so
// multivalued operators such as normal cones and the l1 subdifferential are
// usable even though they cannot be point-evaluated.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "drsplit/errors.hpp"
#include "drsplit/space.hpp"

namespace drsplit {

class MonotoneOp;

namespace detail {

/// Factorizations of (I + lambda M), keyed by lambda. Entries are published
/// under the mutex and never mutated afterwards.
struct LinearFactorCache {
  static constexpr std::size_t kMaxEntries = 16;

  std::mutex mutex;
  std::map<double, std::shared_ptr<const Eigen::PartialPivLU<Matrix>>> entries;
};

}  // namespace detail

/// T(x) = M x + q with M + M^T positive semidefinite.
struct LinearAffine {
  Matrix M;
  Vector q;
  std::shared_ptr<detail::LinearFactorCache> cache;
};

/// T = d(mu ||.||_1).
struct SubdiffL1 {
  double mu;
};

/// T = N_[lo, hi]; bounds may be infinite.
struct NormalConeBox {
  Vector lo;
  Vector hi;
};

/// T = N_{B(center, radius)}.
struct NormalConeBall {
  Vector center;
  double radius;
};

/// T == {0}.
struct Zero {
  std::size_t dim;
};

/// (s T)(x) = { s y : y in T(x) }.
struct Scaled {
  std::shared_ptr<const MonotoneOp> inner;
  double lambda;
};

enum class OpKind { linear_affine, l1, box, ball, zero, scaled };

inline const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::linear_affine: return "linear_affine";
    case OpKind::l1: return "l1";
    case OpKind::box: return "box";
    case OpKind::ball: return "ball";
    case OpKind::zero: return "zero";
    case OpKind::scaled: return "scaled";
  }
  return "unknown";
}

/// Immutable value type. Copies share the (idempotent) factorization cache.
class MonotoneOp {
public:
  using Variant = std::variant<LinearAffine, SubdiffL1, NormalConeBox, NormalConeBall, Zero, Scaled>;

  /// Rejects M unless the smallest eigenvalue of M + M^T is at least
  /// -psd_tol * ||M||_F.
  static MonotoneOp linear_affine(Matrix M, Vector q, double psd_tol = 1e-10) {
    if (M.rows() != M.cols()) throw DimensionError("linear_affine: M must be square");
    if (M.rows() < 1) throw DimensionError("linear_affine: dimension must be at least 1");
    if (q.size() != M.rows()) throw DimensionError("linear_affine: q does not match M");
    if (!M.allFinite()) throw NonFiniteError("linear_affine: M has a non-finite entry");
    require_finite(q, "linear_affine: q");
    const Matrix sym = M + M.transpose();
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (min_eig < -psd_tol * M.norm()) {
      throw MonotonicityError("linear_affine: M + M^T has eigenvalue " + std::to_string(min_eig) +
                              "; operator is not monotone");
    }
    return MonotoneOp(LinearAffine{std::move(M), std::move(q), std::make_shared<detail::LinearFactorCache>()});
  }

  static MonotoneOp l1(double mu) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw Error("l1: mu must be positive and finite");
    return MonotoneOp(SubdiffL1{mu});
  }

  static MonotoneOp box(Vector lo, Vector hi) {
    require_same_dim(lo, hi, "box");
    if (lo.size() < 1) throw DimensionError("box: dimension must be at least 1");
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      if (std::isnan(lo[i]) || std::isnan(hi[i])) throw NonFiniteError("box: NaN bound");
      if (lo[i] == std::numeric_limits<double>::infinity() || hi[i] == -std::numeric_limits<double>::infinity()) {
        throw Error("box: empty box (lo = +inf or hi = -inf) at coordinate " + std::to_string(i));
      }
      if (lo[i] > hi[i]) throw Error("box: lo > hi at coordinate " + std::to_string(i));
    }
    return MonotoneOp(NormalConeBox{std::move(lo), std::move(hi)});
  }

  static MonotoneOp ball(Vector center, double radius) {
    if (center.size() < 1) throw DimensionError("ball: dimension must be at least 1");
    require_finite(center, "ball: center");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw Error("ball: radius must be positive and finite");
    return MonotoneOp(NormalConeBall{std::move(center), radius});
  }

  static MonotoneOp zero(std::size_t dim) {
    if (dim < 1) throw DimensionError("zero: dimension must be at least 1");
    return MonotoneOp(Zero{dim});
  }

  static MonotoneOp scaled(MonotoneOp inner, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error("scaled: lambda must be positive and finite");
    return MonotoneOp(Scaled{std::make_shared<const MonotoneOp>(std::move(inner)), lambda});
  }

  OpKind kind() const noexcept { return static_cast<OpKind>(value_.index()); }
  const Variant& variant() const noexcept { return value_; }

  template <class T>
  const T& as() const {
    return std::get<T>(value_);
  }

  /// Dimension of the operator, or nullopt when it acts on any R^n (l1).
  std::optional<std::size_t> dim() const {
    return std::visit(
        [](const auto& op) -> std::optional<std::size_t> {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, LinearAffine>) return static_cast<std::size_t>(op.M.rows());
          else if constexpr (std::is_same_v<T, SubdiffL1>) return std::nullopt;
          else if constexpr (std::is_same_v<T, NormalConeBox>) return static_cast<std::size_t>(op.lo.size());
          else if constexpr (std::is_same_v<T, NormalConeBall>) return static_cast<std::size_t>(op.center.size());
          else if constexpr (std::is_same_v<T, Zero>) return op.dim;
          else return op.inner->dim();
        },
        value_);
  }

  bool single_valued() const {
    switch (kind()) {
      case OpKind::linear_affine:
      case OpKind::zero: return true;
      case OpKind::scaled: return as<Scaled>().inner->single_valued();
      default: return false;
    }
  }

private:
  explicit MonotoneOp(Variant v) : value_(std::move(v)) {}

  Variant value_;
};

inline void require_compatible(const MonotoneOp& T, const Vector& z, const char* what) {
  if (const auto d = T.dim(); d && static_cast<std::size_t>(z.size()) != *d) {
    throw DimensionError(std::string(what) + ": operator has dimension " + std::to_string(*d) +
                         ", vector has " + std::to_string(z.size()));
  }
}

/// The unique (x, y) with x + lambda y = z and y in T(x).
struct ResolventResult {
  Vector x;
  Vector y;
};

namespace detail {

inline std::shared_ptr<const Eigen::PartialPivLU<Matrix>> factor(const LinearAffine& op, double lambda) {
  std::lock_guard<std::mutex> lock(op.cache->mutex);
  auto& entries = op.cache->entries;
  if (auto it = entries.find(lambda); it != entries.end()) return it->second;
  const Eigen::Index n = op.M.rows();
  auto lu = std::make_shared<const Eigen::PartialPivLU<Matrix>>(Matrix::Identity(n, n) + lambda * op.M);
  if (!(lu->rcond() > std::numeric_limits<double>::epsilon())) {
    throw MonotonicityError("linear_affine: I + lambda M is singular; operator is not monotone");
  }
  if (entries.size() >= LinearFactorCache::kMaxEntries) entries.clear();
  entries.emplace(lambda, lu);
  return lu;
}

inline ResolventResult resolvent_impl(const MonotoneOp& T, double lambda, const Vector& z) {
  return std::visit(
      [&](const auto& op) -> ResolventResult {
        using Op = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<Op, LinearAffine>) {
          const auto lu = factor(op, lambda);
          Vector x = lu->solve(z - lambda * op.q);
          Vector y = op.M * x + op.q;
          return {std::move(x), std::move(y)};
        } else if constexpr (std::is_same_v<Op, SubdiffL1>) {
          const double threshold = lambda * op.mu;
          Vector x(z.size());
          Vector y(z.size());
          for (Eigen::Index i = 0; i < z.size(); ++i) {
            if (z[i] > threshold) {
              x[i] = z[i] - threshold;
              y[i] = op.mu;
            } else if (z[i] < -threshold) {
              x[i] = z[i] + threshold;
              y[i] = -op.mu;
            } else {
              x[i] = 0.0;
              y[i] = z[i] / lambda;
            }
          }
          return {std::move(x), std::move(y)};
        } else if constexpr (std::is_same_v<Op, NormalConeBox>) {
          Vector x = z.cwiseMax(op.lo).cwiseMin(op.hi);
          Vector y = (z - x) / lambda;
          return {std::move(x), std::move(y)};
        } else if constexpr (std::is_same_v<Op, NormalConeBall>) {
          const Vector offset = z - op.center;
          const double dist = offset.norm();
          Vector x = dist <= op.radius ? z : Vector(op.center + (op.radius / dist) * offset);
          Vector y = (z - x) / lambda;
          return {std::move(x), std::move(y)};
        } else if constexpr (std::is_same_v<Op, Zero>) {
          return {z, Vector::Zero(z.size())};
        } else {
          ResolventResult r = resolvent_impl(*op.inner, lambda * op.lambda, z);
          r.y *= op.lambda;
          return r;
        }
      },
      T.variant());
}

}  // namespace detail

inline ResolventResult resolvent(const MonotoneOp& T, double lambda, const Vector& z) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error("resolvent: lambda must be positive and finite");
  require_finite(z, "resolvent input");
  require_compatible(T, z, "resolvent");
  if (z.size() < 1) throw DimensionError("resolvent: empty vector");
  ResolventResult r = detail::resolvent_impl(T, lambda, z);
  if (!r.x.allFinite() || !r.y.allFinite()) throw NonFiniteError("resolvent: non-finite output");
  return r;
}

/// Point evaluation, defined only for single-valued variants.
/// s*T as a concrete operator of the same family where one exists. Normal
/// cones and the zero map are invariant under positive scaling.
inline MonotoneOp rescaled(const MonotoneOp& T, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw Error("rescaled: factor must be positive and finite");
  switch (T.kind()) {
    case OpKind::linear_affine: {
      const auto& op = T.as<LinearAffine>();
      return MonotoneOp::linear_affine(s * op.M, s * op.q);
    }
    case OpKind::l1: return MonotoneOp::l1(s * T.as<SubdiffL1>().mu);
    case OpKind::box:
    case OpKind::ball:
    case OpKind::zero: return T;
    case OpKind::scaled: {
      const auto& op = T.as<Scaled>();
      return rescaled(*op.inner, s * op.lambda);
    }
  }
  throw Error("rescaled: unknown operator kind");
}

inline Vector op_value(const MonotoneOp& T, const Vector& x) {
  require_finite(x, "op_value input");
  require_compatible(T, x, "op_value");
  switch (T.kind()) {
    case OpKind::linear_affine: {
      const auto& op = T.as<LinearAffine>();
      return op.M * x + op.q;
    }
    case OpKind::zero: return Vector::Zero(x.size());
    case OpKind::scaled: {
      const auto& op = T.as<Scaled>();
      return op.lambda * op_value(*op.inner, x);
    }
    default:
      throw NotSingleValuedError(std::string("op_value: operator '") + to_string(T.kind()) +
                                 "' is not single-valued");
  }
}

/// Checks y in T(x) using the exact characterization of each variant.
inline bool in_graph(const MonotoneOp& T, const Vector& x, const Vector& y, double tol = 1e-10) {
  require_same_dim(x, y, "in_graph");
  require_compatible(T, x, "in_graph");
  return std::visit(
      [&](const auto& op) -> bool {
        using Op = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<Op, LinearAffine>) {
          return (y - (op.M * x + op.q)).norm() <= tol * (1.0 + y.norm());
        } else if constexpr (std::is_same_v<Op, SubdiffL1>) {
          const double slack = tol * (1.0 + op.mu);
          for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x[i] == 0.0) {
              if (std::abs(y[i]) > op.mu + slack) return false;
            } else if (std::abs(y[i] - std::copysign(op.mu, x[i])) > slack) {
              return false;
            }
          }
          return true;
        } else if constexpr (std::is_same_v<Op, NormalConeBox>) {
          for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double scale = 1.0 + std::abs(x[i]);
            const bool at_lo = std::isfinite(op.lo[i]) && std::abs(x[i] - op.lo[i]) <= tol * scale;
            const bool at_hi = std::isfinite(op.hi[i]) && std::abs(x[i] - op.hi[i]) <= tol * scale;
            if (x[i] < op.lo[i] - tol * scale || x[i] > op.hi[i] + tol * scale) return false;
            const double ytol = tol * (1.0 + std::abs(y[i]));
            if (at_lo && at_hi) continue;
            if (at_lo && y[i] <= ytol) continue;
            if (at_hi && y[i] >= -ytol) continue;
            if (std::abs(y[i]) <= ytol) continue;
            return false;
          }
          return true;
        } else if constexpr (std::is_same_v<Op, NormalConeBall>) {
          const Vector offset = x - op.center;
          const double dist = offset.norm();
          const double scale = 1.0 + op.radius;
          if (dist > op.radius + tol * scale) return false;
          if (y.norm() <= tol * (1.0 + y.norm())) return true;
          if (dist < op.radius - tol * scale) return false;
          // y must be a nonnegative multiple of x - center
          return offset.dot(y) >= 0.0 &&
                 (y - (offset.dot(y) / offset.squaredNorm()) * offset).norm() <= tol * (1.0 + y.norm());
        } else if constexpr (std::is_same_v<Op, Zero>) {
          return y.norm() <= tol;
        } else {
          return in_graph(*op.inner, x, y / op.lambda, tol);
        }
      },
      T.variant());
}

/// ||J_B(z + w) - z|| + ||J_A(z - w) - z||: zero iff w in B(z) and -w in A(z).
inline double se_residual(const MonotoneOp& A, const MonotoneOp& B, const PairPoint& p) {
  require_valid(p, "se_residual");
  const ResolventResult rb = resolvent(B, 1.0, p.z + p.w);
  const ResolventResult ra = resolvent(A, 1.0, p.z - p.w);
  return (rb.x - p.z).norm() + (ra.x - p.z).norm();
}

struct MonotonicityViolation {
  std::size_t trial;
  Vector z;
  Vector z_prime;
  double inner_product;     // <x - x', y - y'>
  double expansion_ratio;   // ||x - x'|| / ||z - z'||
};

struct ProbeResult {
  bool passed = true;
  std::size_t trials_run = 0;
  std::optional<MonotonicityViolation> violation;
};

/// Random check of monotonicity and resolvent nonexpansiveness. Operators
/// without an intrinsic dimension (l1) are probed in R^fallback_dim.
inline ProbeResult monotonicity_probe(const MonotoneOp& T, std::size_t trials, std::uint64_t seed,
                                      std::size_t fallback_dim = 4) {
  if (trials < 1) throw Error("monotonicity_probe: trials must be at least 1");
  const auto n = static_cast<Eigen::Index>(T.dim().value_or(fallback_dim));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scales[] = {0.1, 1.0, 10.0};
  auto draw = [&](double scale) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * gauss(rng);
    return v;
  };

  ProbeResult result;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const double scale = scales[trial % 3];
    const Vector z = draw(scale);
    const Vector z_prime = trial % 2 == 0 ? draw(scale) : Vector(z + draw(0.01 * scale));
    const ResolventResult r = resolvent(T, 1.0, z);
    const ResolventResult r_prime = resolvent(T, 1.0, z_prime);
    const Vector dx = r.x - r_prime.x;
    const Vector dy = r.y - r_prime.y;
    const double ip = dx.dot(dy);
    const double dz = (z - z_prime).norm();
    const double ratio = dz > 0.0 ? dx.norm() / dz : 0.0;
    ++result.trials_run;
    if (ip < -1e-10 * (1.0 + dx.norm() * dy.norm()) || dx.norm() > dz * (1.0 + 1e-10)) {
      result.passed = false;
      result.violation = MonotonicityViolation{trial, z, z_prime, ip, ratio};
      return result;
    }
  }
  return result;
}

}  // namespace drsplit
