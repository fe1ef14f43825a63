#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "drsplit/errors.hpp"

namespace drsplit {

/// Element of the model space R^n.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Element (z, w) of the product space X x X.
struct PairPoint {
  Vector z;
  Vector w;
};

inline void require_finite(const Vector& u, const char* what = "vector") {
  if (!u.allFinite()) {
    throw NonFiniteError(std::string(what) + " has a non-finite coordinate");
  }
}

inline void require_same_dim(const Vector& u, const Vector& v, const char* what = "vectors") {
  if (u.size() != v.size()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(u.size()) +
                         " vs " + std::to_string(v.size()) + ")");
  }
}

inline void require_valid(const PairPoint& p, const char* what = "pair") {
  require_same_dim(p.z, p.w, what);
  require_finite(p.z, what);
  require_finite(p.w, what);
}

inline double inner(const Vector& u, const Vector& v) {
  require_same_dim(u, v, "inner");
  require_finite(u, "inner");
  require_finite(v, "inner");
  return u.dot(v);
}

inline double norm(const Vector& u) {
  require_finite(u, "norm");
  return u.norm();
}

inline double squared_norm(const Vector& u) {
  require_finite(u, "squared_norm");
  return u.squaredNorm();
}

inline double pair_inner(const PairPoint& p, const PairPoint& q) {
  require_valid(p, "pair_inner");
  require_valid(q, "pair_inner");
  require_same_dim(p.z, q.z, "pair_inner");
  return p.z.dot(q.z) + p.w.dot(q.w);
}

inline double pair_squared_norm(const PairPoint& p) {
  require_valid(p, "pair_norm");
  return p.z.squaredNorm() + p.w.squaredNorm();
}

inline double pair_norm(const PairPoint& p) { return std::sqrt(pair_squared_norm(p)); }

/// ||(z, w) - (z', w')|| in the product norm.
inline double pair_distance(const PairPoint& p, const PairPoint& q) {
  require_valid(p, "pair_distance");
  require_valid(q, "pair_distance");
  require_same_dim(p.z, q.z, "pair_distance");
  return std::sqrt((p.z - q.z).squaredNorm() + (p.w - q.w).squaredNorm());
}

}  // namespace drsplit
