#include <cmath>
#include <limits>
#include <random>
#include <thread>
#include <vector>

#include <catch_amalgamated.hpp>

#include "drsplit/operators.hpp"
#include "oracles.hpp"

using namespace drsplit;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Matrix mat1(double m) { return Matrix::Constant(1, 1, m); }

/// PSD-plus-skew matrix built without the library's generators.
Matrix random_monotone_matrix(std::mt19937_64& rng, Eigen::Index n) {
  Matrix G(n, n), K(n, n);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      G(i, j) = g(rng);
      K(i, j) = g(rng);
    }
  return G * G.transpose() / static_cast<double>(n) + (K - K.transpose());
}

std::vector<MonotoneOp> random_operators(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.1, 2.0);
  Vector lo = testing::random_vector(rng, n) - Vector::Constant(n, 1.0);
  Vector hi = lo + Vector::Constant(n, 2.0);
  lo[0] = -kInf;
  if (n > 1) hi[1] = kInf;
  std::vector<MonotoneOp> ops = {
      MonotoneOp::linear_affine(random_monotone_matrix(rng, n), testing::random_vector(rng, n)),
      MonotoneOp::l1(u(rng)),
      MonotoneOp::box(lo, hi),
      MonotoneOp::ball(testing::random_vector(rng, n), u(rng)),
      MonotoneOp::zero(static_cast<std::size_t>(n)),
  };
  const std::size_t base = ops.size();
  for (std::size_t i = 0; i < base; ++i) ops.push_back(MonotoneOp::scaled(ops[i], u(rng)));
  ops.push_back(MonotoneOp::scaled(MonotoneOp::scaled(ops[1], 0.5), 3.0));
  return ops;
}

}  // namespace

TEST_CASE("resolvent examples") {
  SECTION("zero operator is the identity") {
    const auto r = resolvent(MonotoneOp::zero(2), 1.0, vec({5, -2}));
    CHECK(r.x == vec({5, -2}));
    CHECK(r.y == vec({0, 0}));
  }
  SECTION("identity map: x + x = 3") {
    const auto r = resolvent(MonotoneOp::linear_affine(mat1(1.0), vec({0})), 1.0, vec({3}));
    CHECK_THAT(r.x[0], WithinAbs(1.5, 1e-15));
    CHECK_THAT(r.y[0], WithinAbs(1.5, 1e-15));
  }
  SECTION("nonnegative ray projects -2 to 0") {
    const auto r = resolvent(MonotoneOp::box(vec({0}), vec({kInf})), 1.0, vec({-2}));
    CHECK(r.x == vec({0}));
    CHECK(r.y == vec({-2}));
  }
  SECTION("soft threshold at 1") {
    const auto r = resolvent(MonotoneOp::l1(1.0), 1.0, vec({3, -0.5}));
    CHECK(r.x == vec({2, 0}));
    CHECK(r.y == vec({1, -0.5}));
    CHECK(in_graph(MonotoneOp::l1(1.0), r.x, r.y));
  }
}

TEST_CASE("soft-threshold agrees with direct minimization") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0), t(0.05, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double mu = t(rng), lambda = t(rng);
    const Vector z = vec({u(rng)});
    const auto r = resolvent(MonotoneOp::l1(mu), lambda, z);
    CHECK_THAT(r.x[0], WithinAbs(testing::brute_soft_threshold(z[0], lambda * mu), 1e-7));
  }
}

TEST_CASE("cone resolvents satisfy the projection variational inequality") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index n = 3;
  const Vector lo = vec({-1, 0, -kInf});
  const Vector hi = vec({1, 2, 0.5});
  const Vector center = vec({0.5, -0.5, 1});
  const double radius = 1.3;
  std::vector<Vector> box_samples, ball_samples;
  for (int k = 0; k < 400; ++k) {
    Vector c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = std::isfinite(lo[i]) ? lo[i] : hi[i] - 10.0;
      c[i] = a + (hi[i] - a) * u(rng);
    }
    box_samples.push_back(c);
    Vector d = testing::random_vector(rng, n);
    ball_samples.push_back(center + radius * std::cbrt(u(rng)) * d / d.norm());
  }
  // include the vertices/boundary points that extremize the inequality
  for (int mask = 0; mask < 4; ++mask) box_samples.push_back(vec({mask & 1 ? 1.0 : -1.0, mask & 2 ? 2.0 : 0.0, 0.5}));
  const auto box = MonotoneOp::box(lo, hi);
  const auto ball = MonotoneOp::ball(center, radius);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector z = testing::random_vector(rng, n, 3.0);
    const auto rb = resolvent(box, 0.7, z);
    CHECK(testing::projection_vi_violation(z, rb.x, box_samples) <= 1e-12);
    const auto rc = resolvent(ball, 0.7, z);
    CHECK((rc.x - center).norm() <= radius * (1 + 1e-12));
    CHECK(testing::projection_vi_violation(z, rc.x, ball_samples) <= 1e-12);
  }
}

TEST_CASE("resolvent identity and certificate membership for every variant") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lam(0.01, 20.0);
  for (int round = 0; round < 20; ++round) {
    const Eigen::Index n = 1 + round % 6;
    for (const auto& op : random_operators(rng, n)) {
      for (int trial = 0; trial < 10; ++trial) {
        const double lambda = lam(rng);
        const Vector z = testing::random_vector(rng, n, 3.0);
        const auto r = resolvent(op, lambda, z);
        INFO("kind " << to_string(op.kind()) << " lambda " << lambda);
        CHECK((r.x + lambda * r.y - z).norm() <= 1e-10 * (1.0 + z.norm()));
        CHECK(in_graph(op, r.x, r.y));
        // determinism
        const auto again = resolvent(op, lambda, z);
        CHECK(again.x == r.x);
        CHECK(again.y == r.y);
        // nonexpansiveness under perturbation
        const Vector delta = testing::random_vector(rng, n, 0.1);
        const auto moved = resolvent(op, lambda, Vector(z + delta));
        CHECK((moved.x - r.x).norm() <= delta.norm() * (1.0 + 1e-10));
      }
    }
  }
}

TEST_CASE("scaling coherence is exact") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 10; ++round) {
    const Eigen::Index n = 1 + round % 4;
    for (const auto& op : random_operators(rng, n)) {
      const double s = 0.3 + round;
      const double lambda = 0.7;
      const Vector z = testing::random_vector(rng, n, 2.0);
      const auto scaled = resolvent(MonotoneOp::scaled(op, s), lambda, z);
      const auto direct = resolvent(op, s * lambda, z);
      CHECK(scaled.x == direct.x);
    }
  }
}

TEST_CASE("explicit rescaling matches the scaled wrapper") {
  std::mt19937_64 rng(8);
  for (int round = 0; round < 20; ++round) {
    const Eigen::Index n = 1 + round % 5;
    for (const auto& op : random_operators(rng, n)) {
      const double s = 0.1 * (1 + round);
      const MonotoneOp concrete = rescaled(op, s);
      CHECK((concrete.kind() == op.kind() || op.kind() == OpKind::scaled));
      CHECK(concrete.kind() != OpKind::scaled);
      const Vector z = testing::random_vector(rng, n, 2.0);
      const auto a = resolvent(concrete, 1.3, z);
      const auto b = resolvent(MonotoneOp::scaled(op, s), 1.3, z);
      CHECK((a.x - b.x).norm() <= 1e-12 * (1 + z.norm()));
      CHECK((a.y - b.y).norm() <= 1e-12 * (1 + z.norm()));
    }
  }
  CHECK(rescaled(MonotoneOp::l1(0.5), 4.0).as<SubdiffL1>().mu == 2.0);
  CHECK_THROWS_AS(rescaled(MonotoneOp::zero(1), -1.0), Error);
}

TEST_CASE("op_value") {
  CHECK(op_value(MonotoneOp::linear_affine(mat1(2.0), vec({1})), vec({3})) == vec({7}));
  CHECK(op_value(MonotoneOp::zero(1), vec({9})) == vec({0}));
  CHECK(op_value(MonotoneOp::scaled(MonotoneOp::linear_affine(mat1(2.0), vec({1})), 2.0), vec({3})) == vec({14}));
  CHECK_THROWS_AS(op_value(MonotoneOp::l1(1.0), vec({0})), NotSingleValuedError);
  CHECK_THROWS_WITH(op_value(MonotoneOp::box(vec({0}), vec({1})), vec({0})), Catch::Matchers::ContainsSubstring("not single-valued"));
  CHECK_THROWS_AS(op_value(MonotoneOp::scaled(MonotoneOp::ball(vec({0}), 1.0), 2.0), vec({0})), NotSingleValuedError);
}

TEST_CASE("se_residual examples") {
  const auto A = MonotoneOp::linear_affine(mat1(1.0), vec({-2}));
  const auto B = MonotoneOp::linear_affine(mat1(1.0), vec({0}));
  CHECK_THAT(se_residual(A, B, {vec({1}), vec({1})}), WithinAbs(0.0, 1e-15));
  // J_A(0) solves 2x - 2 = 0 -> 1; J_B(0) = 0
  CHECK_THAT(se_residual(A, B, {vec({0}), vec({0})}), WithinAbs(1.0, 1e-15));
  for (double c : {-3.0, 0.0, 7.5}) {
    CHECK(se_residual(MonotoneOp::zero(1), MonotoneOp::zero(1), {vec({c}), vec({0})}) == 0.0);
  }
}

TEST_CASE("zero se_residual implies operator-level membership") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + trial % 5;
    const Matrix MA = random_monotone_matrix(rng, n) + Matrix::Identity(n, n);
    const Matrix MB = random_monotone_matrix(rng, n);
    const Vector qA = testing::random_vector(rng, n), qB = testing::random_vector(rng, n);
    const auto A = MonotoneOp::linear_affine(MA, qA);
    const auto B = MonotoneOp::linear_affine(MB, qB);
    const Vector z = (MA + MB).fullPivLu().solve(-(qA + qB));
    const Vector w = MB * z + qB;
    const PairPoint p{z, w};
    if (se_residual(A, B, p) <= 1e-9) {
      CHECK((op_value(B, z) - w).norm() <= 1e-8 * (1 + w.norm()));
      CHECK((op_value(A, z) + w).norm() <= 1e-8 * (1 + w.norm()));
    } else {
      FAIL("reference pair should have a small residual");
    }
  }
}

TEST_CASE("monotonicity probe") {
  CHECK(monotonicity_probe(MonotoneOp::zero(3), 100, 1).passed);
  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  CHECK(monotonicity_probe(MonotoneOp::linear_affine(rot, vec({0, 0})), 100, 2).passed);
  CHECK(monotonicity_probe(MonotoneOp::l1(0.5), 100, 3).passed);
  CHECK(monotonicity_probe(MonotoneOp::box(vec({0, -kInf}), vec({1, 2})), 100, 4).passed);
  CHECK(monotonicity_probe(MonotoneOp::ball(vec({1, 1, 1}), 0.5), 100, 5).passed);
  CHECK_THROWS_AS(monotonicity_probe(MonotoneOp::zero(1), 0, 0), Error);
}

TEST_CASE("construction-time validation") {
  CHECK_THROWS_AS(MonotoneOp::linear_affine(-Matrix::Identity(2, 2), vec({0, 0})), MonotonicityError);
  CHECK_THROWS_AS(MonotoneOp::linear_affine(Matrix::Identity(2, 3), vec({0, 0})), DimensionError);
  CHECK_THROWS_AS(MonotoneOp::linear_affine(Matrix::Identity(2, 2), vec({0})), DimensionError);
  CHECK_THROWS_AS(MonotoneOp::box(vec({1}), vec({0})), Error);
  CHECK_THROWS_AS(MonotoneOp::ball(vec({0}), 0.0), Error);
  CHECK_THROWS_AS(MonotoneOp::l1(-1.0), Error);
  CHECK_THROWS_AS(MonotoneOp::scaled(MonotoneOp::zero(1), 0.0), Error);
  // numerically semidefinite matrices are accepted
  Matrix nearly(2, 2);
  nearly << 1, 0, 0, -1e-14;
  CHECK_NOTHROW(MonotoneOp::linear_affine(nearly, vec({0, 0})));
}

TEST_CASE("resolvent input validation") {
  const auto op = MonotoneOp::zero(2);
  CHECK_THROWS_AS(resolvent(op, 1.0, vec({1})), DimensionError);
  CHECK_THROWS_AS(resolvent(op, 0.0, vec({1, 2})), Error);
  CHECK_THROWS_AS(resolvent(op, 1.0, vec({1, std::nan("")})), NonFiniteError);
}

TEST_CASE("factorization cache is consistent across threads") {
  std::mt19937_64 rng(99);
  const auto op = MonotoneOp::linear_affine(random_monotone_matrix(rng, 8), testing::random_vector(rng, 8));
  const Vector z = testing::random_vector(rng, 8);
  const Vector expected = resolvent(MonotoneOp::linear_affine(op.as<LinearAffine>().M, op.as<LinearAffine>().q), 0.5, z).x;
  std::vector<std::thread> threads;
  std::vector<Vector> results(8);
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] { results[t] = resolvent(op, 0.5, z).x; });
  }
  for (auto& th : threads) th.join();
  for (const auto& r : results) CHECK(r == expected);
}
