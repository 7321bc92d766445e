#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "flex/gram.hpp"
#include "flex/rng.hpp"

using flex::GramState;
using flex::MatrixXd;
using flex::VectorXd;

namespace {

double dense_logdet(const MatrixXd& m) {
  return Eigen::LDLT<MatrixXd>(m).vectorD().array().log().sum();
}

VectorXd random_vector(flex::Rng& rng, int n, double scale) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

}  // namespace

TEST_CASE("init produces the regularized identity") {
  GramState g2(2, 1.0);
  CHECK(g2.matrix().isApprox(MatrixXd::Identity(2, 2)));
  CHECK(g2.logdet() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g2.count() == 0);

  GramState g3(3, 0.1);
  CHECK(g3.logdet() == doctest::Approx(3.0 * std::log(0.1)).epsilon(1e-12));

  GramState g1(1, 2.0);
  CHECK(g1.inverse()(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("init rejects bad arguments") {
  CHECK_THROWS_AS(GramState(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(GramState(-1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(GramState(2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(GramState(2, -0.5), std::invalid_argument);
}

TEST_CASE("rank-one update matches the determinant lemma by hand") {
  GramState g(2, 1.0);
  g.rank_one_update(Eigen::Vector2d(1.0, 1.0));
  MatrixXd expected(2, 2);
  expected << 2.0, 1.0, 1.0, 2.0;
  CHECK(g.matrix().isApprox(expected, 1e-14));
  CHECK(g.logdet() == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  MatrixXd expected_inv(2, 2);
  expected_inv << 2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0;
  CHECK(g.inverse().isApprox(expected_inv, 1e-10));
  CHECK(g.count() == 1);
}

TEST_CASE("zero vector leaves the matrix untouched") {
  GramState g(3, 1.0);
  g.rank_one_update(VectorXd::Zero(3));
  CHECK(g.matrix().isApprox(MatrixXd::Identity(3, 3)));
  CHECK(g.logdet() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("rank-one update rejects non-finite input") {
  GramState g(2, 1.0);
  VectorXd bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(g.rank_one_update(bad), std::invalid_argument);
}

TEST_CASE("incremental inverse tracks a dense inverse over 200 updates") {
  const int n = 5;
  GramState g(n, 1e-3);
  MatrixXd dense = 1e-3 * MatrixXd::Identity(n, n);
  flex::Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    const VectorXd v = random_vector(rng, n, 2.0);
    g.rank_one_update(v);
    dense += v * v.transpose();
  }
  const MatrixXd direct = dense.inverse();
  CHECK((g.inverse() - direct).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(g.logdet() == doctest::Approx(dense_logdet(dense)).epsilon(1e-8));
  CHECK(g.identity_residual() < 1e-6);
}

TEST_CASE("block update equals the dense sum and row-wise updates") {
  flex::Rng rng(7);

  SUBCASE("identity rows double the matrix") {
    GramState g(2, 1.0);
    g.block_update(MatrixXd::Identity(2, 2));
    CHECK(g.matrix().isApprox(2.0 * MatrixXd::Identity(2, 2), 1e-14));
    CHECK(g.logdet() == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  }

  SUBCASE("single nonzero row is a rank-one update") {
    GramState a(3, 0.5), b(3, 0.5);
    MatrixXd rows = MatrixXd::Zero(2, 3);
    rows.row(1) << 1.0, -2.0, 0.5;
    a.block_update(rows);
    b.rank_one_update(VectorXd::Zero(3));
    b.rank_one_update(Eigen::Vector3d(1.0, -2.0, 0.5));
    CHECK(a.matrix().isApprox(b.matrix(), 1e-14));
    CHECK(a.logdet() == doctest::Approx(b.logdet()).epsilon(1e-12));
  }

  SUBCASE("random block matches M + V^T V") {
    GramState g(4, 1.0);
    // start from a random PD matrix by absorbing a few rows first
    for (int i = 0; i < 6; ++i) g.rank_one_update(random_vector(rng, 4, 1.0));
    const MatrixXd before = g.matrix();
    MatrixXd block(3, 4);
    for (int r = 0; r < 3; ++r) {
      block.row(r) = random_vector(rng, 4, 1.0).transpose();
    }
    g.block_update(block);
    const MatrixXd expected = before + block.transpose() * block;
    CHECK((g.matrix() - expected).cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("dimension mismatch throws") {
    GramState g(3, 1.0);
    CHECK_THROWS_AS(g.block_update(MatrixXd::Zero(2, 4)),
                    std::invalid_argument);
  }
}

TEST_CASE("info gain examples") {
  GramState g(3, 1.0);
  CHECK(g.info_gain(Eigen::Vector3d(1, 0, 0)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.info_gain(Eigen::Vector3d::Zero()) ==
        doctest::Approx(0.0).epsilon(1e-12));

  GramState g2(2, 1.0);
  g2.rank_one_update(Eigen::Vector2d(1.0, 1.0));  // M = [[2,1],[1,2]]
  // direct dense evaluation: ln 3 + v^T M^{-1} v with v = e1
  const double expected = std::log(3.0) + 2.0 / 3.0;
  CHECK(g2.info_gain(Eigen::Vector2d(1.0, 0.0)) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("exact gain obeys the determinant lemma against a dense logdet") {
  flex::Rng rng(3);
  GramState g(4, 1e-2);
  for (int i = 0; i < 50; ++i) {
    const VectorXd v = random_vector(rng, 4, 3.0);
    const double predicted = g.exact_gain(v);
    MatrixXd updated = g.matrix() + v * v.transpose();
    CHECK(predicted == doctest::Approx(dense_logdet(updated)).epsilon(1e-8));
    g.rank_one_update(v);
    CHECK(g.logdet() == doctest::Approx(predicted).epsilon(1e-8));
  }
}

TEST_CASE("candidate ordering is scale invariant and lemma consistent") {
  flex::Rng rng(11);
  const int n = 4;
  for (int trial = 0; trial < 100; ++trial) {
    GramState g(n, 1e-3);
    const int warm = 3 + static_cast<int>(rng.next_u64() % 20);
    for (int i = 0; i < warm; ++i) g.rank_one_update(random_vector(rng, n, 1.5));

    const double c = 0.1 + 10.0 * rng.uniform();
    MatrixXd scaled_m = c * g.matrix();
    const MatrixXd scaled_inv = scaled_m.inverse();

    int best_plain = -1, best_scaled = -1, best_exact = -1;
    double top_plain = -1e300, top_scaled = -1e300, top_exact = -1e300;
    for (int j = 0; j < 8; ++j) {
      const VectorXd v = random_vector(rng, n, 2.0);
      const double plain = g.quad_form(v);
      const double scaled = v.dot(scaled_inv * v);
      const double exact = g.exact_gain(v);
      if (plain > top_plain) { top_plain = plain; best_plain = j; }
      if (scaled > top_scaled) { top_scaled = scaled; best_scaled = j; }
      if (exact > top_exact) { top_exact = exact; best_exact = j; }
    }
    CHECK(best_plain == best_scaled);
    CHECK(best_plain == best_exact);
  }
}

TEST_CASE("long update sequences stay within drift tolerance") {
  const int n = 6;
  GramState g(n, 1e-3);
  MatrixXd dense = 1e-3 * MatrixXd::Identity(n, n);
  flex::Rng rng(1234);
  for (int i = 0; i < 1000; ++i) {
    VectorXd v = random_vector(rng, n, 1.0);
    if (i % 37 == 0) v *= 100.0;  // bounded but large rows
    g.rank_one_update(v);
    dense += v * v.transpose();
  }
  const MatrixXd direct = dense.inverse();
  const double scale = direct.cwiseAbs().maxCoeff();
  CHECK((g.inverse() - direct).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, scale));
  CHECK(std::abs(g.logdet() - dense_logdet(dense)) < 1e-8);
  CHECK(g.identity_residual() < 1e-6);
}

TEST_CASE("dump writes full-precision rows") {
  GramState g(2, 0.5);
  std::ostringstream out;
  g.dump(out);
  std::istringstream in(out.str());
  double a = 0, b = 0;
  in >> a >> b;
  CHECK(a == 0.5);
  CHECK(b == 0.0);
}
