#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include "sgpc/kernel.hpp"
#include "sgpc/rng.hpp"

using namespace sgpc;

namespace {

Matrix random_inputs(int n, int d, Rng& rng) {
  Matrix X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = 2.0 * standard_normal(rng);
  return X;
}

}  // namespace

TEST_CASE("kernel_eval anchors") {
  HyperParams hp;  // v0 = 1, sigma2 = 1
  Vector a(2), b(2);
  a << 0.0, 0.0;
  b << 1.0, 1.0;
  // exp(-0.5 * 2 / 1) = exp(-1)
  CHECK_THAT(kernel_eval(a, b, hp),
             Catch::Matchers::WithinRel(0.36787944117144232160, 1e-15));
  CHECK(kernel_eval(a, a, hp) == hp.v0);

  HyperParams hp2{4.0, 2.0, 0.0};
  CHECK_THAT(kernel_eval(a, b, hp2),
             Catch::Matchers::WithinRel(4.0 * std::exp(-0.5), 1e-15));
}

TEST_CASE("kernel_eval rejects mismatched dimensions and bad hyperparameters") {
  Vector a(2), b(3);
  a.setZero();
  b.setZero();
  CHECK_THROWS_AS(kernel_eval(a, b, HyperParams{}), std::invalid_argument);
  CHECK_THROWS_AS((HyperParams{0.0, 1.0, 0.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((HyperParams{1.0, -1.0, 0.0}).validate(), std::invalid_argument);
  HyperParams nanb{1.0, 1.0, std::nan("")};
  CHECK_THROWS_AS(nanb.validate(), std::invalid_argument);
}

TEST_CASE("kernel value decays monotonically with distance") {
  HyperParams hp{2.5, 0.7, 0.0};
  Vector origin = Vector::Zero(3);
  double prev = hp.v0 + 1.0;
  for (double r = 0.0; r < 5.0; r += 0.25) {
    Vector x = Vector::Zero(3);
    x[0] = r;
    double k = kernel_eval(origin, x, hp);
    CHECK(k <= prev);
    CHECK(k > 0.0);
    CHECK(k <= hp.v0);
    prev = k;
  }
}

TEST_CASE("kernel_matrix is symmetric positive semidefinite") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    HyperParams hp{0.5 + 2.0 * uniform01(rng), 0.2 + 3.0 * uniform01(rng), 0.0};
    Matrix X = random_inputs(30, 3, rng);
    Matrix K = kernel_matrix(X, hp);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(K);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * hp.v0);
    for (int i = 0; i < K.rows(); ++i)
      CHECK_THAT(K(i, i), Catch::Matchers::WithinRel(hp.v0, 1e-14));
  }
}

TEST_CASE("kernel_column and kernel_cross agree with kernel_matrix") {
  Rng rng(11);
  HyperParams hp{1.3, 1.9, 0.0};
  Matrix X = random_inputs(12, 2, rng);
  Matrix K = kernel_matrix(X, hp);
  for (int j : {0, 5, 11}) {
    Vector col = kernel_column(X, j, hp);
    CHECK((col - K.col(j)).cwiseAbs().maxCoeff() <= 1e-14);
    Vector cross = kernel_cross(X, X.row(j).transpose(), hp);
    CHECK((cross - K.col(j)).cwiseAbs().maxCoeff() <= 1e-14);
  }
  CHECK_THROWS_AS(kernel_column(X, 12, hp), std::out_of_range);
  CHECK_THROWS_AS(kernel_column(X, -1, hp), std::out_of_range);

  Vector diag = kernel_diag(X, hp);
  CHECK(diag.size() == X.rows());
  CHECK(diag.minCoeff() == hp.v0);
  CHECK(diag.maxCoeff() == hp.v0);
}
