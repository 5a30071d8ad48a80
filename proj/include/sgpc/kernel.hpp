#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace sgpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Hyperparameters of the squared-exponential covariance and the probit
/// likelihood. v0 and sigma2 must stay positive; optimization works on their
/// logarithms so the constraint never binds. The probit slope is fixed at 1.
struct HyperParams {
  double v0 = 1.0;      // signal variance
  double sigma2 = 1.0;  // squared kernel width
  double b = 0.0;       // bias

  static constexpr double lambda = 1.0;

  void validate() const {
    if (!(v0 > 0.0) || !(sigma2 > 0.0) || !std::isfinite(b)) {
      throw std::invalid_argument("HyperParams: v0 and sigma2 must be positive, b finite");
    }
  }
};

/// k(xi, xj) = v0 * exp(-|xi - xj|^2 / (2 sigma2)).
inline double kernel_eval(const Eigen::Ref<const Vector>& xi,
                          const Eigen::Ref<const Vector>& xj, const HyperParams& hp) {
  if (xi.size() != xj.size() || xi.size() < 1) {
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  }
  return hp.v0 * std::exp(-0.5 * (xi - xj).squaredNorm() / hp.sigma2);
}

/// Column j of the kernel matrix over the rows of X, built on demand so that
/// training never stores more than O(n * d_max) kernel values.
inline Vector kernel_column(const Matrix& X, Eigen::Index j, const HyperParams& hp) {
  if (j < 0 || j >= X.rows()) throw std::out_of_range("kernel_column: index out of range");
  Vector sq = (X.rowwise() - X.row(j)).rowwise().squaredNorm();
  // std::exp, not Eigen's vectorized exp: the latter clamps large negative
  // arguments near -709 instead of underflowing, and every kernel path must
  // agree bit-for-bit with kernel_eval.
  return hp.v0 * (-0.5 / hp.sigma2 * sq.array())
                     .unaryExpr([](double t) { return std::exp(t); });
}

/// diag(K); constant v0 for the squared exponential.
inline Vector kernel_diag(const Matrix& X, const HyperParams& hp) {
  return Vector::Constant(X.rows(), hp.v0);
}

/// k(X_rows, x) against an external input; used by prediction.
inline Vector kernel_cross(const Matrix& X, const Eigen::Ref<const Vector>& x,
                           const HyperParams& hp) {
  if (x.size() != X.cols()) throw std::invalid_argument("kernel_cross: dimension mismatch");
  Vector sq = (X.rowwise() - x.transpose()).rowwise().squaredNorm();
  // Same std::exp routing as kernel_column; see the note there.
  return hp.v0 * (-0.5 / hp.sigma2 * sq.array())
                     .unaryExpr([](double t) { return std::exp(t); });
}

/// Dense n x n kernel matrix. O(n^2) storage; reserved for the test oracles
/// and small active-set blocks, never the training loop.
inline Matrix kernel_matrix(const Matrix& X, const HyperParams& hp) {
  const Eigen::Index n = X.rows();
  Matrix K(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    K.col(j) = kernel_column(X, j, hp);
  }
  // symmetrize away rounding asymmetry from the column-wise build
  K = 0.5 * (K + K.transpose()).eval();
  return K;
}

}  // namespace sgpc
