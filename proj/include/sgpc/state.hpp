#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "sgpc/kernel.hpp"

namespace sgpc {

/// Incremental posterior bookkeeping for a sparse GP classifier.
///
/// With basis set u, site precisions p and site means m, the posterior over
/// the n training latents is N(fhat, A) where
///
///   B = I + S K_uu S,   S = diag(sqrt(p)),
///   L = chol(B)  (lower),
///   M = L^{-1} S K_u:,
///   A = K - M^T M,
///   fhat = A Pi m.
///
/// Only diag(A), fhat, L and M are kept; each inclusion appends one row to L
/// and one row to M at O(n|u|) cost.  M is stored transposed (n x |u|) so a
/// new basis point appends a column, keeping the hot per-candidate products
/// column-contiguous.
struct SgpcState {
  int n = 0;
  HyperParams hp;

  std::vector<int> u;        // basis indices in inclusion order
  std::vector<char> in_u;    // membership flags, length n
  std::vector<double> site_m;
  std::vector<double> site_p;

  Vector diag_a;  // diag(A), length n
  Vector fhat;    // posterior mean at training inputs, length n

  // Leading size() rows/cols are valid; the rest is reserved capacity.
  Matrix chol;   // cap x cap, lower triangle of L in the leading block
  Matrix mt;     // n x cap, column j holds row j of M
  Matrix kcols;  // n x cap, column j holds K(:, u[j])

  int size() const { return static_cast<int>(u.size()); }

  auto chol_view() const { return chol.topLeftCorner(size(), size()); }
  auto mt_view() const { return mt.leftCols(size()); }
  auto kcols_view() const { return kcols.leftCols(size()); }

  /// Grows reserved capacity so one more basis point fits.
  void reserve_one() {
    int k = size();
    if (k < chol.rows()) return;
    int cap = chol.rows() == 0 ? 8 : static_cast<int>(chol.rows()) * 2;
    if (cap <= k) cap = k + 1;
    chol.conservativeResize(cap, cap);
    mt.conservativeResize(n, cap);
    kcols.conservativeResize(n, cap);
    chol.bottomRows(cap - k).setZero();
    chol.topRightCorner(k, cap - k).setZero();
    mt.rightCols(cap - k).setZero();
    kcols.rightCols(cap - k).setZero();
  }

  /// Appends the structural pieces of one inclusion: basis index, site
  /// parameters, the new Cholesky row [lvec^T, lscalar], the new M row mu
  /// and the cached kernel column.  Posterior updates to diag_a and fhat are
  /// the caller's job since they depend on quantities computed alongside.
  void append_basis(int j, double m, double p, const Vector& lvec,
                    double lscalar, const Vector& mu, const Vector& kcol) {
    reserve_one();
    int k = size();
    if (k > 0) chol.row(k).head(k) = lvec.transpose();
    chol(k, k) = lscalar;
    mt.col(k) = mu;
    kcols.col(k) = kcol;
    u.push_back(j);
    in_u[static_cast<std::size_t>(j)] = 1;
    site_m.push_back(m);
    site_p.push_back(p);
  }

  std::size_t approx_bytes() const {
    auto mat = [](const Matrix& a) {
      return static_cast<std::size_t>(a.size()) * sizeof(double);
    };
    return mat(chol) + mat(mt) + mat(kcols) +
           static_cast<std::size_t>(diag_a.size() + fhat.size()) *
               sizeof(double) +
           u.size() * (sizeof(int) + 2 * sizeof(double)) + in_u.size();
  }
};

/// Empty-basis state: A = K so diag(A) = v0, and fhat = 0.
inline SgpcState init_state(const Matrix& X, const HyperParams& hp) {
  hp.validate();
  if (X.rows() == 0) throw std::invalid_argument("init_state: empty inputs");
  SgpcState st;
  st.n = static_cast<int>(X.rows());
  st.hp = hp;
  st.in_u.assign(static_cast<std::size_t>(st.n), 0);
  st.diag_a = kernel_diag(X, hp);
  st.fhat = Vector::Zero(st.n);
  st.mt.resize(st.n, 0);
  st.kcols.resize(st.n, 0);
  st.chol.resize(0, 0);
  return st;
}

/// Dense reference for the same posterior, built by direct Woodbury algebra
/// over the full kernel matrix.  O(n^2) memory; test and diagnostic use only.
struct DenseOracle {
  Matrix a;     // n x n posterior covariance
  Vector fhat;  // length n
  Matrix chol;  // |u| x |u| lower factor of B
  Matrix m;     // |u| x n
};

inline DenseOracle dense_oracle(const Matrix& X, const HyperParams& hp,
                                const std::vector<int>& u,
                                const std::vector<double>& site_m,
                                const std::vector<double>& site_p) {
  if (site_m.size() != u.size() || site_p.size() != u.size())
    throw std::invalid_argument("dense_oracle: site parameter size mismatch");
  int n = static_cast<int>(X.rows());
  int k = static_cast<int>(u.size());
  Matrix K = kernel_matrix(X, hp);

  DenseOracle out;
  if (k == 0) {
    out.a = K;
    out.fhat = Vector::Zero(n);
    out.chol.resize(0, 0);
    out.m.resize(0, n);
    return out;
  }

  Matrix Ku(k, n);
  Vector s(k), pm(k);
  for (int i = 0; i < k; ++i) {
    Ku.row(i) = K.row(u[static_cast<std::size_t>(i)]);
    s[i] = std::sqrt(site_p[static_cast<std::size_t>(i)]);
    pm[i] = site_p[static_cast<std::size_t>(i)] *
            site_m[static_cast<std::size_t>(i)];
  }
  Matrix Kuu(k, k);
  for (int i = 0; i < k; ++i)
    Kuu.row(i) = Ku.col(u[static_cast<std::size_t>(i)]).transpose();

  Matrix B = Matrix::Identity(k, k) + s.asDiagonal() * Kuu * s.asDiagonal();
  Eigen::LLT<Matrix> llt(B);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("dense_oracle: site matrix not positive definite");
  out.chol = llt.matrixL();
  out.m = out.chol.triangularView<Eigen::Lower>().solve(s.asDiagonal() * Ku);
  out.a = K - out.m.transpose() * out.m;
  out.fhat = Vector::Zero(n);
  for (int i = 0; i < k; ++i)
    out.fhat += out.a.col(u[static_cast<std::size_t>(i)]) * pm[i];
  return out;
}

}  // namespace sgpc
