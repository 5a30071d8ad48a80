#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "sgpc/kernel.hpp"

namespace sgpc {

/// Everything needed to predict: the basis rows with their site parameters
/// and hyperparameters, plus the cached Cholesky factor of
/// B = I + S K_uu S and beta = L^{-1} S m_u.
struct SparseModel {
  std::vector<int> u;  // dataset row indices, inclusion order
  Matrix Xu;           // |u| x d basis inputs
  Vector m_u;
  Vector p_u;
  HyperParams hp;

  Matrix chol;  // |u| x |u| lower factor of B
  Vector beta;

  int basis_size() const { return static_cast<int>(u.size()); }
  int dim() const { return static_cast<int>(Xu.cols()); }
};

/// Builds the prediction cache from the raw model quantities.
inline SparseModel make_sparse_model(std::vector<int> u, Matrix Xu, Vector m_u,
                                     Vector p_u, const HyperParams& hp) {
  hp.validate();
  int k = static_cast<int>(u.size());
  if (Xu.rows() != k || m_u.size() != k || p_u.size() != k)
    throw std::invalid_argument("make_sparse_model: size mismatch");
  for (int i = 0; i < k; ++i)
    if (!(p_u[i] >= 0.0) || !std::isfinite(p_u[i]) || !std::isfinite(m_u[i]))
      throw std::invalid_argument("make_sparse_model: bad site parameters");

  SparseModel mdl;
  mdl.u = std::move(u);
  mdl.Xu = std::move(Xu);
  mdl.m_u = std::move(m_u);
  mdl.p_u = std::move(p_u);
  mdl.hp = hp;
  if (k == 0) {
    mdl.chol.resize(0, 0);
    mdl.beta.resize(0);
    return mdl;
  }
  Matrix Kuu = kernel_matrix(mdl.Xu, hp);
  Vector s = mdl.p_u.array().sqrt();
  Matrix B = Matrix::Identity(k, k) + s.asDiagonal() * Kuu * s.asDiagonal();
  // Overflow is the realistic failure here; the LLT does not reliably flag it.
  if (!B.allFinite())
    throw std::runtime_error("make_sparse_model: site matrix overflowed");
  Eigen::LLT<Matrix> llt(B);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("make_sparse_model: site matrix not positive definite");
  mdl.chol = llt.matrixL();
  mdl.beta = mdl.chol.triangularView<Eigen::Lower>().solve(
      (s.array() * mdl.m_u.array()).matrix());
  return mdl;
}

/// Textual model format, versioned by the "SGPC1" magic line:
///   SGPC1
///   <k> <d>
///   <v0> <sigma2> <b>
///   <u[0..k)>
///   <m_u[0..k)>
///   <p_u[0..k)>
///   k rows of d input coordinates
inline void save_model(const SparseModel& mdl, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << std::setprecision(17);
  out << "SGPC1\n";
  out << mdl.basis_size() << ' ' << mdl.dim() << '\n';
  out << mdl.hp.v0 << ' ' << mdl.hp.sigma2 << ' ' << mdl.hp.b << '\n';
  for (int i = 0; i < mdl.basis_size(); ++i)
    out << mdl.u[static_cast<std::size_t>(i)] << (i + 1 < mdl.basis_size() ? ' ' : '\n');
  if (mdl.basis_size() == 0) out << '\n';
  auto row = [&](const Vector& v) {
    for (int i = 0; i < v.size(); ++i)
      out << v[i] << (i + 1 < v.size() ? ' ' : '\n');
    if (v.size() == 0) out << '\n';
  };
  row(mdl.m_u);
  row(mdl.p_u);
  for (int i = 0; i < mdl.basis_size(); ++i) {
    for (int j = 0; j < mdl.dim(); ++j)
      out << mdl.Xu(i, j) << (j + 1 < mdl.dim() ? ' ' : '\n');
    if (mdl.dim() == 0) out << '\n';
  }
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

inline SparseModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  std::string magic;
  if (!std::getline(in, magic) || magic != "SGPC1")
    throw std::runtime_error("load_model: " + path + " is not a model file");
  int k = -1, d = -1;
  HyperParams hp;
  if (!(in >> k >> d) || k < 0 || d < 0)
    throw std::runtime_error("load_model: bad header in " + path);
  if (!(in >> hp.v0 >> hp.sigma2 >> hp.b))
    throw std::runtime_error("load_model: bad hyperparameters in " + path);
  std::vector<int> u(static_cast<std::size_t>(k));
  Vector m_u(k), p_u(k);
  Matrix Xu(k, d);
  for (auto& v : u)
    if (!(in >> v)) throw std::runtime_error("load_model: truncated index list");
  for (int i = 0; i < k; ++i)
    if (!(in >> m_u[i])) throw std::runtime_error("load_model: truncated site means");
  for (int i = 0; i < k; ++i)
    if (!(in >> p_u[i])) throw std::runtime_error("load_model: truncated site precisions");
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < d; ++j)
      if (!(in >> Xu(i, j))) throw std::runtime_error("load_model: truncated inputs");
  return make_sparse_model(std::move(u), std::move(Xu), std::move(m_u),
                           std::move(p_u), hp);
}

}  // namespace sgpc
