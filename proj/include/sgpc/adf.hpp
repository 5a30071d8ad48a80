#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "sgpc/kernel.hpp"
#include "sgpc/numerics.hpp"
#include "sgpc/state.hpp"

namespace sgpc {

/// Gaussian pseudo-likelihood parameters for one basis point.
struct SiteParams {
  double m = 0;  // site mean
  double p = 0;  // site precision, >= 0
};

/// Site parameters from moment matching the probit likelihood at point j
/// against the current marginal N(fhat_j, A_jj), plus the intermediates the
/// selection scores reuse.
struct MomentMatch {
  double z = 0;      // y_j (fhat_j + b) / sqrt(1 + A_jj)
  double mills = 0;  // phi(z) / Phi(z)
  double alpha = 0;  // d log E[Phi] / d fhat_j
  double nu = 0;     // -d^2 log E[Phi] / d fhat_j^2
  double p = 0;      // site precision nu / (1 - A_jj nu)
  double m = 0;      // site mean fhat_j + alpha / nu
};

/// Returns nullopt when 1 - A_jj nu_j is not safely positive, i.e. the site
/// precision would blow up; callers treat the point as not includable now.
inline std::optional<MomentMatch> moment_match(const SgpcState& st, int j,
                                               double yj) {
  double ajj = st.diag_a[j];
  double denom = std::sqrt(1.0 + ajj);
  // probit_terms clamps the margin and evaluates mills at the clamped value;
  // mixing a raw z with a clamped mills would make mills + z (and with it
  // nu and p) go negative for extreme margins.
  ProbitTerms t = probit_terms(yj * (st.fhat[j] + st.hp.b) / denom);
  MomentMatch mm;
  mm.z = t.z;
  mm.mills = t.mills;
  mm.alpha = yj * mm.mills / denom;
  mm.nu = mm.mills * (mm.mills + mm.z) / (1.0 + ajj);
  double gap = 1.0 - ajj * mm.nu;
  if (gap <= 1e-12) return std::nullopt;
  mm.p = mm.nu / gap;
  // Stable form of fhat_j + alpha/nu: alpha/nu = y sqrt(1+A_jj)/(mills + z).
  mm.m = st.fhat[j] + yj * denom / (mm.mills + mm.z);
  return mm;
}

/// Everything one inclusion changes, computed without touching the state.
/// Selection scores trial posteriors straight off these fields:
///   fhat' = fhat + alpha_tilde * ktilde,  diag(A)' = diag(A) - eta * ktilde^2.
struct InclusionDelta {
  int j = -1;
  double m = 0;
  double p = 0;
  Vector kcol;          // K(:, j)
  Vector ktilde;        // A(:, j) = K(:, j) - M^T M(:, j)
  Vector lvec;          // sqrt(p) M(:, j), new Cholesky row
  double lscalar = 1;   // sqrt(1 + p A_jj)
  Vector mu;            // (sqrt(p)/lscalar) ktilde, new M row
  double eta = 0;       // p / (1 + p A_jj)
  double alpha_tilde = 0;  // eta (m - fhat_j)
};

/// Posterior covariance column A(:, j) for a candidate, with the kernel
/// column it was built from (cached on commit).
inline void posterior_cov_column(const SgpcState& st, const Matrix& X, int j,
                                 Vector& kcol, Vector& ktilde) {
  kcol = kernel_column(X, j, st.hp);
  if (st.size() == 0) {
    ktilde = kcol;
    return;
  }
  ktilde = kcol - st.mt_view() * st.mt_view().row(j).transpose();
}

/// Assembles the rank-one update for including point j with site (m, p).
/// Returns nullopt if the updated Cholesky pivot is not safely positive.
inline std::optional<InclusionDelta> compute_delta(const SgpcState& st,
                                                   const Matrix& X, int j,
                                                   double m, double p) {
  if (p < 0.0) throw std::invalid_argument("compute_delta: negative precision");
  // Optimizer probes can overflow to infinity; such a site is not includable
  // rather than an error.
  if (!std::isfinite(m) || !std::isfinite(p)) return std::nullopt;
  InclusionDelta d;
  d.j = j;
  d.m = m;
  d.p = p;
  posterior_cov_column(st, X, j, d.kcol, d.ktilde);

  double sp = std::sqrt(p);
  d.lvec = sp * st.mt_view().row(j).transpose();
  double pivot2 = 1.0 + p * d.kcol[j] - d.lvec.squaredNorm();
  // A non-finite pivot (p large enough to overflow the products) is treated
  // the same as a collapsed one.
  if (!std::isfinite(pivot2) || pivot2 <= 1e-12) return std::nullopt;
  d.lscalar = std::sqrt(pivot2);
  d.mu = (sp / d.lscalar) * d.ktilde;
  d.eta = p / (1.0 + p * st.diag_a[j]);
  d.alpha_tilde = d.eta * (m - st.fhat[j]);
  return d;
}

/// Applies a prepared inclusion: appends the basis point and folds the
/// rank-one change into diag(A) and fhat.
inline void commit_inclusion(SgpcState& st, const InclusionDelta& d) {
  st.append_basis(d.j, d.m, d.p, d.lvec, d.lscalar, d.mu, d.kcol);
  double c = d.p > 0.0 ? d.alpha_tilde * d.lscalar / std::sqrt(d.p) : 0.0;
  for (int i = 0; i < st.n; ++i) {
    double v = st.diag_a[i] - d.mu[i] * d.mu[i];
    if (v < -1e-8)
      throw std::runtime_error("commit_inclusion: negative posterior variance");
    st.diag_a[i] = v < 0.0 ? 0.0 : v;
    st.fhat[i] += c * d.mu[i];
  }
}

}  // namespace sgpc
