#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "sgpc/adf.hpp"
#include "sgpc/numerics.hpp"
#include "sgpc/state.hpp"

namespace sgpc {

/// Negative log predictive probability of label y at a point with posterior
/// marginal N(f, a): -log Phi(y (f + b) / sqrt(1 + a)).
inline double nlp_point(double f, double a, double y, double b) {
  return -log_phi_stable(y * (f + b) / std::sqrt(1.0 + a));
}

struct LossReport {
  double error_rate = 0;   // training error; sign(0) counts as wrong
  double nlp_all = 0;      // mean nlp_point over all training points
  double nlp_holdout = 0;  // mean over points outside the basis set
  int holdout_count = 0;
};

/// Scores a posterior given by per-point marginals.  in_u marks basis
/// membership; the holdout mean is 0 when every point is in the basis.
inline LossReport loss_report(const Vector& fhat, const Vector& diag_a,
                              const Vector& y, double b,
                              const std::vector<char>& in_u) {
  int n = static_cast<int>(fhat.size());
  NeumaierSum all, holdout;
  int errors = 0, held = 0;
  for (int i = 0; i < n; ++i) {
    double s = nlp_point(fhat[i], diag_a[i], y[i], b);
    all.add(s);
    if (!in_u[static_cast<std::size_t>(i)]) {
      holdout.add(s);
      ++held;
    }
    if (y[i] * (fhat[i] + b) <= 0.0) ++errors;
  }
  LossReport r;
  r.error_rate = static_cast<double>(errors) / n;
  r.nlp_all = all.value() / n;
  r.nlp_holdout = held > 0 ? holdout.value() / held : 0.0;
  r.holdout_count = held;
  return r;
}

inline LossReport loss_report(const SgpcState& st, const Vector& y) {
  return loss_report(st.fhat, st.diag_a, y, st.hp.b, st.in_u);
}

/// Upper bound on training error implied by the all-points loss:
/// error <= nlp_all / log 2.
inline double error_bound(double nlp_all) {
  return nlp_all / std::numbers::ln2;
}

/// Mean nlp_point over all n points of the trial posterior that would result
/// from committing d.  O(n), nothing is mutated.
inline double trial_nlp_all(const SgpcState& st, const Vector& y,
                            const InclusionDelta& d) {
  NeumaierSum acc;
  for (int i = 0; i < st.n; ++i) {
    double f = st.fhat[i] + d.alpha_tilde * d.ktilde[i];
    double a = st.diag_a[i] - d.eta * d.ktilde[i] * d.ktilde[i];
    if (a < 0.0) a = 0.0;
    acc.add(nlp_point(f, a, y[i], st.hp.b));
  }
  return acc.value() / st.n;
}

/// Mean nlp_point of the trial posterior over the points that would remain
/// outside the basis, i.e. u^c minus the trial point itself.
inline double trial_nlp_holdout(const SgpcState& st, const Vector& y,
                                const InclusionDelta& d) {
  NeumaierSum acc;
  int held = 0;
  for (int i = 0; i < st.n; ++i) {
    if (i == d.j || st.in_u[static_cast<std::size_t>(i)]) continue;
    double f = st.fhat[i] + d.alpha_tilde * d.ktilde[i];
    double a = st.diag_a[i] - d.eta * d.ktilde[i] * d.ktilde[i];
    if (a < 0.0) a = 0.0;
    acc.add(nlp_point(f, a, y[i], st.hp.b));
    ++held;
  }
  return held > 0 ? acc.value() / held : 0.0;
}

}  // namespace sgpc
