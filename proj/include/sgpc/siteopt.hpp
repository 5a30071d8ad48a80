#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "sgpc/adf.hpp"
#include "sgpc/losses.hpp"
#include "sgpc/state.hpp"

namespace sgpc {

/// Feasible precision range for candidate i.  Post-inclusion variances stay
/// nonnegative iff the effective precision eta = p/(1 + p A_ii) stays below
/// eta_tilde = min_l A_ll / ktilde_{l,i}^2.  The l = i term equals 1/A_ii, so
/// eta_tilde * A_ii <= 1 always; equality means any p >= 0 is feasible,
/// otherwise p is capped at eta_tilde / (1 - eta_tilde A_ii).
struct SiteFeasibility {
  double eta_tilde = 0;
  bool unconstrained = false;
  double p_upper = std::numeric_limits<double>::infinity();
  Vector kcol;    // K(:, i), reusable by the caller
  Vector ktilde;  // A(:, i)
};

/// Returns nullopt when diag_a[i] has collapsed to zero, i.e. the candidate
/// cannot carry any more information.
inline std::optional<SiteFeasibility> feasibility(const SgpcState& st,
                                                  const Matrix& X, int i) {
  if (st.diag_a[i] <= 1e-12) return std::nullopt;
  SiteFeasibility fs;
  posterior_cov_column(st, X, i, fs.kcol, fs.ktilde);
  double eta_tilde = std::numeric_limits<double>::infinity();
  for (int l = 0; l < st.n; ++l) {
    double k2 = fs.ktilde[l] * fs.ktilde[l];
    if (k2 < 1e-300) continue;
    eta_tilde = std::min(eta_tilde, st.diag_a[l] / k2);
  }
  fs.eta_tilde = eta_tilde;
  double slack = 1.0 - eta_tilde * st.diag_a[i];
  if (slack <= 1e-12) {
    fs.unconstrained = true;
  } else {
    fs.p_upper = eta_tilde / slack;
  }
  return fs;
}

struct SiteOptResult {
  SiteParams site;
  double nlp_all = 0;  // trial objective at the returned site
};

namespace detail {

constexpr double kLogPrecisionFloor = -30.0;  // p = exp(tau) never exactly 0
constexpr double kLogPrecisionCeil = 700.0;   // keeps exp(tau) finite

}  // namespace detail

/// Minimizes the all-points predictive loss of a trial inclusion of point i
/// over its site parameters (m, p), p constrained to the feasible range.
/// Derivative-free Nelder-Mead on (m, tau = log p); each objective evaluation
/// costs O(n |u|).  Warm-started at the moment-matched site (projected into
/// the feasible range) and never returns anything worse than the best point
/// seen, so moment matching is dominated whenever it is feasible.  Returns
/// nullopt when no evaluation produced a finite objective.
inline std::optional<SiteOptResult> optimize_site(const SgpcState& st,
                                                  const Matrix& X,
                                                  const Vector& y, int i,
                                                  int budget = 40) {
  auto fs = feasibility(st, X, i);
  if (!fs) return std::nullopt;
  double p_hi = fs->unconstrained ? std::numeric_limits<double>::infinity()
                                  : fs->p_upper;

  int evals_left = budget;
  double best_val = std::numeric_limits<double>::infinity();
  SiteParams best_site;
  auto objective = [&](double m, double tau) {
    if (evals_left <= 0) return std::numeric_limits<double>::infinity();
    --evals_left;
    double p = std::exp(std::clamp(tau, detail::kLogPrecisionFloor,
                                   detail::kLogPrecisionCeil));
    p = std::min(p, p_hi);
    auto d = compute_delta(st, X, i, m, p);
    if (!d) return std::numeric_limits<double>::infinity();
    double v = trial_nlp_all(st, y, *d);
    if (v < best_val) {
      best_val = v;
      best_site = {m, p};
    }
    return v;
  };

  double m0, tau0;
  if (auto mm = moment_match(st, i, y[i]); mm && mm->p > 0.0) {
    m0 = mm->m;
    tau0 = std::log(std::min(mm->p, p_hi));
  } else {
    m0 = st.fhat[i] + y[i];
    tau0 = std::log(std::min(1.0, p_hi));
  }
  tau0 = std::max(tau0, detail::kLogPrecisionFloor);

  // One probe at a near-zero precision: the p -> 0 trial is a no-op, so the
  // result can never regress below the pre-inclusion loss.
  objective(m0, detail::kLogPrecisionFloor);

  using Pt = std::array<double, 2>;  // (m, tau)
  std::array<Pt, 3> x = {Pt{m0, tau0},
                         Pt{m0 + 0.5 * std::max(1.0, std::abs(m0)), tau0},
                         Pt{m0, tau0 + 1.0}};
  std::array<double, 3> f;
  for (int k = 0; k < 3; ++k) f[k] = objective(x[k][0], x[k][1]);

  while (evals_left > 0) {
    std::array<int, 3> ord = {0, 1, 2};
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return f[a] < f[b]; });
    int lo = ord[0], mid = ord[1], hi = ord[2];
    if (std::isfinite(f[hi]) && f[hi] - f[lo] < 1e-10) break;

    Pt cen = {0.5 * (x[lo][0] + x[mid][0]), 0.5 * (x[lo][1] + x[mid][1])};
    auto along = [&](double t) {
      return Pt{cen[0] + t * (x[hi][0] - cen[0]),
                cen[1] + t * (x[hi][1] - cen[1])};
    };

    Pt xr = along(-1.0);
    double fr = objective(xr[0], xr[1]);
    if (fr < f[lo]) {
      Pt xe = along(-2.0);
      double fe = objective(xe[0], xe[1]);
      if (fe < fr) {
        x[hi] = xe;
        f[hi] = fe;
      } else {
        x[hi] = xr;
        f[hi] = fr;
      }
    } else if (fr < f[mid]) {
      x[hi] = xr;
      f[hi] = fr;
    } else {
      Pt xc = along(fr < f[hi] ? -0.5 : 0.5);
      double fc = objective(xc[0], xc[1]);
      if (fc < std::min(fr, f[hi])) {
        x[hi] = xc;
        f[hi] = fc;
      } else {
        for (int k : {mid, hi}) {
          x[k] = {0.5 * (x[k][0] + x[lo][0]), 0.5 * (x[k][1] + x[lo][1])};
          f[k] = objective(x[k][0], x[k][1]);
        }
      }
    }
  }

  if (!std::isfinite(best_val)) return std::nullopt;
  return SiteOptResult{best_site, best_val};
}

}  // namespace sgpc
