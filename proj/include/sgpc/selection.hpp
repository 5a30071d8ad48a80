#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "sgpc/adf.hpp"
#include "sgpc/losses.hpp"
#include "sgpc/rng.hpp"
#include "sgpc/siteopt.hpp"
#include "sgpc/state.hpp"

namespace sgpc {

enum class SiteEstimator { moment, optimize };
enum class Weighting { adaptive, uniform };

struct WorkingSet {
  std::vector<int> indices;  // distinct members of u^c, in sampled order
};

struct SamplingWeights {
  std::vector<int> indices;  // members of u^c, ascending
  std::vector<double> chi;   // per-index probability, sums to 1
};

struct SelectionOutcome {
  int j = -1;
  SiteParams site;
  double score = 0;       // strategy-specific objective at j
  InclusionDelta delta;   // ready for commit_inclusion
};

namespace detail {

inline std::vector<int> complement(const SgpcState& st) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(st.n) - st.u.size());
  for (int i = 0; i < st.n; ++i)
    if (!st.in_u[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

}  // namespace detail

/// Candidate weights proportional to the predicted probability of the label
/// being wrong, 1 - Phi(y_i (fhat_i + b) / sqrt(1 + A_ii)).  Falls back to
/// uniform when every example is predicted essentially perfectly and the
/// normalizer underflows.
inline SamplingWeights adaptive_weights(const SgpcState& st, const Vector& y) {
  SamplingWeights w;
  w.indices = detail::complement(st);
  w.chi.resize(w.indices.size());
  double total = 0.0;
  for (std::size_t k = 0; k < w.indices.size(); ++k) {
    int i = w.indices[k];
    double z = y[i] * (st.fhat[i] + st.hp.b) / std::sqrt(1.0 + st.diag_a[i]);
    w.chi[k] = phi(-z);
    total += w.chi[k];
  }
  if (total < 1e-300) {
    double p = 1.0 / static_cast<double>(w.chi.size());
    for (double& c : w.chi) c = p;
  } else {
    for (double& c : w.chi) c /= total;
  }
  return w;
}

inline SamplingWeights uniform_weights(const SgpcState& st) {
  SamplingWeights w;
  w.indices = detail::complement(st);
  w.chi.assign(w.indices.size(), 1.0 / static_cast<double>(w.indices.size()));
  return w;
}

/// Draws min(kappa, |u^c|) distinct indices without replacement, each step
/// proportional to the remaining weight mass.  If the mass runs out before
/// the set is full (weights concentrated on fewer than kappa points), the
/// remaining slots are filled uniformly.
inline WorkingSet sample_working_set(const SamplingWeights& weights, int kappa,
                                     Rng& rng) {
  std::size_t count = weights.indices.size();
  std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(kappa), count);
  std::vector<double> chi = weights.chi;
  std::vector<char> taken(count, 0);
  double mass = 0.0;
  for (double c : chi) mass += c;

  WorkingSet ws;
  ws.indices.reserve(want);
  while (ws.indices.size() < want) {
    if (mass < 1e-300) {
      mass = 0.0;
      for (std::size_t k = 0; k < count; ++k)
        if (!taken[k]) {
          chi[k] = 1.0;
          mass += 1.0;
        }
    }
    double r = uniform01(rng) * mass;
    double cum = 0.0;
    std::size_t pick = count;
    for (std::size_t k = 0; k < count; ++k) {
      if (taken[k]) continue;
      cum += chi[k];
      if (r < cum) {
        pick = k;
        break;
      }
      pick = k;  // rounding may leave r just past the final bucket
    }
    taken[pick] = 1;
    mass -= chi[pick];
    chi[pick] = 0.0;
    ws.indices.push_back(weights.indices[pick]);
  }
  return ws;
}

namespace detail {

/// Scans candidates in the given order with an O(1)-per-candidate score,
/// then builds the winner's inclusion delta; a winner whose Cholesky pivot
/// degenerates is excluded and the scan repeats.  score(i, mm) returns the
/// strategy objective or nullopt to exclude i.
template <typename Score>
inline std::optional<SelectionOutcome> select_scored(
    const SgpcState& st, const Matrix& X, const Vector& y,
    const std::vector<int>& order, Score&& score) {
  std::vector<char> excluded(static_cast<std::size_t>(st.n), 0);
  for (;;) {
    int best_j = -1;
    double best_score = std::numeric_limits<double>::infinity();
    MomentMatch best_mm;
    for (int i : order) {
      if (excluded[static_cast<std::size_t>(i)]) continue;
      auto mm = moment_match(st, i, y[i]);
      if (!mm) continue;
      auto s = score(i, *mm);
      if (!s) continue;
      if (*s < best_score) {
        best_score = *s;
        best_j = i;
        best_mm = *mm;
      }
    }
    if (best_j < 0) return std::nullopt;
    auto d = compute_delta(st, X, best_j, best_mm.m, best_mm.p);
    if (!d) {
      excluded[static_cast<std::size_t>(best_j)] = 1;
      continue;
    }
    SelectionOutcome out;
    out.j = best_j;
    out.site = {best_mm.m, best_mm.p};
    out.score = best_score;
    out.delta = std::move(*d);
    return out;
  }
}

}  // namespace detail

/// Greedy entropy reduction: j = argmin_{i in u^c} log(1 - nu_i A_ii).
/// Smaller lambda_bar means the inclusion removes more posterior entropy.
inline std::optional<SelectionOutcome> select_entropy(const SgpcState& st,
                                                      const Matrix& X,
                                                      const Vector& y) {
  auto order = detail::complement(st);
  return detail::select_scored(
      st, X, y, order, [&](int i, const MomentMatch& mm) -> std::optional<double> {
        return std::log(1.0 - mm.nu * st.diag_a[i]);
      });
}

/// Information-gain rule: j maximizes the divergence between the marginal
/// before and after inclusion,
///   -log(lambda_bar_i) + 1/lambda_bar_i + (fhat'_i - fhat_i)^2 / A_ii,
/// where fhat'_i is the post-inclusion mean at i; with a moment-matched site
/// the mean moves by alpha_i A_ii, so the last term is alpha_i^2 A_ii.  The
/// minimizing scan receives the negated expression.
inline std::optional<SelectionOutcome> select_info_gain(const SgpcState& st,
                                                        const Matrix& X,
                                                        const Vector& y) {
  auto order = detail::complement(st);
  return detail::select_scored(
      st, X, y, order, [&](int i, const MomentMatch& mm) -> std::optional<double> {
        double aii = st.diag_a[i];
        if (aii <= 1e-12) return std::nullopt;
        double lam = 1.0 - mm.nu * aii;
        return std::log(lam) - 1.0 / lam - mm.alpha * mm.alpha * aii;
      });
}

/// Validation-style selection: a uniform working set of size kappa, each
/// member scored by the holdout loss of its trial inclusion.  Ties keep the
/// earliest member in sampled order.
inline std::optional<SelectionOutcome> select_validation(const SgpcState& st,
                                                         const Matrix& X,
                                                         const Vector& y,
                                                         int kappa, Rng& rng) {
  if (st.size() >= st.n) return std::nullopt;
  WorkingSet ws = sample_working_set(uniform_weights(st), kappa, rng);
  SelectionOutcome out;
  double best = std::numeric_limits<double>::infinity();
  for (int i : ws.indices) {
    auto mm = moment_match(st, i, y[i]);
    if (!mm) continue;
    auto d = compute_delta(st, X, i, mm->m, mm->p);
    if (!d) continue;
    double s = trial_nlp_holdout(st, y, *d);
    if (s < best) {
      best = s;
      out.j = i;
      out.site = {mm->m, mm->p};
      out.score = s;
      out.delta = std::move(*d);
    }
  }
  if (out.j < 0) return std::nullopt;
  return out;
}

/// Adaptive-sampling selection: the working set is drawn with probability
/// proportional to how badly each example is currently predicted, and each
/// member is scored by the all-points loss of its trial inclusion.  The site
/// estimator is either plain moment matching or the constrained optimizer.
/// `weighting` swaps the sampler to uniform for ablation runs; scoring is
/// unchanged.
inline std::optional<SelectionOutcome> select_proposed(
    const SgpcState& st, const Matrix& X, const Vector& y, int kappa, Rng& rng,
    SiteEstimator estimator = SiteEstimator::moment,
    Weighting weighting = Weighting::adaptive, int site_budget = 40) {
  if (st.size() >= st.n) return std::nullopt;
  SamplingWeights w = weighting == Weighting::adaptive
                          ? adaptive_weights(st, y)
                          : uniform_weights(st);
  WorkingSet ws = sample_working_set(w, kappa, rng);

  int best_j = -1;
  SiteParams best_site;
  double best = std::numeric_limits<double>::infinity();
  for (int i : ws.indices) {
    SiteParams site;
    double score;
    if (estimator == SiteEstimator::moment) {
      auto mm = moment_match(st, i, y[i]);
      if (!mm) continue;
      auto d = compute_delta(st, X, i, mm->m, mm->p);
      if (!d) continue;
      site = {mm->m, mm->p};
      score = trial_nlp_all(st, y, *d);
    } else {
      auto r = optimize_site(st, X, y, i, site_budget);
      if (!r) continue;
      site = r->site;
      score = r->nlp_all;
    }
    if (score < best) {
      best = score;
      best_j = i;
      best_site = site;
    }
  }
  if (best_j < 0) return std::nullopt;
  auto d = compute_delta(st, X, best_j, best_site.m, best_site.p);
  if (!d) return std::nullopt;
  SelectionOutcome out;
  out.j = best_j;
  out.site = best_site;
  out.score = best;
  out.delta = std::move(*d);
  return out;
}

}  // namespace sgpc
