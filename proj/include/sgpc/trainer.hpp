#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "sgpc/adf.hpp"
#include "sgpc/kernel.hpp"
#include "sgpc/losses.hpp"
#include "sgpc/model.hpp"
#include "sgpc/rng.hpp"
#include "sgpc/selection.hpp"
#include "sgpc/siteopt.hpp"
#include "sgpc/state.hpp"

namespace sgpc {

enum class Selector { entropy, infogain, validation, adaptive };

struct TrainConfig {
  int d_max = 40;
  int kappa = 2;  // working-set size; the validation selector wants 59
  Selector selector = Selector::adaptive;
  SiteEstimator site_estimator = SiteEstimator::moment;
  Weighting weighting = Weighting::adaptive;  // ablation knob, adaptive only
  int iter_max = 20;
  double tol = 1e-4;
  std::uint64_t seed = 0;
  int hyper_budget = 100;  // objective evaluations per outer iteration
  int site_budget = 40;    // objective evaluations per optimize_site call

  void validate(int n) const {
    if (d_max < 1 || d_max > n)
      throw std::invalid_argument("TrainConfig: d_max out of [1, n]");
    if (kappa < 1) throw std::invalid_argument("TrainConfig: kappa < 1");
    if (iter_max < 1) throw std::invalid_argument("TrainConfig: iter_max < 1");
    if (!(tol > 0)) throw std::invalid_argument("TrainConfig: tol <= 0");
  }
};

struct InclusionRecord {
  int j = -1;
  double error_rate = 0;   // training error after the commit
  double nlp_all = 0;      // all-points loss after the commit
  double nlp_holdout = 0;  // holdout loss after the commit
  double eta = 0;
  double alpha_tilde = 0;
};

struct InnerLoopResult {
  SgpcState state;
  std::vector<InclusionRecord> trace;
  bool exhausted = false;  // ran out of usable candidates before d_max
};

using InclusionObserver =
    std::function<void(const SgpcState&, const InclusionRecord&)>;

/// Greedy basis construction at fixed hyperparameters: repeat select ->
/// estimate site -> commit until d_max inclusions or no candidate survives.
/// With a non-adaptive selector the optimize estimator refines the winner's
/// site after selection; the adaptive selector already scores candidates
/// under the estimator it was given.
inline InnerLoopResult inner_loop(const Matrix& X, const Vector& y,
                                  const HyperParams& hp,
                                  const TrainConfig& config, Rng& rng,
                                  const InclusionObserver& observer = {}) {
  config.validate(static_cast<int>(X.rows()));
  InnerLoopResult res;
  res.state = init_state(X, hp);
  SgpcState& st = res.state;

  while (st.size() < config.d_max) {
    std::optional<SelectionOutcome> out;
    switch (config.selector) {
      case Selector::entropy:
        out = select_entropy(st, X, y);
        break;
      case Selector::infogain:
        out = select_info_gain(st, X, y);
        break;
      case Selector::validation:
        out = select_validation(st, X, y, config.kappa, rng);
        break;
      case Selector::adaptive:
        out = select_proposed(st, X, y, config.kappa, rng,
                              config.site_estimator, config.weighting,
                              config.site_budget);
        break;
    }
    if (!out) {
      res.exhausted = true;
      break;
    }
    if (config.site_estimator == SiteEstimator::optimize &&
        config.selector != Selector::adaptive) {
      if (auto r = optimize_site(st, X, y, out->j, config.site_budget)) {
        if (auto d = compute_delta(st, X, out->j, r->site.m, r->site.p)) {
          out->site = r->site;
          out->delta = std::move(*d);
        }
      }
    }
    commit_inclusion(st, out->delta);

    LossReport lr = loss_report(st, y);
    InclusionRecord rec;
    rec.j = out->j;
    rec.error_rate = lr.error_rate;
    rec.nlp_all = lr.nlp_all;
    rec.nlp_holdout = lr.nlp_holdout;
    rec.eta = out->delta.eta;
    rec.alpha_tilde = out->delta.alpha_tilde;
    res.trace.push_back(rec);
    if (observer) observer(st, rec);
  }
  return res;
}

/// Recomputes the posterior from frozen sites under (possibly new)
/// hyperparameters, in one batch instead of rank-one updates.  Throws when
/// the site matrix loses positive definiteness under the probed
/// hyperparameters; hyperparameter search treats that probe as infeasible.
inline SgpcState rebuild_posterior(const std::vector<int>& u,
                                   const std::vector<double>& site_m,
                                   const std::vector<double>& site_p,
                                   const HyperParams& hp, const Matrix& X) {
  if (site_m.size() != u.size() || site_p.size() != u.size())
    throw std::invalid_argument("rebuild_posterior: site size mismatch");
  SgpcState st = init_state(X, hp);
  int k = static_cast<int>(u.size());
  if (k == 0) return st;

  st.chol.setZero(k, k);
  st.mt.setZero(st.n, k);
  st.kcols.resize(st.n, k);
  for (int t = 0; t < k; ++t)
    st.kcols.col(t) = kernel_column(X, u[static_cast<std::size_t>(t)], hp);
  Matrix Kuu(k, k);
  for (int t = 0; t < k; ++t)
    for (int s = 0; s < k; ++s)
      Kuu(t, s) = st.kcols(u[static_cast<std::size_t>(t)], s);

  Vector s(k), m(k);
  for (int t = 0; t < k; ++t) {
    s[t] = std::sqrt(site_p[static_cast<std::size_t>(t)]);
    m[t] = site_m[static_cast<std::size_t>(t)];
  }
  Matrix B = Matrix::Identity(k, k) + s.asDiagonal() * Kuu * s.asDiagonal();
  // I + SKS is positive definite in exact arithmetic; in floating point it
  // fails by overflowing, which the LLT does not reliably flag.
  if (!B.allFinite())
    throw std::runtime_error("rebuild_posterior: site matrix overflowed");
  Eigen::LLT<Matrix> llt(B);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("rebuild_posterior: site matrix not positive definite");
  st.chol = llt.matrixL();
  st.mt = (st.chol.triangularView<Eigen::Lower>()
               .solve(s.asDiagonal() * st.kcols.transpose()))
              .transpose();
  Vector beta = st.chol.triangularView<Eigen::Lower>().solve(
      (s.array() * m.array()).matrix());
  st.fhat = st.mt * beta;
  for (int i = 0; i < st.n; ++i) {
    double v = st.hp.v0 - st.mt.row(i).squaredNorm();
    st.diag_a[i] = v < 0.0 ? 0.0 : v;
  }
  st.u = u;
  st.site_m = site_m;
  st.site_p = site_p;
  for (int j : u) st.in_u[static_cast<std::size_t>(j)] = 1;
  return st;
}

/// Holdout loss of the frozen-site posterior under hp; the hyperparameter
/// objective.
inline double rebuild_nlp(const Matrix& X, const Vector& y,
                          const std::vector<int>& u,
                          const std::vector<double>& site_m,
                          const std::vector<double>& site_p,
                          const HyperParams& hp) {
  SgpcState st = rebuild_posterior(u, site_m, site_p, hp, X);
  return loss_report(st, y).nlp_holdout;
}

/// Central finite-difference gradient of a scalar function of three
/// coordinates.
template <typename F>
inline Eigen::Vector3d fd_gradient3(F&& f, const Eigen::Vector3d& t,
                                    double h = 1e-5) {
  Eigen::Vector3d g;
  for (int c = 0; c < 3; ++c) {
    Eigen::Vector3d hi = t, lo = t;
    hi[c] += h;
    lo[c] -= h;
    g[c] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

struct HyperOptResult {
  HyperParams hp;
  double nlp = std::numeric_limits<double>::infinity();
  int evals = 0;
  bool warned = false;  // every probe failed; hp is the unchanged start
};

/// Minimizes the holdout loss over (log v0, log sigma2, b) with sites frozen:
/// Polak-Ribiere conjugate gradients on central finite differences, Armijo
/// backtracking, and best-seen tracking so the result never regresses behind
/// the starting point.
inline HyperOptResult optimize_hyperparameters(
    const Matrix& X, const Vector& y, const std::vector<int>& u,
    const std::vector<double>& site_m, const std::vector<double>& site_p,
    const HyperParams& hp0, int budget = 100) {
  hp0.validate();
  auto unpack = [&](const Eigen::Vector3d& t) {
    HyperParams hp;
    hp.v0 = std::exp(t[0]);
    hp.sigma2 = std::exp(t[1]);
    hp.b = t[2];
    return hp;
  };

  HyperOptResult res;
  res.hp = hp0;
  auto objective = [&](const Eigen::Vector3d& t) {
    if (res.evals >= budget) return std::numeric_limits<double>::infinity();
    ++res.evals;
    HyperParams hp = unpack(t);
    if (!std::isfinite(hp.v0) || !std::isfinite(hp.sigma2) ||
        !std::isfinite(hp.b) || hp.v0 <= 0 || hp.sigma2 <= 0)
      return std::numeric_limits<double>::infinity();
    double v;
    try {
      v = rebuild_nlp(X, y, u, site_m, site_p, hp);
    } catch (const std::runtime_error&) {
      return std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    if (v < res.nlp) {
      res.nlp = v;
      res.hp = hp;
    }
    return v;
  };

  Eigen::Vector3d t(std::log(hp0.v0), std::log(hp0.sigma2), hp0.b);
  double f = objective(t);
  if (!std::isfinite(f)) {
    res.warned = true;
    res.hp = hp0;
    return res;
  }

  Eigen::Vector3d g = fd_gradient3(objective, t);
  Eigen::Vector3d dir = -g;
  while (res.evals < budget) {
    double gnorm = g.norm();
    if (!std::isfinite(gnorm) || gnorm < 1e-8) break;
    double slope = g.dot(dir);
    if (slope >= 0.0) {
      dir = -g;
      slope = -gnorm * gnorm;
    }

    double step = 1.0 / std::max(1.0, dir.norm());
    double fnew = std::numeric_limits<double>::infinity();
    Eigen::Vector3d tnew;
    bool accepted = false;
    for (int half = 0; half < 14 && res.evals < budget; ++half) {
      tnew = t + step * dir;
      fnew = objective(tnew);
      if (fnew <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if ((dir + g).norm() < 1e-14) break;  // already steepest descent
      dir = -g;
      continue;
    }

    Eigen::Vector3d gnew = fd_gradient3(objective, tnew);
    if (!gnew.allFinite()) break;
    double beta = gnew.dot(gnew - g) / (gnorm * gnorm);
    if (beta < 0.0) beta = 0.0;
    dir = -gnew + beta * dir;
    t = tnew;
    f = fnew;
    g = gnew;
  }
  return res;
}

struct OuterIterRecord {
  double nlp_holdout = 0;  // after the hyperparameter step
  double nlp_all = 0;
  double error_rate = 0;
  HyperParams hp;
  int inclusions = 0;
};

struct TrainedModel {
  SparseModel model;
  double train_error = 0;
  double train_nlp_all = 0;
  double train_nlp_holdout = 0;
  std::vector<InclusionRecord> trace;  // inner-loop trace of the best iteration
  std::vector<OuterIterRecord> outer;  // one entry per completed outer iteration
  int best_outer_iter = 0;             // 1-based
  bool exhausted_warning = false;
  bool hyperopt_warning = false;
};

/// Scale-free starting point: unit signal variance, zero bias, squared
/// length-scale at the median squared pairwise distance of (a subsample of)
/// the inputs.
inline HyperParams default_hyperparams(const Matrix& X,
                                       std::uint64_t seed = 0) {
  int n = static_cast<int>(X.rows());
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  if (n > 500) {
    Rng rng(mix_seed(seed, 0x6d656469616eULL));
    for (int i = 0; i < 500; ++i) {
      std::size_t j = i + uniform_index(rng, static_cast<std::size_t>(n - i));
      std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }
    idx.resize(500);
  }
  std::vector<double> d2;
  d2.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b)
      d2.push_back((X.row(idx[a]) - X.row(idx[b])).squaredNorm());
  HyperParams hp;
  if (!d2.empty()) {
    auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
    std::nth_element(d2.begin(), mid, d2.end());
    if (*mid > 0.0) hp.sigma2 = *mid;
  }
  return hp;
}

/// Full training: alternate greedy re-selection and hyperparameter
/// re-estimation, stopping at iter_max outer iterations or when the holdout
/// loss stops moving; the returned model is the best one seen by that loss,
/// not necessarily the last.
inline TrainedModel train(const Matrix& X, const Vector& y,
                          const TrainConfig& config,
                          std::optional<HyperParams> hp0 = std::nullopt) {
  int n = static_cast<int>(X.rows());
  config.validate(n);
  if (y.size() != n) throw std::invalid_argument("train: label count mismatch");

  HyperParams hp = hp0 ? *hp0 : default_hyperparams(X, config.seed);
  hp.validate();
  Rng rng(config.seed);

  TrainedModel best;
  double best_nlp = std::numeric_limits<double>::infinity();
  double prev_nlp = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= config.iter_max; ++it) {
    InnerLoopResult inner = inner_loop(X, y, hp, config, rng);
    HyperOptResult hopt =
        optimize_hyperparameters(X, y, inner.state.u, inner.state.site_m,
                                 inner.state.site_p, hp, config.hyper_budget);

    double cur_nlp;
    LossReport lr;
    if (hopt.warned) {
      // No probe survived; score the model under the unchanged
      // hyperparameters it was built with.
      lr = loss_report(inner.state, y);
      cur_nlp = lr.nlp_holdout;
    } else {
      SgpcState rebuilt = rebuild_posterior(
          inner.state.u, inner.state.site_m, inner.state.site_p, hopt.hp, X);
      lr = loss_report(rebuilt, y);
      cur_nlp = lr.nlp_holdout;
    }

    OuterIterRecord orec;
    orec.nlp_holdout = cur_nlp;
    orec.nlp_all = lr.nlp_all;
    orec.error_rate = lr.error_rate;
    orec.hp = hopt.hp;
    orec.inclusions = inner.state.size();

    if (cur_nlp < best_nlp) {
      best_nlp = cur_nlp;
      int k = inner.state.size();
      Matrix Xu(k, X.cols());
      for (int t = 0; t < k; ++t)
        Xu.row(t) = X.row(inner.state.u[static_cast<std::size_t>(t)]);
      best.model = make_sparse_model(
          inner.state.u, std::move(Xu),
          Eigen::Map<const Vector>(inner.state.site_m.data(), k),
          Eigen::Map<const Vector>(inner.state.site_p.data(), k), hopt.hp);
      best.train_error = lr.error_rate;
      best.train_nlp_all = lr.nlp_all;
      best.train_nlp_holdout = cur_nlp;
      best.trace = inner.trace;
      best.best_outer_iter = it;
      best.exhausted_warning = inner.exhausted;
      best.hyperopt_warning = hopt.warned;
    }
    best.outer.push_back(orec);

    if (std::abs(prev_nlp - cur_nlp) < config.tol) break;
    prev_nlp = cur_nlp;
    hp = hopt.hp;
  }
  return best;
}

}  // namespace sgpc
