#pragma once

#include <cmath>
#include <stdexcept>

#include "sgpc/adf.hpp"
#include "sgpc/losses.hpp"
#include "sgpc/model.hpp"
#include "sgpc/numerics.hpp"
#include "sgpc/state.hpp"

namespace sgpc {

struct Prediction {
  double fstar = 0;     // predictive latent mean
  double var_star = 0;  // predictive latent variance
  double prob_pos = 0;  // Phi((fstar + b) / sqrt(1 + var_star))
  int label = -1;       // sign of fstar + b; 0 maps to -1
};

namespace detail {

inline Prediction finish_prediction(double fstar, double var, double v0,
                                    double b) {
  if (var < -1e-10)
    throw std::runtime_error("predict: negative predictive variance");
  if (var < 0.0) var = 0.0;
  if (var > v0) var = v0;  // shave accumulated rounding above the prior
  Prediction pr;
  pr.fstar = fstar;
  pr.var_star = var;
  pr.prob_pos = phi((fstar + b) / std::sqrt(1.0 + var));
  pr.label = fstar + b > 0.0 ? 1 : -1;
  return pr;
}

}  // namespace detail

/// Predictive marginal at x via two triangular solves against the cached
/// factor: fstar = q . beta, var = v0 - q . q with q = L^{-1} S k(Xu, x).
/// O(|u|^2) per call.
inline Prediction predict_one(const SparseModel& mdl, const Vector& x) {
  if (x.size() != mdl.dim())
    throw std::invalid_argument("predict_one: input dimension mismatch");
  if (mdl.basis_size() == 0)
    return detail::finish_prediction(0.0, mdl.hp.v0, mdl.hp.v0, mdl.hp.b);
  Vector ks = kernel_cross(mdl.Xu, x, mdl.hp);
  Vector q = mdl.chol.triangularView<Eigen::Lower>().solve(
      (mdl.p_u.array().sqrt() * ks.array()).matrix());
  double fstar = q.dot(mdl.beta);
  double var = mdl.hp.v0 - q.squaredNorm();
  return detail::finish_prediction(fstar, var, mdl.hp.v0, mdl.hp.b);
}

/// Additive-model form of the same prediction: replays the inclusions over
/// the basis rows alone (the posterior restricted to u depends only on K_uu
/// and the sites), accumulating f(x) = sum_t alpha_tilde_t ktilde_t(x, x_t)
/// and var(x) = v0 - sum_t eta_t ktilde_t(x, x_t)^2.  O(|u|^2) per call and
/// a full re-run of the update recursion, so it serves as an independent
/// cross-check of predict_one.
inline Prediction predict_additive(const SparseModel& mdl, const Vector& x) {
  if (x.size() != mdl.dim())
    throw std::invalid_argument("predict_additive: input dimension mismatch");
  int k = mdl.basis_size();
  if (k == 0)
    return detail::finish_prediction(0.0, mdl.hp.v0, mdl.hp.v0, mdl.hp.b);

  SgpcState st = init_state(mdl.Xu, mdl.hp);
  Vector mu_x(k);
  double fx = 0.0, varx = mdl.hp.v0;
  for (int t = 0; t < k; ++t) {
    auto d = compute_delta(st, mdl.Xu, t, mdl.m_u[t], mdl.p_u[t]);
    if (!d)
      throw std::runtime_error("predict_additive: degenerate stored site");
    double kx = kernel_eval(x, mdl.Xu.row(t).transpose(), mdl.hp);
    double ktilde_x = kx;
    for (int s = 0; s < t; ++s) ktilde_x -= mu_x[s] * st.mt(t, s);
    fx += d->alpha_tilde * ktilde_x;
    varx -= d->eta * ktilde_x * ktilde_x;
    mu_x[t] = d->p > 0.0 ? std::sqrt(d->p) / d->lscalar * ktilde_x : 0.0;
    commit_inclusion(st, *d);
  }
  return detail::finish_prediction(fx, varx, mdl.hp.v0, mdl.hp.b);
}

struct TestMetrics {
  double error_rate = 0;
  double nlp = 0;
};

/// Test-set error and mean negative log predictive probability.  A zero
/// margin counts as an error for either label.
inline TestMetrics evaluate_set(const SparseModel& mdl, const Matrix& Xtest,
                                const Vector& ytest) {
  int m = static_cast<int>(Xtest.rows());
  if (m == 0) throw std::invalid_argument("evaluate_set: empty test set");
  if (ytest.size() != m)
    throw std::invalid_argument("evaluate_set: label count mismatch");
  NeumaierSum nlp;
  int errors = 0;
  for (int i = 0; i < m; ++i) {
    Prediction pr = predict_one(mdl, Xtest.row(i).transpose());
    nlp.add(nlp_point(pr.fstar, pr.var_star, ytest[i], mdl.hp.b));
    if (ytest[i] * (pr.fstar + mdl.hp.b) <= 0.0) ++errors;
  }
  return {static_cast<double>(errors) / m, nlp.value() / m};
}

}  // namespace sgpc
