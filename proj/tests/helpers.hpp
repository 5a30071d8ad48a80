#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sgpc/sgpc.hpp"

namespace testutil {

inline sgpc::Matrix random_inputs(int n, int d, sgpc::Rng& rng,
                                  double spread = 2.0) {
  sgpc::Matrix X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = spread * sgpc::standard_normal(rng);
  return X;
}

inline sgpc::Vector random_labels(int n, sgpc::Rng& rng) {
  sgpc::Vector y(n);
  for (int i = 0; i < n; ++i) y[i] = sgpc::uniform01(rng) < 0.5 ? -1.0 : 1.0;
  return y;
}

struct Instance {
  sgpc::Matrix X;
  sgpc::Vector y;
  sgpc::HyperParams hp;
};

inline Instance random_instance(int n, int d, std::uint64_t seed) {
  sgpc::Rng rng(seed);
  Instance inst;
  inst.X = random_inputs(n, d, rng);
  inst.y = random_labels(n, rng);
  inst.hp.v0 = 0.5 + 2.5 * sgpc::uniform01(rng);
  inst.hp.sigma2 = 0.3 + 3.0 * sgpc::uniform01(rng);
  inst.hp.b = -0.5 + sgpc::uniform01(rng);
  return inst;
}

/// Moment-matches point j and commits it; fails the caller loudly when the
/// point is not includable.
inline sgpc::InclusionDelta include_moment_matched(sgpc::SgpcState& st,
                                                   const sgpc::Matrix& X,
                                                   const sgpc::Vector& y,
                                                   int j) {
  auto mm = sgpc::moment_match(st, j, y[j]);
  if (!mm) throw std::runtime_error("test inclusion: degenerate site");
  auto d = sgpc::compute_delta(st, X, j, mm->m, mm->p);
  if (!d) throw std::runtime_error("test inclusion: degenerate pivot");
  sgpc::commit_inclusion(st, *d);
  return *d;
}

/// Two interleaved arcs in 2-D, each class an equal-weight mixture of six
/// Gaussian components spaced along its arc.  Prediction quality varies by
/// region, so basis placement matters at small budgets.
inline Instance arc_mixture(int n, std::uint64_t seed, double sigma = 0.25) {
  sgpc::Rng rng(seed);
  Instance inst;
  inst.X.resize(n, 2);
  inst.y.resize(n);
  constexpr double kPi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    double cls = i % 2 == 0 ? 1.0 : -1.0;
    inst.y[i] = cls;
    double t = kPi * (2.0 * static_cast<double>(sgpc::uniform_index(rng, 6)) + 1.0) / 12.0;
    double mx = cls > 0 ? std::cos(t) : 1.0 - std::cos(t);
    double my = cls > 0 ? std::sin(t) : 0.5 - std::sin(t);
    inst.X(i, 0) = mx + sigma * sgpc::standard_normal(rng);
    inst.X(i, 1) = my + sigma * sgpc::standard_normal(rng);
  }
  inst.hp.v0 = 1.0;
  inst.hp.sigma2 = 1.0;
  inst.hp.b = 0.0;
  return inst;
}

/// Two overlapping Gaussian blobs in 2-D, labels by blob; Bayes-suboptimal
/// enough that losses stay informative.
inline Instance gaussian_mixture(int n, std::uint64_t seed,
                                 double separation = 2.0) {
  sgpc::Rng rng(seed);
  Instance inst;
  inst.X.resize(n, 2);
  inst.y.resize(n);
  for (int i = 0; i < n; ++i) {
    double cls = i % 2 == 0 ? 1.0 : -1.0;
    inst.y[i] = cls;
    inst.X(i, 0) = 0.5 * separation * cls + sgpc::standard_normal(rng);
    inst.X(i, 1) = 0.5 * separation * cls + sgpc::standard_normal(rng);
  }
  inst.hp.v0 = 1.0;
  inst.hp.sigma2 = 1.0;
  inst.hp.b = 0.0;
  return inst;
}

}  // namespace testutil
