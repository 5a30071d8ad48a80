#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sgpc {

namespace detail {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Margins beyond this are clamped before evaluation; keeps downstream
// products finite while leaving realistic values untouched.
constexpr double kMarginClamp = 700.0;

// Direct erfc-based evaluation loses relative accuracy in the lower tail
// long before it underflows (~z = -37); switch to the tail expansion here.
constexpr double kTailSwitch = -5.0;

inline double clamp_margin(double z) {
  if (z > kMarginClamp) return kMarginClamp;
  if (z < -kMarginClamp) return -kMarginClamp;
  return z;
}

// Upper-tail Mills ratio R(x) = Q(x)/N(x;0,1) for x >= 5 via the Laplace
// continued fraction R(x) = 1/(x + 1/(x + 2/(x + 3/(...)))). Depth 48 gives
// relative error below 1e-17 over the whole branch.
inline double mills_ratio_cf(double x) {
  double f = x;
  for (int k = 48; k >= 1; --k) {
    f = x + static_cast<double>(k) / f;
  }
  return 1.0 / f;
}

inline double norm_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

}  // namespace detail

/// log of the standard normal CDF, accurate over the full double range.
/// Never returns -inf for finite input.
inline double log_phi_stable(double z) {
  if (std::isnan(z)) throw std::invalid_argument("log_phi_stable: NaN input");
  z = detail::clamp_margin(z);
  if (z < detail::kTailSwitch) {
    // log Phi(z) = log N(z;0,1) + log R(-z)
    return -0.5 * z * z - detail::kLogSqrt2Pi + std::log(detail::mills_ratio_cf(-z));
  }
  if (z >= 5.0) {
    // Phi(z) close to 1; log1p avoids the cancellation in log(Phi).
    return std::log1p(-0.5 * std::erfc(z * detail::kInvSqrt2));
  }
  return std::log(detail::norm_cdf(z));
}

/// Inverse Mills ratio N(z;0,1)/Phi(z). Decreasing, ~ -z + 1/(-z) as z -> -inf.
/// Underflows to 0 only where the true value is below the double range
/// (z beyond ~37.6).
inline double inverse_mills(double z) {
  if (std::isnan(z)) throw std::invalid_argument("inverse_mills: NaN input");
  z = detail::clamp_margin(z);
  if (z < detail::kTailSwitch) {
    return 1.0 / detail::mills_ratio_cf(-z);
  }
  return detail::norm_pdf(z) / detail::norm_cdf(z);
}

/// Standard normal CDF evaluated without intermediate underflow for z >= -37;
/// below that the true value is denormal and 0 is returned.
inline double phi(double z) {
  if (std::isnan(z)) throw std::invalid_argument("phi: NaN input");
  z = detail::clamp_margin(z);
  if (z < detail::kTailSwitch) return std::exp(log_phi_stable(z));
  return detail::norm_cdf(z);
}

/// The probit-likelihood primitives bundled for one standardized margin.
struct ProbitTerms {
  double z;
  double log_phi;
  double mills;
};

inline ProbitTerms probit_terms(double z) {
  return ProbitTerms{detail::clamp_margin(z), log_phi_stable(z), inverse_mills(z)};
}

/// Compensated (Neumaier) accumulator; keeps reductions order-insensitive
/// to well below 1e-12 for the sums appearing in the losses.
class NeumaierSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace sgpc
