// SPDX-License-Identifier: Apache-2.0
//
// Covertness: Willie observes the received power |y_w|^2, which is
// exponential with mean lambda0 (public stream only) or lambda1 (public plus
// covert) for Gaussian codebooks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "frisim/errors.hpp"
#include "frisim/noma.hpp"

namespace frisim::covert {

struct Lambdas {
  double h0;  // lambda0
  double h1;  // lambda1
};

struct KlPair {
  double d01;  // D(p0 || p1)
  double d10;  // D(p1 || p0)
  double max() const { return std::max(d01, d10); }
};

struct Radiometer {
  double threshold;   // +inf when the hypotheses coincide
  double error_prob;  // P_FA + P_MD at the threshold
};

struct CovertStats {
  double lambda0 = 0, lambda1 = 0;
  double kl01 = 0, kl10 = 0;
  double tau_star = 0;
  double xi_star = 1;
  bool c1_ok = true;
};

inline Lambdas lambdas(const noma::NomaParams& np, double gain_w) {
  const double s = np.transmit_power * gain_w;
  return {np.beta * s + np.noise_power, s + np.noise_power};
}

inline KlPair kl_pair(double lambda0, double lambda1) {
  if (!(lambda0 > 0.0 && lambda1 > 0.0)) throw DomainError("kl_pair: variances must be positive");
  const double r = lambda1 / lambda0;
  return {std::log(r) + 1.0 / r - 1.0, -std::log(r) + r - 1.0};
}

// Both KL directions within 2*eps^2.
inline bool c1_satisfied(double lambda0, double lambda1, double eps) {
  return kl_pair(lambda0, lambda1).max() <= 2.0 * eps * eps;
}

inline double false_alarm(double lambda0, double tau) { return std::exp(-tau / lambda0); }
inline double missed_detection(double lambda1, double tau) { return -std::expm1(-tau / lambda1); }

inline double detection_error(double lambda0, double lambda1, double tau) {
  return false_alarm(lambda0, tau) + missed_detection(lambda1, tau);
}

// Threshold minimizing P_FA + P_MD for a single-sample radiometer.
inline Radiometer optimal_radiometer(double lambda0, double lambda1) {
  if (!(lambda0 > 0.0 && lambda1 > 0.0)) throw DomainError("optimal_radiometer: variances must be positive");
  if (lambda1 == lambda0) return {std::numeric_limits<double>::infinity(), 1.0};
  const double lo = std::min(lambda0, lambda1), hi = std::max(lambda0, lambda1);
  const double tau = lo * hi / (hi - lo) * std::log(hi / lo);
  const double xi = lambda1 > lambda0 ? detection_error(lambda0, lambda1, tau)
                                      : 2.0 - detection_error(lambda0, lambda1, tau);
  return {tau, std::clamp(xi, 0.0, 1.0)};
}

inline double pinsker_bound(double kl) {
  if (!(kl >= 0.0)) throw DomainError("pinsker_bound: divergence must be non-negative");
  return std::max(0.0, 1.0 - std::sqrt(kl / 2.0));
}

inline CovertStats covert_stats(const noma::NomaParams& np, double gain_w, double eps) {
  const auto l = lambdas(np, gain_w);
  const auto kl = kl_pair(l.h0, l.h1);
  const auto rad = optimal_radiometer(l.h0, l.h1);
  return {l.h0, l.h1, kl.d01, kl.d10, rad.threshold, rad.error_prob, kl.max() <= 2.0 * eps * eps};
}

struct DepEstimate {
  double xi;
  double false_alarm;
  double missed_detection;
  double std_error;
};

// Monte-Carlo estimate of P_FA + P_MD at threshold tau with n draws under
// each hypothesis.
template <class Rng>
DepEstimate dep_monte_carlo(double lambda0, double lambda1, double tau, std::uint64_t n, Rng& rng) {
  if (!(lambda0 > 0.0 && lambda1 > 0.0)) throw DomainError("dep_monte_carlo: variances must be positive");
  if (n == 0) throw DomainError("dep_monte_carlo: need at least one sample");
  std::exponential_distribution<double> h0(1.0 / lambda0), h1(1.0 / lambda1);
  std::uint64_t alarms = 0, misses = 0;
  for (std::uint64_t i = 0; i < n; ++i) alarms += h0(rng) > tau;
  for (std::uint64_t i = 0; i < n; ++i) misses += h1(rng) <= tau;
  const double nd = static_cast<double>(n);
  const double pfa = alarms / nd, pmd = misses / nd;
  const double se = std::sqrt(pfa * (1.0 - pfa) / nd + pmd * (1.0 - pmd) / nd);
  return {pfa + pmd, pfa, pmd, se};
}

}  // namespace frisim::covert
