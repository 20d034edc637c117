// SPDX-License-Identifier: Apache-2.0
//
// Channel generation: LoS UAV-UAV links, Rician ground links, the array
// steering vector of the surface and cascaded composites through Theta.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "frisim/em_core.hpp"
#include "frisim/errors.hpp"
#include "frisim/geometry.hpp"

namespace frisim::channel {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

struct ChannelParams {
  double gamma0 = 0.1;       // reference gain at 1 m (linear)
  double kappa = 10.0;       // Rician factor (linear); +inf means pure LoS
  double alpha_los = 2.0;
  double alpha_nlos = 3.0;
  double noise_power = 1e-8; // W
  // Scale both Rician components by sqrt(gamma0), as the LoS UAV link and
  // the array steering vector do.
  bool gamma0_in_rician = true;

  void validate() const {
    if (!(gamma0 > 0)) throw DomainError("ChannelParams: gamma0 must be positive");
    if (!(kappa >= 0)) throw DomainError("ChannelParams: kappa must be >= 0");
    if (!(alpha_los >= 1 && alpha_nlos >= alpha_los))
      throw DomainError("ChannelParams: need alpha_nlos >= alpha_los >= 1");
    if (!(noise_power > 0)) throw DomainError("ChannelParams: noise power must be positive");
  }

  double los_weight() const {
    return std::isinf(kappa) ? 1.0 : std::sqrt(kappa / (kappa + 1.0));
  }
  double nlos_weight() const {
    return std::isinf(kappa) ? 0.0 : std::sqrt(1.0 / (kappa + 1.0));
  }
  double rician_scale() const { return gamma0_in_rician ? std::sqrt(gamma0) : 1.0; }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

inline void require_reference_distance(double d) {
  if (!(d >= 1.0)) throw DomainError("channel: distance below the 1 m reference distance");
}

// Unit-variance circularly-symmetric complex Gaussian.
template <class Rng>
cplx complex_gaussian(Rng& rng) {
  std::normal_distribution<double> n(0.0, std::numbers::sqrt2 / 2.0);
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline cplx los_channel(double d, const ChannelParams& cp) {
  require_reference_distance(d);
  return {std::sqrt(cp.gamma0) * std::pow(d, -cp.alpha_los / 2.0), 0.0};
}

// Deterministic part of a scalar Rician link.
inline cplx rician_mean(double d, cplx los_phase, const ChannelParams& cp) {
  require_reference_distance(d);
  return cp.los_weight() * cp.rician_scale() * los_phase * std::pow(d, -cp.alpha_los / 2.0);
}

template <class Rng>
cplx rician_sample(double d, cplx los_phase, const ChannelParams& cp, Rng& rng) {
  const cplx scattered = complex_gaussian(rng);
  return rician_mean(d, los_phase, cp) +
         cp.nlos_weight() * cp.rician_scale() * scattered * std::pow(d, -cp.alpha_nlos / 2.0);
}

// sqrt(gamma0) * exp(-j*pi*m*sin(iota)) * d^(-alpha_L/2), m = 0..M-1.
inline CVec ris_los_vector(std::size_t count, double steering_deg, double d, const ChannelParams& cp) {
  if (count < 1) throw DomainError("ris_los_vector: need at least one element");
  require_reference_distance(d);
  const double amp = std::sqrt(cp.gamma0) * std::pow(d, -cp.alpha_los / 2.0);
  const double s = std::sin(deg2rad(steering_deg));
  CVec v(count);
  for (std::size_t m = 0; m < count; ++m) v[m] = std::polar(amp, -std::numbers::pi * static_cast<double>(m) * s);
  return v;
}

inline CVec ris_rician_mean(std::size_t count, double steering_deg, double d, const ChannelParams& cp) {
  CVec v = ris_los_vector(count, steering_deg, d, cp);
  for (auto& x : v) x *= cp.los_weight();
  return v;
}

template <class Rng>
CVec ris_rician_sample(std::size_t count, double steering_deg, double d, const ChannelParams& cp, Rng& rng) {
  CVec v = ris_rician_mean(count, steering_deg, d, cp);
  const double scatter = cp.nlos_weight() * cp.rician_scale() * std::pow(d, -cp.alpha_nlos / 2.0);
  for (auto& x : v) x += scatter * complex_gaussian(rng);
  return v;
}

// h_direct + sum_m conj(h_rx[m]) * theta[m] * h_af[m]
inline cplx cascaded_channel(cplx h_direct, std::span<const cplx> h_rx, std::span<const cplx> theta,
                             std::span<const cplx> h_af) {
  if (h_rx.size() != theta.size() || h_af.size() != theta.size())
    throw DimensionMismatch("cascaded_channel: vector lengths differ");
  cplx acc = h_direct;
  for (std::size_t m = 0; m < theta.size(); ++m) acc += std::conj(h_rx[m]) * theta[m] * h_af[m];
  return acc;
}

struct ChannelSet {
  cplx ab, ac, aw;
  CVec af, fb, fc, fw;
  cplx b, c, w;  // composites, valid after compose()

  void compose(std::span<const cplx> theta) {
    b = cascaded_channel(ab, fb, theta, af);
    c = cascaded_channel(ac, fc, theta, af);
    w = cascaded_channel(aw, fw, theta, af);
  }

  friend bool operator==(const ChannelSet&, const ChannelSet&) = default;
};

struct Nodes {
  Vec3 alice, bob, carol, willie;
};

// Independent generator per link. Link k is seeded from (master seed, k), so
// appending links never shifts the draws of existing ones.
class LinkStreams {
 public:
  enum Link : std::size_t { kAliceCarol = 0, kAliceWillie, kAliceRis, kRisBob, kRisCarol, kRisWillie, kCount };

  explicit LinkStreams(std::uint64_t master_seed) {
    for (std::size_t k = 0; k < kCount; ++k) {
      std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                        static_cast<std::uint32_t>(k)};
      streams_[k].seed(seq);
    }
  }

  std::mt19937_64& operator[](Link k) { return streams_[k]; }

 private:
  std::array<std::mt19937_64, kCount> streams_;
};

// Geometry-aware channel generator for the four-node scenario.
class ChannelModel {
 public:
  ChannelModel(ChannelParams params, em::RisFrame frame, std::size_t elements, double carrier_hz)
      : params_(params), frame_(frame), elements_(elements), wavelength_(em::wavelength(carrier_hz)) {}

  const ChannelParams& params() const { return params_; }
  const em::RisFrame& frame() const { return frame_; }
  std::size_t elements() const { return elements_; }

  // Unit-modulus LoS phase of a scalar link, fixed by its length.
  cplx los_phase(double d) const {
    return std::polar(1.0, -2.0 * std::numbers::pi * std::fmod(d / wavelength_, 1.0));
  }

  // Mean (LoS) channels for the given node positions; composites unset.
  ChannelSet expected(const Nodes& n) const {
    ChannelSet s;
    s.ab = los_channel(distance(n.alice, n.bob), params_);
    const double d_ac = distance(n.alice, n.carol), d_aw = distance(n.alice, n.willie);
    s.ac = rician_mean(d_ac, los_phase(d_ac), params_);
    s.aw = rician_mean(d_aw, los_phase(d_aw), params_);
    s.af = ris_link_mean(n.alice);
    s.fb = ris_link_mean(n.bob);
    s.fc = ris_link_mean(n.carol);
    s.fw = ris_link_mean(n.willie);
    return s;
  }

  ChannelSet sample(const Nodes& n, LinkStreams& rng) const {
    using L = LinkStreams;
    ChannelSet s;
    s.ab = los_channel(distance(n.alice, n.bob), params_);
    const double d_ac = distance(n.alice, n.carol), d_aw = distance(n.alice, n.willie);
    s.ac = rician_sample(d_ac, los_phase(d_ac), params_, rng[L::kAliceCarol]);
    s.aw = rician_sample(d_aw, los_phase(d_aw), params_, rng[L::kAliceWillie]);
    s.af = ris_link_sample(n.alice, rng[L::kAliceRis]);
    s.fb = ris_link_sample(n.bob, rng[L::kRisBob]);
    s.fc = ris_link_sample(n.carol, rng[L::kRisCarol]);
    s.fw = ris_link_sample(n.willie, rng[L::kRisWillie]);
    return s;
  }

 private:
  CVec ris_link_mean(const Vec3& p) const {
    return ris_rician_mean(elements_, frame_.steering_angle_deg(p), distance(p, frame_.center), params_);
  }
  CVec ris_link_sample(const Vec3& p, std::mt19937_64& rng) const {
    return ris_rician_sample(elements_, frame_.steering_angle_deg(p), distance(p, frame_.center), params_, rng);
  }

  ChannelParams params_;
  em::RisFrame frame_;
  std::size_t elements_;
  double wavelength_;
};

}  // namespace frisim::channel
