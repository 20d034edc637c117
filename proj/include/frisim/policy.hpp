// SPDX-License-Identifier: Apache-2.0
//
// Parameterized policies for the baseline optimizers and the episode
// objective they maximize.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "frisim/covert.hpp"
#include "frisim/env.hpp"
#include "frisim/errors.hpp"
#include "frisim/optim.hpp"

namespace frisim::optim {

enum class MotionModel {
  schedule,  // open-loop knots over the episode
  linear,    // affine feedback on (t/T, positions, running averages)
};

enum class BetaRule {
  searched,     // beta is part of the searched motion/schedule parameters
  feasibility,  // smallest beta meeting both constraints on the predicted channels, plus a searched margin
};

enum class PhaseRule {
  greedy,  // greedy codebook alignment towards Bob on the predicted mean channels
  fixed,   // all phases at codeword 0
};

struct PolicyOptions {
  MotionModel motion = MotionModel::schedule;
  BetaRule beta = BetaRule::feasibility;
  PhaseRule phase = PhaseRule::greedy;
  std::size_t knots = 4;
  bool bends = true;  // search a bend profile (offset + linear taper per axis)
  double max_margin = 0.05;
};

inline MotionModel parse_motion(const std::string& s) {
  if (s == "schedule") return MotionModel::schedule;
  if (s == "linear") return MotionModel::linear;
  throw DomainError("unknown motion model '" + s + "'");
}

// Smallest x > 1 with x - 1 - ln x = bound (the binding KL direction).
inline double max_variance_ratio(double kl_bound) {
  if (kl_bound <= 0.0) return 1.0;
  double lo = 1.0, hi = 2.0;
  while (hi - 1.0 - std::log(hi) < kl_bound) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid - 1.0 - std::log(mid) < kl_bound ? lo : hi) = mid;
  }
  return lo;
}

// Smallest beta giving R_c >= target for public SNR s = P|h_c|^2 / sigma^2.
inline double min_beta_public(double snr_c, double target_rate) {
  const double k = std::exp2(target_rate);
  if (snr_c <= 0.0) return 1.0;
  return (k - 1.0) * (snr_c + 1.0) / (k * snr_c);
}

// Smallest beta keeping lambda1/lambda0 within the covert ratio for Willie SNR s.
inline double min_beta_covert(double snr_w, double eps) {
  if (snr_w <= 0.0) return 0.0;
  const double x = max_variance_ratio(2.0 * eps * eps);
  return ((snr_w + 1.0) / x - 1.0) / snr_w;
}

// Maps a flat parameter vector to actions, slot by slot.
class Policy {
 public:
  Policy(const ScenarioConfig& cfg, PolicyOptions opt) : cfg_(cfg), opt_(opt) {
    if (opt_.knots < 1) throw DomainError("policy: knots must be >= 1");
    build_bounds();
  }

  const Bounds& bounds() const { return bounds_; }
  const PolicyOptions& options() const { return opt_; }
  std::size_t size() const { return bounds_.size(); }

  // Hover in level flight with flat bends; beta at 0.9 when searched, zero
  // margin otherwise.
  std::vector<double> neutral() const {
    std::vector<double> p;
    auto fill = [&](double v, std::size_t n) { p.insert(p.end(), n, v); };
    if (opt_.motion == MotionModel::schedule) {
      const double level = std::numbers::pi / 2.0;
      for (double v : {0.0, 0.0, 0.0, 0.0, level, level}) fill(v, opt_.knots);
      if (opt_.beta == BetaRule::searched) fill(std::clamp(0.9, cfg_.beta_min, cfg_.beta_max), opt_.knots);
    } else {
      // tanh squashing: a zero bias maps to the middle of each control box
      fill(0.0, n_controls() * (n_features() + 1));
    }
    if (opt_.bends) fill(0.0, 4);
    if (opt_.beta == BetaRule::feasibility) p.push_back(0.0);
    return p;
  }

  EnvAction act(const Environment& env, std::span<const double> params) const {
    if (params.size() != size()) throw DimensionMismatch("policy: parameter vector has wrong length");
    const auto& st = env.state();
    const std::size_t m_count = env.elements();
    EnvAction a;
    std::array<double, 7> controls{};
    if (opt_.motion == MotionModel::schedule) {
      const double tau = cfg_.slots > 1 ? static_cast<double>(st.t) / static_cast<double>(cfg_.slots - 1) : 0.0;
      for (std::size_t c = 0; c < n_controls(); ++c) controls[c] = knot_value(params.subspan(c * opt_.knots, opt_.knots), tau);
    } else {
      const auto f = features(env);
      for (std::size_t c = 0; c < n_controls(); ++c) {
        const auto w = params.subspan(c * (f.size() + 1), f.size() + 1);
        double y = w[f.size()];
        for (std::size_t i = 0; i < f.size(); ++i) y += w[i] * f[i];
        // squash the affine output into the control box
        const double lo = control_lo(c), hi = control_hi(c);
        controls[c] = lo + (hi - lo) * 0.5 * (1.0 + std::tanh(y));
      }
    }
    a.alice = {controls[0], controls[2], controls[4]};
    a.bob = {controls[1], controls[3], controls[5]};

    std::size_t off = motion_params();
    a.bend_h.assign(m_count, 0.0);
    a.bend_v.assign(m_count, 0.0);
    if (opt_.bends) {
      for (std::size_t m = 0; m < m_count; ++m) {
        const double pos = m_count > 1 ? static_cast<double>(m) / static_cast<double>(m_count - 1) - 0.5 : 0.0;
        a.bend_h[m] = std::clamp(params[off] + params[off + 1] * pos, -em::kMaxBendDeg, em::kMaxBendDeg);
        a.bend_v[m] = std::clamp(params[off + 2] + params[off + 3] * pos, -em::kMaxBendDeg, em::kMaxBendDeg);
      }
      off += 4;
    }

    // Predict the next slot's geometry and mean channels.
    EnvAction motion_only = a;
    auto next = env.preview_motion(motion_only);
    a.phases.assign(m_count, 0.0);
    auto ris = env.configure_ris(a.phases, a.bend_h, a.bend_v, next.alice.position);
    auto ch = env.channel_model().expected(env.nodes(next.alice.position, next.bob.position));
    if (opt_.phase == PhaseRule::greedy) {
      const double override_amp = cfg_.amplitude_override.value_or(-1.0);
      auto g = greedy_phase_align(ch.ab, ch.fb, ch.af, ris.incident_angles, env.fit(),
                                  static_cast<int>(cfg_.phase_bits), 10, override_amp);
      for (std::size_t m = 0; m < m_count; ++m) a.phases[m] = em::codeword(g.indices[m], static_cast<int>(cfg_.phase_bits));
      ris = env.configure_ris(a.phases, a.bend_h, a.bend_v, next.alice.position);
    }

    if (opt_.beta == BetaRule::feasibility) {
      ch.compose(env.theta(ris));
      const double noise = channel::dbm_to_watts(cfg_.noise_dbm);
      const double snr_c = cfg_.transmit_power * std::norm(ch.c) / noise;
      const double snr_w = cfg_.transmit_power * std::norm(ch.w) / noise;
      const double need = std::max(min_beta_public(snr_c, cfg_.epsilon_c), min_beta_covert(snr_w, cfg_.epsilon));
      a.beta = std::clamp(need + params[off], cfg_.beta_min, cfg_.beta_max);
    } else {
      a.beta = controls[6];
    }
    return a;
  }

 private:
  std::size_t n_controls() const { return opt_.beta == BetaRule::searched ? 7 : 6; }
  std::size_t n_features() const { return 9; }

  std::size_t motion_params() const {
    return opt_.motion == MotionModel::schedule ? n_controls() * opt_.knots : n_controls() * (n_features() + 1);
  }

  double control_lo(std::size_t c) const {
    switch (c) {
      case 0: case 1: return -cfg_.ac_max;
      case 2: case 3: return 0.0;
      case 4: case 5: return 0.0;
      default: return cfg_.beta_min;
    }
  }
  double control_hi(std::size_t c) const {
    switch (c) {
      case 0: case 1: return cfg_.ac_max;
      case 2: case 3: return 2.0 * std::numbers::pi;
      case 4: case 5: return uav::kMaxPitch;
      default: return cfg_.beta_max;
    }
  }

  // Piecewise-linear interpolation of evenly spaced knots at tau in [0, 1].
  static double knot_value(std::span<const double> k, double tau) {
    if (k.size() == 1) return k[0];
    const double x = std::clamp(tau, 0.0, 1.0) * static_cast<double>(k.size() - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(x), k.size() - 2);
    const double w = x - static_cast<double>(i);
    return k[i] + w * (k[i + 1] - k[i]);
  }

  std::vector<double> features(const Environment& env) const {
    const auto& st = env.state();
    const Vec3 c = cfg_.ris_center;
    const double scale = 100.0;
    return {static_cast<double>(st.t) / static_cast<double>(cfg_.slots),
            (st.alice.position.x - c.x) / scale, (st.alice.position.y - c.y) / scale,
            (st.alice.position.z - c.z) / scale, (st.bob.position.x - c.x) / scale,
            (st.bob.position.y - c.y) / scale,   (st.bob.position.z - c.z) / scale,
            st.avg_rate_bob / 10.0,              st.avg_rate_carol / 10.0};
  }

  void build_bounds() {
    auto push = [this](double lo, double hi) {
      bounds_.lower.push_back(lo);
      bounds_.upper.push_back(hi);
    };
    if (opt_.motion == MotionModel::schedule) {
      for (std::size_t c = 0; c < n_controls(); ++c)
        for (std::size_t k = 0; k < opt_.knots; ++k) push(control_lo(c), control_hi(c));
    } else {
      for (std::size_t c = 0; c < n_controls(); ++c)
        for (std::size_t i = 0; i <= n_features(); ++i) push(-3.0, 3.0);
    }
    if (opt_.bends) {
      push(-em::kMaxBendDeg, em::kMaxBendDeg);
      push(-2 * em::kMaxBendDeg, 2 * em::kMaxBendDeg);
      push(-em::kMaxBendDeg, em::kMaxBendDeg);
      push(-2 * em::kMaxBendDeg, 2 * em::kMaxBendDeg);
    }
    if (opt_.beta == BetaRule::feasibility) push(0.0, opt_.max_margin);
  }

  ScenarioConfig cfg_;
  PolicyOptions opt_;
  Bounds bounds_;
};

struct Rollout {
  EpisodeSummary summary;
  std::vector<SlotRecord> trace;
};

inline Rollout rollout(Environment& env, const Policy& policy, std::span<const double> params,
                       std::optional<std::uint64_t> seed = std::nullopt) {
  env.reset(seed);
  while (!env.done()) env.step(policy.act(env, params));
  return {env.summary(), env.trace()};
}

// Mean penalized reward of one episode, the scalar every baseline maximizes.
inline Objective episode_objective(const ScenarioConfig& cfg, const Policy& policy) {
  return [cfg, policy](std::span<const double> params) {
    Environment env(cfg);
    return rollout(env, policy, params).summary.mean_reward;
  };
}

}  // namespace frisim::optim
