// SPDX-License-Identifier: Apache-2.0
//
// Episode dynamics of the covert-UAV scenario: two UAVs (Alice transmitting,
// Bob receiving covertly), a ground user Carol on the public stream, a warden
// Willie, and a bendable surface between them.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "frisim/channel.hpp"
#include "frisim/config.hpp"
#include "frisim/covert.hpp"
#include "frisim/em_core.hpp"
#include "frisim/errors.hpp"
#include "frisim/noma.hpp"
#include "frisim/uav_dynamics.hpp"

namespace frisim {

// Decoded action. Vector layout (length 7 + 3M):
//   [accel_a, accel_b, heading_a, heading_b, pitch_a, pitch_b, beta,
//    phase_1..phase_M, bend_h_1..bend_h_M, bend_v_1..bend_v_M]
// Accelerations are signed (sign = speed up / slow down), angles in radians,
// phases in radians (quantized to the codebook), bends in degrees.
struct EnvAction {
  uav::UavCommand alice;
  uav::UavCommand bob;
  double beta = 0.9;
  std::vector<double> phases;
  std::vector<double> bend_h;
  std::vector<double> bend_v;

  static std::size_t dim(std::size_t elements) { return 7 + 3 * elements; }

  static EnvAction from_vector(std::span<const double> v, std::size_t elements) {
    if (v.size() != dim(elements))
      throw DimensionMismatch("action has length " + std::to_string(v.size()) + ", expected " +
                              std::to_string(dim(elements)));
    for (double x : v)
      if (!std::isfinite(x)) throw DomainError("action contains a non-finite value");
    EnvAction a;
    a.alice = {v[0], v[2], v[4]};
    a.bob = {v[1], v[3], v[5]};
    a.beta = v[6];
    const auto m = elements;
    a.phases.assign(v.begin() + 7, v.begin() + 7 + m);
    a.bend_h.assign(v.begin() + 7 + m, v.begin() + 7 + 2 * m);
    a.bend_v.assign(v.begin() + 7 + 2 * m, v.begin() + 7 + 3 * m);
    return a;
  }

  std::vector<double> to_vector() const {
    std::vector<double> v{alice.accel, bob.accel, alice.heading, bob.heading, alice.pitch, bob.pitch, beta};
    v.insert(v.end(), phases.begin(), phases.end());
    v.insert(v.end(), bend_h.begin(), bend_h.end());
    v.insert(v.end(), bend_v.begin(), bend_v.end());
    return v;
  }
};

struct EnvState {
  std::int64_t t = 0;
  channel::ChannelSet channels;
  uav::UavState alice;
  uav::UavState bob;
  double avg_rate_bob = 0.0;
  double avg_rate_carol = 0.0;

  static std::size_t dim(std::size_t elements) { return 23 + 8 * elements; }

  // [t, channels (re, im interleaved: ab, ac, aw, af[M], fb[M], fc[M], fw[M],
  //  b, c, w), q_a, q_b, v_a, v_b, avg R_b, avg R_c]
  std::vector<double> to_vector() const {
    std::vector<double> v;
    v.reserve(dim(channels.af.size()));
    v.push_back(static_cast<double>(t));
    auto put = [&v](std::complex<double> z) {
      v.push_back(z.real());
      v.push_back(z.imag());
    };
    put(channels.ab);
    put(channels.ac);
    put(channels.aw);
    for (const auto* vec : {&channels.af, &channels.fb, &channels.fc, &channels.fw})
      for (auto z : *vec) put(z);
    put(channels.b);
    put(channels.c);
    put(channels.w);
    for (const auto* q : {&alice.position, &bob.position}) {
      v.push_back(q->x);
      v.push_back(q->y);
      v.push_back(q->z);
    }
    v.push_back(alice.speed);
    v.push_back(bob.speed);
    v.push_back(avg_rate_bob);
    v.push_back(avg_rate_carol);
    return v;
  }
};

struct ActionFlags {
  bool beta_clamped = false;
  uav::StepFlags alice;
  uav::StepFlags bob;
  bool separation_projected = false;
  std::size_t bends_clamped = 0;
  std::size_t out_of_model = 0;  // elements whose incidence was projected to 45 degrees
};

struct SlotRecord {
  std::int64_t slot = 0;
  double rate_bob = 0;
  double rate_carol = 0;
  double beta = 0;
  covert::CovertStats covert;
  bool public_ok = false;  // running average of R_c meets epsilon_c
  double reward = 0;
};

struct StepInfo {
  SlotRecord record;
  double avg_rate_bob = 0;
  double avg_rate_carol = 0;
  ActionFlags flags;
};

struct StepOutcome {
  EnvState state;
  double reward;
  bool done;
  StepInfo info;
};

// Indicator penalty: 0 when the condition holds, -1 otherwise.
inline double indicator_penalty(bool holds) { return holds ? 0.0 : -1.0; }

inline double reward(double avg_rate_bob, double avg_rate_carol, bool c1_ok, const ScenarioConfig& cfg) {
  const double rate_term = cfg.rate_source() == RateSource::bob ? avg_rate_bob : avg_rate_carol;
  return rate_term + cfg.nu1 * indicator_penalty(avg_rate_carol >= cfg.epsilon_c) +
         cfg.nu2 * indicator_penalty(c1_ok);
}

struct EpisodeSummary {
  std::size_t slots = 0;
  double avg_rate_bob = 0;
  double avg_rate_carol = 0;
  double c1_fraction = 0;
  std::size_t c1_violations = 0;
  std::size_t public_violations = 0;  // slots whose running R_c average missed epsilon_c
  bool public_ok = false;             // whole-episode average R_c meets epsilon_c
  double total_reward = 0;
  double mean_reward = 0;

  bool feasible() const { return public_ok && c1_violations == 0; }
};

inline EpisodeSummary episode_metrics(std::span<const SlotRecord> trace, double epsilon_c) {
  EpisodeSummary s;
  s.slots = trace.size();
  if (trace.empty()) return s;
  double sum_b = 0, sum_c = 0;
  for (const auto& r : trace) {
    sum_b += r.rate_bob;
    sum_c += r.rate_carol;
    s.total_reward += r.reward;
    if (!r.covert.c1_ok) ++s.c1_violations;
    if (!r.public_ok) ++s.public_violations;
  }
  const double n = static_cast<double>(trace.size());
  s.avg_rate_bob = sum_b / n;
  s.avg_rate_carol = sum_c / n;
  s.c1_fraction = (n - static_cast<double>(s.c1_violations)) / n;
  s.public_ok = s.avg_rate_carol >= epsilon_c;
  s.mean_reward = s.total_reward / n;
  return s;
}

class Environment {
 public:
  explicit Environment(ScenarioConfig cfg)
      : cfg_(std::move(cfg)),
        fit_((cfg_.validate(), cfg_.fit_coefficients())),
        model_(cfg_.channel_params(), cfg_.ris_frame(), static_cast<std::size_t>(cfg_.elements), cfg_.carrier_hz),
        limits_(cfg_.limits()),
        streams_(cfg_.seed) {}

  const ScenarioConfig& config() const { return cfg_; }
  const channel::ChannelModel& channel_model() const { return model_; }
  const em::FitCoefficients& fit() const { return fit_; }
  std::size_t elements() const { return model_.elements(); }
  std::size_t state_dim() const { return EnvState::dim(elements()); }
  std::size_t action_dim() const { return EnvAction::dim(elements()); }
  const EnvState& state() const { return state_; }
  const em::RisConfiguration& ris() const { return ris_; }
  const std::vector<SlotRecord>& trace() const { return trace_; }
  bool started() const { return started_; }
  bool done() const { return started_ && state_.t >= cfg_.slots; }

  const EnvState& reset(std::optional<std::uint64_t> seed = std::nullopt) {
    streams_ = channel::LinkStreams(seed.value_or(cfg_.seed));
    state_ = EnvState{};
    state_.alice = cfg_.alice;
    state_.bob = cfg_.bob;
    sum_rate_bob_ = sum_rate_carol_ = 0.0;
    trace_.clear();
    const std::vector<double> zeros(elements(), 0.0);
    ris_ = configure_ris(zeros, zeros, zeros, state_.alice.position);
    state_.channels = model_.sample(nodes(state_.alice.position, state_.bob.position), streams_);
    state_.channels.compose(theta(ris_));
    started_ = true;
    return state_;
  }

  // Clamps every component into its box.
  EnvAction project(const EnvAction& raw, ActionFlags& flags) const {
    EnvAction a = raw;
    a.beta = std::clamp(raw.beta, cfg_.beta_min, cfg_.beta_max);
    flags.beta_clamped = a.beta != raw.beta;
    return a;
  }

  struct UavPair {
    uav::UavState alice;
    uav::UavState bob;
    ActionFlags flags;
  };

  // UAV states after applying the motion part of an action to the current state.
  UavPair preview_motion(const EnvAction& a) const {
    UavPair p;
    auto ra = uav::step_kinematics(state_.alice, a.alice, limits_);
    auto rb = uav::step_kinematics(state_.bob, a.bob, limits_);
    p.alice = ra.state;
    p.bob = rb.state;
    p.flags.alice = ra.flags;
    p.flags.bob = rb.flags;
    p.flags.separation_projected = uav::enforce_separation(p.alice.position, p.bob.position, cfg_.d_min);
    return p;
  }

  em::RisConfiguration configure_ris(std::span<const double> phases, std::span<const double> bend_h,
                                     std::span<const double> bend_v, const Vec3& source) const {
    return em::configure_ris(phases, bend_h, bend_v, static_cast<int>(cfg_.phase_bits), model_.frame(), source,
                             fit_);
  }

  // Diagonal of Theta, honoring the amplitude override.
  std::vector<std::complex<double>> theta(const em::RisConfiguration& ris) const {
    auto th = em::reflection_matrix(ris, fit_);
    if (cfg_.amplitude_override)
      for (std::size_t m = 0; m < th.size(); ++m) th[m] = std::polar(*cfg_.amplitude_override, ris.phases[m]);
    return th;
  }

  channel::Nodes nodes(const Vec3& alice, const Vec3& bob) const { return {alice, bob, cfg_.carol, cfg_.willie}; }

  StepOutcome step(std::span<const double> action) {
    return step(EnvAction::from_vector(action, elements()));
  }

  StepOutcome step(const EnvAction& raw) {
    if (!started_) throw EpisodeFinished("step called before reset");
    if (done()) throw EpisodeFinished("episode already finished");
    if (raw.phases.size() != elements() || raw.bend_h.size() != elements() || raw.bend_v.size() != elements())
      throw DimensionMismatch("action element vectors do not match the surface size");

    StepInfo info;
    const EnvAction a = project(raw, info.flags);
    auto motion = preview_motion(a);
    info.flags.alice = motion.flags.alice;
    info.flags.bob = motion.flags.bob;
    info.flags.separation_projected = motion.flags.separation_projected;

    ris_ = configure_ris(a.phases, a.bend_h, a.bend_v, motion.alice.position);
    info.flags.bends_clamped = ris_.clamped_bends;
    info.flags.out_of_model = ris_.out_of_model;

    auto ch = model_.sample(nodes(motion.alice.position, motion.bob.position), streams_);
    ch.compose(theta(ris_));

    const auto np = cfg_.noma_params(a.beta);
    SlotRecord& rec = info.record;
    rec.slot = state_.t + 1;
    rec.beta = a.beta;
    rec.rate_bob = noma::rate_bob(np, std::norm(ch.b));
    rec.rate_carol = noma::rate_carol(np, std::norm(ch.c));
    rec.covert = covert::covert_stats(np, std::norm(ch.w), cfg_.epsilon);

    sum_rate_bob_ += rec.rate_bob;
    sum_rate_carol_ += rec.rate_carol;
    state_.t += 1;
    state_.channels = std::move(ch);
    state_.alice = motion.alice;
    state_.bob = motion.bob;
    state_.avg_rate_bob = sum_rate_bob_ / static_cast<double>(state_.t);
    state_.avg_rate_carol = sum_rate_carol_ / static_cast<double>(state_.t);

    rec.public_ok = state_.avg_rate_carol >= cfg_.epsilon_c;
    rec.reward = reward(state_.avg_rate_bob, state_.avg_rate_carol, rec.covert.c1_ok, cfg_);
    info.avg_rate_bob = state_.avg_rate_bob;
    info.avg_rate_carol = state_.avg_rate_carol;
    trace_.push_back(rec);
    return {state_, rec.reward, done(), std::move(info)};
  }

  EpisodeSummary summary() const { return episode_metrics(trace_, cfg_.epsilon_c); }

 private:
  ScenarioConfig cfg_;
  em::FitCoefficients fit_;
  channel::ChannelModel model_;
  uav::KinematicLimits limits_;
  channel::LinkStreams streams_;
  EnvState state_;
  em::RisConfiguration ris_;
  std::vector<SlotRecord> trace_;
  double sum_rate_bob_ = 0.0;
  double sum_rate_carol_ = 0.0;
  bool started_ = false;
};

}  // namespace frisim
