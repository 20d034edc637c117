// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "frisim/errors.hpp"
#include "frisim/geometry.hpp"

namespace frisim::uav {

struct UavState {
  Vec3 position;
  double speed = 0.0;    // m/s, in [0, v_max]
  double heading = 0.0;  // rad, [0, 2pi)
  double pitch = std::numbers::pi / 2.0;  // rad, [0, pi); pi/2 is level flight

  friend bool operator==(const UavState&, const UavState&) = default;
};

struct KinematicLimits {
  double v_max = 5.0;   // m/s
  double ac_max = 2.0;  // m/s^2
  double z_min = 35.0;  // m
  double z_max = 60.0;  // m
  double d_min = 60.0;  // m
  double dt = 1.0;      // s

  void validate() const {
    if (!(v_max > 0 && ac_max > 0 && z_min > 0 && d_min > 0 && dt > 0))
      throw DomainError("KinematicLimits: all limits must be positive");
    if (!(z_min < z_max)) throw DomainError("KinematicLimits: need z_min < z_max");
  }
};

// One slot of control. |accel| is the commanded acceleration magnitude, its
// sign the direction (speed up / slow down).
struct UavCommand {
  double accel = 0.0;
  double heading = 0.0;
  double pitch = std::numbers::pi / 2.0;
};

struct StepFlags {
  bool accel_clamped = false;
  bool speed_clamped = false;
  bool altitude_clamped = false;
  bool pitch_clamped = false;

  bool any() const { return accel_clamped || speed_clamped || altitude_clamped || pitch_clamped; }
};

struct StepResult {
  UavState state;
  StepFlags flags;
};

inline constexpr double kMaxPitch = std::numbers::pi - 1e-12;

inline Vec3 flight_direction(double heading, double pitch) {
  const double elevation = pitch - std::numbers::pi / 2.0;
  const double ce = std::cos(elevation);
  return {ce * std::cos(heading), ce * std::sin(heading), std::sin(elevation)};
}

// Advances one slot of length `dt`. Speed follows v(t) = clamp(v + a t, 0,
// v_max) exactly, so constant commands compose additively over sub-steps.
// Every out-of-range quantity is projected and reported in the flags.
inline StepResult step_kinematics(const UavState& s, const UavCommand& cmd, const KinematicLimits& lim,
                                  double dt) {
  StepFlags f;
  double mag = std::abs(cmd.accel);
  if (mag > lim.ac_max) {
    mag = lim.ac_max;
    f.accel_clamped = true;
  }
  const double a = std::copysign(mag, cmd.accel);
  const double v0 = std::clamp(s.speed, 0.0, lim.v_max);

  double dist = 0.0, v1 = 0.0;
  const double bound = a >= 0.0 ? lim.v_max : 0.0;
  const double t_sat = a != 0.0 ? (bound - v0) / a : std::numeric_limits<double>::infinity();
  if (t_sat >= dt) {
    v1 = v0 + a * dt;
    dist = v0 * dt + 0.5 * a * dt * dt;
  } else {
    v1 = bound;
    dist = v0 * t_sat + 0.5 * a * t_sat * t_sat + bound * (dt - t_sat);
    f.speed_clamped = true;
  }
  v1 = std::clamp(v1, 0.0, lim.v_max);

  UavState out;
  out.heading = wrap_two_pi(cmd.heading);
  out.pitch = std::clamp(cmd.pitch, 0.0, kMaxPitch);
  f.pitch_clamped = out.pitch != cmd.pitch;
  out.speed = v1;
  out.position = s.position + flight_direction(out.heading, out.pitch) * dist;
  const double z = std::clamp(out.position.z, lim.z_min, lim.z_max);
  if (z != out.position.z) {
    out.position.z = z;
    f.altitude_clamped = true;
  }
  return {out, f};
}

inline StepResult step_kinematics(const UavState& s, const UavCommand& cmd, const KinematicLimits& lim) {
  return step_kinematics(s, cmd, lim, lim.dt);
}

struct Separation {
  bool ok;
  double distance;
};

// Inclusive: exactly d_min apart is safe.
inline Separation check_separation(const Vec3& a, const Vec3& b, double d_min) {
  const double d = distance(a, b);
  return {d >= d_min, d};
}

// Moves `follower` horizontally away from `leader` until the pair is d_min
// apart, keeping both altitudes. Returns true when a projection happened.
inline bool enforce_separation(const Vec3& leader, Vec3& follower, double d_min) {
  const Vec3 d = follower - leader;
  if (norm(d) >= d_min) return false;
  const double planar = std::hypot(d.x, d.y);
  const double ux = planar > 0.0 ? d.x / planar : 1.0;
  const double uy = planar > 0.0 ? d.y / planar : 0.0;
  const double z = follower.z;
  double h = std::sqrt(std::max(0.0, d_min * d_min - d.z * d.z));
  for (;;) {
    follower = {leader.x + h * ux, leader.y + h * uy, z};
    if (distance(leader, follower) >= d_min) break;
    h = std::nextafter(h, std::numeric_limits<double>::infinity());
  }
  return true;
}

}  // namespace frisim::uav
