// SPDX-License-Identifier: Apache-2.0
//
// Electromagnetic model of a flexible reconfigurable intelligent surface:
// homogenized sheet coefficients, TM reflect-array synthesis, the varactor
// unit-cell circuit, the fitted phase/angle amplitude model, phase codebooks
// and per-element incidence geometry.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "frisim/errors.hpp"
#include "frisim/geometry.hpp"

namespace frisim::em {

using cplx = std::complex<double>;

// Free-space wave impedance, rounded as in the reference unit-cell model.
inline constexpr double kEta0 = 377.0;
// Rounded to the same precision as kEta0 so that both constants describe the
// same (slightly idealized) vacuum.
inline constexpr double kSpeedOfLight = 3.0e8;
// Relative threshold below which a denominator counts as zero.
inline constexpr double kSingularTol = 1e-15;

inline double wavelength(double frequency_hz) { return kSpeedOfLight / frequency_hz; }
inline double wavenumber(double frequency_hz) {
  return 2.0 * std::numbers::pi * frequency_hz / kSpeedOfLight;
}

// Scalar electric surface admittance Y_e (S) and magnetic surface impedance Z_m (ohm).
struct SurfaceParams {
  cplx admittance;
  cplx impedance;

  // True when both quantities are purely imaginary, i.e. the sheet is passive
  // and non-dissipative.
  bool lossless(double rel_tol = 1e-12) const {
    auto imag_only = [rel_tol](cplx v) { return std::abs(v.real()) <= rel_tol * std::abs(v); };
    return imag_only(admittance) && imag_only(impedance);
  }
};

struct SheetCoefficients {
  cplx reflection;
  cplx transmission;
};

// Normal-incidence reflection and transmission of a homogeneous sheet with
// co-located electric and magnetic responses.
inline SheetCoefficients rt_from_surface_params(const SurfaceParams& sp) {
  const cplx eta_y = kEta0 * sp.admittance;
  const cplx den_e = 2.0 + eta_y;
  const cplx den_m = 2.0 * kEta0 + sp.impedance;
  if (std::abs(den_e) <= kSingularTol * (2.0 + std::abs(eta_y)))
    throw SingularSurface("rt_from_surface_params: 2 + eta0*Ye vanishes");
  if (std::abs(den_m) <= kSingularTol * (2.0 * kEta0 + std::abs(sp.impedance)))
    throw SingularSurface("rt_from_surface_params: 2*eta0 + Zm vanishes");

  const cplx cross_term = 2.0 * (kEta0 * kEta0 * sp.admittance - sp.impedance) / (den_e * den_m);
  const cplx r = -cross_term;
  const cplx t = -(-2.0 + eta_y) / den_e + cross_term;
  return {r, t};
}

// |A_r| that makes the reflected power through the surface normal match the
// incident power.
inline double reflected_amplitude_norm(double incidence_deg, double reflection_deg) {
  const double ci = std::cos(deg2rad(incidence_deg));
  const double cr = std::cos(deg2rad(reflection_deg));
  if (!(cr > 1e-12))
    throw DomainError("reflected_amplitude_norm: cos(reflection angle) must be positive");
  if (ci < 0.0) throw DomainError("reflected_amplitude_norm: incidence beyond grazing");
  return std::sqrt(ci / cr);
}

// Point-wise Y_e(x), Z_m(x) that turn a TM plane wave incident at
// incidence_deg into a reflected TM wave at reflection_deg with complex
// amplitude reflected_amplitude (relative to the incident field).
inline SurfaceParams tm_surface_synthesis(double incidence_deg, double reflection_deg,
                                          cplx reflected_amplitude, double x_m,
                                          double frequency_hz) {
  if (!(std::abs(incidence_deg) < 90.0) || !(std::abs(reflection_deg) < 90.0))
    throw DomainError("tm_surface_synthesis: angles must lie strictly inside (-90, 90) degrees");
  const double k0 = wavenumber(frequency_hz);
  const double ti = deg2rad(incidence_deg), tr = deg2rad(reflection_deg);
  const cplx j{0.0, 1.0};
  const cplx ei = std::exp(-j * k0 * std::sin(ti) * x_m);
  const cplx er = reflected_amplitude * std::exp(-j * k0 * std::sin(tr) * x_m);

  const cplx magnetic = ei - er;                                  // tangential H, in units of 1/eta0
  const cplx electric = std::cos(ti) * ei + std::cos(tr) * er;    // tangential E
  const double scale = std::abs(ei) + std::abs(er);
  if (std::abs(electric) <= kSingularTol * scale)
    throw SingularSurface("tm_surface_synthesis: Ye denominator vanishes");
  if (std::abs(magnetic) <= kSingularTol * scale)
    throw SingularSurface("tm_surface_synthesis: Zm denominator vanishes");

  return {(2.0 / kEta0) * magnetic / electric, 2.0 * kEta0 * electric / magnetic};
}

// Input impedance of a grounded dielectric slab viewed as a shorted line.
inline cplx short_line_impedance(double frequency_hz, double eps_r, double thickness_m) {
  if (!(frequency_hz > 0.0)) throw DomainError("short_line_impedance: frequency must be positive");
  if (!(eps_r >= 1.0)) throw DomainError("short_line_impedance: eps_r must be >= 1");
  if (!(thickness_m >= 0.0)) throw DomainError("short_line_impedance: thickness must be >= 0");
  const double n = std::sqrt(eps_r);
  const double arg = 2.0 * std::numbers::pi * frequency_hz * n * thickness_m / kSpeedOfLight;
  // distance from the nearest pole pi/2 + k*pi
  const double shifted = arg - std::numbers::pi / 2.0;
  const double to_pole = std::abs(shifted - std::numbers::pi * std::round(shifted / std::numbers::pi));
  if (to_pole < 1e-9) throw DomainError("short_line_impedance: tangent pole");
  return {0.0, kEta0 / n * std::tan(arg)};
}

// Lumped components of the unit cell at one incidence angle.
struct CellComponents {
  double bottom_inductance;  // L_B (H)
  double top_inductance;     // L_T (H)
  double top_resistance;     // R_T (ohm)
  double top_capacitance;    // C_T (F)
};

struct AngleSample {
  double incidence_deg;
  CellComponents components;
};

struct CircuitParams {
  CellComponents normal{15.83e-9, 38.26e-9, 2.2, 15.6e-12};
  double varactor_min = 0.63e-12;  // F
  double varactor_max = 2.67e-12;  // F
  double frequency_hz = 0.839e9;
  double eps_r = 4.4;
  double substrate_m = 1.6e-3;
  // Optional per-angle table (ascending incidence). Empty means the
  // normal-incidence components are used at every angle.
  std::vector<AngleSample> angle_table;

  void validate() const {
    const auto& c = normal;
    if (!(c.bottom_inductance > 0 && c.top_inductance > 0 && c.top_capacitance > 0))
      throw DomainError("CircuitParams: L_B, L_T, C_T must be positive");
    if (!(c.top_resistance >= 0)) throw DomainError("CircuitParams: R_T must be >= 0");
    if (!(varactor_min > 0 && varactor_min <= varactor_max))
      throw DomainError("CircuitParams: need 0 < C_min <= C_max");
    if (!(frequency_hz > 0)) throw DomainError("CircuitParams: frequency must be positive");
    if (!(eps_r >= 1.0)) throw DomainError("CircuitParams: eps_r must be >= 1");
    if (!(substrate_m > 0)) throw DomainError("CircuitParams: substrate thickness must be positive");
  }

  CellComponents at(double incidence_deg) const {
    if (angle_table.empty()) return normal;
    if (incidence_deg <= angle_table.front().incidence_deg) return angle_table.front().components;
    if (incidence_deg >= angle_table.back().incidence_deg) return angle_table.back().components;
    auto hi = std::upper_bound(angle_table.begin(), angle_table.end(), incidence_deg,
                               [](double v, const AngleSample& s) { return v < s.incidence_deg; });
    auto lo = std::prev(hi);
    const double w = (incidence_deg - lo->incidence_deg) / (hi->incidence_deg - lo->incidence_deg);
    auto mix = [w](double a, double b) { return a + w * (b - a); };
    const auto& a = lo->components;
    const auto& b = hi->components;
    return {mix(a.bottom_inductance, b.bottom_inductance), mix(a.top_inductance, b.top_inductance),
            mix(a.top_resistance, b.top_resistance), mix(a.top_capacitance, b.top_capacitance)};
  }
};

// Impedance of the unit cell: L_B in parallel with the series R_T, L_T, C_T
// and varactor branch.
inline cplx unit_cell_impedance(double incidence_deg, double varactor_f, const CircuitParams& cp) {
  const auto c = cp.at(incidence_deg);
  const double w = 2.0 * std::numbers::pi * cp.frequency_hz;
  const cplx j{0.0, 1.0};
  const cplx shunt = j * w * c.bottom_inductance;
  const cplx series = c.top_resistance + j * w * c.top_inductance + 1.0 / (j * w * c.top_capacitance) +
                      1.0 / (j * w * varactor_f);
  return shunt * series / (shunt + series);
}

inline cplx unit_cell_gamma(double incidence_deg, double varactor_f, const CircuitParams& cp) {
  if (!(incidence_deg >= 0.0 && incidence_deg < 90.0))
    throw DomainError("unit_cell_gamma: incidence must lie in [0, 90) degrees");
  if (!(varactor_f >= cp.varactor_min && varactor_f <= cp.varactor_max))
    throw DomainError("unit_cell_gamma: varactor capacitance outside its range");

  // Admittance form so that the parallel resonance (Z -> inf) stays finite.
  const auto c = cp.at(incidence_deg);
  const double w = 2.0 * std::numbers::pi * cp.frequency_hz;
  const cplx j{0.0, 1.0};
  const cplx series = c.top_resistance + j * w * c.top_inductance + 1.0 / (j * w * c.top_capacitance) +
                      1.0 / (j * w * varactor_f);
  if (std::abs(series) <= kSingularTol * kEta0) return {-1.0, 0.0};
  const cplx y = 1.0 / (j * w * c.bottom_inductance) + 1.0 / series;
  return (1.0 - kEta0 * y) / (1.0 + kEta0 * y);
}

enum class AngleUnit { degrees, radians };

// Weights of the trigonometric/polynomial amplitude model
//   delta = p1 + p2 sin(theta) - p3 cos(theta) + p4 i + p5 i^2
//           + p6 sin(theta) i + p7 cos(theta) i
// with the incidence i in `unit`.
class FitCoefficients {
 public:
  static constexpr double kMaxIncidenceDeg = 45.0;

  // Throws DomainError if delta leaves (0, 1] anywhere on the 1-degree grid.
  explicit FitCoefficients(const std::array<double, 7>& p, AngleUnit unit = AngleUnit::degrees)
      : p_(p), unit_(unit) {
    for (int theta = 0; theta < 360; ++theta)
      for (int iota = 0; iota <= 45; ++iota) {
        const double d = raw(deg2rad(theta), iota);
        if (!(d > 0.0 && d <= 1.0))
          throw DomainError("FitCoefficients: fitted amplitude leaves (0, 1] on the validity grid");
      }
  }

  static FitCoefficients published() {
    return FitCoefficients({0.8816, 0.0473, -0.1010, 0.0004, -0.000019, 0.000055, 0.000321});
  }

  const std::array<double, 7>& weights() const { return p_; }
  AngleUnit unit() const { return unit_; }

  // Unclamped polynomial value.
  double raw(double theta_rad, double incidence_deg) const {
    const double i = unit_ == AngleUnit::degrees ? incidence_deg : deg2rad(incidence_deg);
    const double s = std::sin(theta_rad), c = std::cos(theta_rad);
    return p_[0] + p_[1] * s - p_[2] * c + p_[3] * i + p_[4] * i * i + p_[5] * s * i + p_[6] * c * i;
  }

 private:
  std::array<double, 7> p_;
  AngleUnit unit_;
};

struct FittedAmplitude {
  double value;
  bool clamped;
};

inline FittedAmplitude fitted_amplitude(double theta_rad, double incidence_deg, const FitCoefficients& p) {
  if (!(incidence_deg >= 0.0 && incidence_deg <= FitCoefficients::kMaxIncidenceDeg))
    throw DomainError("fitted_amplitude: incidence must lie in [0, 45] degrees");
  const double raw = p.raw(theta_rad, incidence_deg);
  const double v = std::clamp(raw, 0.0, 1.0);
  return {v, v != raw};
}

// Index of the nearest codeword 2*pi*k/2^bits under circular distance; an
// exact tie goes to the smaller codeword.
inline int quantize_phase_index(double theta_rad, int bits) {
  if (bits < 1 || bits > 3) throw DomainError("quantize_phase: bits must be 1, 2 or 3");
  const int n = 1 << bits;
  const double step = 2.0 * std::numbers::pi / n;
  const double x = wrap_two_pi(theta_rad) / step;
  int k = static_cast<int>(std::floor(x));
  const double frac = x - k;
  if (frac > 0.5) ++k;
  else if (frac == 0.5 && k + 1 == n) k = n;  // tie between the last codeword and 0
  return k % n;
}

inline double codeword(int index, int bits) {
  return 2.0 * std::numbers::pi * index / static_cast<double>(1 << bits);
}

inline double quantize_phase(double theta_rad, int bits) {
  return codeword(quantize_phase_index(theta_rad, bits), bits);
}

inline double circular_distance(double a, double b) {
  const double d = std::abs(wrap_two_pi(a) - wrap_two_pi(b));
  return std::min(d, 2.0 * std::numbers::pi - d);
}

// Placement of a uniform linear array: elements along `axis`, nominal
// boresight `normal`, `up` completing the frame.
struct RisFrame {
  Vec3 center{100.0, 0.0, 20.0};
  Vec3 axis{1.0, 0.0, 0.0};
  Vec3 normal{0.0, 1.0, 0.0};
  Vec3 up{0.0, 0.0, 1.0};
  double spacing_m = 0.5 * wavelength(0.839e9);

  Vec3 element_position(std::size_t m, std::size_t count) const {
    const double offset = (static_cast<double>(m) - 0.5 * static_cast<double>(count - 1)) * spacing_m;
    return center + axis * offset;
  }

  // Steering angle of the direction towards `target`, measured from
  // broadside within the array's plane of incidence.
  double steering_angle_deg(const Vec3& target) const {
    const Vec3 d = target - center;
    const double r = norm(d);
    if (r < 1e-6) throw DegenerateGeometry("steering angle: target at array center");
    return rad2deg(std::asin(std::clamp(dot(d, axis) / r, -1.0, 1.0)));
  }
};

struct IncidentAngle {
  double degrees;      // projected into [0, 45]
  double raw_degrees;  // unprojected angle to the rotated normal
  bool out_of_model;
};

// Angle between the ray from `source` and the element normal after rotating
// the nominal normal by bend_h about the array axis and bend_v about `up`.
inline IncidentAngle effective_incident_angle(double bend_h_deg, double bend_v_deg, const Vec3& element_pos,
                                              const Vec3& source_pos, const RisFrame& frame) {
  const Vec3 to_source = source_pos - element_pos;
  const double r = norm(to_source);
  if (r < 1e-6) throw DegenerateGeometry("effective_incident_angle: source coincides with element");
  Vec3 n = rotate(frame.normal, frame.axis, deg2rad(bend_h_deg));
  n = rotate(n, frame.up, deg2rad(bend_v_deg));
  const double c = std::clamp(dot(n, to_source) / (r * norm(n)), -1.0, 1.0);
  const double raw = rad2deg(std::acos(c));
  const bool out = raw > FitCoefficients::kMaxIncidenceDeg;
  return {out ? FitCoefficients::kMaxIncidenceDeg : raw, raw, out};
}

inline constexpr double kMaxBendDeg = 90.0;

struct RisConfiguration {
  std::vector<double> phases;           // radians, codebook members
  std::vector<double> bend_h;           // degrees
  std::vector<double> bend_v;           // degrees
  std::vector<double> incident_angles;  // degrees, in [0, 45]
  std::vector<double> amplitudes;       // in [0, 1]
  std::size_t out_of_model = 0;         // elements whose raw incidence exceeded 45 degrees
  std::size_t clamped_bends = 0;

  std::size_t size() const { return phases.size(); }
};

// Builds a configuration from raw (continuous) phases and bends: phases are
// quantized to the codebook, bends clamped to +-90 degrees, incidence angles
// derived from the source position and amplitudes from the fitted model.
inline RisConfiguration configure_ris(std::span<const double> raw_phases, std::span<const double> bend_h,
                                      std::span<const double> bend_v, int bits, const RisFrame& frame,
                                      const Vec3& source, const FitCoefficients& fit) {
  const std::size_t m_count = raw_phases.size();
  if (bend_h.size() != m_count || bend_v.size() != m_count)
    throw DimensionMismatch("configure_ris: phase and bend vectors differ in length");
  RisConfiguration cfg;
  cfg.phases.resize(m_count);
  cfg.bend_h.resize(m_count);
  cfg.bend_v.resize(m_count);
  cfg.incident_angles.resize(m_count);
  cfg.amplitudes.resize(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    auto clamp_bend = [&cfg](double b) {
      const double c = std::clamp(b, -kMaxBendDeg, kMaxBendDeg);
      if (c != b) ++cfg.clamped_bends;
      return c;
    };
    cfg.phases[m] = quantize_phase(raw_phases[m], bits);
    cfg.bend_h[m] = clamp_bend(bend_h[m]);
    cfg.bend_v[m] = clamp_bend(bend_v[m]);
    const auto angle = effective_incident_angle(cfg.bend_h[m], cfg.bend_v[m],
                                                frame.element_position(m, m_count), source, frame);
    cfg.incident_angles[m] = angle.degrees;
    if (angle.out_of_model) ++cfg.out_of_model;
    cfg.amplitudes[m] = fitted_amplitude(cfg.phases[m], angle.degrees, fit).value;
  }
  return cfg;
}

// Diagonal of Theta: delta_m * exp(j theta_m).
inline std::vector<cplx> reflection_matrix(const RisConfiguration& cfg, const FitCoefficients& fit) {
  std::vector<cplx> theta(cfg.size());
  for (std::size_t m = 0; m < cfg.size(); ++m) {
    const double a = fitted_amplitude(cfg.phases[m], cfg.incident_angles[m], fit).value;
    theta[m] = std::polar(a, cfg.phases[m]);
  }
  return theta;
}

struct FitTableRow {
  double theta_deg;
  double iota_deg;
  double delta;
  double phase_deg;
};

// Amplitude model sampled on a (theta, iota) grid, for export.
inline std::vector<FitTableRow> fit_table(const FitCoefficients& fit, double theta_step_deg = 1.0,
                                          double iota_step_deg = 1.0) {
  if (!(theta_step_deg > 0 && iota_step_deg > 0)) throw DomainError("fit_table: steps must be positive");
  std::vector<FitTableRow> rows;
  for (double t = 0.0; t < 360.0 - 1e-9; t += theta_step_deg)
    for (double i = 0.0; i <= FitCoefficients::kMaxIncidenceDeg + 1e-9; i += iota_step_deg) {
      const double iota = std::min(i, FitCoefficients::kMaxIncidenceDeg);
      rows.push_back({t, iota, fitted_amplitude(deg2rad(t), iota, fit).value, t});
    }
  return rows;
}

}  // namespace frisim::em
