// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "frisim/em_core.hpp"
#include "oracles.hpp"

namespace {

using frisim::Vec3;
using namespace frisim::em;
using cplx = std::complex<double>;
constexpr cplx J{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

void expect_near(cplx got, cplx want, double tol) {
  EXPECT_NEAR(got.real(), want.real(), tol);
  EXPECT_NEAR(got.imag(), want.imag(), tol);
}

TEST(SheetCoefficients, TransparentSheet) {
  auto rt = rt_from_surface_params({0.0, 0.0});
  expect_near(rt.reflection, 0.0, 1e-15);
  expect_near(rt.transmission, 1.0, 1e-15);
}

TEST(SheetCoefficients, MatchedAbsorber) {
  auto rt = rt_from_surface_params({2.0 / kEta0, 2.0 * kEta0});
  expect_near(rt.reflection, 0.0, 1e-14);
  expect_near(rt.transmission, 0.0, 1e-14);
}

TEST(SheetCoefficients, InductiveSheet) {
  auto rt = rt_from_surface_params({J * 2.0 / kEta0, 0.0});
  expect_near(rt.reflection, -(1.0 + J) / 2.0, 1e-14);
  expect_near(rt.transmission, (1.0 - J) / 2.0, 1e-14);
  EXPECT_NEAR(std::norm(rt.reflection) + std::norm(rt.transmission), 1.0, 1e-14);
}

TEST(SheetCoefficients, AgreesWithTransitionConditions) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const cplx ye{u(rng) / kEta0, u(rng) / kEta0};
    const cplx zm{u(rng) * kEta0, u(rng) * kEta0};
    auto rt = rt_from_surface_params({ye, zm});
    auto [r, t] = oracle::sheet_rt(ye, zm);
    expect_near(rt.reflection, r, 1e-12 * (1.0 + std::abs(r)));
    expect_near(rt.transmission, t, 1e-12 * (1.0 + std::abs(t)));
  }
}

TEST(SheetCoefficients, LosslessSheetsConservePower) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 10000; ++i) {
    SurfaceParams sp{J * u(rng) / kEta0, J * u(rng) * kEta0};
    ASSERT_TRUE(sp.lossless());
    auto rt = rt_from_surface_params(sp);
    ASSERT_NEAR(std::norm(rt.reflection) + std::norm(rt.transmission), 1.0, 1e-12);
  }
}

TEST(SheetCoefficients, SingularDenominators) {
  EXPECT_THROW(rt_from_surface_params({-2.0 / kEta0, 0.0}), frisim::SingularSurface);
  EXPECT_THROW(rt_from_surface_params({0.0, -2.0 * kEta0}), frisim::SingularSurface);
}

TEST(SurfaceSynthesis, QuarterPhaseReflector) {
  auto sp = tm_surface_synthesis(0.0, 0.0, J, 0.0, 1e9);
  expect_near(sp.admittance, -J * 2.0 / kEta0, 1e-15);
  expect_near(sp.impedance, J * 2.0 * kEta0, 1e-9);
  EXPECT_TRUE(sp.lossless());
}

TEST(SurfaceSynthesis, SpecularUnitReflectionIsSingular) {
  EXPECT_THROW(tm_surface_synthesis(0.0, 0.0, 1.0, 0.0, 1e9), frisim::SingularSurface);
}

TEST(SurfaceSynthesis, RejectsGrazingAngles) {
  EXPECT_THROW(tm_surface_synthesis(90.0, 0.0, J, 0.0, 1e9), frisim::DomainError);
  EXPECT_THROW(tm_surface_synthesis(0.0, -90.0, J, 0.0, 1e9), frisim::DomainError);
}

TEST(SurfaceSynthesis, SatisfiesBoundaryConditions) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(-0.5, 0.5), uphase(0.0, 2.0 * kPi);
  const double f = 2.4e9;
  for (double ti : {0.0, 20.0, -35.0}) {
    for (double tr : {0.0, 45.0, 60.0}) {
      const double amp = reflected_amplitude_norm(ti, tr);
      for (int i = 0; i < 100; ++i) {
        const double x = ux(rng);
        const cplx a = std::polar(amp, uphase(rng));
        SurfaceParams sp;
        try {
          sp = tm_surface_synthesis(ti, tr, a, x, f);
        } catch (const frisim::SingularSurface&) {
          continue;
        }
        auto fields = oracle::tm_fields(ti, tr, a, x, wavenumber(f));
        auto [r1, r2] = oracle::boundary_residuals(sp.admittance, sp.impedance, fields);
        ASSERT_LT(r1, 1e-10);
        ASSERT_LT(r2, 1e-10);
      }
    }
  }
}

TEST(ReflectedAmplitude, Values) {
  EXPECT_DOUBLE_EQ(reflected_amplitude_norm(0.0, 0.0), 1.0);
  EXPECT_NEAR(reflected_amplitude_norm(0.0, 60.0), 1.41421, 1e-5);
  EXPECT_NEAR(reflected_amplitude_norm(45.0, 45.0), 1.0, 1e-15);
  EXPECT_THROW(reflected_amplitude_norm(0.0, 90.0), frisim::DomainError);
}

TEST(ShortLine, Values) {
  EXPECT_EQ(short_line_impedance(2e9, 4.4, 0.0), cplx(0.0, 0.0));
  auto z = short_line_impedance(1.5e9, 4.0, 12.5e-3);
  EXPECT_NEAR(z.real(), 0.0, 0.0);
  EXPECT_NEAR(z.imag(), 188.5, 0.1);
  // argument 2*pi*f*2*H/c = pi/2 at f = c / (8 H)
  EXPECT_THROW(short_line_impedance(kSpeedOfLight / (8.0 * 12.5e-3), 4.0, 12.5e-3), frisim::DomainError);
}

TEST(UnitCell, ResonantReflection) {
  CircuitParams cp;
  const double c = 1.0e-12;
  const double c_series = 1.0 / (1.0 / cp.normal.top_capacitance + 1.0 / c);
  cp.frequency_hz = 1.0 / (2.0 * kPi * std::sqrt(cp.normal.top_inductance * c_series));
  EXPECT_NEAR(cp.frequency_hz, 0.839e9, 1e6);
  auto g = unit_cell_gamma(0.0, c, cp);
  EXPECT_NEAR(std::abs(g), 0.988, 0.005);
  EXPECT_NEAR(std::abs(std::arg(g)), kPi, 0.01);
  auto o = oracle::cell_gamma(cp.frequency_hz, cp.normal.bottom_inductance, cp.normal.top_inductance,
                              cp.normal.top_resistance, cp.normal.top_capacitance, c);
  expect_near(g, o, 1e-12);
}

TEST(UnitCell, MatchesImpedanceForm) {
  std::mt19937_64 rng(17);
  CircuitParams cp;
  std::uniform_real_distribution<double> uc(cp.varactor_min, cp.varactor_max), uf(0.3e9, 3e9), ui(0.0, 89.0);
  for (int i = 0; i < 2000; ++i) {
    cp.frequency_hz = uf(rng);
    const double c = uc(rng);
    auto g = unit_cell_gamma(ui(rng), c, cp);
    auto o = oracle::cell_gamma(cp.frequency_hz, cp.normal.bottom_inductance, cp.normal.top_inductance,
                                cp.normal.top_resistance, cp.normal.top_capacitance, c);
    ASSERT_NEAR(std::abs(g - o), 0.0, 1e-9);
  }
}

TEST(UnitCell, MatchedLoadGivesZero) {
  const cplx z = kEta0;
  EXPECT_EQ((z - kEta0) / (z + kEta0), cplx(0.0, 0.0));
  // Impedance form agrees with unit_cell_impedance.
  CircuitParams cp;
  const cplx zc = unit_cell_impedance(0.0, 1e-12, cp);
  const cplx g = unit_cell_gamma(0.0, 1e-12, cp);
  expect_near(g, (zc - kEta0) / (zc + kEta0), 1e-12);
}

TEST(UnitCell, Passivity) {
  std::mt19937_64 rng(23);
  CircuitParams cp;
  std::uniform_real_distribution<double> uc(cp.varactor_min, cp.varactor_max), uf(0.1e9, 5e9), ui(0.0, 89.9),
      ur(0.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    cp.frequency_hz = uf(rng);
    cp.normal.top_resistance = ur(rng);
    ASSERT_LE(std::abs(unit_cell_gamma(ui(rng), uc(rng), cp)), 1.0 + 1e-12);
  }
  cp.normal.top_resistance = 0.0;
  for (int i = 0; i < 10000; ++i) {
    cp.frequency_hz = uf(rng);
    ASSERT_NEAR(std::abs(unit_cell_gamma(ui(rng), uc(rng), cp)), 1.0, 1e-12);
  }
}

TEST(UnitCell, RangeChecks) {
  CircuitParams cp;
  EXPECT_THROW(unit_cell_gamma(0.0, 0.1e-12, cp), frisim::DomainError);
  EXPECT_THROW(unit_cell_gamma(0.0, 5e-12, cp), frisim::DomainError);
  EXPECT_THROW(unit_cell_gamma(90.0, 1e-12, cp), frisim::DomainError);
}

TEST(UnitCell, AngleTableInterpolates) {
  CircuitParams cp;
  cp.angle_table = {{0.0, {10e-9, 30e-9, 1.0, 10e-12}}, {40.0, {20e-9, 50e-9, 3.0, 20e-12}}};
  auto c = cp.at(10.0);
  EXPECT_NEAR(c.bottom_inductance, 12.5e-9, 1e-21);
  EXPECT_NEAR(c.top_resistance, 1.5, 1e-12);
  EXPECT_EQ(cp.at(80.0).top_capacitance, 20e-12);
}

const std::vector<double> kPublished{0.8816, 0.0473, -0.1010, 0.0004, -0.000019, 0.000055, 0.000321};

TEST(FittedAmplitude, PublishedValues) {
  const auto fit = FitCoefficients::published();
  EXPECT_NEAR(fitted_amplitude(0.0, 0.0, fit).value, 0.9826, 1e-4);
  EXPECT_NEAR(fitted_amplitude(kPi / 2, 0.0, fit).value, 0.9289, 1e-4);
  EXPECT_NEAR(fitted_amplitude(kPi, 30.0, fit).value, 0.7659, 1e-3);
}

TEST(FittedAmplitude, FullGridInsideUnitInterval) {
  const auto fit = FitCoefficients::published();
  for (int t = 0; t < 360; ++t)
    for (int i = 0; i <= 45; ++i) {
      const double th = t * kPi / 180.0;
      auto a = fitted_amplitude(th, i, fit);
      ASSERT_FALSE(a.clamped);
      ASSERT_GT(a.value, 0.0);
      ASSERT_LT(a.value, 1.0);
      ASSERT_NEAR(a.value, oracle::fitted_delta(kPublished, th, i), 1e-15);
    }
}

TEST(FittedAmplitude, RejectsIncidenceBeyondModel) {
  EXPECT_THROW(fitted_amplitude(0.0, 45.5, FitCoefficients::published()), frisim::DomainError);
  EXPECT_THROW(fitted_amplitude(0.0, -1.0, FitCoefficients::published()), frisim::DomainError);
}

TEST(FittedAmplitude, ConstructorGridCheck) {
  EXPECT_THROW(FitCoefficients({1.2, 0, 0, 0, 0, 0, 0}), frisim::DomainError);
  EXPECT_THROW(FitCoefficients({0.5, 0, 0, -0.02, 0, 0, 0}), frisim::DomainError);
  EXPECT_NO_THROW(FitCoefficients({1.0, 0, 0, 0, 0, 0, 0}));
}

TEST(Codebook, Examples) {
  EXPECT_EQ(quantize_phase(0.0, 2), 0.0);
  EXPECT_DOUBLE_EQ(quantize_phase(0.8, 2), kPi / 2);
  EXPECT_EQ(quantize_phase(2 * kPi - 0.01, 2), 0.0);
  EXPECT_EQ(quantize_phase_index(kPi / 4, 2), 0);
  EXPECT_EQ(quantize_phase_index(kPi, 1), 1);
  EXPECT_THROW(quantize_phase(0.0, 4), frisim::DomainError);
}

TEST(Codebook, MatchesScanAndBoundsError) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int bits = 1; bits <= 3; ++bits)
    for (int i = 0; i < 5000; ++i) {
      const double th = u(rng);
      ASSERT_EQ(quantize_phase_index(th, bits), oracle::nearest_codeword(th, bits)) << th;
      ASSERT_LE(circular_distance(th, quantize_phase(th, bits)), kPi / (1 << bits) + 1e-12);
    }
}

TEST(IncidentAngle, Examples) {
  RisFrame frame;
  const Vec3 elem = frame.center;
  auto a = effective_incident_angle(0.0, 0.0, elem, elem + frame.normal * 50.0, frame);
  EXPECT_NEAR(a.degrees, 0.0, 1e-6);
  EXPECT_FALSE(a.out_of_model);
  a = effective_incident_angle(30.0, 0.0, elem, elem + frame.normal * 50.0, frame);
  EXPECT_NEAR(a.degrees, 30.0, 1e-9);
  const Vec3 off = elem + (frame.normal * std::cos(kPi / 3) + frame.axis * std::sin(kPi / 3)) * 40.0;
  a = effective_incident_angle(0.0, 0.0, elem, off, frame);
  EXPECT_TRUE(a.out_of_model);
  EXPECT_EQ(a.degrees, 45.0);
  EXPECT_NEAR(a.raw_degrees, 60.0, 1e-9);
  EXPECT_THROW(effective_incident_angle(0.0, 0.0, elem, elem, frame), frisim::DegenerateGeometry);
}

TEST(IncidentAngle, VerticalBend) {
  RisFrame frame;
  const Vec3 elem = frame.center;
  auto a = effective_incident_angle(0.0, 20.0, elem, elem + frame.normal * 10.0, frame);
  EXPECT_NEAR(a.degrees, 20.0, 1e-9);
}

TEST(ReflectionMatrix, Examples) {
  const auto fit = FitCoefficients::published();
  RisConfiguration cfg;
  cfg.phases.assign(4, 0.0);
  cfg.incident_angles.assign(4, 0.0);
  for (auto v : reflection_matrix(cfg, fit)) expect_near(v, 0.9826, 1e-4);

  cfg.phases = {kPi / 2};
  cfg.incident_angles = {0.0};
  expect_near(reflection_matrix(cfg, fit)[0], 0.9289 * J, 1e-4);
}

TEST(ReflectionMatrix, RandomConfigurations) {
  const auto fit = FitCoefficients::published();
  RisFrame frame;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ub(-120.0, 120.0), up(-7.0, 7.0), us(-80.0, 80.0);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t m = 1 + i % 9;
    std::vector<double> ph(m), bh(m), bv(m);
    for (std::size_t k = 0; k < m; ++k) {
      ph[k] = up(rng);
      bh[k] = ub(rng);
      bv[k] = ub(rng);
    }
    const Vec3 src{frame.center.x + us(rng), 30.0 + std::abs(us(rng)), 40.0};
    auto cfg = configure_ris(ph, bh, bv, 2, frame, src, fit);
    auto theta = reflection_matrix(cfg, fit);
    for (std::size_t k = 0; k < m; ++k) {
      ASSERT_LE(std::abs(theta[k]), 1.0);
      ASSERT_EQ(std::abs(theta[k]), cfg.amplitudes[k]);
      ASSERT_GE(cfg.incident_angles[k], 0.0);
      ASSERT_LE(cfg.incident_angles[k], 45.0);
      ASSERT_LE(std::abs(cfg.bend_h[k]), kMaxBendDeg);
      ASSERT_EQ(cfg.phases[k], quantize_phase(ph[k], 2));
    }
    ASSERT_EQ(theta, reflection_matrix(cfg, fit));
  }
}

TEST(FitTable, GridShape) {
  auto rows = fit_table(FitCoefficients::published(), 90.0, 15.0);
  ASSERT_EQ(rows.size(), 4u * 4u);
  EXPECT_NEAR(rows[0].delta, 0.9826, 1e-4);
  EXPECT_EQ(rows.back().iota_deg, 45.0);
}

}  // namespace
