// Copyright 2026 The sweetfloq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "catch_amalgamated.hpp"
#include "sweetfloq/sweetspot.hpp"
#include "support.hpp"

using namespace sweetfloq;
using namespace sweetfloq::testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Five-point central difference of eps01 along one parameter, with labels
// tied to the solution at the centre.
template <class Family>
double fd_eps01(const TwoLevelParams& tl, Family family, double x0, double h) {
  const FloquetSolution ref = floquet_solve_extended(tl);
  ExtendedOptions opt;
  opt.labeling = Labeling::reference;
  opt.reference = &ref;
  auto e = [&](double x) { return floquet_solve_extended(family(x), opt).eps01; };
  return (8.0 * (e(x0 + h) - e(x0 - h)) - (e(x0 + 2 * h) - e(x0 - 2 * h))) / (12.0 * h);
}

DrivenCircuit fig1_driven() { return {fig1_spectrum(), kPi + turns_to_rad(0.02)}; }

}  // namespace

TEST_CASE("dc dispersion equals the finite difference over B", "[sweetspot][property]") {
  int checked = 0;
  for (const auto& tl : random_points(50, 404)) {
    const FloquetSolution s = floquet_solve_extended(tl);
    if (s.degenerate) continue;
    const double h = 1e-3 * tl.omega_ge();
    const double fd = fd_eps01(tl, [&](double b) { return tl.with_bias(b); }, tl.bias, h);
    const double g = dispersion_bias(s);
    CHECK_THAT(g, WithinAbs(fd, 1e-6 * std::max(std::abs(fd), 1e-2)));
    ++checked;
  }
  CHECK(checked >= 45);
}

TEST_CASE("ac dispersion equals the finite difference over A", "[sweetspot][property]") {
  for (const auto& tl : random_points(50, 405)) {
    const FloquetSolution s = floquet_solve_extended(tl);
    if (s.degenerate) continue;
    const double h = 1e-3 * tl.omega_ge();
    const double a0 = std::max(tl.amp, 2.5 * h);
    const TwoLevelParams t = tl.with_amp(a0);
    const double fd = fd_eps01(t, [&](double a) { return t.with_amp(a); }, a0, h);
    CHECK_THAT(dispersion_amp(t), WithinAbs(fd, 1e-6 * std::max(std::abs(fd), 1e-2)));
  }
}

TEST_CASE("flux dispersions use the chain rule", "[sweetspot]") {
  const TwoLevelParams tl = fig1_driven().at(turns_to_rad(0.04), 0.3207265765);
  CHECK_THAT(dispersion_dc(tl), WithinRel(dispersion_bias(tl) * 2.0 * ghz_to_rad_ns(1.3) * tl.provenance.phi_ge, 1e-14));
  CHECK_THAT(dispersion_ac(tl), WithinRel(dispersion_amp(tl) * ghz_to_rad_ns(1.3) * tl.provenance.phi_ge, 1e-14));
  // The working point is a dc sweet spot.
  CHECK(std::abs(dispersion_dc(tl)) / floquet_solve_extended(tl).eps01 < 1e-6);
}

TEST_CASE("undriven sweet spot has zero dispersions", "[sweetspot]") {
  const TwoLevelParams tl = make_two_level(kTwoPi * 0.3, 0.0, 0.0, kTwoPi * 0.7);
  CHECK_THAT(dispersion_bias(tl), WithinAbs(0.0, 1e-12));
  CHECK_THAT(dispersion_amp(tl), WithinAbs(0.0, 1e-12));
}

TEST_CASE("weak-drive rows line up with Omega_ge / m", "[sweetspot]") {
  const DrivenCircuit c = fig1_driven();
  const double f_ge = rad_ns_to_ghz(c.at(0.0, 1.0).omega_ge());
  const double pac = turns_to_rad(0.001);
  for (int m = 1; m <= 2; ++m) {
    const double f0 = f_ge / m;
    auto p = dc_root_near(c, pac, f0 * 0.98, f0 * 1.02, {});
    REQUIRE(p);
    CHECK_THAT(p->f_d, WithinRel(f0, 1e-3));
    CHECK(std::abs(p->dispersion_dc) / ghz_to_rad_ns(p->eps01) < 1e-6);
  }
}

TEST_CASE("strong-drive resonances line up with B / m", "[sweetspot]") {
  // Generic two-level model deep in the strong-drive regime; the residual
  // shift of the resonance scales as Delta^2.
  const double delta = kTwoPi * 0.02, bias = kTwoPi * 1.0;
  for (int m = 1; m <= 2; ++m) {
    const double w0 = bias / m;
    const TwoLevelParams tl = make_two_level(delta, 1.5 * w0, bias, w0);
    const NumericGap g = numeric_gap(tl, w0);
    CHECK_THAT(g.omega, WithinRel(w0, 1e-3));
  }
}

TEST_CASE("weak-drive gap formula", "[sweetspot]") {
  const TwoLevelParams base = fig1_driven().at(0.0, 1.0);
  const double omega_ge = base.omega_ge();
  for (int m = 1; m <= 3; ++m) {
    const TwoLevelParams tl = base.with_amp(0.05 * omega_ge).with_omega(omega_ge / m);
    const GapEstimate est = gap_weak(m, tl);
    CHECK(est.warnings.empty());
    const NumericGap ng = numeric_gap(tl, omega_ge / m);
    CHECK_THAT(rad_ns_to_ghz(ng.gap), WithinRel(est.gap, 0.05));
  }
  const TwoLevelParams tl = base.with_amp(0.05 * omega_ge);
  CHECK_THAT(gap_weak(1, tl).gap, WithinRel(rad_ns_to_ghz(tl.amp * std::abs(std::sin(mixing_angle(tl)))), 1e-14));
  CHECK_THAT(gap_weak(2, make_two_level(1.0, 0.05, 0.0, 0.5)).gap, WithinAbs(0.0, 1e-15));
  CHECK_FALSE(gap_weak(1, base.with_amp(0.5 * omega_ge)).warnings.empty());
}

TEST_CASE("strong-drive gap formula", "[sweetspot]") {
  const double delta = kTwoPi * 0.05, bias = kTwoPi * 1.0;
  for (int m = 1; m <= 2; ++m) {
    for (double x : {1.0, 2.0, 3.0}) {
      const double w0 = bias / m;
      const TwoLevelParams tl = make_two_level(delta, 0.5 * x * w0, bias, w0);
      const GapEstimate est = gap_strong(m, tl);
      const NumericGap ng = numeric_gap(tl, w0);
      INFO("m = " << m << ", 2A/w = " << x);
      CHECK_THAT(rad_ns_to_ghz(ng.gap), WithinRel(est.gap, 0.05));
    }
  }
  const TwoLevelParams tl = make_two_level(delta, 1.5 * bias, bias, bias);
  CHECK_THAT(gap_strong(1, tl.with_bias(bias)).gap * 0.5,
             WithinRel(gap_strong(1, make_two_level(0.5 * delta, 1.5 * bias, bias, bias)).gap, 1e-14));
  CHECK_FALSE(gap_strong(1, make_two_level(kTwoPi * 0.3, 1.5 * bias, bias, bias)).warnings.empty());
}

TEST_CASE("the manifold is cut at Bessel zeros", "[sweetspot]") {
  const double delta = kTwoPi * 0.05, bias = kTwoPi * 1.0;
  const double j11 = boost::math::cyl_bessel_j_zero(1.0, 1);
  const TwoLevelParams tl = make_two_level(delta, 0.5 * j11 * bias, bias, bias);
  CHECK_THAT(gap_strong(1, tl).gap, WithinAbs(0.0, 1e-15));
  // Residual gap at the zero is higher order in Delta / w.
  const NumericGap ng = numeric_gap(tl, bias);
  const double off = numeric_gap(tl.with_amp(0.5 * 3.0 * bias), bias).gap;
  CHECK(ng.gap < 0.05 * off);
}

TEST_CASE("numeric FWHM against the closed form", "[sweetspot]") {
  const double delta = kTwoPi * 0.05, bias = kTwoPi * 1.0;
  for (int m = 1; m <= 2; ++m) {
    const double w0 = bias / m;
    const TwoLevelParams tl = make_two_level(delta, 0.5 * 1.5 * w0, bias, w0);
    const NumericGap ng = numeric_gap(tl, w0);
    const double gap0 = gap_strong(m, tl.with_omega(ng.omega)).gap;
    const double width = rad_ns_to_ghz(numeric_fwhm(tl, ng.omega, 1e-4 * w0));
    INFO("m = " << m);
    CHECK_THAT(width, WithinRel(fwhm_width(m, gap0), 0.2));
  }
  CHECK(fwhm_width(2, 0.0) == 0.0);
  CHECK_THROWS_AS(fwhm_width(0, 1.0), ValidityError);
}

TEST_CASE("frequency-modulation limit", "[sweetspot]") {
  FrequencyModulation fm;
  fm.omega = kTwoPi * 0.4;
  fm.splitting = {cplx(kTwoPi * 0.9), cplx(0.3, 0.2), cplx(-0.05, 0.1)};
  fm.splitting_slope = {cplx(2.1), cplx(0.4, -0.3), cplx(0.2, 0.05)};
  const FrequencyModulationLimit r = limit_frequency_modulation(fm);
  CHECK_THAT(r.eps01_solver, WithinRel(r.eps01_analytic, 1e-8));
  for (size_t k = 0; k < r.g_analytic.size(); ++k) {
    CHECK_THAT(std::abs(r.g_solver[k] - r.g_analytic[k]), WithinAbs(0.0, 1e-8 * std::abs(r.g_analytic[k])));
  }
}

TEST_CASE("spin-locking limit", "[sweetspot]") {
  auto lorentz = [](double w) { return 0.01 / (1.0 + std::pow(w / 0.5, 2)); };
  const SpinLockingLimit r = limit_spin_locking(0.03, 0.2, 1.7, lorentz);
  CHECK_THAT(r.eps01_solver, WithinRel(r.eps01_analytic, 1e-8));
  CHECK_THAT(r.gamma_phi_solver, WithinRel(r.gamma_phi_analytic, 1e-8));
  CHECK_THAT(r.gamma_minus_solver, WithinRel(r.gamma_minus_analytic, 1e-8));
  CHECK_THAT(r.gamma_plus_solver, WithinRel(r.gamma_plus_analytic, 1e-8));
  CHECK_THROWS_AS(limit_spin_locking(0.0, 0.0, 1.0, lorentz), ValidityError);
}

TEST_CASE("general sweet condition on a two-harmonic family", "[sweetspot]") {
  auto family = [](double l) {
    PeriodicHamiltonian h;
    h.omega = kTwoPi * 0.45;
    h.harmonics = {Matrix2c(0.5 * 1.3 * pauli_x() + 0.5 * (0.9 + l) * pauli_z()), Matrix2c(0.3 * l * pauli_z()),
                   Matrix2c(0.1 * pauli_x() + 0.05 * l * l * pauli_z())};
    return h;
  };
  for (double l : {0.1, 0.7, 1.4}) {
    const SweetCondition sc = general_sweet_condition(family, l);
    CHECK_THAT(sc.g_lambda_0phi, WithinAbs(0.5 * sc.deps01_dlambda, 1e-7 * std::max(1.0, std::abs(sc.deps01_dlambda))));
  }
}
