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
#include "support.hpp"

using namespace sweetfloq;
using namespace sweetfloq::testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

TwoLevelParams working_point() {
  return two_level_reduce(fig1_spectrum(), turns_to_rad(0.04), kPi + turns_to_rad(0.02),
                          ghz_to_rad_ns(0.3207265765));
}

}  // namespace

TEST_CASE("extended space agrees with the one-period propagator", "[floquet][property]") {
  for (const auto& tl : random_points(40, 11)) {
    const FloquetSolution a = floquet_solve_extended(tl);
    const FloquetSolution b = floquet_solve_monodromy(tl);
    const double scale = std::max(a.eps01, 1e-3 * tl.omega_d);
    CHECK(std::abs(a.eps01 - b.eps01) / scale < 1e-9);
  }
}

TEST_CASE("extended space agrees with brute-force RK4", "[floquet]") {
  for (const auto& tl : random_points(6, 5, 3.0)) {
    const FloquetSolution a = floquet_solve_extended(tl);
    CHECK_THAT(a.eps01, WithinAbs(rk4_eps01(tl), 1e-8 * tl.omega_d));
  }
}

TEST_CASE("zero splitting reduces to the Bessel solution", "[floquet]") {
  for (double x : {0.3, 1.2, 2.4048, 4.0}) {
    const double w = kTwoPi * 0.5;
    const TwoLevelParams tl = make_two_level(0.0, 0.5 * x * w, kTwoPi * 0.37, w);
    const FloquetSolution s = floquet_solve_extended(tl);
    CHECK_THAT(s.eps01, WithinAbs(bessel_eps01(tl), 1e-10));
    // |w(t)> = exp(-+ i (A/w) sin(w t)) |z+->, so |u_k| = |J_k(A/w)| up to
    // the replica index n of the returned mode.
    for (int j = 0; j < 2; ++j) {
      double best = 1e300;
      for (int n = -3; n <= 3; ++n) {
        double err = 0.0;
        for (int k = -8; k <= 8; ++k) {
          const int r = k + n + s.truncation_k;
          const double mag = std::abs(s.modes[j](r, 0)) + std::abs(s.modes[j](r, 1));
          err = std::max(err, std::abs(mag - std::abs(std::cyl_bessel_j(std::abs(k), 0.5 * x))));
        }
        best = std::min(best, err);
      }
      CHECK(best < 1e-10);
    }
  }
}

TEST_CASE("static limit", "[floquet]") {
  const TwoLevelParams tl = make_two_level(kTwoPi * 0.2, 0.0, kTwoPi * 0.3, kTwoPi * 1.7);
  const FloquetSolution s = floquet_solve_extended(tl);
  CHECK_THAT(s.eps01, WithinAbs(std::abs(fold_zone(tl.omega_ge(), tl.omega_d)), 1e-12));
}

TEST_CASE("canonical labels and unitarity of the mode basis", "[floquet][property]") {
  for (const auto& tl : random_points(20, 23)) {
    const FloquetSolution s = floquet_solve_extended(tl);
    CHECK(s.labeling == Labeling::canonical);
    CHECK(s.eps01 >= 0.0);
    CHECK(s.eps01 <= 0.5 * tl.omega_d + 1e-12);
    CHECK(s.tail < 1e-10);
    for (double ph : {0.0, 0.7, 2.9}) {
      const Matrix2c m = s.mode_matrix(ph);
      CHECK((m.adjoint() * m - Matrix2c::Identity()).norm() < 1e-9);
    }
  }
}

TEST_CASE("Floquet propagator reproduces direct integration", "[floquet]") {
  const TwoLevelParams tl = working_point();
  const FloquetSolution s = floquet_solve_extended(tl);
  for (double t : {3.1, 17.0, 55.5}) {
    const Matrix2c a = floquet_propagator(s, t);
    const Matrix2c b = integrate_two_level(tl, 0.0, t);
    CHECK((a - b).norm() < 1e-9);
  }
}

TEST_CASE("replica shift leaves the physical state unchanged", "[floquet][property]") {
  const TwoLevelParams tl = working_point();
  FloquetSolution s = floquet_solve_extended(tl);
  const double t = 4.2;
  const Vector2c before = s.mode(1, tl.omega_d * t) * std::polar(1.0, -s.eps_mode[1] * t);
  FloquetSolution s2 = s;
  s2.modes[1] = pad_rows(s2.modes[1], s2.rows());
  s2.shift_mode(1, 1);
  const Vector2c after = s2.mode(1, tl.omega_d * t) * std::polar(1.0, -s2.eps_mode[1] * t);
  // The outermost harmonic is lost in the shift; it is below the tail.
  CHECK((before - after).norm() < 1e-10);
  CHECK_THAT(s2.eps_mode[1], WithinAbs(s.eps_mode[1] - tl.omega_d, 1e-12));
}

TEST_CASE("working point quasi-energy by three routes", "[floquet]") {
  const TwoLevelParams tl = working_point();
  const double e_ext = rad_ns_to_ghz(floquet_solve_extended(tl).eps01);
  const double e_mono = rad_ns_to_ghz(floquet_solve_monodromy(tl).eps01);
  ExtendedOptions opt;
  opt.labeling = Labeling::continuation;
  const FloquetSolution cont = floquet_solve_extended(tl, opt);
  CHECK_THAT(e_ext, WithinAbs(0.0791982773, 1e-9));
  CHECK_THAT(e_mono, WithinAbs(e_ext, 1e-10));
  CHECK(cont.labeling == Labeling::continuation);
  CHECK_THAT(std::abs(fold_zone(rad_ns_to_ghz(cont.eps01), rad_ns_to_ghz(tl.omega_d))), WithinAbs(e_ext, 1e-10));
}

TEST_CASE("continuation labels follow the static states", "[floquet]") {
  // At weak drive the continued |w_0> stays close to the static ground state.
  const TwoLevelParams tl = make_two_level(kTwoPi * 0.27, kTwoPi * 0.02, kTwoPi * 0.65, kTwoPi * 0.31);
  ExtendedOptions opt;
  opt.labeling = Labeling::continuation;
  const FloquetSolution cont = floquet_solve_extended(tl, opt);
  const FloquetSolution stat = detail::static_solution(tl.with_amp(0.0));
  for (int j = 0; j < 2; ++j) CHECK(std::abs(stat.mode(j, 0.0).dot(cont.mode(j, 0.0))) > 0.99);
}

TEST_CASE("reference relabeling undoes a swap", "[floquet]") {
  const TwoLevelParams tl = working_point();
  const FloquetSolution ref = floquet_solve_extended(tl);
  FloquetSolution s = ref;
  s.swap_labels();
  relabel_like(s, ref);
  CHECK_THAT(s.eps01, WithinAbs(ref.eps01, 1e-12));
  CHECK(std::abs(s.mode(0, 0.0).dot(ref.mode(0, 0.0))) > 1 - 1e-12);
}

TEST_CASE("generic solver agrees with the two-level band solver", "[floquet]") {
  for (const auto& tl : random_points(8, 3)) {
    const FloquetSolution a = floquet_solve_extended(tl);
    const FloquetSolution b = floquet_solve_generic(to_periodic(tl));
    CHECK_THAT(b.eps01, WithinAbs(a.eps01, 1e-10 * tl.omega_d));
  }
}

TEST_CASE("two-harmonic drive against the propagator route", "[floquet]") {
  PeriodicHamiltonian h;
  h.omega = kTwoPi * 0.4;
  h.harmonics = {Matrix2c(0.5 * kTwoPi * 0.3 * pauli_x() + 0.5 * kTwoPi * 0.2 * pauli_z()),
                 Matrix2c(0.5 * kTwoPi * 0.15 * pauli_z()), Matrix2c(cplx(0, 0.25) * kTwoPi * 0.1 * pauli_z())};
  const FloquetSolution a = floquet_solve_generic(h);
  const FloquetSolution b = floquet_solve_monodromy(h);
  CHECK_THAT(a.eps01, WithinAbs(b.eps01, 1e-10));
}

TEST_CASE("floquet input validation", "[floquet]") {
  CHECK_THROWS_AS(floquet_solve_extended(make_two_level(1.0, 0.1, 0.0, 0.0)), ValidityError);
  CHECK_THROWS_AS(floquet_solve_extended(make_two_level(1.0, 0.1, 0.0, -1.0)), ValidityError);
  PeriodicHamiltonian h;
  h.omega = 1.0;
  CHECK_THROWS_AS(floquet_solve_generic(h), ValidityError);
  h.harmonics = {Matrix2c(cplx(0, 1) * pauli_x())};
  CHECK_THROWS_AS(floquet_solve_generic(h), ValidityError);
}
