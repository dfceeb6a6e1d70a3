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

#include <random>

#include "catch_amalgamated.hpp"
#include "sweetfloq/dynamics.hpp"
#include "support.hpp"

using namespace sweetfloq;
using namespace sweetfloq::testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Matrix2c rz(double a) { return Eigen::Vector2cd(1.0, std::polar(1.0, a)).asDiagonal(); }

Matrix2c random_unitary(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix2c m;
  for (int i = 0; i < 4; ++i) m(i / 2, i % 2) = cplx(n(rng), n(rng));
  Eigen::HouseholderQR<Matrix2c> qr(m);
  return qr.householderQ();
}

TwoQubitSystem fig5_system() {
  TwoQubitSystem sys;
  sys.left = {{1.2, 6.0, 0.95}, turns_to_rad(0.529)};
  sys.right = {{1.0, 4.1, 0.7}, turns_to_rad(0.520)};
  sys.j_coupling = 0.0048;
  sys.right_phi_ac = turns_to_rad(0.055);
  sys.right_f = 0.4129;
  sys.left_idle_phi_ac = turns_to_rad(0.045);
  sys.left_idle_f = 0.88;
  sys.left_gate_phi_ac_lo = turns_to_rad(0.015);
  sys.left_gate_phi_ac_hi = turns_to_rad(0.035);
  sys.left_gate_f = 0.9;
  return sys;
}

const TwoQubitSetup& fig5_setup() {
  static const TwoQubitSetup st = prepare_two_qubit(fig5_system());
  return st;
}

}  // namespace

TEST_CASE("gate fidelity definition", "[dynamics]") {
  std::mt19937_64 rng(11);
  const Matrix2c u = random_unitary(rng);
  CHECK_THAT(average_gate_fidelity(u, u), WithinAbs(1.0, 1e-14));
  const double tr = std::abs(u.trace());
  CHECK_THAT(average_gate_fidelity(u, Matrix2c::Identity()), WithinAbs((tr * tr + 2) / 6, 1e-14));
  CHECK_THAT(average_gate_fidelity(pauli_x(), Matrix2c::Identity()), WithinAbs(1.0 / 3.0, 1e-15));
}

TEST_CASE("virtual Z phases are optimized away", "[dynamics][property]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (const char* name : {"x", "sqrt-x", "s", "t"}) {
    const Matrix2c t = gate_target(name);
    for (int i = 0; i < 20; ++i) {
      const Matrix2c u = std::polar(1.0, ang(rng)) * rz(ang(rng)) * t * rz(ang(rng));
      CHECK_THAT(fidelity_with_z(u, t).fidelity, WithinAbs(1.0, 1e-12));
    }
    // The optimum never beats the exhaustive grid.
    const Matrix2c u = random_unitary(rng);
    double grid = 0.0;
    for (int a = 0; a < 90; ++a)
      for (int b = 0; b < 90; ++b)
        grid = std::max(grid, average_gate_fidelity(rz(kTwoPi * a / 90) * u * rz(kTwoPi * b / 90), t));
    const ZOptimized z = fidelity_with_z(u, t);
    CHECK(z.fidelity >= grid - 1e-12);
    CHECK_THAT(average_gate_fidelity(rz(z.post[1]) * u * rz(z.pre[1]), t), WithinAbs(z.fidelity, 1e-10));
  }
}

TEST_CASE("two-qubit local phases are optimized away", "[dynamics][property]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 10; ++i) {
    const Matrix4c pre = kron2(rz(ang(rng)), rz(ang(rng)));
    const Matrix4c post = kron2(rz(ang(rng)), rz(ang(rng)));
    const Matrix4c u = std::polar(1.0, ang(rng)) * post * sqrt_iswap() * pre;
    CHECK_THAT(fidelity_with_z4(u, sqrt_iswap()).fidelity, WithinAbs(1.0, 1e-10));
  }
}

TEST_CASE("schedule envelopes", "[dynamics]") {
  CHECK(ramp_profile(0.0, RampShape::cosine) == 0.0);
  CHECK_THAT(ramp_profile(0.5, RampShape::cosine), WithinAbs(0.5, 1e-15));
  CHECK(ramp_profile(1.0, RampShape::cosine) == 1.0);
  CHECK(flat_top(0.5, 0.1) == 1.0);
  CHECK(flat_top(0.0, 0.1) == 0.0);
  CHECK_THAT(flat_top(0.05, 0.1), WithinAbs(0.5, 1e-15));
  PulseSchedule s;
  s.segments.push_back({10.0, 0.0, 1.0, 2.0, 2.0, std::nullopt});
  s.segments.push_back({5.0, 1.5, 1.0, 2.0, 2.0, std::nullopt});
  CHECK_THROWS_AS(s.validate(), ValidityError);
  s.segments[1].amp_start = 1.0;
  CHECK_NOTHROW(s.validate());
  CHECK(s.total_duration() == 15.0);
  CHECK_THAT(s.amp(5.0), WithinAbs(0.5, 1e-15));
}

TEST_CASE("free evolution is the identity in the Floquet frame", "[dynamics]") {
  const TwoLevelParams tl = fig1_working_point();
  PulseSchedule s;
  s.segments.push_back({73.3, tl.amp, tl.amp, tl.omega_d, tl.omega_d, std::nullopt});
  const GateResult r = evolve_closed(s, tl, {}, "identity");
  CHECK_THAT(average_gate_fidelity(r.unitary_floquet_frame, Matrix2c::Identity()), WithinAbs(1.0, 1e-10));
  CHECK(r.unitarity_defect < 1e-9);
}

TEST_CASE("calibrated rotations", "[dynamics]") {
  const TwoLevelParams tl = fig1_working_point();
  for (const char* name : {"x", "sqrt-x"}) {
    const RabiCalibration c = calibrate_rotation(tl, name);
    INFO(name);
    CHECK(c.result.fidelity >= 0.999);
    CHECK(c.result.unitarity_defect < 1e-8);
    CHECK_THAT(c.amplitude, WithinRel(c.predicted_amplitude, 0.05));
  }
}

TEST_CASE("Rabi chevron peaks at the quasi-energy difference", "[dynamics]") {
  const TwoLevelParams tl = fig1_working_point();
  const RabiCalibration c = calibrate_rotation(tl, "x");
  std::vector<double> w;
  for (int i = -4; i <= 4; ++i) w.push_back(c.omega_prime + ghz_to_rad_ns(0.005) * i);
  const auto chev = rabi_chevron(tl, c.amplitude, c.tau, w, c.phase);
  CHECK(chev[4].transfer > 0.999);
  for (int i = 0; i < 9; ++i) {
    if (i == 4) continue;
    CHECK(chev[i].transfer < 0.95);
  }
  // Symmetric about resonance up to counter-rotating corrections.
  CHECK_THAT(chev[3].transfer, WithinAbs(chev[5].transfer, 0.05));
}

TEST_CASE("calibrated phase gates", "[dynamics]") {
  const TwoLevelParams tl = fig1_working_point();
  for (const char* name : {"s", "t"}) {
    const PhaseCalibration c = calibrate_phase_gate(tl, name);
    INFO(name);
    CHECK(c.result.fidelity >= 0.999);
    CHECK_THAT(c.simulated, WithinAbs(c.target_phase, 1e-6));
    // The quasi-energy integral predicts the simulated phase.
    CHECK_THAT(c.predicted, WithinAbs(c.simulated, 1e-3));
  }
}

TEST_CASE("adiabatic map onto static eigenstates", "[dynamics]") {
  const TwoLevelParams tl = fig1_working_point();
  const RampGapCheck gap = ramp_gap_check(tl);
  CHECK(gap.min_gap > 0.1);
  CHECK(adiabatic_map(tl, 30.0, {}, gap).fidelity >= 0.99);
  double prev = 0.0;
  for (double t : {100.0, 150.0, 200.0}) {
    const double f = adiabatic_map(tl, t, {}, gap).fidelity;
    CHECK(f >= prev - 1e-9);
    CHECK(f > 0.999);
    prev = f;
  }
  CHECK_THROWS_AS(adiabatic_map(tl, -1.0), ValidityError);
}

TEST_CASE("two-qubit ZZ vanishes on the sweet manifolds", "[dynamics][two-qubit]") {
  const TwoQubitSetup& st = fig5_setup();
  const double j = st.j_rad_ns();
  CHECK(std::abs(st.gate_terms.zz) < 1e-12 * j);
  CHECK(std::abs(st.idle_terms.zz) < 1e-12 * j);
  CHECK(st.gate_terms.resonant);
  CHECK_FALSE(st.idle_terms.resonant);
}

TEST_CASE("uncoupled qubits do not swap", "[dynamics][two-qubit]") {
  TwoQubitOptions opt;
  opt.j_override = 0.0;
  const TwoQubitResult r = two_qubit_closed(fig5_setup(), 20.0, 24.0, opt);
  CHECK(std::abs(r.unitary_floquet_frame(1, 2)) < 1e-6);
  CHECK(std::abs(r.unitary_floquet_frame(2, 1)) < 1e-6);
  CHECK(r.unitarity_defect < 1e-8);
}

TEST_CASE("sqrt(iSWAP) from the sweet-spot excursion", "[dynamics][two-qubit]") {
  const TwoQubitResult r = two_qubit_closed(fig5_setup(), 20.0, 24.0);
  CHECK(r.fidelity >= 0.999);
  CHECK(r.unitarity_defect < 1e-8);
}

TEST_CASE("swap period follows the flip-flop coefficient", "[dynamics][two-qubit]") {
  const TwoQubitSetup& st = fig5_setup();
  const double predicted = st.gate_terms.swap_time;
  const SwapMeasurement m = measure_swap_time(st, 1.5 * predicted);
  CHECK_THAT(m.swap_time, WithinRel(predicted, 0.02));
  CHECK(m.max_transfer > 0.99);
}
