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
#include "sweetfloq/noise.hpp"
#include "support.hpp"

using namespace sweetfloq;
using namespace sweetfloq::testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

NoiseModel table_noise() { return noise_from_circuit(fig1_spectrum(), 1.1e-6, 1.8e-6, 0.015, 4.0); }

}  // namespace

TEST_CASE("noise amplitudes from loss tangent and flux noise", "[noise]") {
  const NoiseModel m = table_noise();
  const double phi_ge = std::abs(fig1_spectrum().phi_matrix(0, 1));
  // Written out in GHz units and converted.
  CHECK_THAT(m.a_d, WithinRel(kPi * kPi * 1.1e-6 * phi_ge * phi_ge / (kTwoPi * 0.5), 1e-14));
  CHECK_THAT(m.a_f, WithinRel(kTwoPi * 1.8e-6 * kTwoPi * 1.3 * phi_ge, 1e-14));
  CHECK_THAT(m.kt(), WithinRel(kTwoPi * 20.8366191 * 0.015, 1e-6));
}

TEST_CASE("static rates of the reference circuit", "[noise]") {
  const NoiseModel m = table_noise();
  const Rates off = static_rates(fig1_spectrum(), kPi + turns_to_rad(0.02), m);
  CHECK_THAT(off.t1(), WithinRel(770.0, 0.25));
  CHECK_THAT(off.t_phi(), WithinRel(0.88, 0.25));
  CHECK_THAT(off.t1(), WithinAbs(770.3093, 1e-3));
  CHECK_THAT(off.t_phi(), WithinAbs(0.735627, 1e-5));
  const Rates sweet = static_rates(fig1_spectrum(), kPi, m);
  CHECK_THAT(sweet.t1(), WithinRel(360.0, 0.25));
  CHECK_THAT(sweet.t1(), WithinAbs(361.4863, 1e-3));
  CHECK(sweet.gamma_phi_first_order == 0.0);
  CHECK(std::isinf(sweet.t_phi()));
}

TEST_CASE("undriven filter weights match the static operator", "[noise]") {
  const TwoLevelParams tl = make_two_level(kTwoPi * 0.3, 0.0, kTwoPi * 0.4, kTwoPi * 1.9);
  const FilterWeights sw = static_weights(tl);
  const FilterWeights dw = filter_weights(floquet_solve_extended(tl));
  const double c = tl.bias / tl.omega_ge(), s = tl.delta / tl.omega_ge();
  CHECK_THAT(std::abs(sw.g(Channel::phi, 0)), WithinAbs(std::abs(c), 1e-14));
  CHECK_THAT(std::abs(sw.g(Channel::minus, 0)), WithinAbs(std::abs(s), 1e-14));
  CHECK_THAT(std::abs(dw.g(Channel::phi, 0)), WithinAbs(std::abs(c), 1e-12));
  CHECK_THAT(std::abs(dw.g(Channel::minus, 0)), WithinAbs(std::abs(s), 1e-12));
  const NoiseModel m = table_noise();
  const Rates a = dynamical_rates(dw, m), b = static_rates(tl, m);
  CHECK_THAT(a.gamma_minus, WithinRel(b.gamma_minus, 1e-12));
  CHECK_THAT(a.gamma_plus, WithinRel(b.gamma_plus, 1e-12));
  CHECK_THAT(a.gamma_phi, WithinRel(b.gamma_phi, 1e-12));
}

TEST_CASE("filter weights conserve tr(sz^2)", "[noise][property]") {
  for (const auto& tl : random_points(60, 97)) {
    const FilterWeights w = filter_weights(floquet_solve_extended(tl));
    CHECK_THAT(w.conservation_sum(), WithinAbs(2.0, 1e-10));
  }
}

TEST_CASE("weights are invariant under the replica choice", "[noise][property]") {
  const TwoLevelParams tl = make_two_level(kTwoPi * 0.27, kTwoPi * 0.5, kTwoPi * 0.65, kTwoPi * 0.32);
  FloquetSolution s = floquet_solve_extended(tl);
  const FilterWeights a = filter_weights(s);
  s.modes[1] = pad_rows(s.modes[1], s.rows());
  s.shift_mode(1, 1);
  const FilterWeights b = filter_weights(s);
  // Shifting mode 1 by one replica relabels q for the +- channels only.
  const Rates ra = dynamical_rates(a, table_noise()), rb = dynamical_rates(b, table_noise());
  CHECK_THAT(rb.gamma_minus, WithinRel(ra.gamma_minus, 1e-9));
  CHECK_THAT(rb.gamma_plus, WithinRel(ra.gamma_plus, 1e-9));
  CHECK_THAT(rb.gamma_phi, WithinRel(ra.gamma_phi, 1e-9));
}

TEST_CASE("dielectric spectrum obeys detailed balance", "[noise][property]") {
  const NoiseModel m = table_noise();
  for (double f : {0.05, 0.3, 1.0, 3.0}) {
    const double w = ghz_to_rad_ns(f);
    CHECK_THAT(spectrum_dielectric(-w, m) / spectrum_dielectric(w, m), WithinRel(std::exp(-w / m.kt()), 1e-10));
  }
  CHECK(spectrum_dielectric(0.0, m) == 0.0);
}

TEST_CASE("1/f spectrum clamp", "[noise]") {
  const NoiseModel m = table_noise();
  CHECK_THROWS_AS(spectrum_1f(0.0, m), NumericalError);
  bool clamped = false;
  const double s0 = spectrum_total(0.0, m, &clamped);
  CHECK(clamped);
  CHECK_THAT(s0, WithinRel(spectrum_1f(m.margin, m), 1e-14));
  clamped = false;
  spectrum_total(10 * m.margin, m, &clamped);
  CHECK_FALSE(clamped);
}

TEST_CASE("1/f-limited T1 flag on a near-degenerate depolarization term", "[noise]") {
  // eps01 close to w_d puts the q = -1 minus channel near zero frequency.
  const TwoLevelParams tl = make_two_level(kTwoPi * 0.3, kTwoPi * 0.2, kTwoPi * 0.0, kTwoPi * 0.30005);
  const FloquetSolution s = floquet_solve_extended(tl);
  const FilterWeights w = filter_weights(s);
  bool near = false;
  for (int q = -w.q_max; q <= w.q_max; ++q)
    for (Channel c : {Channel::minus, Channel::plus})
      if (std::abs(w.freq(c, q)) < table_noise().margin && std::norm(w.g(c, q)) > 0) near = true;
  const Rates r = dynamical_rates(w, table_noise());
  CHECK(r.one_over_f_limited_t1 == near);
  if (near) CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("breakdown adds up to the totals", "[noise][property]") {
  for (const auto& tl : random_points(10, 7)) {
    const Rates r = dynamical_rates(filter_weights(floquet_solve_extended(tl)), table_noise());
    double gm = 0, gp = 0, gf = 0;
    for (const auto& t : r.breakdown) {
      if (t.channel == Channel::minus) gm += t.contribution;
      if (t.channel == Channel::plus) gp += t.contribution;
      if (t.channel == Channel::phi) gf += t.contribution;
    }
    // Terms below the floor are summed but not listed.
    CHECK_THAT(gm, WithinRel(r.gamma_minus, 1e-9));
    CHECK_THAT(gp, WithinRel(r.gamma_plus, 1e-9));
    CHECK_THAT(gf, WithinRel(r.gamma_phi, 1e-9));
  }
}

TEST_CASE("working point rates", "[noise]") {
  const TwoLevelParams tl = two_level_reduce(fig1_spectrum(), turns_to_rad(0.04), kPi + turns_to_rad(0.02),
                                             ghz_to_rad_ns(0.3207265765));
  const Rates r = dynamical_rates(filter_weights(floquet_solve_extended(tl)), table_noise());
  CHECK_THAT(r.t1(), WithinAbs(594.86, 0.01));
  CHECK_THAT(r.t_phi(), WithinAbs(1152.55, 0.01));
}

TEST_CASE("dephasing envelope", "[noise]") {
  const TwoLevelParams tl = two_level_reduce(fig1_spectrum(), 0.0, kPi + turns_to_rad(0.02), 1.0);
  const FilterWeights w = static_weights(tl);
  const NoiseModel m = table_noise();
  CHECK(dephasing_envelope(0.0, w, m) == 1.0);
  double prev = 1.0;
  for (double t : {0.1, 0.3, 1.0, 3.0}) {
    const double e = dephasing_envelope(t, w, m);
    CHECK(e < prev);
    CHECK(e > 0.0);
    prev = e;
  }
  CHECK_THROWS_AS(dephasing_envelope(-1.0, w, m), ValidityError);
}

TEST_CASE("filter function peaks and weights", "[noise]") {
  const TwoLevelParams tl = make_two_level(kTwoPi * 0.27, kTwoPi * 0.3, kTwoPi * 0.65, kTwoPi * 0.32);
  const FilterWeights w = filter_weights(floquet_solve_extended(tl));
  const double t = 2000.0;
  // Peak of each line is (t / pi) zeta^-1 |g_q|^2 when lines are resolved.
  const double peak = filter_function(w.freq(Channel::minus, 0), t, w, Channel::minus);
  CHECK_THAT(peak, WithinRel(t / kPi * std::norm(w.g(Channel::minus, 0)), 1e-3));
  const double peak_phi = filter_function(w.freq(Channel::phi, 1), t, w, Channel::phi);
  CHECK_THAT(peak_phi, WithinRel(2.0 * t / kPi * std::norm(w.g(Channel::phi, 1)), 1e-3));
  CHECK_THROWS_AS(filter_function(0.0, 0.0, w, Channel::phi), ValidityError);
}

TEST_CASE("noise model validation", "[noise]") {
  NoiseModel m = table_noise();
  m.temperature = 0.0;
  CHECK_THROWS_AS(m.validate(), ValidityError);
  m = table_noise();
  m.a_f = -1.0;
  CHECK_THROWS_AS(dynamical_rates(static_weights(make_two_level(1, 0, 1, 1)), m), ValidityError);
}
