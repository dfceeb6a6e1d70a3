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

#pragma once

// Noise spectra, Floquet filter weights and decoherence rates.
//
// The qubit couples to flux noise through sz. In the Floquet frame the
// coupling splits into channels c_-, c_+ and c_phi whose Fourier
// coefficients g_{q,mu} sample the noise spectrum at
//   w_{q-} = q w_d + eps01,  w_{q+} = q w_d - eps01,  w_{q,phi} = q w_d.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sweetfloq/circuit.hpp"
#include "sweetfloq/common.hpp"
#include "sweetfloq/floquet.hpp"

namespace sweetfloq {

struct NoiseModel {
  double a_f = 0.0;            // 1/f amplitude, rad/ns
  double a_d = 0.0;            // dielectric amplitude, ns
  double temperature = 0.015;  // K
  double omega_ir = kTwoPi;    // infrared cutoff, rad/s
  double ln_factor = 4.0;      // sqrt|ln(w_ir t_m)|
  double margin = kTwoPi * 1e-3;  // 1/f clamp around zero frequency, rad/ns

  void validate() const {
    if (!(a_f >= 0) || !(a_d >= 0)) throw ValidityError("noise: amplitudes must be non-negative");
    if (!(temperature > 0)) throw ValidityError("noise: temperature must be positive");
    if (!(ln_factor > 0)) throw ValidityError("noise: ln_factor must be positive");
    if (!(omega_ir > 0)) throw ValidityError("noise: omega_ir must be positive");
    if (!(margin > 0)) throw ValidityError("noise: margin must be positive");
  }

  // k_B T in rad/ns.
  double kt() const { return kTwoPi * kBoltzmannGHzPerKelvin * temperature; }
};

// Dielectric amplitude pi^2 tan(delta) |phi_ge|^2 / E_C, in ns.
inline double amplitude_dielectric(double tan_delta, double e_c_ghz, double phi_ge) {
  return kPi * kPi * tan_delta * phi_ge * phi_ge / ghz_to_rad_ns(e_c_ghz);
}

// 1/f amplitude 2 pi delta_f E_L |phi_ge|, in rad/ns.
inline double amplitude_1f(double delta_f, double e_l_ghz, double phi_ge) {
  return kTwoPi * delta_f * ghz_to_rad_ns(e_l_ghz) * std::abs(phi_ge);
}

// Noise model from loss tangent and flux-noise strength, with phi_ge taken
// at half flux quantum.
inline NoiseModel noise_from_circuit(const StaticSpectrum& spec_at_pi, double tan_delta, double delta_f,
                                     double temperature = 0.015, double ln_factor = 4.0) {
  if (std::abs(std::remainder(spec_at_pi.phi_dc - kPi, kTwoPi)) > 1e-12)
    throw ValidityError("noise: amplitude helpers need the spectrum at phi_dc = pi");
  const double phi_ge = std::abs(spec_at_pi.phi_matrix(0, 1));
  NoiseModel m;
  m.a_d = amplitude_dielectric(tan_delta, spec_at_pi.params.e_c, phi_ge);
  m.a_f = amplitude_1f(delta_f, spec_at_pi.params.e_l, phi_ge);
  m.temperature = temperature;
  m.ln_factor = ln_factor;
  return m;
}

// |coth(w / 2kT) + 1| / 2.
inline double thermal_factor(double omega, const NoiseModel& m) {
  const double x = omega / (2.0 * m.kt());
  return std::abs(1.0 / std::tanh(x) + 1.0) / 2.0;
}

inline double spectrum_1f(double omega, const NoiseModel& m) {
  if (omega == 0.0) throw NumericalError("noise: 1/f spectrum is singular at zero frequency");
  return m.a_f * m.a_f / std::abs(rad_ns_to_ghz(omega));
}

inline double spectrum_dielectric(double omega, const NoiseModel& m) {
  if (omega == 0.0) return 0.0;
  const double f = rad_ns_to_ghz(omega);
  return thermal_factor(omega, m) * m.a_d * f * f;
}

// Total spectrum with the 1/f part clamped at the margin. `clamped` is set
// when the clamp was applied.
inline double spectrum_total(double omega, const NoiseModel& m, bool* clamped = nullptr) {
  double w_f = omega;
  if (std::abs(omega) < m.margin) {
    w_f = m.margin;
    if (clamped) *clamped = true;
  }
  return spectrum_dielectric(omega, m) + spectrum_1f(w_f, m);
}

enum class Channel { plus, minus, phi };

inline std::string to_string(Channel c) {
  switch (c) {
    case Channel::plus:
      return "plus";
    case Channel::minus:
      return "minus";
    case Channel::phi:
      return "phi";
  }
  return "unknown";
}

// X(t) = sum_p X_p exp(-i p w_d t).
struct PeriodicOperator {
  std::vector<std::pair<int, Matrix2c>> terms;

  static PeriodicOperator constant(const Matrix2c& x) { return {{{0, x}}}; }
};

inline PeriodicOperator as_operator(const PeriodicHamiltonian& h) {
  PeriodicOperator op;
  op.terms.emplace_back(0, h.harmonics[0]);
  for (int q = 1; q <= h.order(); ++q) {
    op.terms.emplace_back(q, h.harmonics[q]);
    op.terms.emplace_back(-q, h.harmonics[q].adjoint());
  }
  return op;
}

struct FilterWeights {
  double omega_d = 0.0;
  double eps01 = 0.0;
  int q_max = 0;
  std::vector<cplx> g_plus, g_minus, g_phi;  // index q + q_max

  cplx g(Channel c, int q) const {
    if (q < -q_max || q > q_max) return 0.0;
    const auto& v = c == Channel::plus ? g_plus : c == Channel::minus ? g_minus : g_phi;
    return v[q + q_max];
  }

  double freq(Channel c, int q) const {
    switch (c) {
      case Channel::minus:
        return q * omega_d + eps01;
      case Channel::plus:
        return q * omega_d - eps01;
      case Channel::phi:
        return q * omega_d;
    }
    return 0.0;
  }

  // W_+ + W_- + W_phi, equal to tr(X^2) averaged over a period for X = sz.
  double conservation_sum() const {
    double s = 0.0;
    for (int i = 0; i < 2 * q_max + 1; ++i)
      s += std::norm(g_plus[i]) + std::norm(g_minus[i]) + 2.0 * std::norm(g_phi[i]);
    return s;
  }

  double weight(Channel c) const {
    double s = 0.0;
    for (int q = -q_max; q <= q_max; ++q) s += (c == Channel::phi ? 2.0 : 1.0) * std::norm(g(c, q));
    return s;
  }
};

namespace detail {

// G_q(a, b) = sum_{k,p} u_{a,k}^dag X_p u_{b,k+q-p}.
inline std::vector<cplx> coupling_series(const ModeCoeffs& ua, const ModeCoeffs& ub, const PeriodicOperator& op,
                                         int kk, int q_max) {
  std::vector<cplx> out(2 * q_max + 1, 0.0);
  const int rows = 2 * kk + 1;
  for (const auto& [p, x] : op.terms) {
    // Precompute X_p u_b row-wise.
    ModeCoeffs xb = (x * ub.transpose()).transpose();
    for (int q = -q_max; q <= q_max; ++q) {
      const int shift = q - p;
      const int r0 = std::max(0, -shift), r1 = std::min(rows, rows - shift);
      cplx s = 0.0;
      for (int r = r0; r < r1; ++r)
        s += std::conj(ua(r, 0)) * xb(r + shift, 0) + std::conj(ua(r, 1)) * xb(r + shift, 1);
      out[q + q_max] += s;
    }
  }
  return out;
}

}  // namespace detail

inline FilterWeights filter_weights(const FloquetSolution& sol,
                                    const PeriodicOperator& op = PeriodicOperator::constant(pauli_z())) {
  if (sol.degenerate)
    throw ValidityError("noise: rotating-wave rates are invalid at a degenerate quasi-energy pair");
  int p_max = 0;
  for (const auto& t : op.terms) p_max = std::max(p_max, std::abs(t.first));
  FilterWeights w;
  w.omega_d = sol.omega_d;
  w.eps01 = sol.eps01;
  w.q_max = 2 * sol.truncation_k + p_max;
  const int kk = sol.truncation_k;
  const auto g01 = detail::coupling_series(sol.modes[0], sol.modes[1], op, kk, w.q_max);
  const auto g10 = detail::coupling_series(sol.modes[1], sol.modes[0], op, kk, w.q_max);
  const auto g00 = detail::coupling_series(sol.modes[0], sol.modes[0], op, kk, w.q_max);
  const auto g11 = detail::coupling_series(sol.modes[1], sol.modes[1], op, kk, w.q_max);
  w.g_minus = g01;
  w.g_plus = g10;
  w.g_phi.resize(g00.size());
  for (size_t i = 0; i < g00.size(); ++i) w.g_phi[i] = 0.5 * (g11[i] - g00[i]);
  return w;
}

// Weights of the undriven model: only q = 0, eps01 equal to the splitting.
inline FilterWeights static_weights(const TwoLevelParams& tl) {
  Eigen::Matrix2d h;
  h << 0.5 * tl.bias, 0.5 * tl.delta, 0.5 * tl.delta, -0.5 * tl.bias;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
  const Eigen::Matrix2d v = es.eigenvectors();
  const Eigen::Matrix2d sz = v.transpose() * Eigen::Vector2d(1.0, -1.0).asDiagonal() * v;
  FilterWeights w;
  w.omega_d = tl.omega_d;
  w.eps01 = es.eigenvalues()(1) - es.eigenvalues()(0);
  w.q_max = 0;
  w.g_minus = {sz(0, 1)};
  w.g_plus = {sz(1, 0)};
  w.g_phi = {0.5 * (sz(1, 1) - sz(0, 0))};
  return w;
}

struct RateTerm {
  int k = 0;
  Channel channel = Channel::minus;
  double freq = 0.0;          // rad/ns
  double weight = 0.0;        // |g|^2, or 2|g|^2 for the phi channel
  double spectrum = 0.0;      // 1/ns
  double contribution = 0.0;  // 1/us
};

struct Rates {
  double gamma_plus = 0.0;   // 1/us
  double gamma_minus = 0.0;  // 1/us
  double gamma_phi = 0.0;    // 1/us
  double gamma_phi_first_order = 0.0;  // regularized 1/f part, 1/us
  std::vector<RateTerm> breakdown;
  bool one_over_f_limited_t1 = false;
  std::vector<std::string> warnings;

  double t1() const {
    const double g = gamma_plus + gamma_minus;
    return g > 0 ? 1.0 / g : std::numeric_limits<double>::infinity();
  }
  double t_phi() const { return gamma_phi > 0 ? 1.0 / gamma_phi : std::numeric_limits<double>::infinity(); }
};

// Terms whose weight falls below this fraction of the largest weight are
// dropped from the breakdown table (they are still summed into the rates).
inline constexpr double kBreakdownFloor = 1e-24;

// Rates for the qubit noise model: dielectric plus 1/f, with the regularized
// first-order 1/f term for the q = 0 dephasing channel.
inline Rates dynamical_rates(const FilterWeights& w, const NoiseModel& m) {
  m.validate();
  Rates r;
  double gm = 0.0, gp = 0.0, gphi = 0.0;
  auto add = [&](Channel c, int q, double weight, double& acc, bool depol) {
    if (weight == 0.0) return;
    const double f = w.freq(c, q);
    bool clamped = false;
    const double s = spectrum_total(f, m, &clamped);
    if (clamped && depol) r.one_over_f_limited_t1 = true;
    const double contrib = weight * s;
    acc += contrib;
    if (weight > kBreakdownFloor) r.breakdown.push_back({q, c, f, weight, s, per_ns_to_per_us(contrib)});
  };
  for (int q = -w.q_max; q <= w.q_max; ++q) {
    add(Channel::minus, q, std::norm(w.g(Channel::minus, q)), gm, true);
    add(Channel::plus, q, std::norm(w.g(Channel::plus, q)), gp, true);
    if (q != 0) add(Channel::phi, q, 2.0 * std::norm(w.g(Channel::phi, q)), gphi, false);
  }
  const double first = m.a_f * std::abs(2.0 * w.g(Channel::phi, 0)) * m.ln_factor;
  r.breakdown.push_back({0, Channel::phi, 0.0, 2.0 * std::norm(w.g(Channel::phi, 0)),
                         std::numeric_limits<double>::quiet_NaN(), per_ns_to_per_us(first)});
  r.gamma_minus = per_ns_to_per_us(gm);
  r.gamma_plus = per_ns_to_per_us(gp);
  r.gamma_phi_first_order = per_ns_to_per_us(first);
  r.gamma_phi = per_ns_to_per_us(gphi + first);
  if (r.one_over_f_limited_t1)
    r.warnings.push_back("1/f-limited T1: a depolarization filter frequency lies within the clamp margin of zero");
  return r;
}

inline Rates static_rates(const TwoLevelParams& tl, const NoiseModel& m) { return dynamical_rates(static_weights(tl), m); }

// Static rates of the circuit at dc flux `phi_dc`, from the spectrum at pi.
inline Rates static_rates(const StaticSpectrum& spec_at_pi, double phi_dc, const NoiseModel& m) {
  return static_rates(two_level_reduce(spec_at_pi, 0.0, phi_dc, 1.0), m);
}

// Rates for an arbitrary regular spectrum S(w), including the q = 0
// dephasing term 2|g_0phi|^2 S(0). Returned in the units of S.
struct PlainRates {
  double gamma_plus = 0.0, gamma_minus = 0.0, gamma_phi = 0.0;
};

inline PlainRates rates_from_weights(const FilterWeights& w, const std::function<double(double)>& spectrum) {
  PlainRates r;
  for (int q = -w.q_max; q <= w.q_max; ++q) {
    const double wm = std::norm(w.g(Channel::minus, q));
    const double wp = std::norm(w.g(Channel::plus, q));
    const double wf = 2.0 * std::norm(w.g(Channel::phi, q));
    if (wm > 0) r.gamma_minus += wm * spectrum(w.freq(Channel::minus, q));
    if (wp > 0) r.gamma_plus += wp * spectrum(w.freq(Channel::plus, q));
    if (wf > 0) r.gamma_phi += wf * spectrum(w.freq(Channel::phi, q));
  }
  return r;
}

// Coherence factor: Gaussian 1/f decay times exponential decay from the
// sidebands. t in us.
inline double dephasing_envelope(double t_us, const FilterWeights& w, const NoiseModel& m) {
  if (t_us < 0) throw ValidityError("noise: dephasing envelope needs t >= 0");
  if (t_us == 0) return 1.0;
  const double t = t_us * 1e3;
  const double g0 = std::abs(w.g(Channel::phi, 0));
  const double log_term = std::abs(std::log(m.omega_ir * t_us * 1e-6));
  double expo = 4.0 * m.a_f * m.a_f * g0 * g0 * t * t * log_term;
  for (int q = -w.q_max; q <= w.q_max; ++q) {
    if (q == 0) continue;
    const double wf = 2.0 * std::norm(w.g(Channel::phi, q));
    if (wf > 0) expo += wf * spectrum_total(w.freq(Channel::phi, q), m) * t;
  }
  return std::exp(-expo);
}

// zeta_mu^-1 sum_q (t/pi) sinc((w - w_q) t) |g_q|^2, t in ns.
inline double filter_function(double omega, double t, const FilterWeights& w, Channel c) {
  if (!(t > 0)) throw ValidityError("noise: filter function needs t > 0");
  const double inv_zeta = c == Channel::phi ? 2.0 : 1.0;
  double s = 0.0;
  for (int q = -w.q_max; q <= w.q_max; ++q) {
    const double g2 = std::norm(w.g(c, q));
    if (g2 == 0.0) continue;
    const double x = (omega - w.freq(c, q)) * t;
    const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
    s += t / kPi * sinc * g2;
  }
  return inv_zeta * s;
}

}  // namespace sweetfloq
