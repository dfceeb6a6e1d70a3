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

// Pulsed evolution of the driven two-level model: Floquet-frame single-qubit
// gates, adiabatic ramp-down readout mapping, and the two-qubit flip-flop
// gate between two driven fluxonium qubits.
//
// The primary drive phase theta(t) = int w_d dt is carried as an extra ODE
// variable so that w_d may vary along a schedule.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "sweetfloq/circuit.hpp"
#include "sweetfloq/common.hpp"
#include "sweetfloq/floquet.hpp"
#include "sweetfloq/noise.hpp"
#include "sweetfloq/ode.hpp"
#include "sweetfloq/sweep.hpp"
#include "sweetfloq/sweetspot.hpp"

namespace sweetfloq {

using Matrix4c = Eigen::Matrix4cd;

enum class RampShape { cosine, linear };

inline double ramp_profile(double x, RampShape shape) {
  x = std::clamp(x, 0.0, 1.0);
  return shape == RampShape::cosine ? 0.5 * (1.0 - std::cos(kPi * x)) : x;
}

// Flat-top envelope with raised-cosine edges, each a fraction `edge` of the
// duration.
inline double flat_top(double x, double edge) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  if (edge <= 0.0) return 1.0;
  if (x < edge) return 0.5 * (1.0 - std::cos(kPi * x / edge));
  if (x > 1.0 - edge) return 0.5 * (1.0 - std::cos(kPi * (1.0 - x) / edge));
  return 1.0;
}

// Secondary tone d * envelope * cos(w' t + phase) sz.
struct SecondaryTone {
  double amplitude = 0.0;  // rad/ns
  double omega = 0.0;      // rad/ns
  double phase = 0.0;
  double ramp_fraction = 0.1;
};

struct Segment {
  double duration = 0.0;  // ns
  double amp_start = 0.0, amp_end = 0.0;      // rad/ns
  double omega_start = 0.0, omega_end = 0.0;  // rad/ns
  std::optional<SecondaryTone> tone;
};

struct PulseSchedule {
  std::vector<Segment> segments;
  RampShape ramp_shape = RampShape::cosine;
  std::string protocol;

  double total_duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
  }

  void validate() const {
    if (segments.empty()) throw ValidityError("dynamics: schedule has no segments");
    for (const auto& s : segments)
      if (!(s.duration >= 0)) throw ValidityError("dynamics: segment durations must be non-negative");
    for (size_t i = 0; i + 1 < segments.size(); ++i) {
      const auto& a = segments[i];
      const auto& b = segments[i + 1];
      if (std::abs(a.amp_end - b.amp_start) > 1e-12 * (1.0 + std::abs(a.amp_end)) ||
          std::abs(a.omega_end - b.omega_start) > 1e-12 * (1.0 + std::abs(a.omega_end)))
        throw ValidityError("dynamics: drive parameters must be continuous across segments");
    }
    if (!(total_duration() > 0) && protocol != "identity")
      throw ValidityError("dynamics: schedule duration must be positive");
  }

  struct Local {
    const Segment* seg;
    double x;        // fraction of the segment elapsed
    double t_local;  // time since segment start
  };

  Local locate(double t) const {
    double t0 = 0.0;
    for (const auto& s : segments) {
      if (t <= t0 + s.duration || &s == &segments.back()) {
        const double x = s.duration > 0 ? (t - t0) / s.duration : 1.0;
        return {&s, std::clamp(x, 0.0, 1.0), t - t0};
      }
      t0 += s.duration;
    }
    return {&segments.back(), 1.0, 0.0};
  }

  double amp(double t) const {
    const Local l = locate(t);
    return l.seg->amp_start + (l.seg->amp_end - l.seg->amp_start) * ramp_profile(l.x, ramp_shape);
  }
  double omega(double t) const {
    const Local l = locate(t);
    return l.seg->omega_start + (l.seg->omega_end - l.seg->omega_start) * ramp_profile(l.x, ramp_shape);
  }
  double tone(double t) const {
    const Local l = locate(t);
    if (!l.seg->tone) return 0.0;
    const auto& tn = *l.seg->tone;
    return tn.amplitude * flat_top(l.x, tn.ramp_fraction) * std::cos(tn.omega * t + tn.phase);
  }

  // Time boundaries of all segments, for piecewise integration.
  std::vector<double> boundaries() const {
    std::vector<double> b{0.0};
    for (const auto& s : segments) b.push_back(b.back() + s.duration);
    return b;
  }
};

struct GateResult {
  Eigen::MatrixXcd unitary_floquet_frame;
  Eigen::MatrixXcd unitary_lab;
  double fidelity = 0.0;
  std::string target;
  std::vector<double> times;                      // ns
  std::vector<std::array<double, 2>> populations;  // Floquet populations of the evolved |w_0>
  std::array<double, 2> z_pre{}, z_post{};         // optimized virtual Z phases
  double unitarity_defect = 0.0;
  double final_phase = 0.0;  // primary drive phase at the end
  std::vector<std::string> warnings;
};

// Named single-qubit targets in the Floquet basis.
inline Matrix2c gate_target(const std::string& name) {
  Matrix2c m;
  const cplx i(0, 1);
  if (name == "x") {
    m << 0, 1, 1, 0;
  } else if (name == "sqrt-x") {
    m << 1, -i, -i, 1;
    m /= std::sqrt(2.0);
  } else if (name == "s") {
    m << 1, 0, 0, i;
  } else if (name == "t") {
    m << 1, 0, 0, std::polar(1.0, kPi / 4);
  } else if (name == "identity") {
    m.setIdentity();
  } else {
    throw ValidityError("dynamics: unknown gate target '" + name + "'");
  }
  return m;
}

// (|Tr(T^dag U)|^2 + d) / (d (d + 1)).
inline double average_gate_fidelity(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& target) {
  const double d = static_cast<double>(u.rows());
  const double tr = std::abs((target.adjoint() * u).trace());
  return std::clamp((tr * tr + d) / (d * (d + 1.0)), 0.0, 1.0);
}

struct ZOptimized {
  double fidelity = 0.0;
  std::array<double, 2> pre{}, post{};
};

// Single-qubit fidelity maximized over virtual Z rotations diag(1, e^{ia})
// before and after the gate.
inline ZOptimized fidelity_with_z(const Matrix2c& u, const Matrix2c& target) {
  const Matrix2c m = target.conjugate().cwiseProduct(u);
  auto best_for = [&](double a) {
    const cplx ea = std::polar(1.0, a);
    return std::abs(m(0, 0) + m(1, 0) * ea) + std::abs(m(0, 1) + m(1, 1) * ea);
  };
  int n = 720;
  double a_best = 0.0, v_best = -1.0;
  for (int i = 0; i < n; ++i) {
    const double a = kTwoPi * i / n;
    const double v = best_for(a);
    if (v > v_best) {
      v_best = v;
      a_best = a;
    }
  }
  const double h = kTwoPi / n;
  const auto r = boost::math::tools::brent_find_minima([&](double a) { return -best_for(a); }, a_best - h,
                                                       a_best + h, std::numeric_limits<double>::digits);
  if (-r.second > v_best) {
    v_best = -r.second;
    a_best = r.first;
  }
  const cplx ea = std::polar(1.0, a_best);
  const cplx x = m(0, 0) + m(1, 0) * ea, y = m(0, 1) + m(1, 1) * ea;
  ZOptimized out;
  out.post = {0.0, a_best};
  out.pre = {0.0, std::arg(x) - std::arg(y)};
  out.fidelity = std::min(1.0, (v_best * v_best + 2.0) / 6.0);
  return out;
}

struct ZOptimized4 {
  double fidelity = 0.0;
  std::array<double, 4> phases{};  // post L, post R, pre L, pre R
};

// Two-qubit fidelity maximized over local Z phases before and after the
// gate, by coordinate ascent from several starts.
inline ZOptimized4 fidelity_with_z4(const Matrix4c& u, const Matrix4c& target) {
  const Matrix4c m = target.conjugate().cwiseProduct(u);
  auto value = [&](const std::array<double, 4>& p) {
    cplx s = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        const double ph = p[0] * (a >> 1) + p[1] * (a & 1) + p[2] * (b >> 1) + p[3] * (b & 1);
        s += m(a, b) * std::polar(1.0, ph);
      }
    return s;
  };
  ZOptimized4 best;
  double best_abs = -1.0;
  for (int start = 0; start < 4; ++start) {
    std::array<double, 4> p{};
    for (int i = 0; i < 4; ++i) p[i] = start * kPi / 2 * (i + 1);
    double prev = -1.0;
    for (int sweep = 0; sweep < 500; ++sweep) {
      for (int i = 0; i < 4; ++i) {
        auto q = p;
        q[i] = 0.0;
        const cplx v0 = value(q);
        q[i] = kPi;
        const cplx v2 = value(q);
        const cplx x = 0.5 * (v0 + v2), y = 0.5 * (v0 - v2);
        p[i] = std::arg(x) - std::arg(y);
      }
      const double cur = std::abs(value(p));
      if (std::abs(cur - prev) < 1e-15) break;
      prev = cur;
    }
    const double v = std::abs(value(p));
    if (v > best_abs) {
      best_abs = v;
      best.phases = p;
    }
  }
  best.fidelity = std::min(1.0, (best_abs * best_abs + 4.0) / 20.0);
  return best;
}

struct EvolveOptions {
  OdeTolerance tol{1e-11, 1e-13};
  int population_samples = 0;  // 0: only the final state
};

namespace detail {

// Propagator and drive phase for a two-level schedule.
struct ClosedRun {
  Matrix2c u;
  double theta = 0.0;
  std::vector<double> times;
  std::vector<Matrix2c> u_samples;
  std::vector<double> theta_samples;
};

inline ClosedRun run_two_level(const PulseSchedule& sched, const TwoLevelParams& tl, const EvolveOptions& opt,
                               double bias_offset = 0.0) {
  const double total = sched.total_duration();
  std::vector<double> cuts = sched.boundaries();
  std::vector<double> sample_t;
  if (opt.population_samples > 1)
    for (int i = 0; i < opt.population_samples; ++i) sample_t.push_back(total * i / (opt.population_samples - 1));
  std::vector<double> all = cuts;
  all.insert(all.end(), sample_t.begin(), sample_t.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
            all.end());

  OdeState y(5, 0.0);
  y[0] = 1.0;
  y[3] = 1.0;
  const Matrix2c sx = pauli_x(), sz = pauli_z();
  const double bias = tl.bias + bias_offset;
  auto rhs = [&](const OdeState& x, OdeState& dx, double t) {
    const double th = x[4].real();
    const double coeff = sched.amp(t) * std::cos(th) + 0.5 * bias + sched.tone(t);
    const Matrix2c h = 0.5 * tl.delta * sx + coeff * sz;
    Eigen::Map<const Matrix2c> u(x.data());
    Eigen::Map<Matrix2c> du(dx.data());
    du.noalias() = cplx(0, -1) * (h * u);
    dx[4] = sched.omega(t);
  };
  ClosedRun run;
  size_t si = 0;
  auto record = [&](double t) {
    while (si < sample_t.size() && std::abs(sample_t[si] - t) < 1e-12) {
      run.times.push_back(sample_t[si]);
      run.u_samples.push_back(Eigen::Map<const Matrix2c>(y.data()));
      run.theta_samples.push_back(y[4].real());
      ++si;
    }
  };
  record(0.0);
  for (size_t i = 0; i + 1 < all.size(); ++i) {
    if (all[i + 1] > all[i]) ode_integrate(rhs, y, all[i], all[i + 1], opt.tol);
    record(all[i + 1]);
  }
  run.u = Eigen::Map<const Matrix2c>(y.data());
  run.theta = y[4].real();
  return run;
}

inline TwoLevelParams at_drive(const TwoLevelParams& tl, double amp, double omega) {
  TwoLevelParams t = tl.with_amp(amp);
  t.omega_d = omega;
  return t;
}

}  // namespace detail

// Lab-frame integration of a schedule, reported in the Floquet frame of the
// primary drive. When the schedule starts and ends at the same drive point
// the quasi-energy phases exp(i eps_j T) are divided out.
inline GateResult evolve_closed(const PulseSchedule& sched, const TwoLevelParams& tl, const EvolveOptions& opt = {},
                                const std::string& target = "identity") {
  sched.validate();
  const Segment& first = sched.segments.front();
  const Segment& last = sched.segments.back();
  const FloquetSolution start = floquet_solve_extended(detail::at_drive(tl, first.amp_start, first.omega_start));
  const bool same = first.amp_start == last.amp_end && first.omega_start == last.omega_end;
  const FloquetSolution end =
      same ? start : floquet_solve_extended(detail::at_drive(tl, last.amp_end, last.omega_end));
  const detail::ClosedRun run = detail::run_two_level(sched, tl, opt);
  const double total = sched.total_duration();
  GateResult r;
  r.unitary_lab = run.u;
  r.final_phase = run.theta;
  Matrix2c uf = end.mode_matrix(run.theta).adjoint() * run.u * start.mode_matrix(0.0);
  if (same) {
    uf = Eigen::Vector2cd(std::polar(1.0, start.eps_mode[0] * total), std::polar(1.0, start.eps_mode[1] * total))
             .asDiagonal() *
         uf;
  } else {
    r.warnings.push_back("schedule ends at a different drive point; quasi-energy phases not removed");
  }
  r.unitary_floquet_frame = uf;
  r.unitarity_defect = (run.u.adjoint() * run.u - Matrix2c::Identity()).norm();
  r.target = target;
  const Matrix2c tgt = gate_target(target);
  r.fidelity = average_gate_fidelity(uf, tgt);
  for (size_t i = 0; i < run.times.size(); ++i) {
    const Vector2c psi = run.u_samples[i] * start.mode(0, 0.0);
    // Populations relative to the start point's Floquet basis.
    const Matrix2c w = start.mode_matrix(run.theta_samples[i]);
    r.times.push_back(run.times[i]);
    r.populations.push_back({std::norm(w.col(0).dot(psi)), std::norm(w.col(1).dot(psi))});
  }
  return r;
}

// ---------------------------------------------------------------------------
// Rabi rotations with a secondary tone.

struct RabiSettings {
  double tau = 100.0;           // ns
  double ramp_fraction = 0.1;
  std::optional<double> omega_prime;  // default: eps01
};

inline PulseSchedule rabi_schedule(const TwoLevelParams& tl, double d, double tau, double omega_prime, double phase,
                                   double ramp_fraction = 0.1) {
  PulseSchedule s;
  s.protocol = "rabi";
  Segment seg;
  seg.duration = tau;
  seg.amp_start = seg.amp_end = tl.amp;
  seg.omega_start = seg.omega_end = tl.omega_d;
  seg.tone = SecondaryTone{d, omega_prime, phase, ramp_fraction};
  s.segments.push_back(seg);
  return s;
}

struct RabiCalibration {
  std::string target;
  double amplitude = 0.0;    // rad/ns
  double omega_prime = 0.0;  // rad/ns
  double phase = 0.0;
  double tau = 0.0;
  double g0_minus = 0.0;  // |g_{0,-}|
  double predicted_amplitude = 0.0;
  GateResult result;
  ZOptimized z;
};

// Rotation angle -> amplitude predictor and a 1-D fidelity search around it.
inline RabiCalibration calibrate_rotation(const TwoLevelParams& tl, const std::string& target,
                                          const RabiSettings& set = {}, const EvolveOptions& opt = {}) {
  double angle;
  if (target == "x")
    angle = kPi;
  else if (target == "sqrt-x")
    angle = kPi / 2;
  else
    throw ValidityError("dynamics: rotation calibration supports x and sqrt-x");
  const FloquetSolution sol = floquet_solve_extended(tl);
  const FilterWeights w = filter_weights(sol);
  const cplx g0m = w.g(Channel::minus, 0);
  RabiCalibration c;
  c.target = target;
  c.tau = set.tau;
  c.g0_minus = std::abs(g0m);
  c.omega_prime = set.omega_prime.value_or(sol.eps01);
  c.phase = 0.0 - std::arg(g0m);
  const double area = set.tau * (1.0 - set.ramp_fraction);
  c.predicted_amplitude = angle / (c.g0_minus * area);
  const Matrix2c tgt = gate_target(target);
  auto fid = [&](double d) {
    const GateResult r = evolve_closed(rabi_schedule(tl, d, set.tau, c.omega_prime, c.phase, set.ramp_fraction), tl,
                                       opt, target);
    return fidelity_with_z(r.unitary_floquet_frame, tgt).fidelity;
  };
  const double d0 = c.predicted_amplitude;
  boost::uintmax_t iters = 60;
  const auto best = boost::math::tools::brent_find_minima([&](double d) { return -fid(d); }, 0.8 * d0, 1.2 * d0,
                                                          30, iters);
  c.amplitude = best.first;
  EvolveOptions o2 = opt;
  if (o2.population_samples == 0) o2.population_samples = 101;
  c.result = evolve_closed(rabi_schedule(tl, c.amplitude, set.tau, c.omega_prime, c.phase, set.ramp_fraction), tl, o2,
                           target);
  c.z = fidelity_with_z(c.result.unitary_floquet_frame, tgt);
  c.result.fidelity = c.z.fidelity;
  c.result.z_pre = c.z.pre;
  c.result.z_post = c.z.post;
  return c;
}

struct ChevronPoint {
  double omega_prime = 0.0;  // rad/ns
  double transfer = 0.0;     // |<w_1|U|w_0>|^2
};

inline std::vector<ChevronPoint> rabi_chevron(const TwoLevelParams& tl, double d, double tau,
                                              const std::vector<double>& omega_primes, double phase = 0.0,
                                              double ramp_fraction = 0.1, int threads = 1,
                                              const EvolveOptions& opt = {}) {
  return parallel_map<ChevronPoint>(omega_primes.size(), threads, [&](size_t i) {
    const GateResult r = evolve_closed(rabi_schedule(tl, d, tau, omega_primes[i], phase, ramp_fraction), tl, opt);
    return ChevronPoint{omega_primes[i], std::norm(r.unitary_floquet_frame(1, 0))};
  });
}

// ---------------------------------------------------------------------------
// Phase gates from a temporary change of the drive amplitude.

inline PulseSchedule phase_schedule(const TwoLevelParams& tl, double delta_amp, double tau,
                                    double ramp_fraction = 0.2) {
  PulseSchedule s;
  s.protocol = "phase";
  const double tr = ramp_fraction * tau;
  const double a0 = tl.amp, a1 = tl.amp + delta_amp, w = tl.omega_d;
  s.segments.push_back({tr, a0, a1, w, w, std::nullopt});
  s.segments.push_back({tau - 2 * tr, a1, a1, w, w, std::nullopt});
  s.segments.push_back({tr, a1, a0, w, w, std::nullopt});
  return s;
}

// Relative Floquet-frame phase predicted from the quasi-energy integral,
// -int [eps01(A(t)) - eps01(A)] dt.
inline double predicted_phase(const TwoLevelParams& tl, const PulseSchedule& sched) {
  const FloquetSolution ref = floquet_solve_extended(tl);
  auto eps01_at = [&](double t) {
    ExtendedOptions opt;
    opt.labeling = Labeling::reference;
    opt.reference = &ref;
    const FloquetSolution s = floquet_solve_extended(detail::at_drive(tl, sched.amp(t), sched.omega(t)), opt);
    return s.eps01 - ref.eps01;
  };
  double total = 0.0;
  const auto b = sched.boundaries();
  for (size_t i = 0; i + 1 < b.size(); ++i)
    if (b[i + 1] > b[i]) total += boost::math::quadrature::gauss<double, 20>::integrate(eps01_at, b[i], b[i + 1]);
  return -total;
}

inline double relative_phase(const Eigen::MatrixXcd& uf) { return std::arg(uf(1, 1) / uf(0, 0)); }

struct PhaseCalibration {
  std::string target;
  double target_phase = 0.0;
  double delta_amp = 0.0;  // rad/ns
  double predicted_delta_amp = 0.0;
  double tau = 0.0;
  double ramp_fraction = 0.2;
  double predicted = 0.0;  // predicted phase at the calibrated delta_amp
  double simulated = 0.0;
  GateResult result;
};

inline PhaseCalibration calibrate_phase_gate(const TwoLevelParams& tl, const std::string& target, double tau = 100.0,
                                             double ramp_fraction = 0.2, const EvolveOptions& opt = {}) {
  PhaseCalibration c;
  c.target = target;
  c.tau = tau;
  c.ramp_fraction = ramp_fraction;
  if (target == "s")
    c.target_phase = kPi / 2;
  else if (target == "t")
    c.target_phase = kPi / 4;
  else
    throw ValidityError("dynamics: phase calibration supports s and t");
  const double slope = dispersion_amp(tl);
  if (std::abs(slope) < 1e-9) throw ValidityError("dynamics: eps01 does not depend on A at this point");
  // A cosine ramp contributes half its duration to the pulse area.
  const double area = tau * (1.0 - ramp_fraction);
  c.predicted_delta_amp = -c.target_phase / (slope * area);
  auto sim_phase = [&](double da) {
    const GateResult r = evolve_closed(phase_schedule(tl, da, tau, ramp_fraction), tl, opt);
    return std::remainder(relative_phase(r.unitary_floquet_frame) - c.target_phase, kTwoPi);
  };
  // Refine on the simulated phase; the bracket grows until it straddles.
  double lo = 0.5 * c.predicted_delta_amp, hi = 1.5 * c.predicted_delta_amp;
  double flo = sim_phase(lo), fhi = sim_phase(hi);
  for (int i = 0; i < 8 && (flo > 0) == (fhi > 0); ++i) {
    lo *= 0.5;
    hi *= 1.5;
    flo = sim_phase(lo);
    fhi = sim_phase(hi);
  }
  if ((flo > 0) == (fhi > 0)) throw NumericalError("dynamics: phase gate calibration did not bracket the target");
  boost::uintmax_t iters = 60;
  const auto root = boost::math::tools::toms748_solve(sim_phase, lo, hi, flo, fhi,
                                                      boost::math::tools::eps_tolerance<double>(40), iters);
  c.delta_amp = 0.5 * (root.first + root.second);
  const PulseSchedule sched = phase_schedule(tl, c.delta_amp, tau, ramp_fraction);
  EvolveOptions o2 = opt;
  if (o2.population_samples == 0) o2.population_samples = 101;
  c.result = evolve_closed(sched, tl, o2, target);
  c.simulated = relative_phase(c.result.unitary_floquet_frame);
  c.predicted = predicted_phase(tl, sched);
  return c;
}

// ---------------------------------------------------------------------------
// Adiabatic ramp-down of the drive amplitude.

struct RampGapCheck {
  double min_gap = 0.0;  // rad/ns
  double amp_at_min = 0.0;
};

// Minimal canonical eps01 along A in [0, A0] at fixed w_d; the continuation
// solve raises a validity error if the gap closes.
inline RampGapCheck ramp_gap_check(const TwoLevelParams& tl, int n = 100) {
  ExtendedOptions opt;
  opt.labeling = Labeling::continuation;
  (void)floquet_solve_extended(tl, opt);
  RampGapCheck out;
  out.min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const double a = tl.amp * i / n;
    const double e = floquet_solve_extended(tl.with_amp(a)).eps01;
    if (e < out.min_gap) {
      out.min_gap = e;
      out.amp_at_min = a;
    }
  }
  if (out.min_gap < 1e-8 * tl.omega_d) throw ValidityError("dynamics: quasi-energy gap closes along the ramp path");
  return out;
}

struct AdiabaticResult {
  double t_ramp = 0.0;
  std::array<std::array<double, 2>, 2> populations{};  // [Floquet j][static g, e]
  double fidelity = 0.0;
  double min_gap = 0.0;  // rad/ns
};

// Maps Floquet state j, labeled by continuation from A = 0, onto the static
// eigenstate j by A(t) = A0 (1 + cos(pi t / t_ramp)) / 2.
inline AdiabaticResult adiabatic_map(const TwoLevelParams& tl, double t_ramp, const EvolveOptions& opt = {},
                                     std::optional<RampGapCheck> gap = std::nullopt) {
  if (!(t_ramp >= 0)) throw ValidityError("dynamics: t_ramp must be non-negative");
  if (!gap) gap = ramp_gap_check(tl);
  ExtendedOptions eo;
  eo.labeling = Labeling::continuation;
  const FloquetSolution sol = floquet_solve_extended(tl, eo);
  const FloquetSolution stat = detail::static_solution(tl);
  Matrix2c u = Matrix2c::Identity();
  if (t_ramp > 0) {
    PulseSchedule s;
    s.protocol = "ramp_down";
    s.segments.push_back({t_ramp, tl.amp, 0.0, tl.omega_d, tl.omega_d, std::nullopt});
    u = detail::run_two_level(s, tl, opt).u;
  }
  AdiabaticResult r;
  r.t_ramp = t_ramp;
  r.min_gap = gap->min_gap;
  for (int j = 0; j < 2; ++j) {
    const Vector2c psi = u * sol.mode(j, 0.0);
    for (int m = 0; m < 2; ++m) r.populations[j][m] = std::norm(stat.mode(m, 0.0).dot(psi));
  }
  r.fidelity = 0.5 * (r.populations[0][0] + r.populations[1][1]);
  return r;
}

// ---------------------------------------------------------------------------
// Two coupled qubits with H_int = J sz^L sz^R.

struct QubitSpec {
  FluxoniumParams circuit;
  double phi_dc = kPi;  // radians
};

struct TwoQubitSystem {
  QubitSpec left, right;
  double j_coupling = 0.0;  // GHz
  // Drive points (phi_ac in radians, f in GHz). Frequencies are starting
  // guesses, re-solved onto the dc sweet manifold.
  double right_phi_ac = 0.0, right_f = 0.0;
  double left_idle_phi_ac = 0.0, left_idle_f = 0.0;
  double left_gate_phi_ac_lo = 0.0, left_gate_phi_ac_hi = 0.0, left_gate_f = 0.0;
  int path_samples = 21;

  void validate() const {
    left.circuit.validate();
    right.circuit.validate();
    if (!(j_coupling >= 0)) throw ValidityError("two-qubit: J must be non-negative");
    if (path_samples < 4) throw ValidityError("two-qubit: path needs at least 4 samples");
  }
};

struct InteractionTerms {
  cplx flip_flop = 0.0;       // J g^L_{0+} g^R_{0-}, rad/ns
  cplx flip_flop_conj = 0.0;  // J g^L_{0-} g^R_{0+}
  double zz = 0.0;            // J g^L_{0phi} g^R_{0phi}
  double detuning = 0.0;      // eps01^L - eps01^R, rad/ns
  bool resonant = false;
  double swap_time = 0.0;        // pi / (2 |flip_flop|), ns
  double sqrt_iswap_time = 0.0;  // pi / (4 |flip_flop|), ns
};

inline InteractionTerms two_qubit_interaction_picture(const FloquetSolution& left, const FloquetSolution& right,
                                                      double j_rad_ns, double resonance_tol = 1e-6) {
  const FilterWeights wl = filter_weights(left), wr = filter_weights(right);
  InteractionTerms t;
  t.flip_flop = j_rad_ns * wl.g(Channel::plus, 0) * wr.g(Channel::minus, 0);
  t.flip_flop_conj = j_rad_ns * wl.g(Channel::minus, 0) * wr.g(Channel::plus, 0);
  t.zz = j_rad_ns * wl.g(Channel::phi, 0).real() * wr.g(Channel::phi, 0).real();
  t.detuning = left.eps01 - right.eps01;
  t.resonant = std::abs(t.detuning) < resonance_tol * std::max(left.omega_d, right.omega_d);
  if (std::abs(t.flip_flop) > 0) {
    t.swap_time = kPi / (2.0 * std::abs(t.flip_flop));
    t.sqrt_iswap_time = kPi / (4.0 * std::abs(t.flip_flop));
  }
  return t;
}

struct PathSample {
  double s = 0.0;
  double phi_ac = 0.0;  // radians
  double f = 0.0;       // GHz
  FloquetSolution sol;
  Rates rates;
};

// Prepared two-qubit problem: located drive points and the left-qubit path
// between idle and gate points along its dc sweet manifold.
struct TwoQubitSetup {
  TwoQubitSystem sys;
  DrivenCircuit left, right;
  SweetPoint right_point, left_idle, left_gate;
  TwoLevelParams right_tl, left_idle_tl, left_gate_tl;
  FloquetSolution right_sol, left_idle_sol, left_gate_sol;
  std::vector<PathSample> path;
  InteractionTerms gate_terms, idle_terms;
  NoiseModel left_noise, right_noise;
  Rates right_rates;
  std::vector<std::string> warnings;

  double j_rad_ns() const { return ghz_to_rad_ns(sys.j_coupling); }

  // Path parameter s in [0, 1] -> (A, w_d) of the left qubit.
  std::optional<boost::math::interpolators::cardinal_cubic_b_spline<double>> amp_spline, omega_spline;

  double left_amp(double s) const { return (*amp_spline)(std::clamp(s, 0.0, 1.0)); }
  double left_omega(double s) const { return (*omega_spline)(std::clamp(s, 0.0, 1.0)); }
};

struct TwoQubitNoiseSettings {
  double tan_delta = 1.1e-6;
  double delta_f = 1.8e-6;
  double temperature = 0.015;
  double ln_factor = 4.0;
};

inline TwoQubitSetup prepare_two_qubit(const TwoQubitSystem& sys, const TwoQubitNoiseSettings& ns = {}) {
  sys.validate();
  TwoQubitSetup st;
  st.sys = sys;
  st.left = DrivenCircuit{diagonalize_fluxonium(sys.left.circuit, kPi), sys.left.phi_dc, 0.2};
  st.right = DrivenCircuit{diagonalize_fluxonium(sys.right.circuit, kPi), sys.right.phi_dc, 0.2};
  st.left_noise = noise_from_circuit(st.left.spec_at_pi, ns.tan_delta, ns.delta_f, ns.temperature, ns.ln_factor);
  st.right_noise = noise_from_circuit(st.right.spec_at_pi, ns.tan_delta, ns.delta_f, ns.temperature, ns.ln_factor);
  SweetOptions so;
  auto on_manifold = [&](const DrivenCircuit& c, double phi_ac, double f_guess, double span) {
    auto p = dc_root_near(c, phi_ac, f_guess - span, f_guess + span, so);
    if (!p) throw ValidityError("two-qubit: no dc sweet point near the requested drive point");
    return *p;
  };
  st.right_point = on_manifold(st.right, sys.right_phi_ac, sys.right_f, 0.02);
  st.right_tl = st.right.at(st.right_point.phi_ac, st.right_point.f_d);
  st.right_sol = floquet_solve_extended(st.right_tl);
  const double target = st.right_sol.eps01;

  // Gate point: eps01 of the left qubit on its manifold matches the right.
  double lo = sys.left_gate_phi_ac_lo, hi = sys.left_gate_phi_ac_hi;
  auto left_eps = [&](double phi_ac) {
    const SweetPoint p = on_manifold(st.left, phi_ac, sys.left_gate_f, 0.02);
    return std::make_pair(ghz_to_rad_ns(p.eps01) - target, p);
  };
  auto flo = left_eps(lo), fhi = left_eps(hi);
  if ((flo.first > 0) == (fhi.first > 0))
    throw ValidityError("two-qubit: gate amplitude bracket does not straddle the right qubit's eps01");
  SweetPoint gate = flo.first == 0 ? flo.second : fhi.second;
  for (int it = 0; it < 60 && std::abs(hi - lo) > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto fm = left_eps(mid);
    gate = fm.second;
    if ((fm.first > 0) == (flo.first > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  st.left_gate = gate;
  st.left_gate_tl = st.left.at(gate.phi_ac, gate.f_d);
  st.left_gate_sol = floquet_solve_extended(st.left_gate_tl);
  st.left_idle = on_manifold(st.left, sys.left_idle_phi_ac, sys.left_idle_f, 0.02);
  st.left_idle_tl = st.left.at(st.left_idle.phi_ac, st.left_idle.f_d);
  st.left_idle_sol = floquet_solve_extended(st.left_idle_tl);

  // Path: linear in phi_ac, projected onto the manifold along f.
  const int n = sys.path_samples;
  double f_prev = st.left_idle.f_d;
  std::vector<double> amps, omegas;
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    const double phi_ac = st.left_idle.phi_ac + (st.left_gate.phi_ac - st.left_idle.phi_ac) * s;
    SweetPoint p;
    if (i == 0) {
      p = st.left_idle;
    } else if (i == n - 1) {
      p = st.left_gate;
    } else {
      auto q = dc_root_near(st.left, phi_ac, f_prev - 0.01, f_prev + 0.01, so);
      if (!q || q->gap_flag) throw ValidityError("two-qubit: left-qubit path leaves the dc sweet manifold");
      p = *q;
    }
    f_prev = p.f_d;
    PathSample ps;
    ps.s = s;
    ps.phi_ac = p.phi_ac;
    ps.f = p.f_d;
    const TwoLevelParams tl = st.left.at(p.phi_ac, p.f_d);
    ps.sol = floquet_solve_extended(tl);
    ps.rates = dynamical_rates(filter_weights(ps.sol), st.left_noise);
    amps.push_back(tl.amp);
    omegas.push_back(tl.omega_d);
    st.path.push_back(std::move(ps));
  }
  const double h = 1.0 / (n - 1);
  st.amp_spline.emplace(amps.begin(), amps.end(), 0.0, h);
  st.omega_spline.emplace(omegas.begin(), omegas.end(), 0.0, h);
  st.right_rates = dynamical_rates(filter_weights(st.right_sol), st.right_noise);

  const double j = st.j_rad_ns();
  st.gate_terms = two_qubit_interaction_picture(st.left_gate_sol, st.right_sol, j);
  st.idle_terms = two_qubit_interaction_picture(st.left_idle_sol, st.right_sol, j);
  for (const auto& w : st.left_gate_tl.warnings) st.warnings.push_back("left gate point: " + w);
  for (const auto& w : st.left_idle_tl.warnings) st.warnings.push_back("left idle point: " + w);
  for (const auto& w : st.right_tl.warnings) st.warnings.push_back("right qubit: " + w);
  return st;
}

// Raised-cosine excursion idle -> gate -> idle: s(t) in [0, 1].
inline double two_qubit_path_parameter(double t, double t_ramp, double tau_wait) {
  if (t <= 0) return 0.0;
  if (t < t_ramp) return 0.5 * (1.0 - std::cos(kPi * t / t_ramp));
  if (t <= t_ramp + tau_wait) return 1.0;
  if (t < 2 * t_ramp + tau_wait) return 0.5 * (1.0 + std::cos(kPi * (t - t_ramp - tau_wait) / t_ramp));
  return 0.0;
}

inline Matrix4c sqrt_iswap() {
  const double s = 1.0 / std::sqrt(2.0);
  const cplx is(0, s);
  Matrix4c m;
  m << 1, 0, 0, 0, 0, s, is, 0, 0, is, s, 0, 0, 0, 0, 1;
  return m;
}

inline Matrix4c kron2(const Matrix2c& a, const Matrix2c& b) {
  Matrix4c m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return m;
}

namespace detail {

struct TwoQubitHamiltonian {
  const TwoQubitSetup& st;
  double t_ramp, tau_wait;
  double bias_shift_left = 0.0, bias_shift_right = 0.0;
  double j = 0.0;

  Matrix4c at(double t, double theta_l) const {
    const double s = two_qubit_path_parameter(t, t_ramp, tau_wait);
    const TwoLevelParams& l = st.left_idle_tl;
    const TwoLevelParams& r = st.right_tl;
    const Matrix2c sx = pauli_x(), sz = pauli_z();
    const Matrix2c hl = 0.5 * l.delta * sx + (st.left_amp(s) * std::cos(theta_l) + 0.5 * (l.bias + bias_shift_left)) * sz;
    const Matrix2c hr = 0.5 * r.delta * sx + (r.amp * std::cos(r.omega_d * t) + 0.5 * (r.bias + bias_shift_right)) * sz;
    return kron2(hl, Matrix2c::Identity()) + kron2(Matrix2c::Identity(), hr) + j * kron2(sz, sz);
  }
  double omega_l(double t) const { return st.left_omega(two_qubit_path_parameter(t, t_ramp, tau_wait)); }

  std::vector<double> cuts() const {
    return {0.0, t_ramp, t_ramp + tau_wait, 2 * t_ramp + tau_wait};
  }
};

inline Matrix4c two_qubit_frame(const TwoQubitSetup& st, double theta_l, double theta_r) {
  return kron2(st.left_idle_sol.mode_matrix(theta_l), st.right_sol.mode_matrix(theta_r));
}

}  // namespace detail

struct TwoQubitResult {
  double t_ramp = 0.0, tau_wait = 0.0;
  Matrix4c unitary_floquet_frame;
  double fidelity = 0.0;
  ZOptimized4 z;
  double unitarity_defect = 0.0;
  std::optional<double> open_fidelity;
  std::string open_method;
  int open_samples = 0;
};

struct TwoQubitOptions {
  OdeTolerance tol{1e-10, 1e-12};
  bool open_system = false;
  int noise_samples = 64;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // grid point index for the noise RNG
  int threads = 1;           // ensemble members run in parallel
  double j_override = -1.0;  // rad/ns, negative: use the system J
};

inline TwoQubitResult two_qubit_closed(const TwoQubitSetup& st, double t_ramp, double tau_wait,
                                       const TwoQubitOptions& opt = {}) {
  if (!(t_ramp > 0) || !(tau_wait >= 0)) throw ValidityError("two-qubit: need t_ramp > 0 and tau_wait >= 0");
  const double j = opt.j_override >= 0 ? opt.j_override : st.j_rad_ns();
  detail::TwoQubitHamiltonian hm{st, t_ramp, tau_wait, 0.0, 0.0, j};
  OdeState y(17, 0.0);
  for (int i = 0; i < 4; ++i) y[i * 5] = 1.0;
  auto rhs = [&](const OdeState& x, OdeState& dx, double t) {
    const Matrix4c h = hm.at(t, x[16].real());
    Eigen::Map<const Matrix4c> u(x.data());
    Eigen::Map<Matrix4c> du(dx.data());
    du.noalias() = cplx(0, -1) * (h * u);
    dx[16] = hm.omega_l(t);
  };
  const auto cuts = hm.cuts();
  for (size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i]) ode_integrate(rhs, y, cuts[i], cuts[i + 1], opt.tol);
  const double total = cuts.back();
  const Matrix4c u = Eigen::Map<const Matrix4c>(y.data());
  TwoQubitResult r;
  r.t_ramp = t_ramp;
  r.tau_wait = tau_wait;
  r.unitary_floquet_frame = detail::two_qubit_frame(st, y[16].real(), st.right_tl.omega_d * total).adjoint() * u *
                            detail::two_qubit_frame(st, 0.0, 0.0);
  r.unitarity_defect = (u.adjoint() * u - Matrix4c::Identity()).norm();
  r.z = fidelity_with_z4(r.unitary_floquet_frame, sqrt_iswap());
  r.fidelity = r.z.fidelity;
  return r;
}

namespace detail {

// Jump operators of one qubit at drive phase theta: sqrt(g-)|w0><w1|,
// sqrt(g+)|w1><w0|, sqrt(gphi/2)(|w1><w1| - |w0><w0|). Rates in 1/ns.
inline std::array<Matrix2c, 3> jump_operators(const FloquetSolution& sol, const Rates& r, double theta) {
  const Matrix2c w = sol.mode_matrix(theta);
  const Vector2c w0 = w.col(0), w1 = w.col(1);
  const double gm = r.gamma_minus * 1e-3, gp = r.gamma_plus * 1e-3;
  const double gphi = std::max(0.0, r.gamma_phi - r.gamma_phi_first_order) * 1e-3;
  return {std::sqrt(gm) * (w0 * w1.adjoint()), std::sqrt(gp) * (w1 * w0.adjoint()),
          std::sqrt(0.5 * gphi) * (w1 * w1.adjoint() - w0 * w0.adjoint())};
}

}  // namespace detail

// Open-system run: Lindblad channels from the noise module at the nearest
// path sample, plus quasi-static Gaussian bias offsets for 1/f noise,
// averaged over an ensemble. Returns the average gate fidelity with the
// closed-system Z phases.
inline double two_qubit_open(const TwoQubitSetup& st, double t_ramp, double tau_wait, const ZOptimized4& z,
                             const TwoQubitOptions& opt) {
  if (opt.noise_samples < 1) throw ValidityError("two-qubit: need at least one noise sample");
  const double j = opt.j_override >= 0 ? opt.j_override : st.j_rad_ns();
  const double total = 2 * t_ramp + tau_wait;
  // Quasi-static offset eta of B/2 with variance 2 (A_f ln_factor)^2.
  const double sig_l = std::sqrt(2.0) * st.left_noise.a_f * st.left_noise.ln_factor;
  const double sig_r = std::sqrt(2.0) * st.right_noise.a_f * st.right_noise.ln_factor;
  Matrix4c target = sqrt_iswap();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double ph = z.phases[0] * (a >> 1) + z.phases[1] * (a & 1) + z.phases[2] * (b >> 1) + z.phases[3] * (b & 1);
      target(a, b) *= std::polar(1.0, -ph);
    }
  const Matrix4c f0 = detail::two_qubit_frame(st, 0.0, 0.0);
  const int ns = opt.noise_samples;
  std::vector<double> fids(ns, 0.0);
  // Each member has its own keyed generator, so the mean does not depend on
  // how members are split over workers.
  parallel_for(static_cast<size_t>(ns), opt.threads, [&](size_t sample) {
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed & 0xffffffffu), static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(opt.stream & 0xffffffffu),
                      static_cast<std::uint32_t>(opt.stream >> 32), static_cast<std::uint32_t>(sample)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> nd(0.0, 1.0);
    const double eta_l = sig_l * nd(rng), eta_r = sig_r * nd(rng);
    detail::TwoQubitHamiltonian hm{st, t_ramp, tau_wait, 2.0 * eta_l, 2.0 * eta_r, j};
    // State: 16 density matrices |i><j| in the Floquet frame, then theta.
    OdeState y(16 * 16 + 1, 0.0);
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k) {
        const Matrix4c rho = f0.col(i) * f0.col(k).adjoint();
        std::copy(rho.data(), rho.data() + 16, y.begin() + 16 * (4 * i + k));
      }
    const int n_path = static_cast<int>(st.path.size());
    auto rhs = [&](const OdeState& x, OdeState& dx, double t) {
      const double th = x[256].real();
      const Matrix4c h = hm.at(t, th);
      const double s = two_qubit_path_parameter(t, t_ramp, tau_wait);
      const int idx = std::clamp(static_cast<int>(std::lround(s * (n_path - 1))), 0, n_path - 1);
      const auto jl = detail::jump_operators(st.path[idx].sol, st.path[idx].rates, th);
      const auto jr = detail::jump_operators(st.right_sol, st.right_rates, st.right_tl.omega_d * t);
      std::array<Matrix4c, 6> ls;
      for (int c = 0; c < 3; ++c) {
        ls[c] = kron2(jl[c], Matrix2c::Identity());
        ls[3 + c] = kron2(Matrix2c::Identity(), jr[c]);
      }
      Matrix4c heff = h;
      for (const auto& l : ls) heff -= cplx(0, 0.5) * (l.adjoint() * l);
      for (int b = 0; b < 16; ++b) {
        Eigen::Map<const Matrix4c> rho(x.data() + 16 * b);
        Eigen::Map<Matrix4c> drho(dx.data() + 16 * b);
        drho = cplx(0, -1) * (heff * rho - rho * heff.adjoint());
        for (const auto& l : ls) drho += l * rho * l.adjoint();
      }
      dx[256] = hm.omega_l(t);
    };
    const auto cuts = hm.cuts();
    for (size_t i = 0; i + 1 < cuts.size(); ++i)
      if (cuts[i + 1] > cuts[i]) ode_integrate(rhs, y, cuts[i], cuts[i + 1], opt.tol);
    const Matrix4c ft = detail::two_qubit_frame(st, y[256].real(), st.right_tl.omega_d * total);
    cplx fe = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k) {
        Eigen::Map<const Matrix4c> rho(y.data() + 16 * (4 * i + k));
        const Matrix4c out = ft.adjoint() * rho * ft;
        fe += (target.adjoint() * out * target)(i, k);
      }
    const double f_ent = fe.real() / 16.0;
    fids[sample] = (4.0 * f_ent + 1.0) / 5.0;
  });
  double mean = 0.0;
  for (double f : fids) mean += f;
  return mean / ns;
}

inline TwoQubitResult two_qubit_gate(const TwoQubitSetup& st, double t_ramp, double tau_wait,
                                     const TwoQubitOptions& opt = {}) {
  TwoQubitResult r = two_qubit_closed(st, t_ramp, tau_wait, opt);
  if (opt.open_system) {
    r.open_fidelity = two_qubit_open(st, t_ramp, tau_wait, r.z, opt);
    r.open_method =
        "Lindblad dielectric and sideband 1/f channels at the nearest path sample, plus quasi-static Gaussian "
        "dc-flux offsets for low-frequency 1/f noise";
    r.open_samples = opt.noise_samples;
  }
  return r;
}

// Excitation swap |1_L 0_R> -> |0_L 1_R> at the fixed gate point: time of the
// first transfer maximum.
struct SwapMeasurement {
  double swap_time = 0.0;  // ns
  double max_transfer = 0.0;
};

inline SwapMeasurement measure_swap_time(const TwoQubitSetup& st, double t_max, int samples = 4001,
                                         const OdeTolerance& tol = {1e-10, 1e-12}) {
  const TwoLevelParams& l = st.left_gate_tl;
  const TwoLevelParams& r = st.right_tl;
  const double j = st.j_rad_ns();
  const Matrix2c sx = pauli_x(), sz = pauli_z();
  auto h = [&](double t) {
    const Matrix2c hl = 0.5 * l.delta * sx + (l.amp * std::cos(l.omega_d * t) + 0.5 * l.bias) * sz;
    const Matrix2c hr = 0.5 * r.delta * sx + (r.amp * std::cos(r.omega_d * t) + 0.5 * r.bias) * sz;
    return Matrix4c(kron2(hl, Matrix2c::Identity()) + kron2(Matrix2c::Identity(), hr) + j * kron2(sz, sz));
  };
  const FloquetSolution& sl = st.left_gate_sol;
  const FloquetSolution& sr = st.right_sol;
  const Eigen::Vector4cd psi0 = kron2(sl.mode_matrix(0.0), sr.mode_matrix(0.0)).col(2);
  OdeState y(psi0.data(), psi0.data() + 4);
  auto rhs = [&](const OdeState& x, OdeState& dx, double t) {
    Eigen::Map<const Eigen::Vector4cd> v(x.data());
    Eigen::Map<Eigen::Vector4cd> dv(dx.data());
    dv.noalias() = cplx(0, -1) * (h(t) * v);
  };
  auto transfer = [&](double t) {
    const Eigen::Vector4cd target = kron2(sl.mode_matrix(l.omega_d * t), sr.mode_matrix(r.omega_d * t)).col(1);
    return std::norm(target.dot(Eigen::Map<const Eigen::Vector4cd>(y.data())));
  };
  std::vector<double> p(samples);
  const double dt = t_max / (samples - 1);
  p[0] = transfer(0.0);
  for (int i = 1; i < samples; ++i) {
    ode_integrate(rhs, y, (i - 1) * dt, i * dt, tol);
    p[i] = transfer(i * dt);
  }
  // First local maximum above half transfer, refined by a parabola.
  for (int i = 1; i + 1 < samples; ++i) {
    if (p[i] >= p[i - 1] && p[i] > p[i + 1] && p[i] > 0.5) {
      const double den = p[i - 1] - 2 * p[i] + p[i + 1];
      const double off = den != 0 ? 0.5 * (p[i - 1] - p[i + 1]) / den : 0.0;
      return {(i + off) * dt, p[i] - 0.25 * (p[i - 1] - p[i + 1]) * off};
    }
  }
  throw NumericalError("two-qubit: no swap maximum within the simulated window");
}

}  // namespace sweetfloq
