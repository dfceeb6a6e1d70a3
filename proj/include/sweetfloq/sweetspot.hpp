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

// Quasi-energy dispersions, dynamical sweet-spot search, avoided-crossing
// gap asymptotics, and the analytic frequency-modulation and spin-locking
// limits.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "sweetfloq/circuit.hpp"
#include "sweetfloq/common.hpp"
#include "sweetfloq/floquet.hpp"
#include "sweetfloq/noise.hpp"
#include "sweetfloq/sweep.hpp"

namespace sweetfloq {

// d eps01 / dB, equal to g_{0,phi}.
inline double dispersion_bias(const FloquetSolution& sol) {
  return filter_weights(sol).g(Channel::phi, 0).real();
}

// d eps01 / dA, equal to 2 Re g_{1,phi}.
inline double dispersion_amp(const FloquetSolution& sol) {
  return 2.0 * filter_weights(sol).g(Channel::phi, 1).real();
}

inline double dispersion_bias(const TwoLevelParams& tl) { return dispersion_bias(floquet_solve_extended(tl)); }
inline double dispersion_amp(const TwoLevelParams& tl) { return dispersion_amp(floquet_solve_extended(tl)); }

// d eps01 / d phi_dc and d eps01 / d phi_ac, rad/ns per radian.
inline double dispersion_dc(const TwoLevelParams& tl) { return dispersion_bias(tl) * tl.bias_per_phi_dc(); }
inline double dispersion_ac(const TwoLevelParams& tl) { return dispersion_amp(tl) * tl.amp_per_phi_ac(); }

enum class SweetKind { dc, ac, doubly };

inline std::string to_string(SweetKind k) {
  switch (k) {
    case SweetKind::dc:
      return "dc";
    case SweetKind::ac:
      return "ac";
    case SweetKind::doubly:
      return "doubly";
  }
  return "unknown";
}

struct SweetPoint {
  double phi_dc = 0.0;  // radians
  double phi_ac = 0.0;  // radians
  double f_d = 0.0;     // GHz
  double eps01 = 0.0;   // GHz
  SweetKind kind = SweetKind::dc;
  bool gap_flag = false;
  bool refined = true;
  double dispersion_dc = 0.0;  // rad/ns per radian
  double dispersion_ac = 0.0;
  std::optional<Rates> rates;
};

using SweetCurve = std::vector<SweetPoint>;

struct Axis {
  double min = 0.0;
  double max = 0.0;
  int n = 2;

  void validate(const std::string& name) const {
    if (n < 2) throw ValidityError(name + ": grid needs n >= 2");
    if (!(min < max)) throw ValidityError(name + ": grid needs min < max");
  }
  double at(int i) const { return min + (max - min) * i / (n - 1); }
  double step() const { return (max - min) / (n - 1); }
};

// Drive region in config units: f_d in GHz, phi_ac in turns (phi / 2pi).
struct ScanRegion {
  Axis f_d;
  Axis phi_ac;
};

// Builds two-level models for one circuit at fixed dc flux.
struct DrivenCircuit {
  StaticSpectrum spec_at_pi;
  double phi_dc = kPi;  // radians
  double guard_fraction = 0.2;

  TwoLevelParams at(double phi_ac_rad, double f_ghz) const {
    return two_level_reduce(spec_at_pi, phi_ac_rad, phi_dc, ghz_to_rad_ns(f_ghz), guard_fraction);
  }
};

struct SweetOptions {
  double tol = 1e-6;  // |d eps01 / d phi| / eps01
  int threads = 1;
  const NoiseModel* noise = nullptr;  // attach rates when set
  int max_jump_cells = 2;
};

namespace detail {

struct DcSample {
  double g0phi = 0.0;
  double eps01 = 0.0;  // rad/ns
  double omega = 0.0;
  bool ok = false;
};

inline DcSample dc_sample(const DrivenCircuit& c, double phi_ac, double f) {
  DcSample s;
  const TwoLevelParams tl = c.at(phi_ac, f);
  const FloquetSolution sol = floquet_solve_extended(tl);
  s.omega = tl.omega_d;
  s.eps01 = sol.eps01;
  if (sol.degenerate) return s;
  s.g0phi = dispersion_bias(sol);
  s.ok = true;
  return s;
}

// Bracketed root of g_{0,phi} in f between fa and fb.
inline std::optional<SweetPoint> refine_dc_root(const DrivenCircuit& c, double phi_ac, double fa, double fb,
                                                DcSample sa, DcSample sb, const SweetOptions& opt) {
  if (fa != fb) {
    struct Lost {};
    std::map<double, DcSample> seen{{fa, sa}, {fb, sb}};
    auto g = [&](double f) {
      auto it = seen.find(f);
      if (it == seen.end()) {
        const DcSample s = dc_sample(c, phi_ac, f);
        if (!s.ok) throw Lost{};
        it = seen.emplace(f, s).first;
      }
      return it->second.g0phi;
    };
    boost::uintmax_t iters = 100;
    try {
      const auto r = boost::math::tools::toms748_solve(g, fa, fb, sa.g0phi, sb.g0phi,
                                                       boost::math::tools::eps_tolerance<double>(46), iters);
      fa = r.first;
      fb = r.second;
      g(fa);
      g(fb);
    } catch (const Lost&) {
      return std::nullopt;
    }
    sa = seen.at(fa);
    sb = seen.at(fb);
  }
  const bool pick_a = std::abs(sa.g0phi) <= std::abs(sb.g0phi);
  const DcSample& s = pick_a ? sa : sb;
  const double f = pick_a ? fa : fb;
  // Label swaps at eps01 = w/2 flip the sign of g_{0,phi} without a root.
  if (std::abs(s.eps01 - 0.5 * s.omega) < 1e-6 * s.omega) return std::nullopt;
  const TwoLevelParams tl = c.at(phi_ac, f);
  SweetPoint p;
  p.phi_dc = c.phi_dc;
  p.phi_ac = phi_ac;
  p.f_d = f;
  p.eps01 = rad_ns_to_ghz(s.eps01);
  p.kind = SweetKind::dc;
  p.dispersion_dc = s.g0phi * tl.bias_per_phi_dc();
  const double normalized = std::abs(p.dispersion_dc) / s.eps01;
  if (normalized >= opt.tol) {
    // A jump through a closing gap, or a root steeper than the grid of
    // representable frequencies. Keep only the latter, flagged.
    const bool continuous = std::abs(sa.g0phi) < 0.5 && std::abs(sb.g0phi) < 0.5 &&
                            std::abs(sa.eps01 - sb.eps01) < 1e-3 * s.omega;
    if (!continuous) return std::nullopt;
    p.gap_flag = true;
  }
  if (s.eps01 < 1e-3 * s.omega) p.gap_flag = true;
  const FloquetSolution sol = floquet_solve_extended(tl);
  p.dispersion_ac = dispersion_amp(sol) * tl.amp_per_phi_ac();
  if (opt.noise) p.rates = dynamical_rates(filter_weights(sol), *opt.noise);
  return p;
}

}  // namespace detail

// dc sweet points of one row of fixed phi_ac, from sign changes of the
// dc dispersion along the f_d grid.
inline std::vector<SweetPoint> dc_roots_in_row(const DrivenCircuit& c, double phi_ac, const Axis& f_axis,
                                               const std::vector<detail::DcSample>& row, const SweetOptions& opt) {
  std::vector<SweetPoint> out;
  for (int j = 0; j + 1 < f_axis.n; ++j) {
    const auto& a = row[j];
    const auto& b = row[j + 1];
    if (!a.ok || !b.ok) continue;
    if (a.g0phi == 0.0) {
      auto p = detail::refine_dc_root(c, phi_ac, f_axis.at(j), f_axis.at(j), a, a, opt);
      if (p) out.push_back(*p);
      continue;
    }
    if ((a.g0phi > 0) == (b.g0phi > 0)) continue;
    auto p = detail::refine_dc_root(c, phi_ac, f_axis.at(j), f_axis.at(j + 1), a, b, opt);
    if (p) out.push_back(*p);
  }
  return out;
}

// Links per-row roots into curves by nearest-neighbour continuation
// between adjacent rows.
inline std::vector<SweetCurve> link_curves(const std::vector<std::vector<SweetPoint>>& rows, double df,
                                           int max_jump_cells) {
  std::vector<SweetCurve> curves;
  std::vector<int> open;  // curves ending in the previous row
  for (const auto& row : rows) {
    std::vector<int> next_open;
    std::vector<bool> taken(open.size(), false);
    for (const auto& p : row) {
      int best = -1;
      double best_d = max_jump_cells * df * (1.0 + 1e-9);
      for (size_t i = 0; i < open.size(); ++i) {
        if (taken[i]) continue;
        const double d = std::abs(curves[open[i]].back().f_d - p.f_d);
        if (d <= best_d) {
          best_d = d;
          best = static_cast<int>(i);
        }
      }
      if (best >= 0) {
        taken[best] = true;
        curves[open[best]].push_back(p);
        next_open.push_back(open[best]);
      } else {
        curves.push_back({p});
        next_open.push_back(static_cast<int>(curves.size()) - 1);
      }
    }
    open = std::move(next_open);
  }
  return curves;
}

struct DcScan {
  std::vector<std::vector<detail::DcSample>> samples;  // [phi_ac row][f column]
  std::vector<std::vector<SweetPoint>> roots;          // per row
  std::vector<SweetCurve> curves;
};

inline DcScan trace_dc_manifold(const DrivenCircuit& c, const ScanRegion& region, const SweetOptions& opt = {}) {
  region.f_d.validate("sweet scan f_d");
  region.phi_ac.validate("sweet scan phi_ac");
  const int nf = region.f_d.n, na = region.phi_ac.n;
  DcScan scan;
  auto flat = parallel_map<detail::DcSample>(static_cast<size_t>(nf) * na, opt.threads, [&](size_t idx) {
    const int i = static_cast<int>(idx / nf), j = static_cast<int>(idx % nf);
    try {
      return detail::dc_sample(c, turns_to_rad(region.phi_ac.at(i)), region.f_d.at(j));
    } catch (const NumericalError&) {
      return detail::DcSample{};
    }
  });
  scan.samples.assign(na, {});
  for (int i = 0; i < na; ++i) scan.samples[i].assign(flat.begin() + i * nf, flat.begin() + (i + 1) * nf);
  scan.roots = parallel_map<std::vector<SweetPoint>>(na, opt.threads, [&](size_t i) {
    return dc_roots_in_row(c, turns_to_rad(region.phi_ac.at(static_cast<int>(i))), region.f_d, scan.samples[i], opt);
  });
  scan.curves = link_curves(scan.roots, region.f_d.step(), opt.max_jump_cells);
  return scan;
}

// dc root in f near f_guess for a given phi_ac, bracketed within +-span.
inline std::optional<SweetPoint> dc_root_near(const DrivenCircuit& c, double phi_ac, double f_lo, double f_hi,
                                              const SweetOptions& opt) {
  const int n = 16;
  detail::DcSample prev = detail::dc_sample(c, phi_ac, f_lo);
  double f_prev = f_lo;
  std::optional<SweetPoint> best;
  const double f_mid = 0.5 * (f_lo + f_hi);
  for (int j = 1; j <= n; ++j) {
    const double f = f_lo + (f_hi - f_lo) * j / n;
    const detail::DcSample s = detail::dc_sample(c, phi_ac, f);
    if (prev.ok && s.ok && (prev.g0phi > 0) != (s.g0phi > 0)) {
      auto p = detail::refine_dc_root(c, phi_ac, f_prev, f, prev, s, opt);
      if (p && (!best || std::abs(p->f_d - f_mid) < std::abs(best->f_d - f_mid))) best = p;
    }
    prev = s;
    f_prev = f;
  }
  return best;
}

// Points on the dc curves where the ac dispersion also vanishes. Each sign
// change of the ac dispersion between neighbouring curve points is refined
// by a bracketed root solve in phi_ac, re-solving for the dc root at every
// step. Brackets that straddle a cut of the manifold, where the ac
// dispersion jumps instead of crossing zero, are discarded.
inline std::vector<SweetPoint> find_doubly_sweet(const DrivenCircuit& c, const DcScan& scan, double df,
                                                 const SweetOptions& opt = {}) {
  std::vector<std::pair<SweetPoint, SweetPoint>> brackets;
  for (const auto& curve : scan.curves)
    for (size_t i = 0; i + 1 < curve.size(); ++i) {
      const auto& a = curve[i];
      const auto& b = curve[i + 1];
      if (a.gap_flag || b.gap_flag) continue;
      if ((a.dispersion_ac > 0) != (b.dispersion_ac > 0)) brackets.emplace_back(a, b);
    }
  auto found = parallel_map<std::optional<SweetPoint>>(brackets.size(), opt.threads, [&](size_t i) {
    const SweetPoint& a = brackets[i].first;
    const SweetPoint& b = brackets[i].second;
    const double span = 2.0 * df + std::abs(b.f_d - a.f_d);
    const double slope = (b.f_d - a.f_d) / (b.phi_ac - a.phi_ac);
    std::optional<SweetPoint> best = std::abs(a.dispersion_ac) < std::abs(b.dispersion_ac) ? a : b;
    bool lost = false;
    auto h = [&](double pm) {
      if (pm == a.phi_ac) return a.dispersion_ac;
      if (pm == b.phi_ac) return b.dispersion_ac;
      const double fg = a.f_d + slope * (pm - a.phi_ac);
      auto m = dc_root_near(c, pm, fg - span, fg + span, opt);
      if (!m) {
        lost = true;
        return 0.0;
      }
      if (std::abs(m->dispersion_ac) < std::abs(best->dispersion_ac)) best = m;
      return m->dispersion_ac;
    };
    boost::uintmax_t iters = 60;
    try {
      boost::math::tools::toms748_solve(h, a.phi_ac, b.phi_ac, a.dispersion_ac, b.dispersion_ac,
                                        boost::math::tools::eps_tolerance<double>(44), iters);
    } catch (const std::exception&) {
      lost = true;
    }
    const double normalized = std::abs(best->dispersion_ac) / ghz_to_rad_ns(best->eps01);
    if (normalized > 1e-3) return std::optional<SweetPoint>{};
    best->kind = SweetKind::doubly;
    best->refined = !lost && normalized < opt.tol;
    return best;
  });
  std::vector<SweetPoint> out;
  for (auto& p : found)
    if (p) out.push_back(*p);
  return out;
}

enum class GapRegime { weak, strong };

inline std::string to_string(GapRegime r) { return r == GapRegime::weak ? "weak" : "strong"; }

struct GapEstimate {
  int m = 1;
  GapRegime regime = GapRegime::weak;
  double gap = 0.0;    // GHz
  double theta = 0.0;  // atan(Delta / B)
  double fwhm = 0.0;   // GHz
  std::vector<std::string> warnings;
};

inline double mixing_angle(const TwoLevelParams& tl) { return std::atan2(tl.delta, tl.bias); }

// 2 Delta_{m,0} / (sqrt(3) m).
inline double fwhm_width(int m, double gap0) {
  if (m < 1) throw ValidityError("sweetspot: resonance order must be positive");
  return 2.0 * gap0 / (std::sqrt(3.0) * m);
}

// Leading-order gap A^m |sin(theta) cos^{m-1}(theta)| / ((m-1)! w_d^{m-1}).
inline GapEstimate gap_weak(int m, const TwoLevelParams& tl) {
  if (m < 1) throw ValidityError("sweetspot: resonance order must be positive");
  GapEstimate g;
  g.m = m;
  g.regime = GapRegime::weak;
  g.theta = mixing_angle(tl);
  const double omega_ge = tl.omega_ge();
  const double val = std::pow(tl.amp, m) * std::abs(std::sin(g.theta) * std::pow(std::cos(g.theta), m - 1)) /
                     (boost::math::factorial<double>(m - 1) * std::pow(tl.omega_d, m - 1));
  g.gap = rad_ns_to_ghz(val);
  g.fwhm = fwhm_width(m, g.gap);
  if (tl.amp > 0.1 * omega_ge) g.warnings.push_back("weak-drive gap formula used with A/Omega_ge above 0.1");
  if (std::abs(m * tl.omega_d - omega_ge) > 0.1 * omega_ge)
    g.warnings.push_back("weak-drive gap formula used away from the resonance w_d = Omega_ge/m");
  return g;
}

// Delta |J_m(2A/w_d)|.
inline GapEstimate gap_strong(int m, const TwoLevelParams& tl) {
  if (m < 1) throw ValidityError("sweetspot: resonance order must be positive");
  GapEstimate g;
  g.m = m;
  g.regime = GapRegime::strong;
  g.theta = mixing_angle(tl);
  g.gap = rad_ns_to_ghz(tl.delta * std::abs(std::cyl_bessel_j(static_cast<double>(m), 2.0 * tl.amp / tl.omega_d)));
  g.fwhm = fwhm_width(m, g.gap);
  if (tl.amp < 0.5 * tl.omega_ge()) g.warnings.push_back("strong-drive gap formula used with A well below Omega_ge");
  if (tl.delta > 0.1 * tl.omega_d) g.warnings.push_back("strong-drive gap formula used with Delta/w_d above 0.1");
  if (std::abs(m * tl.omega_d - std::abs(tl.bias)) > 0.1 * std::abs(tl.bias))
    g.warnings.push_back("strong-drive gap formula used away from the resonance w_d = B/m");
  return g;
}

struct NumericGap {
  double gap = 0.0;    // rad/ns
  double omega = 0.0;  // drive frequency at the minimum, rad/ns
};

// Minimum of eps01 over w_d within w_center (1 +- rel_window).
inline NumericGap numeric_gap(const TwoLevelParams& tl, double omega_center, double rel_window = 0.03) {
  auto eps = [&](double w) { return floquet_solve_extended(tl.with_omega(w)).eps01; };
  const int n = 200;
  const double lo = omega_center * (1.0 - rel_window), hi = omega_center * (1.0 + rel_window);
  int best = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const double v = eps(lo + (hi - lo) * i / n);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  const double a = lo + (hi - lo) * std::max(best - 1, 0) / n;
  const double b = lo + (hi - lo) * std::min(best + 1, n) / n;
  const auto r = boost::math::tools::brent_find_minima(eps, a, b, std::numeric_limits<double>::digits);
  NumericGap out;
  out.omega = r.first;
  out.gap = r.second;
  if (best_v < out.gap) {
    out.gap = best_v;
    out.omega = lo + (hi - lo) * best / n;
  }
  return out;
}

// Width in w_d between the two points where |d eps01 / dB| = 1/2 around the
// sweet spot at w_center.
inline double numeric_fwhm(const TwoLevelParams& tl, double omega_center, double step) {
  auto h = [&](double w) { return std::abs(dispersion_bias(tl.with_omega(w))) - 0.5; };
  if (h(omega_center) >= 0) throw NumericalError("sweetspot: |d eps01/dB| at the centre is not below 1/2");
  std::array<double, 2> edges{};
  for (int side = 0; side < 2; ++side) {
    const double dir = side == 0 ? -1.0 : 1.0;
    double s = step;
    double inner = omega_center;
    double outer = omega_center + dir * s;
    int guard = 0;
    while (h(outer) < 0) {
      if (++guard > 60) throw NumericalError("sweetspot: half-minimum point not bracketed");
      inner = outer;
      s *= 1.5;
      outer = omega_center + dir * s;
    }
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(
        h, std::min(inner, outer), std::max(inner, outer),
        boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 4), iters);
    edges[side] = 0.5 * (r.first + r.second);
  }
  return edges[1] - edges[0];
}

// Analytic frequency-modulation limit for H(t) = Omega(t) sz / 2 with
// Omega(t) = sum_k Omega_k exp(-i k w t) and Omega_{-k} = conj(Omega_k).
struct FrequencyModulation {
  double omega = 0.0;                   // drive frequency, rad/ns
  std::vector<cplx> splitting;          // Omega_k for k >= 0, rad/ns
  std::vector<cplx> splitting_slope;    // dOmega_k/dlambda for k >= 0
};

struct FrequencyModulationLimit {
  double eps01_analytic = 0.0;
  double eps01_solver = 0.0;
  std::vector<cplx> g_analytic;  // g^lambda_{k,phi} for k >= 0
  std::vector<cplx> g_solver;
};

inline PeriodicHamiltonian fm_hamiltonian(const FrequencyModulation& fm, const std::vector<cplx>& series) {
  PeriodicHamiltonian h;
  h.omega = fm.omega;
  for (size_t k = 0; k < series.size(); ++k) h.harmonics.push_back(0.5 * series[k] * pauli_z());
  h.harmonics[0] = (0.5 * series[0].real() * pauli_z()).eval();
  return h;
}

inline FrequencyModulationLimit limit_frequency_modulation(const FrequencyModulation& fm) {
  if (fm.splitting.empty() || fm.splitting_slope.size() != fm.splitting.size())
    throw ValidityError("limits: splitting and slope series must have equal, non-zero length");
  FrequencyModulationLimit out;
  out.eps01_analytic = fm.splitting[0].real();
  for (const auto& s : fm.splitting_slope) out.g_analytic.push_back(0.5 * s);
  const PeriodicHamiltonian h = fm_hamiltonian(fm, fm.splitting);
  const FloquetSolution ref = static_solution(h.harmonics[0], h.omega, 0);
  ExtendedOptions opt;
  opt.labeling = Labeling::reference;
  opt.reference = &ref;
  const FloquetSolution sol = floquet_solve_generic(h, opt);
  out.eps01_solver = sol.eps01;
  const FilterWeights w = filter_weights(sol, as_operator(fm_hamiltonian(fm, fm.splitting_slope)));
  for (size_t k = 0; k < fm.splitting.size(); ++k) out.g_solver.push_back(w.g(Channel::phi, static_cast<int>(k)));
  return out;
}

// Spin locking in the rotating frame: H = dOmega sz / 2 + d sx / 2, noise
// entering as slope * dlambda * sz / 2.
struct SpinLockingLimit {
  double eps01_analytic = 0.0, eps01_solver = 0.0;
  double gamma_phi_analytic = 0.0, gamma_phi_solver = 0.0;
  double gamma_minus_analytic = 0.0, gamma_minus_solver = 0.0;
  double gamma_plus_analytic = 0.0, gamma_plus_solver = 0.0;
};

inline SpinLockingLimit limit_spin_locking(double delta_omega, double d, double slope,
                                           const std::function<double(double)>& spectrum) {
  SpinLockingLimit out;
  const double omega_r = std::hypot(delta_omega, d);
  if (!(omega_r > 0)) throw ValidityError("limits: spin locking needs a nonzero Rabi frequency");
  const double cos_t = delta_omega / omega_r, sin_t = d / omega_r;
  out.eps01_analytic = omega_r;
  out.gamma_phi_analytic = 0.5 * std::pow(slope * cos_t, 2) * spectrum(0.0);
  out.gamma_minus_analytic = 0.25 * std::pow(slope * sin_t, 2) * spectrum(omega_r);
  out.gamma_plus_analytic = 0.25 * std::pow(slope * sin_t, 2) * spectrum(-omega_r);

  PeriodicHamiltonian h;
  // The frame frequency only sets the Brillouin zone; keep it well above
  // the Rabi frequency.
  h.omega = 8.0 * omega_r;
  h.harmonics = {Matrix2c(0.5 * delta_omega * pauli_z() + 0.5 * d * pauli_x())};
  const FloquetSolution ref = static_solution(h.harmonics[0], h.omega, 0);
  ExtendedOptions opt;
  opt.labeling = Labeling::reference;
  opt.reference = &ref;
  const FloquetSolution sol = floquet_solve_generic(h, opt);
  out.eps01_solver = sol.eps01;
  const FilterWeights w = filter_weights(sol, PeriodicOperator::constant(0.5 * slope * pauli_z()));
  const PlainRates r = rates_from_weights(w, spectrum);
  out.gamma_phi_solver = r.gamma_phi;
  out.gamma_minus_solver = r.gamma_minus;
  out.gamma_plus_solver = r.gamma_plus;
  return out;
}

// Both sides of g^lambda_{0,phi} = (1/2) d eps01 / d lambda for a family of
// periodic Hamiltonians.
struct SweetCondition {
  double g_lambda_0phi = 0.0;
  double deps01_dlambda = 0.0;  // five-point finite difference
};

inline SweetCondition general_sweet_condition(const std::function<PeriodicHamiltonian(double)>& family,
                                              double lambda0, double step = 1e-4) {
  const PeriodicHamiltonian h0 = family(lambda0);
  const FloquetSolution sol0 = floquet_solve_generic(h0);
  // dH/dlambda by a five-point stencil on the harmonics.
  PeriodicHamiltonian dh = h0;
  {
    const PeriodicHamiltonian hp1 = family(lambda0 + step), hm1 = family(lambda0 - step);
    const PeriodicHamiltonian hp2 = family(lambda0 + 2 * step), hm2 = family(lambda0 - 2 * step);
    for (size_t q = 0; q < dh.harmonics.size(); ++q)
      dh.harmonics[q] =
          (8.0 * (hp1.harmonics[q] - hm1.harmonics[q]) - (hp2.harmonics[q] - hm2.harmonics[q])) / (12.0 * step);
  }
  SweetCondition out;
  out.g_lambda_0phi = filter_weights(sol0, as_operator(dh)).g(Channel::phi, 0).real();
  ExtendedOptions opt;
  opt.labeling = Labeling::reference;
  opt.reference = &sol0;
  auto eps = [&](double l) { return floquet_solve_generic(family(l), opt).eps01; };
  out.deps01_dlambda =
      (8.0 * (eps(lambda0 + step) - eps(lambda0 - step)) - (eps(lambda0 + 2 * step) - eps(lambda0 - 2 * step))) /
      (12.0 * step);
  return out;
}

}  // namespace sweetfloq
