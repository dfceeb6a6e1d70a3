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

// Floquet states of a periodically driven two-level system.
//
// Modes are stored as Fourier coefficients u_{j,k,s} with
//   |w_j(t)> = sum_k u_{j,k} exp(-i k w_d t),   k = -K..K,
// rows indexed by k + K and columns by s in {z+, z-}. Each mode carries the
// quasi-energy its coefficient vector belongs to; replicas e + n w_d are
// related by u'_k = u_{k-n}.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sweetfloq/banded.hpp"
#include "sweetfloq/circuit.hpp"
#include "sweetfloq/common.hpp"
#include "sweetfloq/ode.hpp"

namespace sweetfloq {

using ModeCoeffs = Eigen::Matrix<cplx, Eigen::Dynamic, 2>;

// Coefficients of the replica with quasi-energy lowered by n w_d.
inline ModeCoeffs shift_replica(const ModeCoeffs& u, int n) {
  const int rows = static_cast<int>(u.rows());
  ModeCoeffs out = ModeCoeffs::Zero(rows, 2);
  for (int r = 0; r < rows; ++r) {
    const int src = r - n;
    if (src >= 0 && src < rows) out.row(r) = u.row(src);
  }
  return out;
}

// Zero-pad a coefficient block symmetrically to `rows` harmonics.
inline ModeCoeffs pad_rows(const ModeCoeffs& u, int rows) {
  if (rows <= u.rows()) return u;
  ModeCoeffs out = ModeCoeffs::Zero(rows, 2);
  const int off = (rows - static_cast<int>(u.rows())) / 2;
  out.middleRows(off, u.rows()) = u;
  return out;
}

// Period-averaged inner product <a|b>.
inline cplx extended_inner(const ModeCoeffs& a, const ModeCoeffs& b) {
  return (a.conjugate().cwiseProduct(b)).sum();
}

// Largest |<a|shift(b, n)>| over |n| <= nmax, and the maximizing n.
inline std::pair<double, int> best_replica_overlap(const ModeCoeffs& a, const ModeCoeffs& b, int nmax = 2) {
  double best = -1.0;
  int arg = 0;
  for (int n = -nmax; n <= nmax; ++n) {
    const double o = std::abs(extended_inner(a, shift_replica(b, n)));
    if (o > best + 1e-14) {
      best = o;
      arg = n;
    }
  }
  return {best, arg};
}

enum class Labeling { canonical, continuation, reference };

inline std::string to_string(Labeling l) {
  switch (l) {
    case Labeling::canonical:
      return "canonical";
    case Labeling::continuation:
      return "continuation";
    case Labeling::reference:
      return "reference";
  }
  return "unknown";
}

struct FloquetSolution {
  double omega_d = 0.0;
  std::array<double, 2> eps{};       // folded into (-w/2, w/2]
  std::array<double, 2> eps_mode{};  // quasi-energies matching `modes`
  double eps01 = 0.0;                // eps_mode[1] - eps_mode[0]
  std::array<ModeCoeffs, 2> modes;
  int truncation_k = 0;
  Labeling labeling = Labeling::canonical;
  std::string labeling_note;
  bool degenerate = false;
  double tail = 0.0;

  int rows() const { return 2 * truncation_k + 1; }

  // |w_j> at drive phase w_d t.
  Vector2c mode(int j, double phase) const {
    Vector2c v = Vector2c::Zero();
    const int kk = truncation_k;
    for (int r = 0; r < rows(); ++r) {
      const double k = r - kk;
      v += modes[j].row(r).transpose() * std::polar(1.0, -k * phase);
    }
    return v;
  }

  // Columns |w_0>, |w_1> at drive phase w_d t.
  Matrix2c mode_matrix(double phase) const {
    Matrix2c m;
    m.col(0) = mode(0, phase);
    m.col(1) = mode(1, phase);
    return m;
  }

  void refresh_folded() {
    eps[0] = fold_zone(eps_mode[0], omega_d);
    eps[1] = fold_zone(eps_mode[1], omega_d);
    eps01 = eps_mode[1] - eps_mode[0];
    degenerate = std::abs(fold_zone(eps01, omega_d)) < 1e-8 * omega_d;
  }

  void swap_labels() {
    std::swap(modes[0], modes[1]);
    std::swap(eps_mode[0], eps_mode[1]);
    refresh_folded();
  }

  // Shift mode j to the replica lowered by n w_d.
  void shift_mode(int j, int n) {
    modes[j] = shift_replica(modes[j], n);
    eps_mode[j] -= n * omega_d;
    refresh_folded();
  }

  // Fold eps01 into (-w/2, w/2] by moving mode 1 to a neighbouring replica.
  void anchor() {
    const int n = zone_index(eps_mode[1] - eps_mode[0], omega_d);
    if (n != 0) shift_mode(1, n);
    refresh_folded();
  }

  // Canonical labels: eps01 in [0, w/2], mode 0 quasi-energy in the first zone.
  void canonicalize() {
    anchor();
    if (eps01 < 0) {
      swap_labels();
      const int n0 = zone_index(eps_mode[0], omega_d);
      if (n0 != 0) {
        shift_mode(0, n0);
        shift_mode(1, n0);
      }
    }
    labeling = Labeling::canonical;
    refresh_folded();
  }

  // Fix the gauge: largest-magnitude coefficient real positive.
  void fix_gauge() {
    for (auto& u : modes) {
      Eigen::Index r, c;
      u.cwiseAbs().maxCoeff(&r, &c);
      const cplx z = u(r, c);
      if (std::abs(z) > 0) u *= std::conj(z) / std::abs(z);
    }
  }
};

// H(t) = H_0 + sum_{q>=1} (H_q e^{-i q w t} + H_q^dag e^{i q w t}).
struct PeriodicHamiltonian {
  double omega = 0.0;
  std::vector<Matrix2c> harmonics;

  int order() const { return static_cast<int>(harmonics.size()) - 1; }

  Matrix2c at(double t) const {
    Matrix2c h = harmonics[0];
    for (int q = 1; q <= order(); ++q) {
      const cplx ph = std::polar(1.0, -q * omega * t);
      h += harmonics[q] * ph + harmonics[q].adjoint() * std::conj(ph);
    }
    return h;
  }

  void validate() const {
    if (!(omega > 0)) throw ValidityError("floquet: drive frequency must be positive");
    if (harmonics.empty()) throw ValidityError("floquet: Hamiltonian has no harmonics");
    if ((harmonics[0] - harmonics[0].adjoint()).norm() > 1e-12 * (1.0 + harmonics[0].norm()))
      throw ValidityError("floquet: static part of the Hamiltonian must be Hermitian");
  }

  int default_truncation() const {
    double s = harmonics[0].norm();
    for (int q = 1; q <= order(); ++q) s += 2.0 * harmonics[q].norm();
    return static_cast<int>(std::ceil(4.0 * s * std::max(order(), 1) / omega)) + 10 * std::max(order(), 1);
  }
};

inline PeriodicHamiltonian to_periodic(const TwoLevelParams& tl) {
  PeriodicHamiltonian h;
  h.omega = tl.omega_d;
  h.harmonics.resize(2);
  h.harmonics[0] = 0.5 * tl.delta * pauli_x() + 0.5 * tl.bias * pauli_z();
  h.harmonics[1] = 0.5 * tl.amp * pauli_z();
  return h;
}

inline Matrix2c two_level_hamiltonian(const TwoLevelParams& tl, double t) {
  return 0.5 * tl.delta * pauli_x() + (tl.amp * std::cos(tl.omega_d * t) + 0.5 * tl.bias) * pauli_z();
}

struct ExtendedOptions {
  std::optional<int> k_hint;
  int k_cap = 4096;
  double tail_tol = 1e-12;
  Labeling labeling = Labeling::canonical;
  const FloquetSolution* reference = nullptr;  // for Labeling::reference
};

namespace detail {

struct RawModes {
  std::array<double, 2> e{};
  std::array<ModeCoeffs, 2> u;
  double tail = 0.0;
};

inline ModeCoeffs to_coeffs(const Eigen::VectorXcd& x, int kk) {
  ModeCoeffs u(2 * kk + 1, 2);
  for (int r = 0; r < 2 * kk + 1; ++r) {
    u(r, 0) = x(2 * r);
    u(r, 1) = x(2 * r + 1);
  }
  return u;
}

inline Vector2c coeffs_at_zero(const ModeCoeffs& u) { return u.colwise().sum().transpose(); }

inline double centroid(const ModeCoeffs& u, int kk) {
  double c = 0.0;
  for (int r = 0; r < u.rows(); ++r) c += (r - kk) * u.row(r).squaredNorm();
  return c;
}

inline double edge_weight(const ModeCoeffs& u) {
  const int last = static_cast<int>(u.rows()) - 1;
  return std::max(u.row(0).cwiseAbs().maxCoeff(), u.row(last).cwiseAbs().maxCoeff());
}

// Two physically distinct modes among band eigenpairs in (-w, w].
template <typename Scalar>
RawModes select_modes(const HermitianBand<Scalar>& band, double omega, int kk) {
  const std::vector<double> ev = band.eigenvalues_in(-omega, omega);
  struct Cand {
    double e;
    ModeCoeffs u;
    double c;
  };
  std::vector<Cand> cands;
  std::vector<typename HermitianBand<Scalar>::Vector> accepted;
  for (size_t i = 0; i < ev.size(); ++i) {
    std::vector<typename HermitianBand<Scalar>::Vector> near;
    for (size_t j = 0; j < accepted.size(); ++j)
      if (std::abs(ev[j] - ev[i]) < 1e-6 * omega) near.push_back(accepted[j]);
    auto x = band.eigenvector(ev[i], near);
    accepted.push_back(x);
    Eigen::VectorXcd xc = x.template cast<cplx>();
    ModeCoeffs u = to_coeffs(xc, kk);
    cands.push_back({ev[i], u, centroid(u, kk)});
  }
  if (cands.size() < 2) throw NumericalError("floquet: fewer than two quasi-energies in the search window");
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& a, const Cand& b) { return std::abs(a.c) < std::abs(b.c); });
  RawModes out;
  out.e[0] = cands[0].e;
  out.u[0] = cands[0].u;
  const Vector2c w0 = coeffs_at_zero(cands[0].u);
  bool found = false;
  for (size_t i = 1; i < cands.size(); ++i) {
    const Vector2c wi = coeffs_at_zero(cands[i].u);
    if (std::abs(w0.dot(wi)) < 0.5) {
      out.e[1] = cands[i].e;
      out.u[1] = cands[i].u;
      found = true;
      break;
    }
  }
  if (!found) throw NumericalError("floquet: could not isolate two independent Floquet modes");
  for (int j = 0; j < 2; ++j) {
    const int n = zone_index(out.e[j], omega);
    out.e[j] -= n * omega;
    out.u[j] = shift_replica(out.u[j], n);
    out.tail = std::max(out.tail, edge_weight(out.u[j]));
  }
  return out;
}

inline HermitianBand<double> two_level_band(const TwoLevelParams& tl, int kk) {
  const int n = 2 * (2 * kk + 1);
  HermitianBand<double> band(n, 2);
  for (int r = 0; r < 2 * kk + 1; ++r) {
    const double k = r - kk;
    band.set_upper(2 * r, 2 * r, 0.5 * tl.bias - k * tl.omega_d);
    band.set_upper(2 * r + 1, 2 * r + 1, -0.5 * tl.bias - k * tl.omega_d);
    band.set_upper(2 * r, 2 * r + 1, 0.5 * tl.delta);
    if (r + 1 < 2 * kk + 1) {
      band.set_upper(2 * r, 2 * r + 2, 0.5 * tl.amp);
      band.set_upper(2 * r + 1, 2 * r + 3, -0.5 * tl.amp);
    }
  }
  return band;
}

inline HermitianBand<cplx> generic_band(const PeriodicHamiltonian& h, int kk) {
  const int rows = 2 * kk + 1;
  const int q_max = h.order();
  HermitianBand<cplx> band(2 * rows, 2 * q_max + 1);
  for (int r = 0; r < rows; ++r) {
    const double k = r - kk;
    for (int rp = r; rp <= std::min(rows - 1, r + q_max); ++rp) {
      // Block (k, k') with k' >= k is H_{k'-k}^dag.
      const Matrix2c blk = h.harmonics[rp - r].adjoint();
      for (int s = 0; s < 2; ++s)
        for (int sp = 0; sp < 2; ++sp) {
          const int i = 2 * r + s, j = 2 * rp + sp;
          if (i <= j) band.set_upper(i, j, blk(s, sp));
        }
    }
    band.add_upper(2 * r, 2 * r, -k * h.omega);
    band.add_upper(2 * r + 1, 2 * r + 1, -k * h.omega);
  }
  return band;
}

inline FloquetSolution assemble(const RawModes& raw, double omega, int kk) {
  FloquetSolution s;
  s.omega_d = omega;
  s.truncation_k = kk;
  s.modes = raw.u;
  s.eps_mode = raw.e;
  s.tail = raw.tail;
  s.refresh_folded();
  return s;
}

template <typename SolveAtK>
FloquetSolution solve_with_doubling(SolveAtK&& solve_at, double omega, int k0, const ExtendedOptions& opt) {
  int kk = k0;
  while (true) {
    RawModes raw = solve_at(kk);
    if (raw.tail < opt.tail_tol) {
      return assemble(raw, omega, kk);
    }
    if (kk >= opt.k_cap)
      throw ConvergenceError("floquet: Fourier truncation cap reached", raw.tail);
    kk = std::min(2 * kk, opt.k_cap);
  }
}

}  // namespace detail

inline int default_truncation(const TwoLevelParams& tl) {
  return static_cast<int>(std::ceil(4.0 * (tl.amp + std::abs(tl.bias) + tl.delta) / tl.omega_d)) + 10;
}

// Relabel `sol` to follow `ref` by maximal overlap, aligning replicas so that
// quasi-energies are continuous with the reference.
inline void relabel_like(FloquetSolution& sol, const FloquetSolution& ref) {
  const int rows = std::max(sol.rows(), ref.rows());
  std::array<ModeCoeffs, 2> a = {pad_rows(ref.modes[0], rows), pad_rows(ref.modes[1], rows)};
  std::array<ModeCoeffs, 2> b = {pad_rows(sol.modes[0], rows), pad_rows(sol.modes[1], rows)};
  const auto o00 = best_replica_overlap(a[0], b[0]);
  const auto o11 = best_replica_overlap(a[1], b[1]);
  const auto o01 = best_replica_overlap(a[0], b[1]);
  const auto o10 = best_replica_overlap(a[1], b[0]);
  if (o01.first * o10.first > o00.first * o11.first) sol.swap_labels();
  for (int j = 0; j < 2; ++j) {
    const auto o = best_replica_overlap(pad_rows(ref.modes[j], rows), pad_rows(sol.modes[j], rows));
    // b shifted by n matches a, so lower its quasi-energy by n w_d.
    if (o.second != 0) sol.shift_mode(j, o.second);
  }
  // Remove any common replica offset relative to the reference.
  const int n0 = static_cast<int>(std::lround((sol.eps_mode[0] - ref.eps_mode[0]) / sol.omega_d));
  if (n0 != 0) {
    sol.shift_mode(0, n0);
    sol.shift_mode(1, n0);
  }
  sol.labeling = Labeling::reference;
}

// Eigenstates of a static Hamiltonian as a time-independent Floquet
// solution padded to K harmonics. Labels follow ascending energy.
inline FloquetSolution static_solution(const Matrix2c& h0, double omega, int kk = 0) {
  Eigen::SelfAdjointEigenSolver<Matrix2c> es(h0);
  FloquetSolution s;
  s.omega_d = omega;
  s.truncation_k = kk;
  for (int j = 0; j < 2; ++j) {
    s.modes[j] = ModeCoeffs::Zero(2 * kk + 1, 2);
    s.modes[j].row(kk) = es.eigenvectors().col(j).transpose();
    s.eps_mode[j] = es.eigenvalues()(j);
  }
  s.fix_gauge();
  s.refresh_folded();
  return s;
}

namespace detail {

inline FloquetSolution solve_two_level_raw(const TwoLevelParams& tl, const ExtendedOptions& opt) {
  if (!(tl.omega_d > 0)) throw ValidityError("floquet: drive frequency must be positive");
  const int k0 = opt.k_hint.value_or(default_truncation(tl));
  FloquetSolution s = solve_with_doubling(
      [&](int kk) {
        const auto band = two_level_band(tl, kk);
        return select_modes(band, tl.omega_d, kk);
      },
      tl.omega_d, std::max(k0, 1), opt);
  return s;
}

inline FloquetSolution static_solution(const TwoLevelParams& tl, int kk = 0) {
  return sweetfloq::static_solution(Matrix2c(0.5 * tl.delta * pauli_x() + 0.5 * tl.bias * pauli_z()), tl.omega_d, kk);
}

// Follow both modes from A = 0 to tl.amp at fixed drive frequency.
inline FloquetSolution solve_continuation(const TwoLevelParams& tl, const ExtendedOptions& opt) {
  FloquetSolution prev = static_solution(tl, default_truncation(tl));
  if (tl.amp == 0.0) {
    ExtendedOptions o = opt;
    o.k_hint = opt.k_hint.value_or(default_truncation(tl));
    FloquetSolution s = solve_two_level_raw(tl, o);
    relabel_like(s, prev);
    s.anchor();
    return s;
  }
  double a = 0.0;
  double step = tl.amp / 16.0;
  int guard = 0;
  while (a < tl.amp) {
    if (++guard > 100000) throw NumericalError("floquet: continuation in drive amplitude did not finish");
    const double a_next = std::min(tl.amp, a + step);
    FloquetSolution s = solve_two_level_raw(tl.with_amp(a_next), opt);
    relabel_like(s, prev);
    const int rows = std::max(s.rows(), prev.rows());
    const double ov = std::min(std::abs(extended_inner(pad_rows(prev.modes[0], rows), pad_rows(s.modes[0], rows))),
                               std::abs(extended_inner(pad_rows(prev.modes[1], rows), pad_rows(s.modes[1], rows))));
    if (ov < 0.9) {
      step *= 0.5;
      if (step < 1e-9 * tl.amp)
        throw ValidityError("floquet: quasi-energy gap closes along the drive-amplitude path");
      continue;
    }
    a = a_next;
    prev = std::move(s);
    if (ov > 0.995) step *= 1.5;
  }
  prev.anchor();
  prev.labeling = Labeling::continuation;
  return prev;
}

}  // namespace detail

// Extended-space (Sambe) solution of the driven two-level model.
inline FloquetSolution floquet_solve_extended(const TwoLevelParams& tl, const ExtendedOptions& opt = {}) {
  FloquetSolution s;
  switch (opt.labeling) {
    case Labeling::canonical:
      s = detail::solve_two_level_raw(tl, opt);
      s.canonicalize();
      s.labeling_note = "eps01 folded into [0, w_d/2]";
      break;
    case Labeling::continuation:
      s = detail::solve_continuation(tl, opt);
      s.labeling_note = "continued from the static eigenstates along the drive amplitude";
      break;
    case Labeling::reference:
      if (opt.reference == nullptr) throw ValidityError("floquet: reference labeling needs a reference solution");
      s = detail::solve_two_level_raw(tl, opt);
      relabel_like(s, *opt.reference);
      s.labeling_note = "maximal overlap with a reference solution";
      break;
  }
  s.fix_gauge();
  return s;
}

// Extended-space solution for a general periodic 2x2 Hamiltonian.
inline FloquetSolution floquet_solve_generic(const PeriodicHamiltonian& h, const ExtendedOptions& opt = {}) {
  h.validate();
  const int k0 = opt.k_hint.value_or(h.default_truncation());
  FloquetSolution s = detail::solve_with_doubling(
      [&](int kk) {
        const auto band = detail::generic_band(h, kk);
        return detail::select_modes(band, h.omega, kk);
      },
      h.omega, std::max(k0, h.order()), opt);
  if (opt.labeling == Labeling::reference && opt.reference != nullptr) {
    relabel_like(s, *opt.reference);
  } else {
    s.canonicalize();
    s.labeling_note = "eps01 folded into [0, w_d/2]";
  }
  s.fix_gauge();
  return s;
}

struct MonodromyOptions {
  OdeTolerance tol{1e-12, 1e-14};
  std::optional<int> k_hint;
};

// Time-domain solution from the one-period propagator. Modes are rebuilt
// from stroboscopic samples of U(t) w_j(0) exp(i eps_j t).
inline FloquetSolution floquet_solve_monodromy(const PeriodicHamiltonian& h, const MonodromyOptions& opt = {}) {
  h.validate();
  const double period = kTwoPi / h.omega;
  const int kk = opt.k_hint.value_or(h.default_truncation());
  int n_samples = 8;
  while (n_samples < 4 * kk + 4) n_samples *= 2;
  auto hf = [&](double t) { return h.at(t); };
  std::vector<Matrix2c> us(n_samples + 1);
  us[0] = Matrix2c::Identity();
  for (int i = 0; i < n_samples; ++i)
    us[i + 1] = propagate<2>(hf, us[i], period * i / n_samples, period * (i + 1) / n_samples, opt.tol);
  const Matrix2c mono = us[n_samples];
  const double unit_defect = (mono.adjoint() * mono - Matrix2c::Identity()).norm();
  if (unit_defect > 1e-8) throw ConvergenceError("floquet: monodromy matrix not unitary", unit_defect);
  Eigen::ComplexEigenSolver<Matrix2c> es(mono);
  FloquetSolution s;
  s.omega_d = h.omega;
  s.truncation_k = kk;
  for (int j = 0; j < 2; ++j) {
    const cplx lam = es.eigenvalues()(j);
    const double e = fold_zone(-std::arg(lam) / period, h.omega);
    Vector2c v0 = es.eigenvectors().col(j).normalized();
    ModeCoeffs u = ModeCoeffs::Zero(2 * kk + 1, 2);
    for (int i = 0; i < n_samples; ++i) {
      const double t = period * i / n_samples;
      const Vector2c w = us[i] * v0 * std::polar(1.0, e * t);
      for (int r = 0; r < 2 * kk + 1; ++r) {
        const double k = r - kk;
        u.row(r) += w.transpose() * std::polar(1.0, k * h.omega * t);
      }
    }
    u /= static_cast<double>(n_samples);
    s.modes[j] = u;
    s.eps_mode[j] = e;
    s.tail = std::max(s.tail, detail::edge_weight(u));
  }
  // The eigen-decomposition of a nearly degenerate unitary can return
  // non-orthogonal vectors; flag through the degeneracy marker.
  s.refresh_folded();
  s.canonicalize();
  s.labeling_note = "eps01 folded into [0, w_d/2]";
  s.fix_gauge();
  return s;
}

inline FloquetSolution floquet_solve_monodromy(const TwoLevelParams& tl, const MonodromyOptions& opt = {}) {
  MonodromyOptions o = opt;
  if (!o.k_hint) o.k_hint = default_truncation(tl);
  return floquet_solve_monodromy(to_periodic(tl), o);
}

// U(t, 0) = sum_j |w_j(t)><w_j(0)| exp(-i eps_j t).
inline Matrix2c floquet_propagator(const FloquetSolution& sol, double t) {
  Matrix2c u = Matrix2c::Zero();
  for (int j = 0; j < 2; ++j)
    u += sol.mode(j, sol.omega_d * t) * sol.mode(j, 0.0).adjoint() * std::polar(1.0, -sol.eps_mode[j] * t);
  return u;
}

inline Matrix2c floquet_propagator(const TwoLevelParams& tl, double t) {
  return floquet_propagator(floquet_solve_extended(tl), t);
}

// Direct integration of the two-level Schrodinger equation.
inline Matrix2c integrate_two_level(const TwoLevelParams& tl, double t0, double t1,
                                    const OdeTolerance& tol = {1e-12, 1e-14}) {
  return propagate<2>([&](double t) { return two_level_hamiltonian(tl, t); }, Matrix2c::Identity().eval(), t0,
                      t1, tol);
}

}  // namespace sweetfloq
