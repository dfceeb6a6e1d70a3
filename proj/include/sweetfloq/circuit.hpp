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

// Static fluxonium Hamiltonian
//   H = 4 E_C n^2 + E_L (phi + phi_dc)^2 / 2 - E_J cos(phi)
// in the harmonic-oscillator basis of the L-C part, and its reduction to the
// driven two-level model
//   H_q(t) = (Delta/2) sx + (A cos(w_d t) + B/2) sz.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sweetfloq/common.hpp"

namespace sweetfloq {

struct FluxoniumParams {
  double e_c = 0.0;  // GHz
  double e_j = 0.0;  // GHz
  double e_l = 0.0;  // GHz
  int basis_dim = 100;

  void validate() const {
    if (!(e_c > 0) || !(e_j > 0) || !(e_l > 0))
      throw ValidityError("circuit: e_c, e_j and e_l must be positive");
    if (basis_dim < 20) throw ValidityError("circuit: basis_dim must be at least 20");
  }
};

struct StaticSpectrum {
  FluxoniumParams params;
  double phi_dc = 0.0;             // radians
  Eigen::VectorXd energies;        // GHz, ascending
  Eigen::MatrixXd phi_matrix;      // <l|phi|l'>
  std::vector<int> parity_labels;  // +1 / -1, filled only at phi_dc = pi
  int basis_dim_used = 0;
  double convergence_change = 0.0;  // relative change under basis doubling

  double omega_ge() const { return energies(1) - energies(0); }
};

namespace detail {

// Oscillator-basis matrices of cos(theta), sin(theta) and theta, where
// theta = phi + phi_dc is the L-C oscillator coordinate.
struct OscillatorMatrices {
  Eigen::MatrixXd cos_t, sin_t, theta;
  double omega_p = 0.0;
};

inline OscillatorMatrices oscillator_matrices(const FluxoniumParams& p, int n) {
  OscillatorMatrices out;
  const double phi_zpf = std::pow(2.0 * p.e_c / p.e_l, 0.25);
  const double x = phi_zpf * phi_zpf;
  out.omega_p = std::sqrt(8.0 * p.e_c * p.e_l);
  out.cos_t = Eigen::MatrixXd::Zero(n, n);
  out.sin_t = Eigen::MatrixXd::Zero(n, n);
  out.theta = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) out.theta(i, i + 1) = out.theta(i + 1, i) = phi_zpf * std::sqrt(i + 1.0);
  // <m| exp(i theta) |k> for m >= k, via generalized Laguerre polynomials.
  for (int m = 0; m < n; ++m) {
    for (int k = 0; k <= m; ++k) {
      const int d = m - k;
      const double lag = std::assoc_laguerre(static_cast<unsigned>(k), static_cast<unsigned>(d), x);
      const double mag =
          std::exp(0.5 * (std::lgamma(k + 1.0) - std::lgamma(m + 1.0)) + d * std::log(phi_zpf) - 0.5 * x) * lag;
      if (d % 2 == 0) {
        const double v = ((d / 2) % 2 == 0 ? 1.0 : -1.0) * mag;
        out.cos_t(m, k) = out.cos_t(k, m) = v;
      } else {
        const double v = (((d - 1) / 2) % 2 == 0 ? 1.0 : -1.0) * mag;
        out.sin_t(m, k) = out.sin_t(k, m) = v;
      }
    }
  }
  return out;
}

struct RawSpectrum {
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;  // columns, lowest levels only
  Eigen::MatrixXd theta;
};

inline RawSpectrum solve_basis(const FluxoniumParams& p, double phi_dc, int n, int levels) {
  const OscillatorMatrices om = oscillator_matrices(p, n);
  Eigen::MatrixXd h = -p.e_j * (std::cos(phi_dc) * om.cos_t + std::sin(phi_dc) * om.sin_t);
  for (int i = 0; i < n; ++i) h(i, i) += om.omega_p * (i + 0.5);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("circuit: dense eigensolver failed");
  RawSpectrum out;
  out.energies = es.eigenvalues().head(levels);
  out.vectors = es.eigenvectors().leftCols(levels);
  for (int c = 0; c < levels; ++c) {
    Eigen::Index imax;
    out.vectors.col(c).cwiseAbs().maxCoeff(&imax);
    if (out.vectors(imax, c) < 0) out.vectors.col(c) *= -1.0;
  }
  out.theta = om.theta;
  return out;
}

}  // namespace detail

// Lowest `levels` eigenpairs of the static Hamiltonian. The basis is doubled
// until the lowest four energies change by less than `rel_tol`.
inline StaticSpectrum diagonalize_fluxonium(const FluxoniumParams& params, double phi_dc, int levels = 4,
                                            int max_basis = 800, double rel_tol = 1e-9) {
  params.validate();
  if (!std::isfinite(phi_dc)) throw ValidityError("circuit: phi_dc must be finite");
  levels = std::max(levels, 4);
  int n = params.basis_dim;
  detail::RawSpectrum prev = detail::solve_basis(params, phi_dc, n, levels);
  double change = 0.0;
  while (true) {
    const int n2 = 2 * n;
    if (n2 > max_basis) throw ConvergenceError("circuit: basis did not converge", change);
    detail::RawSpectrum next = detail::solve_basis(params, phi_dc, n2, levels);
    change = 0.0;
    for (int l = 0; l < 4; ++l)
      change = std::max(change, std::abs(next.energies(l) - prev.energies(l)) /
                                    std::max(std::abs(next.energies(l)), 1.0));
    n = n2;
    prev = std::move(next);
    if (change < rel_tol) break;
  }
  StaticSpectrum s;
  s.params = params;
  s.phi_dc = phi_dc;
  s.energies = prev.energies;
  s.basis_dim_used = n;
  s.convergence_change = change;
  Eigen::MatrixXd phi_op = prev.theta - phi_dc * Eigen::MatrixXd::Identity(n, n);
  s.phi_matrix = prev.vectors.transpose() * phi_op * prev.vectors;
  if (std::abs(std::remainder(phi_dc - kPi, kTwoPi)) < 1e-12) {
    for (int l = 0; l < levels; ++l) {
      double par = 0.0;
      for (int i = 0; i < n; ++i) par += (i % 2 == 0 ? 1.0 : -1.0) * prev.vectors(i, l) * prev.vectors(i, l);
      s.parity_labels.push_back(par >= 0 ? 1 : -1);
    }
  }
  return s;
}

struct TwoLevelProvenance {
  double phi_ac = 0.0;  // radians
  double phi_dc = kPi;  // radians
  double phi_ge = 0.0;  // |<g~|phi|e~>|
  double e_l = 0.0;     // GHz
  double omega_ef = 0.0;  // rad/ns, e-f splitting at phi_dc = pi
  bool from_circuit = false;
};

// Parameters of the driven two-level model, all in rad/ns.
struct TwoLevelParams {
  double delta = 0.0;
  double amp = 0.0;
  double bias = 0.0;
  double omega_d = 0.0;
  TwoLevelProvenance provenance;
  std::vector<std::string> warnings;

  double omega_ge() const { return std::hypot(delta, bias); }
  // dB/dphi_dc and dA/dphi_ac (rad/ns per radian).
  double bias_per_phi_dc() const {
    require_circuit();
    return 2.0 * ghz_to_rad_ns(provenance.e_l) * provenance.phi_ge;
  }
  double amp_per_phi_ac() const {
    require_circuit();
    return ghz_to_rad_ns(provenance.e_l) * provenance.phi_ge;
  }

  TwoLevelParams with_amp(double a) const {
    TwoLevelParams t = *this;
    t.amp = a;
    if (provenance.from_circuit) t.provenance.phi_ac = a / amp_per_phi_ac();
    return t;
  }
  TwoLevelParams with_bias(double b) const {
    TwoLevelParams t = *this;
    t.bias = b;
    if (provenance.from_circuit) t.provenance.phi_dc = kPi + b / bias_per_phi_dc();
    return t;
  }
  TwoLevelParams with_omega(double w) const {
    TwoLevelParams t = *this;
    t.omega_d = w;
    return t;
  }

 private:
  void require_circuit() const {
    if (!provenance.from_circuit)
      throw ValidityError("two-level model has no circuit provenance for flux derivatives");
  }
};

// Abstract two-level model not tied to a circuit.
inline TwoLevelParams make_two_level(double delta, double amp, double bias, double omega_d) {
  TwoLevelParams t;
  t.delta = delta;
  t.amp = amp;
  t.bias = bias;
  t.omega_d = omega_d;
  return t;
}

inline TwoLevelParams two_level_reduce(const StaticSpectrum& spec_at_pi, double phi_ac, double phi_dc,
                                       double omega_d, double guard_fraction = 0.2) {
  if (std::abs(std::remainder(spec_at_pi.phi_dc - kPi, kTwoPi)) > 1e-12)
    throw ValidityError("two_level_reduce: spectrum must be computed at phi_dc = pi");
  if (spec_at_pi.energies.size() < 3) throw ValidityError("two_level_reduce: need at least three levels");
  TwoLevelParams t;
  const double e_l = ghz_to_rad_ns(spec_at_pi.params.e_l);
  // The sign of <g|phi|e> is a gauge choice; A and B flip together with it.
  const double phi_ge = std::abs(spec_at_pi.phi_matrix(0, 1));
  t.delta = ghz_to_rad_ns(spec_at_pi.energies(1) - spec_at_pi.energies(0));
  t.amp = e_l * phi_ac * phi_ge;
  t.bias = 2.0 * e_l * (phi_dc - kPi) * phi_ge;
  t.omega_d = omega_d;
  t.provenance = {phi_ac, phi_dc, phi_ge, spec_at_pi.params.e_l,
                  ghz_to_rad_ns(spec_at_pi.energies(2) - spec_at_pi.energies(1)), true};
  if (omega_d >= (1.0 - guard_fraction) * t.provenance.omega_ef) {
    std::ostringstream os;
    os << "two-level validity: drive frequency " << rad_ns_to_ghz(omega_d)
       << " GHz is within the guard band of the e-f transition " << rad_ns_to_ghz(t.provenance.omega_ef)
       << " GHz";
    t.warnings.push_back(os.str());
  }
  return t;
}

}  // namespace sweetfloq
