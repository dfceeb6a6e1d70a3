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

// Shared fixtures and independent reference solvers for the tests.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>

#include "sweetfloq/circuit.hpp"
#include "sweetfloq/common.hpp"
#include "sweetfloq/floquet.hpp"
#include "sweetfloq/ode.hpp"

namespace sweetfloq::testing {

inline FluxoniumParams fig1_circuit() { return {0.5, 4.0, 1.3}; }

inline const StaticSpectrum& fig1_spectrum() {
  static const StaticSpectrum s = diagonalize_fluxonium(fig1_circuit(), kPi);
  return s;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Working point of the single-qubit gate examples.
inline TwoLevelParams fig1_working_point() {
  return two_level_reduce(fig1_spectrum(), turns_to_rad(0.04), kPi + turns_to_rad(0.02), ghz_to_rad_ns(0.3207265765));
}

// Sinc-DVR on a uniform grid in the oscillator coordinate theta:
// H = -4 E_C d^2/dtheta^2 + E_L theta^2 / 2 - E_J cos(theta - phi_dc).
struct GridSpectrum {
  Eigen::VectorXd energies;
  double phi_ge = 0.0;  // |<g| theta |e>|
};

inline GridSpectrum grid_fluxonium(const FluxoniumParams& p, double phi_dc, int n = 700, double half_width = 22.0) {
  const double dx = 2.0 * half_width / (n - 1);
  Eigen::MatrixXd h(n, n);
  for (int i = 0; i < n; ++i) {
    const double x = -half_width + i * dx;
    for (int j = 0; j < n; ++j) {
      const int d = i - j;
      double t;
      if (d == 0)
        t = kPi * kPi / 3.0;
      else
        t = 2.0 * ((d % 2 == 0) ? 1.0 : -1.0) / (static_cast<double>(d) * d);
      h(i, j) = 4.0 * p.e_c * t / (dx * dx);
    }
    h(i, i) += 0.5 * p.e_l * x * x - p.e_j * std::cos(x - phi_dc);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  GridSpectrum out;
  out.energies = es.eigenvalues().head(6);
  double m = 0.0;
  for (int i = 0; i < n; ++i)
    m += es.eigenvectors()(i, 0) * (-half_width + i * dx) * es.eigenvectors()(i, 1);
  out.phi_ge = std::abs(m);
  return out;
}

// Quasi-energy difference from a brute-force one-period propagator with a
// fixed-step RK4 integrator, folded to [0, w/2].
inline double rk4_eps01(const TwoLevelParams& tl, int steps = 20000) {
  const double period = kTwoPi / tl.omega_d;
  const double h = period / steps;
  Matrix2c u = Matrix2c::Identity();
  auto f = [&](double t, const Matrix2c& x) -> Matrix2c {
    const Matrix2c hm = 0.5 * tl.delta * pauli_x() + (tl.amp * std::cos(tl.omega_d * t) + 0.5 * tl.bias) * pauli_z();
    return cplx(0, -1) * hm * x;
  };
  for (int i = 0; i < steps; ++i) {
    const double t = i * h;
    const Matrix2c k1 = f(t, u);
    const Matrix2c k2 = f(t + 0.5 * h, u + 0.5 * h * k1);
    const Matrix2c k3 = f(t + 0.5 * h, u + 0.5 * h * k2);
    const Matrix2c k4 = f(t + h, u + h * k3);
    u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  Eigen::ComplexEigenSolver<Matrix2c> es(u);
  const double a0 = -std::arg(es.eigenvalues()(0)) / period;
  const double a1 = -std::arg(es.eigenvalues()(1)) / period;
  const double d = std::abs(fold_zone(a1 - a0, tl.omega_d));
  return d;
}

// For Delta = 0 the model is diagonal: eps = +-B/2 exactly, and the
// Floquet harmonics are Bessel functions J_k(2A/w).
inline double bessel_eps01(const TwoLevelParams& tl) { return std::abs(fold_zone(tl.bias, tl.omega_d)); }

// Random two-level points with A / Omega_ge spread over [0, a_max].
inline std::vector<TwoLevelParams> random_points(int n, std::uint64_t seed, double a_max = 5.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TwoLevelParams> out;
  for (int i = 0; i < n; ++i) {
    const double delta = kTwoPi * (0.05 + 0.5 * u(rng));
    const double bias = kTwoPi * (-0.8 + 1.6 * u(rng));
    const double omega_ge = std::hypot(delta, bias);
    const double amp = a_max * u(rng) * omega_ge;
    const double omega = kTwoPi * (0.15 + 1.0 * u(rng));
    out.push_back(make_two_level(delta, amp, bias, omega));
  }
  return out;
}

}  // namespace sweetfloq::testing
