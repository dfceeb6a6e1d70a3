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

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sweetfloq {

using cplx = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Vector2c = Eigen::Vector2cd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// k_B / h in GHz per kelvin, from the exact SI values of k_B and h.
inline constexpr double kBoltzmannGHzPerKelvin = 1.380649e-23 / 6.62607015e-34 * 1e-9;

// Conversions between config units (GHz, flux / 2pi) and internal units
// (rad/ns, radians).
inline double ghz_to_rad_ns(double f) { return kTwoPi * f; }
inline double rad_ns_to_ghz(double w) { return w / kTwoPi; }
inline double turns_to_rad(double x) { return kTwoPi * x; }
inline double rad_to_turns(double x) { return x / kTwoPi; }

// Rates are computed in 1/ns and reported in 1/us.
inline double per_ns_to_per_us(double r) { return r * 1e3; }

// Fold a quasi-energy into the zone (-w/2, w/2].
inline double fold_zone(double e, double w) {
  const double n = std::ceil((e - 0.5 * w) / w);
  return e - n * w;
}

// Integer n such that e - n*w lies in (-w/2, w/2].
inline int zone_index(double e, double w) {
  return static_cast<int>(std::ceil((e - 0.5 * w) / w));
}

// Base class for errors raised by the library. The CLI maps the
// subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs outside a module's domain of validity (exit code 3).
class ValidityError : public Error {
 public:
  using Error::Error;
};

// Failure of a numerical procedure (exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericalError(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

inline Matrix2c pauli_x() {
  Matrix2c m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

inline Matrix2c pauli_y() {
  Matrix2c m;
  m << 0.0, cplx(0, -1), cplx(0, 1), 0.0;
  return m;
}

inline Matrix2c pauli_z() {
  Matrix2c m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

}  // namespace sweetfloq
