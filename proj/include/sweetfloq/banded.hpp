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

// Eigenpairs of Hermitian band matrices inside a value window.
// Eigenvalues come from LAPACK ?sbevx/?hbevx without eigenvectors; the
// vectors are then obtained by inverse iteration on the band LU, so memory
// stays linear in the matrix size.

#include <complex>

#ifndef LAPACK_COMPLEX_CUSTOM
#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "sweetfloq/common.hpp"

namespace sweetfloq {

template <typename Scalar>
class HermitianBand {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  static constexpr bool kComplex = !std::is_same_v<Scalar, double>;

  HermitianBand(int n, int kd) : n_(n), kd_(kd), ab_((kd + 1) * n, Scalar(0)) {}

  int size() const { return n_; }
  int bandwidth() const { return kd_; }

  // Element (i, j) with i <= j <= i + kd.
  void set_upper(int i, int j, Scalar v) { ab_[(kd_ + i - j) + j * (kd_ + 1)] = v; }
  void add_upper(int i, int j, Scalar v) { ab_[(kd_ + i - j) + j * (kd_ + 1)] += v; }

  Scalar at(int i, int j) const {
    if (i <= j) {
      if (j - i > kd_) return Scalar(0);
      return ab_[(kd_ + i - j) + j * (kd_ + 1)];
    }
    return conj_(at(j, i));
  }

  // Dense copy, for tests and small problems.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n_, n_);
    for (int j = 0; j < n_; ++j)
      for (int i = std::max(0, j - kd_); i <= j; ++i) {
        m(i, j) = at(i, j);
        m(j, i) = conj_(at(i, j));
      }
    return m;
  }

  // All eigenvalues in (vl, vu], ascending.
  std::vector<double> eigenvalues_in(double vl, double vu) const {
    std::vector<Scalar> ab = ab_;
    std::vector<double> w(n_);
    std::vector<lapack_int> ifail(n_);
    lapack_int m = 0;
    Scalar q_dummy{};
    Scalar z_dummy{};
    const double abstol = 2.0 * LAPACKE_dlamch('S');
    lapack_int info;
    if constexpr (kComplex) {
      info = LAPACKE_zhbevx(LAPACK_COL_MAJOR, 'N', 'V', 'U', n_, kd_, ab.data(), kd_ + 1,
                            &q_dummy, 1, vl, vu, 0, 0, abstol, &m, w.data(), &z_dummy, 1,
                            ifail.data());
    } else {
      info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'N', 'V', 'U', n_, kd_, ab.data(), kd_ + 1,
                            &q_dummy, 1, vl, vu, 0, 0, abstol, &m, w.data(), &z_dummy, 1,
                            ifail.data());
    }
    if (info != 0) throw NumericalError("band eigenvalue solver failed, info=" + std::to_string(info));
    w.resize(m);
    return w;
  }

  // Unit eigenvector for an accurately known eigenvalue. `against` holds
  // already accepted vectors of nearby eigenvalues to orthogonalize out.
  Vector eigenvector(double lambda, const std::vector<Vector>& against = {}) const {
    const int kl = kd_, ku = kd_;
    const int ldab = 2 * kl + ku + 1;
    double scale = 0.0;
    for (const auto& v : ab_) scale = std::max(scale, std::abs(v));
    const double eps = std::numeric_limits<double>::epsilon();
    double shift = lambda;
    std::vector<Scalar> lu;
    std::vector<lapack_int> ipiv(n_);
    for (int attempt = 0; attempt < 4; ++attempt) {
      lu.assign(static_cast<size_t>(ldab) * n_, Scalar(0));
      for (int j = 0; j < n_; ++j)
        for (int i = std::max(0, j - ku); i <= std::min(n_ - 1, j + kl); ++i) {
          Scalar v = at(i, j);
          if (i == j) v -= shift;
          lu[(kl + ku + i - j) + static_cast<size_t>(j) * ldab] = v;
        }
      lapack_int info;
      if constexpr (kComplex)
        info = LAPACKE_zgbtrf(LAPACK_COL_MAJOR, n_, n_, kl, ku, lu.data(), ldab, ipiv.data());
      else
        info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n_, n_, kl, ku, lu.data(), ldab, ipiv.data());
      if (info == 0) break;
      if (info < 0) throw NumericalError("band LU failed");
      shift = lambda + (attempt + 1) * 4.0 * eps * std::max(1.0, scale);
      if (attempt == 3) throw NumericalError("band LU singular at eigenvalue shift");
    }
    Vector x(n_);
    for (int i = 0; i < n_; ++i) x(i) = Scalar(1.0 + 0.25 * std::sin(0.7 * i + 0.3));
    x.normalize();
    for (int it = 0; it < 3; ++it) {
      for (const auto& a : against) x -= a * a.dot(x);
      lapack_int info;
      if constexpr (kComplex)
        info = LAPACKE_zgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl, ku, 1, lu.data(), ldab, ipiv.data(),
                              x.data(), n_);
      else
        info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl, ku, 1, lu.data(), ldab, ipiv.data(),
                              x.data(), n_);
      if (info != 0) throw NumericalError("band solve failed");
      for (const auto& a : against) x -= a * a.dot(x);
      const double nrm = x.norm();
      if (!(nrm > 0) || !std::isfinite(nrm)) throw NumericalError("inverse iteration diverged");
      x /= nrm;
    }
    return x;
  }

  // Residual norm of (H - lambda) x.
  double residual(const Vector& x, double lambda) const {
    Vector r = Vector::Zero(n_);
    for (int j = 0; j < n_; ++j)
      for (int i = std::max(0, j - kd_); i <= std::min(n_ - 1, j + kd_); ++i) r(i) += at(i, j) * x(j);
    r -= lambda * x;
    return r.norm();
  }

 private:
  static Scalar conj_(Scalar v) {
    if constexpr (kComplex)
      return std::conj(v);
    else
      return v;
  }

  int n_;
  int kd_;
  std::vector<Scalar> ab_;
};

}  // namespace sweetfloq
