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

// Thin wrapper over boost::odeint's controlled Runge-Kutta-Fehlberg 7(8)
// stepper for complex state vectors.

#include <exception>
#include <functional>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>
#include <Eigen/Dense>

#include "sweetfloq/common.hpp"

namespace sweetfloq {

using OdeState = std::vector<cplx>;

struct OdeTolerance {
  double rtol = 1e-12;
  double atol = 1e-14;
};

template <typename Rhs>
void ode_integrate(Rhs&& rhs, OdeState& y, double t0, double t1, const OdeTolerance& tol = {}) {
  namespace odeint = boost::numeric::odeint;
  if (t1 == t0) return;
  auto stepper = odeint::make_controlled(tol.atol, tol.rtol, odeint::runge_kutta_fehlberg78<OdeState>());
  const double dt0 = (t1 - t0) * 1e-3;
  double t_reached = t0;
  try {
    odeint::integrate_adaptive(stepper, rhs, y, t0, t1, dt0,
                               [&](const OdeState&, double t) { t_reached = t; });
  } catch (const std::exception& e) {
    throw NumericalError(std::string("ode integration failed near t=") + std::to_string(t_reached) + ": " +
                         e.what());
  }
  for (const auto& v : y)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericalError("ode integration produced non-finite state near t=" + std::to_string(t_reached));
}

// Propagator of i dU/dt = H(t) U for a fixed-size Hamiltonian.
template <int D, typename HFun>
Eigen::Matrix<cplx, D, D> propagate(HFun&& h, const Eigen::Matrix<cplx, D, D>& u0, double t0, double t1,
                                    const OdeTolerance& tol = {}) {
  using Mat = Eigen::Matrix<cplx, D, D>;
  OdeState y(u0.data(), u0.data() + D * D);
  auto rhs = [&](const OdeState& x, OdeState& dx, double t) {
    Eigen::Map<const Mat> u(x.data());
    Eigen::Map<Mat> du(dx.data());
    du.noalias() = cplx(0, -1) * (h(t) * u);
  };
  ode_integrate(rhs, y, t0, t1, tol);
  return Eigen::Map<const Mat>(y.data());
}

}  // namespace sweetfloq
