#pragma once

#include <cmath>
#include <vector>

#include "holokan/systems.hpp"

namespace holokan {

/// One classical fourth-order Runge-Kutta step of dz/dt = f(z) on R^2.
template <class Field>
Complex rk4_step(const Field& f, Complex z, double dt) {
  const Complex k1 = f(z);
  const Complex k2 = f(z + 0.5 * dt * k1);
  const Complex k3 = f(z + 0.5 * dt * k2);
  const Complex k4 = f(z + dt * k3);
  return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Complex> states;
  bool diverged = false;
};

/// Fixed-step RK4 from z0 over [0, horizon]. The last step is shortened to
/// land on the horizon. Integration stops (and the trajectory is marked
/// diverged) as soon as a state is non-finite or |z| exceeds `bailout`; the
/// offending state is not stored.
template <class Field>
Trajectory integrate_trajectory(const Field& f, Complex z0, double horizon, double dt, double bailout = 10.0) {
  if (!(dt > 0.0)) throw ConfigError("integration step must be positive");
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(z0);
  double t = 0.0;
  Complex z = z0;
  const double eps = 1e-12 * std::max(1.0, horizon);
  while (t < horizon - eps) {
    const double h = std::min(dt, horizon - t);
    const Complex next = rk4_step(f, z, h);
    if (!is_finite(next) || std::abs(next) > bailout) {
      traj.diverged = true;
      break;
    }
    t += h;
    z = next;
    traj.times.push_back(t);
    traj.states.push_back(z);
  }
  return traj;
}

}  // namespace holokan
