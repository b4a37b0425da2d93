#pragma once

#include <cmath>

#include "l1adapt/error.hpp"
#include "l1adapt/lti.hpp"

namespace l1adapt::sim {

/// Classical four-stage Runge-Kutta step for y' = f(t, y).
/// `f` is called as f(t, y) and must return something assignable to Vector.
template <typename F>
Vector rk4_step(F&& f, double t, const Vector& y, double dt) {
    const Vector k1 = f(t, y);
    const Vector k2 = f(t + 0.5 * dt, Vector(y + 0.5 * dt * k1));
    const Vector k3 = f(t + 0.5 * dt, Vector(y + 0.5 * dt * k2));
    const Vector k4 = f(t + dt, Vector(y + dt * k3));
    Vector next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) throw Error(Errc::NonFinite, "RK4 step produced a non-finite state at t = " + std::to_string(t));
    return next;
}

/// Allocation-free RK4 for the hot simulation loop. `f(t, y, dydt)` writes the
/// derivative into its third argument.
class Rk4Stepper {
public:
    explicit Rk4Stepper(Eigen::Index n) : k1_(n), k2_(n), k3_(n), k4_(n), tmp_(n) {}

    template <typename F>
    void step(F&& f, double t, Vector& y, double dt) {
        f(t, y, k1_);
        tmp_.noalias() = y + (0.5 * dt) * k1_;
        f(t + 0.5 * dt, tmp_, k2_);
        tmp_.noalias() = y + (0.5 * dt) * k2_;
        f(t + 0.5 * dt, tmp_, k3_);
        tmp_.noalias() = y + dt * k3_;
        f(t + dt, tmp_, k4_);
        y += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

private:
    Vector k1_, k2_, k3_, k4_, tmp_;
};

} // namespace l1adapt::sim
