#pragma once

#include "l1adapt/controller.hpp"
#include "l1adapt/error.hpp"
#include "l1adapt/lti.hpp"
#include "l1adapt/plant.hpp"
#include "l1adapt/signals.hpp"

namespace l1adapt::reference {

// The closed-loop reference system uses the true parameters and is therefore an
// analysis oracle only; nothing here is implementable on the real plant.

struct ReferenceState {
    Vector x_ref;
    Vector filter_state;
};

/// C(s)/omega built from D(s), k and the true omega.
inline lti::StateSpace make_reference_filter(const lti::StateSpace& D, double k, double omega) {
    if (omega == 0.0) throw Error(Errc::InvalidArgument, "omega must be nonzero");
    return lti::scale(lti::low_pass_filter(D, omega, k), 1.0 / omega);
}

inline ReferenceState initial_state(const Vector& x0, const lti::StateSpace& filter) {
    return {x0, Vector::Zero(filter.states())};
}

struct ReferenceRates {
    Vector dx_ref;
    Vector dfilter;
    double u_ref = 0.0;
};

/// Reference dynamics with parameters already evaluated at (t, x_ref):
/// r_bar_ref = -theta^T x_ref - sigma + k_g r drives C(s)/omega, whose output is u_ref.
inline ReferenceRates reference_rhs(const ReferenceState& rs, double r, const plant::PlantSpec& spec,
                                    const lti::StateSpace& filter, double k_g, const Vector& theta, double sigma) {
    ReferenceRates out;
    const double theta_x = theta.dot(rs.x_ref);
    const double r_bar = -theta_x - sigma + k_g * r;
    out.u_ref = filter.C.row(0).dot(rs.filter_state) + filter.D(0, 0) * r_bar;
    out.dfilter = filter.A * rs.filter_state + filter.B.col(0) * r_bar;
    out.dx_ref = spec.A_m * rs.x_ref + spec.b * (spec.omega * out.u_ref + theta_x + sigma);
    return out;
}

/// sigma is evaluated on x_ref, not on the adaptive closed loop's state.
inline ReferenceRates reference_derivatives(const ReferenceState& rs, double t, double r, const plant::PlantSpec& spec,
                                            const lti::StateSpace& filter, double k_g) {
    const Vector theta = spec.theta_at(t);
    const double sigma = signals::eval(spec.sigma.expr, t, rs.x_ref);
    return reference_rhs(rs, r, spec, filter, k_g, theta, sigma);
}

/// A_g = [A_m + b theta^T, b omega; -k theta^T, -k omega].
inline Matrix build_Ag(const Matrix& A_m, const Vector& b, const Vector& theta, double omega, double k) {
    const auto n = A_m.rows();
    if (A_m.cols() != n || b.size() != n || theta.size() != n) throw Error(Errc::InvalidArgument, "build_Ag: dimension mismatch");
    Matrix Ag(n + 1, n + 1);
    Ag.topLeftCorner(n, n) = A_m + b * theta.transpose();
    Ag.topRightCorner(n, 1) = b * omega;
    Ag.bottomLeftCorner(1, n) = -k * theta.transpose();
    Ag(n, n) = -k * omega;
    return Ag;
}

/// u_ideal = (k_g r - theta^T x_ref - sigma(t, x_ref)) / omega.
inline double ideal_control(double t, const Vector& x_ref, double r, const plant::PlantSpec& spec, double k_g) {
    if (spec.omega == 0.0) throw Error(Errc::InvalidArgument, "omega must be nonzero");
    const double sigma = signals::eval(spec.sigma.expr, t, x_ref);
    return (k_g * r - spec.theta_at(t).dot(x_ref) - sigma) / spec.omega;
}

} // namespace l1adapt::reference
