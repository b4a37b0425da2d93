#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l1adapt/error.hpp"
#include "l1adapt/lti.hpp"
#include "l1adapt/plant.hpp"

namespace l1adapt::controller {

using plant::Interval;
using plant::UncertaintySets;

inline constexpr double kDefaultProjectionEps = 0.1;

// ============================================================================
// Projection
// ============================================================================

/// A core interval plus outer boundary layers. Estimates live in
/// [lo - lower_layer, hi + upper_layer]; outward updates fade to zero across each layer.
struct ProjectionBounds {
    Interval core;
    double lower_layer = 0.0;
    double upper_layer = 0.0;

    [[nodiscard]] Interval inflated() const noexcept { return {core.lo - lower_layer, core.hi + upper_layer}; }

    static ProjectionBounds symmetric(Interval core, double eps) {
        const double w = eps * core.half_width();
        return {core, w, w};
    }
};

namespace detail {
// Slack for the precondition check: rounding in an RK stage must not trip it.
inline double out_of_bounds_slack(const ProjectionBounds& pb) {
    return 1e-9 * std::max({1.0, std::abs(pb.core.lo), std::abs(pb.core.hi), pb.core.half_width()});
}
} // namespace detail

/// One component of Proj: interior estimates pass the update through; in a boundary layer
/// the outward part is scaled by the remaining fraction of the layer; inward parts pass.
inline double proj_component(double update, double estimate, const ProjectionBounds& pb) {
    const Interval outer = pb.inflated();
    const double slack = detail::out_of_bounds_slack(pb);
    if (estimate < outer.lo - slack || estimate > outer.hi + slack)
        throw Error(Errc::EstimateOutOfBounds,
                    "estimate " + std::to_string(estimate) + " left [" + std::to_string(outer.lo) + ", " +
                        std::to_string(outer.hi) + "]; reduce the integration step");
    if (update > 0.0 && estimate >= pb.core.hi) {
        if (pb.upper_layer <= 0.0) return 0.0;
        return update * std::clamp(1.0 - (estimate - pb.core.hi) / pb.upper_layer, 0.0, 1.0);
    }
    if (update < 0.0 && estimate <= pb.core.lo) {
        if (pb.lower_layer <= 0.0) return 0.0;
        return update * std::clamp(1.0 - (pb.core.lo - estimate) / pb.lower_layer, 0.0, 1.0);
    }
    return update;
}

/// Componentwise Proj over a box with layer width eps * (half-width) on both sides.
inline Vector proj(const Vector& update, const Vector& estimate, std::span<const Interval> box, double eps) {
    if (update.size() != estimate.size() || static_cast<std::size_t>(update.size()) != box.size())
        throw Error(Errc::InvalidArgument, "proj: dimension mismatch");
    Vector out(update.size());
    for (Eigen::Index i = 0; i < update.size(); ++i)
        out(i) = proj_component(update(i), estimate(i), ProjectionBounds::symmetric(box[static_cast<std::size_t>(i)], eps));
    return out;
}

/// Projection geometry for all estimates. The lower Omega layer is capped at omega_l / 2 so
/// the control-effectiveness estimate keeps its known (positive) sign.
struct EstimateBounds {
    std::vector<ProjectionBounds> theta;
    ProjectionBounds sigma;
    ProjectionBounds omega;

    static EstimateBounds from_sets(const UncertaintySets& sets, double eps) {
        EstimateBounds eb;
        for (const auto& iv : sets.theta_box) eb.theta.push_back(ProjectionBounds::symmetric(iv, eps));
        eb.sigma = ProjectionBounds::symmetric({-sets.delta, sets.delta}, eps);
        eb.omega = ProjectionBounds::symmetric(sets.omega, eps);
        eb.omega.lower_layer = std::min(eb.omega.lower_layer, 0.5 * sets.omega.lo);
        return eb;
    }

    /// The sets the estimates are confined to.
    [[nodiscard]] UncertaintySets inflated(const UncertaintySets& nominal) const {
        UncertaintySets out = nominal;
        out.theta_box.clear();
        for (const auto& pb : theta) out.theta_box.push_back(pb.inflated());
        out.delta = sigma.inflated().hi;
        out.omega = omega.inflated();
        return out;
    }
};

// ============================================================================
// Configuration and state
// ============================================================================

struct InitialEstimates {
    std::optional<Vector> theta;
    std::optional<double> sigma;
    std::optional<double> omega;
};

struct ControllerConfig {
    double gamma_c = 1e4;
    double k = 60.0;
    lti::StateSpace D;
    Matrix Q;
    lti::LyapunovPair P;
    double k_g = 1.0;
    UncertaintySets sets;
    double projection_eps = kDefaultProjectionEps;
    EstimateBounds bounds;
    InitialEstimates initial;
    Vector Pb; // P b, cached
};

/// Builds the configuration: solves the Lyapunov equation, computes k_g and the projection geometry.
inline ControllerConfig make_config(const plant::PlantSpec& spec, const UncertaintySets& sets, double k, double gamma_c,
                                    const lti::StateSpace& D, const Matrix& Q,
                                    double projection_eps = kDefaultProjectionEps, InitialEstimates initial = {}) {
    if (!(gamma_c > 0.0)) throw Error(Errc::InvalidArgument, "gamma_c must be positive");
    if (!(k > 0.0)) throw Error(Errc::InvalidArgument, "feedback gain k must be positive");
    if (!(projection_eps > 0.0)) throw Error(Errc::InvalidArgument, "projection_eps must be positive");
    D.validate();
    if (D.inputs() != 1 || D.outputs() != 1) throw Error(Errc::InvalidArgument, "D(s) must be SISO");
    if (!D.strictly_proper()) throw Error(Errc::ImproperTransferFunction, "D(s) must be strictly proper");
    ControllerConfig cfg;
    cfg.gamma_c = gamma_c;
    cfg.k = k;
    cfg.D = D;
    cfg.Q = Q;
    cfg.P = lti::lyapunov_solve(spec.A_m, Q);
    cfg.k_g = lti::feedforward_gain(spec.A_m, spec.b, spec.c);
    cfg.sets = sets;
    cfg.projection_eps = projection_eps;
    cfg.bounds = EstimateBounds::from_sets(sets, projection_eps);
    cfg.initial = std::move(initial);
    cfg.Pb = cfg.P.P * spec.b;
    return cfg;
}

/// D(s) = 1/s.
inline lti::StateSpace integrator() {
    return lti::StateSpace(Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Zero(1, 1));
}

struct ControllerState {
    Vector x_hat;
    Vector theta_hat;
    double sigma_hat = 0.0;
    double omega_hat = 1.0;
    Vector chi;
};

/// x_hat(0) = x(0); estimates start at the set centres unless overridden; chi(0) = 0.
inline ControllerState initial_state(const ControllerConfig& cfg, const Vector& x0) {
    ControllerState cs;
    cs.x_hat = x0;
    const auto n = static_cast<Eigen::Index>(cfg.sets.theta_box.size());
    cs.theta_hat = Vector(n);
    for (Eigen::Index i = 0; i < n; ++i) cs.theta_hat(i) = cfg.sets.theta_box[static_cast<std::size_t>(i)].center();
    cs.sigma_hat = 0.0;
    cs.omega_hat = cfg.sets.omega.center();
    if (cfg.initial.theta) cs.theta_hat = *cfg.initial.theta;
    if (cfg.initial.sigma) cs.sigma_hat = *cfg.initial.sigma;
    if (cfg.initial.omega) cs.omega_hat = *cfg.initial.omega;
    cs.chi = Vector::Zero(cfg.D.states());
    return cs;
}

// ============================================================================
// Adaptive and control laws
// ============================================================================

struct AdaptiveRates {
    Vector dtheta_hat;
    double dsigma_hat = 0.0;
    double domega_hat = 0.0;
};

/// theta_hat' = G Proj(-x xt^T P b, theta_hat), sigma_hat' = G Proj(-xt^T P b, sigma_hat),
/// omega_hat' = G Proj(-xt^T P b u, omega_hat), with xt = x_hat - x.
inline AdaptiveRates adaptive_derivatives(const ControllerState& cs, const Vector& x, double u,
                                          const ControllerConfig& cfg) {
    const double e = (cs.x_hat - x).dot(cfg.Pb);
    AdaptiveRates out;
    out.dtheta_hat.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        out.dtheta_hat(i) = cfg.gamma_c * proj_component(-x(i) * e, cs.theta_hat(i), cfg.bounds.theta[static_cast<std::size_t>(i)]);
    out.dsigma_hat = cfg.gamma_c * proj_component(-e, cs.sigma_hat, cfg.bounds.sigma);
    out.domega_hat = cfg.gamma_c * proj_component(-e * u, cs.omega_hat, cfg.bounds.omega);
    return out;
}

/// u = -k C_D chi  (D strictly proper, so u depends on chi only).
inline double control_signal(const ControllerState& cs, const ControllerConfig& cfg) {
    return -cfg.k * cfg.D.C.row(0).dot(cs.chi);
}

struct ControlRates {
    Vector dchi;
    double u = 0.0;
    Vector dx_hat;
};

/// chi' = A_D chi + B_D (omega_hat u + r_bar),  r_bar = theta_hat^T x + sigma_hat - k_g r,
/// x_hat' = A_m x_hat + b (omega_hat u + theta_hat^T x + sigma_hat).
inline ControlRates control_derivatives(const ControllerState& cs, const Vector& x, double r, const plant::PlantSpec& spec,
                                        const ControllerConfig& cfg) {
    ControlRates out;
    out.u = control_signal(cs, cfg);
    const double theta_x = cs.theta_hat.dot(x);
    const double r_bar = theta_x + cs.sigma_hat - cfg.k_g * r;
    const double r_u = cs.omega_hat * out.u + r_bar;
    out.dchi = cfg.D.A * cs.chi + cfg.D.B.col(0) * r_u;
    out.dx_hat = spec.A_m * cs.x_hat + spec.b * (cs.omega_hat * out.u + theta_x + cs.sigma_hat);
    return out;
}

/// Clamps estimates into the inflated sets (applied after each full integration step).
inline void clamp_estimates(ControllerState& cs, const ControllerConfig& cfg) {
    for (Eigen::Index i = 0; i < cs.theta_hat.size(); ++i) {
        const auto iv = cfg.bounds.theta[static_cast<std::size_t>(i)].inflated();
        cs.theta_hat(i) = std::clamp(cs.theta_hat(i), iv.lo, iv.hi);
    }
    const auto s = cfg.bounds.sigma.inflated();
    cs.sigma_hat = std::clamp(cs.sigma_hat, s.lo, s.hi);
    const auto w = cfg.bounds.omega.inflated();
    cs.omega_hat = std::clamp(cs.omega_hat, w.lo, w.hi);
}

} // namespace l1adapt::controller
