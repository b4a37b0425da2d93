#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "l1adapt/error.hpp"
#include "l1adapt/lti.hpp"
#include "l1adapt/signals.hpp"

namespace l1adapt::plant {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double center() const noexcept { return 0.5 * (lo + hi); }
    [[nodiscard]] double half_width() const noexcept { return 0.5 * (hi - lo); }
    [[nodiscard]] double max_abs() const noexcept { return std::max(std::abs(lo), std::abs(hi)); }
    [[nodiscard]] bool contains(double v) const noexcept { return v >= lo && v <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Known compact sets: omega in [omega_l, omega_u], theta(t) in the box, |sigma(t)| <= delta,
/// ||theta'(t)||_2 <= d_theta, |sigma'(t)| <= d_sigma.
struct UncertaintySets {
    Interval omega;
    std::vector<Interval> theta_box;
    double delta = 0.0;
    double d_theta = 0.0;
    double d_sigma = 0.0;

    void validate() const {
        if (!(omega.lo > 0.0) || !(omega.hi >= omega.lo))
            throw Error(Errc::InvalidArgument, "omega interval must satisfy 0 < omega_l <= omega_u");
        for (const auto& iv : theta_box)
            if (!(iv.hi >= iv.lo) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
                throw Error(Errc::InvalidArgument, "theta box interval is empty or not finite");
        if (!(delta >= 0.0)) throw Error(Errc::InvalidArgument, "delta must be nonnegative");
        if (!(d_theta >= 0.0) || !(d_sigma >= 0.0))
            throw Error(Errc::InvalidArgument, "derivative bounds must be nonnegative");
    }

    /// max over the box of ||theta||_2.
    [[nodiscard]] double theta_max_norm2() const {
        double s = 0.0;
        for (const auto& iv : theta_box) s += iv.max_abs() * iv.max_abs();
        return std::sqrt(s);
    }
};

/// x' = A_m x + b (omega u + theta(t)^T x + sigma(t, x)),  y = c^T x.
struct PlantSpec {
    Matrix A_m;
    Vector b, c, x0;
    double omega = 1.0;
    std::vector<signals::SignalSpec> theta;
    signals::SignalSpec sigma;

    [[nodiscard]] Eigen::Index n() const noexcept { return A_m.rows(); }

    [[nodiscard]] Vector theta_at(double t) const {
        Vector th(n());
        for (Eigen::Index i = 0; i < n(); ++i) th(i) = signals::eval(theta[static_cast<std::size_t>(i)].expr, t, x0);
        return th;
    }

    [[nodiscard]] bool constant_theta() const {
        return std::all_of(theta.begin(), theta.end(), [](const auto& s) { return s.expr.is_constant(); });
    }
};

/// Structural checks that need no sampling: dimensions, Hurwitz A_m, controllability,
/// omega inside Omega and no state dependence in theta.
inline void validate_structure(const PlantSpec& spec, const UncertaintySets& sets) {
    const auto n = spec.n();
    if (n < 1 || spec.A_m.cols() != n || spec.b.size() != n || spec.c.size() != n || spec.x0.size() != n)
        throw Error(Errc::InvalidArgument, "plant dimensions are inconsistent");
    if (static_cast<Eigen::Index>(spec.theta.size()) != n)
        throw Error(Errc::InvalidArgument, "need one theta expression per state");
    if (static_cast<Eigen::Index>(sets.theta_box.size()) != n)
        throw Error(Errc::InvalidArgument, "theta box dimension does not match the state dimension");
    sets.validate();
    if (!lti::is_hurwitz(spec.A_m)) throw Error(Errc::NotHurwitz, "A_m is not Hurwitz");
    if (lti::controllability_matrix_rank(spec.A_m, spec.b) != n)
        throw Error(Errc::NotControllable, "(A_m, b) is not controllable");
    if (!sets.omega.contains(spec.omega)) throw Error(Errc::InvalidArgument, "true omega lies outside Omega");
    for (std::size_t i = 0; i < spec.theta.size(); ++i)
        if (spec.theta[i].expr.depends_on_state())
            throw Error(Errc::InvalidArgument,
                        "theta" + std::to_string(i + 1) + " depends on the state; parameters must be exogenous");
    if (spec.sigma.expr.empty()) throw Error(Errc::InvalidArgument, "sigma expression missing");
}

struct SampledBounds {
    bool theta_in_box = true;
    bool theta_rate_ok = true;
    bool sigma_ok = true;
    double max_theta_rate = 0.0;
    double max_abs_sigma = 0.0;
    double max_sigma_rate = 0.0;
};

/// Samples theta(t) and sigma(t, x(t)) on [0, horizon] and compares with the declared sets.
/// Without a trajectory, sigma is sampled along x = 0.
inline SampledBounds check_sampled_bounds(const PlantSpec& spec, const UncertaintySets& sets, double horizon,
                                          int samples, const signals::StateTrajectory& trajectory = {}) {
    SampledBounds out;
    const auto n = spec.n();
    constexpr double kStep = 1e-5;
    for (int k = 0; k <= samples; ++k) {
        const double t = horizon * static_cast<double>(k) / static_cast<double>(samples);
        const Vector th = spec.theta_at(t);
        const double tm = std::max(0.0, t - kStep);
        const Vector rate = (spec.theta_at(t + kStep) - spec.theta_at(tm)) / (t + kStep - tm);
        out.max_theta_rate = std::max(out.max_theta_rate, rate.norm());
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& iv = sets.theta_box[static_cast<std::size_t>(i)];
            const double slack = 0.01 * std::max(iv.max_abs(), 1e-12);
            if (th(i) < iv.lo - slack || th(i) > iv.hi + slack) out.theta_in_box = false;
        }
    }
    if (out.max_theta_rate > 1.01 * sets.d_theta + 1e-12) out.theta_rate_ok = false;

    signals::SignalSpec sig = spec.sigma;
    sig.declared_bound = sets.delta;
    sig.declared_rate_bound = sets.d_sigma;
    const auto sc = signals::check_declared_bounds(sig, horizon, samples, trajectory);
    out.sigma_ok = sc.ok;
    out.max_abs_sigma = sc.max_abs;
    out.max_sigma_rate = sc.max_rate;
    return out;
}

/// Right-hand side with parameter values already evaluated.
inline Vector plant_rhs(const PlantSpec& spec, const Vector& x, double u, const Vector& theta, double sigma) {
    return spec.A_m * x + spec.b * (spec.omega * u + theta.dot(x) + sigma);
}

/// A_m x + b (omega u + theta(t)^T x + sigma(t, x)).
inline Vector plant_derivative(const PlantSpec& spec, double t, const Vector& x, double u) {
    const Vector th = spec.theta_at(t);
    const double sig = signals::eval(spec.sigma.expr, t, x);
    return plant_rhs(spec, x, u, th, sig);
}

// ============================================================================
// Single-link robot arm
// ============================================================================

/// Disturbance variants used with the robot arm.
enum class RobotArmDisturbance {
    SinPi,        // sin(pi t)
    LowFrequency, // cos(x1) + 2 sin(10 t) + cos(15 t)
    HighFrequency // cos(x1) + 2 sin(100 t) + cos(150 t)
};

struct PlantAndSets {
    PlantSpec plant;
    UncertaintySets sets;
};

inline signals::SignalSpec make_signal(const std::string& text, std::size_t n_states) {
    return signals::SignalSpec{signals::parse(text, n_states), text, std::nullopt, std::nullopt};
}

inline std::string robot_arm_sigma_text(RobotArmDisturbance d) {
    switch (d) {
    case RobotArmDisturbance::SinPi: return "sin(pi*t)";
    case RobotArmDisturbance::LowFrequency: return "cos(x1) + 2*sin(10*t) + cos(15*t)";
    case RobotArmDisturbance::HighFrequency: return "cos(x1) + 2*sin(100*t) + cos(150*t)";
    }
    return "0";
}

/// Declared |sigma'| bounds. The state-dependent variants assume |x2| <= 5 along the run.
inline double robot_arm_sigma_rate_bound(RobotArmDisturbance d) {
    switch (d) {
    case RobotArmDisturbance::SinPi: return 3.2;
    case RobotArmDisturbance::LowFrequency: return 40.0;
    case RobotArmDisturbance::HighFrequency: return 355.0;
    }
    return 0.0;
}

/// The robot arm in (omega, theta, sigma) form: omega = 1/I, with gravity folded into sigma.
inline PlantAndSets robot_arm_preset(RobotArmDisturbance disturbance = RobotArmDisturbance::SinPi) {
    PlantAndSets out;
    PlantSpec& p = out.plant;
    p.A_m.resize(2, 2);
    p.A_m << 0.0, 1.0, -1.0, -1.4;
    p.b = Vector::Unit(2, 1);
    p.c = Vector::Unit(2, 0);
    p.x0 = Vector::Zero(2);
    p.omega = 1.0;
    p.theta = {make_signal("2 + cos(pi*t)", 2), make_signal("2 + 0.3*sin(pi*t) + 0.2*cos(2*t)", 2)};
    p.sigma = make_signal(robot_arm_sigma_text(disturbance), 2);

    UncertaintySets& s = out.sets;
    s.omega = {0.2, 5.0};
    s.theta_box = {{-10.0, 10.0}, {-10.0, 10.0}};
    s.delta = 10.0;
    // sup ||theta'||_2 = sup sqrt(pi^2 sin^2(pi t) + (0.3 pi cos(pi t) - 0.4 sin(2 t))^2) < 3.5
    s.d_theta = 3.5;
    s.d_sigma = robot_arm_sigma_rate_bound(disturbance);
    return out;
}

} // namespace l1adapt::plant
