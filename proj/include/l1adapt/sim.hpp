#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "l1adapt/bounds.hpp"
#include "l1adapt/controller.hpp"
#include "l1adapt/error.hpp"
#include "l1adapt/ode.hpp"
#include "l1adapt/plant.hpp"
#include "l1adapt/reference.hpp"
#include "l1adapt/signals.hpp"

namespace l1adapt::sim {

inline constexpr double kDivergenceThreshold = 1e9;
inline constexpr double kStiffnessWarn = 0.1;
inline constexpr double kStiffnessLimit = 0.5;

struct SimSettings {
    double dt = 1e-4;
    double horizon = 10.0;
    int record_stride = 1;
    double rms_from = 0.0; // tracking RMS is taken over [rms_from, horizon]

    /// Number of integration steps; throws unless horizon/dt is an integer within rounding.
    [[nodiscard]] long steps() const {
        if (!(dt > 0.0) || !(horizon > 0.0) || record_stride < 1)
            throw Error(Errc::InvalidArgument, "dt, horizon and record_stride must be positive");
        const double q = horizon / dt;
        const double n = std::round(q);
        if (std::abs(q - n) > 1e-6 * std::max(1.0, q))
            throw Error(Errc::InvalidArgument, "horizon is not an integer multiple of dt");
        return static_cast<long>(n);
    }
};

/// Warnings for dt * gamma_c above the stiffness thresholds.
inline std::vector<std::string> stiffness_warnings(double dt, double gamma_c) {
    const double s = dt * gamma_c;
    if (s > kStiffnessLimit)
        return {"dt * gamma_c = " + std::to_string(s) + " exceeds " + std::to_string(kStiffnessLimit) +
                "; the adaptive laws may be under-resolved, reduce dt"};
    if (s > kStiffnessWarn)
        return {"dt * gamma_c = " + std::to_string(s) + " exceeds " + std::to_string(kStiffnessWarn)};
    return {};
}

struct TraceRow {
    double t = 0.0;
    Vector x, x_hat, theta_hat, x_ref;
    double u = 0.0, sigma_hat = 0.0, omega_hat = 0.0, u_ref = 0.0, r = 0.0;
};

struct Trace {
    Eigen::Index n = 0;
    bool with_reference = false;
    std::vector<TraceRow> rows;
};

struct Metrics {
    double sup_xtilde = 0.0;                 // sup ||x_hat - x||_inf
    std::optional<double> sup_e;             // sup ||x - x_ref||_inf
    std::optional<double> sup_u_err;         // sup |u - u_ref|
    double terminal_xtilde = 0.0;            // sup ||x_hat - x||_inf over the last 10% of the horizon
    double tracking_rms = 0.0;               // RMS of c^T x - r over [rms_from, horizon]
    Vector sup_abs_x, sup_abs_xtilde;        // componentwise sups
    double sup_u = 0.0;
};

enum class Outcome { Completed, Diverged, NonFinite, EstimateOutOfBounds };

inline std::string to_string(Outcome o) {
    switch (o) {
    case Outcome::Completed: return "completed";
    case Outcome::Diverged: return "diverged";
    case Outcome::NonFinite: return "non-finite";
    case Outcome::EstimateOutOfBounds: return "estimate out of bounds";
    }
    return "unknown";
}

struct SimResult {
    Trace trace;
    Metrics metrics;
    Outcome outcome = Outcome::Completed;
    std::string message;
    double last_good_time = 0.0;
    std::vector<std::string> warnings;

    [[nodiscard]] bool ok() const noexcept { return outcome == Outcome::Completed; }

    /// Converts a failed outcome into the matching exception.
    void throw_if_failed() const {
        switch (outcome) {
        case Outcome::Completed: return;
        case Outcome::Diverged: throw Error(Errc::Diverged, message);
        case Outcome::NonFinite: throw Error(Errc::NonFinite, message);
        case Outcome::EstimateOutOfBounds: throw Error(Errc::EstimateOutOfBounds, message);
        }
    }
};

struct RunOptions {
    bool with_reference = true;
    bool unsafe = false;
    std::optional<bool> certificate_pass; // precomputed verdict; otherwise the L1 condition is checked at the true omega
};

/// Offsets into the coupled state [x, x_hat, theta_hat, sigma_hat, omega_hat, chi, x_ref, xi].
struct Layout {
    Eigen::Index n, d, dr;
    bool ref;
    [[nodiscard]] Eigen::Index x() const { return 0; }
    [[nodiscard]] Eigen::Index x_hat() const { return n; }
    [[nodiscard]] Eigen::Index theta() const { return 2 * n; }
    [[nodiscard]] Eigen::Index sigma() const { return 3 * n; }
    [[nodiscard]] Eigen::Index omega() const { return 3 * n + 1; }
    [[nodiscard]] Eigen::Index chi() const { return 3 * n + 2; }
    [[nodiscard]] Eigen::Index x_ref() const { return 3 * n + 2 + d; }
    [[nodiscard]] Eigen::Index xi() const { return 4 * n + 2 + d; }
    [[nodiscard]] Eigen::Index size() const { return ref ? 4 * n + 2 + d + dr : 3 * n + 2 + d; }
};

/// Integrates plant, controller and (optionally) the reference system as one coupled state
/// with fixed-step RK4. Failures stop the run and return the partial trace.
inline SimResult run_scenario(const plant::PlantSpec& spec, const controller::ControllerConfig& cfg,
                              const signals::SignalExpr& r_expr, const SimSettings& settings, const RunOptions& opts = {}) {
    const long steps = settings.steps();
    const auto n = spec.n();
    if (r_expr.depends_on_state()) throw Error(Errc::InvalidArgument, "reference input r must depend on t only");
    if (!opts.unsafe) {
        bool pass = false;
        if (opts.certificate_pass) {
            pass = *opts.certificate_pass;
        } else {
            pass = bounds::check_l1_requirement(spec.A_m, spec.b, cfg.D, cfg.k, cfg.sets, l1norm::kDefaultRelTol,
                                                {spec.omega})
                       .pass;
        }
        if (!pass)
            throw Error(Errc::CertificateUnavailable, "stability certificate fails; rerun with the unsafe flag to simulate anyway");
    }

    SimResult res;
    res.warnings = stiffness_warnings(settings.dt, cfg.gamma_c);
    const lti::StateSpace filter = opts.with_reference ? reference::make_reference_filter(cfg.D, cfg.k, spec.omega)
                                                      : lti::StateSpace{};
    const Layout lay{n, cfg.D.states(), opts.with_reference ? filter.states() : 0, opts.with_reference};

    Vector y = Vector::Zero(lay.size());
    {
        const auto cs0 = controller::initial_state(cfg, spec.x0);
        y.segment(lay.x(), n) = spec.x0;
        y.segment(lay.x_hat(), n) = cs0.x_hat;
        y.segment(lay.theta(), n) = cs0.theta_hat;
        y(lay.sigma()) = cs0.sigma_hat;
        y(lay.omega()) = cs0.omega_hat;
        if (lay.ref) y.segment(lay.x_ref(), n) = spec.x0;
    }

    controller::ControllerState cs;
    reference::ReferenceState rs;
    Vector x(n);
    auto unpack = [&](const Vector& s) {
        x = s.segment(lay.x(), n);
        cs.x_hat = s.segment(lay.x_hat(), n);
        cs.theta_hat = s.segment(lay.theta(), n);
        cs.sigma_hat = s(lay.sigma());
        cs.omega_hat = s(lay.omega());
        cs.chi = s.segment(lay.chi(), lay.d);
        if (lay.ref) {
            rs.x_ref = s.segment(lay.x_ref(), n);
            rs.filter_state = s.segment(lay.xi(), lay.dr);
        }
    };

    auto rhs = [&](double t, const Vector& s, Vector& ds) {
        unpack(s);
        const double r = signals::eval(r_expr, t);
        const Vector th = spec.theta_at(t);
        const double sig = signals::eval(spec.sigma.expr, t, x);
        const auto cr = controller::control_derivatives(cs, x, r, spec, cfg);
        const auto ar = controller::adaptive_derivatives(cs, x, cr.u, cfg);
        ds.segment(lay.x(), n) = plant::plant_rhs(spec, x, cr.u, th, sig);
        ds.segment(lay.x_hat(), n) = cr.dx_hat;
        ds.segment(lay.theta(), n) = ar.dtheta_hat;
        ds(lay.sigma()) = ar.dsigma_hat;
        ds(lay.omega()) = ar.domega_hat;
        ds.segment(lay.chi(), lay.d) = cr.dchi;
        if (lay.ref) {
            const double sig_ref = signals::eval(spec.sigma.expr, t, rs.x_ref);
            const auto rr = reference::reference_rhs(rs, r, spec, filter, cfg.k_g, th, sig_ref);
            ds.segment(lay.x_ref(), n) = rr.dx_ref;
            ds.segment(lay.xi(), lay.dr) = rr.dfilter;
        }
    };

    Metrics& m = res.metrics;
    m.sup_abs_x = Vector::Zero(n);
    m.sup_abs_xtilde = Vector::Zero(n);
    if (lay.ref) {
        m.sup_e = 0.0;
        m.sup_u_err = 0.0;
    }
    const long terminal_from = steps - steps / 10;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double rms_acc = 0.0;
    long rms_count = 0;
    res.trace.n = n;
    res.trace.with_reference = lay.ref;
    res.trace.rows.reserve(static_cast<std::size_t>(steps / settings.record_stride + 1));

    auto observe = [&](long i, double t) {
        unpack(y);
        const double r = signals::eval(r_expr, t);
        const double u = controller::control_signal(cs, cfg);
        const Vector xt = cs.x_hat - x;
        const double xt_inf = xt.cwiseAbs().maxCoeff();
        m.sup_xtilde = std::max(m.sup_xtilde, xt_inf);
        if (i >= terminal_from) m.terminal_xtilde = std::max(m.terminal_xtilde, xt_inf);
        m.sup_abs_x = m.sup_abs_x.cwiseMax(x.cwiseAbs());
        m.sup_abs_xtilde = m.sup_abs_xtilde.cwiseMax(xt.cwiseAbs());
        m.sup_u = std::max(m.sup_u, std::abs(u));
        if (t >= settings.rms_from - 1e-12) {
            const double err = spec.c.dot(x) - r;
            rms_acc += err * err;
            ++rms_count;
        }
        double u_ref = nan;
        if (lay.ref) {
            const double sig_ref = signals::eval(spec.sigma.expr, t, rs.x_ref);
            u_ref = reference::reference_rhs(rs, r, spec, filter, cfg.k_g, spec.theta_at(t), sig_ref).u_ref;
            m.sup_e = std::max(*m.sup_e, (x - rs.x_ref).cwiseAbs().maxCoeff());
            m.sup_u_err = std::max(*m.sup_u_err, std::abs(u - u_ref));
        }
        if (i % settings.record_stride == 0) {
            TraceRow row;
            row.t = t;
            row.x = x;
            row.x_hat = cs.x_hat;
            row.theta_hat = cs.theta_hat;
            row.u = u;
            row.sigma_hat = cs.sigma_hat;
            row.omega_hat = cs.omega_hat;
            row.x_ref = lay.ref ? rs.x_ref : Vector::Constant(n, nan);
            row.u_ref = u_ref;
            row.r = r;
            res.trace.rows.push_back(std::move(row));
        }
    };

    Rk4Stepper stepper(lay.size());
    try {
        observe(0, 0.0);
        for (long i = 0; i < steps; ++i) {
            const double t = static_cast<double>(i) * settings.dt;
            stepper.step(rhs, t, y, settings.dt);
            if (!y.allFinite()) throw Error(Errc::NonFinite, "non-finite state after t = " + std::to_string(t));
            if (y.cwiseAbs().maxCoeff() > kDivergenceThreshold)
                throw Error(Errc::Diverged, "state norm exceeded 1e9 after t = " + std::to_string(t));
            {
                unpack(y);
                controller::clamp_estimates(cs, cfg);
                y.segment(lay.theta(), n) = cs.theta_hat;
                y(lay.sigma()) = cs.sigma_hat;
                y(lay.omega()) = cs.omega_hat;
            }
            res.last_good_time = static_cast<double>(i + 1) * settings.dt;
            observe(i + 1, res.last_good_time);
        }
    } catch (const Error& e) {
        switch (e.code()) {
        case Errc::Diverged: res.outcome = Outcome::Diverged; break;
        case Errc::NonFinite: res.outcome = Outcome::NonFinite; break;
        case Errc::EstimateOutOfBounds: res.outcome = Outcome::EstimateOutOfBounds; break;
        default: throw;
        }
        res.message = std::string(e.what()) + " (last good time " + std::to_string(res.last_good_time) + ")";
    }
    m.tracking_rms = rms_count > 0 ? std::sqrt(rms_acc / static_cast<double>(rms_count)) : 0.0;
    return res;
}

/// Max deviation of x and x_hat between runs at dt and dt/2, compared on the coarse grid.
inline double step_convergence_check(const plant::PlantSpec& spec, const controller::ControllerConfig& cfg,
                                     const signals::SignalExpr& r_expr, SimSettings settings, RunOptions opts = {}) {
    settings.record_stride = 1;
    opts.with_reference = false;
    const auto coarse = run_scenario(spec, cfg, r_expr, settings, opts);
    coarse.throw_if_failed();
    SimSettings fine_settings = settings;
    fine_settings.dt = settings.dt / 2.0;
    fine_settings.record_stride = 2;
    const auto fine = run_scenario(spec, cfg, r_expr, fine_settings, opts);
    fine.throw_if_failed();
    double dev = 0.0;
    const auto rows = std::min(coarse.trace.rows.size(), fine.trace.rows.size());
    for (std::size_t i = 0; i < rows; ++i) {
        const auto& a = coarse.trace.rows[i];
        const auto& b = fine.trace.rows[i];
        dev = std::max({dev, (a.x - b.x).cwiseAbs().maxCoeff(), (a.x_hat - b.x_hat).cwiseAbs().maxCoeff()});
    }
    return dev;
}

// ============================================================================
// Spectral helpers
// ============================================================================

/// |DFT| of the mean-removed samples at angular frequency w.
inline double spectrum_magnitude(const std::vector<double>& samples, double dt, double w) {
    if (samples.empty()) return 0.0;
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    std::complex<double> acc{0.0, 0.0};
    const std::complex<double> rot = std::polar(1.0, -w * dt);
    std::complex<double> ph{1.0, 0.0};
    for (std::size_t i = 0; i < samples.size(); ++i) {
        acc += (samples[i] - mean) * ph;
        ph *= rot;
        if ((i & 1023U) == 1023U) ph /= std::abs(ph);
    }
    return std::abs(acc) / static_cast<double>(samples.size());
}

struct SpectralPeak {
    double omega = 0.0;
    double bin_width = 0.0;
    double magnitude = 0.0;
};

/// Largest DFT bin (DC excluded) with angular frequency at most max_omega.
inline SpectralPeak dominant_angular_frequency(const std::vector<double>& samples, double dt, double max_omega) {
    if (samples.size() < 4 || !(dt > 0.0)) throw Error(Errc::InvalidArgument, "need at least 4 samples and dt > 0");
    SpectralPeak peak;
    const double duration = static_cast<double>(samples.size()) * dt;
    peak.bin_width = 2.0 * std::numbers::pi / duration;
    const auto bins = static_cast<long>(std::min(max_omega / peak.bin_width, static_cast<double>(samples.size() / 2)));
    for (long k = 1; k <= bins; ++k) {
        const double w = static_cast<double>(k) * peak.bin_width;
        const double mag = spectrum_magnitude(samples, dt, w);
        if (mag > peak.magnitude) peak = {w, peak.bin_width, mag};
    }
    return peak;
}

// ============================================================================
// CSV export
// ============================================================================

namespace detail {
inline void put(std::ostream& os, double v) {
    if (std::isnan(v)) {
        os << "nan";
        return;
    }
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    os.write(buf.data(), res.ptr - buf.data());
}
} // namespace detail

/// Header `t,x1..xn,xhat1..xhatn,u,thetahat1..thetahatn,sigmahat,omegahat,xref1..xrefn,uref,r`,
/// shortest round-trip decimal per value.
inline void write_csv(std::ostream& os, const Trace& trace) {
    const auto n = trace.n;
    os << 't';
    for (Eigen::Index i = 1; i <= n; ++i) os << ",x" << i;
    for (Eigen::Index i = 1; i <= n; ++i) os << ",xhat" << i;
    os << ",u";
    for (Eigen::Index i = 1; i <= n; ++i) os << ",thetahat" << i;
    os << ",sigmahat,omegahat";
    for (Eigen::Index i = 1; i <= n; ++i) os << ",xref" << i;
    os << ",uref,r\n";
    for (const auto& row : trace.rows) {
        detail::put(os, row.t);
        auto vec = [&](const Vector& v) {
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                os << ',';
                detail::put(os, v(i));
            }
        };
        auto val = [&](double v) {
            os << ',';
            detail::put(os, v);
        };
        vec(row.x);
        vec(row.x_hat);
        val(row.u);
        vec(row.theta_hat);
        val(row.sigma_hat);
        val(row.omega_hat);
        vec(row.x_ref);
        val(row.u_ref);
        val(row.r);
        os << '\n';
    }
}

} // namespace l1adapt::sim
