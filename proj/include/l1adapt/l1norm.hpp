#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "l1adapt/error.hpp"
#include "l1adapt/lti.hpp"
#include "l1adapt/ode.hpp"

namespace l1adapt::l1norm {

using lti::StateSpace;

inline constexpr double kDefaultRelTol = 1e-4;

/// L1 gain of a stable proper system: |feedthrough| + integral of |impulse response|.
/// `value` already includes the certified tail bound, so it is an upper estimate.
struct L1GainResult {
    double value = 0.0;
    double truncation_time = 0.0;
    double tail_bound = 0.0;
    double feedthrough_part = 0.0;
};

namespace detail {

// Per-entry integrals of |C_i e^{At} B_j| on [0, T] plus certified tails.
struct EntryGains {
    Matrix integral;     // p x m
    Matrix tail;         // p x m
    double truncation_time = 0.0;
};

// One RK4 step of x' = A x is x -> Phi x with Phi the degree-4 Taylor polynomial
// of e^{A h}; building Phi by stepping the basis vectors keeps a single engine.
inline Matrix rk4_propagator(const Matrix& A, double h) {
    const auto n = A.rows();
    Matrix Phi(n, n);
    auto f = [&A](double, const Vector& x) -> Vector { return A * x; };
    for (Eigen::Index j = 0; j < n; ++j) Phi.col(j) = sim::rk4_step(f, 0.0, Vector(Vector::Unit(n, j)), h);
    return Phi;
}

// Composite Simpson of |C x(t)| on `steps` (even) intervals over [0, T].
// Returns the integrals (p x 1) and the state at T.
inline std::pair<Vector, Vector> simpson_abs(const Matrix& Phi, const Matrix& C, const Vector& x0, double h,
                                             long steps) {
    Vector acc = Vector::Zero(C.rows());
    Vector x = x0;
    acc += (C * x).cwiseAbs();
    for (long k = 1; k <= steps; ++k) {
        x = Phi * x;
        const double w = (k == steps) ? 1.0 : ((k % 2 == 1) ? 4.0 : 2.0);
        acc += w * (C * x).cwiseAbs();
    }
    return {acc * (h / 3.0), x};
}

// Lyapunov envelope: with A^T P + P A = -I,  ||e^{At} x|| <= sqrt(x^T P x / lmin) e^{-t / (2 lmax)}.
// Hence int_0^inf ||e^{At} x|| dt <= 2 lmax sqrt(x^T P x / lmin).
struct DecayEnvelope {
    Matrix P;
    double lmin = 0.0, lmax = 0.0;

    explicit DecayEnvelope(const Matrix& A) {
        const auto lp = lti::lyapunov_solve(A, Matrix::Identity(A.rows(), A.rows()));
        P = lp.P;
        lmin = lp.lambda_min_P;
        lmax = lp.lambda_max_P;
    }
    [[nodiscard]] double integral_bound(const Vector& x) const {
        const double v = std::max(0.0, x.dot(P * x));
        return 2.0 * lmax * std::sqrt(v / lmin);
    }
};

inline EntryGains entry_gains(const StateSpace& sys, double rel_tol) {
    sys.validate();
    const auto n = sys.states();
    const auto p = sys.outputs(), m = sys.inputs();
    EntryGains out{Matrix::Zero(p, m), Matrix::Zero(p, m), 0.0};
    if (n == 0) return out;
    if (!lti::is_hurwitz(sys.A)) throw Error(Errc::UnstableSystem, "L1 gain requested for a non-Hurwitz system");

    const auto eig = lti::eigenvalues(sys.A);
    double slow = std::numeric_limits<double>::infinity(), fast = 0.0;
    for (const auto& l : eig) {
        slow = std::min(slow, std::abs(l.real()));
        fast = std::max(fast, std::abs(l));
    }
    fast = std::max({fast, 1.0, sys.A.cwiseAbs().rowwise().sum().maxCoeff() * 0.1});
    const DecayEnvelope env(sys.A);
    const Vector row_norms = sys.C.rowwise().norm();

    constexpr long kMaxSteps = 1L << 23;
    constexpr int kMaxDoublings = 4;
    double T = std::max(20.0 / slow, 10.0);

    for (int doubling = 0; doubling <= kMaxDoublings; ++doubling, T *= 2.0) {
        long steps = 2 * static_cast<long>(std::ceil(T * fast / 0.1));
        steps = std::max(steps, 2000L);
        Matrix coarse = Matrix::Constant(p, m, -1.0);
        Matrix fine(p, m), tail(p, m);
        bool converged = false;
        for (; steps <= kMaxSteps; steps *= 2) {
            const double h = T / static_cast<double>(steps);
            const Matrix Phi = rk4_propagator(sys.A, h);
            for (Eigen::Index j = 0; j < m; ++j) {
                auto [integral, xT] = simpson_abs(Phi, sys.C, sys.B.col(j), h, steps);
                fine.col(j) = integral;
                const double env_int = env.integral_bound(xT);
                for (Eigen::Index i = 0; i < p; ++i) tail(i, j) = row_norms(i) * env_int;
            }
            if (coarse(0, 0) >= 0.0) {
                bool ok = true;
                for (Eigen::Index i = 0; i < p && ok; ++i) {
                    const double row_scale = sys.D.row(i).cwiseAbs().sum() + fine.row(i).sum();
                    const double diff = (fine.row(i) - coarse.row(i)).cwiseAbs().sum();
                    ok = diff <= 0.25 * rel_tol * row_scale + 1e-15;
                }
                if (ok) {
                    converged = true;
                    break;
                }
            }
            coarse = fine;
        }
        if (!converged) throw Error(Errc::ToleranceNotMet, "quadrature refinement budget exhausted");

        bool tail_ok = true;
        for (Eigen::Index i = 0; i < p && tail_ok; ++i) {
            const double row_scale = sys.D.row(i).cwiseAbs().sum() + fine.row(i).sum();
            tail_ok = tail.row(i).sum() <= 0.5 * rel_tol * row_scale + 1e-15;
        }
        if (tail_ok) {
            out.integral = fine;
            out.tail = tail;
            out.truncation_time = T;
            return out;
        }
    }
    throw Error(Errc::ToleranceNotMet, "impulse-response tail could not be certified");
}

} // namespace detail

/// Per-entry L1 gains of a p x m system (feedthrough + integral + tail per entry).
inline Matrix l1_gain_entries(const StateSpace& sys, double rel_tol = kDefaultRelTol) {
    const auto g = detail::entry_gains(sys, rel_tol);
    return sys.D.cwiseAbs() + g.integral + g.tail;
}

/// max over output rows of the sum of entry L1 gains.
inline L1GainResult l1_gain_mimo(const StateSpace& sys, double rel_tol = kDefaultRelTol) {
    if (!(rel_tol > 0.0)) throw Error(Errc::InvalidArgument, "rel_tol must be positive");
    const auto g = detail::entry_gains(sys, rel_tol);
    L1GainResult best;
    best.truncation_time = g.truncation_time;
    bool first = true;
    for (Eigen::Index i = 0; i < sys.outputs(); ++i) {
        const double ft = sys.D.row(i).cwiseAbs().sum();
        const double tail = g.tail.row(i).sum();
        const double value = ft + g.integral.row(i).sum() + tail;
        if (first || value > best.value) {
            best.value = value;
            best.tail_bound = tail;
            best.feedthrough_part = ft;
            first = false;
        }
    }
    return best;
}

inline L1GainResult l1_gain_siso(const StateSpace& sys, double rel_tol = kDefaultRelTol) {
    if (sys.inputs() != 1 || sys.outputs() != 1) throw Error(Errc::InvalidArgument, "l1_gain_siso needs a 1x1 system");
    return l1_gain_mimo(sys, rel_tol);
}

/// L1 small-gain test: ||M||_L1 * ||Delta||_L1 < 1 (boundary excluded).
inline bool small_gain_check(const StateSpace& M, double delta_gain, double rel_tol = kDefaultRelTol) {
    if (delta_gain < 0.0) throw Error(Errc::InvalidArgument, "Delta gain must be nonnegative");
    return l1_gain_mimo(M, rel_tol).value * delta_gain < 1.0;
}

} // namespace l1adapt::l1norm
