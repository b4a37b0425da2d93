#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "l1adapt/controller.hpp"
#include "l1adapt/error.hpp"
#include "l1adapt/l1norm.hpp"
#include "l1adapt/lti.hpp"
#include "l1adapt/plant.hpp"
#include "l1adapt/reference.hpp"

namespace l1adapt::bounds {

using plant::Interval;
using plant::UncertaintySets;

inline constexpr double kHurwitzMargin = 1e-6;
inline constexpr int kDefaultOmegaGridPoints = 9;
inline constexpr int kDefaultHurwitzGridPerDim = 11;

/// L = max over the theta box of sum_i |theta_i|.
inline double compute_L(const UncertaintySets& sets) {
    double L = 0.0;
    for (const auto& iv : sets.theta_box) L += iv.max_abs();
    return L;
}

/// `points` values uniformly spaced over [lo, hi], endpoints included.
inline std::vector<double> uniform_grid(Interval range, int points) {
    if (points < 1) throw Error(Errc::InvalidArgument, "grid needs at least one point");
    if (points == 1 || range.hi == range.lo) return {range.lo};
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        g[static_cast<std::size_t>(i)] = range.lo + (range.hi - range.lo) * static_cast<double>(i) / (points - 1);
    return g;
}

// ============================================================================
// L1-gain stability requirement
// ============================================================================

struct L1Requirement {
    double value = 0.0;          // max over the grid of ||G_w||_L1 * L
    bool pass = false;           // value < 1
    std::vector<std::pair<double, double>> per_omega; // (omega, ||G_w||_L1 * L)
};

/// G(s) = (sI - A_m)^{-1} b (1 - C(s)) for a given omega.
inline lti::StateSpace make_G(const Matrix& A_m, const Vector& b, const lti::StateSpace& C) {
    return lti::series(lti::one_minus(C), lti::input_to_state(A_m, b));
}

inline L1Requirement check_l1_requirement(const Matrix& A_m, const Vector& b, const lti::StateSpace& D, double k,
                                          const UncertaintySets& sets, double rel_tol,
                                          const std::vector<double>& omega_grid) {
    if (!lti::is_hurwitz(A_m)) throw Error(Errc::NotHurwitz, "A_m is not Hurwitz");
    const double L = compute_L(sets);
    L1Requirement out;
    for (double w : omega_grid) {
        const auto C = lti::low_pass_filter(D, w, k);
        if (!lti::is_hurwitz(C.A))
            throw Error(Errc::UnstableC, "C(s) is unstable at omega = " + std::to_string(w));
        const double v = L == 0.0 ? 0.0 : l1norm::l1_gain_mimo(make_G(A_m, b, C), rel_tol).value * L;
        out.per_omega.emplace_back(w, v);
        out.value = std::max(out.value, v);
    }
    out.pass = out.value < 1.0;
    return out;
}

// ============================================================================
// Constant-theta Hurwitz sweep
// ============================================================================

/// true iff A_g is Hurwitz (margin 1e-6) on a grid over Theta x Omega that includes every vertex.
inline bool hurwitz_sweep(const Matrix& A_m, const Vector& b, double k, const UncertaintySets& sets, int grid_per_dim) {
    const auto n = A_m.rows();
    const int g = std::max(grid_per_dim, 2);
    std::vector<std::vector<double>> axes;
    for (const auto& iv : sets.theta_box) axes.push_back(uniform_grid(iv, g));
    axes.push_back(uniform_grid(sets.omega, g));

    std::vector<std::size_t> idx(axes.size(), 0);
    Vector theta(n);
    for (;;) {
        for (Eigen::Index i = 0; i < n; ++i) theta(i) = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
        const double w = axes.back()[idx.back()];
        if (!lti::is_hurwitz(reference::build_Ag(A_m, b, theta, w, k), kHurwitzMargin)) return false;
        std::size_t d = 0;
        while (d < idx.size() && ++idx[d] == axes[d].size()) idx[d++] = 0;
        if (d == idx.size()) return true;
    }
}

// ============================================================================
// Output vector with a minimum-phase, relative-degree-one numerator
// ============================================================================

/// Numerator matrix N of (sI - A)^{-1} b: row i holds the ascending coefficients of n_i(s).
inline Matrix numerator_matrix(const Matrix& A, const Vector& b) {
    const auto tf = lti::tf_of_ss(lti::input_to_state(A, b));
    const auto n = A.rows();
    Matrix N = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) N(i, j) = tf(static_cast<std::size_t>(i), 0)[static_cast<std::size_t>(j)];
    return N;
}

/// c_o such that c_o^T (sI - A)^{-1} b has the monic numerator prod (s - z_i).
inline Vector select_output_vector(const Matrix& A, const Vector& b, const std::vector<double>& zeros) {
    const auto n = A.rows();
    if (static_cast<Eigen::Index>(zeros.size()) != n - 1)
        throw Error(Errc::InvalidArgument, "need exactly n-1 zeros, got " + std::to_string(zeros.size()));
    for (double z : zeros)
        if (!(z < 0.0)) throw Error(Errc::InvalidArgument, "zeros must lie strictly in the left half-plane");
    if (lti::controllability_matrix_rank(A, b) != n) throw Error(Errc::NotControllable, "(A, b) is not controllable");
    const Matrix N = numerator_matrix(A, b);
    if (lti::numerical_rank(N) != n) throw Error(Errc::NotControllable, "numerator matrix N is rank deficient");
    const auto target = lti::Polynomial::from_roots(zeros);
    Vector p(n);
    for (Eigen::Index j = 0; j < n; ++j) p(j) = target[static_cast<std::size_t>(j)];
    return N.transpose().fullPivLu().solve(p);
}

// ============================================================================
// theta_m
// ============================================================================

struct ThetaM {
    double theta_term = 0.0; // max sum 4 theta_i^2
    double delta_term = 0.0; // 4 Delta^2
    double omega_term = 0.0; // 4 (omega_u - omega_l)^2
    double rate_term = 0.0;  // 2 lmax(P)/lmin(Q) (max||theta|| d_theta + d_sigma Delta)
    [[nodiscard]] double value() const noexcept { return theta_term + delta_term + omega_term + rate_term; }
};

inline ThetaM theta_m_terms(const UncertaintySets& sets, const lti::LyapunovPair& P) {
    ThetaM t;
    for (const auto& iv : sets.theta_box) t.theta_term += 4.0 * iv.max_abs() * iv.max_abs();
    t.delta_term = 4.0 * sets.delta * sets.delta;
    const double dw = sets.omega.hi - sets.omega.lo;
    t.omega_term = 4.0 * dw * dw;
    t.rate_term = 2.0 * (P.lambda_max_P / P.lambda_min_Q) * (sets.theta_max_norm2() * sets.d_theta + sets.d_sigma * sets.delta);
    return t;
}

/// Evaluated over whatever sets are passed; certificates pass the projection-inflated sets.
inline double compute_theta_m(const UncertaintySets& sets, const lti::LyapunovPair& P) {
    return theta_m_terms(sets, P).value();
}

// ============================================================================
// Performance bounds
// ============================================================================

struct BoundsOptions {
    std::vector<double> c_o_zeros;           // empty: all at -1
    std::optional<Interval> omega_grid_range; // empty: Omega
    int omega_grid_points = kDefaultOmegaGridPoints;
    bool conservative_lambda = true;
    int hurwitz_grid_per_dim = kDefaultHurwitzGridPerDim;
    double rel_tol = l1norm::kDefaultRelTol;
};

struct Certificate {
    double l1_condition_value = 0.0;
    bool l1_condition_pass = false;
    std::optional<bool> hurwitz_sweep_pass;
    double theta_m = 0.0;
    double xtilde_bound = 0.0;
    std::optional<double> gamma1, gamma2, gamma3, gamma4;
    Vector c_o;
    std::vector<double> omega_grid;
    std::vector<std::pair<std::string, double>> details;

    /// Overall verdict used as the certify exit status.
    [[nodiscard]] bool pass() const { return l1_condition_pass && hurwitz_sweep_pass.value_or(true); }

    [[nodiscard]] double detail(const std::string& key) const {
        for (const auto& [k, v] : details)
            if (k == key) return v;
        throw Error(Errc::InvalidArgument, "no certificate detail named " + key);
    }
};

namespace detail {

inline bool is_integrator(const lti::StateSpace& D) {
    if (D.states() != 1 || D.inputs() != 1 || D.outputs() != 1) return false;
    const auto tf = lti::tf_of_ss(D);
    const auto num = tf(0, 0).scaled(1.0 / tf.den.leading());
    const auto den = tf.den.monic();
    return num.degree() == 0 && std::abs(num[0] - 1.0) < 1e-12 && den.degree() == 1 && std::abs(den[0]) < 1e-12;
}

// C(s) / (c_o^T H(s)) = C(s) d(s) / N_n(s): proper because C is strictly proper.
inline lti::StateSpace filtered_inverse(const lti::StateSpace& C, const lti::RationalTF& coH) {
    const auto Ctf = lti::tf_of_ss(C);
    lti::RationalTF prod(Ctf(0, 0) * coH.den, Ctf.den * coH(0, 0));
    return lti::ss_of_tf(prod);
}

inline lti::RationalTF output_tf(const Matrix& A_m, const Vector& b, const Vector& c_o) {
    return lti::tf_of_ss(lti::StateSpace(A_m, Matrix(b), c_o.transpose(), Matrix::Zero(1, 1)));
}

} // namespace detail

/// ||C|| / (1 - ||G|| L) * S.
inline double gamma1_formula(double norm_C, double norm_G_times_L, double sqrt_term) {
    if (!(norm_G_times_L < 1.0)) throw Error(Errc::CertificateUnavailable, "L1-gain condition fails; gamma1 undefined");
    return norm_C / (1.0 - norm_G_times_L) * sqrt_term;
}

/// ||C/omega|| L gamma1 + ||C/omega (1/c_o^T H) c_o^T|| S.
inline double gamma2_formula(double norm_C_over_omega, double L, double gamma1, double norm_K, double sqrt_term) {
    return norm_C_over_omega * L * gamma1 + norm_K * sqrt_term;
}

struct CertificateInputs {
    const plant::PlantSpec& plant;
    const controller::ControllerConfig& cfg;
    BoundsOptions options;
};

inline Certificate compute_performance_bounds(const CertificateInputs& in) {
    const auto& spec = in.plant;
    const auto& cfg = in.cfg;
    const auto& opt = in.options;
    const auto n = spec.n();

    Certificate cert;
    const UncertaintySets inflated = cfg.bounds.inflated(cfg.sets);
    const double L = compute_L(cfg.sets);
    const ThetaM tm = theta_m_terms(inflated, cfg.P);
    cert.theta_m = tm.value();
    cert.xtilde_bound = std::sqrt(cert.theta_m / (cfg.P.lambda_min_P * cfg.gamma_c));
    const double s_min = cert.xtilde_bound;
    const double s_max = std::sqrt(cert.theta_m / (cfg.P.lambda_max_P * cfg.gamma_c));
    const double S = opt.conservative_lambda ? s_min : s_max;

    cert.omega_grid = uniform_grid(opt.omega_grid_range.value_or(cfg.sets.omega), opt.omega_grid_points);
    const auto req = check_l1_requirement(spec.A_m, spec.b, cfg.D, cfg.k, cfg.sets, opt.rel_tol, cert.omega_grid);
    cert.l1_condition_value = req.value;
    cert.l1_condition_pass = req.pass;

    std::vector<double> zeros = opt.c_o_zeros;
    if (zeros.empty()) zeros.assign(static_cast<std::size_t>(n - 1), -1.0);
    cert.c_o = select_output_vector(spec.A_m, spec.b, zeros);
    const auto coH = detail::output_tf(spec.A_m, spec.b, cert.c_o);
    const auto co_gain = lti::StateSpace::static_gain(Matrix(cert.c_o.transpose()));

    const bool constant = spec.constant_theta();
    Vector theta_const;
    if (constant) {
        theta_const = spec.theta_at(0.0);
        cert.hurwitz_sweep_pass = hurwitz_sweep(spec.A_m, spec.b, cfg.k, cfg.sets, opt.hurwitz_grid_per_dim);
    }
    const bool constant_integrator = constant && detail::is_integrator(cfg.D);

    auto& d = cert.details;
    d.emplace_back("L", L);
    d.emplace_back("theta_m_theta_term", tm.theta_term);
    d.emplace_back("theta_m_delta_term", tm.delta_term);
    d.emplace_back("theta_m_omega_term", tm.omega_term);
    d.emplace_back("theta_m_rate_term", tm.rate_term);
    d.emplace_back("lambda_min_P", cfg.P.lambda_min_P);
    d.emplace_back("lambda_max_P", cfg.P.lambda_max_P);
    d.emplace_back("sqrt_term_lambda_min", s_min);
    d.emplace_back("sqrt_term_lambda_max", s_max);

    double g1 = 0.0, g2 = 0.0, g1_alt = 0.0, g2_alt = 0.0, g3 = 0.0, g4 = 0.0;
    double worst_C = 0.0, worst_G = 0.0, worst_K = 0.0, worst_Ag = -std::numeric_limits<double>::infinity();
    bool ag_ok = constant_integrator;
    const double S_alt = opt.conservative_lambda ? s_max : s_min;
    for (double w : cert.omega_grid) {
        const auto C = lti::low_pass_filter(cfg.D, w, cfg.k);
        const double nC = l1norm::l1_gain_siso(C, opt.rel_tol).value;
        const double nG = l1norm::l1_gain_mimo(make_G(spec.A_m, spec.b, C), opt.rel_tol).value;
        const auto K = lti::series(co_gain, lti::scale(detail::filtered_inverse(C, coH), 1.0 / w));
        const double nK = l1norm::l1_gain_mimo(K, opt.rel_tol).value;
        worst_C = std::max(worst_C, nC);
        worst_G = std::max(worst_G, nG);
        worst_K = std::max(worst_K, nK);
        if (req.pass) {
            const double a = gamma1_formula(nC, nG * L, S), b = gamma1_formula(nC, nG * L, S_alt);
            g1 = std::max(g1, a);
            g1_alt = std::max(g1_alt, b);
            g2 = std::max(g2, gamma2_formula(nC / w, L, a, nK, S));
            g2_alt = std::max(g2_alt, gamma2_formula(nC / w, L, b, nK, S_alt));
        }
        if (constant_integrator) {
            const Matrix Ag = reference::build_Ag(spec.A_m, spec.b, theta_const, w, cfg.k);
            worst_Ag = std::max(worst_Ag, lti::max_real_part(Ag));
            if (!lti::is_hurwitz(Ag, kHurwitzMargin)) {
                ag_ok = false;
                continue;
            }
            Vector bg = Vector::Zero(n + 1);
            bg.head(n) = spec.b;
            const lti::StateSpace Hg(Ag, Matrix(bg), Matrix::Identity(n + 1, n + 1), Matrix::Zero(n + 1, 1));
            const auto M = lti::series(co_gain, lti::series(detail::filtered_inverse(C, coH), Hg));
            const double nM = l1norm::l1_gain_mimo(M, opt.rel_tol).value;
            const double gamma3 = nM * S;
            g3 = std::max(g3, gamma3);
            g4 = std::max(g4, nC / w * theta_const.cwiseAbs().sum() * gamma3 + nK * S);
        }
    }
    d.emplace_back("norm_C", worst_C);
    d.emplace_back("norm_G", worst_G);
    d.emplace_back("norm_C_inv_coH_co_over_omega", worst_K);
    if (req.pass) {
        cert.gamma1 = g1;
        cert.gamma2 = g2;
        d.emplace_back(opt.conservative_lambda ? "gamma1_lambda_max" : "gamma1_lambda_min", g1_alt);
        d.emplace_back(opt.conservative_lambda ? "gamma2_lambda_max" : "gamma2_lambda_min", g2_alt);
    }
    if (constant_integrator) {
        d.emplace_back("max_real_eig_Ag", worst_Ag);
        if (ag_ok) {
            cert.gamma3 = g3;
            cert.gamma4 = g4;
        }
    }
    return cert;
}

namespace detail {
inline std::string fmt(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}
inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("N/A"); }
} // namespace detail

/// Structured `key: value` report.
inline std::string to_report(const Certificate& c) {
    std::string out;
    auto line = [&](const std::string& k, const std::string& v) { out += k + ": " + v + "\n"; };
    line("l1_condition_value", detail::fmt(c.l1_condition_value));
    line("l1_condition_pass", c.l1_condition_pass ? "true" : "false");
    line("hurwitz_sweep_pass", c.hurwitz_sweep_pass ? (*c.hurwitz_sweep_pass ? "true" : "false") : "N/A");
    line("theta_m", detail::fmt(c.theta_m));
    line("xtilde_bound", detail::fmt(c.xtilde_bound));
    line("gamma1", detail::fmt(c.gamma1));
    line("gamma2", detail::fmt(c.gamma2));
    line("gamma3", detail::fmt(c.gamma3));
    line("gamma4", detail::fmt(c.gamma4));
    std::string co = "[";
    for (Eigen::Index i = 0; i < c.c_o.size(); ++i) co += (i ? ", " : "") + detail::fmt(c.c_o(i));
    line("c_o", co + "]");
    std::string grid = "[";
    for (std::size_t i = 0; i < c.omega_grid.size(); ++i) grid += (i ? ", " : "") + detail::fmt(c.omega_grid[i]);
    line("omega_grid", grid + "]");
    for (const auto& [k, v] : c.details) line("detail." + k, detail::fmt(v));
    line("certificate", c.pass() ? "PASS" : "FAIL");
    return out;
}

} // namespace l1adapt::bounds
