#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "l1adapt/error.hpp"

namespace l1adapt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

namespace lti {

// ============================================================================
// Polynomial
// ============================================================================

/// Real polynomial in s with coefficients stored in ascending powers.
/// Trailing zeros are trimmed on construction; the zero polynomial is {0}.
class Polynomial {
public:
    Polynomial() : coeffs_{0.0} {}
    Polynomial(std::initializer_list<double> ascending) : coeffs_(ascending) { trim(); }
    explicit Polynomial(std::vector<double> ascending) : coeffs_(std::move(ascending)) { trim(); }

    static Polynomial constant(double c) { return Polynomial(std::vector<double>{c}); }

    /// Monic polynomial with the given real roots.
    static Polynomial from_roots(std::span<const double> roots) {
        Polynomial p = constant(1.0);
        for (double z : roots) p = p * Polynomial{-z, 1.0};
        return p;
    }

    [[nodiscard]] const std::vector<double>& coeffs() const noexcept { return coeffs_; }
    [[nodiscard]] std::size_t degree() const noexcept { return coeffs_.size() - 1; }
    [[nodiscard]] bool is_zero() const noexcept { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }
    [[nodiscard]] double leading() const noexcept { return coeffs_.back(); }
    /// Coefficient of s^i (zero beyond the degree).
    [[nodiscard]] double operator[](std::size_t i) const noexcept {
        return i < coeffs_.size() ? coeffs_[i] : 0.0;
    }

    template <typename T>
    [[nodiscard]] T operator()(T s) const {
        T acc = T(coeffs_.back());
        for (std::size_t i = coeffs_.size() - 1; i-- > 0;) acc = acc * s + T(coeffs_[i]);
        return acc;
    }

    [[nodiscard]] Polynomial monic() const {
        if (is_zero()) throw Error(Errc::InvalidArgument, "cannot normalize the zero polynomial");
        return scaled(1.0 / leading());
    }

    [[nodiscard]] Polynomial scaled(double k) const {
        std::vector<double> c = coeffs_;
        for (double& v : c) v *= k;
        return Polynomial(std::move(c));
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
        return Polynomial(std::move(c));
    }
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + b.scaled(-1.0); }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
        return Polynomial(std::move(c));
    }
    friend bool operator==(const Polynomial&, const Polynomial&) = default;

    /// Long division: returns {quotient, remainder} with deg(remainder) < deg(divisor).
    [[nodiscard]] std::pair<Polynomial, Polynomial> divmod(const Polynomial& divisor) const {
        if (divisor.is_zero()) throw Error(Errc::InvalidArgument, "polynomial division by zero");
        if (degree() < divisor.degree()) return {constant(0.0), *this};
        std::vector<double> rem = coeffs_;
        const std::size_t dd = divisor.degree();
        std::vector<double> quot(degree() - dd + 1, 0.0);
        for (std::size_t k = quot.size(); k-- > 0;) {
            const double q = rem[k + dd] / divisor.leading();
            quot[k] = q;
            for (std::size_t j = 0; j <= dd; ++j) rem[k + j] -= q * divisor.coeffs_[j];
            rem[k + dd] = 0.0;
        }
        rem.resize(std::max<std::size_t>(dd, 1));
        return {Polynomial(std::move(quot)), Polynomial(std::move(rem))};
    }

    /// Roots via eigenvalues of the companion matrix.
    [[nodiscard]] std::vector<Complex> roots() const;

private:
    void trim() {
        if (coeffs_.empty()) coeffs_.push_back(0.0);
        while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
    }

    std::vector<double> coeffs_;
};

// ============================================================================
// State-space and transfer-function carriers
// ============================================================================

/// Continuous-time LTI realization  x' = A x + B u,  y = C x + D u.
struct StateSpace {
    Matrix A, B, C, D;

    StateSpace() = default;
    StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
        : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
        validate();
    }

    /// Memoryless gain y = K u.
    static StateSpace static_gain(const Matrix& K) {
        return StateSpace(Matrix(0, 0), Matrix(0, K.cols()), Matrix(K.rows(), 0), K);
    }
    static StateSpace static_gain(double k) { return static_gain(Matrix::Constant(1, 1, k)); }

    [[nodiscard]] Eigen::Index states() const noexcept { return A.rows(); }
    [[nodiscard]] Eigen::Index inputs() const noexcept { return D.cols(); }
    [[nodiscard]] Eigen::Index outputs() const noexcept { return D.rows(); }
    [[nodiscard]] bool strictly_proper() const { return D.isZero(0.0); }

    void validate() const {
        const auto n = A.rows();
        if (A.cols() != n || B.rows() != n || C.cols() != n || C.rows() != D.rows() ||
            B.cols() != D.cols())
            throw Error(Errc::InvalidArgument,
                        "inconsistent state-space dimensions: A " + std::to_string(A.rows()) + "x" +
                            std::to_string(A.cols()) + ", B " + std::to_string(B.rows()) + "x" +
                            std::to_string(B.cols()) + ", C " + std::to_string(C.rows()) + "x" +
                            std::to_string(C.cols()) + ", D " + std::to_string(D.rows()) + "x" +
                            std::to_string(D.cols()));
    }

    /// C (sI - A)^{-1} B + D evaluated at a complex frequency.
    [[nodiscard]] ComplexMatrix frequency_response(Complex s) const {
        ComplexMatrix D_c = D.cast<Complex>();
        if (states() == 0) return D_c;
        ComplexMatrix sI_A = s * ComplexMatrix::Identity(states(), states()) - A.cast<Complex>();
        ComplexMatrix X = sI_A.partialPivLu().solve(B.cast<Complex>());
        return C.cast<Complex>() * X + D_c;
    }
};

/// Matrix of numerator polynomials over a common denominator.
struct RationalTF {
    std::size_t rows = 1, cols = 1;
    std::vector<Polynomial> num; // row-major, rows*cols entries
    Polynomial den = Polynomial::constant(1.0);

    RationalTF() : num{Polynomial::constant(0.0)} {}
    RationalTF(Polynomial n, Polynomial d) : num{std::move(n)}, den(std::move(d)) { validate(); }
    RationalTF(std::size_t r, std::size_t c, std::vector<Polynomial> n, Polynomial d)
        : rows(r), cols(c), num(std::move(n)), den(std::move(d)) {
        validate();
    }

    [[nodiscard]] const Polynomial& operator()(std::size_t i, std::size_t j) const { return num[i * cols + j]; }
    [[nodiscard]] Polynomial& operator()(std::size_t i, std::size_t j) { return num[i * cols + j]; }

    [[nodiscard]] bool proper() const {
        return std::all_of(num.begin(), num.end(),
                           [&](const Polynomial& p) { return p.is_zero() || p.degree() <= den.degree(); });
    }

    [[nodiscard]] ComplexMatrix frequency_response(Complex s) const {
        ComplexMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        const Complex d = den(s);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j)(s) / d;
        return out;
    }

    void validate() const {
        if (den.is_zero()) throw Error(Errc::InvalidArgument, "transfer function with zero denominator");
        if (num.size() != rows * cols) throw Error(Errc::InvalidArgument, "numerator count does not match shape");
    }
};

/// Scalar times matrix: every entry of `m` multiplied by the SISO `s`.
inline RationalTF operator*(const RationalTF& s, const RationalTF& m) {
    if (s.rows != 1 || s.cols != 1) throw Error(Errc::InvalidArgument, "left factor must be SISO");
    std::vector<Polynomial> num;
    num.reserve(m.num.size());
    for (const auto& p : m.num) num.push_back(s.num[0] * p);
    return RationalTF(m.rows, m.cols, std::move(num), s.den * m.den);
}

// ============================================================================
// Spectral utilities
// ============================================================================

/// Eigenvalues with multiplicity.
inline std::vector<Complex> eigenvalues(const Matrix& A) {
    if (A.rows() != A.cols()) throw Error(Errc::InvalidArgument, "eigenvalues of a non-square matrix");
    if (A.rows() == 0) throw Error(Errc::InvalidArgument, "eigenvalues of an empty matrix");
    if (!A.allFinite()) throw Error(Errc::NonFinite, "matrix has non-finite entries");
    Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw Error(Errc::NoConvergence, "eigenvalue iteration did not converge");
    const auto& ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

inline double max_real_part(const Matrix& A) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& l : eigenvalues(A)) m = std::max(m, l.real());
    return m;
}

/// true iff every eigenvalue satisfies Re(lambda) < -margin. An empty matrix is trivially Hurwitz.
inline bool is_hurwitz(const Matrix& A, double margin = 0.0) {
    if (A.rows() == 0) return true;
    return max_real_part(A) < -margin;
}

inline std::vector<Complex> Polynomial::roots() const {
    if (is_zero()) throw Error(Errc::InvalidArgument, "roots of the zero polynomial");
    const std::size_t n = degree();
    if (n == 0) return {};
    Matrix comp = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) = -coeffs_[i] / leading();
    return eigenvalues(comp);
}

// Relative rank tolerance used by controllability tests.
inline constexpr double kRankTolerance = 1e-9;

inline Eigen::Index numerical_rank(const Matrix& M) {
    if (M.size() == 0) return 0;
    const double scale = M.colwise().norm().maxCoeff();
    if (scale == 0.0) return 0;
    Eigen::JacobiSVD<Matrix> svd(M);
    const auto& sv = svd.singularValues();
    return static_cast<Eigen::Index>((sv.array() > kRankTolerance * scale).count());
}

inline Matrix controllability_matrix(const Matrix& A, const Vector& b) {
    const auto n = A.rows();
    Matrix K(n, n);
    Vector col = b;
    for (Eigen::Index j = 0; j < n; ++j) {
        K.col(j) = col;
        col = A * col;
    }
    return K;
}

/// Rank of [b, Ab, ..., A^{n-1} b].
inline Eigen::Index controllability_matrix_rank(const Matrix& A, const Vector& b) {
    if (A.rows() != A.cols() || b.size() != A.rows())
        throw Error(Errc::InvalidArgument, "controllability: dimension mismatch");
    return numerical_rank(controllability_matrix(A, b));
}

// ============================================================================
// Lyapunov equation
// ============================================================================

struct LyapunovPair {
    Matrix P, Q;
    double lambda_min_P = 0, lambda_max_P = 0, lambda_min_Q = 0, lambda_max_Q = 0;
};

inline bool is_symmetric(const Matrix& M, double rel_tol = 1e-12) {
    if (M.rows() != M.cols()) return false;
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    return (M - M.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

inline bool is_spd(const Matrix& M) {
    if (!is_symmetric(M)) return false;
    Eigen::LLT<Matrix> llt(M);
    return llt.info() == Eigen::Success;
}

/// Solves A^T P + P A = -Q by Kronecker vectorization:
/// (I (x) A^T + A^T (x) I) vec(P) = -vec(Q).
inline LyapunovPair lyapunov_solve(const Matrix& A, const Matrix& Q) {
    const auto n = A.rows();
    if (A.cols() != n || Q.rows() != n || Q.cols() != n)
        throw Error(Errc::InvalidArgument, "lyapunov_solve: A and Q must be square and of equal size");
    if (!is_hurwitz(A)) throw Error(Errc::NotHurwitz, "A has an eigenvalue with nonnegative real part");
    if (!is_spd(Q)) throw Error(Errc::NotSPD, "Q is not symmetric positive definite");

    const Matrix I = Matrix::Identity(n, n);
    const Matrix At = A.transpose();
    Matrix K = Matrix::Zero(n * n, n * n);
    // Column-major vec: vec(A^T P) = (I (x) A^T) vec(P), vec(P A) = (A^T (x) I) vec(P).
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            K.block(i * n, j * n, n, n) += I(i, j) * At;
            K.block(i * n, j * n, n, n) += At(i, j) * I;
        }
    const Vector rhs = -Eigen::Map<const Vector>(Q.data(), n * n);
    Eigen::FullPivLU<Matrix> lu(K);
    if (!lu.isInvertible()) throw Error(Errc::SingularMatrix, "Lyapunov operator is singular");
    Vector p = lu.solve(rhs);
    Matrix P = Eigen::Map<Matrix>(p.data(), n, n);
    P = 0.5 * (P + P.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> eP(P), eQ(Q);
    LyapunovPair out{P, Q, eP.eigenvalues().minCoeff(), eP.eigenvalues().maxCoeff(),
                     eQ.eigenvalues().minCoeff(), eQ.eigenvalues().maxCoeff()};
    if (out.lambda_min_P <= 0.0) throw Error(Errc::NotSPD, "computed P is not positive definite");
    return out;
}

inline double lyapunov_residual(const Matrix& A, const LyapunovPair& lp) {
    return (A.transpose() * lp.P + lp.P * A + lp.Q).cwiseAbs().maxCoeff();
}

// ============================================================================
// Gains
// ============================================================================

/// k_g = -1 / (c^T A_m^{-1} b): makes the DC gain of k_g c^T (sI - A_m)^{-1} b equal one.
inline double feedforward_gain(const Matrix& A_m, const Vector& b, const Vector& c) {
    if (A_m.rows() != A_m.cols() || b.size() != A_m.rows() || c.size() != A_m.rows())
        throw Error(Errc::InvalidArgument, "feedforward_gain: dimension mismatch");
    Eigen::FullPivLU<Matrix> lu(A_m);
    if (!lu.isInvertible()) throw Error(Errc::SingularMatrix, "A_m is singular");
    const double dc = c.dot(lu.solve(b));
    const double scale = c.norm() * b.norm() / std::max(A_m.norm(), 1e-300);
    if (std::abs(dc) <= 1e-14 * std::max(scale, 1e-300)) throw Error(Errc::ZeroDCGain, "c^T A_m^{-1} b is zero");
    return -1.0 / dc;
}

/// DC gain D - C A^{-1} B of a realization with invertible A.
inline Matrix dc_gain(const StateSpace& sys) {
    if (sys.states() == 0) return sys.D;
    Eigen::FullPivLU<Matrix> lu(sys.A);
    if (!lu.isInvertible()) throw Error(Errc::SingularMatrix, "DC gain undefined: A is singular");
    return sys.D - sys.C * lu.solve(sys.B);
}

// ============================================================================
// Realization conversions
// ============================================================================

/// Characteristic polynomial det(sI - A) and the adjugate coefficients
/// adj(sI - A) = sum_k M_k s^{n-1-k}, by Faddeev-LeVerrier.
struct Resolvent {
    Polynomial char_poly;
    std::vector<Matrix> adjugate; // adjugate[k] multiplies s^{n-1-k}
};

inline Resolvent resolvent(const Matrix& A) {
    const auto n = A.rows();
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    c[static_cast<std::size_t>(n)] = 1.0;
    std::vector<Matrix> M;
    M.reserve(static_cast<std::size_t>(n));
    Matrix Mk = Matrix::Identity(n, n);
    for (Eigen::Index k = 1; k <= n; ++k) {
        M.push_back(Mk);
        const Matrix AM = A * Mk;
        const double ck = -AM.trace() / static_cast<double>(k);
        c[static_cast<std::size_t>(n - k)] = ck;
        Mk = AM + ck * Matrix::Identity(n, n);
    }
    return {Polynomial(std::move(c)), std::move(M)};
}

inline RationalTF tf_of_ss(const StateSpace& sys) {
    sys.validate();
    const auto n = sys.states();
    const auto p = static_cast<std::size_t>(sys.outputs());
    const auto m = static_cast<std::size_t>(sys.inputs());
    const Resolvent res = resolvent(sys.A);
    std::vector<Polynomial> num;
    num.reserve(p * m);
    std::vector<Matrix> CMB;
    for (const auto& Mk : res.adjugate) CMB.push_back(sys.C * Mk * sys.B);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<double> coeffs(static_cast<std::size_t>(n) + 1, 0.0);
            for (Eigen::Index k = 0; k < n; ++k)
                coeffs[static_cast<std::size_t>(n - 1 - k)] =
                    CMB[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            Polynomial entry(std::move(coeffs));
            const double d = sys.D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (d != 0.0) entry = entry + res.char_poly.scaled(d);
            num.push_back(std::move(entry));
        }
    return RationalTF(p, m, std::move(num), res.char_poly);
}

/// Controllable-canonical realization of each input column, stacked block-diagonally.
/// Direct feedthrough is extracted when deg(num) == deg(den).
inline StateSpace ss_of_tf(const RationalTF& tf) {
    tf.validate();
    if (!tf.proper()) throw Error(Errc::ImproperTransferFunction, "numerator degree exceeds denominator degree");
    const Polynomial den = tf.den.monic();
    const double lead = tf.den.leading();
    const auto n = static_cast<Eigen::Index>(den.degree());
    const auto p = static_cast<Eigen::Index>(tf.rows);
    const auto m = static_cast<Eigen::Index>(tf.cols);

    Matrix Ac = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) Ac(i, i + 1) = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) Ac(n - 1, j) = -den[static_cast<std::size_t>(j)];

    Matrix A = Matrix::Zero(n * m, n * m), B = Matrix::Zero(n * m, m), C = Matrix::Zero(p, n * m),
           D = Matrix::Zero(p, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        A.block(j * n, j * n, n, n) = Ac;
        if (n > 0) B(j * n + n - 1, j) = 1.0;
        for (Eigen::Index i = 0; i < p; ++i) {
            Polynomial num = tf(static_cast<std::size_t>(i), static_cast<std::size_t>(j)).scaled(1.0 / lead);
            if (!num.is_zero() && num.degree() == den.degree()) {
                const double d = num.leading();
                D(i, j) = d;
                num = num - den.scaled(d);
            }
            for (Eigen::Index k = 0; k < n; ++k) C(i, j * n + k) = num[static_cast<std::size_t>(k)];
        }
    }
    return StateSpace(std::move(A), std::move(B), std::move(C), std::move(D));
}

// ============================================================================
// Interconnections
// ============================================================================

/// first, then second: y = second(first(u)).
inline StateSpace series(const StateSpace& first, const StateSpace& second) {
    if (first.outputs() != second.inputs())
        throw Error(Errc::InvalidArgument, "series: output/input dimension mismatch");
    const auto n1 = first.states(), n2 = second.states();
    Matrix A = Matrix::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1) = first.A;
    A.bottomLeftCorner(n2, n1) = second.B * first.C;
    A.bottomRightCorner(n2, n2) = second.A;
    Matrix B(n1 + n2, first.inputs());
    B << first.B, second.B * first.D;
    Matrix C(second.outputs(), n1 + n2);
    C << second.D * first.C, second.C;
    return StateSpace(std::move(A), std::move(B), std::move(C), second.D * first.D);
}

/// y = a(u) + sign * b(u).
inline StateSpace parallel(const StateSpace& a, const StateSpace& b, double sign = 1.0) {
    if (a.inputs() != b.inputs() || a.outputs() != b.outputs())
        throw Error(Errc::InvalidArgument, "parallel: dimension mismatch");
    const auto n1 = a.states(), n2 = b.states();
    Matrix A = Matrix::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1) = a.A;
    A.bottomRightCorner(n2, n2) = b.A;
    Matrix B(n1 + n2, a.inputs());
    B << a.B, b.B;
    Matrix C(a.outputs(), n1 + n2);
    C << a.C, sign * b.C;
    return StateSpace(std::move(A), std::move(B), std::move(C), a.D + sign * b.D);
}

/// Output scaling y -> k y.
inline StateSpace scale(const StateSpace& sys, double k) {
    return StateSpace(sys.A, sys.B, k * sys.C, k * sys.D);
}

/// Closed loop of `forward` with `loop` in the return path: e = r + sign * loop(y), y = forward(e).
/// sign = -1 is ordinary negative feedback.
inline StateSpace feedback(const StateSpace& forward, const StateSpace& loop, double sign = -1.0) {
    if (forward.outputs() != loop.inputs() || loop.outputs() != forward.inputs())
        throw Error(Errc::InvalidArgument, "feedback: dimension mismatch");
    const auto n1 = forward.states(), n2 = loop.states();
    const auto p = forward.outputs(), m = forward.inputs();
    const Matrix& D1 = forward.D;
    const Matrix& D2 = loop.D;
    const Matrix F = Matrix::Identity(p, p) - sign * D1 * D2;
    Eigen::FullPivLU<Matrix> lu(F);
    if (!lu.isInvertible()) throw Error(Errc::IllPosedLoop, "algebraic loop I - sign*D1*D2 is singular");
    const Matrix Mi = lu.inverse();

    Matrix Cstack(p, n1 + n2);
    Cstack << forward.C, sign * D1 * loop.C;
    const Matrix Yx = Mi * Cstack;
    const Matrix Yr = Mi * D1;
    Matrix C2ext = Matrix::Zero(m, n1 + n2);
    C2ext.rightCols(n2) = loop.C;
    const Matrix Ex = sign * (C2ext + D2 * Yx);
    const Matrix Er = Matrix::Identity(m, m) + sign * D2 * Yr;

    Matrix A = Matrix::Zero(n1 + n2, n1 + n2);
    A.topLeftCorner(n1, n1) = forward.A;
    A.bottomRightCorner(n2, n2) = loop.A;
    A.topRows(n1) += forward.B * Ex;
    A.bottomRows(n2) += loop.B * Yx;
    Matrix B(n1 + n2, m);
    B << forward.B * Er, loop.B * Yr;
    return StateSpace(std::move(A), std::move(B), Yx, Yr);
}

/// C(s) = w k D(s) / (1 + w k D(s)) for a SISO D(s).
inline StateSpace low_pass_filter(const StateSpace& D, double omega, double k) {
    return feedback(scale(D, omega * k), StateSpace::static_gain(1.0), -1.0);
}

/// 1 - sys for a SISO system.
inline StateSpace one_minus(const StateSpace& sys) {
    return parallel(StateSpace::static_gain(Matrix::Identity(sys.outputs(), sys.inputs())), sys, -1.0);
}

/// (sI - A)^{-1} b with identity output map.
inline StateSpace input_to_state(const Matrix& A, const Vector& b) {
    return StateSpace(A, Matrix(b), Matrix::Identity(A.rows(), A.rows()), Matrix::Zero(A.rows(), 1));
}

} // namespace lti
} // namespace l1adapt
