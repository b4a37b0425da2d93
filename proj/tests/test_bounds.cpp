#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "l1adapt/bounds.hpp"
#include "l1adapt/sim.hpp"
#include "test_support.hpp"

using namespace l1adapt;
using namespace l1adapt::bounds;
using plant::make_signal;
namespace ts = testing_support;

namespace {

UncertaintySets box_sets(std::vector<Interval> box, Interval omega = {0.2, 5.0}, double delta = 10.0) {
    UncertaintySets s;
    s.omega = omega;
    s.theta_box = std::move(box);
    s.delta = delta;
    return s;
}

controller::ControllerConfig arm_config(const plant::PlantAndSets& pre, double k, double gamma) {
    return controller::make_config(pre.plant, pre.sets, k, gamma, controller::integrator(), Matrix::Identity(2, 2));
}

BoundsOptions at_unit_omega() {
    BoundsOptions o;
    o.omega_grid_range = Interval{1.0, 1.0};
    o.omega_grid_points = 1;
    return o;
}

} // namespace

TEST(ComputeL, Examples) {
    EXPECT_DOUBLE_EQ(compute_L(box_sets({{-10, 10}, {-10, 10}})), 20.0);
    EXPECT_DOUBLE_EQ(compute_L(box_sets({{0, 0}, {0, 0}})), 0.0);
    EXPECT_DOUBLE_EQ(compute_L(box_sets({{-1, 2}, {-3, 1}})), 5.0);
}

TEST(ComputeL, MonotoneUnderEnlargement) {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(-5.0, 5.0), grow(0.0, 2.0);
    for (int i = 0; i < 500; ++i) {
        std::vector<Interval> box, bigger;
        for (int j = 0; j < 3; ++j) {
            const double a = u(rng), b = u(rng);
            box.push_back({std::min(a, b), std::max(a, b)});
            bigger.push_back({box.back().lo - grow(rng), box.back().hi + grow(rng)});
        }
        EXPECT_LE(compute_L(box_sets(box)), compute_L(box_sets(bigger)));
    }
}

TEST(UniformGrid, IncludesEndpoints) {
    const auto g = uniform_grid({0.2, 5.0}, 9);
    ASSERT_EQ(g.size(), 9U);
    EXPECT_DOUBLE_EQ(g.front(), 0.2);
    EXPECT_DOUBLE_EQ(g.back(), 5.0);
    EXPECT_EQ(uniform_grid({1.0, 1.0}, 5).size(), 1U);
    EXPECT_THROW((void)uniform_grid({0, 1}, 0), Error);
}

TEST(L1Requirement, RobotArmAtOmegaKSixtyAndTen) {
    const auto pre = plant::robot_arm_preset();
    const auto& p = pre.plant;
    const auto D = controller::integrator();
    const auto pass = check_l1_requirement(p.A_m, p.b, D, 60.0, pre.sets, l1norm::kDefaultRelTol, {1.0});
    EXPECT_TRUE(pass.pass);
    EXPECT_LT(pass.value, 1.0);
    const auto fail = check_l1_requirement(p.A_m, p.b, D, 10.0, pre.sets, l1norm::kDefaultRelTol, {1.0});
    EXPECT_FALSE(fail.pass);
    EXPECT_GT(fail.value, 1.0);
}

TEST(L1Requirement, ZeroLTriviallyPasses) {
    const auto pre = plant::robot_arm_preset();
    const auto r = check_l1_requirement(pre.plant.A_m, pre.plant.b, controller::integrator(), 1.0,
                                        box_sets({{0, 0}, {0, 0}}), l1norm::kDefaultRelTol, {0.2, 1.0, 5.0});
    EXPECT_EQ(r.value, 0.0);
    EXPECT_TRUE(r.pass);
}

TEST(L1Requirement, MaxOverOmegaGrid) {
    const auto pre = plant::robot_arm_preset();
    const auto r = check_l1_requirement(pre.plant.A_m, pre.plant.b, controller::integrator(), 60.0, pre.sets,
                                        l1norm::kDefaultRelTol, uniform_grid(pre.sets.omega, 5));
    ASSERT_EQ(r.per_omega.size(), 5U);
    double mx = 0.0;
    for (const auto& [w, v] : r.per_omega) mx = std::max(mx, v);
    EXPECT_DOUBLE_EQ(r.value, mx);
    EXPECT_EQ(r.pass, r.value < 1.0);
}

TEST(L1Requirement, NonHurwitzAmRejected) {
    Matrix A(2, 2);
    A << 0.0, 1.0, 1.0, 0.0;
    try {
        (void)check_l1_requirement(A, Vector::Unit(2, 1), controller::integrator(), 60.0, box_sets({{-1, 1}, {-1, 1}}),
                                   1e-4, {1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NotHurwitz);
    }
}

TEST(HurwitzSweep, Examples) {
    const auto pre = plant::robot_arm_preset();
    const auto& p = pre.plant;
    EXPECT_TRUE(hurwitz_sweep(p.A_m, p.b, 1.0, box_sets({{0, 0}, {0, 0}}), 5));
    EXPECT_FALSE(hurwitz_sweep(p.A_m, p.b, 0.0, box_sets({{0, 0}, {0, 0}}), 5));
    // The vertex theta = [10, 10], omega = 0.2 with k = 60: Routh on the hand-expanded cubic.
    Vector th(2);
    th << 10.0, 10.0;
    const auto cp = ts::charpoly3(reference::build_Ag(p.A_m, p.b, th, 0.2, 60.0));
    EXPECT_NEAR(cp[0], 3.4, 1e-12);
    EXPECT_NEAR(cp[1], 7.8, 1e-10);
    EXPECT_NEAR(cp[2], 12.0, 1e-9);
    EXPECT_TRUE(ts::routh_cubic(cp[0], cp[1], cp[2]));
    EXPECT_EQ(uniform_grid(pre.sets.omega, 2).front(), 0.2);
}

TEST(HurwitzSweep, AgreesWithRouthOnEveryGridPoint) {
    const auto pre = plant::robot_arm_preset();
    const auto& p = pre.plant;
    for (double k : {5.0, 60.0}) {
        const auto sets = box_sets({{1.0, 3.0}, {1.0, 3.0}}, {0.5, 2.0});
        bool all = true;
        for (double a : uniform_grid(sets.theta_box[0], 4))
            for (double b : uniform_grid(sets.theta_box[1], 4))
                for (double w : uniform_grid(sets.omega, 4)) {
                    Vector th(2);
                    th << a, b;
                    const auto cp = ts::charpoly3(reference::build_Ag(p.A_m, p.b, th, w, k));
                    all = all && ts::routh_cubic(cp[0], cp[1], cp[2]);
                }
        EXPECT_EQ(hurwitz_sweep(p.A_m, p.b, k, sets, 4), all) << "k = " << k;
    }
}

TEST(SelectOutputVector, RobotArmExamples) {
    const auto p = plant::robot_arm_preset().plant;
    const Vector c1 = select_output_vector(p.A_m, p.b, {-1.0});
    EXPECT_NEAR(c1(0), 1.0, 1e-12);
    EXPECT_NEAR(c1(1), 1.0, 1e-12);
    const Vector c2 = select_output_vector(p.A_m, p.b, {-2.0});
    EXPECT_NEAR(c2(0), 2.0, 1e-12);
    EXPECT_NEAR(c2(1), 1.0, 1e-12);
    EXPECT_THROW((void)select_output_vector(p.A_m, p.b, {0.5}), Error);
    EXPECT_THROW((void)select_output_vector(p.A_m, p.b, {-1.0, -2.0}), Error);
}

TEST(SelectOutputVector, UncontrollablePairRejected) {
    Matrix A(2, 2);
    A << -1.0, 0.0, 0.0, -2.0;
    try {
        (void)select_output_vector(A, Vector::Unit(2, 1), {-1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NotControllable);
    }
}

// c_o^T b = 1 (monic numerator of degree n-1) and c_o^T (z I - A)^{-1} b = 0 at every requested zero.
TEST(SelectOutputVector, RandomControllablePairs) {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0), z(-4.0, -0.2);
    int done = 0;
    for (int trial = 0; done < 40 && trial < 200; ++trial) {
        const int n = 2 + trial % 3;
        const Matrix A = ts::random_hurwitz(rng, n);
        const Vector b = Vector::NullaryExpr(n, [&] { return u(rng); });
        Matrix ctrb(n, n);
        Vector col = b;
        for (int j = 0; j < n; ++j) {
            ctrb.col(j) = col;
            col = A * col;
        }
        if (std::abs(ctrb.determinant()) < 1e-3) continue;
        std::vector<double> zeros;
        for (int j = 0; j < n - 1; ++j) zeros.push_back(z(rng));
        const Vector c = select_output_vector(A, b, zeros);
        EXPECT_NEAR(c.dot(b), 1.0, 1e-8);
        for (double zi : zeros) {
            const Vector v = (zi * Matrix::Identity(n, n) - A).partialPivLu().solve(b);
            EXPECT_NEAR(c.dot(v), 0.0, 1e-7 * std::max(1.0, c.norm() * v.norm()));
        }
        const auto num = lti::tf_of_ss(lti::StateSpace(A, Matrix(b), c.transpose(), Matrix::Zero(1, 1)))(0, 0);
        EXPECT_EQ(num.degree(), n - 1);
        for (const auto& r : num.roots()) EXPECT_LT(r.real(), 0.0);
        ++done;
    }
    EXPECT_EQ(done, 40);
}

TEST(ThetaM, SingleTermExamples) {
    const auto P = lti::lyapunov_solve(-Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    EXPECT_DOUBLE_EQ(compute_theta_m(box_sets({{0, 0}, {0, 0}}, {1.0, 1.0}, 1.0), P), 4.0);
    EXPECT_DOUBLE_EQ(compute_theta_m(box_sets({{0, 0}, {0, 0}}, {1.0, 2.0}, 0.0), P), 4.0);
}

TEST(ThetaM, RobotArmTermByTerm) {
    const auto pre = plant::robot_arm_preset();
    const auto cfg = arm_config(pre, 60.0, 1e4);
    const auto infl = cfg.bounds.inflated(pre.sets);
    // P = [[99/70, 1/2], [1/2, 5/7]]; eigenvalues from the 2x2 quadratic formula, lambda_min(Q) = 1.
    const double tr = 99.0 / 70.0 + 5.0 / 7.0, det = 99.0 / 70.0 * 5.0 / 7.0 - 0.25;
    const double lmax = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
    const double theta_term = 4.0 * (11.0 * 11.0 + 11.0 * 11.0);
    const double delta_term = 4.0 * 11.0 * 11.0;
    const double omega_term = 4.0 * (5.24 - 0.1) * (5.24 - 0.1);
    const double rate_term = 2.0 * lmax * (std::sqrt(242.0) * 3.5 + 3.2 * 11.0);
    const auto t = theta_m_terms(infl, cfg.P);
    EXPECT_NEAR(t.theta_term, theta_term, 1e-9);
    EXPECT_NEAR(t.delta_term, delta_term, 1e-9);
    EXPECT_NEAR(t.omega_term, omega_term, 1e-9);
    EXPECT_NEAR(t.rate_term, rate_term, 1e-9);
    EXPECT_NEAR(compute_theta_m(infl, cfg.P), theta_term + delta_term + omega_term + rate_term, 1e-9);
}

TEST(Gamma, FormulaSmokeCase) {
    EXPECT_DOUBLE_EQ(gamma1_formula(1.0, 0.5, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(gamma2_formula(1.0, 2.0, 2.0, 3.0, 1.0), 7.0);
    EXPECT_THROW((void)gamma1_formula(1.0, 1.0, 1.0), Error);
}

TEST(Gamma, SquareRootLawInAdaptationGain) {
    const auto pre = plant::robot_arm_preset();
    const auto lo = compute_performance_bounds({pre.plant, arm_config(pre, 60.0, 1e2), at_unit_omega()});
    const auto hi = compute_performance_bounds({pre.plant, arm_config(pre, 60.0, 1e4), at_unit_omega()});
    ASSERT_TRUE(lo.gamma1 && hi.gamma1);
    EXPECT_NEAR(*hi.gamma1 / *lo.gamma1, 0.1, 1e-12);
    EXPECT_NEAR(*hi.gamma2 / *lo.gamma2, 0.1, 1e-12);
    EXPECT_NEAR(hi.xtilde_bound / lo.xtilde_bound, 0.1, 1e-12);
}

TEST(Certificate, Invariants) {
    const auto pre = plant::robot_arm_preset();
    for (double k : {5.0, 60.0}) {
        const auto c = compute_performance_bounds({pre.plant, arm_config(pre, k, 1e4), at_unit_omega()});
        EXPECT_EQ(c.l1_condition_pass, c.l1_condition_value < 1.0);
        EXPECT_GE(c.theta_m, 0.0);
        EXPECT_GE(c.xtilde_bound, 0.0);
        EXPECT_EQ(c.gamma1.has_value(), c.l1_condition_pass);
        EXPECT_FALSE(c.hurwitz_sweep_pass.has_value()); // time-varying theta
        EXPECT_FALSE(c.gamma3.has_value());
        if (c.gamma1) {
            EXPECT_GE(*c.gamma1, 0.0);
            EXPECT_GE(*c.gamma2, 0.0);
            EXPECT_LE(*c.gamma1, c.detail("gamma1_lambda_max") * std::sqrt(c.detail("lambda_max_P") / c.detail("lambda_min_P")) + 1e-12);
        }
    }
}

TEST(Certificate, ConstantThetaProvidesGamma3And4) {
    auto pre = plant::robot_arm_preset();
    pre.plant.theta = {make_signal("2", 2), make_signal("2", 2)};
    pre.plant.sigma = make_signal("1", 2);
    pre.sets.d_theta = 0.0;
    pre.sets.d_sigma = 0.0;
    const auto c = compute_performance_bounds({pre.plant, arm_config(pre, 60.0, 1e4), at_unit_omega()});
    ASSERT_TRUE(c.hurwitz_sweep_pass.has_value());
    EXPECT_TRUE(c.gamma3.has_value());
    EXPECT_TRUE(c.gamma4.has_value());
    EXPECT_LT(c.detail("max_real_eig_Ag"), 0.0);
    const auto report = to_report(c);
    EXPECT_NE(report.find("gamma3: "), std::string::npos);
    EXPECT_NE(report.find("certificate: "), std::string::npos);
}

TEST(Certificate, RobotArmBoundsHoldOnShortRun) {
    const auto pre = plant::robot_arm_preset();
    const auto cfg = arm_config(pre, 60.0, 1e4);
    const auto c = compute_performance_bounds({pre.plant, cfg, at_unit_omega()});
    ASSERT_TRUE(c.pass());
    ASSERT_TRUE(c.gamma1 && c.gamma2);
    EXPECT_TRUE(std::isfinite(*c.gamma1) && std::isfinite(*c.gamma2));
    const auto res = sim::run_scenario(pre.plant, cfg, signals::parse("cos(pi*t)", 0), {2.5e-5, 3.0, 100, 0.0},
                                       {.with_reference = true, .unsafe = false, .certificate_pass = c.pass()});
    ASSERT_TRUE(res.ok());
    EXPECT_LE(res.metrics.sup_xtilde, c.xtilde_bound + 1e-3);
    EXPECT_LE(*res.metrics.sup_e, *c.gamma1);
    EXPECT_LE(*res.metrics.sup_u_err, *c.gamma2);
}
