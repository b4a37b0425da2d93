#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "l1adapt/bounds.hpp"
#include "l1adapt/plant.hpp"

using namespace l1adapt;
using namespace l1adapt::plant;

namespace {

PlantSpec zero_uncertainty(double omega = 1.0) {
    auto p = robot_arm_preset().plant;
    p.omega = omega;
    p.theta = {make_signal("0", 2), make_signal("0", 2)};
    p.sigma = make_signal("0", 2);
    return p;
}

Errc code_of(const PlantSpec& p, const UncertaintySets& s) {
    try {
        validate_structure(p, s);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected validate_structure to throw";
    return Errc::InvalidArgument;
}

} // namespace

TEST(PlantDerivative, UnitInputGivesB) {
    const auto p = zero_uncertainty();
    const Vector f = plant_derivative(p, 0.3, Vector::Zero(2), 1.0);
    EXPECT_TRUE(f.isApprox(p.b));
}

TEST(PlantDerivative, FreeResponseIsAmX) {
    auto p = zero_uncertainty();
    p.x0 = Vector(2);
    p.x0 << 0.4, -1.5;
    EXPECT_TRUE(plant_derivative(p, 1.0, p.x0, 0.0).isApprox(p.A_m * p.x0));
}

TEST(PlantDerivative, RobotArmAtRestIsZero) {
    const auto p = robot_arm_preset().plant;
    EXPECT_EQ(plant_derivative(p, 0.0, Vector::Zero(2), 0.0), Vector::Zero(2));
}

TEST(PlantDerivative, HandExpandedRobotArm) {
    const auto p = robot_arm_preset(RobotArmDisturbance::LowFrequency).plant;
    const double t = 0.37, u = -0.8;
    Vector x(2);
    x << 0.6, -0.25;
    const double th1 = 2 + std::cos(std::numbers::pi * t);
    const double th2 = 2 + 0.3 * std::sin(std::numbers::pi * t) + 0.2 * std::cos(2 * t);
    const double sig = std::cos(x(0)) + 2 * std::sin(10 * t) + std::cos(15 * t);
    const Vector f = plant_derivative(p, t, x, u);
    EXPECT_NEAR(f(0), x(1), 1e-15);
    EXPECT_NEAR(f(1), -x(0) - 1.4 * x(1) + u + th1 * x(0) + th2 * x(1) + sig, 1e-13);
}

TEST(RobotArmPreset, Sets) {
    const auto [p, s] = robot_arm_preset();
    EXPECT_DOUBLE_EQ(bounds::compute_L(s), 20.0);
    EXPECT_EQ(s.omega, (Interval{0.2, 5.0}));
    EXPECT_DOUBLE_EQ(s.delta, 10.0);
    EXPECT_NO_THROW(validate_structure(p, s));
}

TEST(RobotArmPreset, AmEigenvalues) {
    const auto p = robot_arm_preset().plant;
    const auto ev = lti::eigenvalues(p.A_m);
    ASSERT_EQ(ev.size(), 2);
    for (const auto& z : ev) {
        EXPECT_NEAR(z.real(), -0.7, 1e-12);
        EXPECT_NEAR(std::abs(z.imag()), std::sqrt(0.51), 1e-12);
    }
    EXPECT_TRUE(lti::is_hurwitz(p.A_m));
}

TEST(RobotArmPreset, SampledSignalsRespectDeclaredSets) {
    for (auto d : {RobotArmDisturbance::SinPi, RobotArmDisturbance::LowFrequency, RobotArmDisturbance::HighFrequency}) {
        const auto [p, s] = robot_arm_preset(d);
        const auto chk = check_sampled_bounds(p, s, 10.0, 20000);
        EXPECT_TRUE(chk.theta_in_box);
        EXPECT_TRUE(chk.theta_rate_ok) << chk.max_theta_rate;
        EXPECT_TRUE(chk.sigma_ok) << chk.max_abs_sigma << " " << chk.max_sigma_rate;
    }
}

TEST(RobotArmPreset, ThetaRateBoundAgainstAnalyticDerivative) {
    const double pi = std::numbers::pi;
    double sup = 0.0;
    for (int i = 0; i <= 200000; ++i) {
        const double t = 20.0 * i / 200000.0;
        const double d1 = -pi * std::sin(pi * t);
        const double d2 = 0.3 * pi * std::cos(pi * t) - 0.4 * std::sin(2 * t);
        sup = std::max(sup, std::hypot(d1, d2));
    }
    const auto s = robot_arm_preset().sets;
    EXPECT_LE(sup, s.d_theta);
    EXPECT_GT(sup, 3.0);
}

TEST(SampledBounds, DetectsViolations) {
    auto [p, s] = robot_arm_preset();
    s.theta_box = {{-1.0, 1.0}, {-10.0, 10.0}};
    s.d_theta = 0.5;
    s.delta = 0.5;
    const auto chk = check_sampled_bounds(p, s, 10.0, 2000);
    EXPECT_FALSE(chk.theta_in_box);
    EXPECT_FALSE(chk.theta_rate_ok);
    EXPECT_FALSE(chk.sigma_ok);
}

TEST(ValidateStructure, Rejections) {
    const auto base = robot_arm_preset();
    {
        auto p = base.plant;
        p.A_m(1, 0) = 1.0;
        EXPECT_EQ(code_of(p, base.sets), Errc::NotHurwitz);
    }
    {
        auto p = base.plant;
        p.A_m << -1.0, 0.0, 0.0, -2.0;
        p.b << 0.0, 1.0;
        EXPECT_EQ(code_of(p, base.sets), Errc::NotControllable);
    }
    {
        auto p = base.plant;
        p.omega = 6.0;
        EXPECT_EQ(code_of(p, base.sets), Errc::InvalidArgument);
    }
    {
        auto p = base.plant;
        p.theta[0] = make_signal("x2", 2);
        EXPECT_EQ(code_of(p, base.sets), Errc::InvalidArgument);
    }
    {
        auto s = base.sets;
        s.omega = {0.0, 5.0};
        EXPECT_EQ(code_of(base.plant, s), Errc::InvalidArgument);
    }
    {
        auto s = base.sets;
        s.theta_box.pop_back();
        EXPECT_EQ(code_of(base.plant, s), Errc::InvalidArgument);
    }
}

// f(a x1 + b x2, a u1 + b u2) = a f1 + b f2 - (a + b - 1) b sigma(t) for x-independent sigma.
TEST(Property, AffineInStateAndInput) {
    const auto p = robot_arm_preset(RobotArmDisturbance::SinPi).plant;
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double t = std::abs(u(rng)) * 3.0;
        const Vector x1 = Vector::NullaryExpr(2, [&] { return u(rng); });
        const Vector x2 = Vector::NullaryExpr(2, [&] { return u(rng); });
        const double u1 = u(rng), u2 = u(rng), a = u(rng), b = u(rng);
        const double sig = std::sin(std::numbers::pi * t);
        const Vector lhs = plant_derivative(p, t, a * x1 + b * x2, a * u1 + b * u2);
        const Vector rhs = a * plant_derivative(p, t, x1, u1) + b * plant_derivative(p, t, x2, u2) - (a + b - 1.0) * p.b * sig;
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-11) << "trial " << trial;
    }
}
