#include <catch2/catch.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "fenkf/dynamics.hpp"

using namespace fenkf;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

VectorXd scalar_state(double value) {
    VectorXd x(1);
    x[0] = value;
    return x;
}

const auto decay_rhs = [](double, const VectorXd& y) -> VectorXd { return -y; };

}  // namespace

TEST_CASE("mass-spring parameters must be positive") {
    REQUIRE_NOTHROW(MassSpringParams(10.0, 3.0, 5.0));
    REQUIRE_THROWS_AS(MassSpringParams(0.0, 3.0, 5.0), std::invalid_argument);
    REQUIRE_THROWS_AS(MassSpringParams(10.0, -1.0, 5.0), std::invalid_argument);
    REQUIRE_THROWS_AS(MassSpringParams(10.0, 3.0, 0.0), std::invalid_argument);
}

TEST_CASE("forcing evaluation") {
    SECTION("sine") {
        REQUIRE(forcing_eval(Sine{1.0, 1.0}, std::numbers::pi / 2.0) == Approx(1.0));
        REQUIRE(forcing_eval(Sine{2.5, 3.0}, 0.0) == 0.0);
    }
    SECTION("linear") {
        REQUIRE(forcing_eval(Linear{-0.07, 2.0}, 0.0) == Approx(2.0));
        REQUIRE(forcing_eval(Linear{-0.07, 2.0}, 10.0) == Approx(1.3));
    }
    SECTION("shifted cubic evaluated at its shift point") {
        const CubicShifted cubic{0.0001, 25.0, -0.001, 3.0};
        REQUIRE(forcing_eval(cubic, 25.0) == Approx(3.0 - 0.001 * 625.0));
        REQUIRE(forcing_eval(cubic, 25.0) == Approx(2.375));
    }
    SECTION("bound sine/cosine combination matches direct evaluation") {
        const FourierModel model({1.0, 0.5});
        const std::vector<double> coeffs = {0.3, -0.2, 1.1, 0.7};
        const ForcingSpec spec = FourierEstimate(model, coeffs);
        for (double t : {0.0, 1.7, 42.0}) {
            REQUIRE(forcing_eval(spec, t) == evaluate_fourier(model, coeffs, t));
        }
    }
    SECTION("estimate coefficient count is validated") {
        REQUIRE_THROWS_AS(FourierEstimate(FourierModel({1.0}), {1.0, 2.0, 3.0}), std::invalid_argument);
    }
}

TEST_CASE("mass-spring right-hand side") {
    const MassSpringParams params(10.0, 3.0, 5.0);

    SECTION("origin is an equilibrium of the unforced system") {
        const StateVector dx = mass_spring_rhs(0.0, {0.0, 0.0}, params, 0.0);
        REQUIRE(dx.position == 0.0);
        REQUIRE(dx.velocity == 0.0);
    }
    SECTION("displaced state accelerates toward the origin") {
        const StateVector dx = mass_spring_rhs(0.0, {2.0, 0.0}, params, 0.0);
        REQUIRE(dx.position == 0.0);
        REQUIRE(dx.velocity == Approx(-1.0));
    }
    SECTION("constant forcing has equilibrium at theta / k") {
        const double theta = 7.5;
        const StateVector dx = mass_spring_rhs(3.0, {theta / params.stiffness, 0.0}, params, theta);
        REQUIRE(dx.position == 0.0);
        REQUIRE(dx.velocity == Approx(0.0).margin(1e-15));
    }
}

TEST_CASE("single RK4 step") {
    SECTION("zero field leaves the state unchanged") {
        auto rhs = [](double, const VectorXd& y) { return VectorXd::Zero(y.size()).eval(); };
        const VectorXd out = rk4_step(rhs, 0.0, scalar_state(3.25), 0.5);
        REQUIRE(out[0] == 3.25);
    }
    SECTION("exponential decay over one step") {
        const VectorXd out = rk4_step(decay_rhs, 0.0, scalar_state(1.0), 0.1);
        REQUIRE(out[0] == Approx(std::exp(-0.1)).margin(1e-7));
    }
    SECTION("constant field is integrated exactly") {
        auto rhs = [](double, const VectorXd& y) { return VectorXd::Ones(y.size()).eval(); };
        const VectorXd out = rk4_step(rhs, 0.0, scalar_state(0.0), 0.25);
        REQUIRE(out[0] == 0.25);
    }
    SECTION("non-positive step sizes are rejected") {
        REQUIRE_THROWS_AS(rk4_step(decay_rhs, 0.0, scalar_state(1.0), 0.0), std::invalid_argument);
    }
    SECTION("non-finite states are reported as integration failure") {
        auto rhs = [](double, const VectorXd& y) { return (y * 1e308).eval(); };
        REQUIRE_THROWS_AS(rk4_step(rhs, 0.0, scalar_state(1e308), 1.0), std::runtime_error);
    }
}

TEST_CASE("fixed-step integration") {
    SECTION("exponential decay over a unit interval") {
        IntegratorSettings settings;
        settings.substeps_per_interval = 100;
        const VectorXd out = integrate_fixed(decay_rhs, 0.0, 1.0, scalar_state(1.0), settings);
        REQUIRE(out[0] == Approx(std::exp(-1.0)).margin(1e-9));
    }
    SECTION("zero field with a single substep returns the initial state") {
        auto rhs = [](double, const VectorXd& y) { return VectorXd::Zero(y.size()).eval(); };
        IntegratorSettings settings;
        settings.substeps_per_interval = 1;
        const VectorXd out = integrate_fixed(rhs, 0.0, 0.5, scalar_state(4.5), settings);
        REQUIRE(out[0] == 4.5);
    }
    SECTION("interval and substep validation") {
        IntegratorSettings settings;
        REQUIRE_THROWS_AS(integrate_fixed(decay_rhs, 1.0, 1.0, scalar_state(1.0), settings),
                          std::invalid_argument);
        settings.substeps_per_interval = 0;
        REQUIRE_THROWS_AS(integrate_fixed(decay_rhs, 0.0, 1.0, scalar_state(1.0), settings),
                          std::invalid_argument);
    }
    SECTION("damped unforced oscillation dissipates energy on every interval") {
        const MassSpringParams params(10.0, 3.0, 5.0);
        auto rhs = [&](double t, const Vector2d& x) -> Vector2d {
            const StateVector dx = mass_spring_rhs(t, {x[0], x[1]}, params, 0.0);
            return {dx.position, dx.velocity};
        };
        IntegratorSettings settings;  // 10 substeps per interval
        Vector2d x(2.0, 0.0);
        double energy = mechanical_energy({x[0], x[1]}, params);
        for (int j = 0; j < 120; ++j) {
            x = integrate_fixed(rhs, 0.5 * j, 0.5 * (j + 1), x, settings);
            const double next = mechanical_energy({x[0], x[1]}, params);
            REQUIRE(next < energy);
            energy = next;
        }
    }
}

TEST_CASE("RK4 global error scales as the fourth power of the step") {
    auto error_for = [&](double h) {
        IntegratorSettings settings;
        settings.substeps_per_interval = static_cast<int>(std::lround(1.0 / h));
        const VectorXd out = integrate_fixed(decay_rhs, 0.0, 1.0, scalar_state(1.0), settings);
        return std::abs(out[0] - std::exp(-1.0));
    };
    const double e1 = error_for(0.1);
    const double e2 = error_for(0.05);
    const double e3 = error_for(0.025);
    REQUIRE(e1 / e2 >= 14.0);
    REQUIRE(e1 / e2 <= 18.0);
    REQUIRE(e2 / e3 >= 14.0);
    REQUIRE(e2 / e3 <= 18.0);
}

TEST_CASE("adaptive integration with dense output") {
    IntegratorSettings settings;  // abs_tol = rel_tol = 1e-8

    SECTION("exponential decay hits the analytic value") {
        const DenseSolution solution = integrate_adaptive(decay_rhs, 0.0, 1.0, scalar_state(1.0), settings);
        REQUIRE(solution.at(1.0)[0] == Approx(std::exp(-1.0)).margin(1e-7));
    }
    SECTION("dense output interpolates the analytic curve between steps") {
        const DenseSolution solution = integrate_adaptive(decay_rhs, 0.0, 5.0, scalar_state(1.0), settings);
        for (int i = 0; i <= 100; ++i) {
            const double t = 5.0 * i / 100.0;
            REQUIRE(solution.at(t)[0] == Approx(std::exp(-t)).margin(1e-6));
        }
    }
    SECTION("zero field gives constant dense output") {
        auto rhs = [](double, const VectorXd& y) { return VectorXd::Zero(y.size()).eval(); };
        const DenseSolution solution = integrate_adaptive(rhs, 0.0, 2.0, scalar_state(1.5), settings);
        for (double t : {0.0, 0.3, 1.0, 1.7, 2.0}) {
            REQUIRE(solution.at(t)[0] == 1.5);
        }
    }
    SECTION("queries outside the interval are rejected") {
        const DenseSolution solution = integrate_adaptive(decay_rhs, 0.0, 1.0, scalar_state(1.0), settings);
        REQUIRE_THROWS_AS(solution.at(-0.5), std::out_of_range);
        REQUIRE_THROWS_AS(solution.at(1.5), std::out_of_range);
    }
    SECTION("finite-time blowup triggers step-size underflow") {
        auto rhs = [](double, const VectorXd& y) { return (y.array() * y.array()).matrix().eval(); };
        REQUIRE_THROWS_AS(integrate_adaptive(rhs, 0.0, 2.0, scalar_state(1.0), settings),
                          std::runtime_error);
    }
    SECTION("tolerances must be positive") {
        IntegratorSettings bad;
        bad.abs_tol = 0.0;
        REQUIRE_THROWS_AS(integrate_adaptive(decay_rhs, 0.0, 1.0, scalar_state(1.0), bad),
                          std::invalid_argument);
    }
}

TEST_CASE("adaptive and fixed-step integration agree on the forced benchmark") {
    const MassSpringParams params(10.0, 3.0, 5.0);
    auto rhs_xd = [&](double t, const VectorXd& x) -> VectorXd {
        const StateVector dx = mass_spring_rhs(t, {x[0], x[1]}, params, std::sin(t));
        return Vector2d(dx.position, dx.velocity);
    };
    auto rhs_2d = [&](double t, const Vector2d& x) -> Vector2d {
        const StateVector dx = mass_spring_rhs(t, {x[0], x[1]}, params, std::sin(t));
        return {dx.position, dx.velocity};
    };

    IntegratorSettings adaptive_settings;  // 1e-8 tolerances
    VectorXd x0(2);
    x0 << 2.0, 0.0;
    const DenseSolution dense = integrate_adaptive(rhs_xd, 0.0, 60.0, x0, adaptive_settings);

    IntegratorSettings fixed_settings;
    fixed_settings.substeps_per_interval = 100;
    Vector2d x(2.0, 0.0);
    double worst = 0.0;
    for (int j = 1; j <= 120; ++j) {
        x = integrate_fixed(rhs_2d, 0.5 * (j - 1), 0.5 * j, x, fixed_settings);
        worst = std::max(worst, (dense.at(0.5 * j) - VectorXd(x)).cwiseAbs().maxCoeff());
    }
    REQUIRE(worst < 1e-5);
}

TEST_CASE("constant forcing drives the position to theta over stiffness") {
    const MassSpringParams params(10.0, 3.0, 5.0);
    const double theta = 5.0;
    auto rhs = [&](double t, const Vector2d& x) -> Vector2d {
        const StateVector dx = mass_spring_rhs(t, {x[0], x[1]}, params, theta);
        return {dx.position, dx.velocity};
    };
    IntegratorSettings settings;
    Vector2d x(2.0, 0.0);
    for (int j = 0; j < 120; ++j) x = integrate_fixed(rhs, 0.5 * j, 0.5 * (j + 1), x, settings);
    REQUIRE(std::abs(x[0] - theta / params.stiffness) < 0.01);
}

TEST_CASE("augmented prediction") {
    const MassSpringParams params(10.0, 3.0, 5.0);
    const IntegratorSettings settings;

    SECTION("zero coefficients reproduce the unforced path bit for bit") {
        const FourierModel model({1.0, 0.5});
        const std::vector<double> zeros(4, 0.0);
        auto unforced = [&](double t, const Vector2d& x) -> Vector2d {
            const StateVector dx = mass_spring_rhs(t, {x[0], x[1]}, params, 0.0);
            return {dx.position, dx.velocity};
        };
        StateVector state{2.0, 0.0};
        Vector2d reference(2.0, 0.0);
        for (int j = 0; j < 20; ++j) {
            state = augmented_predict(state, zeros, model, params, 0.5 * j, 0.5 * (j + 1), settings);
            reference = integrate_fixed(unforced, 0.5 * j, 0.5 * (j + 1), reference, settings);
            REQUIRE(state.position == reference[0]);
            REQUIRE(state.velocity == reference[1]);
        }
    }
    SECTION("unit sine coefficients match the adaptive reference forcing") {
        const FourierModel model({1.0});
        const std::vector<double> coeffs = {1.0, 0.0};
        auto forced = [&](double t, const VectorXd& x) -> VectorXd {
            const StateVector dx = mass_spring_rhs(t, {x[0], x[1]}, params, std::sin(t));
            return Vector2d(dx.position, dx.velocity);
        };
        VectorXd x0(2);
        x0 << 2.0, 0.0;
        const DenseSolution dense = integrate_adaptive(forced, 0.0, 30.0, x0, settings);

        StateVector state{2.0, 0.0};
        double worst = 0.0;
        for (int j = 1; j <= 60; ++j) {
            state = augmented_predict(state, coeffs, model, params, 0.5 * (j - 1), 0.5 * j, settings);
            const VectorXd reference = dense.at(0.5 * j);
            worst = std::max(worst, std::max(std::abs(state.position - reference[0]),
                                             std::abs(state.velocity - reference[1])));
        }
        REQUIRE(worst < 1e-5);
    }
    SECTION("vanishing interval returns the initial state") {
        const FourierModel model({1.0});
        const std::vector<double> coeffs = {0.7, -0.3};
        const StateVector out = augmented_predict({2.0, -1.0}, coeffs, model, params, 3.0, 3.0 + 1e-8, settings);
        REQUIRE(out.position == Approx(2.0).margin(1e-6));
        REQUIRE(out.velocity == Approx(-1.0).margin(1e-6));
    }
    SECTION("coefficient count is validated") {
        const FourierModel model({1.0});
        const std::vector<double> wrong = {1.0};
        REQUIRE_THROWS_AS(augmented_predict({0.0, 0.0}, wrong, model, params, 0.0, 1.0, settings),
                          std::invalid_argument);
    }
}
