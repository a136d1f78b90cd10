#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fenkf/experiments.hpp"

using namespace fenkf;

TEST_CASE("root mean square error") {
    SECTION("identical sequences give zero") {
        const std::vector<double> a = {1.0, -2.0, 3.5};
        REQUIRE(rmse(a, a) == 0.0);
    }
    SECTION("constant offset comes back unchanged") {
        std::vector<double> truth(50), estimate(50);
        for (int j = 0; j < 50; ++j) {
            truth[j] = std::sin(0.37 * j);
            estimate[j] = truth[j] + 0.5;
        }
        REQUIRE(rmse(estimate, truth) == Approx(0.5).margin(1e-14));
    }
    SECTION("length mismatch and empty input are rejected") {
        const std::vector<double> a = {1.0};
        const std::vector<double> b = {1.0, 2.0};
        const std::vector<double> empty;
        REQUIRE_THROWS_AS(rmse(a, b), std::invalid_argument);
        REQUIRE_THROWS_AS(rmse(empty, empty), std::invalid_argument);
    }
    SECTION("symmetry and joint-shift invariance") {
        std::mt19937 gen(12);
        std::uniform_real_distribution<double> dist(-2.0, 2.0);
        std::vector<double> a(40), b(40), a_shifted(40), b_shifted(40);
        for (int j = 0; j < 40; ++j) {
            a[j] = dist(gen);
            b[j] = dist(gen);
            a_shifted[j] = a[j] + 3.25;
            b_shifted[j] = b[j] + 3.25;
        }
        REQUIRE(rmse(a, b) == Approx(rmse(b, a)).epsilon(1e-14));
        REQUIRE(rmse(a_shifted, b_shifted) == Approx(rmse(a, b)).epsilon(1e-12));
    }
    SECTION("invariant under a joint permutation") {
        std::mt19937 gen(21);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<double> a(30), b(30);
        for (int j = 0; j < 30; ++j) {
            a[j] = dist(gen);
            b[j] = dist(gen);
        }
        const double reference = rmse(a, b);
        std::vector<int> order(30);
        for (int j = 0; j < 30; ++j) order[j] = j;
        std::shuffle(order.begin(), order.end(), gen);
        std::vector<double> a_perm(30), b_perm(30);
        for (int j = 0; j < 30; ++j) {
            a_perm[j] = a[order[j]];
            b_perm[j] = b[order[j]];
        }
        REQUIRE(rmse(a_perm, b_perm) == Approx(reference).epsilon(1e-14));
    }
}

TEST_CASE("reference coefficient sets reproduce the reported error levels") {
    // Final two-term means reported for the three observation scenarios,
    // evaluated against sin(t) on the 120-point grid.
    const FourierModel model = preset_model("two-term");
    auto rmse_for = [&](double c1, double c2) {
        const std::vector<double> coeffs = {c1, c2};
        std::vector<double> est(120), truth(120);
        for (int j = 1; j <= 120; ++j) {
            const double t = 0.5 * j;
            est[j - 1] = evaluate_fourier(model, coeffs, t);
            truth[j - 1] = std::sin(t);
        }
        return rmse(est, truth);
    };
    REQUIRE(rmse_for(0.8390, -0.0249) == Approx(0.1146).margin(0.002));
    REQUIRE(rmse_for(0.9012, -0.0247) == Approx(0.0717).margin(0.002));
    REQUIRE(rmse_for(0.9575, 0.0004) == Approx(0.0299).margin(0.002));
}

TEST_CASE("fitted forcing from a filter result") {
    const FourierModel model = preset_model("two-term");

    SECTION("binds the final coefficient means") {
        FilterResult result;
        result.state_dim = 2;
        result.steps.resize(1);
        result.final_coefficients = {{1.0, 0.2}, {0.0, 0.2}};
        const ForcingSpec estimate = approximation_from_result(result, model);
        for (double t : {0.0, 0.5, 2.0, 31.0}) {
            REQUIRE(forcing_eval(estimate, t) == Approx(std::sin(t)).margin(1e-15));
        }
    }
    SECTION("all-zero means give the zero function") {
        FilterResult result;
        result.state_dim = 2;
        result.steps.resize(1);
        result.final_coefficients = {{0.0, 0.1}, {0.0, 0.1}};
        const ForcingSpec estimate = approximation_from_result(result, model);
        REQUIRE(forcing_eval(estimate, 12.7) == 0.0);
    }
    SECTION("a result without assimilation steps is rejected") {
        FilterResult result;
        result.final_coefficients = {{1.0, 0.1}, {0.0, 0.1}};
        REQUIRE_THROWS_AS(approximation_from_result(result, model), std::invalid_argument);
    }
}

TEST_CASE("forward prediction of the system states") {
    const IntegratorSettings settings;
    TruthSpec spec;  // sin forcing

    SECTION("the exact truth forcing reproduces the truth grid") {
        const TruthTrajectory truth = generate_truth(spec, settings);
        const TruthTrajectory prediction = predict_dynamics(Sine{1.0, 1.0}, spec, settings);
        REQUIRE((prediction.states - truth.states).cwiseAbs().maxCoeff() < 1e-5);
    }
    SECTION("the zero estimate gives the unforced damped response") {
        const FourierModel model = preset_model("two-term");
        const ForcingSpec zero_estimate = FourierEstimate(model, {0.0, 0.0});
        const TruthTrajectory prediction = predict_dynamics(zero_estimate, spec, settings);

        auto unforced = [&](double t, const Eigen::Vector2d& x) -> Eigen::Vector2d {
            const StateVector dx = mass_spring_rhs(t, {x[0], x[1]}, spec.params, 0.0);
            return {dx.position, dx.velocity};
        };
        IntegratorSettings fine;
        fine.substeps_per_interval = 100;
        Eigen::Vector2d x(2.0, 0.0);
        double worst = 0.0;
        for (int j = 1; j <= 120; ++j) {
            x = integrate_fixed(unforced, 0.5 * (j - 1), 0.5 * j, x, fine);
            worst = std::max(worst, (prediction.states.row(j - 1).transpose() - x).cwiseAbs().maxCoeff());
        }
        REQUIRE(worst < 1e-5);
    }
}

TEST_CASE("experiment presets carry the benchmark defaults") {
    SECTION("all preset names resolve") {
        for (const auto& name : preset_experiment_names()) {
            REQUIRE_NOTHROW(preset_experiment(name));
        }
        REQUIRE(preset_experiment_names().size() == 8);
    }
    SECTION("unknown preset is rejected with the valid list") {
        REQUIRE_THROWS_WITH(preset_experiment("bogus"), Catch::Contains("s31-full"));
    }
    SECTION("partial observation presets use a scalar observation covariance") {
        const ExperimentConfig config = preset_experiment("s31-position");
        REQUIRE(config.mask.observed == std::vector<bool>{true, false});
        REQUIRE(config.filter.observation_cov.rows() == 1);
        REQUIRE(config.filter.observation_cov(0, 0) == Approx(0.0064));
        REQUIRE(config.model_preset == "two-term");
    }
    SECTION("velocity preset mirrors the position one") {
        const ExperimentConfig config = preset_experiment("s31-velocity");
        REQUIRE(config.mask.observed == std::vector<bool>{false, true});
    }
    SECTION("mixed-frequency preset observes both components") {
        const ExperimentConfig config = preset_experiment("s32-mixed");
        REQUIRE(config.model_preset == "mixed");
        REQUIRE(config.model.coefficient_count() == 10);
        REQUIRE(config.mask.observed == std::vector<bool>{true, true});
        REQUIRE(config.filter.observation_cov.rows() == 2);
    }
    SECTION("cubic preset binds the shifted cubic forcing and lower model") {
        const ExperimentConfig config = preset_experiment("s33-cubic");
        REQUIRE(config.model_preset == "lower");
        REQUIRE(config.evaluate_prediction);
        const auto* cubic = std::get_if<CubicShifted>(&config.truth.forcing);
        REQUIRE(cubic != nullptr);
        REQUIRE(cubic->a3 == 0.0001);
        REQUIRE(cubic->shift == 25.0);
        REQUIRE(cubic->a2 == -0.001);
        REQUIRE(cubic->a0 == 3.0);
    }
    SECTION("shared defaults") {
        const ExperimentConfig config = preset_experiment("s31-full");
        REQUIRE(config.truth.params.mass == 10.0);
        REQUIRE(config.truth.params.damping == 3.0);
        REQUIRE(config.truth.params.stiffness == 5.0);
        REQUIRE(config.truth.x0.position == 2.0);
        REQUIRE(config.truth.x0.velocity == 0.0);
        REQUIRE(config.truth.t_end == 60.0);
        REQUIRE(config.truth.dt_obs == 0.5);
        REQUIRE(config.truth.noise_std == 0.08);
        REQUIRE(config.filter.ensemble_size == 1000);
        REQUIRE(config.filter.prior_state_cov(0, 0) == Approx(0.25));
        REQUIRE(config.filter.coeff_prior_low == -2.0);
        REQUIRE(config.filter.coeff_prior_high == 12.0);
        REQUIRE(config.filter.model_innovation_cov(0, 0) == Approx(0.0004));
        REQUIRE(config.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    }
}

TEST_CASE("running an experiment") {
    SECTION("two replicates produce two deterministic report rows") {
        ExperimentConfig config = preset_experiment("s31-full");
        config.seeds = {1, 2};
        config.filter.ensemble_size = 300;
        const ExperimentReport report = run_experiment(config);
        REQUIRE(report.rows.size() == 2);
        REQUIRE(report.coefficient_mean_of_means.size() == 2);
        for (const SeedOutcome& row : report.rows) {
            REQUIRE(row.rmse_theta >= 0.0);
            REQUIRE(std::isfinite(row.rmse_theta));
            REQUIRE(row.coefficients.size() == 2);
            REQUIRE_FALSE(row.rmse_position.has_value());
        }
        const ExperimentReport again = run_experiment(config);
        for (std::size_t i = 0; i < report.rows.size(); ++i) {
            REQUIRE(report.rows[i].rmse_theta == again.rows[i].rmse_theta);
            REQUIRE(report.rows[i].coefficients[0].mean == again.rows[i].coefficients[0].mean);
        }
    }
    SECTION("the sine term dominates the cosine term on the full benchmark") {
        ExperimentConfig config = preset_experiment("s31-full");
        config.seeds = {4};
        const ExperimentReport report = run_experiment(config);
        const auto& coeffs = report.rows.front().coefficients;
        REQUIRE(std::abs(coeffs[1].mean) < std::abs(coeffs[0].mean));
    }
    SECTION("polynomial presets attach prediction errors") {
        ExperimentConfig config = preset_experiment("s33-linear");
        config.seeds = {3};
        const ExperimentReport report = run_experiment(config);
        REQUIRE(report.rows.front().rmse_position.has_value());
        REQUIRE(report.rows.front().rmse_velocity.has_value());
        REQUIRE(report.rmse_position_median.has_value());
        REQUIRE(*report.rows.front().rmse_position >= 0.0);
        REQUIRE(report.rows.front().prediction.has_value());
    }
    SECTION("seeds are required") {
        ExperimentConfig config = preset_experiment("s31-full");
        config.seeds.clear();
        REQUIRE_THROWS_AS(run_experiment(config), std::invalid_argument);
    }
}

TEST_CASE("median helper") {
    REQUIRE(median({3.0, 1.0, 2.0}) == 2.0);
    REQUIRE(median({4.0, 1.0, 3.0, 2.0}) == Approx(2.5));
    REQUIRE_THROWS_AS(median({}), std::invalid_argument);
}
