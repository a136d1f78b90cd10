// fenkf command-line driver: synthetic data generation, coefficient filtering,
// forward prediction, and benchmark reproduction for the forced mass-spring
// system with sine/cosine forcing estimation.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/configuration error.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fenkf/experiments.hpp"
#include "fenkf/version.hpp"

namespace {

using namespace fenkf;

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

std::string g17(double value) { return detail::format_g17(value); }

std::string fixed4(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.4f", value);
    return buffer;
}

// ---------------------------------------------------------------------------
// Flag parsing helpers
// ---------------------------------------------------------------------------

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        std::size_t used = 0;
        values.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument("bad number '" + item + "'");
    }
    return values;
}

// Seed lists accept "a..b" (inclusive) or comma-separated values.
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    const auto range_pos = text.find("..");
    if (range_pos != std::string::npos) {
        const std::uint64_t lo = std::stoull(text.substr(0, range_pos));
        const std::uint64_t hi = std::stoull(text.substr(range_pos + 2));
        if (hi < lo) throw std::invalid_argument("seed range '" + text + "' is descending");
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
        std::stringstream stream(text);
        std::string item;
        while (std::getline(stream, item, ',')) seeds.push_back(std::stoull(item));
    }
    if (seeds.empty()) throw std::invalid_argument("empty seed list");
    return seeds;
}

// Forcing specs are written name:comma-separated-params, e.g.
//   sine:1,1        linear:-0.07,2        cubic:0.0001,25,-0.001,3
ForcingSpec parse_forcing(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    std::vector<double> p;
    if (colon != std::string::npos) p = parse_number_list(text.substr(colon + 1));
    if (name == "sine") {
        if (p.size() != 2) throw std::invalid_argument("sine forcing needs amplitude,angular_frequency");
        return Sine{p[0], p[1]};
    }
    if (name == "linear") {
        if (p.size() != 2) throw std::invalid_argument("linear forcing needs slope,intercept");
        return Linear{p[0], p[1]};
    }
    if (name == "cubic") {
        if (p.size() != 4) throw std::invalid_argument("cubic forcing needs a3,shift,a2,a0");
        return CubicShifted{p[0], p[1], p[2], p[3]};
    }
    throw std::invalid_argument("unknown forcing '" + name + "' (expected sine:, linear: or cubic:)");
}

ObservationMask parse_mask(const std::string& text) {
    if (text == "both") return ObservationMask::both();
    if (text == "position") return ObservationMask::position_only();
    if (text == "velocity") return ObservationMask::velocity_only();
    throw std::invalid_argument("unknown --observe value '" + text + "' (both, position, velocity)");
}

// ---------------------------------------------------------------------------
// Run manifests
// ---------------------------------------------------------------------------

// Written before any computation so a crashed run is diagnosable from the
// manifest alone. No timestamps: repeated seeded runs stay byte-identical.
void write_manifest(const std::string& path, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& entries,
                    const std::vector<std::string>& artifacts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
    out << "tool=fenkf " << version_string << "\n";
    out << "command=" << command << "\n";
    for (const auto& [key, value] : entries) out << key << "=" << value << "\n";
    for (const auto& artifact : artifacts) out << "artifact=" << artifact << "\n";
    if (!out) throw std::runtime_error("manifest write failed: '" + path + "'");
}

std::string forcing_description(const ForcingSpec& spec) {
    return std::visit(
        [](const auto& f) -> std::string {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Sine>) {
                return "sine:" + g17(f.amplitude) + "," + g17(f.angular_frequency);
            } else if constexpr (std::is_same_v<T, Linear>) {
                return "linear:" + g17(f.slope) + "," + g17(f.intercept);
            } else if constexpr (std::is_same_v<T, CubicShifted>) {
                return "cubic:" + g17(f.a3) + "," + g17(f.shift) + "," + g17(f.a2) + "," + g17(f.a0);
            } else {
                std::string text = "fourier:";
                for (std::size_t i = 0; i < f.coefficients.size(); ++i) {
                    text += (i ? "," : "") + g17(f.coefficients[i]);
                }
                return text;
            }
        },
        spec);
}

std::string mask_description(const ObservationMask& mask) {
    if (mask.observed[0] && mask.observed[1]) return "both";
    return mask.observed[0] ? "position" : "velocity";
}

// ---------------------------------------------------------------------------
// Shared option blocks
// ---------------------------------------------------------------------------

struct TruthFlags {
    double mass = 10.0, damping = 3.0, stiffness = 5.0;
    double x0_position = 2.0, x0_velocity = 0.0;
    double t_start = 0.0, t_end = 60.0, dt_obs = 0.5;

    void attach(CLI::App* cmd) {
        cmd->add_option("--mass", mass, "mass m");
        cmd->add_option("--damping", damping, "damping coefficient b");
        cmd->add_option("--stiffness", stiffness, "spring constant k");
        cmd->add_option("--x0-position", x0_position, "initial position");
        cmd->add_option("--x0-velocity", x0_velocity, "initial velocity");
        cmd->add_option("--t-start", t_start, "start time");
        cmd->add_option("--t-end", t_end, "end time");
        cmd->add_option("--dt-obs", dt_obs, "observation spacing");
    }

    TruthSpec to_spec(const ForcingSpec& forcing, double noise_std, std::uint64_t seed) const {
        TruthSpec spec;
        spec.params = MassSpringParams(mass, damping, stiffness);
        spec.forcing = forcing;
        spec.x0 = StateVector{x0_position, x0_velocity};
        spec.t_start = t_start;
        spec.t_end = t_end;
        spec.dt_obs = dt_obs;
        spec.noise_std = noise_std;
        spec.seed = seed;
        return spec;
    }
};

struct FilterFlags {
    int ensemble = 1000;
    double state_prior_std = 0.5;
    double coeff_prior_low = -2.0, coeff_prior_high = 12.0;
    double innovation_std = 0.02;
    double obs_noise_std = 0.08;
    int substeps = 10;

    void attach(CLI::App* cmd) {
        cmd->add_option("--ensemble", ensemble, "ensemble size N");
        cmd->add_option("--state-prior-std", state_prior_std, "state prior standard deviation");
        cmd->add_option("--coeff-prior-low", coeff_prior_low, "coefficient prior lower bound");
        cmd->add_option("--coeff-prior-high", coeff_prior_high, "coefficient prior upper bound");
        cmd->add_option("--innovation-std", innovation_std, "model innovation standard deviation");
        cmd->add_option("--obs-noise-std", obs_noise_std, "assumed observation noise standard deviation");
        cmd->add_option("--substeps", substeps, "RK4 substeps per observation interval");
    }

    FilterConfig to_config(int observed_count, std::uint64_t seed) const {
        FilterConfig config;
        config.ensemble_size = ensemble;
        config.prior_state_mean = Eigen::Vector2d(1.0, 1.0);
        config.prior_state_cov = state_prior_std * state_prior_std * Eigen::Matrix2d::Identity();
        config.coeff_prior_low = coeff_prior_low;
        config.coeff_prior_high = coeff_prior_high;
        config.model_innovation_cov = innovation_std * innovation_std * Eigen::Matrix2d::Identity();
        config.observation_cov =
            obs_noise_std * obs_noise_std * Eigen::MatrixXd::Identity(observed_count, observed_count);
        config.seed = seed;
        return config;
    }
};

// ---------------------------------------------------------------------------
// Report writers
// ---------------------------------------------------------------------------

void write_coefficient_series(const FilterResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    const int coeff_count = static_cast<int>(result.final_coefficients.size());
    out << "t";
    for (int k = 1; k <= coeff_count; ++k) {
        out << ",c" << k << "_mean,c" << k << "_lo,c" << k << "_hi";
    }
    out << "\n";
    for (const StepSummary& step : result.steps) {
        out << g17(step.time);
        for (int k = 0; k < coeff_count; ++k) {
            const int row = result.state_dim + k;
            const double mean = step.mean[row];
            const double two_std = 2.0 * std::sqrt(std::max(step.covariance(row, row), 0.0));
            out << "," << g17(mean) << "," << g17(mean - two_std) << "," << g17(mean + two_std);
        }
        out << "\n";
    }
}

void write_theta_series(const std::vector<double>& times, const ForcingSpec& truth,
                        const ForcingSpec& estimate, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "t,theta_true,theta_est\n";
    for (double t : times) {
        out << g17(t) << "," << g17(forcing_eval(truth, t)) << "," << g17(forcing_eval(estimate, t)) << "\n";
    }
}

void write_state_prediction(const std::vector<double>& times, const Eigen::MatrixXd& truth_states,
                            const Eigen::MatrixXd& predicted_states, int column, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "t,state_true,state_pred\n";
    for (std::size_t j = 0; j < times.size(); ++j) {
        const auto row = static_cast<Eigen::Index>(j);
        out << g17(times[j]) << "," << g17(truth_states(row, column)) << ","
            << g17(predicted_states(row, column)) << "\n";
    }
}

void write_experiment_report(const ExperimentReport& report, int coeff_count, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "seed";
    for (int k = 1; k <= coeff_count; ++k) out << ",c" << k;
    out << ",rmse_theta";
    const bool has_prediction = !report.rows.empty() && report.rows.front().rmse_position.has_value();
    if (has_prediction) out << ",rmse_position,rmse_velocity";
    out << "\n";
    for (const SeedOutcome& row : report.rows) {
        out << row.seed;
        for (const CoefficientEstimate& c : row.coefficients) out << "," << g17(c.mean);
        out << "," << g17(row.rmse_theta);
        if (has_prediction) out << "," << g17(*row.rmse_position) << "," << g17(*row.rmse_velocity);
        out << "\n";
    }
}

std::string experiment_summary(const ExperimentReport& report, int coeff_count) {
    std::ostringstream out;
    out << "experiment " << report.name << " (" << report.rows.size() << " seeds)\n";
    out << "  median rmse_theta: " << fixed4(report.rmse_theta_median) << "\n";
    if (report.rmse_position_median) {
        out << "  median rmse_position: " << fixed4(*report.rmse_position_median) << "\n";
        out << "  median rmse_velocity: " << fixed4(*report.rmse_velocity_median) << "\n";
    }
    out << "  coefficient means (average over seeds):\n";
    for (int k = 0; k < coeff_count; ++k) {
        out << "    c" << (k + 1) << " = " << fixed4(report.coefficient_mean_of_means[k]) << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Subcommand payloads
// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string preset;
    std::string forcing = "sine:1,1";
    std::string observe = "both";
    double noise_std = 0.08;
    std::uint64_t seed = 0;
    bool forcing_given = false;
    bool observe_given = false;
    bool noise_given = false;
    std::string out = "data.csv";
    bool no_truth_columns = false;
    TruthFlags truth;
};

int run_generate(const GenerateArgs& args) {
    ForcingSpec forcing = parse_forcing(args.forcing);
    ObservationMask mask = parse_mask(args.observe);
    double noise_std = args.noise_std;
    if (!args.preset.empty()) {
        // Preset supplies forcing/mask/noise; explicit flags still win.
        const ExperimentConfig preset = preset_experiment(args.preset);
        if (!args.forcing_given) forcing = preset.truth.forcing;
        if (!args.observe_given) mask = preset.mask;
        if (!args.noise_given) noise_std = preset.truth.noise_std;
    }
    const TruthSpec spec = args.truth.to_spec(forcing, noise_std, derive_seed(args.seed, 0));

    write_manifest(args.out + ".manifest", "generate",
                   {{"preset", args.preset.empty() ? "(none)" : args.preset},
                    {"forcing", forcing_description(forcing)},
                    {"observe", mask_description(mask)},
                    {"noise_std", g17(noise_std)},
                    {"seed", std::to_string(args.seed)},
                    {"t_start", g17(spec.t_start)},
                    {"t_end", g17(spec.t_end)},
                    {"dt_obs", g17(spec.dt_obs)},
                    {"mass", g17(spec.params.mass)},
                    {"damping", g17(spec.params.damping)},
                    {"stiffness", g17(spec.params.stiffness)},
                    {"x0", g17(spec.x0.position) + "," + g17(spec.x0.velocity)}},
                   {args.out});

    ObservationSeries series = make_observations(spec, mask, IntegratorSettings{});
    if (args.no_truth_columns) series.truth_states.reset();
    write_series(series, args.out);
    std::cout << "wrote " << series.count() << " observations to " << args.out << "\n";
    return exit_ok;
}

struct FilterArgs {
    std::string data;
    std::string model = "two-term";
    std::string observe;
    std::uint64_t seed = 0;
    std::string out_prefix = "filter";
    std::string truth_theta;
    FilterFlags filter;
    TruthFlags truth;
};

int run_filter_cmd(const FilterArgs& args) {
    const ObservationSeries series = read_series(args.data);
    if (!args.observe.empty()) {
        const ObservationMask requested = parse_mask(args.observe);
        if (requested.observed != series.mask.observed) {
            throw CLI::ValidationError("--observe " + args.observe + " does not match the data file's " +
                                       std::to_string(series.mask.observed_count()) +
                                       " observed column(s) (" + mask_description(series.mask) + ")");
        }
    }
    const FourierModel model = preset_model(args.model);
    const MassSpringParams params(args.truth.mass, args.truth.damping, args.truth.stiffness);
    const FilterConfig config = args.filter.to_config(series.mask.observed_count(), derive_seed(args.seed, 1));
    const IntegratorSettings settings{args.filter.substeps, 1e-8, 1e-8};

    const std::string series_path = args.out_prefix + "_coefficients.csv";
    const std::string report_path = args.out_prefix + "_report.csv";
    write_manifest(args.out_prefix + ".manifest", "filter",
                   {{"data", args.data},
                    {"model", args.model},
                    {"observe", mask_description(series.mask)},
                    {"seed", std::to_string(args.seed)},
                    {"ensemble", std::to_string(config.ensemble_size)},
                    {"truth_theta", args.truth_theta.empty() ? "(unknown)" : args.truth_theta}},
                   {series_path, report_path});

    const FilterResult result = run_filter(config, model, params, series, settings, args.truth.t_start);
    write_coefficient_series(result, series_path);

    std::optional<double> theta_rmse;
    if (!args.truth_theta.empty()) {
        const ForcingSpec truth_forcing = parse_forcing(args.truth_theta);
        const ForcingSpec estimate = approximation_from_result(result, model);
        std::vector<double> est(series.times.size()), tru(series.times.size());
        for (std::size_t j = 0; j < series.times.size(); ++j) {
            est[j] = forcing_eval(estimate, series.times[j]);
            tru[j] = forcing_eval(truth_forcing, series.times[j]);
        }
        theta_rmse = rmse(est, tru);
    }

    {
        std::ofstream out(report_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + report_path + "'");
        out << "seed";
        for (std::size_t k = 1; k <= result.final_coefficients.size(); ++k) out << ",c" << k;
        out << ",rmse_theta\n" << args.seed;
        for (const CoefficientEstimate& c : result.final_coefficients) out << "," << g17(c.mean);
        out << "," << (theta_rmse ? g17(*theta_rmse) : "nan") << "\n";
    }

    std::cout << "final coefficient estimates (mean +/- 2 std):\n";
    for (std::size_t k = 0; k < result.final_coefficients.size(); ++k) {
        const CoefficientEstimate& c = result.final_coefficients[k];
        std::cout << "  c" << (k + 1) << " = " << fixed4(c.mean) << " +/- " << fixed4(c.two_std) << "\n";
    }
    if (theta_rmse) std::cout << "rmse_theta = " << fixed4(*theta_rmse) << "\n";
    return exit_ok;
}

struct PredictArgs {
    std::string model = "two-term";
    std::string coeffs;
    std::string report;
    std::string data;
    std::string out = "prediction.csv";
    TruthFlags truth;
};

int run_predict(const PredictArgs& args) {
    const FourierModel model = preset_model(args.model);
    std::vector<double> coefficients;
    if (!args.coeffs.empty()) {
        coefficients = parse_number_list(args.coeffs);
    } else if (!args.report.empty()) {
        // Final-coefficient row of a filter report: seed,c1..c2M,rmse_theta.
        std::ifstream in(args.report);
        if (!in) throw std::runtime_error("cannot open report '" + args.report + "'");
        std::string header, row;
        if (!std::getline(in, header) || !std::getline(in, row)) {
            throw std::runtime_error("report '" + args.report + "' has no data row");
        }
        const std::vector<double> fields = parse_number_list(row);
        if (static_cast<int>(fields.size()) < model.coefficient_count() + 2) {
            throw std::runtime_error("report row too short for model '" + args.model + "'");
        }
        coefficients.assign(fields.begin() + 1, fields.begin() + 1 + model.coefficient_count());
    } else {
        throw CLI::ValidationError("predict requires --coeffs or --report");
    }
    const ForcingSpec estimate = FourierEstimate(model, coefficients);

    write_manifest(args.out + ".manifest", "predict",
                   {{"model", args.model}, {"forcing", forcing_description(estimate)}}, {args.out});

    const TruthSpec spec = args.truth.to_spec(estimate, 0.0, 0);
    const TruthTrajectory prediction = generate_truth(spec, IntegratorSettings{});

    std::optional<ObservationSeries> reference;
    if (!args.data.empty()) {
        reference = read_series(args.data);
        if (!reference->truth_states) {
            throw std::runtime_error("data file '" + args.data + "' carries no truth columns to compare");
        }
    }

    std::ofstream out(args.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + args.out + "'");
    out << "t,position_pred,velocity_pred";
    if (reference) out << ",position_true,velocity_true";
    out << "\n";
    for (std::size_t j = 0; j < prediction.times.size(); ++j) {
        const auto row = static_cast<Eigen::Index>(j);
        out << g17(prediction.times[j]) << "," << g17(prediction.states(row, 0)) << ","
            << g17(prediction.states(row, 1));
        if (reference) {
            out << "," << g17((*reference->truth_states)(row, 0)) << ","
                << g17((*reference->truth_states)(row, 1));
        }
        out << "\n";
    }

    if (reference) {
        if (reference->times.size() != prediction.times.size()) {
            throw std::runtime_error("data grid does not match the prediction grid");
        }
        const int count = static_cast<int>(prediction.times.size());
        std::vector<double> pred(count), truth(count);
        for (int c = 0; c < 2; ++c) {
            for (int j = 0; j < count; ++j) {
                pred[j] = prediction.states(j, c);
                truth[j] = (*reference->truth_states)(j, c);
            }
            std::cout << (c == 0 ? "rmse_position = " : "rmse_velocity = ") << fixed4(rmse(pred, truth))
                      << "\n";
        }
    }
    std::cout << "wrote prediction to " << args.out << "\n";
    return exit_ok;
}

struct ReproduceArgs {
    std::string preset;
    std::string seeds = "1..10";
    std::string out_dir = "reproduce-out";
    int ensemble = 1000;
};

int reproduce_one(const std::string& name, const ReproduceArgs& args) {
    namespace fs = std::filesystem;
    ExperimentConfig config = preset_experiment(name);
    config.seeds = parse_seed_list(args.seeds);
    config.filter.ensemble_size = args.ensemble;

    const fs::path dir = fs::path(args.out_dir) / name;
    fs::create_directories(dir);

    // Artifact names are relative to the manifest's directory, so runs into
    // different --out-dir locations stay byte-identical.
    std::vector<std::string> artifacts = {"report.csv", "summary.txt"};
    std::string seed_text;
    for (std::size_t i = 0; i < config.seeds.size(); ++i) {
        seed_text += (i ? "," : "") + std::to_string(config.seeds[i]);
    }
    write_manifest((dir / "manifest.txt").string(), "reproduce",
                   {{"preset", name},
                    {"seeds", seed_text},
                    {"ensemble", std::to_string(config.filter.ensemble_size)},
                    {"model", config.model_preset},
                    {"observe", mask_description(config.mask)},
                    {"forcing", forcing_description(config.truth.forcing)}},
                   artifacts);

    const ExperimentReport report = run_experiment(config);
    write_experiment_report(report, config.model.coefficient_count(), (dir / "report.csv").string());

    for (const SeedOutcome& row : report.rows) {
        const std::string tag = "seed" + std::to_string(row.seed);
        const ForcingSpec estimate = FourierEstimate(config.model, [&] {
            std::vector<double> means;
            for (const auto& c : row.coefficients) means.push_back(c.mean);
            return means;
        }());
        write_theta_series(row.data.times, config.truth.forcing, estimate,
                           (dir / (tag + "_theta.csv")).string());
        write_coefficient_series(row.filter_result, (dir / (tag + "_coefficients.csv")).string());
        if (row.prediction) {
            write_state_prediction(row.data.times, *row.data.truth_states, row.prediction->states, 0,
                                   (dir / (tag + "_position_prediction.csv")).string());
            write_state_prediction(row.data.times, *row.data.truth_states, row.prediction->states, 1,
                                   (dir / (tag + "_velocity_prediction.csv")).string());
        }
    }

    const std::string summary = experiment_summary(report, config.model.coefficient_count());
    std::ofstream summary_out(dir / "summary.txt", std::ios::binary);
    summary_out << summary;
    std::cout << summary;
    return exit_ok;
}

int run_reproduce(const ReproduceArgs& args) {
    if (args.preset == "all") {
        for (const std::string& name : preset_experiment_names()) {
            const int rc = reproduce_one(name, args);
            if (rc != exit_ok) return rc;
        }
        return exit_ok;
    }
    return reproduce_one(args.preset, args);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-varying forcing estimation for the forced mass-spring system"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("fenkf ") + fenkf::version_string);
    // Flat key=value lines; keys are <subcommand>.<flag>, e.g. generate.seed=7.
    // Must precede the subcommand on the command line; flags win over the file.
    app.set_config("--config", "", "configuration file with <subcommand>.<flag>=value lines");

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate", "generate a synthetic observation series");
    generate->add_option("--preset", gen.preset, "experiment preset supplying forcing/mask/noise");
    generate->add_option("--forcing", gen.forcing, "truth forcing, e.g. sine:1,1 or linear:-0.07,2");
    generate->add_option("--observe", gen.observe, "observed components: both, position, velocity");
    generate->add_option("--noise-std", gen.noise_std, "observation noise standard deviation");
    generate->add_option("--seed", gen.seed, "noise seed");
    generate->add_option("--out", gen.out, "output series path");
    generate->add_flag("--no-truth-columns", gen.no_truth_columns, "omit truth state columns");
    gen.truth.attach(generate);

    FilterArgs fil;
    CLI::App* filter = app.add_subcommand("filter", "estimate coefficients from an observation series");
    filter->add_option("--data", fil.data, "observation series file")->required();
    filter->add_option("--model", fil.model, "frequency model preset");
    filter->add_option("--observe", fil.observe, "expected observed components (validated against data)");
    filter->add_option("--seed", fil.seed, "filter seed");
    filter->add_option("--out-prefix", fil.out_prefix, "output file prefix");
    filter->add_option("--truth-theta", fil.truth_theta, "true forcing for rmse, e.g. sine:1,1");
    fil.filter.attach(filter);
    fil.truth.attach(filter);

    PredictArgs pre;
    CLI::App* predict = app.add_subcommand("predict", "integrate the system under a fitted forcing");
    predict->add_option("--model", pre.model, "frequency model preset");
    predict->add_option("--coeffs", pre.coeffs, "comma-separated coefficients");
    predict->add_option("--report", pre.report, "filter report supplying the coefficients");
    predict->add_option("--data", pre.data, "series file with truth columns to compare against");
    predict->add_option("--out", pre.out, "output path");
    pre.truth.attach(predict);

    ReproduceArgs rep;
    CLI::App* reproduce = app.add_subcommand("reproduce", "run a benchmark experiment preset");
    reproduce->add_option("preset", rep.preset, "preset name or 'all'")->required();
    reproduce->add_option("--seeds", rep.seeds, "seed list: a..b or comma-separated");
    reproduce->add_option("--out-dir", rep.out_dir, "output directory");
    reproduce->add_option("--ensemble", rep.ensemble, "ensemble size N");

    generate->callback([&] {
        gen.forcing_given = generate->count("--forcing") > 0;
        gen.observe_given = generate->count("--observe") > 0;
        gen.noise_given = generate->count("--noise-std") > 0;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return exit_usage;
    }

    try {
        if (*generate) return run_generate(gen);
        if (*filter) return run_filter_cmd(fil);
        if (*predict) return run_predict(pre);
        if (*reproduce) return run_reproduce(rep);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_usage;
}
