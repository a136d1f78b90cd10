#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fenkf/dynamics.hpp"
#include "fenkf/observations.hpp"
#include "fenkf/rng.hpp"

namespace fenkf {

// =============================================================================
// Twin-experiment data generation
// =============================================================================

/// Everything needed to generate one synthetic truth run: system constants,
/// forcing signal, initial state, observation grid and noise level.
struct TruthSpec {
    MassSpringParams params{10.0, 3.0, 5.0};
    ForcingSpec forcing = Sine{1.0, 1.0};
    StateVector x0{2.0, 0.0};
    double t_start = 0.0;
    double t_end = 60.0;
    double dt_obs = 0.5;
    double noise_std = 0.08;
    std::uint64_t seed = 0;

    int observation_count() const {
        const double ratio = (t_end - t_start) / dt_obs;
        return static_cast<int>(std::llround(ratio));
    }

    void validate() const {
        if (!(t_end > t_start)) throw std::invalid_argument("TruthSpec: t_end must exceed t_start");
        if (!(dt_obs > 0.0)) throw std::invalid_argument("TruthSpec: dt_obs must be positive");
        if (!(noise_std >= 0.0)) throw std::invalid_argument("TruthSpec: noise_std must be non-negative");
        const double ratio = (t_end - t_start) / dt_obs;
        if (std::abs(ratio - std::llround(ratio)) > 1e-9) {
            throw std::invalid_argument("TruthSpec: observation spacing must divide the interval");
        }
    }
};

/// Adaptive truth solution plus its samples on the observation grid
/// t_j = t_start + j * dt_obs, j = 1..T (grid times are computed by
/// multiplication, never by accumulation).
struct TruthTrajectory {
    DenseSolution dense;
    std::vector<double> times;
    Eigen::MatrixXd states;  // T x 2, columns (position, velocity)
};

inline TruthTrajectory generate_truth(const TruthSpec& spec, const IntegratorSettings& settings) {
    spec.validate();
    auto rhs = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const StateVector dx =
            mass_spring_rhs(t, StateVector{x[0], x[1]}, spec.params, forcing_eval(spec.forcing, t));
        return Eigen::Vector2d(dx.position, dx.velocity);
    };
    DenseSolution dense = integrate_adaptive(
        rhs, spec.t_start, spec.t_end, Eigen::Vector2d(spec.x0.position, spec.x0.velocity), settings);

    const int count = spec.observation_count();
    std::vector<double> times(count);
    Eigen::MatrixXd states(count, 2);
    for (int j = 1; j <= count; ++j) {
        times[j - 1] = spec.t_start + j * spec.dt_obs;
        states.row(j - 1) = dense.at(times[j - 1]).transpose();
    }
    return {std::move(dense), std::move(times), std::move(states)};
}

/// Masks the truth samples and adds i.i.d. N(0, noise_std^2) noise to every
/// observed entry. Noise is drawn for every state component (time-major,
/// component-minor) before masking, so the realization a channel sees depends
/// only on (seed, grid), not on which other channels are observed; mask
/// variants over shared seeds therefore see common noise per channel. The
/// noise-free truth states ride along for evaluation.
inline ObservationSeries add_observation_noise(const std::vector<double>& times,
                                               const Eigen::MatrixXd& truth_states,
                                               const ObservationMask& mask, double noise_std,
                                               std::uint64_t seed) {
    mask.validate();
    if (!(noise_std >= 0.0)) throw std::invalid_argument("add_observation_noise: negative noise level");
    if (truth_states.rows() != static_cast<Eigen::Index>(times.size()) ||
        truth_states.cols() != mask.state_dim()) {
        throw std::invalid_argument("add_observation_noise: truth state shape mismatch");
    }
    const std::vector<int> idx = mask.observed_indices();
    Rng rng(seed);
    ObservationSeries series;
    series.times = times;
    series.mask = mask;
    series.values.resize(truth_states.rows(), static_cast<Eigen::Index>(idx.size()));
    std::vector<double> noise(mask.state_dim());
    for (Eigen::Index j = 0; j < truth_states.rows(); ++j) {
        for (int i = 0; i < mask.state_dim(); ++i) noise[i] = noise_std * rng.normal();
        for (std::size_t c = 0; c < idx.size(); ++c) {
            series.values(j, static_cast<Eigen::Index>(c)) = truth_states(j, idx[c]) + noise[idx[c]];
        }
    }
    series.truth_states = truth_states;
    series.validate();
    return series;
}

/// Full twin-experiment pipeline: solve the truth, sample the grid, corrupt
/// with noise seeded by spec.seed.
inline ObservationSeries make_observations(const TruthSpec& spec, const ObservationMask& mask,
                                           const IntegratorSettings& settings) {
    const TruthTrajectory truth = generate_truth(spec, settings);
    return add_observation_noise(truth.times, truth.states, mask, spec.noise_std, spec.seed);
}

// =============================================================================
// Series file format
// =============================================================================
//
// Plain comma-delimited text, LF line endings, one header row:
//   t,<observed columns>[,truth_position,truth_velocity]
// where the observed columns are "position" and/or "velocity" in that order.
// Numbers are written with 17 significant digits so a read/write round trip
// reproduces every double exactly.

namespace detail {

inline std::string format_g17(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline double parse_double(const std::string& text, int line_number) {
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &consumed);
    } catch (const std::exception&) {
        throw std::runtime_error("series file: bad numeric field '" + text + "' on line " +
                                 std::to_string(line_number));
    }
    if (consumed != text.size()) {
        throw std::runtime_error("series file: trailing characters in field '" + text + "' on line " +
                                 std::to_string(line_number));
    }
    return value;
}

}  // namespace detail

inline void write_series(const ObservationSeries& series, const std::string& path) {
    series.validate();
    if (series.mask.state_dim() != 2) {
        throw std::invalid_argument("write_series: file schema covers the two-state system only");
    }
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw std::runtime_error("write_series: cannot open '" + path + "' for writing");

    static const char* component_names[2] = {"position", "velocity"};
    out << "t";
    for (int i : series.mask.observed_indices()) out << "," << component_names[i];
    if (series.truth_states) out << ",truth_position,truth_velocity";
    out << "\n";

    for (int j = 0; j < series.count(); ++j) {
        out << detail::format_g17(series.times[j]);
        for (Eigen::Index c = 0; c < series.values.cols(); ++c) {
            out << "," << detail::format_g17(series.values(j, c));
        }
        if (series.truth_states) {
            out << "," << detail::format_g17((*series.truth_states)(j, 0)) << ","
                << detail::format_g17((*series.truth_states)(j, 1));
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write_series: write to '" + path + "' failed");
}

inline ObservationSeries read_series(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_series: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_series: '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "t") {
        throw std::runtime_error("read_series: header must start with column 't'");
    }
    ObservationMask mask{{false, false}};
    std::size_t column = 1;
    if (column < header.size() && header[column] == "position") {
        mask.observed[0] = true;
        ++column;
    }
    if (column < header.size() && header[column] == "velocity") {
        mask.observed[1] = true;
        ++column;
    }
    if (mask.observed_count() == 0) {
        throw std::runtime_error("read_series: no observed columns (expected 'position' and/or 'velocity')");
    }
    bool has_truth = false;
    if (column < header.size()) {
        if (header.size() - column == 2 && header[column] == "truth_position" &&
            header[column + 1] == "truth_velocity") {
            has_truth = true;
        } else {
            throw std::runtime_error("read_series: unrecognized header columns after the observed block");
        }
    }
    const std::size_t expected_fields = 1 + mask.observed_count() + (has_truth ? 2 : 0);

    std::vector<double> times;
    std::vector<std::vector<double>> value_rows;
    std::vector<std::vector<double>> truth_rows;
    int line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            throw std::runtime_error("read_series: empty row on line " + std::to_string(line_number));
        }
        const std::vector<std::string> fields = detail::split_csv_line(line);
        if (fields.size() != expected_fields) {
            throw std::runtime_error("read_series: expected " + std::to_string(expected_fields) +
                                     " fields but found " + std::to_string(fields.size()) + " on line " +
                                     std::to_string(line_number));
        }
        times.push_back(detail::parse_double(fields[0], line_number));
        std::vector<double> row(mask.observed_count());
        for (int c = 0; c < mask.observed_count(); ++c) {
            row[c] = detail::parse_double(fields[1 + c], line_number);
        }
        value_rows.push_back(std::move(row));
        if (has_truth) {
            truth_rows.push_back({detail::parse_double(fields[expected_fields - 2], line_number),
                                  detail::parse_double(fields[expected_fields - 1], line_number)});
        }
    }
    if (times.empty()) throw std::runtime_error("read_series: '" + path + "' contains no data rows");

    ObservationSeries series;
    series.mask = mask;
    series.times = std::move(times);
    series.values.resize(static_cast<Eigen::Index>(value_rows.size()), mask.observed_count());
    for (std::size_t j = 0; j < value_rows.size(); ++j) {
        for (int c = 0; c < mask.observed_count(); ++c) {
            series.values(static_cast<Eigen::Index>(j), c) = value_rows[j][c];
        }
    }
    if (has_truth) {
        Eigen::MatrixXd truth(static_cast<Eigen::Index>(truth_rows.size()), 2);
        for (std::size_t j = 0; j < truth_rows.size(); ++j) {
            truth(static_cast<Eigen::Index>(j), 0) = truth_rows[j][0];
            truth(static_cast<Eigen::Index>(j), 1) = truth_rows[j][1];
        }
        series.truth_states = std::move(truth);
    }
    series.validate();
    return series;
}

}  // namespace fenkf
