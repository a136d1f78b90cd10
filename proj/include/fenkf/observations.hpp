#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

namespace fenkf {

/// Selects which state components are observed. Coefficients appended to the
/// augmented vector are never observable.
struct ObservationMask {
    std::vector<bool> observed;

    static ObservationMask all(int state_dim) { return {std::vector<bool>(state_dim, true)}; }

    static ObservationMask position_only() { return {{true, false}}; }
    static ObservationMask velocity_only() { return {{false, true}}; }
    static ObservationMask both() { return {{true, true}}; }

    int state_dim() const noexcept { return static_cast<int>(observed.size()); }

    int observed_count() const noexcept {
        int m = 0;
        for (bool b : observed) m += b ? 1 : 0;
        return m;
    }

    /// State-component indices that are observed, in ascending order.
    std::vector<int> observed_indices() const {
        std::vector<int> idx;
        for (int i = 0; i < state_dim(); ++i) {
            if (observed[i]) idx.push_back(i);
        }
        return idx;
    }

    void validate() const {
        if (observed_count() == 0) {
            throw std::invalid_argument("ObservationMask: at least one component must be observed");
        }
    }
};

/// Time-stamped noisy observations of the masked state components, optionally
/// carrying the noise-free truth states for evaluation.
struct ObservationSeries {
    std::vector<double> times;               // t_1 .. t_T, strictly increasing
    Eigen::MatrixXd values;                  // T x m
    ObservationMask mask;
    std::optional<Eigen::MatrixXd> truth_states;  // T x d

    int count() const noexcept { return static_cast<int>(times.size()); }

    void validate() const {
        mask.validate();
        if (values.rows() != static_cast<Eigen::Index>(times.size())) {
            throw std::invalid_argument("ObservationSeries: row count does not match time count");
        }
        if (values.cols() != mask.observed_count()) {
            throw std::invalid_argument("ObservationSeries: column count does not match mask");
        }
        for (std::size_t j = 1; j < times.size(); ++j) {
            if (!(times[j] > times[j - 1])) {
                throw std::invalid_argument("ObservationSeries: times must be strictly increasing");
            }
        }
        if (truth_states &&
            (truth_states->rows() != values.rows() || truth_states->cols() != mask.state_dim())) {
            throw std::invalid_argument("ObservationSeries: truth state shape mismatch");
        }
    }
};

}  // namespace fenkf
