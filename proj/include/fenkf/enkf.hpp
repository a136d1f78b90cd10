#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fenkf/dynamics.hpp"
#include "fenkf/fourier.hpp"
#include "fenkf/observations.hpp"
#include "fenkf/rng.hpp"

namespace fenkf {

// =============================================================================
// Ensemble Kalman filter for the augmented state [system states; coefficients]
// =============================================================================
//
// One assimilation step:
//   prediction    x^n <- forward(x^n, c^n) + v^n,  v^n ~ N(0, C); coefficients
//                 pass through unchanged (their dynamics are constant)
//   update        z^n <- z^n + K (y + w^n - P z^n),  w^n ~ N(0, D)
//                 with K = Cov P' (P Cov P' + D)^-1 from the forecast sample
//   statistics    sample mean and (N-1)-denominator covariance
//
// Noise is drawn from a single seeded stream in a fixed order (per step: all
// prediction perturbations, then all observation perturbations; member-major,
// component-minor within each), so results depend only on the seed.

/// N augmented members stored column-wise: state block first (state_dim rows),
/// coefficient block after.
struct Ensemble {
    Eigen::MatrixXd members;
    int state_dim = 0;

    int size() const noexcept { return static_cast<int>(members.cols()); }
    int dim() const noexcept { return static_cast<int>(members.rows()); }
    int coeff_dim() const noexcept { return dim() - state_dim; }

    void validate() const {
        if (size() < 2) throw std::invalid_argument("Ensemble: need at least two members");
        if (state_dim < 1 || state_dim > dim()) throw std::invalid_argument("Ensemble: bad state dimension");
        if (!members.allFinite()) throw std::invalid_argument("Ensemble: non-finite member entries");
    }
};

struct FilterConfig {
    int ensemble_size = 1000;
    Eigen::VectorXd prior_state_mean;
    Eigen::MatrixXd prior_state_cov;
    double coeff_prior_low = -2.0;
    double coeff_prior_high = 12.0;
    Eigen::MatrixXd model_innovation_cov;  // C, state_dim x state_dim
    Eigen::MatrixXd observation_cov;       // D, m x m
    std::uint64_t seed = 0;

    void validate(int observed_count) const {
        if (ensemble_size < 2) throw std::invalid_argument("FilterConfig: ensemble size must be >= 2");
        const auto d = prior_state_mean.size();
        if (d < 1) throw std::invalid_argument("FilterConfig: empty prior state mean");
        if (prior_state_cov.rows() != d || prior_state_cov.cols() != d) {
            throw std::invalid_argument("FilterConfig: prior covariance shape mismatch");
        }
        if (model_innovation_cov.rows() != d || model_innovation_cov.cols() != d) {
            throw std::invalid_argument("FilterConfig: innovation covariance shape mismatch");
        }
        if (observation_cov.rows() != observed_count || observation_cov.cols() != observed_count) {
            throw std::invalid_argument("FilterConfig: observation covariance shape mismatch");
        }
        if (!(coeff_prior_low < coeff_prior_high)) {
            throw std::invalid_argument("FilterConfig: coefficient prior interval is empty");
        }
    }
};

/// Posterior sample statistics recorded after one assimilation step.
struct StepSummary {
    double time = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Marginal estimate reported as mean +/- 2 standard deviations.
struct CoefficientEstimate {
    double mean = 0.0;
    double two_std = 0.0;
};

struct FilterResult {
    Eigen::VectorXd prior_mean;
    Eigen::MatrixXd prior_cov;
    std::vector<StepSummary> steps;  // one entry per assimilated observation
    Ensemble final_ensemble;
    std::vector<CoefficientEstimate> final_coefficients;
    int state_dim = 0;

    /// Final-step coefficient means (prior means when no data was assimilated).
    std::vector<double> final_coefficient_means() const {
        std::vector<double> means;
        means.reserve(final_coefficients.size());
        for (const auto& c : final_coefficients) means.push_back(c.mean);
        return means;
    }
};

namespace detail {

/// Symmetric PSD square root via eigendecomposition; negative eigenvalues from
/// roundoff are clamped to zero. Handles degenerate (zero) covariances.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& matrix) {
    if (matrix.rows() != matrix.cols()) throw std::invalid_argument("psd_sqrt: matrix must be square");
    const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    if (!matrix.isApprox(matrix.transpose(), 1e-12)) {
        throw std::invalid_argument("psd_sqrt: matrix must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
    if (solver.info() != Eigen::Success) throw std::runtime_error("psd_sqrt: eigendecomposition failed");
    Eigen::VectorXd roots = solver.eigenvalues();
    for (Eigen::Index i = 0; i < roots.size(); ++i) {
        if (roots[i] < -1e-10 * scale) {
            throw std::invalid_argument("psd_sqrt: matrix is not positive semi-definite");
        }
        roots[i] = std::sqrt(std::max(roots[i], 0.0));
    }
    return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace detail

/// Draws the initial ensemble: state block from N(prior_state_mean,
/// prior_state_cov), coefficient block i.i.d. uniform on
/// [coeff_prior_low, coeff_prior_high]. Member-major draw order, states before
/// coefficients within a member.
inline Ensemble sample_prior(const FilterConfig& config, int coeff_count, Rng& rng) {
    if (coeff_count < 0) throw std::invalid_argument("sample_prior: negative coefficient count");
    const int d = static_cast<int>(config.prior_state_mean.size());
    const int n = config.ensemble_size;
    const Eigen::MatrixXd root = detail::psd_sqrt(config.prior_state_cov);

    Ensemble ens;
    ens.state_dim = d;
    ens.members.resize(d + coeff_count, n);
    Eigen::VectorXd z(d);
    for (int member = 0; member < n; ++member) {
        for (int i = 0; i < d; ++i) z[i] = rng.normal();
        ens.members.col(member).head(d) = config.prior_state_mean + root * z;
        for (int k = 0; k < coeff_count; ++k) {
            ens.members.col(member)(d + k) = rng.uniform(config.coeff_prior_low, config.coeff_prior_high);
        }
    }
    return ens;
}

inline Ensemble sample_prior(const FilterConfig& config, const FourierModel& model, Rng& rng) {
    return sample_prior(config, model.coefficient_count(), rng);
}

/// Advances every member's state block with `forward` and perturbs it with
/// N(0, C) model-innovation noise. Coefficient blocks are untouched. All noise
/// is drawn up front (member-major, component-minor), so the propagation order
/// cannot affect the stream. Perturbations are centered to zero ensemble mean
/// per step; otherwise their sample mean (size ~1/sqrt(N)) would drift the
/// ensemble mean away from the Kalman recursion.
template <class Forward>
void predict_ensemble(Ensemble& ens, Forward&& forward, const Eigen::MatrixXd& innovation_cov, Rng& rng) {
    ens.validate();
    const int d = ens.state_dim;
    const int n = ens.size();
    if (innovation_cov.rows() != d || innovation_cov.cols() != d) {
        throw std::invalid_argument("predict_ensemble: innovation covariance shape mismatch");
    }
    const Eigen::MatrixXd root = detail::psd_sqrt(innovation_cov);

    Eigen::MatrixXd noise(d, n);
    for (int member = 0; member < n; ++member) {
        for (int i = 0; i < d; ++i) noise(i, member) = rng.normal();
    }
    noise.colwise() -= Eigen::VectorXd(noise.rowwise().mean());

    for (int member = 0; member < n; ++member) {
        Eigen::VectorXd advanced;
        try {
            advanced = forward(ens.members.col(member).head(d), ens.members.col(member).tail(ens.coeff_dim()));
        } catch (const std::exception& e) {
            throw std::runtime_error("predict_ensemble: member " + std::to_string(member) +
                                     " failed: " + e.what());
        }
        if (advanced.size() != d || !advanced.allFinite()) {
            throw std::runtime_error("predict_ensemble: member " + std::to_string(member) +
                                     " produced an invalid state");
        }
        ens.members.col(member).head(d) = advanced + root * noise.col(member);
    }
}

/// G(z) = P z: selects the observed state components of an augmented vector.
inline Eigen::VectorXd observation_operator(const ObservationMask& mask, const Eigen::VectorXd& z) {
    mask.validate();
    if (z.size() < mask.state_dim()) {
        throw std::invalid_argument("observation_operator: vector shorter than mask");
    }
    Eigen::VectorXd out(mask.observed_count());
    int row = 0;
    for (int i = 0; i < mask.state_dim(); ++i) {
        if (mask.observed[i]) out[row++] = z[i];
    }
    return out;
}

/// Sample mean and (N-1)-denominator sample covariance of the members.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> ensemble_stats(const Ensemble& ens) {
    ens.validate();
    const Eigen::VectorXd mean = ens.members.rowwise().mean();
    const Eigen::MatrixXd centered = ens.members.colwise() - mean;
    Eigen::MatrixXd cov = (centered * centered.transpose()) / static_cast<double>(ens.size() - 1);
    return {mean, std::move(cov)};
}

/// Kalman gain K = Cov P' (P Cov P' + D)^-1 computed from the (forecast)
/// ensemble sample covariance. The m x m innovation system is solved with a
/// Cholesky factorization; a factorization failure (possible only for D = 0
/// with a collapsed ensemble) is reported as an error.
inline Eigen::MatrixXd kalman_gain(const Ensemble& ens, const ObservationMask& mask,
                                   const Eigen::MatrixXd& observation_cov) {
    mask.validate();
    if (mask.state_dim() != ens.state_dim) {
        throw std::invalid_argument("kalman_gain: mask does not match ensemble state dimension");
    }
    const int m = mask.observed_count();
    if (observation_cov.rows() != m || observation_cov.cols() != m) {
        throw std::invalid_argument("kalman_gain: observation covariance shape mismatch");
    }
    const auto [mean, cov] = ensemble_stats(ens);
    const std::vector<int> idx = mask.observed_indices();

    Eigen::MatrixXd cross(ens.dim(), m);  // Cov P'
    for (int c = 0; c < m; ++c) cross.col(c) = cov.col(idx[c]);
    Eigen::MatrixXd innovation_cov(m, m);  // P Cov P' + D
    for (int r = 0; r < m; ++r) innovation_cov.row(r) = cross.row(idx[r]);
    innovation_cov += observation_cov;

    Eigen::LLT<Eigen::MatrixXd> llt(innovation_cov);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("kalman_gain: singular innovation covariance");
    }
    return llt.solve(cross.transpose()).transpose();
}

/// Shifts every member by K times its perturbed innovation. The gain is
/// computed once from the forecast ensemble; observation perturbations
/// w^n ~ N(0, D) are drawn member-major, component-minor, then centered to
/// zero ensemble mean per step (see predict_ensemble).
inline void analysis_update(Ensemble& ens, const Eigen::VectorXd& observation, const ObservationMask& mask,
                            const Eigen::MatrixXd& observation_cov, Rng& rng) {
    const int m = mask.observed_count();
    if (observation.size() != m) {
        throw std::invalid_argument("analysis_update: observation length does not match mask");
    }
    const Eigen::MatrixXd gain = kalman_gain(ens, mask, observation_cov);
    const Eigen::MatrixXd root = detail::psd_sqrt(observation_cov);
    const std::vector<int> idx = mask.observed_indices();

    Eigen::MatrixXd noise(m, ens.size());
    for (int member = 0; member < ens.size(); ++member) {
        for (int i = 0; i < m; ++i) noise(i, member) = rng.normal();
    }
    noise.colwise() -= Eigen::VectorXd(noise.rowwise().mean());

    Eigen::VectorXd innovation(m);
    for (int member = 0; member < ens.size(); ++member) {
        const Eigen::VectorXd perturbed = observation + root * noise.col(member);
        for (int r = 0; r < m; ++r) innovation[r] = perturbed[r] - ens.members(idx[r], member);
        ens.members.col(member) += gain * innovation;
    }
}

/// Runs the filter over the full observation series: for each observation,
/// predict from the previous time, update with the perturbed observation, and
/// record the posterior sample statistics. `forward(t0, t1, state, coeffs)`
/// must return the state block advanced from t0 to t1.
///
/// The series times must be strictly increasing and start after `t_start`;
/// the initial time itself is not an assimilation step (the prior stands in
/// for it). With an empty series the result carries only the prior statistics.
template <class Forward>
FilterResult run_filter(const FilterConfig& config, int coeff_count, Forward&& forward,
                        const ObservationSeries& data, double t_start = 0.0) {
    data.validate();
    config.validate(data.mask.observed_count());
    const int d = static_cast<int>(config.prior_state_mean.size());
    if (data.mask.state_dim() != d) {
        throw std::invalid_argument("run_filter: mask length does not match state dimension");
    }
    if (!data.times.empty() && !(data.times.front() > t_start)) {
        throw std::invalid_argument("run_filter: first observation must come after the start time");
    }

    Rng rng(config.seed);
    Ensemble ens = sample_prior(config, coeff_count, rng);

    FilterResult result;
    result.state_dim = d;
    std::tie(result.prior_mean, result.prior_cov) = ensemble_stats(ens);
    result.steps.reserve(data.times.size());

    double t_previous = t_start;
    for (int j = 0; j < data.count(); ++j) {
        const double t_next = data.times[j];
        try {
            auto advance = [&](Eigen::Ref<const Eigen::VectorXd> state,
                               Eigen::Ref<const Eigen::VectorXd> coeffs) {
                return forward(t_previous, t_next, state, coeffs);
            };
            predict_ensemble(ens, advance, config.model_innovation_cov, rng);
            analysis_update(ens, data.values.row(j).transpose(), data.mask, config.observation_cov, rng);
        } catch (const std::exception& e) {
            throw std::runtime_error("run_filter: step " + std::to_string(j + 1) + " (t = " +
                                     std::to_string(t_next) + ") failed: " + e.what());
        }
        StepSummary summary;
        summary.time = t_next;
        std::tie(summary.mean, summary.covariance) = ensemble_stats(ens);
        result.steps.push_back(std::move(summary));
        t_previous = t_next;
    }

    const Eigen::VectorXd& mean = result.steps.empty() ? result.prior_mean : result.steps.back().mean;
    const Eigen::MatrixXd& cov = result.steps.empty() ? result.prior_cov : result.steps.back().covariance;
    result.final_coefficients.reserve(coeff_count);
    for (int k = 0; k < coeff_count; ++k) {
        result.final_coefficients.push_back(
            {mean[d + k], 2.0 * std::sqrt(std::max(cov(d + k, d + k), 0.0))});
    }
    result.final_ensemble = std::move(ens);
    return result;
}

/// Mass-spring entry point: members advance via augmented_predict with their
/// own coefficients bound to the sine/cosine model.
inline FilterResult run_filter(const FilterConfig& config, const FourierModel& model,
                               const MassSpringParams& params, const ObservationSeries& data,
                               const IntegratorSettings& settings, double t_start = 0.0) {
    auto forward = [&](double t0, double t1, Eigen::Ref<const Eigen::VectorXd> state,
                       Eigen::Ref<const Eigen::VectorXd> coeffs) -> Eigen::VectorXd {
        const StateVector advanced =
            augmented_predict(StateVector{state[0], state[1]},
                              std::span<const double>(coeffs.data(), static_cast<std::size_t>(coeffs.size())),
                              model, params, t0, t1, settings);
        return Eigen::Vector2d(advanced.position, advanced.velocity);
    };
    return run_filter(config, model.coefficient_count(), forward, data, t_start);
}

}  // namespace fenkf
