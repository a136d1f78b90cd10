#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "fenkf/fourier.hpp"

namespace fenkf {

// =============================================================================
// Forced mass-spring system
// =============================================================================

/// Physical constants of the mass-spring benchmark,
///   m p'' + b p' + k p = theta(t).
struct MassSpringParams {
    double mass;
    double damping;
    double stiffness;

    MassSpringParams(double m, double b, double k) : mass(m), damping(b), stiffness(k) {
        if (!(m > 0.0) || !(b > 0.0) || !(k > 0.0)) {
            throw std::invalid_argument("MassSpringParams: mass, damping and stiffness must be positive");
        }
    }
};

struct StateVector {
    double position = 0.0;
    double velocity = 0.0;
};

// Forcing functions theta(t) available as truth signals and fitted estimates.

struct Sine {
    double amplitude = 1.0;
    double angular_frequency = 1.0;
};

struct Linear {
    double slope = 0.0;
    double intercept = 0.0;
};

/// a3*(t - shift)^3 + a2*t^2 + a0
struct CubicShifted {
    double a3 = 0.0;
    double shift = 0.0;
    double a2 = 0.0;
    double a0 = 0.0;
};

/// Sine/cosine combination with bound coefficients (a fitted estimate).
struct FourierEstimate {
    FourierModel model;
    std::vector<double> coefficients;

    FourierEstimate(FourierModel m, std::vector<double> c) : model(std::move(m)), coefficients(std::move(c)) {
        if (static_cast<int>(coefficients.size()) != model.coefficient_count()) {
            throw std::invalid_argument("FourierEstimate: coefficient count does not match model");
        }
    }
};

using ForcingSpec = std::variant<Sine, Linear, CubicShifted, FourierEstimate>;

inline double forcing_eval(const ForcingSpec& spec, double t) {
    return std::visit(
        [t](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Sine>) {
                return f.amplitude * std::sin(f.angular_frequency * t);
            } else if constexpr (std::is_same_v<T, Linear>) {
                return f.slope * t + f.intercept;
            } else if constexpr (std::is_same_v<T, CubicShifted>) {
                const double s = t - f.shift;
                return f.a3 * s * s * s + f.a2 * t * t + f.a0;
            } else {
                return evaluate_fourier(f.model, f.coefficients, t);
            }
        },
        spec);
}

/// First-order form of the forced mass-spring equation:
///   dp/dt = v,  dv/dt = (theta - k p - b v) / m.
inline StateVector mass_spring_rhs(double /*t*/, const StateVector& x, const MassSpringParams& params,
                                   double theta) {
    return {x.velocity,
            (theta - params.stiffness * x.position - params.damping * x.velocity) / params.mass};
}

inline double mechanical_energy(const StateVector& x, const MassSpringParams& params) {
    return 0.5 * params.mass * x.velocity * x.velocity + 0.5 * params.stiffness * x.position * x.position;
}

// =============================================================================
// ODE integration
// =============================================================================

/// Step controls for both integration paths: `substeps_per_interval` drives
/// the fixed-step RK4 used for ensemble prediction; the tolerances drive the
/// adaptive method used for truth generation.
struct IntegratorSettings {
    int substeps_per_interval = 10;
    double abs_tol = 1e-8;
    double rel_tol = 1e-8;
};

/// One classical 4th-order Runge-Kutta step of size h.
template <class Rhs, class Vec>
Vec rk4_step(Rhs&& rhs, double t, const Vec& x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("rk4_step: step size must be positive");
    const Vec k1 = rhs(t, x);
    const Vec k2 = rhs(t + 0.5 * h, Vec(x + 0.5 * h * k1));
    const Vec k3 = rhs(t + 0.5 * h, Vec(x + 0.5 * h * k2));
    const Vec k4 = rhs(t + h, Vec(x + h * k3));
    Vec out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!out.allFinite()) {
        throw std::runtime_error("rk4_step: non-finite state at t = " + std::to_string(t));
    }
    return out;
}

/// Advances x0 from t0 to t1 with `substeps_per_interval` equal RK4 steps.
template <class Rhs, class Vec>
Vec integrate_fixed(Rhs&& rhs, double t0, double t1, Vec x0, const IntegratorSettings& settings) {
    if (!(t1 > t0)) throw std::invalid_argument("integrate_fixed: t1 must exceed t0");
    if (settings.substeps_per_interval < 1) {
        throw std::invalid_argument("integrate_fixed: need at least one substep");
    }
    const int n = settings.substeps_per_interval;
    const double h = (t1 - t0) / n;
    Vec x = std::move(x0);
    for (int i = 0; i < n; ++i) {
        x = rk4_step(rhs, t0 + i * h, x, h);
    }
    return x;
}

/// Piecewise polynomial solution produced by the adaptive integrator,
/// queryable at any time in [start_time, end_time].
class DenseSolution {
public:
    struct Segment {
        double t0;
        double h;
        Eigen::VectorXd r1, r2, r3, r4, r5;
    };

    DenseSolution(std::vector<Segment> segments, double t_start, double t_end)
        : segments_(std::move(segments)), t_start_(t_start), t_end_(t_end) {
        if (segments_.empty()) throw std::invalid_argument("DenseSolution: no segments");
    }

    double start_time() const noexcept { return t_start_; }
    double end_time() const noexcept { return t_end_; }
    int step_count() const noexcept { return static_cast<int>(segments_.size()); }

    Eigen::VectorXd at(double t) const {
        const double slack = 1e-9 * (1.0 + std::abs(t_end_ - t_start_));
        if (t < t_start_ - slack || t > t_end_ + slack) {
            throw std::out_of_range("DenseSolution: query time outside integration interval");
        }
        // Last segment whose start does not exceed t.
        auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                                   [](double value, const Segment& s) { return value < s.t0; });
        if (it != segments_.begin()) --it;
        const Segment& s = *it;
        const double theta = std::clamp((t - s.t0) / s.h, 0.0, 1.0);
        const double theta1 = 1.0 - theta;
        return s.r1 + theta * (s.r2 + theta1 * (s.r3 + theta * (s.r4 + theta1 * s.r5)));
    }

private:
    std::vector<Segment> segments_;
    double t_start_;
    double t_end_;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double dp_c2 = 1.0 / 5, dp_c3 = 3.0 / 10, dp_c4 = 4.0 / 5, dp_c5 = 8.0 / 9;
inline constexpr double dp_a21 = 1.0 / 5;
inline constexpr double dp_a31 = 3.0 / 40, dp_a32 = 9.0 / 40;
inline constexpr double dp_a41 = 44.0 / 45, dp_a42 = -56.0 / 15, dp_a43 = 32.0 / 9;
inline constexpr double dp_a51 = 19372.0 / 6561, dp_a52 = -25360.0 / 2187, dp_a53 = 64448.0 / 6561,
                        dp_a54 = -212.0 / 729;
inline constexpr double dp_a61 = 9017.0 / 3168, dp_a62 = -355.0 / 33, dp_a63 = 46732.0 / 5247,
                        dp_a64 = 49.0 / 176, dp_a65 = -5103.0 / 18656;
inline constexpr double dp_b1 = 35.0 / 384, dp_b3 = 500.0 / 1113, dp_b4 = 125.0 / 192,
                        dp_b5 = -2187.0 / 6784, dp_b6 = 11.0 / 84;
// Difference between the 5th- and embedded 4th-order weights.
inline constexpr double dp_e1 = 71.0 / 57600, dp_e3 = -71.0 / 16695, dp_e4 = 71.0 / 1920,
                        dp_e5 = -17253.0 / 339200, dp_e6 = 22.0 / 525, dp_e7 = -1.0 / 40;
// Dense-output weights for the 4th-order continuous extension.
inline constexpr double dp_d1 = -12715105075.0 / 11282082432.0;
inline constexpr double dp_d3 = 87487479700.0 / 32700410799.0;
inline constexpr double dp_d4 = -10690763975.0 / 1880347072.0;
inline constexpr double dp_d5 = 701980252875.0 / 199316789632.0;
inline constexpr double dp_d6 = -1453857185.0 / 822651844.0;
inline constexpr double dp_d7 = 69997945.0 / 29380423.0;

inline double scaled_rms_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& scale) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double q = v[i] / scale[i];
        acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace detail

/// Integrates x' = rhs(t, x) from t0 to t1 with the Dormand-Prince 5(4)
/// embedded pair and returns a dense solution. Local error is controlled to
/// abs_tol + rel_tol * |x| per component; a step size falling below
/// 1e-12 * (t1 - t0) raises an error.
template <class Rhs>
DenseSolution integrate_adaptive(Rhs&& rhs, double t0, double t1, Eigen::VectorXd x0,
                                 const IntegratorSettings& settings) {
    using namespace detail;
    if (!(t1 > t0)) throw std::invalid_argument("integrate_adaptive: t1 must exceed t0");
    if (!(settings.abs_tol > 0.0) || !(settings.rel_tol > 0.0)) {
        throw std::invalid_argument("integrate_adaptive: tolerances must be positive");
    }
    if (!x0.allFinite()) throw std::invalid_argument("integrate_adaptive: non-finite initial state");

    const double span = t1 - t0;
    const double h_min = 1e-12 * span;
    const double atol = settings.abs_tol;
    const double rtol = settings.rel_tol;
    const Eigen::Index n = x0.size();

    double t = t0;
    Eigen::VectorXd y = std::move(x0);
    Eigen::VectorXd k1 = rhs(t, y);

    // Initial step size: curvature probe along an explicit Euler step.
    double h;
    {
        Eigen::VectorXd scale = (atol + rtol * y.array().abs()).matrix();
        const double d0 = scaled_rms_norm(y, scale);
        const double d1 = scaled_rms_norm(k1, scale);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, span);
        const Eigen::VectorXd probe = rhs(t + h0, Eigen::VectorXd(y + h0 * k1));
        const double d2 = scaled_rms_norm(probe - k1, scale) / h0;
        const double d12 = std::max(d1, d2);
        const double h1 = d12 > 1e-15 ? std::pow(0.01 / d12, 0.2) : std::max(1e-6, h0 * 1e-3);
        h = std::min({100.0 * h0, h1, span});
    }

    std::vector<DenseSolution::Segment> segments;
    bool previous_rejected = false;

    while (t < t1) {
        h = std::min(h, t1 - t);

        const Eigen::VectorXd k2 = rhs(t + dp_c2 * h, Eigen::VectorXd(y + h * (dp_a21 * k1)));
        const Eigen::VectorXd k3 = rhs(t + dp_c3 * h, Eigen::VectorXd(y + h * (dp_a31 * k1 + dp_a32 * k2)));
        const Eigen::VectorXd k4 =
            rhs(t + dp_c4 * h, Eigen::VectorXd(y + h * (dp_a41 * k1 + dp_a42 * k2 + dp_a43 * k3)));
        const Eigen::VectorXd k5 = rhs(
            t + dp_c5 * h, Eigen::VectorXd(y + h * (dp_a51 * k1 + dp_a52 * k2 + dp_a53 * k3 + dp_a54 * k4)));
        const Eigen::VectorXd k6 =
            rhs(t + h, Eigen::VectorXd(y + h * (dp_a61 * k1 + dp_a62 * k2 + dp_a63 * k3 + dp_a64 * k4 +
                                                dp_a65 * k5)));
        const Eigen::VectorXd y_next =
            y + h * (dp_b1 * k1 + dp_b3 * k3 + dp_b4 * k4 + dp_b5 * k5 + dp_b6 * k6);
        const Eigen::VectorXd k7 = rhs(t + h, y_next);

        double err = std::numeric_limits<double>::infinity();
        if (y_next.allFinite()) {
            const Eigen::VectorXd err_vec =
                h * (dp_e1 * k1 + dp_e3 * k3 + dp_e4 * k4 + dp_e5 * k5 + dp_e6 * k6 + dp_e7 * k7);
            Eigen::VectorXd scale(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                scale[i] = atol + rtol * std::max(std::abs(y[i]), std::abs(y_next[i]));
            }
            err = scaled_rms_norm(err_vec, scale);
        }

        if (err <= 1.0) {
            DenseSolution::Segment seg;
            seg.t0 = t;
            seg.h = h;
            seg.r1 = y;
            seg.r2 = y_next - y;
            seg.r3 = h * k1 - seg.r2;
            seg.r4 = seg.r2 - h * k7 - seg.r3;
            seg.r5 = h * (dp_d1 * k1 + dp_d3 * k3 + dp_d4 * k4 + dp_d5 * k5 + dp_d6 * k6 + dp_d7 * k7);
            segments.push_back(std::move(seg));

            t += h;
            y = y_next;
            k1 = k7;  // first-same-as-last

            double factor = 0.9 * std::pow(std::max(err, 1e-300), -0.2);
            factor = std::clamp(factor, 0.2, previous_rejected ? 1.0 : 5.0);
            h *= factor;
            previous_rejected = false;
        } else {
            double factor = std::isfinite(err) ? 0.9 * std::pow(err, -0.2) : 0.1;
            h *= std::clamp(factor, 0.1, 0.9);
            previous_rejected = true;
        }

        if (t < t1 && h < h_min) {
            throw std::runtime_error("integrate_adaptive: step size underflow at t = " + std::to_string(t));
        }
    }

    return DenseSolution(std::move(segments), t0, t1);
}

// =============================================================================
// Augmented prediction
// =============================================================================

/// Advances the mass-spring state over [t0, t1] with the forcing
/// theta(t) = evaluate_fourier(model, coeffs, t) held to the given (constant)
/// coefficients. Uses the fixed-step RK4 path; the coefficients themselves
/// are not evolved.
inline StateVector augmented_predict(const StateVector& state, std::span<const double> coeffs,
                                     const FourierModel& model, const MassSpringParams& params, double t0,
                                     double t1, const IntegratorSettings& settings) {
    if (static_cast<int>(coeffs.size()) != model.coefficient_count()) {
        throw std::invalid_argument("augmented_predict: coefficient count does not match model");
    }
    auto rhs = [&](double t, const Eigen::Vector2d& x) -> Eigen::Vector2d {
        const double theta = evaluate_fourier(model, coeffs, t);
        const StateVector dx = mass_spring_rhs(t, StateVector{x[0], x[1]}, params, theta);
        return {dx.position, dx.velocity};
    };
    const Eigen::Vector2d x1 =
        integrate_fixed(rhs, t0, t1, Eigen::Vector2d(state.position, state.velocity), settings);
    return {x1[0], x1[1]};
}

}  // namespace fenkf
