#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fenkf {

/// Sine/cosine combination model for a time-varying signal,
///
///   theta_est(t) = sum_i ( c_{2i-1} sin(w_i t) + c_{2i} cos(w_i t) ),
///
/// defined by an ordered list of M positive, pairwise distinct angular
/// frequencies. Pair i owns coefficient slots 2i-1 (sin) and 2i (cos) in
/// 1-based counting, giving 2M coefficients in total.
class FourierModel {
public:
    explicit FourierModel(std::vector<double> angular_frequencies)
        : omega_(std::move(angular_frequencies)) {
        if (omega_.empty()) {
            throw std::invalid_argument("FourierModel: at least one frequency required");
        }
        for (std::size_t i = 0; i < omega_.size(); ++i) {
            if (!(omega_[i] > 0.0)) {
                throw std::invalid_argument("FourierModel: angular frequencies must be positive");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (omega_[i] == omega_[j]) {
                    throw std::invalid_argument("FourierModel: angular frequencies must be distinct");
                }
            }
        }
    }

    const std::vector<double>& angular_frequencies() const noexcept { return omega_; }
    int pair_count() const noexcept { return static_cast<int>(omega_.size()); }
    int coefficient_count() const noexcept { return 2 * pair_count(); }

private:
    std::vector<double> omega_;
};

/// Evaluates the sine/cosine combination at time t. The coefficient span must
/// hold exactly 2M values in the model's slot layout.
inline double evaluate_fourier(const FourierModel& model, std::span<const double> coeffs, double t) {
    if (static_cast<int>(coeffs.size()) != model.coefficient_count()) {
        throw std::invalid_argument("evaluate_fourier: expected " +
                                    std::to_string(model.coefficient_count()) + " coefficients, got " +
                                    std::to_string(coeffs.size()));
    }
    double sum = 0.0;
    const auto& omega = model.angular_frequencies();
    for (std::size_t i = 0; i < omega.size(); ++i) {
        sum += coeffs[2 * i] * std::sin(omega[i] * t) + coeffs[2 * i + 1] * std::cos(omega[i] * t);
    }
    return sum;
}

inline const std::vector<std::string>& preset_model_names() {
    static const std::vector<std::string> names = {"two-term", "low", "high", "mixed", "lower"};
    return names;
}

/// Built-in frequency sets, keyed by their CLI-facing names:
///   two-term  w = [1]
///   low       w = [1, 0.5, 0.25, 0.125]
///   high      w = [1, 1.125, 1.25, 1.5]
///   mixed     w = [1, 1.5, 0.5, 1.75, 0.25]
///   lower     w = [0.125, 0.0625, 0.03125, 0.0156]
inline FourierModel preset_model(std::string_view name) {
    if (name == "two-term") return FourierModel({1.0});
    if (name == "low") return FourierModel({1.0, 0.5, 0.25, 0.125});
    if (name == "high") return FourierModel({1.0, 1.125, 1.25, 1.5});
    if (name == "mixed") return FourierModel({1.0, 1.5, 0.5, 1.75, 0.25});
    if (name == "lower") return FourierModel({0.125, 0.0625, 0.03125, 0.0156});
    std::string msg = "unknown model preset '" + std::string(name) + "'; valid presets:";
    for (const auto& n : preset_model_names()) msg += " " + n;
    throw std::invalid_argument(msg);
}

/// Classical Fourier coefficients of a P-periodic function up to order Q,
/// computed by quadrature:
///   a_q = (2/P) \int_0^P h(t) cos(2 pi q t / P) dt   (a_0 likewise, q = 0)
///   b_q = (2/P) \int_0^P h(t) sin(2 pi q t / P) dt
struct FourierOracleResult {
    double a0 = 0.0;
    std::vector<double> a;  // a_1 .. a_Q
    std::vector<double> b;  // b_1 .. b_Q
    double period = 0.0;
};

/// Computes classical Fourier coefficients of `h` by composite Simpson
/// quadrature over one period. `quad_points` is the number of quadrature
/// nodes (>= 64); the subinterval count is rounded up to the next even
/// number as Simpson's rule requires.
template <class Fn>
FourierOracleResult fourier_coefficients_oracle(Fn&& h, double period, int order, int quad_points) {
    if (!(period > 0.0)) throw std::invalid_argument("fourier_coefficients_oracle: period must be positive");
    if (order < 1) throw std::invalid_argument("fourier_coefficients_oracle: order must be >= 1");
    if (quad_points < 64) throw std::invalid_argument("fourier_coefficients_oracle: need at least 64 quadrature points");

    int intervals = quad_points - 1;
    if (intervals % 2 != 0) ++intervals;
    const double step = period / intervals;

    // Simpson weights 1,4,2,...,2,4,1 scaled by step/3.
    auto integrate = [&](auto&& f) {
        double acc = f(0.0) + f(period);
        for (int i = 1; i < intervals; ++i) {
            acc += (i % 2 == 1 ? 4.0 : 2.0) * f(i * step);
        }
        return acc * step / 3.0;
    };

    const double two_pi_over_p = 2.0 * std::numbers::pi / period;
    FourierOracleResult result;
    result.period = period;
    result.a0 = (2.0 / period) * integrate([&](double t) { return h(t); });
    result.a.resize(order);
    result.b.resize(order);
    for (int q = 1; q <= order; ++q) {
        result.a[q - 1] =
            (2.0 / period) * integrate([&](double t) { return h(t) * std::cos(two_pi_over_p * q * t); });
        result.b[q - 1] =
            (2.0 / period) * integrate([&](double t) { return h(t) * std::sin(two_pi_over_p * q * t); });
    }
    return result;
}

}  // namespace fenkf
