#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqm {

/// Raised when the integrator cannot continue: step-size underflow,
/// non-finite state or an exhausted step budget.
class IntegrationError : public std::runtime_error {
  public:
    IntegrationError(const std::string& what, double time, double state_norm)
        : std::runtime_error(what + " at t=" + std::to_string(time) +
                             " (|y|=" + std::to_string(state_norm) + ")"),
          time_(time),
          state_norm_(state_norm) {}
    double time() const noexcept { return time_; }
    double state_norm() const noexcept { return state_norm_; }

  private:
    double time_;
    double state_norm_;
};

struct Dopri5Options {
    double rel_tol = 1e-6;
    double abs_tol = 1e-9;
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;  // 0 selects the step automatically
    std::size_t max_steps = 50'000'000;
};

struct IntegrationStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evaluations = 0;

    IntegrationStats& operator+=(const IntegrationStats& o) {
        accepted += o.accepted;
        rejected += o.rejected;
        rhs_evaluations += o.rhs_evaluations;
        return *this;
    }
};

/// Dormand–Prince 5(4) with FSAL, embedded error control and the standard
/// 4th-order continuous extension for output at arbitrary times.
///
/// `rhs(t, y, dydt)` takes spans; `observe(i, t, y)` is called once for each
/// output time, in order, with the interpolated state. Output times must be
/// non-decreasing and >= t0; y holds the state at the last output time on
/// return.
template <class Rhs, class Observer>
IntegrationStats dopri5(Rhs&& rhs, std::vector<double>& y, double t0,
                        std::span<const double> output_times, const Dopri5Options& opt,
                        Observer&& observe) {
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                     a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                     d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                     d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    const std::size_t n = y.size();
    IntegrationStats stats;
    if (output_times.empty()) return stats;

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    std::vector<double> tmp(n), y_new(n), dense(n);
    auto eval = [&](double t, const std::vector<double>& in, std::vector<double>& out) {
        rhs(t, std::span<const double>(in), std::span<double>(out));
        ++stats.rhs_evaluations;
    };
    auto state_norm = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (double e : v) s += e * e;
        return std::sqrt(s);
    };
    auto scaled_norm = [&](const std::vector<double>& v, const std::vector<double>& ref) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sk = opt.abs_tol + opt.rel_tol * std::abs(ref[i]);
            s += (v[i] / sk) * (v[i] / sk);
        }
        return std::sqrt(s / static_cast<double>(n));
    };

    double t = t0;
    std::size_t next_out = 0;
    while (next_out < output_times.size() && output_times[next_out] <= t) {
        observe(next_out, output_times[next_out], std::span<const double>(y));
        ++next_out;
    }
    if (next_out == output_times.size()) return stats;
    const double t_end = output_times.back();

    eval(t, y, k1);

    double h = opt.initial_step;
    if (h <= 0.0) {
        // Hairer & Wanner's starting-step heuristic.
        const double d0 = scaled_norm(y, y);
        const double dd1 = scaled_norm(k1, y);
        double h0 = (d0 < 1e-10 || dd1 < 1e-10) ? 1e-6 : 0.01 * d0 / dd1;
        h0 = std::min(h0, opt.max_step);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h0 * k1[i];
        eval(t + h0, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) k3[i] = k2[i] - k1[i];
        const double dd2 = scaled_norm(k3, y) / h0;
        const double dmax = std::max(dd1, dd2);
        const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
        h = std::min({100.0 * h0, h1, opt.max_step});
    }

    constexpr double safety = 0.9, fac_min = 0.2, fac_max = 10.0;
    bool last_rejected = false;
    std::size_t steps = 0;

    while (next_out < output_times.size()) {
        if (++steps > opt.max_steps) {
            throw IntegrationError("step budget exhausted", t, state_norm(y));
        }
        h = std::min(h, opt.max_step);
        const bool reaches_end = t + h >= t_end;
        if (reaches_end) h = t_end - t;
        if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
            throw IntegrationError("step size underflow", t, state_norm(y));
        }

        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        eval(t + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        eval(t + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        eval(t + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        eval(t + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] +
                     h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        eval(t + h, tmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            y_new[i] = y[i] +
                       h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        eval(t + h, y_new, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            const double sk =
                opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
            err += (e / sk) * (e / sk);
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (!std::isfinite(err)) {
            ++stats.rejected;
            h *= fac_min;
            last_rejected = true;
            continue;
        }

        if (err <= 1.0) {
            const double t_new = reaches_end ? t_end : t + h;
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(y_new[i])) {
                    throw IntegrationError("non-finite state", t_new, state_norm(y));
                }
            }
            // Emit every output time inside (t, t_new] from the continuous extension.
            if (next_out < output_times.size() && output_times[next_out] <= t_new) {
                // rcont2..5 reuse tmp, k2, k3, k4; none is needed again this step.
                for (std::size_t i = 0; i < n; ++i) {
                    const double ydiff = y_new[i] - y[i];
                    const double bspl = h * k1[i] - ydiff;
                    const double r5 = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                           d6 * k6[i] + d7 * k7[i]);
                    tmp[i] = ydiff;
                    k2[i] = bspl;
                    k3[i] = ydiff - h * k7[i] - bspl;
                    k4[i] = r5;
                }
                while (next_out < output_times.size() && output_times[next_out] <= t_new) {
                    const double theta = (output_times[next_out] - t) / h;
                    const double theta1 = 1.0 - theta;
                    for (std::size_t i = 0; i < n; ++i) {
                        dense[i] = y[i] + theta * (tmp[i] + theta1 * (k2[i] + theta * (k3[i] +
                                                                theta1 * k4[i])));
                    }
                    observe(next_out, output_times[next_out], std::span<const double>(dense));
                    ++next_out;
                }
            }
            y.swap(y_new);
            k1.swap(k7);
            t = t_new;
            ++stats.accepted;

            double fac = safety * std::pow(std::max(err, 1e-10), -0.2);
            fac = std::clamp(fac, fac_min, fac_max);
            if (last_rejected) fac = std::min(fac, 1.0);
            h *= fac;
            last_rejected = false;
        } else {
            ++stats.rejected;
            const double fac = std::max(fac_min, safety * std::pow(err, -0.2));
            h *= fac;
            last_rejected = true;
        }
    }
    return stats;
}

}  // namespace cqm
