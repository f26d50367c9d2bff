#ifndef BICONSERVE_ODE45_HPP
#define BICONSERVE_ODE45_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "biconserve/errors.hpp"

namespace biconserve {

// Dormand-Prince 5(4) embedded pair with adaptive step control.
//
// Output samples are produced by landing integration steps exactly on the
// requested points (the step size is clamped to the next sample), so stored
// samples carry the full accuracy of the accepted solution rather than an
// interpolant. A cubic Hermite interpolant over the last step is used only
// to locate halting events.

template <std::size_t N>
using State = std::array<double, N>;

struct Ode45Options {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 4000000;
};

// Thrown by a right-hand side that cannot be evaluated at a trial state;
// the integrator reacts by rejecting the step and shrinking h.
struct StepRejected {};

template <std::size_t N>
struct Ode45Sample {
    double u;
    State<N> y;
};

template <std::size_t N>
struct Ode45Solution {
    std::vector<Ode45Sample<N>> samples;
    bool truncated = false;   // halt margin reached before the requested end
    double u_end = 0.0;       // where integration actually stopped
    std::size_t n_steps = 0;
    std::size_t n_rejected = 0;
};

namespace detail {

template <std::size_t N>
inline State<N> axpy(const State<N>& y, double h, const State<N>& d) {
    State<N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + h * d[i];
    return out;
}

template <std::size_t N>
inline State<N> hermite(double u0, const State<N>& y0, const State<N>& f0,
                        double u1, const State<N>& y1, const State<N>& f1,
                        double u) {
    const double h = u1 - u0;
    const double t = (u - u0) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    State<N> out;
    for (std::size_t i = 0; i < N; ++i)
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    return out;
}

} // namespace detail

/// Integrates y' = rhs(u, y) from sample_points.front() to
/// sample_points.back(), recording the state at every sample point.
/// margin(u, y) > 0 must hold on the admissible set; integration truncates
/// at the first crossing of margin = 0 (located on the step's Hermite
/// interpolant) and the remaining sample points are dropped.
template <std::size_t N, class Rhs, class Margin>
Ode45Solution<N> integrate_dp45(Rhs&& rhs, const State<N>& y0,
                                const std::vector<double>& sample_points,
                                Margin&& margin, const Ode45Options& opt = {}) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // 5th-order minus embedded 4th-order weights (error estimator).
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    if (sample_points.empty())
        throw GridError("integrate_dp45: no sample points requested");

    Ode45Solution<N> sol;
    double u = sample_points.front();
    State<N> y = y0;
    sol.samples.push_back({u, y});
    sol.u_end = u;
    std::size_t next = 1;
    if (next >= sample_points.size()) return sol; // empty span

    const double u_final = sample_points.back();
    const double span = u_final - u;
    if (!(span > 0.0)) throw GridError("integrate_dp45: sample points must increase");

    State<N> f = rhs(u, y);
    double h = std::min({opt.max_step, span, span / 64.0 + 1e-12});

    while (next < sample_points.size()) {
        if (sol.n_steps + sol.n_rejected > opt.max_steps)
            throw SolveError("integrate_dp45: max step count exceeded", h);
        if (h < 1e-14 * std::max(1.0, std::abs(u)))
            throw SolveError("integrate_dp45: step size underflow", h);

        if (u + h > sample_points[next]) h = sample_points[next] - u;

        bool ok = true;
        double err = 0.0;
        State<N> y5{}, f_new{};
        try {
            const State<N> k1 = f;
            const State<N> k2 = rhs(u + h * a21, detail::axpy(y, h * a21, k1));
            State<N> tmp;
            for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
            const State<N> k3 = rhs(u + h * 3.0 / 10, tmp);
            for (std::size_t i = 0; i < N; ++i)
                tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            const State<N> k4 = rhs(u + h * 4.0 / 5, tmp);
            for (std::size_t i = 0; i < N; ++i)
                tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            const State<N> k5 = rhs(u + h * 8.0 / 9, tmp);
            for (std::size_t i = 0; i < N; ++i)
                tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                     a65 * k5[i]);
            const State<N> k6 = rhs(u + h, tmp);
            for (std::size_t i = 0; i < N; ++i)
                y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                                    b6 * k6[i]);
            const State<N> k7 = rhs(u + h, y5); // FSAL
            f_new = k7;

            for (std::size_t i = 0; i < N; ++i) {
                const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                       e6 * k6[i] + e7 * k7[i]);
                const double sc = opt.abs_tol +
                                  opt.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
                err += (ei / sc) * (ei / sc);
            }
            err = std::sqrt(err / static_cast<double>(N));
            if (!std::isfinite(err)) ok = false;
        } catch (const StepRejected&) {
            ok = false;
        }

        if (!ok || err > 1.0) {
            ++sol.n_rejected;
            const double shrink = ok ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
            h *= std::min(shrink, 0.9);
            continue;
        }

        const double u_new = u + h;
        if (!(margin(u_new, y5) > 0.0)) {
            // Bisect margin = 0 on the Hermite interpolant over this step.
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 80 && (hi - lo) > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                const State<N> ym =
                    detail::hermite(u, y, f, u_new, y5, f_new, u + mid * h);
                if (margin(u + mid * h, ym) > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            sol.truncated = true;
            sol.u_end = u + lo * h;
            const State<N> y_stop = detail::hermite(u, y, f, u_new, y5, f_new, sol.u_end);
            // Keep only sample points inside the surviving span.
            sol.samples.push_back({sol.u_end, y_stop});
            return sol;
        }

        ++sol.n_steps;
        u = u_new;
        y = y5;
        f = f_new;
        sol.u_end = u;

        while (next < sample_points.size() &&
               std::abs(u - sample_points[next]) <= 1e-12 * std::max(1.0, std::abs(u))) {
            sol.samples.push_back({sample_points[next], y});
            ++next;
        }

        const double grow = std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-16), -0.2)));
        h = std::min({h * grow, opt.max_step, u_final - u + 1e-30});
        if (h <= 0.0) h = 1e-12;
    }
    return sol;
}

} // namespace biconserve

#endif
