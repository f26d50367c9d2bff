#ifndef BICONSERVE_PROFILE_HPP
#define BICONSERVE_PROFILE_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "biconserve/errors.hpp"
#include "biconserve/jet.hpp"
#include "biconserve/ode45.hpp"

namespace biconserve {

/// Sampled solution of the intrinsic curvature ODE
///     24 (c - K) K'' + 33 (K')^2 + 64 K (c - K)^2 = 0
/// along arc length u of the curvature-gradient direction. K' is stored
/// explicitly; downstream metric coefficients need it at full accuracy.
struct CurvatureProfile {
    double c = 0.0;
    std::vector<double> u;
    std::vector<double> k;
    std::vector<double> kp;
    bool truncated = false;     // span was shortened at the admissibility margin
    double requested_end = 0.0; // end of the span originally asked for

    std::size_t size() const { return u.size(); }
    double span() const { return u.empty() ? 0.0 : u.back() - u.front(); }

    /// K' > eps_dom and c - K > eps_dom sample-wise.
    void check_invariants() const {
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double eps = eps_dom(c, k[i]);
            if (!(c - k[i] > eps))
                throw DomainError("CurvatureProfile: c - K <= eps_dom at u = " +
                                  std::to_string(u[i]));
            if (!(kp[i] > eps))
                throw DomainError("CurvatureProfile: K' <= eps_dom at u = " +
                                  std::to_string(u[i]));
            if (i > 0 && !(u[i] > u[i - 1]))
                throw GridError("CurvatureProfile: u grid not strictly increasing");
        }
    }
};

/// K'' from the curvature ODE. Works on plain doubles and on Taylor jets.
template <class T>
inline T ode_rhs_kernel(double c, const T& k, const T& kp) {
    const T cmk = c - k;
    return -(33.0 * kp * kp + 64.0 * k * cmk * cmk) / (24.0 * cmk);
}

inline double ode_rhs(double c, double k, double kp) {
    if (!(c - k > eps_dom(c, k)))
        throw DomainError("ode_rhs: c - K <= eps_dom (singular denominator)");
    return ode_rhs_kernel(c, k, kp);
}

/// K and its first three u-derivatives at a state (K, K'). K'' comes from
/// the ODE, K''' from differentiating it once in jet arithmetic.
struct KDerivs {
    double k, kp, kpp, kppp;
};

inline KDerivs k_derivs(double c, double k, double kp) {
    const double kpp = ode_rhs(c, k, kp);
    const Jet1 kj(k, kp), kpj(kp, kpp);
    const Jet1 r = ode_rhs_kernel(c, kj, kpj);
    return {k, kp, kpp, r.d1};
}

/// Geometer's Laplacian of a u-only function in the profile frame:
/// Delta h = -h'' - (3 K' / (8 (c - K))) h'.
inline double frame_laplacian(double c, double k, double kp, double h1, double h2) {
    return -h2 - (3.0 * kp / (8.0 * (c - k))) * h1;
}

/// Integrates the curvature ODE over [u_begin, u_end] with an adaptive
/// Dormand-Prince pair, halting before c - K or K' reach eps_dom, and
/// resamples the surviving span onto a uniform grid of n_samples points.
inline CurvatureProfile integrate_profile(double c, double k0, double kp0,
                                          double u_begin, double u_end, double tol,
                                          std::size_t n_samples = 201) {
    if (!(c - k0 > eps_dom(c, k0)))
        throw DomainError("integrate_profile: c - k0 <= eps_dom");
    if (!(kp0 > eps_dom(c, k0)))
        throw DomainError("integrate_profile: kprime0 <= eps_dom");
    if (u_end < u_begin)
        throw GridError("integrate_profile: u span must be non-decreasing");

    CurvatureProfile prof;
    prof.c = c;
    prof.requested_end = u_end;

    if (u_end == u_begin || n_samples < 2) {
        prof.u = {u_begin};
        prof.k = {k0};
        prof.kp = {kp0};
        return prof;
    }

    const auto rhs = [c](double, const State<2>& y) -> State<2> {
        return {y[1], ode_rhs_kernel(c, y[0], y[1])};
    };
    const auto margin = [c](double, const State<2>& y) {
        const double eps = eps_dom(c, y[0]);
        return std::min(c - y[0] - eps, y[1] - eps);
    };

    Ode45Options opt;
    opt.rel_tol = tol;
    opt.abs_tol = tol * 1e-2;

    // First pass finds the surviving span end, second pass samples it.
    auto probe = integrate_dp45<2>(rhs, {k0, kp0}, {u_begin, u_end}, margin, opt);
    double end = probe.u_end;
    prof.truncated = probe.truncated;
    if (prof.truncated) end = u_begin + (end - u_begin) * (1.0 - 1e-9);
    if (!(end > u_begin))
        throw DomainError("integrate_profile: admissible span is empty");

    std::vector<double> pts(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        pts[i] = u_begin + (end - u_begin) * static_cast<double>(i) /
                               static_cast<double>(n_samples - 1);
    pts.back() = end;

    auto sol = integrate_dp45<2>(rhs, {k0, kp0}, pts, margin, opt);
    if (sol.samples.size() != n_samples)
        throw SolveError("integrate_profile: resampling pass truncated early", sol.u_end);

    prof.u.resize(n_samples);
    prof.k.resize(n_samples);
    prof.kp.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        prof.u[i] = sol.samples[i].u;
        prof.k[i] = sol.samples[i].y[0];
        prof.kp[i] = sol.samples[i].y[1];
    }
    prof.check_invariants();
    return prof;
}

/// Residual of (c-K) dK - |grad K|^2 - (8/3) K (c-K)^2 with the intrinsic
/// frame expressions dK = -K'' - 3(K')^2/(8(c-K)) and |grad K|^2 = (K')^2.
/// K'' defaults to the ODE right-hand side, which makes the residual an
/// algebraic identity check of the ODE <-> PDE equivalence; pass kpp to
/// evaluate against a differenced or perturbed second derivative instead.
inline std::vector<double> pde_residual(const CurvatureProfile& prof,
                                        const std::optional<std::vector<double>>& kpp =
                                            std::nullopt) {
    if (kpp && kpp->size() != prof.size())
        throw GridError("pde_residual: kpp override has wrong length");
    std::vector<double> res(prof.size());
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double k = prof.k[i], kprime = prof.kp[i], c = prof.c;
        if (!(c - k > eps_dom(c, k)))
            throw DomainError("pde_residual: c - K <= eps_dom");
        const double k2 = kpp ? (*kpp)[i] : ode_rhs(c, k, kprime);
        const double lap = -k2 - 3.0 * kprime * kprime / (8.0 * (c - k));
        res[i] = (c - k) * lap - kprime * kprime - (8.0 / 3.0) * k * (c - k) * (c - k);
    }
    return res;
}

} // namespace biconserve

#endif
