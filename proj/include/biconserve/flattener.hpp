#ifndef BICONSERVE_FLATTENER_HPP
#define BICONSERVE_FLATTENER_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "biconserve/conformal.hpp"
#include "biconserve/errors.hpp"
#include "biconserve/field.hpp"
#include "biconserve/jet.hpp"
#include "biconserve/metric.hpp"
#include "biconserve/ode45.hpp"
#include "biconserve/profile.hpp"
#include "biconserve/report.hpp"
#include "biconserve/spline.hpp"
#include "biconserve/stencils.hpp"

namespace biconserve {

/// State of the 4th-order flattening ODE: r(u) and derivatives up to third
/// order, aligned with a CurvatureProfile's u grid.
struct ExponentProfile {
    std::vector<double> u;
    std::vector<double> r, rp, rpp, rppp;

    std::size_t size() const { return u.size(); }

    static ExponentProfile constant(const CurvatureProfile& prof, double value) {
        ExponentProfile e;
        e.u = prof.u;
        e.r.assign(prof.size(), value);
        e.rp.assign(prof.size(), 0.0);
        e.rpp.assign(prof.size(), 0.0);
        e.rppp.assign(prof.size(), 0.0);
        return e;
    }
};

/// K_r of g_r = (c-K)^r g for a u-only exponent function r, from
///   K_r = (c-K)^{-r} ( (3-4r)/3 K + (1/2) log(c-K) Delta r + (c-K)^{-1} r' K' )
/// with the frame Laplacian Delta r = -r'' - (3K'/(8(c-K))) r'.
/// Evaluates in any scalar type, so jets propagate u-derivatives exactly.
template <class T>
inline T kr_kernel(double c, const T& k, const T& kp, const T& r, const T& rp,
                   const T& rpp) {
    const T cmk = c - k;
    const T lg = log(cmk);
    const T lap_r = -rpp - (3.0 * kp / (8.0 * cmk)) * rp;
    const T inner = ((3.0 - 4.0 * r) / 3.0) * k + 0.5 * lg * lap_r + rp * kp / cmk;
    return pow(cmk, -r) * inner;
}

inline std::vector<double> kr_of_function_r(const CurvatureProfile& prof,
                                            const ExponentProfile& rprof) {
    if (rprof.size() != prof.size())
        throw GridError("kr_of_function_r: exponent profile grid mismatch");
    std::vector<double> kr(prof.size());
    for (std::size_t i = 0; i < prof.size(); ++i) {
        if (!(prof.c - prof.k[i] > eps_dom(prof.c, prof.k[i])))
            throw DomainError("kr_of_function_r: c - K <= eps_dom");
        kr[i] = kr_kernel(prof.c, prof.k[i], prof.kp[i], rprof.r[i], rprof.rp[i],
                          rprof.rpp[i]);
    }
    return kr;
}

namespace detail {

/// phi = (1/4) log(c - K_r) + (r/2) log(c - K) as a degree-2 jet, given a
/// K_r jet whose second slot may come either from a trial r'''' (shooting)
/// or from one differencing level of K_r' (grid residual).
inline Jet2 varphi_jet(double c, const Jet2& k2, const Jet2& r2, const Jet2& kr2) {
    return 0.25 * log(c - kr2) + 0.5 * r2 * log(c - k2);
}

/// Exact pointwise flattening residual R = K + Delta phi for a full local
/// state (r, r', r'', r''', r''''). Affine in r''''.
inline double flatten_residual_point(double c, double k, double kp, double r, double rp,
                                     double rpp, double rppp, double r4) {
    const KDerivs kd = k_derivs(c, k, kp);
    const Jet2 k2(k, kp, kd.kpp);
    const Jet2 kp2(kp, kd.kpp, kd.kppp);
    const Jet2 r2(r, rp, rpp), rp2(rp, rpp, rppp), rpp2(rpp, rppp, r4);
    const Jet2 kr2 = kr_kernel(c, k2, kp2, r2, rp2, rpp2);
    if (!(c - kr2.f > eps_dom(c, kr2.f)))
        throw InfeasibleError("flatten residual: c - K_r <= eps_dom");
    const Jet2 phi = varphi_jet(c, k2, r2, kr2);
    const double m = 3.0 * kp / (8.0 * (c - k));
    const double lap_phi = -phi.d2 - m * phi.d1;
    return k + lap_phi;
}

struct R4Solve {
    double r4 = 0.0;
    double residual = 0.0;
    bool degenerate = false;
};

/// Isolates r'''' from R(u; state; r'''') = 0 by secant on the scalar
/// dependence (the normal form is never expanded symbolically). Where
/// log(c-K) = 0 the residual does not depend on r''''; such samples are
/// flagged and keep the warm-start value only if the residual already
/// vanishes there.
inline R4Solve solve_r4(double c, double k, double kp, double r, double rp, double rpp,
                        double rppp, double warm_start, double res_tol) {
    R4Solve out;
    double q0 = warm_start;
    double r0 = flatten_residual_point(c, k, kp, r, rp, rpp, rppp, q0);
    const double dq = 1.0 + std::abs(q0);
    const double r1 = flatten_residual_point(c, k, kp, r, rp, rpp, rppp, q0 + dq);
    const double slope = (r1 - r0) / dq;

    if (!(std::abs(slope) > 1e-13) || !(std::abs(r0 / slope) < 1e10)) {
        out.degenerate = true;
        out.r4 = warm_start;
        out.residual = r0;
        if (std::abs(r0) > res_tol)
            throw SolveError("solve_r4: residual does not determine r'''' "
                             "(log(c-K) ~ 0) and is nonzero", std::abs(r0));
        return out;
    }

    double q = q0 - r0 / slope;
    double res = flatten_residual_point(c, k, kp, r, rp, rpp, rppp, q);
    // Residual is affine in r''''; keep a guarded secant loop regardless.
    for (int it = 0; it < 40 && std::abs(res) > res_tol; ++it) {
        const double denom = (res - r0) / (q - q0);
        if (!(std::abs(denom) > 0.0)) break;
        q0 = q;
        r0 = res;
        q = q - res / denom;
        res = flatten_residual_point(c, k, kp, r, rp, rpp, rppp, q);
    }
    if (std::abs(res) > res_tol)
        throw SolveError("solve_r4: could not zero the residual", std::abs(res));
    out.r4 = q;
    out.residual = res;
    return out;
}

} // namespace detail

/// Residual R(u) = K + Delta phi on the profile grid. K_r and K_r' are
/// evaluated analytically from the stored derivative states; the remaining
/// derivative level (K_r'') comes from one differencing pass of K_r'.
inline std::vector<double> flatten_residual(const CurvatureProfile& prof,
                                            const ExponentProfile& rprof) {
    if (rprof.size() != prof.size())
        throw GridError("flatten_residual: exponent profile grid mismatch");
    const std::size_t n = prof.size();
    if (n < 4) throw GridError("flatten_residual: need at least 4 samples");

    std::vector<double> kr(n), krp(n);
    std::string violations;
    std::size_t n_viol = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const KDerivs kd = k_derivs(prof.c, prof.k[i], prof.kp[i]);
        const Jet1 k1(kd.k, kd.kp), kp1(kd.kp, kd.kpp);
        const Jet1 r1(rprof.r[i], rprof.rp[i]);
        const Jet1 rp1(rprof.rp[i], rprof.rpp[i]);
        const Jet1 rpp1(rprof.rpp[i], rprof.rppp[i]);
        const Jet1 krj = kr_kernel(prof.c, k1, kp1, r1, rp1, rpp1);
        kr[i] = krj.f;
        krp[i] = krj.d1;
        if (!(prof.c - kr[i] > eps_dom(prof.c, kr[i]))) {
            if (++n_viol <= 8)
                violations += (violations.empty() ? "" : ", ") + std::to_string(prof.u[i]);
        }
    }
    if (n_viol > 0)
        throw InfeasibleError("flatten_residual: c - K_r <= eps_dom at " +
                              std::to_string(n_viol) + " samples (u = " + violations +
                              (n_viol > 8 ? ", ...)" : ")"));

    const double h = prof.u[1] - prof.u[0];
    std::vector<double> res(n);
    for (std::size_t i = 0; i < n; ++i) {
        const KDerivs kd = k_derivs(prof.c, prof.k[i], prof.kp[i]);
        const Jet2 k2(kd.k, kd.kp, kd.kpp);
        const Jet2 r2(rprof.r[i], rprof.rp[i], rprof.rpp[i]);
        const Jet2 kr2(kr[i], krp[i], d1_at4(krp, i, h));
        const Jet2 phi = detail::varphi_jet(prof.c, k2, r2, kr2);
        const double m = 3.0 * prof.kp[i] / (8.0 * (prof.c - prof.k[i]));
        res[i] = prof.k[i] + (-phi.d2 - m * phi.d1);
    }
    return res;
}

/// Literal evaluation of the initial-condition inequality: the left side is
/// K_r at u = 0 written through f and f', the margin is c minus it.
struct Feasibility {
    bool feasible = false;
    double margin = 0.0;
    double left_side = 0.0;
};

inline Feasibility feasibility_check(const CurvatureProfile& prof, double r0, double r0p,
                                     double r0pp) {
    if (prof.size() == 0) throw GridError("feasibility_check: empty profile");
    const double c = prof.c, k0 = prof.k.front(), kp0 = prof.kp.front();
    const double cmk = c - k0;
    if (!(cmk > eps_dom(c, k0)))
        throw DomainError("feasibility_check: c - K(0) <= eps_dom");
    const double f0 = 2.0 / std::sqrt(3.0) * std::sqrt(cmk);
    const double f0p = -kp0 / std::sqrt(3.0 * cmk);
    const double lhs = std::pow(cmk, -r0) *
                       ((3.0 - 4.0 * r0) / 3.0 * k0 +
                        0.5 * std::log(cmk) * (-r0pp + 3.0 * f0p / (4.0 * f0) * r0p) +
                        r0p * kp0 / cmk);
    Feasibility out;
    out.left_side = lhs;
    out.margin = c - lhs;
    out.feasible = out.margin > 0.0;
    return out;
}

enum class ExponentMethod { shooting, collocation };

struct FlattenerOptions {
    double shooting_tol = 1e-8;     // pointwise residual accepted by the r'''' isolation
    double collocation_tol = 1e-6;  // max-norm target of the collocation objective
    double ode_rel_tol = 1e-10;
    std::size_t max_iterations = 80;
};

struct TraceEntry {
    std::size_t iteration = 0;
    double residual_max = 0.0;
    double residual_l2 = 0.0;
    double step = 0.0;
};

struct ExponentSolution {
    ExponentProfile rprof;
    std::vector<TraceEntry> trace;
    double max_point_residual = 0.0; // exact pointwise residual along the solution
    std::size_t degenerate_samples = 0;
    ExponentMethod method = ExponentMethod::shooting;
};

/// Non-convergence carries the best iterate and the residual history.
struct ExponentSolveError : SolveError {
    ExponentSolveError(const std::string& what, ExponentSolution best_)
        : SolveError(what, best_.max_point_residual), best(std::move(best_)) {}
    ExponentSolution best;
};

namespace detail {

inline ExponentSolution solve_exponent_shooting(const CurvatureProfile& prof, double r0,
                                                double r0p, double r0pp, double r0ppp,
                                                const FlattenerOptions& opt) {
    ExponentSolution sol;
    sol.method = ExponentMethod::shooting;

    const double c = prof.c;
    double warm_r4 = 0.0;
    double worst = 0.0;
    std::size_t degen = 0;

    const double res_tol = std::max(opt.shooting_tol * 1e-3, 1e-12);
    const auto rhs = [&](double, const State<6>& y) -> State<6> {
        double kpp;
        try {
            kpp = ode_rhs_kernel(c, y[0], y[1]);
            const R4Solve r4 = solve_r4(c, y[0], y[1], y[2], y[3], y[4], y[5], warm_r4,
                                        res_tol);
            warm_r4 = r4.r4;
            if (r4.degenerate) ++degen;
            worst = std::max(worst, std::abs(r4.residual));
            return {y[1], kpp, y[3], y[4], y[5], r4.r4};
        } catch (const InfeasibleError&) {
            throw StepRejected{};
        }
    };
    const auto margin = [&](double, const State<6>& y) {
        const double eps = eps_dom(c, y[0]);
        double m = std::min(c - y[0] - eps, y[1] - eps);
        const double kr = kr_kernel(c, y[0], y[1], y[2], y[3], y[4]);
        m = std::min(m, c - kr - eps_dom(c, kr));
        return m;
    };

    Ode45Options oopt;
    oopt.rel_tol = opt.ode_rel_tol;
    oopt.abs_tol = opt.ode_rel_tol * 1e-2;

    const State<6> y0 = {prof.k.front(), prof.kp.front(), r0, r0p, r0pp, r0ppp};
    auto ode = integrate_dp45<6>(rhs, y0, prof.u, margin, oopt);
    if (ode.samples.size() != prof.size())
        throw InfeasibleError(
            "solve_exponent: feasibility margin hit at u = " + std::to_string(ode.u_end) +
            " before the profile end");

    sol.rprof.u = prof.u;
    sol.rprof.r.resize(prof.size());
    sol.rprof.rp.resize(prof.size());
    sol.rprof.rpp.resize(prof.size());
    sol.rprof.rppp.resize(prof.size());
    for (std::size_t i = 0; i < prof.size(); ++i) {
        sol.rprof.r[i] = ode.samples[i].y[2];
        sol.rprof.rp[i] = ode.samples[i].y[3];
        sol.rprof.rpp[i] = ode.samples[i].y[4];
        sol.rprof.rppp[i] = ode.samples[i].y[5];
        sol.trace.push_back({i, std::abs(worst), 0.0,
                             i > 0 ? prof.u[i] - prof.u[i - 1] : 0.0});
    }
    sol.max_point_residual = worst;
    sol.degenerate_samples = degen;
    return sol;
}

/// Sparse row of basis-function derivative values: r^(d)(u_i) = sum_t
/// w[t] * coef[first + t].
struct BasisRow {
    std::size_t first = 0;
    std::size_t len = 0;
    std::array<double, 8> w{};
};

inline ExponentSolution solve_exponent_collocation(const CurvatureProfile& prof, double r0,
                                                   double r0p, double r0pp, double r0ppp,
                                                   const FlattenerOptions& opt) {
    ExponentSolution sol;
    sol.method = ExponentMethod::collocation;

    const std::size_t n = prof.size();
    // Degree-5 basis: the third derivative is continuous, and after pinning
    // the four initial values the nodal system is square, so the damped
    // Gauss-Newton can drive the residual to solver tolerance.
    const BSplineBasis spline(prof.u, 5);
    const std::size_t nb = spline.num_basis();
    if (n < 7) throw GridError("solve_exponent: grid too small for collocation");
    const double h = prof.u[1] - prof.u[0];
    const double c = prof.c;

    // Pin the first four coefficients to the initial data: derivatives of
    // order d at the left end depend only on coefficients 0..d.
    const std::array<double, 4> pinned = spline.pin_left(r0, r0p, r0pp, r0ppp);
    const std::size_t p = nb - 4;
    std::vector<double> coef(nb);
    for (std::size_t j = 0; j < 4; ++j) coef[j] = pinned[j];

    // Initial guess: the pinned cubic Taylor polynomial sampled at Greville
    // abscissae; constant initial data reproduce a constant spline exactly.
    const auto taylor = [&](double x) {
        const double t = x - prof.u.front();
        return r0 + r0p * t + 0.5 * r0pp * t * t + r0ppp * t * t * t / 6.0;
    };
    for (std::size_t j = 4; j < nb; ++j) coef[j] = taylor(spline.greville(j));

    // Basis rows per node for the four derivative orders.
    const std::size_t width = static_cast<std::size_t>(spline.degree()) + 1;
    std::array<std::vector<BasisRow>, 4> rows;
    for (auto& rv : rows) rv.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t first;
        double nd[4][BSplineBasis::kMaxDegree + 1];
        spline.basis(prof.u[i], first, nd);
        for (std::size_t d = 0; d < 4; ++d) {
            rows[d][i].first = first;
            rows[d][i].len = width;
            for (std::size_t t = 0; t < width; ++t) rows[d][i].w[t] = nd[d][t];
        }
    }

    const auto spline_state = [&](const std::vector<double>& cf, std::size_t i,
                                  double st[4]) {
        for (std::size_t d = 0; d < 4; ++d) {
            const BasisRow& row = rows[d][i];
            // derivative rows sum to zero: shift by a reference coefficient
            // to avoid cancellation noise of order eps / h^d
            const double ref = d > 0 ? cf[row.first] : 0.0;
            double acc = 0.0;
            for (std::size_t t = 0; t < row.len; ++t)
                acc += row.w[t] * (cf[row.first + t] - ref);
            st[d] = acc;
        }
    };

    std::vector<KDerivs> kd(n);
    for (std::size_t i = 0; i < n; ++i) kd[i] = k_derivs(c, prof.k[i], prof.kp[i]);
    std::vector<Stencil5> stencils(n);
    for (std::size_t i = 0; i < n; ++i) stencils[i] = d1_stencil4(n, i, h);

    // P: node state -> (K_r, K_r'); Q: local state, K_r and the K_r' window
    // -> pointwise residual. The Jacobian chains physical-scale partials of
    // P and Q through the exact basis rows, which keeps the smooth modes of
    // the stiff collocation operator intact.
    const auto eval_p = [&](std::size_t i, const double st[4], double out[2]) {
        const Jet1 krj =
            kr_kernel(c, Jet1(kd[i].k, kd[i].kp), Jet1(kd[i].kp, kd[i].kpp),
                      Jet1(st[0], st[1]), Jet1(st[1], st[2]), Jet1(st[2], st[3]));
        out[0] = krj.f;
        out[1] = krj.d1;
    };
    // returns false when c - K_r leaves the admissible margin
    const auto eval_q = [&](std::size_t i, const double rst[3], double kr,
                            const double krpw[5], double& out) {
        if (!(c - kr > eps_dom(c, kr))) return false;
        double dstencil = 0.0;
        for (std::size_t t = 0; t < 5; ++t) dstencil += stencils[i].w[t] * krpw[t];
        double krp_i = 0.0;
        for (std::size_t t = 0; t < 5; ++t)
            if (stencils[i].idx[t] == i) krp_i = krpw[t];
        const Jet2 k2(kd[i].k, kd[i].kp, kd[i].kpp);
        const Jet2 r2(rst[0], rst[1], rst[2]);
        const Jet2 kr2(kr, krp_i, dstencil);
        const Jet2 phi = varphi_jet(c, k2, r2, kr2);
        const double m = 3.0 * prof.kp[i] / (8.0 * (c - prof.k[i]));
        out = prof.k[i] + (-phi.d2 - m * phi.d1);
        return true;
    };

    struct Eval {
        std::vector<double> res;
        std::vector<std::array<double, 2>> pkr;
        std::vector<std::array<double, 4>> state;
        bool feasible = true;
    };
    const auto evaluate = [&](const std::vector<double>& cf) {
        Eval ev;
        ev.res.assign(n, 0.0);
        ev.pkr.resize(n);
        ev.state.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            spline_state(cf, i, ev.state[i].data());
            eval_p(i, ev.state[i].data(), ev.pkr[i].data());
            if (!(c - ev.pkr[i][0] > eps_dom(c, ev.pkr[i][0]))) ev.feasible = false;
        }
        if (!ev.feasible) {
            for (std::size_t i = 0; i < n; ++i) {
                const double viol = eps_dom(c, ev.pkr[i][0]) - (c - ev.pkr[i][0]);
                ev.res[i] = viol > 0.0 ? 1e3 * (1.0 + viol) : 0.0;
            }
            return ev;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double krpw[5];
            for (std::size_t t = 0; t < 5; ++t) krpw[t] = ev.pkr[stencils[i].idx[t]][1];
            eval_q(i, ev.state[i].data(), ev.pkr[i][0], krpw, ev.res[i]);
        }
        return ev;
    };

    const auto jacobian = [&](const Eval& ev, Eigen::MatrixXd& jac) {
        jac.setZero();
        std::vector<std::array<std::array<double, 4>, 2>> dp(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < 4; ++d) {
                double stp[4], stm[4];
                for (std::size_t t = 0; t < 4; ++t) stp[t] = stm[t] = ev.state[i][t];
                const double step = 1e-6 * (1.0 + std::abs(ev.state[i][d]));
                stp[d] += step;
                stm[d] -= step;
                double op[2], om[2];
                eval_p(i, stp, op);
                eval_p(i, stm, om);
                dp[i][0][d] = (op[0] - om[0]) / (2.0 * step);
                dp[i][1][d] = (op[1] - om[1]) / (2.0 * step);
            }
        }
        const auto add_row = [&](Eigen::Index i, double factor, const BasisRow& row) {
            for (std::size_t t = 0; t < row.len; ++t) {
                const std::size_t j = row.first + t;
                if (j >= 4) jac(i, static_cast<Eigen::Index>(j - 4)) += factor * row.w[t];
            }
        };
        for (std::size_t i = 0; i < n; ++i) {
            double krpw[5];
            for (std::size_t t = 0; t < 5; ++t) krpw[t] = ev.pkr[stencils[i].idx[t]][1];
            const double rst[3] = {ev.state[i][0], ev.state[i][1], ev.state[i][2]};

            for (std::size_t d = 0; d < 3; ++d) {
                double rp[3] = {rst[0], rst[1], rst[2]};
                double rm[3] = {rst[0], rst[1], rst[2]};
                const double step = 1e-6 * (1.0 + std::abs(rst[d]));
                rp[d] += step;
                rm[d] -= step;
                double qp, qm;
                if (!eval_q(i, rp, ev.pkr[i][0], krpw, qp) ||
                    !eval_q(i, rm, ev.pkr[i][0], krpw, qm))
                    throw InfeasibleError("collocation: margin hit in jacobian");
                add_row(static_cast<Eigen::Index>(i), (qp - qm) / (2.0 * step), rows[d][i]);
            }
            {
                const double step = 1e-6 * (1.0 + std::abs(ev.pkr[i][0]));
                double qp, qm;
                if (!eval_q(i, rst, ev.pkr[i][0] + step, krpw, qp) ||
                    !eval_q(i, rst, ev.pkr[i][0] - step, krpw, qm))
                    throw InfeasibleError("collocation: margin hit in jacobian");
                const double dq_dkr = (qp - qm) / (2.0 * step);
                for (std::size_t d = 0; d < 4; ++d)
                    add_row(static_cast<Eigen::Index>(i), dq_dkr * dp[i][0][d], rows[d][i]);
            }
            for (std::size_t t = 0; t < 5; ++t) {
                const std::size_t mnode = stencils[i].idx[t];
                double wp[5], wm[5];
                for (std::size_t tt = 0; tt < 5; ++tt) wp[tt] = wm[tt] = krpw[tt];
                const double step = 1e-6 * (1.0 + std::abs(krpw[t]));
                wp[t] += step;
                wm[t] -= step;
                double qp, qm;
                if (!eval_q(i, rst, ev.pkr[i][0], wp, qp) ||
                    !eval_q(i, rst, ev.pkr[i][0], wm, qm))
                    throw InfeasibleError("collocation: margin hit in jacobian");
                const double dq_dkrp = (qp - qm) / (2.0 * step);
                for (std::size_t d = 0; d < 4; ++d)
                    add_row(static_cast<Eigen::Index>(i), dq_dkrp * dp[mnode][1][d],
                            rows[d][mnode]);
            }
        }
    };

    // The two right-end rows close the K_r'' stencil one-sidedly and are
    // incompatible with the interior equations at O(h^2); they enter the
    // solve with a small weight and stay out of the convergence norm, like
    // every other boundary stencil layer in this module.
    std::vector<double> row_weight(n, 1.0);
    if (n > 4) row_weight[n - 1] = row_weight[n - 2] = 1e-2;

    auto norms = [&](const std::vector<double>& v) {
        double mx = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (row_weight[i] == 1.0) mx = std::max(mx, std::abs(v[i]));
            sq += row_weight[i] * v[i] * v[i];
        }
        return std::pair<double, double>(mx, std::sqrt(sq / static_cast<double>(v.size())));
    };

    Eval ev = evaluate(coef);
    if (!ev.feasible)
        throw InfeasibleError("solve_exponent(collocation): initial guess infeasible");
    auto [res_max, res_l2] = norms(ev.res);
    double lambda = 1e-12;
    sol.trace.push_back({0, res_max, res_l2, lambda});

    // Damped Gauss-Newton; the step solves the stacked system
    // [J; sqrt(lambda) D] dx = [-F; 0] by QR with column scaling.
    const Eigen::Index en = static_cast<Eigen::Index>(n);
    const Eigen::Index ep = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd jac(en, ep);
    std::size_t it = 0;
    while (res_max > opt.collocation_tol && it < opt.max_iterations) {
        ++it;
        jacobian(ev, jac);
        for (std::size_t i = 0; i < n; ++i)
            if (row_weight[i] != 1.0)
                jac.row(static_cast<Eigen::Index>(i)) *= row_weight[i];
        Eigen::VectorXd fvec(en);
        for (std::size_t i = 0; i < n; ++i)
            fvec(static_cast<Eigen::Index>(i)) = row_weight[i] * ev.res[i];

        // The conditioning spans ~1e10 between derivative orders, so the
        // damped step is assembled from the SVD with an absolute Tikhonov
        // filter; per-column scaling would crush the smooth modes.
        const Eigen::BDCSVD<Eigen::MatrixXd> svd(jac,
                                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd utf = svd.matrixU().transpose() * (-fvec);
        const Eigen::VectorXd& sv = svd.singularValues();

        bool accepted = false;
        for (int damp = 0; damp < 24 && !accepted; ++damp) {
            Eigen::VectorXd filtered(sv.size());
            for (Eigen::Index q = 0; q < sv.size(); ++q)
                filtered(q) = sv(q) * utf(q) / (sv(q) * sv(q) + lambda);
            const Eigen::VectorXd dx = svd.matrixV() * filtered;
            std::vector<double> trial = coef;
            for (std::size_t j = 0; j < p; ++j)
                trial[4 + j] += dx(static_cast<Eigen::Index>(j));
            Eval tev = evaluate(trial);
            const auto [tmax, tl2] = norms(tev.res);
            if (tev.feasible && tl2 < res_l2) {
                coef = std::move(trial);
                ev = std::move(tev);
                res_max = tmax;
                res_l2 = tl2;
                lambda = std::max(lambda / 30.0, 1e-12);
                accepted = true;
            } else {
                lambda = std::max(lambda * 30.0, 1e-8);
            }
        }
        sol.trace.push_back({it, res_max, res_l2, lambda});
        if (!accepted) break;
    }

    sol.rprof.u = prof.u;
    sol.rprof.r.resize(n);
    sol.rprof.rp.resize(n);
    sol.rprof.rpp.resize(n);
    sol.rprof.rppp.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        sol.rprof.r[i] = ev.state[i][0];
        sol.rprof.rp[i] = ev.state[i][1];
        sol.rprof.rpp[i] = ev.state[i][2];
        sol.rprof.rppp[i] = ev.state[i][3];
    }
    sol.max_point_residual = res_max;
    if (res_max > opt.collocation_tol)
        throw ExponentSolveError(
            "solve_exponent(collocation): objective stalled at max residual " +
                std::to_string(res_max),
            sol);
    return sol;
}

} // namespace detail

/// Solves the flattening problem for r(u): shooting integrates the implicit
/// 4th-order ODE with r'''' isolated numerically from the residual at each
/// step; collocation minimizes the summed squared grid residual over cubic
/// spline coefficients with the four initial values pinned.
inline ExponentSolution solve_exponent(const CurvatureProfile& prof, double r0, double r0p,
                                       double r0pp, double r0ppp, ExponentMethod method,
                                       const FlattenerOptions& opt = {}) {
    prof.check_invariants();
    const Feasibility feas = feasibility_check(prof, r0, r0p, r0pp);
    if (!feas.feasible)
        throw InfeasibleError("solve_exponent: initial data infeasible, margin = " +
                              std::to_string(feas.margin));
    if (method == ExponentMethod::shooting)
        return detail::solve_exponent_shooting(prof, r0, r0p, r0pp, r0ppp, opt);
    return detail::solve_exponent_collocation(prof, r0, r0p, r0pp, r0ppp, opt);
}

/// Builds gbar = (c - K_r)^{1/2} (c - K)^r g on the (u,s) grid and measures
/// its discrete curvature; flat means max |Kbar| below the refinement-indexed
/// tolerance. details carry the consistency gap against flatten_residual.
inline Report verify_flat(const CurvatureProfile& prof, const ExponentProfile& rprof,
                          const std::vector<double>& s_nodes,
                          std::optional<double> tolerance = std::nullopt) {
    const std::vector<double> kr = kr_of_function_r(prof, rprof);
    for (std::size_t i = 0; i < prof.size(); ++i)
        if (!(prof.c - kr[i] > eps_dom(prof.c, kr[i])))
            throw InfeasibleError("verify_flat: c - K_r <= eps_dom at u = " +
                                  std::to_string(prof.u[i]));

    const MetricGrid base = build_metric(prof, s_nodes);
    ScalarField weight(base.grid);
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double w = std::sqrt(prof.c - kr[i]) * std::pow(prof.c - prof.k[i],
                                                              rprof.r[i]);
        for (std::size_t j = 0; j < s_nodes.size(); ++j)
            weight.at(i, j) = w;
    }
    const MetricGrid flat = weighted_metric(base, weight);
    const ScalarField kbar = gauss_curvature_fd(flat);

    double max_k = 0.0;
    for (double v : prof.k) max_k = std::max(max_k, std::abs(v));
    const double h_eff = std::max(base.grid->hu(), base.grid->hs());

    Report rep;
    rep.name = "verify_flat";
    rep.tolerance = tolerance.value_or(refinement_tolerance(1e-3 * max_k, h_eff));
    fill_stats(rep, kbar);
    rep.passed = rep.max_residual < rep.tolerance;

    // Consistency: Kbar * weight should reproduce the grid residual R.
    const std::vector<double> res = flatten_residual(prof, rprof);
    double gap = 0.0;
    for (std::size_t i = 2; i + 2 < prof.size(); ++i) {
        const std::size_t jmid = s_nodes.size() / 2;
        gap = std::max(gap, std::abs(kbar.at(i, jmid) * weight.at(i, jmid) - res[i]));
    }
    rep.details["residual_consistency_gap"] = gap;
    return rep;
}

} // namespace biconserve

#endif
