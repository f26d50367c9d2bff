#ifndef BICONSERVE_CONFORMAL_HPP
#define BICONSERVE_CONFORMAL_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "biconserve/errors.hpp"
#include "biconserve/field.hpp"
#include "biconserve/metric.hpp"
#include "biconserve/report.hpp"
#include "biconserve/stencils.hpp"

namespace biconserve {

/// Exponent phi of a conformal change gbar = e^{2 phi} g.
struct ConformalFactor {
    ScalarField phi;
};

/// Geometer's Laplacian (Delta = -div grad) in conservative form:
///   Delta h = -(1/sqrt(G)) d_i ( sqrt(G) g^{ij} d_j h ),  G = det g.
/// Fluxes live on staggered midpoints (metric factors averaged, normal
/// derivative by the compact two-point difference, cross derivative by
/// averaged node-centered stencils); the boundary rows fall back to
/// node-based one-sided differencing and are excluded from pass/fail
/// statistics like every other stencil-switch layer.
inline ScalarField laplace_beltrami(const MetricGrid& m, const ScalarField& h) {
    if (m.nu() < 5 || m.ns() < 5)
        throw GridError("laplace_beltrami: need at least 5 samples per axis");
    if (h.grid->size() != m.grid->size())
        throw GridError("laplace_beltrami: field grid mismatch");

    const std::size_t nu = m.nu(), ns = m.ns();
    const double du = m.grid->hu(), ds = m.grid->hs();
    const ScalarField hu = diff_u(h), hs = diff_s(h);
    ScalarField wuu(m.grid), wus(m.grid), wss(m.grid), sqrtg(m.grid);
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
        double inv[2][2];
        detail::metric_inverse(m, idx, inv);
        const double sg = std::sqrt(m.g11[idx] * m.g22[idx] - m.g12[idx] * m.g12[idx]);
        sqrtg.v[idx] = sg;
        wuu.v[idx] = sg * inv[0][0];
        wus.v[idx] = sg * inv[0][1];
        wss.v[idx] = sg * inv[1][1];
    }

    // node-based fluxes for the boundary fallback
    ScalarField fu(m.grid), fs(m.grid);
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
        fu.v[idx] = wuu.v[idx] * hu.v[idx] + wus.v[idx] * hs.v[idx];
        fs.v[idx] = wus.v[idx] * hu.v[idx] + wss.v[idx] * hs.v[idx];
    }
    const ScalarField dfu = diff_u(fu), dfs = diff_s(fs);

    ScalarField out(m.grid);
    for (std::size_t i = 0; i < nu; ++i) {
        for (std::size_t j = 0; j < ns; ++j) {
            const std::size_t idx = m.grid->index(i, j);
            double divu, divs;
            if (i == 0 || i + 1 == nu) {
                divu = dfu.v[idx];
            } else {
                const std::size_t ip = m.grid->index(i + 1, j), im = m.grid->index(i - 1, j);
                const double f_plus =
                    0.5 * (wuu.v[idx] + wuu.v[ip]) * (h.v[ip] - h.v[idx]) / du +
                    0.5 * (wus.v[idx] + wus.v[ip]) * 0.5 * (hs.v[idx] + hs.v[ip]);
                const double f_minus =
                    0.5 * (wuu.v[im] + wuu.v[idx]) * (h.v[idx] - h.v[im]) / du +
                    0.5 * (wus.v[im] + wus.v[idx]) * 0.5 * (hs.v[im] + hs.v[idx]);
                divu = (f_plus - f_minus) / du;
            }
            if (j == 0 || j + 1 == ns) {
                divs = dfs.v[idx];
            } else {
                const std::size_t jp = m.grid->index(i, j + 1), jm = m.grid->index(i, j - 1);
                const double f_plus =
                    0.5 * (wss.v[idx] + wss.v[jp]) * (h.v[jp] - h.v[idx]) / ds +
                    0.5 * (wus.v[idx] + wus.v[jp]) * 0.5 * (hu.v[idx] + hu.v[jp]);
                const double f_minus =
                    0.5 * (wss.v[jm] + wss.v[idx]) * (h.v[idx] - h.v[jm]) / ds +
                    0.5 * (wus.v[jm] + wus.v[idx]) * 0.5 * (hu.v[jm] + hu.v[idx]);
                divs = (f_plus - f_minus) / ds;
            }
            out.v[idx] = -(divu + divs) / sqrtg.v[idx];
        }
    }
    return out;
}

/// Non-divergence form of the same operator,
///   Delta h = -g^{ij} ( d_i d_j h - Gamma^k_ij d_k h ),
/// built on coordinate Christoffel symbols. An independent discretization
/// used to cross-check the divergence form.
inline ScalarField laplace_beltrami_nondiv(const MetricGrid& m, const ScalarField& h) {
    if (m.nu() < 5 || m.ns() < 5)
        throw GridError("laplace_beltrami_nondiv: need at least 5 samples per axis");
    const ConnectionData conn = christoffels_fd(m);
    const ScalarField hu = diff_u(h), hs = diff_s(h);
    const ScalarField huu = diff_uu(h), hss = diff_ss(h), hus = diff_us(h);
    ScalarField out(m.grid);
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
        double inv[2][2];
        detail::metric_inverse(m, idx, inv);
        const double d2[2][2] = {{huu.v[idx], hus.v[idx]}, {hus.v[idx], hss.v[idx]}};
        const double d1[2] = {hu.v[idx], hs.v[idx]};
        double acc = 0.0;
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                double hess = d2[i][j];
                for (std::size_t k = 0; k < 2; ++k)
                    hess -= conn.G(k, i, j, idx) * d1[k];
                acc += inv[i][j] * hess;
            }
        out.v[idx] = -acc;
    }
    return out;
}

/// |grad h|^2 = g^{ij} d_i h d_j h with the same stencils as the Laplacian.
inline ScalarField grad_squared(const MetricGrid& m, const ScalarField& h) {
    const ScalarField hu = diff_u(h), hs = diff_s(h);
    ScalarField out(m.grid);
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
        double inv[2][2];
        detail::metric_inverse(m, idx, inv);
        out.v[idx] = inv[0][0] * hu.v[idx] * hu.v[idx] +
                     2.0 * inv[0][1] * hu.v[idx] * hs.v[idx] +
                     inv[1][1] * hs.v[idx] * hs.v[idx];
    }
    return out;
}

/// gbar = e^{2 phi} g.
inline MetricGrid conformal_scale(const MetricGrid& m, const ScalarField& phi) {
    MetricGrid out = m;
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
        const double w = std::exp(2.0 * phi.v[idx]);
        out.g11[idx] *= w;
        out.g12[idx] *= w;
        out.g22[idx] *= w;
    }
    return out;
}

/// Scale a metric by a plain positive weight field: out = w * g.
inline MetricGrid weighted_metric(const MetricGrid& m, const ScalarField& w) {
    MetricGrid out = m;
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
        if (!(w.v[idx] > 0.0))
            throw DomainError("weighted_metric: non-positive conformal weight");
        out.g11[idx] *= w.v[idx];
        out.g12[idx] *= w.v[idx];
        out.g22[idx] *= w.v[idx];
    }
    return out;
}

/// Curvature transformation law Kbar = e^{-2 phi} (K + Delta phi).
inline ScalarField conformal_gauss(const MetricGrid& m, const ScalarField& k,
                                   const ConformalFactor& factor) {
    const ScalarField dphi = laplace_beltrami(m, factor.phi);
    ScalarField out(m.grid);
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
        out.v[idx] = std::exp(-2.0 * factor.phi.v[idx]) * (k.v[idx] + dphi.v[idx]);
    return out;
}

/// Residual of the Laplacian transformation law Deltabar h = e^{-2 phi} Delta h,
/// evaluated on two independent discretizations: the divergence form (where
/// the law is an algebraic identity of the flux, so the residual measures
/// rounding) and the non-divergence Christoffel form (genuinely O(h^2) for
/// non-constant phi). The headline residual is the larger of the two.
inline Report conformal_laplacian_check(const MetricGrid& m, const ConformalFactor& factor,
                                        const ScalarField& h, double tolerance) {
    const MetricGrid scaled = conformal_scale(m, factor.phi);
    ScalarField res_div(m.grid), res_nondiv(m.grid);
    {
        const ScalarField lhs = laplace_beltrami(scaled, h);
        const ScalarField rhs = laplace_beltrami(m, h);
        for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
            res_div.v[idx] = lhs.v[idx] - std::exp(-2.0 * factor.phi.v[idx]) * rhs.v[idx];
    }
    {
        const ScalarField lhs = laplace_beltrami_nondiv(scaled, h);
        const ScalarField rhs = laplace_beltrami_nondiv(m, h);
        for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
            res_nondiv.v[idx] =
                lhs.v[idx] - std::exp(-2.0 * factor.phi.v[idx]) * rhs.v[idx];
    }
    Report rep;
    rep.name = "conformal_laplacian";
    rep.tolerance = tolerance;
    fill_stats(rep, res_nondiv);
    rep.details["divergence_form_max"] = field_stats(res_div, 2).max_abs;
    rep.details["nondivergence_form_max"] = rep.max_residual;
    rep.max_residual = std::max(rep.max_residual, rep.details["divergence_form_max"]);
    rep.passed = rep.max_residual < tolerance;
    return rep;
}

enum class RicciVariant { minimal, biconservative };
enum class RicciForm { i, ii, iii, iv };

inline std::string ricci_condition_name(RicciVariant v, RicciForm f) {
    std::string name = (v == RicciVariant::minimal) ? "minimal." : "biconservative.";
    switch (f) {
        case RicciForm::i: return name + "i";
        case RicciForm::ii: return name + "ii";
        case RicciForm::iii: return name + "iii";
        default: return name + "iv";
    }
}

/// Refinement-indexed flatness tolerance: tau at reference h = 1e-2 scales
/// as O(h^2), so coarse grids relax and fine grids tighten.
inline double refinement_tolerance(double base, double h, double h_ref = 1e-2) {
    return base * (h / h_ref) * (h / h_ref);
}

/// Residual of the selected Ricci-condition form.
///   minimal:        (i) (c-K) dK - |grad K|^2 - 4 K (c-K)^2   (ii) dlog(c-K) + 4K
///                   (iii) (c-K)^{1/2} g flat                  (iv, c=0) K[(-K)g] = 1
///   biconservative: (i) ... - (8/3) K (c-K)^2                 (ii) dlog(c-K) + (8/3)K
///                   (iii) (c-K)^{3/4} g flat                  (iv, c=0) K[(-K)g] = 1/3
inline RicciReport ricci_condition(const MetricGrid& m, const ScalarField& k, double c,
                                   RicciVariant variant, RicciForm form,
                                   std::optional<double> tolerance = std::nullopt,
                                   std::size_t stat_margin = 2) {
    if (k.grid->size() != m.grid->size())
        throw GridError("ricci_condition: curvature field grid mismatch");
    double max_k = 0.0;
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
        if (!(c - k.v[idx] > eps_dom(c, k.v[idx])))
            throw DomainError("ricci_condition: c - K <= eps_dom on the grid");
        max_k = std::max(max_k, std::abs(k.v[idx]));
    }
    if (form == RicciForm::iv && c != 0.0)
        throw ConfigError("form", "ricci_condition form iv requires c = 0");

    const double coef = (variant == RicciVariant::minimal) ? 4.0 : 8.0 / 3.0;
    const double h_eff = std::max(m.grid->hu(), m.grid->hs());

    RicciReport rep;
    rep.condition = ricci_condition_name(variant, form);
    rep.grid = grid_meta(*m.grid);
    rep.residual = ScalarField(m.grid);

    switch (form) {
        case RicciForm::i: {
            const ScalarField lap = laplace_beltrami(m, k);
            const ScalarField gsq = grad_squared(m, k);
            for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
                const double cmk = c - k.v[idx];
                rep.residual.v[idx] =
                    cmk * lap.v[idx] - gsq.v[idx] - coef * k.v[idx] * cmk * cmk;
            }
            rep.tolerance = tolerance.value_or(refinement_tolerance(1e-4 * max_k, h_eff));
            break;
        }
        case RicciForm::ii: {
            ScalarField logf(m.grid);
            for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
                logf.v[idx] = std::log(c - k.v[idx]);
            const ScalarField lap = laplace_beltrami(m, logf);
            for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
                rep.residual.v[idx] = lap.v[idx] + coef * k.v[idx];
            rep.tolerance = tolerance.value_or(refinement_tolerance(1e-4 * max_k, h_eff));
            break;
        }
        case RicciForm::iii: {
            const double p = (variant == RicciVariant::minimal) ? 0.5 : 0.75;
            ScalarField w(m.grid);
            for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
                w.v[idx] = std::pow(c - k.v[idx], p);
            const MetricGrid scaled = weighted_metric(m, w);
            rep.residual = gauss_curvature_fd(scaled);
            rep.tolerance = tolerance.value_or(refinement_tolerance(1e-3 * max_k, h_eff));
            break;
        }
        case RicciForm::iv: {
            const double target = (variant == RicciVariant::minimal) ? 1.0 : 1.0 / 3.0;
            ScalarField w(m.grid);
            for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
                w.v[idx] = -k.v[idx];
            const MetricGrid scaled = weighted_metric(m, w);
            const ScalarField ks = gauss_curvature_fd(scaled);
            for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
                rep.residual.v[idx] = ks.v[idx] - target;
            rep.tolerance = tolerance.value_or(refinement_tolerance(1e-3, h_eff));
            break;
        }
    }

    const FieldStats st = field_stats(rep.residual, stat_margin);
    rep.max_residual = st.max_abs;
    rep.l2_residual = st.l2;
    rep.passed = rep.max_residual < rep.tolerance;
    return rep;
}

/// Curvature K_r of the power metric g_r = (c-K)^r g for constant r:
///   K_r = (c-K)^{-r} ( K + (r/2) Delta log(c-K) ).
/// delta_log may supply a precomputed Laplacian of log(c-K) (e.g. the exact
/// frame expression on theorem grids); by default it is discretized here.
inline ScalarField power_metric_curvature(const MetricGrid& m, const ScalarField& k,
                                          double c, double r,
                                          const std::optional<ScalarField>& delta_log =
                                              std::nullopt) {
    ScalarField logf(m.grid);
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
        if (!(c - k.v[idx] > eps_dom(c, k.v[idx])))
            throw DomainError("power_metric_curvature: c - K <= eps_dom");
        logf.v[idx] = std::log(c - k.v[idx]);
    }
    const ScalarField lap = delta_log ? *delta_log : laplace_beltrami(m, logf);
    ScalarField out(m.grid);
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
        out.v[idx] = std::pow(c - k.v[idx], -r) * (k.v[idx] + 0.5 * r * lap.v[idx]);
    return out;
}

/// Theorem transform for c = 0: if K < 0 satisfies
///   K Delta K + |grad K|^2 + (8/3) K^3 = 0
/// then (-K)^{1/2} g is a Ricci surface. Returns the scaled metric, the
/// precondition report and the minimal-variant form (ii) report on the
/// transformed metric (with its curvature from the K_r closed path).
struct RicciTransformResult {
    MetricGrid scaled;
    ScalarField scaled_curvature;
    RicciReport precondition; // cond on K before transforming
    RicciReport ricci;        // minimal form (ii) on the transformed metric
};

inline RicciTransformResult ricci_transform(const MetricGrid& m, const ScalarField& k,
                                            std::optional<double> tolerance = std::nullopt) {
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
        if (!(k.v[idx] < 0.0))
            throw DomainError("ricci_transform: requires K < 0 everywhere");

    const double h_eff = std::max(m.grid->hu(), m.grid->hs());
    double max_k = 0.0;
    for (double v : k.v) max_k = std::max(max_k, std::abs(v));
    const double tol = tolerance.value_or(refinement_tolerance(1e-3 * max_k, h_eff));

    RicciTransformResult out;

    // Precondition: K dK + |grad K|^2 + (8/3) K^3 = 0.
    {
        const ScalarField lap = laplace_beltrami(m, k);
        const ScalarField gsq = grad_squared(m, k);
        RicciReport pre;
        pre.condition = "cond_Kr3";
        pre.grid = grid_meta(*m.grid);
        pre.residual = ScalarField(m.grid);
        for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
            pre.residual.v[idx] = k.v[idx] * lap.v[idx] + gsq.v[idx] +
                                  (8.0 / 3.0) * k.v[idx] * k.v[idx] * k.v[idx];
        const FieldStats st = field_stats(pre.residual, 2);
        pre.max_residual = st.max_abs;
        pre.l2_residual = st.l2;
        pre.tolerance = tol;
        pre.passed = pre.max_residual < pre.tolerance;
        out.precondition = pre;
    }

    ScalarField w(m.grid);
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
        w.v[idx] = std::sqrt(-k.v[idx]);
    out.scaled = weighted_metric(m, w);
    out.scaled_curvature = power_metric_curvature(m, k, 0.0, 0.5);

    // Minimal form (ii) on the transformed metric: Delta_r log(-K_r) + 4 K_r = 0.
    {
        ScalarField logf(m.grid);
        for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
            if (!(out.scaled_curvature.v[idx] < 0.0))
                throw DomainError("ricci_transform: transformed curvature not negative");
            logf.v[idx] = std::log(-out.scaled_curvature.v[idx]);
        }
        const ScalarField lap = laplace_beltrami(out.scaled, logf);
        RicciReport rr;
        rr.condition = "minimal.ii(after r=1/2)";
        rr.grid = grid_meta(*out.scaled.grid);
        rr.residual = ScalarField(m.grid);
        for (std::size_t idx = 0; idx < m.grid->size(); ++idx)
            rr.residual.v[idx] = lap.v[idx] + 4.0 * out.scaled_curvature.v[idx];
        const FieldStats st = field_stats(rr.residual, 4);
        rr.max_residual = st.max_abs;
        rr.l2_residual = st.l2;
        rr.tolerance = tol;
        rr.passed = rr.max_residual < rr.tolerance;
        out.ricci = rr;
    }
    return out;
}

} // namespace biconserve

#endif
