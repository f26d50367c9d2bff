#ifndef BICONSERVE_EMBEDDING_HPP
#define BICONSERVE_EMBEDDING_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "biconserve/errors.hpp"
#include "biconserve/field.hpp"
#include "biconserve/metric.hpp"
#include "biconserve/profile.hpp"
#include "biconserve/report.hpp"
#include "biconserve/stencils.hpp"

namespace biconserve {

/// Mean curvature f = (2/sqrt(3)) sqrt(c - K) and its frame gradient.
/// grad f = (X1 f) X1 with X1 f = f' = -K' / sqrt(3 (c - K)); X2 f = 0.
struct MeanCurvatureData {
    std::vector<double> f;
    std::vector<double> x1f; // f'(u), the only nonzero frame component of grad f
};

inline MeanCurvatureData mean_curvature_from_k(const CurvatureProfile& prof) {
    MeanCurvatureData out;
    out.f.resize(prof.size());
    out.x1f.resize(prof.size());
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double cmk = prof.c - prof.k[i];
        if (!(cmk > eps_dom(prof.c, prof.k[i])))
            throw DomainError("mean_curvature_from_k: c - K <= eps_dom");
        out.f[i] = 2.0 / std::sqrt(3.0) * std::sqrt(cmk);
        out.x1f[i] = -prof.kp[i] / std::sqrt(3.0 * cmk);
    }
    return out;
}

/// Shape operator diagonal in the tilded frame Xt1 = -X1, Xt2 = -X2:
/// A Xt1 = -(f/2) Xt1, A Xt2 = (3f/2) Xt2. The sign flip is stored in the
/// coordinate components so every check is frame-consistent.
struct ShapeOperatorField {
    GridPtr grid;
    ScalarField f;
    ScalarField lambda1; // eigenvalue on Xt1
    ScalarField lambda2; // eigenvalue on Xt2
    std::vector<double> xt1_u, xt1_s, xt2_u, xt2_s;
};

inline ShapeOperatorField build_shape_operator(const CurvatureProfile& prof,
                                               const MetricGrid& m) {
    require_same_grid(m, prof);
    const MeanCurvatureData mc = mean_curvature_from_k(prof);
    ShapeOperatorField sh;
    sh.grid = m.grid;
    sh.f = ScalarField(m.grid);
    sh.lambda1 = ScalarField(m.grid);
    sh.lambda2 = ScalarField(m.grid);
    sh.xt1_u.assign(m.grid->size(), 0.0);
    sh.xt1_s.assign(m.grid->size(), 0.0);
    sh.xt2_u.assign(m.grid->size(), 0.0);
    sh.xt2_s.assign(m.grid->size(), 0.0);
    for (std::size_t i = 0; i < m.nu(); ++i) {
        for (std::size_t j = 0; j < m.ns(); ++j) {
            const std::size_t idx = m.grid->index(i, j);
            sh.f.v[idx] = mc.f[i];
            sh.lambda1.v[idx] = -0.5 * mc.f[i];
            sh.lambda2.v[idx] = 1.5 * mc.f[i];
            sh.xt1_u[idx] = -1.0;           // Xt1 = -(du - g12 ds)
            sh.xt1_s[idx] = m.g12[idx];
            sh.xt2_u[idx] = 0.0;            // Xt2 = -ds
            sh.xt2_s[idx] = -1.0;
        }
    }
    return sh;
}

namespace detail {
/// Derivative of a field along Xt1 = -X1 and Xt2 = -X2 by differencing.
inline void tilded_derivatives(const MetricGrid& m, const ScalarField& h,
                               ScalarField& xt1h, ScalarField& xt2h) {
    const ScalarField hu = diff_u(h), hs = diff_s(h);
    xt1h = ScalarField(m.grid);
    xt2h = ScalarField(m.grid);
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
        xt1h.v[idx] = -(hu.v[idx] - m.g12[idx] * hs.v[idx]);
        xt2h.v[idx] = -hs.v[idx];
    }
}
} // namespace detail

/// Gauss-equation identity K = c + det A, algebraic on the profile.
inline Report gauss_equation_check(const CurvatureProfile& prof,
                                   const ShapeOperatorField& sh, double tolerance = 1e-12) {
    Report rep;
    rep.name = "gauss_identity";
    rep.tolerance = tolerance;
    ScalarField res(sh.grid);
    for (std::size_t i = 0; i < sh.grid->nu(); ++i) {
        for (std::size_t j = 0; j < sh.grid->ns(); ++j) {
            const std::size_t idx = sh.grid->index(i, j);
            const double detA = sh.lambda1.v[idx] * sh.lambda2.v[idx];
            const double scale = std::max(1.0, std::abs(prof.k[i]));
            res.v[idx] = (prof.k[i] - prof.c - detA) / scale;
        }
    }
    fill_stats(rep, res);
    rep.passed = rep.max_residual < tolerance;
    return rep;
}

/// Codazzi equation in the tilded frame,
///   (D_Xt1 A) Xt2 = (D_Xt2 A) Xt1,
/// with the connection D_Xt2 Xt2 = (3 Xt1 f / 4f) Xt1,
/// D_Xt2 Xt1 = -(3 Xt1 f / 4f) Xt2 and analytic Xt1 f; the left side
/// differentiates the eigenvalue field along u, so the residual measures
/// the differenced against the analytic frame derivative of f.
inline Report codazzi_check(const CurvatureProfile& prof, const MetricGrid& m,
                            const ShapeOperatorField& sh,
                            double tolerance = 1e-6) {
    require_same_grid(m, prof);
    const MeanCurvatureData mc = mean_curvature_from_k(prof);

    ScalarField xt1_l2, xt2_l2, xt1_l1, xt2_l1;
    detail::tilded_derivatives(m, sh.lambda2, xt1_l2, xt2_l2);
    detail::tilded_derivatives(m, sh.lambda1, xt1_l1, xt2_l1);

    Report rep;
    rep.name = "codazzi";
    rep.tolerance = tolerance;
    ScalarField res(m.grid);
    for (std::size_t i = 0; i < m.nu(); ++i) {
        const double xt1f = -mc.x1f[i]; // Xt1 f = -X1 f
        const double w = 3.0 * xt1f / (4.0 * mc.f[i]);
        for (std::size_t j = 0; j < m.ns(); ++j) {
            const std::size_t idx = m.grid->index(i, j);
            // LHS = Xt1(lambda2) Xt2   (D_Xt1 Xt2 = 0)
            const double lhs_1 = 0.0;
            const double lhs_2 = xt1_l2.v[idx];
            // RHS = Xt2(lambda1) Xt1 + w (lambda2 - lambda1) Xt2
            const double rhs_1 = xt2_l1.v[idx];
            const double rhs_2 = w * (sh.lambda2.v[idx] - sh.lambda1.v[idx]);
            const double r1 = lhs_1 - rhs_1;
            const double r2 = lhs_2 - rhs_2;
            res.v[idx] = std::sqrt(r1 * r1 + r2 * r2);
        }
    }
    fill_stats(rep, res);
    rep.passed = rep.max_residual < tolerance;
    return rep;
}

/// Biconservativity identity A(grad f) = -(f/2) grad f. grad f lies on the
/// Xt1 eigenline, so the residual is exactly zero up to rounding.
inline Report biconservativity_check(const CurvatureProfile& prof, const MetricGrid& m,
                                     const ShapeOperatorField& sh,
                                     double tolerance = 1e-13) {
    require_same_grid(m, prof);
    const MeanCurvatureData mc = mean_curvature_from_k(prof);
    Report rep;
    rep.name = "biconservativity";
    rep.tolerance = tolerance;
    ScalarField res(m.grid);
    for (std::size_t i = 0; i < m.nu(); ++i) {
        const double v1 = -mc.x1f[i]; // grad f = (Xt1 f) Xt1
        for (std::size_t j = 0; j < m.ns(); ++j) {
            const std::size_t idx = m.grid->index(i, j);
            const double r1 = sh.lambda1.v[idx] * v1 + 0.5 * sh.f.v[idx] * v1;
            res.v[idx] = std::abs(r1);
        }
    }
    fill_stats(rep, res);
    rep.passed = rep.max_residual < tolerance;
    return rep;
}

/// Consistency of the tilded connection coefficients:
///   (Xt1 f)/f = -(Xt1 K)/(2 (c-K))       (chain rule on f)
///   3 X1 f/(4 f) = -3 X1 K/(8 (c-K))     (f-form vs K-form coefficient)
/// plus the differenced-vs-analytic X1 f gap, reported under details.
inline Report frame_connection_tilded_check(const CurvatureProfile& prof,
                                            const MetricGrid& m,
                                            double tolerance = 1e-12) {
    require_same_grid(m, prof);
    const MeanCurvatureData mc = mean_curvature_from_k(prof);

    double id_max = 0.0, coef_max = 0.0;
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double cmk = prof.c - prof.k[i];
        const double xt1f = -mc.x1f[i], xt1k = -prof.kp[i];
        id_max = std::max(id_max, std::abs(xt1f / mc.f[i] + xt1k / (2.0 * cmk)));
        coef_max = std::max(coef_max,
                            std::abs(3.0 * mc.x1f[i] / (4.0 * mc.f[i]) +
                                     3.0 * prof.kp[i] / (8.0 * cmk)));
    }

    // differenced X1 f against the analytic chain-rule value
    std::vector<double> fd = d1_vec(mc.f, prof.u.size() > 1 ? prof.u[1] - prof.u[0] : 1.0);
    double fd_max = 0.0;
    for (std::size_t i = 2; i + 2 < prof.size(); ++i)
        fd_max = std::max(fd_max, std::abs(fd[i] - mc.x1f[i]));

    Report rep;
    rep.name = "tilded_frame_connection";
    rep.tolerance = tolerance;
    rep.grid = grid_meta(*m.grid);
    rep.max_residual = std::max(id_max, coef_max);
    rep.l2_residual = rep.max_residual;
    rep.details["identity_max"] = id_max;
    rep.details["coefficient_max"] = coef_max;
    rep.details["fd_vs_analytic_x1f"] = fd_max;
    rep.passed = rep.max_residual < tolerance;
    return rep;
}

} // namespace biconserve

#endif
