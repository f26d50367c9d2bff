#ifndef BICONSERVE_METRIC_HPP
#define BICONSERVE_METRIC_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "biconserve/errors.hpp"
#include "biconserve/field.hpp"
#include "biconserve/jet.hpp"
#include "biconserve/profile.hpp"
#include "biconserve/spline.hpp"
#include "biconserve/stencils.hpp"

namespace biconserve {

// sym(i,j): storage slot of an unordered index pair, (0,0)->0 (1,0)->1 (1,1)->2
inline constexpr std::size_t sym(std::size_t i, std::size_t j) { return i + j; }

/// First fundamental form sampled on a rectangular (u,s) grid.
struct MetricGrid {
    GridPtr grid;
    double c = 0.0;
    std::vector<double> g11, g12, g22;

    MetricGrid() = default;
    explicit MetricGrid(GridPtr g, double c_ = 0.0)
        : grid(std::move(g)), c(c_), g11(grid->size(), 1.0), g12(grid->size(), 0.0),
          g22(grid->size(), 1.0) {}

    std::size_t nu() const { return grid->nu(); }
    std::size_t ns() const { return grid->ns(); }

    double g(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const {
        const std::size_t idx = grid->index(i, j);
        switch (sym(a, b)) {
            case 0: return g11[idx];
            case 1: return g12[idx];
            default: return g22[idx];
        }
    }

    double det(std::size_t i, std::size_t j) const {
        const std::size_t idx = grid->index(i, j);
        return g11[idx] * g22[idx] - g12[idx] * g12[idx];
    }

    void check_positive_definite() const {
        for (std::size_t i = 0; i < nu(); ++i)
            for (std::size_t j = 0; j < ns(); ++j)
                if (!(det(i, j) > 0.0) || !(g(i, j, 0, 0) > 0.0))
                    throw DomainError("MetricGrid: not positive definite at (" +
                                      std::to_string(grid->u(i)) + ", " +
                                      std::to_string(grid->s(j)) + ")");
    }
};

enum class DerivSource { analytic, finite_difference };

/// First and second partial derivatives of the metric coefficients.
/// dg[m][sym(i,j)] is the derivative along m (0 = u, 1 = s); d2g adds a
/// second direction index, stored as uu / us / ss.
struct MetricDerivs {
    GridPtr grid;
    std::array<std::vector<double>, 6> dg;
    std::array<std::vector<double>, 9> d2g;
    DerivSource source = DerivSource::finite_difference;

    double d(std::size_t m, std::size_t a, std::size_t b, std::size_t idx) const {
        return dg[m * 3 + sym(a, b)][idx];
    }
    double d2(std::size_t m, std::size_t n, std::size_t a, std::size_t b,
              std::size_t idx) const {
        return d2g[(m + n) * 3 + sym(a, b)][idx];
    }
};

/// Christoffel symbols and the orthonormal frame components of X1, X2 in
/// the coordinate basis. gamma[k*3 + sym(i,j)] stores Gamma^k_ij.
struct ConnectionData {
    GridPtr grid;
    std::array<std::vector<double>, 6> gamma;
    std::vector<double> x1_u, x1_s, x2_u, x2_s;
    MetricDerivs derivs;

    double G(std::size_t k, std::size_t i, std::size_t j, std::size_t idx) const {
        return gamma[k * 3 + sym(i, j)][idx];
    }
};

/// a(u) = 3 K' / (8 (c - K)) and its first two u-derivatives, from the
/// profile state and the curvature ODE.
inline Jet2 metric_slope_jet(double c, double k, double kp) {
    const KDerivs kd = k_derivs(c, k, kp);
    const Jet2 kj(kd.k, kd.kp, kd.kpp), kpj(kd.kp, kd.kpp, kd.kppp);
    return (3.0 / 8.0) * kpj / (c - kj);
}

/// Theorem-family metric: g11 = a^2 s^2 + 1, g12 = -a s, g22 = 1 with
/// a = 3 K'/(8 (c-K)). det g == 1 identically.
inline MetricGrid build_metric(const CurvatureProfile& prof,
                               const std::vector<double>& s_nodes) {
    prof.check_invariants();
    auto grid = std::make_shared<const Grid2D>(Grid2D(prof.u, s_nodes));
    MetricGrid m(grid, prof.c);
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double a = 3.0 * prof.kp[i] / (8.0 * (prof.c - prof.k[i]));
        for (std::size_t j = 0; j < s_nodes.size(); ++j) {
            const double s = s_nodes[j];
            const std::size_t idx = grid->index(i, j);
            m.g11[idx] = a * a * s * s + 1.0;
            m.g12[idx] = -a * s;
            m.g22[idx] = 1.0;
        }
    }
    return m;
}

inline void require_same_grid(const MetricGrid& m, const CurvatureProfile& prof) {
    if (m.nu() != prof.size())
        throw GridError("metric grid and profile disagree in u-sample count");
    for (std::size_t i = 0; i < prof.size(); ++i)
        if (std::abs(m.grid->u(i) - prof.u[i]) > 1e-12 * std::max(1.0, std::abs(prof.u[i])))
            throw GridError("metric grid and profile disagree in u nodes");
}

/// Closed-form derivative bundle for a metric built from a profile.
inline MetricDerivs metric_derivs_analytic(const MetricGrid& m,
                                           const CurvatureProfile& prof) {
    require_same_grid(m, prof);
    MetricDerivs d;
    d.grid = m.grid;
    d.source = DerivSource::analytic;
    for (auto& v : d.dg) v.assign(m.grid->size(), 0.0);
    for (auto& v : d.d2g) v.assign(m.grid->size(), 0.0);
    for (std::size_t i = 0; i < m.nu(); ++i) {
        const Jet2 a = metric_slope_jet(prof.c, prof.k[i], prof.kp[i]);
        for (std::size_t j = 0; j < m.ns(); ++j) {
            const double s = m.grid->s(j);
            const std::size_t idx = m.grid->index(i, j);
            d.dg[0 * 3 + 0][idx] = 2.0 * a.f * a.d1 * s * s;          // E_u
            d.dg[1 * 3 + 0][idx] = 2.0 * a.f * a.f * s;               // E_s
            d.dg[0 * 3 + 1][idx] = -a.d1 * s;                         // F_u
            d.dg[1 * 3 + 1][idx] = -a.f;                              // F_s
            d.d2g[0 * 3 + 0][idx] = 2.0 * (a.d1 * a.d1 + a.f * a.d2) * s * s; // E_uu
            d.d2g[1 * 3 + 0][idx] = 4.0 * a.f * a.d1 * s;             // E_us
            d.d2g[2 * 3 + 0][idx] = 2.0 * a.f * a.f;                  // E_ss
            d.d2g[0 * 3 + 1][idx] = -a.d2 * s;                        // F_uu
            d.d2g[1 * 3 + 1][idx] = -a.d1;                            // F_us
        }
    }
    return d;
}

/// Finite-difference derivative bundle of an arbitrary metric grid.
inline MetricDerivs metric_derivs_fd(const MetricGrid& m) {
    MetricDerivs d;
    d.grid = m.grid;
    d.source = DerivSource::finite_difference;
    ScalarField comp(m.grid);
    const std::array<const std::vector<double>*, 3> coef = {&m.g11, &m.g12, &m.g22};
    for (std::size_t p = 0; p < 3; ++p) {
        comp.v = *coef[p];
        d.dg[0 * 3 + p] = diff_u(comp).v;
        d.dg[1 * 3 + p] = diff_s(comp).v;
        d.d2g[0 * 3 + p] = diff_uu(comp).v;
        d.d2g[1 * 3 + p] = diff_us(comp).v;
        d.d2g[2 * 3 + p] = diff_ss(comp).v;
    }
    return d;
}

namespace detail {
/// Inverse metric entries at a grid index.
inline void metric_inverse(const MetricGrid& m, std::size_t idx, double inv[2][2]) {
    const double det = m.g11[idx] * m.g22[idx] - m.g12[idx] * m.g12[idx];
    inv[0][0] = m.g22[idx] / det;
    inv[0][1] = -m.g12[idx] / det;
    inv[1][0] = inv[0][1];
    inv[1][1] = m.g11[idx] / det;
}
} // namespace detail

/// Christoffel symbols Gamma^k_ij = (1/2) g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
/// from a metric and a derivative bundle; also fills the frame components
/// X1 = (1/sigma) du - (g12/sigma) ds, X2 = ds with sigma^2 = det g / g22.
inline ConnectionData christoffels_from_derivs(const MetricGrid& m,
                                               const MetricDerivs& derivs) {
    ConnectionData conn;
    conn.grid = m.grid;
    conn.derivs = derivs;
    for (auto& v : conn.gamma) v.assign(m.grid->size(), 0.0);
    conn.x1_u.assign(m.grid->size(), 0.0);
    conn.x1_s.assign(m.grid->size(), 0.0);
    conn.x2_u.assign(m.grid->size(), 0.0);
    conn.x2_s.assign(m.grid->size(), 0.0);

    for (std::size_t i = 0; i < m.nu(); ++i) {
        for (std::size_t j = 0; j < m.ns(); ++j) {
            const std::size_t idx = m.grid->index(i, j);
            double inv[2][2];
            detail::metric_inverse(m, idx, inv);
            for (std::size_t k = 0; k < 2; ++k) {
                for (std::size_t a = 0; a < 2; ++a) {
                    for (std::size_t b = a; b < 2; ++b) {
                        double acc = 0.0;
                        for (std::size_t l = 0; l < 2; ++l) {
                            const double t = derivs.d(a, b, l, idx) +
                                             derivs.d(b, a, l, idx) -
                                             derivs.d(l, a, b, idx);
                            acc += inv[k][l] * t;
                        }
                        conn.gamma[k * 3 + sym(a, b)][idx] = 0.5 * acc;
                    }
                }
            }
            const double sigma = std::sqrt((m.g11[idx] * m.g22[idx] -
                                            m.g12[idx] * m.g12[idx]) / m.g22[idx]);
            conn.x1_u[idx] = 1.0 / sigma;
            conn.x1_s[idx] = -m.g12[idx] / (m.g22[idx] * sigma);
            conn.x2_u[idx] = 0.0;
            conn.x2_s[idx] = 1.0 / std::sqrt(m.g22[idx]);
        }
    }
    return conn;
}

inline ConnectionData christoffels_closed_form(const MetricGrid& m,
                                               const CurvatureProfile& prof) {
    return christoffels_from_derivs(m, metric_derivs_analytic(m, prof));
}

inline ConnectionData christoffels_fd(const MetricGrid& m) {
    if (m.nu() < 3 || m.ns() < 3)
        throw GridError("christoffels_fd: need at least 3 samples per axis");
    return christoffels_from_derivs(m, metric_derivs_fd(m));
}

/// Gauss-equation curvature
///   K = -(1/g11) { (G2_12)_u - (G2_11)_s + G1_12 G2_11 + G2_12 G2_12
///                  - G2_11 G2_22 - G1_11 G2_12 }
/// with finite-difference Christoffel symbols and their derivatives.
inline ScalarField gauss_curvature_fd(const MetricGrid& m) {
    if (m.nu() < 5 || m.ns() < 5)
        throw GridError("gauss_curvature_fd: need at least 5 samples per axis");
    const ConnectionData conn = christoffels_fd(m);
    ScalarField g2_12(m.grid), g2_11(m.grid);
    g2_12.v = conn.gamma[1 * 3 + sym(0, 1)];
    g2_11.v = conn.gamma[1 * 3 + sym(0, 0)];
    const ScalarField dg2_12_u = diff_u(g2_12);
    const ScalarField dg2_11_s = diff_s(g2_11);

    ScalarField k(m.grid);
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
        const double brace = dg2_12_u.v[idx] - dg2_11_s.v[idx] +
                             conn.gamma[0 * 3 + 1][idx] * conn.gamma[1 * 3 + 0][idx] +
                             conn.gamma[1 * 3 + 1][idx] * conn.gamma[1 * 3 + 1][idx] -
                             conn.gamma[1 * 3 + 0][idx] * conn.gamma[1 * 3 + 2][idx] -
                             conn.gamma[0 * 3 + 0][idx] * conn.gamma[1 * 3 + 1][idx];
        k.v[idx] = -brace / m.g11[idx];
    }
    return k;
}

/// Same Gauss-equation expression but with the Christoffel derivatives
/// assembled from a supplied derivative bundle,
///   d_m Gamma^k_ij = (1/2) [ d_m g^{kl} T_lij + g^{kl} d_m T_lij ],
/// so that two algebraic curvature routes can be compared on identical
/// analytic inputs.
inline ScalarField gauss_curvature_from_derivs(const MetricGrid& m,
                                               const MetricDerivs& derivs) {
    const ConnectionData conn = christoffels_from_derivs(m, derivs);
    ScalarField k(m.grid);
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
        double inv[2][2];
        detail::metric_inverse(m, idx, inv);
        // d_m g^{kl} = -g^{ka} (d_m g_ab) g^{bl}
        double dinv[2][2][2];
        for (std::size_t mm = 0; mm < 2; ++mm)
            for (std::size_t kk = 0; kk < 2; ++kk)
                for (std::size_t ll = 0; ll < 2; ++ll) {
                    double acc = 0.0;
                    for (std::size_t a = 0; a < 2; ++a)
                        for (std::size_t b = 0; b < 2; ++b)
                            acc -= inv[kk][a] * derivs.d(mm, a, b, idx) * inv[b][ll];
                    dinv[mm][kk][ll] = acc;
                }
        const auto dgamma = [&](std::size_t mdir, std::size_t k_, std::size_t a,
                                std::size_t b) {
            double acc = 0.0;
            for (std::size_t l = 0; l < 2; ++l) {
                const double t = derivs.d(a, b, l, idx) + derivs.d(b, a, l, idx) -
                                 derivs.d(l, a, b, idx);
                const double dt = derivs.d2(mdir, a, b, l, idx) +
                                  derivs.d2(mdir, b, a, l, idx) -
                                  derivs.d2(mdir, l, a, b, idx);
                acc += dinv[mdir][k_][l] * t + inv[k_][l] * dt;
            }
            return 0.5 * acc;
        };
        const double brace = dgamma(0, 1, 0, 1) - dgamma(1, 1, 0, 0) +
                             conn.G(0, 0, 1, idx) * conn.G(1, 0, 0, idx) +
                             conn.G(1, 0, 1, idx) * conn.G(1, 0, 1, idx) -
                             conn.G(1, 0, 0, idx) * conn.G(1, 1, 1, idx) -
                             conn.G(0, 0, 0, idx) * conn.G(1, 0, 1, idx);
        k.v[idx] = -brace / m.g11[idx];
    }
    return k;
}

/// Brioschi determinant curvature, the independent second algebraic route.
inline ScalarField brioschi_curvature(const MetricGrid& m, const MetricDerivs& d) {
    const auto det3 = [](const double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
               a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    ScalarField k(m.grid);
    for (std::size_t idx = 0; idx < m.grid->size(); ++idx) {
        const double E = m.g11[idx], F = m.g12[idx], G = m.g22[idx];
        const double Eu = d.d(0, 0, 0, idx), Es = d.d(1, 0, 0, idx);
        const double Fu = d.d(0, 0, 1, idx), Fs = d.d(1, 0, 1, idx);
        const double Gu = d.d(0, 1, 1, idx), Gs = d.d(1, 1, 1, idx);
        const double Ess = d.d2(1, 1, 0, 0, idx);
        const double Fus = d.d2(0, 1, 0, 1, idx);
        const double Guu = d.d2(0, 0, 1, 1, idx);
        const double m1[3][3] = {
            {-0.5 * Ess + Fus - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Es},
            {Fs - 0.5 * Gu, E, F},
            {0.5 * Gs, F, G}};
        const double m2[3][3] = {{0.0, 0.5 * Es, 0.5 * Gu},
                                 {0.5 * Es, E, F},
                                 {0.5 * Gu, F, G}};
        const double den = E * G - F * F;
        k.v[idx] = (det3(m1) - det3(m2)) / (den * den);
    }
    return k;
}

inline ScalarField brioschi_curvature_fd(const MetricGrid& m) {
    if (m.nu() < 5 || m.ns() < 5)
        throw GridError("brioschi_curvature_fd: need at least 5 samples per axis");
    return brioschi_curvature(m, metric_derivs_fd(m));
}

/// Geodesic curvature of the level curves s -> X(u,s): kappa = -dg12/ds
/// by differencing. The closed form 3K'/(8(c-K)) is kappa_closed_form.
inline ScalarField level_curve_curvature(const MetricGrid& m) {
    ScalarField g12f(m.grid);
    g12f.v = m.g12;
    ScalarField kappa = diff_s(g12f);
    for (double& v : kappa.v) v = -v;
    return kappa;
}

inline std::vector<double> kappa_closed_form(const CurvatureProfile& prof) {
    std::vector<double> kappa(prof.size());
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double cmk = prof.c - prof.k[i];
        if (!(cmk > eps_dom(prof.c, prof.k[i])))
            throw DomainError("kappa_closed_form: c - K <= eps_dom");
        kappa[i] = 3.0 * prof.kp[i] / (8.0 * cmk);
    }
    return kappa;
}

/// Residuals of the four frame-connection identities of the theorem metric:
///   D_X1 X1 = 0, D_X1 X2 = 0, D_X2 X2 = -kappa X1, D_X2 X1 = kappa X2.
/// Each field holds the metric norm of the residual vector.
struct FrameConnectionResiduals {
    ScalarField x1x1, x1x2, x2x2, x2x1;
    ScalarField frame_g11, frame_g22, frame_g12; // orthonormality checks
};

inline FrameConnectionResiduals frame_connection_check(const MetricGrid& m,
                                                       const CurvatureProfile& prof,
                                                       const ConnectionData& conn) {
    require_same_grid(m, prof);
    if (conn.grid->size() != m.grid->size())
        throw GridError("frame_connection_check: connection grid mismatch");
    const std::vector<double> kappa = kappa_closed_form(prof);

    FrameConnectionResiduals out{ScalarField(m.grid), ScalarField(m.grid),
                                 ScalarField(m.grid), ScalarField(m.grid),
                                 ScalarField(m.grid), ScalarField(m.grid),
                                 ScalarField(m.grid)};

    const auto norm_g = [&](std::size_t idx, double vu, double vs) {
        return std::sqrt(std::max(0.0, m.g11[idx] * vu * vu +
                                           2.0 * m.g12[idx] * vu * vs +
                                           m.g22[idx] * vs * vs));
    };

    for (std::size_t i = 0; i < m.nu(); ++i) {
        for (std::size_t j = 0; j < m.ns(); ++j) {
            const std::size_t idx = m.grid->index(i, j);
            const double x1u = conn.x1_u[idx], x1s = conn.x1_s[idx];
            const double x2u = conn.x2_u[idx], x2s = conn.x2_s[idx];

            // Directional derivatives of the frame component fields. Only
            // x1_s = -g12/sigma varies; its partials come from the bundle
            // that produced the connection (sigma == 1 for theorem grids).
            const double dx1s_u = -conn.derivs.d(0, 0, 1, idx);
            const double dx1s_s = -conn.derivs.d(1, 0, 1, idx);

            const auto covariant = [&](double au, double as, double bu, double bs,
                                       double dbu_u, double dbu_s, double dbs_u,
                                       double dbs_s, double& ou, double& os) {
                ou = au * dbu_u + as * dbu_s;
                os = au * dbs_u + as * dbs_s;
                for (std::size_t p = 0; p < 2; ++p) {
                    for (std::size_t q = 0; q < 2; ++q) {
                        const double ap = (p == 0) ? au : as;
                        const double bq = (q == 0) ? bu : bs;
                        ou += ap * bq * conn.G(0, p, q, idx);
                        os += ap * bq * conn.G(1, p, q, idx);
                    }
                }
            };

            double ru, rs;
            covariant(x1u, x1s, x1u, x1s, 0.0, 0.0, dx1s_u, dx1s_s, ru, rs);
            out.x1x1.v[idx] = norm_g(idx, ru, rs);

            covariant(x1u, x1s, x2u, x2s, 0.0, 0.0, 0.0, 0.0, ru, rs);
            out.x1x2.v[idx] = norm_g(idx, ru, rs);

            covariant(x2u, x2s, x2u, x2s, 0.0, 0.0, 0.0, 0.0, ru, rs);
            out.x2x2.v[idx] = norm_g(idx, ru + kappa[i] * x1u, rs + kappa[i] * x1s);

            covariant(x2u, x2s, x1u, x1s, 0.0, 0.0, dx1s_u, dx1s_s, ru, rs);
            out.x2x1.v[idx] = norm_g(idx, ru - kappa[i] * x2u, rs - kappa[i] * x2s);

            const double n11 = m.g11[idx] * x1u * x1u + 2 * m.g12[idx] * x1u * x1s +
                               m.g22[idx] * x1s * x1s;
            const double n22 = m.g11[idx] * x2u * x2u + 2 * m.g12[idx] * x2u * x2s +
                               m.g22[idx] * x2s * x2s;
            const double n12 = m.g11[idx] * x1u * x2u +
                               m.g12[idx] * (x1u * x2s + x1s * x2u) +
                               m.g22[idx] * x1s * x2s;
            out.frame_g11.v[idx] = n11 - 1.0;
            out.frame_g22.v[idx] = n22 - 1.0;
            out.frame_g12.v[idx] = n12;
        }
    }
    return out;
}

/// Orthogonal chart of the remark: (u,s) -> (u, v = (c-K)^{3/8} s) turns the
/// theorem metric into du^2 + (c-K)^{-3/4} dv^2.
inline MetricGrid to_orthogonal(const MetricGrid& m, const CurvatureProfile& prof) {
    require_same_grid(m, prof);
    double vmax = 0.0;
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double cmk = prof.c - prof.k[i];
        if (!(cmk > eps_dom(prof.c, prof.k[i])))
            throw DomainError("to_orthogonal: c - K <= eps_dom");
        vmax = std::max(vmax, std::pow(cmk, 3.0 / 8.0));
    }
    const double s_lo = m.grid->s(0), s_hi = m.grid->s(m.ns() - 1);
    auto grid = make_grid(prof.u.front(), prof.u.back(), prof.size(),
                          vmax * s_lo, vmax * s_hi, m.ns());
    MetricGrid out(grid, prof.c);
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double lam = std::pow(prof.c - prof.k[i], -3.0 / 4.0);
        for (std::size_t j = 0; j < m.ns(); ++j) {
            const std::size_t idx = grid->index(i, j);
            out.g11[idx] = 1.0;
            out.g12[idx] = 0.0;
            out.g22[idx] = lam;
        }
    }
    return out;
}

/// Isothermal chart: utilde = integral of (c-K)^{3/8} du from u0, metric
/// becomes (c-K)^{-3/4} (d utilde^2 + d vtilde^2). Keeps the inverse map
/// and the curvature along it for verification.
struct IsothermalChart {
    MetricGrid metric;
    std::vector<double> u_of_ut;  // u(utilde) at the utilde nodes
    std::vector<double> k_of_ut;  // K(u(utilde))
    bool coarse_warning = false;  // quadrature vs trapezoid disagree noticeably
};

inline IsothermalChart to_isothermal(const MetricGrid& m, const CurvatureProfile& prof,
                                     double u0) {
    require_same_grid(m, prof);
    if (u0 < prof.u.front() - 1e-12 || u0 > prof.u.back() + 1e-12)
        throw DomainError("to_isothermal: u0 outside the profile range");

    const std::size_t n = prof.size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double cmk = prof.c - prof.k[i];
        if (!(cmk > eps_dom(prof.c, prof.k[i])))
            throw DomainError("to_isothermal: c - K <= eps_dom");
        w[i] = std::pow(cmk, 3.0 / 8.0);
    }
    std::vector<double> cum = cumulative_integral(prof.u, w);
    double trap = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        trap += 0.5 * (w[i] + w[i + 1]) * (prof.u[i + 1] - prof.u[i]);

    const Pchip cum_of_u(prof.u, cum);
    const double shift = cum_of_u(u0);
    for (double& cval : cum) cval -= shift;

    IsothermalChart chart;
    chart.coarse_warning = std::abs((cum.back() - cum.front()) - trap) >
                           1e-6 * std::max(1.0, std::abs(trap));

    const Pchip u_of_cum(cum, prof.u);
    const Pchip k_of_u(prof.u, prof.k);

    auto grid = make_grid(cum.front(), cum.back(), n, m.grid->s(0),
                          m.grid->s(m.ns() - 1), m.ns());
    chart.metric = MetricGrid(grid, prof.c);
    chart.u_of_ut.resize(n);
    chart.k_of_ut.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double uu = u_of_cum(grid->u(i));
        const double kk = k_of_u(uu);
        chart.u_of_ut[i] = uu;
        chart.k_of_ut[i] = kk;
        const double lam = std::pow(prof.c - kk, -3.0 / 4.0);
        for (std::size_t j = 0; j < m.ns(); ++j) {
            const std::size_t idx = grid->index(i, j);
            chart.metric.g11[idx] = lam;
            chart.metric.g12[idx] = 0.0;
            chart.metric.g22[idx] = lam;
        }
    }
    return chart;
}

} // namespace biconserve

#endif
