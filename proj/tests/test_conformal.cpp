#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "biconserve/conformal.hpp"
#include "biconserve/profile.hpp"
#include "oracles.hpp"

using namespace biconserve;

namespace {
std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

struct Fixture {
    CurvatureProfile prof;
    MetricGrid metric;
    ScalarField k;
};

Fixture theorem_fixture(double c, double k0, double span, std::size_t n) {
    Fixture fx;
    fx.prof = integrate_profile(c, k0, 1.0, 0.0, span, 1e-12, n);
    fx.metric = build_metric(fx.prof, linspace(-1.0, 1.0, n));
    fx.k = ScalarField(fx.metric.grid);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) fx.k.at(i, j) = fx.prof.k[i];
    return fx;
}

/// Exact frame Laplacian of log(c-K) on theorem grids (equals -(8/3)K).
ScalarField exact_delta_log(const Fixture& fx) {
    ScalarField out(fx.metric.grid);
    for (std::size_t i = 0; i < fx.metric.nu(); ++i) {
        const double k = fx.prof.k[i], kp = fx.prof.kp[i], c = fx.prof.c;
        const double kpp = ode_rhs(c, k, kp);
        const double cmk = c - k;
        const double h1 = -kp / cmk;
        const double h2 = -(kpp * cmk + kp * kp) / (cmk * cmk);
        const double lap = frame_laplacian(c, k, kp, h1, h2);
        for (std::size_t j = 0; j < fx.metric.ns(); ++j) out.at(i, j) = lap;
    }
    return out;
}
} // namespace

TEST_CASE("laplace_beltrami: constants and the flat-metric paraboloid") {
    auto grid = make_grid(0.0, 1.0, 31, 0.0, 1.0, 31);
    const MetricGrid flat = oracles::sample_metric(oracles::flat_metric(), grid, 0.0);
    const ScalarField c1 = make_field(grid, [](double, double) { return 3.25; });
    REQUIRE(field_stats(laplace_beltrami(flat, c1)).max_abs < 1e-13);

    // geometer's sign convention: Delta(u^2 + s^2) = -4
    const ScalarField h = make_field(grid, [](double u, double s) { return u * u + s * s; });
    const ScalarField lap = laplace_beltrami(flat, h);
    for (double v : lap.v) REQUIRE(v == Catch::Approx(-4.0).margin(1e-10));
}

TEST_CASE("product rule of the intermediate Laplacian identity holds to O(h^2)") {
    double gap_h = 0.0, gap_h2 = 0.0;
    for (int lvl = 0; lvl < 2; ++lvl) {
        const std::size_t n = lvl == 0 ? 41 : 81;
        const Fixture fx = theorem_fixture(0.0, -1.0, 0.2, n);
        const auto r = make_field(fx.metric.grid,
                                  [](double u, double s) { return std::sin(u + 0.3 * s); });
        const auto w = make_field(fx.metric.grid,
                                  [](double u, double s) { return std::cos(2.0 * u - s); });
        ScalarField rw(fx.metric.grid);
        for (std::size_t idx = 0; idx < rw.v.size(); ++idx)
            rw.v[idx] = r.v[idx] * w.v[idx];
        const ScalarField lhs = laplace_beltrami(fx.metric, rw);
        const ScalarField lr = laplace_beltrami(fx.metric, r);
        const ScalarField lw = laplace_beltrami(fx.metric, w);
        // g(grad r, grad w) by polarization of the shared-stencil |grad .|^2
        ScalarField rpw(fx.metric.grid), rmw(fx.metric.grid);
        for (std::size_t idx = 0; idx < rw.v.size(); ++idx) {
            rpw.v[idx] = r.v[idx] + w.v[idx];
            rmw.v[idx] = r.v[idx] - w.v[idx];
        }
        const ScalarField gp = grad_squared(fx.metric, rpw);
        const ScalarField gm = grad_squared(fx.metric, rmw);
        ScalarField res(fx.metric.grid);
        for (std::size_t idx = 0; idx < rw.v.size(); ++idx) {
            const double cross = 0.25 * (gp.v[idx] - gm.v[idx]);
            res.v[idx] = lhs.v[idx] -
                         (r.v[idx] * lw.v[idx] + w.v[idx] * lr.v[idx] - 2.0 * cross);
        }
        (lvl == 0 ? gap_h : gap_h2) = field_stats(res, 2).max_abs;
    }
    REQUIRE(gap_h / gap_h2 > 2.5);
    REQUIRE(gap_h / gap_h2 < 6.5);
}

TEST_CASE("conformal_gauss: identity, constant scaling, and fd cross-check") {
    const Fixture fx = theorem_fixture(0.0, -1.0, 0.2, 61);

    ConformalFactor zero{make_field(fx.metric.grid, [](double, double) { return 0.0; })};
    const ScalarField k0 = conformal_gauss(fx.metric, fx.k, zero);
    for (std::size_t idx = 0; idx < k0.v.size(); ++idx)
        REQUIRE(k0.v[idx] == Catch::Approx(fx.k.v[idx]).margin(1e-13));

    ConformalFactor ln2{
        make_field(fx.metric.grid, [](double, double) { return std::log(2.0); })};
    const ScalarField k2 = conformal_gauss(fx.metric, fx.k, ln2);
    for (std::size_t idx = 0; idx < k2.v.size(); ++idx)
        REQUIRE(k2.v[idx] == Catch::Approx(fx.k.v[idx] / 4.0).margin(1e-13));

    // phi = (3/8) log(c-K): conformal_gauss against the discrete curvature
    // of the scaled metric (independent route), interior O(h^2)
    ScalarField phi(fx.metric.grid);
    for (std::size_t i = 0; i < fx.metric.nu(); ++i)
        for (std::size_t j = 0; j < fx.metric.ns(); ++j)
            phi.at(i, j) = 3.0 / 8.0 * std::log(fx.prof.c - fx.prof.k[i]);
    ConformalFactor factor{phi};
    const ScalarField via_law = conformal_gauss(fx.metric, fx.k, factor);
    const ScalarField via_fd = gauss_curvature_fd(conformal_scale(fx.metric, phi));
    ScalarField gap(fx.metric.grid);
    for (std::size_t idx = 0; idx < gap.v.size(); ++idx)
        gap.v[idx] = via_law.v[idx] - via_fd.v[idx];
    REQUIRE(field_stats(gap, 2).max_abs < 2e-3);
}

TEST_CASE("conformal laplacian law: zero, constant, and smooth factors") {
    const Fixture fx = theorem_fixture(0.0, -1.0, 0.2, 41);
    const auto h = make_field(fx.metric.grid,
                              [](double u, double s) { return std::sin(3.0 * u) + s * s; });

    ConformalFactor zero{make_field(fx.metric.grid, [](double, double) { return 0.0; })};
    REQUIRE(conformal_laplacian_check(fx.metric, zero, h, 1e-12).max_residual < 1e-14);

    ConformalFactor cst{make_field(fx.metric.grid, [](double, double) { return 0.7; })};
    REQUIRE(conformal_laplacian_check(fx.metric, cst, h, 1e-10).passed);

    double r_h = 0.0, r_h2 = 0.0;
    for (int lvl = 0; lvl < 2; ++lvl) {
        const std::size_t n = lvl == 0 ? 41 : 81;
        const Fixture f2 = theorem_fixture(0.0, -1.0, 0.2, n);
        ConformalFactor smooth{make_field(
            f2.metric.grid, [](double u, double s) { return 0.2 * u + 0.1 * s * s; })};
        const auto h2 = make_field(f2.metric.grid,
                                   [](double u, double s) { return std::sin(3.0 * u) + s * s; });
        (lvl == 0 ? r_h : r_h2) =
            conformal_laplacian_check(f2.metric, smooth, h2, 1.0).max_residual;
    }
    REQUIRE(r_h / r_h2 > 2.5);
    REQUIRE(r_h / r_h2 < 6.5);
}

TEST_CASE("biconservative ricci conditions co-pass on theorem grids") {
    for (double c : {0.0, 1.0}) {
        const Fixture fx = theorem_fixture(c, c - 1.0, 0.2, 61);
        const auto r1 = ricci_condition(fx.metric, fx.k, c, RicciVariant::biconservative,
                                        RicciForm::i);
        const auto r2 = ricci_condition(fx.metric, fx.k, c, RicciVariant::biconservative,
                                        RicciForm::ii);
        const auto r3 = ricci_condition(fx.metric, fx.k, c, RicciVariant::biconservative,
                                        RicciForm::iii);
        INFO("c = " << c << " residuals " << r1.max_residual << " " << r2.max_residual
                    << " " << r3.max_residual);
        REQUIRE(r1.passed);
        REQUIRE(r2.passed);
        REQUIRE(r3.passed);
        if (c == 0.0) {
            const auto r4 = ricci_condition(fx.metric, fx.k, c,
                                            RicciVariant::biconservative, RicciForm::iv);
            REQUIRE(r4.passed);
        }
    }
}

TEST_CASE("minimal ricci conditions co-pass on the catenoid and a flat fixture") {
    // Fixture-scaled tolerances: the catenoid carries larger derivative
    // constants than the theorem grids, and all four forms must co-pass at
    // one O(h^2) tolerance class.
    auto grid = make_grid(-0.5, 0.5, 81, 0.0, 1.0, 81);
    const MetricGrid cat = oracles::sample_metric(oracles::catenoid_metric(), grid, 0.0);
    const ScalarField k = oracles::catenoid_curvature(grid);
    const double tol = 1e-2;
    const auto r1 = ricci_condition(cat, k, 0.0, RicciVariant::minimal, RicciForm::i, tol);
    const auto r2 = ricci_condition(cat, k, 0.0, RicciVariant::minimal, RicciForm::ii, tol);
    const auto r3 = ricci_condition(cat, k, 0.0, RicciVariant::minimal, RicciForm::iii, tol);
    const auto r4 = ricci_condition(cat, k, 0.0, RicciVariant::minimal, RicciForm::iv, tol);
    INFO("catenoid residuals " << r1.max_residual << " " << r2.max_residual << " "
                               << r3.max_residual << " " << r4.max_residual);
    REQUIRE(r1.passed);
    REQUIRE(r2.passed);
    REQUIRE(r3.passed);
    REQUIRE(r4.passed);

    // and the residuals decay at second order
    auto fine = make_grid(-0.5, 0.5, 161, 0.0, 1.0, 161);
    const MetricGrid catf = oracles::sample_metric(oracles::catenoid_metric(), fine, 0.0);
    const ScalarField k_fine = oracles::catenoid_curvature(fine);
    const auto r1f =
        ricci_condition(catf, k_fine, 0.0, RicciVariant::minimal, RicciForm::i, tol);
    REQUIRE(r1.max_residual / r1f.max_residual > 2.5);
    REQUIRE(r1.max_residual / r1f.max_residual < 6.5);

    // Clifford-style fixture: flat metric in c = 1 satisfies the minimal
    // conditions identically (K = 0).
    auto fgrid = make_grid(0.0, 1.0, 21, 0.0, 1.0, 21);
    const MetricGrid flat = oracles::sample_metric(oracles::flat_metric(), fgrid, 1.0);
    const ScalarField kf(fgrid);
    REQUIRE(ricci_condition(flat, kf, 1.0, RicciVariant::minimal, RicciForm::i, 1e-10).passed);
    REQUIRE(ricci_condition(flat, kf, 1.0, RicciVariant::minimal, RicciForm::ii, 1e-10).passed);
    REQUIRE(ricci_condition(flat, kf, 1.0, RicciVariant::minimal, RicciForm::iii, 1e-10).passed);
}

TEST_CASE("minimal form (ii) on a biconservative grid misses by (4/3)K") {
    const Fixture fx = theorem_fixture(0.0, -1.0, 0.2, 61);
    const auto rep = ricci_condition(fx.metric, fx.k, 0.0, RicciVariant::minimal,
                                     RicciForm::ii, 1e10);
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < fx.metric.nu(); ++i)
        for (std::size_t j = 2; j + 2 < fx.metric.ns(); ++j)
            worst = std::max(worst, std::abs(rep.residual.at(i, j) -
                                             4.0 / 3.0 * fx.prof.k[i]));
    REQUIRE(worst < 2e-3);
    REQUIRE_FALSE(ricci_condition(fx.metric, fx.k, 0.0, RicciVariant::minimal,
                                  RicciForm::ii).passed);
}

TEST_CASE("form iv demands c = 0 and c - K > 0 is enforced") {
    const Fixture fx = theorem_fixture(1.0, 0.0, 0.2, 21);
    REQUIRE_THROWS_AS(ricci_condition(fx.metric, fx.k, 1.0, RicciVariant::biconservative,
                                      RicciForm::iv),
                      ConfigError);
    ScalarField bad = fx.k;
    for (double& v : bad.v) v = 2.0; // K > c
    REQUIRE_THROWS_AS(ricci_condition(fx.metric, bad, 1.0, RicciVariant::biconservative,
                                      RicciForm::i),
                      DomainError);
}

TEST_CASE("power metric curvature: identity, paper value, closed family") {
    const Fixture fx = theorem_fixture(0.0, -1.0, 0.2, 61);
    const ScalarField dlog = exact_delta_log(fx);

    const ScalarField k0 = power_metric_curvature(fx.metric, fx.k, 0.0, 0.0, dlog);
    for (std::size_t idx = 0; idx < k0.v.size(); ++idx)
        REQUIRE(k0.v[idx] == Catch::Approx(fx.k.v[idx]).margin(1e-13));

    // K_{1/2} at the K = -1 sample is -1/3; with the exact frame Laplacian
    // the closed family K_r = -((3-4r)/3)(-K)^{1-r} holds to rounding.
    const ScalarField k_half = power_metric_curvature(fx.metric, fx.k, 0.0, 0.5, dlog);
    REQUIRE(k_half.at(0, 0) == Catch::Approx(-1.0 / 3.0).epsilon(1e-12));
    for (double r : {0.25, 0.5, 0.7}) {
        const ScalarField kr = power_metric_curvature(fx.metric, fx.k, 0.0, r, dlog);
        for (std::size_t i = 0; i < fx.metric.nu(); ++i) {
            const double expect = -(3.0 - 4.0 * r) / 3.0 *
                                  std::pow(-fx.prof.k[i], 1.0 - r);
            REQUIRE(kr.at(i, 0) == Catch::Approx(expect).epsilon(1e-11));
        }
    }

    // discretized Laplacian path agrees to O(h^2)
    const ScalarField k_disc = power_metric_curvature(fx.metric, fx.k, 0.0, 0.5);
    double gap = 0.0;
    for (std::size_t i = 2; i + 2 < fx.metric.nu(); ++i)
        for (std::size_t j = 2; j + 2 < fx.metric.ns(); ++j)
            gap = std::max(gap, std::abs(k_disc.at(i, j) - k_half.at(i, j)));
    REQUIRE(gap < 2e-3);

    // r = 3/4 kills the principal term: |K_{3/4}| small on biconservative grids
    const ScalarField k34 = power_metric_curvature(fx.metric, fx.k, 0.0, 0.75, dlog);
    REQUIRE(field_stats(k34).max_abs < 1e-11);
}

TEST_CASE("ricci transform: c = 0 theorem metric becomes a ricci surface") {
    const Fixture fx = theorem_fixture(0.0, -1.0, 0.25, 81);
    const RicciTransformResult tr = ricci_transform(fx.metric, fx.k);
    INFO("precondition " << tr.precondition.max_residual << " ricci "
                         << tr.ricci.max_residual);
    REQUIRE(tr.precondition.passed);
    REQUIRE(tr.ricci.passed);
    // K_{1/2} = -(1/3)(-K)^{1/2} away from the boundary stencil layers
    for (std::size_t i = 2; i + 2 < fx.metric.nu(); ++i) {
        const double expect = -std::sqrt(-fx.prof.k[i]) / 3.0;
        REQUIRE(tr.scaled_curvature.at(i, fx.metric.ns() / 2) ==
                Catch::Approx(expect).epsilon(1e-3));
    }
    REQUIRE_THROWS_AS(ricci_transform(fx.metric, ScalarField(fx.metric.grid, 0.5)),
                      DomainError);
}

TEST_CASE("remark: the inverse power metric satisfies cond:Kr3") {
    const Fixture fx = theorem_fixture(0.0, -1.0, 0.25, 81);
    const RicciTransformResult tr = ricci_transform(fx.metric, fx.k);

    // g* = (-Khat)^{-1} ghat with curvature K* = power curvature at r = -1.
    ScalarField w(tr.scaled.grid);
    for (std::size_t idx = 0; idx < w.v.size(); ++idx)
        w.v[idx] = -1.0 / tr.scaled_curvature.v[idx];
    const MetricGrid gstar = weighted_metric(tr.scaled, w);
    const ScalarField kstar =
        power_metric_curvature(tr.scaled, tr.scaled_curvature, 0.0, -1.0);

    const ScalarField lap = laplace_beltrami(gstar, kstar);
    const ScalarField gsq = grad_squared(gstar, kstar);
    ScalarField res(gstar.grid);
    double scale = 0.0;
    for (std::size_t idx = 0; idx < res.v.size(); ++idx) {
        res.v[idx] = kstar.v[idx] * lap.v[idx] + gsq.v[idx] +
                     8.0 / 3.0 * kstar.v[idx] * kstar.v[idx] * kstar.v[idx];
        scale = std::max(scale, std::abs(kstar.v[idx]));
    }
    // kstar stacks four stencil levels on a derived field; exclude the
    // contaminated layers from the statistic.
    REQUIRE(field_stats(res, 6).max_abs < 2e-3 * scale);
}

TEST_CASE("power-exponent composition: two steps agree with one conformal change") {
    const Fixture fx = theorem_fixture(0.0, -1.0, 0.25, 81);
    const ScalarField dlog = exact_delta_log(fx);
    const ScalarField k_half = power_metric_curvature(fx.metric, fx.k, 0.0, 0.5, dlog);

    // two steps: g -> (-K)^{1/2} g -> (-K_half)^{-1} (-K)^{1/2} g
    ScalarField w(fx.metric.grid);
    for (std::size_t idx = 0; idx < w.v.size(); ++idx)
        w.v[idx] = std::sqrt(-fx.k.v[idx]);
    const MetricGrid ghalf = weighted_metric(fx.metric, w);
    const ScalarField k_two = power_metric_curvature(ghalf, k_half, 0.0, -1.0);

    // one step from g with the composed factor
    ScalarField phi(fx.metric.grid);
    for (std::size_t idx = 0; idx < phi.v.size(); ++idx)
        phi.v[idx] = 0.5 * std::log(std::sqrt(-fx.k.v[idx]) / (-k_half.v[idx]));
    const ScalarField k_one = conformal_gauss(fx.metric, fx.k, ConformalFactor{phi});

    double gap = 0.0;
    for (std::size_t i = 2; i + 2 < fx.metric.nu(); ++i)
        for (std::size_t j = 2; j + 2 < fx.metric.ns(); ++j)
            gap = std::max(gap, std::abs(k_two.at(i, j) - k_one.at(i, j)));
    REQUIRE(gap < 5e-3);
}

TEST_CASE("discrete log-Laplacian identity from the proof of Prop 3.1") {
    double gap_h = 0.0, gap_h2 = 0.0;
    for (int lvl = 0; lvl < 2; ++lvl) {
        const std::size_t n = lvl == 0 ? 41 : 81;
        const Fixture fx = theorem_fixture(0.0, -1.0, 0.2, n);
        ScalarField logf(fx.metric.grid);
        for (std::size_t idx = 0; idx < logf.v.size(); ++idx)
            logf.v[idx] = std::log(fx.prof.c - fx.k.v[idx]);
        const ScalarField lhs = laplace_beltrami(fx.metric, logf);
        const ScalarField lk = laplace_beltrami(fx.metric, fx.k);
        const ScalarField gk = grad_squared(fx.metric, fx.k);
        ScalarField res(fx.metric.grid);
        for (std::size_t idx = 0; idx < res.v.size(); ++idx) {
            const double cmk = fx.prof.c - fx.k.v[idx];
            res.v[idx] = lhs.v[idx] -
                         ((fx.k.v[idx] - fx.prof.c) * lk.v[idx] + gk.v[idx]) / (cmk * cmk);
        }
        (lvl == 0 ? gap_h : gap_h2) = field_stats(res, 2).max_abs;
    }
    REQUIRE(gap_h / gap_h2 > 2.5);
    REQUIRE(gap_h / gap_h2 < 6.5);
}
