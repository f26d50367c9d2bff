#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "biconserve/flattener.hpp"
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
} // namespace

TEST_CASE("kr_of_function_r: identity at r = 0 and the constant-r closed family") {
    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.3, 1e-12, 101);

    const ExponentProfile zero = ExponentProfile::constant(prof, 0.0);
    const std::vector<double> k0 = kr_of_function_r(prof, zero);
    for (std::size_t i = 0; i < prof.size(); ++i)
        REQUIRE(k0[i] == Catch::Approx(prof.k[i]).epsilon(1e-14));

    for (double r : {0.25, 0.5, 0.7}) {
        const ExponentProfile rc = ExponentProfile::constant(prof, r);
        const std::vector<double> kr = kr_of_function_r(prof, rc);
        for (std::size_t i = 0; i < prof.size(); ++i) {
            const double expect = -(3.0 - 4.0 * r) / 3.0 * std::pow(-prof.k[i], 1.0 - r);
            REQUIRE(kr[i] == Catch::Approx(expect).epsilon(1e-13));
        }
    }
}

TEST_CASE("kr_of_function_r reduces to the power-metric curvature for constant r") {
    const CurvatureProfile prof = integrate_profile(1.0, -1.0, 1.0, 0.0, 0.3, 1e-12, 101);
    const MetricGrid m = build_metric(prof, linspace(-1.0, 1.0, 11));
    ScalarField k(m.grid);
    for (std::size_t i = 0; i < m.nu(); ++i)
        for (std::size_t j = 0; j < m.ns(); ++j) k.at(i, j) = prof.k[i];
    // exact frame Laplacian of log(c - K)
    ScalarField dlog(m.grid);
    for (std::size_t i = 0; i < m.nu(); ++i) {
        const double c = prof.c, kk = prof.k[i], kp = prof.kp[i];
        const double kpp = ode_rhs(c, kk, kp);
        const double cmk = c - kk;
        const double lap = frame_laplacian(c, kk, kp, -kp / cmk,
                                           -(kpp * cmk + kp * kp) / (cmk * cmk));
        for (std::size_t j = 0; j < m.ns(); ++j) dlog.at(i, j) = lap;
    }
    for (double r : {0.3, 0.75}) {
        const ScalarField pk = power_metric_curvature(m, k, prof.c, r, dlog);
        const std::vector<double> fk =
            kr_of_function_r(prof, ExponentProfile::constant(prof, r));
        for (std::size_t i = 0; i < prof.size(); ++i)
            REQUIRE(fk[i] == Catch::Approx(pk.at(i, 0)).margin(1e-10));
    }
}

TEST_CASE("flatten_residual: r = 1/2 solves the c = 0 problem") {
    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.2, 1e-12, 201);
    const std::vector<double> res =
        flatten_residual(prof, ExponentProfile::constant(prof, 0.5));
    REQUIRE(vector_stats(res, 2).max_abs < 5e-6);
}

TEST_CASE("flatten_residual at r = 0 reproduces the Prop 3.2 mismatch K/3") {
    // phi = (1/4) log(-K) and Delta log(-K) = -(8/3)K give R = K/3 exactly.
    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.2, 1e-12, 201);
    const std::vector<double> res =
        flatten_residual(prof, ExponentProfile::constant(prof, 0.0));
    for (std::size_t i = 2; i + 2 < prof.size(); ++i) {
        REQUIRE(res[i] == Catch::Approx(prof.k[i] / 3.0).margin(5e-6));
        REQUIRE(std::abs(res[i]) > 0.1);
    }
}

TEST_CASE("flatten_residual responds linearly to exponent perturbations") {
    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.2, 1e-12, 101);
    const ExponentProfile base = ExponentProfile::constant(prof, 0.5);
    // direction field v(u) = sin(3u) with consistent derivatives
    ExponentProfile dir = base;
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double u = prof.u[i];
        dir.r[i] = std::sin(3.0 * u);
        dir.rp[i] = 3.0 * std::cos(3.0 * u);
        dir.rpp[i] = -9.0 * std::sin(3.0 * u);
        dir.rppp[i] = -27.0 * std::cos(3.0 * u);
    }
    const auto shifted = [&](double eps) {
        ExponentProfile e = base;
        for (std::size_t i = 0; i < prof.size(); ++i) {
            e.r[i] += eps * dir.r[i];
            e.rp[i] += eps * dir.rp[i];
            e.rpp[i] += eps * dir.rpp[i];
            e.rppp[i] += eps * dir.rppp[i];
        }
        return flatten_residual(prof, e);
    };
    const double eps = 1e-5;
    const std::vector<double> rp = shifted(eps), rm = shifted(-eps), r0 = shifted(0.0);
    for (std::size_t i = 2; i + 2 < prof.size(); ++i) {
        const double one_sided = (rp[i] - r0[i]) / eps;
        const double central = (rp[i] - rm[i]) / (2.0 * eps);
        // first-order agreement: the gap is O(eps) relative to the slope scale
        REQUIRE(one_sided == Catch::Approx(central).margin(1e-3 * (1.0 + std::abs(central))));
    }
}

TEST_CASE("feasibility_check evaluates the initial-condition inequality literally") {
    const auto prof = oracles::synthetic_profile(0.0, {0.0, 0.1}, {-1.0, -0.9}, {1.0, 1.0});
    const Feasibility f1 = feasibility_check(prof, 0.5, 0.0, 0.0);
    REQUIRE(f1.feasible);
    REQUIRE(f1.margin == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
    const Feasibility f2 = feasibility_check(prof, 0.75, 0.0, 0.0);
    REQUIRE_FALSE(f2.feasible);
    REQUIRE(f2.margin == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("solve_exponent rejects infeasible initial data") {
    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.2, 1e-10, 51);
    REQUIRE_THROWS_AS(solve_exponent(prof, 0.75, 0.0, 0.0, 0.0, ExponentMethod::shooting),
                      InfeasibleError);
}

TEST_CASE("c = 0 constant solution: both methods return r = 1/2") {
    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.3, 1e-12, 101);
    const ExponentSolution shoot =
        solve_exponent(prof, 0.5, 0.0, 0.0, 0.0, ExponentMethod::shooting);
    const ExponentSolution colloc =
        solve_exponent(prof, 0.5, 0.0, 0.0, 0.0, ExponentMethod::collocation);
    double worst_s = 0.0, worst_c = 0.0;
    for (std::size_t i = 0; i < prof.size(); ++i) {
        worst_s = std::max(worst_s, std::abs(shoot.rprof.r[i] - 0.5));
        worst_c = std::max(worst_c, std::abs(colloc.rprof.r[i] - 0.5));
    }
    INFO("shooting dev " << worst_s << " collocation dev " << worst_c);
    REQUIRE(worst_s < 1e-9);
    REQUIRE(worst_c < 1e-9);
    // the initial sample sits on log(c - K) = 0; the solver flags it
    REQUIRE(shoot.degenerate_samples >= 1);
}

TEST_CASE("shooting tracks a perturbed start and stays near 1/2 (c = 0)") {
    // k0 = -2 keeps log(c - K) away from 0 on the whole span.
    const CurvatureProfile prof = integrate_profile(0.0, -2.0, 1.0, 0.0, 0.2, 1e-12, 101);
    const ExponentSolution shoot =
        solve_exponent(prof, 0.5 + 1e-3, 0.0, 0.0, 0.0, ExponentMethod::shooting);
    REQUIRE(shoot.max_point_residual < 1e-9);
    double dev = 0.0;
    for (double r : shoot.rprof.r) dev = std::max(dev, std::abs(r - 0.5));
    REQUIRE(dev < 2e-2);
    const std::vector<double> res = flatten_residual(prof, shoot.rprof);
    REQUIRE(vector_stats(res, 2).max_abs < 1e-4);
}

TEST_CASE("shooting and collocation cross-validate on a c = 1 problem") {
    const CurvatureProfile prof = integrate_profile(1.0, -1.0, 1.0, 0.0, 0.25, 1e-12, 101);
    const Feasibility feas = feasibility_check(prof, 0.5, 0.0, 0.0);
    REQUIRE(feas.feasible);
    const ExponentSolution shoot =
        solve_exponent(prof, 0.5, 0.0, 0.0, 0.0, ExponentMethod::shooting);
    const ExponentSolution colloc =
        solve_exponent(prof, 0.5, 0.0, 0.0, 0.0, ExponentMethod::collocation);
    double gap = 0.0;
    for (std::size_t i = 0; i < prof.size(); ++i)
        gap = std::max(gap, std::abs(shoot.rprof.r[i] - colloc.rprof.r[i]));
    INFO("pointwise method gap " << gap);
    REQUIRE(gap < 1e-5);
    REQUIRE(shoot.max_point_residual < 1e-9);
}

TEST_CASE("verify_flat: solved exponent flattens, unsolved does not") {
    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.5, 1e-12, 51);
    const std::vector<double> s_nodes = linspace(-1.0, 1.0, 201);

    const Report good = verify_flat(prof, ExponentProfile::constant(prof, 0.5), s_nodes);
    double max_k = 0.0;
    for (double k : prof.k) max_k = std::max(max_k, std::abs(k));
    INFO("flat max " << good.max_residual << " vs K scale " << max_k);
    REQUIRE(good.passed);
    REQUIRE(good.max_residual < 1e-3 * max_k);
    REQUIRE(good.details.at("residual_consistency_gap") < 5e-3);

    const Report bad = verify_flat(prof, ExponentProfile::constant(prof, 0.0), s_nodes);
    REQUIRE_FALSE(bad.passed);
    REQUIRE(bad.max_residual > 0.2 * max_k / 3.0);
}

TEST_CASE("verify_flat residual decays at second order under refinement") {
    double r_h = 0.0, r_h2 = 0.0;
    for (int lvl = 0; lvl < 2; ++lvl) {
        const std::size_t nu = lvl == 0 ? 51 : 101;
        const std::size_t ns = lvl == 0 ? 201 : 401;
        const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.5, 1e-12, nu);
        const Report rep = verify_flat(prof, ExponentProfile::constant(prof, 0.5),
                                       linspace(-1.0, 1.0, ns), 1.0);
        (lvl == 0 ? r_h : r_h2) = rep.max_residual;
    }
    REQUIRE(r_h / r_h2 > 2.5);
    REQUIRE(r_h / r_h2 < 6.5);
}

TEST_CASE("c = 1 feasible data: solved exponent passes verify_flat") {
    const CurvatureProfile prof = integrate_profile(1.0, -1.0, 1.0, 0.0, 0.3, 1e-12, 31);
    const ExponentSolution shoot =
        solve_exponent(prof, 0.5, 0.0, 0.0, 0.0, ExponentMethod::shooting);
    const Report rep = verify_flat(prof, shoot.rprof, linspace(-1.0, 1.0, 201));
    INFO("c=1 verify_flat max " << rep.max_residual << " tol " << rep.tolerance);
    REQUIRE(rep.passed);
}

TEST_CASE("infeasible exponent profiles raise with the violating samples") {
    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.2, 1e-10, 51);
    // r = 1 gives K_r = (1/3)(-K)^0... strictly positive, above c = 0
    REQUIRE_THROWS_AS(flatten_residual(prof, ExponentProfile::constant(prof, 1.0)),
                      InfeasibleError);
    REQUIRE_THROWS_AS(verify_flat(prof, ExponentProfile::constant(prof, 1.0),
                                  linspace(-1.0, 1.0, 11)),
                      InfeasibleError);
}
