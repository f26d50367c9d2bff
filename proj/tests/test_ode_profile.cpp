#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "biconserve/profile.hpp"
#include "oracles.hpp"

using namespace biconserve;

TEST_CASE("ode_rhs evaluates the curvature equation") {
    REQUIRE(ode_rhs(0.0, -1.0, 1.0) == Catch::Approx(31.0 / 24.0).epsilon(1e-15));
    REQUIRE(ode_rhs(1.0, 0.0, 1.0) == Catch::Approx(-11.0 / 8.0).epsilon(1e-15));
    REQUIRE(ode_rhs(1.0, 0.0, 0.0) == 0.0); // every numerator term vanishes
    // c - k = 0 is inside the excluded margin, not a value.
    REQUIRE_THROWS_AS(ode_rhs(0.0, 0.0, 0.0), DomainError);
    REQUIRE_THROWS_AS(ode_rhs(1.0, 1.0, 1.0), DomainError);
}

TEST_CASE("k_derivs third derivative matches the hand chain rule") {
    // At (c=0, K=-1, K'=1): K''' = -985/96.
    const KDerivs kd = k_derivs(0.0, -1.0, 1.0);
    REQUIRE(kd.kpp == Catch::Approx(31.0 / 24.0).epsilon(1e-15));
    REQUIRE(kd.kppp == Catch::Approx(-985.0 / 96.0).epsilon(1e-13));
}

TEST_CASE("integrate_profile: empty span returns the initial sample") {
    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.0, 1e-10);
    REQUIRE(prof.size() == 1);
    REQUIRE(prof.k[0] == -1.0);
    REQUIRE(prof.kp[0] == 1.0);
    REQUIRE_FALSE(prof.truncated);
}

TEST_CASE("integrate_profile matches the fixed-step RK4 oracle") {
    // Frozen value: classical RK4 at step 1e-6 over [0, 0.1] from
    // (c, K, K') = (0, -1, 1), computed by the brute-force oracle.
    const double k_oracle_frozen = -0.89519414877693027;
    const auto [k_live, kp_live] = oracles::rk4_profile(0.0, -1.0, 1.0, 0.0, 0.1, 1e-6);
    REQUIRE(k_live == Catch::Approx(k_oracle_frozen).margin(1e-12));

    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.1, 1e-10, 101);
    REQUIRE(prof.u.back() == Catch::Approx(0.1).margin(1e-14));
    REQUIRE(prof.k.back() == Catch::Approx(k_oracle_frozen).margin(1e-8));
    REQUIRE(prof.kp.back() == Catch::Approx(kp_live).margin(1e-8));
}

TEST_CASE("brute-force RK4 oracle converges at 4th order") {
    // 30-digit reference for K(0.1).
    const double k_ref = -0.89519414877693182376;
    const auto [k1, kp1] = oracles::rk4_profile(0.0, -1.0, 1.0, 0.0, 0.1, 2e-3);
    const auto [k2, kp2] = oracles::rk4_profile(0.0, -1.0, 1.0, 0.0, 0.1, 1e-3);
    const double e1 = std::abs(k1 - k_ref), e2 = std::abs(k2 - k_ref);
    REQUIRE(e1 / e2 > 12.0);
    REQUIRE(e1 / e2 < 22.0);
}

TEST_CASE("integrate_profile global error scales with the tolerance") {
    const double k_ref = -0.89519414877693182376;
    double prev = 1.0;
    for (const double tol : {1e-6, 1e-8, 1e-10}) {
        const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.1, tol, 11);
        const double err = std::abs(prof.k.back() - k_ref);
        REQUIRE(err < 1e3 * tol);
        REQUIRE(err <= prev + 1e-15);
        prev = err;
    }
}

TEST_CASE("integrate_profile truncates before the admissibility margin") {
    const CurvatureProfile prof = integrate_profile(1.0, -1.0, 2.0, 0.0, 10.0, 1e-10, 201);
    REQUIRE(prof.truncated);
    REQUIRE(prof.requested_end == 10.0);
    REQUIRE(prof.u.back() < 10.0);
    prof.check_invariants(); // c - K > eps_dom and K' > eps_dom sample-wise
}

TEST_CASE("integrated profiles satisfy the ODE identity and grid invariants") {
    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.4, 1e-12, 101);
    prof.check_invariants();
    for (std::size_t i = 1; i < prof.size(); ++i)
        REQUIRE(prof.u[i] > prof.u[i - 1]);
    // 24 (c-K) K'' + 33 K'^2 + 64 K (c-K)^2 with K'' from ode_rhs is an
    // algebraic zero; it guards the stored (K, K') pairing.
    for (std::size_t i = 0; i < prof.size(); ++i) {
        const double cmk = prof.c - prof.k[i];
        const double lhs = 24.0 * cmk * ode_rhs(prof.c, prof.k[i], prof.kp[i]) +
                           33.0 * prof.kp[i] * prof.kp[i] +
                           64.0 * prof.k[i] * cmk * cmk;
        REQUIRE(std::abs(lhs) < 1e-12 * (1.0 + 64.0 * std::abs(prof.k[i]) * cmk * cmk));
    }
}

TEST_CASE("pde_residual vanishes on exact solutions via the frame Laplacian") {
    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.3, 1e-12, 101);
    const std::vector<double> res = pde_residual(prof);
    for (double r : res) REQUIRE(std::abs(r) < 1e-8);
}

TEST_CASE("pde_residual honors the domain margin and the trivial zero") {
    // K = 0 with c = 1 keeps c - K = 1: all terms vanish.
    const auto flat = oracles::synthetic_profile(1.0, {0.0, 0.1, 0.2}, {0.0, 0.0, 0.0},
                                                 {0.0, 0.0, 0.0});
    for (double r : pde_residual(flat)) REQUIRE(r == 0.0);
    // K = 0 with c = 0 sits on the singular set.
    const auto bad = oracles::synthetic_profile(0.0, {0.0, 0.1}, {0.0, 0.0}, {0.0, 0.0});
    REQUIRE_THROWS_AS(pde_residual(bad), DomainError);
}

TEST_CASE("pde_residual responds linearly to a K'' perturbation") {
    const CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.2, 1e-10, 51);
    std::vector<double> kpp(prof.size());
    for (std::size_t i = 0; i < prof.size(); ++i)
        kpp[i] = ode_rhs(prof.c, prof.k[i], prof.kp[i]);
    const std::vector<double> base = pde_residual(prof, kpp);
    const double delta = 0.37;
    const std::size_t at = 20;
    kpp[at] += delta;
    const std::vector<double> pert = pde_residual(prof, kpp);
    for (std::size_t i = 0; i < prof.size(); ++i) {
        if (i == at) {
            const double expected = -(prof.c - prof.k[i]) * delta;
            REQUIRE(pert[i] - base[i] == Catch::Approx(expected).epsilon(1e-12));
        } else {
            REQUIRE(pert[i] == base[i]);
        }
    }
}

TEST_CASE("profile invariant checks reject tampered data") {
    CurvatureProfile prof = integrate_profile(0.0, -1.0, 1.0, 0.0, 0.2, 1e-10, 21);
    prof.kp[10] = -0.5;
    REQUIRE_THROWS_AS(prof.check_invariants(), DomainError);
}

TEST_CASE("integrate_profile rejects invalid initial data") {
    REQUIRE_THROWS_AS(integrate_profile(0.0, 0.5, 1.0, 0.0, 0.1, 1e-10), DomainError);
    REQUIRE_THROWS_AS(integrate_profile(0.0, -1.0, 0.0, 0.0, 0.1, 1e-10), DomainError);
}
