#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spde/special.hpp"
#include "test_util.hpp"

using namespace spde::special;

TEST_CASE("gamma_fn reproduces exact values") {
    CHECK(gamma_fn(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gamma_fn(2.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(gamma_fn(5.0) == doctest::Approx(24.0).epsilon(1e-13));
    CHECK(gamma_fn(0.5) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));
    CHECK(gamma_fn(1.5) == doctest::Approx(0.5 * std::sqrt(M_PI)).epsilon(1e-13));
}

TEST_CASE("gamma_fn(5/3) against the Euler integral") {
    // Independent oracle: quadrature of int_0^inf t^{x-1} e^{-t} dt with a
    // graded head (t^{2/3} has a derivative singularity at 0).
    auto integrand = [](double t) { return std::pow(t, 2.0 / 3.0) * std::exp(-t); };
    const double oracle = testutil::simpson_graded_head(integrand, 0.0, 1.0, 48, 64) +
                          testutil::simpson(integrand, 1.0, 60.0, 20000);
    CHECK(gamma_fn(5.0 / 3.0) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(gamma_fn(5.0 / 3.0) == doctest::Approx(0.9027452929509336).epsilon(1e-12));
}

TEST_CASE("gamma_fn matches std::tgamma on (0, 20]") {
    for (double x = 0.05; x <= 20.0; x += 0.173) {
        CHECK(gamma_fn(x) == doctest::Approx(std::tgamma(x)).epsilon(1e-12));
    }
}

TEST_CASE("gamma_fn rejects nonpositive arguments") {
    CHECK_THROWS_AS(gamma_fn(0.0), std::invalid_argument);
    CHECK_THROWS_AS(gamma_fn(-1.5), std::invalid_argument);
}

TEST_CASE("henry_G with beta = 1 is the exponential") {
    CHECK(henry_G(1.0, 3.0) == doctest::Approx(std::exp(3.0)).epsilon(1e-13));
    for (double z = 0.0; z <= 10.0; z += 0.25) {
        CHECK(henry_G(1.0, z) == doctest::Approx(std::exp(z)).epsilon(1e-12));
    }
}

TEST_CASE("henry_G at z = 0 is 1 for every beta") {
    for (double beta : {0.1, 0.3, 0.5, 0.75, 1.0}) CHECK(henry_G(beta, 0.0) == 1.0);
}

TEST_CASE("henry_G with beta = 1/2 matches the erf closed form") {
    // G_{1/2}(z) = e^z (1 + erf(sqrt(z))).
    CHECK(henry_G(0.5, 1.0) ==
          doctest::Approx(std::exp(1.0) * (1.0 + std::erf(1.0))).epsilon(1e-10));
    for (double z : {0.1, 0.5, 2.0, 5.0, 20.0}) {
        const double closed = std::exp(z) * (1.0 + std::erf(std::sqrt(z)));
        CHECK(henry_G(0.5, z) == doctest::Approx(closed).epsilon(1e-10));
    }
}

TEST_CASE("henry_G is nondecreasing in z") {
    for (double beta : {0.25, 0.5, 0.8, 1.0}) {
        double prev = henry_G(beta, 0.0);
        for (double z = 0.1; z <= 30.0; z += 0.5) {
            const double v = henry_G(beta, z);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("henry_G large-z switch and overflow guard") {
    const auto res = henry_G_full(0.5, 705.0);
    CHECK(res.asymptotic);
    CHECK(res.value == doctest::Approx(2.0 * std::exp(705.0)).epsilon(1e-6));
    CHECK_THROWS_AS(henry_G(0.5, 740.0), std::overflow_error);
}

TEST_CASE("henry_bound basic cases") {
    CHECK(henry_bound(HenryParams(1.0, 0.0, 0.7), 5.0) == 1.0);
    CHECK(henry_bound(HenryParams(2.0, 1.0, 1.0), 1.0) ==
          doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-12));
    // theta = (0.5 Gamma(0.5))^2 = pi/4
    CHECK(henry_theta(0.5, 0.5) == doctest::Approx(0.25 * M_PI).epsilon(1e-13));
    const double expected = henry_G(0.5, 0.25 * M_PI);
    CHECK(henry_bound(HenryParams(1.0, 0.5, 0.5), 1.0) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("henry_bound dominates the discrete Volterra fixed point") {
    // u_{m+1}(t_i) = a + b sum_j u_m(s_j) int_{s_j}^{s_{j+1}} (t_i - s)^{beta-1} ds
    // with piecewise-constant-left u (an underestimate for nondecreasing u).
    const double a = 1.0, b = 0.7, beta = 0.6;
    const HenryParams p(a, b, beta);
    const int n = 400;
    const double T = 2.0, dt = T / n;
    std::vector<double> u(n + 1, a), next(n + 1, 0.0);
    for (int iter = 0; iter < 200; ++iter) {
        double change = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double ti = i * dt;
            double conv = 0.0;
            for (int j = 0; j < i; ++j) {
                const double sl = ti - j * dt;
                const double sr = ti - (j + 1) * dt;
                conv += u[j] * (std::pow(sl, beta) - std::pow(sr, beta)) / beta;
            }
            next[i] = a + b * conv;
            change = std::max(change, std::abs(next[i] - u[i]));
        }
        u.swap(next);
        if (change < 1e-12) break;
    }
    for (int i = 0; i <= n; ++i) {
        CHECK(u[i] <= henry_bound(p, i * dt) * (1.0 + 1e-3));
    }
}

TEST_CASE("HenryParams validates its domain") {
    CHECK_THROWS_AS(HenryParams(-1.0, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(HenryParams(1.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(HenryParams(1.0, 1.0, 1.5), std::invalid_argument);
}
