#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aggdiff/quartic.hpp"
#include "aggdiff/specfun.hpp"

using namespace aggdiff;
using namespace aggdiff::quartic;

TEST_CASE("critical exponent values") {
    CHECK(critical_q4(6) == 11.0 / 18.0);  // exact rational
    CHECK(critical_q4(5) == doctest::Approx(19.0 / 35.0).epsilon(1e-15));
    CHECK(critical_q4(5) < 5.0 / 9.0);  // below N/(N+4): no admissible concentration
    double prev = critical_q4(3);
    for (int N = 4; N <= 12; ++N) {
        CHECK(critical_q4(N) > prev);
        prev = critical_q4(N);
    }
    for (int N = 6; N <= 12; ++N) {
        CHECK(critical_q4(N) > N / (N + 4.0));
        CHECK(critical_q4(N) < (N - 2.0) / N);
    }
}

TEST_CASE("second moment is strictly decreasing in B and L") {
    const int N = 6;
    const double q = 0.6;
    const double f1 = second_moment_F(N, q, 0.5, 1.0);
    const double f2 = second_moment_F(N, q, 0.5, 2.0);
    const double f3 = second_moment_F(N, q, 1.5, 1.0);
    CHECK(f1 > f2);
    CHECK(f1 > f3);
    // with L > 0 the B -> 0 limit stays finite and bounds F from above
    const double f0 = second_moment_F(N, q, 0.5, 1e-9);
    CHECK(f0 > f1);
    CHECK(std::isfinite(f0));
}

TEST_CASE("scaling form of F_0") {
    // F_0(B) = B^{(N+2)/2 - 2/(1-q)} (q/(1-q))^{1/(1-q)} c_{N,q}
    const int N = 6;
    const double q = 0.6;
    const double p = 1.0 / (1.0 - q);
    const double c = 0.5 * specfun::sphere_area(N) *
                     std::exp(specfun::log_beta(0.5 * (N + 2.0) - p, 2.0 * p - 0.5 * (N + 2.0)));
    for (double B : {0.5, 1.0, 3.7}) {
        const double expect = std::pow(B, 0.5 * (N + 2.0) - 2.0 * p) * el_prefactor(q) * c;
        CHECK(second_moment_F(N, q, 0.0, B) == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("solve_B matches the closed form at L = 0") {
    for (int N : {6, 7, 8}) {
        for (double frac : {0.25, 0.5, 0.75}) {
            const double lo = N / (N + 4.0), hi = (N - 2.0) / double(N);
            const double q = lo + frac * (hi - lo);
            const double closed = b_zero_closed_form(N, q);
            CHECK(solve_B(N, q, 0.0) == doctest::Approx(closed).epsilon(1e-10));
        }
    }
}

TEST_CASE("B is decreasing in L and vanishes at large L") {
    const int N = 6;
    const double q = 0.6;
    double prev = solve_B(N, q, 0.0);
    for (double L : {0.1, 1.0, 10.0}) {
        const double B = solve_B(N, q, L);
        CHECK(B < prev);
        prev = B;
    }
    // large-L bound from scaling out L
    const double p = 1.0 / (1.0 - q);
    const double kappa = 2.0 + 4.0 / N;
    const double c = quadrature::integrate_semi_infinite(
                         [p, N](double r) {
                             return std::pow(r, N + 1.0) * std::pow(r * r * r * r + 1.0, -p);
                         },
                         quadrature::QuadratureRule{},
                         {N + 1.0, 4.0 * p - (N + 1.0)})
                         .value;
    const double bound = kappa * el_prefactor(q) * specfun::sphere_area(N) *
                         std::pow(1e6, 0.25 * (N + 2.0) - p) * c;
    CHECK(solve_B(N, q, 1e6) < 10.0 * bound);
}

TEST_CASE("fixed-point residual of solve_B") {
    for (double L : {0.0, 0.3, 2.0}) {
        const int N = 7;
        const double q = 0.62;
        const double B = solve_B(N, q, L);
        const double resid = std::fabs(B - (2.0 + 4.0 / N) * second_moment_F(N, q, L, B));
        CHECK(resid < 1e-10 * B);
    }
}

TEST_CASE("mass closed form at L = 0") {
    // (N=6, q=0.6): m(0) = 0.75
    CHECK(mass_at_zero_closed_form(6, 0.6).value == doctest::Approx(0.75).epsilon(1e-15));
    // numerator vanishes at q = (N-2)/(N+2)
    CHECK(mass_at_zero_closed_form(6, 0.5 + 1e-13).value ==
          doctest::Approx(0.0).epsilon(1e-10));
    // m(0) = 1 exactly at the critical exponent
    for (int N : {6, 8, 11}) {
        const double qc = critical_q4(N);
        CHECK(mass_at_zero_closed_form(N, qc).value == doctest::Approx(1.0).epsilon(1e-13));
    }
    // (N=6, q=0.55): 3/14
    CHECK(mass_at_zero_closed_form(6, 0.55).value ==
          doctest::Approx(0.2142857142857).epsilon(1e-12));
    // divergent branch
    CHECK(mass_at_zero_closed_form(4, 0.55).divergent);
    CHECK(mass_at_zero_closed_form(6, 2.0 / 3.0 + 1e-6).divergent);
}

TEST_CASE("quadrature mass agrees with the closed form") {
    for (int N : {6, 8, 10}) {
        const double lo = N / (N + 4.0), hi = (N - 2.0) / double(N);
        for (double frac : {0.2, 0.5, 0.8}) {
            const double q = lo + frac * (hi - lo);
            const auto closed = mass_at_zero_closed_form(N, q);
            const auto quad = mass_at(N, q, 0.0);
            REQUIRE_FALSE(quad.divergent);
            CHECK(std::fabs(quad.value - closed.value) <= 1e-8 * closed.value);
        }
    }
}

TEST_CASE("mass decreases in L and vanishes at large L") {
    const int N = 6;
    const double q = 0.6;
    double prev = mass_at(N, q, 0.0).value;
    for (double L : {0.05, 0.3, 1.0, 5.0, 20.0}) {
        const double m = mass_at(N, q, L).value;
        CHECK(m < prev);
        prev = m;
    }
    CHECK(mass_at(N, q, 1e6).value < 1e-3);
    // divergent at L = 0 once q >= (N-2)/N
    CHECK(mass_at(4, 0.55, 0.0).divergent);
    CHECK_FALSE(mass_at(4, 0.55, 0.25).divergent);
}

TEST_CASE("minimizer branches") {
    // concentrated: (N=6, q=0.55) in the formal window
    const auto sol = solve_minimizer_quartic(6, 0.55, true);
    CHECK(sol.branch == Branch::Concentrated);
    CHECK(sol.formal);
    CHECK(sol.L == 0.0);
    CHECK(sol.atom == doctest::Approx(11.0 / 14.0).epsilon(1e-12));
    CHECK(sol.atom == doctest::Approx(0.785714285714).epsilon(1e-10));
    // cross-validation: atom = 1 - quadrature mass
    const auto m = mass_at(6, 0.55, 0.0);
    CHECK(std::fabs(sol.atom - (1.0 - m.value)) <= 1e-8);
    CHECK_THROWS_AS(solve_minimizer_quartic(6, 0.55, false), std::domain_error);

    // admissible concentrated window for N = 6: (0.6, 11/18)
    const auto sol2 = solve_minimizer_quartic(6, 0.605);
    CHECK(sol2.branch == Branch::Concentrated);
    CHECK_FALSE(sol2.formal);
    CHECK(sol2.atom > 0.0);
    CHECK(sol2.mass + sol2.atom == doctest::Approx(1.0).epsilon(1e-12));

    // interior: N = 3 never concentrates
    const auto sol3 = solve_minimizer_quartic(3, 0.5);
    CHECK(sol3.branch == Branch::Interior);
    CHECK(sol3.atom == 0.0);
    CHECK(sol3.L > 0.0);
    CHECK(mass_at_with_B(3, 0.5, sol3.L, sol3.B).value == doctest::Approx(1.0).epsilon(1e-8));

    // interior above the critical exponent at N = 6
    const auto sol4 = solve_minimizer_quartic(6, 0.63);
    CHECK(sol4.atom == 0.0);
    CHECK(sol4.L > 0.0);
    CHECK(mass_at_with_B(6, 0.63, sol4.L, sol4.B).value == doctest::Approx(1.0).epsilon(1e-8));

    CHECK_THROWS_AS(solve_minimizer_quartic(2, 0.3, true), std::domain_error);
}

TEST_CASE("branch consistency across the admissible window") {
    for (int N : {3, 4, 5, 6, 7}) {
        const double lo = N / (N + 4.0), hi = N / (N + 2.0);
        for (double frac : {0.15, 0.5, 0.85}) {
            const double q = lo + frac * (hi - lo);
            const auto sol = solve_minimizer_quartic(N, q);
            const bool concentrates = sol.atom > 0.0;
            CHECK(concentrates == (N >= 6 && q < critical_q4(N)));
        }
    }
    // at the critical exponent the mass at L=0 is exactly 1
    const auto m = mass_at(6, critical_q4(6), 0.0);
    CHECK(m.value == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("density evaluation and slopes") {
    const auto sol = solve_minimizer_quartic(6, 0.55, true);
    CHECK(std::isinf(density_eval_quartic(sol, 0.0)));
    const double p = 1.0 / (1.0 - sol.q);
    // large-r slope -4/(1-q)
    const double s_far = std::log(density_eval_quartic(sol, 1e4) /
                                  density_eval_quartic(sol, 1e3)) /
                         std::log(10.0);
    CHECK(std::fabs(s_far + 4.0 * p) <= 0.01 * 4.0 * p);
    // small-r slope -2/(1-q) when L = 0
    const double s_near = std::log(density_eval_quartic(sol, 1e-3) /
                                   density_eval_quartic(sol, 1e-4)) /
                          std::log(10.0);
    CHECK(std::fabs(s_near + 2.0 * p) <= 0.01 * 2.0 * p);
    // re-integration recovers the stored mass
    const auto m = quadrature::weighted_moment(
        [&](double r) { return density_eval_quartic(sol, r); }, 0, 6,
        quadrature::QuadratureRule{}, {-2.0 * p, 4.0 * p});
    CHECK(std::fabs(m.value - sol.mass) <= 1e-8);
}

TEST_CASE("mass derivative") {
    const int N = 6;
    const double q = 0.6;
    for (double L : {0.1, 1.0, 10.0}) {
        const double d = mass_derivative(N, q, L);
        CHECK(d < 0.0);
        const double h = 1e-4 * L;
        const double fd =
            (mass_at(N, q, L + h).value - mass_at(N, q, L - h).value) / (2.0 * h);
        CHECK(std::fabs(d - fd) <= 1e-4 * std::fabs(d));
    }
}

TEST_CASE("Cauchy-Schwarz moment inequality") {
    const int N = 6;
    const double q = 0.6;
    for (double L : {0.1, 1.0, 10.0}) {
        const double p = 1.0 / (1.0 - q);
        const double B = solve_B(N, q, L);
        const auto phi = [&](double r) {
            const double r2 = r * r;
            return std::pow(r, N - 1.0) * std::pow(r2 * r2 + B * r2 + L, -p - 1.0);
        };
        const auto mom = [&](int k) {
            return quadrature::integrate_semi_infinite(
                       [&](double r) { return std::pow(r, k) * phi(r); },
                       quadrature::QuadratureRule{},
                       {double(N - 1 + k), 4.0 * (p + 1.0) - (N - 1.0 + k)})
                .value;
        };
        const double i0 = mom(0), i2 = mom(2), i4 = mom(4);
        CHECK(i2 * i2 <= i0 * i4);
    }
}

TEST_CASE("free energy identities") {
    // zero density contributes nothing
    CHECK(free_energy_quartic([](double) { return 0.0; }, 1.0, 6, 0.62) ==
          doctest::Approx(0.0).epsilon(1e-12));

    // minimality in the admissible concentrated window: scaled profiles with
    // the atom rebalanced raise the energy
    const int N = 6;
    const double q = 0.605;
    const auto sol = solve_minimizer_quartic(N, q);
    REQUIRE(sol.branch == Branch::Concentrated);
    const double p = 1.0 / (1.0 - q);
    const ProfileTails tails{-2.0 * p, 4.0 * p};
    const auto base = [&](double r) { return density_eval_quartic(sol, r); };
    const double F0 = free_energy_quartic(base, sol.atom, N, q, tails);
    for (double gamma : {0.9, 1.1}) {
        const auto scaled = [&](double r) { return gamma * base(r); };
        const double M = 1.0 - gamma * sol.mass;
        REQUIRE(M >= 0.0);
        const double F1 = free_energy_quartic(scaled, M, N, q, tails);
        CHECK(F1 > F0);
    }

    // divergent below the boundedness threshold
    CHECK_THROWS_AS(free_energy_quartic(base, 0.0, 6, 0.55, tails), std::domain_error);
}

TEST_CASE("convexity surrogate along the stationary family") {
    const int N = 6;
    const double q = 0.62;
    const auto solA = solve_minimizer_quartic(N, q);  // interior, mass 1
    const double p = 1.0 / (1.0 - q);
    // second profile from the same family at a different multiplier
    const double L2 = solA.L > 0.0 ? 2.0 * solA.L + 0.5 : 0.5;
    const double B2 = solve_B(N, q, L2);
    const double m2 = mass_at_with_B(N, q, L2, B2).value;
    REQUIRE(m2 < 1.0);

    const auto rhoA = [&](double r) { return density_eval_quartic(solA, r); };
    const auto rhoB = [&](double r) {
        const double r2 = r * r;
        return el_prefactor(q) * std::pow(r2 * r2 + B2 * r2 + L2, -p);
    };
    const ProfileTails tails{0.0, 4.0 * p};
    const double FA = free_energy_quartic(rhoA, 0.0, N, q, tails);
    const double FB = free_energy_quartic(rhoB, 1.0 - m2, N, q, tails);
    const auto mid = [&](double r) { return 0.5 * (rhoA(r) + rhoB(r)); };
    const double Fmid = free_energy_quartic(mid, 1.0 - 0.5 * (1.0 + m2), N, q, tails);
    CHECK(Fmid < 0.5 * (FA + FB));
}

TEST_CASE("domain validation") {
    CHECK_THROWS_AS(second_moment_F(6, 0.8, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(second_moment_F(6, 0.6, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(mass_derivative(6, 0.6, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(density_eval_quartic(solve_minimizer_quartic(3, 0.5), -1.0),
                    std::invalid_argument);
}
