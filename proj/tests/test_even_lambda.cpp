#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aggdiff/even_lambda.hpp"
#include "aggdiff/quartic.hpp"
#include "aggdiff/specfun.hpp"

using namespace aggdiff;
using namespace aggdiff::even_lambda;

TEST_CASE("density for n = 1 and the quartic reduction") {
    // lambda = 2: no unknowns
    const auto st = solve_betas(4, 1, 0.5, 0.3);
    CHECK(st.converged);
    CHECK(st.beta.empty());
    const double p = 2.0;
    for (double r : {0.1, 1.0, 5.0}) {
        const double expect = el_prefactor(0.5) * std::pow(r * r + 0.3, -p);
        CHECK(density_even(st, r) == doctest::Approx(expect).epsilon(1e-14));
    }
    CHECK(std::isinf(density_even(solve_betas(4, 1, 0.5, 0.0), 0.0)));

    // n = 2 with beta_1 = B(L) reproduces the quartic density pointwise
    const int N = 6;
    const double q = 0.6, L = 0.4;
    const double B = quartic::solve_B(N, q, L);
    BetaState qs;
    qs.dim = N;
    qs.n = 2;
    qs.q = q;
    qs.L = L;
    qs.beta = {B};
    quartic::QuarticSolution sol;
    sol.dim = N;
    sol.q = q;
    sol.L = L;
    sol.B = B;
    for (double r : {0.05, 0.7, 2.0, 30.0}) {
        CHECK(density_even(qs, r) ==
              doctest::Approx(quartic::density_eval_quartic(sol, r)).epsilon(1e-12));
    }

    // tail slope -lambda/(1-q)
    const auto st10 = solve_betas(3, 5, q_from_alpha(3, 10.0, 0.81), 0.0);
    REQUIRE(st10.converged);
    const double pq = 1.0 / (1.0 - st10.q);
    const double slope = std::log(density_even(st10, 1e4) / density_even(st10, 1e3)) /
                         std::log(10.0);
    CHECK(std::fabs(slope + 10.0 * pq) <= 0.01 * 10.0 * pq);
}

TEST_CASE("fixed-point map reduces to the quartic second moment at n = 2") {
    const int N = 6;
    const double q = 0.6;
    for (double L : {0.0, 0.5}) {
        for (double beta1 : {2.0, 8.0}) {
            const auto F = fixed_point_map(N, 2, q, L, {beta1});
            REQUIRE(F.size() == 1);
            const double expect = (2.0 + 4.0 / N) * quartic::second_moment_F(N, q, L, beta1);
            CHECK(F[0] == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("fixed-point map is decreasing in each coefficient") {
    const int N = 4, n = 3;
    const double q = 0.5;  // alpha = 0.5 at lambda = 6
    const std::vector<double> beta{3.0, 2.0};
    const auto F0 = fixed_point_map(N, n, q, 0.0, beta);
    for (int j = 0; j < n - 1; ++j) {
        auto bj = beta;
        bj[j] *= 1.2;
        const auto Fj = fixed_point_map(N, n, q, 0.0, bj);
        for (int i = 0; i < n - 1; ++i) CHECK(Fj[i] < F0[i]);
    }
}

TEST_CASE("jacobian: sign, structure, finite differences") {
    const int N = 4, n = 3;
    const double q = q_from_alpha(N, 6.0, 0.5);
    const std::vector<double> beta{2.5, 1.8};
    const auto J = jacobian_fixed_point(N, n, q, 0.0, beta);
    REQUIRE(J.size() == 2);
    for (const auto& row : J)
        for (double v : row) CHECK(v < 0.0);

    for (int j = 0; j < n - 1; ++j) {
        const double h = 1e-6 * beta[j];
        auto bp = beta, bm = beta;
        bp[j] += h;
        bm[j] -= h;
        const auto Fp = fixed_point_map(N, n, q, 0.0, bp);
        const auto Fm = fixed_point_map(N, n, q, 0.0, bm);
        for (int i = 0; i < n - 1; ++i) {
            const double fd = (Fp[i] - Fm[i]) / (2.0 * h);
            CHECK(std::fabs(J[i][j] - fd) <= 1e-5 * std::fabs(fd));
        }
    }

    // entries depend on i beyond c_i only through the moment order
    const auto coef = specfun::even_coefficients(N, n);
    CHECK(J[0][1] / coef[0] != doctest::Approx(J[1][0] / coef[1]).epsilon(1e-3));
}

TEST_CASE("auxiliary functional") {
    const int N = 6;
    const double q = 0.6;
    const double B = quartic::solve_B(N, q, 0.0);
    CHECK(residual_I(N, 2, q, 0.0, {B}) < 1e-18);
    CHECK(residual_I(N, 2, q, 0.0, {0.8 * B}) > 0.0);
}

TEST_CASE("solve_betas cross-checks against the quartic module") {
    for (int N : {4, 6}) {
        const double lo = std::max(0.0, (N - 2.0) / (N + 2.0));
        const double hi = N / (N + 2.0);
        for (double frac : {0.3, 0.6}) {
            const double q = lo + frac * (hi - lo);
            const auto st = solve_betas(N, 2, q, 0.0);
            REQUIRE(st.converged);
            const double B = quartic::solve_B(N, q, 0.0);
            CHECK(std::fabs(st.beta[0] - B) <= 1e-8 * B);
            CHECK(st.residual < 1e-14);
        }
    }
}

TEST_CASE("fixed point at (N=4, lambda=6, alpha=0.5) reaches machine residual") {
    const double q = q_from_alpha(4, 6.0, 0.5);
    const auto st = solve_betas(4, 3, q, 0.0);
    REQUIRE(st.converged);
    CHECK(st.residual < 1e-16);
    const auto F = fixed_point_map(4, 3, q, 0.0, st.beta);
    for (int i = 0; i < 2; ++i)
        CHECK(std::fabs(st.beta[i] - F[i]) <= 1e-7 * std::max(1.0, st.beta[i]));
}

TEST_CASE("two different initializations agree") {
    const double q = q_from_alpha(3, 10.0, 0.7);
    const auto a = solve_betas(3, 5, q, 0.0);
    REQUIRE(a.converged);
    std::vector<double> other(a.beta.size());
    for (std::size_t i = 0; i < other.size(); ++i) other[i] = 3.0 * a.beta[i];
    const auto b = solve_betas(3, 5, q, 0.0, other);
    REQUIRE(b.converged);
    for (std::size_t i = 0; i < other.size(); ++i)
        CHECK(std::fabs(a.beta[i] - b.beta[i]) <= 1e-8 * std::max(1.0, a.beta[i]));
}

TEST_CASE("mass values") {
    const auto st = solve_betas(6, 2, 0.6, 0.0);
    REQUIRE(st.converged);
    CHECK(mass_even(st).value == doctest::Approx(0.75).epsilon(1e-8));

    auto st2 = solve_betas(4, 2, 0.55, 0.0);
    CHECK(mass_even(st2).divergent);

    const double q3 = q_from_alpha(4, 6.0, 0.5);
    const auto st3 = solve_betas(4, 3, q3, 1e6);
    REQUIRE(st3.converged);
    CHECK(mass_even(st3).value < 1e-3);
}

TEST_CASE("Table-1 crossing spot check at (N=3, lambda=10)") {
    const double q = q_from_alpha(3, 10.0, 0.81);
    CHECK(q == doctest::Approx(0.26).epsilon(0.02));
    const auto st = solve_betas(3, 5, q, 0.0);
    REQUIRE(st.converged);
    const auto m = mass_even(st);
    REQUIRE_FALSE(m.divergent);
    CHECK(m.value == doctest::Approx(1.0).epsilon(0.06));
}

TEST_CASE("kernel reconstruction from coefficients") {
    for (int N : {3, 5}) {
        for (int n : {2, 3, 4, 5}) {
            const auto c = specfun::even_coefficients(N, n);
            for (double r : {0.5, 1.2}) {
                for (double s : {0.8, 2.2}) {
                    double sum = std::pow(r, 2.0 * n) + std::pow(s, 2.0 * n);
                    for (int i = 1; i <= n - 1; ++i)
                        sum += c[i - 1] * std::pow(r, 2.0 * i) * std::pow(s, 2.0 * (n - i));
                    const double K = specfun::kernel_K(N, 2.0 * n, r, s,
                                                       specfun::KernelMethod::EvenPolynomial);
                    CHECK(std::fabs(sum - K) <= 1e-12 * K);
                }
            }
        }
    }
}

TEST_CASE("mass curve") {
    // lambda = 4, N = 6: the curve crosses m0 = 1 near alpha = 0.95
    std::vector<double> grid;
    for (int k = 0; k <= 16; ++k) grid.push_back(0.70 + k * (1.10 - 0.70) / 16.0);
    const auto curve = mass_curve(6, 2, grid);
    REQUIRE(curve.size() == grid.size());
    double crossing = -1.0;
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
        REQUIRE(curve[i].converged);
        CHECK(curve[i].q ==
              doctest::Approx(q_from_alpha(6, 4.0, curve[i].alpha)).epsilon(1e-14));
        const double a = curve[i].m0.as_double(), b = curve[i + 1].m0.as_double();
        if (a > 1.0 && b <= 1.0)
            crossing = curve[i].alpha +
                       (curve[i + 1].alpha - curve[i].alpha) * (a - 1.0) / (a - b);
        CHECK(a > b);  // m0 decreases along increasing alpha
    }
    CHECK(crossing == doctest::Approx(20.0 / 21.0).epsilon(0.01));

    // lambda = 6, N = 3: the admissible window carries divergent mass
    // ((N-2)/N equals N/(N+lambda)), so no concentration is ever reported
    std::vector<double> grid3;
    for (int k = 0; k < 6; ++k) grid3.push_back(0.2 + k * 0.12);
    const auto curve3 = mass_curve(3, 3, grid3);
    for (const auto& pt : curve3) {
        if (!pt.converged) continue;
        if (pt.alpha < 1.0) CHECK(pt.m0.as_double() > 1.0);
    }
}

TEST_CASE("critical exponent search") {
    // exact theory at lambda = 4, N = 6
    const auto cp = critical_q_even(6, 2, 1e-7);
    REQUIRE(cp.has_value());
    CHECK(std::fabs(cp->q_crit - 11.0 / 18.0) <= 1e-6);
    CHECK(std::fabs(cp->alpha_crit - 20.0 / 21.0) <= 1e-5);

    // Table-1 entry (N=4, lambda=6)
    const auto cp46 = critical_q_even(4, 3, 1e-4);
    REQUIRE(cp46.has_value());
    CHECK(std::fabs(cp46->q_crit - 0.42) <= 0.01);
    CHECK(std::fabs(cp46->alpha_crit - 0.90) <= 0.02);

    // no concentration at (N=3, lambda=8)
    CHECK_FALSE(critical_q_even(3, 4, 1e-4).has_value());
    // empty admissible window at (N=3, lambda=6)
    CHECK_FALSE(critical_q_even(3, 3, 1e-4).has_value());
    // lambda = 2 never concentrates
    CHECK_FALSE(critical_q_even(4, 1, 1e-4).has_value());
}

TEST_CASE("monotonicity scan") {
    const double q = q_from_alpha(4, 6.0, 0.55);
    const auto rep = monotonicity_scan(4, 3, q, {0.0, 0.5, 1.0, 2.0, 5.0, 10.0});
    CHECK(rep.all_converged);
    CHECK(rep.strictly_decreasing);

    // matches the quartic masses pointwise at lambda = 4
    const auto rep4 = monotonicity_scan(6, 2, 0.6, {0.0, 0.5, 1.0, 2.0});
    REQUIRE(rep4.all_converged);
    for (std::size_t i = 0; i < rep4.L_grid.size(); ++i) {
        const auto mq = quartic::mass_at(6, 0.6, rep4.L_grid[i]);
        CHECK(std::fabs(rep4.masses[i].as_double() - mq.as_double()) <= 1e-8);
    }

    // single point grid is trivially monotone
    const auto rep1 = monotonicity_scan(6, 2, 0.6, {0.3});
    CHECK(rep1.strictly_decreasing);
}
