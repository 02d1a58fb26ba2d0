#include <cmath>
#include <random>

#include "doctest.h"
#include "sspde/bounds.hpp"

using namespace sspde;

TEST_SUITE("bounds") {

TEST_CASE("kappa bar") {
    const double k = kappa_bar();
    CHECK(k > 0.132);
    CHECK(k < 1.0 / 3.0);
    CHECK(k == doctest::Approx(0.1321227562).epsilon(1e-9));
    CHECK(std::abs(kappa_equation_residual(k)) <= 1e-10);
    CHECK(std::abs(kappa_cubic(k)) <= 1e-10);
    // Simple root: sign change and nonzero derivative.
    CHECK(kappa_cubic(k - 1e-6) * kappa_cubic(k + 1e-6) < 0);
    CHECK(std::abs(6 * k * k + 6 * k - 8) > 1.0);
    // The expanded cubic is the literal equation up to sign.
    for (double x : {0.01, 0.1, 0.2, 0.3}) CHECK(kappa_cubic(x) == doctest::Approx(-kappa_equation_residual(x)));
}

TEST_CASE("exponents") {
    const auto e = exponents(0.1, 0.01);
    CHECK(e.beta2 == doctest::Approx(2.2 / 2.8).epsilon(1e-14));
    // Second path: beta2 plus the noise correction written out.
    CHECK(e.beta1 == doctest::Approx(0.7857142857142857 + 1.1 * 0.11 / 0.9).epsilon(1e-14));
    CHECK(e.beta1 == doctest::Approx(0.920159).epsilon(1e-6));
    CHECK(e.nu == doctest::Approx(174.302).epsilon(1e-5));
    CHECK(e.valid);
    CHECK(e.e_gamma(1.5) == doctest::Approx(1.0 / 0.9));

    const auto small = exponents(1e-9, 1e-9);
    CHECK(small.beta2 == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
    CHECK(small.beta1 == doctest::Approx(2.0 / 3.0).epsilon(1e-8));

    for (double d : {1e-9, 1e-4, 0.01, 0.1}) CHECK_FALSE(exponents(0.2, d).valid);
    CHECK(exponents(0.13, 1e-4).valid);
}

TEST_CASE("time window and L tilde") {
    const double k = 0.1, g = 1.5;
    CHECK(t_window(g, k, 1, 1e6, 1) == doctest::Approx(std::pow(1e6, -1 / 0.9)));
    CHECK(t_window(g, k, 2, 3, 4, 0.0) == t_window(g, k, 2, 3, 4));
    const double second = std::pow(1e-3, -2 / 0.9) * std::pow(5.0, -exponents(k).e_gamma(g));
    const double doubled = std::pow(1e-3, -2 / 0.9) * std::pow(10.0, -exponents(k).e_gamma(g));
    CHECK(t_window(g, k, 1e-3, 1e-9, 5) == doctest::Approx(second));
    CHECK(t_window(g, k, 1e-3, 1e-9, 10) / t_window(g, k, 1e-3, 1e-9, 5) ==
          doctest::Approx(std::pow(2.0, -exponents(k).e_gamma(g))));
    CHECK(doubled / second == doctest::Approx(std::pow(2.0, -exponents(k).e_gamma(g))));
    CHECK(t_window(g, k, 1e-3, 1e-9, 5, 100.0) == doctest::Approx(std::pow(100.0, -1 / 0.9)));

    CHECK(l_tilde(1, 1, 1, 0.1, 0.01).value == doctest::Approx(1.0));
    const double expect = std::pow(2.0, -2 / 2.8) * std::pow(2.0, -(0.2 + 0.02) / 1.8);
    CHECK(l_tilde(2, 1, 1, 0.1, 0.01).value == doctest::Approx(expect).epsilon(1e-12));
    double prev = 1e300;
    for (double m : {1.0, 10.0, 100.0, 1e4}) {
        const double v = l_tilde(1, 1, 1, 0.1, 0.01, m).value;
        CHECK(v <= prev);
        prev = v;
    }
    CHECK(prev < 1e-3);
    CHECK(l_tilde(1, 1, 1, 0.1, 0.01, 0.0, 16.0).below_half_sqrt_T1);
    CHECK_FALSE(l_tilde(1, 1, 1, 0.1, 0.01, 0.0, 1.0).below_half_sqrt_T1);
}

TEST_CASE("a priori bound") {
    CHECK(apriori_bound(2.5, 0, 0, 0.1) == 2.5);
    const auto e = exponents(0.1);
    const double p1 = 2 / (0.9 * (1 - e.beta1));
    CHECK(apriori_bound(0, 3, 0, 0.1) == doctest::Approx(std::pow(3.0, p1)));
    CHECK(apriori_bound(0, 6, 0, 0.1) / apriori_bound(0, 3, 0, 0.1) == doctest::Approx(std::pow(2.0, p1)));
    const double p2 = 1 / (0.9 * (1 - e.beta2));
    CHECK(apriori_bound(0, 0, 3, 0.1) == doctest::Approx(std::pow(3.0, p2)));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 3.0);
    for (int i = 0; i < 50; ++i) {
        const double a = U(rng), b = U(rng), c = U(rng);
        CHECK(apriori_bound(a, b, c, 0.1) <= apriori_bound(a + 0.1, b, c, 0.1));
        CHECK(apriori_bound(a, b, c, 0.1) <= apriori_bound(a, b + 0.1, c, 0.1));
        CHECK(apriori_bound(a, b, c, 0.1) <= apriori_bound(a, b, c + 0.1, 0.1));
    }
    CHECK_THROWS_AS(apriori_bound(1, 1, 1, 0.2), Error);
    CHECK(c_star(1.0, 0, 0, e) == 4.0);
}

TEST_CASE("growth envelope") {
    auto flat = growth_envelope(2.0, std::vector<double>(9, 0.0), 0.5);
    for (std::size_t i = 0; i < flat.iteration.size(); ++i) {
        CHECK(flat.iteration[i] == 2.0);
        CHECK(flat.envelope[i] == 2.0);
    }
    auto r = growth_envelope(1.0, std::vector<double>(9, 1.0), 0.5);
    REQUIRE(r.envelope.size() == 10);
    CHECK(r.envelope.back() == doctest::Approx(30.25).epsilon(1e-14));
    double y = 1.0;
    for (int i = 0; i < 9; ++i) y += std::sqrt(y);
    CHECK(r.iteration.back() == doctest::Approx(y).epsilon(1e-14));
    CHECK(r.iteration.back() <= 30.25);
    CHECK(r.dominated);

    auto lin = growth_envelope(1.0, {0.5, 2.0, 1.0}, 0.0);
    CHECK(lin.iteration.back() == doctest::Approx(4.5));
    CHECK(lin.envelope.back() >= lin.iteration.back());

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int inst = 0; inst < 100; ++inst) {
        std::vector<double> q(30);
        for (auto& v : q) v = 3 * U(rng);
        const double beta = 0.95 * U(rng);
        const auto res = growth_envelope(0.1 + 5 * U(rng), q, beta);
        CHECK(res.dominated);
        for (std::size_t i = 0; i < res.iteration.size(); ++i)
            CHECK(res.iteration[i] <= res.envelope[i] * (1 + 1e-12));
    }
}

TEST_CASE("massive recursion") {
    const double a = std::exp(-1.0);
    auto z = massive_recursion(3.0, a, std::vector<double>(10, 0.0), 0.5);
    for (std::size_t n = 0; n < z.iteration.size(); ++n) {
        CHECK(z.iteration[n] == doctest::Approx(3.0 * std::pow(a, static_cast<double>(n))));
        CHECK(z.envelope[n] == 3.0);
    }
    const double fixed = std::pow(1 / (1 - a), 2);
    CHECK(fixed == doctest::Approx(2.5027).epsilon(1e-4));
    for (double y1 : {0.1, fixed / 2, 2 * fixed, 50.0}) {
        auto r = massive_recursion(y1, a, std::vector<double>(199, 1.0), 0.5);
        CHECK(std::abs(r.iteration.back() - fixed) <= 1e-6);
        CHECK(r.dominated);
        const bool up = y1 < fixed;
        for (std::size_t n = 1; n < r.iteration.size(); ++n)
            CHECK((up ? r.iteration[n] >= r.iteration[n - 1] : r.iteration[n] <= r.iteration[n - 1]));
    }
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int inst = 0; inst < 100; ++inst) {
        std::vector<double> rr(40);
        for (auto& v : rr) v = 2 * U(rng);
        const auto res = massive_recursion(0.1 + 5 * U(rng), 0.05 + 0.9 * U(rng), rr, 0.95 * U(rng));
        CHECK(res.dominated);
    }
    CHECK_THROWS_AS(massive_recursion(1, 1.0, {1.0}, 0.5), Error);
}

TEST_CASE("moment recursion") {
    const double a = std::exp(-1.0);
    CHECK(moment_recursion(1.0, a, 0.0, 0.5).Z_bar == 0.0);
    const auto m = moment_recursion(1.0, a, 1.0, 0.5);
    CHECK(m.Z_bar == doctest::Approx(2.5027).epsilon(1e-4));
    CHECK(std::abs(m.iteration.back() - m.Z_bar) <= 1e-6);
    for (double z1 : {m.Z_bar / 2, 2 * m.Z_bar}) {
        const auto r = moment_recursion(z1, a, 1.0, 0.5);
        CHECK(r.monotone);
        CHECK(r.final_gap <= 1e-6);
    }
}

TEST_CASE("interval constants") {
    IntervalConstants c{{1.0, 3.0, 2.0}, {0.5, 0.2, 0.7}};
    const auto t1 = c.tilde_C1(), t2 = c.tilde_C2();
    REQUIRE(t1.size() == 3);
    CHECK(t1 == std::vector<double>{1.0, 3.0, 3.0});
    CHECK(t2 == std::vector<double>{0.5, 0.5, 0.7});
    for (std::size_t i = 1; i < 3; ++i) {
        CHECK(t1[i] >= c.C1[i]);
        CHECK(t1[i] >= c.C1[i - 1]);
    }
}

TEST_CASE("growth audit and stationarity") {
    const auto e = exponents(0.1);
    IntervalConstants zero{{0, 0, 0, 0}, {0, 0, 0, 0}};
    const auto audit = growth_audit(std::vector<double>{1.0, 0.8, 0.5, 0.4}, 1.0, zero, e);
    CHECK(audit.pass);
    CHECK(audit.rows.size() == 4);
    CHECK(audit.to_csv().rfind("n,Y_n,envelope_n,pass\n", 0) == 0);

    IntervalConstants ones{{1, 1, 1, 1}, {1, 1, 1, 1}};
    const double p = 1 / (1 - e.beta1);
    std::vector<double> fast{1.0, 2 * std::pow(2.0, p), 3 * std::pow(3.0, p), 4 * std::pow(4.0, p)};
    CHECK_FALSE(growth_audit(fast, 1.0, ones, e).pass);

    std::vector<std::vector<double>> flat(4, std::vector<double>(10, 2.0));
    const auto s = stationarity(flat, 5, 7, 8, 10);
    CHECK(s.pass);
    CHECK(s.relative_change == doctest::Approx(0.0));
    std::vector<std::vector<double>> growing(4);
    for (auto& y : growing)
        for (int n = 1; n <= 10; ++n) y.push_back(n);
    CHECK_FALSE(stationarity(growing, 5, 7, 8, 10).pass);
    CHECK_THROWS_AS(stationarity(growing, 5, 7, 8, 12), Error);
}

}  // TEST_SUITE
