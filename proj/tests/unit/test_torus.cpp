#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sspde/fft.hpp"
#include "sspde/torus.hpp"

using namespace sspde;

TEST_SUITE("torus") {

TEST_CASE("parabolic distance examples") {
    CHECK(parabolic_distance(ParabolicPoint::make(4, 0, 0), ParabolicPoint::make(0, 0, 0)) == doctest::Approx(2.0));
    CHECK(parabolic_distance(ParabolicPoint::make(0, 0, 0), ParabolicPoint{0, {kPi, 0}}) == doctest::Approx(kPi));
    CHECK(parabolic_distance(ParabolicPoint::make(1, 0.5, 0), ParabolicPoint::make(0.96, 0, 0)) ==
          doctest::Approx(0.5));
}

TEST_CASE("past ball examples") {
    const auto c = ParabolicPoint::make(1, 0, 0);
    CHECK_FALSE(in_past_ball(c, 0.5, ParabolicPoint::make(1, 0.1, 0)));
    CHECK(in_past_ball(c, 0.5, ParabolicPoint::make(0.9, 0.1, 0)));
    CHECK_FALSE(in_past_ball(c, 0.5, ParabolicPoint::make(0.5, 0, 0)));
    CHECK_THROWS_AS(in_past_ball(c, 0.0, c), Error);
}

TEST_CASE("parabolic distance is a metric on random triples") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> t(-2, 2), x(-10, 10);
    for (int i = 0; i < 2000; ++i) {
        auto p = ParabolicPoint::make(t(gen), x(gen), x(gen));
        auto q = ParabolicPoint::make(t(gen), x(gen), x(gen));
        auto r = ParabolicPoint::make(t(gen), x(gen), x(gen));
        const double pq = parabolic_distance(p, q);
        CHECK(pq >= 0);
        CHECK(pq == parabolic_distance(q, p));
        CHECK(pq <= parabolic_distance(p, r) + parabolic_distance(r, q) + 1e-12);
        CHECK(parabolic_distance(p, p) == 0.0);
        CHECK(torus_distance(p.x, q.x) <= kPi * std::sqrt(2.0) + 1e-12);
    }
}

TEST_CASE("wrap into (-pi, pi]") {
    CHECK(wrap_coordinate(kPi) == doctest::Approx(kPi));
    CHECK(wrap_coordinate(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_coordinate(3 * kPi / 2) == doctest::Approx(-kPi / 2));
    for (double v = -50; v < 50; v += 0.37) {
        const double w = wrap_coordinate(v);
        CHECK(w > -kPi);
        CHECK(w <= kPi);
        CHECK(std::remainder(w - v, kTwoPi) == doctest::Approx(0.0).epsilon(1e-12).scale(1));
    }
}

TEST_CASE("lattice validation") {
    CHECK_THROWS_AS(TorusLattice(7), Error);
    CHECK_THROWS_AS(TorusLattice(6), Error);
    TorusLattice lat(16);
    CHECK(lat.wavenumber(8) == 8);
    CHECK(lat.wavenumber(9) == -7);
    CHECK(lat.slot(-1) == 15);
}

TEST_CASE("fft normalization and round trip") {
    TorusLattice lat(16);
    auto one = fft_forward(GridField(lat, 1.0));
    CHECK(std::abs(one.at(0, 0) - Complex(1, 0)) < 1e-14);
    double rest = 0;
    for (std::size_t i = 1; i < one.coeffs.size(); ++i) rest = std::max(rest, std::abs(one.coeffs[i]));
    CHECK(rest < 1e-14);

    auto c = fft_forward(GridField::from_function(lat, [](double x1, double) { return std::cos(x1); }));
    CHECK(std::abs(c.at(1, 0) - Complex(0.5, 0)) < 1e-14);
    CHECK(std::abs(c.at(-1, 0) - Complex(0.5, 0)) < 1e-14);
    CHECK(std::abs(c.at(0, 1)) < 1e-14);

    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd;
    GridField g(lat);
    for (auto& v : g.values) v = nd(gen);
    auto h = fft_forward(g);
    CHECK(h.hermitian_defect() < 1e-12);
    auto back = fft_inverse(h);
    double err = 0, mean_sq = 0, parseval = 0;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        err = std::max(err, std::abs(back.values[i] - g.values[i]));
        mean_sq += g.values[i] * g.values[i] / g.values.size();
    }
    for (const auto& z : h.coeffs) parseval += std::norm(z);
    CHECK(err < 1e-12 * g.sup_norm());
    // The grid mean of u^2 equals sum |u_k|^2 under this normalization.
    CHECK(std::abs(mean_sq - parseval) < 1e-12 * mean_sq);
}

TEST_CASE("space-time field time lookup") {
    TorusLattice lat(8);
    SpaceTimeField f(0.5, 0.25, {GridField(lat, 0.0), GridField(lat, 1.0), GridField(lat, 2.0)});
    CHECK(f.slice_index(0.75) == 1);
    CHECK_THROWS_AS(f.slice_index(0.6), Error);
    CHECK(f.at_time(0.625).values[3] == doctest::Approx(0.5));
    CHECK_THROWS_AS(f.at_time(2.0), Error);
    CHECK_THROWS_AS(SpaceTimeField(0, 0.0, {GridField(lat)}), Error);
    CHECK(f.sup_norm() == 2.0);
}

TEST_CASE("dump round trip") {
    TorusLattice lat(8);
    std::mt19937_64 gen(1);
    std::normal_distribution<double> nd;
    std::vector<GridField> sl;
    for (int s = 0; s < 3; ++s) {
        GridField g(lat);
        for (auto& v : g.values) v = nd(gen);
        sl.push_back(g);
    }
    SpaceTimeField f(0.125, 0.0625, sl);
    std::stringstream ss;
    write_dump(ss, f);
    std::string head;
    std::getline(ss, head);
    CHECK(head.rfind("SSPDE1 8 ", 0) == 0);
    ss.seekg(0);
    auto g = read_dump(ss);
    CHECK(g.t0 == f.t0);
    CHECK(g.dt == f.dt);
    REQUIRE(g.n_slices() == 3);
    for (int s = 0; s < 3; ++s) CHECK(g.slices[s].values == f.slices[s].values);
    std::stringstream bad("SSPDE2 8 0 1 1\n");
    CHECK_THROWS_AS(read_dump(bad), Error);
}

}  // TEST_SUITE
