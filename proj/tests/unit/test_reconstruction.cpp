#include <cmath>

#include "doctest.h"
#include "sspde/reconstruction.hpp"

using namespace sspde;

namespace {

struct Setup {
    TorusLattice lat{64};
    double dt = 1.0 / 1024;
    int slices = 308;
    GpamNoise xi = sample_gpam_noise(TorusLattice(64), RegularizationSpec(0.25), 21);
    Model model = make_gpam_model(xi, 0.0, 0.1, 0.0, 1.0 / 1024, 308);
    SpaceTimeField u = make_u();

    SpaceTimeField make_u() const {
        std::vector<GridField> sl;
        for (int s = 0; s < slices; ++s) {
            const double t = s * dt;
            sl.push_back(GridField::from_function(lat, [&](double x1, double x2) {
                return 1.0 + 0.5 * std::exp(-t) * std::cos(x1) + 0.2 * std::sin(x2 - x1);
            }));
        }
        return SpaceTimeField(0.0, dt, std::move(sl));
    }
    ParabolicPoint z(int i1 = 9, int i2 = 40) const {
        return ParabolicPoint::make(u.t_end(), lat.coordinate(i1), lat.coordinate(i2));
    }
};

const Setup& setup() {
    static const Setup s;
    return s;
}

double level_sum(const ReconstructionReport& r) {
    double v = 0;
    for (double x : r.levels) v += x;
    return v;
}

}  // namespace

TEST_SUITE("reconstruction") {

TEST_CASE("constant family reconstructs to zero") {
    const auto& S = setup();
    const auto fam = constant_family(S.model.noise(0), S.u);
    for (int N = 0; N <= 3; ++N) {
        const auto r = lambda_NL(fam, S.z(), 0.25, N);
        CHECK(std::abs(r.value) <= 1e-12);
        CHECK(std::abs(r.telescoping - r.value) <= 1e-8);
        CHECK(r.levels.size() == static_cast<std::size_t>(N));
    }
}

TEST_CASE("frozen family matches the direct pairing") {
    TorusLattice lat(32);
    const double dt = 1.0 / 256, L = 0.5;
    std::vector<GridField> sl;
    for (int s = 0; s < 270; ++s) {
        const double t = s * dt;
        sl.push_back(GridField::from_function(lat, [&](double x1, double x2) {
            return std::exp(-t) * std::cos(x1) + std::sin(2 * x2) * std::cos(3 * t);
        }));
    }
    SpaceTimeField u(0.0, dt, sl);
    const auto z = ParabolicPoint::make(u.t_end(), lat.coordinate(3), lat.coordinate(17));
    const auto fam = frozen_family(u);
    const auto r = lambda_NL(fam, z, L, kReconstructionDepth);
    const double uz = u.slices.back()(3, 17);
    const double mass = semigroup_kernel(MollifierKernel::canonical(), L, kReconstructionDepth, lat, dt).mass();
    CHECK(std::abs(r.value - (semigroup_pairing(u, z, L) - uz * mass)) <= 1e-6);
    CHECK(std::abs(r.telescoping - r.value) <= 1e-8);
    CHECK(std::abs(level_sum(r) - r.value) <= 1e-12);
}

TEST_CASE("sigma = 1 reconstructs the noise exactly") {
    const auto& S = setup();
    const auto uf = build_ufield(S.u, S.model, Nonlinearity::constant(1.0));
    const auto z = S.z();
    const double rec = reconstruct_product(S.model, Nonlinearity::constant(1.0), uf, z, 0.25, 3);
    const double direct = semigroup_pairing(S.model.noise(0), z, 0.25);
    CHECK(std::abs(rec - direct) <= 1e-10 * std::max(1.0, std::abs(direct)));
    CHECK_THROWS_AS(reconstruct_product(S.model, Nonlinearity::sine(), uf, z, 0.25, 3), Error);
}

TEST_CASE("linear sigma matches the literal product") {
    const auto& S = setup();
    const auto sigma = Nonlinearity::linear();
    const auto uf = build_ufield(S.u, S.model, sigma);
    std::vector<GridField> prod;
    double sup = 0;
    for (int s = 0; s < S.u.n_slices(); ++s) {
        GridField g = S.u.slice(s);
        const auto& x = S.model.noise(0).slice(0).values;
        for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] *= x[k];
        sup = std::max(sup, g.sup_norm());
        prod.push_back(std::move(g));
    }
    const SpaceTimeField uxi(0.0, S.dt, std::move(prod));
    for (int i = 0; i < 3; ++i) {
        const auto z = S.z(7 + 19 * i, 40 - 11 * i);
        const double rec = reconstruct_product(S.model, sigma, uf, z, 0.25, 4);
        const double lit = semigroup_pairing(uxi, z, 0.25);
        CHECK(std::abs(rec - lit) <= 1e-3 * sup);
    }
}

TEST_CASE("renormalization shift, linearity and telescoping") {
    const auto& S = setup();
    const auto sigma = Nonlinearity::sine();
    const auto uf = build_ufield(S.u, S.model, sigma);
    const auto z = S.z();
    const double dC = 0.7;
    const double a = reconstruct_product(S.model, sigma, uf, z, 0.25, 3);
    const double b = reconstruct_product(S.model.with_renorm({{dC}}), sigma, uf, z, 0.25, 3);
    const double b2 = reconstruct_product(S.model.with_renorm({{2 * dC}}), sigma, uf, z, 0.25, 3);
    CHECK(b2 - a == doctest::Approx(2 * (b - a)).epsilon(1e-9));

    // For constant u the shift is exactly -sigma' sigma(u) dC times the kernel mass.
    const double uc = 1.3;
    const SpaceTimeField flat(0.0, S.dt, std::vector<GridField>(S.slices, GridField(S.lat, uc)));
    const auto ufc = build_ufield(flat, S.model, sigma);
    const double ac = reconstruct_product(S.model, sigma, ufc, z, 0.25, 3);
    const double bc = reconstruct_product(S.model.with_renorm({{dC}}), sigma, ufc, z, 0.25, 3);
    const double mass = semigroup_kernel(MollifierKernel::canonical(), 0.25, kReconstructionDepth, S.lat, S.dt).mass();
    CHECK(bc - ac == doctest::Approx(-std::cos(uc) * std::sin(uc) * dC * mass).epsilon(1e-9));

    const auto F = product_family(uf, S.model.noise(0), 0.0, 0.1);
    const auto G = frozen_family(S.u);
    const auto rF = lambda_NL(F, z, 0.25, 3), rG = lambda_NL(G, z, 0.25, 3);
    const auto rc = lambda_NL(F.combine(2.0, G, -0.5), z, 0.25, 3);
    CHECK(std::abs(rc.value - (2.0 * rF.value - 0.5 * rG.value)) <= 1e-10);
    for (const auto* r : {&rF, &rG, &rc}) CHECK(std::abs(r->telescoping - r->value) <= 1e-8);
    for (const auto& c : F.certificate()) CHECK(c.gamma > 0);
}

TEST_CASE("levels decay and the sum stabilizes in N") {
    const auto& S = setup();
    const auto sigma = Nonlinearity::sine();
    const auto uf = build_ufield(S.u, S.model, sigma);
    const auto F = product_family(uf, S.model.noise(0), 0.0, 0.1);
    const auto r = lambda_NL(F, S.z(), 0.25, 4);
    REQUIRE(r.levels.size() == 4);
    for (std::size_t n = 1; n < r.levels.size(); ++n) CHECK(std::abs(r.levels[n]) < std::abs(r.levels[n - 1]));
    const auto r3 = lambda_NL(F, S.z(), 0.25, 3);
    for (std::size_t n = 0; n < 3; ++n) CHECK(r3.levels[n] == doctest::Approx(r.levels[n]).epsilon(1e-12));
}

TEST_CASE("error scaling: degenerate cases") {
    const auto& S = setup();
    TorusLattice lat = S.lat;
    GpamNoise zero{SpectralField(lat), 0, RegularizationSpec(0.25)};
    const auto zm = make_gpam_model(zero, 0.0, 0.1, 0.0, S.dt, S.slices);
    const auto uf = build_ufield(S.u, zm, Nonlinearity::sine());
    const auto rep = error_scaling_study(zm, Nonlinearity::sine(), uf, {0.25, 0.125}, 4);
    for (const auto& row : rep.rows) CHECK(row.abs_error == 0.0);
    CHECK(rep.target == doctest::Approx(0.7));

    // Constant sigma: the expansion is exact and the error vanishes.
    const auto ufc = build_ufield(S.u, S.model, Nonlinearity::constant(0.8));
    const auto rc = error_scaling_study(S.model, Nonlinearity::constant(0.8), ufc, {0.25, 0.125}, 4);
    for (const auto& row : rc.rows) CHECK(row.abs_error <= 1e-10);
    CHECK(rc.to_csv().rfind("L,abs_error,basepoint_index\n", 0) == 0);
    CHECK_THROWS_AS(error_scaling_study(S.model, Nonlinearity::sine(), ufc, {0.25}, 4), Error);
}

TEST_CASE("loglog slope") {
    CHECK(loglog_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(loglog_slope({1}, {1}), Error);
}

}  // TEST_SUITE
