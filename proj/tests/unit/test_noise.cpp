#include <cmath>
#include <vector>

#include "doctest.h"
#include "sspde/noise.hpp"
#include "sspde/parallel.hpp"

using namespace sspde;

namespace {

const double kInv4Pi2 = 1.0 / (4 * kPi * kPi);

struct Moments {
    double mean = 0, var = 0, se_mean = 0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    for (double x : v) m.mean += x;
    m.mean /= v.size();
    for (double x : v) m.var += (x - m.mean) * (x - m.mean);
    m.var /= (v.size() - 1);
    m.se_mean = std::sqrt(m.var / v.size());
    return m;
}

}  // namespace

TEST_SUITE("noise") {

TEST_CASE("regularization spec") {
    CHECK_THROWS_AS(RegularizationSpec(0.0), Error);
    CHECK_THROWS_AS(RegularizationSpec(0.5, -1), Error);
    RegularizationSpec r(0.25);
    CHECK(r.k_max() == 4);
    TorusLattice lat(8);
    CHECK_THROWS_AS(r.validate_for(lat), Error);
    CHECK_NOTHROW(r.validate_for(TorusLattice(16)));
    CHECK(r.in_band(4, 0, TorusLattice(16)));
    CHECK_FALSE(r.in_band(3, 3, TorusLattice(16)));
}

TEST_CASE("gpam coefficients: hermitian, cutoff, covariance") {
    TorusLattice lat(8);
    RegularizationSpec reg(1.0 / 3.0);
    const int R = 10000;
    std::vector<double> re(R), sq(R), zero(R);
    for (int r = 0; r < R; ++r) {
        auto xi = sample_gpam_noise(lat, reg, static_cast<std::uint64_t>(r));
        if (r < 50) {
            CHECK(xi.xi_hat.hermitian_defect() < 1e-12);
            CHECK(xi.xi_hat.at(4, 0) == Complex(0, 0));
            CHECK(xi.xi_hat.at(2, 3) == Complex(0, 0));
        }
        const Complex c = xi.xi_hat.at(1, 0);
        re[r] = c.real();
        // xi_k xi_{-k} = |xi_k|^2
        sq[r] = (c * xi.xi_hat.at(-1, 0)).real();
        zero[r] = xi.xi_hat.at(0, 0).real();
    }
    const auto mre = moments(re), msq = moments(sq), mz = moments(zero);
    CHECK(std::abs(mre.mean) < 3 * mre.se_mean);
    CHECK(std::abs(msq.mean - kInv4Pi2) < 0.05 * kInv4Pi2);
    CHECK(std::abs(mz.var - kInv4Pi2) < 0.05 * kInv4Pi2);
}

TEST_CASE("gpam determinism and cross-lattice coupling") {
    RegularizationSpec reg(0.25);
    auto a = sample_gpam_noise(TorusLattice(16), reg, 9);
    auto b = sample_gpam_noise(TorusLattice(16), reg, 9);
    auto c = sample_gpam_noise(TorusLattice(32), reg, 9);
    CHECK(a.xi_hat.coeffs == b.xi_hat.coeffs);
    CHECK(a.xi_hat.at(3, -2) == c.xi_hat.at(3, -2));
    auto p = a.physical();
    CHECK(p.all_finite());
}

TEST_CASE("gpam noise is thread-count independent") {
    RegularizationSpec reg(0.1);
    set_thread_count(1);
    auto a = sample_gpam_noise(TorusLattice(32), reg, 4);
    auto la = build_gpam_lolli(a, 0.7);
    set_thread_count(3);
    auto b = sample_gpam_noise(TorusLattice(32), reg, 4);
    auto lb = build_gpam_lolli(b, 0.7);
    set_thread_count(0);
    CHECK(a.xi_hat.coeffs == b.xi_hat.coeffs);
    CHECK(la.values == lb.values);
}

TEST_CASE("gpam lollipop closed forms") {
    TorusLattice lat(16);
    GpamNoise zero_only{SpectralField(lat), 0, RegularizationSpec(0.5)};
    zero_only.xi_hat.at(0, 0) = 0.7;
    auto l = build_gpam_lolli(zero_only, 2.0);
    CHECK(l.sup_norm() == doctest::Approx(1.4));
    CHECK(l.mean() == doctest::Approx(1.4));

    GpamNoise mode{SpectralField(lat), 0, RegularizationSpec(0.5)};
    mode.xi_hat.at(1, 1) = 0.25;
    mode.xi_hat.at(-1, -1) = 0.25;
    auto spec = gpam_lolli_spectrum(mode, 3.0);
    CHECK(std::abs(spec.at(1, 1) - Complex(0.125, 0)) < 1e-15);
    auto phys = build_gpam_lolli(mode, 3.0);
    const double x1 = lat.coordinate(3), x2 = lat.coordinate(5);
    CHECK(phys(3, 5) == doctest::Approx(0.25 * std::cos(x1 + x2)).epsilon(1e-12));

    auto xi = sample_gpam_noise(TorusLattice(32), RegularizationSpec(0.1), 2);
    CHECK(gpam_lolli_residual(xi, 0.3) <= 1e-10);
}

TEST_CASE("gpam lollipop increments are stationary") {
    TorusLattice lat(16);
    RegularizationSpec reg(0.25);
    std::vector<double> d1, d2;
    for (int r = 0; r < 400; ++r) {
        auto xi = sample_gpam_noise(lat, reg, static_cast<std::uint64_t>(r));
        auto a = build_gpam_lolli(xi, 0.0), b = build_gpam_lolli(xi, 0.5), c = build_gpam_lolli(xi, 1.0);
        d1.push_back(b(2, 3) - a(2, 3));
        d2.push_back(c(2, 3) - b(2, 3));
    }
    const auto m1 = moments(d1), m2 = moments(d2);
    const double se = std::hypot(m1.se_mean, m2.se_mean) + 1e-15;
    CHECK(std::abs(m1.mean - m2.mean) <= 3 * se);
    CHECK(std::abs(m1.var - m2.var) <= 3 * m1.var * std::sqrt(2.0 / d1.size()) + 1e-15);
}

TEST_CASE("gpam renormalization constant by enumeration") {
    CHECK(gpam_renorm_constant(RegularizationSpec(1.0)) == doctest::Approx(4 * kInv4Pi2).epsilon(1e-14));
    CHECK(gpam_renorm_constant(RegularizationSpec(1.0)) == doctest::Approx(0.101321).epsilon(1e-5));
    CHECK(gpam_renorm_constant(RegularizationSpec(0.5)) == doctest::Approx(7 * kInv4Pi2).epsilon(1e-14));
    CHECK(gpam_renorm_constant(RegularizationSpec(0.5)) == doctest::Approx(0.177305).epsilon(1e-5));
    CHECK(gpam_renorm_constant(RegularizationSpec(2.0)) == 0.0);
}

TEST_CASE("sine-gordon degenerate beta and determinism") {
    TorusLattice lat(16);
    RegularizationSpec reg(0.25);
    auto sg = sample_sg_noise(lat, 0.0, reg, 1e-2, 0.2, 3);
    for (const auto& s : sg.cos_noise.slices)
        for (double v : s.values) CHECK(v == 1.0);
    CHECK(sg.sin_noise.sup_norm() == 0.0);

    auto a = sample_sg_noise(lat, 1.5, reg, 1e-2, 0.2, 3);
    auto b = sample_sg_noise(lat, 1.5, reg, 1e-2, 0.2, 3);
    CHECK(a.cos_noise.slices.back().values == b.cos_noise.slices.back().values);
    CHECK_THROWS_AS(sample_sg_noise(lat, 4.1, reg, 1e-2, 0.2, 3), Error);

    // Pointwise definition of the exponential noises.
    const double amp = std::pow(0.25, -1.5 * 1.5 / (4 * kPi));
    const auto& z = a.z_tilde.slices.back();
    const auto& c = a.cos_noise.slices.back();
    const auto& s = a.sin_noise.slices.back();
    for (std::size_t i = 0; i < z.values.size(); i += 7) {
        CHECK(c.values[i] == doctest::Approx(amp * std::cos(1.5 * z.values[i])).epsilon(1e-13));
        CHECK(s.values[i] == doctest::Approx(amp * std::sin(1.5 * z.values[i])).epsilon(1e-13));
    }
    CHECK(a.cos_noise.slices.back().all_finite());
}

TEST_CASE("sine-gordon smoothed field variance grows logarithmically") {
    // Z solves (d/dt - Lap) Z = white noise with unit covariance; its stationary
    // covariance is (-Lap)^{-1} / 2, so halving epsilon adds log 2 / (4 pi).
    TorusLattice lat(64);
    const int R = 200;
    std::vector<double> var;
    for (double eps : {0.25, 0.125, 0.0625}) {
        double acc = 0;
        for (int r = 0; r < R; ++r) {
            SineGordonParams p{0.5, eps, 2e-3, derive_seed(11, static_cast<std::uint64_t>(r))};
            SineGordonStream s(lat, p);
            for (int i = 0; i < 500; ++i) s.advance();
            auto z = s.z_tilde();
            double m = 0;
            for (double v : z.values) m += v * v;
            acc += m / z.values.size();
        }
        var.push_back(acc / R);
    }
    const double target = std::log(2.0) / (4 * kPi);
    for (std::size_t i = 1; i < var.size(); ++i) {
        const double d = var[i] - var[i - 1];
        MESSAGE("variance increment " << d << " vs " << target);
        CHECK(std::abs(d - target) <= 0.3 * target);
    }
}

TEST_CASE("sine-gordon renormalization estimates") {
    TorusLattice lat(16);
    RegularizationSpec reg(0.25);
    auto flat = sample_sg_noise(lat, 0.0, reg, 1e-2, 0.3, 5);
    auto e0 = estimate_sg_renorm(flat, 100);
    // cos noise is identically one, so the lollipop is t and the estimate is exact.
    const double lolli_c = flat.z_tilde.t_end();
    CHECK(std::abs(e0.C[0][0] - lolli_c) <= 3 * e0.stderr_[0][0] + 1e-12);
    CHECK(e0.C[1][0] == 0.0);
    CHECK(e0.C[1][1] == 0.0);
    CHECK_THROWS_AS(estimate_sg_renorm(flat, 99), Error);

    auto sg = sample_sg_noise(lat, 1.0, reg, 1e-2, 0.3, 5);
    auto e1 = estimate_sg_renorm(sg, 100);
    auto e2 = estimate_sg_renorm(sg, 200);
    CHECK(std::abs(e2.C[0][1] + e2.C[1][0]) <= 3 * (e2.stderr_[0][1] + e2.stderr_[1][0]));
    const double ratio = e1.stderr_[0][0] / e2.stderr_[0][0];
    CHECK(std::abs(ratio - std::sqrt(2.0)) <= 0.25 * std::sqrt(2.0));
}

TEST_CASE("wiener coefficients and constants") {
    const double c2 = kInv4Pi2 / std::sqrt(2.0);
    CHECK(wiener_coefficient(0.5, 1, 0) * wiener_coefficient(0.5, 1, 0) == doctest::Approx(c2).epsilon(1e-14));
    CHECK(c2 == doctest::Approx(0.017911).epsilon(1e-4));
    CHECK(c2 / 2 == doctest::Approx(0.0089553).epsilon(1e-4));
    CHECK(wiener_renorm_constant(0.5, RegularizationSpec(1.0)) == doctest::Approx(kInv4Pi2 * 4 * c2).epsilon(1e-14));
    CHECK(wiener_renorm_constant(0.5, RegularizationSpec(2.0)) == 0.0);
    CHECK_THROWS_AS(sample_wiener_noise(TorusLattice(8), 1.0, 0.1, 1, RegularizationSpec(1), 0), Error);
}

TEST_CASE("wiener increments, stationarity and the zero mode") {
    TorusLattice lat(8);
    RegularizationSpec reg(1.0 / 3.0);
    const double dt = 0.1;
    const int steps = 10, R = 10000;
    const double c = wiener_coefficient(0.5, 1, 0), c0 = wiener_coefficient(0.5, 0, 0);
    std::vector<double> v_start(R), v_end(R), inc(R), z0(R);
    for (int r = 0; r < R; ++r) {
        auto w = sample_wiener_noise(lat, 0.5, dt, steps, reg, static_cast<std::uint64_t>(r));
        SpectralField z = w.stationary_initial(), dw(lat), ou(lat);
        v_start[r] = std::norm(z.at(1, 0));
        double b0 = 0;
        for (int s = 0; s < steps; ++s) {
            w.increment_pair(s, dw, ou);
            z.at(1, 0) = std::exp(-dt) * z.at(1, 0) + ou.at(1, 0);
            b0 += dw.at(0, 0).real();
            if (s == 3) inc[r] = std::norm(dw.at(1, 0));
        }
        v_end[r] = std::norm(z.at(1, 0));
        z0[r] = b0;
    }
    const double stat = c * c / 2;
    CHECK(std::abs(moments(v_start).mean - stat) < 0.05 * stat);
    CHECK(std::abs(moments(v_end).mean - stat) < 0.05 * stat);
    CHECK(std::abs(moments(inc).mean - c * c * dt) < 0.05 * c * c * dt);
    CHECK(std::abs(moments(z0).var - c0 * c0 * dt * steps) < 0.05 * c0 * c0 * dt * steps);
}

TEST_CASE("wiener lollipop is deterministic and real") {
    auto w = sample_wiener_noise(TorusLattice(16), 0.5, 0.01, 20, RegularizationSpec(0.25), 8);
    auto a = build_wiener_lolli(w), b = build_wiener_lolli(w);
    CHECK(a.n_slices() == 21);
    CHECK(a.slices.back().values == b.slices.back().values);
    CHECK(a.slices.back().all_finite());
}

}  // TEST_SUITE
