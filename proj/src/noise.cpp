#include "sspde/noise.hpp"

#include <algorithm>
#include <cmath>

#include "sspde/fft.hpp"
#include "sspde/parallel.hpp"
#include "sspde/spectral.hpp"

namespace sspde {

namespace {

constexpr std::uint64_t kTagGpam = 0x6770616dULL;
constexpr std::uint64_t kTagSg = 0x73670000ULL;
constexpr std::uint64_t kTagWienerStep = 0x77690001ULL;
constexpr std::uint64_t kTagWienerInit = 0x77690002ULL;

constexpr double kInvTwoPi = 1.0 / kTwoPi;

// Upper half-plane representatives (k1 > 0, or k1 == 0 and k2 >= 0) inside the band.
struct HalfPlaneMode {
    int k1, k2;
};

std::vector<HalfPlaneMode> half_plane_modes(const TorusLattice& lat, const RegularizationSpec& reg) {
    std::vector<HalfPlaneMode> out;
    const int n = lat.n();
    for (int k1 = 0; k1 < n / 2; ++k1)
        for (int k2 = -n / 2 + 1; k2 < n / 2; ++k2) {
            if (k1 == 0 && k2 < 0) continue;
            if (reg.in_band(k1, k2, lat)) out.push_back({k1, k2});
        }
    return out;
}

void set_hermitian(SpectralField& f, int k1, int k2, Complex v) {
    if (k1 == 0 && k2 == 0) {
        f.at(0, 0) = Complex(v.real(), 0.0);
        return;
    }
    f.at(k1, k2) = v;
    f.at(-k1, -k2) = std::conj(v);
}

}  // namespace

RegularizationSpec::RegularizationSpec(double eps, double time_width)
    : epsilon(eps), time_mollifier_width(time_width) {
    if (!(eps > 0)) throw Error("RegularizationSpec: epsilon must be positive");
    if (time_width < 0) throw Error("RegularizationSpec: time_mollifier_width must be >= 0");
}

int RegularizationSpec::k_max() const { return static_cast<int>(std::floor(1.0 / epsilon + 1e-12)); }

bool RegularizationSpec::in_band(int k1, int k2, const TorusLattice& lat) const {
    const int h = lat.n() / 2;
    if (std::abs(k1) >= h || std::abs(k2) >= h) return false;
    const double r = cutoff();
    return static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2 <= r * r * (1 + 1e-12);
}

void RegularizationSpec::validate_for(const TorusLattice& lat) const {
    if (k_max() >= lat.n() / 2)
        throw Error("RegularizationSpec: cutoff k_max=" + std::to_string(k_max()) +
                    " reaches the Nyquist mode of n=" + std::to_string(lat.n()));
}

// ---------------------------------------------------------------- gPAM

GpamNoise sample_gpam_noise(const TorusLattice& lat, const RegularizationSpec& reg,
                            std::uint64_t seed) {
    reg.validate_for(lat);
    GpamNoise out{SpectralField(lat), seed, reg};
    const CounterRng rng(seed);
    const double s = kInvTwoPi;
    for (const auto& m : half_plane_modes(lat, reg)) {
        double g1, g2;
        rng.normal_pair({kTagGpam, wavevector_key(m.k1, m.k2)}, g1, g2);
        if (m.k1 == 0 && m.k2 == 0)
            set_hermitian(out.xi_hat, 0, 0, Complex(s * g1, 0));
        else
            set_hermitian(out.xi_hat, m.k1, m.k2, Complex(g1, g2) * (s / std::sqrt(2.0)));
    }
    return out;
}

SpectralField gpam_lolli_spectrum(const GpamNoise& noise, double t) {
    if (t < 0) throw Error("build_gpam_lolli: t must be >= 0");
    const auto& lat = noise.xi_hat.lattice;
    SpectralField out(lat);
    const auto k2 = laplacian_symbol(lat);
    for (std::size_t i = 0; i < k2.size(); ++i)
        out.coeffs[i] = (k2[i] == 0.0) ? noise.xi_hat.coeffs[i] * t : noise.xi_hat.coeffs[i] / k2[i];
    return out;
}

GridField build_gpam_lolli(const GpamNoise& noise, double t) {
    return fft_inverse(gpam_lolli_spectrum(noise, t));
}

double gpam_lolli_residual(const GpamNoise& noise, double t) {
    const auto& lat = noise.xi_hat.lattice;
    const SpectralField l = gpam_lolli_spectrum(noise, t);
    const auto k2 = laplacian_symbol(lat);
    double r = 0.0;
    for (std::size_t i = 0; i < k2.size(); ++i) {
        // The time derivative of the zero mode is xi_0; other modes are static.
        const Complex dt_l = (k2[i] == 0.0) ? noise.xi_hat.coeffs[i] : Complex(0.0);
        r = std::max(r, std::abs(dt_l + k2[i] * l.coeffs[i] - noise.xi_hat.coeffs[i]));
    }
    return r;
}

double gpam_renorm_constant(const RegularizationSpec& reg) {
    const int K = reg.k_max();
    const double r2 = reg.cutoff() * reg.cutoff() * (1 + 1e-12);
    double s = 0.0;
    for (int k1 = -K; k1 <= K; ++k1)
        for (int k2 = -K; k2 <= K; ++k2) {
            const double q = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
            if (q > 0 && q <= r2) s += 1.0 / q;
        }
    return s * kInvTwoPi * kInvTwoPi;
}

// ---------------------------------------------------------------- Sine-Gordon

void validate_sg_beta(double beta) {
    if (!(beta * beta < 16.0 * kPi / 3.0) || !std::isfinite(beta))
        throw Error("Sine-Gordon: beta^2 must lie below 16 pi / 3");
}

SineGordonStream::SineGordonStream(const TorusLattice& lat, const SineGordonParams& p)
    : lat_(lat), params_(p), rng_(p.seed) {
    validate_sg_beta(p.beta);
    if (!(p.dt > 0)) throw Error("Sine-Gordon: dt must be positive");
    const RegularizationSpec reg(p.epsilon);
    reg.validate_for(lat);
    for (const auto& m : half_plane_modes(lat, reg)) {
        modes_.push_back(static_cast<int>(lat.index(lat.slot(m.k1), lat.slot(m.k2))));
        partner_.push_back(static_cast<int>(lat.index(lat.slot(-m.k1), lat.slot(-m.k2))));
        const double lam = static_cast<double>(m.k1) * m.k1 + static_cast<double>(m.k2) * m.k2;
        decay_.push_back(std::exp(-lam * p.dt));
        // Var of int_0^dt e^{-lam (dt - s)} dW_k(s) with E|dW_k|^2 = (2 pi)^-2 ds.
        innov_sd_.push_back(kInvTwoPi * std::sqrt(p.dt * phi_function(1, -2.0 * lam * p.dt)));
    }
    z_.assign(modes_.size(), Complex(0.0));
    width_ = std::max(1, static_cast<int>(std::lround(p.epsilon * p.epsilon / p.dt)));
    window_.push_back(z_);
    window_sum_ = z_;
}

void SineGordonStream::advance() {
    ++step_;
    for (std::size_t m = 0; m < modes_.size(); ++m) {
        double g1, g2;
        rng_.normal_pair({kTagSg, static_cast<std::uint64_t>(step_), static_cast<std::uint64_t>(modes_[m])},
                         g1, g2);
        const Complex innov = (modes_[m] == 0) ? Complex(innov_sd_[m] * g1, 0.0)
                                               : Complex(g1, g2) * (innov_sd_[m] / std::sqrt(2.0));
        z_[m] = decay_[m] * z_[m] + innov;
    }
    window_.push_back(z_);
    for (std::size_t m = 0; m < z_.size(); ++m) window_sum_[m] += z_[m];
    if (static_cast<int>(window_.size()) > width_) {
        const auto& old = window_.front();
        for (std::size_t m = 0; m < z_.size(); ++m) window_sum_[m] -= old[m];
        window_.pop_front();
    }
}

GridField SineGordonStream::z_tilde() const {
    std::vector<Complex> full(lat_.size(), Complex(0.0));
    const double inv = 1.0 / width_;
    for (std::size_t m = 0; m < modes_.size(); ++m) {
        const Complex v = window_sum_[m] * inv;
        if (modes_[m] == 0) {
            full[0] = Complex(v.real(), 0.0);
        } else {
            full[static_cast<std::size_t>(modes_[m])] = v;
            full[static_cast<std::size_t>(partner_[m])] = std::conj(v);
        }
    }
    GridField g(lat_);
    Fft2d::get(lat_.n()).backward_real(full.data(), g.values.data());
    return g;
}

double SineGordonStream::amplitude() const {
    return std::pow(params_.epsilon, -params_.beta * params_.beta / (4.0 * kPi));
}

void SineGordonStream::noises(GridField& cos_noise, GridField& sin_noise) const {
    const GridField z = z_tilde();
    const double a = amplitude(), b = params_.beta;
    cos_noise = GridField(lat_);
    sin_noise = GridField(lat_);
    for (std::size_t i = 0; i < z.values.size(); ++i) {
        cos_noise.values[i] = a * std::cos(b * z.values[i]);
        sin_noise.values[i] = a * std::sin(b * z.values[i]);
    }
}

SineGordonNoise sample_sg_noise(const TorusLattice& lat, double beta, const RegularizationSpec& reg,
                                double dt, double T, std::uint64_t seed) {
    validate_sg_beta(beta);
    if (!(T >= 0)) throw Error("sample_sg_noise: T must be >= 0");
    const SineGordonParams p{beta, reg.epsilon, dt, seed};
    SineGordonStream stream(lat, p);
    const int steps = static_cast<int>(std::lround(T / dt));
    std::vector<GridField> z, c, s;
    for (int k = 0; k <= steps; ++k) {
        if (k > 0) stream.advance();
        GridField gc(lat), gs(lat);
        stream.noises(gc, gs);
        z.push_back(stream.z_tilde());
        c.push_back(std::move(gc));
        s.push_back(std::move(gs));
    }
    return SineGordonNoise{beta, reg.epsilon, p, SpaceTimeField(0.0, dt, std::move(z)),
                           SpaceTimeField(0.0, dt, std::move(c)), SpaceTimeField(0.0, dt, std::move(s))};
}

SgRenormEstimate estimate_sg_renorm(const SineGordonNoise& noise, int samples) {
    if (samples < 100) throw Error("estimate_sg_renorm: needs at least 100 samples");
    const TorusLattice lat = noise.z_tilde.lattice();
    const int steps = noise.z_tilde.n_slices() - 1;
    const HeatStep heat(lat, 0.0, noise.params.dt);
    const auto& fft = Fft2d::get(lat.n());
    const std::size_t N = lat.size();

    // Per realization: spatial means of lolli_b * noise_a at the final slice.
    auto one = [&](std::size_t r) {
        SineGordonParams p = noise.params;
        p.seed = derive_seed(noise.params.seed, r);
        SineGordonStream stream(lat, p);
        GridField c(lat), s(lat);
        stream.noises(c, s);
        std::vector<Complex> fc(N), fs(N), lc(N, 0.0), ls(N, 0.0), gc(N), gs(N);
        fft.forward_real(c.values.data(), fc.data());
        fft.forward_real(s.values.data(), fs.data());
        for (int k = 0; k < steps; ++k) {
            stream.advance();
            stream.noises(c, s);
            fft.forward_real(c.values.data(), gc.data());
            fft.forward_real(s.values.data(), gs.data());
            for (std::size_t i = 0; i < N; ++i) {
                lc[i] = heat.decay[i] * lc[i] + heat.wa[i] * fc[i] + heat.wb[i] * gc[i];
                ls[i] = heat.decay[i] * ls[i] + heat.wa[i] * fs[i] + heat.wb[i] * gs[i];
            }
            std::swap(fc, gc);
            std::swap(fs, gs);
        }
        GridField pc(lat), ps(lat);
        fft.backward_real(lc.data(), pc.values.data());
        fft.backward_real(ls.data(), ps.values.data());
        const GridField* noises[2] = {&c, &s};
        const GridField* lollis[2] = {&pc, &ps};
        std::array<double, 4> m{};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                double acc = 0.0;
                for (std::size_t i = 0; i < N; ++i) acc += lollis[b]->values[i] * noises[a]->values[i];
                m[static_cast<std::size_t>(2 * a + b)] = acc / static_cast<double>(N);
            }
        return m;
    };
    const auto per = parallel_map<std::array<double, 4>>(static_cast<std::size_t>(samples), one);

    SgRenormEstimate est;
    est.samples = samples;
    for (int q = 0; q < 4; ++q) {
        double mean = 0.0;
        for (const auto& m : per) mean += m[static_cast<std::size_t>(q)];
        mean /= samples;
        double var = 0.0;
        for (const auto& m : per) var += (m[static_cast<std::size_t>(q)] - mean) * (m[static_cast<std::size_t>(q)] - mean);
        var /= (samples - 1);
        est.C[static_cast<std::size_t>(q / 2)][static_cast<std::size_t>(q % 2)] = mean;
        est.stderr_[static_cast<std::size_t>(q / 2)][static_cast<std::size_t>(q % 2)] = std::sqrt(var / samples);
    }
    return est;
}

// ---------------------------------------------------------------- Wiener

double wiener_coefficient(double delta, int k1, int k2) {
    const double q = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
    return kInvTwoPi * std::pow(1.0 + q, -(0.5 - 0.5 * delta));
}

double WienerNoise::coefficient(int k1, int k2) const { return wiener_coefficient(delta, k1, k2); }

void WienerNoise::increment_pair(int step, SpectralField& dw, SpectralField& ou) const {
    dw = SpectralField(lattice);
    ou = SpectralField(lattice);
    const CounterRng rng(seed);
    for (const auto& m : half_plane_modes(lattice, reg)) {
        const double lam = static_cast<double>(m.k1) * m.k1 + static_cast<double>(m.k2) * m.k2;
        const double var_i = dt * phi_function(1, -2.0 * lam * dt);
        const double cov = dt * phi_function(1, -lam * dt);
        const double a = cov / dt;
        const double rest = std::sqrt(std::max(0.0, var_i - cov * cov / dt));
        double g[4];
        const std::uint64_t key = wavevector_key(m.k1, m.k2);
        rng.normal_pair({kTagWienerStep, static_cast<std::uint64_t>(step), key, 0}, g[0], g[1]);
        rng.normal_pair({kTagWienerStep, static_cast<std::uint64_t>(step), key, 1}, g[2], g[3]);
        const double c = coefficient(m.k1, m.k2);
        if (m.k1 == 0 && m.k2 == 0) {
            const double db = std::sqrt(dt) * g[0];
            set_hermitian(dw, 0, 0, c * db);
            set_hermitian(ou, 0, 0, c * (a * db + rest * g[2]));
        } else {
            const double h = std::sqrt(0.5);
            const Complex db = Complex(g[0], g[1]) * (std::sqrt(dt) * h);
            const Complex ii = a * db + Complex(g[2], g[3]) * (rest * h);
            set_hermitian(dw, m.k1, m.k2, c * db);
            set_hermitian(ou, m.k1, m.k2, c * ii);
        }
    }
}

SpectralField WienerNoise::increment(int step) const {
    SpectralField dw(lattice), ou(lattice);
    increment_pair(step, dw, ou);
    return dw;
}

SpectralField WienerNoise::stationary_initial() const {
    SpectralField eta(lattice);
    const CounterRng rng(seed);
    for (const auto& m : half_plane_modes(lattice, reg)) {
        if (m.k1 == 0 && m.k2 == 0) continue;
        const double lam = static_cast<double>(m.k1) * m.k1 + static_cast<double>(m.k2) * m.k2;
        double g1, g2;
        rng.normal_pair({kTagWienerInit, wavevector_key(m.k1, m.k2)}, g1, g2);
        const double sd = coefficient(m.k1, m.k2) / std::sqrt(2.0 * lam);
        set_hermitian(eta, m.k1, m.k2, Complex(g1, g2) * (sd / std::sqrt(2.0)));
    }
    return eta;
}

WienerNoise sample_wiener_noise(const TorusLattice& lat, double delta, double dt, int n_steps,
                                const RegularizationSpec& reg, std::uint64_t seed) {
    if (!(delta > 0 && delta < 1)) throw Error("sample_wiener_noise: delta must lie in (0, 1)");
    if (!(dt > 0) || n_steps < 0) throw Error("sample_wiener_noise: bad time grid");
    reg.validate_for(lat);
    return WienerNoise{lat, delta, dt, n_steps, reg, seed};
}

SpaceTimeField build_wiener_lolli(const WienerNoise& noise) {
    const auto& lat = noise.lattice;
    const auto k2 = laplacian_symbol(lat);
    SpectralField z = noise.stationary_initial();
    std::vector<GridField> slices;
    slices.push_back(fft_inverse(z));
    SpectralField dw(lat), ou(lat);
    for (int s = 0; s < noise.n_steps; ++s) {
        noise.increment_pair(s, dw, ou);
        for (std::size_t i = 0; i < z.coeffs.size(); ++i)
            z.coeffs[i] = std::exp(-k2[i] * noise.dt) * z.coeffs[i] + ou.coeffs[i];
        slices.push_back(fft_inverse(z));
    }
    return SpaceTimeField(0.0, noise.dt, std::move(slices));
}

double wiener_renorm_constant(double delta, const RegularizationSpec& reg) {
    const int K = reg.k_max();
    const double r2 = reg.cutoff() * reg.cutoff() * (1 + 1e-12);
    double s = 0.0;
    for (int k1 = -K; k1 <= K; ++k1)
        for (int k2 = -K; k2 <= K; ++k2) {
            const double q = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
            if (q > 0 && q <= r2) {
                const double c = wiener_coefficient(delta, k1, k2);
                s += c * c;
            }
        }
    return s * kInvTwoPi * kInvTwoPi;
}

}  // namespace sspde
