#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <vector>

#include "sspde/rng.hpp"
#include "sspde/torus.hpp"

namespace sspde {

struct RegularizationSpec {
    double epsilon = 1.0;
    double time_mollifier_width = 0.0;

    explicit RegularizationSpec(double eps, double time_width = 0.0);

    int k_max() const;
    double cutoff() const { return 1.0 / epsilon; }
    // Disk cutoff 0 <= |k| <= 1/epsilon, restricted to strictly sub-Nyquist modes.
    bool in_band(int k1, int k2, const TorusLattice& lat) const;
    void validate_for(const TorusLattice& lat) const;
};

// ---- gPAM spatial white noise ----

struct GpamNoise {
    SpectralField xi_hat;
    std::uint64_t seed = 0;
    RegularizationSpec reg{1.0};

    GridField physical() const { return fft_inverse(xi_hat); }
};

GpamNoise sample_gpam_noise(const TorusLattice& lat, const RegularizationSpec& reg,
                            std::uint64_t seed);
SpectralField gpam_lolli_spectrum(const GpamNoise& noise, double t);
GridField build_gpam_lolli(const GpamNoise& noise, double t);
// sup over modes of |(d/dt + |k|^2) lolli_k - xi_k| for the spectral lollipop at time t.
double gpam_lolli_residual(const GpamNoise& noise, double t);
double gpam_renorm_constant(const RegularizationSpec& reg);

// ---- Sine-Gordon exponential noise ----

struct SineGordonParams {
    double beta = 1.0;
    double epsilon = 0.25;
    double dt = 1e-3;
    std::uint64_t seed = 0;
};

void validate_sg_beta(double beta);

// Streaming generator for Z (per-mode exact OU for (d/dt - Lap)Z = space-time
// white noise, started from 0), its causal time average of width eps^2, and the
// exponential noises eps^{-beta^2/4pi} cos / sin (beta Z~).
class SineGordonStream {
public:
    SineGordonStream(const TorusLattice& lat, const SineGordonParams& p);

    // Slice s = 0 is t = 0; next() returns successive slices.
    int step_index() const { return step_; }
    double time() const { return step_ * params_.dt; }
    void advance();

    GridField z_tilde() const;
    void noises(GridField& cos_noise, GridField& sin_noise) const;
    const SineGordonParams& params() const { return params_; }
    double amplitude() const;

private:
    TorusLattice lat_;
    SineGordonParams params_;
    CounterRng rng_;
    std::vector<int> modes_;  // slot indices of the upper half-plane modes in band
    std::vector<int> partner_;
    std::vector<double> decay_, innov_sd_;
    std::vector<Complex> z_;
    std::deque<std::vector<Complex>> window_;
    std::vector<Complex> window_sum_;
    int width_ = 1;
    int step_ = 0;
};

struct SineGordonNoise {
    double beta = 0.0;
    double epsilon = 1.0;
    SineGordonParams params;
    SpaceTimeField z_tilde;
    SpaceTimeField cos_noise;
    SpaceTimeField sin_noise;
};

SineGordonNoise sample_sg_noise(const TorusLattice& lat, double beta, const RegularizationSpec& reg,
                                double dt, double T, std::uint64_t seed);

struct SgRenormEstimate {
    // C[a][b] = E[lolli_b * noise_a], a, b in {cos, sin}.
    std::array<std::array<double, 2>, 2> C{};
    std::array<std::array<double, 2>, 2> stderr_{};
    int samples = 0;
};

// Monte Carlo over independent realizations sharing the parameters of `noise`;
// each realization contributes its spatial mean at the final time.
SgRenormEstimate estimate_sg_renorm(const SineGordonNoise& noise, int samples);

// ---- Wiener noise with non-trace-class covariance ----

struct WienerNoise {
    TorusLattice lattice{8};
    double delta = 0.5;
    double dt = 1e-3;
    int n_steps = 0;
    RegularizationSpec reg{1.0};
    std::uint64_t seed = 0;

    double coefficient(int k1, int k2) const;  // c_k
    // c_k dB_k over step `step` (absolute step index).
    SpectralField increment(int step) const;
    // Exact joint draw of (dB_k, int_t^{t+dt} e^{-|k|^2 (t+dt-s)} dB_k(s)).
    void increment_pair(int step, SpectralField& dw, SpectralField& ou) const;
    SpectralField stationary_initial() const;
};

double wiener_coefficient(double delta, int k1, int k2);
WienerNoise sample_wiener_noise(const TorusLattice& lat, double delta, double dt, int n_steps,
                                const RegularizationSpec& reg, std::uint64_t seed);
SpaceTimeField build_wiener_lolli(const WienerNoise& noise);
double wiener_renorm_constant(double delta, const RegularizationSpec& reg);

}  // namespace sspde
