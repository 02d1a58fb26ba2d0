#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "sspde/noise.hpp"
#include "sspde/nonlinearity.hpp"
#include "sspde/torus.hpp"

namespace sspde {

// Noise as seen by the time stepper. Smooth families return fields at any time
// in their range; the Wiener family instead hands out one Ito increment per step.
class NoiseProvider {
public:
    virtual ~NoiseProvider() = default;
    virtual int n_components() const = 0;
    virtual const TorusLattice& lattice() const = 0;
    virtual std::string describe() const = 0;
    virtual bool ito() const { return false; }
    // Time range the fields cover; providers constant in time cover everything.
    virtual double t_min() const { return -1e300; }
    virtual double t_max() const { return 1e300; }
    virtual void fields(double t, std::vector<GridField>& out) const;
    // Increments of the driving Wiener processes over [step dt, (step + 1) dt].
    virtual void increments(long step, double dt, std::vector<GridField>& out) const;
};

// Time-independent fields (gPAM, constant forcing, zero noise).
class ConstantNoise final : public NoiseProvider {
public:
    explicit ConstantNoise(std::vector<GridField> fields, std::string name = "constant");
    static std::shared_ptr<ConstantNoise> uniform(const TorusLattice& lat, std::vector<double> values);

    int n_components() const override { return static_cast<int>(fields_.size()); }
    const TorusLattice& lattice() const override { return fields_.front().lattice; }
    std::string describe() const override { return name_; }
    void fields(double t, std::vector<GridField>& out) const override;

private:
    std::vector<GridField> fields_;
    std::string name_;
};

// Precomputed slices, linear in time between them (Sine-Gordon).
class SliceNoise final : public NoiseProvider {
public:
    explicit SliceNoise(std::vector<SpaceTimeField> fields, std::string name = "slices");
    static std::shared_ptr<SliceNoise> from_sine_gordon(const SineGordonNoise& sg);

    int n_components() const override { return static_cast<int>(fields_.size()); }
    const TorusLattice& lattice() const override { return fields_.front().lattice(); }
    std::string describe() const override { return name_; }
    double t_min() const override;
    double t_max() const override;
    void fields(double t, std::vector<GridField>& out) const override;

private:
    std::vector<SpaceTimeField> fields_;
    std::string name_;
};

// Sine-Gordon noise generated on the fly for long runs. Queries must be
// non-decreasing in time up to one noise step back; the stream is not rewound.
class StreamingSgNoise final : public NoiseProvider {
public:
    StreamingSgNoise(const TorusLattice& lat, const SineGordonParams& params);

    int n_components() const override { return 2; }
    const TorusLattice& lattice() const override { return lat_; }
    std::string describe() const override;
    double t_min() const override { return 0.0; }
    void fields(double t, std::vector<GridField>& out) const override;

private:
    TorusLattice lat_;
    SineGordonParams params_;
    mutable std::mutex mutex_;
    mutable SineGordonStream stream_;
    mutable GridField prev_cos_, prev_sin_, cur_cos_, cur_sin_;
};

// Ito increments of a Q-Wiener process, addressed by absolute step index so
// that restarted solves see the same path.
class WienerProvider final : public NoiseProvider {
public:
    explicit WienerProvider(WienerNoise noise);

    int n_components() const override { return 1; }
    const TorusLattice& lattice() const override { return noise_.lattice; }
    std::string describe() const override;
    bool ito() const override { return true; }
    void increments(long step, double dt, std::vector<GridField>& out) const override;
    const WienerNoise& noise() const { return noise_; }

private:
    WienerNoise noise_;
};

struct PdeProblem {
    std::vector<Nonlinearity> sigma;       // one per noise component
    std::shared_ptr<const NoiseProvider> noise;
    std::vector<std::vector<double>> renorm;  // C_{i,j}
    double mass = 0.0;
    GridField u0{TorusLattice(8)};
    double kappa = 0.1;

    void validate() const;
    nlohmann::json to_json() const;
};

enum class Scheme { Etdrk4, ExponentialEuler, SemiImplicit };
Scheme parse_scheme(const std::string& s);
std::string scheme_name(Scheme s);

struct SolverConfig {
    int n_spatial = 64;
    double dt = 1e-3;
    double t0 = 0.0;
    double t_end = 1.0;
    Scheme scheme = Scheme::Etdrk4;
    std::uint64_t seed = 0;
    int store_every = 1;      // keep every k-th step in the stored field
    double store_from = 0.0;  // and only from this time on
    bool dealias = true;

    int n_steps() const;
    void validate() const;
    nlohmann::json to_json() const;
};

struct Trajectory {
    SpaceTimeField u{0.0, 1.0, {GridField(TorusLattice(8))}};
    GridField final_state{TorusLattice(8)};
    double final_time = 0.0;
    std::vector<double> times;  // every step, including the initial time
    std::vector<double> sup;
    std::vector<double> Y;      // Y[n-1] = max sup over [n-1, n]
    bool blew_up = false;
    double blowup_time = 0.0;
    nlohmann::json manifest;

    // Y_n over the unit intervals [n-1, n] that the run covers.
    static std::vector<double> interval_maxima(const std::vector<double>& times, const std::vector<double>& sup);
};

// du = (Lap - m^2) u dt + sum_i sigma_i(u) xi_i dt - sum_ij sigma'_j sigma_i(u) C_ij dt.
Trajectory solve_renormalized(const PdeProblem& problem, const SolverConfig& config);

// Exact per-mode propagation of (d/dt - Lap + m^2) v = forcing with forcing linear
// between slices. For forcing constant in time the output grid is given by dt, n_steps.
SpaceTimeField solve_linear_heat(const SpaceTimeField& forcing, const GridField& u0, double mass, double dt = 0.0,
                                 int n_steps = 0);
// max_s sum_k |v_{s+1,k} - (E v_{s,k} + Wa f_{s,k} + Wb f_{s+1,k})|
double linear_heat_residual(const SpaceTimeField& forcing, const SpaceTimeField& v, double mass);

// (d/dt - Lap + m^2) v = b . grad v + f, started from v0 at config.t0.
Trajectory solve_transport_grid(const std::array<SpaceTimeField, 2>& b, const SpaceTimeField& f, const GridField& v0,
                                double mass, const SolverConfig& config);

struct McOptions {
    double T1 = 0.0;    // time at which v0 is given
    double dt = 1e-3;   // Euler-Maruyama step
    int n_paths = 10000;
    std::uint64_t seed = 1;
};

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
};

// Feynman-Kac: v_t(x) = E[e^{-m^2 (t - T1)} v0(Y_{t - T1}) + int_0^{t - T1} e^{-m^2 r} f(t - r, Y_r) dr]
// with dY_r = b(t - r, Y_r) dr + sqrt(2) dB_r, Y_0 = x.
McEstimate solve_transport_mc(const std::array<SpaceTimeField, 2>& b, const SpaceTimeField& f, const GridField& v0,
                              double mass, double t, const Vec2& x, const McOptions& opt);

// min over stored times of ||v_{T1}|| + (t - T1) ||f|| - ||v_t||; negative means a violation.
double max_principle_slack(const Trajectory& traj, double v0_sup, double f_sup);

struct FlowCompositionReport {
    std::vector<std::uint64_t> seeds;
    std::vector<double> differences;   // |u(t; r, u(r; s, v)) - u(t; s, v)| per seed
    double max_difference = 0.0;
    double control_difference = 0.0;   // same comparison with different seeds on the two legs
    nlohmann::json to_json() const;
};

// `make_noise(seed)` builds the Wiener noise for one seed; both legs share its increments.
FlowCompositionReport flow_composition_check(
    const PdeProblem& problem, const SolverConfig& config, double s, double r, double t,
    const std::vector<std::uint64_t>& seeds,
    const std::function<std::shared_ptr<const NoiseProvider>(std::uint64_t)>& make_noise);

}  // namespace sspde
