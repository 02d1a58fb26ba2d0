#include "sspde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "sspde/fft.hpp"
#include "sspde/kernels.hpp"
#include "sspde/parallel.hpp"
#include "sspde/rng.hpp"
#include "sspde/spectral.hpp"

#ifndef SSPDE_GIT_DESCRIBE
#define SSPDE_GIT_DESCRIBE "unknown"
#endif

namespace sspde {

// ---------------------------------------------------------------- noise providers

void NoiseProvider::fields(double, std::vector<GridField>&) const {
    throw Error("noise '" + describe() + "' has no pointwise-in-time fields");
}

void NoiseProvider::increments(long, double, std::vector<GridField>&) const {
    throw Error("noise '" + describe() + "' is not an Ito increment source");
}

ConstantNoise::ConstantNoise(std::vector<GridField> fields, std::string name)
    : fields_(std::move(fields)), name_(std::move(name)) {
    if (fields_.empty()) throw Error("ConstantNoise: needs at least one component");
}

std::shared_ptr<ConstantNoise> ConstantNoise::uniform(const TorusLattice& lat, std::vector<double> values) {
    std::vector<GridField> f;
    std::ostringstream os;
    os << "uniform(";
    for (std::size_t i = 0; i < values.size(); ++i) {
        f.emplace_back(lat, values[i]);
        os << (i ? "," : "") << values[i];
    }
    os << ")";
    return std::make_shared<ConstantNoise>(std::move(f), os.str());
}

void ConstantNoise::fields(double, std::vector<GridField>& out) const { out = fields_; }

SliceNoise::SliceNoise(std::vector<SpaceTimeField> fields, std::string name)
    : fields_(std::move(fields)), name_(std::move(name)) {
    if (fields_.empty()) throw Error("SliceNoise: needs at least one component");
}

std::shared_ptr<SliceNoise> SliceNoise::from_sine_gordon(const SineGordonNoise& sg) {
    std::ostringstream os;
    os << "sine-gordon(beta=" << sg.beta << ",eps=" << sg.epsilon << ",seed=" << sg.params.seed << ")";
    return std::make_shared<SliceNoise>(std::vector<SpaceTimeField>{sg.cos_noise, sg.sin_noise}, os.str());
}

double SliceNoise::t_min() const {
    double t = -1e300;
    for (const auto& f : fields_)
        if (!f.constant_in_time()) t = std::max(t, f.t0);
    return t;
}

double SliceNoise::t_max() const {
    double t = 1e300;
    for (const auto& f : fields_)
        if (!f.constant_in_time()) t = std::min(t, f.t_end());
    return t;
}

void SliceNoise::fields(double t, std::vector<GridField>& out) const {
    out.clear();
    for (const auto& f : fields_) out.push_back(f.at_time(std::clamp(t, f.t0, f.t_end())));
}

StreamingSgNoise::StreamingSgNoise(const TorusLattice& lat, const SineGordonParams& params)
    : lat_(lat), params_(params), stream_(lat, params), prev_cos_(lat), prev_sin_(lat), cur_cos_(lat), cur_sin_(lat) {
    stream_.noises(cur_cos_, cur_sin_);
    prev_cos_ = cur_cos_;
    prev_sin_ = cur_sin_;
}

std::string StreamingSgNoise::describe() const {
    std::ostringstream os;
    os << "sine-gordon-stream(beta=" << params_.beta << ",eps=" << params_.epsilon << ",dt=" << params_.dt
       << ",seed=" << params_.seed << ")";
    return os.str();
}

void StreamingSgNoise::fields(double t, std::vector<GridField>& out) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const double h = params_.dt;
    const double pos = std::max(t, 0.0) / h;
    const long hi = std::max(1L, static_cast<long>(std::ceil(pos - 1e-9)));
    if (hi < stream_.step_index()) throw Error("StreamingSgNoise: query went back in time");
    while (stream_.step_index() < hi) {
        stream_.advance();
        std::swap(prev_cos_, cur_cos_);
        std::swap(prev_sin_, cur_sin_);
        stream_.noises(cur_cos_, cur_sin_);
    }
    const double w = std::clamp(pos - static_cast<double>(hi - 1), 0.0, 1.0);
    out.assign(2, GridField(lat_));
    for (std::size_t i = 0; i < lat_.size(); ++i) {
        out[0].values[i] = (1 - w) * prev_cos_.values[i] + w * cur_cos_.values[i];
        out[1].values[i] = (1 - w) * prev_sin_.values[i] + w * cur_sin_.values[i];
    }
}

WienerProvider::WienerProvider(WienerNoise noise) : noise_(std::move(noise)) {}

std::string WienerProvider::describe() const {
    std::ostringstream os;
    os << "wiener(delta=" << noise_.delta << ",eps=" << noise_.reg.epsilon << ",seed=" << noise_.seed << ")";
    return os.str();
}

void WienerProvider::increments(long step, double dt, std::vector<GridField>& out) const {
    if (std::abs(dt - noise_.dt) > 1e-12 * dt) throw Error("WienerProvider: solver dt differs from the noise dt");
    if (step < 0) throw Error("WienerProvider: negative step index");
    out.assign(1, fft_inverse(noise_.increment(static_cast<int>(step))));
}

// ---------------------------------------------------------------- problem / config

void PdeProblem::validate() const {
    if (!noise) throw Error("PdeProblem: no noise");
    const std::size_t m = static_cast<std::size_t>(noise->n_components());
    if (sigma.size() != m) throw Error("PdeProblem: need one nonlinearity per noise component");
    if (renorm.size() != m) throw Error("PdeProblem: renorm matrix must be m x m");
    for (const auto& row : renorm)
        if (row.size() != m) throw Error("PdeProblem: renorm matrix must be m x m");
    if (!(mass >= 0)) throw Error("PdeProblem: mass must be >= 0");
    if (u0.lattice != noise->lattice()) throw Error("PdeProblem: u0 and noise live on different lattices");
    for (const auto& s : sigma) s.validate();
}

nlohmann::json PdeProblem::to_json() const {
    nlohmann::json j;
    for (const auto& s : sigma) j["sigma"].push_back(s.name);
    j["noise"] = noise ? noise->describe() : "none";
    j["renorm"] = renorm;
    j["mass"] = mass;
    j["kappa"] = kappa;
    j["n_spatial"] = u0.lattice.n();
    j["u0_sup"] = u0.sup_norm();
    return j;
}

Scheme parse_scheme(const std::string& s) {
    if (s == "etdrk4" || s == "exponential-integrator") return Scheme::Etdrk4;
    if (s == "exponential-euler" || s == "expeuler") return Scheme::ExponentialEuler;
    if (s == "semi-implicit") return Scheme::SemiImplicit;
    throw Error("unknown scheme '" + s + "'");
}

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Etdrk4: return "etdrk4";
        case Scheme::ExponentialEuler: return "exponential-euler";
        case Scheme::SemiImplicit: return "semi-implicit";
    }
    return "?";
}

int SolverConfig::n_steps() const {
    const double r = (t_end - t0) / dt;
    return static_cast<int>(std::lround(r));
}

void SolverConfig::validate() const {
    const TorusLattice lat(n_spatial);
    if (!(dt > 0)) throw Error("SolverConfig: dt must be positive");
    if (dt > 0.25 * lat.spacing() * lat.spacing() * (1 + 1e-12))
        throw Error("SolverConfig: dt exceeds 0.25 h^2 for n_spatial = " + std::to_string(n_spatial));
    if (t_end < t0 + dt * (1 - 1e-9)) throw Error("SolverConfig: need t_end >= t0 + dt");
    const double r = (t_end - t0) / dt;
    if (std::abs(r - std::round(r)) > 1e-6) throw Error("SolverConfig: t_end - t0 is not a multiple of dt");
    if (store_every < 1) throw Error("SolverConfig: store_every must be >= 1");
}

nlohmann::json SolverConfig::to_json() const {
    return {{"n_spatial", n_spatial}, {"dt", dt},         {"t0", t0},
            {"t_end", t_end},         {"scheme", scheme_name(scheme)}, {"seed", seed},
            {"store_every", store_every}, {"store_from", store_from}, {"dealias", dealias}};
}

std::vector<double> Trajectory::interval_maxima(const std::vector<double>& times, const std::vector<double>& sup) {
    std::vector<double> Y;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        // A grid time on an integer boundary belongs to both neighbouring intervals.
        const long hi = static_cast<long>(std::ceil(t - 1e-9));
        const long lo = static_cast<long>(std::floor(t + 1e-9)) + 1;
        for (long n = std::max(1L, std::min(lo, hi)); n <= std::max(lo, hi); ++n) {
            if (n < 1) continue;
            if (Y.size() < static_cast<std::size_t>(n)) Y.resize(static_cast<std::size_t>(n), 0.0);
            Y[static_cast<std::size_t>(n - 1)] = std::max(Y[static_cast<std::size_t>(n - 1)], sup[i]);
        }
    }
    // The interval starting at the final time is not covered.
    if (!times.empty()) {
        const auto covered = static_cast<std::size_t>(std::max(0.0, std::ceil(times.back() - 1e-9)));
        if (Y.size() > covered) Y.resize(covered);
    }
    return Y;
}

// ---------------------------------------------------------------- stepping engine

namespace {

using Spectrum = std::vector<Complex>;

struct Coefficients {
    std::vector<double> E, E2, Q, f1, f2, f3, phi1h, implicit;
};

Coefficients make_coefficients(const TorusLattice& lat, double mass, double h) {
    const auto k2 = laplacian_symbol(lat);
    Coefficients c;
    const std::size_t N = k2.size();
    for (auto* v : {&c.E, &c.E2, &c.Q, &c.f1, &c.f2, &c.f3, &c.phi1h, &c.implicit}) v->resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double lam = -(k2[i] + mass * mass);
        const double z = lam * h;
        const double p1 = phi_function(1, z), p2 = phi_function(2, z), p3 = phi_function(3, z);
        c.E[i] = std::exp(z);
        c.E2[i] = std::exp(z / 2);
        c.Q[i] = 0.5 * h * phi_function(1, z / 2);
        c.f1[i] = h * (p1 - 3 * p2 + 4 * p3);
        c.f2[i] = h * (p2 - 2 * p3);
        c.f3[i] = h * (-p2 + 4 * p3);
        c.phi1h[i] = h * p1;
        c.implicit[i] = 1.0 / (1.0 - z);
    }
    return c;
}

// Right-hand side N(t, u) in spectral form.
using Rhs = std::function<void(double t, const Spectrum& u, Spectrum& out)>;

class Stepper {
public:
    Stepper(const TorusLattice& lat, double mass, double dt, Scheme scheme)
        : lat_(lat), dt_(dt), scheme_(scheme), c_(make_coefficients(lat, mass, dt)) {}

    void step(double t, Spectrum& u, const Rhs& rhs) {
        const std::size_t N = u.size();
        const double h = dt_;
        switch (scheme_) {
            case Scheme::ExponentialEuler:
                rhs(t, u, nu_);
                for (std::size_t i = 0; i < N; ++i) u[i] = c_.E[i] * u[i] + c_.phi1h[i] * nu_[i];
                return;
            case Scheme::SemiImplicit:
                rhs(t, u, nu_);
                for (std::size_t i = 0; i < N; ++i) u[i] = c_.implicit[i] * (u[i] + h * nu_[i]);
                return;
            case Scheme::Etdrk4: {
                a_.resize(N);
                b_.resize(N);
                cc_.resize(N);
                rhs(t, u, nu_);
                for (std::size_t i = 0; i < N; ++i) a_[i] = c_.E2[i] * u[i] + c_.Q[i] * nu_[i];
                rhs(t + h / 2, a_, na_);
                for (std::size_t i = 0; i < N; ++i) b_[i] = c_.E2[i] * u[i] + c_.Q[i] * na_[i];
                rhs(t + h / 2, b_, nb_);
                for (std::size_t i = 0; i < N; ++i) cc_[i] = c_.E2[i] * a_[i] + c_.Q[i] * (2.0 * nb_[i] - nu_[i]);
                rhs(t + h, cc_, nc_);
                for (std::size_t i = 0; i < N; ++i)
                    u[i] = c_.E[i] * u[i] + c_.f1[i] * nu_[i] + 2.0 * c_.f2[i] * (na_[i] + nb_[i]) + c_.f3[i] * nc_[i];
                return;
            }
        }
    }

    // Exponential Euler with an additional Ito increment dW (already in spectral form).
    void step_ito(double t, Spectrum& u, const Rhs& drift, const Spectrum& noise_term) {
        drift(t, u, nu_);
        for (std::size_t i = 0; i < u.size(); ++i)
            u[i] = c_.E[i] * u[i] + c_.phi1h[i] * (nu_[i] + noise_term[i] / dt_);
    }

private:
    TorusLattice lat_;
    double dt_;
    Scheme scheme_;
    Coefficients c_;
    Spectrum nu_, na_, nb_, nc_, a_, b_, cc_;
};

Spectrum to_spectrum(const GridField& g) {
    Spectrum s(g.lattice.size());
    Fft2d::get(g.lattice.n()).forward_real(g.values.data(), s.data());
    return s;
}

GridField to_grid(const TorusLattice& lat, const Spectrum& s) {
    GridField g(lat);
    Fft2d::get(lat.n()).backward_real(s.data(), g.values.data());
    return g;
}

void mask(Spectrum& s, const std::vector<double>& m) {
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= m[i];
}

// Shared time loop: storage, sup series and blow-up detection.
template <class Advance>
Trajectory run(const TorusLattice& lat, const GridField& init, const SolverConfig& cfg, Advance&& advance) {
    Trajectory tr;
    Spectrum u = to_spectrum(init);
    const int steps = cfg.n_steps();
    std::vector<GridField> stored;
    double store_t0 = 0.0;
    bool have_store = false;
    auto record = [&](int k, const GridField& g) {
        const double t = cfg.t0 + k * cfg.dt;
        tr.times.push_back(t);
        tr.sup.push_back(g.sup_norm());
        if (k % cfg.store_every == 0 && t >= cfg.store_from - 1e-12) {
            if (!have_store) {
                store_t0 = t;
                have_store = true;
            }
            stored.push_back(g);
        }
    };
    GridField g = init;
    record(0, g);
    for (int k = 0; k < steps; ++k) {
        const double t = cfg.t0 + k * cfg.dt;
        advance(k, t, u);
        g = to_grid(lat, u);
        if (!g.all_finite() || g.sup_norm() > 1e150) {
            tr.blew_up = true;
            tr.blowup_time = t + cfg.dt;
            break;
        }
        record(k + 1, g);
    }
    tr.final_state = tr.blew_up ? GridField(lat, std::nan("")) : g;
    tr.final_time = tr.blew_up ? tr.blowup_time : cfg.t0 + steps * cfg.dt;
    if (stored.empty()) {
        stored.push_back(tr.final_state);
        store_t0 = tr.final_time;
    }
    tr.u = SpaceTimeField(store_t0, cfg.dt * cfg.store_every, std::move(stored));
    tr.Y = Trajectory::interval_maxima(tr.times, tr.sup);
    return tr;
}

std::string git_describe() { return SSPDE_GIT_DESCRIBE; }

}  // namespace

Trajectory solve_renormalized(const PdeProblem& problem, const SolverConfig& config) {
    problem.validate();
    config.validate();
    const auto& lat = problem.u0.lattice;
    if (lat.n() != config.n_spatial) throw Error("solve_renormalized: n_spatial differs from the lattice of u0");
    const NoiseProvider& noise = *problem.noise;
    if (!noise.ito() && (config.t0 < noise.t_min() - 1e-12 || config.t_end > noise.t_max() + 1e-12))
        throw Error("solve_renormalized: noise fields do not cover [t0, t_end]");
    const int m = noise.n_components();
    const auto dmask = config.dealias ? dealias_mask(lat) : std::vector<double>(lat.size(), 1.0);
    const Scheme scheme = noise.ito() ? Scheme::ExponentialEuler : config.scheme;
    Stepper stepper(lat, problem.mass, config.dt, scheme);

    bool any_renorm = false;
    for (const auto& row : problem.renorm)
        for (double v : row) any_renorm = any_renorm || v != 0.0;

    std::vector<GridField> xi;
    const bool frozen_noise = !noise.ito() && noise.t_min() < -1e299;
    if (frozen_noise) noise.fields(config.t0, xi);

    // Pointwise drift sum_i sigma_i(u) xi_i - sum_ij sigma'_j sigma_i(u) C_ij (xi omitted for Ito).
    auto drift = [&](double t, const Spectrum& uh, Spectrum& out, bool with_noise) {
        const GridField u = to_grid(lat, uh);
        if (with_noise && !frozen_noise) noise.fields(t, xi);
        GridField acc(lat);
        for (std::size_t k = 0; k < acc.values.size(); ++k) {
            const double v = u.values[k];
            double s = 0.0;
            for (int i = 0; i < m; ++i) {
                const double si = problem.sigma[static_cast<std::size_t>(i)].f(v);
                if (with_noise) s += si * xi[static_cast<std::size_t>(i)].values[k];
                if (any_renorm)
                    for (int j = 0; j < m; ++j) {
                        const double C = problem.renorm[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                        if (C != 0.0) s -= problem.sigma[static_cast<std::size_t>(j)].df(v) * si * C;
                    }
            }
            acc.values[k] = s;
        }
        out = to_spectrum(acc);
        mask(out, dmask);
    };

    Trajectory tr;
    if (noise.ito()) {
        std::vector<GridField> dW;
        const Rhs rhs = [&](double t, const Spectrum& uh, Spectrum& out) { drift(t, uh, out, false); };
        tr = run(lat, problem.u0, config, [&](int k, double t, Spectrum& uh) {
            const long step = std::lround(t / config.dt);
            (void)k;
            noise.increments(step, config.dt, dW);
            const GridField u = to_grid(lat, uh);
            GridField prod(lat);
            for (std::size_t q = 0; q < prod.values.size(); ++q)
                prod.values[q] = problem.sigma[0].f(u.values[q]) * dW[0].values[q];
            Spectrum nh = to_spectrum(prod);
            mask(nh, dmask);
            stepper.step_ito(t, uh, rhs, nh);
        });
    } else {
        const Rhs rhs = [&](double t, const Spectrum& uh, Spectrum& out) { drift(t, uh, out, true); };
        tr = run(lat, problem.u0, config, [&](int, double t, Spectrum& uh) { stepper.step(t, uh, rhs); });
    }
    nlohmann::json man;
    man["problem"] = problem.to_json();
    man["config"] = config.to_json();
    man["config"]["scheme"] = scheme_name(scheme);
    man["problem_hash"] = std::to_string(std::hash<std::string>{}(man["problem"].dump()));
    man["build"] = git_describe();
    man["blew_up"] = tr.blew_up;
    if (tr.blew_up) man["blowup_time"] = tr.blowup_time;
    tr.manifest = std::move(man);
    return tr;
}

SpaceTimeField solve_linear_heat(const SpaceTimeField& forcing, const GridField& u0, double mass, double dt,
                                 int n_steps) {
    const auto& lat = u0.lattice;
    if (forcing.lattice() != lat) throw Error("solve_linear_heat: lattice mismatch");
    double t0 = 0.0;
    if (forcing.constant_in_time()) {
        if (!(dt > 0) || n_steps < 1) throw Error("solve_linear_heat: constant forcing needs dt and n_steps");
        t0 = forcing.t0;
    } else {
        dt = forcing.dt;
        n_steps = forcing.n_slices() - 1;
        t0 = forcing.t0;
    }
    const HeatStep step(lat, mass, dt);
    SpectralSeries f(forcing);
    Spectrum v = to_spectrum(u0);
    std::vector<GridField> out{u0};
    for (int s = 0; s < n_steps; ++s) {
        const auto& fa = f.slice(s);
        const auto& fb = f.slice(s + 1);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = step.decay[k] * v[k] + step.wa[k] * fa[k] + step.wb[k] * fb[k];
        out.push_back(to_grid(lat, v));
    }
    return SpaceTimeField(t0, dt, std::move(out));
}

double linear_heat_residual(const SpaceTimeField& forcing, const SpaceTimeField& v, double mass) {
    const HeatStep step(v.lattice(), mass, v.dt);
    SpectralSeries f(forcing), vs(v);
    double worst = 0.0;
    for (int s = 0; s + 1 < v.n_slices(); ++s) {
        const int fs = forcing.constant_in_time() ? 0 : forcing.slice_index(v.time(s));
        const auto& a = vs.slice(s);
        const auto& b = vs.slice(s + 1);
        const auto& fa = f.slice(fs);
        const auto& fb = f.slice(forcing.constant_in_time() ? 0 : fs + 1);
        double acc = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k)
            acc += std::abs(b[k] - (step.decay[k] * a[k] + step.wa[k] * fa[k] + step.wb[k] * fb[k]));
        worst = std::max(worst, acc);
    }
    return worst;
}

Trajectory solve_transport_grid(const std::array<SpaceTimeField, 2>& b, const SpaceTimeField& f, const GridField& v0,
                                double mass, const SolverConfig& config) {
    config.validate();
    const auto& lat = v0.lattice;
    if (lat.n() != config.n_spatial || b[0].lattice() != lat || b[1].lattice() != lat || f.lattice() != lat)
        throw Error("solve_transport_grid: lattice mismatch");
    const auto dmask = config.dealias ? dealias_mask(lat) : std::vector<double>(lat.size(), 1.0);
    const int n = lat.n();
    Stepper stepper(lat, mass, config.dt, config.scheme);
    auto field_at = [](const SpaceTimeField& g, double t) {
        return g.constant_in_time() ? g.slice(0) : g.at_time(std::clamp(t, g.t0, g.t_end()));
    };
    for (const auto* g : {&b[0], &b[1], &f})
        if (!g->constant_in_time() && (config.t0 < g->t0 - 1e-12 || config.t_end > g->t_end() + 1e-12))
            throw Error("solve_transport_grid: coefficients do not cover [t0, t_end]");

    const Rhs rhs = [&](double t, const Spectrum& vh, Spectrum& out) {
        const GridField b0 = field_at(b[0], t), b1 = field_at(b[1], t), ff = field_at(f, t);
        Spectrum g0(vh.size()), g1(vh.size());
        const Complex I(0.0, 1.0);
        for (int a = 0; a < n; ++a)
            for (int c = 0; c < n; ++c) {
                const std::size_t i = lat.index(a, c);
                const int k1 = lat.wavenumber(a), k2 = lat.wavenumber(c);
                g0[i] = (2 * k1 == n) ? Complex(0.0) : I * static_cast<double>(k1) * vh[i];
                g1[i] = (2 * k2 == n) ? Complex(0.0) : I * static_cast<double>(k2) * vh[i];
            }
        const GridField d0 = to_grid(lat, g0), d1 = to_grid(lat, g1);
        GridField acc(lat);
        for (std::size_t k = 0; k < acc.values.size(); ++k)
            acc.values[k] = b0.values[k] * d0.values[k] + b1.values[k] * d1.values[k] + ff.values[k];
        out = to_spectrum(acc);
        mask(out, dmask);
    };
    Trajectory tr = run(lat, v0, config, [&](int, double t, Spectrum& vh) { stepper.step(t, vh, rhs); });
    tr.manifest = {{"config", config.to_json()}, {"mass", mass}, {"build", git_describe()}, {"blew_up", tr.blew_up}};
    return tr;
}

namespace {

double bilinear(const GridField& g, const Vec2& x) {
    const auto& lat = g.lattice;
    const int n = lat.n();
    const double h = lat.spacing();
    const double a = (x[0] - std::floor(x[0] / kTwoPi) * kTwoPi) / h;
    const double c = (x[1] - std::floor(x[1] / kTwoPi) * kTwoPi) / h;
    const int i = static_cast<int>(std::floor(a)), j = static_cast<int>(std::floor(c));
    const double wa = a - i, wc = c - j;
    const int i0 = ((i % n) + n) % n, j0 = ((j % n) + n) % n;
    const int i1 = (i0 + 1) % n, j1 = (j0 + 1) % n;
    return (1 - wa) * ((1 - wc) * g(i0, j0) + wc * g(i0, j1)) + wa * ((1 - wc) * g(i1, j0) + wc * g(i1, j1));
}

double sample(const SpaceTimeField& f, double t, const Vec2& x) {
    if (f.constant_in_time()) return bilinear(f.slice(0), x);
    const double r = std::clamp((t - f.t0) / f.dt, 0.0, static_cast<double>(f.n_slices() - 1));
    const int s = std::min(static_cast<int>(std::floor(r)), f.n_slices() - 2);
    const double w = r - s;
    return (1 - w) * bilinear(f.slice(s), x) + w * bilinear(f.slice(s + 1), x);
}

}  // namespace

McEstimate solve_transport_mc(const std::array<SpaceTimeField, 2>& b, const SpaceTimeField& f, const GridField& v0,
                              double mass, double t, const Vec2& x, const McOptions& opt) {
    if (opt.n_paths < 100) throw Error("solve_transport_mc: need at least 100 paths");
    if (!(t >= opt.T1) || !(opt.dt > 0)) throw Error("solve_transport_mc: need t >= T1 and dt > 0");
    const double horizon = t - opt.T1;
    const int steps = std::max(1, static_cast<int>(std::ceil(horizon / opt.dt - 1e-9)));
    const double h = horizon / steps;
    const double m2 = mass * mass;
    const FieldEvaluator v0_eval(SpaceTimeField(opt.T1, 1.0, {v0}));
    const CounterRng rng(opt.seed);
    const double s2h = std::sqrt(2.0 * h);

    const auto vals = parallel_map<double>(static_cast<std::size_t>(opt.n_paths), [&](std::size_t p) {
        Vec2 y = x;
        double integral = 0.0;
        double fprev = sample(f, t, y);
        for (int k = 0; k < steps; ++k) {
            const double r = k * h;
            const double tb = t - r;
            const double d0 = sample(b[0], tb, y), d1 = sample(b[1], tb, y);
            double g0, g1;
            rng.normal_pair({static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(k)}, g0, g1);
            y = {y[0] + d0 * h + s2h * g0, y[1] + d1 * h + s2h * g1};
            const double fnext = sample(f, tb - h, y);
            integral += 0.5 * h * (std::exp(-m2 * r) * fprev + std::exp(-m2 * (r + h)) * fnext);
            fprev = fnext;
        }
        const ParabolicPoint end = ParabolicPoint::make(opt.T1, y[0], y[1]);
        return std::exp(-m2 * horizon) * v0_eval.value(end) + integral;
    });
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= opt.n_paths;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= (opt.n_paths - 1);
    return {mean, std::sqrt(var / opt.n_paths)};
}

double max_principle_slack(const Trajectory& traj, double v0_sup, double f_sup) {
    double slack = std::numeric_limits<double>::infinity();
    if (traj.times.empty()) return slack;
    const double T1 = traj.times.front();
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        slack = std::min(slack, v0_sup + (traj.times[i] - T1) * f_sup - traj.sup[i]);
    return slack;
}

nlohmann::json FlowCompositionReport::to_json() const {
    return {{"seeds", seeds},
            {"differences", differences},
            {"max_difference", max_difference},
            {"control_difference", control_difference}};
}

FlowCompositionReport flow_composition_check(
    const PdeProblem& problem, const SolverConfig& config, double s, double r, double t,
    const std::vector<std::uint64_t>& seeds,
    const std::function<std::shared_ptr<const NoiseProvider>(std::uint64_t)>& make_noise) {
    if (!(s < r && r < t)) throw Error("flow_composition_check: need s < r < t");
    if (seeds.empty()) throw Error("flow_composition_check: need at least one seed");
    auto leg = [&](std::shared_ptr<const NoiseProvider> noise, const GridField& start, double a, double b) {
        PdeProblem p = problem;
        p.noise = std::move(noise);
        p.u0 = start;
        SolverConfig c = config;
        c.t0 = a;
        c.t_end = b;
        c.store_every = std::max(1, c.n_steps());
        auto tr = solve_renormalized(p, c);
        if (tr.blew_up) throw Error("flow_composition_check: solution blew up");
        return tr.final_state;
    };
    auto diff = [](const GridField& a, const GridField& b) {
        double d = 0.0;
        for (std::size_t k = 0; k < a.values.size(); ++k) d = std::max(d, std::abs(a.values[k] - b.values[k]));
        return d;
    };
    FlowCompositionReport rep;
    rep.seeds = seeds;
    rep.differences = parallel_map<double>(seeds.size(), [&](std::size_t i) {
        const auto noise = make_noise(seeds[i]);
        if (!noise->ito()) throw Error("flow_composition_check: needs the Wiener family");
        const GridField direct = leg(noise, problem.u0, s, t);
        const GridField mid = leg(noise, problem.u0, s, r);
        return diff(leg(noise, mid, r, t), direct);
    });
    for (double d : rep.differences) rep.max_difference = std::max(rep.max_difference, d);
    {
        const auto n1 = make_noise(seeds.front());
        const auto n2 = make_noise(seeds.front() + 1000003);
        const GridField direct = leg(n1, problem.u0, s, t);
        const GridField mid = leg(n1, problem.u0, s, r);
        rep.control_difference = diff(leg(n2, mid, r, t), direct);
    }
    return rep;
}

}  // namespace sspde
