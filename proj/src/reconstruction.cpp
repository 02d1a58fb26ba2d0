#include "sspde/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sspde/fft.hpp"
#include "sspde/parallel.hpp"
#include "sspde/rng.hpp"

namespace sspde {

LocalFamily::LocalFamily(double t0, double dt, TorusLattice lattice, int n_slices)
    : t0_(t0), dt_(dt), lattice_(lattice), n_slices_(n_slices) {
    if (n_slices < 1 || !(dt > 0)) throw Error("LocalFamily: bad time grid");
}

void LocalFamily::add_term(SpaceTimeField coefficient, const SpaceTimeField& base, int moment, std::string label) {
    add_term(std::move(coefficient), std::make_shared<const SpectralSeries>(base), moment, std::move(label));
}

void LocalFamily::add_term(SpaceTimeField coefficient, std::shared_ptr<const SpectralSeries> base, int moment,
                           std::string label) {
    if (coefficient.lattice() != lattice_ || base->lattice() != lattice_) throw Error("LocalFamily: lattice mismatch");
    if (moment < -1 || moment > 1) throw Error("LocalFamily: moment component must be -1, 0 or 1");
    auto on_grid = [&](const SpaceTimeField& f) {
        return f.constant_in_time() || (f.n_slices() == n_slices_ && std::abs(f.t0 - t0_) < 1e-12 &&
                                        std::abs(f.dt - dt_) < 1e-12 * dt_);
    };
    if (!on_grid(coefficient) || !on_grid(base->field())) throw Error("LocalFamily: field is not on the family grid");
    terms_.push_back({std::move(coefficient), std::move(base), moment, std::move(label)});
}

void LocalFamily::add_certificate(double theta, double gamma, double C) {
    if (!(gamma > 0)) throw Error("LocalFamily: certificate exponent must be positive");
    cert_.push_back({theta, gamma, C});
}

LocalFamily LocalFamily::combine(double a, const LocalFamily& other, double b) const {
    if (other.lattice_ != lattice_ || other.n_slices_ != n_slices_ || std::abs(other.dt_ - dt_) > 1e-12 * dt_)
        throw Error("LocalFamily::combine: grid mismatch");
    LocalFamily out(t0_, dt_, lattice_, n_slices_);
    auto scaled = [](SpaceTimeField f, double s) {
        for (auto& g : f.slices)
            for (auto& v : g.values) v *= s;
        return f;
    };
    for (const auto& t : terms_) out.terms_.push_back({scaled(t.coefficient, a), t.base, t.moment, t.label});
    for (const auto& t : other.terms_) out.terms_.push_back({scaled(t.coefficient, b), t.base, t.moment, t.label});
    return out;
}

ParabolicPoint LocalFamily::point(const GridPoint& g) const {
    return ParabolicPoint::make(t0_ + g.slice * dt_, lattice_.coordinate(g.i1), lattice_.coordinate(g.i2));
}

GridPoint LocalFamily::grid_point(const ParabolicPoint& p) const {
    const double h = lattice_.spacing();
    const double s = (p.t - t0_) / dt_;
    const double a = wrap_coordinate(p.x[0]) / h, b = wrap_coordinate(p.x[1]) / h;
    if (std::abs(s - std::round(s)) > 1e-9 || std::abs(a - std::round(a)) > 1e-9 || std::abs(b - std::round(b)) > 1e-9)
        throw Error("LocalFamily: point is not on the grid");
    const int n = lattice_.n();
    const GridPoint g{static_cast<int>(std::lround(s)), static_cast<int>((std::lround(a) % n + n) % n),
                      static_cast<int>((std::lround(b) % n + n) % n)};
    if (g.slice < 0 || g.slice >= n_slices_) throw Error("LocalFamily: point outside the time grid");
    return g;
}

double LocalFamily::evaluate(const GridPoint& z, const GridPoint& w) const {
    const Vec2 d = torus_displacement(point(w).x, point(z).x);
    double acc = 0.0;
    for (const auto& t : terms_) {
        const double c = t.coefficient.slice(z.slice)(z.i1, z.i2);
        const double f = t.base->field().slice(w.slice)(w.i1, w.i2);
        acc += c * f * (t.moment < 0 ? 1.0 : d[static_cast<std::size_t>(t.moment)]);
    }
    return acc;
}

namespace {

SpaceTimeField pointwise(const SpaceTimeField& u, const std::function<double(double)>& f) {
    std::vector<GridField> out;
    for (const auto& g : u.slices) {
        GridField r(g.lattice);
        for (std::size_t k = 0; k < g.values.size(); ++k) r.values[k] = f(g.values[k]);
        out.push_back(std::move(r));
    }
    return SpaceTimeField(u.t0, u.dt, std::move(out));
}

SpaceTimeField on_grid(const SpaceTimeField& f, const SpaceTimeField& grid) {
    if (f.constant_in_time()) return f;
    std::vector<GridField> out;
    for (int s = 0; s < grid.n_slices(); ++s) out.push_back(f.at_time(grid.time(s)));
    return SpaceTimeField(grid.t0, grid.dt, std::move(out));
}

}  // namespace

LocalFamily constant_family(const SpaceTimeField& f, const SpaceTimeField& grid) {
    LocalFamily fam(grid.t0, grid.dt, grid.lattice(), grid.n_slices());
    fam.add_term(SpaceTimeField(grid.t0, grid.dt, {GridField(grid.lattice(), 1.0)}), on_grid(f, grid), -1, "f");
    return fam;
}

LocalFamily frozen_family(const SpaceTimeField& u) {
    LocalFamily fam(u.t0, u.dt, u.lattice(), u.n_slices());
    fam.add_term(u, SpaceTimeField(u.t0, u.dt, {GridField(u.lattice(), 1.0)}), -1, "u(z)");
    return fam;
}

LocalFamily product_family(const UField& uf, const SpaceTimeField& noise, double renorm, double kappa) {
    const SpaceTimeField& u = uf.u();
    const SpaceTimeField& l = uf.lolli();
    const SpaceTimeField xi = on_grid(noise, u);
    LocalFamily fam(u.t0, u.dt, u.lattice(), u.n_slices());

    std::vector<GridField> lxi, c1;
    for (int s = 0; s < u.n_slices(); ++s) {
        GridField a = l.slice(s), b = uf.sigma_u().slice(s);
        const auto& x = xi.slice(s).values;
        const auto& ss = uf.dsigma_sigma_u().slice(s).values;
        for (std::size_t k = 0; k < a.values.size(); ++k) {
            b.values[k] -= ss[k] * a.values[k];
            a.values[k] *= x[k];
        }
        lxi.push_back(std::move(a));
        c1.push_back(std::move(b));
    }
    const auto xi_series = std::make_shared<const SpectralSeries>(xi);
    fam.add_term(SpaceTimeField(u.t0, u.dt, std::move(c1)), xi_series, -1, "noise");
    fam.add_term(uf.dsigma_sigma_u(), SpaceTimeField(u.t0, u.dt, std::move(lxi)), -1, "lolli*noise");
    fam.add_term(pointwise(uf.dsigma_sigma_u(), [renorm](double v) { return -renorm * v; }),
                 SpaceTimeField(u.t0, u.dt, {GridField(u.lattice(), 1.0)}), -1, "renorm");
    for (int c = 0; c < 2; ++c) {
        SpaceTimeField d = uf.dsigma_u();
        for (int s = 0; s < d.n_slices(); ++s) {
            auto& v = d.slices[static_cast<std::size_t>(s)].values;
            const auto& g = uf.u_x(c).slice(s).values;
            for (std::size_t k = 0; k < v.size(); ++k) v[k] *= g[k];
        }
        fam.add_term(std::move(d), xi_series, c, "x*noise");
    }
    // Constants are not part of the certificate; only exponents are checked.
    const double g = 1.0 - 3.0 * kappa;
    for (double theta : {-1.0 - kappa, -2.0 * kappa, -kappa})
        fam.add_certificate(theta, g, std::numeric_limits<double>::quiet_NaN());
    return fam;
}

nlohmann::json ReconstructionReport::to_json() const {
    return {{"value", value}, {"telescoping", telescoping}, {"diagonal", diagonal},
            {"levels", levels}, {"L", L},           {"N", N}};
}

namespace {

// A field known on slices [lo, lo + n) of the family grid.
struct Window {
    int lo = 0;
    std::shared_ptr<const SpectralSeries> series;
};

Window make_window(int lo, std::vector<GridField> slices, double t0, double dt) {
    return {lo, std::make_shared<const SpectralSeries>(SpaceTimeField(t0 + lo * dt, dt, std::move(slices)))};
}

GridField apply(const DiscreteKernel& k, const Window& w, int s, KernelMode mode, int c) {
    if (!w.series->constant_in_time() && s - k.max_lag() < w.lo)
        throw Error("reconstruction: kernel support exits the family's time range");
    return convolve(k, *w.series, w.series->constant_in_time() ? 0 : s - w.lo, mode, c);
}

double apply_at(const DiscreteKernel& k, const Window& w, int s, const GridPoint& z) {
    if (!w.series->constant_in_time() && s - k.max_lag() < w.lo)
        throw Error("reconstruction: kernel support exits the family's time range");
    const auto spec = convolve_spectrum(k, *w.series, w.series->constant_in_time() ? 0 : s - w.lo);
    return spectral_value_at(k.lattice, spec, z.i1, z.i2);
}

class Engine {
public:
    Engine(const LocalFamily& fam) : fam_(fam) {
        for (const auto& t : fam.terms()) bases_.push_back({0, t.base});
    }

    // y -> <G_y, B_y> on slices [lo, hi].
    Window diagonal(const DiscreteKernel& B, int lo, int hi) const {
        const auto per = parallel_map<GridField>(static_cast<std::size_t>(hi - lo + 1), [&](std::size_t i) {
            const int s = lo + static_cast<int>(i);
            GridField acc(fam_.lattice());
            for (std::size_t a = 0; a < bases_.size(); ++a) {
                const auto& t = fam_.terms()[a];
                const GridField g = apply(B, bases_[a], s, t.moment < 0 ? KernelMode::Value : KernelMode::Moment,
                                          std::max(0, t.moment));
                const auto& c = t.coefficient.slice(s).values;
                for (std::size_t k = 0; k < acc.values.size(); ++k) acc.values[k] += c[k] * g.values[k];
            }
            return acc;
        });
        return make_window(lo, std::vector<GridField>(per.begin(), per.end()), fam_.t0(), fam_.dt());
    }

    // Kernel applied to a base field on slices [lo, hi].
    Window base_window(std::size_t a, const DiscreteKernel& B, int lo, int hi, KernelMode mode, int c) const {
        const auto per = parallel_map<GridField>(static_cast<std::size_t>(hi - lo + 1), [&](std::size_t i) {
            return apply(B, bases_[a], lo + static_cast<int>(i), mode, c);
        });
        return make_window(lo, std::vector<GridField>(per.begin(), per.end()), fam_.t0(), fam_.dt());
    }

    const std::vector<Window>& bases() const { return bases_; }

private:
    const LocalFamily& fam_;
    std::vector<Window> bases_;
};

}  // namespace

ReconstructionReport lambda_NL(const LocalFamily& family, const ParabolicPoint& zp, double L, int N,
                               const MollifierKernel& psi) {
    if (!(L > 0)) throw Error("lambda_NL: L must be positive");
    if (N < 0 || N > kReconstructionDepth)
        throw Error("lambda_NL: N must lie in [0, " + std::to_string(kReconstructionDepth) + "]");
    if (zp.t < 4 * L * L - 1e-12) throw Error("lambda_NL: time range violation, need t >= 4 L^2");
    const GridPoint z = family.grid_point(zp);
    const auto& lat = family.lattice();
    const double dt = family.dt();
    const int D = kReconstructionDepth;
    const int s = z.slice;

    // K_n = phi^{L,n}, B_n = phi^{L/2^n} so that K_n * B_n = phi^L for every n <= D.
    auto K = [&](int n) { return semigroup_kernel(psi, L, n, lat, dt); };
    auto B = [&](int n) { return semigroup_kernel(psi, L / std::ldexp(1.0, n), D - n, lat, dt); };

    const Engine eng(family);
    ReconstructionReport rep;
    rep.L = L;
    rep.N = N;

    const Window P0 = eng.diagonal(B(0), s, s);
    rep.diagonal = spectral_value_at(lat, P0.series->slice(0), z.i1, z.i2);

    const DiscreteKernel KN = K(N);
    const Window PN = eng.diagonal(B(N), s - KN.max_lag(), s);
    rep.telescoping = apply_at(KN, PN, s, z) - rep.diagonal;

    // Level n: <K_n, Q_n> with Q_n(y) = int psi'(y - y2) <G_{y2} - G_y, B_{n+1, y2}> dy2.
    for (int n = 0; n < N; ++n) {
        const DiscreteKernel Kn = K(n);
        const DiscreteKernel step = DiscreteKernel::from_mollifier(psi, L / std::ldexp(1.0, n + 1), lat, dt);
        const DiscreteKernel B1 = B(n + 1);
        const int qlo = s - Kn.max_lag();
        const int wlo = qlo - step.max_lag();
        const Window P1 = eng.diagonal(B1, wlo, s);

        std::vector<GridField> q;
        for (int y = qlo; y <= s; ++y) q.push_back(apply(step, P1, y, KernelMode::Value, 0));
        for (std::size_t a = 0; a < family.terms().size(); ++a) {
            const auto& t = family.terms()[a];
            const Window A = eng.base_window(a, B1, wlo, s, KernelMode::Value, 0);
            std::optional<Window> M;
            if (t.moment >= 0) M = eng.base_window(a, B1, wlo, s, KernelMode::Moment, t.moment);
            for (int y = qlo; y <= s; ++y) {
                GridField sub = apply(step, t.moment < 0 ? A : *M, y, KernelMode::Value, 0);
                if (t.moment >= 0) {
                    const GridField shift = apply(step, A, y, KernelMode::Moment, t.moment);
                    for (std::size_t k = 0; k < sub.values.size(); ++k) sub.values[k] += shift.values[k];
                }
                const auto& c = t.coefficient.slice(y).values;
                auto& qv = q[static_cast<std::size_t>(y - qlo)].values;
                for (std::size_t k = 0; k < qv.size(); ++k) qv[k] -= c[k] * sub.values[k];
            }
        }
        const Window Q = make_window(qlo, std::move(q), family.t0(), dt);
        rep.levels.push_back(apply_at(Kn, Q, s, z));
    }
    for (double v : rep.levels) rep.value += v;
    return rep;
}

double reconstruct_product(const Model& model, const Nonlinearity& sigma, const UField& uf, const ParabolicPoint& z,
                           double L, int N, const MollifierKernel& psi) {
    if (uf.sigma().name != sigma.name) throw Error("reconstruct_product: nonlinearity does not match the UField");
    const LocalFamily fam = product_family(uf, model.noise(0), model.renorm(0, 0), model.kappa());
    const auto rep = lambda_NL(fam, z, L, N, psi);
    return rep.value + rep.diagonal;
}

double semigroup_pairing(const SpaceTimeField& f, const ParabolicPoint& zp, double L, const MollifierKernel& psi) {
    const auto& lat = f.lattice();
    const DiscreteKernel k = semigroup_kernel(psi, L, kReconstructionDepth, lat, f.dt);
    const int s = f.slice_index(zp.t);
    const double h = lat.spacing();
    const int n = lat.n();
    const int i1 = static_cast<int>((std::lround(wrap_coordinate(zp.x[0]) / h) % n + n) % n);
    const int i2 = static_cast<int>((std::lround(wrap_coordinate(zp.x[1]) / h) % n + n) % n);
    const SpectralSeries series(f);
    return spectral_value_at(lat, convolve_spectrum(k, series, s), i1, i2);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error("loglog_slope: need at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::string ErrorScalingReport::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "L,abs_error,basepoint_index\n";
    for (const auto& r : rows) os << r.L << ',' << r.abs_error << ',' << r.basepoint_index << '\n';
    return os.str();
}

nlohmann::json ErrorScalingReport::to_json() const {
    return {{"scales", scales},          {"mean_error", mean_error}, {"max_error", max_error},
            {"exponent", exponent},      {"exponent_max", exponent_max}, {"target", target}};
}

ErrorScalingReport error_scaling_study(const Model& model, const Nonlinearity& sigma, const UField& uf,
                                       const std::vector<double>& scales, int basepoints, std::uint64_t seed,
                                       const MollifierKernel& psi) {
    if (scales.size() < 2 || basepoints < 1) throw Error("error_scaling_study: need >= 2 scales and >= 1 basepoint");
    (void)sigma;
    const double kappa = model.kappa();
    const double C = model.renorm(0, 0);
    const SpaceTimeField& u = uf.u();
    const auto& lat = u.lattice();
    const int n = lat.n();
    const int s = u.n_slices() - 1;
    const LocalFamily fam = product_family(uf, model.noise(0), C, kappa);
    const SpaceTimeField xi = on_grid(model.noise(0), u);

    // Renormalized product sigma(u) Xi - sigma'sigma(u) C on the grid of u.
    std::vector<GridField> prod;
    for (int q = 0; q < u.n_slices(); ++q) {
        GridField g = uf.sigma_u().slice(q);
        const auto& x = xi.slice(q).values;
        const auto& ss = uf.dsigma_sigma_u().slice(q).values;
        for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] = g.values[k] * x[k] - ss[k] * C;
        prod.push_back(std::move(g));
    }
    const Window literal{0, std::make_shared<const SpectralSeries>(SpaceTimeField(u.t0, u.dt, std::move(prod)))};
    const Engine eng(fam);

    const CounterRng rng(seed);
    std::vector<GridPoint> pts;
    for (int b = 0; b < basepoints; ++b) {
        const auto ub = static_cast<std::uint64_t>(b);
        pts.push_back({s, std::min(n - 1, static_cast<int>(n * rng.uniform({ub, 0}))),
                       std::min(n - 1, static_cast<int>(n * rng.uniform({ub, 1})))});
    }

    ErrorScalingReport rep;
    rep.target = 1.0 - 3.0 * kappa;
    rep.scales = scales;
    for (double L : scales) {
        if (u.time(s) < 4 * L * L) throw Error("error_scaling_study: time range violation, need t >= 4 L^2");
        const DiscreteKernel k = DiscreteKernel::from_mollifier(psi, L, lat, u.dt);
        const auto lit = convolve_spectrum(k, *literal.series, s);
        const Window diag = eng.diagonal(k, s, s);
        const auto& dspec = diag.series->slice(0);
        double mean = 0.0, mx = 0.0;
        for (int b = 0; b < basepoints; ++b) {
            const auto& p = pts[static_cast<std::size_t>(b)];
            const double e = std::abs(spectral_value_at(lat, lit, p.i1, p.i2) - spectral_value_at(lat, dspec, p.i1, p.i2));
            rep.rows.push_back({L, e, b});
            mean += e / basepoints;
            mx = std::max(mx, e);
        }
        rep.mean_error.push_back(mean);
        rep.max_error.push_back(mx);
    }
    const bool positive = std::all_of(rep.mean_error.begin(), rep.mean_error.end(), [](double v) { return v > 0; });
    rep.exponent = positive ? loglog_slope(scales, rep.mean_error) : std::numeric_limits<double>::infinity();
    rep.exponent_max = positive ? loglog_slope(scales, rep.max_error) : std::numeric_limits<double>::infinity();
    return rep;
}

}  // namespace sspde
