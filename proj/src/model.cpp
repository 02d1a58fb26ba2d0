#include "sspde/model.hpp"

#include <algorithm>
#include <cmath>

#include "sspde/fft.hpp"
#include "sspde/spectral.hpp"

namespace sspde {

double Symbol::homogeneity(double kappa) const {
    switch (tag) {
        case SymbolTag::Noise: return -1.0 - kappa;
        case SymbolTag::Lolli: return 1.0 - kappa;
        case SymbolTag::X: return 1.0;
        case SymbolTag::XNoise: return -kappa;
        case SymbolTag::Dumbbell: return -2.0 * kappa;
    }
    return 0.0;
}

std::string Symbol::name() const {
    switch (tag) {
        case SymbolTag::Noise: return "NOISE[" + std::to_string(i) + "]";
        case SymbolTag::Lolli: return "LOLLI[" + std::to_string(i) + "]";
        case SymbolTag::X: return "X[" + std::to_string(component) + "]";
        case SymbolTag::XNoise: return "XNOISE[" + std::to_string(i) + "," + std::to_string(component) + "]";
        case SymbolTag::Dumbbell: return "DUMBBELL[" + std::to_string(i) + "," + std::to_string(j) + "]";
    }
    return "?";
}

Model::Model(std::vector<SpaceTimeField> noises, std::vector<SpaceTimeField> lollis,
             std::vector<std::vector<double>> renorm, double kappa)
    : renorm_(std::move(renorm)), kappa_(kappa) {
    if (noises.empty() || noises.size() != lollis.size())
        throw Error("Model: need one lollipop per noise");
    if (!(kappa > 0 && kappa < 1.0 / 3.0)) throw Error("Model: kappa must lie in (0, 1/3)");
    const std::size_t m = noises.size();
    if (renorm_.size() != m) throw Error("Model: renorm matrix must be m x m");
    for (const auto& row : renorm_)
        if (row.size() != m) throw Error("Model: renorm matrix must be m x m");
    const SpaceTimeField& ref = lollis.front();
    for (const auto& l : lollis) {
        if (l.lattice() != ref.lattice() || l.n_slices() != ref.n_slices() ||
            std::abs(l.t0 - ref.t0) > 1e-12 || std::abs(l.dt - ref.dt) > 1e-12 * ref.dt)
            throw Error("Model: lollipops must share one time grid");
    }
    for (const auto& f : noises) {
        if (f.lattice() != ref.lattice()) throw Error("Model: lattice mismatch");
        if (!f.constant_in_time() &&
            (f.n_slices() != ref.n_slices() || std::abs(f.t0 - ref.t0) > 1e-12 ||
             std::abs(f.dt - ref.dt) > 1e-12 * ref.dt))
            throw Error("Model: time-dependent noise must share the lollipop time grid");
    }
    for (auto& f : noises) noises_.push_back(std::make_shared<const SpectralSeries>(std::move(f)));
    for (auto& f : lollis) lollis_.push_back(std::make_shared<const SpectralSeries>(std::move(f)));
    products_.resize(m * m);
}

const SpectralSeries& Model::product_series(int i, int j) const {
    const std::size_t m = noises_.size();
    std::lock_guard<std::mutex> lock(*products_mutex_);
    auto& slot = products_.at(static_cast<std::size_t>(i) * m + static_cast<std::size_t>(j));
    if (!slot) {
        const SpaceTimeField& l = lolli(j);
        const SpaceTimeField& xi = noise(i);
        std::vector<GridField> out;
        for (int s = 0; s < l.n_slices(); ++s) {
            GridField g = l.slice(s);
            const GridField& x = xi.slice(s);
            for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] *= x.values[k];
            out.push_back(std::move(g));
        }
        slot = std::make_shared<const SpectralSeries>(SpaceTimeField(l.t0, l.dt, std::move(out)));
    }
    return *slot;
}

ParabolicPoint Model::point(const GridPoint& g) const {
    check(g);
    const auto& lat = lattice();
    return ParabolicPoint::make(t0() + g.slice * dt(), lat.coordinate(g.i1), lat.coordinate(g.i2));
}

GridPoint Model::grid_point(const ParabolicPoint& p) const {
    const auto& lat = lattice();
    const double h = lat.spacing();
    const double s = (p.t - t0()) / dt();
    const double a = p.x[0] / h, b = p.x[1] / h;
    if (std::abs(s - std::round(s)) > 1e-9 || std::abs(a - std::round(a)) > 1e-9 ||
        std::abs(b - std::round(b)) > 1e-9)
        throw Error("Model: base point is not on the grid");
    const int n = lat.n();
    GridPoint g{static_cast<int>(std::lround(s)), static_cast<int>(((std::lround(a) % n) + n) % n),
                static_cast<int>(((std::lround(b) % n) + n) % n)};
    check(g);
    return g;
}

void Model::check(const GridPoint& g) const {
    const int n = lattice().n();
    if (g.slice < 0 || g.slice >= n_slices() || g.i1 < 0 || g.i1 >= n || g.i2 < 0 || g.i2 >= n)
        throw Error("Model: base point outside the model grid");
}

double Model::lolli_residual(int i) const {
    const SpaceTimeField& l = lolli(i);
    const auto& lat = lattice();
    const HeatStep step(lat, 0.0, dt());
    const auto& zs = lolli_series(i);
    const auto& xs = noise_series(i);
    double worst = 0.0;
    for (int s = 0; s + 1 < l.n_slices(); ++s) {
        const auto& a = zs.slice(s);
        const auto& b = zs.slice(s + 1);
        const auto& fa = xs.slice(s);
        const auto& fb = xs.slice(s + 1);
        double acc = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k)
            acc += std::abs(b[k] - (step.decay[k] * a[k] + step.wa[k] * fa[k] + step.wb[k] * fb[k]));
        worst = std::max(worst, acc);
    }
    return worst;
}

Model Model::with_renorm(std::vector<std::vector<double>> renorm) const {
    Model m = *this;
    if (renorm.size() != renorm_.size()) throw Error("Model: renorm matrix must be m x m");
    m.renorm_ = std::move(renorm);
    return m;
}

Model make_gpam_model(const GpamNoise& noise, double renorm, double kappa, double t0, double dt,
                      int n_slices) {
    if (n_slices < 1 || t0 < 0) throw Error("make_gpam_model: bad time grid");
    std::vector<GridField> l;
    for (int s = 0; s < n_slices; ++s) l.push_back(build_gpam_lolli(noise, t0 + s * dt));
    std::vector<SpaceTimeField> noises{SpaceTimeField(t0, dt, {noise.physical()})};
    std::vector<SpaceTimeField> lollis{SpaceTimeField(t0, dt, std::move(l))};
    return Model(std::move(noises), std::move(lollis), {{renorm}}, kappa);
}

namespace {

GridField displacement_field(const TorusLattice& lat, int i_ref, int c) {
    GridField g(lat);
    const int n = lat.n();
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const int idx = (c == 0) ? a : b;
            g.values[lat.index(a, b)] = wrap_coordinate(lat.coordinate(idx) - lat.coordinate(i_ref));
        }
    return g;
}

SpaceTimeField map_slices(const SpaceTimeField& f, const std::function<void(int, GridField&)>& op) {
    std::vector<GridField> out;
    for (int s = 0; s < f.n_slices(); ++s) {
        GridField g = f.slices[static_cast<std::size_t>(s)];
        op(s, g);
        out.push_back(std::move(g));
    }
    return SpaceTimeField(f.t0, f.dt, std::move(out));
}

double at(const SpaceTimeField& f, const GridPoint& p) { return f.slice(p.slice)(p.i1, p.i2); }

}  // namespace

SpaceTimeField realize(const Model& model, const GridPoint& z, const Symbol& sym) {
    model.check(z);
    const auto& lat = model.lattice();
    switch (sym.tag) {
        case SymbolTag::Noise: return model.noise(sym.i);
        case SymbolTag::Lolli: {
            const double c = at(model.lolli(sym.i), z);
            return map_slices(model.lolli(sym.i), [&](int, GridField& g) {
                for (auto& v : g.values) v -= c;
            });
        }
        case SymbolTag::X: {
            const int ref = sym.component == 0 ? z.i1 : z.i2;
            return SpaceTimeField(model.t0(), model.dt(), {displacement_field(lat, ref, sym.component)});
        }
        case SymbolTag::XNoise: {
            const GridField d = displacement_field(lat, sym.component == 0 ? z.i1 : z.i2, sym.component);
            return map_slices(model.noise(sym.i), [&](int, GridField& g) {
                for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] *= d.values[k];
            });
        }
        case SymbolTag::Dumbbell: {
            const SpaceTimeField& l = model.lolli(sym.j);
            const SpaceTimeField& xi = model.noise(sym.i);
            const double lz = at(l, z), C = model.renorm(sym.i, sym.j);
            return map_slices(l, [&](int s, GridField& g) {
                const GridField& x = xi.slice(s);
                for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] = (g.values[k] - lz) * x.values[k] - C;
            });
        }
    }
    throw Error("realize: unknown symbol");
}

double cbp_residual(const Model& model, const GridPoint& z, const GridPoint& w, const Symbol& sym) {
    const auto& lat = model.lattice();
    const int n = lat.n();
    const SpaceTimeField pz = realize(model, z, sym);
    const SpaceTimeField pw = realize(model, w, sym);
    // Evaluation points where the minimal displacements from z and w are consistent.
    auto consistent = [&](int a, int b) {
        const int iz[2] = {z.i1, z.i2}, iw[2] = {w.i1, w.i2}, ix[2] = {a, b};
        for (int c = 0; c < 2; ++c) {
            const double dz = wrap_coordinate(lat.coordinate(ix[c]) - lat.coordinate(iz[c]));
            const double dw = wrap_coordinate(lat.coordinate(ix[c]) - lat.coordinate(iw[c]));
            // Same sign convention as the correction (half-period ties wrap to +pi).
            const double zw = -wrap_coordinate(lat.coordinate(iz[c]) - lat.coordinate(iw[c]));
            if (std::abs(dz - (dw + zw)) > 1e-9) return false;
        }
        return true;
    };
    SpaceTimeField correction = pw;  // value subtracted from Pi_w to give Pi_z
    bool restrict_region = false;
    switch (sym.tag) {
        case SymbolTag::Noise:
            correction = map_slices(pw, [](int, GridField& g) { std::fill(g.values.begin(), g.values.end(), 0.0); });
            break;
        case SymbolTag::Lolli: {
            const double v = at(pw, z);
            correction = map_slices(pw, [&](int, GridField& g) { std::fill(g.values.begin(), g.values.end(), v); });
            break;
        }
        case SymbolTag::X: {
            const double v = at(pw, z);
            correction = map_slices(pw, [&](int, GridField& g) { std::fill(g.values.begin(), g.values.end(), v); });
            restrict_region = true;
            break;
        }
        case SymbolTag::XNoise: {
            const double xz = at(realize(model, w, Symbol::x(sym.component)), z);
            correction = map_slices(model.noise(sym.i), [&](int, GridField& g) {
                for (auto& v : g.values) v *= -xz;
            });
            restrict_region = true;
            break;
        }
        case SymbolTag::Dumbbell: {
            const double lz = at(realize(model, w, Symbol::lolli(sym.j)), z);
            correction = map_slices(model.noise(sym.i), [&](int, GridField& g) {
                for (auto& v : g.values) v *= -lz;
            });
            break;
        }
    }
    // Identity: Pi_z = Pi_w - correction (XNoise / Dumbbell: Pi_z = Pi_w - (Pi_w tau)(z) Pi_w noise).
    double worst = 0.0;
    const int ns = std::max({pz.n_slices(), pw.n_slices(), correction.n_slices()});
    for (int s = 0; s < ns; ++s) {
        const GridField& a = pz.slice(s);
        const GridField& b = pw.slice(s);
        const GridField& c = correction.slice(s);
        for (int i1 = 0; i1 < n; ++i1)
            for (int i2 = 0; i2 < n; ++i2) {
                if (restrict_region && !consistent(i1, i2)) continue;
                const std::size_t k = lat.index(i1, i2);
                double r;
                if (sym.tag == SymbolTag::XNoise || sym.tag == SymbolTag::Dumbbell)
                    r = a.values[k] - b.values[k] - c.values[k];
                else
                    r = a.values[k] - (b.values[k] - c.values[k]);
                worst = std::max(worst, std::abs(r));
            }
    }
    return worst;
}

namespace {

std::vector<Complex> pair_spectrum(const Model& model, int slice, const Symbol& sym, const DiscreteKernel& k,
                                   double& constant_shift, double& scale_by_lolli, std::vector<Complex>* noise_part) {
    constant_shift = 0.0;
    scale_by_lolli = 0.0;
    switch (sym.tag) {
        case SymbolTag::Noise: return convolve_spectrum(k, model.noise_series(sym.i), slice);
        case SymbolTag::Lolli: {
            constant_shift = -k.mass();
            scale_by_lolli = 1.0;
            return convolve_spectrum(k, model.lolli_series(sym.i), slice);
        }
        case SymbolTag::X: {
            std::vector<Complex> spec(model.lattice().size(), Complex(0.0));
            spec[0] = k.time_mass();
            apply_multiplier(k, spec, KernelMode::Moment, sym.component);
            return spec;
        }
        case SymbolTag::XNoise:
            return convolve_spectrum(k, model.noise_series(sym.i), slice, KernelMode::Moment, sym.component);
        case SymbolTag::Dumbbell: {
            *noise_part = convolve_spectrum(k, model.noise_series(sym.i), slice);
            constant_shift = -model.renorm(sym.i, sym.j) * k.mass();
            return convolve_spectrum(k, model.product_series(sym.i, sym.j), slice);
        }
    }
    throw Error("pair: unknown symbol");
}

}  // namespace

double pair(const Model& model, const GridPoint& z, const Symbol& sym, const DiscreteKernel& kernel) {
    model.check(z);
    double shift, by_lolli;
    std::vector<Complex> noise_part;
    const auto spec = pair_spectrum(model, z.slice, sym, kernel, shift, by_lolli, &noise_part);
    const auto& lat = model.lattice();
    double v = spectral_value_at(lat, spec, z.i1, z.i2);
    if (sym.tag == SymbolTag::Lolli) v += shift * at(model.lolli(sym.i), z);
    if (sym.tag == SymbolTag::Dumbbell)
        v += shift - at(model.lolli(sym.j), z) * spectral_value_at(lat, noise_part, z.i1, z.i2);
    return v;
}

GridField pair_field(const Model& model, int slice, const Symbol& sym, const DiscreteKernel& kernel) {
    double shift, by_lolli;
    std::vector<Complex> noise_part;
    const auto spec = pair_spectrum(model, slice, sym, kernel, shift, by_lolli, &noise_part);
    const auto& lat = model.lattice();
    GridField out(lat);
    const auto& fft = Fft2d::get(lat.n());
    fft.backward_real(spec.data(), out.values.data());
    if (sym.tag == SymbolTag::Lolli) {
        const GridField& l = model.lolli(sym.i).slice(slice);
        for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += shift * l.values[k];
    }
    if (sym.tag == SymbolTag::Dumbbell) {
        GridField np(lat);
        fft.backward_real(noise_part.data(), np.values.data());
        const GridField& l = model.lolli(sym.j).slice(slice);
        for (std::size_t k = 0; k < out.values.size(); ++k)
            out.values[k] += shift - l.values[k] * np.values[k];
    }
    return out;
}

}  // namespace sspde
