#include "sspde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "sspde/fft.hpp"

namespace sspde {

// ---------------------------------------------------------------- quadrature

void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<std::size_t>(m), 0.0);
    weights.assign(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= m; ++k) {
                const double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (m == 1) p0 = 1.0;
            dp = m * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(m - 1 - i)] = x;
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(m - 1 - i)] = w;
    }
}

namespace {

struct PanelRule {
    std::vector<double> x, w;
};

// Composite Gauss-Legendre rule on [lo, hi].
PanelRule composite_rule(double lo, double hi, int panels, int order) {
    std::vector<double> gx, gw;
    gauss_legendre(order, gx, gw);
    PanelRule r;
    const double h = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + p * h;
        for (int i = 0; i < order; ++i) {
            r.x.push_back(a + 0.5 * h * (gx[static_cast<std::size_t>(i)] + 1.0));
            r.w.push_back(0.5 * h * gw[static_cast<std::size_t>(i)]);
        }
    }
    return r;
}

struct BumpTable {
    std::vector<double> s, wb;  // nodes and w_i b(s_i) / Z
    double mass = 0.0;
    std::vector<double> gx, gw;  // 16-point rule for reuse
    BumpTable() {
        const PanelRule r = composite_rule(-1.0, 1.0, 64, 16);
        for (std::size_t i = 0; i < r.x.size(); ++i) mass += r.w[i] * bump(r.x[i]);
        s = r.x;
        for (std::size_t i = 0; i < r.x.size(); ++i) wb.push_back(r.w[i] * bump(r.x[i]) / mass);
        gauss_legendre(16, gx, gw);
    }
};

const BumpTable& bump_table() {
    static const BumpTable t;
    return t;
}

// Weights on slice lags for a time density b(2 tau/extent - 1)/(Z extent/2) on
// (0, extent), integrated exactly against the piecewise-linear hat basis.
std::vector<double> time_lag_weights(double extent, double dt) {
    if (!(extent > 0)) return {1.0};
    const auto& T = bump_table();
    const int M = static_cast<int>(std::ceil(extent / dt - 1e-12));
    std::vector<double> w(static_cast<std::size_t>(M) + 1, 0.0);
    for (int m = 0; m < M; ++m) {
        const double tlo = m * dt, thi = std::min((m + 1) * dt, extent);
        if (thi <= tlo) continue;
        const double ulo = 2.0 * tlo / extent - 1.0, uhi = 2.0 * thi / extent - 1.0;
        const int panels = std::max(1, static_cast<int>(std::ceil((uhi - ulo) * 32.0)));
        const double h = (uhi - ulo) / panels;
        for (int p = 0; p < panels; ++p) {
            const double a = ulo + p * h;
            for (std::size_t i = 0; i < T.gx.size(); ++i) {
                const double u = a + 0.5 * h * (T.gx[i] + 1.0);
                const double dens = 0.5 * h * T.gw[i] * bump(u) / T.mass;
                const double tau = (u + 1.0) * extent / 2.0;
                const double th = tau / dt - m;
                w[static_cast<std::size_t>(m)] += dens * (1.0 - th);
                w[static_cast<std::size_t>(m) + 1] += dens * th;
            }
        }
    }
    while (w.size() > 1 && w.back() == 0.0) w.pop_back();
    return w;
}

}  // namespace

double bump(double s) {
    const double q = 1.0 - s * s;
    return q > 0 ? std::exp(-1.0 / q) : 0.0;
}

double bump_derivative(double s) {
    const double q = 1.0 - s * s;
    return q > 0 ? std::exp(-1.0 / q) * (-2.0 * s / (q * q)) : 0.0;
}

double bump_mass() { return bump_table().mass; }

double bump_transform(double q) {
    const auto& T = bump_table();
    double acc = 0.0;
    for (std::size_t i = 0; i < T.s.size(); ++i) acc += T.wb[i] * std::cos(q * T.s[i]);
    return acc;
}

double bump_transform_derivative(double q) {
    const auto& T = bump_table();
    double acc = 0.0;
    for (std::size_t i = 0; i < T.s.size(); ++i) acc -= T.wb[i] * T.s[i] * std::sin(q * T.s[i]);
    return acc;
}

// ---------------------------------------------------------------- MollifierKernel

MollifierKernel::MollifierKernel(double a1, double a2, double time_extent, std::string id)
    : a_{a1, a2}, te_(time_extent), id_(std::move(id)) {
    const double lim = 1.0 / std::sqrt(2.0);
    if (!(a1 > 0 && a1 <= lim && a2 > 0 && a2 <= lim))
        throw Error("MollifierKernel: spatial half-widths must lie in (0, 1/sqrt(2)]");
    if (!(time_extent > 0 && time_extent <= 1.0))
        throw Error("MollifierKernel: time extent must lie in (0, 1]");
}

MollifierKernel MollifierKernel::canonical() { return MollifierKernel(); }

std::vector<MollifierKernel> MollifierKernel::family() {
    return {MollifierKernel(), MollifierKernel(0.5, 0.7, 1.0, "narrow-x1"),
            MollifierKernel(0.7, 0.5, 1.0, "narrow-x2"), MollifierKernel(0.6, 0.6, 0.5, "short-time")};
}

double MollifierKernel::time_density(double tau) const {
    if (!(tau > 0 && tau < te_)) return 0.0;
    return 2.0 / (te_ * bump_mass()) * bump(2.0 * tau / te_ - 1.0);
}

double MollifierKernel::spatial_factor(int c, double x) const {
    return bump(x / a_[c]) / (a_[c] * bump_mass());
}

double MollifierKernel::spatial_factor_derivative(int c, double x) const {
    return bump_derivative(x / a_[c]) / (a_[c] * a_[c] * bump_mass());
}

double MollifierKernel::value(double t, double x1, double x2) const {
    if (!(t < 0)) return 0.0;
    return time_density(-t) * spatial_factor(0, x1) * spatial_factor(1, x2);
}

double MollifierKernel::sup() const {
    const double Z = bump_mass(), e = std::exp(-1.0);
    return (2.0 * e / (te_ * Z)) * (e / (a_[0] * Z)) * (e / (a_[1] * Z));
}

// ---------------------------------------------------------------- ScaledKernel

ScaledKernel::ScaledKernel(const MollifierKernel& psi, const ParabolicPoint& z, double L)
    : psi_(psi), z_(z), L_(L) {
    if (!(L > 0)) throw Error("scale_kernel: L must be positive");
}

ScaledKernel scale_kernel(const MollifierKernel& psi, const ParabolicPoint& z, double L) {
    return ScaledKernel(psi, z, L);
}

double ScaledKernel::value(const ParabolicPoint& zbar) const {
    const Vec2 y = torus_displacement(zbar.x, z_.x);
    const double L2 = L_ * L_;
    return psi_.value((zbar.t - z_.t) / L2, y[0] / L_, y[1] / L_) / (L2 * L2);
}

double ScaledKernel::base_gradient(const ParabolicPoint& zbar, int c) const {
    const Vec2 y = torus_displacement(zbar.x, z_.x);
    const double L2 = L_ * L_;
    const double tt = (zbar.t - z_.t) / L2;
    if (!(tt < 0)) return 0.0;
    const double u[2] = {y[0] / L_, y[1] / L_};
    const double d = psi_.spatial_factor_derivative(c, u[c]) * psi_.spatial_factor(1 - c, u[1 - c]);
    return -psi_.time_density(-tt) * d / (L2 * L2 * L_);
}

double ScaledKernel::sup() const { return psi_.sup() / std::pow(L_, 4); }

namespace {
// 1-d integrals of the scaled factors over their supports.
double integrate(double lo, double hi, const std::function<double(double)>& f) {
    const PanelRule r = composite_rule(lo, hi, 64, 16);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) acc += r.w[i] * f(r.x[i]);
    return acc;
}
}  // namespace

double ScaledKernel::mass() const {
    const double L = L_, L2 = L * L;
    const double it = integrate(0.0, psi_.time_extent() * L2,
                                [&](double tau) { return psi_.time_density(tau / L2) / L2; });
    double s = it;
    for (int c = 0; c < 2; ++c) {
        const double a = psi_.half_width(c) * L;
        s *= integrate(-a, a, [&](double y) { return psi_.spatial_factor(c, y / L) / L; });
    }
    return s;
}

double ScaledKernel::ibp_moment(int i, int j) const {
    const double L = L_, L2 = L * L;
    const double it = integrate(0.0, psi_.time_extent() * L2,
                                [&](double tau) { return psi_.time_density(tau / L2) / L2; });
    const double ai = psi_.half_width(i) * L, aj = psi_.half_width(j) * L;
    // d/dx_i of eta_L(xbar - x) is -eta_L'(y).
    auto g = [&](double y) { return -psi_.spatial_factor_derivative(i, y / L) / L2; };
    if (i == j) {
        const int o = 1 - i;
        const double ao = psi_.half_width(o) * L;
        return it * integrate(-ai, ai, [&](double y) { return g(y) * y; }) *
               integrate(-ao, ao, [&](double y) { return psi_.spatial_factor(o, y / L) / L; });
    }
    return it * integrate(-ai, ai, g) *
           integrate(-aj, aj, [&](double y) { return psi_.spatial_factor(j, y / L) / L * y; });
}

double ScaledKernel::gradient_mass(int i) const {
    const double L = L_, L2 = L * L;
    const double it = integrate(0.0, psi_.time_extent() * L2,
                                [&](double tau) { return psi_.time_density(tau / L2) / L2; });
    const int o = 1 - i;
    const double ai = psi_.half_width(i) * L, ao = psi_.half_width(o) * L;
    return it * integrate(-ai, ai, [&](double y) { return -psi_.spatial_factor_derivative(i, y / L) / L2; }) *
           integrate(-ao, ao, [&](double y) { return psi_.spatial_factor(o, y / L) / L; });
}

// ---------------------------------------------------------------- DiscreteKernel

DiscreteKernel DiscreteKernel::identity(const TorusLattice& lat, double dt) {
    DiscreteKernel k;
    k.lattice = lat;
    k.dt = dt;
    k.scale = 0.0;
    k.time_weights = {1.0};
    for (auto& ax : k.axis) {
        ax.value.assign(static_cast<std::size_t>(lat.n()), 1.0);
        ax.derivative.assign(static_cast<std::size_t>(lat.n()), 0.0);
    }
    k.label = "delta";
    return k;
}

DiscreteKernel DiscreteKernel::from_mollifier(const MollifierKernel& psi, double L, const TorusLattice& lat,
                                              double dt) {
    if (!(L > 0) || !(dt > 0)) throw Error("DiscreteKernel: L and dt must be positive");
    DiscreteKernel k;
    k.lattice = lat;
    k.dt = dt;
    k.scale = L;
    k.time_weights = time_lag_weights(psi.time_extent() * L * L, dt);
    const int n = lat.n();
    for (int c = 0; c < 2; ++c) {
        auto& ax = k.axis[c];
        ax.value.resize(static_cast<std::size_t>(n));
        ax.derivative.resize(static_cast<std::size_t>(n));
        const double s = psi.half_width(c) * L;
        for (int a = 0; a < n; ++a) {
            const int kk = lat.wavenumber(a);
            ax.value[static_cast<std::size_t>(a)] = bump_transform(kk * s);
            ax.derivative[static_cast<std::size_t>(a)] = (2 * kk == n) ? 0.0 : s * bump_transform_derivative(kk * s);
        }
    }
    k.label = psi.id() + "@" + std::to_string(L);
    return k;
}

DiscreteKernel DiscreteKernel::compose(const DiscreteKernel& o) const {
    if (lattice != o.lattice || std::abs(dt - o.dt) > 1e-12 * dt)
        throw Error("DiscreteKernel::compose: grid mismatch");
    DiscreteKernel k;
    k.lattice = lattice;
    k.dt = dt;
    k.scale = scale + o.scale;
    k.time_weights.assign(time_weights.size() + o.time_weights.size() - 1, 0.0);
    for (std::size_t i = 0; i < time_weights.size(); ++i)
        for (std::size_t j = 0; j < o.time_weights.size(); ++j)
            k.time_weights[i + j] += time_weights[i] * o.time_weights[j];
    for (int c = 0; c < 2; ++c) {
        const auto &A = axis[c], &B = o.axis[c];
        auto& R = k.axis[c];
        R.value.resize(A.value.size());
        R.derivative.resize(A.value.size());
        for (std::size_t a = 0; a < A.value.size(); ++a) {
            R.value[a] = A.value[a] * B.value[a];
            R.derivative[a] = A.derivative[a] * B.value[a] + A.value[a] * B.derivative[a];
        }
    }
    k.label = label + "*" + o.label;
    return k;
}

double DiscreteKernel::time_mass() const {
    double s = 0.0;
    for (double w : time_weights) s += w;
    return s;
}

double DiscreteKernel::mass() const { return time_mass() * axis[0].value[0] * axis[1].value[0]; }

bool DiscreteKernel::equals(const DiscreteKernel& o, double tol) const {
    if (lattice != o.lattice) return false;
    const std::size_t nt = std::max(time_weights.size(), o.time_weights.size());
    for (std::size_t j = 0; j < nt; ++j) {
        const double a = j < time_weights.size() ? time_weights[j] : 0.0;
        const double b = j < o.time_weights.size() ? o.time_weights[j] : 0.0;
        if (std::abs(a - b) > tol) return false;
    }
    for (int c = 0; c < 2; ++c)
        for (std::size_t a = 0; a < axis[c].value.size(); ++a) {
            if (std::abs(axis[c].value[a] - o.axis[c].value[a]) > tol) return false;
            if (std::abs(axis[c].derivative[a] - o.axis[c].derivative[a]) > tol) return false;
        }
    return true;
}

DiscreteKernel semigroup_kernel(const MollifierKernel& psi, double L, int n, const TorusLattice& lat,
                                double dt) {
    if (n < 0 || n > kDepthCap)
        throw Error("semigroup_kernel: depth " + std::to_string(n) + " outside [0, " +
                    std::to_string(kDepthCap) + "]");
    if (n > 0 && L / std::ldexp(1.0, n) < lat.spacing() / 16.0)
        throw Error("semigroup_kernel: scale L/2^n is below the grid resolution (depth cap)");
    DiscreteKernel k = DiscreteKernel::identity(lat, dt);
    for (int j = 1; j <= n; ++j) k = k.compose(DiscreteKernel::from_mollifier(psi, L / std::ldexp(1.0, j), lat, dt));
    k.scale = L;
    k.label = psi.id() + "^{" + std::to_string(L) + "," + std::to_string(n) + "}";
    return k;
}

// ---------------------------------------------------------------- SpectralSeries

SpectralSeries::SpectralSeries(SpaceTimeField field) : field_(std::move(field)) {
    cache_.resize(static_cast<std::size_t>(field_.n_slices()));
}

const std::vector<Complex>& SpectralSeries::slice(int s) const {
    if (field_.constant_in_time()) s = 0;
    if (s < 0 || s >= field_.n_slices()) throw Error("SpectralSeries: slice out of range");
    std::lock_guard<std::mutex> lock(mutex_);
    auto& slot = cache_[static_cast<std::size_t>(s)];
    if (!slot) {
        auto v = std::make_shared<std::vector<Complex>>(lattice().size());
        Fft2d::get(lattice().n()).forward_real(field_.slices[static_cast<std::size_t>(s)].values.data(), v->data());
        slot = std::move(v);
    }
    return *slot;
}

// ---------------------------------------------------------------- convolution

void apply_multiplier(const DiscreteKernel& k, std::vector<Complex>& spec, KernelMode mode, int c) {
    const auto& lat = k.lattice;
    const int n = lat.n();
    const auto &P0 = k.axis[0].value, &P1 = k.axis[1].value;
    const auto &D0 = k.axis[0].derivative, &D1 = k.axis[1].derivative;
    const Complex I(0.0, 1.0);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const std::size_t idx = lat.index(a, b);
            Complex m;
            switch (mode) {
                case KernelMode::Value: m = P0[static_cast<std::size_t>(a)] * P1[static_cast<std::size_t>(b)]; break;
                case KernelMode::Moment:
                    m = (c == 0) ? -I * D0[static_cast<std::size_t>(a)] * P1[static_cast<std::size_t>(b)]
                                 : -I * P0[static_cast<std::size_t>(a)] * D1[static_cast<std::size_t>(b)];
                    break;
                case KernelMode::Gradient: {
                    const int slot = (c == 0) ? a : b;
                    const int kk = lat.wavenumber(slot);
                    m = (2 * kk == n) ? Complex(0.0)
                                      : I * static_cast<double>(kk) * P0[static_cast<std::size_t>(a)] *
                                            P1[static_cast<std::size_t>(b)];
                    break;
                }
            }
            spec[idx] *= m;
        }
}

std::vector<Complex> convolve_spectrum(const DiscreteKernel& k, const SpectralSeries& f, int s,
                                       KernelMode mode, int c) {
    if (f.lattice() != k.lattice) throw Error("convolve: lattice mismatch");
    std::vector<Complex> acc(k.lattice.size(), Complex(0.0));
    if (f.constant_in_time()) {
        const auto& g = f.slice(0);
        const double w = k.time_mass();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = w * g[i];
    } else {
        if (std::abs(f.field().dt - k.dt) > 1e-9 * k.dt) throw Error("convolve: slice spacing mismatch");
        if (s >= f.field().n_slices() || s - k.max_lag() < 0)
            throw Error("convolve: kernel support exits the field's time range");
        for (int j = 0; j <= k.max_lag(); ++j) {
            const double w = k.time_weights[static_cast<std::size_t>(j)];
            if (w == 0.0) continue;
            const auto& g = f.slice(s - j);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * g[i];
        }
    }
    apply_multiplier(k, acc, mode, c);
    return acc;
}

GridField convolve(const DiscreteKernel& k, const SpectralSeries& f, int s, KernelMode mode, int c) {
    const auto spec = convolve_spectrum(k, f, s, mode, c);
    GridField out(k.lattice);
    Fft2d::get(k.lattice.n()).backward_real(spec.data(), out.values.data());
    return out;
}

double spectral_value_at(const TorusLattice& lat, const std::vector<Complex>& spec, int i1, int i2) {
    const int n = lat.n();
    std::vector<Complex> e1(static_cast<std::size_t>(n)), e2(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        e1[static_cast<std::size_t>(a)] = std::polar(1.0, kTwoPi * ((static_cast<long>(a) * i1) % n) / n);
        e2[static_cast<std::size_t>(a)] = std::polar(1.0, kTwoPi * ((static_cast<long>(a) * i2) % n) / n);
    }
    Complex acc(0.0);
    for (int a = 0; a < n; ++a) {
        Complex row(0.0);
        for (int b = 0; b < n; ++b) row += spec[lat.index(a, b)] * e2[static_cast<std::size_t>(b)];
        acc += e1[static_cast<std::size_t>(a)] * row;
    }
    return acc.real();
}

// ---------------------------------------------------------------- FieldEvaluator

FieldEvaluator::FieldEvaluator(std::shared_ptr<const SpectralSeries> series) : series_(std::move(series)) {}

FieldEvaluator::FieldEvaluator(const SpaceTimeField& field)
    : series_(std::make_shared<const SpectralSeries>(field)) {}

double FieldEvaluator::t_min() const {
    return series_->constant_in_time() ? -1e300 : series_->field().t0;
}
double FieldEvaluator::t_max() const {
    return series_->constant_in_time() ? 1e300 : series_->field().t_end();
}

double FieldEvaluator::slice_value(int s, const Vec2& x, int deriv) const {
    const auto& lat = series_->lattice();
    const int n = lat.n();
    const auto& spec = series_->slice(s);
    std::vector<Complex> e1(static_cast<std::size_t>(n)), e2(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        const int k = lat.wavenumber(a);
        const std::size_t ia = static_cast<std::size_t>(a);
        if (2 * k == n) {
            e1[ia] = (deriv == 1) ? Complex(-k * std::sin(k * x[0])) : Complex(std::cos(k * x[0]));
            e2[ia] = (deriv == 2) ? Complex(-k * std::sin(k * x[1])) : Complex(std::cos(k * x[1]));
        } else {
            e1[ia] = std::polar(1.0, k * x[0]);
            e2[ia] = std::polar(1.0, k * x[1]);
            if (deriv == 1) e1[ia] *= Complex(0.0, k);
            if (deriv == 2) e2[ia] *= Complex(0.0, k);
        }
    }
    Complex acc(0.0);
    for (int a = 0; a < n; ++a) {
        Complex row(0.0);
        const Complex* r = spec.data() + lat.index(a, 0);
        for (int b = 0; b < n; ++b) row += r[b] * e2[static_cast<std::size_t>(b)];
        acc += e1[static_cast<std::size_t>(a)] * row;
    }
    return acc.real();
}

namespace {
void locate_time(const SpectralSeries& s, double t, int& i0, double& th) {
    if (s.constant_in_time()) {
        i0 = 0;
        th = 0.0;
        return;
    }
    const auto& f = s.field();
    const double r = (t - f.t0) / f.dt;
    if (r < -1e-9 || r > f.n_slices() - 1 + 1e-9) throw Error("FieldEvaluator: time outside the field's range");
    i0 = std::clamp(static_cast<int>(std::floor(r)), 0, f.n_slices() - 1);
    th = std::clamp(r - i0, 0.0, 1.0);
    if (i0 == f.n_slices() - 1) th = 0.0;
}
}  // namespace

double FieldEvaluator::value(const ParabolicPoint& p) const {
    int s;
    double th;
    locate_time(*series_, p.t, s, th);
    const double a = slice_value(s, p.x, 0);
    return th == 0.0 ? a : (1 - th) * a + th * slice_value(s + 1, p.x, 0);
}

Vec2 FieldEvaluator::gradient(const ParabolicPoint& p) const {
    int s;
    double th;
    locate_time(*series_, p.t, s, th);
    Vec2 g{slice_value(s, p.x, 1), slice_value(s, p.x, 2)};
    if (th != 0.0) {
        g[0] = (1 - th) * g[0] + th * slice_value(s + 1, p.x, 1);
        g[1] = (1 - th) * g[1] + th * slice_value(s + 1, p.x, 2);
    }
    return g;
}

SpaceTimeField spectral_gradient(const SpaceTimeField& f, int c) {
    const auto& lat = f.lattice();
    const int n = lat.n();
    const auto& fft = Fft2d::get(n);
    std::vector<GridField> out;
    std::vector<Complex> spec(lat.size());
    for (const auto& g : f.slices) {
        fft.forward_real(g.values.data(), spec.data());
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const int k = lat.wavenumber(c == 0 ? a : b);
                spec[lat.index(a, b)] *= (2 * k == n) ? Complex(0.0) : Complex(0.0, k);
            }
        GridField d(lat);
        fft.backward_real(spec.data(), d.values.data());
        out.push_back(std::move(d));
    }
    return SpaceTimeField(f.t0, f.dt, std::move(out));
}

}  // namespace sspde
