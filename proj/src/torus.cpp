#include "sspde/torus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sspde/fft.hpp"

namespace sspde {

double wrap_coordinate(double x) {
    double r = std::fmod(x, kTwoPi);
    if (r > kPi) r -= kTwoPi;
    if (r <= -kPi) r += kTwoPi;
    return r;
}

Vec2 torus_displacement(const Vec2& a, const Vec2& b) {
    return {wrap_coordinate(a[0] - b[0]), wrap_coordinate(a[1] - b[1])};
}

double torus_distance(const Vec2& a, const Vec2& b) {
    const Vec2 d = torus_displacement(a, b);
    return std::hypot(d[0], d[1]);
}

ParabolicPoint ParabolicPoint::make(double t, double x1, double x2) {
    return ParabolicPoint{t, {wrap_coordinate(x1), wrap_coordinate(x2)}};
}

double parabolic_distance(const ParabolicPoint& z, const ParabolicPoint& w) {
    return std::max(std::sqrt(std::abs(z.t - w.t)), torus_distance(z.x, w.x));
}

bool in_past_ball(const ParabolicPoint& center, double radius, const ParabolicPoint& query) {
    if (!(radius > 0)) throw Error("in_past_ball: radius must be positive");
    return query.t < center.t && parabolic_distance(center, query) < radius;
}

TorusLattice::TorusLattice(int n_spatial) : n_(n_spatial) {
    if (n_spatial < 8 || n_spatial % 2 != 0)
        throw Error("TorusLattice: n_spatial must be even and >= 8, got " + std::to_string(n_spatial));
}

GridField::GridField(TorusLattice lat, double fill) : lattice(lat), values(lat.size(), fill) {}

double GridField::sup_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double GridField::mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

bool GridField::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

SpectralField::SpectralField(TorusLattice lat) : lattice(lat), coeffs(lat.size()) {}

double SpectralField::hermitian_defect() const {
    const int n = lattice.n();
    double d = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const int k1 = lattice.wavenumber(a), k2 = lattice.wavenumber(b);
            d = std::max(d, std::abs(at(-k1, -k2) - std::conj(at(k1, k2))));
        }
    return d;
}

SpectralField fft_forward(const GridField& u) {
    SpectralField out(u.lattice);
    Fft2d::get(u.lattice.n()).forward_real(u.values.data(), out.coeffs.data());
    return out;
}

GridField fft_inverse(const SpectralField& u_hat) {
    GridField out(u_hat.lattice);
    Fft2d::get(u_hat.lattice.n()).backward_real(u_hat.coeffs.data(), out.values.data());
    return out;
}

SpaceTimeField::SpaceTimeField(double t0_, double dt_, std::vector<GridField> s)
    : t0(t0_), dt(dt_), slices(std::move(s)) {
    if (slices.empty()) throw Error("SpaceTimeField: needs at least one slice");
    if (!(dt > 0)) throw Error("SpaceTimeField: dt must be positive");
    for (const auto& g : slices)
        if (g.lattice != slices.front().lattice) throw Error("SpaceTimeField: lattice mismatch");
}

const GridField& SpaceTimeField::slice(int s) const {
    if (constant_in_time()) return slices.front();
    if (s < 0 || s >= n_slices()) throw Error("SpaceTimeField: slice index out of range");
    return slices[static_cast<std::size_t>(s)];
}

int SpaceTimeField::slice_index(double t, double tol) const {
    const double r = (t - t0) / dt;
    const double s = std::round(r);
    if (std::abs(r - s) > tol) throw Error("SpaceTimeField: time is not on the slice grid");
    if (constant_in_time()) return 0;
    if (s < 0 || s >= n_slices()) throw Error("SpaceTimeField: time outside the field's range");
    return static_cast<int>(s);
}

GridField SpaceTimeField::at_time(double t) const {
    if (constant_in_time()) return slices.front();
    const double r = (t - t0) / dt;
    if (r < -1e-9 || r > n_slices() - 1 + 1e-9) throw Error("SpaceTimeField: time outside range");
    int s = std::clamp(static_cast<int>(std::floor(r)), 0, n_slices() - 1);
    if (s == n_slices() - 1) return slices.back();
    const double w = r - s;
    GridField g(lattice());
    const auto& a = slices[static_cast<std::size_t>(s)].values;
    const auto& b = slices[static_cast<std::size_t>(s) + 1].values;
    for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = (1 - w) * a[i] + w * b[i];
    return g;
}

double SpaceTimeField::sup_norm() const {
    double m = 0.0;
    for (const auto& g : slices) m = std::max(m, g.sup_norm());
    return m;
}

namespace {
void put_le(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

double get_le(std::istream& is) {
    std::uint64_t bits;
    is.read(reinterpret_cast<char*>(&bits), sizeof bits);
    if (!is) throw Error("read_dump: truncated payload");
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}
}  // namespace

void write_dump(std::ostream& os, const SpaceTimeField& f) {
    std::ostringstream header;
    header.precision(17);
    header << "SSPDE1 " << f.lattice().n() << ' ' << f.t0 << ' ' << f.dt << ' ' << f.n_slices()
           << '\n';
    os << header.str();
    for (const auto& g : f.slices)
        for (double v : g.values) put_le(os, v);
}

SpaceTimeField read_dump(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error("read_dump: missing header");
    std::istringstream h(line);
    std::string magic;
    int n = 0, ns = 0;
    double t0 = 0, dt = 0;
    h >> magic >> n >> t0 >> dt >> ns;
    if (magic != "SSPDE1" || !h || ns < 1) throw Error("read_dump: bad header");
    TorusLattice lat(n);
    std::vector<GridField> slices;
    slices.reserve(static_cast<std::size_t>(ns));
    for (int s = 0; s < ns; ++s) {
        GridField g(lat);
        for (auto& v : g.values) v = get_le(is);
        slices.push_back(std::move(g));
    }
    return SpaceTimeField(t0, dt, std::move(slices));
}

void write_dump_file(const std::string& path, const SpaceTimeField& f) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw Error("cannot open " + tmp);
        write_dump(os, f);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot rename " + tmp);
}

}  // namespace sspde
