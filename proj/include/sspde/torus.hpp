#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace sspde {

inline constexpr int kDim = 2;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Complex = std::complex<double>;
using Vec2 = std::array<double, 2>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reduce a coordinate into (-pi, pi].
double wrap_coordinate(double x);

// Componentwise torus-minimal displacement a - b.
Vec2 torus_displacement(const Vec2& a, const Vec2& b);
double torus_distance(const Vec2& a, const Vec2& b);

struct ParabolicPoint {
    double t = 0.0;
    Vec2 x{0.0, 0.0};

    static ParabolicPoint make(double t, double x1, double x2);
};

double parabolic_distance(const ParabolicPoint& z, const ParabolicPoint& w);
bool in_past_ball(const ParabolicPoint& center, double radius, const ParabolicPoint& query);

class TorusLattice {
public:
    explicit TorusLattice(int n_spatial);

    int n() const { return n_; }
    double spacing() const { return kTwoPi / n_; }
    std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
    double coordinate(int i) const { return i * spacing(); }
    // FFT slot -> signed wavenumber in (-n/2, n/2].
    int wavenumber(int slot) const { return slot <= n_ / 2 ? slot : slot - n_; }
    int slot(int k) const { return k >= 0 ? k : k + n_; }
    std::size_t index(int i1, int i2) const {
        return static_cast<std::size_t>(i1) * n_ + static_cast<std::size_t>(i2);
    }

    bool operator==(const TorusLattice& o) const { return n_ == o.n_; }
    bool operator!=(const TorusLattice& o) const { return n_ != o.n_; }

private:
    int n_;
};

// Values stored row-major with the first index along x1.
struct GridField {
    TorusLattice lattice;
    std::vector<double> values;

    explicit GridField(TorusLattice lat, double fill = 0.0);

    template <class F>
    static GridField from_function(TorusLattice lat, F&& f) {
        GridField g(lat);
        const int n = lat.n();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                g.values[lat.index(i, j)] = f(lat.coordinate(i), lat.coordinate(j));
        return g;
    }

    double& operator()(int i1, int i2) { return values[lattice.index(i1, i2)]; }
    double operator()(int i1, int i2) const { return values[lattice.index(i1, i2)]; }
    double sup_norm() const;
    double mean() const;
    bool all_finite() const;
};

// Coefficients u_k = (2 pi)^-2 <u, e_{-k}> stored in FFT slot order.
struct SpectralField {
    TorusLattice lattice;
    std::vector<Complex> coeffs;

    explicit SpectralField(TorusLattice lat);

    Complex& at(int k1, int k2) { return coeffs[lattice.index(lattice.slot(k1), lattice.slot(k2))]; }
    Complex at(int k1, int k2) const {
        return coeffs[lattice.index(lattice.slot(k1), lattice.slot(k2))];
    }
    // max |c(-k) - conj(c(k))|
    double hermitian_defect() const;
};

SpectralField fft_forward(const GridField& u);
GridField fft_inverse(const SpectralField& u_hat);

struct SpaceTimeField {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<GridField> slices;

    SpaceTimeField(double t0, double dt, std::vector<GridField> slices);

    const TorusLattice& lattice() const { return slices.front().lattice; }
    int n_slices() const { return static_cast<int>(slices.size()); }
    double time(int s) const { return t0 + s * dt; }
    double t_end() const { return time(n_slices() - 1); }
    // A single slice is treated as constant in time.
    bool constant_in_time() const { return slices.size() == 1; }
    const GridField& slice(int s) const;
    // Nearest slice index for time t; throws when t is off the time grid.
    int slice_index(double t, double tol = 1e-9) const;
    GridField at_time(double t) const;
    double sup_norm() const;
};

void write_dump(std::ostream& os, const SpaceTimeField& f);
SpaceTimeField read_dump(std::istream& is);
void write_dump_file(const std::string& path, const SpaceTimeField& f);

}  // namespace sspde
