#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sspde/torus.hpp"

namespace sspde {

inline constexpr int kDepthCap = 5;

// b(s) = exp(-1/(1-s^2)) on (-1, 1), zero outside.
double bump(double s);
double bump_derivative(double s);
double bump_mass();  // int b
// Normalized cosine transform B(q) = int b(s) cos(qs) ds / int b and its q-derivative.
double bump_transform(double q);
double bump_transform_derivative(double q);

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights);

// Test function in the class of smooth, nonnegative bumps supported in the
// past parabolic unit ball: a product rho(tau) eta1(x1) eta2(x2) with tau = -t,
// rho supported on (0, time_extent) and eta_c on (-a_c, a_c).
class MollifierKernel {
public:
    static constexpr double kCanonicalHalfWidth = 0.7;

    MollifierKernel(double a1 = kCanonicalHalfWidth, double a2 = kCanonicalHalfWidth,
                    double time_extent = 1.0, std::string id = "canonical");

    static MollifierKernel canonical();
    // Canonical bump plus three anisotropic perturbations.
    static std::vector<MollifierKernel> family();

    double value(double t, double x1, double x2) const;
    double time_density(double tau) const;
    double spatial_factor(int c, double x) const;
    double spatial_factor_derivative(int c, double x) const;
    double sup() const;

    double half_width(int c) const { return a_[c]; }
    double time_extent() const { return te_; }
    const std::string& id() const { return id_; }

private:
    double a_[2];
    double te_;
    std::string id_;
};

// phi_z^L(zbar) = L^{-4} phi((tbar - t)/L^2, (xbar - x)/L).
class ScaledKernel {
public:
    ScaledKernel(const MollifierKernel& psi, const ParabolicPoint& z, double L);

    double value(const ParabolicPoint& zbar) const;
    // Derivative with respect to the base point's spatial coordinate x_c.
    double base_gradient(const ParabolicPoint& zbar, int c) const;
    double sup() const;
    double scale() const { return L_; }
    const ParabolicPoint& center() const { return z_; }
    const MollifierKernel& profile() const { return psi_; }

    // Tensor Gauss-Legendre integral over the support of f(zbar) * phi or its base gradient.
    double mass() const;
    // int d_{x_i} phi^L(z - zbar) (xbar_j - x_j) dzbar, and int d_{x_i} phi.
    double ibp_moment(int i, int j) const;
    double gradient_mass(int i) const;

private:
    MollifierKernel psi_;
    ParabolicPoint z_;
    double L_;
};

ScaledKernel scale_kernel(const MollifierKernel& psi, const ParabolicPoint& z, double L);

// A test function discretized on a lattice and slice spacing: spatial part as a
// separable Fourier multiplier, temporal part as weights on slice lags (exact
// integrals of the time density against the piecewise-linear hat basis).
class DiscreteKernel {
public:
    struct Axis {
        std::vector<double> value;       // multiplier P(k) per FFT slot
        std::vector<double> derivative;  // dP/dk per FFT slot
    };

    TorusLattice lattice{8};
    double dt = 1.0;
    double scale = 0.0;
    std::vector<double> time_weights{1.0};
    Axis axis[2];
    std::string label;

    static DiscreteKernel identity(const TorusLattice& lat, double dt);
    static DiscreteKernel from_mollifier(const MollifierKernel& psi, double L, const TorusLattice& lat,
                                         double dt);
    // Space-time convolution of two kernels.
    DiscreteKernel compose(const DiscreteKernel& other) const;

    int max_lag() const { return static_cast<int>(time_weights.size()) - 1; }
    double time_mass() const;
    double mass() const;
    double multiplier(int a, int b) const { return axis[0].value[a] * axis[1].value[b]; }
    bool equals(const DiscreteKernel& o, double tol) const;
};

// phi^{L,n} = psi^{L/2} * ... * psi^{L/2^n}; n = 0 is the identity.
DiscreteKernel semigroup_kernel(const MollifierKernel& psi, double L, int n, const TorusLattice& lat,
                                double dt);

// Fourier coefficients of every slice of a field, computed on demand.
class SpectralSeries {
public:
    explicit SpectralSeries(SpaceTimeField field);

    const std::vector<Complex>& slice(int s) const;
    const SpaceTimeField& field() const { return field_; }
    const TorusLattice& lattice() const { return field_.lattice(); }
    bool constant_in_time() const { return field_.constant_in_time(); }

private:
    SpaceTimeField field_;
    mutable std::vector<std::shared_ptr<const std::vector<Complex>>> cache_;
    mutable std::mutex mutex_;
};

enum class KernelMode { Value, Moment, Gradient };

// Spectrum of (kernel applied to f) at slice s. Value: int f(z + y) phi(y) dy;
// Moment c: int y_c f(z + y) phi(y) dy; Gradient c: d_{x_c} of the Value field.
std::vector<Complex> convolve_spectrum(const DiscreteKernel& k, const SpectralSeries& f, int s,
                                       KernelMode mode = KernelMode::Value, int c = 0);
GridField convolve(const DiscreteKernel& k, const SpectralSeries& f, int s,
                   KernelMode mode = KernelMode::Value, int c = 0);
// Same operation applied to a spectrum that is already time-aggregated.
void apply_multiplier(const DiscreteKernel& k, std::vector<Complex>& spec, KernelMode mode, int c);

// Value of the trigonometric interpolant with coefficients `spec` at a grid point.
double spectral_value_at(const TorusLattice& lat, const std::vector<Complex>& spec, int i1, int i2);

// Point evaluation: trigonometric interpolation in space, linear in time.
class FieldEvaluator {
public:
    explicit FieldEvaluator(std::shared_ptr<const SpectralSeries> series);
    explicit FieldEvaluator(const SpaceTimeField& field);

    double value(const ParabolicPoint& p) const;
    Vec2 gradient(const ParabolicPoint& p) const;
    double t_min() const;
    double t_max() const;
    const SpectralSeries& series() const { return *series_; }

private:
    double slice_value(int s, const Vec2& x, int deriv) const;
    std::shared_ptr<const SpectralSeries> series_;
};

// Spectral spatial gradient of every slice.
SpaceTimeField spectral_gradient(const SpaceTimeField& f, int c);

}  // namespace sspde
