#include "sspde/spectral.hpp"

#include <cmath>

namespace sspde {

double phi_function(int k, double z) {
    if (std::abs(z) < 1.0) {
        double fact = 1.0;
        for (int i = 2; i <= k; ++i) fact *= i;
        double term = 1.0 / fact, sum = 0.0;
        for (int j = 0; j < 30; ++j) {
            sum += term;
            term *= z / (j + k + 1);
        }
        return sum;
    }
    double p = std::exp(z), fact = 1.0;
    for (int i = 0; i < k; ++i) {
        if (i > 0) fact *= i;
        p = (p - 1.0 / fact) / z;
    }
    return p;
}

std::vector<double> laplacian_symbol(const TorusLattice& lat) {
    const int n = lat.n();
    std::vector<double> out(lat.size());
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const double k1 = lat.wavenumber(a), k2 = lat.wavenumber(b);
            out[lat.index(a, b)] = k1 * k1 + k2 * k2;
        }
    return out;
}

std::vector<double> dealias_mask(const TorusLattice& lat) {
    const int n = lat.n();
    std::vector<double> out(lat.size());
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const int k1 = lat.wavenumber(a), k2 = lat.wavenumber(b);
            out[lat.index(a, b)] = (3 * std::abs(k1) <= n && 3 * std::abs(k2) <= n) ? 1.0 : 0.0;
        }
    return out;
}

HeatStep::HeatStep(const TorusLattice& lat, double mass, double dt) {
    const auto k2 = laplacian_symbol(lat);
    decay.resize(k2.size());
    wa.resize(k2.size());
    wb.resize(k2.size());
    for (std::size_t i = 0; i < k2.size(); ++i) {
        const double z = -(k2[i] + mass * mass) * dt;
        const double p1 = phi_function(1, z), p2 = phi_function(2, z);
        decay[i] = std::exp(z);
        wb[i] = dt * p2;
        wa[i] = dt * (p1 - p2);
    }
}

}  // namespace sspde
