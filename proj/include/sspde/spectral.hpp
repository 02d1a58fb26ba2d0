#pragma once

#include <vector>

#include "sspde/torus.hpp"

namespace sspde {

// phi_k(z) = sum_j z^j / (j+k)!, so phi_0 = exp and phi_{k+1}(z) = (phi_k(z) - 1/k!) / z.
double phi_function(int k, double z);

// |k|^2 per FFT slot.
std::vector<double> laplacian_symbol(const TorusLattice& lat);

// 1 inside the 2/3-rule band |k_c| <= n/3, else 0.
std::vector<double> dealias_mask(const TorusLattice& lat);

// Exact one-step propagator for (d/dt - Lap + m^2) u = f with f linear in time
// across the step: u+ = E u + Wa f(t) + Wb f(t+dt), per mode.
struct HeatStep {
    std::vector<double> decay, wa, wb;
    HeatStep(const TorusLattice& lat, double mass, double dt);
};

}  // namespace sspde
