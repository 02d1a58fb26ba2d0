#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "sspde/calculus.hpp"
#include "sspde/kernels.hpp"
#include "sspde/model.hpp"

namespace sspde {

// Depth of the truncated semigroup: phi^l = psi^{l/2} * ... * psi^{l/2^D} in units of the top scale.
inline constexpr int kReconstructionDepth = kDepthCap;

// A base-point family z -> G_z of the form
//   G_z(w) = sum_a c_a(z) F_a(w) + sum_b d_b(z) (x_w - x_z)_{c_b} F_b(w)
// with coefficient fields on a common space-time grid.
class LocalFamily {
public:
    struct Term {
        SpaceTimeField coefficient;                 // c(z) on the family grid
        std::shared_ptr<const SpectralSeries> base;  // F
        int moment = -1;                             // spatial component c_b, or -1 for a plain term
        std::string label;
    };
    struct Certificate {
        double theta = 0.0;
        double gamma = 0.0;
        double C = 0.0;
    };

    LocalFamily(double t0, double dt, TorusLattice lattice, int n_slices);

    void add_term(SpaceTimeField coefficient, const SpaceTimeField& base, int moment = -1, std::string label = "");
    void add_term(SpaceTimeField coefficient, std::shared_ptr<const SpectralSeries> base, int moment = -1,
                  std::string label = "");
    void add_certificate(double theta, double gamma, double C);

    // a * this + b * other (terms concatenated with scaled coefficients).
    LocalFamily combine(double a, const LocalFamily& other, double b) const;

    // Literal G_z(w) for grid points z and w of the family grid.
    double evaluate(const GridPoint& z, const GridPoint& w) const;

    const std::vector<Term>& terms() const { return terms_; }
    const std::vector<Certificate>& certificate() const { return cert_; }
    double t0() const { return t0_; }
    double dt() const { return dt_; }
    const TorusLattice& lattice() const { return lattice_; }
    int n_slices() const { return n_slices_; }
    ParabolicPoint point(const GridPoint& g) const;
    GridPoint grid_point(const ParabolicPoint& p) const;

private:
    double t0_, dt_;
    TorusLattice lattice_;
    int n_slices_;
    std::vector<Term> terms_;
    std::vector<Certificate> cert_;
};

// G_z = f for every z.
LocalFamily constant_family(const SpaceTimeField& f, const SpaceTimeField& grid);
// G_z = u(z) 1: the value of u frozen at the base point.
LocalFamily frozen_family(const SpaceTimeField& u);
// G_z = sigma(u(z)) Xi + sigma'sigma(u(z)) (lolli - lolli(z)) Xi - sigma'sigma(u(z)) C
//       + sigma'(u(z)) u_X(z) . (x - x_z) Xi, on the time grid of uf.
LocalFamily product_family(const UField& uf, const SpaceTimeField& noise, double renorm, double kappa);

struct ReconstructionReport {
    double value = 0.0;        // Lambda_{N,L}[G](z) as a sum over levels
    double telescoping = 0.0;  // <<G_., phi^{L/2^N}_.>, phi^{L,N}_z> - <G_z, phi^L_z>
    double diagonal = 0.0;     // <G_z, phi^L_z>
    std::vector<double> levels;
    double L = 0.0;
    int N = 0;
    nlohmann::json to_json() const;
};

ReconstructionReport lambda_NL(const LocalFamily& family, const ParabolicPoint& z, double L, int N,
                               const MollifierKernel& psi = MollifierKernel::canonical());

// <R G, phi^L_z> = Lambda_{N,L}[G](z) + <G_z, phi^L_z> for the product family.
double reconstruct_product(const Model& model, const Nonlinearity& sigma, const UField& uf, const ParabolicPoint& z,
                           double L, int N, const MollifierKernel& psi = MollifierKernel::canonical());

// <f, phi^L_z> with phi^L the depth-D semigroup kernel (literal quadrature oracle).
double semigroup_pairing(const SpaceTimeField& f, const ParabolicPoint& z, double L,
                         const MollifierKernel& psi = MollifierKernel::canonical());

struct ErrorScalingRow {
    double L = 0.0;
    double abs_error = 0.0;
    int basepoint_index = 0;
};

struct ErrorScalingReport {
    std::vector<ErrorScalingRow> rows;
    std::vector<double> scales;
    std::vector<double> mean_error;  // per scale
    std::vector<double> max_error;
    double exponent = 0.0;       // log-log slope of mean_error
    double exponent_max = 0.0;   // log-log slope of max_error
    double target = 0.0;         // gamma - 1 - kappa = 1 - 3 kappa
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

// |<sigma(u) Xi - sigma'sigma(u) C - G_z, psi^L_z>| at random grid base points of the last
// slice of uf, fitted against L.
ErrorScalingReport error_scaling_study(const Model& model, const Nonlinearity& sigma, const UField& uf,
                                       const std::vector<double>& scales, int basepoints, std::uint64_t seed = 7,
                                       const MollifierKernel& psi = MollifierKernel::canonical());

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sspde
