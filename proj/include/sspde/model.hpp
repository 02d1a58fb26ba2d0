#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sspde/kernels.hpp"
#include "sspde/noise.hpp"
#include "sspde/torus.hpp"

namespace sspde {

enum class SymbolTag { Noise, Lolli, X, XNoise, Dumbbell };

struct Symbol {
    SymbolTag tag = SymbolTag::Noise;
    int i = 0;          // noise index
    int j = 0;          // lollipop index (dumbbell only)
    int component = 0;  // spatial component (X, XNoise)

    static Symbol noise(int i = 0) { return {SymbolTag::Noise, i, 0, 0}; }
    static Symbol lolli(int i = 0) { return {SymbolTag::Lolli, i, 0, 0}; }
    static Symbol x(int c) { return {SymbolTag::X, 0, 0, c}; }
    static Symbol xnoise(int i, int c) { return {SymbolTag::XNoise, i, 0, c}; }
    static Symbol dumbbell(int i = 0, int j = 0) { return {SymbolTag::Dumbbell, i, j, 0}; }

    double homogeneity(double kappa) const;
    std::string name() const;
};

struct GridPoint {
    int slice = 0;
    int i1 = 0;
    int i2 = 0;
};

class Model {
public:
    // Lollipops share one time grid; each noise is either constant in time or
    // lives on that same grid.
    Model(std::vector<SpaceTimeField> noises, std::vector<SpaceTimeField> lollis,
          std::vector<std::vector<double>> renorm, double kappa);

    int n_noises() const { return static_cast<int>(noises_.size()); }
    const SpaceTimeField& noise(int i) const { return noises_.at(static_cast<std::size_t>(i))->field(); }
    const SpaceTimeField& lolli(int i) const { return lollis_.at(static_cast<std::size_t>(i))->field(); }
    const SpectralSeries& noise_series(int i) const { return *noises_.at(static_cast<std::size_t>(i)); }
    const SpectralSeries& lolli_series(int i) const { return *lollis_.at(static_cast<std::size_t>(i)); }
    std::shared_ptr<const SpectralSeries> lolli_series_ptr(int i) const { return lollis_.at(static_cast<std::size_t>(i)); }
    // Spectra of the products lolli_j * noise_i.
    const SpectralSeries& product_series(int i, int j) const;
    double renorm(int i, int j) const { return renorm_.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j)); }
    const std::vector<std::vector<double>>& renorm_matrix() const { return renorm_; }
    double kappa() const { return kappa_; }

    const TorusLattice& lattice() const { return lolli(0).lattice(); }
    double t0() const { return lolli(0).t0; }
    double dt() const { return lolli(0).dt; }
    int n_slices() const { return lolli(0).n_slices(); }

    ParabolicPoint point(const GridPoint& g) const;
    GridPoint grid_point(const ParabolicPoint& p) const;  // throws for off-grid points
    void check(const GridPoint& g) const;

    // Sup-norm bound of the discrete heat residual of lollipop i driven by noise i.
    double lolli_residual(int i) const;

    Model with_renorm(std::vector<std::vector<double>> renorm) const;

private:
    std::vector<std::shared_ptr<const SpectralSeries>> noises_, lollis_;
    mutable std::vector<std::shared_ptr<const SpectralSeries>> products_;
    std::shared_ptr<std::mutex> products_mutex_ = std::make_shared<std::mutex>();
    std::vector<std::vector<double>> renorm_;
    double kappa_;
};

// gPAM model on the time grid t0 + s dt, s < n_slices; the noise is constant in time.
Model make_gpam_model(const GpamNoise& noise, double renorm, double kappa, double t0, double dt,
                      int n_slices);

// Literal realization of Pi_z(symbol) on the model's grid.
SpaceTimeField realize(const Model& model, const GridPoint& z, const Symbol& symbol);
// Sup of the change-of-base-point identity residual. For X and XNoise the sup is
// taken where the torus-minimal displacements are consistent (no wrap between
// z, w and the evaluation point).
double cbp_residual(const Model& model, const GridPoint& z, const GridPoint& w, const Symbol& symbol);
// <Pi_z symbol, phi_z> with phi given as a discrete kernel centred at z.
double pair(const Model& model, const GridPoint& z, const Symbol& symbol, const DiscreteKernel& kernel);
// Pairings at every spatial point of slice s (vector indexed like GridField).
GridField pair_field(const Model& model, int slice, const Symbol& symbol, const DiscreteKernel& kernel);

}  // namespace sspde
