#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sspde/kernels.hpp"
#include "sspde/model.hpp"
#include "sspde/nonlinearity.hpp"

namespace sspde {

// Space-time region: a time slab [t_min, t_max] over the whole torus,
// optionally intersected with the past parabolic ball B(center, radius).
struct Region {
    double t_min = 0.0;
    double t_max = 0.0;
    std::optional<ParabolicPoint> center;
    double radius = 0.0;

    static Region slab(double a, double b) { return Region{a, b, std::nullopt, 0.0}; }
    static Region past_ball(const ParabolicPoint& z, double r);
    bool contains(const ParabolicPoint& p) const;
};

// Stratified pair sampling: `basepoints` random base points, distances in
// dyadic bins d_max 2^{-b}, b < bins, `directions` directions per bin.
struct SamplingPlan {
    int basepoints = 64;
    int directions = 16;
    int bins = 8;
    double d_max = 0.5;
    long pair_cap = 1L << 20;
    std::uint64_t seed = 1;
};

struct SemiNormReport {
    double value = 0.0;
    long n_samples = 0;
    int n_basepoints = 0;
    int n_scales = 0;
    int n_kernels = 0;
    ParabolicPoint witness_z{};
    ParabolicPoint witness_w{};
    double witness_L = 0.0;
    std::string witness_kernel;

    nlohmann::json to_json() const;
};

// Point pairs (z, w) in the region drawn by the plan; the witness of any sup
// over these pairs is reproducible from (region, plan).
std::vector<std::pair<ParabolicPoint, ParabolicPoint>> sample_pairs(const Region& region, const SamplingPlan& plan);

SemiNormReport holder_seminorm(const FieldEvaluator& u, double alpha, const Region& region,
                               const SamplingPlan& plan = {});
// Dense sup over all distinct grid-point pairs of slices [s0, s1] (oracle; small n only).
double holder_seminorm_dense(const SpaceTimeField& u, double alpha, int s0, int s1);

SpaceTimeField regularize(const SpaceTimeField& u, const MollifierKernel& psi, double L, double t_from,
                          double t_to);

struct OrderBoundReport {
    std::vector<Symbol> symbols;
    std::vector<SemiNormReport> values;
    double C1 = 0.0;
    double C2 = 0.0;
    nlohmann::json to_json() const;
};

struct OrderBoundOptions {
    double t_min = 0.0;
    double t_max = 0.0;
    std::vector<double> scales;
    std::vector<MollifierKernel> kernels;
    int basepoints = 64;
    int max_slices = 4;
    std::uint64_t seed = 1;
};

SemiNormReport order_bound(const Model& model, const Symbol& symbol, const OrderBoundOptions& opt);
OrderBoundReport order_bounds(const Model& model, const OrderBoundOptions& opt);

// ---- U expansion and generalized gradient ----

class UField {
public:
    UField(const SpaceTimeField& u, const SpaceTimeField& lolli, Nonlinearity sigma);

    const SpaceTimeField& u() const { return u_->field(); }
    const SpaceTimeField& lolli() const { return lolli_->field(); }
    const SpaceTimeField& sigma_u() const { return sig_; }
    const SpaceTimeField& dsigma_u() const { return dsig_; }
    const SpaceTimeField& dsigma_sigma_u() const { return dsig_sig_; }
    const SpaceTimeField& u_x(int c) const { return ux_[c]->field(); }
    const Nonlinearity& sigma() const { return sigma_; }
    std::shared_ptr<const SpectralSeries> u_series() const { return u_; }
    std::shared_ptr<const SpectralSeries> lolli_series() const { return lolli_; }

    double u_at(const ParabolicPoint& p) const { return ue_.value(p); }
    double lolli_at(const ParabolicPoint& p) const { return le_.value(p); }
    // U_z(w) = u(w) - u(z) - sigma(u(z)) (lolli(w) - lolli(z)).
    double U(const ParabolicPoint& z, const ParabolicPoint& w) const;
    // U_z(w) - u_X(z) . (x_w - x_z)
    double U_defect(const ParabolicPoint& z, const ParabolicPoint& w) const;
    Vec2 gradient(const ParabolicPoint& z) const;

private:
    std::shared_ptr<const SpectralSeries> u_, lolli_;
    std::shared_ptr<const SpectralSeries> ux_[2];
    FieldEvaluator ue_, le_, uxe0_, uxe1_;
    Nonlinearity sigma_;
    SpaceTimeField sig_, dsig_, dsig_sig_;
};

// lolli is resampled onto u's time grid by linear interpolation.
UField build_ufield(const SpaceTimeField& u, const Model& model, const Nonlinearity& sigma, int noise_index = 0);
Vec2 generalized_gradient(const UField& uf, const ParabolicPoint& z);

SemiNormReport gamma_seminorm_U(const UField& uf, double gamma, const Region& region, const SamplingPlan& plan = {});
// sup |U_z(w)| over sampled pairs with d(z, w) <= plan.d_max.
SemiNormReport sup_norm_U(const UField& uf, const Region& region, const SamplingPlan& plan = {});

struct WeightedLevel {
    double tau = 0.0;
    double d_tau = 0.0;
    double unweighted = 0.0;
    double weighted = 0.0;
};

struct WeightedReport {
    double value = 0.0;
    double unweighted = 0.0;  // [U]_gamma over the union of all sampled pairs
    std::vector<WeightedLevel> levels;
};

WeightedReport weighted_seminorm_U(const UField& uf, double gamma, double a, double b, int levels = 6,
                                   const SamplingPlan& plan = {});

struct GradientRelationReport {
    Vec2 grad_uL{};
    Vec2 u_x{};
    Vec2 lolli_term{};
    double E = 0.0;            // |E_z^L|
    double bound = 0.0;        // [U]_{gamma, B(z,L)} L^{gamma-1}
    double U_seminorm = 0.0;
    double ibp_error = 0.0;    // max_ij |int d_i phi (xbar_j - x_j) - delta_ij|
    double grad_mass = 0.0;    // max_i |int d_i phi|
};

GradientRelationReport gradient_relation_check(const UField& uf, const ParabolicPoint& z, double L, double gamma,
                                               const SamplingPlan& plan = {});

struct GradientBoundsReport {
    double worst_margin = 0.0;   // min over sampled z of rhs - |u_X(z)|
    double max_ux = 0.0;
    double U_gamma = 0.0;
    double U_sup = 0.0;
    double interpolation_rhs = 0.0;  // 2 [U]^{1/gamma} |U|^{1 - 1/gamma}
    double interpolation_ratio = 0.0;
    int n_points = 0;
};

GradientBoundsReport gradient_bounds_check(const UField& uf, const Region& region, double r, double gamma,
                                           const SamplingPlan& plan = {});

}  // namespace sspde
