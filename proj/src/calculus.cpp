#include "sspde/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sspde/parallel.hpp"
#include "sspde/rng.hpp"

namespace sspde {

namespace {

nlohmann::json point_json(const ParabolicPoint& p) { return {p.t, p.x[0], p.x[1]}; }

ParabolicPoint shifted(const ParabolicPoint& z, double dtime, double d1, double d2) {
    return ParabolicPoint::make(z.t + dtime, z.x[0] + d1, z.x[1] + d2);
}

// Sup of ratio(i) over indices; ties resolve to the lowest index.
template <class F>
std::pair<double, std::size_t> arg_sup(std::size_t n, F&& ratio) {
    const auto vals = parallel_map<double>(n, ratio);
    double best = 0.0;
    std::size_t at = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (vals[i] > best) {
            best = vals[i];
            at = i;
        }
    return {best, at};
}

std::vector<ParabolicPoint> distinct_bases(const std::vector<std::pair<ParabolicPoint, ParabolicPoint>>& pairs) {
    std::vector<ParabolicPoint> out;
    for (const auto& [z, w] : pairs) {
        (void)w;
        if (out.empty() || out.back().t != z.t || out.back().x != z.x) out.push_back(z);
    }
    return out;
}

}  // namespace

Region Region::past_ball(const ParabolicPoint& z, double r) {
    if (!(r > 0)) throw Error("Region: radius must be positive");
    return Region{z.t - r * r, z.t, z, r};
}

bool Region::contains(const ParabolicPoint& p) const {
    if (p.t < t_min || p.t > t_max) return false;
    if (center) return p.t <= center->t && parabolic_distance(*center, p) < radius;
    return true;
}

nlohmann::json SemiNormReport::to_json() const {
    return {{"value", value},
            {"n_samples", n_samples},
            {"n_basepoints", n_basepoints},
            {"n_scales", n_scales},
            {"n_kernels", n_kernels},
            {"witness_z", point_json(witness_z)},
            {"witness_w", point_json(witness_w)},
            {"witness_L", witness_L},
            {"witness_kernel", witness_kernel}};
}

std::vector<std::pair<ParabolicPoint, ParabolicPoint>> sample_pairs(const Region& region, const SamplingPlan& plan) {
    if (region.t_max < region.t_min) throw Error("sample_pairs: empty time range");
    if (plan.basepoints < 1 || plan.bins < 1 || plan.directions < 1 || !(plan.d_max > 0))
        throw Error("sample_pairs: invalid sampling plan");
    const CounterRng rng(plan.seed);
    const long per_base = std::max(1L, plan.pair_cap / plan.basepoints);
    const int dirs = static_cast<int>(std::clamp<long>(per_base / plan.bins, 1, plan.directions));

    std::vector<std::pair<ParabolicPoint, ParabolicPoint>> out;
    for (int b = 0; b < plan.basepoints; ++b) {
        const auto ub = static_cast<std::uint64_t>(b);
        std::optional<ParabolicPoint> z;
        for (std::uint64_t attempt = 0; attempt < 64 && !z; ++attempt) {
            ParabolicPoint p;
            if (region.center) {
                const auto& c = *region.center;
                const double r = region.radius;
                p = shifted(c, -r * r * rng.uniform({1, ub, attempt, 0}), r * (2 * rng.uniform({1, ub, attempt, 1}) - 1),
                            r * (2 * rng.uniform({1, ub, attempt, 2}) - 1));
                p.t = std::clamp(p.t, region.t_min, region.t_max);
            } else {
                p = ParabolicPoint::make(region.t_min + (region.t_max - region.t_min) * rng.uniform({1, ub, attempt, 0}),
                                         kTwoPi * rng.uniform({1, ub, attempt, 1}),
                                         kTwoPi * rng.uniform({1, ub, attempt, 2}));
            }
            if (region.contains(p)) z = p;
        }
        if (!z) continue;
        for (int bin = 0; bin < plan.bins; ++bin) {
            const double d = plan.d_max * std::ldexp(1.0, -bin);
            for (int m = 0; m < dirs; ++m) {
                const auto key = static_cast<std::uint64_t>(bin * dirs + m);
                const double theta = kTwoPi * (m + rng.uniform({2, ub, key, 0})) / dirs;
                const double v = rng.uniform({2, ub, key, 1});
                const double sign = rng.uniform({2, ub, key, 2}) < 0.5 ? -1.0 : 1.0;
                // Alternate between spatially dominated and time dominated offsets.
                const double rx = (m % 2 == 0) ? d : d * v;
                const double dtime = (m % 2 == 0) ? (d * v) * (d * v) : d * d;
                ParabolicPoint w = shifted(*z, sign * dtime, rx * std::cos(theta), rx * std::sin(theta));
                if (!region.contains(w)) w.t = z->t - sign * dtime;
                if (!region.contains(w)) continue;
                out.emplace_back(*z, w);
            }
        }
    }
    return out;
}

SemiNormReport holder_seminorm(const FieldEvaluator& u, double alpha, const Region& region, const SamplingPlan& plan) {
    Region r = region;
    r.t_min = std::max(r.t_min, u.t_min());
    r.t_max = std::min(r.t_max, u.t_max());
    const auto pairs = sample_pairs(r, plan);
    const auto [best, at] = arg_sup(pairs.size(), [&](std::size_t i) {
        const auto& [z, w] = pairs[i];
        const double d = parabolic_distance(z, w);
        if (!(d > 0)) return 0.0;
        return std::abs(u.value(w) - u.value(z)) / std::pow(d, alpha);
    });
    SemiNormReport rep;
    rep.value = best;
    rep.n_samples = static_cast<long>(pairs.size());
    rep.n_basepoints = static_cast<int>(distinct_bases(pairs).size());
    rep.n_scales = plan.bins;
    if (!pairs.empty()) {
        rep.witness_z = pairs[at].first;
        rep.witness_w = pairs[at].second;
    }
    return rep;
}

double holder_seminorm_dense(const SpaceTimeField& u, double alpha, int s0, int s1) {
    if (s0 < 0 || s1 >= u.n_slices() || s1 < s0) throw Error("holder_seminorm_dense: bad slice range");
    const auto& lat = u.lattice();
    const int n = lat.n();
    std::vector<ParabolicPoint> pts;
    std::vector<double> vals;
    for (int s = s0; s <= s1; ++s)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                pts.push_back(ParabolicPoint::make(u.time(s), lat.coordinate(a), lat.coordinate(b)));
                vals.push_back(u.slice(s)(a, b));
            }
    const auto rows = parallel_map<double>(pts.size(), [&](std::size_t i) {
        double m = 0.0;
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double d = parabolic_distance(pts[i], pts[j]);
            if (d > 0) m = std::max(m, std::abs(vals[i] - vals[j]) / std::pow(d, alpha));
        }
        return m;
    });
    return rows.empty() ? 0.0 : *std::max_element(rows.begin(), rows.end());
}

SpaceTimeField regularize(const SpaceTimeField& u, const MollifierKernel& psi, double L, double t_from,
                          double t_to) {
    if (!(L > 0)) throw Error("regularize: L must be positive");
    if (t_from < 4 * L * L) throw Error("regularize: time range violation, need t >= 4 L^2");
    const DiscreteKernel k = DiscreteKernel::from_mollifier(psi, L, u.lattice(), u.dt);
    const SpectralSeries series(u);
    const int s0 = u.constant_in_time() ? 0 : static_cast<int>(std::ceil((t_from - u.t0) / u.dt - 1e-9));
    const int s1 = u.constant_in_time() ? 0 : static_cast<int>(std::floor((t_to - u.t0) / u.dt + 1e-9));
    if (s1 < s0) throw Error("regularize: empty time range");
    std::vector<GridField> out;
    for (int s = s0; s <= s1; ++s) out.push_back(convolve(k, series, s));
    return SpaceTimeField(u.constant_in_time() ? t_from : u.time(s0), u.dt, std::move(out));
}

nlohmann::json OrderBoundReport::to_json() const {
    nlohmann::json j;
    j["C1"] = C1;
    j["C2"] = C2;
    for (std::size_t i = 0; i < symbols.size(); ++i) j["symbols"][symbols[i].name()] = values[i].to_json();
    return j;
}

namespace {

// Steepest ascent of |g| over the 8-neighbourhood; pairings vary on the kernel
// scale, so a sampled basepoint is moved to the nearby local maximum.
void climb_to_local_max(const GridField& g, int& a, int& b) {
    const int n = g.lattice.n();
    for (;;) {
        int ba = a, bb = b;
        double best = std::abs(g(a, b));
        for (int da = -1; da <= 1; ++da)
            for (int db = -1; db <= 1; ++db) {
                const int ia = (a + da + n) % n, ib = (b + db + n) % n;
                const double v = std::abs(g(ia, ib));
                if (v > best) {
                    best = v;
                    ba = ia;
                    bb = ib;
                }
            }
        if (ba == a && bb == b) return;
        a = ba;
        b = bb;
    }
}

}  // namespace

SemiNormReport order_bound(const Model& model, const Symbol& symbol, const OrderBoundOptions& opt) {
    if (opt.scales.empty()) throw Error("order_bound: no scales");
    const double kappa = model.kappa();
    SemiNormReport rep;
    rep.n_scales = static_cast<int>(opt.scales.size());

    if (symbol.tag == SymbolTag::Lolli) {
        // Positive homogeneity: increment ratio over pairs at the requested scales.
        const double dmax = *std::max_element(opt.scales.begin(), opt.scales.end());
        const double dmin = *std::min_element(opt.scales.begin(), opt.scales.end());
        SamplingPlan plan;
        plan.basepoints = opt.basepoints;
        plan.d_max = dmax;
        plan.bins = 1 + static_cast<int>(std::lround(std::log2(dmax / dmin)));
        plan.seed = opt.seed;
        const Region region =
            Region::slab(std::max(opt.t_min, model.t0()), std::min(opt.t_max, model.t0() + (model.n_slices() - 1) * model.dt()));
        const FieldEvaluator ev(model.lolli_series_ptr(symbol.i));
        auto r = holder_seminorm(ev, symbol.homogeneity(kappa), region, plan);
        r.n_scales = rep.n_scales;
        r.n_kernels = 1;
        return r;
    }

    const auto kernels = opt.kernels.empty() ? MollifierKernel::family() : opt.kernels;
    rep.n_kernels = static_cast<int>(kernels.size());
    const bool lagged = symbol.tag == SymbolTag::Dumbbell ||
                        ((symbol.tag == SymbolTag::Noise || symbol.tag == SymbolTag::XNoise) &&
                         !model.noise_series(symbol.i).constant_in_time());
    const auto& lat = model.lattice();
    const int n = lat.n();
    const CounterRng rng(opt.seed);
    for (std::size_t ki = 0; ki < kernels.size(); ++ki) {
        for (std::size_t li = 0; li < opt.scales.size(); ++li) {
            const double L = opt.scales[li];
            const auto K = DiscreteKernel::from_mollifier(kernels[ki], L, lat, model.dt());
            std::vector<int> valid;
            for (int s = 0; s < model.n_slices(); ++s) {
                const double t = model.t0() + s * model.dt();
                if (t < opt.t_min - 1e-12 || t > opt.t_max + 1e-12) continue;
                if (lagged && s - K.max_lag() < 0) continue;
                valid.push_back(s);
            }
            if (valid.empty()) continue;
            const int ns = std::min<int>(opt.max_slices, static_cast<int>(valid.size()));
            const double factor = std::pow(L, -symbol.homogeneity(kappa));
            for (int q = 0; q < ns; ++q) {
                const int s = valid[valid.size() - 1 - static_cast<std::size_t>(q) * (valid.size() - 1) / std::max(1, ns - 1)];
                const GridField g = pair_field(model, s, symbol, K);
                const int per = std::max(1, opt.basepoints / ns);
                for (int m = 0; m < per; ++m) {
                    const auto key = static_cast<std::uint64_t>(m);
                    int a = std::min(n - 1, static_cast<int>(n * rng.uniform({ki, li, static_cast<std::uint64_t>(s), key, 0})));
                    int b = std::min(n - 1, static_cast<int>(n * rng.uniform({ki, li, static_cast<std::uint64_t>(s), key, 1})));
                    climb_to_local_max(g, a, b);
                    const double v = std::abs(g(a, b)) * factor;
                    ++rep.n_samples;
                    if (v > rep.value) {
                        rep.value = v;
                        rep.witness_z = model.point({s, a, b});
                        rep.witness_w = rep.witness_z;
                        rep.witness_L = L;
                        rep.witness_kernel = kernels[ki].id();
                    }
                }
                rep.n_basepoints += per;
            }
        }
    }
    return rep;
}

OrderBoundReport order_bounds(const Model& model, const OrderBoundOptions& opt) {
    OrderBoundReport rep;
    const int m = model.n_noises();
    for (int i = 0; i < m; ++i) {
        for (const Symbol& s : {Symbol::noise(i), Symbol::lolli(i), Symbol::xnoise(i, 0), Symbol::xnoise(i, 1)}) {
            rep.symbols.push_back(s);
            rep.values.push_back(order_bound(model, s, opt));
            rep.C1 = std::max(rep.C1, rep.values.back().value);
        }
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            rep.symbols.push_back(Symbol::dumbbell(i, j));
            rep.values.push_back(order_bound(model, Symbol::dumbbell(i, j), opt));
            rep.C2 = std::max(rep.C2, rep.values.back().value);
        }
    return rep;
}

// ---------------------------------------------------------------- UField

namespace {

SpaceTimeField resample(const SpaceTimeField& f, const SpaceTimeField& grid) {
    if (f.lattice() != grid.lattice()) throw Error("UField: lattice mismatch");
    if (f.constant_in_time()) return f;
    std::vector<GridField> out;
    for (int s = 0; s < grid.n_slices(); ++s) {
        const double t = grid.time(s);
        if (t < f.t0 - 1e-9 * f.dt || t > f.t_end() + 1e-9 * f.dt)
            throw Error("UField: lollipop does not cover the solution's time range");
        out.push_back(f.at_time(std::clamp(t, f.t0, f.t_end())));
    }
    return SpaceTimeField(grid.t0, grid.dt, std::move(out));
}

SpaceTimeField pointwise(const SpaceTimeField& u, const std::function<double(double)>& f) {
    std::vector<GridField> out;
    for (const auto& g : u.slices) {
        GridField r(g.lattice);
        for (std::size_t k = 0; k < g.values.size(); ++k) r.values[k] = f(g.values[k]);
        out.push_back(std::move(r));
    }
    return SpaceTimeField(u.t0, u.dt, std::move(out));
}

std::shared_ptr<const SpectralSeries> make_ux(const SpaceTimeField& u, const SpaceTimeField& l,
                                              const SpaceTimeField& sig, int c) {
    SpaceTimeField gu = spectral_gradient(u, c);
    const SpaceTimeField gl = spectral_gradient(l, c);
    for (int s = 0; s < gu.n_slices(); ++s) {
        auto& v = gu.slices[static_cast<std::size_t>(s)].values;
        const auto& w = gl.slice(s).values;
        const auto& q = sig.slice(s).values;
        for (std::size_t k = 0; k < v.size(); ++k) v[k] -= q[k] * w[k];
    }
    return std::make_shared<const SpectralSeries>(std::move(gu));
}

}  // namespace

UField::UField(const SpaceTimeField& u, const SpaceTimeField& lolli, Nonlinearity sigma)
    : u_(std::make_shared<const SpectralSeries>(u)),
      lolli_(std::make_shared<const SpectralSeries>(resample(lolli, u))),
      ux_{nullptr, nullptr},
      ue_(u_),
      le_(lolli_),
      uxe0_(u_),
      uxe1_(u_),
      sigma_(std::move(sigma)),
      sig_(pointwise(u, sigma_.f)),
      dsig_(pointwise(u, sigma_.df)),
      dsig_sig_(pointwise(u, [this](double v) { return sigma_.df(v) * sigma_.f(v); })) {
    ux_[0] = make_ux(u, lolli_->field(), sig_, 0);
    ux_[1] = make_ux(u, lolli_->field(), sig_, 1);
    uxe0_ = FieldEvaluator(ux_[0]);
    uxe1_ = FieldEvaluator(ux_[1]);
}

double UField::U(const ParabolicPoint& z, const ParabolicPoint& w) const {
    const double uz = ue_.value(z);
    return ue_.value(w) - uz - sigma_.f(uz) * (le_.value(w) - le_.value(z));
}

double UField::U_defect(const ParabolicPoint& z, const ParabolicPoint& w) const {
    const Vec2 d = torus_displacement(w.x, z.x);
    const Vec2 g = gradient(z);
    return U(z, w) - g[0] * d[0] - g[1] * d[1];
}

Vec2 UField::gradient(const ParabolicPoint& z) const { return {uxe0_.value(z), uxe1_.value(z)}; }

UField build_ufield(const SpaceTimeField& u, const Model& model, const Nonlinearity& sigma, int noise_index) {
    if (u.lattice() != model.lattice()) throw Error("build_ufield: lattice mismatch");
    return UField(u, model.lolli(noise_index), sigma);
}

Vec2 generalized_gradient(const UField& uf, const ParabolicPoint& z) { return uf.gradient(z); }

namespace {

// Base-point quantities shared by all pairs drawn around one base point.
struct BaseCache {
    double u = 0.0, l = 0.0, s = 0.0;
    Vec2 g{};
};

BaseCache base_values(const UField& uf, const ParabolicPoint& z) {
    BaseCache c;
    c.u = uf.u_at(z);
    c.l = uf.lolli_at(z);
    c.s = uf.sigma().f(c.u);
    c.g = uf.gradient(z);
    return c;
}

double U_cached(const UField& uf, const BaseCache& c, const ParabolicPoint& w) {
    return uf.u_at(w) - c.u - c.s * (uf.lolli_at(w) - c.l);
}

double defect_cached(const UField& uf, const BaseCache& c, const ParabolicPoint& z, const ParabolicPoint& w) {
    const Vec2 d = torus_displacement(w.x, z.x);
    return U_cached(uf, c, w) - c.g[0] * d[0] - c.g[1] * d[1];
}

Region clip(const UField& uf, Region r) {
    const auto& u = uf.u();
    if (!u.constant_in_time()) {
        r.t_min = std::max(r.t_min, u.t0);
        r.t_max = std::min(r.t_max, u.t_end());
    }
    return r;
}

// Evaluates f(cache, z, w) for every pair, computing base-point values once per base point.
template <class F>
std::vector<double> over_pairs(const UField& uf, const std::vector<std::pair<ParabolicPoint, ParabolicPoint>>& pairs,
                               F&& f) {
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        if (i == 0 || pairs[i].first.t != pairs[i - 1].first.t || pairs[i].first.x != pairs[i - 1].first.x)
            starts.push_back(i);
    starts.push_back(pairs.size());
    std::vector<double> out(pairs.size());
    parallel_for(starts.size() - 1, [&](std::size_t g) {
        const BaseCache c = base_values(uf, pairs[starts[g]].first);
        for (std::size_t i = starts[g]; i < starts[g + 1]; ++i) out[i] = f(c, pairs[i].first, pairs[i].second);
    });
    return out;
}

SemiNormReport sup_report(const std::vector<std::pair<ParabolicPoint, ParabolicPoint>>& pairs,
                          const std::vector<double>& vals, int bins) {
    SemiNormReport rep;
    rep.n_samples = static_cast<long>(pairs.size());
    rep.n_basepoints = static_cast<int>(distinct_bases(pairs).size());
    rep.n_scales = bins;
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (vals[i] > rep.value) {
            rep.value = vals[i];
            rep.witness_z = pairs[i].first;
            rep.witness_w = pairs[i].second;
        }
    return rep;
}

}  // namespace

SemiNormReport gamma_seminorm_U(const UField& uf, double gamma, const Region& region, const SamplingPlan& plan) {
    const auto pairs = sample_pairs(clip(uf, region), plan);
    const auto vals = over_pairs(uf, pairs, [&](const BaseCache& c, const ParabolicPoint& z, const ParabolicPoint& w) {
        const double d = parabolic_distance(z, w);
        return d > 0 ? std::abs(defect_cached(uf, c, z, w)) / std::pow(d, gamma) : 0.0;
    });
    return sup_report(pairs, vals, plan.bins);
}

SemiNormReport sup_norm_U(const UField& uf, const Region& region, const SamplingPlan& plan) {
    const auto pairs = sample_pairs(clip(uf, region), plan);
    const auto vals = over_pairs(uf, pairs, [&](const BaseCache& c, const ParabolicPoint& z, const ParabolicPoint& w) {
        return parabolic_distance(z, w) <= plan.d_max ? std::abs(U_cached(uf, c, w)) : 0.0;
    });
    return sup_report(pairs, vals, plan.bins);
}

WeightedReport weighted_seminorm_U(const UField& uf, double gamma, double a, double b, int levels,
                                   const SamplingPlan& plan) {
    if (!(b > a) || levels < 1) throw Error("weighted_seminorm_U: need a < b and levels >= 1");
    WeightedReport rep;
    for (int j = 0; j < levels; ++j) {
        WeightedLevel lv;
        lv.tau = a + (b - a) * std::ldexp(1.0, -j);
        lv.d_tau = std::sqrt(lv.tau - a);
        SamplingPlan p = plan;
        p.d_max = std::min(plan.d_max, lv.d_tau);
        p.seed = plan.seed + static_cast<std::uint64_t>(j);
        lv.unweighted = gamma_seminorm_U(uf, gamma, Region::slab(lv.tau, b), p).value;
        lv.weighted = std::pow(lv.d_tau, gamma) * lv.unweighted;
        rep.value = std::max(rep.value, lv.weighted);
        rep.unweighted = std::max(rep.unweighted, lv.unweighted);
        rep.levels.push_back(lv);
    }
    return rep;
}

GradientRelationReport gradient_relation_check(const UField& uf, const ParabolicPoint& z, double L, double gamma,
                                               const SamplingPlan& plan) {
    const auto& u = uf.u();
    if (!(L > 0)) throw Error("gradient_relation_check: L must be positive");
    if (z.t - u.t0 < 4 * L * L && !u.constant_in_time())
        throw Error("gradient_relation_check: time range violation, need 4 L^2 of history");
    const auto& lat = u.lattice();
    const int s = u.slice_index(z.t);
    const double h = lat.spacing();
    int idx[2];
    for (int c = 0; c < 2; ++c) {
        const double a = wrap_coordinate(z.x[static_cast<std::size_t>(c)]) / h;
        if (std::abs(a - std::round(a)) > 1e-9) throw Error("gradient_relation_check: base point is not on the grid");
        idx[c] = static_cast<int>((std::lround(a) % lat.n() + lat.n()) % lat.n());
    }
    const int i1 = idx[0], i2 = idx[1];

    const MollifierKernel psi = MollifierKernel::canonical();
    const auto K = DiscreteKernel::from_mollifier(psi, L, lat, u.dt);
    GradientRelationReport rep;
    const double sz = uf.sigma().f(uf.u_at(z));
    rep.u_x = uf.gradient(z);
    for (int c = 0; c < 2; ++c) {
        rep.grad_uL[static_cast<std::size_t>(c)] =
            spectral_value_at(lat, convolve_spectrum(K, *uf.u_series(), s, KernelMode::Gradient, c), i1, i2);
        rep.lolli_term[static_cast<std::size_t>(c)] =
            sz * spectral_value_at(lat, convolve_spectrum(K, *uf.lolli_series(), s, KernelMode::Gradient, c), i1, i2);
    }
    const double e0 = rep.grad_uL[0] - rep.u_x[0] - rep.lolli_term[0];
    const double e1 = rep.grad_uL[1] - rep.u_x[1] - rep.lolli_term[1];
    rep.E = std::hypot(e0, e1);

    SamplingPlan p = plan;
    p.d_max = L;
    rep.U_seminorm = gamma_seminorm_U(uf, gamma, Region::past_ball(z, L), p).value;
    rep.bound = rep.U_seminorm * std::pow(L, gamma - 1);

    const ScaledKernel phi(psi, z, L);
    for (int i = 0; i < 2; ++i) {
        rep.grad_mass = std::max(rep.grad_mass, std::abs(phi.gradient_mass(i)));
        for (int j = 0; j < 2; ++j)
            rep.ibp_error = std::max(rep.ibp_error, std::abs(phi.ibp_moment(i, j) - (i == j ? 1.0 : 0.0)));
    }
    return rep;
}

GradientBoundsReport gradient_bounds_check(const UField& uf, const Region& region, double r, double gamma,
                                           const SamplingPlan& plan) {
    if (!(r > 0) || !(gamma > 1 && gamma < 2)) throw Error("gradient_bounds_check: need r > 0 and gamma in (1, 2)");
    const Region reg = clip(uf, region);
    auto pairs = sample_pairs(reg, plan);
    const auto bases = distinct_bases(pairs);
    const auto caches = parallel_map<BaseCache>(bases.size(), [&](std::size_t i) { return base_values(uf, bases[i]); });

    // Pairs aligned with u_X(z) at distance rho realize the gradient most efficiently.
    auto aligned = [&](double rho) {
        std::vector<std::pair<ParabolicPoint, ParabolicPoint>> out;
        for (std::size_t i = 0; i < bases.size(); ++i) {
            const Vec2& g = caches[i].g;
            const double norm = std::hypot(g[0], g[1]);
            const Vec2 dir = norm > 0 ? Vec2{g[0] / norm, g[1] / norm} : Vec2{1.0, 0.0};
            const ParabolicPoint w = shifted(bases[i], 0.0, rho * dir[0], rho * dir[1]);
            if (reg.contains(w)) out.emplace_back(bases[i], w);
        }
        return out;
    };

    GradientBoundsReport rep;
    rep.n_points = static_cast<int>(bases.size());
    auto absorb = [&](const std::vector<std::pair<ParabolicPoint, ParabolicPoint>>& ps, double within,
                      double& gam, double& sup_within, double& sup_all) {
        const auto vals = over_pairs(uf, ps, [&](const BaseCache& c, const ParabolicPoint& z, const ParabolicPoint& w) {
            (void)z;
            return std::abs(U_cached(uf, c, w));
        });
        const auto defs = over_pairs(uf, ps, [&](const BaseCache& c, const ParabolicPoint& z, const ParabolicPoint& w) {
            const double d = parabolic_distance(z, w);
            return d > 0 ? std::abs(defect_cached(uf, c, z, w)) / std::pow(d, gamma) : 0.0;
        });
        for (std::size_t i = 0; i < ps.size(); ++i) {
            gam = std::max(gam, defs[i]);
            sup_all = std::max(sup_all, vals[i]);
            if (parabolic_distance(ps[i].first, ps[i].second) <= within * (1 + 1e-12))
                sup_within = std::max(sup_within, vals[i]);
        }
    };

    double gam = 0.0, sup_r = 0.0, sup_all = 0.0;
    absorb(pairs, r, gam, sup_r, sup_all);
    absorb(aligned(r), r, gam, sup_r, sup_all);
    for (const auto& c : caches) rep.max_ux = std::max(rep.max_ux, std::hypot(c.g[0], c.g[1]));
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& c : caches)
        rep.worst_margin = std::min(rep.worst_margin, std::pow(r, gamma - 1) * gam + sup_r / r - std::hypot(c.g[0], c.g[1]));

    // Optimal radius for the interpolation inequality; pairs at that radius join the sample.
    if (gam > 0 && sup_all > 0) {
        const double rstar = std::min(plan.d_max, std::pow(sup_all / gam, 1.0 / gamma));
        double unused = 0.0;
        absorb(aligned(rstar), rstar, gam, unused, sup_all);
    }
    rep.U_gamma = gam;
    rep.U_sup = sup_all;
    rep.interpolation_rhs = 2 * std::pow(gam, 1.0 / gamma) * std::pow(sup_all, 1 - 1.0 / gamma);
    rep.interpolation_ratio = rep.interpolation_rhs > 0 ? rep.max_ux / rep.interpolation_rhs : 0.0;
    return rep;
}

}  // namespace sspde
