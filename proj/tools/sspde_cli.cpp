#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sspde/bounds.hpp"
#include "sspde/calculus.hpp"
#include "sspde/experiments.hpp"
#include "sspde/model.hpp"
#include "sspde/parallel.hpp"
#include "sspde/reconstruction.hpp"

using namespace sspde;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::string seeds;
    int threads = 0;
    std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "flat key = value config file");
    app->add_option("--out", c.out, "output directory (overrides `out`)");
    app->add_option("--seeds", c.seeds, "seed list, e.g. 1-8 or 3,5,9 (overrides `seeds`)");
    app->add_option("--threads", c.threads, "worker threads (default: SSPDE_THREADS, else all cores)");
    app->add_option("--set", c.sets, "extra key=value overrides")->take_all();
}

RunConfig load(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig() : RunConfig::load(c.config);
    for (const auto& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!c.out.empty()) cfg.set("out", c.out);
    if (!c.seeds.empty()) cfg.set("seeds", c.seeds);
    if (c.threads > 0) cfg.set("threads", std::to_string(c.threads));
    cfg.validate();
    if (const int t = cfg.get_int("threads"); t > 0) set_thread_count(t);
    return cfg;
}

std::string out_dir(const RunConfig& cfg) {
    const std::string d = cfg.get("out");
    std::filesystem::create_directories(d);
    return d;
}

void write_json(const std::string& path, const nlohmann::json& j) { write_atomic(path, j.dump(2) + "\n"); }

int cmd_solve(const Common& c) {
    const RunConfig cfg = load(c);
    const std::string dir = out_dir(cfg);
    nlohmann::json summary;
    for (auto seed : cfg.seeds()) {
        const ResolvedRun r = resolve_run(cfg, seed);
        const Trajectory tr = solve_renormalized(r.problem, r.solver);
        const std::string sd = dir + "/seed_" + std::to_string(seed);
        std::filesystem::create_directories(sd);
        {
            std::ostringstream os;
            write_dump(os, tr.u);
            write_atomic(sd + "/u.sspde", os.str());
        }
        std::ostringstream sup, iv;
        sup.precision(17);
        iv.precision(17);
        sup << "t,sup\n";
        for (std::size_t i = 0; i < tr.times.size(); ++i) sup << tr.times[i] << ',' << tr.sup[i] << '\n';
        iv << "n,Y_n\n";
        for (std::size_t i = 0; i < tr.Y.size(); ++i) iv << i + 1 << ',' << tr.Y[i] << '\n';
        write_atomic(sd + "/supnorm.csv", sup.str());
        write_atomic(sd + "/intervals.csv", iv.str());
        nlohmann::json m = tr.manifest;
        m["config"] = cfg.effective().to_json();
        m["resolved"] = r.to_json();
        write_json(sd + "/manifest.json", m);
        summary.push_back({{"seed", seed},
                           {"blew_up", tr.blew_up},
                           {"blowup_time", tr.blowup_time},
                           {"final_time", tr.final_time},
                           {"final_sup", tr.final_state.sup_norm()},
                           {"Y", tr.Y}});
        std::cout << "seed " << seed << (tr.blew_up ? " blew up at t = " + std::to_string(tr.blowup_time) : " ok")
                  << ", final sup " << tr.final_state.sup_norm() << '\n';
    }
    write_json(dir + "/solve_summary.json", summary);
    return 0;
}

int cmd_bounds(const Common& c, double kappa, double delta, double C1, double C2, double u0, double mass) {
    RunConfig cfg = load(c);
    if (kappa <= 0) kappa = cfg.get_double("kappa");
    if (delta <= 0) delta = cfg.get_double("bounds.delta");
    const ExponentSet ex = exponents(kappa, delta);
    nlohmann::json j;
    j["exponents"] = ex.to_json();
    j["kappa_cubic_residual"] = kappa_cubic(ex.kappa_bar);
    if (C1 > 0 && C2 > 0) {
        const double gamma = cfg.get("analysis.gamma") == "auto" ? 2 - 2 * kappa : cfg.get_double("analysis.gamma");
        const double cs = c_star(u0, C1, C2, ex);
        const double T = t_window(gamma, kappa, C1, C2, cs, mass);
        const LTilde lt = l_tilde(cs, C1, C2, kappa, ex.delta, mass, T);
        j["C_star"] = cs;
        j["T_window"] = T;
        j["L_tilde"] = lt.value;
        j["L_tilde_below_half_sqrt_T1"] = lt.below_half_sqrt_T1;
        if (ex.valid) j["apriori_bound"] = apriori_bound(u0, C1, C2, kappa, ex.delta);
    }
    write_json(out_dir(cfg) + "/bounds.json", j);
    std::cout << j.dump(2) << '\n';
    return 0;
}

// Solves over [0, t_end] keeping the last `window` of slices, with the gPAM model on the same grid.
struct GpamRun {
    ResolvedRun run;
    Trajectory traj;
    std::shared_ptr<Model> model;
};

GpamRun gpam_run(const RunConfig& cfg, std::uint64_t seed, double window) {
    const std::string family = cfg.get("noise.family");
    if (family != "gpam") throw Error("this command needs noise.family = gpam");
    GpamRun g{resolve_run(cfg, seed), {}, nullptr};
    SolverConfig sc = g.run.solver;
    sc.store_every = 1;
    sc.store_from = std::max(0.0, sc.t_end - window - 4 * sc.dt);
    g.traj = solve_renormalized(g.run.problem, sc);
    if (g.traj.blew_up) throw Error("solution blew up");
    const TorusLattice lat(sc.n_spatial);
    const GpamNoise noise = sample_gpam_noise(lat, RegularizationSpec(g.run.epsilon), seed);
    g.model = std::make_shared<Model>(make_gpam_model(noise, g.run.renorm_constant, cfg.get_double("kappa"),
                                                      g.traj.u.t0, g.traj.u.dt, g.traj.u.n_slices()));
    return g;
}

int cmd_norms(const Common& c) {
    const RunConfig cfg = load(c);
    const double kappa = cfg.get_double("kappa");
    const double gamma = cfg.get("analysis.gamma") == "auto" ? 2 - 2 * kappa : cfg.get_double("analysis.gamma");
    const double window = 0.1;
    nlohmann::json all;
    for (auto seed : cfg.seeds()) {
        const GpamRun g = gpam_run(cfg, seed, window);
        const UField uf = build_ufield(g.traj.u, *g.model, g.run.problem.sigma.front());
        const double b = g.traj.u.t_end(), a = g.traj.u.t0;
        SamplingPlan plan;
        plan.basepoints = cfg.get_int("analysis.basepoints");
        plan.pair_cap = cfg.get_int("analysis.pair_cap");
        plan.seed = seed;
        plan.d_max = std::sqrt(b - a);
        const Region region = Region::slab(a, b);
        const SemiNormReport gam = gamma_seminorm_U(uf, gamma, region, plan);
        const SemiNormReport sup = sup_norm_U(uf, region, plan);
        const WeightedReport w = weighted_seminorm_U(uf, gamma, a, b, 6, plan);
        const GradientBoundsReport gb = gradient_bounds_check(uf, region, plan.d_max / 2, gamma, plan);
        all.push_back({{"seed", seed},
                       {"gamma", gamma},
                       {"U_gamma", gam.to_json()},
                       {"U_sup", sup.to_json()},
                       {"weighted", w.value},
                       {"weighted_unweighted", w.unweighted},
                       {"gradient_worst_margin", gb.worst_margin},
                       {"gradient_interpolation_ratio", gb.interpolation_ratio},
                       {"u_sup", g.traj.final_state.sup_norm()}});
        std::cout << "seed " << seed << ": [U]_gamma = " << gam.value << ", |U| = " << sup.value << '\n';
    }
    write_json(out_dir(cfg) + "/norms.json", all);
    return 0;
}

int cmd_reconstruct(const Common& c, int depth) {
    const RunConfig cfg = load(c);
    const auto scales = cfg.get_list("analysis.scales");
    double Lmax = 0;
    for (double s : scales) Lmax = std::max(Lmax, s);
    const std::string dir = out_dir(cfg);
    nlohmann::json all;
    for (auto seed : cfg.seeds()) {
        const GpamRun g = gpam_run(cfg, seed, 1.1 * Lmax * Lmax);
        const Nonlinearity& sigma = g.run.problem.sigma.front();
        const UField uf = build_ufield(g.traj.u, *g.model, sigma);
        const ParabolicPoint z = g.model->point({g.model->n_slices() - 1, 0, 0});
        const LocalFamily fam = product_family(uf, g.model->noise(0), g.run.renorm_constant, g.model->kappa());
        const ReconstructionReport rr = lambda_NL(fam, z, Lmax, depth);
        const ErrorScalingReport es =
            error_scaling_study(*g.model, sigma, uf, scales, cfg.get_int("analysis.basepoints"), seed);
        write_atomic(dir + "/reconstruct_seed_" + std::to_string(seed) + ".csv", es.to_csv());
        all.push_back({{"seed", seed},
                       {"lambda", rr.to_json()},
                       {"reconstructed_pairing", rr.value + rr.diagonal},
                       {"error_scaling", es.to_json()}});
        std::cout << "seed " << seed << ": level sum " << rr.value << ", telescoping " << rr.telescoping
                  << ", error exponent " << es.exponent << " (target " << es.target << ")\n";
    }
    write_json(dir + "/reconstruct.json", all);
    return 0;
}

int cmd_study(const Common& c, const std::string& name) {
    const RunConfig cfg = load(c);
    const StudyReport rep = run_study(name, cfg);
    const std::string dir = out_dir(cfg) + "/" + name;
    write_report(dir, rep);
    std::cout << rep.summary.dump(2) << '\n' << (rep.pass ? "PASS " : "FAIL ") << name << " -> " << dir << '\n';
    return rep.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification toolkit for renormalized singular SPDEs on the 2-torus"};
    app.require_subcommand(1);

    Common solve_c, bounds_c, norms_c, rec_c, study_c;
    auto* solve = app.add_subcommand("solve", "solve the renormalized equation for each seed");
    add_common(solve, solve_c);

    auto* bounds = app.add_subcommand("bounds", "exponents and a-priori bound quantities");
    add_common(bounds, bounds_c);
    double kappa = 0, delta = 0, C1 = 0, C2 = 0, u0 = 1, mass = 0;
    bounds->add_option("--kappa", kappa, "regularity parameter (default: config `kappa`)");
    bounds->add_option("--delta", delta, "exponent slack (default: config `bounds.delta`)");
    bounds->add_option("--c1,--C1", C1, "order bound of the linear symbols");
    bounds->add_option("--c2,--C2", C2, "order bound of the quadratic symbols");
    bounds->add_option("--u0norm,--u0", u0, "sup norm of the initial condition");
    bounds->add_option("--mass", mass, "mass m");

    auto* norms = app.add_subcommand("norms", "semi-norms of the U expansion of a gPAM solution");
    add_common(norms, norms_c);

    auto* rec = app.add_subcommand("reconstruct", "multiscale reconstruction of sigma(u) xi for a gPAM solution");
    add_common(rec, rec_c);
    int depth = 3;
    rec->add_option("--depth", depth, "reconstruction depth N")->check(CLI::Range(0, kReconstructionDepth));

    auto* study = app.add_subcommand("study", "run a canned study");
    add_common(study, study_c);
    std::string name;
    study->add_option("name", name, "study name")->required()->check(CLI::IsMember(study_names()));

    CLI11_PARSE(app, argc, argv);
    try {
        if (*solve) return cmd_solve(solve_c);
        if (*bounds) return cmd_bounds(bounds_c, kappa, delta, C1, C2, u0, mass);
        if (*norms) return cmd_norms(norms_c);
        if (*rec) return cmd_reconstruct(rec_c, depth);
        if (*study) return cmd_study(study_c, name);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
