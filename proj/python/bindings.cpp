#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sspde/bounds.hpp"
#include "sspde/calculus.hpp"
#include "sspde/experiments.hpp"
#include "sspde/model.hpp"
#include "sspde/parallel.hpp"

namespace py = pybind11;
using namespace sspde;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const GridField& g) {
    const int n = g.lattice.n();
    Array out({n, n});
    auto v = out.mutable_unchecked<2>();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v(i, j) = g(i, j);
    return out;
}

GridField from_array(const Array& a) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw Error("expected a square 2-d array");
    const TorusLattice lat(static_cast<int>(a.shape(0)));
    GridField g(lat);
    auto v = a.unchecked<2>();
    for (int i = 0; i < lat.n(); ++i)
        for (int j = 0; j < lat.n(); ++j) g(i, j) = v(i, j);
    return g;
}

// JSON crosses the boundary as text; the Python side decodes it.
std::string dump(const nlohmann::json& j) { return j.dump(); }

py::dict recursion_dict(const RecursionResult& r) {
    py::dict d;
    d["iteration"] = r.iteration;
    d["envelope"] = r.envelope;
    d["dominated"] = r.dominated;
    d["worst_ratio"] = r.worst_ratio;
    return d;
}

py::dict solve(const Array& noise, const std::string& sigma, double C, const Array& u0, double dt, double t_end,
               double mass, const std::string& scheme, int store_every) {
    PdeProblem p;
    p.sigma = {Nonlinearity::parse(sigma)};
    p.noise = std::make_shared<ConstantNoise>(std::vector<GridField>{from_array(noise)});
    p.renorm = {{C}};
    p.mass = mass;
    p.u0 = from_array(u0);
    SolverConfig cfg;
    cfg.n_spatial = p.u0.lattice.n();
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.scheme = parse_scheme(scheme);
    cfg.store_every = store_every;
    const Trajectory tr = [&] {
        py::gil_scoped_release release;
        return solve_renormalized(p, cfg);
    }();
    py::dict d;
    d["final_state"] = to_array(tr.final_state);
    d["final_time"] = tr.final_time;
    d["times"] = tr.times;
    d["sup"] = tr.sup;
    d["Y"] = tr.Y;
    d["blew_up"] = tr.blew_up;
    py::list stored;
    for (const auto& g : tr.u.slices) stored.append(to_array(g));
    d["stored"] = stored;
    d["stored_t0"] = tr.u.t0;
    d["stored_dt"] = tr.u.dt;
    return d;
}

std::string gpam_order_bounds(int n, double epsilon, std::uint64_t seed, double kappa, int n_slices, double dt,
                              const std::vector<double>& scales, int basepoints) {
    const RegularizationSpec reg(epsilon);
    const auto xi = sample_gpam_noise(TorusLattice(n), reg, seed);
    const Model m = make_gpam_model(xi, gpam_renorm_constant(reg), kappa, 0.0, dt, n_slices);
    OrderBoundOptions opt;
    opt.t_min = 0.0;
    opt.t_max = (n_slices - 1) * dt;
    opt.scales = scales;
    opt.basepoints = basepoints;
    opt.seed = seed;
    py::gil_scoped_release release;
    return dump(order_bounds(m, opt).to_json());
}

py::dict study(const std::string& name, const std::string& config_text) {
    const RunConfig cfg = RunConfig::parse(config_text);
    cfg.validate();
    if (const int t = cfg.get_int("threads"); t > 0) set_thread_count(t);
    const StudyReport r = [&] {
        py::gil_scoped_release release;
        return run_study(name, cfg);
    }();
    py::dict d;
    d["name"] = r.name;
    d["pass"] = r.pass;
    d["summary"] = dump(r.summary);
    d["manifest"] = dump(r.manifest);
    d["tables"] = r.tables;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Renormalized singular SPDE solvers and a priori bound checks on the 2-d torus.";
    py::register_exception<Error>(m, "SspdeError", PyExc_ValueError);

    m.def("kappa_bar", &kappa_bar);
    m.def("exponents", [](double kappa, double delta) { return dump(exponents(kappa, delta).to_json()); },
          py::arg("kappa"), py::arg("delta") = 0.01);
    m.def("apriori_bound", &apriori_bound, py::arg("u0_norm"), py::arg("C1"), py::arg("C2"), py::arg("kappa"),
          py::arg("delta") = 0.01);
    m.def("growth_envelope",
          [](double Y1, const std::vector<double>& q, double beta) { return recursion_dict(growth_envelope(Y1, q, beta)); },
          py::arg("Y1"), py::arg("q"), py::arg("beta"));
    m.def("massive_recursion",
          [](double Y1, double a, const std::vector<double>& r, double beta) {
              return recursion_dict(massive_recursion(Y1, a, r, beta));
          },
          py::arg("Y1"), py::arg("a"), py::arg("r"), py::arg("beta"));
    m.def("moment_fixed_point", [](double Z1, double a, double M, double beta) { return moment_recursion(Z1, a, M, beta).Z_bar; },
          py::arg("Z1"), py::arg("a"), py::arg("M_p"), py::arg("beta"));

    m.def("gpam_renorm_constant", [](double eps) { return gpam_renorm_constant(RegularizationSpec(eps)); },
          py::arg("epsilon"));
    m.def("wiener_renorm_constant",
          [](double delta, double eps) { return wiener_renorm_constant(delta, RegularizationSpec(eps)); },
          py::arg("delta"), py::arg("epsilon"));
    m.def("sample_gpam_noise",
          [](int n, double eps, std::uint64_t seed) { return to_array(sample_gpam_noise(TorusLattice(n), RegularizationSpec(eps), seed).physical()); },
          py::arg("n"), py::arg("epsilon"), py::arg("seed"));

    m.def("solve", &solve, py::arg("noise"), py::arg("sigma"), py::arg("renorm"), py::arg("u0"), py::arg("dt"),
          py::arg("t_end"), py::arg("mass") = 0.0, py::arg("scheme") = "etdrk4", py::arg("store_every") = 1);
    m.def("gpam_order_bounds", &gpam_order_bounds, py::arg("n"), py::arg("epsilon"), py::arg("seed"),
          py::arg("kappa") = 0.1, py::arg("n_slices") = 64, py::arg("dt") = 1.0 / 1024,
          py::arg("scales") = std::vector<double>{0.25, 0.125}, py::arg("basepoints") = 32);
    m.def("study_names", &study_names);
    m.def("run_study", &study, py::arg("name"), py::arg("config_text"));
    m.def("set_thread_count", &set_thread_count, py::arg("n"));
}
