#include "sspde/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sspde {

double kappa_cubic(double k) { return ((2.0 * k + 3.0) * k - 8.0) * k + 1.0; }

double kappa_equation_residual(double k) { return (1 + k) * (2 + k - 2 * k * k) - (3 - 2 * k) * (1 - k); }

double kappa_bar() {
    double lo = 0.0, hi = 1.0 / 3.0;
    // The cubic is positive at 0 and negative at 1/3.
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        (kappa_cubic(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

nlohmann::json ExponentSet::to_json() const {
    return {{"kappa", kappa}, {"delta", delta}, {"kappa_bar", kappa_bar}, {"beta1", beta1},
            {"beta2", beta2}, {"nu", nu},       {"valid", valid}};
}

ExponentSet exponents(double kappa, double delta) {
    if (!(kappa > 0 && kappa < 1.0 / 3.0)) throw Error("exponents: kappa must lie in (0, 1/3)");
    if (!(delta > 0)) throw Error("exponents: delta must be positive");
    ExponentSet e;
    e.kappa = kappa;
    e.delta = delta;
    e.kappa_bar = kappa_bar();
    e.beta2 = 2 * (1 + kappa) / (3 - 2 * kappa);
    e.beta1 = e.beta2 + (1 + kappa) * (kappa + delta) / (1 - kappa);
    e.valid = e.beta2 < e.beta1 && e.beta1 < 1.0;
    e.nu = e.valid ? 1.0 / ((1 - kappa) * (1 - e.beta1) * (1 - e.beta1)) : std::nan("");
    return e;
}

double t_window(double gamma, double kappa, double C1, double C2, double C_star, double mass) {
    if (!(C1 > 0 && C2 > 0 && C_star > 0)) throw Error("t_window: constants must be positive");
    const double e = 2 * (gamma - 1) / (1 - kappa);
    double t = std::min(std::pow(C2, -1 / (1 - kappa)), std::pow(C1, -2 / (1 - kappa)) * std::pow(C_star, -e));
    if (mass > 0) t = std::min(t, std::pow(mass, -1 / (1 - kappa)));
    return t;
}

LTilde l_tilde(double C_star, double C1, double C2, double kappa, double delta, double mass, double T1) {
    if (!(C1 > 0 && C2 > 0 && C_star > 0)) throw Error("l_tilde: constants must be positive");
    const double base = std::max({mass * mass, C2, C1 * C1 * std::pow(C_star, 2 * kappa + 2 * delta)});
    LTilde r;
    r.value = std::pow(C_star, -2 / (3 - 2 * kappa)) * std::pow(base, -1 / (2 * (1 - kappa)));
    if (T1 > 0) r.below_half_sqrt_T1 = r.value < std::sqrt(T1) / 2;
    return r;
}

double c_star(double u0_norm, double C1, double C2, const ExponentSet& ex) {
    const double k = ex.kappa;
    return std::max({4 * u0_norm, std::pow(C2, 1 / ((1 - k) * (1 - ex.beta2))),
                     std::pow(C1, 2 / ((1 - k) * (1 - ex.beta1)))});
}

double apriori_bound(double u0_norm, double C1, double C2, double kappa, double delta) {
    const ExponentSet ex = exponents(kappa, delta);
    if (!ex.valid) throw Error("apriori_bound: exponents outside the valid regime (need beta2 < beta1 < 1)");
    return std::max({u0_norm, std::pow(C1, 2 / ((1 - kappa) * (1 - ex.beta1))),
                     std::pow(C2, 1 / ((1 - kappa) * (1 - ex.beta2)))});
}

namespace {

void finish(RecursionResult& r) {
    r.dominated = true;
    r.worst_ratio = 0.0;
    for (std::size_t i = 0; i < r.iteration.size(); ++i) {
        const double ratio = r.envelope[i] > 0 ? r.iteration[i] / r.envelope[i] : (r.iteration[i] > 0 ? INFINITY : 0);
        r.worst_ratio = std::max(r.worst_ratio, ratio);
        if (r.iteration[i] > r.envelope[i] * (1 + 1e-12)) r.dominated = false;
    }
}

}  // namespace

RecursionResult growth_envelope(double Y1, const std::vector<double>& q, double beta) {
    if (!(Y1 > 0) || !(beta >= 0 && beta < 1)) throw Error("growth_envelope: need Y1 > 0 and beta in [0, 1)");
    for (double v : q)
        if (v < 0) throw Error("growth_envelope: q_n must be nonnegative");
    RecursionResult r;
    long double Y = Y1, Q = 0;
    const long double b = beta;
    for (std::size_t n = 1; n <= q.size() + 1; ++n) {
        // n is 1-based; Q holds max_{i <= n-1} q_i.
        r.iteration.push_back(static_cast<double>(Y));
        const long double env =
            std::pow(std::pow(static_cast<long double>(Y1), 1 - b) + (1 - b) * Q * static_cast<long double>(n - 1),
                     1 / (1 - b));
        r.envelope.push_back(static_cast<double>(env));
        if (n <= q.size()) {
            const long double qn = q[n - 1];
            Y = Y + qn * std::pow(Y, b);
            Q = std::max(Q, qn);
        }
    }
    finish(r);
    return r;
}

RecursionResult massive_recursion(double Y1, double a, const std::vector<double>& rr, double beta) {
    if (!(a > 0 && a < 1)) throw Error("massive_recursion: need a in (0, 1)");
    if (!(Y1 > 0) || !(beta >= 0 && beta < 1)) throw Error("massive_recursion: need Y1 > 0 and beta in [0, 1)");
    RecursionResult r;
    long double Y = Y1, R = 0;
    const long double b = beta, A = a;
    for (std::size_t n = 1; n <= rr.size() + 1; ++n) {
        r.iteration.push_back(static_cast<double>(Y));
        const long double fixed = R > 0 ? std::pow(R / (1 - A), 1 / (1 - b)) : 0.0L;
        r.envelope.push_back(static_cast<double>(std::max(static_cast<long double>(Y1), fixed)));
        if (n <= rr.size()) {
            const long double rn = rr[n - 1];
            if (rn < 0) throw Error("massive_recursion: r_n must be nonnegative");
            Y = A * Y + rn * std::pow(Y, b);
            R = std::max(R, rn);
        }
    }
    finish(r);
    return r;
}

MomentFixedPoint moment_recursion(double Z1, double a, double M_p, double beta, int steps) {
    if (!(a > 0 && a < 1)) throw Error("moment_recursion: need a in (0, 1)");
    if (!(M_p >= 0) || !(beta >= 0 && beta < 1) || !(Z1 >= 0)) throw Error("moment_recursion: bad arguments");
    MomentFixedPoint m;
    m.Z_bar = M_p > 0 ? std::pow(M_p / (1 - a), 1 / (1 - beta)) : 0.0;
    long double Z = Z1;
    m.iteration.push_back(Z1);
    for (int i = 0; i < steps; ++i) {
        Z = a * Z + M_p * std::pow(Z, static_cast<long double>(beta));
        m.iteration.push_back(static_cast<double>(Z));
    }
    const bool up = Z1 < m.Z_bar;
    for (std::size_t i = 1; i < m.iteration.size(); ++i) {
        const double d = m.iteration[i] - m.iteration[i - 1];
        const double tol = 1e-14 * std::max(1.0, m.Z_bar);
        if ((up && d < -tol) || (!up && d > tol)) m.monotone = false;
    }
    m.final_gap = std::abs(m.iteration.back() - m.Z_bar);
    return m;
}

namespace {

std::vector<double> tilde(const std::vector<double>& c) {
    std::vector<double> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = i == 0 ? c[0] : std::max(c[i - 1], c[i]);
    return out;
}

}  // namespace

std::vector<double> IntervalConstants::tilde_C1() const { return tilde(C1); }
std::vector<double> IntervalConstants::tilde_C2() const { return tilde(C2); }

std::string GrowthAudit::to_csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "n,Y_n,envelope_n,pass\n";
    for (const auto& r : rows) os << r.n << ',' << r.Y << ',' << r.envelope << ',' << (r.pass ? 1 : 0) << '\n';
    return os.str();
}

nlohmann::json GrowthAudit::to_json() const {
    nlohmann::json j;
    j["prefactor"] = prefactor;
    j["pass"] = pass;
    for (const auto& r : rows) j["rows"].push_back({{"n", r.n}, {"Y", r.Y}, {"envelope", r.envelope}, {"pass", r.pass}});
    return j;
}

GrowthAudit growth_audit(const std::vector<double>& Y, double u0_norm, const IntervalConstants& constants,
                         const ExponentSet& ex) {
    if (Y.size() < 2) throw Error("growth_audit: need at least two unit intervals");
    if (!ex.valid) throw Error("growth_audit: exponents outside the valid regime");
    if (constants.C1.size() < Y.size() || constants.C2.size() < Y.size())
        throw Error("growth_audit: need interval constants for every interval");
    const double k = ex.kappa, b = ex.beta1;
    std::vector<double> shape;
    double K = 0.0;
    for (std::size_t n = 1; n <= Y.size(); ++n) {
        K = std::max({K, std::pow(constants.C1[n - 1], 2 / (1 - k)), std::pow(constants.C2[n - 1], 1 / (1 - k))});
        shape.push_back(std::max(u0_norm, std::pow(K, 1 / ((1 - b) * (1 - b))) * std::pow(static_cast<double>(n), 1 / (1 - b))));
    }
    GrowthAudit a;
    a.prefactor = shape[0] > 0 ? Y[0] / shape[0] : 1.0;
    for (std::size_t n = 1; n <= Y.size(); ++n) {
        GrowthAuditRow row{static_cast<int>(n), Y[n - 1], a.prefactor * shape[n - 1], true};
        row.pass = row.Y <= row.envelope * (1 + 1e-12);
        a.pass = a.pass && row.pass;
        a.rows.push_back(row);
    }
    return a;
}

GrowthAudit growth_audit(const Trajectory& traj, const IntervalConstants& constants, const ExponentSet& ex) {
    const double u0 = traj.sup.empty() ? 0.0 : traj.sup.front();
    return growth_audit(traj.Y, u0, constants, ex);
}

StationarityReport stationarity(const std::vector<std::vector<double>>& Y_ensemble, int e0, int e1, int l0, int l1,
                                double tolerance) {
    if (Y_ensemble.empty()) throw Error("stationarity: empty ensemble");
    if (!(1 <= e0 && e0 <= e1 && e1 < l0 && l0 <= l1)) throw Error("stationarity: bad windows");
    StationarityReport r;
    std::size_t len = Y_ensemble.front().size();
    for (const auto& y : Y_ensemble) len = std::min(len, y.size());
    if (len < static_cast<std::size_t>(l1)) throw Error("stationarity: trajectories too short for the late window");
    r.mean_Y.assign(len, 0.0);
    for (const auto& y : Y_ensemble)
        for (std::size_t n = 0; n < len; ++n) r.mean_Y[n] += y[n] / static_cast<double>(Y_ensemble.size());
    auto window = [&](int a, int b) {
        double s = 0.0;
        for (int n = a; n <= b; ++n) s += r.mean_Y[static_cast<std::size_t>(n - 1)];
        return s / (b - a + 1);
    };
    r.early = window(e0, e1);
    r.late = window(l0, l1);
    r.relative_change = r.late == r.early ? 0.0 : std::abs(r.late - r.early) / r.early;
    r.pass = r.relative_change <= tolerance;
    return r;
}

}  // namespace sspde
