#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "sspde/solver.hpp"

namespace sspde {

// Every unspecified multiplicative constant is set to 1; the resulting values
// are envelope shapes, not certified bounds.

// Root in (0, 1/3) of 2k^3 + 3k^2 - 8k + 1, by bisection.
double kappa_bar();
// (1 + k)(2 + k - 2k^2) - (3 - 2k)(1 - k), the unexpanded form.
double kappa_equation_residual(double k);
double kappa_cubic(double k);

struct ExponentSet {
    double kappa = 0.0;
    double delta = 0.0;
    double kappa_bar = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double nu = 0.0;
    bool valid = false;  // beta2 < beta1 < 1

    double e_gamma(double gamma) const { return 2.0 * (gamma - 1.0) / (1.0 - kappa); }
    nlohmann::json to_json() const;
};

ExponentSet exponents(double kappa, double delta = 0.01);

// min(C2^{-1/(1-k)}, C1^{-2/(1-k)} C*^{-e(gamma)}, m^{-1/(1-k)}); the mass term is dropped for m = 0.
double t_window(double gamma, double kappa, double C1, double C2, double C_star, double mass = 0.0);

struct LTilde {
    double value = 0.0;
    bool below_half_sqrt_T1 = true;  // value < sqrt(T1) / 2 when T1 was given
};

LTilde l_tilde(double C_star, double C1, double C2, double kappa, double delta, double mass = 0.0,
               double T1 = 0.0);

// max{4 |u0|, C2^{1/((1-k)(1-b2))}, C1^{2/((1-k)(1-b1))}}
double c_star(double u0_norm, double C1, double C2, const ExponentSet& ex);

// max{|u0|, C1^{2/((1-k)(1-b1))}, C2^{1/((1-k)(1-b2))}}; throws outside the valid regime.
double apriori_bound(double u0_norm, double C1, double C2, double kappa, double delta = 0.01);

struct RecursionResult {
    std::vector<double> iteration;  // Y_1, Y_2, ...
    std::vector<double> envelope;   // closed-form bound at the same n
    bool dominated = true;          // iteration <= envelope (1e-12 relative) for every n
    double worst_ratio = 0.0;       // max_n iteration / envelope
};

// Y_{n+1} = Y_n + q_n Y_n^beta against (Y_1^{1-beta} + (1-beta) Q_{n-1} (n-1))^{1/(1-beta)}.
RecursionResult growth_envelope(double Y1, const std::vector<double>& q, double beta);

// Y_{n+1} = a Y_n + r_n Y_n^beta against max{Y_1, (R_n / (1 - a))^{1/(1-beta)}}.
RecursionResult massive_recursion(double Y1, double a, const std::vector<double>& r, double beta);

struct MomentFixedPoint {
    double Z_bar = 0.0;
    std::vector<double> iteration;
    bool monotone = true;  // non-decreasing below Z_bar, non-increasing above
    double final_gap = 0.0;
};

// Z_bar = (M_p / (1 - a))^{1/(1-beta)} with the monotonicity certificate from `steps` iterations of
// Z_{n+1} = a Z_n + M_p Z_n^beta.
MomentFixedPoint moment_recursion(double Z1, double a, double M_p, double beta, int steps = 200);

struct IntervalConstants {
    std::vector<double> C1, C2;  // per unit interval n = 1, 2, ...
    // C~_{n+1} = C_n v C_{n+1}
    std::vector<double> tilde_C1() const;
    std::vector<double> tilde_C2() const;
};

struct GrowthAuditRow {
    int n = 0;
    double Y = 0.0;
    double envelope = 0.0;
    bool pass = true;
};

struct GrowthAudit {
    std::vector<GrowthAuditRow> rows;
    double prefactor = 0.0;  // fitted so that the envelope matches Y_1
    bool pass = true;
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

// Envelope A max{|u0|, max_{i<=n} {C1_i^{2/(1-k)}, C2_i^{1/(1-k)}}^{1/(1-b1)^2} n^{1/(1-b1)}} with A
// fitted at n = 1.
GrowthAudit growth_audit(const std::vector<double>& Y, double u0_norm, const IntervalConstants& constants,
                         const ExponentSet& ex);
GrowthAudit growth_audit(const Trajectory& traj, const IntervalConstants& constants, const ExponentSet& ex);

struct StationarityReport {
    std::vector<double> mean_Y;  // ensemble mean of Y_n
    double early = 0.0;          // mean over the early window
    double late = 0.0;
    double relative_change = 0.0;
    bool pass = false;
};

// Windowed ensemble means of Y_n over [e0, e1] and [l0, l1] (1-based, inclusive).
StationarityReport stationarity(const std::vector<std::vector<double>>& Y_ensemble, int e0, int e1, int l0, int l1,
                                double tolerance = 0.2);

}  // namespace sspde
