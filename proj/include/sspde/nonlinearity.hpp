#pragma once

#include <functional>
#include <limits>
#include <string>

namespace sspde {

// sigma together with its first two derivatives and a bound C_sigma on all
// three. The linear sigma(u) = u is unbounded and only used by oracle tests.
struct Nonlinearity {
    std::string name;
    std::function<double(double)> f, df, d2f;
    double bound = std::numeric_limits<double>::infinity();
    double beta = 1.0;  // frequency for sine / cosine, slope for linear

    double operator()(double u) const { return f(u); }

    static Nonlinearity zero();
    static Nonlinearity constant(double c);
    static Nonlinearity linear(double slope = 1.0);
    static Nonlinearity sine(double beta = 1.0);
    static Nonlinearity cosine(double beta = 1.0);
    // Parses "zero", "const:<c>", "linear[:<s>]", "sin[:<beta>]", "cos[:<beta>]".
    static Nonlinearity parse(const std::string& spec);

    // max of |sigma|, |sigma'|, |sigma''| on an evenly spaced sample of [lo, hi].
    double sampled_bound(double lo = -50.0, double hi = 50.0, int samples = 10000) const;
    void validate() const;
};

}  // namespace sspde
