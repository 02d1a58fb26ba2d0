#include "sspde/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sspde/torus.hpp"

namespace sspde {

Nonlinearity Nonlinearity::zero() {
    return {"zero", [](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }, 0.0, 0.0};
}

Nonlinearity Nonlinearity::constant(double c) {
    return {"const:" + std::to_string(c), [c](double) { return c; }, [](double) { return 0.0; },
            [](double) { return 0.0; }, std::abs(c), c};
}

Nonlinearity Nonlinearity::linear(double s) {
    return {"linear:" + std::to_string(s), [s](double u) { return s * u; }, [s](double) { return s; },
            [](double) { return 0.0; }, std::numeric_limits<double>::infinity(), s};
}

Nonlinearity Nonlinearity::sine(double b) {
    return {"sin:" + std::to_string(b), [b](double u) { return std::sin(b * u); },
            [b](double u) { return b * std::cos(b * u); }, [b](double u) { return -b * b * std::sin(b * u); },
            std::max({1.0, std::abs(b), b * b}), b};
}

Nonlinearity Nonlinearity::cosine(double b) {
    return {"cos:" + std::to_string(b), [b](double u) { return std::cos(b * u); },
            [b](double u) { return -b * std::sin(b * u); }, [b](double u) { return -b * b * std::cos(b * u); },
            std::max({1.0, std::abs(b), b * b}), b};
}

Nonlinearity Nonlinearity::parse(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const bool has = colon != std::string::npos;
    double arg = 1.0;
    if (has) {
        const std::string text = spec.substr(colon + 1);
        std::size_t used = 0;
        try {
            arg = std::stod(text, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != text.size()) throw Error("nonlinearity '" + spec + "': bad numeric argument");
    }
    if (head == "zero") return zero();
    if (head == "const" || head == "constant") return constant(arg);
    if (head == "linear") return linear(arg);
    if (head == "sin" || head == "sine") return sine(arg);
    if (head == "cos" || head == "cosine") return cosine(arg);
    throw Error("unknown nonlinearity '" + spec + "'");
}

double Nonlinearity::sampled_bound(double lo, double hi, int samples) const {
    double m = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double u = lo + (hi - lo) * i / (samples - 1);
        m = std::max({m, std::abs(f(u)), std::abs(df(u)), std::abs(d2f(u))});
    }
    return m;
}

void Nonlinearity::validate() const {
    if (!f || !df || !d2f) throw Error("Nonlinearity: missing sigma or derivatives");
    if (std::isfinite(bound) && sampled_bound() > bound * (1 + 1e-12))
        throw Error("Nonlinearity '" + name + "': sampled max exceeds C_sigma");
}

}  // namespace sspde
