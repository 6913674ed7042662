#include "spde/special.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace spde::special {

namespace {

// Lanczos coefficients, g = 7, n = 9.
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,      -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,    12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6,  1.5056327351493116e-7};

double lanczos_core(double x) {
    // valid for x >= 0.5
    double a = kLanczos[0];
    const double t = x + kLanczosG - 0.5;
    for (int i = 1; i < 9; ++i) a += kLanczos[i] / (x - 1.0 + i);
    return std::sqrt(2.0 * M_PI) * std::pow(t, x - 0.5) * std::exp(-t) * a;
}

}  // namespace

double gamma_fn(double x) {
    if (!(x > 0.0)) {
        std::ostringstream os;
        os << "gamma_fn: argument must be positive, got " << x;
        throw std::invalid_argument(os.str());
    }
    if (x < 0.5) return gamma_fn(x + 1.0) / x;
    return lanczos_core(x);
}

double lgamma_fn(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("lgamma_fn: argument must be positive");
    if (x < 0.5) return lgamma_fn(x + 1.0) - std::log(x);
    double a = kLanczos[0];
    const double t = x + kLanczosG - 0.5;
    for (int i = 1; i < 9; ++i) a += kLanczos[i] / (x - 1.0 + i);
    return 0.5 * std::log(2.0 * M_PI) + (x - 0.5) * std::log(t) - t + std::log(a);
}

HenryParams::HenryParams(double a_, double b_, double beta_) : a(a_), b(b_), beta(beta_) {
    if (!(a >= 0.0) || !(b >= 0.0)) throw std::invalid_argument("HenryParams: a, b must be >= 0");
    if (!(beta > 0.0) || beta > 1.0) throw std::invalid_argument("HenryParams: beta must lie in (0, 1]");
}

HenryGResult henry_G_full(double beta, double z) {
    if (!(beta > 0.0) || beta > 1.0) throw std::invalid_argument("henry_G: beta must lie in (0, 1]");
    if (!(z >= 0.0)) throw std::invalid_argument("henry_G: z must be >= 0");
    if (z == 0.0) return {1.0, false};
    if (z > 700.0) {
        // G_beta(z) ~ (1/beta) e^z for large z.
        const double log_val = z - std::log(beta);
        if (log_val > std::log(std::numeric_limits<double>::max())) {
            throw std::overflow_error("henry_G: e^z exceeds double range");
        }
        return {std::exp(log_val), true};
    }
    const double logz = std::log(z);
    double sum = 1.0;  // n = 0 term
    for (int n = 1; n < 100000; ++n) {
        const double nb = n * beta;
        const double term = std::exp(nb * logz - lgamma_fn(nb + 1.0));
        sum += term;
        if (term < 1e-15 * sum) return {sum, false};
    }
    throw std::runtime_error("henry_G: series did not converge");
}

double henry_G(double beta, double z) { return henry_G_full(beta, z).value; }

double henry_theta(double b, double beta) {
    if (b == 0.0) return 0.0;
    return std::pow(b * gamma_fn(beta), 1.0 / beta);
}

double henry_bound(const HenryParams& p, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("henry_bound: t must be >= 0");
    if (p.b == 0.0) return p.a;
    return p.a * henry_G(p.beta, henry_theta(p.b, p.beta) * t);
}

}  // namespace spde::special
