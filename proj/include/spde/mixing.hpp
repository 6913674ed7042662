#pragma once
// Invariant-measure averages, decay curves |P_t f(x) - mu(f)|, exponential
// rate fitting, and comparison against the theoretical exponents omega and
// gamma_1 - L_F.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spde/semigroup.hpp"

namespace spde::mixing {

class NoSignalWindow : public std::runtime_error {
public:
    explicit NoSignalWindow(const std::string& what) : std::runtime_error(what) {}
};

struct InvariantEstimate {
    double time_average = 0.0;      // primary estimator (single long path)
    double time_average_stderr = 0.0;  // batch means
    double ensemble_average = 0.0;  // cross-check (ensemble at fixed large t)
    double ensemble_stderr = 0.0;
    double burn_in = 0.0;
    double horizon = 0.0;
    bool consistent = false;  // agree within 3 combined stderr
};

/// mu(f) two ways: time average along one long path after burn-in (batch
/// means stderr) and an ensemble average at t = burn_in; flags disagreement.
/// burn_in <= 0 selects the default 10 / gamma_1.
InvariantEstimate estimate_invariant(const model::ModelSpec& m,
                                     const semigroup::TestFunction& f, const sim::SimConfig& cfg,
                                     double burn_in = 0.0, unsigned workers = 0);

struct DecayCurve {
    std::vector<double> t_grid;   // snapped to step multiples
    std::vector<double> deltas;   // |P_t f(x) - mu_hat|
    std::vector<double> stderrs;  // combined P_t and mu uncertainty
    double mu_hat = 0.0;
    double mu_stderr = 0.0;
};

/// One common-noise ensemble to max(t_grid), recording f at every grid time.
DecayCurve decay_curve(const model::ModelSpec& m, const semigroup::TestFunction& f,
                       std::span<const double> x, std::span<const double> t_grid,
                       const sim::SimConfig& cfg, double mu_hat, double mu_stderr,
                       unsigned workers = 0);

struct RateFit {
    double c_emp = 0.0;  // fitted decay exponent (positive = decaying)
    double C_emp = 0.0;  // fitted prefactor
    double r2 = 0.0;
    std::size_t window_begin = 0;  // index range [begin, end) used
    std::size_t window_end = 0;
};

/// Weighted least squares of log(delta) against t over the signal window:
/// the largest contiguous run of points with delta > 3 stderr, at least 5
/// points.  Throws NoSignalWindow otherwise.
RateFit fit_exponential_rate(const DecayCurve& curve);

struct TheoryComparison {
    double omega = 0.0;
    double contraction_rate = 0.0;  // gamma_1 - L_F
    double c_emp = 0.0;
    double C_emp = 0.0;
    bool condition_i = false;
    bool condition_ii = false;
    bool has_guarantee = false;
    double exponent_used = 0.0;  // min over the applicable theoretical exponents
    bool positive_rate = false;  // c_emp > 0
    bool envelope_ok = false;    // window deltas <= C_emp e^{-exponent t}(1 + 3 rel se)
    std::string verdict;
};

/// Side-by-side comparison of the fitted rate with the theoretical
/// exponents; asserts only the non-over-promising direction (observed decay
/// under the fitted-prefactor envelope at the guaranteed exponent).
TheoryComparison compare_with_theory(const model::ModelSpec& m, const RateFit& fit,
                                     const DecayCurve& curve);

}  // namespace spde::mixing
