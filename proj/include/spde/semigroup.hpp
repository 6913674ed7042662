#pragma once
// Monte Carlo estimation of the transition semigroup P_t f(x) = E f(X(t,x)),
// its gradient by common-random-numbers central differences, synchronous
// coupling contraction checks, and the mild Kolmogorov identity residual.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spde/model.hpp"
#include "spde/simulator.hpp"

namespace spde::semigroup {

/// Cylindrical observable f(x) = g(<w, x> + b) with g one of cos, tanh, or
/// the Gaussian bump e^{-u^2/2}; closed-form sup norms
/// ||f||_0 = ||g||_0 = 1 and ||Df||_0 = |w|_2 ||g'||_0.
class TestFunction {
public:
    enum class Family { Cosine, Tanh, GaussBump };

    TestFunction(Family family, std::vector<double> w, double b);

    Family family() const { return family_; }
    const std::vector<double>& weights() const { return w_; }
    double offset() const { return b_; }

    double operator()(std::span<const double> x) const;
    /// Gradient of f at x into out (same dimension as w).
    void gradient(std::span<const double> x, std::span<double> out) const;

    double sup_norm() const { return 1.0; }
    double grad_sup_norm() const;
    /// Localization set: indices (0-based) with w != 0.
    std::vector<std::size_t> support() const;

    double g(double u) const;
    double g_prime(double u) const;

private:
    Family family_;
    std::vector<double> w_;
    double b_;
    double w_norm_;
};

struct SemigroupEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
    double t = 0.0;
};

/// Ensemble mean of f(X(t,x)); t = 0 returns f(x) with zero stderr.
/// The step count is round(t / cfg.h) with the step size adjusted to land
/// on t exactly.
SemigroupEstimate estimate_Ptf(const model::ModelSpec& m, const TestFunction& f,
                               std::span<const double> x, double t, const sim::SimConfig& cfg,
                               unsigned workers = 0);

/// f values at several horizons from one common-noise ensemble (each path
/// simulated once to the largest time; the grid is snapped to step
/// multiples).  Returns one estimate per snapped time.
std::vector<SemigroupEstimate> estimate_Ptf_curve(const model::ModelSpec& m,
                                                  const TestFunction& f,
                                                  std::span<const double> x,
                                                  std::span<const double> t_grid,
                                                  const sim::SimConfig& cfg,
                                                  std::vector<double>* snapped_times = nullptr,
                                                  unsigned workers = 0);

struct GradientEstimate {
    std::vector<double> component;
    std::vector<double> component_stderr;
    double norm = 0.0;
    double norm_stderr = 0.0;  // conservative: sqrt(sum of component variances)
    double t = 0.0;
    double eps = 0.0;
    bool stderr_warning = false;  // a component stderr exceeded 25% of the bound budget
    double richardson_diff = 0.0;  // max component gap vs the 2*eps estimate, when requested
};

/// Common-random-numbers central differences
/// (P_t f(x + eps e_k) - P_t f(x - eps e_k)) / (2 eps) with identical noise
/// streams on both sides.  With `richardson` set, a second pass at 2*eps
/// fills richardson_diff (the O(eps^2) step-halving consistency figure).
GradientEstimate estimate_gradient_Ptf(const model::ModelSpec& m, const TestFunction& f,
                                       std::span<const double> x, double t,
                                       const sim::SimConfig& cfg, double eps = 1e-4,
                                       unsigned workers = 0, bool richardson = false);

struct CouplingReport {
    double rho = 0.0;  // e^{-gamma1 h} + L_F (1 - e^{-gamma1 h}) / gamma1
    double max_ratio = 0.0;     // max over paths/steps of |d(nh)| / (rho^n |d(0)|)
    std::size_t violations = 0; // steps with ratio > 1 + 1e-9
    std::size_t steps_checked = 0;
    bool pass = false;
};

/// Runs paired paths from x and y on identical streams and checks the
/// pathwise discrete contraction |d(nh)| <= rho(h)^n |d(0)| at every step.
CouplingReport coupling_contraction_check(const model::ModelSpec& m, std::span<const double> x,
                                          std::span<const double> y, const sim::SimConfig& cfg,
                                          unsigned workers = 0);

struct OuGradientPoint {
    double t = 0.0;
    double grad_norm = 0.0;
    double grad_stderr = 0.0;
    double bound_i = 0.0;       // e^{-gamma1 t} ||Df||_0
    double bound_ii = 0.0;      // C0 e^{-gamma1 t/2} / t^sigma ||f||_0
    double bound_envelope = 0.0;  // 8 c_alpha * hat_c e^{-gamma1 t/2}/t^sigma ||f||_0
    bool pass_i = false;
    bool pass_ii = false;
};

struct OuGradientReport {
    std::vector<OuGradientPoint> points;
    bool pass = false;
};

/// Ornstein-Uhlenbeck gradient bounds: forces F = 0, then checks
///   (i)  |grad| <= e^{-gamma1 t} ||Df||_0
///   (ii) |grad| <= C0 e^{-gamma1 t/2} / t^sigma ||f||_0
/// at each t with 3-stderr statistical tolerance (plus an O(eps) finite
/// difference allowance).
OuGradientReport ou_gradient_bound_check(const model::ModelSpec& m, const TestFunction& f,
                                         std::span<const double> x,
                                         std::span<const double> t_grid,
                                         const sim::SimConfig& cfg, unsigned workers = 0);

struct KolmogorovResidual {
    double lhs = 0.0;         // P_t f(x)
    double ou_term = 0.0;     // S_t f(x)
    double integral_term = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
    double stderr_combined = 0.0;
    double quad_budget = 0.0;  // |Q_J - Q_{J/2}|
    double tolerance = 0.0;    // 3 stderr + quad budget
    bool pass = false;
};

/// Residual of P_t f(x) = S_t f(x) + int_0^t S_{t-s}[<F, D P_s f>](x) ds,
/// nested Monte Carlo over a graded s-mesh
/// s_j = t (1 - (1 - j/J)^{1/(1-sigma)}).  Meant for tiny N (1 or 2).
KolmogorovResidual mild_kolmogorov_residual(const model::ModelSpec& m, const TestFunction& f,
                                            std::span<const double> x, double t,
                                            const sim::SimConfig& cfg, int quad_nodes = 16,
                                            unsigned workers = 0);

/// Pathwise coupled state difference (X(t,x+eps e_k) - X(t,x-eps e_k))/(2 eps)
/// per path; for F = 0 this is deterministic (= e^{-gamma_k t} e_k), which is
/// what makes the CRN gradient estimator nearly noiseless.
struct CoupledStateDiff {
    std::vector<double> mean_kth;  // mean over paths of component k
    double stderr_kth = 0.0;       // stderr over paths of component k
};
CoupledStateDiff coupled_state_difference(const model::ModelSpec& m, std::span<const double> x,
                                          std::size_t k, double t, const sim::SimConfig& cfg,
                                          double eps = 1e-4);

}  // namespace spde::semigroup
