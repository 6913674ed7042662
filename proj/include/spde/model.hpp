#pragma once
// Declarative model of the truncated spectral system
//
//   dX_k = [-gamma_k X_k + F_k(X)] dt + beta_k dz_k(t),   k = 1..N,
//
// with independent symmetric alpha-stable drivers z_k, plus the assumption
// checks and every derived constant of the contraction / gradient-decay /
// mixing bounds.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spde/stable.hpp"

namespace spde::model {

class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// Power-law continuation value_k = coef * k^exponent for mode indices
/// beyond the stored truncation (k is the 1-based sorted mode index).
struct PowerTail {
    double coef = 1.0;
    double exponent = 0.0;
};

/// Eigenvalues gamma_k of the dissipative diagonal operator, nondecreasing
/// and positive, with an optional power-law tail descriptor.
class SpectralOperator {
public:
    explicit SpectralOperator(std::vector<double> gammas,
                              std::optional<PowerTail> tail = std::nullopt);
    const std::vector<double>& gammas() const { return gammas_; }
    double gamma1() const { return gammas_.front(); }
    std::size_t dim() const { return gammas_.size(); }
    const std::optional<PowerTail>& tail() const { return tail_; }

private:
    std::vector<double> gammas_;
    std::optional<PowerTail> tail_;
};

/// Noise amplitudes beta_k > 0 with an optional power-law tail descriptor.
class NoiseSpec {
public:
    explicit NoiseSpec(std::vector<double> betas, std::optional<PowerTail> tail = std::nullopt);
    const std::vector<double>& betas() const { return betas_; }
    std::size_t dim() const { return betas_.size(); }
    const std::optional<PowerTail>& tail() const { return tail_; }

private:
    std::vector<double> betas_;
    std::optional<PowerTail> tail_;
};

/// Bounded odd saturators with |s| <= 1, s(0) = 0, Lip(s) = s'(0) = 1.
enum class Saturator { Tanh, Arctan };

double saturate(Saturator s, double u);

/// Parametric bounded-Lipschitz nonlinearity with closed-form sup norm and
/// best Lipschitz constant.
///
///   zero                 : F = 0
///   diagonal-saturating  : F_k(x) = c_k s(x_{perm(k)})
///   finite-rank-saturating: F_j(x) = c_j s(<w_j, x>), j = 1..r, with the
///                           w_j of pairwise disjoint support (so both
///                           closed forms are exact suprema).
class NonlinearitySpec {
public:
    enum class Family { Zero, DiagonalSaturating, FiniteRankSaturating };

    static NonlinearitySpec zero(std::size_t n);
    static NonlinearitySpec diagonal(std::vector<double> c, std::vector<std::size_t> perm,
                                     Saturator s);
    static NonlinearitySpec finite_rank(std::vector<double> c, std::vector<std::vector<double>> w,
                                        Saturator s, std::size_t n);

    Family family() const { return family_; }
    std::size_t dim() const { return n_; }
    Saturator saturator() const { return saturator_; }
    const std::vector<double>& amplitudes() const { return c_; }
    const std::vector<std::size_t>& permutation() const { return perm_; }
    const std::vector<std::vector<double>>& weights() const { return w_; }

    /// F(x) into out; both spans of the model dimension.
    void apply(std::span<const double> x, std::span<double> out) const;

    double sup_norm() const { return sup_norm_; }    // ||F||_0
    double lipschitz() const { return lipschitz_; }  // L_F

private:
    NonlinearitySpec() = default;
    Family family_ = Family::Zero;
    std::size_t n_ = 0;
    Saturator saturator_ = Saturator::Tanh;
    std::vector<double> c_;
    std::vector<std::size_t> perm_;       // diagonal family
    std::vector<std::vector<double>> w_;  // finite-rank family
    double sup_norm_ = 0.0;
    double lipschitz_ = 0.0;
};

/// The full truncated model.
struct ModelSpec {
    SpectralOperator op;
    NoiseSpec noise;
    NonlinearitySpec nonlinearity;
    stable::StableIndex alpha;
    double sigma;

    ModelSpec(SpectralOperator op_, NoiseSpec noise_, NonlinearitySpec f_,
              stable::StableIndex alpha_, double sigma_);
    std::size_t dim() const { return op.dim(); }
};

enum class TailVerdict { Convergent, Divergent, FiniteTruncationOnly };

std::string to_string(TailVerdict v);

struct AssumptionReport {
    bool gamma_monotone = false;
    double summability_partial_sum = 0.0;  // sum_{k<=N} beta_k^alpha / gamma_k
    TailVerdict summability = TailVerdict::FiniteTruncationOnly;
    double B = 0.0;  // sup_k gamma_k^{1/alpha - sigma} / beta_k
    TailVerdict b_finite = TailVerdict::FiniteTruncationOnly;
    bool pass = false;
    std::string detail;
};

/// Monotonicity of gamma, the summability sum with its tail verdict, and the
/// constant B with its tail verdict.  Throws ModelError on non-monotone gamma.
AssumptionReport check_assumptions(const ModelSpec& m);

/// hat_c = B 2^{(2/alpha) - sigma} sigma^sigma / e^sigma.
double hat_c(double B, stable::StableIndex alpha, double sigma);

struct EnvelopeCheck {
    bool pass = false;
    double max_ratio = 0.0;  // max over the grid of k_t / (hat_c e^{-gamma1 t/2} / t^sigma)
    double worst_t = 0.0;
    std::size_t worst_mode = 0;  // 1-based; 0 marks the continuous tail
};

/// Evaluates k_t = sup_k e^{-gamma_k t} gamma_k^{1/alpha} / beta_k over the
/// stored modes (plus the continuous tail maximizer when tail laws are
/// declared) and compares against hat_c e^{-gamma1 t/2} / t^sigma.
EnvelopeCheck kt_envelope_check(const ModelSpec& m, const std::vector<double>& t_grid);

struct DerivedConstants {
    double gamma1 = 0.0;
    double B = 0.0;
    double hat_c = 0.0;
    double fisher = 0.0;   // int (p')^2 / p
    double c_alpha = 0.0;  // fisher / 8
    double C0 = 0.0;       // hat_c * fisher
    double F_sup = 0.0;    // ||F||_0
    double L_F = 0.0;
    double theta = 0.0;  // (C0 ||F||_0 Gamma(1-sigma))^{1/(1-sigma)}
    double omega = 0.0;  // gamma1/2 - theta
    bool condition_i = false;   // L_F < gamma1
    bool condition_ii = false;  // omega > 0 (operative smallness condition)
    // The two readings of the printed smallness display; reported, not used.
    bool display_ii_as_printed = false;    // ||F||_0 < C0/Gamma(1-sigma) (gamma1/2)^{1-sigma}
    bool display_ii_omega_form = false;    // ||F||_0 < (gamma1/2)^{1-sigma}/(C0 Gamma(1-sigma))
};

/// All constants of the mixing bounds.  Requires check_assumptions to pass.
DerivedConstants derived_constants(const ModelSpec& m);

struct HeatVerdicts {
    bool summability = false;   // 2 > d + alpha*eta
    bool sigma_window = false;  // 2/alpha - eta < 2
    double gamma1 = 0.0;
};

/// Dirichlet-Laplacian example on [0,pi]^d: gamma_k = |k|^2, beta_k = |k|^eta
/// over multi-indices k in {1..N_per_axis}^d, sorted by gamma.  Throws
/// ModelError naming the violated inequality when the parameter gate
/// d/alpha < 2/alpha - eta < 2 fails.
ModelSpec heat_example(int d, stable::StableIndex alpha, double eta, int n_per_axis, double sigma);

/// Gate verdicts without building (never throws on gate failure).
HeatVerdicts heat_example_verdicts(int d, stable::StableIndex alpha, double eta);

struct SigmaSweepPoint {
    double sigma = 0.0;
    double omega = 0.0;
};
struct SigmaSweepResult {
    std::vector<SigmaSweepPoint> table;  // admissible sigmas only
    double best_sigma = 0.0;
    double best_omega = 0.0;
};

/// Convenience sweep over sigma in (0,1) with step 0.01, reporting omega for
/// every sigma that keeps B finite and the largest omega found.
SigmaSweepResult sweep_sigma(const ModelSpec& m, double step = 0.01);

}  // namespace spde::model
