#include "spde/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "spde/special.hpp"

namespace spde::model {

namespace {

constexpr double kExponentTol = 1e-12;

double norm2(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace

SpectralOperator::SpectralOperator(std::vector<double> gammas, std::optional<PowerTail> tail)
    : gammas_(std::move(gammas)), tail_(tail) {
    if (gammas_.empty()) throw ModelError("SpectralOperator: needs at least one mode");
    double prev = 0.0;
    for (std::size_t k = 0; k < gammas_.size(); ++k) {
        if (!(gammas_[k] > 0.0)) throw ModelError("SpectralOperator: gammas must be positive");
        if (gammas_[k] < prev) {
            std::ostringstream os;
            os << "SpectralOperator: gammas must be nondecreasing (violated at mode " << k + 1
               << ")";
            throw ModelError(os.str());
        }
        prev = gammas_[k];
    }
    if (tail_ && !(tail_->exponent > 0.0)) {
        throw ModelError("SpectralOperator: tail law must grow to +infinity (exponent > 0)");
    }
}

NoiseSpec::NoiseSpec(std::vector<double> betas, std::optional<PowerTail> tail)
    : betas_(std::move(betas)), tail_(tail) {
    if (betas_.empty()) throw ModelError("NoiseSpec: needs at least one mode");
    for (double b : betas_)
        if (!(b > 0.0)) throw ModelError("NoiseSpec: betas must be positive");
    if (tail_ && !(tail_->coef > 0.0)) throw ModelError("NoiseSpec: tail coef must be positive");
}

double saturate(Saturator s, double u) {
    switch (s) {
        case Saturator::Tanh:
            return std::tanh(u);
        case Saturator::Arctan:
            return (2.0 / M_PI) * std::atan(0.5 * M_PI * u);
    }
    return 0.0;
}

NonlinearitySpec NonlinearitySpec::zero(std::size_t n) {
    NonlinearitySpec f;
    f.family_ = Family::Zero;
    f.n_ = n;
    return f;
}

NonlinearitySpec NonlinearitySpec::diagonal(std::vector<double> c, std::vector<std::size_t> perm,
                                            Saturator s) {
    if (c.size() != perm.size())
        throw ModelError("NonlinearitySpec: c and perm must have equal length");
    const std::size_t n = c.size();
    std::vector<bool> seen(n, false);
    for (std::size_t p : perm) {
        if (p >= n || seen[p]) throw ModelError("NonlinearitySpec: perm must be a permutation");
        seen[p] = true;
    }
    NonlinearitySpec f;
    f.family_ = Family::DiagonalSaturating;
    f.n_ = n;
    f.saturator_ = s;
    f.c_ = std::move(c);
    f.perm_ = std::move(perm);
    f.sup_norm_ = norm2(f.c_);
    f.lipschitz_ = 0.0;
    for (double ck : f.c_) f.lipschitz_ = std::max(f.lipschitz_, std::abs(ck));
    return f;
}

NonlinearitySpec NonlinearitySpec::finite_rank(std::vector<double> c,
                                               std::vector<std::vector<double>> w, Saturator s,
                                               std::size_t n) {
    if (c.size() != w.size()) throw ModelError("NonlinearitySpec: c and w must have equal length");
    if (c.size() > n) throw ModelError("NonlinearitySpec: rank exceeds model dimension");
    std::vector<bool> used(n, false);
    for (const auto& wj : w) {
        if (wj.size() != n) throw ModelError("NonlinearitySpec: each w_j must have length N");
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (wj[i] != 0.0) {
                if (used[i])
                    throw ModelError("NonlinearitySpec: w_j supports must be pairwise disjoint");
                used[i] = true;
                any = true;
            }
        }
        if (!any) throw ModelError("NonlinearitySpec: w_j must be nonzero");
    }
    NonlinearitySpec f;
    f.family_ = Family::FiniteRankSaturating;
    f.n_ = n;
    f.saturator_ = s;
    f.c_ = std::move(c);
    f.w_ = std::move(w);
    f.sup_norm_ = norm2(f.c_);
    f.lipschitz_ = 0.0;
    for (std::size_t j = 0; j < f.c_.size(); ++j)
        f.lipschitz_ = std::max(f.lipschitz_, std::abs(f.c_[j]) * norm2(f.w_[j]));
    return f;
}

void NonlinearitySpec::apply(std::span<const double> x, std::span<double> out) const {
    if (x.size() != n_ || out.size() != n_)
        throw ModelError("NonlinearitySpec::apply: dimension mismatch");
    switch (family_) {
        case Family::Zero:
            std::fill(out.begin(), out.end(), 0.0);
            return;
        case Family::DiagonalSaturating:
            for (std::size_t k = 0; k < n_; ++k)
                out[k] = c_[k] == 0.0 ? 0.0 : c_[k] * saturate(saturator_, x[perm_[k]]);
            return;
        case Family::FiniteRankSaturating: {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t j = 0; j < c_.size(); ++j) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n_; ++i)
                    if (w_[j][i] != 0.0) dot += w_[j][i] * x[i];
                out[j] = c_[j] * saturate(saturator_, dot);
            }
            return;
        }
    }
}

ModelSpec::ModelSpec(SpectralOperator op_, NoiseSpec noise_, NonlinearitySpec f_,
                     stable::StableIndex alpha_, double sigma_)
    : op(std::move(op_)), noise(std::move(noise_)), nonlinearity(std::move(f_)), alpha(alpha_),
      sigma(sigma_) {
    if (op.dim() != noise.dim() || op.dim() != nonlinearity.dim())
        throw ModelError("ModelSpec: operator, noise and nonlinearity dimensions differ");
    if (!(sigma > 0.0 && sigma < 1.0)) throw ModelError("ModelSpec: sigma must lie in (0, 1)");
}

std::string to_string(TailVerdict v) {
    switch (v) {
        case TailVerdict::Convergent:
            return "convergent";
        case TailVerdict::Divergent:
            return "divergent";
        case TailVerdict::FiniteTruncationOnly:
            return "finite-truncation only";
    }
    return "?";
}

AssumptionReport check_assumptions(const ModelSpec& m) {
    AssumptionReport rep;
    rep.gamma_monotone = true;  // enforced by SpectralOperator construction
    const double a = m.alpha.value();
    const auto& g = m.op.gammas();
    const auto& b = m.noise.betas();

    for (std::size_t k = 0; k < m.dim(); ++k)
        rep.summability_partial_sum += std::pow(b[k], a) / g[k];

    const bool tails = m.op.tail().has_value() && m.noise.tail().has_value();
    std::ostringstream detail;
    if (tails) {
        const double pg = m.op.tail()->exponent;
        const double pb = m.noise.tail()->exponent;
        // beta_k^alpha / gamma_k ~ k^{alpha pb - pg}
        const double es = a * pb - pg;
        rep.summability = es < -1.0 - kExponentTol ? TailVerdict::Convergent
                                                   : TailVerdict::Divergent;
        detail << "summability tail exponent " << es << "; ";
    } else {
        rep.summability = TailVerdict::FiniteTruncationOnly;
    }

    const double exp_b = 1.0 / a - m.sigma;
    for (std::size_t k = 0; k < m.dim(); ++k)
        rep.B = std::max(rep.B, std::pow(g[k], exp_b) / b[k]);
    if (tails) {
        const double pg = m.op.tail()->exponent;
        const double pb = m.noise.tail()->exponent;
        const double cg = m.op.tail()->coef;
        const double cb = m.noise.tail()->coef;
        // gamma_k^{1/alpha-sigma}/beta_k ~ (cg^{exp_b}/cb) k^{pg exp_b - pb}
        const double eB = pg * exp_b - pb;
        if (eB > kExponentTol) {
            rep.b_finite = TailVerdict::Divergent;
            detail << "B tail exponent " << eB << " > 0 (condition (2.4) fails); ";
        } else {
            rep.b_finite = TailVerdict::Convergent;
            const double k1 = static_cast<double>(m.dim() + 1);
            const double tail_val = std::pow(cg * std::pow(k1, pg), exp_b) / (cb * std::pow(k1, pb));
            rep.B = std::max(rep.B, tail_val);
        }
    } else {
        rep.b_finite = TailVerdict::FiniteTruncationOnly;
    }

    rep.pass = rep.summability != TailVerdict::Divergent && rep.b_finite != TailVerdict::Divergent;
    rep.detail = detail.str();
    return rep;
}

double hat_c(double B, stable::StableIndex alpha, double sigma) {
    if (!(B > 0.0)) throw ModelError("hat_c: B must be positive");
    if (!(sigma > 0.0 && sigma < 1.0)) throw ModelError("hat_c: sigma must lie in (0, 1)");
    const double a = alpha.value();
    return B * std::pow(2.0, 2.0 / a - sigma) * std::pow(sigma, sigma) * std::exp(-sigma);
}

EnvelopeCheck kt_envelope_check(const ModelSpec& m, const std::vector<double>& t_grid) {
    const auto rep = check_assumptions(m);
    if (!rep.pass) throw ModelError("kt_envelope_check: check_assumptions must pass first");
    const double a = m.alpha.value();
    const double sg = m.sigma;
    const double g1 = m.op.gamma1();
    const double ch = hat_c(rep.B, m.alpha, sg);
    const auto& g = m.op.gammas();
    const auto& b = m.noise.betas();
    const bool tails = m.op.tail().has_value() && m.noise.tail().has_value();

    EnvelopeCheck out;
    out.pass = true;
    for (double t : t_grid) {
        if (!(t > 0.0)) throw ModelError("kt_envelope_check: t grid must be positive");
        double kt = 0.0;
        std::size_t argmode = 0;
        for (std::size_t k = 0; k < m.dim(); ++k) {
            const double v = std::exp(-g[k] * t) * std::pow(g[k], 1.0 / a) / b[k];
            if (v > kt) {
                kt = v;
                argmode = k + 1;
            }
        }
        if (tails) {
            // phi(k) = e^{-cg k^pg t} (cg k^pg)^{1/a} / (cb k^pb), continuous in k.
            const double pg = m.op.tail()->exponent;
            const double pb = m.noise.tail()->exponent;
            const double cg = m.op.tail()->coef;
            const double cb = m.noise.tail()->coef;
            auto phi = [&](double k) {
                const double gam = cg * std::pow(k, pg);
                return std::exp(-gam * t) * std::pow(gam, 1.0 / a) / (cb * std::pow(k, pb));
            };
            double kstar = static_cast<double>(m.dim() + 1);
            const double num = pg / a - pb;
            if (num > 0.0) {
                const double k_opt = std::pow(num / (cg * pg * t), 1.0 / pg);
                kstar = std::max(kstar, k_opt);
            }
            const double tail_val = std::max(phi(static_cast<double>(m.dim() + 1)), phi(kstar));
            if (tail_val > kt) {
                kt = tail_val;
                argmode = 0;  // continuous tail
            }
        }
        const double envelope = ch * std::exp(-0.5 * g1 * t) / std::pow(t, sg);
        const double ratio = kt / envelope;
        if (ratio > out.max_ratio) {
            out.max_ratio = ratio;
            out.worst_t = t;
            out.worst_mode = argmode;
        }
    }
    out.pass = out.max_ratio <= 1.0 + 1e-9;
    return out;
}

DerivedConstants derived_constants(const ModelSpec& m) {
    const auto rep = check_assumptions(m);
    if (!rep.pass) {
        throw ModelError("derived_constants: assumptions fail (" + rep.detail +
                         "); constants undefined");
    }
    DerivedConstants dc;
    dc.gamma1 = m.op.gamma1();
    dc.B = rep.B;
    dc.hat_c = hat_c(dc.B, m.alpha, m.sigma);
    dc.fisher = stable::fisher_integral(m.alpha);
    dc.c_alpha = dc.fisher / 8.0;
    dc.C0 = dc.hat_c * dc.fisher;
    dc.F_sup = m.nonlinearity.sup_norm();
    dc.L_F = m.nonlinearity.lipschitz();
    const double gm = special::gamma_fn(1.0 - m.sigma);
    const double base = dc.C0 * dc.F_sup * gm;
    dc.theta = base == 0.0 ? 0.0 : std::pow(base, 1.0 / (1.0 - m.sigma));
    dc.omega = 0.5 * dc.gamma1 - dc.theta;
    dc.condition_i = dc.L_F < dc.gamma1;
    dc.condition_ii = dc.omega > 0.0;
    const double half_pow = std::pow(0.5 * dc.gamma1, 1.0 - m.sigma);
    dc.display_ii_as_printed = dc.F_sup < dc.C0 / gm * half_pow;
    dc.display_ii_omega_form = dc.F_sup < half_pow / (dc.C0 * gm);
    return dc;
}

HeatVerdicts heat_example_verdicts(int d, stable::StableIndex alpha, double eta) {
    HeatVerdicts v;
    const double a = alpha.value();
    v.summability = 2.0 > static_cast<double>(d) + a * eta;
    v.sigma_window = 2.0 / a - eta < 2.0;
    v.gamma1 = static_cast<double>(d);
    return v;
}

ModelSpec heat_example(int d, stable::StableIndex alpha, double eta, int n_per_axis,
                       double sigma) {
    if (d < 1) throw ModelError("heat_example: d must be >= 1");
    if (n_per_axis < 1) throw ModelError("heat_example: N_per_axis must be >= 1");
    const auto v = heat_example_verdicts(d, alpha, eta);
    if (!v.summability) {
        std::ostringstream os;
        os << "heat_example: summability inequality 2 > d + alpha*eta fails (2 > "
           << d + alpha.value() * eta << " is false)";
        throw ModelError(os.str());
    }
    if (!v.sigma_window) {
        std::ostringstream os;
        os << "heat_example: regularity inequality 2/alpha - eta < 2 fails (" <<
            2.0 / alpha.value() - eta << " < 2 is false)";
        throw ModelError(os.str());
    }
    double total_modes = 1.0;
    for (int i = 0; i < d; ++i) total_modes *= n_per_axis;
    if (total_modes > 2e5) throw ModelError("heat_example: truncation too large (> 2e5 modes)");

    // Enumerate multi-indices in {1..N}^d, gamma = |k|^2, beta = |k|^eta.
    const std::size_t count = static_cast<std::size_t>(total_modes);
    std::vector<double> gam(count), bet(count);
    std::vector<int> idx(d, 1);
    for (std::size_t m_i = 0; m_i < count; ++m_i) {
        double g = 0.0;
        for (int i = 0; i < d; ++i) g += static_cast<double>(idx[i]) * idx[i];
        gam[m_i] = g;
        bet[m_i] = std::pow(std::sqrt(g), eta);
        for (int i = 0; i < d; ++i) {
            if (idx[i] < n_per_axis) {
                ++idx[i];
                break;
            }
            idx[i] = 1;
        }
    }
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return gam[i] < gam[j]; });
    std::vector<double> gs(count), bs(count);
    for (std::size_t i = 0; i < count; ++i) {
        gs[i] = gam[order[i]];
        bs[i] = bet[order[i]];
    }

    // Sorted-index tails: mode counting gives gamma_j ~ (j/V_d)^{2/d},
    // beta_j = gamma_j^{eta/2}, with V_d the positive-orthant ball constant.
    const double vd = std::pow(M_PI, 0.5 * d) /
                      (std::pow(2.0, d) * special::gamma_fn(0.5 * d + 1.0));
    const double cg = std::pow(1.0 / vd, 2.0 / d);
    PowerTail gamma_tail{cg, 2.0 / static_cast<double>(d)};
    PowerTail beta_tail{std::pow(cg, 0.5 * eta), eta / static_cast<double>(d)};

    return ModelSpec(SpectralOperator(std::move(gs), gamma_tail),
                     NoiseSpec(std::move(bs), beta_tail), NonlinearitySpec::zero(count), alpha,
                     sigma);
}

SigmaSweepResult sweep_sigma(const ModelSpec& m, double step) {
    if (!(step > 0.0 && step < 1.0)) throw ModelError("sweep_sigma: bad step");
    SigmaSweepResult out;
    out.best_omega = -std::numeric_limits<double>::infinity();
    for (double s = step; s < 1.0 - 1e-12; s += step) {
        ModelSpec trial(m.op, m.noise, m.nonlinearity, m.alpha, s);
        const auto rep = check_assumptions(trial);
        if (!rep.pass) continue;
        const auto dc = derived_constants(trial);
        out.table.push_back({s, dc.omega});
        if (dc.omega > out.best_omega) {
            out.best_omega = dc.omega;
            out.best_sigma = s;
        }
    }
    if (out.table.empty()) throw ModelError("sweep_sigma: no admissible sigma found");
    return out;
}

}  // namespace spde::model
