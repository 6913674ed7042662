#include "spde/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spde/parallel.hpp"

namespace spde::mixing {

InvariantEstimate estimate_invariant(const model::ModelSpec& m,
                                     const semigroup::TestFunction& f, const sim::SimConfig& cfg,
                                     double burn_in, unsigned workers) {
    cfg.validate();
    const double g1 = m.op.gamma1();
    if (burn_in <= 0.0) burn_in = 10.0 / g1;
    if (cfg.T <= burn_in)
        throw std::invalid_argument("estimate_invariant: horizon must exceed burn-in");

    // (a) time average along one long path, sampled every record_stride
    // steps after burn-in; stderr by batch means.
    const std::size_t dim = m.dim();
    const auto coeffs = sim::make_step_coeffs(m, cfg.h);
    const std::size_t n_steps = cfg.n_steps();
    const auto burn_steps = static_cast<std::size_t>(std::ceil(burn_in / cfg.h));
    auto streams = sim::make_path_streams(cfg.master_seed, 0, dim);
    std::vector<double> state(dim, 0.0), zbuf(dim), fbuf(dim);
    std::vector<double> samples;
    samples.reserve((n_steps - burn_steps) / cfg.record_stride + 1);
    for (std::size_t s = 1; s <= n_steps; ++s) {
        sim::step(m, coeffs, state, streams, zbuf, fbuf);
        if (s > burn_steps && (s - burn_steps) % cfg.record_stride == 0)
            samples.push_back(f(state));
    }
    if (samples.size() < 64)
        throw std::invalid_argument("estimate_invariant: too few post-burn-in samples");

    InvariantEstimate out;
    out.burn_in = burn_in;
    out.horizon = cfg.T;
    double acc = 0.0;
    for (double v : samples) acc += v;
    out.time_average = acc / static_cast<double>(samples.size());
    const std::size_t n_batches = 32;
    const std::size_t per = samples.size() / n_batches;
    std::vector<double> batch(n_batches, 0.0);
    for (std::size_t b = 0; b < n_batches; ++b) {
        double a = 0.0;
        for (std::size_t i = 0; i < per; ++i) a += samples[b * per + i];
        batch[b] = a / static_cast<double>(per);
    }
    double bm = 0.0;
    for (double v : batch) bm += v;
    bm /= static_cast<double>(n_batches);
    double ss = 0.0;
    for (double v : batch) ss += (v - bm) * (v - bm);
    out.time_average_stderr =
        std::sqrt(ss / (static_cast<double>(n_batches) - 1.0) / static_cast<double>(n_batches));

    // (b) ensemble average at fixed large t (the burn-in horizon), fresh
    // stream namespace.
    sim::SimConfig ens = cfg;
    ens.master_seed = cfg.master_seed ^ 0x7e7e7e7e7e7e7e7eULL;
    ens.T = std::max(burn_in, cfg.h);
    const auto est = semigroup::estimate_Ptf(m, f, std::vector<double>(dim, 0.0), ens.T, ens,
                                             workers);
    out.ensemble_average = est.value;
    out.ensemble_stderr = est.stderr_;

    const double joint = std::sqrt(out.time_average_stderr * out.time_average_stderr +
                                   out.ensemble_stderr * out.ensemble_stderr);
    out.consistent = std::abs(out.time_average - out.ensemble_average) <= 3.0 * joint;
    return out;
}

DecayCurve decay_curve(const model::ModelSpec& m, const semigroup::TestFunction& f,
                       std::span<const double> x, std::span<const double> t_grid,
                       const sim::SimConfig& cfg, double mu_hat, double mu_stderr,
                       unsigned workers) {
    std::vector<double> snapped;
    const auto ests = semigroup::estimate_Ptf_curve(m, f, x, t_grid, cfg, &snapped, workers);
    DecayCurve curve;
    curve.t_grid = snapped;
    curve.mu_hat = mu_hat;
    curve.mu_stderr = mu_stderr;
    curve.deltas.resize(ests.size());
    curve.stderrs.resize(ests.size());
    for (std::size_t i = 0; i < ests.size(); ++i) {
        curve.deltas[i] = std::abs(ests[i].value - mu_hat);
        curve.stderrs[i] =
            std::sqrt(ests[i].stderr_ * ests[i].stderr_ + mu_stderr * mu_stderr);
    }
    return curve;
}

RateFit fit_exponential_rate(const DecayCurve& curve) {
    const std::size_t n = curve.deltas.size();
    // Largest contiguous run with delta above the noise floor.
    std::size_t best_b = 0, best_e = 0;
    std::size_t b = 0;
    while (b < n) {
        if (curve.deltas[b] > 3.0 * curve.stderrs[b]) {
            std::size_t e = b;
            while (e < n && curve.deltas[e] > 3.0 * curve.stderrs[e]) ++e;
            if (e - b > best_e - best_b) {
                best_b = b;
                best_e = e;
            }
            b = e;
        } else {
            ++b;
        }
    }
    if (best_e - best_b < 5) {
        std::ostringstream os;
        os << "no signal window: longest run above 3 stderr has " << best_e - best_b
           << " points (need 5)";
        throw NoSignalWindow(os.str());
    }

    // WLS of log delta on t; Var(log delta) ~ (stderr/delta)^2.
    double sw = 0.0, st = 0.0, sy = 0.0;
    for (std::size_t i = best_b; i < best_e; ++i) {
        const double rel = curve.stderrs[i] / curve.deltas[i];
        const double w = rel > 0.0 ? 1.0 / (rel * rel) : 1e12;
        sw += w;
        st += w * curve.t_grid[i];
        sy += w * std::log(curve.deltas[i]);
    }
    const double tbar = st / sw, ybar = sy / sw;
    double cov = 0.0, var = 0.0, sstot = 0.0;
    for (std::size_t i = best_b; i < best_e; ++i) {
        const double rel = curve.stderrs[i] / curve.deltas[i];
        const double w = rel > 0.0 ? 1.0 / (rel * rel) : 1e12;
        const double dt = curve.t_grid[i] - tbar;
        const double dy = std::log(curve.deltas[i]) - ybar;
        cov += w * dt * dy;
        var += w * dt * dt;
        sstot += w * dy * dy;
    }
    if (var == 0.0) throw NoSignalWindow("no signal window: degenerate time grid");
    const double slope = cov / var;
    const double intercept = ybar - slope * tbar;
    double ssres = 0.0;
    for (std::size_t i = best_b; i < best_e; ++i) {
        const double rel = curve.stderrs[i] / curve.deltas[i];
        const double w = rel > 0.0 ? 1.0 / (rel * rel) : 1e12;
        const double r = std::log(curve.deltas[i]) - (intercept + slope * curve.t_grid[i]);
        ssres += w * r * r;
    }

    RateFit fit;
    fit.c_emp = -slope;
    fit.C_emp = std::exp(intercept);
    fit.r2 = sstot > 0.0 ? 1.0 - ssres / sstot : 1.0;
    fit.window_begin = best_b;
    fit.window_end = best_e;
    return fit;
}

TheoryComparison compare_with_theory(const model::ModelSpec& m, const RateFit& fit,
                                     const DecayCurve& curve) {
    const auto dc = model::derived_constants(m);
    TheoryComparison cmp;
    cmp.omega = dc.omega;
    cmp.contraction_rate = dc.gamma1 - dc.L_F;
    cmp.c_emp = fit.c_emp;
    cmp.C_emp = fit.C_emp;
    cmp.condition_i = dc.condition_i;
    cmp.condition_ii = dc.condition_ii;
    cmp.positive_rate = fit.c_emp > 0.0;

    if (dc.condition_i && dc.condition_ii)
        cmp.exponent_used = std::min(cmp.omega, cmp.contraction_rate);
    else if (dc.condition_i)
        cmp.exponent_used = cmp.contraction_rate;
    else if (dc.condition_ii)
        cmp.exponent_used = cmp.omega;
    cmp.has_guarantee = dc.condition_i || dc.condition_ii;

    if (!cmp.has_guarantee) {
        cmp.verdict = "no theoretical guarantee (conditions (i) and (ii) both fail)";
        cmp.envelope_ok = false;
        return cmp;
    }

    bool ok = true;
    for (std::size_t i = fit.window_begin; i < fit.window_end; ++i) {
        const double rel = curve.stderrs[i] / curve.deltas[i];
        const double bound =
            fit.C_emp * std::exp(-cmp.exponent_used * curve.t_grid[i]) * (1.0 + 3.0 * rel);
        if (curve.deltas[i] > bound) ok = false;
    }
    cmp.envelope_ok = ok;
    std::ostringstream os;
    os << "omega = " << cmp.omega << ", gamma1 - L_F = " << cmp.contraction_rate
       << ", c_emp = " << cmp.c_emp << "; envelope at exponent " << cmp.exponent_used
       << (ok ? " holds" : " VIOLATED") << " on the fitted window";
    cmp.verdict = os.str();
    return cmp;
}

}  // namespace spde::mixing
