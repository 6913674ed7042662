#include "spde/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spde/parallel.hpp"
#include "spde/special.hpp"

namespace spde::semigroup {

namespace {

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

MeanStderr mean_stderr(std::span<const double> v) {
    const auto n = static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += x;
    const double mean = acc / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {mean, sd / std::sqrt(n)};
}

// Steps-and-stepsize pair landing exactly on t.
struct StepPlan {
    std::size_t n_steps;
    double h_eff;
};
StepPlan plan_steps(double t, double h) {
    auto n = static_cast<std::size_t>(std::llround(t / h));
    if (n == 0) n = 1;
    return {n, t / static_cast<double>(n)};
}

unsigned pick_workers(unsigned workers) { return workers == 0 ? par::default_workers() : workers; }

}  // namespace

TestFunction::TestFunction(Family family, std::vector<double> w, double b)
    : family_(family), w_(std::move(w)), b_(b) {
    double acc = 0.0;
    for (double v : w_) acc += v * v;
    w_norm_ = std::sqrt(acc);
    if (w_norm_ == 0.0) throw std::invalid_argument("TestFunction: w must be nonzero");
}

double TestFunction::g(double u) const {
    switch (family_) {
        case Family::Cosine:
            return std::cos(u);
        case Family::Tanh:
            return std::tanh(u);
        case Family::GaussBump:
            return std::exp(-0.5 * u * u);
    }
    return 0.0;
}

double TestFunction::g_prime(double u) const {
    switch (family_) {
        case Family::Cosine:
            return -std::sin(u);
        case Family::Tanh: {
            const double th = std::tanh(u);
            return 1.0 - th * th;
        }
        case Family::GaussBump:
            return -u * std::exp(-0.5 * u * u);
    }
    return 0.0;
}

double TestFunction::grad_sup_norm() const {
    const double g1 = family_ == Family::GaussBump ? std::exp(-0.5) : 1.0;
    return w_norm_ * g1;
}

double TestFunction::operator()(std::span<const double> x) const {
    if (x.size() != w_.size()) throw std::invalid_argument("TestFunction: dimension mismatch");
    double u = b_;
    for (std::size_t i = 0; i < w_.size(); ++i)
        if (w_[i] != 0.0) u += w_[i] * x[i];
    return g(u);
}

void TestFunction::gradient(std::span<const double> x, std::span<double> out) const {
    double u = b_;
    for (std::size_t i = 0; i < w_.size(); ++i)
        if (w_[i] != 0.0) u += w_[i] * x[i];
    const double gp = g_prime(u);
    for (std::size_t i = 0; i < w_.size(); ++i) out[i] = gp * w_[i];
}

std::vector<std::size_t> TestFunction::support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < w_.size(); ++i)
        if (w_[i] != 0.0) s.push_back(i);
    return s;
}

SemigroupEstimate estimate_Ptf(const model::ModelSpec& m, const TestFunction& f,
                               std::span<const double> x, double t, const sim::SimConfig& cfg,
                               unsigned workers) {
    if (x.size() != m.dim()) throw std::invalid_argument("estimate_Ptf: x dimension mismatch");
    if (t == 0.0) return {f(x), 0.0, cfg.n_paths, 0.0};
    if (!(t > 0.0)) throw std::invalid_argument("estimate_Ptf: t must be >= 0");
    const auto plan = plan_steps(t, cfg.h);
    const auto coeffs = sim::make_step_coeffs(m, plan.h_eff);

    std::vector<double> vals(cfg.n_paths);
    par::parallel_for(cfg.n_paths, pick_workers(workers), [&](std::size_t path) {
        auto streams = sim::make_path_streams(cfg.master_seed, path, m.dim());
        std::vector<double> state(x.begin(), x.end());
        std::vector<double> zbuf(m.dim()), fbuf(m.dim());
        for (std::size_t s = 0; s < plan.n_steps; ++s)
            sim::step(m, coeffs, state, streams, zbuf, fbuf);
        vals[path] = f(state);
    });
    const auto ms = mean_stderr(vals);
    return {ms.mean, ms.stderr_, cfg.n_paths, t};
}

std::vector<SemigroupEstimate> estimate_Ptf_curve(const model::ModelSpec& m,
                                                  const TestFunction& f,
                                                  std::span<const double> x,
                                                  std::span<const double> t_grid,
                                                  const sim::SimConfig& cfg,
                                                  std::vector<double>* snapped_times,
                                                  unsigned workers) {
    if (t_grid.empty()) return {};
    // Snap each horizon to a step count at the configured h.
    std::vector<std::size_t> steps(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0))
            throw std::invalid_argument("estimate_Ptf_curve: negative horizon");
        steps[i] = static_cast<std::size_t>(std::llround(t_grid[i] / cfg.h));
    }
    if (!std::is_sorted(steps.begin(), steps.end()))
        throw std::invalid_argument("estimate_Ptf_curve: t grid must be increasing");
    const std::size_t n_steps = steps.back();
    const auto coeffs = sim::make_step_coeffs(m, cfg.h);

    std::vector<double> vals(cfg.n_paths * t_grid.size());
    par::parallel_for(cfg.n_paths, pick_workers(workers), [&](std::size_t path) {
        auto streams = sim::make_path_streams(cfg.master_seed, path, m.dim());
        std::vector<double> state(x.begin(), x.end());
        std::vector<double> zbuf(m.dim()), fbuf(m.dim());
        std::size_t gi = 0;
        for (std::size_t s = 0; s <= n_steps; ++s) {
            while (gi < steps.size() && steps[gi] == s) {
                vals[path * t_grid.size() + gi] = f(state);
                ++gi;
            }
            if (s < n_steps) sim::step(m, coeffs, state, streams, zbuf, fbuf);
        }
    });

    std::vector<SemigroupEstimate> out(t_grid.size());
    std::vector<double> col(cfg.n_paths);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        for (std::size_t pth = 0; pth < cfg.n_paths; ++pth)
            col[pth] = vals[pth * t_grid.size() + i];
        const auto ms = mean_stderr(col);
        const double snapped = static_cast<double>(steps[i]) * cfg.h;
        out[i] = {ms.mean, steps[i] == 0 ? 0.0 : ms.stderr_, cfg.n_paths, snapped};
    }
    if (snapped_times) {
        snapped_times->resize(steps.size());
        for (std::size_t i = 0; i < steps.size(); ++i)
            (*snapped_times)[i] = static_cast<double>(steps[i]) * cfg.h;
    }
    return out;
}

GradientEstimate estimate_gradient_Ptf(const model::ModelSpec& m, const TestFunction& f,
                                       std::span<const double> x, double t,
                                       const sim::SimConfig& cfg, double eps, unsigned workers,
                                       bool richardson) {
    if (!(eps > 0.0)) throw std::invalid_argument("estimate_gradient_Ptf: eps must be positive");
    const std::size_t dim = m.dim();
    GradientEstimate ge;
    ge.t = t;
    ge.eps = eps;
    ge.component.resize(dim);
    ge.component_stderr.resize(dim);

    if (t == 0.0) {
        std::vector<double> grad(dim);
        f.gradient(x, grad);
        ge.component = grad;
        std::fill(ge.component_stderr.begin(), ge.component_stderr.end(), 0.0);
    } else {
        const auto plan = plan_steps(t, cfg.h);
        const auto coeffs = sim::make_step_coeffs(m, plan.h_eff);
        // One pass per coordinate: evolve the +eps and -eps states under the
        // identical noise draws.
        for (std::size_t k = 0; k < dim; ++k) {
            std::vector<double> diffs(cfg.n_paths);
            par::parallel_for(cfg.n_paths, pick_workers(workers), [&](std::size_t path) {
                auto streams = sim::make_path_streams(cfg.master_seed, path, dim);
                std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
                xp[k] += eps;
                xm[k] -= eps;
                std::vector<double> zbuf(dim), fbuf(dim);
                for (std::size_t s = 0; s < plan.n_steps; ++s) {
                    sim::draw_stable_noise(m.alpha, streams, zbuf);
                    sim::apply_step(m, coeffs, xp, zbuf, fbuf);
                    sim::apply_step(m, coeffs, xm, zbuf, fbuf);
                }
                diffs[path] = (f(xp) - f(xm)) / (2.0 * eps);
            });
            const auto ms = mean_stderr(diffs);
            ge.component[k] = ms.mean;
            ge.component_stderr[k] = ms.stderr_;
        }
    }

    double n2 = 0.0, v2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        n2 += ge.component[k] * ge.component[k];
        v2 += ge.component_stderr[k] * ge.component_stderr[k];
    }
    ge.norm = std::sqrt(n2);
    ge.norm_stderr = std::sqrt(v2);

    const double budget = std::exp(-(m.op.gamma1() - m.nonlinearity.lipschitz()) * t) *
                          f.grad_sup_norm();
    for (double se : ge.component_stderr)
        if (se > 0.25 * budget) ge.stderr_warning = true;

    if (richardson && t > 0.0) {
        const auto coarse = estimate_gradient_Ptf(m, f, x, t, cfg, 2.0 * eps, workers, false);
        for (std::size_t k = 0; k < dim; ++k)
            ge.richardson_diff =
                std::max(ge.richardson_diff, std::abs(ge.component[k] - coarse.component[k]));
    }
    return ge;
}

CouplingReport coupling_contraction_check(const model::ModelSpec& m, std::span<const double> x,
                                          std::span<const double> y, const sim::SimConfig& cfg,
                                          unsigned workers) {
    cfg.validate();
    const std::size_t dim = m.dim();
    if (x.size() != dim || y.size() != dim)
        throw std::invalid_argument("coupling_contraction_check: dimension mismatch");
    const double g1 = m.op.gamma1();
    const double lf = m.nonlinearity.lipschitz();
    const double h = cfg.h;
    const double rho = std::exp(-g1 * h) + lf * (-std::expm1(-g1 * h)) / g1;
    const std::size_t n_steps = cfg.n_steps();
    const auto coeffs = sim::make_step_coeffs(m, h);

    double d0 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) d0 += (x[k] - y[k]) * (x[k] - y[k]);
    d0 = std::sqrt(d0);

    std::vector<double> worst(cfg.n_paths, 0.0);
    par::parallel_for(cfg.n_paths, pick_workers(workers), [&](std::size_t path) {
        auto streams = sim::make_path_streams(cfg.master_seed, path, dim);
        std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
        std::vector<double> zbuf(dim), fbuf(dim);
        double bound = d0;
        double w = 0.0;
        for (std::size_t s = 1; s <= n_steps; ++s) {
            sim::draw_stable_noise(m.alpha, streams, zbuf);
            sim::apply_step(m, coeffs, xs, zbuf, fbuf);
            sim::apply_step(m, coeffs, ys, zbuf, fbuf);
            bound *= rho;
            double d = 0.0;
            for (std::size_t k = 0; k < dim; ++k) d += (xs[k] - ys[k]) * (xs[k] - ys[k]);
            d = std::sqrt(d);
            const double ratio = bound > 0.0 ? d / bound : (d > 0.0 ? HUGE_VAL : 0.0);
            w = std::max(w, ratio);
        }
        worst[path] = w;
    });

    CouplingReport rep;
    rep.rho = rho;
    rep.steps_checked = n_steps * cfg.n_paths;
    rep.max_ratio = d0 == 0.0 ? 0.0 : *std::max_element(worst.begin(), worst.end());
    for (double w : worst)
        if (w > 1.0 + 1e-9) ++rep.violations;
    rep.pass = rep.violations == 0;
    return rep;
}

OuGradientReport ou_gradient_bound_check(const model::ModelSpec& m, const TestFunction& f,
                                         std::span<const double> x,
                                         std::span<const double> t_grid,
                                         const sim::SimConfig& cfg, unsigned workers) {
    // F forced to zero: the OU bounds are statements about S_t.
    model::ModelSpec ou(m.op, m.noise, model::NonlinearitySpec::zero(m.dim()), m.alpha, m.sigma);
    const auto dc = model::derived_constants(ou);
    const double g1 = ou.op.gamma1();

    OuGradientReport rep;
    rep.pass = true;
    for (double t : t_grid) {
        if (!(t > 0.0))
            throw std::invalid_argument("ou_gradient_bound_check: t grid must be positive");
        const auto ge = estimate_gradient_Ptf(ou, f, x, t, cfg, 1e-4, workers);
        OuGradientPoint pt;
        pt.t = t;
        pt.grad_norm = ge.norm;
        pt.grad_stderr = ge.norm_stderr;
        pt.bound_i = std::exp(-g1 * t) * f.grad_sup_norm();
        pt.bound_ii = dc.C0 * std::exp(-0.5 * g1 * t) / std::pow(t, ou.sigma) * f.sup_norm();
        pt.bound_envelope = 8.0 * dc.c_alpha * dc.hat_c * std::exp(-0.5 * g1 * t) /
                            std::pow(t, ou.sigma) * f.sup_norm();
        // finite-difference allowance O(eps) on top of 3 stderr
        const double tol = 3.0 * pt.grad_stderr + 1e-3 * pt.bound_i + 1e-12;
        pt.pass_i = pt.grad_norm <= pt.bound_i + tol;
        pt.pass_ii = pt.grad_norm <= pt.bound_ii + 3.0 * pt.grad_stderr + 1e-12;
        rep.pass = rep.pass && pt.pass_i && pt.pass_ii;
        rep.points.push_back(pt);
    }
    return rep;
}

KolmogorovResidual mild_kolmogorov_residual(const model::ModelSpec& m, const TestFunction& f,
                                            std::span<const double> x, double t,
                                            const sim::SimConfig& cfg, int quad_nodes,
                                            unsigned workers) {
    if (m.dim() > 2)
        throw std::invalid_argument("mild_kolmogorov_residual: use N = 1 or 2 (nested MC)");
    if (quad_nodes < 4 || quad_nodes % 2 != 0)
        throw std::invalid_argument("mild_kolmogorov_residual: quad_nodes must be even, >= 4");
    const std::size_t dim = m.dim();
    const double sigma = m.sigma;

    model::ModelSpec ou(m.op, m.noise, model::NonlinearitySpec::zero(dim), m.alpha, m.sigma);

    // LHS and the OU term.
    const auto lhs = estimate_Ptf(m, f, x, t, cfg, workers);
    sim::SimConfig cfg_ou = cfg;
    cfg_ou.master_seed = cfg.master_seed ^ 0x5aa5a55a5aa5a55aULL;
    const auto st = estimate_Ptf(ou, f, x, t, cfg_ou, workers);

    // Integral over the graded mesh s_j = t (1 - (1 - u_j)^{1/(1-sigma)}),
    // u_j = j/J, integrating phi(s(u)) s'(u) du by the trapezoid rule.  The
    // substitution absorbs the (t-s)^{-sigma}-type endpoint behaviour.
    const int J = quad_nodes;
    const double pinv = 1.0 / (1.0 - sigma);
    std::vector<double> node_val(J + 1, 0.0), node_se(J + 1, 0.0), node_w(J + 1, 0.0);

    const std::size_t n_outer = std::max<std::size_t>(cfg.n_paths / 16, 48);
    const std::size_t n_inner = std::max<std::size_t>(cfg.n_paths / 8, 256);

    for (int j = 0; j <= J; ++j) {
        const double u = static_cast<double>(j) / J;
        const double one_minus = std::pow(1.0 - u, pinv);
        const double s = t * (1.0 - one_minus);
        const double s_prime = j == J ? 0.0 : t * pinv * std::pow(1.0 - u, pinv - 1.0);
        node_w[j] = s_prime * ((j == 0 || j == J) ? 0.5 : 1.0) / J;
        if (s_prime == 0.0) continue;

        // phi(s) = S_{t-s}[ <F, D P_s f> ](x): outer OU transport, inner
        // CRN gradient at each outer sample.
        std::vector<double> outer_vals(n_outer);
        const double ts = t - s;
        sim::SimConfig inner_cfg = cfg;
        inner_cfg.n_paths = n_inner;
        for (std::size_t i = 0; i < n_outer; ++i) {
            std::vector<double> y(dim);
            if (ts > 0.0) {
                auto streams = sim::make_path_streams(
                    cfg.master_seed ^ 0xC3C3C3C3C3C3C3C3ULL, (static_cast<std::uint64_t>(j) << 32) | i,
                    dim);
                const auto za = sim::sample_ZA(ou, ts, streams);
                for (std::size_t k = 0; k < dim; ++k)
                    y[k] = std::exp(-ou.op.gammas()[k] * ts) * x[k] + za[k];
            } else {
                for (std::size_t k = 0; k < dim; ++k) y[k] = x[k];
            }
            std::vector<double> fy(dim), grad(dim);
            m.nonlinearity.apply(y, fy);
            if (s == 0.0) {
                f.gradient(y, grad);
            } else {
                inner_cfg.master_seed = cfg.master_seed ^ (0x9d2c5680u + i * 0x100000001b3ULL + j);
                const auto ge = estimate_gradient_Ptf(m, f, y, s, inner_cfg, 1e-4, workers);
                grad = ge.component;
            }
            double dot = 0.0;
            for (std::size_t k = 0; k < dim; ++k) dot += fy[k] * grad[k];
            outer_vals[i] = dot;
        }
        const auto ms = mean_stderr(outer_vals);
        node_val[j] = ms.mean;
        node_se[j] = ms.stderr_;
    }

    double integral = 0.0, integral_half = 0.0, var_quad = 0.0;
    for (int j = 0; j <= J; ++j) {
        integral += node_w[j] * node_val[j];
        var_quad += node_w[j] * node_w[j] * node_se[j] * node_se[j];
    }
    // Coarse estimate from every other node (trapezoid on J/2 intervals).
    for (int j = 0; j <= J; j += 2) {
        const double u = static_cast<double>(j) / J;
        const double s_prime = j == J ? 0.0 : t * pinv * std::pow(1.0 - u, pinv - 1.0);
        const double w = s_prime * ((j == 0 || j == J) ? 0.5 : 1.0) * 2.0 / J;
        integral_half += w * node_val[j];
    }

    KolmogorovResidual out;
    out.lhs = lhs.value;
    out.ou_term = st.value;
    out.integral_term = integral;
    out.rhs = st.value + integral;
    out.residual = std::abs(lhs.value - out.rhs);
    out.stderr_combined =
        std::sqrt(lhs.stderr_ * lhs.stderr_ + st.stderr_ * st.stderr_ + var_quad);
    out.quad_budget = std::abs(integral - integral_half);
    out.tolerance = 3.0 * out.stderr_combined + out.quad_budget;
    out.pass = out.residual <= out.tolerance;
    return out;
}

CoupledStateDiff coupled_state_difference(const model::ModelSpec& m, std::span<const double> x,
                                          std::size_t k, double t, const sim::SimConfig& cfg,
                                          double eps) {
    const std::size_t dim = m.dim();
    if (k >= dim) throw std::invalid_argument("coupled_state_difference: bad coordinate");
    const auto plan = plan_steps(t, cfg.h);
    const auto coeffs = sim::make_step_coeffs(m, plan.h_eff);
    std::vector<double> comp(cfg.n_paths);
    CoupledStateDiff out;
    out.mean_kth.assign(dim, 0.0);
    for (std::size_t path = 0; path < cfg.n_paths; ++path) {
        auto streams = sim::make_path_streams(cfg.master_seed, path, dim);
        std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
        xp[k] += eps;
        xm[k] -= eps;
        std::vector<double> zbuf(dim), fbuf(dim);
        for (std::size_t s = 0; s < plan.n_steps; ++s) {
            sim::draw_stable_noise(m.alpha, streams, zbuf);
            sim::apply_step(m, coeffs, xp, zbuf, fbuf);
            sim::apply_step(m, coeffs, xm, zbuf, fbuf);
        }
        for (std::size_t i = 0; i < dim; ++i)
            out.mean_kth[i] += (xp[i] - xm[i]) / (2.0 * eps) / cfg.n_paths;
        comp[path] = (xp[k] - xm[k]) / (2.0 * eps);
    }
    out.stderr_kth = mean_stderr(comp).stderr_;
    return out;
}

}  // namespace spde::semigroup
