#include "spde/simulator.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace spde::sim {

void SimConfig::validate() const {
    if (!(h > 0.0)) throw std::invalid_argument("SimConfig: h must be positive");
    if (!(T >= h)) throw std::invalid_argument("SimConfig: T must be >= h");
    if (!(T / h < 9e15)) throw std::invalid_argument("SimConfig: T/h exceeds integer range");
    if (n_paths == 0) throw std::invalid_argument("SimConfig: n_paths must be >= 1");
    if (record_stride == 0) throw std::invalid_argument("SimConfig: record_stride must be >= 1");
}

std::size_t SimConfig::n_steps() const {
    const auto n = static_cast<std::size_t>(std::llround(T / h));
    return n == 0 ? 1 : n;
}

double linear_increment_scale(stable::StableIndex alpha, double gamma_k, double beta_k,
                              double h) {
    if (!(gamma_k >= 0.0) || !(beta_k > 0.0) || !(h > 0.0))
        throw std::invalid_argument("linear_increment_scale: arguments must be positive");
    const double a = alpha.value();
    const double y = a * gamma_k * h;
    // (1 - e^{-y}) / (alpha gamma) = h * (-expm1(-y) / y), limit h at y = 0.
    const double q = y < 1e-12 ? h * (1.0 - 0.5 * y) : h * (-std::expm1(-y) / y);
    return beta_k * std::pow(q, 1.0 / a);
}

StepCoeffs make_step_coeffs(const model::ModelSpec& m, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("make_step_coeffs: h must be positive");
    const std::size_t n = m.dim();
    StepCoeffs c;
    c.h = h;
    c.decay.resize(n);
    c.drift_weight.resize(n);
    c.noise_scale.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double g = m.op.gammas()[k];
        c.decay[k] = std::exp(-g * h);
        const double y = g * h;
        c.drift_weight[k] = y < 1e-12 ? h * (1.0 - 0.5 * y) : -std::expm1(-y) / g;
        c.noise_scale[k] = linear_increment_scale(m.alpha, g, m.noise.betas()[k], h);
    }
    return c;
}

std::vector<rng::Stream> make_path_streams(std::uint64_t master_seed, std::uint64_t path_index,
                                           std::size_t n_modes) {
    std::vector<rng::Stream> s;
    s.reserve(n_modes);
    for (std::size_t k = 0; k < n_modes; ++k) s.emplace_back(master_seed, path_index, k);
    return s;
}

void draw_stable_noise(stable::StableIndex alpha, std::span<rng::Stream> streams,
                       std::span<double> z) {
    for (std::size_t k = 0; k < z.size(); ++k)
        z[k] = stable::sample_standard_stable(alpha, streams[k]);
}

void apply_step(const model::ModelSpec& m, const StepCoeffs& c, std::span<double> x,
                std::span<const double> z, std::span<double> fbuf) {
    m.nonlinearity.apply(x, fbuf);
    for (std::size_t k = 0; k < x.size(); ++k)
        x[k] = c.decay[k] * x[k] + fbuf[k] * c.drift_weight[k] + c.noise_scale[k] * z[k];
}

void step(const model::ModelSpec& m, const StepCoeffs& c, std::span<double> x,
          std::span<rng::Stream> streams, std::span<double> zbuf, std::span<double> fbuf) {
    draw_stable_noise(m.alpha, streams, zbuf);
    apply_step(m, c, x, zbuf, fbuf);
}

Trajectory simulate_path(const model::ModelSpec& m, std::span<const double> x0,
                         const SimConfig& cfg, std::uint64_t path_index) {
    cfg.validate();
    if (x0.size() != m.dim()) throw std::invalid_argument("simulate_path: x0 dimension mismatch");
    const std::size_t n_steps = cfg.n_steps();
    const auto coeffs = make_step_coeffs(m, cfg.h);
    auto streams = make_path_streams(cfg.master_seed, path_index, m.dim());

    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> zbuf(m.dim()), fbuf(m.dim());

    Trajectory tr;
    tr.times.push_back(0.0);
    tr.states.emplace_back(x);
    for (std::size_t n = 1; n <= n_steps; ++n) {
        step(m, coeffs, x, streams, zbuf, fbuf);
        if (n % cfg.record_stride == 0) {
            tr.times.push_back(static_cast<double>(n) * cfg.h);
            tr.states.emplace_back(x);
        }
    }
    return tr;
}

std::vector<double> sample_ZA(const model::ModelSpec& m, double t,
                              std::span<rng::Stream> streams) {
    if (!(t > 0.0)) throw std::invalid_argument("sample_ZA: t must be positive");
    std::vector<double> z(m.dim());
    for (std::size_t k = 0; k < m.dim(); ++k) {
        const double scale =
            linear_increment_scale(m.alpha, m.op.gammas()[k], m.noise.betas()[k], t);
        z[k] = scale * stable::sample_standard_stable(m.alpha, streams[k]);
    }
    return z;
}

ZaMomentReport za_moment_check(const model::ModelSpec& m, double p, double t, std::size_t n,
                               std::uint64_t seed) {
    const double a = m.alpha.value();
    if (!(p > 0.0) || p >= a) {
        std::ostringstream os;
        os << "za_moment_check: p-th moment infinite for stable index alpha (p = " << p
           << ", alpha = " << a << ")";
        throw std::invalid_argument(os.str());
    }
    if (n < 4) throw std::invalid_argument("za_moment_check: n too small");

    ZaMomentReport rep;
    rep.p = p;
    rep.t = t;
    rep.n = n;

    double acc = 0.0, acc2 = 0.0, acc_half = 0.0;
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < n; ++i) {
        auto streams = make_path_streams(seed, i, m.dim());
        const auto z = sample_ZA(m, t, streams);
        double norm2 = 0.0;
        for (double v : z) norm2 += v * v;
        const double val = std::pow(std::sqrt(norm2), p);
        acc += val;
        acc2 += val * val;
        if (i < half) acc_half += val;
    }
    rep.estimate = acc / static_cast<double>(n);
    const double var =
        std::max(0.0, acc2 / static_cast<double>(n) - rep.estimate * rep.estimate);
    rep.stderr_ = std::sqrt(var / static_cast<double>(n));
    rep.first_half = acc_half / static_cast<double>(half);
    const double joint = rep.stderr_ * std::sqrt(1.0 + 2.0);  // half estimate has ~2x variance
    rep.stable_under_doubling =
        joint > 0.0 ? std::abs(rep.estimate - rep.first_half) / (3.0 * joint) : 0.0;

    double s = 0.0;
    for (std::size_t k = 0; k < m.dim(); ++k) {
        const double g = m.op.gammas()[k];
        const double y = a * g * t;
        const double q = y < 1e-12 ? t * (1.0 - 0.5 * y) : -std::expm1(-y) / (a * g);
        s += std::pow(m.noise.betas()[k], a) * q;
    }
    rep.scale_sum = std::pow(s, 1.0 / a);
    rep.ratio_to_scale_pow = rep.estimate / std::pow(rep.scale_sum, p);
    return rep;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    const std::size_t n_modes = tr.states.empty() ? 0 : tr.states.front().size();
    os << "t";
    for (std::size_t k = 1; k <= n_modes; ++k) os << ",x" << k;
    os << "\n";
    os.precision(17);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        os << tr.times[i];
        for (double v : tr.states[i]) os << "," << v;
        os << "\n";
    }
}

}  // namespace spde::sim
