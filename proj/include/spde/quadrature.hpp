#pragma once
// Panel quadrature and series acceleration used by the stable-law integrals.
//
// Everything here is deterministic double-precision machinery:
//   - 16-point Gauss-Legendre panels,
//   - dyadic panel refinement towards an endpoint singularity,
//   - Euler-transformed summation of alternating window integrals for
//     semi-infinite Fourier-type integrals.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace spde::quad {

/// Thrown when an integral fails to reach the requested tolerance.
class QuadratureError : public std::runtime_error {
public:
    explicit QuadratureError(const std::string& what) : std::runtime_error(what) {}
};

// 16-point Gauss-Legendre rule on [-1, 1] (positive half; rule is symmetric).
inline constexpr std::array<double, 8> kGl16Nodes = {
    0.0950125098376374401853193, 0.2816035507792589132304605,
    0.4580167776572273863424194, 0.6178762444026437484466718,
    0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
inline constexpr std::array<double, 8> kGl16Weights = {
    0.1894506104550684962853967, 0.1826034150449235888667637,
    0.1691565193950025381893121, 0.1495959888165767320815017,
    0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};

/// Integrate f over [a, b] with one 16-point Gauss-Legendre panel.
template <class F>
double gl16(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
        const double dx = h * kGl16Nodes[i];
        acc += kGl16Weights[i] * (f(c + dx) + f(c - dx));
    }
    return acc * h;
}

/// Same panel rule for an integrand returning K components at once.
template <std::size_t K, class F>
std::array<double, K> gl16_multi(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::array<double, K> acc{};
    for (std::size_t i = 0; i < 8; ++i) {
        const double dx = h * kGl16Nodes[i];
        const auto up = f(c + dx);
        const auto dn = f(c - dx);
        for (std::size_t k = 0; k < K; ++k) acc[k] += kGl16Weights[i] * (up[k] + dn[k]);
    }
    for (std::size_t k = 0; k < K; ++k) acc[k] *= h;
    return acc;
}

/// Integrate over [a, b], splitting so each sub-panel sees a phase change of
/// at most ~1.2 rad when the integrand oscillates at `freq` rad per unit.
template <std::size_t K, class F>
std::array<double, K> gl16_osc_panel(F&& f, double a, double b, double freq) {
    const double phase = (b - a) * freq;
    std::size_t pieces = phase > 1.2 ? static_cast<std::size_t>(phase / 1.2) + 1 : 1;
    std::array<double, K> acc{};
    double left = a;
    const double w = (b - a) / static_cast<double>(pieces);
    for (std::size_t i = 0; i < pieces; ++i) {
        const double right = (i + 1 == pieces) ? b : left + w;
        const auto part = gl16_multi<K>(f, left, right);
        for (std::size_t k = 0; k < K; ++k) acc[k] += part[k];
        left = right;
    }
    return acc;
}

/// Integrate over [a, b] with panels refined dyadically towards a.  Handles
/// integrands whose derivatives blow up at a (|x-a|^{p}, p > -1).  The stub
/// [a, a + (b-a)·2^-levels] is dropped; callers pick `levels` so it is
/// negligible.
template <std::size_t K, class F>
std::array<double, K> gl16_dyadic_head(F&& f, double a, double b, double freq, int levels = 44) {
    std::array<double, K> acc{};
    const double w = b - a;
    double hi = b;
    for (int k = 0; k < levels; ++k) {
        const double lo = a + w * std::pow(0.5, k + 1);
        const auto part = gl16_osc_panel<K>(f, lo, hi, freq);
        for (std::size_t j = 0; j < K; ++j) acc[j] += part[j];
        hi = lo;
    }
    return acc;
}

/// Euler-transformed partial sums of a (near-)alternating series, after
/// the classic eulsum routine.  add() feeds terms in order; value() is the
/// current accelerated estimate.
class EulerSum {
public:
    void add(double term) {
        const double prev = sum_;
        if (n_ == 0) {
            wksp_.assign(1, term);
            sum_ = 0.5 * term;
            n_ = 1;
        } else {
            double tmp = wksp_[0];
            wksp_[0] = term;
            for (std::size_t j = 0; j + 1 < n_; ++j) {
                const double dum = wksp_[j + 1];
                wksp_[j + 1] = 0.5 * (wksp_[j] + tmp);
                tmp = dum;
            }
            const double next = 0.5 * (wksp_[n_ - 1] + tmp);
            if (wksp_.size() < n_ + 1) wksp_.push_back(next);
            else wksp_[n_] = next;
            if (std::abs(next) <= std::abs(wksp_[n_ - 1])) {
                sum_ += 0.5 * next;
                ++n_;
            } else {
                sum_ += next;
            }
        }
        last_delta_ = sum_ - prev;
    }
    double value() const { return sum_; }
    double last_delta() const { return last_delta_; }

private:
    std::vector<double> wksp_;
    double sum_ = 0.0;
    double last_delta_ = 0.0;
    std::size_t n_ = 0;
};

/// Sum of window integrals of f over [start, inf), windows of fixed length,
/// with Euler acceleration per component.  Converges for integrands that are
/// eventually alternating over successive windows (Fourier tails) and for
/// absolutely integrable envelopes.  Throws QuadratureError when the target
/// tolerance is not reached within max_windows.
template <std::size_t K, class F>
std::array<double, K> euler_window_tail(F&& f, double start, double window_len, double abs_tol,
                                        int min_windows = 12, int max_windows = 200000) {
    std::array<EulerSum, K> acc;
    int stable_count = 0;
    for (int j = 0; j < max_windows; ++j) {
        const double a = start + window_len * j;
        const double b = a + window_len;
        const auto term = gl16_multi<K>(f, a, b);
        bool all_small = true;
        for (std::size_t k = 0; k < K; ++k) {
            acc[k].add(term[k]);
            if (std::abs(acc[k].last_delta()) > 0.1 * abs_tol) all_small = false;
        }
        if (j + 1 >= min_windows) {
            stable_count = all_small ? stable_count + 1 : 0;
            if (stable_count >= 3) {
                std::array<double, K> out{};
                for (std::size_t k = 0; k < K; ++k) out[k] = acc[k].value();
                return out;
            }
        }
    }
    throw QuadratureError("euler_window_tail: no convergence within window budget");
}

}  // namespace spde::quad
