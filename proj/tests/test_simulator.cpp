#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spde/model.hpp"
#include "spde/simulator.hpp"
#include "test_util.hpp"

using namespace spde;
using model::ModelSpec;
using model::NonlinearitySpec;
using stable::StableIndex;

namespace {

ModelSpec single_mode(double alpha, double gamma, double beta, NonlinearitySpec f) {
    return ModelSpec(model::SpectralOperator({gamma}), model::NoiseSpec({beta}), std::move(f),
                     StableIndex(alpha), 0.5);
}

// Final value of mode 0 across paths.
std::vector<double> final_marginal(const ModelSpec& m, double x0, const sim::SimConfig& cfg) {
    std::vector<double> out(cfg.n_paths);
    std::vector<double> start(m.dim(), x0);
    for (std::size_t p = 0; p < cfg.n_paths; ++p) {
        const auto tr = sim::simulate_path(m, start, cfg, p);
        out[p] = tr.states.back()[0];
    }
    return out;
}

}  // namespace

TEST_CASE("linear_increment_scale closed forms") {
    CHECK(sim::linear_increment_scale(StableIndex(1.0), 1.0, 1.0, 1.0) ==
          doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
    // gamma -> 0 limit: beta h^{1/alpha}
    CHECK(sim::linear_increment_scale(StableIndex(1.5), 1e-14, 2.0, 0.7) ==
          doctest::Approx(2.0 * std::pow(0.7, 1.0 / 1.5)).epsilon(1e-10));
    // closed form at alpha=1.5, gamma=2, beta=0.5, h=0.25
    const double expect =
        0.5 * std::pow((1.0 - std::exp(-1.5 * 2.0 * 0.25)) / (1.5 * 2.0), 1.0 / 1.5);
    CHECK(sim::linear_increment_scale(StableIndex(1.5), 2.0, 0.5, 0.25) ==
          doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("linear_increment_scale matches the fine-discretization law (two-sample KS)") {
    // sum_i e^{-gamma (h - s_i)} beta dz_i over 1000 sub-steps vs one shot.
    const double alpha = 1.5, gamma = 2.0, beta = 0.5, h = 0.25;
    StableIndex a(alpha);
    const std::size_t n = 50000;
    const int sub = 1000;
    const double dt = h / sub;
    std::vector<double> fine(n), oneshot(n);
    rng::Stream sf(101, 0, 0), so(102, 0, 0);
    const double sub_scale = beta * std::pow(dt, 1.0 / alpha);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < sub; ++j) {
            const double s_mid = (j + 0.5) * dt;
            acc += std::exp(-gamma * (h - s_mid)) * sub_scale *
                   stable::sample_standard_stable(a, sf);
        }
        fine[i] = acc;
        oneshot[i] = sim::linear_increment_scale(a, gamma, beta, h) *
                     stable::sample_standard_stable(a, so);
    }
    const double d = testutil::ks_two_sample(std::move(fine), std::move(oneshot));
    CHECK(d < testutil::kKs001Level * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("step: deterministic decay when F = 0 and beta -> 0") {
    // No noise: x(h) = e^{-gamma h} x(0) exactly; use beta tiny with zero draws
    // by checking against the analytic decay after subtracting the noise term.
    auto m = single_mode(1.5, 2.0, 1.0, NonlinearitySpec::zero(1));
    const auto coeffs = sim::make_step_coeffs(m, 0.1);
    std::vector<double> x{3.0};
    std::vector<double> z{0.0}, fbuf(1);
    sim::apply_step(m, coeffs, x, z, fbuf);
    CHECK(x[0] == doctest::Approx(3.0 * std::exp(-0.2)).epsilon(1e-14));
}

TEST_CASE("step: constant F converges to c/gamma fixed point") {
    // The saturating family acts as a constant c_k while the state stays in
    // the saturated region; with c/gamma >> 1 the fixed point never leaves it
    // (tanh(15) differs from 1 by ~4e-13).
    const double c = 30.0, gamma = 2.0;
    auto f = NonlinearitySpec::diagonal({c}, {0}, model::Saturator::Tanh);
    auto m = single_mode(1.5, gamma, 1.0, std::move(f));
    const auto coeffs = sim::make_step_coeffs(m, 0.05);
    std::vector<double> x{20.0};
    std::vector<double> z{0.0}, fbuf(1);
    for (int i = 0; i < 400; ++i) sim::apply_step(m, coeffs, x, z, fbuf);
    CHECK(x[0] == doctest::Approx(c / gamma).epsilon(1e-10));
}

TEST_CASE("F = 0 marginal law is step-size independent (two-sample KS)") {
    auto m = single_mode(1.5, 1.0, 1.0, NonlinearitySpec::zero(1));
    const std::size_t n = 50000;
    sim::SimConfig coarse{2.0, 0.5, n, 21, 1};
    sim::SimConfig fine{2.0, 0.05, n, 22, 1};
    auto a = final_marginal(m, 0.0, coarse);
    auto b = final_marginal(m, 0.0, fine);
    const double d = testutil::ks_two_sample(std::move(a), std::move(b));
    CHECK(d < testutil::kKs001Level * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("F = 0 n-step marginal matches the one-shot stochastic convolution law") {
    const double alpha = 1.2, gamma = 1.0, beta = 1.0, t = 1.5;
    auto m = single_mode(alpha, gamma, beta, NonlinearitySpec::zero(1));
    const std::size_t n = 50000;
    sim::SimConfig cfg{t, 0.05, n, 31, 1};
    auto stepped = final_marginal(m, 0.0, cfg);
    std::vector<double> oneshot(n);
    for (std::size_t p = 0; p < n; ++p) {
        auto streams = sim::make_path_streams(32, p, 1);
        oneshot[p] = sim::sample_ZA(m, t, streams)[0];
    }
    const double d = testutil::ks_two_sample(std::move(stepped), std::move(oneshot));
    CHECK(d < testutil::kKs001Level * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("simulate_path: reproducibility and recording") {
    auto m = single_mode(1.5, 1.0, 1.0,
                         NonlinearitySpec::diagonal({0.3}, {0}, model::Saturator::Tanh));
    sim::SimConfig cfg{1.0, 0.01, 1, 77, 10};
    std::vector<double> x0{1.0};
    const auto t1 = sim::simulate_path(m, x0, cfg, 5);
    const auto t2 = sim::simulate_path(m, x0, cfg, 5);
    REQUIRE(t1.times.size() == t2.times.size());
    CHECK(t1.times.size() == 11);  // t = 0 plus every 10th of 100 steps
    for (std::size_t i = 0; i < t1.times.size(); ++i) {
        CHECK(t1.states[i][0] == t2.states[i][0]);  // bit identical
    }
    CHECK(t1.times[1] == doctest::Approx(0.1).epsilon(1e-12));
    // different path index gives a different realization
    const auto t3 = sim::simulate_path(m, x0, cfg, 6);
    CHECK(t3.states.back()[0] != t1.states.back()[0]);
}

TEST_CASE("simulate_path: zero model stays identically zero") {
    ModelSpec m(model::SpectralOperator({1.0, 2.0}), model::NoiseSpec({1e-300, 1e-300}),
                NonlinearitySpec::zero(2), StableIndex(1.5), 0.5);
    sim::SimConfig cfg{1.0, 0.1, 1, 1, 1};
    const auto tr = sim::simulate_path(m, std::vector<double>{0.0, 0.0}, cfg, 0);
    for (const auto& row : tr.states) {
        CHECK(std::abs(row[0]) < 1e-280);
        CHECK(std::abs(row[1]) < 1e-280);
    }
}

TEST_CASE("ergodic smoke test: time average agrees with ensemble average") {
    // single mode OU, alpha = 1.5, f = tanh
    auto m = single_mode(1.5, 1.0, 1.0, NonlinearitySpec::zero(1));
    const double h = 0.05;
    // time average over T = 1e4 after burn-in
    sim::SimConfig long_cfg{10000.0, h, 1, 404, 1};
    const auto coeffs = sim::make_step_coeffs(m, h);
    auto streams = sim::make_path_streams(404, 0, 1);
    std::vector<double> x{0.0}, z(1), fb(1);
    const std::size_t steps = long_cfg.n_steps();
    const std::size_t burn = 2000;
    double acc = 0.0;
    std::vector<double> batch;
    double bacc = 0.0;
    std::size_t count = 0;
    const std::size_t per_batch = (steps - burn) / 32;
    for (std::size_t s = 1; s <= steps; ++s) {
        sim::step(m, coeffs, x, streams, z, fb);
        if (s > burn) {
            acc += std::tanh(x[0]);
            bacc += std::tanh(x[0]);
            if (++count % per_batch == 0) {
                batch.push_back(bacc / per_batch);
                bacc = 0.0;
            }
        }
    }
    const double time_avg = acc / count;
    double bm = 0.0;
    for (double v : batch) bm += v;
    bm /= batch.size();
    double bss = 0.0;
    for (double v : batch) bss += (v - bm) * (v - bm);
    const double se_time = std::sqrt(bss / (batch.size() - 1.0) / batch.size());

    // ensemble average at t = 100 across 1000 paths
    const std::size_t n_paths = 1000;
    sim::SimConfig ens{100.0, h, n_paths, 505, 1};
    double eacc = 0.0, eacc2 = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        auto st = sim::make_path_streams(505, p, 1);
        std::vector<double> y{0.0}, zz(1), ff(1);
        for (std::size_t s = 0; s < ens.n_steps(); ++s) sim::step(m, coeffs, y, st, zz, ff);
        const double v = std::tanh(y[0]);
        eacc += v;
        eacc2 += v * v;
    }
    const double ens_avg = eacc / n_paths;
    const double se_ens =
        std::sqrt((eacc2 / n_paths - ens_avg * ens_avg) / static_cast<double>(n_paths));
    const double joint = std::sqrt(se_time * se_time + se_ens * se_ens);
    CHECK(std::abs(time_avg - ens_avg) <= 3.0 * joint);
}

TEST_CASE("za_moment_check rejects p >= alpha with the stable-tail explanation") {
    auto m = single_mode(1.5, 1.0, 1.0, NonlinearitySpec::zero(1));
    CHECK_THROWS_WITH_AS(sim::za_moment_check(m, 1.5, 1.0, 100, 1),
                         doctest::Contains("p-th moment infinite for stable index alpha"),
                         std::invalid_argument);
    CHECK_THROWS_AS(sim::za_moment_check(m, 1.7, 1.0, 100, 1), std::invalid_argument);
}

TEST_CASE("za_moment_check: monotone in t and stable under doubling") {
    auto m = single_mode(1.5, 1.0, 1.0, NonlinearitySpec::zero(1));
    const auto r1 = sim::za_moment_check(m, 1.0, 0.5, 40000, 99);
    const auto r2 = sim::za_moment_check(m, 1.0, 2.0, 40000, 99);  // common seeds
    CHECK(r1.estimate <=
          r2.estimate * (1.0 + 3.0 * (r1.stderr_ + r2.stderr_) / r2.estimate));
    CHECK(r1.stable_under_doubling < 1.0);
    CHECK(r2.stable_under_doubling < 1.0);
}

TEST_CASE("za_moment_check against the density-table quadrature (single mode)") {
    const double alpha = 1.5, gamma = 1.0, beta = 1.0, t = 1.0, p = 1.0;
    auto m = single_mode(alpha, gamma, beta, NonlinearitySpec::zero(1));
    const auto rep = sim::za_moment_check(m, p, t, 200000, 7);
    // |Z_A(t)| = scale * |Z| with Z standard; E|Z| from the table.
    const double scale = sim::linear_increment_scale(StableIndex(alpha), gamma, beta, t);
    const double expect = scale * stable::density_table_for(StableIndex(alpha))->abs_moment(p);
    CHECK(std::abs(rep.estimate - expect) <= 3.0 * rep.stderr_);
    CHECK(rep.scale_sum == doctest::Approx(scale).epsilon(1e-12));
}

TEST_CASE("trajectory CSV export format") {
    sim::Trajectory tr;
    tr.times = {0.0, 0.5};
    tr.states = {{1.0, 2.0}, {0.25, -1.0}};
    std::ostringstream os;
    sim::write_trajectory_csv(os, tr);
    const std::string s = os.str();
    CHECK(s.substr(0, 8) == "t,x1,x2\n");
    CHECK(s.find("0.5,0.25,-1") != std::string::npos);
}

TEST_CASE("SimConfig validation") {
    sim::SimConfig bad{1.0, 0.0, 1, 0, 1};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    sim::SimConfig bad2{0.5, 1.0, 1, 0, 1};
    CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
    sim::SimConfig ok{1.0, 0.1, 1, 0, 1};
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.n_steps() == 10);
}
