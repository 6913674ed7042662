// spdemix: command-line front end for the spectral alpha-stable simulation
// library.  Subcommands:
//
//   check     assumption checks, derived constants, envelope verdicts
//   simulate  trajectories + ensemble summaries
//   gradcheck gradient-decay and coupling-contraction suites
//   mix       invariant-measure estimate, decay curve, rate fit, theory report
//
// Exit codes: 0 pass, 1 theory/condition failure, 2 input error,
// 3 numerical non-convergence.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spde/mixing.hpp"
#include "spde/model_io.hpp"
#include "spde/parallel.hpp"

using nlohmann::json;
using namespace spde;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitTheoryFailure = 1;
constexpr int kExitInputError = 2;
constexpr int kExitNumerical = 3;

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(const std::string& model_bytes, const std::string& config_bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_bytes, fnv1a64(model_bytes))));
    return buf;
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw model_io::ParseError("cannot open file: " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct CommonOpts {
    std::string model_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    unsigned workers = 0;
    double T = 10.0;
    double h = 0.01;
    std::size_t paths = 10000;
    std::string f_spec;
    std::string x_spec = "zero";
    std::string tgrid_spec = "0.25:4:8,lin";
};

std::vector<double> parse_state(const std::string& spec, std::size_t dim) {
    if (spec == "zero") return std::vector<double>(dim, 0.0);
    const json doc = json::parse(spec);
    if (!doc.is_array()) throw model_io::ParseError("--x must be \"zero\" or a JSON array");
    std::vector<double> x;
    for (const auto& v : doc) x.push_back(v.get<double>());
    if (x.size() != dim)
        throw model_io::ParseError("--x has wrong dimension for the model");
    return x;
}

semigroup::TestFunction parse_observable(const std::string& spec, std::size_t dim) {
    if (spec.empty()) {
        std::vector<double> w(dim, 0.0);
        w[0] = 1.0;
        return {semigroup::TestFunction::Family::Cosine, std::move(w), 0.0};
    }
    const json doc = json::parse(spec);
    const std::string fam = doc.at("family").get<std::string>();
    semigroup::TestFunction::Family family;
    if (fam == "cosine") family = semigroup::TestFunction::Family::Cosine;
    else if (fam == "tanh") family = semigroup::TestFunction::Family::Tanh;
    else if (fam == "gauss-bump") family = semigroup::TestFunction::Family::GaussBump;
    else throw model_io::ParseError("--f family must be cosine | tanh | gauss-bump");
    std::vector<double> w;
    for (const auto& v : doc.at("w")) w.push_back(v.get<double>());
    if (w.size() != dim) throw model_io::ParseError("--f weight vector has wrong dimension");
    const double b = doc.contains("b") ? doc["b"].get<double>() : 0.0;
    return {family, std::move(w), b};
}

std::vector<double> parse_tgrid(const std::string& spec) {
    // start:stop:count,log|lin
    const auto comma = spec.find(',');
    std::string kind = "lin";
    std::string core = spec;
    if (comma != std::string::npos) {
        kind = spec.substr(comma + 1);
        core = spec.substr(0, comma);
    }
    const auto c1 = core.find(':');
    const auto c2 = core.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw model_io::ParseError("--tgrid must be start:stop:count[,log|lin]");
    const double start = std::stod(core.substr(0, c1));
    const double stop = std::stod(core.substr(c1 + 1, c2 - c1 - 1));
    const long count = std::stol(core.substr(c2 + 1));
    if (count < 2 || stop <= start)
        throw model_io::ParseError("--tgrid needs stop > start and count >= 2");
    std::vector<double> grid(count);
    if (kind == "log") {
        if (start <= 0.0) throw model_io::ParseError("--tgrid log scale needs start > 0");
        for (long i = 0; i < count; ++i)
            grid[i] = start * std::pow(stop / start, static_cast<double>(i) / (count - 1));
    } else if (kind == "lin") {
        for (long i = 0; i < count; ++i)
            grid[i] = start + (stop - start) * static_cast<double>(i) / (count - 1);
    } else {
        throw model_io::ParseError("--tgrid scale must be log or lin");
    }
    return grid;
}

json config_echo(const CommonOpts& o) {
    return json{{"model", o.model_path}, {"out", o.out_dir},     {"seed", o.seed},
                {"workers", o.workers},  {"T", o.T},             {"h", o.h},
                {"paths", o.paths},      {"f", o.f_spec},        {"x", o.x_spec},
                {"tgrid", o.tgrid_spec}};
}

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path);
    out << doc.dump(2) << "\n";
}

void write_manifest(const CommonOpts& o, const std::string& command,
                    const std::vector<std::string>& artifacts) {
    json manifest{{"command", command},
                  {"model_file", o.model_path},
                  {"config", config_echo(o)},
                  {"input_hash", hash_hex(read_file(o.model_path), config_echo(o).dump())},
                  {"timestamp", iso_timestamp()},
                  {"artifacts", artifacts}};
    write_json(std::filesystem::path(o.out_dir) / "manifest.json", manifest);
}

json report_entry(const std::string& check, const json& params, double lhs, double rhs,
                  double stderr_v, bool verdict) {
    return json{{"check", check},   {"params", params},       {"lhs", lhs},
                {"rhs", rhs},       {"slack", rhs - lhs},     {"stderr", stderr_v},
                {"verdict", verdict ? "pass" : "fail"}};
}

int cmd_check(const CommonOpts& o) {
    const auto m = model_io::load_model_file(o.model_path);
    const auto rep = model::check_assumptions(m);
    json doc;
    doc["assumptions"] = {{"gamma_monotone", rep.gamma_monotone},
                          {"summability_partial_sum", rep.summability_partial_sum},
                          {"summability_tail", model::to_string(rep.summability)},
                          {"B", rep.B},
                          {"B_tail", model::to_string(rep.b_finite)},
                          {"pass", rep.pass},
                          {"detail", rep.detail}};
    bool conditions_ok = false;
    bool envelope_ok = false;
    if (rep.pass) {
        const auto dc = model::derived_constants(m);
        doc["constants"] = {{"gamma1", dc.gamma1},
                            {"B", dc.B},
                            {"hat_c", dc.hat_c},
                            {"fisher", dc.fisher},
                            {"c_alpha", dc.c_alpha},
                            {"C0", dc.C0},
                            {"F_sup", dc.F_sup},
                            {"L_F", dc.L_F},
                            {"theta", dc.theta},
                            {"omega", dc.omega},
                            {"condition_i", dc.condition_i},
                            {"condition_ii", dc.condition_ii},
                            {"smallness_display_as_printed", dc.display_ii_as_printed},
                            {"smallness_display_omega_form", dc.display_ii_omega_form}};
        conditions_ok = dc.condition_i || dc.condition_ii;

        std::vector<double> grid;
        for (int i = 0; i < 50; ++i) grid.push_back(0.01 * std::pow(1000.0, i / 49.0));
        const auto env = model::kt_envelope_check(m, grid);
        doc["kt_envelope"] = {{"pass", env.pass},
                              {"max_ratio", env.max_ratio},
                              {"worst_t", env.worst_t},
                              {"worst_mode", env.worst_mode}};
        envelope_ok = env.pass;

        const auto sweep = model::sweep_sigma(m);
        doc["sigma_sweep"] = {{"best_sigma", sweep.best_sigma},
                              {"best_omega", sweep.best_omega}};
    }
    std::filesystem::create_directories(o.out_dir);
    write_json(std::filesystem::path(o.out_dir) / "check.json", doc);
    write_manifest(o, "check", {"check.json"});
    std::cout << doc.dump(2) << "\n";
    return (rep.pass && conditions_ok && envelope_ok) ? kExitPass : kExitTheoryFailure;
}

int cmd_simulate(const CommonOpts& o) {
    const auto m = model_io::load_model_file(o.model_path);
    const auto x0 = parse_state(o.x_spec, m.dim());
    sim::SimConfig cfg{o.T, o.h, o.paths, o.seed, 1};
    cfg.validate();
    // record roughly 64 rows per trajectory
    cfg.record_stride = std::max<std::size_t>(1, cfg.n_steps() / 64);

    std::filesystem::create_directories(o.out_dir);
    std::vector<std::string> artifacts;

    const std::size_t n_csv = std::min<std::size_t>(o.paths, 4);
    std::vector<sim::Trajectory> kept(n_csv);
    const std::size_t n_rec = cfg.n_steps() / cfg.record_stride + 1;
    const std::size_t dim = m.dim();

    // streaming mean/variance per (time, mode) in fixed chunk order
    std::vector<double> sum(n_rec * dim, 0.0), sumsq(n_rec * dim, 0.0);
    std::vector<double> final_states(o.paths * dim);
    std::vector<double> times;
    const unsigned workers = o.workers == 0 ? par::default_workers() : o.workers;

    std::mutex keep_mutex;
    std::vector<std::vector<double>> chunk_sum, chunk_sumsq;
    const std::size_t chunk = 256;
    const std::size_t n_chunks = (o.paths + chunk - 1) / chunk;
    chunk_sum.assign(n_chunks, std::vector<double>(n_rec * dim, 0.0));
    chunk_sumsq.assign(n_chunks, std::vector<double>(n_rec * dim, 0.0));

    par::parallel_for(o.paths, workers, [&](std::size_t p) {
        const auto tr = sim::simulate_path(m, x0, cfg, p);
        const std::size_t ci = p / chunk;
        for (std::size_t r = 0; r < tr.states.size(); ++r) {
            for (std::size_t k = 0; k < dim; ++k) {
                const double v = tr.states[r][k];
                chunk_sum[ci][r * dim + k] += v;
                chunk_sumsq[ci][r * dim + k] += v * v;
            }
        }
        for (std::size_t k = 0; k < dim; ++k)
            final_states[p * dim + k] = tr.states.back()[k];
        if (p < n_csv) {
            std::lock_guard<std::mutex> lock(keep_mutex);
            kept[p] = tr;
        }
    }, chunk);

    // deterministic reduce in chunk order
    for (std::size_t ci = 0; ci < n_chunks; ++ci) {
        for (std::size_t i = 0; i < n_rec * dim; ++i) {
            sum[i] += chunk_sum[ci][i];
            sumsq[i] += chunk_sumsq[ci][i];
        }
    }
    times = kept.empty() ? std::vector<double>{} : kept[0].times;
    if (times.empty()) {
        times.resize(n_rec);
        for (std::size_t r = 0; r < n_rec; ++r)
            times[r] = static_cast<double>(r * cfg.record_stride) * cfg.h;
    }

    for (std::size_t p = 0; p < n_csv; ++p) {
        const std::string name = "trajectory_" + std::to_string(p) + ".csv";
        std::ofstream csv(std::filesystem::path(o.out_dir) / name);
        sim::write_trajectory_csv(csv, kept[p]);
        artifacts.push_back(name);
    }

    json ens;
    ens["t"] = times;
    const double n = static_cast<double>(o.paths);
    std::vector<std::vector<double>> means(n_rec), stderrs(n_rec);
    for (std::size_t r = 0; r < n_rec; ++r) {
        means[r].resize(dim);
        stderrs[r].resize(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            const double mu = sum[r * dim + k] / n;
            means[r][k] = mu;
            const double var = std::max(0.0, sumsq[r * dim + k] / n - mu * mu);
            stderrs[r][k] = std::sqrt(var / n);
        }
    }
    ens["mean"] = means;
    ens["stderr"] = stderrs;
    // final-time per-mode quantiles (medians are robust diagnostics for
    // heavy-tailed marginals whose p-th moments are infinite for p >= alpha)
    json quant;
    for (const double q : {0.1, 0.5, 0.9}) {
        std::vector<double> qv(dim);
        std::vector<double> col(o.paths);
        for (std::size_t k = 0; k < dim; ++k) {
            for (std::size_t p = 0; p < o.paths; ++p) col[p] = final_states[p * dim + k];
            std::sort(col.begin(), col.end());
            qv[k] = col[static_cast<std::size_t>(q * (o.paths - 1))];
        }
        quant["q" + std::to_string(static_cast<int>(q * 100))] = qv;
    }
    ens["quantiles"] = quant;
    write_json(std::filesystem::path(o.out_dir) / "ensemble.json", ens);
    artifacts.push_back("ensemble.json");
    write_manifest(o, "simulate", artifacts);
    std::cout << "simulate: " << o.paths << " paths to T = " << o.T << ", artifacts in "
              << o.out_dir << "\n";
    return kExitPass;
}

int cmd_gradcheck(const CommonOpts& o) {
    const auto m = model_io::load_model_file(o.model_path);
    const auto x = parse_state(o.x_spec, m.dim());
    const auto f = parse_observable(o.f_spec, m.dim());
    sim::SimConfig cfg{o.T, o.h, o.paths, o.seed, 1};
    cfg.validate();
    const auto dc = model::derived_constants(m);

    json doc;
    bool all_pass = true;

    // contraction-rate gradient bound at a few horizons (Prop.-style decay)
    const auto grid = parse_tgrid(o.tgrid_spec);
    json grad_items = json::array();
    for (double t : grid) {
        const auto ge = semigroup::estimate_gradient_Ptf(m, f, x, t, cfg, 1e-4, o.workers);
        const double bound = std::exp(-(dc.gamma1 - dc.L_F) * t) * f.grad_sup_norm();
        const double tol = 3.0 * ge.norm_stderr + 1e-2 * bound;
        const bool ok = !dc.condition_i || ge.norm <= bound + tol;
        all_pass = all_pass && ok;
        auto item = report_entry("gradient_contraction_bound", {{"t", t}}, ge.norm,
                                 bound + tol, ge.norm_stderr, ok);
        item["stderr_warning"] = ge.stderr_warning;
        grad_items.push_back(item);
    }
    doc["gradient_bound"] = grad_items;

    // synchronous coupling contraction from x and a shifted start
    std::vector<double> y(x.begin(), x.end());
    for (auto& v : y) v += 1.0;
    const auto coup = semigroup::coupling_contraction_check(m, x, y, cfg, o.workers);
    doc["coupling"] = report_entry("coupling_contraction", {{"rho", coup.rho}},
                                   coup.max_ratio, 1.0 + 1e-9,
                                   0.0, coup.pass);
    doc["coupling"]["violations"] = coup.violations;
    all_pass = all_pass && coup.pass;

    // OU bounds for the F = 0 companion model
    const auto ou = semigroup::ou_gradient_bound_check(m, f, x, grid, cfg, o.workers);
    json ou_items = json::array();
    for (const auto& pt : ou.points) {
        ou_items.push_back(report_entry("ou_bound_i", {{"t", pt.t}}, pt.grad_norm, pt.bound_i,
                                        pt.grad_stderr, pt.pass_i));
        ou_items.push_back(report_entry("ou_bound_ii", {{"t", pt.t}}, pt.grad_norm,
                                        pt.bound_ii, pt.grad_stderr, pt.pass_ii));
    }
    doc["ou_bounds"] = ou_items;
    all_pass = all_pass && ou.pass;

    std::filesystem::create_directories(o.out_dir);
    write_json(std::filesystem::path(o.out_dir) / "gradcheck.json", doc);
    write_manifest(o, "gradcheck", {"gradcheck.json"});
    std::cout << doc.dump(2) << "\n";
    return all_pass ? kExitPass : kExitTheoryFailure;
}

int cmd_mix(const CommonOpts& o) {
    const auto m = model_io::load_model_file(o.model_path);
    const auto x = parse_state(o.x_spec, m.dim());
    const auto f = parse_observable(o.f_spec, m.dim());
    const auto grid = parse_tgrid(o.tgrid_spec);

    sim::SimConfig cfg{o.T, o.h, o.paths, o.seed, 1};
    cfg.validate();

    // Long-path invariant estimate.  The time-average stderr decays like
    // 1/sqrt(T - burn), so the horizon is sized for a ~3e-3 noise floor
    // (relaxation time ~ 1/gamma1); the ensemble cross-check is capped.
    sim::SimConfig inv_cfg = cfg;
    inv_cfg.T = std::max(o.T, (10.0 + 50000.0) / m.op.gamma1());
    inv_cfg.n_paths = std::min<std::size_t>(o.paths, 8192);
    inv_cfg.record_stride = std::max<std::size_t>(1, static_cast<std::size_t>(0.1 / o.h));
    const auto inv = mixing::estimate_invariant(m, f, inv_cfg, 0.0, o.workers);

    sim::SimConfig curve_cfg = cfg;
    curve_cfg.T = grid.back();
    const auto curve = mixing::decay_curve(m, f, x, grid, curve_cfg, inv.time_average,
                                           inv.time_average_stderr, o.workers);

    std::filesystem::create_directories(o.out_dir);
    {
        std::ofstream csv(std::filesystem::path(o.out_dir) / "decay.csv");
        csv << "t,delta,stderr\n";
        csv.precision(17);
        for (std::size_t i = 0; i < curve.t_grid.size(); ++i)
            csv << curve.t_grid[i] << "," << curve.deltas[i] << "," << curve.stderrs[i] << "\n";
    }

    json doc;
    doc["invariant"] = {{"time_average", inv.time_average},
                        {"time_average_stderr", inv.time_average_stderr},
                        {"ensemble_average", inv.ensemble_average},
                        {"ensemble_stderr", inv.ensemble_stderr},
                        {"consistent", inv.consistent},
                        {"burn_in", inv.burn_in}};

    int exit_code = kExitPass;
    try {
        const auto fit = mixing::fit_exponential_rate(curve);
        const auto cmp = mixing::compare_with_theory(m, fit, curve);
        doc["rate_fit"] = {{"c_emp", fit.c_emp},
                           {"C_emp", fit.C_emp},
                           {"r2", fit.r2},
                           {"window_begin", fit.window_begin},
                           {"window_end", fit.window_end}};
        doc["theory"] = {{"omega", cmp.omega},
                         {"contraction_rate", cmp.contraction_rate},
                         {"c_emp", cmp.c_emp},
                         {"condition_i", cmp.condition_i},
                         {"condition_ii", cmp.condition_ii},
                         {"has_guarantee", cmp.has_guarantee},
                         {"exponent_used", cmp.exponent_used},
                         {"positive_rate", cmp.positive_rate},
                         {"envelope_ok", cmp.envelope_ok},
                         {"verdict", cmp.verdict}};
        if (cmp.has_guarantee && (!cmp.envelope_ok || !cmp.positive_rate))
            exit_code = kExitTheoryFailure;
    } catch (const mixing::NoSignalWindow& e) {
        doc["rate_fit"] = {{"error", e.what()}};
        exit_code = kExitNumerical;
    }

    write_json(std::filesystem::path(o.out_dir) / "mix.json", doc);
    write_manifest(o, "mix", {"decay.csv", "mix.json"});
    std::cout << doc.dump(2) << "\n";
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral Galerkin simulation lab for SPDEs driven by cylindrical "
                 "alpha-stable noise"};
    app.set_help_flag("--help", "print help");  // frees -h / --h for the step size
    app.require_subcommand(1);

    CommonOpts o;
    auto add_common = [&](CLI::App* sub, bool needs_sim) {
        sub->set_help_flag("--help", "print help");
        sub->add_option("--model", o.model_path, "model JSON file")->required();
        sub->add_option("--out", o.out_dir, "output directory");
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--workers", o.workers, "worker threads (0 = auto)");
        if (needs_sim) {
            sub->add_option("--T", o.T, "horizon");
            sub->add_option("--h", o.h, "step size");
            sub->add_option("--paths", o.paths, "Monte Carlo paths");
            sub->add_option("--f", o.f_spec, "observable JSON {family, w, b}");
            sub->add_option("--x", o.x_spec, "start state: \"zero\" or JSON array");
            sub->add_option("--tgrid", o.tgrid_spec, "time grid start:stop:count[,log|lin]");
        }
    };
    auto* c_check = app.add_subcommand("check", "assumptions, constants, envelope");
    add_common(c_check, false);
    auto* c_sim = app.add_subcommand("simulate", "trajectories and ensemble summaries");
    add_common(c_sim, true);
    auto* c_grad = app.add_subcommand("gradcheck", "gradient and coupling suites");
    add_common(c_grad, true);
    auto* c_mix = app.add_subcommand("mix", "decay curve and mixing-rate comparison");
    add_common(c_mix, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(c_check)) return cmd_check(o);
        if (app.got_subcommand(c_sim)) return cmd_simulate(o);
        if (app.got_subcommand(c_grad)) return cmd_gradcheck(o);
        if (app.got_subcommand(c_mix)) return cmd_mix(o);
    } catch (const model_io::ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const model::ModelError& e) {
        std::cerr << "model rejected: " << e.what() << "\n";
        return kExitTheoryFailure;
    } catch (const quad::QuadratureError& e) {
        std::cerr << "numerical non-convergence: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}
