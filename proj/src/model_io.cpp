#include "spde/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace spde::model_io {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ParseError(where + ": expected a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ParseError(where + ": unknown key \"" + it.key() + "\"");
    }
}

double get_number(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key)) throw ParseError(where + ": missing key \"" + key + "\"");
    if (!obj[key].is_number()) throw ParseError(where + ": \"" + key + "\" must be a number");
    return obj[key].get<double>();
}

std::vector<double> get_array(const json& obj, const std::string& where, const std::string& key) {
    if (!obj[key].is_array()) throw ParseError(where + ": \"" + key + "\" must be an array");
    std::vector<double> out;
    for (const auto& v : obj[key]) {
        if (!v.is_number()) throw ParseError(where + ": \"" + key + "\" must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

struct LawSpec {
    model::PowerTail tail;
    std::size_t n_modes = 0;  // 0 when unspecified
};

LawSpec parse_law(const json& obj, const std::string& where) {
    require_keys(obj, where, {"coef", "exponent", "n_modes"});
    LawSpec law;
    law.tail.coef = get_number(obj, where, "coef");
    law.tail.exponent = get_number(obj, where, "exponent");
    if (obj.contains("n_modes")) {
        if (!obj["n_modes"].is_number_integer())
            throw ParseError(where + ": \"n_modes\" must be a positive integer");
        const auto v = obj["n_modes"].get<long long>();
        if (v < 1) throw ParseError(where + ": \"n_modes\" must be >= 1");
        law.n_modes = static_cast<std::size_t>(v);
    }
    return law;
}

model::Saturator parse_saturator(const json& obj) {
    if (!obj.contains("saturator")) return model::Saturator::Tanh;
    const std::string s = obj["saturator"].get<std::string>();
    if (s == "tanh") return model::Saturator::Tanh;
    if (s == "arctan") return model::Saturator::Arctan;
    throw ParseError("nonlinearity: saturator must be \"tanh\" or \"arctan\"");
}

model::NonlinearitySpec parse_nonlinearity(const json& obj, std::size_t n) {
    require_keys(obj, "nonlinearity", {"family", "c", "perm", "w", "saturator"});
    if (!obj.contains("family")) throw ParseError("nonlinearity: missing key \"family\"");
    const std::string fam = obj["family"].get<std::string>();
    if (fam == "zero") return model::NonlinearitySpec::zero(n);
    if (!obj.contains("c")) throw ParseError("nonlinearity: missing key \"c\"");
    auto c = get_array(obj, "nonlinearity", "c");
    const auto sat = parse_saturator(obj);
    if (fam == "diagonal-saturating") {
        if (c.size() != n)
            throw ParseError("nonlinearity: \"c\" length must match the mode count");
        std::vector<std::size_t> perm(n);
        if (obj.contains("perm")) {
            const auto raw = get_array(obj, "nonlinearity", "perm");
            if (raw.size() != n) throw ParseError("nonlinearity: \"perm\" length mismatch");
            for (std::size_t i = 0; i < n; ++i) {
                const auto p = static_cast<long long>(raw[i]);
                if (p < 1 || static_cast<std::size_t>(p) > n)
                    throw ParseError("nonlinearity: perm entries are 1-based mode indices");
                perm[i] = static_cast<std::size_t>(p - 1);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        }
        return model::NonlinearitySpec::diagonal(std::move(c), std::move(perm), sat);
    }
    if (fam == "finite-rank-saturating") {
        if (!obj.contains("w")) throw ParseError("nonlinearity: finite-rank needs \"w\"");
        if (!obj["w"].is_array()) throw ParseError("nonlinearity: \"w\" must be an array of arrays");
        std::vector<std::vector<double>> w;
        for (const auto& row : obj["w"]) {
            std::vector<double> r;
            for (const auto& v : row) r.push_back(v.get<double>());
            w.push_back(std::move(r));
        }
        return model::NonlinearitySpec::finite_rank(std::move(c), std::move(w), sat, n);
    }
    throw ParseError("nonlinearity: unknown family \"" + fam + "\"");
}

}  // namespace

model::ModelSpec model_from_json(const json& doc) {
    require_keys(doc, "model", {"alpha", "sigma", "gammas", "gamma_law", "betas", "beta_law",
                                "nonlinearity", "heat_example"});
    const double alpha_v = get_number(doc, "model", "alpha");
    const double sigma = get_number(doc, "model", "sigma");
    stable::StableIndex alpha(alpha_v);

    if (doc.contains("heat_example")) {
        for (const char* k : {"gammas", "gamma_law", "betas", "beta_law"}) {
            if (doc.contains(k))
                throw ParseError(std::string("model: \"") + k +
                                 "\" conflicts with \"heat_example\"");
        }
        const auto& he = doc["heat_example"];
        require_keys(he, "heat_example", {"d", "eta", "N_per_axis"});
        const auto d = static_cast<int>(get_number(he, "heat_example", "d"));
        const double eta = get_number(he, "heat_example", "eta");
        const auto npa = static_cast<int>(get_number(he, "heat_example", "N_per_axis"));
        auto m = model::heat_example(d, alpha, eta, npa, sigma);
        if (doc.contains("nonlinearity")) {
            auto f = parse_nonlinearity(doc["nonlinearity"], m.dim());
            return model::ModelSpec(m.op, m.noise, std::move(f), alpha, sigma);
        }
        return m;
    }

    if (doc.contains("gammas") == doc.contains("gamma_law"))
        throw ParseError("model: exactly one of \"gammas\" | \"gamma_law\" is required");
    if (doc.contains("betas") == doc.contains("beta_law"))
        throw ParseError("model: exactly one of \"betas\" | \"beta_law\" is required");

    std::vector<double> gammas, betas;
    std::optional<model::PowerTail> gtail, btail;
    std::size_t n_modes = 0;
    if (doc.contains("gammas")) {
        gammas = get_array(doc, "model", "gammas");
        n_modes = gammas.size();
    } else {
        const auto law = parse_law(doc["gamma_law"], "gamma_law");
        if (law.n_modes == 0) throw ParseError("gamma_law: \"n_modes\" is required");
        n_modes = law.n_modes;
        gtail = law.tail;
        for (std::size_t k = 1; k <= n_modes; ++k)
            gammas.push_back(law.tail.coef * std::pow(static_cast<double>(k), law.tail.exponent));
    }
    if (doc.contains("betas")) {
        betas = get_array(doc, "model", "betas");
    } else {
        const auto law = parse_law(doc["beta_law"], "beta_law");
        const std::size_t nb = law.n_modes == 0 ? n_modes : law.n_modes;
        btail = law.tail;
        for (std::size_t k = 1; k <= nb; ++k)
            betas.push_back(law.tail.coef * std::pow(static_cast<double>(k), law.tail.exponent));
    }
    if (betas.size() != gammas.size())
        throw ParseError("model: gammas and betas must have the same length");

    auto f = doc.contains("nonlinearity") ? parse_nonlinearity(doc["nonlinearity"], n_modes)
                                          : model::NonlinearitySpec::zero(n_modes);
    return model::ModelSpec(model::SpectralOperator(std::move(gammas), gtail),
                            model::NoiseSpec(std::move(betas), btail), std::move(f), alpha,
                            sigma);
}

model::ModelSpec load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model file is not valid JSON: ") + e.what());
    }
    return model_from_json(doc);
}

}  // namespace spde::model_io
