#pragma once
// Model files: JSON documents with the exact keys
//   alpha, sigma, gammas | gamma_law, betas | beta_law,
//   nonlinearity{family, c, perm|w, saturator}, heat_example{d, eta, N_per_axis}
// Unknown keys are rejected at every level.

#include <string>

#include <json.hpp>

#include "spde/model.hpp"

namespace spde::model_io {

class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

model::ModelSpec model_from_json(const nlohmann::json& doc);

/// Reads and parses a model file; ParseError carries the diagnostic.
model::ModelSpec load_model_file(const std::string& path);

}  // namespace spde::model_io
