#pragma once

#include "gfluct/model.hpp"
#include "gfluct/models.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace gfluct {

using Json = nlohmann::ordered_json;

// Model file layout:
//   {"dim": n, "label": "...", "generator": M, "covariance": M,
//    "time_reversal": M | null, "perturbation": M}
// where M is {"dense": [[...], ...]}, a bare array of rows, or
// {"builder": {...}} (the builder's matrix of the same role is taken; for
// "perturbation" the chain builder supplies its reference perturbation).
// A top-level {"builder": {"name": "toy"|"chain"|"chain_inhomogeneous",
// "params": {...}}} builds the whole model.
struct LoadedModel {
    Model model;
    std::string builder;  // empty for dense files
    std::optional<ToyOracle> toy;
    std::optional<ChainOracle> chain;
    std::optional<double> echo_horizon;
    std::optional<Matrix> limit_covariance;  // exact D₊ when known
};

LoadedModel load_model_text(const std::string& text);
LoadedModel load_model_file(const std::string& path);
LoadedModel build_from_json(const Json& builder);

Json model_to_json(const Model& model);
std::string model_to_text(const Model& model);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& what);

// Finite numbers as JSON numbers; ±inf and nan as strings.
Json number(double x);

// Serializer writing every floating-point number with %.17g.
std::string dump_json(const Json& j, int indent = -1);

// "lo:hi:n" (inclusive linspace) or "a,b,c". Strictly increasing, non-empty.
std::vector<double> parse_grid(const std::string& text, const std::string& what);

ToySpec toy_spec_from_json(const Json& params);
ChainSpec chain_spec_from_json(const Json& params);

}  // namespace gfluct
