#include "gfluct/io.hpp"

#include "gfluct/errors.hpp"
#include "gfluct/format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gfluct {

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Json number(double x) {
    if (std::isfinite(x)) return x;
    return fmt(x);
}

namespace {

void dump_into(std::string& out, const Json& j, int indent, int depth) {
    auto newline = [&](int d) {
        if (indent < 0) return;
        out += '\n';
        out.append(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (j.type()) {
        case Json::value_t::number_float: {
            const double x = j.get<double>();
            if (x == 0.0 && std::signbit(x))
                out += "-0.0";  // "-0" would read back as the integer 0
            else
                out += std::isfinite(x) ? fmt(x) : "null";
            break;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                break;
            }
            // Rows of numbers stay on one line.
            const bool flat = std::all_of(j.begin(), j.end(), [](const Json& v) { return v.is_primitive(); });
            out += '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += flat && indent >= 0 ? ", " : ",";
                first = false;
                if (!flat) newline(depth + 1);
                dump_into(out, v, indent, depth + 1);
            }
            if (!flat) newline(depth);
            out += ']';
            break;
        }
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                break;
            }
            out += '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ',';
                first = false;
                newline(depth + 1);
                out += Json(it.key()).dump();
                out += indent >= 0 ? ": " : ":";
                dump_into(out, it.value(), indent, depth + 1);
            }
            newline(depth);
            out += '}';
            break;
        }
        default:
            out += j.dump();
    }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
    std::string out;
    dump_into(out, j, indent, 0);
    return out;
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw StructuralError(what + ": expected a non-empty array of rows");
    const Index rows = static_cast<Index>(j.size());
    if (!j[0].is_array() || j[0].empty()) throw StructuralError(what + ": row 0 is not a non-empty array");
    const Index cols = static_cast<Index>(j[0].size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw StructuralError(what + ": row " + std::to_string(i) + " has the wrong length");
        for (Index k = 0; k < cols; ++k) {
            const Json& v = row[static_cast<std::size_t>(k)];
            if (!v.is_number())
                throw StructuralError(what + ": entry (" + std::to_string(i) + "," + std::to_string(k) +
                                      ") is not a number");
            m(i, k) = v.get<double>();
        }
    }
    return m;
}

namespace {

double get_number(const Json& params, const char* key, double fallback) {
    if (!params.contains(key)) return fallback;
    const Json& v = params.at(key);
    if (!v.is_number()) throw StructuralError(std::string("builder parameter '") + key + "' must be a number");
    return v.get<double>();
}

int get_int(const Json& params, const char* key, int fallback) {
    if (!params.contains(key)) return fallback;
    const Json& v = params.at(key);
    if (!v.is_number_integer()) throw StructuralError(std::string("builder parameter '") + key + "' must be an integer");
    return v.get<int>();
}

Vector get_vector(const Json& v, const char* key) {
    if (!v.is_array()) throw StructuralError(std::string("builder parameter '") + key + "' must be an array");
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw StructuralError(std::string("builder parameter '") + key + "' has a non-number");
        out(static_cast<Index>(i)) = v[i].get<double>();
    }
    return out;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

ToySpec toy_spec_from_json(const Json& params) {
    ToySpec s;
    s.n = get_int(params, "n", s.n);
    s.lam = get_number(params, "lam", s.lam);
    if (params.contains("doubled")) {
        if (!params["doubled"].is_boolean()) throw StructuralError("builder parameter 'doubled' must be a boolean");
        s.doubled = params["doubled"].get<bool>();
    }
    if (params.contains("phi_index")) s.phi_index = get_int(params, "phi_index", 0);
    return s;
}

ChainSpec chain_spec_from_json(const Json& params) {
    ChainSpec s;
    s.n_left = get_int(params, "n_left", s.n_left);
    s.n_right = get_int(params, "n_right", s.n_right);
    s.t_left = get_number(params, "t_left", s.t_left);
    s.t_center = get_number(params, "t_center", s.t_center);
    s.t_right = get_number(params, "t_right", s.t_right);
    if (params.contains("omega")) s.omega = get_vector(params["omega"], "omega");
    if (params.contains("kappa")) s.kappa = get_vector(params["kappa"], "kappa");
    return s;
}

LoadedModel build_from_json(const Json& builder) {
    if (!builder.is_object() || !builder.contains("name") || !builder["name"].is_string())
        throw StructuralError("builder: expected an object with a string 'name'");
    const std::string name = builder["name"].get<std::string>();
    const Json params = builder.value("params", Json::object());
    if (!params.is_object()) throw StructuralError("builder: 'params' must be an object");

    if (name == "toy") {
        ToyModel t = build_toy(toy_spec_from_json(params));
        LoadedModel out{t.model, name, t.oracle, std::nullopt, std::nullopt, std::nullopt};
        out.echo_horizon = toy_spec_from_json(params).n / 4.0;
        out.limit_covariance = Matrix::Identity(t.model.dim(), t.model.dim());
        return out;
    }
    if (name == "chain" || name == "chain_inhomogeneous") {
        ChainSpec spec = chain_spec_from_json(params);
        if (name == "chain_inhomogeneous" && !spec.omega && !spec.kappa)
            throw StructuralError("chain_inhomogeneous: supply 'omega' and/or 'kappa'");
        if (name == "chain" && (spec.omega || spec.kappa))
            throw StructuralError("chain: 'omega'/'kappa' belong to chain_inhomogeneous");
        ChainModel c = build_chain(spec);
        LoadedModel out{c.model, name, std::nullopt, c.oracle, chain_echo_horizon(spec), std::nullopt};
        if (params.value("perturbed", false)) {
            out.model = perturb_reference(c.model, build_chain_perturbation(spec));
            out.chain.reset();
        }
        return out;
    }
    throw StructuralError("builder: unknown name '" + name + "'");
}

namespace {

Matrix slot_matrix(const Json& slot, const char* role) {
    if (slot.is_object() && slot.contains("builder")) {
        const std::string r = role;
        const Json& spec = slot["builder"];
        if (r == "perturbation") {
            if (!spec.is_object() || spec.value("name", std::string{}) != "chain")
                throw StructuralError("perturbation builder: only 'chain' is available");
            return build_chain_perturbation(chain_spec_from_json(spec.value("params", Json::object())));
        }
        LoadedModel b = build_from_json(spec);
        if (r == "generator") return b.model.generator();
        if (r == "covariance") return b.model.covariance();
        if (r == "time_reversal") {
            if (!b.model.time_reversal()) throw StructuralError("builder supplies no time reversal");
            return *b.model.time_reversal();
        }
        throw StructuralError(std::string("builder cannot supply '") + role + "'");
    }
    if (slot.is_object() && slot.contains("dense")) return matrix_from_json(slot["dense"], role);
    return matrix_from_json(slot, role);
}

}  // namespace

LoadedModel load_model_text(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        std::ostringstream os;
        os << "malformed JSON at line " << line << ", column " << col;
        throw ParseError(os.str(), line, col);
    }
    if (!doc.is_object()) throw StructuralError("model file: top level must be an object");

    if (doc.contains("builder")) {
        LoadedModel out = build_from_json(doc["builder"]);
        if (doc.contains("perturbation")) {
            out.model = perturb_reference(out.model, slot_matrix(doc["perturbation"], "perturbation"));
            out.chain.reset();
            out.toy.reset();
        }
        return out;
    }

    for (const char* key : {"generator", "covariance"})
        if (!doc.contains(key)) throw StructuralError(std::string("model file: missing '") + key + "'");
    Matrix l = slot_matrix(doc["generator"], "generator");
    Matrix d = slot_matrix(doc["covariance"], "covariance");
    std::optional<Matrix> theta;
    if (doc.contains("time_reversal") && !doc["time_reversal"].is_null())
        theta = slot_matrix(doc["time_reversal"], "time_reversal");
    std::string label = doc.value("label", std::string{});
    if (doc.contains("dim")) {
        if (!doc["dim"].is_number_integer()) throw StructuralError("model file: 'dim' must be an integer");
        const Index dim = doc["dim"].get<Index>();
        if (dim != l.rows() || dim != d.rows())
            throw StructuralError("model file: 'dim' does not match the matrix sizes");
    }
    Model m(std::move(l), std::move(d), std::move(theta), label);
    if (doc.contains("perturbation")) m = perturb_reference(m, slot_matrix(doc["perturbation"], "perturbation"));
    return LoadedModel{m, {}, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
}

LoadedModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StructuralError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_model_text(ss.str());
}

Json model_to_json(const Model& model) {
    Json j;
    j["dim"] = model.dim();
    j["label"] = model.label();
    j["generator"] = {{"dense", matrix_to_json(model.generator())}};
    j["covariance"] = {{"dense", matrix_to_json(model.covariance())}};
    if (model.time_reversal())
        j["time_reversal"] = {{"dense", matrix_to_json(*model.time_reversal())}};
    else
        j["time_reversal"] = nullptr;
    return j;
}

std::string model_to_text(const Model& model) {
    return dump_json(model_to_json(model));
}

std::vector<double> parse_grid(const std::string& text, const std::string& what) {
    std::vector<double> out;
    auto to_double = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw StructuralError(what + ": '" + s + "' is not a number");
        }
        if (used != s.size() || !std::isfinite(v)) throw StructuralError(what + ": '" + s + "' is not a finite number");
        return v;
    };
    if (text.empty()) throw StructuralError(what + ": empty grid");

    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw StructuralError(what + ": expected lo:hi:n");
        const double lo = to_double(parts[0]), hi = to_double(parts[1]);
        const double nd = to_double(parts[2]);
        if (nd < 1 || nd != std::floor(nd) || nd > 1e7) throw StructuralError(what + ": n must be a positive integer");
        const int n = static_cast<int>(nd);
        if (n > 1 && !(hi > lo)) throw StructuralError(what + ": grid must be strictly increasing");
        out = linspace(lo, hi, n);
    } else {
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ',');) out.push_back(to_double(p));
    }
    if (out.empty()) throw StructuralError(what + ": empty grid");
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out[i] > out[i - 1])) throw StructuralError(what + ": grid must be strictly increasing");
    return out;
}

}  // namespace gfluct
