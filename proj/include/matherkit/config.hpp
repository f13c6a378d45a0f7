#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "matherkit/errors.hpp"
#include "matherkit/experiments.hpp"

namespace matherkit {

enum class ExperimentKind { Solve, Barrier, Coincidence, Semicontinuity, Cohomology };

inline const std::vector<std::pair<std::string, ExperimentKind>>& experiment_kinds() {
    static const std::vector<std::pair<std::string, ExperimentKind>> kinds = {
        {"solve", ExperimentKind::Solve},
        {"barrier", ExperimentKind::Barrier},
        {"coincidence", ExperimentKind::Coincidence},
        {"semicontinuity", ExperimentKind::Semicontinuity},
        {"cohomology", ExperimentKind::Cohomology},
    };
    return kinds;
}

inline const std::vector<std::string>& potential_families() {
    static const std::vector<std::string> families = {
        "zero", "cosine", "double_well", "tilted_double_well", "trig"};
    return families;
}

/// One validated scenario: model, grid, tolerances and the experiment block.
struct ScenarioConfig {
    std::string name = "scenario";
    std::string output_dir = "runs/scenario";
    LagrangianSpec spec;
    Grid grid;
    PipelineParams params;
    ExperimentKind kind = ExperimentKind::Solve;

    // semicontinuity block
    int k_max = 8;
    double tilt_scale = 0.02;
    double U_radius_cells = 3.0;
    // cohomology block
    std::vector<Vec> c_values;

    std::string raw_text; // the bytes the config was parsed from
};

namespace cfgdetail {

struct Node {
    // either a scalar/list value or a block of children
    std::string value;
    int line = 0;
    bool is_block = false;
    std::vector<std::pair<std::string, Node>> children;
    mutable bool visited = false;

    const Node* find(const std::string& key) const {
        for (const auto& [k, child] : children)
            if (k == key) {
                child.visited = true;
                return &child;
            }
        return nullptr;
    }
};

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

/// Where the value starting at `from` ends: at a closing brace, or where the
/// next `key =` / `key {` directive begins on the same line.
inline std::size_t value_end(const std::string& body, std::size_t from) {
    for (std::size_t j = from; j < body.size(); ++j) {
        if (body[j] == '}' || body[j] == '{') {
            // walk back over the identifier that owns a block brace
            std::size_t k = j;
            while (k > from && std::isspace(static_cast<unsigned char>(body[k - 1]))) --k;
            while (k > from && ident_char(body[k - 1])) --k;
            return body[j] == '{' ? k : j;
        }
        if (body[j] == '=') {
            std::size_t k = j;
            while (k > from && std::isspace(static_cast<unsigned char>(body[k - 1]))) --k;
            std::size_t id_end = k;
            while (k > from && ident_char(body[k - 1])) --k;
            if (k > from && id_end > k) return k;
        }
    }
    return body.size();
}

inline Node parse_tree(const std::string& text) {
    Node root;
    root.is_block = true;
    std::vector<Node*> stack = {&root};
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::string body = trim(line);
        std::size_t pos = 0;
        while (pos < body.size()) {
            while (pos < body.size() &&
                   std::isspace(static_cast<unsigned char>(body[pos])))
                ++pos;
            if (pos >= body.size()) break;
            if (body[pos] == '}') {
                if (stack.size() == 1) throw ParseError(lineno, "unmatched '}'");
                stack.pop_back();
                ++pos;
                continue;
            }
            std::size_t brace = body.find('{', pos);
            std::size_t eq = body.find('=', pos);
            if (brace != std::string::npos && (eq == std::string::npos || brace < eq)) {
                std::string key = trim(body.substr(pos, brace - pos));
                if (key.empty()) throw ParseError(lineno, "block needs a name");
                Node block;
                block.is_block = true;
                block.line = lineno;
                stack.back()->children.emplace_back(key, std::move(block));
                stack.push_back(&stack.back()->children.back().second);
                pos = brace + 1;
                continue;
            }
            if (eq == std::string::npos)
                throw ParseError(lineno, "expected 'key = value' or a block");
            std::string key = trim(body.substr(pos, eq - pos));
            if (key.empty()) throw ParseError(lineno, "empty key");
            std::size_t end = value_end(body, eq + 1);
            std::string value = trim(body.substr(eq + 1, end - (eq + 1)));
            if (value.empty()) throw ParseError(lineno, "empty value for '" + key + "'");
            Node leaf;
            leaf.value = value;
            leaf.line = lineno;
            stack.back()->children.emplace_back(key, std::move(leaf));
            pos = end;
        }
    }
    if (stack.size() != 1) throw ParseError(lineno, "unclosed block");
    return root;
}

inline double to_double(const Node& n, const std::string& field) {
    try {
        std::size_t used = 0;
        double v = std::stod(n.value, &used);
        if (used != n.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ValidationError(field, "expected a number, got '" + n.value + "'");
    }
}

inline int to_int(const Node& n, const std::string& field) {
    try {
        std::size_t used = 0;
        int v = std::stoi(n.value, &used);
        if (used != n.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ValidationError(field, "expected an integer, got '" + n.value + "'");
    }
}

inline std::vector<double> to_list(const Node& n, const std::string& field) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(n.value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ValidationError(field, "empty list entry");
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ValidationError(field, "expected a number, got '" + item + "'");
        }
    }
    if (out.empty()) throw ValidationError(field, "empty list");
    return out;
}

inline void reject_unknown(const Node& block, const std::string& where) {
    for (const auto& [key, child] : block.children)
        if (!child.visited)
            throw ValidationError(where + "." + key,
                                  "unknown key (line " + std::to_string(child.line) + ")");
}

inline Potential parse_potential(const Node& block, int dim) {
    const Node* fam = block.find("family");
    if (!fam) throw ValidationError("spec.potential.family", "missing");
    std::string family = fam->value;
    bool known = false;
    for (const auto& f : potential_families()) known = known || f == family;
    if (!known) {
        std::string names;
        for (const auto& f : potential_families()) names += f + " ";
        throw ValidationError("spec.potential.family",
                              "unknown family '" + family + "'; known: " + names);
    }

    auto amplitude = [&](double fallback) {
        const Node* n = block.find("amplitude");
        return n ? to_double(*n, "spec.potential.amplitude") : fallback;
    };
    Potential pot;
    if (family == "zero") {
        pot = zero_potential(dim);
    } else if (family == "cosine") {
        const Node* n = block.find("phase");
        double phase = n ? to_double(*n, "spec.potential.phase") : 0.0;
        pot = cosine_potential(amplitude(1.0), phase);
    } else if (family == "double_well") {
        pot = double_well_potential(amplitude(1.0));
    } else if (family == "tilted_double_well") {
        const Node* n = block.find("tilt");
        double tilt = n ? to_double(*n, "spec.potential.tilt") : 0.0;
        pot = tilted_double_well_potential(amplitude(1.0), tilt);
    } else { // trig: repeatable `term = amplitude, time_harmonic, wave..., phase`
        pot.dim = dim;
        for (const auto& [key, child] : block.children) {
            if (key != "term") continue;
            child.visited = true;
            auto vals = to_list(child, "spec.potential.term");
            if (int(vals.size()) != 3 + dim)
                throw ValidationError("spec.potential.term",
                                      "expected amplitude, time_harmonic, " +
                                          std::to_string(dim) + " wave numbers, phase");
            TrigTerm term;
            term.amplitude = vals[0];
            term.time_harmonic = int(vals[1]);
            for (int i = 0; i < dim; ++i) term.wave[i] = int(vals[2 + i]);
            term.phase = vals[2 + dim];
            pot.terms.push_back(term);
        }
        if (pot.terms.empty())
            throw ValidationError("spec.potential.term", "trig family needs terms");
    }
    pot.dim = dim;
    reject_unknown(block, "spec.potential");
    return pot;
}

} // namespace cfgdetail

inline ScenarioConfig parse_config_text(const std::string& text) {
    using namespace cfgdetail;
    Node root = parse_tree(text);
    ScenarioConfig cfg;
    cfg.raw_text = text;

    if (const Node* n = root.find("name")) cfg.name = n->value;
    if (const Node* n = root.find("output_dir")) cfg.output_dir = n->value;

    const Node* spec = root.find("spec");
    if (!spec) throw ValidationError("spec", "missing block");
    int dim = 1;
    if (const Node* n = spec->find("dim")) dim = to_int(*n, "spec.dim");
    if (dim != 1 && dim != 2) throw ValidationError("spec.dim", "must be 1 or 2");
    cfg.spec.dim = dim;
    if (const Node* n = spec->find("kinetic")) {
        auto vals = to_list(*n, "spec.kinetic");
        if (int(vals.size()) != dim * dim)
            throw ValidationError("spec.kinetic",
                                  "expected " + std::to_string(dim * dim) + " entries");
        cfg.spec.kinetic = {1.0, 0.0, 0.0, 1.0};
        if (dim == 1) {
            cfg.spec.kinetic[0] = vals[0];
        } else {
            for (int i = 0; i < 4; ++i) cfg.spec.kinetic[i] = vals[i];
        }
    }
    if (!cfg.spec.kinetic_symmetric())
        throw ValidationError("spec.kinetic", "must be symmetric");
    if (cfg.spec.lambda_min() <= 0.0)
        throw ValidationError("spec.kinetic", "must be positive definite");
    if (const Node* n = spec->find("one_form")) {
        auto vals = to_list(*n, "spec.one_form");
        if (int(vals.size()) != dim)
            throw ValidationError("spec.one_form",
                                  "expected " + std::to_string(dim) + " entries");
        for (int i = 0; i < dim; ++i) cfg.spec.one_form[i] = vals[i];
    }
    const Node* pot = spec->find("potential");
    if (!pot) throw ValidationError("spec.potential", "missing block");
    cfg.spec.potential = parse_potential(*pot, dim);
    reject_unknown(*spec, "spec");

    const Node* grid = root.find("grid");
    if (!grid) throw ValidationError("grid", "missing block");
    cfg.grid.dim = dim;
    if (const Node* n = grid->find("n_q")) cfg.grid.n_q = to_int(*n, "grid.n_q");
    if (const Node* n = grid->find("n_t")) cfg.grid.n_t = to_int(*n, "grid.n_t");
    if (const Node* n = grid->find("v_max")) cfg.grid.v_max = to_double(*n, "grid.v_max");
    reject_unknown(*grid, "grid");
    try {
        cfg.grid.validate();
    } catch (const Error& e) {
        throw ValidationError("grid", e.what());
    }

    if (const Node* tol = root.find("tolerances")) {
        auto dbl = [&](const char* key, double& slot) {
            if (const Node* n = tol->find(key)) {
                slot = to_double(*n, std::string("tolerances.") + key);
                if (std::string(key) != "tol_rel" && !(slot > 0.0))
                    throw ValidationError(std::string("tolerances.") + key,
                                          "must be positive");
            }
        };
        auto integer = [&](const char* key, int& slot) {
            if (const Node* n = tol->find(key)) {
                slot = to_int(*n, std::string("tolerances.") + key);
                if (slot <= 0)
                    throw ValidationError(std::string("tolerances.") + key,
                                          "must be positive");
            }
        };
        dbl("tol_fix", cfg.params.tol_fix);
        dbl("tol_dom", cfg.params.tol_dom);
        dbl("tol_aubry", cfg.params.tol_aubry);
        dbl("tol_class", cfg.params.tol_class);
        dbl("tol_cal", cfg.params.tol_cal);
        dbl("tol_tail", cfg.params.tol_tail);
        if (const Node* n = tol->find("tol_rel"))
            cfg.params.tol_rel = to_double(*n, "tolerances.tol_rel");
        integer("T_min", cfg.params.T_min);
        integer("T_max", cfg.params.T_max);
        integer("n_cal", cfg.params.n_cal);
        integer("max_iters", cfg.params.max_iters);
        integer("sample_count", cfg.params.sample_count);
        if (const Node* n = tol->find("eps_schedule")) {
            cfg.params.eps_schedule = to_list(*n, "tolerances.eps_schedule");
            for (std::size_t i = 0; i + 1 < cfg.params.eps_schedule.size(); ++i)
                if (cfg.params.eps_schedule[i] <= cfg.params.eps_schedule[i + 1])
                    throw ValidationError("tolerances.eps_schedule", "must be decreasing");
            for (double e : cfg.params.eps_schedule)
                if (!(e > 0.0))
                    throw ValidationError("tolerances.eps_schedule", "must be positive");
        }
        reject_unknown(*tol, "tolerances");
        if (cfg.params.T_max <= cfg.params.T_min)
            throw ValidationError("tolerances.T_max", "must exceed T_min");
        if (cfg.params.n_cal < 2)
            throw ValidationError("tolerances.n_cal", "must be at least 2");
    }

    const Node* exp = root.find("experiment");
    if (!exp) throw ValidationError("experiment", "missing block");
    const Node* kind = exp->find("kind");
    if (!kind) throw ValidationError("experiment.kind", "missing");
    bool matched = false;
    for (const auto& [name, k] : experiment_kinds())
        if (name == kind->value) {
            cfg.kind = k;
            matched = true;
        }
    if (!matched) {
        std::string names;
        for (const auto& [name, k] : experiment_kinds()) names += name + " ";
        throw ValidationError("experiment.kind",
                              "unknown kind '" + kind->value + "'; known: " + names);
    }
    if (const Node* n = exp->find("k_max")) {
        cfg.k_max = to_int(*n, "experiment.k_max");
        if (cfg.k_max < 1) throw ValidationError("experiment.k_max", "must be positive");
    }
    if (const Node* n = exp->find("tilt_scale"))
        cfg.tilt_scale = to_double(*n, "experiment.tilt_scale");
    if (const Node* n = exp->find("U_radius_cells")) {
        cfg.U_radius_cells = to_double(*n, "experiment.U_radius_cells");
        if (!(cfg.U_radius_cells > 0.0))
            throw ValidationError("experiment.U_radius_cells", "must be positive");
    }
    if (const Node* n = exp->find("c_values")) {
        auto vals = to_list(*n, "experiment.c_values");
        if (dim == 1) {
            for (double v : vals) cfg.c_values.push_back({v, 0.0});
        } else {
            if (vals.size() % 2 != 0)
                throw ValidationError("experiment.c_values", "expected pairs for dim 2");
            for (std::size_t i = 0; i + 1 < vals.size(); i += 2)
                cfg.c_values.push_back({vals[i], vals[i + 1]});
        }
    }
    if (cfg.kind == ExperimentKind::Cohomology && cfg.c_values.empty())
        throw ValidationError("experiment.c_values", "cohomology sweep needs values");
    reject_unknown(*exp, "experiment");
    reject_unknown(root, "config");

    // the coincidence and semicontinuity pipelines need the solution family
    if (cfg.kind == ExperimentKind::Coincidence ||
        cfg.kind == ExperimentKind::Semicontinuity)
        cfg.params.record_full = true;
    return cfg;
}

inline ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

} // namespace matherkit
