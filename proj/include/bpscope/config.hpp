#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "io.hpp"
#include "runner.hpp"

namespace bpscope {

namespace fs = std::filesystem;

// Relative paths inside a config resolve against the config file's directory.
inline fs::path resolve_path(const fs::path& base, const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q : base / q;
}

inline std::uint64_t seed_from_json(const json& j, const std::string& where) {
    if (!j.contains("seed")) return 0;
    const json& s = j.at("seed");
    if (s.is_number_unsigned()) return s.get<std::uint64_t>();
    if (s.is_number_integer() && s.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(s.get<std::int64_t>());
    if (s.is_string()) {
        try {
            std::size_t used = 0;
            auto v = std::stoull(s.get<std::string>(), &used, 0);
            if (used == s.get<std::string>().size()) return v;
        } catch (const std::exception&) {
        }
    }
    throw ConfigError(where + ".seed must be an unsigned 64-bit integer");
}

inline ModelSpec model_from_json(const json& j, const fs::path& base, const std::string& where = "model") {
    ModelSpec m;
    std::string kind = detail::field_or<std::string>(j, "kind", "toric", where);
    if (kind == "toric") {
        m.kind = ModelSpec::Kind::toric;
        if (j.contains("lattice_config")) {
            auto p = resolve_path(base, detail::get_as<std::string>(j["lattice_config"], where + ".lattice_config"));
            m.lattice = lattice_config_from_json(read_json_file(p), p.filename().string());
        } else {
            m.lattice = lattice_config_from_json(j, where);
        }
        if (j.contains("field")) m.field = field_from_json(j["field"], where + ".field");
        if (j.contains("h_scalar")) m.h_scalar = detail::get_as<double>(j["h_scalar"], where + ".h_scalar");
    } else if (kind == "pauli_sum") {
        m.kind = ModelSpec::Kind::pauli_sum;
        int n = detail::get_as<int>(detail::need(j, "qubits", where), where + ".qubits");
        m.terms = hamiltonian_from_json(j, n, where);
    } else if (kind == "z_last") {
        m.kind = ModelSpec::Kind::z_last;
    } else {
        throw ConfigError(where + ".kind must be toric, pauli_sum or z_last");
    }
    return m;
}

inline json model_to_json(const ModelSpec& m) {
    switch (m.kind) {
        case ModelSpec::Kind::toric: {
            json j{{"kind", "toric"},
                   {"lattice", {{"rows", m.lattice.rows}, {"cols", m.lattice.cols}}},
                   {"field", {m.field.hx, m.field.hy, m.field.hz}}};
            if (m.has_regions())
                j["regions"] = {{"A", set_members(m.lattice.region_a)},
                                {"B", set_members(m.lattice.region_b)},
                                {"C", set_members(m.lattice.region_c)}};
            j["h_scalar"] = m.h_scalar ? json(*m.h_scalar) : json(nullptr);
            return j;
        }
        case ModelSpec::Kind::pauli_sum: {
            json j = hamiltonian_to_json(m.terms);
            j["kind"] = "pauli_sum";
            return j;
        }
        case ModelSpec::Kind::z_last: return {{"kind", "z_last"}};
    }
    return nullptr;
}

// Lattice families without their own "lattice" entry inherit the model's lattice.
inline AnsatzSpec ansatz_for_model(const json& j, const ModelSpec& m, const std::string& where) {
    AnsatzSpec a = ansatz_from_json(j, where);
    if (is_lattice_family(a.family) && !j.contains("lattice") && m.kind == ModelSpec::Kind::toric) {
        a.rows = m.lattice.rows;
        a.cols = m.lattice.cols;
    }
    return a;
}

inline void vqe_options_from_json(const json& j, VqeConfig& c, const std::string& where = "vqe") {
    if (j.is_null()) return;
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    c.iterations = detail::field_or<int>(j, "iterations", c.iterations, where);
    c.trials = detail::field_or<int>(j, "trials", c.trials, where);
    c.best_fraction = detail::field_or<double>(j, "best_fraction", c.best_fraction, where);
    if (j.contains("optimizer")) {
        const json& o = j["optimizer"];
        std::string w = where + ".optimizer";
        if (detail::field_or<std::string>(o, "kind", "adam", w) != "adam") throw ConfigError(w + ".kind: only adam is supported");
        c.optimizer.learning_rate = detail::field_or<double>(o, "learning_rate", c.optimizer.learning_rate, w);
        c.optimizer.beta1 = detail::field_or<double>(o, "beta1", c.optimizer.beta1, w);
        c.optimizer.beta2 = detail::field_or<double>(o, "beta2", c.optimizer.beta2, w);
        c.optimizer.epsilon = detail::field_or<double>(o, "epsilon", c.optimizer.epsilon, w);
    }
    if (j.contains("early_stop")) {
        const json& e = j["early_stop"];
        std::string w = where + ".early_stop";
        c.early_stop.enabled = detail::field_or<bool>(e, "enabled", c.early_stop.enabled, w);
        c.early_stop.window = detail::field_or<int>(e, "window", c.early_stop.window, w);
        c.early_stop.tolerance = detail::field_or<double>(e, "tolerance", c.early_stop.tolerance, w);
    }
}

inline json vqe_options_to_json(const VqeConfig& c) {
    return {{"iterations", c.iterations},
            {"trials", c.trials},
            {"best_fraction", c.best_fraction},
            {"optimizer",
             {{"kind", "adam"},
              {"learning_rate", c.optimizer.learning_rate},
              {"beta1", c.optimizer.beta1},
              {"beta2", c.optimizer.beta2},
              {"epsilon", c.optimizer.epsilon}}},
            {"early_stop",
             {{"enabled", c.early_stop.enabled}, {"window", c.early_stop.window}, {"tolerance", c.early_stop.tolerance}}}};
}

inline VqeConfig vqe_config_from_json(const json& j, const fs::path& base) {
    VqeConfig c;
    c.model = model_from_json(detail::need(j, "model", "config"), base);
    c.ansatz = ansatz_for_model(detail::need(j, "ansatz", "config"), c.model, "ansatz");
    if (j.contains("vqe")) vqe_options_from_json(j["vqe"], c);
    c.seed = seed_from_json(j, "config");
    c.validate();
    return c;
}

struct SweepConfig {
    VqeConfig base;
    std::vector<double> fields;
    Field direction{1.0, 0.0, 1.0};
    std::vector<AnsatzSpec> families;
    std::optional<fs::path> ed_cache;
};

inline SweepConfig sweep_config_from_json(const json& j, const fs::path& base) {
    SweepConfig s;
    s.base.model = model_from_json(detail::need(j, "model", "config"), base);
    if (s.base.model.kind != ModelSpec::Kind::toric) throw ConfigError("model.kind must be toric for a sweep");
    s.fields = detail::get_as<std::vector<double>>(detail::need(j, "fields", "config"), "fields");
    if (s.fields.empty()) throw ConfigError("fields must not be empty");
    if (j.contains("field_direction")) s.direction = field_from_json(j["field_direction"], "field_direction");
    const json& fams = detail::need(j, "families", "config");
    if (!fams.is_array() || fams.empty()) throw ConfigError("families must be a nonempty array");
    for (std::size_t i = 0; i < fams.size(); ++i) {
        std::string w = "families[" + std::to_string(i) + "]";
        AnsatzSpec a = fams[i].is_string() ? ansatz_for_model(json{{"family", fams[i]}}, s.base.model, w)
                                           : ansatz_for_model(fams[i], s.base.model, w);
        if (!is_lattice_family(a.family)) throw ConfigError(w + ": sweep families must be lattice families");
        s.families.push_back(a);
    }
    if (j.contains("vqe")) vqe_options_from_json(j["vqe"], s.base);
    if (j.contains("ed_cache")) s.ed_cache = resolve_path(base, detail::get_as<std::string>(j["ed_cache"], "ed_cache"));
    s.base.seed = seed_from_json(j, "config");
    s.base.validate();
    return s;
}

inline Circuit circuit_from_config(const json& j, const fs::path& base) {
    if (j.contains("circuit")) {
        const json& c = j["circuit"];
        if (c.is_string()) {
            auto p = resolve_path(base, c.get<std::string>());
            return circuit_from_json(read_json_file(p), p.filename().string());
        }
        return circuit_from_json(c, "circuit");
    }
    if (j.contains("ansatz")) return build(ansatz_from_json(j["ansatz"], "ansatz")).circuit;
    throw ConfigError("config: need \"circuit\" or \"ansatz\"");
}

inline Hamiltonian hamiltonian_from_config(const json& j, const fs::path& base, int n) {
    Hamiltonian H;
    if (j.contains("hamiltonian")) H = hamiltonian_from_json(j["hamiltonian"], n, "hamiltonian");
    else if (j.contains("model")) H = model_from_json(j["model"], base).hamiltonian(n);
    else throw ConfigError("config: need \"hamiltonian\" or \"model\"");
    if (H.qubit_count() != n) throw ConfigError("hamiltonian width " + std::to_string(H.qubit_count()) + " differs from circuit width " + std::to_string(n));
    return H;
}

inline std::vector<int> params_from_config(const json& j, const Circuit& c) {
    std::vector<int> ps;
    if (j.contains("params")) {
        ps = detail::get_as<std::vector<int>>(j["params"], "params");
        for (int p : ps)
            if (p < 0 || p >= c.param_count()) throw ConfigError("params: index " + std::to_string(p) + " out of range");
    } else {
        for (int p = 0; p < c.param_count(); ++p) ps.push_back(p);
    }
    return ps;
}

inline McMode mc_mode_from_string(const std::string& s, const std::string& where) {
    if (s == "cartan-uniform") return McMode::cartan_uniform;
    if (s == "haar-sandwich") return McMode::haar_sandwich;
    throw ConfigError(where + " must be cartan-uniform or haar-sandwich");
}

struct EstimatorChoice {
    bool exact = true, mc = false;
    std::size_t samples = 20000;
    McMode mode = McMode::cartan_uniform;
};

inline EstimatorChoice estimator_from_json(const json& j) {
    EstimatorChoice e;
    std::string est = detail::field_or<std::string>(j, "estimator", "exact", "config");
    if (est == "exact") e = {true, false};
    else if (est == "mc") e = {false, true};
    else if (est == "both") e = {true, true};
    else throw ConfigError("estimator must be exact, mc or both");
    if (j.contains("mc")) {
        const json& m = j["mc"];
        long long s = detail::field_or<long long>(m, "samples", 20000, "mc");
        if (s < 2) throw ConfigError("mc.samples must be >= 2");
        e.samples = static_cast<std::size_t>(s);
        e.mode = mc_mode_from_string(detail::field_or<std::string>(m, "mode", "cartan-uniform", "mc"), "mc.mode");
    }
    return e;
}

inline ScanConfig scan_config_from_json(const json& j) {
    const json& s = detail::need(j, "scan", "config");
    ScanConfig c;
    std::string kind = detail::get_as<std::string>(detail::need(s, "kind", "scan"), "scan.kind");
    if (kind == "vs_N") c.kind = ScanKind::vs_N;
    else if (kind == "vs_delta_k") c.kind = ScanKind::vs_delta_k;
    else throw ConfigError("scan.kind must be vs_N or vs_delta_k");
    std::string fam = detail::field_or<std::string>(s, "family", "ladder", "scan");
    auto f = parse_family(fam);
    if (!f) throw ConfigError("scan.family: unknown family \"" + fam + "\"");
    c.family = *f;
    std::string gate = detail::field_or<std::string>(s, "gate", "R_yy", "scan");
    auto g = parse_cartan_gate(gate);
    if (!g) throw ConfigError("scan.gate must be R_y1, R_yy or R_y2");
    c.gate = *g;
    auto ints = [&](const char* key) {
        const json& v = detail::need(s, key, "scan");
        return v.is_array() ? detail::get_as<std::vector<int>>(v, std::string("scan.") + key)
                            : std::vector<int>{detail::get_as<int>(v, std::string("scan.") + key)};
    };
    c.sizes = ints("N");
    c.delta_k = ints("delta_k");
    EstimatorChoice e = estimator_from_json(j);
    c.exact = e.exact;
    c.mc = e.mc;
    c.samples = e.samples;
    c.mode = e.mode;
    c.seed = seed_from_json(j, "config");
    return c;
}

inline const char* cartan_gate_name(CartanGate g) {
    switch (g) {
        case CartanGate::R_y1: return "R_y1";
        case CartanGate::R_yy: return "R_yy";
        case CartanGate::R_y2: return "R_y2";
    }
    return "?";
}

inline json scan_config_to_json(const ScanConfig& c) {
    return {{"scan",
             {{"kind", c.kind == ScanKind::vs_N ? "vs_N" : "vs_delta_k"},
              {"family", family_name(c.family)},
              {"gate", cartan_gate_name(c.gate)},
              {"N", c.sizes},
              {"delta_k", c.delta_k}}},
            {"estimator", c.exact && c.mc ? "both" : (c.mc ? "mc" : "exact")},
            {"mc", {{"samples", c.samples}, {"mode", mc_mode_name(c.mode)}}},
            {"seed", c.seed}};
}

}  // namespace bpscope
