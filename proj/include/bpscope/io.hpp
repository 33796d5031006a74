#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ansatz.hpp"
#include "bounds.hpp"
#include "circuit.hpp"
#include "hamiltonian.hpp"
#include "models.hpp"

namespace bpscope {

using json = nlohmann::json;

// Floats in every CSV and report: 17 significant digits, enough to round-trip a double.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json read_json_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

namespace detail {

inline const json& need(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing field \"" + key + "\"");
    return j.at(key);
}

template <class T>
T get_as(const json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": wrong type");
    }
}

template <class T>
T field_or(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return get_as<T>(j.at(key), where + "." + key);
}

}  // namespace detail

// "ZZ@[3,4]" places letters on the listed qubits; a bare "ZIIZ" must span all qubits.
inline PauliString parse_generator(int n, const std::string& text, const std::string& where) {
    auto at = text.find('@');
    if (at == std::string::npos) {
        PauliString p;
        try {
            p = PauliString::parse(text);
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
        if (p.size() != n) throw ConfigError(where + ": generator \"" + text + "\" does not span " + std::to_string(n) + " qubits");
        return p;
    }
    std::vector<int> qs;
    try {
        qs = json::parse(text.substr(at + 1)).get<std::vector<int>>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": bad qubit list in \"" + text + "\"");
    }
    return place(n, text.substr(0, at), qs);
}

inline std::string generator_text(const PauliString& p) {
    std::string letters;
    json qs = json::array();
    for (int q : set_members(support(p))) {
        letters += "IXYZ"[static_cast<int>(p.letter(q))];
        qs.push_back(q);
    }
    return letters + "@" + qs.dump();
}

inline Circuit circuit_from_json(const json& j, const std::string& where = "circuit") {
    int n = detail::get_as<int>(detail::need(j, "qubits", where), where + ".qubits");
    if (n < 1 || n > kMaxQubits) throw ConfigError(where + ".qubits out of range");
    Circuit c(n);
    const json& blocks = detail::need(j, "blocks", where);
    if (!blocks.is_array()) throw ConfigError(where + ".blocks must be an array");
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        std::string bw = where + ".blocks[" + std::to_string(k) + "]";
        const json& b = blocks[k];
        std::string kind = detail::field_or<std::string>(b, "kind", "design2", bw);
        BlockKind bk;
        if (kind == "design2") bk = BlockKind::design2;
        else if (kind == "structured") bk = BlockKind::structured;
        else throw ConfigError(bw + ".kind must be design2 or structured");
        std::vector<Gate> gates;
        const json& gs = detail::need(b, "gates", bw);
        for (std::size_t i = 0; i < gs.size(); ++i) {
            std::string gw = bw + ".gates[" + std::to_string(i) + "]";
            Gate g;
            g.generator = parse_generator(n, detail::get_as<std::string>(detail::need(gs[i], "generator", gw), gw), gw);
            if (gs[i].contains("param")) g.param = detail::get_as<int>(gs[i]["param"], gw + ".param");
            if (gs[i].contains("fixed_angle")) g.fixed_angle = detail::get_as<double>(gs[i]["fixed_angle"], gw + ".fixed_angle");
            gates.push_back(g);
        }
        try {
            c.add_block(bk, std::move(gates));
        } catch (const ConfigError& e) {
            throw ConfigError(bw + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

inline json circuit_to_json(const Circuit& c) {
    json blocks = json::array();
    for (const auto& b : c.blocks()) {
        json gates = json::array();
        for (const auto& g : b.gates) {
            json gj{{"generator", generator_text(g.generator)}};
            if (g.param) gj["param"] = *g.param;
            else gj["fixed_angle"] = *g.fixed_angle;
            gates.push_back(gj);
        }
        blocks.push_back({{"kind", kind_name(b.kind)}, {"gates", gates}});
    }
    return {{"qubits", c.qubit_count()}, {"blocks", blocks}};
}

inline json path_set_to_json(const PathSet& p) {
    json a = json::array();
    for (const auto& path : p.paths) a.push_back(path);
    return a;
}

inline PathSet path_set_from_json(const json& j) {
    PathSet p;
    for (const auto& path : j) p.paths.push_back(path.get<Path>());
    return p;
}

inline json bound_report_to_json(const BoundReport& r) {
    json terms = json::array();
    for (const auto& t : r.per_term) {
        json tj{{"term_index", t.term_index}, {"contribution", t.contribution}};
        tj["path_set"] = t.path_set ? path_set_to_json(*t.path_set) : json(nullptr);
        terms.push_back(tj);
    }
    return {{"kind", bound_name(r.kind)}, {"total", r.total}, {"sandwich_assumed", r.sandwich_assumed}, {"per_term", terms}};
}

// Lattice geometry plus the three regions used for the topological entropy.
struct LatticeConfig {
    int rows = 3, cols = 3;
    QubitSet region_a = 0, region_b = 0, region_c = 0;
};

inline QubitSet region_from_json(const json& j, int n, const std::string& where) {
    auto qs = detail::get_as<std::vector<int>>(j, where);
    for (int q : qs)
        if (q < 0 || q >= n) throw ConfigError(where + ": qubit " + std::to_string(q) + " out of range");
    return make_set(qs);
}

inline LatticeConfig lattice_config_from_json(const json& j, const std::string& where = "lattice_config") {
    LatticeConfig lc;
    const json& lat = detail::need(j, "lattice", where);
    lc.rows = detail::get_as<int>(detail::need(lat, "rows", where + ".lattice"), where + ".lattice.rows");
    lc.cols = detail::get_as<int>(detail::need(lat, "cols", where + ".lattice"), where + ".lattice.cols");
    ToricLattice l(lc.rows, lc.cols);
    if (j.contains("regions")) {
        const json& r = j.at("regions");
        lc.region_a = region_from_json(detail::need(r, "A", where + ".regions"), l.edge_count(), where + ".regions.A");
        lc.region_b = region_from_json(detail::need(r, "B", where + ".regions"), l.edge_count(), where + ".regions.B");
        lc.region_c = region_from_json(detail::need(r, "C", where + ".regions"), l.edge_count(), where + ".regions.C");
        if ((lc.region_a & lc.region_b) || (lc.region_b & lc.region_c) || (lc.region_a & lc.region_c))
            throw ConfigError(where + ".regions must be disjoint");
    }
    return lc;
}

inline PlaquetteShape parse_shape(const std::string& s, const std::string& where) {
    if (s == "claw") return PlaquetteShape::claw;
    if (s == "ushape") return PlaquetteShape::ushape;
    throw ConfigError(where + ": shape must be claw or ushape");
}

inline SlotTable slot_table_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(where + " must list three edge pairs");
    SlotTable t;
    for (std::size_t k = 0; k < 3; ++k) {
        auto pair = detail::get_as<std::vector<std::string>>(j[k], where + "[" + std::to_string(k) + "]");
        if (pair.size() != 2) throw ConfigError(where + "[" + std::to_string(k) + "] must name two sides");
        auto a = parse_side(pair[0]), b = parse_side(pair[1]);
        if (!a || !b || *a == *b) throw ConfigError(where + "[" + std::to_string(k) + "]: sides must be two of top, bottom, left, right");
        t[k] = {*a, *b};
    }
    return t;
}

inline AnsatzSpec ansatz_from_json(const json& j, const std::string& where = "ansatz") {
    AnsatzSpec s;
    std::string fam = detail::get_as<std::string>(detail::need(j, "family", where), where + ".family");
    auto f = parse_family(fam);
    if (!f) throw ConfigError(where + ".family: unknown family \"" + fam + "\"");
    s.family = *f;
    s.n = detail::field_or<int>(j, "n", 0, where);
    s.repetitions = detail::field_or<int>(j, "repetitions", 0, where);
    if (j.contains("lattice")) {
        s.rows = detail::field_or<int>(j["lattice"], "rows", 3, where + ".lattice");
        s.cols = detail::field_or<int>(j["lattice"], "cols", 3, where + ".lattice");
    }
    if (j.contains("shape")) s.shape = parse_shape(detail::get_as<std::string>(j["shape"], where + ".shape"), where + ".shape");
    if (j.contains("slots")) s.slots = slot_table_from_json(j["slots"], where + ".slots");
    if (s.repetitions < 0) throw ConfigError(where + ".repetitions must be >= 0");
    return s;
}

inline json ansatz_to_json(const AnsatzSpec& s) {
    json j{{"family", family_name(s.family)}};
    if (is_lattice_family(s.family)) {
        j["lattice"] = {{"rows", s.rows}, {"cols", s.cols}};
        if (s.family == Family::fdc || s.family == Family::gldc) j["shape"] = s.shape == PlaquetteShape::claw ? "claw" : "ushape";
    } else {
        j["n"] = s.n;
    }
    if (s.family == Family::brickwall || s.family == Family::gldc) j["repetitions"] = s.repetitions;
    if (s.slots) {
        static const char* names[] = {"top", "bottom", "left", "right"};
        json t = json::array();
        for (auto [a, b] : *s.slots) t.push_back({names[static_cast<int>(a)], names[static_cast<int>(b)]});
        j["slots"] = t;
    }
    return j;
}

inline Hamiltonian hamiltonian_from_json(const json& j, int n, const std::string& where = "hamiltonian") {
    int width = detail::field_or<int>(j, "qubits", n, where);
    const json& terms = detail::need(j, "terms", where);
    Hamiltonian H(width);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        std::string tw = where + ".terms[" + std::to_string(i) + "]";
        double c = detail::get_as<double>(detail::need(terms[i], "coeff", tw), tw + ".coeff");
        std::string p = detail::get_as<std::string>(detail::need(terms[i], "pauli", tw), tw + ".pauli");
        PauliString ps = p.find('@') == std::string::npos ? PauliString::parse(p) : parse_generator(width, p, tw);
        if (ps.size() != width) throw ConfigError(tw + ": Pauli string width differs from " + std::to_string(width));
        H.add(c, ps);
    }
    return H;
}

inline json hamiltonian_to_json(const Hamiltonian& H) {
    json terms = json::array();
    for (const auto& t : H.terms()) terms.push_back({{"coeff", t.coeff}, {"pauli", t.pauli.str()}});
    return {{"qubits", H.qubit_count()}, {"terms", terms}};
}

inline Field field_from_json(const json& j, const std::string& where) {
    auto v = detail::get_as<std::vector<double>>(j, where);
    if (v.size() != 3) throw ConfigError(where + " must be [hx, hy, hz]");
    return {v[0], v[1], v[2]};
}

// Writes rows to a CSV file; cells are preformatted strings.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& p, const std::vector<std::string>& header) : out_(p) {
        if (!out_) throw Error("cannot write " + p.string());
        row(header);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

}  // namespace bpscope
