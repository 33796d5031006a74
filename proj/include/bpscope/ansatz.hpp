#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "circuit.hpp"
#include "models.hpp"

namespace bpscope {

inline constexpr int kCartanParams = 15;

// Positions inside a Cartan block of the three differentiated gates used for
// variance scans: first-layer R_y on q2, the R_yy gate, last-layer R_y on q2.
enum class CartanGate { R_y1 = 3, R_yy = 7, R_y2 = 12 };

inline std::optional<CartanGate> parse_cartan_gate(const std::string& s) {
    if (s == "R_y1") return CartanGate::R_y1;
    if (s == "R_yy") return CartanGate::R_yy;
    if (s == "R_y2") return CartanGate::R_y2;
    return std::nullopt;
}

// Universal two-qubit block (R3 x R3) R_xx R_yy R_zz (R3 x R3) with R3 = R_z R_y R_z,
// listed in application order; parameters offset .. offset+14.
inline std::vector<Gate> cartan_gates(int n, int q1, int q2, int offset) {
    if (q1 == q2) throw ConfigError("Cartan block needs two distinct qubits");
    std::vector<Gate> g;
    int p = offset;
    auto one = [&](const char* l, int q) { g.push_back({place(n, l, {q}), p++, std::nullopt}); };
    auto two = [&](const char* l) { g.push_back({place(n, l, {q1, q2}), p++, std::nullopt}); };
    for (const char* l : {"Z", "Y", "Z"}) {
        one(l, q1);
        one(l, q2);
    }
    two("XX");
    two("YY");
    two("ZZ");
    for (const char* l : {"Z", "Y", "Z"}) {
        one(l, q1);
        one(l, q2);
    }
    return g;
}

inline int add_cartan_block(Circuit& c, int q1, int q2) {
    return c.add_block(BlockKind::design2, cartan_gates(c.qubit_count(), q1, q2, c.param_count()));
}

enum class Family { ladder, two_way_ladder, brickwall, fdc, gldc, fldc_claw, fldc_ushape };
enum class PlaquetteShape { claw, ushape };

inline std::optional<Family> parse_family(const std::string& s) {
    static const std::pair<const char*, Family> names[] = {
        {"ladder", Family::ladder},       {"two_way_ladder", Family::two_way_ladder},
        {"brickwall", Family::brickwall}, {"fdc", Family::fdc},
        {"gldc", Family::gldc},           {"fldc_claw", Family::fldc_claw},
        {"fldc_ushape", Family::fldc_ushape},
    };
    for (auto& [k, v] : names)
        if (s == k) return v;
    return std::nullopt;
}

inline const char* family_name(Family f) {
    switch (f) {
        case Family::ladder: return "ladder";
        case Family::two_way_ladder: return "two_way_ladder";
        case Family::brickwall: return "brickwall";
        case Family::fdc: return "fdc";
        case Family::gldc: return "gldc";
        case Family::fldc_claw: return "fldc_claw";
        case Family::fldc_ushape: return "fldc_ushape";
    }
    return "?";
}

inline bool is_lattice_family(Family f) {
    return f == Family::fdc || f == Family::gldc || f == Family::fldc_claw || f == Family::fldc_ushape;
}

enum class Side { top, bottom, left, right };

// Three (first, second) edge pairs per plaquette, in the order the blocks act.
using SlotTable = std::array<std::pair<Side, Side>, 3>;

// Claw: every block ends on the bottom edge. U-shape: left-bottom, bottom-right, right-top,
// i.e. anticlockwise around the plaquette. configs/plaquette_shapes.json holds the same tables.
inline SlotTable builtin_slots(PlaquetteShape s) {
    if (s == PlaquetteShape::claw) return {{{Side::left, Side::bottom}, {Side::top, Side::bottom}, {Side::right, Side::bottom}}};
    return {{{Side::left, Side::bottom}, {Side::bottom, Side::right}, {Side::right, Side::top}}};
}

inline std::optional<Side> parse_side(const std::string& s) {
    if (s == "top") return Side::top;
    if (s == "bottom") return Side::bottom;
    if (s == "left") return Side::left;
    if (s == "right") return Side::right;
    return std::nullopt;
}

inline int edge_of(const ToricLattice::Plaquette& p, Side s) {
    switch (s) {
        case Side::top: return p.top;
        case Side::bottom: return p.bottom;
        case Side::left: return p.left;
        case Side::right: return p.right;
    }
    return -1;
}

inline std::array<std::pair<int, int>, 3> plaquette_slots(const ToricLattice::Plaquette& p, const SlotTable& t) {
    std::array<std::pair<int, int>, 3> out;
    for (std::size_t j = 0; j < 3; ++j) out[j] = {edge_of(p, t[j].first), edge_of(p, t[j].second)};
    return out;
}

inline std::array<std::pair<int, int>, 3> plaquette_slots(const ToricLattice::Plaquette& p, PlaquetteShape s) {
    return plaquette_slots(p, builtin_slots(s));
}

struct AnsatzSpec {
    Family family = Family::ladder;
    int n = 0;              // qubit count for 1D families
    int rows = 3, cols = 3; // vertex grid for lattice families
    int repetitions = 0;    // brickwall layers, or FDC copies for gldc (0: qubit count)
    PlaquetteShape shape = PlaquetteShape::claw;  // block positions used by fdc / gldc
    std::optional<SlotTable> slots;               // overrides the built-in table of the shape
};

struct ManifestEntry {
    int plaquette = -1;  // row-major plaquette index, -1 for 1D families
    int slot = -1;       // position inside the plaquette pattern
    int repetition = 0;
    int block = -1;
};

struct BuiltAnsatz {
    Circuit circuit;
    std::vector<ManifestEntry> manifest;
};

inline BuiltAnsatz build(const AnsatzSpec& spec) {
    BuiltAnsatz out;
    auto add = [&](int q1, int q2, int plaq, int slot, int rep) {
        int k = add_cartan_block(out.circuit, q1, q2);
        out.manifest.push_back({plaq, slot, rep, k});
    };
    switch (spec.family) {
        case Family::ladder:
        case Family::two_way_ladder:
        case Family::brickwall: {
            if (spec.n < 2) throw ConfigError("ansatz.n must be at least 2");
            out.circuit = Circuit(spec.n);
            if (spec.family == Family::brickwall) {
                int layers = spec.repetitions > 0 ? spec.repetitions : 1;
                for (int l = 0; l < layers; ++l)
                    for (int q = l % 2; q + 1 < spec.n; q += 2) add(q, q + 1, -1, -1, l);
            } else {
                for (int q = 0; q + 1 < spec.n; ++q) add(q, q + 1, -1, -1, 0);
                if (spec.family == Family::two_way_ladder)
                    for (int q = spec.n - 3; q >= 0; --q) add(q, q + 1, -1, -1, 1);
            }
            break;
        }
        default: {
            ToricLattice lat(spec.rows, spec.cols);
            out.circuit = Circuit(lat.edge_count());
            const int nplaq = lat.plaquette_count();
            auto slots_of = [&](int pi, PlaquetteShape s) {
                return plaquette_slots(lat.plaquette(pi / (lat.cols() - 1), pi % (lat.cols() - 1)),
                                       spec.slots ? *spec.slots : builtin_slots(s));
            };
            if (spec.family == Family::fldc_claw || spec.family == Family::fldc_ushape) {
                PlaquetteShape s = spec.family == Family::fldc_claw ? PlaquetteShape::claw : PlaquetteShape::ushape;
                for (int pi = 0; pi < nplaq; ++pi) {
                    auto sl = slots_of(pi, s);
                    for (int j = 0; j < 3; ++j) add(sl[static_cast<std::size_t>(j)].first, sl[static_cast<std::size_t>(j)].second, pi, j, 0);
                }
            } else {
                int reps = spec.family == Family::fdc ? 1 : (spec.repetitions > 0 ? spec.repetitions : lat.edge_count());
                for (int r = 0; r < reps; ++r)
                    for (int j = 0; j < 3; ++j)
                        for (int pi = 0; pi < nplaq; ++pi) {
                            auto sl = slots_of(pi, spec.shape);
                            add(sl[static_cast<std::size_t>(j)].first, sl[static_cast<std::size_t>(j)].second, pi, j, r);
                        }
            }
        }
    }
    out.circuit.validate();
    return out;
}

// Parameter index of the chosen Cartan gate inside block k.
inline int cartan_param(int block, CartanGate g) { return block * kCartanParams + static_cast<int>(g); }

// Ladder on n qubits with the differentiated block delta_k blocks before the last one.
inline int ladder_differential_block(int n, int delta_k) {
    int k = (n - 2) - delta_k;
    if (k < 0) throw ConfigError("delta_k too large for the ladder size");
    return k;
}

}  // namespace bpscope
