#pragma once

// Brute-force references for the tests. Nothing here is linked into the CLI.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bpscope/circuit.hpp"
#include "bpscope/geometry.hpp"
#include "bpscope/hamiltonian.hpp"
#include "bpscope/simulator.hpp"

namespace oracle {

using namespace bpscope;

struct OracleReport {
    std::string case_id;
    double oracle = 0.0, engine = 0.0;
    double abs_dev = 0.0, rel_dev = 0.0;
};

inline OracleReport report(std::string id, double oracle_value, double engine_value) {
    OracleReport r{std::move(id), oracle_value, engine_value, std::abs(oracle_value - engine_value), 0.0};
    r.rel_dev = oracle_value != 0.0 ? r.abs_dev / std::abs(oracle_value) : r.abs_dev;
    return r;
}

inline constexpr int kBruteMaxQubits = 5;

// Pauli strings on n qubits indexed in base 4, digit q = letter on qubit q (0 I, 1 X, 2 Y, 3 Z).
inline PauliString pauli_of_index(int n, std::size_t idx) {
    PauliString p(n);
    for (int q = 0; q < n; ++q, idx /= 4) p.set(q, static_cast<Letter>(idx % 4));
    return p;
}

inline std::size_t index_of_pauli(const PauliString& p) {
    std::size_t idx = 0;
    for (int q = p.size() - 1; q >= 0; --q) idx = idx * 4 + static_cast<std::size_t>(p.letter(q));
    return idx;
}

// Second-moment twirl over block support s, applied to each doubled string P (x) P:
// strings trivial on s are fixed, all others spread evenly over the 4^|s|-1 strings
// that keep P outside s and are nontrivial on s.
inline std::vector<double> twirl(int n, const std::vector<double>& w, QubitSet s) {
    std::vector<double> out(w.size(), 0.0);
    const double norm = std::pow(4.0, set_size(s)) - 1.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0.0) continue;
        PauliString p = pauli_of_index(n, i);
        if (!(support(p) & s)) {
            out[i] += w[i];
            continue;
        }
        for (std::size_t j = 0; j < w.size(); ++j) {
            PauliString q = pauli_of_index(n, j);
            if ((support(q) & s) && restrict(q, full_set(n) & ~s) == restrict(p, full_set(n) & ~s)) out[j] += w[i] / norm;
        }
    }
    return out;
}

// Variance of dC/dtheta_mu for C = <0|U^dag h U|0>, all blocks local 2-designs and the
// differentiated gate e^{-i theta G} sandwiched between independent 2-designs on its block.
// Backward pass over explicit 4^N weights: twirl, i[G, .] (which maps P to 2 i G P, so
// P (x) P to 4 GP (x) GP up to a squared phase of +1), twirl, and finally <0|P|0>^2.
inline double brute_twirl_variance(const Circuit& c, const PauliString& h, int mu) {
    const int n = c.qubit_count();
    if (n > kBruteMaxQubits) throw DimensionError("brute_twirl_variance is limited to 5 qubits");
    const std::size_t dim = std::size_t{1} << (2 * n);
    std::vector<double> w(dim, 0.0);
    w[index_of_pauli(h.with_phase(0))] = 1.0;
    const int kd = c.block_of_param(mu);
    const PauliString& g = c.gate_of_param(mu).generator;
    for (int k = c.block_count() - 1; k >= 0; --k) {
        QubitSet s = c.block(k).support;
        w = twirl(n, w, s);
        if (k != kd) continue;
        std::vector<double> d(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) {
            if (w[i] == 0.0) continue;
            PauliString p = pauli_of_index(n, i);
            if (!commutes(p, g)) d[index_of_pauli(multiply(g, p).with_phase(0))] += 4.0 * w[i];
        }
        w = twirl(n, d, s);
    }
    double v = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        PauliString p = pauli_of_index(n, i);
        if (p.x_mask() == 0) v += w[i];
    }
    return v;
}

// Dense 2^N matrices, built by Kronecker products with qubit 0 as the least significant bit.
inline Eigen::MatrixXcd dense_pauli(const PauliString& p) {
    using M = Eigen::Matrix2cd;
    const std::complex<double> I(0.0, 1.0);
    M id = M::Identity(), x, y, z;
    x << 0, 1, 1, 0;
    y << 0, -I, I, 0;
    z << 1, 0, 0, -1;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int q = 0; q < p.size(); ++q) {
        const M* m = &id;
        switch (p.letter(q)) {
            case Letter::X: m = &x; break;
            case Letter::Y: m = &y; break;
            case Letter::Z: m = &z; break;
            default: break;
        }
        Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) next.block(a * out.rows(), b * out.cols(), out.rows(), out.cols()) = (*m)(a, b) * out;
        out = next;
    }
    return out * detail::ipow(p.phase());
}

inline Eigen::MatrixXcd dense_unitary(const Circuit& c, const ParameterVector& theta) {
    const Eigen::Index d = Eigen::Index{1} << c.qubit_count();
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
    for (const auto& b : c.blocks())
        for (const auto& g : b.gates) {
            double a = gate_angle(g, theta);
            Eigen::MatrixXcd gate = std::cos(a) * Eigen::MatrixXcd::Identity(d, d) -
                                    std::complex<double>(0.0, std::sin(a)) * dense_pauli(g.generator);
            u = gate * u;
        }
    return u;
}

inline Eigen::MatrixXcd dense_hamiltonian(const Hamiltonian& H) {
    const Eigen::Index d = Eigen::Index{1} << H.qubit_count();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    for (const auto& t : H.terms()) m += t.coeff * dense_pauli(t.pauli);
    return m;
}

inline double dense_energy(const Circuit& c, const ParameterVector& theta, const Hamiltonian& H) {
    Eigen::VectorXcd psi = dense_unitary(c, theta).col(0);
    return (psi.adjoint() * dense_hamiltonian(H) * psi)(0, 0).real();
}

// Central finite differences of the simulator energy.
inline std::vector<double> finite_difference_gradient(const Circuit& c, const ParameterVector& theta, const Hamiltonian& H,
                                                      double step = 1e-5) {
    std::vector<double> g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        ParameterVector tp = theta, tm = theta;
        tp[i] += step;
        tm[i] -= step;
        g[i] = (expectation(run(c, tp), H) - expectation(run(c, tm), H)) / (2.0 * step);
    }
    return g;
}

struct EnumeratedPathSet {
    PathSet set;
    double exponent = 0.0;
};

inline constexpr int kEnumMaxBlocks = 6;

// All legal path sets built from at most max_paths distinct paths (default |obs| + 1,
// enough for every inclusion-minimal legal set). Exponents never grow when a path is
// removed, so the minimum over this list is the global minimum.
inline std::vector<EnumeratedPathSet> enumerate_path_sets(const Circuit& c, int differential_block, QubitSet obs,
                                                          int max_paths = -1) {
    if (c.block_count() > kEnumMaxBlocks) throw DimensionError("enumerate_path_sets is limited to 6 blocks");
    c.check_block(differential_block);
    if (max_paths < 0) max_paths = set_size(obs) + 1;
    std::vector<Path> paths;
    const int m = c.block_count();
    for (unsigned mask = 1; mask < (1U << m); ++mask) {
        Path p;
        for (int k = 0; k < m; ++k)
            if ((mask >> k) & 1U) p.push_back(k);
        bool ok = forward_residual_support(c, p.front()) && backward_residual_support(c, p.back());
        for (std::size_t i = 1; ok && i < p.size(); ++i) ok = connecting_support(c, p[i - 1], p[i]) != 0;
        if (ok) paths.push_back(p);
    }
    std::vector<EnumeratedPathSet> out;
    std::vector<std::size_t> pick;
    auto rec = [&](auto&& self, std::size_t from) -> void {
        if (!pick.empty()) {
            PathSet ps;
            for (auto i : pick) ps.paths.push_back(paths[i]);
            ps = ps.canonical();
            if (is_legal_path_set(c, ps, differential_block, obs)) out.push_back({ps, path_set_exponent(c, ps)});
        }
        if (static_cast<int>(pick.size()) == max_paths) return;
        for (std::size_t i = from; i < paths.size(); ++i) {
            pick.push_back(i);
            self(self, i + 1);
            pick.pop_back();
        }
    };
    if (obs) rec(rec, 0);
    return out;
}

}  // namespace oracle
