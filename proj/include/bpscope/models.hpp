#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "circuit.hpp"
#include "hamiltonian.hpp"
#include "simulator.hpp"

namespace bpscope {

// Open-boundary square lattice with qubits on edges. Edges are numbered row by row:
// the horizontal edges of vertex row r, then the vertical edges hanging below row r.
class ToricLattice {
public:
    ToricLattice(int rows, int cols) : rows_(rows), cols_(cols) {
        if (rows < 2 || cols < 2) throw ConfigError("toric lattice needs at least 2x2 vertices");
        if (edge_count() > kMaxQubits) throw ConfigError("toric lattice too large");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int edge_count() const { return rows_ * (cols_ - 1) + (rows_ - 1) * cols_; }
    int vertex_count() const { return rows_ * cols_; }
    int plaquette_count() const { return (rows_ - 1) * (cols_ - 1); }

    // edge between vertices (r,c) and (r,c+1)
    int h_edge(int r, int c) const {
        if (r < 0 || r >= rows_ || c < 0 || c >= cols_ - 1) throw IndexError("horizontal edge out of range");
        return r * (2 * cols_ - 1) + c;
    }
    // edge between vertices (r,c) and (r+1,c)
    int v_edge(int r, int c) const {
        if (r < 0 || r >= rows_ - 1 || c < 0 || c >= cols_) throw IndexError("vertical edge out of range");
        return r * (2 * cols_ - 1) + (cols_ - 1) + c;
    }

    // Edges touching vertex (r,c); two at corners, three on sides, four inside.
    std::vector<int> star(int r, int c) const {
        std::vector<int> e;
        if (c > 0) e.push_back(h_edge(r, c - 1));
        if (c < cols_ - 1) e.push_back(h_edge(r, c));
        if (r > 0) e.push_back(v_edge(r - 1, c));
        if (r < rows_ - 1) e.push_back(v_edge(r, c));
        std::sort(e.begin(), e.end());
        return e;
    }

    struct Plaquette {
        int top, bottom, left, right;
    };

    Plaquette plaquette(int pr, int pc) const {
        return {h_edge(pr, pc), h_edge(pr + 1, pc), v_edge(pr, pc), v_edge(pr, pc + 1)};
    }

    // Midpoint of edge e in (x = column, y = row) coordinates.
    std::array<double, 2> midpoint(int e) const {
        int stride = 2 * cols_ - 1;
        int r = e / stride, off = e % stride;
        if (off < cols_ - 1) return {off + 0.5, static_cast<double>(r)};
        return {static_cast<double>(off - (cols_ - 1)), r + 0.5};
    }

    // Every bipartition by a straight vertical or horizontal line through the lattice.
    std::vector<QubitSet> straight_cuts() const {
        std::vector<QubitSet> cuts;
        for (int axis = 0; axis < 2; ++axis) {
            std::set<double> coords;
            for (int e = 0; e < edge_count(); ++e) coords.insert(midpoint(e)[static_cast<std::size_t>(axis)]);
            std::vector<double> cs(coords.begin(), coords.end());
            for (std::size_t i = 0; i + 1 < cs.size(); ++i) {
                double t = 0.5 * (cs[i] + cs[i + 1]);
                QubitSet a = 0;
                for (int e = 0; e < edge_count(); ++e)
                    if (midpoint(e)[static_cast<std::size_t>(axis)] < t) a |= QubitSet{1} << e;
                cuts.push_back(a);
            }
        }
        return cuts;
    }

private:
    int rows_, cols_;
};

struct Field {
    double hx = 0.0, hy = 0.0, hz = 0.0;
    double max_norm() const { return std::max({std::abs(hx), std::abs(hy), std::abs(hz)}); }
};

// H = (1-h) H0 - sum_j (hx X_j + hy Y_j + hz Z_j), H0 = -sum_v A_v - sum_p B_p.
// h defaults to the max-norm of the field. Zero-coefficient terms are dropped.
inline Hamiltonian toric_code(const ToricLattice& lat, const Field& f, std::optional<double> h_scalar = std::nullopt) {
    const int n = lat.edge_count();
    const double h = h_scalar.value_or(f.max_norm());
    const double stab = -(1.0 - h);
    Hamiltonian H(n);
    if (stab != 0.0) {
        for (int r = 0; r < lat.rows(); ++r)
            for (int c = 0; c < lat.cols(); ++c) {
                PauliString p(n);
                for (int e : lat.star(r, c)) p.set(e, Letter::Z);
                H.add(stab, p);
            }
        for (int pr = 0; pr + 1 < lat.rows(); ++pr)
            for (int pc = 0; pc + 1 < lat.cols(); ++pc) {
                auto pl = lat.plaquette(pr, pc);
                PauliString p(n);
                for (int e : {pl.top, pl.bottom, pl.left, pl.right}) p.set(e, Letter::X);
                H.add(stab, p);
            }
    }
    for (int q = 0; q < n; ++q) {
        if (f.hx != 0.0) H.add(-f.hx, PauliString::single(n, q, Letter::X));
        if (f.hy != 0.0) H.add(-f.hy, PauliString::single(n, q, Letter::Y));
        if (f.hz != 0.0) H.add(-f.hz, PauliString::single(n, q, Letter::Z));
    }
    return H;
}

struct GroundState {
    double energy = 0.0;
    StateVector state;
};

inline constexpr int kMaxEdQubits = 16;
inline constexpr int kDenseEdQubits = 10;

inline Eigen::MatrixXcd dense_matrix(const Hamiltonian& H) {
    const std::size_t dim = std::size_t{1} << H.qubit_count();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (const auto& t : H.terms()) {
        detail::PauliAction pa(t.pauli);
        for (std::size_t b = 0; b < dim; ++b)
            m(static_cast<Eigen::Index>(b ^ pa.x), static_cast<Eigen::Index>(b)) += t.coeff * pa.base * pa.sign(b);
    }
    return m;
}

namespace detail {

// Fixes the global phase so the largest-magnitude amplitude is real and positive.
inline void fix_phase(std::vector<cplx>& v) {
    std::size_t imax = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[imax]) + 1e-12) imax = i;
    cplx ph = std::abs(v[imax]) > 0 ? std::conj(v[imax]) / std::abs(v[imax]) : cplx{1.0, 0.0};
    for (auto& a : v) a *= ph;
}

inline GroundState dense_ground_state(const Hamiltonian& H) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense_matrix(H));
    GroundState g;
    g.energy = es.eigenvalues()(0);
    g.state.n = H.qubit_count();
    g.state.amp.resize(static_cast<std::size_t>(es.eigenvectors().rows()));
    for (Eigen::Index i = 0; i < es.eigenvectors().rows(); ++i) g.state.amp[static_cast<std::size_t>(i)] = es.eigenvectors()(i, 0);
    return g;
}

// Restarted Lanczos with full reorthogonalisation, for the lowest eigenpair.
inline GroundState lanczos_ground_state(const Hamiltonian& H, int krylov = 90, int restarts = 60, double tol = 1e-11) {
    const int n = H.qubit_count();
    const std::size_t dim = std::size_t{1} << n;
    StateVector v;
    v.n = n;
    v.amp.resize(dim);
    Rng rng(0x5eed);
    std::normal_distribution<double> nd;
    for (auto& a : v.amp) a = cplx{nd(rng), nd(rng)};
    auto normalize = [](std::vector<cplx>& x) {
        double s = 0.0;
        for (auto& a : x) s += std::norm(a);
        s = std::sqrt(s);
        for (auto& a : x) a /= s;
        return s;
    };
    normalize(v.amp);
    GroundState g;
    g.state.n = n;
    const int m = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(krylov), dim));
    for (int it = 0; it < restarts; ++it) {
        std::vector<std::vector<cplx>> basis{v.amp};
        std::vector<double> alpha, beta;
        for (int j = 0; j < m; ++j) {
            StateVector cur;
            cur.n = n;
            cur.amp = basis.back();
            std::vector<cplx> w = apply_hamiltonian(cur, H);
            cplx a{0.0, 0.0};
            for (std::size_t i = 0; i < dim; ++i) a += std::conj(cur.amp[i]) * w[i];
            alpha.push_back(a.real());
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& q : basis) {
                    cplx ov{0.0, 0.0};
                    for (std::size_t i = 0; i < dim; ++i) ov += std::conj(q[i]) * w[i];
                    for (std::size_t i = 0; i < dim; ++i) w[i] -= ov * q[i];
                }
            if (j == m - 1) break;
            double b = normalize(w);
            if (b < 1e-12) break;
            beta.push_back(b);
            basis.push_back(std::move(w));
        }
        const int k = static_cast<int>(alpha.size());
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i) t(i, i) = alpha[static_cast<std::size_t>(i)];
        for (int i = 0; i + 1 < k; ++i) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        std::vector<cplx> y(dim, cplx{0.0, 0.0});
        for (int j = 0; j < k; ++j) {
            double c = es.eigenvectors()(j, 0);
            for (std::size_t i = 0; i < dim; ++i) y[i] += c * basis[static_cast<std::size_t>(j)][i];
        }
        normalize(y);
        v.amp = y;
        std::vector<cplx> hy = apply_hamiltonian(v, H);
        double theta = es.eigenvalues()(0), res = 0.0;
        for (std::size_t i = 0; i < dim; ++i) res += std::norm(hy[i] - theta * y[i]);
        g.energy = theta;
        if (std::sqrt(res) < tol) break;
    }
    g.state.amp = v.amp;
    return g;
}

}  // namespace detail

inline GroundState ground_state(const Hamiltonian& H) {
    if (H.qubit_count() > kMaxEdQubits) throw DimensionError("exact diagonalization limited to 16 qubits");
    if (H.qubit_count() == 0) throw DimensionError("empty register");
    GroundState g = H.qubit_count() <= kDenseEdQubits ? detail::dense_ground_state(H) : detail::lanczos_ground_state(H);
    detail::fix_phase(g.state.amp);
    g.energy = expectation(g.state, H);
    return g;
}

inline double ground_energy(const Hamiltonian& H) { return ground_state(H).energy; }

// 64-bit FNV-1a over a canonical text form (width, then terms sorted by letters).
inline std::uint64_t hamiltonian_hash(const Hamiltonian& H) {
    std::map<std::string, double> sorted;
    for (const auto& t : H.terms()) sorted[t.pauli.str()] = t.coeff;
    std::string text = "n=" + std::to_string(H.qubit_count()) + ";";
    char buf[64];
    for (const auto& [p, c] : sorted) {
        std::snprintf(buf, sizeof buf, "%.17g", c);
        text += p + "*" + buf + ";";
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Ground state with an on-disk cache keyed by hamiltonian_hash. Entries with a
// mismatching header are ignored and recomputed.
inline GroundState ground_state_cached(const Hamiltonian& H, const std::filesystem::path& dir) {
    char name[40];
    std::snprintf(name, sizeof name, "ed_%016llx.bin", static_cast<unsigned long long>(hamiltonian_hash(H)));
    std::filesystem::path file = dir / name;
    const std::uint64_t dim = std::uint64_t{1} << H.qubit_count();
    {
        std::ifstream in(file, std::ios::binary);
        std::int32_t n = -1;
        std::uint64_t d = 0;
        GroundState g;
        if (in && in.read(reinterpret_cast<char*>(&n), sizeof n) && n == H.qubit_count() &&
            in.read(reinterpret_cast<char*>(&d), sizeof d) && d == dim &&
            in.read(reinterpret_cast<char*>(&g.energy), sizeof g.energy)) {
            g.state.n = n;
            g.state.amp.resize(dim);
            if (in.read(reinterpret_cast<char*>(g.state.amp.data()), static_cast<std::streamsize>(dim * sizeof(cplx))))
                return g;
        }
    }
    GroundState g = ground_state(H);
    std::filesystem::create_directories(dir);
    std::filesystem::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        std::int32_t n = H.qubit_count();
        out.write(reinterpret_cast<const char*>(&n), sizeof n);
        out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
        out.write(reinterpret_cast<const char*>(&g.energy), sizeof g.energy);
        out.write(reinterpret_cast<const char*>(g.state.amp.data()), static_cast<std::streamsize>(dim * sizeof(cplx)));
    }
    std::filesystem::rename(tmp, file);
    return g;
}

// Eigenvalues of the reduced density matrix on `region`.
inline Eigen::VectorXd reduced_spectrum(const StateVector& psi, QubitSet region) {
    if (!region || (region & ~full_set(psi.n)) || region == full_set(psi.n))
        throw Error("entanglement region must be a proper nonempty subset");
    std::vector<int> in = set_members(region), out = set_members(full_set(psi.n) & ~region);
    const Eigen::Index da = Eigen::Index{1} << in.size(), db = Eigen::Index{1} << out.size();
    Eigen::MatrixXcd m(da, db);
    for (std::size_t b = 0; b < psi.amp.size(); ++b) {
        Eigen::Index ia = 0, ib = 0;
        for (std::size_t i = 0; i < in.size(); ++i) ia |= static_cast<Eigen::Index>((b >> in[i]) & 1U) << i;
        for (std::size_t i = 0; i < out.size(); ++i) ib |= static_cast<Eigen::Index>((b >> out[i]) & 1U) << i;
        m(ia, ib) = psi.amp[b];
    }
    Eigen::MatrixXcd rho = da <= db ? Eigen::MatrixXcd(m * m.adjoint()) : Eigen::MatrixXcd(m.adjoint() * m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

enum class LogBase { natural, bits };

inline double entanglement_entropy(const StateVector& psi, QubitSet region, LogBase base = LogBase::natural) {
    Eigen::VectorXd ev = reduced_spectrum(psi, region);
    double s = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > 1e-12) s -= ev(i) * std::log(ev(i));
    return base == LogBase::natural ? s : s / std::log(2.0);
}

// S_A + S_B + S_C - S_AB - S_BC - S_CA + S_ABC, natural log.
inline double topological_entropy(const StateVector& psi, QubitSet a, QubitSet b, QubitSet c) {
    if ((a & b) || (b & c) || (a & c)) throw Error("topological_entropy regions must be disjoint");
    auto S = [&](QubitSet r) {
        if (r == full_set(psi.n)) return 0.0;  // pure state
        return entanglement_entropy(psi, r);
    };
    return S(a) + S(b) + S(c) - S(a | b) - S(b | c) - S(c | a) + S(a | b | c);
}

// Qubits belonging to some block that straddles the cut. Each such block raises the
// entropy across the cut by at most its support size in bits, hence S_A <= chi * this count.
inline int crossing_boundary_size(const Circuit& c, QubitSet cut) {
    QubitSet all = full_set(c.qubit_count());
    QubitSet touched = 0;
    for (const auto& b : c.blocks())
        if ((b.support & cut) && (b.support & all & ~cut)) touched |= b.support;
    return set_size(touched);
}

struct AreaLawResult {
    double entropy_bits = 0.0;
    double bound = 0.0;
    bool ok = false;
};

inline AreaLawResult area_law_check(const Circuit& c, const ParameterVector& theta, QubitSet cut, int boundary_size) {
    StateVector psi = run(c, theta);
    AreaLawResult r;
    r.entropy_bits = entanglement_entropy(psi, cut, LogBase::bits);
    r.bound = static_cast<double>(max_local_depth(c)) * boundary_size;
    r.ok = r.entropy_bits <= r.bound + 1e-9;
    return r;
}

}  // namespace bpscope
