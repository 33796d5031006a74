#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ansatz.hpp"
#include "bounds.hpp"
#include "io.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "simulator.hpp"
#include "twirl.hpp"

namespace bpscope {

struct AdamConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected Adam.
class Adam {
public:
    Adam(const AdamConfig& cfg, std::size_t dim) : cfg_(cfg), m_(dim, 0.0), v_(dim, 0.0) {}

    void step(ParameterVector& theta, const std::vector<double>& g) {
        if (g.size() != m_.size() || theta.size() != m_.size()) throw DimensionError("Adam dimension mismatch");
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (std::size_t i = 0; i < g.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            theta[i] -= cfg_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.epsilon);
        }
    }

    int steps() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    int t_ = 0;
};

struct EarlyStop {
    bool enabled = true;
    int window = 50;
    double tolerance = 1e-8;
};

// Either the generalized toric code on a lattice, or an explicit Pauli sum.
struct ModelSpec {
    enum class Kind { toric, pauli_sum, z_last } kind = Kind::toric;
    LatticeConfig lattice;
    Field field;
    std::optional<double> h_scalar;
    Hamiltonian terms;

    Hamiltonian hamiltonian(int n) const {
        switch (kind) {
            case Kind::toric: return toric_code(ToricLattice(lattice.rows, lattice.cols), field, h_scalar);
            case Kind::pauli_sum: return terms;
            case Kind::z_last: {
                Hamiltonian h(n);
                h.add(1.0, PauliString::single(n, n - 1, Letter::Z));
                return h;
            }
        }
        return terms;
    }

    bool has_regions() const {
        return kind == Kind::toric && lattice.region_a && lattice.region_b && lattice.region_c;
    }
};

struct VqeConfig {
    AnsatzSpec ansatz;
    ModelSpec model;
    AdamConfig optimizer;
    int iterations = 500;
    EarlyStop early_stop;
    int trials = 20;
    double best_fraction = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(optimizer.learning_rate > 0.0)) throw ConfigError("vqe.optimizer.learning_rate must be > 0");
        if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) throw ConfigError("vqe.optimizer.beta1 must lie in [0, 1)");
        if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) throw ConfigError("vqe.optimizer.beta2 must lie in [0, 1)");
        if (!(optimizer.epsilon > 0.0)) throw ConfigError("vqe.optimizer.epsilon must be > 0");
        if (iterations < 0) throw ConfigError("vqe.iterations must be >= 0");
        if (trials < 1) throw ConfigError("vqe.trials must be >= 1");
        if (!(best_fraction > 0.0 && best_fraction <= 1.0)) throw ConfigError("vqe.best_fraction must lie in (0, 1]");
        if (early_stop.window < 1) throw ConfigError("vqe.early_stop.window must be >= 1");
    }
};

struct TrialResult {
    int trial = 0;
    std::uint64_t seed = 0;
    std::vector<double> trajectory;  // energy before the first update, then after each update
    double final_energy = 0.0;
    std::optional<double> s_topo;
    double wall_seconds = 0.0;
    int iterations_run() const { return static_cast<int>(trajectory.size()) - 1; }
};

// One VQE trajectory from uniform [0, 2pi) parameters.
inline TrialResult run_trial(const Circuit& c, const Hamiltonian& H, const VqeConfig& cfg, const ModelSpec& model,
                             int trial, std::uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();
    TrialResult r;
    r.trial = trial;
    r.seed = seed;
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    ParameterVector theta(static_cast<std::size_t>(c.param_count()));
    for (auto& t : theta) t = u(rng);
    Adam adam(cfg.optimizer, theta.size());
    EnergyGradient eg;
    for (int it = 0;; ++it) {
        eg = adjoint_gradient(c, theta, H);
        r.trajectory.push_back(eg.energy);
        if (it == cfg.iterations) break;
        const int w = cfg.early_stop.window;
        if (cfg.early_stop.enabled && it >= w &&
            r.trajectory[static_cast<std::size_t>(it - w)] - eg.energy < cfg.early_stop.tolerance)
            break;
        adam.step(theta, eg.grad);
    }
    r.final_energy = r.trajectory.back();
    if (model.has_regions())
        r.s_topo = topological_entropy(eg.state, model.lattice.region_a, model.lattice.region_b, model.lattice.region_c);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline constexpr std::uint64_t kVqeStream = 0x7671;
inline constexpr std::uint64_t kSweepStream = 0x7377;
inline constexpr std::uint64_t kVarianceStream = 0x7661;

inline std::vector<TrialResult> vqe_train(const VqeConfig& cfg, int threads = 1) {
    cfg.validate();
    Circuit c = build(cfg.ansatz).circuit;
    Hamiltonian H = cfg.model.hamiltonian(c.qubit_count());
    if (H.qubit_count() != c.qubit_count()) throw ConfigError("model width differs from the ansatz qubit count");
    std::vector<TrialResult> out(static_cast<std::size_t>(cfg.trials));
    parallel_for(out.size(), threads, [&](std::size_t t) {
        std::uint64_t s = derive_seed(cfg.seed, {kVqeStream, t});
        out[t] = run_trial(c, H, cfg, cfg.model, static_cast<int>(t), s);
    });
    return out;
}

struct BestSummary {
    int count = 0;
    double energy_mean = 0.0, energy_std = 0.0;
    std::optional<double> s_topo_mean, s_topo_std;
    std::vector<int> trials;  // selected trial ids, lowest energy first
};

// Mean and population standard deviation over the ceil(trials * fraction) lowest final energies.
inline BestSummary best_fraction_summary(const std::vector<TrialResult>& rs, double fraction) {
    if (rs.empty()) throw ConfigError("no trials to summarize");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("best_fraction must lie in (0, 1]");
    std::vector<std::size_t> idx(rs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (rs[a].final_energy != rs[b].final_energy) return rs[a].final_energy < rs[b].final_energy;
        return rs[a].trial < rs[b].trial;
    });
    BestSummary s;
    s.count = static_cast<int>(std::ceil(static_cast<double>(rs.size()) * fraction - 1e-9));
    s.count = std::clamp(s.count, 1, static_cast<int>(rs.size()));
    auto stats = [&](auto get) {
        double m = 0.0;
        for (int i = 0; i < s.count; ++i) m += get(rs[idx[static_cast<std::size_t>(i)]]);
        m /= s.count;
        double v = 0.0;
        for (int i = 0; i < s.count; ++i) {
            double d = get(rs[idx[static_cast<std::size_t>(i)]]) - m;
            v += d * d;
        }
        return std::pair{m, std::sqrt(v / s.count)};
    };
    std::tie(s.energy_mean, s.energy_std) = stats([](const TrialResult& r) { return r.final_energy; });
    bool all_topo = true;
    for (int i = 0; i < s.count; ++i) all_topo = all_topo && rs[idx[static_cast<std::size_t>(i)]].s_topo.has_value();
    if (all_topo) {
        auto [m, sd] = stats([](const TrialResult& r) { return *r.s_topo; });
        s.s_topo_mean = m;
        s.s_topo_std = sd;
    }
    for (int i = 0; i < s.count; ++i) s.trials.push_back(rs[idx[static_cast<std::size_t>(i)]].trial);
    return s;
}

struct EdReference {
    double energy = 0.0;
    std::optional<double> s_topo;
};

inline EdReference ed_reference(const ModelSpec& model, int n, const std::optional<std::filesystem::path>& cache) {
    Hamiltonian H = model.hamiltonian(n);
    GroundState g = cache ? ground_state_cached(H, *cache) : ground_state(H);
    EdReference e{g.energy, std::nullopt};
    if (model.has_regions())
        e.s_topo = topological_entropy(g.state, model.lattice.region_a, model.lattice.region_b, model.lattice.region_c);
    return e;
}

struct SweepCell {
    std::string family;
    double h = 0.0;
    Field field;
    BestSummary best;
    EdReference ed;
    std::vector<TrialResult> trials;
};

// Field values are h * direction for each h in the grid. The (1-h) prefactor follows the
// max-norm of that field unless the base model fixes h_scalar.
inline std::vector<SweepCell> field_sweep(const VqeConfig& base, const std::vector<double>& grid, const Field& direction,
                                          const std::vector<AnsatzSpec>& families, int threads,
                                          const std::optional<std::filesystem::path>& ed_cache = std::nullopt) {
    if (grid.empty()) throw ConfigError("sweep.fields must not be empty");
    if (families.empty()) throw ConfigError("sweep.families must not be empty");
    if (base.model.kind != ModelSpec::Kind::toric) throw ConfigError("sweep needs a toric model");
    base.validate();
    const ToricLattice lat(base.model.lattice.rows, base.model.lattice.cols);
    const int n = lat.edge_count();

    std::vector<SweepCell> cells;
    std::vector<Circuit> circuits;
    for (const auto& fam : families) {
        AnsatzSpec spec = fam;
        if (is_lattice_family(spec.family)) {
            spec.rows = lat.rows();
            spec.cols = lat.cols();
        }
        circuits.push_back(build(spec).circuit);
        if (circuits.back().qubit_count() != n) throw ConfigError("sweep family " + std::string(family_name(spec.family)) + " width differs from the lattice");
    }
    std::vector<ModelSpec> models;
    std::vector<Hamiltonian> hams;
    for (double h : grid) {
        ModelSpec m = base.model;
        m.field = {h * direction.hx, h * direction.hy, h * direction.hz};
        models.push_back(m);
        hams.push_back(m.hamiltonian(n));
    }
    for (std::size_t f = 0; f < families.size(); ++f)
        for (std::size_t g = 0; g < grid.size(); ++g) {
            SweepCell c;
            c.family = family_name(families[f].family);
            if (families[f].family == Family::fdc || families[f].family == Family::gldc)
                c.family += families[f].shape == PlaquetteShape::claw ? "_claw" : "_ushape";
            c.h = grid[g];
            c.field = models[g].field;
            c.trials.resize(static_cast<std::size_t>(base.trials));
            cells.push_back(std::move(c));
        }

    // every (cell, trial) pair is one task; ED references are computed serially through the cache
    const std::size_t per = static_cast<std::size_t>(base.trials);
    parallel_for(cells.size() * per, threads, [&](std::size_t task) {
        std::size_t ci = task / per, t = task % per;
        std::size_t f = ci / grid.size(), g = ci % grid.size();
        std::uint64_t s = derive_seed(base.seed, {kSweepStream, f, g, t});
        cells[ci].trials[t] = run_trial(circuits[f], hams[g], base, models[g], static_cast<int>(t), s);
    });
    std::vector<EdReference> eds;
    for (const auto& m : models) eds.push_back(ed_reference(m, n, ed_cache));
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        cells[ci].best = best_fraction_summary(cells[ci].trials, base.best_fraction);
        cells[ci].ed = eds[ci % grid.size()];
    }
    return cells;
}

enum class ScanKind { vs_N, vs_delta_k };

struct ScanConfig {
    ScanKind kind = ScanKind::vs_N;
    Family family = Family::ladder;
    CartanGate gate = CartanGate::R_yy;
    std::vector<int> sizes;    // N values (vs_N) or the single N (vs_delta_k)
    std::vector<int> delta_k;  // the single delta_k (vs_N) or the list (vs_delta_k)
    bool exact = true;
    bool mc = false;
    std::size_t samples = 20000;
    McMode mode = McMode::cartan_uniform;
    std::uint64_t seed = 0;
};

struct ScanRow {
    int n = 0, delta_k = 0, param_index = 0, block = 0;
    std::optional<double> exact, exact_pruned_mass;
    std::optional<McResult> mc;
    std::uint64_t mc_seed = 0;
    double theorem1 = 0.0, theorem2 = 0.0;
    std::optional<double> ladder;
};

// Observable Z on the last qubit; delta_k counts blocks back from the last block acting on it.
inline std::vector<ScanRow> variance_scan(const ScanConfig& cfg, int threads = 1) {
    if (cfg.family != Family::ladder && cfg.family != Family::two_way_ladder)
        throw ConfigError("scan.family must be ladder or two_way_ladder");
    std::vector<std::pair<int, int>> points;
    if (cfg.kind == ScanKind::vs_N) {
        if (cfg.delta_k.size() != 1 || cfg.sizes.empty()) throw ConfigError("vs_N needs a list of N and one delta_k");
        for (int n : cfg.sizes) points.push_back({n, cfg.delta_k[0]});
    } else {
        if (cfg.sizes.size() != 1 || cfg.delta_k.empty()) throw ConfigError("vs_delta_k needs one N and a list of delta_k");
        for (int d : cfg.delta_k) points.push_back({cfg.sizes[0], d});
    }
    std::vector<ScanRow> rows;
    for (auto [n, dk] : points) {
        if (n < 2 || n > kMaxSimQubits) throw ConfigError("scan N out of range");
        if (dk < 0) throw ConfigError("scan delta_k must be >= 0");
        AnsatzSpec spec;
        spec.family = cfg.family;
        spec.n = n;
        Circuit c = build(spec).circuit;
        Hamiltonian H(n);
        H.add(1.0, PauliString::single(n, n - 1, Letter::Z));
        ScanRow row;
        row.n = n;
        row.delta_k = dk;
        row.block = last_block_on(c, n - 1) - dk;
        if (row.block < 0) throw ConfigError("delta_k " + std::to_string(dk) + " too large for N = " + std::to_string(n));
        row.param_index = cartan_param(row.block, cfg.gate);
        if (cfg.exact) {
            VarianceResult v = exact_variance(c, H, row.param_index);
            row.exact = v.variance;
            row.exact_pruned_mass = v.pruned_mass;
        }
        if (cfg.mc) {
            row.mc_seed = derive_seed(cfg.seed, {kVarianceStream, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(dk),
                                                 static_cast<std::uint64_t>(row.param_index)});
            row.mc = mc_variance(c, H, row.param_index, cfg.samples, cfg.mode, row.mc_seed, threads);
        }
        row.theorem1 = theorem1_bound(c, H, row.param_index).total;
        row.theorem2 = theorem2_bound(c, H, row.param_index).total;
        if (is_ladder_layout(c)) row.ladder = ladder_bound(c, H, row.param_index).total;
        rows.push_back(row);
    }
    return rows;
}

struct AnalyzeRow {
    int param_index = 0, block = 0;
    BoundReport theorem1, theorem2;
    std::optional<BoundReport> ladder;
    std::optional<VarianceResult> exact;
};

inline std::vector<AnalyzeRow> analyze(const Circuit& c, const Hamiltonian& H, const std::vector<int>& params, bool with_exact) {
    require_design2(c);
    std::vector<AnalyzeRow> rows;
    const bool ladder = is_ladder_layout(c);
    for (int mu : params) {
        AnalyzeRow r;
        r.param_index = mu;
        r.block = c.block_of_param(mu);
        r.theorem1 = theorem1_bound(c, H, mu);
        r.theorem2 = theorem2_bound(c, H, mu);
        if (ladder) r.ladder = ladder_bound(c, H, mu);
        if (with_exact) r.exact = exact_variance(c, H, mu);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace bpscope
