#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bpscope/config.hpp"

using namespace bpscope;

namespace {

struct Options {
    std::string config;
    std::string out = "bpscope_out";
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool paper_scale = false;
    bool exact = false, mc = false;
};

std::string opt17(const std::optional<double>& v) { return v ? fmt17(*v) : ""; }

class Run {
public:
    Run(std::string command, const Options& o) : command_(std::move(command)), opt_(o), t0_(std::chrono::steady_clock::now()) {
        out_ = o.out;
        fs::create_directories(out_);
        cfg_path_ = fs::path(o.config);
        raw_ = read_json_file(cfg_path_);
        base_ = cfg_path_.parent_path();
        threads_ = o.threads > 0 ? o.threads : default_threads();
    }

    const json& raw() const { return raw_; }
    const fs::path& base() const { return base_; }
    int threads() const { return threads_; }

    fs::path file(const std::string& name) {
        outputs_.push_back(name);
        return out_ / name;
    }

    std::uint64_t seed(std::uint64_t from_config) const { return opt_.seed.value_or(from_config); }

    // One sidecar per run: resolved config, seeds and timings; CSV bodies carry no wall times.
    void finish(json resolved, json seeds, json extra = json::object()) {
        json side{{"command", command_},
                  {"config_file", cfg_path_.string()},
                  {"resolved_config", std::move(resolved)},
                  {"seeds", std::move(seeds)},
                  {"threads", threads_},
                  {"paper_scale", opt_.paper_scale},
                  {"outputs", outputs_},
                  {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count()}};
        for (auto& [k, v] : extra.items()) side[k] = v;
        std::ofstream(out_ / (command_ + ".run.json")) << side.dump(2) << '\n';
    }

private:
    std::string command_;
    Options opt_;
    std::chrono::steady_clock::time_point t0_;
    fs::path out_, cfg_path_, base_;
    json raw_;
    int threads_ = 1;
    std::vector<std::string> outputs_;
};

void cmd_analyze(const Options& o) {
    Run run("analyze", o);
    const json& j = run.raw();
    Circuit c = circuit_from_config(j, run.base());
    Hamiltonian H = hamiltonian_from_config(j, run.base(), c.qubit_count());
    std::vector<int> params = params_from_config(j, c);
    bool with_exact = detail::field_or<bool>(j, "exact", false, "config");
    auto rows = analyze(c, H, params, with_exact);

    CsvWriter csv(run.file("analyze.csv"),
                  {"param_index", "block_index", "theorem1", "theorem2", "ladder", "exact_variance", "sandwich_assumed"});
    json paths = json::array();
    for (const auto& r : rows) {
        csv.row({std::to_string(r.param_index), std::to_string(r.block), fmt17(r.theorem1.total), fmt17(r.theorem2.total),
                 r.ladder ? fmt17(r.ladder->total) : "", r.exact ? fmt17(r.exact->variance) : "",
                 r.theorem1.sandwich_assumed ? "true" : "false"});
        json pj{{"param_index", r.param_index}, {"block_index", r.block}, {"theorem1", bound_report_to_json(r.theorem1)},
                {"theorem2", bound_report_to_json(r.theorem2)}};
        if (r.ladder) pj["ladder"] = bound_report_to_json(*r.ladder);
        paths.push_back(pj);
    }
    std::ofstream(run.file("analyze_paths.json")) << paths.dump(2) << '\n';
    std::printf("analyzed %zu parameters; circuit N=%d blocks=%d chi=%d r=%d\n", rows.size(), c.qubit_count(),
                c.block_count(), max_local_depth(c), H.range());
    run.finish({{"circuit", circuit_to_json(c)}, {"hamiltonian", hamiltonian_to_json(H)}, {"params", params}, {"exact", with_exact}},
               json::object());
}

void write_mc_row(CsvWriter& csv, int n, int dk, McMode mode, const McResult& m, std::uint64_t seed) {
    csv.row({std::to_string(n), std::to_string(dk), mc_mode_name(mode), std::to_string(m.samples), fmt17(m.mean),
             fmt17(m.variance), fmt17(m.std_error), std::to_string(seed)});
}

void cmd_variance(const Options& o) {
    Run run("variance", o);
    const json& j = run.raw();
    const std::vector<std::string> exact_cols{"param_index", "term_index", "variance", "pruned_mass"};
    const std::vector<std::string> mc_cols{"N", "delta_k", "mode", "samples", "mean", "variance", "std_error", "seed"};

    if (j.contains("scan")) {
        ScanConfig sc = scan_config_from_json(j);
        sc.seed = run.seed(sc.seed);
        if (o.exact || o.mc) {
            sc.exact = o.exact;
            sc.mc = o.mc;
        }
        auto rows = variance_scan(sc, run.threads());
        CsvWriter scan(run.file("scan.csv"), {"N", "delta_k", "gate", "param_index", "exact_variance", "exact_pruned_mass",
                                              "mc_mode", "mc_samples", "mc_mean", "mc_variance", "mc_std_error", "mc_seed",
                                              "theorem1", "theorem2", "ladder"});
        std::optional<CsvWriter> ex, mc;
        if (sc.exact) ex.emplace(run.file("variance_exact.csv"), exact_cols);
        if (sc.mc) mc.emplace(run.file("variance_mc.csv"), mc_cols);
        json seeds = json::array();
        for (const auto& r : rows) {
            scan.row({std::to_string(r.n), std::to_string(r.delta_k), cartan_gate_name(sc.gate), std::to_string(r.param_index),
                      opt17(r.exact), opt17(r.exact_pruned_mass), r.mc ? mc_mode_name(sc.mode) : "",
                      r.mc ? std::to_string(r.mc->samples) : "", r.mc ? fmt17(r.mc->mean) : "",
                      r.mc ? fmt17(r.mc->variance) : "", r.mc ? fmt17(r.mc->std_error) : "",
                      r.mc ? std::to_string(r.mc_seed) : "", fmt17(r.theorem1), fmt17(r.theorem2), opt17(r.ladder)});
            if (ex) ex->row({std::to_string(r.param_index), "0", fmt17(*r.exact), fmt17(*r.exact_pruned_mass)});
            if (mc) {
                write_mc_row(*mc, r.n, r.delta_k, sc.mode, *r.mc, r.mc_seed);
                seeds.push_back({{"N", r.n}, {"delta_k", r.delta_k}, {"seed", r.mc_seed}});
            }
            std::printf("N=%d delta_k=%d param=%d exact=%s mc=%s theorem1=%s\n", r.n, r.delta_k, r.param_index,
                        opt17(r.exact).c_str(), r.mc ? fmt17(r.mc->variance).c_str() : "", fmt17(r.theorem1).c_str());
        }
        run.finish(scan_config_to_json(sc), {{"base", sc.seed}, {"rows", seeds}});
        return;
    }

    Circuit c = circuit_from_config(j, run.base());
    Hamiltonian H = hamiltonian_from_config(j, run.base(), c.qubit_count());
    std::vector<int> params = params_from_config(j, c);
    EstimatorChoice e = estimator_from_json(j);
    if (o.exact || o.mc) {
        e.exact = o.exact;
        e.mc = o.mc;
    }
    std::uint64_t seed = run.seed(seed_from_json(j, "config"));
    json seeds = json::array();
    if (e.exact) {
        CsvWriter csv(run.file("variance_exact.csv"), exact_cols);
        for (int mu : params) {
            VarianceResult v = exact_variance(c, H, mu);
            for (std::size_t t = 0; t < v.per_term.size(); ++t)
                csv.row({std::to_string(mu), std::to_string(t), fmt17(v.per_term[t].variance), fmt17(v.per_term[t].pruned_mass)});
            std::printf("param %d: exact variance %s\n", mu, fmt17(v.variance).c_str());
        }
    }
    if (e.mc) {
        CsvWriter csv(run.file("variance_mc.csv"), mc_cols);
        for (int mu : params) {
            int dk = c.block_count() - 1 - c.block_of_param(mu);
            std::uint64_t s = derive_seed(seed, {kVarianceStream, static_cast<std::uint64_t>(mu)});
            McResult m = mc_variance(c, H, mu, e.samples, e.mode, s, run.threads());
            write_mc_row(csv, c.qubit_count(), dk, e.mode, m, s);
            seeds.push_back({{"param_index", mu}, {"seed", s}});
            std::printf("param %d: mc variance %s +- %s\n", mu, fmt17(m.variance).c_str(), fmt17(m.std_error).c_str());
        }
    }
    run.finish({{"circuit", circuit_to_json(c)},
                {"hamiltonian", hamiltonian_to_json(H)},
                {"params", params},
                {"estimator", e.exact && e.mc ? "both" : (e.mc ? "mc" : "exact")},
                {"mc", {{"samples", e.samples}, {"mode", mc_mode_name(e.mode)}}},
                {"seed", seed}},
               {{"base", seed}, {"rows", seeds}});
}

std::vector<std::string> trial_row(const TrialResult& t) {
    return {std::to_string(t.trial), std::to_string(t.seed), std::to_string(t.iterations_run()), fmt17(t.final_energy),
            opt17(t.s_topo)};
}

void cmd_vqe(const Options& o) {
    Run run("vqe", o);
    const json& j = run.raw();
    VqeConfig cfg = vqe_config_from_json(j, run.base());
    cfg.seed = run.seed(cfg.seed);
    if (o.paper_scale) cfg.trials = 100;
    auto trials = vqe_train(cfg, run.threads());
    BestSummary best = best_fraction_summary(trials, cfg.best_fraction);

    const int n = build(cfg.ansatz).circuit.qubit_count();
    std::optional<EdReference> ed;
    bool want_ed = detail::field_or<bool>(j, "ed_reference", n <= kMaxEdQubits, "config");
    if (want_ed) {
        fs::path cache = j.contains("ed_cache") ? resolve_path(run.base(), j["ed_cache"].get<std::string>()) : fs::path(o.out) / "ed_cache";
        ed = ed_reference(cfg.model, n, cache);
    }

    CsvWriter tc(run.file("vqe_trials.csv"), {"trial", "seed", "iterations_run", "final_energy", "s_topo"});
    CsvWriter tr(run.file("vqe_trajectories.csv"), {"trial", "iteration", "energy"});
    json seeds = json::array(), walls = json::array();
    for (const auto& t : trials) {
        tc.row(trial_row(t));
        for (std::size_t i = 0; i < t.trajectory.size(); ++i) tr.row({std::to_string(t.trial), std::to_string(i), fmt17(t.trajectory[i])});
        seeds.push_back(t.seed);
        walls.push_back(t.wall_seconds);
    }
    CsvWriter sc(run.file("vqe_summary.csv"),
                 {"trials", "best_count", "energy_mean", "energy_std", "s_topo_mean", "s_topo_std", "ed_energy", "ed_s_topo"});
    sc.row({std::to_string(trials.size()), std::to_string(best.count), fmt17(best.energy_mean), fmt17(best.energy_std),
            opt17(best.s_topo_mean), opt17(best.s_topo_std), ed ? fmt17(ed->energy) : "", ed ? opt17(ed->s_topo) : ""});
    std::printf("%s: best %d of %zu, energy %.10g +- %.3g", family_name(cfg.ansatz.family), best.count, trials.size(),
                best.energy_mean, best.energy_std);
    if (best.s_topo_mean) std::printf(", S_topo %.6g", *best.s_topo_mean);
    if (ed) std::printf(" (ED %.10g)", ed->energy);
    std::printf("\n");
    run.finish({{"ansatz", ansatz_to_json(cfg.ansatz)}, {"model", model_to_json(cfg.model)}, {"vqe", vqe_options_to_json(cfg)}, {"seed", cfg.seed}},
               {{"base", cfg.seed}, {"trials", seeds}}, {{"trial_wall_seconds", walls}});
}

void cmd_sweep(const Options& o) {
    Run run("sweep", o);
    SweepConfig sc = sweep_config_from_json(run.raw(), run.base());
    sc.base.seed = run.seed(sc.base.seed);
    if (o.paper_scale) sc.base.trials = 100;
    fs::path cache = sc.ed_cache.value_or(fs::path(o.out) / "ed_cache");
    auto cells = field_sweep(sc.base, sc.fields, sc.direction, sc.families, run.threads(), cache);
    const double n = ToricLattice(sc.base.model.lattice.rows, sc.base.model.lattice.cols).edge_count();

    CsvWriter sw(run.file("sweep.csv"), {"family", "h", "hx", "hy", "hz", "trials", "best_count", "energy_per_site_mean",
                                         "energy_per_site_std", "s_topo_mean", "s_topo_std", "ed_energy_per_site", "ed_s_topo"});
    CsvWriter st(run.file("sweep_trials.csv"), {"family", "h", "trial", "seed", "iterations_run", "final_energy", "s_topo"});
    json seeds = json::array();
    for (const auto& c : cells) {
        sw.row({c.family, fmt17(c.h), fmt17(c.field.hx), fmt17(c.field.hy), fmt17(c.field.hz), std::to_string(c.trials.size()),
                std::to_string(c.best.count), fmt17(c.best.energy_mean / n), fmt17(c.best.energy_std / n),
                opt17(c.best.s_topo_mean), opt17(c.best.s_topo_std), fmt17(c.ed.energy / n), opt17(c.ed.s_topo)});
        json cs = json::array();
        for (const auto& t : c.trials) {
            auto row = trial_row(t);
            row.insert(row.begin(), {c.family, fmt17(c.h)});
            st.row(row);
            cs.push_back(t.seed);
        }
        seeds.push_back({{"family", c.family}, {"h", c.h}, {"trials", cs}});
        std::printf("%-14s h=%-6g E/N=%.8f +- %.2g  S_topo=%s  ED E/N=%.8f\n", c.family.c_str(), c.h, c.best.energy_mean / n,
                    c.best.energy_std / n, opt17(c.best.s_topo_mean).c_str(), c.ed.energy / n);
    }
    json fams = json::array();
    for (const auto& f : sc.families) fams.push_back(ansatz_to_json(f));
    run.finish({{"model", model_to_json(sc.base.model)},
                {"fields", sc.fields},
                {"field_direction", {sc.direction.hx, sc.direction.hy, sc.direction.hz}},
                {"families", fams},
                {"vqe", vqe_options_to_json(sc.base)},
                {"ed_cache", cache.string()},
                {"seed", sc.base.seed}},
               {{"base", sc.base.seed}, {"cells", seeds}});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bpscope: gradient-variance analysis and VQE experiments for local 2-design circuits"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--out", o.out, "output directory")->capture_default_str();
    app.add_option("--seed", o.seed, "base seed, overrides the config");
    app.add_option("--threads", o.threads, "worker threads (default: hardware concurrency)")->check(CLI::NonNegativeNumber);
    app.add_flag("--paper-scale", o.paper_scale, "use 100 VQE trials instead of the configured count");

    auto* an = app.add_subcommand("analyze", "bound report with path sets");
    auto* va = app.add_subcommand("variance", "exact or Monte-Carlo gradient variance, or a ladder scan");
    auto* vq = app.add_subcommand("vqe", "VQE trials on one model");
    auto* sw = app.add_subcommand("sweep", "VQE field sweep over ansatz families");
    for (auto* s : {an, va, vq, sw}) {
        s->add_option("config", o.config, "config JSON")->required()->check(CLI::ExistingFile);
        s->fallthrough();
    }
    va->add_flag("--exact", o.exact, "exact twirl-engine variance");
    va->add_flag("--mc", o.mc, "Monte-Carlo variance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (an->parsed()) cmd_analyze(o);
        else if (va->parsed()) cmd_variance(o);
        else if (vq->parsed()) cmd_vqe(o);
        else cmd_sweep(o);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const AssumptionViolation& e) {
        std::fprintf(stderr, "assumption violated: %s\n", e.what());
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
