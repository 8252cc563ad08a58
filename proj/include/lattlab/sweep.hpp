#pragma once

#include "lattlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace lattlab {

struct SweepCellKey {
    int L = 0;
    double strength = 0.0;
    long seed = 0;

    std::string dir_name() const {
        std::ostringstream ss;
        ss << "cell_L" << L << "_s" << detail::fmt_double(strength) << "_seed" << seed;
        return ss.str();
    }
    bool operator<(const SweepCellKey& o) const {
        if (L != o.L) return L < o.L;
        if (strength != o.strength) return strength < o.strength;
        return seed < o.seed;
    }
};

struct SweepCellResult {
    SweepCellKey key;
    bool ok = false;
    bool skipped = false;
    std::string error;
    std::vector<ClassifiedState> states;
    std::vector<double> energies;
};

struct SweepResult {
    fs::path dir;
    std::vector<SweepCellResult> cells;
    int n_failed = 0;
};

namespace detail {

inline ExperimentConfig cell_config(const ExperimentConfig& base, int L, double strength,
                                    long seed) {
    ExperimentConfig c = base;
    c.fermi.L = L;
    c.strength = strength;
    c.seeds = {seed};
    return c;
}

inline std::vector<ClassifiedState> read_cell_diagnostics(const fs::path& file) {
    const auto t = read_csv(file.string());
    std::vector<ClassifiedState> out;
    const int ci = t.column_index("index"), ce = t.column_index("energy"),
              cn = t.column_index("e_norm"), c2 = t.column_index("ipr2"),
              ct = t.column_index("t_exp"), cv = t.column_index("v_exp"),
              cr = t.column_index("tv_ratio"), cl = t.column_index("lambda_db"),
              cx = t.column_index("xi_tail"), cq = t.column_index("tail_r2"),
              cs = t.column_index("scar_score"), cb = t.column_index("label");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ClassifiedState s;
        s.diag.index = static_cast<int>(t.as_double(r, ci));
        s.diag.energy = t.as_double(r, ce);
        s.diag.e_norm = t.as_double(r, cn);
        s.diag.ipr2 = t.as_double(r, c2);
        s.diag.t_exp = t.as_double(r, ct);
        s.diag.v_exp = t.as_double(r, cv);
        s.diag.tv_ratio = t.as_double(r, cr);
        if (!t.absent(r, cl)) s.diag.lambda_db = t.as_double(r, cl);
        if (!t.absent(r, cx)) s.diag.xi_tail = t.as_double(r, cx);
        if (!t.absent(r, cq)) s.diag.tail_fit_quality = t.as_double(r, cq);
        StateClass cls;
        const std::string label = t.rows[r][cb];
        if (label == "anderson") cls.label = StateLabel::Anderson;
        else if (label == "delocalized") cls.label = StateLabel::Delocalized;
        else if (label == "scarred") cls.label = StateLabel::Scarred;
        else cls.label = StateLabel::Ambiguous;
        if (!t.absent(r, cs)) cls.scar_score = t.as_double(r, cs);
        s.cls = cls;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace detail

/// Run one sweep cell: solve, diagnose, classify against the clean baseline,
/// persist the cell directory.
inline SweepCellResult run_sweep_cell(const ExperimentConfig& base, const SweepCellKey& key,
                                      const CleanBaseline& baseline, const fs::path& cell_dir,
                                      bool force) {
    SweepCellResult res;
    res.key = key;
    const ExperimentConfig cfg = detail::cell_config(base, key.L, key.strength, key.seed);
    const std::string hash = config_hash(cfg);
    if (!force && run_is_complete(cell_dir, hash)) {
        res.ok = true;
        res.skipped = true;
        res.states = detail::read_cell_diagnostics(cell_dir / "diagnostics.csv");
        res.energies = read_energies_csv((cell_dir / "energies.csv").string());
        return res;
    }
    try {
        fs::create_directories(cell_dir);
        json manifest = make_manifest(cfg, key.seed, "running");
        write_manifest(cell_dir / "manifest.json", manifest);

        SolvedCell cell = solve_cell(cfg, key.seed);
        auto diags = diagnose_cell(cfg, cell);
        const auto thresholds = thresholds_from(cfg);
        res.states.reserve(diags.size());
        for (std::size_t i = 0; i < diags.size(); ++i) {
            const auto sc = scar_score(cell.eigen.states[i], diags[i], baseline);
            auto cls = classify_state(diags[i], cfg.side_length(), sc.score, thresholds);
            res.states.push_back({diags[i], cls});
        }
        res.energies = cell.eigen.energies;

        write_energies_csv((cell_dir / "energies.csv").string(), cell.eigen);
        write_disorder((cell_dir / "disorder.txt").string(), cell.disorder);
        write_diagnostics_csv((cell_dir / "diagnostics.csv").string(), res.states);
        manifest["status"] = "complete";
        write_manifest(cell_dir / "manifest.json", manifest);
        res.ok = true;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
        json manifest = make_manifest(cfg, key.seed, "failed");
        manifest["error"] = res.error;
        write_manifest(cell_dir / "manifest.json", manifest);
    }
    return res;
}

/// Clean baseline for a given system size: strength-0 solve with the shared
/// solver settings, reduced to percentile curves of tv_ratio vs e_norm.
inline CleanBaseline compute_clean_baseline(const ExperimentConfig& base, int L,
                                            const fs::path& sweep_dir, bool force) {
    const SweepCellKey key{L, 0.0, base.seeds.front()};
    const fs::path dir = sweep_dir / ("baseline_L" + std::to_string(L));
    const ExperimentConfig cfg = detail::cell_config(base, L, 0.0, base.seeds.front());
    std::vector<StateDiagnostics> diags;
    if (!force && run_is_complete(dir, config_hash(cfg))) {
        for (const auto& s : detail::read_cell_diagnostics(dir / "diagnostics.csv"))
            diags.push_back(s.diag);
    } else {
        fs::create_directories(dir);
        json manifest = make_manifest(cfg, key.seed, "running");
        write_manifest(dir / "manifest.json", manifest);
        SolvedCell cell = solve_cell(cfg, key.seed);
        diags = diagnose_cell(cfg, cell);
        std::vector<ClassifiedState> rows;
        for (const auto& d : diags) rows.push_back({d, std::nullopt});
        write_energies_csv((dir / "energies.csv").string(), cell.eigen);
        write_diagnostics_csv((dir / "diagnostics.csv").string(), rows);
        manifest["status"] = "complete";
        write_manifest(dir / "manifest.json", manifest);
    }
    return make_clean_baseline(diags, base.e_bins);
}

/// Full sweep over (L, strength, seed) cells with per-cell failure isolation
/// and resume. Emits the four plot-ready aggregate tables.
inline SweepResult run_sweep(const ExperimentConfig& base, const fs::path& out_root,
                             bool force = false) {
    if (base.sweep_sizes.empty() || base.sweep_strengths.empty())
        throw ConfigError("sweep requires non-empty [sweep] sizes and strengths");
    const std::string hash = config_hash(base);
    SweepResult result;
    result.dir = out_root / ("sweep-" + hash);
    fs::create_directories(result.dir);

    json manifest = make_manifest(base, base.seeds.front(), "running");
    manifest["cells"] = json::array();
    write_manifest(result.dir / "manifest.json", manifest);

    std::map<int, CleanBaseline> baselines;
    for (long L : base.sweep_sizes)
        baselines[static_cast<int>(L)] =
            compute_clean_baseline(base, static_cast<int>(L), result.dir, force);

    // Deterministic cell order: (L, strength, seed).
    std::vector<SweepCellKey> keys;
    for (long L : base.sweep_sizes)
        for (double s : base.sweep_strengths)
            for (long seed : base.seeds)
                keys.push_back({static_cast<int>(L), s, seed});
    std::sort(keys.begin(), keys.end());

    for (const auto& key : keys) {
        auto res = run_sweep_cell(base, key, baselines[key.L], result.dir / key.dir_name(),
                                  force);
        if (!res.ok) ++result.n_failed;
        manifest["cells"].push_back({{"dir", key.dir_name()},
                                     {"L", key.L},
                                     {"strength", key.strength},
                                     {"seed", key.seed},
                                     {"status", res.ok ? "complete" : "failed"}});
        result.cells.push_back(std::move(res));
    }

    // ---- Aggregates ------------------------------------------------------
    // fig1: crossover map, median log10(IPR2) per (L, strength, e_norm bin),
    // pooled over seeds.
    {
        CsvWriter w((result.dir / "fig1_map.csv").string(), "fig1_map",
                    {"L", "strength", "e_norm_bin", "median_log10_ipr2", "n_states"});
        const int nb = base.e_bins;
        for (long L : base.sweep_sizes)
            for (double s : base.sweep_strengths) {
                std::vector<std::vector<double>> bins(static_cast<std::size_t>(nb));
                for (const auto& cell : result.cells) {
                    if (!cell.ok || cell.key.L != L || cell.key.strength != s) continue;
                    for (const auto& st : cell.states) {
                        int k = std::clamp(static_cast<int>(st.diag.e_norm * nb), 0, nb - 1);
                        bins[static_cast<std::size_t>(k)].push_back(std::log10(st.diag.ipr2));
                    }
                }
                for (int k = 0; k < nb; ++k) {
                    auto& v = bins[static_cast<std::size_t>(k)];
                    if (v.empty()) continue;
                    w.field(static_cast<long>(L)).field(s)
                        .field((k + 0.5) / nb)
                        .field(percentile(v, 0.5))
                        .field(static_cast<long>(v.size()));
                    w.end_row();
                }
            }
    }
    // fig2: mean IPR2 per (L, class), pooled over strengths and seeds.
    {
        CsvWriter w((result.dir / "fig2_scaling.csv").string(), "fig2_scaling",
                    {"L", "label", "mean_ipr2", "n_states"});
        for (long L : base.sweep_sizes)
            for (StateLabel label : {StateLabel::Anderson, StateLabel::Delocalized,
                                     StateLabel::Scarred, StateLabel::Ambiguous}) {
                double sum = 0.0;
                long n = 0;
                for (const auto& cell : result.cells) {
                    if (!cell.ok || cell.key.L != L) continue;
                    for (const auto& st : cell.states)
                        if (st.cls && st.cls->label == label) {
                            sum += st.diag.ipr2;
                            ++n;
                        }
                }
                if (n == 0) continue;
                w.field(static_cast<long>(L)).field(to_string(label))
                    .field(sum / static_cast<double>(n)).field(n);
                w.end_row();
            }
    }
    // fig3: per-cell spacing statistics over the full computed window.
    {
        CsvWriter w((result.dir / "fig3_stats.csv").string(), "fig3_stats",
                    {"L", "strength", "seed", "mean_sym", "tv_poisson", "tv_goe", "n_levels"});
        for (const auto& cell : result.cells) {
            if (!cell.ok || cell.energies.size() < 3) continue;
            const auto st = spectrum_stats(cell.energies, 0,
                                           static_cast<int>(cell.energies.size()) - 1,
                                           base.hist_bins, base.s_max);
            Histogram h;
            h.centers = st.hist_centers;
            h.density = st.hist_density;
            h.bin_width = base.s_max / base.hist_bins;
            h.retained_fraction = st.retained_fraction;
            w.field(static_cast<long>(cell.key.L)).field(cell.key.strength)
                .field(cell.key.seed).field(st.mean_sym)
                .field(distribution_distance(h, ReferenceEnsemble::Poisson))
                .field(distribution_distance(h, ReferenceEnsemble::Goe))
                .field(static_cast<long>(cell.energies.size()));
            w.end_row();
        }
    }
    // fig4: per-state kinetic-dominance table.
    {
        CsvWriter w((result.dir / "fig4_tv.csv").string(), "fig4_tv",
                    {"L", "strength", "seed", "index", "e_norm", "tv_ratio", "scar_score",
                     "label"});
        for (const auto& cell : result.cells) {
            if (!cell.ok) continue;
            for (const auto& st : cell.states) {
                w.field(static_cast<long>(cell.key.L)).field(cell.key.strength)
                    .field(cell.key.seed).field(st.diag.index).field(st.diag.e_norm)
                    .field(st.diag.tv_ratio)
                    .field(st.cls ? st.cls->scar_score : 0.0)
                    .field(st.cls ? std::string(to_string(st.cls->label)) : std::string());
                w.end_row();
            }
        }
    }

    manifest["status"] = result.n_failed == 0 ? "complete" : "partial";
    manifest["n_failed"] = result.n_failed;
    write_manifest(result.dir / "manifest.json", manifest);
    return result;
}

}  // namespace lattlab
