#pragma once

#include "lattlab/classify.hpp"
#include "lattlab/config.hpp"
#include "lattlab/csv.hpp"
#include "lattlab/eigensolver.hpp"
#include "lattlab/observables.hpp"
#include "lattlab/potential.hpp"
#include "lattlab/spectral.hpp"
#include "lattlab/tightbinding.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace lattlab {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kProjectVersion = "0.1.0";

// Exit codes shared by the CLI and the orchestration layer.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;
inline constexpr int kExitPartialSweep = 4;

inline ScalarField build_clean_potential(const ExperimentConfig& cfg, const Grid2D& grid) {
    ScalarField v = build_lattice_potential(cfg.fermi, grid);
    if (cfg.convention == "wells_up") {
        // Raw positive Fermi profile: wells are hills of height V0 on a
        // floor at 0.
        v.values = (cfg.fermi.V0 - v.values.array()).matrix();
    }
    return v;
}

struct SolvedCell {
    Grid2D grid;
    ScalarField potential;       // V_ext + V_imp
    DisorderRealization disorder;
    EigenpairSet eigen;
};

/// Solve one (config, seed) cell: build the potential, run the eigensolver.
inline SolvedCell solve_cell(const ExperimentConfig& cfg, long seed) {
    SolvedCell cell;
    cell.grid = make_grid(cfg.side_length(), cfg.effective_points_per_axis());
    ScalarField v_ext = build_clean_potential(cfg, cell.grid);
    cell.disorder = sample_disorder(cfg.rho, cfg.amp_mean(), cfg.sigma,
                                    static_cast<std::uint64_t>(seed), cfg.side_length(),
                                    amplitude_dist_from_string(cfg.amp_dist),
                                    width_dist_from_string(cfg.width_dist));
    ScalarField v_imp = render_disorder(cell.disorder, cell.grid);
    cell.potential = total_potential(v_ext, v_imp);
    HamiltonianOperator op(cell.potential);
    SolverOptions opts;
    opts.seed = static_cast<std::uint64_t>(cfg.solver_seed);
    opts.block_size = cfg.block;
    cell.eigen = solve_lowest(op, cfg.n_states, cfg.tol, opts);
    return cell;
}

inline TailWindowPolicy tail_policy_from(const ExperimentConfig& cfg) {
    TailWindowPolicy p;
    p.min_bins = cfg.tail_min_bins;
    p.slope_variation = cfg.tail_slope_var;
    p.r2_min = cfg.tail_r2_min;
    return p;
}

inline ClassifyThresholds thresholds_from(const ExperimentConfig& cfg) {
    ClassifyThresholds t;
    t.consistency_lo = cfg.consistency_lo;
    t.consistency_hi = cfg.consistency_hi;
    t.xi_max_fraction = cfg.xi_max_fraction;
    t.scar_score_min = cfg.scar_score_min;
    t.deloc_ipr_band = cfg.deloc_ipr_band;
    return t;
}

inline std::vector<StateDiagnostics> diagnose_cell(const ExperimentConfig& cfg,
                                                   const SolvedCell& cell) {
    std::vector<int> q_list(cfg.q_list.begin(), cfg.q_list.end());
    const double e_min = cell.eigen.energies.front();
    const double e_max = cell.eigen.energies.back();
    std::vector<StateDiagnostics> diags;
    diags.reserve(cell.eigen.energies.size());
    const auto policy = tail_policy_from(cfg);
    for (std::size_t i = 0; i < cell.eigen.energies.size(); ++i)
        diags.push_back(compute_diagnostics(static_cast<int>(i), cell.eigen.energies[i],
                                            cell.eigen.states[i], cell.potential,
                                            e_min, e_max, q_list, policy));
    return diags;
}

// ---------------------------------------------------------------------------
// Run directory persistence
// ---------------------------------------------------------------------------

inline void write_energies_csv(const std::string& path, const EigenpairSet& eig) {
    CsvWriter w(path, "energies", {"index", "energy", "residual"});
    for (std::size_t i = 0; i < eig.energies.size(); ++i) {
        w.field(static_cast<long>(i)).field(eig.energies[i]).field(eig.residuals[i]);
        w.end_row();
    }
}

inline std::vector<double> read_energies_csv(const std::string& path) {
    const auto t = read_csv(path);
    if (t.schema != "energies")
        throw std::runtime_error("read_energies_csv: wrong schema in " + path);
    const int col = t.column_index("energy");
    std::vector<double> e;
    e.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) e.push_back(t.as_double(r, col));
    return e;
}

struct ClassifiedState {
    StateDiagnostics diag;
    std::optional<StateClass> cls;
};

inline void write_diagnostics_csv(const std::string& path,
                                  const std::vector<ClassifiedState>& states,
                                  const std::string& model = "continuum") {
    CsvWriter w(path, "diagnostics",
                {"index", "energy", "e_norm", "ipr2", "ipr3", "ipr4", "t_exp", "v_exp",
                 "tv_ratio", "lambda_db", "xi_tail", "tail_r2", "scar_score", "label",
                 "model"});
    auto opt = [&w](const std::optional<double>& v) {
        if (v) w.field(*v); else w.field_absent();
    };
    for (const auto& s : states) {
        const auto& d = s.diag;
        w.field(d.index).field(d.energy).field(d.e_norm).field(d.ipr2);
        for (int q : {3, 4}) {
            const auto it = d.ipr_q.find(q);
            if (it != d.ipr_q.end()) w.field(it->second); else w.field_absent();
        }
        w.field(d.t_exp).field(d.v_exp).field(d.tv_ratio);
        opt(d.lambda_db);
        opt(d.xi_tail);
        opt(d.tail_fit_quality);
        if (s.cls) w.field(s.cls->scar_score); else w.field_absent();
        w.field(s.cls ? std::string(to_string(s.cls->label)) : std::string());
        w.field(model);
        w.end_row();
    }
}

struct RunResult {
    fs::path dir;
    bool skipped = false;  // already up to date
};

inline json make_manifest(const ExperimentConfig& cfg, long seed, const std::string& status) {
    json m;
    m["config_hash"] = config_hash(cfg);
    m["config_canonical"] = canonical_serialize(cfg);
    m["seed"] = seed;
    m["status"] = status;
    m["project_version"] = kProjectVersion;
    m["format_version"] = kFormatVersion;
    return m;
}

inline void write_manifest(const fs::path& path, const json& m) {
    std::ofstream out(path);
    out << m.dump(2) << "\n";
}

inline std::optional<json> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json m;
    try {
        in >> m;
    } catch (const json::exception&) {
        return std::nullopt;
    }
    return m;
}

inline bool run_is_complete(const fs::path& dir, const std::string& expected_hash) {
    const auto m = read_manifest(dir / "manifest.json");
    return m && m->value("status", "") == "complete" &&
           m->value("config_hash", "") == expected_hash;
}

/// Solve one run (first seed of the config) into out_root/solve-<hash>.
/// Re-running an identical config skips the solver unless force is set.
inline RunResult run_solve(const ExperimentConfig& cfg, const fs::path& out_root,
                           bool force = false) {
    const std::string hash = config_hash(cfg);
    const fs::path dir = out_root / ("solve-" + hash);
    if (!force && run_is_complete(dir, hash)) return {dir, true};
    fs::create_directories(dir / "states");

    const auto t0 = std::chrono::steady_clock::now();
    const long seed = cfg.seeds.front();
    json manifest = make_manifest(cfg, seed, "running");
    write_manifest(dir / "manifest.json", manifest);

    SolvedCell cell = solve_cell(cfg, seed);
    write_energies_csv((dir / "energies.csv").string(), cell.eigen);
    write_disorder((dir / "disorder.txt").string(), cell.disorder);

    auto diags = diagnose_cell(cfg, cell);
    std::vector<ClassifiedState> rows;
    rows.reserve(diags.size());
    for (auto& d : diags) rows.push_back({std::move(d), std::nullopt});
    write_diagnostics_csv((dir / "diagnostics.csv").string(), rows);

    int retained = 0;
    for (std::size_t i = 0; i < cell.eigen.states.size(); ++i) {
        if (!cfg.retention.retain(static_cast<int>(i), cell.eigen.energies[i])) continue;
        char name[32];
        std::snprintf(name, sizeof name, "state_%05zu.llf", i);
        write_field((dir / "states" / name).string(), cell.eigen.states[i]);
        ++retained;
    }

    manifest["status"] = "complete";
    manifest["n_states"] = cfg.n_states;
    manifest["n_retained"] = retained;
    manifest["solver"] = {{"method", cell.eigen.meta.method},
                          {"restarts", cell.eigen.meta.restarts},
                          {"inverse_applications", cell.eigen.meta.inverse_applications},
                          {"tolerance", cell.eigen.meta.tolerance},
                          {"seed", cell.eigen.meta.seed}};
    manifest["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(dir / "manifest.json", manifest);
    return {dir, false};
}

// ---------------------------------------------------------------------------
// Spectrum statistics reports
// ---------------------------------------------------------------------------

inline void write_stats_report(const fs::path& dir, const SpectrumStats& st) {
    fs::create_directories(dir);
    const auto& centers = st.hist_centers;
    {
        CsvWriter w((dir / "stats_hist.csv").string(), "stats_hist", {"bin_center", "density"});
        for (std::size_t k = 0; k < centers.size(); ++k) {
            w.field(centers[k]).field(st.hist_density[k]);
            w.end_row();
        }
    }
    Histogram h;
    h.centers = st.hist_centers;
    h.density = st.hist_density;
    h.bin_width = centers.size() > 1 ? centers[1] - centers[0] : 1.0;
    h.retained_fraction = st.retained_fraction;
    const double tv_p = distribution_distance(h, ReferenceEnsemble::Poisson);
    const double tv_g = distribution_distance(h, ReferenceEnsemble::Goe);
    CsvWriter w((dir / "stats_summary.csv").string(), "stats_summary",
                {"window_lo", "window_hi", "n_levels", "n_dropped", "mean_sym",
                 "tv_poisson", "tv_goe"});
    w.field(st.window_lo).field(st.window_hi)
        .field(static_cast<long>(st.window_hi - st.window_lo + 1))
        .field(st.n_dropped).field(st.mean_sym).field(tv_p).field(tv_g);
    w.end_row();
}

// ---------------------------------------------------------------------------
// Tight-binding reduction runs
// ---------------------------------------------------------------------------

struct TBParameters {
    double e0 = 0.0;
    double t = 0.0;
};

/// E0 from a clean single-well solve; |t| from the bandwidth of the lowest
/// four levels of a clean 2x2 array (open-boundary TB: spread = 4|t|).
/// The hopping sign is negative for ground-state-derived orbitals.
inline TBParameters estimate_tb_parameters(const ExperimentConfig& cfg) {
    TBParameters p;
    auto solve_clean = [&](int L, int n_states) {
        ExperimentConfig c = cfg;
        c.fermi.L = L;
        c.strength = 0.0;
        c.rho = 0.0;
        c.n_states = n_states;
        c.points_per_axis = 0;
        SolvedCell cell = solve_cell(c, c.seeds.front());
        return cell.eigen.energies;
    };
    const auto single = solve_clean(1, 1);
    p.e0 = single[0];
    const auto quad = solve_clean(2, 4);
    p.t = -(quad[3] - quad[0]) / 4.0;
    return p;
}

inline void write_tb_run(const fs::path& dir, const TBModel& model, const TBSpectrum& spec) {
    fs::create_directories(dir);
    {
        CsvWriter w((dir / "tb_energies.csv").string(), "tb_energies",
                    {"index", "energy", "ipr", "model"});
        for (std::size_t i = 0; i < spec.energies.size(); ++i) {
            w.field(static_cast<long>(i)).field(spec.energies[i])
                .field(tb_ipr(spec.vectors.col(static_cast<Eigen::Index>(i)))).field("tb");
            w.end_row();
        }
    }
    CsvWriter w((dir / "tb_onsite.csv").string(), "tb_onsite", {"i", "j", "onsite"});
    for (int j = 0; j < model.L; ++j)
        for (int i = 0; i < model.L; ++i) {
            w.field(i).field(j).field(model.onsite[model.site(i, j)]);
            w.end_row();
        }
}

/// Spearman rank correlation between two equally long sequences.
inline double spearman_rank_correlation(std::vector<double> a, std::vector<double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("spearman: need two equal sequences of length >= 2");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) { ma += ra[i]; mb += rb[i]; }
    ma /= n; mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace lattlab
