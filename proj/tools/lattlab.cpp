// Command-line front end: solve / sweep / stats / tb / diag / schema.

#include "lattlab/experiment.hpp"
#include "lattlab/sweep.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <sstream>

namespace {

using namespace lattlab;

fs::path resolve_out_root(const std::string& out_flag, const ExperimentConfig& cfg) {
    if (!out_flag.empty()) return out_flag;
    if (const char* env = std::getenv("LATTLAB_OUT_ROOT")) return env;
    return cfg.output_dir;
}

ExperimentConfig load_config_checked(const std::string& path, const std::string& seeds_flag) {
    ExperimentConfig cfg = load_config(path);
    if (!seeds_flag.empty()) {
        std::vector<long> seeds;
        std::stringstream ss(seeds_flag);
        std::string item;
        while (std::getline(ss, item, ',')) seeds.push_back(std::stol(trim(item)));
        if (seeds.empty()) throw ConfigError("--seeds: empty list");
        cfg.seeds = seeds;
    }
    return cfg;
}

std::vector<double> load_levels(const std::string& input) {
    fs::path p(input);
    if (fs::is_directory(p)) p /= "energies.csv";
    if (p.extension() == ".csv") return read_energies_csv(p.string());
    // Plain text: one level per line, '#' comments.
    std::ifstream in(p);
    if (!in) throw std::runtime_error("stats: cannot open " + p.string());
    std::vector<double> levels;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        levels.push_back(std::stod(line));
    }
    std::sort(levels.begin(), levels.end());
    return levels;
}

int cmd_stats(const std::string& input, const std::string& window_flag, const std::string& out,
              int bins, double s_max) {
    auto levels = load_levels(input);
    int lo = 0, hi = static_cast<int>(levels.size()) - 1;
    if (!window_flag.empty()) {
        const auto comma = window_flag.find(',');
        if (comma == std::string::npos)
            throw ConfigError("--window expects 'lo,hi' level indices");
        lo = std::stoi(window_flag.substr(0, comma));
        hi = std::stoi(window_flag.substr(comma + 1));
    }
    const auto st = spectrum_stats(levels, lo, hi, bins, s_max);
    const fs::path dir = out.empty() ? fs::path("stats") : fs::path(out);
    write_stats_report(dir, st);
    Histogram h;
    h.centers = st.hist_centers;
    h.density = st.hist_density;
    h.bin_width = s_max / bins;
    h.retained_fraction = st.retained_fraction;
    std::cout << "levels: " << (hi - lo + 1) << " window: [" << lo << "," << hi << "]\n"
              << "mean symmetrized ratio: " << st.mean_sym << "\n"
              << "TV distance to Poisson: "
              << distribution_distance(h, ReferenceEnsemble::Poisson) << "\n"
              << "TV distance to GOE:     "
              << distribution_distance(h, ReferenceEnsemble::Goe) << "\n"
              << "report written to " << dir.string() << "\n";
    return kExitOk;
}

int cmd_tb(const ExperimentConfig& cfg, const fs::path& out_root, double e0_flag, double t_flag,
           bool have_e0, bool have_t, const std::string& compare) {
    TBParameters p;
    if (have_e0 && have_t) {
        p.e0 = e0_flag;
        p.t = t_flag;
    } else {
        p = estimate_tb_parameters(cfg);
        if (have_e0) p.e0 = e0_flag;
        if (have_t) p.t = t_flag;
    }
    const auto real = sample_disorder(cfg.rho, cfg.amp_mean(), cfg.sigma,
                                      static_cast<std::uint64_t>(cfg.seeds.front()),
                                      cfg.side_length(),
                                      amplitude_dist_from_string(cfg.amp_dist),
                                      width_dist_from_string(cfg.width_dist));
    const auto model = reduce_to_tb(cfg.fermi, real, p.e0, p.t);
    if (model.deep_well_violated)
        std::cerr << "warning: deep-well assumption stretched (well with multiple bumps)\n";
    const auto spec = tb_spectrum(model);
    const fs::path dir = out_root / ("tb-" + config_hash(cfg));
    write_tb_run(dir, model, spec);
    std::cout << "tb run: L=" << model.L << " e0=" << p.e0 << " t=" << p.t
              << " -> " << dir.string() << "\n";

    if (!compare.empty()) {
        auto cont = read_energies_csv((fs::path(compare) / "energies.csv").string());
        const std::size_t n = std::min(cont.size(), spec.energies.size());
        std::vector<double> a(cont.begin(), cont.begin() + n);
        std::vector<double> b(spec.energies.begin(), spec.energies.begin() + n);
        std::cout << "low-band rank correlation (continuum vs tb, " << n
                  << " levels): " << spearman_rank_correlation(a, b) << "\n";
    }
    return kExitOk;
}

int cmd_diag(const std::string& run_dir) {
    const fs::path dir(run_dir);
    const auto manifest = read_manifest(dir / "manifest.json");
    if (!manifest) throw std::runtime_error("diag: no manifest in " + run_dir);
    std::istringstream cfg_text(manifest->at("config_canonical").get<std::string>());
    const ExperimentConfig cfg = config_from_ini(parse_ini(cfg_text, "manifest"));

    const auto energies = read_energies_csv((dir / "energies.csv").string());
    const auto grid = make_grid(cfg.side_length(), cfg.effective_points_per_axis());
    ScalarField v_ext = build_clean_potential(cfg, grid);
    const auto real = read_disorder((dir / "disorder.txt").string());
    const ScalarField v = total_potential(v_ext, render_disorder(real, grid));

    std::vector<ClassifiedState> rows;
    std::vector<int> q_list(cfg.q_list.begin(), cfg.q_list.end());
    const auto policy = tail_policy_from(cfg);
    for (std::size_t i = 0; i < energies.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "state_%05zu.llf", i);
        const fs::path f = dir / "states" / name;
        if (!fs::exists(f)) continue;
        const auto psi = read_field<Wavefunction>(f.string());
        rows.push_back({compute_diagnostics(static_cast<int>(i), energies[i], psi, v,
                                            energies.front(), energies.back(), q_list, policy),
                        std::nullopt});
    }
    write_diagnostics_csv((dir / "diagnostics_recomputed.csv").string(), rows);
    std::cout << "recomputed diagnostics for " << rows.size() << " stored states -> "
              << (dir / "diagnostics_recomputed.csv").string() << "\n";
    return kExitOk;
}

int cmd_schema() {
    std::cout << "lattlab " << kProjectVersion << "\n"
              << "field binary format: LLF1\n"
              << "csv format version: " << kFormatVersion << "\n"
              << "csv schemas:\n";
    for (const auto& [name, cols] : csv_schemas()) {
        std::cout << "  " << name << ": ";
        for (std::size_t i = 0; i < cols.size(); ++i)
            std::cout << (i ? "," : "") << cols[i].first;
        std::cout << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"disordered periodic-well eigenstate laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_flag, seeds_flag, window_flag, compare_flag, input;
    bool force = false;
    int threads = 0;
    double e0_flag = 0.0, t_flag = 0.0;
    int bins = 40;
    double s_max = 5.0;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config_path, "experiment config file");
        if (needs_config) opt->required();
        sub->add_option("--out", out_flag, "output root directory");
        sub->add_option("--seeds", seeds_flag, "comma-separated seed override");
        sub->add_option("--threads", threads, "worker cap (default: hardware)");
        sub->add_flag("--force", force, "recompute even when up to date");
    };

    auto* solve = app.add_subcommand("solve", "solve one configuration");
    add_common(solve, true);

    auto* sweep = app.add_subcommand("sweep", "run the (L, strength, seed) sweep");
    add_common(sweep, true);

    auto* stats = app.add_subcommand("stats", "level-spacing statistics of a spectrum");
    stats->add_option("input", input, "run directory, energies.csv, or level list")->required();
    stats->add_option("--window", window_flag, "level-index window 'lo,hi'");
    stats->add_option("--out", out_flag, "report directory");
    stats->add_option("--bins", bins, "histogram bins");
    stats->add_option("--smax", s_max, "histogram upper edge");

    auto* tb = app.add_subcommand("tb", "tight-binding reduction of the configuration");
    add_common(tb, true);
    auto* e0_opt = tb->add_option("--e0", e0_flag, "on-site energy override");
    auto* t_opt = tb->add_option("--t", t_flag, "hopping override");
    tb->add_option("--compare", compare_flag, "continuum run directory to rank-correlate");

    auto* diag = app.add_subcommand("diag", "recompute diagnostics from stored states");
    diag->add_option("run_dir", input, "run directory")->required();

    app.add_subcommand("schema", "print file-format versions");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("schema")) return cmd_schema();
        if (app.got_subcommand("diag")) return cmd_diag(input);
        if (app.got_subcommand("stats"))
            return cmd_stats(input, window_flag, out_flag, bins, s_max);

        ExperimentConfig cfg = load_config_checked(config_path, seeds_flag);
        const fs::path out_root = resolve_out_root(out_flag, cfg);
        if (app.got_subcommand("tb"))
            return cmd_tb(cfg, out_root, e0_flag, t_flag, e0_opt->count() > 0,
                          t_opt->count() > 0, compare_flag);
        if (app.got_subcommand("solve")) {
            const auto res = run_solve(cfg, out_root, force);
            std::cout << (res.skipped ? "up-to-date: " : "completed: ") << res.dir.string()
                      << "\n";
            return kExitOk;
        }
        if (app.got_subcommand("sweep")) {
            const auto res = run_sweep(cfg, out_root, force);
            std::cout << "sweep: " << res.cells.size() << " cells, " << res.n_failed
                      << " failed -> " << res.dir.string() << "\n";
            return res.n_failed == 0 ? kExitOk : kExitPartialSweep;
        }
    } catch (const lattlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return lattlab::kExitConfigError;
    } catch (const lattlab::NonConvergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return lattlab::kExitNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lattlab::kExitNumericalError;
    }
    return kExitOk;
}
