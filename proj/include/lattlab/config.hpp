#pragma once

#include "lattlab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lattlab {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// INI-style config text: [section] headers, key = value lines, '#' comments.
// ---------------------------------------------------------------------------

using IniData = std::map<std::string, std::map<std::string, std::string>>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline IniData parse_ini(std::istream& in, const std::string& origin = "<config>") {
    IniData data;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            data[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        data[section][key] = trim(line.substr(eq + 1));
    }
    return data;
}

inline IniData parse_ini_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_ini(in, path);
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class SectionReader {
public:
    SectionReader(const IniData& data, std::string section)
        : data_(data), section_(std::move(section)) {}

    bool has(const std::string& key) const {
        const auto s = data_.find(section_);
        return s != data_.end() && s->second.count(key) > 0;
    }
    std::string require(const std::string& key) const {
        const auto s = data_.find(section_);
        if (s == data_.end())
            throw ConfigError("missing config section [" + section_ + "]");
        const auto k = s->second.find(key);
        if (k == s->second.end())
            throw ConfigError("missing config key '" + key + "' in section [" + section_ + "]");
        return k->second;
    }
    double require_double(const std::string& key) const { return to_double(key, require(key)); }
    long require_long(const std::string& key) const { return to_long(key, require(key)); }
    double get_double(const std::string& key, double def) const {
        return has(key) ? to_double(key, require(key)) : def;
    }
    long get_long(const std::string& key, long def) const {
        return has(key) ? to_long(key, require(key)) : def;
    }
    std::string get_string(const std::string& key, const std::string& def) const {
        return has(key) ? require(key) : def;
    }
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& def) const {
        if (!has(key)) return def;
        std::vector<double> out;
        std::stringstream ss(require(key));
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(to_double(key, trim(item)));
        return out;
    }
    std::vector<long> get_long_list(const std::string& key, const std::vector<long>& def) const {
        if (!has(key)) return def;
        std::vector<long> out;
        std::stringstream ss(require(key));
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(to_long(key, trim(item)));
        return out;
    }

private:
    double to_double(const std::string& key, const std::string& v) const {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing");
            return d;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' in [" + section_ +
                              "]: not a number: '" + v + "'");
        }
    }
    long to_long(const std::string& key, const std::string& v) const {
        try {
            std::size_t pos = 0;
            const long d = std::stol(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing");
            return d;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' in [" + section_ +
                              "]: not an integer: '" + v + "'");
        }
    }
    const IniData& data_;
    std::string section_;
};

}  // namespace detail

enum class RetentionKind { All, None, EveryK, EnergyWindow };

struct RetentionPolicy {
    RetentionKind kind = RetentionKind::All;
    int every_k = 1;
    double e_lo = 0.0;
    double e_hi = 0.0;

    bool retain(int index, double energy) const {
        switch (kind) {
            case RetentionKind::All: return true;
            case RetentionKind::None: return false;
            case RetentionKind::EveryK: return index % every_k == 0;
            case RetentionKind::EnergyWindow: return energy >= e_lo && energy <= e_hi;
        }
        return true;
    }
    std::string to_string() const {
        switch (kind) {
            case RetentionKind::All: return "all";
            case RetentionKind::None: return "none";
            case RetentionKind::EveryK: return "every_k:" + std::to_string(every_k);
            case RetentionKind::EnergyWindow:
                return "window:" + detail::fmt_double(e_lo) + "," + detail::fmt_double(e_hi);
        }
        return "all";
    }
    static RetentionPolicy parse(const std::string& s) {
        RetentionPolicy p;
        if (s == "all") { p.kind = RetentionKind::All; return p; }
        if (s == "none") { p.kind = RetentionKind::None; return p; }
        if (s.rfind("every_k:", 0) == 0) {
            p.kind = RetentionKind::EveryK;
            p.every_k = std::stoi(s.substr(8));
            if (p.every_k < 1) throw ConfigError("retention every_k must be >= 1");
            return p;
        }
        if (s.rfind("window:", 0) == 0) {
            p.kind = RetentionKind::EnergyWindow;
            const auto body = s.substr(7);
            const auto comma = body.find(',');
            if (comma == std::string::npos)
                throw ConfigError("retention window needs 'window:lo,hi'");
            p.e_lo = std::stod(body.substr(0, comma));
            p.e_hi = std::stod(body.substr(comma + 1));
            return p;
        }
        throw ConfigError("unknown retention policy: " + s);
    }
};

/// Full experiment configuration. Canonical serialization (fixed section and
/// key order, %.17g numbers) defines the config hash that names run
/// directories.
struct ExperimentConfig {
    // [potential]
    FermiParams fermi;
    std::string convention = "wells_down";

    // [disorder]
    double rho = 0.4;
    double strength = 0.3;  // <A>/V0
    double sigma = 0.2;
    std::string amp_dist = "uniform";
    std::string width_dist = "constant";
    std::vector<long> seeds = {1};

    // [solver]
    int points_per_axis = 0;  // 0 -> grid rule
    int n_states = 50;
    double tol = 1e-6;
    RetentionPolicy retention;
    int block = 4;
    long solver_seed = 12345;
    double target_energy = 0.0;  // 0 -> 1.5 * V0 for the grid rule

    // [analysis]
    std::vector<long> q_list = {2, 3, 4};
    int hist_bins = 40;
    double s_max = 5.0;
    int e_bins = 20;
    double consistency_lo = 0.5;
    double consistency_hi = 2.0;
    double xi_max_fraction = 1.0 / 3.0;
    double scar_score_min = 0.5;
    double deloc_ipr_band = 3.0;
    int tail_min_bins = 8;
    double tail_slope_var = 0.15;
    double tail_r2_min = 0.98;

    // [sweep]
    std::vector<long> sweep_sizes;
    std::vector<double> sweep_strengths;

    // [output]
    std::string output_dir = "runs";

    double side_length() const { return fermi.side_length(); }
    double amp_mean() const { return strength * fermi.V0; }

    /// Grid rule: spacing <= min(1.5 d, sigma/4, lambda(E_target)/8).
    int effective_points_per_axis() const {
        if (points_per_axis > 0) return points_per_axis;
        const double e_kin = target_energy > 0.0 ? target_energy : 1.5 * fermi.V0;
        const double lambda = 2.0 * M_PI / std::sqrt(2.0 * e_kin);
        const double h_max = std::min({1.5 * fermi.d, sigma / 4.0, lambda / 8.0});
        const int n = static_cast<int>(std::ceil(side_length() / h_max)) - 1;
        return std::max(8, n);
    }

    void validate() const {
        fermi.validate();
        if (convention != "wells_down" && convention != "wells_up")
            throw ConfigError("potential.convention must be wells_down or wells_up");
        if (rho < 0.0 || strength < 0.0 || !(sigma > 0.0))
            throw ConfigError("disorder parameters must satisfy rho,strength >= 0 and sigma > 0");
        if (seeds.empty()) throw ConfigError("disorder.seeds must be non-empty");
        if (n_states < 1) throw ConfigError("solver.n_states must be >= 1");
        if (!(tol > 0.0)) throw ConfigError("solver.tol must be positive");
        amplitude_dist_from_string(amp_dist);
        width_dist_from_string(width_dist);
        for (long q : q_list)
            if (q < 2) throw ConfigError("analysis.q_list entries must be >= 2");
    }
};

inline ExperimentConfig config_from_ini(const IniData& data) {
    ExperimentConfig c;
    detail::SectionReader pot(data, "potential");
    c.fermi.r0 = pot.require_double("r0");
    c.fermi.d = pot.require_double("d");
    c.fermi.V0 = pot.require_double("V0");
    c.fermi.a = pot.require_double("a");
    c.fermi.L = static_cast<int>(pot.require_long("L"));
    c.convention = pot.get_string("convention", c.convention);

    detail::SectionReader dis(data, "disorder");
    c.rho = dis.require_double("rho");
    c.strength = dis.require_double("strength");
    c.sigma = dis.require_double("sigma");
    c.amp_dist = dis.get_string("amp_dist", c.amp_dist);
    c.width_dist = dis.get_string("width_dist", c.width_dist);
    c.seeds = dis.get_long_list("seeds", c.seeds);

    detail::SectionReader sol(data, "solver");
    c.n_states = static_cast<int>(sol.require_long("n_states"));
    c.tol = sol.require_double("tol");
    c.points_per_axis = static_cast<int>(sol.get_long("points_per_axis", 0));
    c.retention = RetentionPolicy::parse(sol.get_string("retain", "all"));
    c.block = static_cast<int>(sol.get_long("block", c.block));
    c.solver_seed = sol.get_long("seed", c.solver_seed);
    c.target_energy = sol.get_double("target_energy", 0.0);

    detail::SectionReader ana(data, "analysis");
    c.q_list = ana.get_long_list("q_list", c.q_list);
    c.hist_bins = static_cast<int>(ana.get_long("hist_bins", c.hist_bins));
    c.s_max = ana.get_double("s_max", c.s_max);
    c.e_bins = static_cast<int>(ana.get_long("e_bins", c.e_bins));
    c.consistency_lo = ana.get_double("consistency_lo", c.consistency_lo);
    c.consistency_hi = ana.get_double("consistency_hi", c.consistency_hi);
    c.xi_max_fraction = ana.get_double("xi_max_fraction", c.xi_max_fraction);
    c.scar_score_min = ana.get_double("scar_score_min", c.scar_score_min);
    c.deloc_ipr_band = ana.get_double("deloc_ipr_band", c.deloc_ipr_band);
    c.tail_min_bins = static_cast<int>(ana.get_long("tail_min_bins", c.tail_min_bins));
    c.tail_slope_var = ana.get_double("tail_slope_var", c.tail_slope_var);
    c.tail_r2_min = ana.get_double("tail_r2_min", c.tail_r2_min);

    detail::SectionReader swp(data, "sweep");
    c.sweep_sizes = swp.get_long_list("sizes", {});
    c.sweep_strengths = swp.get_double_list("strengths", {});

    detail::SectionReader out(data, "output");
    c.output_dir = out.get_string("dir", c.output_dir);

    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    return config_from_ini(parse_ini_file(path));
}

inline std::string canonical_serialize(const ExperimentConfig& c) {
    using detail::fmt_double;
    std::ostringstream out;
    auto list_l = [](const std::vector<long>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    auto list_d = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + detail::fmt_double(v[i]);
        return s;
    };
    out << "[analysis]\n"
        << "consistency_hi = " << fmt_double(c.consistency_hi) << "\n"
        << "consistency_lo = " << fmt_double(c.consistency_lo) << "\n"
        << "deloc_ipr_band = " << fmt_double(c.deloc_ipr_band) << "\n"
        << "e_bins = " << c.e_bins << "\n"
        << "hist_bins = " << c.hist_bins << "\n"
        << "q_list = " << list_l(c.q_list) << "\n"
        << "s_max = " << fmt_double(c.s_max) << "\n"
        << "scar_score_min = " << fmt_double(c.scar_score_min) << "\n"
        << "tail_min_bins = " << c.tail_min_bins << "\n"
        << "tail_r2_min = " << fmt_double(c.tail_r2_min) << "\n"
        << "tail_slope_var = " << fmt_double(c.tail_slope_var) << "\n"
        << "xi_max_fraction = " << fmt_double(c.xi_max_fraction) << "\n"
        << "[disorder]\n"
        << "amp_dist = " << c.amp_dist << "\n"
        << "rho = " << fmt_double(c.rho) << "\n"
        << "seeds = " << list_l(c.seeds) << "\n"
        << "sigma = " << fmt_double(c.sigma) << "\n"
        << "strength = " << fmt_double(c.strength) << "\n"
        << "width_dist = " << c.width_dist << "\n"
        << "[potential]\n"
        << "L = " << c.fermi.L << "\n"
        << "V0 = " << fmt_double(c.fermi.V0) << "\n"
        << "a = " << fmt_double(c.fermi.a) << "\n"
        << "convention = " << c.convention << "\n"
        << "d = " << fmt_double(c.fermi.d) << "\n"
        << "r0 = " << fmt_double(c.fermi.r0) << "\n"
        << "[solver]\n"
        << "block = " << c.block << "\n"
        << "n_states = " << c.n_states << "\n"
        << "points_per_axis = " << c.points_per_axis << "\n"
        << "retain = " << c.retention.to_string() << "\n"
        << "seed = " << c.solver_seed << "\n"
        << "target_energy = " << fmt_double(c.target_energy) << "\n"
        << "tol = " << fmt_double(c.tol) << "\n"
        << "[sweep]\n"
        << "sizes = " << list_l(c.sweep_sizes) << "\n"
        << "strengths = " << list_d(c.sweep_strengths) << "\n";
    return out.str();
}

/// FNV-1a 64-bit digest of the canonical form, as 16 hex characters.
inline std::string config_hash(const ExperimentConfig& c) {
    const std::string s = canonical_serialize(c);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace lattlab
