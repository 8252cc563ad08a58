#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lattlab {

// ---------------------------------------------------------------------------
// CSV files carry a first comment line "# schema=<name> version=<v>", then a
// header row, then data. Doubles are written with %.17g so files round-trip
// exactly; absent values are empty cells.
// ---------------------------------------------------------------------------

inline constexpr int kFormatVersion = 1;

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& schema,
              const std::vector<std::string>& columns)
        : out_(path), n_cols_(columns.size()) {
        if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
        out_ << "# schema=" << schema << " version=" << kFormatVersion << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
    }

    CsvWriter& field(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return field_raw(buf);
    }
    CsvWriter& field(long v) { return field_raw(std::to_string(v)); }
    CsvWriter& field(int v) { return field_raw(std::to_string(v)); }
    CsvWriter& field(const std::string& v) { return field_raw(v); }
    CsvWriter& field_absent() { return field_raw(""); }

    void end_row() {
        if (col_ != n_cols_)
            throw std::logic_error("CsvWriter: row has wrong number of fields");
        out_ << "\n";
        col_ = 0;
    }

private:
    CsvWriter& field_raw(const std::string& s) {
        out_ << (col_ ? "," : "") << s;
        ++col_;
        return *this;
    }
    std::ofstream out_;
    std::size_t n_cols_;
    std::size_t col_ = 0;
};

struct CsvTable {
    std::string schema;
    int version = 0;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        throw std::runtime_error("csv: no column named " + name);
    }
    double as_double(std::size_t row, int col) const { return std::stod(rows[row][col]); }
    bool absent(std::size_t row, int col) const { return rows[row][col].empty(); }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# schema=", 0) != 0)
        throw std::runtime_error("read_csv: missing schema line in " + path);
    {
        std::stringstream ss(line.substr(2));
        std::string tok;
        while (ss >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const auto key = tok.substr(0, eq);
            if (key == "schema") t.schema = tok.substr(eq + 1);
            if (key == "version") t.version = std::stoi(tok.substr(eq + 1));
        }
    }
    if (!std::getline(in, line))
        throw std::runtime_error("read_csv: missing header in " + path);
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::string cell;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        while (row.size() < t.columns.size()) row.emplace_back();  // trailing empties
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Strict schema registry: column names and types per schema name. 'f' =
// float (may be absent), 'F' = required float, 'i' = required integer,
// 's' = string.
// ---------------------------------------------------------------------------

inline const std::map<std::string, std::vector<std::pair<std::string, char>>>&
csv_schemas() {
    static const std::map<std::string, std::vector<std::pair<std::string, char>>> schemas = {
        {"energies",
         {{"index", 'i'}, {"energy", 'F'}, {"residual", 'F'}}},
        {"diagnostics",
         {{"index", 'i'}, {"energy", 'F'}, {"e_norm", 'F'}, {"ipr2", 'F'}, {"ipr3", 'f'},
          {"ipr4", 'f'}, {"t_exp", 'F'}, {"v_exp", 'F'}, {"tv_ratio", 'F'},
          {"lambda_db", 'f'}, {"xi_tail", 'f'}, {"tail_r2", 'f'}, {"scar_score", 'f'},
          {"label", 's'}, {"model", 's'}}},
        {"stats_summary",
         {{"window_lo", 'i'}, {"window_hi", 'i'}, {"n_levels", 'i'}, {"n_dropped", 'i'},
          {"mean_sym", 'F'}, {"tv_poisson", 'F'}, {"tv_goe", 'F'}}},
        {"stats_hist",
         {{"bin_center", 'F'}, {"density", 'F'}}},
        {"fig1_map",
         {{"L", 'i'}, {"strength", 'F'}, {"e_norm_bin", 'F'}, {"median_log10_ipr2", 'F'},
          {"n_states", 'i'}}},
        {"fig2_scaling",
         {{"L", 'i'}, {"label", 's'}, {"mean_ipr2", 'F'}, {"n_states", 'i'}}},
        {"fig3_stats",
         {{"L", 'i'}, {"strength", 'F'}, {"seed", 'i'}, {"mean_sym", 'F'},
          {"tv_poisson", 'F'}, {"tv_goe", 'F'}, {"n_levels", 'i'}}},
        {"fig4_tv",
         {{"L", 'i'}, {"strength", 'F'}, {"seed", 'i'}, {"index", 'i'}, {"e_norm", 'F'},
          {"tv_ratio", 'F'}, {"scar_score", 'F'}, {"label", 's'}}},
        {"tb_energies",
         {{"index", 'i'}, {"energy", 'F'}, {"ipr", 'F'}, {"model", 's'}}},
        {"tb_onsite",
         {{"i", 'i'}, {"j", 'i'}, {"onsite", 'F'}}},
    };
    return schemas;
}

/// Validates schema line, column names, and cell types of a CSV file.
inline void check_csv_schema(const std::string& path) {
    const auto t = read_csv(path);
    const auto it = csv_schemas().find(t.schema);
    if (it == csv_schemas().end())
        throw std::runtime_error("check_csv_schema: unknown schema '" + t.schema + "' in " + path);
    if (t.version != kFormatVersion)
        throw std::runtime_error("check_csv_schema: bad version in " + path);
    const auto& spec = it->second;
    if (t.columns.size() != spec.size())
        throw std::runtime_error("check_csv_schema: column count mismatch in " + path);
    for (std::size_t i = 0; i < spec.size(); ++i)
        if (t.columns[i] != spec[i].first)
            throw std::runtime_error("check_csv_schema: column '" + t.columns[i] +
                                     "' should be '" + spec[i].first + "' in " + path);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (std::size_t c = 0; c < spec.size(); ++c) {
            const auto& cell = t.rows[r][c];
            const char ty = spec[c].second;
            if (cell.empty()) {
                if (ty == 'f' || ty == 's') continue;
                throw std::runtime_error("check_csv_schema: empty required cell at row " +
                                         std::to_string(r) + " in " + path);
            }
            try {
                std::size_t pos = 0;
                if (ty == 'i') {
                    (void)std::stol(cell, &pos);
                    if (pos != cell.size()) throw std::invalid_argument("trailing");
                } else if (ty == 'f' || ty == 'F') {
                    (void)std::stod(cell, &pos);
                    if (pos != cell.size()) throw std::invalid_argument("trailing");
                }
            } catch (const std::exception&) {
                throw std::runtime_error("check_csv_schema: bad cell '" + cell + "' at row " +
                                         std::to_string(r) + " col " + spec[c].first +
                                         " in " + path);
            }
        }
    }
}

}  // namespace lattlab
