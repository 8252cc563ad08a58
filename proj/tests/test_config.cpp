#include "lattlab/config.hpp"
#include "lattlab/csv.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lattlab;

namespace {

const char* kMinimalIni = R"(# minimal experiment
[potential]
r0 = 0.8
d = 0.03
V0 = 20
a = 2
L = 3

[disorder]
rho = 0.4
strength = 0.3
sigma = 0.2

[solver]
n_states = 50
tol = 1e-6
)";

ExperimentConfig minimal_config() {
    std::istringstream in(kMinimalIni);
    return config_from_ini(parse_ini(in));
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("INI parsing: sections, comments, whitespace") {
    std::istringstream in("[a]\n x = 1 # trailing\n\n[b c]\nkey = two words\n");
    const auto data = parse_ini(in);
    CHECK(data.at("a").at("x") == "1");
    CHECK(data.at("b c").at("key") == "two words");
}

TEST_CASE("INI parsing errors carry line numbers") {
    std::istringstream bad1("[oops\n");
    CHECK_THROWS_WITH(parse_ini(bad1, "f.ini"), Catch::Matchers::ContainsSubstring("f.ini:1"));
    std::istringstream bad2("[a]\nno equals sign\n");
    CHECK_THROWS_WITH(parse_ini(bad2, "f.ini"), Catch::Matchers::ContainsSubstring("f.ini:2"));
}

TEST_CASE("missing required keys are reported by name") {
    std::string text = kMinimalIni;
    const auto pos = text.find("V0 = 20\n");
    text.erase(pos, 8);
    std::istringstream in(text);
    const auto data = parse_ini(in);
    CHECK_THROWS_WITH(config_from_ini(data), Catch::Matchers::ContainsSubstring("'V0'"));
}

TEST_CASE("defaults fill optional sections") {
    const auto c = minimal_config();
    CHECK(c.fermi.L == 3);
    CHECK(c.seeds == std::vector<long>{1});
    CHECK(c.retention.kind == RetentionKind::All);
    CHECK(c.q_list == std::vector<long>{2, 3, 4});
    CHECK(c.hist_bins == 40);
    CHECK(c.s_max == 5.0);
    CHECK(c.output_dir == "runs");
    CHECK(c.amp_mean() == Catch::Approx(6.0));  // strength * V0
    CHECK(c.side_length() == Catch::Approx(6.0));
}

TEST_CASE("validation rejects out-of-range values") {
    auto c = minimal_config();
    c.sigma = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = minimal_config();
    c.seeds.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = minimal_config();
    c.convention = "sideways";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = minimal_config();
    c.q_list = {1};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("retention policies") {
    CHECK(RetentionPolicy::parse("all").retain(7, 1.0));
    CHECK_FALSE(RetentionPolicy::parse("none").retain(0, 1.0));
    const auto ek = RetentionPolicy::parse("every_k:3");
    CHECK(ek.retain(0, 0.0));
    CHECK_FALSE(ek.retain(1, 0.0));
    CHECK(ek.retain(6, 0.0));
    const auto win = RetentionPolicy::parse("window:1.5,2.5");
    CHECK(win.retain(0, 2.0));
    CHECK_FALSE(win.retain(0, 3.0));
    CHECK_THROWS_AS(RetentionPolicy::parse("sometimes"), ConfigError);
    CHECK_THROWS_AS(RetentionPolicy::parse("every_k:0"), ConfigError);
    // Round-trips through to_string.
    CHECK(RetentionPolicy::parse(ek.to_string()).every_k == 3);
    CHECK(RetentionPolicy::parse(win.to_string()).e_hi == 2.5);
}

TEST_CASE("grid rule: spacing bounded by well edge, bump width, wavelength") {
    auto c = minimal_config();
    const int n = c.effective_points_per_axis();
    const double h = c.side_length() / (n + 1);
    const double lambda = 2.0 * M_PI / std::sqrt(2.0 * 1.5 * c.fermi.V0);
    CHECK(h <= 1.5 * c.fermi.d);
    CHECK(h <= c.sigma / 4.0);
    CHECK(h <= lambda / 8.0);
    // One fewer point would violate the rule.
    const double h_coarser = c.side_length() / n;
    CHECK(h_coarser > std::min({1.5 * c.fermi.d, c.sigma / 4.0, lambda / 8.0}) * (1.0 - 1e-12));
    // Explicit override wins.
    c.points_per_axis = 99;
    CHECK(c.effective_points_per_axis() == 99);
}

TEST_CASE("canonical serialization is stable and order-independent") {
    const auto a = minimal_config();
    // Same physics written with different formatting and ordering.
    std::istringstream in(
        "[solver]\ntol = 1e-6\nn_states = 50\n"
        "[disorder]\nsigma = 0.2\nstrength = 0.3\nrho = 0.4\n"
        "[potential]\nL = 3\na = 2.0\nV0 = 20.0\nd = 0.03\nr0 = 0.8\n");
    const auto b = config_from_ini(parse_ini(in));
    CHECK(canonical_serialize(a) == canonical_serialize(b));
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);

    // Any physical change moves the hash.
    auto c = minimal_config();
    c.strength = 0.31;
    CHECK(config_hash(c) != config_hash(a));
    auto d = minimal_config();
    d.seeds = {1, 2};
    CHECK(config_hash(d) != config_hash(a));

    // The hash is frozen against the canonical text (FNV-1a of bytes).
    const std::string text = canonical_serialize(a);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    CHECK(config_hash(a) == std::string(buf));
}

TEST_CASE("output section does not affect the hash") {
    auto a = minimal_config();
    auto b = minimal_config();
    b.output_dir = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("CSV writer/reader round trip with schema line") {
    const auto path = temp_file("lattlab_test_energies.csv");
    {
        CsvWriter w(path.string(), "energies", {"index", "energy", "residual"});
        w.field(0).field(1.5).field(1e-9);
        w.end_row();
        w.field(1).field(0.1234567890123456789).field(2e-9);
        w.end_row();
    }
    const auto t = read_csv(path.string());
    CHECK(t.schema == "energies");
    CHECK(t.version == 1);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.as_double(1, t.column_index("energy")) == 0.1234567890123456789);
    check_csv_schema(path.string());
    std::filesystem::remove(path);
}

TEST_CASE("CSV writer rejects short rows") {
    const auto path = temp_file("lattlab_test_short.csv");
    CsvWriter w(path.string(), "energies", {"index", "energy", "residual"});
    w.field(0).field(1.0);
    CHECK_THROWS_AS(w.end_row(), std::logic_error);
    std::filesystem::remove(path);
}

TEST_CASE("schema checker rejects malformed tables") {
    const auto path = temp_file("lattlab_test_bad.csv");
    {
        std::ofstream out(path);
        out << "# schema=energies version=1\nindex,energy,residual\n0,not_a_number,1e-9\n";
    }
    CHECK_THROWS_WITH(check_csv_schema(path.string()),
                      Catch::Matchers::ContainsSubstring("not_a_number"));
    {
        std::ofstream out(path);
        out << "# schema=energies version=1\nindex,energy\n0,1.0\n";
    }
    CHECK_THROWS_WITH(check_csv_schema(path.string()),
                      Catch::Matchers::ContainsSubstring("column count"));
    {
        std::ofstream out(path);
        out << "# schema=mystery version=1\nx\n1\n";
    }
    CHECK_THROWS_WITH(check_csv_schema(path.string()),
                      Catch::Matchers::ContainsSubstring("unknown schema"));
    {
        std::ofstream out(path);
        out << "# schema=energies version=1\nindex,energy,residual\n0,,1e-9\n";
    }
    CHECK_THROWS_AS(check_csv_schema(path.string()), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("absent optional cells are allowed by the diagnostics schema") {
    const auto path = temp_file("lattlab_test_diag.csv");
    {
        CsvWriter w(path.string(), "diagnostics",
                    {"index", "energy", "e_norm", "ipr2", "ipr3", "ipr4", "t_exp", "v_exp",
                     "tv_ratio", "lambda_db", "xi_tail", "tail_r2", "scar_score", "label",
                     "model"});
        w.field(0).field(1.0).field(0.1).field(0.02).field_absent().field_absent();
        w.field(0.7).field(0.3).field(2.3333);
        w.field_absent().field_absent().field_absent().field(0.1);
        w.field(std::string("ambiguous")).field(std::string("continuum"));
        w.end_row();
    }
    CHECK_NOTHROW(check_csv_schema(path.string()));
    const auto t = read_csv(path.string());
    CHECK(t.absent(0, t.column_index("xi_tail")));
    std::filesystem::remove(path);
}
