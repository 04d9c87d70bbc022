#include "doctest.h"

#include <sys/wait.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "iga/cli.hpp"
#include "iga/errors.hpp"

using namespace iga;

namespace {

KeyValueConfig parse_text(const std::string& text, const std::string& source = "cfg") {
    std::istringstream in(text);
    return KeyValueConfig::parse(in, source);
}

std::string config_error(const std::string& text, Experiment e = Experiment::spectrum) {
    try {
        (void)make_run_config(e, parse_text(text));
    } catch (const ConfigError& err) {
        return err.what();
    }
    return "";
}

std::string parse_error(const std::string& text) {
    try {
        (void)parse_text(text);
    } catch (const ConfigError& err) {
        return err.what();
    }
    return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

std::string csv_text(const CsvTable& t) {
    std::ostringstream out;
    write_csv(out, t);
    return out.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("iga_test_cli_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Exit status of the command-line tool with `args` appended.
int run_tool(const std::string& args) {
    const std::string command = std::string("\"") + IGA_EXPLICIT_BINARY + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("experiment names") {
    for (auto e : {Experiment::spectrum, Experiment::annulus, Experiment::project, Experiment::stability})
        CHECK(parse_experiment(to_string(e)) == e);
    CHECK_THROWS_AS(parse_experiment("spectra"), ConfigError);
}

TEST_CASE("key value parsing") {
    const auto c = parse_text("# header comment\n\n  degree = 4   # trailing\nmeshes=8, 16\n", "a.cfg");
    REQUIRE(c.find("degree") != nullptr);
    CHECK(c.find("degree")->value == "4");
    CHECK(c.find("degree")->origin == "a.cfg:3");
    CHECK(c.find("meshes")->value == "8, 16");
    CHECK(c.find("dofs") == nullptr);
    CHECK(c.entries().size() == 2);

    CHECK(contains(parse_error("degree = 3\nno equals sign\n"), "cfg:2"));
    CHECK(contains(parse_error("Degree = 3\n"), "cfg:1"));
    CHECK(contains(parse_error("degree =\n"), "cfg:1"));
    const auto dup = parse_error("degree = 3\ndofs = 40\ndegree = 4\n");
    CHECK(contains(dup, "cfg:3"));
    CHECK(contains(dup, "cfg:1"));

    auto over = parse_text("degree = 3\n");
    over.set("degree", "5", "--degree");
    CHECK(over.find("degree")->value == "5");
    CHECK(over.find("degree")->origin == "--degree");
    CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/iga.cfg"), ConfigError);
}

TEST_CASE("run configuration defaults and overrides") {
    const auto d = make_run_config(Experiment::annulus, parse_text(""));
    CHECK(d.degree == 3);
    CHECK(d.meshes == std::vector<std::size_t>{8, 16, 32});
    REQUIRE(d.mass_kinds.size() == 3);
    CHECK(d.mass_kinds[1] == MassKind::customized);
    CHECK(make_run_config(Experiment::project, parse_text("")).meshes == std::vector<std::size_t>{10, 20, 40});

    const auto c = make_run_config(Experiment::annulus,
                                   parse_text("experiment = annulus\ndegree = 5\nmeshes = 4, 8\n"
                                              "mass_kinds = rowsum_lumped\noutlier_removal = true\n"
                                              "dt_fraction = 0.25\ninitial_projection = own_mass\nperiods = 3\n"));
    CHECK(c.degree == 5);
    CHECK(c.meshes == std::vector<std::size_t>{4, 8});
    CHECK(c.mass_kinds == std::vector<MassKind>{MassKind::rowsum_lumped});
    CHECK(c.outlier_removal);
    CHECK(c.dt_fraction == 0.25);
    CHECK(c.initial_projection == InitialProjection::own_mass);
    CHECK(c.periods == 3);
}

TEST_CASE("run configuration validation names the offending entry") {
    CHECK(contains(config_error("degree = 7\n"), "cfg:1"));
    CHECK(contains(config_error("degree = 7\n"), "degree"));
    CHECK(contains(config_error("degree = three\n"), "degree"));
    CHECK(contains(config_error("\nwat = 1\n"), "cfg:2"));
    CHECK(contains(config_error("experiment = annulus\n"), "experiment"));
    CHECK(contains(config_error("dofs = 5\ndegree = 3\n"), "cfg:1"));
    CHECK(contains(config_error("dofs = 2001\n"), "dofs"));
    CHECK(config_error("dofs = 6\ndegree = 3\n").empty());
    CHECK(contains(config_error("mass_kinds = galerkin_consistent, heavy\n", Experiment::annulus), "heavy"));
    CHECK(contains(config_error("meshes = 8,,16\n", Experiment::annulus), "meshes"));
    CHECK(contains(config_error("meshes = 10, 3\n", Experiment::project), "meshes"));
    CHECK(contains(config_error("dt_fraction = 1.5\n", Experiment::annulus), "dt_fraction"));
    CHECK(contains(config_error("dt_fraction = 0\n", Experiment::annulus), "dt_fraction"));
    CHECK(contains(config_error("rk_scheme = euler\n", Experiment::annulus), "rk_scheme"));
    CHECK(contains(config_error("lumped_scheme = auto\n", Experiment::annulus), "lumped_scheme"));
    CHECK(contains(config_error("outlier_removal = maybe\n"), "outlier_removal"));
    CHECK(contains(config_error("dimension = 3\n", Experiment::stability), "dimension"));
    CHECK(contains(config_error("power_tolerance = 0.5\n", Experiment::stability), "power_tolerance"));
    CHECK(contains(config_error("periods = 0\n", Experiment::annulus), "periods"));
}

TEST_CASE("scheme selection per mass kind") {
    auto c = default_run_config(Experiment::annulus);
    CHECK(scheme_for(c, MassKind::galerkin_consistent) == "rk4");
    CHECK(scheme_for(c, MassKind::rowsum_lumped) == "central_difference");
    c.degree = 5;
    CHECK(scheme_for(c, MassKind::customized) == "rk6");
    c.rk_scheme = "rk4";
    CHECK(scheme_for(c, MassKind::customized) == "rk4");
}

TEST_CASE("csv writing") {
    CsvTable t;
    t.add_metadata("source", "unit test");
    t.header = {"name", "value"};
    t.rows = {{"plain", "1"}, {"a,b", "2"}, {"say \"hi\"", "3"}, {"two\nlines", ""}};
    CHECK(csv_text(t) ==
          "# source=unit test\nname,value\nplain,1\n\"a,b\",2\n\"say \"\"hi\"\"\",3\n\"two\nlines\",\n");
    CHECK(t.column("value") == 1);
    CHECK_THROWS_AS((void)t.column("missing"), std::out_of_range);
    const auto v = t.numbers("value");
    CHECK(v[0] == 1.0);
    CHECK(std::isnan(v[3]));
    t.rows.push_back({"short"});
    CHECK_THROWS(csv_text(t));
}

TEST_CASE("number formatting round-trips") {
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(HUGE_VAL) == "inf");
    CHECK(format_number(-HUGE_VAL) == "-inf");
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
    std::uniform_int_distribution<int> exponent(-300, 300);
    for (int i = 0; i < 2000; ++i) {
        const double x = std::ldexp(mantissa(rng), exponent(rng));
        const std::string s = format_number(x);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == x);
    }
}

TEST_CASE("string spectra") {
    auto c = default_run_config(Experiment::spectrum);
    c.degree = 2;
    const auto t = run_spectrum(c);
    CHECK(t.rows.size() == 248);
    for (const char* col : {"err_consistent", "err_customized", "err_lumped"}) CHECK(t.numbers(col)[0] <= 1e-4);
    const auto frac = t.numbers("mode_fraction");
    CHECK(std::is_sorted(frac.begin(), frac.end()));
    CHECK(frac.back() == 1.0);
    const auto exact = t.numbers("omega_exact"), omega = t.numbers("omega_customized"),
               err = t.numbers("err_customized");
    for (std::size_t j = 0; j < t.rows.size(); j += 31)
        CHECK(err[j] == doctest::Approx(std::abs(omega[j] / exact[j] - 1.0)).epsilon(1e-12));

    c.degree = 3;
    c.dofs = 60;
    CHECK(run_spectrum(c).rows.size() == 58);
    c.outlier_removal = true;
    CHECK(run_spectrum(c).rows.size() == 56);
}

TEST_CASE("projection experiment") {
    auto c = default_run_config(Experiment::project);
    const auto t = run_project(c);
    const auto col_f = t.column("function"), col_n = t.column("N");
    const auto err = t.numbers("l2_error");
    std::vector<std::pair<double, double>> sine;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r][col_f] == "sin(pi*x)") {
            sine.emplace_back(std::stod(t.rows[r][col_n]), err[r]);
        } else {
            CHECK(err[r] <= 1e-10);
        }
    }
    REQUIRE(sine.size() == 3);
    for (std::size_t i = 1; i < sine.size(); ++i) {
        const double elems_prev = sine[i - 1].first - c.degree, elems = sine[i].first - c.degree;
        CHECK(std::log(sine[i - 1].second / sine[i].second) / std::log(elems / elems_prev) >= 3.8);
    }
}

TEST_CASE("string stability experiment") {
    auto c = default_run_config(Experiment::stability);
    c.rk_scheme = "rk4";
    const auto t = run_stability(c);
    REQUIRE(t.rows.size() == 6);
    const auto kind = t.column("mass_kind"), outl = t.column("outlier_removed");
    const auto ratio = t.numbers("ratio_vs_consistent"), dt = t.numbers("dt_crit");
    const auto cmax = t.numbers("C_max_computed");
    for (double v : cmax) CHECK(v == doctest::Approx(2.828).epsilon(0.001 / 2.828));
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(t.rows[r][outl] == "false");
        CHECK(t.rows[r + 3][outl] == "true");
        CHECK(t.rows[r + 3][kind] == t.rows[r][kind]);
        CHECK(dt[r + 3] > dt[r]);
        if (t.rows[r][kind] == "galerkin_consistent") CHECK(ratio[r] == doctest::Approx(1.0));
        else CHECK(ratio[r] > 1.0);
    }
}

TEST_CASE("annulus experiment structure") {
    auto c = default_run_config(Experiment::annulus);
    c.meshes = {4, 8};
    c.mass_kinds = {MassKind::galerkin_consistent, MassKind::customized};
    const auto r = run_annulus(c);
    REQUIRE(r.per_mesh.size() == 2);
    CHECK(r.per_mesh[0].rows.size() == 2);
    REQUIRE(r.summary.rows.size() == 4);
    const auto status = r.summary.column("status"), slope = r.summary.column("slope");
    const auto err = r.summary.numbers("l2_rel_error"), angular = r.summary.numbers("n_elem_angular");
    const auto radial = r.summary.numbers("n_elem_radial");
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(r.summary.rows[i][status] == "ok");
        CHECK(angular[i] == 2.0 * radial[i]);
        CHECK(err[i] > 0.0);
        CHECK(std::isfinite(err[i]));
        CHECK(r.summary.rows[i][slope].empty() == (i < 2));
    }
    CHECK(err[2] < err[0]);
}

TEST_CASE("annulus instability is flagged, not fatal") {
    auto c = default_run_config(Experiment::annulus);
    c.meshes = {8};
    c.mass_kinds = {MassKind::rowsum_lumped};
    c.lumped_scheme = "rk2";
    c.dt_fraction = 1.0;
    c.periods = 10;
    const auto r = run_annulus(c);
    REQUIRE(r.summary.rows.size() == 1);
    const auto& row = r.summary.rows[0];
    CHECK(row[r.summary.column("status")].rfind("unstable", 0) == 0);
    CHECK(row[r.summary.column("l2_rel_error")].empty());
}

TEST_CASE("outputs are deterministic") {
    auto p = default_run_config(Experiment::project);
    CHECK(csv_text(run_project(p)) == csv_text(run_project(p)));
    auto s = default_run_config(Experiment::spectrum);
    s.dofs = 40;
    CHECK(csv_text(run_spectrum(s)) == csv_text(run_spectrum(s)));

    auto a = default_run_config(Experiment::annulus);
    a.meshes = {4};
    const auto drop_wall = [](CsvTable t) {
        const auto w = t.column("wall_seconds");
        for (auto& row : t.rows) row[w].clear();
        return csv_text(t);
    };
    CHECK(drop_wall(run_annulus(a).summary) == drop_wall(run_annulus(a).summary));
}

TEST_CASE("experiment files") {
    auto c = default_run_config(Experiment::annulus);
    c.meshes = {4, 6};
    c.mass_kinds = {MassKind::rowsum_lumped};
    c.output_dir = scratch_dir("files");
    const auto written = run_experiment(c);
    std::vector<std::string> names;
    for (const auto& path : written) {
        CHECK(std::filesystem::exists(path));
        names.push_back(path.filename().string());
    }
    CHECK(names == std::vector<std::string>{"annulus_p3_e4.csv", "annulus_p3_e6.csv", "annulus_p3_summary.csv"});
    std::ifstream in(written.back());
    std::string first;
    std::getline(in, first);
    CHECK(first.rfind("# ", 0) == 0);
    std::filesystem::remove_all(c.output_dir);
}

TEST_CASE("command-line exit codes") {
    const auto dir = scratch_dir("exit");
    const auto cfg = dir / "ok.cfg";
    std::ofstream(cfg) << "experiment = project\nmeshes = 6, 8\noutput_dir = " << (dir / "out").string() << "\n";
    const auto bad = dir / "bad.cfg";
    std::ofstream(bad) << "degree = 3\nthis line is broken\n";
    const std::string ok = "--config \"" + cfg.string() + "\"";

    CHECK(run_tool("project " + ok) == 0);
    CHECK(std::filesystem::exists(dir / "out" / "project_p3.csv"));
    CHECK(run_tool("--help") == 0);
    CHECK(run_tool("project") == 2);
    CHECK(run_tool("simulate " + ok) == 2);
    CHECK(run_tool("spectrum " + ok) == 2);
    CHECK(run_tool("project " + ok + " --degree 7") == 2);
    CHECK(run_tool("project " + ok + " --no-such-key 1") == 2);
    CHECK(run_tool("project --config \"" + bad.string() + "\"") == 2);
    CHECK(run_tool("project --config \"" + (dir / "missing.cfg").string() + "\"") == 2);

    const auto stab = dir / "stab.cfg";
    std::ofstream(stab) << "experiment = stability\ndofs = 40\npower_tolerance = 1e-300\noutput_dir = "
                        << (dir / "out").string() << "\n";
    CHECK(run_tool("stability --config \"" + stab.string() + "\"") == 3);
    std::filesystem::remove_all(dir);
}
