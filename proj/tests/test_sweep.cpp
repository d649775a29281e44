#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "cvmb/sweep.hpp"

using namespace cvmb;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : text) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    return parts;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir()
{
    const fs::path dir = fs::temp_directory_path() / ("cvmb_test_sweep_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

int cli(const std::string& args)
{
    const std::string cmd = std::string("\"") + CVMB_CLI_PATH + "\" " + args;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

SweepSpec spec(double r_min, double r_max, int steps, double n, ProbeKind probe = ProbeKind::two_mode)
{
    SweepSpec s;
    s.r_min = r_min;
    s.r_max = r_max;
    s.r_steps = steps;
    s.photons = n;
    s.probe = probe;
    return s;
}

} // namespace

TEST_CASE("r_grid")
{
    const auto rs = r_grid(spec(0.0, 1.5, 16, 0.0));
    REQUIRE(rs.size() == 16);
    CHECK(rs.front() == 0.0);
    CHECK(rs.back() == 1.5);
    CHECK(rs[1] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(r_grid(spec(0.7, 0.7, 1, 0.0)) == std::vector<double>{0.7});
}

TEST_CASE("invalid grids are usage errors")
{
    CHECK_THROWS_AS(validate(spec(1.0, 0.5, 4, 0.0)), UsageError);
    CHECK_THROWS_AS(validate(spec(0.0, 1.0, 0, 0.0)), UsageError);
    CHECK_THROWS_AS(validate(spec(0.0, 1.0, 4, -0.1)), UsageError);
    CHECK_THROWS_AS(validate(spec(0.0, NAN, 4, 0.0)), UsageError);
    CHECK_NOTHROW(validate(spec(0.3, 0.3, 1, 0.0)));
}

TEST_CASE("bounds sweep at N = 0.1 matches the closed forms")
{
    const auto rows = sweep(spec(0.0, 1.5, 16, 0.1));
    REQUIRE(rows.size() == 16);
    CHECK(rows[0].sld == doctest::Approx(2.4).epsilon(1e-13));
    CHECK(rows[0].rld == doctest::Approx(4.4).epsilon(1e-13));
    for (const auto& row : rows) {
        const auto cf = closed_form_bounds(row.r, 0.1, ProbeKind::two_mode);
        CHECK(std::abs(row.sld - cf.sld) < 1e-9);
        CHECK(std::abs(row.rld - cf.rld) < 1e-9);
        CHECK(std::abs(row.dual_homodyne - 4.8 * std::exp(-2 * row.r)) < 1e-9);
        CHECK_FALSE(row.holevo.has_value());
        CHECK_FALSE(row.empirical.has_value());
        CHECK_FALSE(row.std_error.has_value());
    }
}

TEST_CASE("pure two-mode probe: Holevo bound is attained by dual homodyne")
{
    const auto rows = sweep(spec(0.5, 0.5, 1, 0.0));
    REQUIRE(rows[0].holevo.has_value());
    CHECK(std::abs(*rows[0].holevo - 4 * std::exp(-1.0)) < 1e-9);
    CHECK(std::abs(rows[0].dual_homodyne - 4 * std::exp(-1.0)) < 1e-9);
}

TEST_CASE("single-mode probe: Holevo equals RLD")
{
    const auto rows = sweep(spec(1.0, 1.0, 1, 0.0, ProbeKind::single_mode));
    const double v = 2 + 2 * std::cosh(2.0);
    CHECK(std::abs(rows[0].rld - v) < 1e-9);
    CHECK(std::abs(*rows[0].holevo - v) < 1e-9);

    for (const auto& row : sweep(spec(0.0, 1.5, 7, 0.6, ProbeKind::single_mode))) {
        REQUIRE(row.holevo.has_value());
        CHECK(std::abs(*row.holevo - row.rld) < 1e-9);
        CHECK(std::abs(row.dual_homodyne - row.rld) < 1e-9);
    }
}

TEST_CASE("rows satisfy dominance and are finite")
{
    for (auto probe : {ProbeKind::two_mode, ProbeKind::single_mode})
        for (double n : {0.0, 0.1, 2.0})
            for (const auto& row : sweep(spec(0.0, 1.5, 16, n, probe))) {
                CHECK(std::isfinite(row.sld));
                CHECK(std::isfinite(row.rld));
                CHECK(row.sld >= 0.0);
                CHECK(row.rld >= 0.0);
                if (row.holevo)
                    CHECK(*row.holevo >= std::max(row.sld, row.rld) - 1e-8);
                CHECK(row.dual_homodyne >= std::max(row.sld, row.rld) - 1e-8);
            }
}

TEST_CASE("csv formatting")
{
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.333333333333333");
    CHECK(format_number(0.0) == "0");

    const auto csv = to_csv(sweep(spec(0.0, 1.0, 3, 0.1)));
    const auto lines = split(csv, '\n');
    REQUIRE(lines.size() == 5);  // header, 3 rows, trailing empty
    CHECK(lines[0] == kCsvHeader);
    CHECK(lines[4].empty());
    for (int i = 1; i <= 3; ++i)
        CHECK(split(lines[i], ',').size() == 8);
    CHECK(lines[1] == "0,0.1,2.4,4.4,,4.8,,");
}

TEST_CASE("csv rows carry at least 12 significant digits")
{
    const auto csv = to_csv(sweep(spec(0.5, 0.5, 1, 0.1)));
    const auto fields = split(split(csv, '\n')[1], ',');
    // 2.4 / cosh 1
    CHECK(fields[2].size() >= 13);
    CHECK(std::stod(fields[2]) == doctest::Approx(1.5553302567933249).epsilon(1e-13));
}

TEST_CASE("sweep with simulation is deterministic and passes the gate")
{
    SweepSpec s = spec(0.0, 1.0, 3, 0.1);
    s.samples = 20000;
    s.seed = 8;
    const auto a = to_csv(sweep(s));
    const auto rows = sweep(s);
    CHECK(a == to_csv(rows));
    CHECK(gate_failures(rows, 4.0).empty());
    for (const auto& row : rows) {
        REQUIRE(row.empirical.has_value());
        CHECK(*row.std_error > 0.0);
    }
    CHECK(row_seed(8, 0) != row_seed(8, 1));
    CHECK(row_seed(8, 0) != row_seed(9, 0));
}

TEST_CASE("gate_failures flags rows outside the window")
{
    BoundSweepRow ok, bad, skipped, single;
    ok.dual_homodyne = bad.dual_homodyne = single.dual_homodyne = 1.0;
    ok.empirical = 1.03;
    ok.std_error = 0.01;
    bad.empirical = 1.05;
    bad.std_error = 0.01;
    single.empirical = 40.0;
    single.std_error = INFINITY;
    const auto failing = gate_failures({ok, bad, skipped, single}, 4.0);
    REQUIRE(failing.size() == 1);
    CHECK(failing[0] == 1);
}

TEST_CASE("figure series")
{
    const auto pts = figure_series(0.1, 0.0, 1.5, 151);
    REQUIRE(pts.size() == 151);
    CHECK(pts[0].sld == doctest::Approx(2.4).epsilon(1e-13));
    CHECK(pts[0].rld == doctest::Approx(4.4).epsilon(1e-13));
    for (const auto& p : pts) {
        const auto cf = closed_form_bounds(p.r, 0.1, ProbeKind::two_mode);
        CHECK(std::abs(p.sld - cf.sld) < 1e-9);
        CHECK(std::abs(p.rld - cf.rld) < 1e-9);
        CHECK(p.most_informative == std::max(p.sld, p.rld));
        CHECK(std::abs(p.dual_homodyne - 4.8 * std::exp(-2 * p.r)) < 1e-9);
    }
    // r = 0.2
    CHECK(pts[20].r == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(pts[20].dual_homodyne > pts[20].most_informative);

    const auto csv = split(figure_csv(pts, 0.1), '\n');
    CHECK(csv[0] == "r,N,C_S,C_R,C_max,V_DH");
    CHECK(csv.size() == 153);

    const auto dat = figure_plot_data(pts);
    CHECK(dat.rfind("# SLD\n", 0) == 0);
    CHECK(dat.find("\n\n\n# RLD\n") != std::string::npos);
    CHECK(dat.find("\n\n\n# dual homodyne\n") != std::string::npos);
}

TEST_CASE("config parsing")
{
    const auto entries = parse_config("# comment\n r-min = 0.2 \nphotons=0.5 # trailing\n\nprobe=single\n");
    REQUIRE(entries.size() == 3);
    CHECK(entries.at("r-min") == "0.2");
    CHECK(entries.at("photons") == "0.5");

    SweepSpec s;
    apply_config(s, entries);
    CHECK(s.r_min == 0.2);
    CHECK(s.photons == 0.5);
    CHECK(s.probe == ProbeKind::single_mode);

    CHECK_THROWS_AS(parse_config("no equals sign\n"), UsageError);
    CHECK_THROWS_AS(parse_config("=3\n"), UsageError);
    CHECK_THROWS_AS(apply_config(s, {{"colour", "red"}}), UsageError);
    CHECK_THROWS_AS(apply_config(s, {{"r-steps", "-4"}}), UsageError);
    CHECK_THROWS_AS(apply_config(s, {{"photons", "0.1x"}}), UsageError);
    CHECK_THROWS_AS(apply_config(s, {{"probe", "three-mode"}}), UsageError);
}

TEST_CASE("show_config round-trips through parse_config")
{
    SweepSpec s = spec(0.25, 1.25, 9, 0.3, ProbeKind::single_mode);
    s.samples = 1234;
    s.seed = 77;
    s.out = "rows.csv";
    SweepSpec t;
    apply_config(t, parse_config(show_config(s)));
    CHECK(show_config(t) == show_config(s));
}

TEST_CASE("cli: exit codes")
{
    const auto dir = scratch_dir();
    const std::string null = " >/dev/null 2>&1";
    CHECK(cli("bounds --r-steps 4" + null) == 0);
    CHECK(cli("bounds --r-min 2 --r-max 1" + null) == 1);
    CHECK(cli("bounds --r-steps 0" + null) == 1);
    CHECK(cli("bounds --probe three" + null) == 1);
    CHECK(cli("nonsense" + null) == 1);
    CHECK(cli(null) == 1);
    CHECK(cli("bounds --help" + null) == 0);
    CHECK(cli("simulate --samples 0" + null) == 1);
    CHECK(cli("simulate --samples 1 --r-steps 2" + null) == 0);
    CHECK(cli("simulate --samples 20000 --r-steps 2 --seed 3" + null) == 0);
    // a zero-width gate cannot be met by a noisy estimate
    CHECK(cli("simulate --samples 2000 --r-steps 2 --gate-sigma 0" + null) == 2);
    CHECK(cli("bounds --config " + (dir / "missing.cfg").string() + null) == 1);
    fs::remove_all(dir);
}

TEST_CASE("cli: bounds output and determinism")
{
    const auto dir = scratch_dir();
    const auto a = dir / "a.csv", b = dir / "b.csv";
    REQUIRE(cli("simulate --photons 0.1 --r-steps 3 --samples 5000 --seed 12 --out " + a.string()) == 0);
    REQUIRE(cli("simulate --photons 0.1 --r-steps 3 --samples 5000 --seed 12 --out " + b.string()) == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a).rfind(std::string(kCsvHeader) + "\n", 0) == 0);

    SweepSpec s = spec(0.0, 1.5, 3, 0.1);
    s.samples = 5000;
    s.seed = 12;
    CHECK(slurp(a) == to_csv(sweep(s)));
    fs::remove_all(dir);
}

TEST_CASE("cli: seed precedence")
{
    const auto dir = scratch_dir();
    const auto out = dir / "cfg.txt";
    const auto cfg = dir / "run.cfg";
    {
        std::ofstream f(cfg);
        f << "# sweep settings\nphotons = 0.25\nseed = 5\nr-steps = 4\n";
    }
    REQUIRE(cli("bounds --show-config --out - > " + out.string()) == 0);
    CHECK(slurp(out).find("seed=1\n") != std::string::npos);
    CHECK(slurp(out).find("photons=0\n") != std::string::npos);

    REQUIRE(cli("bounds --show-config > " + out.string()) == 0);
    CHECK(slurp(out).find("r-steps=16\n") != std::string::npos);

    REQUIRE(::setenv("CVMB_SEED", "42", 1) == 0);
    REQUIRE(cli("bounds --show-config > " + out.string()) == 0);
    CHECK(slurp(out).find("seed=42\n") != std::string::npos);

    REQUIRE(cli("bounds --show-config --config " + cfg.string() + " > " + out.string()) == 0);
    CHECK(slurp(out).find("seed=5\n") != std::string::npos);
    CHECK(slurp(out).find("photons=0.25\n") != std::string::npos);
    CHECK(slurp(out).find("r-steps=4\n") != std::string::npos);

    REQUIRE(cli("bounds --show-config --config " + cfg.string() + " --seed 9 --photons 0.5 > " + out.string()) == 0);
    CHECK(slurp(out).find("seed=9\n") != std::string::npos);
    CHECK(slurp(out).find("photons=0.5\n") != std::string::npos);

    REQUIRE(::setenv("CVMB_SEED", "not-a-number", 1) == 0);
    CHECK(cli("bounds --show-config >/dev/null 2>&1") == 1);
    ::unsetenv("CVMB_SEED");
    fs::remove_all(dir);
}

TEST_CASE("cli: figure1 writes csv and plot data")
{
    const auto dir = scratch_dir();
    const auto csv = dir / "fig.csv";
    REQUIRE(cli("figure1 --out " + csv.string() + " 2>/dev/null") == 0);
    const auto lines = split(slurp(csv), '\n');
    CHECK(lines[0] == "r,N,C_S,C_R,C_max,V_DH");
    CHECK(lines.size() - 2 >= 50);
    CHECK(lines[1] == "0,0.1,2.4,4.4,4.4,4.8");
    CHECK(fs::exists(dir / "fig.dat"));
    CHECK(cli("figure1 --out " + (dir / "no" / "such" / "dir.csv").string() + " >/dev/null 2>&1") == 1);
    fs::remove_all(dir);
}
