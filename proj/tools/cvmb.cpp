// cvmb: bound sweeps, dual homodyne simulation and figure data.
//
//   cvmb bounds   --photons 0.1 --r-steps 16
//   cvmb simulate --photons 0 --samples 1000000 --seed 7
//   cvmb figure1  --out fig1.csv
//
// Exit codes: 0 ok, 1 usage or I/O error, 2 statistical gate failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvmb/sweep.hpp"

namespace {

enum class Command { bounds, simulate, figure1 };

// Raw flag values; only flags that were actually given override lower layers.
struct Flags
{
    std::string r_min, r_max, r_steps, photons, probe, samples, seed, gate_sigma, out, config;
    bool show_config = false;
};

void add_flags(CLI::App* cmd, Flags& f)
{
    cmd->add_option("--r-min", f.r_min, "Smallest squeezing parameter");
    cmd->add_option("--r-max", f.r_max, "Largest squeezing parameter");
    cmd->add_option("--r-steps", f.r_steps, "Number of grid points");
    cmd->add_option("--photons", f.photons, "Thermal photon number N");
    cmd->add_option("--probe", f.probe, "Probe kind")->check(CLI::IsMember({"single", "two-mode"}));
    cmd->add_option("--samples", f.samples, "Monte Carlo shots per grid point (0 skips)");
    cmd->add_option("--seed", f.seed, "RNG seed (falls back to $CVMB_SEED)");
    cmd->add_option("--gate-sigma", f.gate_sigma, "Statistical gate width in standard errors");
    cmd->add_option("--out", f.out, "Output path (default: stdout; figure1: figure1.csv)");
    cmd->add_option("--config", f.config, "key=value config file");
    cmd->add_flag("--show-config", f.show_config, "Print the resolved configuration and exit");
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw cvmb::UsageError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

cvmb::SweepSpec resolve(Command cmd, const Flags& f)
{
    cvmb::SweepSpec spec;
    if (cmd == Command::figure1) {
        spec.photons = 0.1;
        spec.r_steps = 151;
        spec.out = "figure1.csv";
    } else if (cmd == Command::simulate) {
        spec.samples = 1000000;
    }
    if (const char* env = std::getenv("CVMB_SEED"); env && *env)
        cvmb::set_option(spec, "seed", env);
    if (!f.config.empty())
        cvmb::apply_config(spec, cvmb::parse_config(read_file(f.config)));

    const std::pair<const char*, const std::string*> given[] = {
        {"r-min", &f.r_min},     {"r-max", &f.r_max}, {"r-steps", &f.r_steps},       {"photons", &f.photons},
        {"probe", &f.probe},     {"samples", &f.samples}, {"seed", &f.seed}, {"gate-sigma", &f.gate_sigma},
        {"out", &f.out}};
    for (const auto& [key, value] : given)
        if (!value->empty())
            cvmb::set_option(spec, key, *value);

    cvmb::validate(spec);
    if (cmd == Command::simulate && spec.samples < 1)
        throw cvmb::UsageError("simulate needs --samples >= 1");
    return spec;
}

void emit(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-")
        std::fwrite(text.data(), 1, text.size(), stdout);
    else
        cvmb::write_text_file(path, text);
}

std::string plot_data_path(const std::string& csv_path)
{
    const auto slash = csv_path.find_last_of('/');
    const auto dot = csv_path.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
        return csv_path.substr(0, dot) + ".dat";
    return csv_path + ".dat";
}

int run(Command cmd, const cvmb::SweepSpec& spec)
{
    if (cmd == Command::figure1) {
        if (spec.out.empty() || spec.out == "-")
            throw cvmb::UsageError("figure1 needs a file path for --out");
        const auto points = cvmb::figure_series(spec.photons, spec.r_min, spec.r_max, spec.r_steps);
        cvmb::write_text_file(spec.out, cvmb::figure_csv(points, spec.photons));
        const std::string dat = plot_data_path(spec.out);
        cvmb::write_text_file(dat, cvmb::figure_plot_data(points));
        std::fprintf(stderr, "wrote %s and %s\n", spec.out.c_str(), dat.c_str());
        return 0;
    }

    const auto rows = cvmb::sweep(spec);
    emit(spec.out, cvmb::to_csv(rows));

    const auto bad = cvmb::gate_failures(rows, spec.gate_sigma);
    for (auto i : bad) {
        const auto& row = rows[i];
        std::fprintf(stderr, "gate failure: r=%.15g N=%.15g V_DH=%.15g emp=%.15g se=%.15g\n", row.r, row.photons,
                     row.dual_homodyne, *row.empirical, *row.std_error);
    }
    return bad.empty() ? 0 : 2;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cramer-Rao bounds and dual homodyne simulation for displacement estimation"};
    app.require_subcommand(1);
    Flags flags;
    Command cmd = Command::bounds;
    auto* bounds = app.add_subcommand("bounds", "SLD, RLD and Holevo bounds with the dual homodyne MSE");
    auto* simulate = app.add_subcommand("simulate", "As bounds, plus Monte Carlo dual homodyne MSE");
    auto* figure = app.add_subcommand("figure1", "Bound and MSE series at N=0.1 as CSV and plot data");
    for (auto* sub : {bounds, simulate, figure})
        add_flags(sub, flags);
    bounds->callback([&] { cmd = Command::bounds; });
    simulate->callback([&] { cmd = Command::simulate; });
    figure->callback([&] { cmd = Command::figure1; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const auto spec = resolve(cmd, flags);
        if (flags.show_config) {
            std::fputs(cvmb::show_config(spec).c_str(), stdout);
            return 0;
        }
        return run(cmd, spec);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
