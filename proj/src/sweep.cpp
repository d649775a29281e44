#include "cvmb/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "cvmb/dual_homodyne.hpp"
#include "cvmb/holevo.hpp"

namespace cvmb {

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

double to_double(const std::string& key, const std::string& value)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size())
            return v;
    } catch (const std::exception&) {
    }
    throw UsageError("invalid number for " + key + ": '" + value + "'");
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value)
{
    try {
        std::size_t used = 0;
        if (!value.empty() && value[0] != '-') {
            const auto v = std::stoull(value, &used);
            if (used == value.size())
                return v;
        }
    } catch (const std::exception&) {
    }
    throw UsageError("invalid non-negative integer for " + key + ": '" + value + "'");
}

} // namespace

ProbeKind parse_probe(const std::string& text)
{
    if (text == "single")
        return ProbeKind::single_mode;
    if (text == "two-mode")
        return ProbeKind::two_mode;
    throw UsageError("probe must be 'single' or 'two-mode', got '" + text + "'");
}

std::string probe_name(ProbeKind probe)
{
    return probe == ProbeKind::single_mode ? "single" : "two-mode";
}

void validate(const SweepSpec& spec)
{
    if (!std::isfinite(spec.r_min) || !std::isfinite(spec.r_max))
        throw UsageError("r range must be finite");
    if (spec.r_min > spec.r_max)
        throw UsageError("r-min must not exceed r-max");
    if (spec.r_steps < 1)
        throw UsageError("r-steps must be at least 1");
    if (!(spec.photons >= 0.0) || !std::isfinite(spec.photons))
        throw UsageError("photons must be a finite non-negative number");
    if (!(spec.gate_sigma >= 0.0))
        throw UsageError("gate-sigma must be non-negative");
}

std::vector<double> r_grid(const SweepSpec& spec)
{
    validate(spec);
    std::vector<double> rs(static_cast<std::size_t>(spec.r_steps));
    if (spec.r_steps == 1) {
        rs[0] = spec.r_min;
        return rs;
    }
    const double step = (spec.r_max - spec.r_min) / (spec.r_steps - 1);
    for (int i = 0; i < spec.r_steps; ++i)
        rs[static_cast<std::size_t>(i)] = i + 1 == spec.r_steps ? spec.r_max : spec.r_min + step * i;
    return rs;
}

std::uint64_t row_seed(std::uint64_t seed, std::size_t row)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(static_cast<std::uint64_t>(row) >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

BoundSweepRow compute_row(double r, double photons, ProbeKind probe, std::uint64_t samples, std::uint64_t seed)
{
    BoundSweepRow row;
    row.r = r;
    row.photons = photons;
    const auto model = displacement_model(make_probe(r, photons, probe), 0);
    row.sld = sld_bound(model).value;
    row.rld = std::max(0.0, rld_bound(model).value);
    if (photons == 0.0)
        row.holevo = solve_analytic(probe, r).bound;
    else if (probe == ProbeKind::single_mode)
        row.holevo = closed_form_bounds(r, photons, probe).rld;
    row.dual_homodyne = dual_homodyne_mse_analytic(r, photons, probe).value;

    if (samples > 0) {
        SimConfig cfg;
        cfg.r = r;
        cfg.photons = photons;
        cfg.samples = samples;
        cfg.seed = seed;
        cfg.probe = probe;
        const SimResult res = run(cfg);
        row.empirical = res.mse_sum;
        row.std_error = res.std_error;
    }
    return row;
}

std::vector<BoundSweepRow> sweep(const SweepSpec& spec)
{
    const auto rs = r_grid(spec);
    std::vector<BoundSweepRow> rows;
    rows.reserve(rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i)
        rows.push_back(compute_row(rs[i], spec.photons, spec.probe, spec.samples, row_seed(spec.seed, i)));
    return rows;
}

std::string format_number(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", value);
    return buf;
}

std::string to_csv(const std::vector<BoundSweepRow>& rows)
{
    const auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& row : rows) {
        out += format_number(row.r) + ',' + format_number(row.photons) + ',' + format_number(row.sld) + ','
            + format_number(row.rld) + ',' + opt(row.holevo) + ',' + format_number(row.dual_homodyne) + ','
            + opt(row.empirical) + ',' + opt(row.std_error) + '\n';
    }
    return out;
}

std::vector<std::size_t> gate_failures(const std::vector<BoundSweepRow>& rows, double sigma)
{
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (!row.empirical)
            continue;
        const double se = row.std_error.value_or(0.0);
        if (std::isinf(se))
            continue;
        if (!(std::abs(*row.empirical - row.dual_homodyne) <= sigma * se))
            bad.push_back(i);
    }
    return bad;
}

std::vector<FigurePoint> figure_series(double photons, double r_min, double r_max, int steps)
{
    SweepSpec spec;
    spec.r_min = r_min;
    spec.r_max = r_max;
    spec.r_steps = steps;
    spec.photons = photons;
    std::vector<FigurePoint> points;
    for (double r : r_grid(spec)) {
        const auto model = displacement_model(make_probe(r, photons, ProbeKind::two_mode), 0);
        FigurePoint p;
        p.r = r;
        p.sld = sld_bound(model).value;
        p.rld = std::max(0.0, rld_bound(model).value);
        p.most_informative = std::max(p.sld, p.rld);
        p.dual_homodyne = dual_homodyne_mse_analytic(r, photons).value;
        points.push_back(p);
    }
    return points;
}

std::string figure_csv(const std::vector<FigurePoint>& points, double photons)
{
    std::string out = "r,N,C_S,C_R,C_max,V_DH\n";
    for (const auto& p : points)
        out += format_number(p.r) + ',' + format_number(photons) + ',' + format_number(p.sld) + ','
            + format_number(p.rld) + ',' + format_number(p.most_informative) + ',' + format_number(p.dual_homodyne)
            + '\n';
    return out;
}

std::string figure_plot_data(const std::vector<FigurePoint>& points)
{
    struct Series
    {
        const char* name;
        double FigurePoint::*field;
    };
    const Series series[] = {{"SLD", &FigurePoint::sld},
                             {"RLD", &FigurePoint::rld},
                             {"max(SLD,RLD)", &FigurePoint::most_informative},
                             {"dual homodyne", &FigurePoint::dual_homodyne}};
    std::string out;
    bool first = true;
    for (const auto& s : series) {
        if (!first)
            out += "\n\n";
        first = false;
        out += std::string("# ") + s.name + '\n';
        for (const auto& p : points)
            out += format_number(p.r) + ' ' + format_number(p.*(s.field)) + '\n';
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    f << content;
    f.close();
    if (!f)
        throw std::runtime_error("failed writing '" + path + "'");
}

std::map<std::string, std::string> parse_config(std::string_view text)
{
    std::map<std::string, std::string> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const std::string body = trim(line);
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(number) + ": expected key=value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty())
            throw UsageError("config line " + std::to_string(number) + ": empty key");
        entries[key] = trim(std::string_view(body).substr(eq + 1));
    }
    return entries;
}

void set_option(SweepSpec& spec, const std::string& key, const std::string& value)
{
    if (key == "r-min")
        spec.r_min = to_double(key, value);
    else if (key == "r-max")
        spec.r_max = to_double(key, value);
    else if (key == "r-steps") {
        const auto steps = to_unsigned(key, value);
        if (steps > 10'000'000)
            throw UsageError("r-steps is too large");
        spec.r_steps = static_cast<int>(steps);
    } else if (key == "photons")
        spec.photons = to_double(key, value);
    else if (key == "probe")
        spec.probe = parse_probe(value);
    else if (key == "samples")
        spec.samples = to_unsigned(key, value);
    else if (key == "seed")
        spec.seed = to_unsigned(key, value);
    else if (key == "gate-sigma")
        spec.gate_sigma = to_double(key, value);
    else if (key == "out")
        spec.out = value;
    else
        throw UsageError("unknown config key '" + key + "'");
}

void apply_config(SweepSpec& spec, const std::map<std::string, std::string>& entries)
{
    for (const auto& [key, value] : entries)
        set_option(spec, key, value);
}

std::string show_config(const SweepSpec& spec)
{
    std::string out;
    out += "r-min=" + format_number(spec.r_min) + '\n';
    out += "r-max=" + format_number(spec.r_max) + '\n';
    out += "r-steps=" + std::to_string(spec.r_steps) + '\n';
    out += "photons=" + format_number(spec.photons) + '\n';
    out += "probe=" + probe_name(spec.probe) + '\n';
    out += "samples=" + std::to_string(spec.samples) + '\n';
    out += "seed=" + std::to_string(spec.seed) + '\n';
    out += "gate-sigma=" + format_number(spec.gate_sigma) + '\n';
    out += "out=" + spec.out + '\n';
    return out;
}

} // namespace cvmb
