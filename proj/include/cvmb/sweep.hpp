#ifndef CVMB_SWEEP_HPP
#define CVMB_SWEEP_HPP

/**
 * @file sweep.hpp
 * @brief Grid sweeps over (r, N) producing the bound comparison table.
 *
 * CSV schema (fixed): r,N,C_S,C_R,C_H,V_DH,V_DH_emp,V_DH_se
 *
 * C_H is empty for two-mode thermal probes (N > 0), where no Holevo value is
 * known. For single-mode thermal probes C_H equals C_R because the dual
 * homodyne measurement attains the RLD bound. Empirical columns are empty
 * when no Monte Carlo samples were requested.
 */

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cvmb/bounds.hpp"

namespace cvmb {

class UsageError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct SweepSpec
{
    double r_min = 0.0;
    double r_max = 1.5;
    int r_steps = 16;
    double photons = 0.0;
    ProbeKind probe = ProbeKind::two_mode;
    std::uint64_t samples = 0;  // 0 skips the simulation
    std::uint64_t seed = 1;
    double gate_sigma = 4.0;
    std::string out;            // empty: stdout
};

void validate(const SweepSpec& spec);

/// r_steps equally spaced points from r_min to r_max inclusive.
std::vector<double> r_grid(const SweepSpec& spec);

struct BoundSweepRow
{
    double r = 0.0;
    double photons = 0.0;
    double sld = 0.0;
    double rld = 0.0;
    std::optional<double> holevo;
    double dual_homodyne = 0.0;
    std::optional<double> empirical;
    std::optional<double> std_error;
};

/// Seed of the Monte Carlo run for grid row `row`.
std::uint64_t row_seed(std::uint64_t seed, std::size_t row);

BoundSweepRow compute_row(double r, double photons, ProbeKind probe, std::uint64_t samples, std::uint64_t seed);

std::vector<BoundSweepRow> sweep(const SweepSpec& spec);

inline constexpr std::string_view kCsvHeader = "r,N,C_S,C_R,C_H,V_DH,V_DH_emp,V_DH_se";

std::string format_number(double value);
std::string to_csv(const std::vector<BoundSweepRow>& rows);

/// Indices of rows whose empirical value is further than `sigma` standard errors from V_DH.
std::vector<std::size_t> gate_failures(const std::vector<BoundSweepRow>& rows, double sigma);

struct FigurePoint
{
    double r = 0.0;
    double sld = 0.0;
    double rld = 0.0;
    double most_informative = 0.0;  // max(C_S, C_R)
    double dual_homodyne = 0.0;
};

std::vector<FigurePoint> figure_series(double photons, double r_min, double r_max, int steps);

/// Header r,N,C_S,C_R,C_max,V_DH.
std::string figure_csv(const std::vector<FigurePoint>& points, double photons);

/// Two-column blocks, one per series, separated by blank lines (gnuplot `index`).
std::string figure_plot_data(const std::vector<FigurePoint>& points);

/// Throws std::runtime_error on I/O failure.
void write_text_file(const std::string& path, const std::string& content);

/// `key = value` lines, `#` starts a comment. Throws UsageError on malformed lines.
std::map<std::string, std::string> parse_config(std::string_view text);

/// Keys: r-min r-max r-steps photons probe samples seed out gate-sigma.
void apply_config(SweepSpec& spec, const std::map<std::string, std::string>& entries);

void set_option(SweepSpec& spec, const std::string& key, const std::string& value);

std::string show_config(const SweepSpec& spec);

ProbeKind parse_probe(const std::string& text);
std::string probe_name(ProbeKind probe);

} // namespace cvmb

#endif
