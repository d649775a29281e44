#ifndef CVMB_DUAL_HOMODYNE_HPP
#define CVMB_DUAL_HOMODYNE_HPP

/**
 * @file dual_homodyne.hpp
 * @brief Monte Carlo simulation of dual homodyne estimation of a displacement.
 *
 * The probe (two-mode squeezed thermal, or single-mode squeezed thermal with a
 * vacuum ancilla) has D(theta) applied to mode 0, is mixed on a 50:50 beam
 * splitter, and Q of output 0 and P of output 1 are measured. The outcome
 * pair is Gaussian with mean D theta, D = I / sqrt2, and fixed covariance;
 * the estimator inverts D.
 *
 * Shots are drawn in batches. Batch b uses its own std::mt19937_64 seeded
 * from (seed, stream, b), batches may run on any number of threads and are
 * merged in index order with compensated sums, so a fixed
 * (seed, samples, batch_size) gives bit-identical results. Changing
 * batch_size changes the streams and hence the draws.
 */

#include <cstdint>

#include <Eigen/Dense>

#include "cvmb/bounds.hpp"
#include "cvmb/gaussian.hpp"

namespace cvmb {

struct OutcomeDistribution
{
    Eigen::Vector2d mean;
    Eigen::Matrix2d cov;
};

/// Probe after D(theta) on mode 0; a single-mode probe gets a vacuum ancilla as mode 1.
GaussianState<double> displaced_probe(double r, double photons, const Eigen::Vector2d& theta, ProbeKind probe);

/// Two-mode state right before the homodyne detectors.
GaussianState<double> detector_state(const GaussianState<double>& displaced);

/// (Q of output 0, P of output 1) marginal of detector_state.
OutcomeDistribution measure(const GaussianState<double>& displaced);

OutcomeDistribution outcome_distribution(double r, double photons, const Eigen::Vector2d& theta,
                                         ProbeKind probe = ProbeKind::two_mode);

/// d(outcome mean)/d(theta); linear in theta, so obtained by propagating unit displacements.
Eigen::Matrix2d outcome_jacobian(ProbeKind probe = ProbeKind::two_mode);

/// Unbiased linear inversion of the outcome mean map.
Eigen::Vector2d estimate(const Eigen::Vector2d& outcome, ProbeKind probe = ProbeKind::two_mode);

enum class SimMode { direct, two_stage };

struct SimConfig
{
    double r = 0.0;
    double photons = 0.0;
    Eigen::Vector2d theta_true = Eigen::Vector2d::Zero();
    std::uint64_t samples = 100000;
    std::uint64_t seed = 1;
    SimMode mode = SimMode::direct;
    ProbeKind probe = ProbeKind::two_mode;
    bool sample_full_phase_space = false; // draw all four quadratures, then marginalize
    std::uint64_t batch_size = 65536;
    unsigned threads = 0;                  // 0: hardware concurrency
};

struct SimResult
{
    double mse_sum = 0.0;                 // trace of mse_matrix
    Eigen::Matrix2d mse_matrix = Eigen::Matrix2d::Zero();
    double std_error = 0.0;               // of mse_sum; infinite for a single shot
    Eigen::Vector2d bias = Eigen::Vector2d::Zero();
    std::uint64_t samples = 0;
};

struct TwoStageResult
{
    /// MSE statistics of the final estimate: stage-2 per-shot statistics divided by n2.
    SimResult final;
    Eigen::Vector2d rough_estimate = Eigen::Vector2d::Zero();
    Eigen::Vector2d final_estimate = Eigen::Vector2d::Zero();
    std::uint64_t stage1_shots = 0;
    std::uint64_t stage2_shots = 0;
    /// Per-shot statistics of the corrected stage-2 estimates rough + residual.
    SimResult per_shot;
};

/// Direct mode: `samples` independent shots at theta_true. Two-stage mode delegates to run_two_stage.
SimResult run(const SimConfig& config);

/**
 * floor(sqrt(n_total)) shots give a rough estimate; the probe is then displaced
 * by minus that estimate and the remaining shots estimate the residual.
 * Requires n_total >= 4.
 */
TwoStageResult run_two_stage(const SimConfig& config, std::uint64_t n_total);

} // namespace cvmb

#endif
