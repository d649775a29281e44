#include "cvmb/dual_homodyne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace cvmb {

namespace {

struct NeumaierSum
{
    double sum = 0.0;
    double comp = 0.0;

    void add(double x)
    {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }

    void merge(const NeumaierSum& other)
    {
        add(other.sum);
        add(other.comp);
    }

    double value() const { return sum + comp; }
};

struct ErrorAccumulator
{
    NeumaierSum e1, e2, e11, e12, e22, q, qq;
    std::uint64_t count = 0;

    void add(const Eigen::Vector2d& e)
    {
        e1.add(e(0));
        e2.add(e(1));
        e11.add(e(0) * e(0));
        e12.add(e(0) * e(1));
        e22.add(e(1) * e(1));
        const double sq = e.squaredNorm();
        q.add(sq);
        qq.add(sq * sq);
        ++count;
    }

    void merge(const ErrorAccumulator& o)
    {
        e1.merge(o.e1);
        e2.merge(o.e2);
        e11.merge(o.e11);
        e12.merge(o.e12);
        e22.merge(o.e22);
        q.merge(o.q);
        qq.merge(o.qq);
        count += o.count;
    }

    SimResult result() const
    {
        SimResult r;
        r.samples = count;
        if (count == 0)
            return r;
        const double n = static_cast<double>(count);
        r.bias << e1.value() / n, e2.value() / n;
        r.mse_matrix << e11.value() / n, e12.value() / n, e12.value() / n, e22.value() / n;
        r.mse_sum = r.mse_matrix.trace();
        if (count < 2) {
            r.std_error = std::numeric_limits<double>::infinity();
        } else {
            const double mean = q.value() / n;
            const double var = std::max(0.0, (qq.value() - n * mean * mean) / (n - 1.0));
            r.std_error = std::sqrt(var / n);
        }
        return r;
    }
};

enum Stream : std::uint32_t { kDirect = 0, kStageOne = 1, kStageTwo = 2 };

// Shot sampler: outcome = mean + L z, estimate = D^{-1} outcome + offset.
struct ShotModel
{
    Eigen::VectorXd mean;
    Eigen::MatrixXd chol;
    Eigen::Index q_index = 0;  // coordinates of (Q_out0, P_out1) in the sampled vector
    Eigen::Index p_index = 1;
    Eigen::Matrix2d inverse_jacobian;
    Eigen::Vector2d estimate_offset = Eigen::Vector2d::Zero();
    Eigen::Vector2d theta_true = Eigen::Vector2d::Zero();
};

ShotModel shot_model(const GaussianState<double>& displaced, bool full_phase_space, ProbeKind probe)
{
    ShotModel m;
    if (full_phase_space) {
        const auto state = detector_state(displaced);
        m.mean = state.mean();
        Eigen::LLT<Eigen::MatrixXd> llt(state.cov());
        if (llt.info() != Eigen::Success)
            throw DegenerateModelError("detector covariance is not positive definite");
        m.chol = llt.matrixL();
        m.q_index = 0;
        m.p_index = 3;
    } else {
        const auto dist = measure(displaced);
        m.mean = dist.mean;
        Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(dist.cov));
        if (llt.info() != Eigen::Success)
            throw DegenerateModelError("outcome covariance is not positive definite");
        m.chol = llt.matrixL();
    }
    m.inverse_jacobian = outcome_jacobian(probe).inverse();
    return m;
}

ErrorAccumulator sample_batch(const ShotModel& m, std::uint64_t seed, std::uint32_t stream, std::uint64_t batch,
                              std::uint64_t shots)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream,
                      static_cast<std::uint32_t>(batch), static_cast<std::uint32_t>(batch >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    const Eigen::Index dim = m.mean.size();
    Eigen::VectorXd z(dim), x(dim);
    ErrorAccumulator acc;
    for (std::uint64_t i = 0; i < shots; ++i) {
        for (Eigen::Index k = 0; k < dim; ++k)
            z(k) = normal(rng);
        x.noalias() = m.mean + m.chol.triangularView<Eigen::Lower>() * z;
        const Eigen::Vector2d outcome(x(m.q_index), x(m.p_index));
        const Eigen::Vector2d est = m.inverse_jacobian * outcome + m.estimate_offset;
        acc.add(est - m.theta_true);
    }
    return acc;
}

ErrorAccumulator sample(const ShotModel& m, const SimConfig& cfg, std::uint32_t stream, std::uint64_t shots)
{
    const std::uint64_t batch_size = std::max<std::uint64_t>(cfg.batch_size, 1);
    const std::uint64_t batches = (shots + batch_size - 1) / batch_size;
    std::vector<ErrorAccumulator> parts(batches);
    const auto work = [&](std::uint64_t first, std::uint64_t stride) {
        for (std::uint64_t b = first; b < batches; b += stride) {
            const std::uint64_t n = std::min(batch_size, shots - b * batch_size);
            parts[b] = sample_batch(m, cfg.seed, stream, b, n);
        }
    };
    unsigned threads = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(batches, 1)));
    if (threads <= 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(work, t, threads);
    }
    ErrorAccumulator total;
    for (const auto& p : parts)
        total.merge(p);
    return total;
}

void check_config(const SimConfig& cfg)
{
    if (!(cfg.photons >= 0.0))
        throw DomainError("thermal photon number must be non-negative");
    if (cfg.samples < 1)
        throw std::invalid_argument("at least one sample is required");
}

} // namespace

GaussianState<double> displaced_probe(double r, double photons, const Eigen::Vector2d& theta, ProbeKind probe)
{
    const auto base = probe == ProbeKind::two_mode
        ? make_probe(r, photons, ProbeKind::two_mode)
        : tensor_product(make_probe(r, photons, ProbeKind::single_mode), vacuum<double>(1));
    return displace(base, theta(0), theta(1), 0);
}

GaussianState<double> detector_state(const GaussianState<double>& displaced)
{
    return apply(beam_splitter(0.5, 0, 1, 2), displaced);
}

OutcomeDistribution measure(const GaussianState<double>& displaced)
{
    const auto out = detector_state(displaced);
    OutcomeDistribution d;
    d.mean << out.mean()(0), out.mean()(3);
    d.cov << out.cov()(0, 0), out.cov()(0, 3), out.cov()(3, 0), out.cov()(3, 3);
    return d;
}

OutcomeDistribution outcome_distribution(double r, double photons, const Eigen::Vector2d& theta, ProbeKind probe)
{
    return measure(displaced_probe(r, photons, theta, probe));
}

Eigen::Matrix2d outcome_jacobian(ProbeKind probe)
{
    Eigen::Matrix2d jac;
    jac.col(0) = outcome_distribution(0.0, 0.0, Eigen::Vector2d(1.0, 0.0), probe).mean;
    jac.col(1) = outcome_distribution(0.0, 0.0, Eigen::Vector2d(0.0, 1.0), probe).mean;
    return jac;
}

Eigen::Vector2d estimate(const Eigen::Vector2d& outcome, ProbeKind probe)
{
    return outcome_jacobian(probe).inverse() * outcome;
}

SimResult run(const SimConfig& config)
{
    check_config(config);
    if (config.mode == SimMode::two_stage)
        return run_two_stage(config, config.samples).final;
    ShotModel m = shot_model(displaced_probe(config.r, config.photons, config.theta_true, config.probe),
                             config.sample_full_phase_space, config.probe);
    m.theta_true = config.theta_true;
    return sample(m, config, kDirect, config.samples).result();
}

TwoStageResult run_two_stage(const SimConfig& config, std::uint64_t n_total)
{
    check_config(config);
    if (n_total < 4)
        throw std::invalid_argument("two-stage estimation needs at least 4 shots");
    TwoStageResult out;
    out.stage1_shots = static_cast<std::uint64_t>(std::floor(std::sqrt(static_cast<double>(n_total))));
    while (out.stage1_shots * out.stage1_shots > n_total)
        --out.stage1_shots;
    while ((out.stage1_shots + 1) * (out.stage1_shots + 1) <= n_total)
        ++out.stage1_shots;
    out.stage2_shots = n_total - out.stage1_shots;

    const auto probe_state = displaced_probe(config.r, config.photons, config.theta_true, config.probe);

    ShotModel rough = shot_model(probe_state, config.sample_full_phase_space, config.probe);
    rough.theta_true = config.theta_true;
    const SimResult stage1 = sample(rough, config, kStageOne, out.stage1_shots).result();
    out.rough_estimate = config.theta_true + stage1.bias;

    // D(-rough) leaves a small residual displacement theta - rough.
    const auto recentred = displace(probe_state, -out.rough_estimate(0), -out.rough_estimate(1), 0);
    ShotModel fine = shot_model(recentred, config.sample_full_phase_space, config.probe);
    fine.estimate_offset = out.rough_estimate;
    fine.theta_true = config.theta_true;
    out.per_shot = sample(fine, config, kStageTwo, out.stage2_shots).result();
    out.final_estimate = config.theta_true + out.per_shot.bias;

    const double n2 = static_cast<double>(out.stage2_shots);
    out.final.mse_matrix = out.per_shot.mse_matrix / n2;
    out.final.mse_sum = out.final.mse_matrix.trace();
    out.final.std_error = out.per_shot.std_error / n2;
    out.final.bias = out.final_estimate - config.theta_true;
    out.final.samples = n_total;
    return out;
}

} // namespace cvmb
