#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "spikepack/neurons.hpp"
#include "spikepack/spike_tensor.hpp"

// Mutual-information analysis of the packed-quantizer neuron against the LIF
// baseline: closed-form estimates, a Monte Carlo entropy estimator over the
// Bernoulli-input / Gaussian-weight ensemble, and the SOP workload metric.

namespace spikepack {

enum class ThetaRule : std::uint8_t { SixSigmaOver2T, Explicit };
enum class MiModel : std::uint8_t { SpikePack, Lif };

struct MiExperimentConfig {
    std::size_t pre_neurons = 16;   // N
    std::size_t steps = 16;         // T
    double spike_prob = 0.5;        // p
    double weight_variance = 1.0;   // sigma^2
    double tau = 2.0;
    ThetaRule theta_rule = ThetaRule::SixSigmaOver2T;
    double theta_explicit = 1.0;
    double lif_theta = 1.0;
    std::size_t samples = 100000;
    std::uint64_t seed = 0;

    void validate() const {
        if (pre_neurons < 1) throw std::invalid_argument("N must be positive");
        check_time_steps(steps);
        if (!(spike_prob > 0.0 && spike_prob < 1.0))
            throw std::invalid_argument("spike probability must lie in (0, 1)");
        if (!(weight_variance > 0.0))
            throw std::invalid_argument("weight variance must be positive");
        if (!(tau > 1.0)) throw std::invalid_argument("tau must exceed 1");
    }
};

// sigma^2_vg = sigma^2 * N * p * (1 - p) * (sum_t q_t)^2
inline double analytic_variance_vg(const MiExperimentConfig& cfg) {
    cfg.validate();
    const double qsum = TemporalWeights::make(cfg.tau, cfg.steps).sum();
    return cfg.weight_variance * static_cast<double>(cfg.pre_neurons) *
           cfg.spike_prob * (1.0 - cfg.spike_prob) * qsum * qsum;
}

inline double resolve_theta(const MiExperimentConfig& cfg) {
    if (cfg.theta_rule == ThetaRule::Explicit) return cfg.theta_explicit;
    return 6.0 * std::sqrt(analytic_variance_vg(cfg)) / std::pow(2.0, static_cast<double>(cfg.steps));
}

// I_SP = 1/2 log2(12 sigma^2_vg / theta^2)
inline double analytic_mi_spikepack(const MiExperimentConfig& cfg) {
    const double theta = resolve_theta(cfg);
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
    return 0.5 * std::log2(12.0 * analytic_variance_vg(cfg) / (theta * theta));
}

// Gaussian tail function, Q(x) = P(Z > x)
inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

inline double binary_entropy_bits(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

// Independence bound I_LIF <= T * H(Q(theta / sigma_v')) with
// sigma_v'^2 = sigma^2 N p (1 - p).
inline double analytic_mi_lif_bound(const MiExperimentConfig& cfg, double theta) {
    cfg.validate();
    const double var = cfg.weight_variance * static_cast<double>(cfg.pre_neurons) *
                       cfg.spike_prob * (1.0 - cfg.spike_prob);
    const double p_spike = q_function(theta / std::sqrt(var));
    return static_cast<double>(cfg.steps) * binary_entropy_bits(p_spike);
}

// h(v_g | s) = log2 theta - log2 sqrt(12), the uniform quantization-noise term
inline double conditional_entropy_quantizer(double theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
    return std::log2(theta) - 0.5 * std::log2(12.0);
}

// SOP = fr * FLOPs * T
inline double sop(double firing_rate, double flops, std::size_t steps) {
    if (firing_rate < 0.0 || firing_rate > 1.0)
        throw std::invalid_argument("firing rate must lie in [0, 1]");
    if (flops < 0.0) throw std::invalid_argument("FLOPs must be nonnegative");
    return firing_rate * flops * static_cast<double>(steps);
}

struct MiEstimate {
    double bits = 0.0;
    double stderr_bits = 0.0;
    std::size_t samples = 0;
    std::size_t distinct_words = 0;
};

namespace detail {

// Plug-in entropy with Miller-Madow bias correction, plus the plug-in
// standard error sqrt(Var[-log2 p(X)] / n).
inline MiEstimate entropy_from_counts(const std::vector<std::uint64_t>& counts,
                                      std::size_t n) {
    double h = 0.0;
    double second = 0.0;
    std::size_t distinct = 0;
    for (std::uint64_t c : counts) {
        if (c == 0) continue;
        ++distinct;
        const double p = static_cast<double>(c) / static_cast<double>(n);
        const double l = -std::log2(p);
        h += p * l;
        second += p * l * l;
    }
    const double var = second - h * h;
    MiEstimate est;
    est.bits = h + static_cast<double>(distinct - 1) /
                       (2.0 * static_cast<double>(n) * std::numbers::ln2_v<double>);
    est.stderr_bits = std::sqrt(var > 0.0 ? var / static_cast<double>(n) : 0.0);
    est.samples = n;
    est.distinct_words = distinct;
    return est;
}

}  // namespace detail

// Monte Carlo mutual-information estimate over the ensemble: input spikes
// Bernoulli(p), weights N(0, sigma^2) redrawn per sample. Both models emit a
// deterministic output word per draw, so I = H(word), estimated by the
// bias-corrected empirical entropy of the observed words.
//
// The SpikePack quantizer window [0, (2^T - 1) theta] is centred on the
// zero-mean potential (a fixed offset of 2^(T-1) theta is added before
// quantizing); the six-sigma theta rule sizes the window to cover +-3 sigma,
// which only spans the ensemble when centred. Entropy is invariant under the
// relabeling.
inline MiEstimate monte_carlo_mi(const MiExperimentConfig& cfg, MiModel model) {
    cfg.validate();
    if (cfg.samples < 10000) throw std::invalid_argument("need at least 1e4 samples");
    if (cfg.steps > 24) throw std::invalid_argument("MC alphabet capped at T <= 24");

    std::mt19937_64 rng(cfg.seed);
    std::bernoulli_distribution spike(cfg.spike_prob);
    std::normal_distribution<double> weight(0.0, std::sqrt(cfg.weight_variance));

    const std::size_t alphabet = std::size_t{1} << cfg.steps;
    std::vector<std::uint64_t> counts(alphabet, 0);
    const TemporalWeights q = TemporalWeights::make(cfg.tau, cfg.steps);

    NeuronConfig ncfg;
    ncfg.tau = cfg.tau;
    ncfg.steps = cfg.steps;

    if (model == MiModel::SpikePack) {
        const double theta = resolve_theta(cfg);
        ncfg.theta = {theta};
        const double offset = std::pow(2.0, static_cast<double>(cfg.steps - 1)) * theta;
        std::vector<double> vg(1);
        for (std::size_t s = 0; s < cfg.samples; ++s) {
            double v = 0.0;
            for (std::size_t n = 0; n < cfg.pre_neurons; ++n) {
                double c = 0.0;
                for (std::size_t t = 0; t < cfg.steps; ++t)
                    if (spike(rng)) c += q.q[t];
                v += weight(rng) * c;
            }
            vg[0] = v + offset;
            const PackedSpikes word = spikepack_quantize_parallel(vg, ncfg);
            ++counts[word.bits[0]];
        }
    } else {
        ncfg.theta = {cfg.lif_theta};
        SpikeMatrix inputs(cfg.pre_neurons, cfg.steps);
        std::vector<double> weights(cfg.pre_neurons);
        for (std::size_t s = 0; s < cfg.samples; ++s) {
            for (auto& b : inputs.data) b = spike(rng) ? 1 : 0;
            for (auto& w : weights) w = weight(rng);
            const SpikeMatrix out = lif_run(inputs, weights, ncfg);
            std::uint64_t word = 0;
            for (std::size_t t = 0; t < cfg.steps; ++t)
                word |= static_cast<std::uint64_t>(out.at(0, t)) << (cfg.steps - 1 - t);
            ++counts[word];
        }
    }
    return detail::entropy_from_counts(counts, cfg.samples);
}

}  // namespace spikepack
