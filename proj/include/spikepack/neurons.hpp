#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spikepack/spike_tensor.hpp"

// The three neuron evaluators: reference LIF, SpikePack serial decoder and
// SpikePack parallel quantizer. The serial decoder threads a membrane state
// through T steps; the parallel quantizer derives all T output bits from the
// global potential in one pass. In greedy-floor mode the two agree bit for
// bit on every input.

namespace spikepack {

enum class Comparator : std::uint8_t { AtLeast, StrictlyGreater };
enum class Rounding : std::uint8_t { GreedyFloor, Nearest };

struct NeuronConfig {
    double tau = 2.0;
    std::vector<double> theta{1.0};  // scalar (size 1) or per-channel
    std::size_t steps = 8;
    Comparator comparator = Comparator::AtLeast;
    Rounding rounding = Rounding::GreedyFloor;

    double theta_for(std::size_t i) const {
        return theta.size() == 1 ? theta[0] : theta[i];
    }

    void validate() const {
        if (!(tau > 1.0)) throw std::invalid_argument("tau must exceed 1");
        check_time_steps(steps);
        if (theta.empty()) throw std::invalid_argument("theta must be nonempty");
        for (double th : theta)
            if (!(th > 0.0)) throw std::invalid_argument("theta must be positive");
    }
};

// Membrane state carried between LIF steps.
struct LifState {
    std::vector<double> v;
    std::vector<std::uint8_t> last_spike;

    explicit LifState(std::size_t n = 0) : v(n, 0.0), last_spike(n, 0) {}

    std::size_t size() const { return v.size(); }
    std::size_t footprint_bytes() const {
        return v.capacity() * sizeof(double) + last_spike.capacity() * sizeof(std::uint8_t);
    }
};

struct LifStepResult {
    LifState state;
    std::vector<std::uint8_t> spikes;
};

// One LIF update: v <- v/tau + input - theta * s_prev, spike where v > theta
// (strict comparison, soft reset by subtraction on the next step).
inline LifStepResult lif_step(const LifState& state,
                              const std::vector<double>& input_current,
                              const NeuronConfig& cfg) {
    if (input_current.size() != state.size())
        throw std::invalid_argument("lif_step: input dimension mismatch");
    LifStepResult out{state, std::vector<std::uint8_t>(state.size(), 0)};
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double theta = cfg.theta_for(i);
        const double v = state.v[i] / cfg.tau + input_current[i] - theta * state.last_spike[i];
        const std::uint8_t s = v > theta ? 1 : 0;
        out.state.v[i] = v;
        out.state.last_spike[i] = s;
        out.spikes[i] = s;
    }
    return out;
}

// Run one post-synaptic LIF neuron over a full input window. This is the
// O(T) serial baseline: state is threaded step by step and the input spike
// matrix must be held for the whole window.
inline SpikeMatrix lif_run(const SpikeMatrix& inputs,
                           const std::vector<double>& weights,
                           const NeuronConfig& cfg) {
    if (weights.size() != inputs.neurons)
        throw std::invalid_argument("lif_run: weight dimension mismatch");
    SpikeMatrix out(1, inputs.steps);
    LifState state(1);
    for (std::size_t t = 0; t < inputs.steps; ++t) {
        double current = 0.0;
        for (std::size_t n = 0; n < inputs.neurons; ++n)
            if (inputs.at(n, t)) current += weights[n];
        auto step = lif_step(state, {current}, cfg);
        state = std::move(step.state);
        out.set(0, t, step.spikes[0]);
    }
    return out;
}

namespace detail {

inline bool fires(double v, double threshold, Comparator cmp) {
    return cmp == Comparator::AtLeast ? v >= threshold : v > threshold;
}

inline void check_finite(const std::vector<double>& v_g) {
    for (double v : v_g)
        if (!std::isfinite(v)) throw std::domain_error("global potential must be finite");
}

}  // namespace detail

// Serial decode of the global potential: dynamic thresholds
// theta_t = theta * tau^(T-t), fire-then-subtract, most significant step
// first. Potentials are normalised by theta once so the threshold ladder is
// the exact power table shared with the parallel quantizer.
inline PackedSpikes spikepack_decode_serial(const std::vector<double>& v_g,
                                            const NeuronConfig& cfg) {
    cfg.validate();
    detail::check_finite(v_g);
    const TemporalWeights ladder = TemporalWeights::make(cfg.tau, cfg.steps);
    PackedSpikes out;
    out.steps = cfg.steps;
    out.tau = cfg.tau;
    out.bits.resize(v_g.size(), 0);
    for (std::size_t i = 0; i < v_g.size(); ++i) {
        double remaining = v_g[i] / cfg.theta_for(i);
        std::uint64_t word = 0;
        std::uint8_t prev = 0;
        for (std::size_t t = 0; t < cfg.steps; ++t) {
            // reset indexed by the previous step's spike, then compare
            if (prev) remaining -= ladder.q[t - 1];
            const std::uint8_t s =
                detail::fires(remaining, ladder.q[t], cfg.comparator) ? 1 : 0;
            word |= static_cast<std::uint64_t>(s) << (cfg.steps - 1 - t);
            prev = s;
        }
        out.bits[i] = word;
    }
    return out;
}

// Parallel quantization: all T bits of the output word derived from
// v_g in one pass with no membrane state. Greedy-floor extracts the digits of
// v_g/theta in the tau-power basis; for tau = 2 that is the binary expansion
// of floor(v_g/theta) clamped to [0, 2^T - 1]. Nearest mode shifts by half a
// step first (round-half-up for tau = 2).
inline PackedSpikes spikepack_quantize_parallel(const std::vector<double>& v_g,
                                                const NeuronConfig& cfg) {
    cfg.validate();
    detail::check_finite(v_g);
    const TemporalWeights ladder = TemporalWeights::make(cfg.tau, cfg.steps);
    PackedSpikes out;
    out.steps = cfg.steps;
    out.tau = cfg.tau;
    out.bits.resize(v_g.size(), 0);
    for (std::size_t i = 0; i < v_g.size(); ++i) {
        double x = v_g[i] / cfg.theta_for(i);
        if (cfg.rounding == Rounding::Nearest) x += 0.5;
        std::uint64_t word = 0;
        for (std::size_t t = 0; t < cfg.steps; ++t) {
            if (detail::fires(x, ladder.q[t], cfg.comparator)) {
                word |= std::uint64_t{1} << (cfg.steps - 1 - t);
                x -= ladder.q[t];
            }
        }
        out.bits[i] = word;
    }
    return out;
}

}  // namespace spikepack
