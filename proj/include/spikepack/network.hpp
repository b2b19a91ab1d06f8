#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spikepack/neurons.hpp"
#include "spikepack/spike_tensor.hpp"

// Feed-forward SNN engine in the compressed domain. Every layer evaluates its
// packed input once, forms v_g = W * (input_scale * value) + b, and
// re-quantizes per output channel. The final layer emits raw v_g as logits.

namespace spikepack {

enum class LayerKind : std::uint8_t { Dense, Conv2d };

struct Shape3 {
    std::size_t c = 1, h = 1, w = 1;
    std::size_t size() const { return c * h * w; }
    bool operator==(const Shape3&) const = default;
};

struct LayerSpec {
    LayerKind kind = LayerKind::Dense;

    // dense: weights out_features x in_features, row-major
    std::size_t out_features = 0;
    std::size_t in_features = 0;

    // conv2d: weights oc x ic x kh x kw
    std::size_t oc = 0, ic = 0, kh = 0, kw = 0;
    std::size_t stride = 1, pad = 0;

    std::vector<double> weights;
    std::vector<double> bias;       // out_features or oc
    std::vector<double> theta_out;  // per output channel
    double input_scale = 1.0;       // previous layer's theta, folded in

    Shape3 in_shape;

    std::size_t out_channels() const {
        return kind == LayerKind::Dense ? out_features : oc;
    }

    Shape3 out_shape() const {
        if (kind == LayerKind::Dense) return {out_features, 1, 1};
        const std::size_t oh = (in_shape.h + 2 * pad - kh) / stride + 1;
        const std::size_t ow = (in_shape.w + 2 * pad - kw) / stride + 1;
        return {oc, oh, ow};
    }

    void validate() const {
        if (kind == LayerKind::Dense) {
            if (weights.size() != out_features * in_features || bias.size() != out_features)
                throw std::invalid_argument("dense layer shape mismatch");
            if (in_shape.size() != in_features)
                throw std::invalid_argument("dense layer input shape mismatch");
        } else {
            if (weights.size() != oc * ic * kh * kw || bias.size() != oc)
                throw std::invalid_argument("conv layer shape mismatch");
            if (in_shape.c != ic) throw std::invalid_argument("conv input channel mismatch");
            if (in_shape.h + 2 * pad < kh || in_shape.w + 2 * pad < kw)
                throw std::invalid_argument("conv kernel exceeds padded input");
        }
        for (double w : weights)
            if (!std::isfinite(w)) throw std::invalid_argument("non-finite weight");
        for (double th : theta_out)
            if (!(th > 0.0)) throw std::invalid_argument("theta_out must be positive");
    }
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    std::size_t steps = 8;
    double tau = 2.0;

    void validate() const {
        if (layers.empty()) throw std::invalid_argument("network has no layers");
        check_time_steps(steps);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            layers[l].validate();
            if (l + 1 < layers.size() && layers[l].out_shape() != layers[l + 1].in_shape)
                throw std::invalid_argument("adjacent layer shapes do not compose");
            // hidden layers need a threshold per channel
            if (l + 1 < layers.size() && layers[l].theta_out.size() != layers[l].out_channels())
                throw std::invalid_argument("missing per-channel theta");
        }
    }
};

namespace detail {

// v_g for every output neuron given the already-scaled input values.
inline std::vector<double> layer_potentials(const LayerSpec& layer,
                                            const std::vector<double>& values) {
    if (values.size() != layer.in_shape.size())
        throw std::invalid_argument("layer input size mismatch");
    if (layer.kind == LayerKind::Dense) {
        std::vector<double> out(layer.out_features);
        for (std::size_t m = 0; m < layer.out_features; ++m) {
            double acc = layer.bias[m];
            const double* row = layer.weights.data() + m * layer.in_features;
            for (std::size_t n = 0; n < layer.in_features; ++n) acc += row[n] * values[n];
            out[m] = acc;
        }
        return out;
    }
    const Shape3 in = layer.in_shape;
    const Shape3 os = layer.out_shape();
    std::vector<double> out(os.size());
    const auto in_at = [&](std::size_t c, std::ptrdiff_t y, std::ptrdiff_t x) -> double {
        if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(in.h) ||
            x >= static_cast<std::ptrdiff_t>(in.w))
            return 0.0;
        return values[(c * in.h + static_cast<std::size_t>(y)) * in.w + static_cast<std::size_t>(x)];
    };
    for (std::size_t c = 0; c < os.c; ++c)
        for (std::size_t oy = 0; oy < os.h; ++oy)
            for (std::size_t ox = 0; ox < os.w; ++ox) {
                double acc = layer.bias[c];
                for (std::size_t i = 0; i < layer.ic; ++i)
                    for (std::size_t ky = 0; ky < layer.kh; ++ky)
                        for (std::size_t kx = 0; kx < layer.kw; ++kx) {
                            const std::ptrdiff_t y =
                                static_cast<std::ptrdiff_t>(oy * layer.stride + ky) -
                                static_cast<std::ptrdiff_t>(layer.pad);
                            const std::ptrdiff_t x =
                                static_cast<std::ptrdiff_t>(ox * layer.stride + kx) -
                                static_cast<std::ptrdiff_t>(layer.pad);
                            acc += layer.weights[((c * layer.ic + i) * layer.kh + ky) * layer.kw + kx] *
                                   in_at(i, y, x);
                        }
                out[(c * os.h + oy) * os.w + ox] = acc;
            }
    return out;
}

// Per-channel theta expanded to one entry per output neuron.
inline std::vector<double> expand_theta(const LayerSpec& layer) {
    const Shape3 os = layer.out_shape();
    std::vector<double> theta(os.size());
    const std::size_t plane = os.h * os.w;
    for (std::size_t c = 0; c < os.c; ++c)
        for (std::size_t i = 0; i < plane; ++i) theta[c * plane + i] = layer.theta_out[c];
    return theta;
}

inline double firing_rate_of(const PackedSpikes& packed) {
    std::uint64_t active = 0;
    for (std::uint64_t w : packed.bits) active += static_cast<std::uint64_t>(std::popcount(w));
    const std::uint64_t slots =
        static_cast<std::uint64_t>(packed.neurons()) * static_cast<std::uint64_t>(packed.steps);
    return slots == 0 ? 0.0 : static_cast<double>(active) / static_cast<double>(slots);
}

}  // namespace detail

// One compressed-domain layer step: scale, accumulate, re-quantize.
inline PackedSpikes layer_forward(const PackedSpikes& input, const LayerSpec& layer,
                                  const NeuronConfig& cfg) {
    layer.validate();
    std::vector<double> values = evaluate(input);
    for (double& v : values) v *= layer.input_scale;
    const std::vector<double> v_g = detail::layer_potentials(layer, values);
    NeuronConfig qcfg = cfg;
    qcfg.theta = detail::expand_theta(layer);
    return spikepack_quantize_parallel(v_g, qcfg);
}

struct ForwardTrace {
    std::vector<double> logits;
    std::vector<PackedSpikes> layer_spikes;  // hidden layers only
    std::vector<double> firing_rates;
};

// Full forward pass from an analog input. Hidden layers exchange packed
// words; state held between layers is one word per neuron, independent of T.
inline ForwardTrace network_forward(const std::vector<double>& input,
                                    const NetworkSpec& net,
                                    const NeuronConfig* neuron_cfg = nullptr) {
    net.validate();
    NeuronConfig cfg;
    if (neuron_cfg) cfg = *neuron_cfg;
    cfg.tau = net.tau;
    cfg.steps = net.steps;

    ForwardTrace trace;
    std::vector<double> values = input;  // scaled activation estimate
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const LayerSpec& layer = net.layers[l];
        for (double& v : values) v *= layer.input_scale;
        std::vector<double> v_g = detail::layer_potentials(layer, values);
        if (l + 1 == net.layers.size()) {
            trace.logits = std::move(v_g);
            break;
        }
        NeuronConfig qcfg = cfg;
        qcfg.theta = detail::expand_theta(layer);
        PackedSpikes spikes = spikepack_quantize_parallel(v_g, qcfg);
        trace.firing_rates.push_back(detail::firing_rate_of(spikes));
        values = evaluate(spikes);
        trace.layer_spikes.push_back(std::move(spikes));
    }
    return trace;
}

// --- serial LIF execution of a rate-coded network (simulator baseline) ---

struct LifForwardTrace {
    std::vector<double> logits;
    std::vector<SpikeMatrix> layer_spikes;
    std::vector<double> firing_rates;
};

// Runs the same topology with per-step LIF dynamics: every spike of layer l-1
// carries the value theta_{l-1}, biases are spread evenly over the T steps,
// and the output layer accumulates raw current. The network's tau is the LIF
// leak constant; thresholds must come from a rate-coding calibration.
inline LifForwardTrace network_forward_lif(const std::vector<double>& input,
                                           const NetworkSpec& net) {
    net.validate();
    const std::size_t T = net.steps;
    const std::size_t L = net.layers.size();

    std::vector<LifState> states;
    std::vector<std::vector<double>> thetas;
    for (std::size_t l = 0; l + 1 < L; ++l) {
        states.emplace_back(net.layers[l].out_shape().size());
        thetas.push_back(detail::expand_theta(net.layers[l]));
    }

    LifForwardTrace trace;
    for (std::size_t l = 0; l + 1 < L; ++l)
        trace.layer_spikes.emplace_back(net.layers[l].out_shape().size(), T);
    trace.logits.assign(net.layers.back().out_shape().size(), 0.0);

    const double step_share = 1.0 / static_cast<double>(T);

    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> values;  // input values feeding the current layer at step t
        for (std::size_t l = 0; l < L; ++l) {
            const LayerSpec& layer = net.layers[l];
            if (l == 0) {
                values = input;
                for (double& v : values) v *= layer.input_scale * step_share;
            }
            // charge injected this step: W * values + bias/T
            // (layer_potentials adds the full bias, keep only 1/T of it)
            std::vector<double> current = detail::layer_potentials(layer, values);
            {
                const Shape3 os = layer.out_shape();
                const std::size_t plane = os.h * os.w;
                for (std::size_t c = 0; c < os.c; ++c)
                    for (std::size_t i = 0; i < plane; ++i)
                        current[c * plane + i] -= layer.bias[c] * (1.0 - step_share);
            }
            if (l + 1 == L) {
                for (std::size_t i = 0; i < current.size(); ++i) trace.logits[i] += current[i];
                break;
            }
            NeuronConfig cfg;
            cfg.tau = net.tau;
            cfg.steps = T;
            cfg.theta = thetas[l];
            auto step = lif_step(states[l], current, cfg);
            states[l] = std::move(step.state);
            // spikes flow onward in count units; producer thetas are already
            // folded into the consumer weights at conversion time
            values.assign(step.spikes.size(), 0.0);
            for (std::size_t i = 0; i < step.spikes.size(); ++i) {
                trace.layer_spikes[l].set(i, t, step.spikes[i]);
                values[i] = step.spikes[i] ? 1.0 : 0.0;
            }
            if (l + 1 < L)
                for (double& v : values) v *= net.layers[l + 1].input_scale;
        }
    }
    for (std::size_t l = 0; l + 1 < L; ++l) {
        const SpikeMatrix& s = trace.layer_spikes[l];
        std::uint64_t active = 0;
        for (std::uint8_t b : s.data) active += b;
        trace.firing_rates.push_back(
            static_cast<double>(active) / static_cast<double>(s.data.size()));
    }
    return trace;
}

inline double firing_rate(const PackedSpikes& packed) { return detail::firing_rate_of(packed); }

}  // namespace spikepack
