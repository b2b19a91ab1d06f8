#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "spikepack/network.hpp"

// Direct training of small dense packed-quantizer networks. The quantizer's
// Jacobian is taken as identity scaled by 1/theta (straight-through), so the
// backward pass never unrolls time. The relaxed forward replaces the
// quantizer by v_g/theta and is the reference model for gradient checks: on
// it the straight-through gradient is exact.

namespace spikepack {

enum class ForwardMode : std::uint8_t { Discrete, Relaxed };

struct GradTape {
    std::vector<std::vector<double>> inputs;  // scaled input values per layer
    ForwardMode mode = ForwardMode::Discrete;
};

struct TapedForward {
    std::vector<double> logits;
    GradTape tape;
};

inline TapedForward forward_with_tape(const std::vector<double>& input,
                                      const NetworkSpec& net, ForwardMode mode) {
    net.validate();
    for (const LayerSpec& layer : net.layers)
        if (layer.kind != LayerKind::Dense)
            throw std::invalid_argument("training supports dense layers only");
    NeuronConfig cfg;
    cfg.tau = net.tau;
    cfg.steps = net.steps;

    TapedForward out;
    out.tape.mode = mode;
    std::vector<double> values = input;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const LayerSpec& layer = net.layers[l];
        for (double& v : values) v *= layer.input_scale;
        out.tape.inputs.push_back(values);
        std::vector<double> v_g = detail::layer_potentials(layer, values);
        if (l + 1 == net.layers.size()) {
            out.logits = std::move(v_g);
            break;
        }
        if (mode == ForwardMode::Discrete) {
            NeuronConfig qcfg = cfg;
            qcfg.theta = detail::expand_theta(layer);
            values = evaluate(spikepack_quantize_parallel(v_g, qcfg));
        } else {
            values.resize(v_g.size());
            for (std::size_t i = 0; i < v_g.size(); ++i) values[i] = v_g[i] / layer.theta_out[i];
        }
    }
    return out;
}

struct Gradients {
    std::vector<std::vector<double>> weights;  // per layer, same layout as LayerSpec
    std::vector<std::vector<double>> bias;
    std::vector<double> input;
};

// Straight-through backward: dL/dv_g of the producing layer is the upstream
// gradient divided channelwise by that layer's theta; weight gradients are
// outer products with the cached scaled inputs.
inline Gradients backward(const std::vector<double>& loss_grad, const GradTape& tape,
                          const NetworkSpec& net) {
    const std::size_t L = net.layers.size();
    if (tape.inputs.size() != L) throw std::invalid_argument("tape does not match network");
    if (loss_grad.size() != net.layers.back().out_features)
        throw std::invalid_argument("loss gradient dimension mismatch");

    Gradients g;
    g.weights.resize(L);
    g.bias.resize(L);

    std::vector<double> upstream = loss_grad;  // dL/dv_g of layer l
    for (std::size_t li = L; li-- > 0;) {
        const LayerSpec& layer = net.layers[li];
        const std::vector<double>& in = tape.inputs[li];
        g.weights[li].assign(layer.weights.size(), 0.0);
        g.bias[li] = upstream;
        for (std::size_t m = 0; m < layer.out_features; ++m) {
            double* row = g.weights[li].data() + m * layer.in_features;
            for (std::size_t n = 0; n < layer.in_features; ++n)
                row[n] = upstream[m] * in[n];
        }
        std::vector<double> prev(layer.in_features, 0.0);
        for (std::size_t m = 0; m < layer.out_features; ++m) {
            const double* row = layer.weights.data() + m * layer.in_features;
            const double u = upstream[m];
            for (std::size_t n = 0; n < layer.in_features; ++n) prev[n] += row[n] * u;
        }
        for (double& p : prev) p *= layer.input_scale;
        if (li == 0) {
            g.input = std::move(prev);
        } else {
            const LayerSpec& producer = net.layers[li - 1];
            for (std::size_t n = 0; n < prev.size(); ++n)
                prev[n] /= producer.theta_out[n];
            upstream = std::move(prev);
        }
    }
    return g;
}

struct TrainHyper {
    double lr = 0.1;
    std::size_t epochs = 100;
    std::size_t batch = 16;
    std::uint64_t seed = 0;
};

struct Dataset {
    std::vector<std::vector<double>> features;
    std::vector<std::size_t> labels;

    std::size_t size() const { return features.size(); }
};

struct EpochStats {
    std::size_t epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    NetworkSpec net;
    std::vector<EpochStats> curve;
};

namespace detail {

inline double softmax_xent(const std::vector<double>& logits, std::size_t label,
                           std::vector<double>* grad) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    const double logz = std::log(z) + mx;
    if (grad) {
        grad->resize(logits.size());
        for (std::size_t i = 0; i < logits.size(); ++i)
            (*grad)[i] = std::exp(logits[i] - logz);
        (*grad)[label] -= 1.0;
    }
    return logz - logits[label];
}

}  // namespace detail

// Minibatch SGD with softmax cross-entropy on the raw output potentials.
// Deterministic for a fixed seed: shuffling, batching and the gradient
// reduction all run in a fixed order.
inline TrainResult train_toy(const NetworkSpec& initial, const Dataset& data,
                             const TrainHyper& hyper) {
    if (data.size() == 0) throw std::invalid_argument("empty dataset");
    TrainResult result;
    result.net = initial;
    result.net.validate();

    std::mt19937_64 rng(hyper.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
            const std::size_t end = std::min(order.size(), start + hyper.batch);
            Gradients acc;
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t idx = order[k];
                TapedForward fwd =
                    forward_with_tape(data.features[idx], result.net, ForwardMode::Discrete);
                std::vector<double> grad;
                const double loss =
                    detail::softmax_xent(fwd.logits, data.labels[idx], &grad);
                if (!std::isfinite(loss)) throw std::runtime_error("training diverged (loss not finite)");
                loss_sum += loss;
                const std::size_t pred = static_cast<std::size_t>(
                    std::max_element(fwd.logits.begin(), fwd.logits.end()) - fwd.logits.begin());
                if (pred == data.labels[idx]) ++correct;
                Gradients g = backward(grad, fwd.tape, result.net);
                if (acc.weights.empty()) {
                    acc = std::move(g);
                } else {
                    for (std::size_t l = 0; l < g.weights.size(); ++l) {
                        for (std::size_t i = 0; i < g.weights[l].size(); ++i)
                            acc.weights[l][i] += g.weights[l][i];
                        for (std::size_t i = 0; i < g.bias[l].size(); ++i)
                            acc.bias[l][i] += g.bias[l][i];
                    }
                }
            }
            const double scale = hyper.lr / static_cast<double>(end - start);
            for (std::size_t l = 0; l < result.net.layers.size(); ++l) {
                for (std::size_t i = 0; i < acc.weights[l].size(); ++i)
                    result.net.layers[l].weights[i] -= scale * acc.weights[l][i];
                for (std::size_t i = 0; i < acc.bias[l].size(); ++i)
                    result.net.layers[l].bias[i] -= scale * acc.bias[l][i];
            }
        }
        result.curve.push_back({epoch, loss_sum / static_cast<double>(data.size()),
                                static_cast<double>(correct) / static_cast<double>(data.size())});
    }
    return result;
}

}  // namespace spikepack
