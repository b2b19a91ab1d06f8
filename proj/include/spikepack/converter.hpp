#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "spikepack/network.hpp"
#include "spikepack/training.hpp"

// ANN-to-SNN conversion: run a trained ReLU network over a calibration split,
// pick a per-channel activation percentile, derive thresholds so the packed
// code spans [0, percentile], and fold each layer's threshold into the next
// layer's input scale.

namespace spikepack {

enum class Activation : std::uint8_t { None, Relu };
enum class AnnLayerKind : std::uint8_t { Dense, Conv2d, BatchNorm, AvgPool };

struct AnnLayer {
    AnnLayerKind kind = AnnLayerKind::Dense;
    Activation act = Activation::None;
    LayerSpec affine;  // Dense / Conv2d payload

    // BatchNorm payload (channelwise)
    std::vector<double> bn_gamma, bn_beta, bn_mean, bn_var;
    double bn_eps = 1e-5;

    // AvgPool payload
    std::size_t pool_k = 2, pool_stride = 2;
};

struct AnnSpec {
    std::vector<AnnLayer> layers;
    Shape3 in_shape;
};

namespace detail {

inline LayerSpec avgpool_as_conv(std::size_t channels, std::size_t k, std::size_t stride,
                                 Shape3 in_shape) {
    LayerSpec conv;
    conv.kind = LayerKind::Conv2d;
    conv.oc = channels;
    conv.ic = channels;
    conv.kh = conv.kw = k;
    conv.stride = stride;
    conv.pad = 0;
    conv.in_shape = in_shape;
    conv.weights.assign(channels * channels * k * k, 0.0);
    conv.bias.assign(channels, 0.0);
    const double coeff = 1.0 / static_cast<double>(k * k);
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < k * k; ++i)
            conv.weights[(c * channels + c) * k * k + i] = coeff;
    return conv;
}

}  // namespace detail

// Collapse BatchNorm into the preceding affine layer and rewrite average
// pooling as a fixed convolution, leaving only Dense/Conv2d layers.
inline AnnSpec fold_ann(const AnnSpec& ann) {
    AnnSpec out;
    out.in_shape = ann.in_shape;
    Shape3 shape = ann.in_shape;
    for (const AnnLayer& layer : ann.layers) {
        switch (layer.kind) {
            case AnnLayerKind::Dense:
            case AnnLayerKind::Conv2d: {
                AnnLayer copy = layer;
                copy.affine.in_shape = shape;
                shape = copy.affine.out_shape();
                out.layers.push_back(std::move(copy));
                break;
            }
            case AnnLayerKind::BatchNorm: {
                if (out.layers.empty())
                    throw std::invalid_argument("batch norm must follow an affine layer");
                AnnLayer& prev = out.layers.back();
                LayerSpec& aff = prev.affine;
                const std::size_t channels = aff.out_channels();
                if (layer.bn_gamma.size() != channels)
                    throw std::invalid_argument("batch norm channel mismatch");
                const std::size_t per_channel = aff.weights.size() / channels;
                for (std::size_t c = 0; c < channels; ++c) {
                    const double scale =
                        layer.bn_gamma[c] / std::sqrt(layer.bn_var[c] + layer.bn_eps);
                    for (std::size_t i = 0; i < per_channel; ++i)
                        aff.weights[c * per_channel + i] *= scale;
                    aff.bias[c] = (aff.bias[c] - layer.bn_mean[c]) * scale + layer.bn_beta[c];
                }
                prev.act = layer.act == Activation::Relu ? Activation::Relu : prev.act;
                break;
            }
            case AnnLayerKind::AvgPool: {
                AnnLayer pool;
                pool.kind = AnnLayerKind::Conv2d;
                pool.act = layer.act;
                pool.affine =
                    detail::avgpool_as_conv(shape.c, layer.pool_k, layer.pool_stride, shape);
                shape = pool.affine.out_shape();
                out.layers.push_back(std::move(pool));
                break;
            }
        }
    }
    return out;
}

// Forward through a folded ANN; optionally captures each hidden layer's
// post-activation values.
inline std::vector<double> ann_forward(const AnnSpec& folded, const std::vector<double>& input,
                                       std::vector<std::vector<double>>* activations = nullptr) {
    std::vector<double> values = input;
    for (std::size_t l = 0; l < folded.layers.size(); ++l) {
        const AnnLayer& layer = folded.layers[l];
        if (layer.kind != AnnLayerKind::Dense && layer.kind != AnnLayerKind::Conv2d)
            throw std::invalid_argument("ann_forward expects a folded network");
        values = detail::layer_potentials(layer.affine, values);
        if (layer.act == Activation::Relu)
            for (double& v : values) v = std::max(0.0, v);
        if (activations && l + 1 < folded.layers.size()) activations->push_back(values);
    }
    return values;
}

struct ChannelCalibration {
    double max_activation = 0.0;
    double percentile_value = 0.0;
    double theta = 0.0;
    double overflow_fraction = 0.0;
    bool dead = false;
};

struct CalibrationReport {
    std::vector<std::vector<ChannelCalibration>> layers;  // hidden layers only
    std::size_t steps = 8;
    double tau = 2.0;
    double percentile = 99.9;
    double code_range = 0.0;  // sum_t tau^(T-t); 2^T - 1 for tau = 2
};

namespace detail {

// index-based percentile on a sorted copy: value at ceil(q/100 * n) - 1
inline double percentile_value(std::vector<double>& values, double q) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::size_t idx = static_cast<std::size_t>(
        std::ceil(q / 100.0 * static_cast<double>(n)));
    if (idx == 0) idx = 1;
    if (idx > n) idx = n;
    return values[idx - 1];
}

inline CalibrationReport calibrate_impl(const AnnSpec& folded,
                                        const std::vector<std::vector<double>>& calib_data,
                                        std::size_t steps, double tau, double percentile,
                                        double divisor) {
    if (calib_data.empty()) throw std::invalid_argument("calibration data is empty");
    const std::size_t hidden = folded.layers.size() - 1;

    // gather per-channel activation samples
    std::vector<std::vector<std::vector<double>>> samples(hidden);
    for (std::size_t l = 0; l < hidden; ++l)
        samples[l].resize(folded.layers[l].affine.out_channels());
    for (const std::vector<double>& x : calib_data) {
        std::vector<std::vector<double>> acts;
        ann_forward(folded, x, &acts);
        for (std::size_t l = 0; l < hidden; ++l) {
            const Shape3 os = folded.layers[l].affine.out_shape();
            const std::size_t plane = os.h * os.w;
            for (std::size_t c = 0; c < os.c; ++c)
                for (std::size_t i = 0; i < plane; ++i)
                    samples[l][c].push_back(acts[l][c * plane + i]);
        }
    }

    CalibrationReport report;
    report.steps = steps;
    report.tau = tau;
    report.percentile = percentile;
    report.code_range = divisor;
    report.layers.resize(hidden);
    for (std::size_t l = 0; l < hidden; ++l) {
        // layer-wide fallback for dead channels: smallest positive activation
        double smallest_positive = std::numeric_limits<double>::infinity();
        for (const auto& chan : samples[l])
            for (double a : chan)
                if (a > 0.0) smallest_positive = std::min(smallest_positive, a);
        if (!std::isfinite(smallest_positive)) smallest_positive = 1.0;

        report.layers[l].resize(samples[l].size());
        for (std::size_t c = 0; c < samples[l].size(); ++c) {
            ChannelCalibration& cal = report.layers[l][c];
            std::vector<double>& vals = samples[l][c];
            cal.max_activation = *std::max_element(vals.begin(), vals.end());
            if (cal.max_activation <= 0.0) {
                cal.dead = true;
                cal.percentile_value = smallest_positive;
            } else {
                cal.percentile_value = percentile_value(vals, percentile);
                if (cal.percentile_value <= 0.0) cal.percentile_value = smallest_positive;
            }
            cal.theta = cal.percentile_value / divisor;
            const double limit = divisor * cal.theta;
            std::size_t over = 0;
            for (double a : vals)
                if (a > limit) ++over;
            cal.overflow_fraction = static_cast<double>(over) / static_cast<double>(vals.size());
        }
    }
    return report;
}

}  // namespace detail

// Per-channel threshold calibration for packed-quantizer conversion:
// theta_c = percentile / sum_t tau^(T-t).
inline CalibrationReport calibrate(const AnnSpec& folded,
                                   const std::vector<std::vector<double>>& calib_data,
                                   std::size_t steps, double tau, double percentile = 99.9) {
    check_time_steps(steps);
    if (!(tau > 1.0)) throw std::invalid_argument("tau must exceed 1");
    const double range = TemporalWeights::make(tau, steps).sum();
    return detail::calibrate_impl(folded, calib_data, steps, tau, percentile, range);
}

// Rate-coding calibration for the serial LIF baseline: theta_c = percentile / T.
inline CalibrationReport calibrate_rate(const AnnSpec& folded,
                                        const std::vector<std::vector<double>>& calib_data,
                                        std::size_t steps, double percentile = 99.9) {
    check_time_steps(steps);
    return detail::calibrate_impl(folded, calib_data, steps, 2.0, percentile,
                                  static_cast<double>(steps));
}

namespace detail {

inline NetworkSpec convert_impl(const AnnSpec& folded, const CalibrationReport& report,
                                std::size_t steps, double tau) {
    if (report.layers.size() + 1 != folded.layers.size())
        throw std::invalid_argument("calibration report does not match network topology");
    NetworkSpec net;
    net.steps = steps;
    net.tau = tau;
    for (std::size_t l = 0; l < folded.layers.size(); ++l) {
        const AnnLayer& src = folded.layers[l];
        if (src.kind != AnnLayerKind::Dense && src.kind != AnnLayerKind::Conv2d)
            throw std::invalid_argument("unsupported layer kind in conversion");
        if (l + 1 < folded.layers.size() && src.act != Activation::Relu)
            throw std::invalid_argument("hidden layers must use ReLU for conversion");
        LayerSpec layer = src.affine;
        // per-channel producer thetas are folded into the consumer weights by
        // convert(); the scalar input_scale stays 1
        layer.input_scale = 1.0;
        if (l + 1 < folded.layers.size()) {
            layer.theta_out.resize(report.layers[l].size());
            for (std::size_t c = 0; c < report.layers[l].size(); ++c)
                layer.theta_out[c] = report.layers[l][c].theta;
        } else {
            layer.theta_out.clear();
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

}  // namespace detail

// Emit the runtime network: each ReLU becomes a packed quantizer with the
// calibrated per-channel theta and the producing theta is folded into the
// consuming layer's weights (channelwise), so spike counts flow between
// layers unscaled.
inline NetworkSpec convert(const AnnSpec& folded, const CalibrationReport& report,
                           std::size_t steps, double tau) {
    NetworkSpec net = detail::convert_impl(folded, report, steps, tau);
    // fold producer thetas into consumer weights channelwise
    for (std::size_t l = 1; l < net.layers.size(); ++l) {
        LayerSpec& layer = net.layers[l];
        const std::vector<ChannelCalibration>& prev = report.layers[l - 1];
        if (layer.kind == LayerKind::Dense) {
            const Shape3 in = layer.in_shape;
            const std::size_t plane = in.h * in.w;
            for (std::size_t m = 0; m < layer.out_features; ++m)
                for (std::size_t n = 0; n < layer.in_features; ++n)
                    layer.weights[m * layer.in_features + n] *= prev[n / plane].theta;
        } else {
            for (std::size_t o = 0; o < layer.oc; ++o)
                for (std::size_t i = 0; i < layer.ic; ++i)
                    for (std::size_t k = 0; k < layer.kh * layer.kw; ++k)
                        layer.weights[(o * layer.ic + i) * layer.kh * layer.kw + k] *=
                            prev[i].theta;
        }
    }
    net.validate();
    return net;
}

// LIF baseline conversion: same folding, thresholds from rate calibration.
inline NetworkSpec convert_lif(const AnnSpec& folded, const CalibrationReport& rate_report,
                               std::size_t steps, double lif_tau) {
    NetworkSpec net = convert(folded, rate_report, steps, 2.0);
    net.tau = lif_tau;
    net.steps = steps;
    return net;
}

// --- reference ANN training (source models for conversion experiments) ---

inline AnnSpec make_mlp(Shape3 in_shape, const std::vector<std::size_t>& hidden,
                        std::size_t classes, std::uint64_t seed) {
    AnnSpec ann;
    ann.in_shape = in_shape;
    std::mt19937_64 rng(seed);
    std::size_t fan_in = in_shape.size();
    std::vector<std::size_t> widths = hidden;
    widths.push_back(classes);
    Shape3 shape = in_shape;
    for (std::size_t l = 0; l < widths.size(); ++l) {
        AnnLayer layer;
        layer.kind = AnnLayerKind::Dense;
        layer.act = l + 1 < widths.size() ? Activation::Relu : Activation::None;
        layer.affine.kind = LayerKind::Dense;
        layer.affine.in_features = fan_in;
        layer.affine.out_features = widths[l];
        layer.affine.in_shape = shape;
        layer.affine.bias.assign(widths[l], 0.0);
        std::normal_distribution<double> init(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
        layer.affine.weights.resize(widths[l] * fan_in);
        for (double& w : layer.affine.weights) w = init(rng);
        shape = {widths[l], 1, 1};
        fan_in = widths[l];
        ann.layers.push_back(std::move(layer));
    }
    return ann;
}

// Plain SGD on a dense ReLU MLP with softmax cross-entropy.
inline AnnSpec train_ann(const AnnSpec& initial, const Dataset& data, const TrainHyper& hyper) {
    AnnSpec ann = initial;
    for (const AnnLayer& layer : ann.layers)
        if (layer.kind != AnnLayerKind::Dense)
            throw std::invalid_argument("train_ann supports dense MLPs only");

    std::mt19937_64 rng(hyper.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    const std::size_t L = ann.layers.size();
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
            const std::size_t end = std::min(order.size(), start + hyper.batch);
            std::vector<std::vector<double>> dW(L), db(L);
            for (std::size_t l = 0; l < L; ++l) {
                dW[l].assign(ann.layers[l].affine.weights.size(), 0.0);
                db[l].assign(ann.layers[l].affine.bias.size(), 0.0);
            }
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t idx = order[k];
                // forward, keeping pre-activation signs and inputs
                std::vector<std::vector<double>> inputs(L);
                std::vector<double> values = data.features[idx];
                for (std::size_t l = 0; l < L; ++l) {
                    inputs[l] = values;
                    values = detail::layer_potentials(ann.layers[l].affine, values);
                    if (ann.layers[l].act == Activation::Relu)
                        for (double& v : values) v = std::max(0.0, v);
                }
                std::vector<double> grad;
                detail::softmax_xent(values, data.labels[idx], &grad);
                for (std::size_t li = L; li-- > 0;) {
                    const LayerSpec& aff = ann.layers[li].affine;
                    for (std::size_t m = 0; m < aff.out_features; ++m) {
                        db[li][m] += grad[m];
                        for (std::size_t n = 0; n < aff.in_features; ++n)
                            dW[li][m * aff.in_features + n] += grad[m] * inputs[li][n];
                    }
                    if (li == 0) break;
                    std::vector<double> prev(aff.in_features, 0.0);
                    for (std::size_t m = 0; m < aff.out_features; ++m)
                        for (std::size_t n = 0; n < aff.in_features; ++n)
                            prev[n] += aff.weights[m * aff.in_features + n] * grad[m];
                    // ReLU gate of the producing layer
                    for (std::size_t n = 0; n < prev.size(); ++n)
                        if (inputs[li][n] <= 0.0) prev[n] = 0.0;
                    grad = std::move(prev);
                }
            }
            const double scale = hyper.lr / static_cast<double>(end - start);
            for (std::size_t l = 0; l < L; ++l) {
                for (std::size_t i = 0; i < dW[l].size(); ++i)
                    ann.layers[l].affine.weights[i] -= scale * dW[l][i];
                for (std::size_t i = 0; i < db[l].size(); ++i)
                    ann.layers[l].affine.bias[i] -= scale * db[l][i];
            }
        }
    }
    return ann;
}

inline double ann_accuracy(const AnnSpec& folded, const Dataset& data) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::vector<double> logits = ann_forward(folded, data.features[i]);
        const std::size_t pred = static_cast<std::size_t>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (pred == data.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace spikepack
