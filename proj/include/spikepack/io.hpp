#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "spikepack/converter.hpp"
#include "spikepack/network.hpp"
#include "spikepack/neurosim.hpp"
#include "spikepack/training.hpp"

// File formats: the little-endian network container (shared by ANN and SNN,
// activation-tagged per layer), the CSV dataset layout (label, features...),
// and JSON report emitters.

namespace spikepack {

inline constexpr std::uint32_t kContainerMagic = 0x4B505053;  // "SPPK"
inline constexpr std::uint16_t kContainerVersion = 1;

namespace detail {

inline void write_f32_array(std::ostream& os, const std::vector<double>& values) {
    write_le<std::uint64_t>(os, values.size());
    for (double v : values) write_le<float>(os, static_cast<float>(v));
}

inline std::vector<double> read_f32_array(std::istream& is) {
    const auto n = read_le<std::uint64_t>(is);
    std::vector<double> out(n);
    for (auto& v : out) v = static_cast<double>(read_le<float>(is));
    return out;
}

inline void write_shape(std::ostream& os, Shape3 s) {
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.c));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.h));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.w));
}

inline Shape3 read_shape(std::istream& is) {
    Shape3 s;
    s.c = read_le<std::uint32_t>(is);
    s.h = read_le<std::uint32_t>(is);
    s.w = read_le<std::uint32_t>(is);
    return s;
}

inline void write_layer(std::ostream& os, const LayerSpec& layer, Activation act) {
    write_le<std::uint8_t>(os, layer.kind == LayerKind::Dense ? 0 : 1);
    write_le<std::uint8_t>(os, act == Activation::Relu ? 1 : 0);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(layer.out_features));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(layer.in_features));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(layer.oc));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(layer.ic));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(layer.kh));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(layer.kw));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(layer.stride));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(layer.pad));
    write_shape(os, layer.in_shape);
    write_le<double>(os, layer.input_scale);
    write_f32_array(os, layer.weights);
    write_f32_array(os, layer.bias);
    write_f32_array(os, layer.theta_out);
}

inline LayerSpec read_layer(std::istream& is, Activation* act) {
    LayerSpec layer;
    layer.kind = read_le<std::uint8_t>(is) == 0 ? LayerKind::Dense : LayerKind::Conv2d;
    const auto act_raw = read_le<std::uint8_t>(is);
    if (act) *act = act_raw == 1 ? Activation::Relu : Activation::None;
    layer.out_features = read_le<std::uint32_t>(is);
    layer.in_features = read_le<std::uint32_t>(is);
    layer.oc = read_le<std::uint32_t>(is);
    layer.ic = read_le<std::uint32_t>(is);
    layer.kh = read_le<std::uint32_t>(is);
    layer.kw = read_le<std::uint32_t>(is);
    layer.stride = read_le<std::uint32_t>(is);
    layer.pad = read_le<std::uint32_t>(is);
    layer.in_shape = read_shape(is);
    layer.input_scale = read_le<double>(is);
    layer.weights = read_f32_array(is);
    layer.bias = read_f32_array(is);
    layer.theta_out = read_f32_array(is);
    return layer;
}

inline void write_container_header(std::ostream& os, std::uint8_t kind_flag,
                                   std::size_t steps, double tau, std::size_t layers) {
    write_le<std::uint32_t>(os, kContainerMagic);
    write_le<std::uint16_t>(os, kContainerVersion);
    write_le<std::uint8_t>(os, kind_flag);
    write_le<std::uint8_t>(os, static_cast<std::uint8_t>(steps));
    write_le<double>(os, tau);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(layers));
}

inline std::uint8_t read_container_header(std::istream& is, std::size_t* steps, double* tau,
                                          std::uint32_t* layers) {
    if (read_le<std::uint32_t>(is) != kContainerMagic)
        throw std::runtime_error("not a network container (bad magic)");
    if (read_le<std::uint16_t>(is) != kContainerVersion)
        throw std::runtime_error("unsupported container version");
    const auto kind_flag = read_le<std::uint8_t>(is);
    *steps = read_le<std::uint8_t>(is);
    *tau = read_le<double>(is);
    *layers = read_le<std::uint32_t>(is);
    return kind_flag;
}

}  // namespace detail

inline void save_network(const std::string& path, const NetworkSpec& net) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    detail::write_container_header(os, 0, net.steps, net.tau, net.layers.size());
    for (const LayerSpec& layer : net.layers) detail::write_layer(os, layer, Activation::None);
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline NetworkSpec load_network(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::size_t steps;
    double tau;
    std::uint32_t layers;
    if (detail::read_container_header(is, &steps, &tau, &layers) != 0)
        throw std::runtime_error("container holds an ANN, expected an SNN: " + path);
    NetworkSpec net;
    net.steps = steps;
    net.tau = tau;
    for (std::uint32_t l = 0; l < layers; ++l)
        net.layers.push_back(detail::read_layer(is, nullptr));
    net.validate();
    return net;
}

// ANN containers hold folded networks (dense/conv only), activation-tagged.
inline void save_ann(const std::string& path, const AnnSpec& ann) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    detail::write_container_header(os, 1, 1, 2.0, ann.layers.size());
    detail::write_shape(os, ann.in_shape);
    for (const AnnLayer& layer : ann.layers) {
        if (layer.kind != AnnLayerKind::Dense && layer.kind != AnnLayerKind::Conv2d)
            throw std::invalid_argument("fold the ANN before saving");
        detail::write_layer(os, layer.affine, layer.act);
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline AnnSpec load_ann(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::size_t steps;
    double tau;
    std::uint32_t layers;
    if (detail::read_container_header(is, &steps, &tau, &layers) != 1)
        throw std::runtime_error("container holds an SNN, expected an ANN: " + path);
    AnnSpec ann;
    ann.in_shape = detail::read_shape(is);
    for (std::uint32_t l = 0; l < layers; ++l) {
        AnnLayer layer;
        layer.affine = detail::read_layer(is, &layer.act);
        layer.kind = layer.affine.kind == LayerKind::Dense ? AnnLayerKind::Dense
                                                           : AnnLayerKind::Conv2d;
        ann.layers.push_back(std::move(layer));
    }
    return ann;
}

// --- CSV dataset: one row per sample, "label,feature,feature,..." ---

inline Dataset load_csv_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    Dataset data;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',')) continue;
        data.labels.push_back(static_cast<std::size_t>(std::stoul(cell)));
        std::vector<double> features;
        while (std::getline(row, cell, ',')) features.push_back(std::stod(cell));
        data.features.push_back(std::move(features));
    }
    return data;
}

inline void save_csv_dataset(const std::string& path, const Dataset& data) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.precision(17);
    for (std::size_t i = 0; i < data.size(); ++i) {
        os << data.labels[i];
        for (double f : data.features[i]) os << ',' << f;
        os << '\n';
    }
}

// --- JSON reports ---

inline nlohmann::ordered_json sim_trace_json(const SimTrace& trace) {
    nlohmann::ordered_json j;
    j["total_cycles"] = trace.total_cycles;
    j["latency_seconds"] = trace.latency_seconds;
    j["energy_joules"] = trace.energy_joules;
    j["layers"] = nlohmann::ordered_json::array();
    for (const LayerSimBreakdown& b : trace.layers) {
        nlohmann::ordered_json l;
        l["active_spikes"] = b.active_spikes;
        l["encoder_cycles"] = b.encoder_cycles;
        l["pe_cycles"] = b.pe_cycles;
        l["neuron_cycles"] = b.neuron_cycles;
        l["pipeline_fill_cycles"] = b.pipeline_fill_cycles;
        l["energy_joules"] = b.energy_joules;
        j["layers"].push_back(std::move(l));
    }
    return j;
}

inline nlohmann::ordered_json calibration_report_json(const CalibrationReport& report) {
    nlohmann::ordered_json j;
    j["steps"] = report.steps;
    j["tau"] = report.tau;
    j["percentile"] = report.percentile;
    j["code_range"] = report.code_range;
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& layer : report.layers) {
        nlohmann::ordered_json channels = nlohmann::ordered_json::array();
        for (const ChannelCalibration& c : layer) {
            nlohmann::ordered_json ch;
            ch["max_activation"] = c.max_activation;
            ch["percentile_value"] = c.percentile_value;
            ch["theta"] = c.theta;
            ch["overflow_fraction"] = c.overflow_fraction;
            ch["dead"] = c.dead;
            channels.push_back(std::move(ch));
        }
        j["layers"].push_back(std::move(channels));
    }
    return j;
}

inline void save_loss_curve_csv(const std::string& path, const std::vector<EpochStats>& curve) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.precision(17);
    os << "epoch,loss,accuracy\n";
    for (const EpochStats& e : curve) os << e.epoch << ',' << e.loss << ',' << e.accuracy << '\n';
}

}  // namespace spikepack
