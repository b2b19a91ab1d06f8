#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spikepack/network.hpp"

// Deterministic cycle-level model of an event-driven neuromorphic processor:
// a spike address encoder feeding an accumulating PE array and a bank of
// neuron units. Only active spikes cost encoder and PE cycles, so latency
// tracks input sparsity. LIF neuron units update once per time step;
// packed-quantizer units fire the whole train from one global potential.

namespace spikepack {

enum class NeuronKind : std::uint8_t { Lif, SpikePack };

struct SimConfig {
    std::size_t num_pes = 64;
    std::size_t neuron_units = 16;
    std::size_t detector_width = 16;
    double clock_hz = 3.0e8;
    double energy_per_mac = 4.6e-12;            // J
    double energy_per_neuron_update = 1.0e-12;  // J
    double energy_per_encode = 5.0e-13;         // J
    std::size_t pipeline_fill_cycles = 8;

    void validate() const {
        if (num_pes < 1 || neuron_units < 1 || detector_width < 1)
            throw std::invalid_argument("simulator unit counts must be at least 1");
        if (!(clock_hz > 0.0)) throw std::invalid_argument("clock must be positive");
        if (energy_per_mac < 0.0 || energy_per_neuron_update < 0.0 || energy_per_encode < 0.0)
            throw std::invalid_argument("energies must be nonnegative");
    }
};

struct LayerSimBreakdown {
    std::uint64_t active_spikes = 0;
    std::uint64_t encoder_cycles = 0;
    std::uint64_t pe_cycles = 0;
    std::uint64_t neuron_cycles = 0;
    std::uint64_t pipeline_fill_cycles = 0;
    double energy_joules = 0.0;

    std::uint64_t total_cycles() const {
        return encoder_cycles + pe_cycles + neuron_cycles + pipeline_fill_cycles;
    }
};

struct SimTrace {
    std::uint64_t total_cycles = 0;
    double latency_seconds = 0.0;
    double energy_joules = 0.0;
    std::vector<LayerSimBreakdown> layers;
};

namespace detail {

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

inline std::uint64_t layer_fan_out(const LayerSpec& layer) {
    return layer.kind == LayerKind::Dense
               ? layer.out_features
               : static_cast<std::uint64_t>(layer.oc) * layer.kh * layer.kw;
}

inline std::uint64_t active_count(const PackedSpikes& spikes) {
    std::uint64_t n = 0;
    for (std::uint64_t w : spikes.bits) n += static_cast<std::uint64_t>(std::popcount(w));
    return n;
}

inline std::uint64_t active_count(const SpikeMatrix& spikes) {
    std::uint64_t n = 0;
    for (std::uint8_t b : spikes.data) n += b;
    return n;
}

}  // namespace detail

// Cycle/energy model for one layer fed by `active_events` input events.
inline LayerSimBreakdown simulate_layer_events(std::uint64_t active_events,
                                               const LayerSpec& layer, const SimConfig& cfg,
                                               NeuronKind kind, std::size_t steps) {
    cfg.validate();
    const std::uint64_t fan_out = detail::layer_fan_out(layer);
    const std::uint64_t out_neurons = layer.out_shape().size();
    const std::uint64_t updates_per_neuron = kind == NeuronKind::Lif ? steps : 1;

    LayerSimBreakdown b;
    b.active_spikes = active_events;
    b.encoder_cycles =
        active_events == 0 ? 0 : detail::ceil_div(active_events, cfg.detector_width);
    b.pe_cycles = detail::ceil_div(active_events * fan_out, cfg.num_pes);
    b.neuron_cycles = detail::ceil_div(out_neurons, cfg.neuron_units) * updates_per_neuron;
    b.pipeline_fill_cycles = cfg.pipeline_fill_cycles;
    b.energy_joules = static_cast<double>(active_events * fan_out) * cfg.energy_per_mac +
                      static_cast<double>(out_neurons * updates_per_neuron) *
                          cfg.energy_per_neuron_update +
                      static_cast<double>(active_events) * cfg.energy_per_encode;
    return b;
}

inline SimTrace simulate_layer(const PackedSpikes& spikes, const LayerSpec& layer,
                               const SimConfig& cfg, NeuronKind kind) {
    LayerSimBreakdown b =
        simulate_layer_events(detail::active_count(spikes), layer, cfg, kind, spikes.steps);
    SimTrace trace;
    trace.layers.push_back(b);
    trace.total_cycles = b.total_cycles();
    trace.latency_seconds = static_cast<double>(trace.total_cycles) / cfg.clock_hz;
    trace.energy_joules = b.energy_joules;
    return trace;
}

inline SimTrace simulate_layer(const SpikeMatrix& spikes, const LayerSpec& layer,
                               const SimConfig& cfg, NeuronKind kind) {
    LayerSimBreakdown b =
        simulate_layer_events(detail::active_count(spikes), layer, cfg, kind, spikes.steps);
    SimTrace trace;
    trace.layers.push_back(b);
    trace.total_cycles = b.total_cycles();
    trace.latency_seconds = static_cast<double>(trace.total_cycles) / cfg.clock_hz;
    trace.energy_joules = b.energy_joules;
    return trace;
}

// Whole-network simulation over an input batch. Layers run back to back with
// no inter-layer pipelining. The analog input layer is charged densely: one
// event per input element per pass, and the LIF engine recomputes the input
// current every time step, so its layer-0 work scales with T.
inline SimTrace simulate_network(const NetworkSpec& net,
                                 const std::vector<std::vector<double>>& input_batch,
                                 const SimConfig& cfg, NeuronKind kind) {
    net.validate();
    cfg.validate();
    if (input_batch.empty()) throw std::invalid_argument("empty input batch");

    SimTrace trace;
    trace.layers.resize(net.layers.size());
    for (const std::vector<double>& input : input_batch) {
        std::vector<std::uint64_t> events(net.layers.size(), 0);
        const std::uint64_t input_events =
            kind == NeuronKind::Lif
                ? static_cast<std::uint64_t>(input.size()) * net.steps
                : static_cast<std::uint64_t>(input.size());
        events[0] = input_events;
        if (kind == NeuronKind::SpikePack) {
            const ForwardTrace fwd = network_forward(input, net);
            for (std::size_t l = 0; l + 1 < net.layers.size(); ++l)
                events[l + 1] = detail::active_count(fwd.layer_spikes[l]);
        } else {
            const LifForwardTrace fwd = network_forward_lif(input, net);
            for (std::size_t l = 0; l + 1 < net.layers.size(); ++l)
                events[l + 1] = detail::active_count(fwd.layer_spikes[l]);
        }
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            const LayerSimBreakdown b =
                simulate_layer_events(events[l], net.layers[l], cfg, kind, net.steps);
            LayerSimBreakdown& acc = trace.layers[l];
            acc.active_spikes += b.active_spikes;
            acc.encoder_cycles += b.encoder_cycles;
            acc.pe_cycles += b.pe_cycles;
            acc.neuron_cycles += b.neuron_cycles;
            acc.pipeline_fill_cycles += b.pipeline_fill_cycles;
            acc.energy_joules += b.energy_joules;
        }
    }
    for (const LayerSimBreakdown& b : trace.layers) {
        trace.total_cycles += b.total_cycles();
        trace.energy_joules += b.energy_joules;
    }
    trace.latency_seconds = static_cast<double>(trace.total_cycles) / cfg.clock_hz;
    return trace;
}

}  // namespace spikepack
