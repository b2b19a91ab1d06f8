#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

// Bit-packed spike representation. A binary spike train of T steps is stored
// as one 64-bit word per neuron, with time step 1 in the most significant used
// bit (position T-1). Read as an unsigned integer the word equals the
// tau-weighted sum of the train when tau = 2.

namespace spikepack {

inline constexpr std::size_t kMaxTimeSteps = 64;

// Dense binary spike record, N pre-synaptic neurons x T time steps.
struct SpikeMatrix {
    std::size_t neurons = 0;
    std::size_t steps = 0;
    std::vector<std::uint8_t> data;  // row-major, neurons x steps, each 0 or 1

    SpikeMatrix() = default;
    SpikeMatrix(std::size_t n, std::size_t t)
        : neurons(n), steps(t), data(n * t, 0) {}

    std::uint8_t at(std::size_t n, std::size_t t) const {
        return data[n * steps + t];
    }
    void set(std::size_t n, std::size_t t, std::uint8_t v) {
        data[n * steps + t] = v;
    }

    // Heap bytes held by the record; grows linearly in steps.
    std::size_t footprint_bytes() const { return data.capacity() * sizeof(std::uint8_t); }
};

// q_t = tau^(T-t), the descending threshold/weight ladder of the packed code.
struct TemporalWeights {
    double tau = 2.0;
    std::vector<double> q;  // q[t-1] = tau^(T-t), q.back() == 1

    static TemporalWeights make(double tau, std::size_t steps) {
        TemporalWeights w;
        w.tau = tau;
        w.q.resize(steps);
        double p = 1.0;
        for (std::size_t k = 0; k < steps; ++k) {
            w.q[steps - 1 - k] = p;
            p *= tau;
        }
        return w;
    }

    double sum() const {
        double s = 0.0;
        // ascending order keeps the small terms from being absorbed
        for (std::size_t i = q.size(); i-- > 0;) s += q[i];
        return s;
    }
};

// Per-neuron compressed spike words plus the (tau, T) metadata needed to
// interpret them. Storage per neuron is one word regardless of T.
struct PackedSpikes {
    std::vector<std::uint64_t> bits;
    std::size_t steps = 0;
    double tau = 2.0;

    std::size_t neurons() const { return bits.size(); }

    std::size_t footprint_bytes() const { return bits.capacity() * sizeof(std::uint64_t); }
};

inline void check_time_steps(std::size_t steps) {
    if (steps < 1 || steps > kMaxTimeSteps)
        throw std::invalid_argument("time steps must be in [1, 64]");
}

inline PackedSpikes pack(const SpikeMatrix& spikes, double tau) {
    check_time_steps(spikes.steps);
    if (!(tau > 1.0)) throw std::invalid_argument("tau must exceed 1");
    PackedSpikes out;
    out.steps = spikes.steps;
    out.tau = tau;
    out.bits.resize(spikes.neurons, 0);
    for (std::size_t n = 0; n < spikes.neurons; ++n) {
        std::uint64_t word = 0;
        for (std::size_t t = 0; t < spikes.steps; ++t) {
            const std::uint8_t s = spikes.at(n, t);
            if (s > 1) throw std::domain_error("spike matrix entries must be 0 or 1");
            // step t+1 lands in bit position steps-1-t
            word |= static_cast<std::uint64_t>(s) << (spikes.steps - 1 - t);
        }
        out.bits[n] = word;
    }
    return out;
}

inline SpikeMatrix unpack(const PackedSpikes& packed) {
    SpikeMatrix out(packed.neurons(), packed.steps);
    for (std::size_t n = 0; n < packed.neurons(); ++n) {
        const std::uint64_t word = packed.bits[n];
        for (std::size_t t = 0; t < packed.steps; ++t)
            out.set(n, t, static_cast<std::uint8_t>((word >> (packed.steps - 1 - t)) & 1u));
    }
    return out;
}

// Tau-weighted value of each word: sum_t s_t * tau^(T-t). Equals the word
// itself for tau = 2.
inline std::vector<double> evaluate(const PackedSpikes& packed) {
    const TemporalWeights w = TemporalWeights::make(packed.tau, packed.steps);
    std::vector<double> out(packed.neurons(), 0.0);
    for (std::size_t n = 0; n < packed.neurons(); ++n) {
        const std::uint64_t word = packed.bits[n];
        double v = 0.0;
        // ascend from the least significant bit so small terms accumulate first
        for (std::size_t k = 0; k < packed.steps; ++k)
            if ((word >> k) & 1u) v += w.q[packed.steps - 1 - k];
        out[n] = v;
    }
    return out;
}

inline double evaluate_word(std::uint64_t word, const TemporalWeights& w) {
    const std::size_t steps = w.q.size();
    double v = 0.0;
    for (std::size_t k = 0; k < steps; ++k)
        if ((word >> k) & 1u) v += w.q[steps - 1 - k];
    return v;
}

// --- little-endian stream format: N u32, T u8, tau f64, then N u64 words ---

namespace detail {

template <typename T>
void write_le(std::ostream& os, T value) {
    unsigned char buf[sizeof(T)];
    std::uint64_t raw;
    static_assert(sizeof(T) <= sizeof(raw));
    std::memcpy(&raw, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf[i] = static_cast<unsigned char>((raw >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw std::runtime_error("truncated packed-spikes stream");
    std::uint64_t raw = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        raw |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    T value;
    std::memcpy(&value, &raw, sizeof(T));
    return value;
}

}  // namespace detail

inline void write_packed(std::ostream& os, const PackedSpikes& packed) {
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(packed.neurons()));
    detail::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(packed.steps));
    detail::write_le<double>(os, packed.tau);
    for (std::uint64_t w : packed.bits) detail::write_le<std::uint64_t>(os, w);
}

inline PackedSpikes read_packed(std::istream& is) {
    PackedSpikes out;
    const auto n = detail::read_le<std::uint32_t>(is);
    out.steps = detail::read_le<std::uint8_t>(is);
    out.tau = detail::read_le<double>(is);
    check_time_steps(out.steps);
    out.bits.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) out.bits[i] = detail::read_le<std::uint64_t>(is);
    return out;
}

}  // namespace spikepack
