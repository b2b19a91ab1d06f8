#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "spikepack/training.hpp"

// Synthetic classification tasks for the toy experiments.

namespace spikepack {

// Isotropic Gaussian blobs, one per class, centred on a circle of the given
// radius. Features are shifted to be nonnegative so they can be fed directly
// as analog input.
inline Dataset make_blobs(std::size_t classes, std::size_t per_class, double radius,
                          double spread, std::uint64_t seed) {
    Dataset data;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    for (std::size_t c = 0; c < classes; ++c) {
        const double angle = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(classes);
        const double cx = radius + radius * std::cos(angle);
        const double cy = radius + radius * std::sin(angle);
        for (std::size_t i = 0; i < per_class; ++i) {
            data.features.push_back({cx + noise(rng), cy + noise(rng)});
            data.labels.push_back(c);
        }
    }
    // deterministic interleave so prefix slices are class-balanced
    Dataset mixed;
    for (std::size_t i = 0; i < per_class; ++i)
        for (std::size_t c = 0; c < classes; ++c) {
            mixed.features.push_back(data.features[c * per_class + i]);
            mixed.labels.push_back(data.labels[c * per_class + i]);
        }
    return mixed;
}

inline Dataset dataset_slice(const Dataset& data, std::size_t begin, std::size_t end) {
    Dataset out;
    for (std::size_t i = begin; i < end && i < data.size(); ++i) {
        out.features.push_back(data.features[i]);
        out.labels.push_back(data.labels[i]);
    }
    return out;
}

}  // namespace spikepack
