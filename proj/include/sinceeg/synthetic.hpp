#pragma once

#include "sinceeg/trials.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace sinceeg {

struct Band {
    double low_hz = 0.0;
    double high_hz = 0.0;
};

/// Parses "8-12,18-26". Throws std::invalid_argument on malformed input or lo >= hi.
std::vector<Band> parse_bands(const std::string& text);

struct SyntheticSpec {
    std::size_t n_per_class = 50;  // per subject and session
    std::size_t channels = 8;
    std::size_t samples = 512;
    double fs = 128.0;
    std::vector<Band> bands;  // one per class
    /// Power of the narrowband component relative to the unit-variance noise
    /// on the channels carrying it. Infinity drops the noise entirely.
    double snr = 1.0;
    std::uint64_t seed = 1;
    std::size_t subjects = 1;
    std::size_t sessions = 1;
};

/// Band-power dataset: white Gaussian noise on every channel plus, for class
/// k, band-limited noise in bands[k] on channels c with c % classes == k.
/// Classes are interleaved so every prefix is nearly balanced.
TrialSet generate_synthetic(const SyntheticSpec& spec);

}  // namespace sinceeg
