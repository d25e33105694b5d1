#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sinceeg {

struct Trial {
    std::vector<double> data;  // C x T, channel-major
    std::uint8_t label = 0;
    std::uint8_t subject = 0;  // 1..9 for the competition corpus
    std::uint8_t session = 0;  // 1 or 2; 0 means untagged
};

/// Trials sharing channel count, length and sampling rate.
struct TrialSet {
    double fs = 0.0;
    std::size_t channels = 0;
    std::size_t samples = 0;
    std::size_t label_count = 0;
    std::vector<Trial> trials;

    std::size_t size() const { return trials.size(); }
    bool empty() const { return trials.empty(); }

    /// Empty set with the same geometry.
    TrialSet like() const { return {fs, channels, samples, label_count, {}}; }

    /// Throws std::invalid_argument if any trial disagrees with the geometry.
    void validate() const;
};

inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 28;

// "EEGT" v1 layout (little-endian):
//   "EEGT" | u32 version | u32 n_trials | u32 C | u32 T | f32 fs | u32 label_count
//   then per trial: u8 label | u8 subject | u8 session | C*T f32, channel-major
std::vector<std::uint8_t> encode_container(const TrialSet& set);
TrialSet decode_container(const std::vector<std::uint8_t>& bytes);

void write_container(const TrialSet& set, const std::string& path);
/// Throws FormatError carrying the offending byte offset.
TrialSet read_container(const std::string& path);

}  // namespace sinceeg
