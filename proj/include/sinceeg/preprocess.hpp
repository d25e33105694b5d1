#pragma once

#include "sinceeg/trials.hpp"

#include <span>
#include <string>
#include <vector>

namespace sinceeg {

inline constexpr double kTargetFs = 128.0;
inline constexpr double kLowpassCutoffHz = 64.0;
inline constexpr std::size_t kLowpassTaps = 129;

/// Linear-phase windowed-sinc low-pass (symmetric Hamming), unit DC gain.
std::vector<double> design_lowpass(double cutoff_hz, double fs, std::size_t taps);

/// Zero-phase 64 Hz low-pass: the 129-tap filter applied with its group
/// delay trimmed symmetrically. Edges use mirror extension. Requires
/// fs_in > 128 and a signal at least as long as the filter.
std::vector<double> lowpass_64hz(std::span<const double> signal, double fs_in);

struct ResamplerDesign {
    double cutoff_hz = 59.5;     // anti-alias cutoff, relative to the input
    std::size_t half_width = 100; // Blackman-windowed sinc half width, input samples
};

/// Rational resampling by up/down with a windowed-sinc interpolator evaluated
/// on a polyphase table. Output length floor(len * up / down).
std::vector<double> resample_rational(std::span<const double> signal, std::size_t up, std::size_t down,
                                      double fs_in, const ResamplerDesign& design = {});

/// Resamples an integer-rate signal to 128 Hz (128/250 = 64/125 for the
/// competition data). fs_in == 128 returns a copy.
std::vector<double> resample_to_128(std::span<const double> signal, double fs_in);

enum class ZScoreMode { per_channel, whole_trial };

/// Standardizes a C x T trial to zero mean and unit (population) variance.
/// Degenerate (constant) channels are zeroed and reported in `warnings`.
std::vector<double> zscore_trial(std::span<const double> trial, std::size_t channels, std::size_t samples,
                                 std::vector<std::string>& warnings,
                                 ZScoreMode mode = ZScoreMode::per_channel);

struct PreprocessResult {
    TrialSet set;
    std::vector<std::string> warnings;
};

/// lowpass -> resample -> zscore, in that order. Trials already at 128 Hz
/// are only standardized.
PreprocessResult preprocess(const TrialSet& raw, ZScoreMode mode = ZScoreMode::per_channel);

}  // namespace sinceeg
