#include "sinceeg/preprocess.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace sinceeg {
namespace {

constexpr double kPi = std::numbers::pi;

double sinc_lowpass(double fc, double tau) {
    if (tau == 0.0) return 2.0 * fc;
    return std::sin(2.0 * kPi * fc * tau) / (kPi * tau);
}

// Mirror index into [0, n) without repeating the edge sample.
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    if (last == 0) return 0;
    while (i < 0 || i > last) {
        if (i < 0) i = -i;
        if (i > last) i = 2 * last - i;
    }
    return static_cast<std::size_t>(i);
}

std::size_t integer_rate(double fs, const char* op) {
    const double r = std::round(fs);
    if (r <= 0.0 || std::abs(fs - r) > 1e-9)
        throw std::invalid_argument(std::string(op) + ": sampling rate must be a positive integer, got " +
                                    std::to_string(fs));
    return static_cast<std::size_t>(r);
}

}  // namespace

std::vector<double> design_lowpass(double cutoff_hz, double fs, std::size_t taps) {
    if (taps < 3 || taps % 2 == 0) throw std::invalid_argument("design_lowpass: taps must be odd and >= 3");
    if (!(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0))
        throw std::invalid_argument("design_lowpass: cutoff must lie in (0, fs/2)");
    const double fc = cutoff_hz / fs;
    const double center = static_cast<double>(taps - 1) / 2.0;
    std::vector<double> h(taps);
    for (std::size_t n = 0; n <= taps / 2; ++n) {
        const double w = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) / static_cast<double>(taps - 1));
        h[n] = sinc_lowpass(fc, static_cast<double>(n) - center) * w;
        h[taps - 1 - n] = h[n];
    }
    const double gain = std::accumulate(h.begin(), h.end(), 0.0);
    for (auto& v : h) v /= gain;
    return h;
}

std::vector<double> lowpass_64hz(std::span<const double> signal, double fs_in) {
    if (!(fs_in > kTargetFs)) throw std::invalid_argument("lowpass_64hz: input rate must exceed 128 Hz");
    if (signal.size() < kLowpassTaps)
        throw std::invalid_argument("lowpass_64hz: signal of " + std::to_string(signal.size()) +
                                    " samples is shorter than the " + std::to_string(kLowpassTaps) +
                                    "-tap filter");
    const auto h = design_lowpass(kLowpassCutoffHz, fs_in, kLowpassTaps);
    const auto delay = static_cast<std::ptrdiff_t>(kLowpassTaps / 2);
    std::vector<double> out(signal.size());
    for (std::size_t t = 0; t < signal.size(); ++t) {
        double acc = 0.0;
        for (std::size_t n = 0; n < kLowpassTaps; ++n) {
            const auto src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(n) - delay;
            acc += h[n] * signal[reflect(src, signal.size())];
        }
        out[t] = acc;
    }
    return out;
}

std::vector<double> resample_rational(std::span<const double> signal, std::size_t up, std::size_t down,
                                      double fs_in, const ResamplerDesign& design) {
    if (up == 0 || down == 0) throw std::invalid_argument("resample_rational: ratio terms must be positive");
    if (signal.empty()) return {};
    const std::size_t g = std::gcd(up, down);
    up /= g;
    down /= g;
    const std::size_t out_len = signal.size() * up / down;
    const double fc = design.cutoff_hz / fs_in;
    const auto hw = static_cast<std::ptrdiff_t>(design.half_width);
    const double span = static_cast<double>(design.half_width);

    // phase r interpolates at fractional offset r/up past an input sample
    const std::size_t width = 2 * design.half_width;
    std::vector<double> table(up * width);
    for (std::size_t r = 0; r < up; ++r) {
        double sum = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            const double tau = static_cast<double>(r) / static_cast<double>(up) -
                               static_cast<double>(static_cast<std::ptrdiff_t>(j) - hw + 1);
            const double x = tau / span;
            const double w = std::abs(x) >= 1.0
                                 ? 0.0
                                 : 0.42 + 0.5 * std::cos(kPi * x) + 0.08 * std::cos(2.0 * kPi * x);
            table[r * width + j] = sinc_lowpass(fc, tau) * w;
            sum += table[r * width + j];
        }
        for (std::size_t j = 0; j < width; ++j) table[r * width + j] /= sum;
    }

    std::vector<double> out(out_len);
    for (std::size_t m = 0; m < out_len; ++m) {
        const std::size_t pos = m * down;
        const auto base = static_cast<std::ptrdiff_t>(pos / up);
        const double* taps = table.data() + (pos % up) * width;
        double acc = 0.0;
        for (std::size_t j = 0; j < width; ++j)
            acc += taps[j] * signal[reflect(base + static_cast<std::ptrdiff_t>(j) - hw + 1, signal.size())];
        out[m] = acc;
    }
    return out;
}

std::vector<double> resample_to_128(std::span<const double> signal, double fs_in) {
    const std::size_t rate = integer_rate(fs_in, "resample_to_128");
    if (rate < 128) throw std::invalid_argument("resample_to_128: upsampling is not supported");
    if (rate == 128) return {signal.begin(), signal.end()};
    return resample_rational(signal, 128, rate, fs_in);
}

std::vector<double> zscore_trial(std::span<const double> trial, std::size_t channels, std::size_t samples,
                                 std::vector<std::string>& warnings, ZScoreMode mode) {
    if (trial.size() != channels * samples)
        throw std::invalid_argument("zscore_trial: trial holds " + std::to_string(trial.size()) +
                                    " values, expected C*T = " + std::to_string(channels * samples));
    std::vector<double> out(trial.size(), 0.0);
    const std::size_t groups = mode == ZScoreMode::per_channel ? channels : 1;
    const std::size_t len = trial.size() / groups;
    for (std::size_t g = 0; g < groups; ++g) {
        const double* x = trial.data() + g * len;
        double mean = 0.0;
        for (std::size_t i = 0; i < len; ++i) mean += x[i];
        mean /= static_cast<double>(len);
        double var = 0.0;
        for (std::size_t i = 0; i < len; ++i) var += (x[i] - mean) * (x[i] - mean);
        const double sd = std::sqrt(var / static_cast<double>(len));
        if (!(sd > 1e-12 * (1.0 + std::abs(mean)))) {
            warnings.push_back(mode == ZScoreMode::per_channel
                                   ? "zscore: channel " + std::to_string(g) + " is constant; set to zero"
                                   : std::string("zscore: trial is constant; set to zero"));
            continue;
        }
        for (std::size_t i = 0; i < len; ++i) out[g * len + i] = (x[i] - mean) / sd;
    }
    return out;
}

PreprocessResult preprocess(const TrialSet& raw, ZScoreMode mode) {
    raw.validate();
    PreprocessResult result;
    result.set = raw.like();
    const bool resample = raw.fs != kTargetFs;
    if (resample) {
        integer_rate(raw.fs, "preprocess");
        if (raw.fs < kTargetFs) throw std::invalid_argument("preprocess: input rate below 128 Hz");
        result.set.fs = kTargetFs;
        result.set.samples = raw.samples * 128 / static_cast<std::size_t>(std::round(raw.fs));
    }
    result.set.trials.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const Trial& t = raw.trials[i];
        std::vector<double> data;
        if (resample) {
            data.reserve(raw.channels * result.set.samples);
            for (std::size_t c = 0; c < raw.channels; ++c) {
                std::span<const double> row(t.data.data() + c * raw.samples, raw.samples);
                const auto y = resample_to_128(lowpass_64hz(row, raw.fs), raw.fs);
                data.insert(data.end(), y.begin(), y.end());
            }
        } else {
            data = t.data;
        }
        std::vector<std::string> w;
        auto z = zscore_trial(data, raw.channels, result.set.samples, w, mode);
        for (auto& msg : w) result.warnings.push_back("trial " + std::to_string(i) + ": " + msg);
        result.set.trials.push_back({std::move(z), t.label, t.subject, t.session});
    }
    return result;
}

}  // namespace sinceeg
