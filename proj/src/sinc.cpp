#include "sinceeg/sinc.hpp"

#include "sinceeg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace sinceeg {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNyquist = 0.5;

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// 2 f sinc(2 pi f tau)
double lowpass_tap(double f, double tau) {
    if (tau == 0.0) return 2.0 * f;
    return std::sin(2.0 * kPi * f * tau) / (kPi * tau);
}

double centered_tau(std::size_t n, std::size_t length) {
    return static_cast<double>(n) - 0.5 * static_cast<double>(length - 1);
}

// Gradient through clamp(u, 0, 0.5).
double clamp_gradient(double u, double g) {
    if (u > 0.0 && u < kNyquist) return g;
    if (u == kNyquist) return g > 0.0 ? g : 0.0;  // descent moves it back below 0.5
    if (u == 0.0) return g < 0.0 ? g : 0.0;
    return 0.0;
}

}  // namespace

CutoffPair reparameterize_cutoffs(double f1_raw, double f2_raw) {
    const double low = std::clamp(std::abs(f1_raw), 0.0, kNyquist);
    const double high = std::clamp(f1_raw + std::abs(f2_raw - f1_raw), 0.0, kNyquist);
    return {low, std::max(high, low)};
}

std::vector<double> hamming_window(std::size_t length) {
    if (length < 2) throw ShapeError("hamming_window", "length", "window needs at least 2 samples");
    std::vector<double> w(length);
    for (std::size_t t = 0; t < length; ++t)
        w[t] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(t) / static_cast<double>(length));
    return w;
}

double kernel_window(double tau, std::size_t length) {
    return 0.54 + 0.46 * std::cos(2.0 * kPi * std::abs(tau) / static_cast<double>(length));
}

std::vector<double> materialize_kernel(double f1_abs, double f2_abs, std::size_t length) {
    if (length < 2) throw ShapeError("materialize_kernel", "length", "kernel needs at least 2 samples");
    if (!(f1_abs >= 0.0 && f1_abs <= f2_abs && f2_abs <= kNyquist))
        throw std::invalid_argument("materialize_kernel: cutoffs must satisfy 0 <= f1 <= f2 <= 0.5, got (" +
                                    std::to_string(f1_abs) + ", " + std::to_string(f2_abs) + ")");
    std::vector<double> kernel(length);
    for (std::size_t n = 0; n < (length + 1) / 2; ++n) {
        const double tau = centered_tau(n, length);
        const double g = lowpass_tap(f2_abs, tau) - lowpass_tap(f1_abs, tau);
        kernel[n] = g * kernel_window(tau, length);
        kernel[length - 1 - n] = kernel[n];
    }
    return kernel;
}

CutoffPair kernel_cutoff_gradients(std::span<const double> upstream, double f1_abs, double f2_abs) {
    const std::size_t length = upstream.size();
    double d_low = 0.0, d_high = 0.0;
    for (std::size_t n = 0; n < length; ++n) {
        const double tau = centered_tau(n, length);
        const double w = kernel_window(tau, length) * upstream[n];
        // d/df [sin(2 pi f tau) / (pi tau)] = 2 cos(2 pi f tau), also 2 at tau = 0
        d_high += w * 2.0 * std::cos(2.0 * kPi * f2_abs * tau);
        d_low -= w * 2.0 * std::cos(2.0 * kPi * f1_abs * tau);
    }
    return {d_low, d_high};
}

CutoffPair kernel_gradients(std::span<const double> upstream, double f1_raw, double f2_raw) {
    const double u1 = std::abs(f1_raw);
    const double u2 = f1_raw + std::abs(f2_raw - f1_raw);
    const double c1 = std::clamp(u1, 0.0, kNyquist);
    const double c2 = std::clamp(u2, 0.0, kNyquist);
    const CutoffPair eff = reparameterize_cutoffs(f1_raw, f2_raw);
    const CutoffPair g = kernel_cutoff_gradients(upstream, eff.low, eff.high);

    double g_c1 = g.low, g_c2 = g.high;
    if (c2 < c1) {  // high pinned to low
        g_c1 += g.high;
        g_c2 = 0.0;
    }
    const double g_u1 = clamp_gradient(u1, g_c1);
    const double g_u2 = clamp_gradient(u2, g_c2);
    const double s = sign(f2_raw - f1_raw);
    return {g_u1 * sign(f1_raw) + g_u2 * (1.0 - s), g_u2 * s};
}

FrequencyResponse frequency_response(std::span<const double> kernel, std::size_t n_points) {
    if (n_points < 2 || n_points < kernel.size())
        throw std::invalid_argument("frequency_response: need at least max(2, L) points, got " +
                                    std::to_string(n_points));
    FrequencyResponse r;
    r.frequencies.resize(n_points);
    r.magnitude.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double f = kNyquist * static_cast<double>(i) / static_cast<double>(n_points - 1);
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < kernel.size(); ++n) {
            const double phase = 2.0 * kPi * f * static_cast<double>(n);
            re += kernel[n] * std::cos(phase);
            im -= kernel[n] * std::sin(phase);
        }
        r.frequencies[i] = f;
        r.magnitude[i] = std::hypot(re, im);
    }
    return r;
}

double SincInitOptions::resolved_std_hz() const { return std_hz ? *std_hz : std::sqrt(fs / 4.0); }

double sample_cutoff_hz(Rng& rng, const SincInitOptions& options) {
    std::normal_distribution<double> dist(options.fs / 4.0, options.resolved_std_hz());
    return dist(rng);
}

SincFilterBank::SincFilterBank(Tensor cutoffs, std::size_t length, double fs)
    : cutoffs_(std::move(cutoffs)), length_(length), fs_(fs) {
    if (cutoffs_.rank() != 2 || cutoffs_.dim(1) != 2)
        throw ShapeError("SincFilterBank", "cutoffs", "expected shape (F1, 2), got " +
                                                          shape_string(cutoffs_.shape()));
    if (length_ < 2) throw ShapeError("SincFilterBank", "length", "kernel needs at least 2 samples");
}

CutoffPair SincFilterBank::effective(std::size_t filter) const {
    auto c = cutoffs_.data();
    return reparameterize_cutoffs(c[2 * filter], c[2 * filter + 1]);
}

CutoffPair SincFilterBank::band_hz(std::size_t filter) const {
    const CutoffPair e = effective(filter);
    return {e.low * fs_, e.high * fs_};
}

std::vector<double> SincFilterBank::kernel(std::size_t filter) const {
    const CutoffPair e = effective(filter);
    return materialize_kernel(e.low, e.high, length_);
}

Tensor SincFilterBank::kernels(Tape& tape) const { return ops::sinc_kernels(tape, cutoffs_, length_); }

SincFilterBank init_filter_bank(std::size_t filters, std::size_t length, std::uint64_t seed,
                                const SincInitOptions& options) {
    if (filters == 0) throw ConfigError("F1", "filter count must be at least 1");
    if (length < 2) throw ConfigError("L", "kernel length must be at least 2");
    Rng rng(seed);
    const double min_width = 1.0 / static_cast<double>(length);
    std::vector<double> raw(2 * filters);
    for (std::size_t i = 0; i < filters; ++i) {
        double a = std::clamp(sample_cutoff_hz(rng, options) / options.fs, options.clamp_low, options.clamp_high);
        double b = std::clamp(sample_cutoff_hz(rng, options) / options.fs, options.clamp_low, options.clamp_high);
        if (a > b) std::swap(a, b);
        if (b - a < min_width) {
            b = a + min_width;
            if (b > options.clamp_high) {
                b = options.clamp_high;
                a = b - min_width;
            }
        }
        raw[2 * i] = a;
        raw[2 * i + 1] = b;
    }
    return SincFilterBank(Tensor::from({filters, 2}, std::move(raw), true), length, options.fs);
}

namespace ops {

Tensor sinc_kernels(Tape& tape, const Tensor& cutoffs, std::size_t length) {
    if (!cutoffs.defined() || cutoffs.rank() != 2 || cutoffs.dim(1) != 2)
        throw ShapeError("sinc_kernels", "cutoffs", "expected shape (F1, 2)");
    const std::size_t filters = cutoffs.dim(0);
    std::vector<double> values(filters * length);
    auto c = cutoffs.data();
    for (std::size_t i = 0; i < filters; ++i) {
        const CutoffPair e = reparameterize_cutoffs(c[2 * i], c[2 * i + 1]);
        const auto k = materialize_kernel(e.low, e.high, length);
        std::copy(k.begin(), k.end(), values.begin() + static_cast<std::ptrdiff_t>(i * length));
    }
    Tensor out = Tensor::from({filters, length}, std::move(values));
    if (tape.should_record({&cutoffs})) {
        tape.record("sinc_kernels", {cutoffs}, out, [cutoffs, out, filters, length]() mutable {
            auto c = cutoffs.data();
            auto go = out.grad();
            auto dc = cutoffs.grad();
            for (std::size_t i = 0; i < filters; ++i) {
                const CutoffPair g = kernel_gradients(go.subspan(i * length, length), c[2 * i], c[2 * i + 1]);
                dc[2 * i] += g.low;
                dc[2 * i + 1] += g.high;
            }
        });
    }
    return out;
}

}  // namespace ops
}  // namespace sinceeg
