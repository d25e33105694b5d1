#pragma once

#include "sinceeg/ops.hpp"
#include "sinceeg/tensor.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sinceeg {

/// Low/high cutoff pair in normalized frequency (cycles per sample).
struct CutoffPair {
    double low = 0.0;
    double high = 0.0;
};

/// Maps unconstrained parameters to effective cutoffs:
/// low = |f1|, high = f1 + |f2 - f1|, both clamped to [0, 0.5]. If a
/// negative f1 would leave high below low, high is pinned to low.
CutoffPair reparameterize_cutoffs(double f1_raw, double f2_raw);

/// w[t] = 0.54 - 0.46 cos(2 pi t / L), t = 0..L-1.
std::vector<double> hamming_window(std::size_t length);

/// The same Hamming taper sampled at the kernel's centered time grid
/// tau = n - (L-1)/2, i.e. 0.54 + 0.46 cos(2 pi tau / L). This is the window
/// curve shifted half a sample so it shares the kernel's symmetry axis.
double kernel_window(double tau, std::size_t length);

/// Windowed band-pass kernel g[n] = w(tau) * (2 f2 sinc(2 pi f2 tau) - 2 f1 sinc(2 pi f1 tau)).
/// Computed for the leading half and mirrored, so kernel[n] == kernel[L-1-n] exactly.
std::vector<double> materialize_kernel(double f1_abs, double f2_abs, std::size_t length);

/// d(loss)/d(low), d(loss)/d(high) for a kernel receiving `upstream`.
CutoffPair kernel_cutoff_gradients(std::span<const double> upstream, double f1_abs, double f2_abs);

/// Chains kernel_cutoff_gradients through the reparameterization to the
/// raw parameters. At a clamp bound the component that would push the
/// cutoff further out is dropped; beyond a bound the gradient is zero.
CutoffPair kernel_gradients(std::span<const double> upstream, double f1_raw, double f2_raw);

struct FrequencyResponse {
    std::vector<double> frequencies;  // normalized, strictly increasing over [0, 0.5]
    std::vector<double> magnitude;
};

/// |DTFT| of the zero-padded kernel at n_points uniform frequencies in [0, 0.5].
FrequencyResponse frequency_response(std::span<const double> kernel, std::size_t n_points);

struct SincInitOptions {
    double fs = 128.0;
    /// Standard deviation of the cutoff draws in Hz. Unset means sqrt(fs/4),
    /// i.e. a variance of fs/4.
    std::optional<double> std_hz;
    double clamp_low = 0.01;
    double clamp_high = 0.49;

    double resolved_std_hz() const;
};

/// Draws one cutoff in Hz from N(fs/4, std^2), before any clamping.
double sample_cutoff_hz(Rng& rng, const SincInitOptions& options);

/// F1 learnable cutoff pairs plus the kernel length they are discretized to.
class SincFilterBank {
public:
    SincFilterBank() = default;
    SincFilterBank(Tensor cutoffs, std::size_t length, double fs);

    std::size_t size() const { return cutoffs_.dim(0); }
    std::size_t length() const { return length_; }
    double fs() const { return fs_; }

    /// Raw parameters, shape [F1, 2] as (f1, f2) rows.
    Tensor& cutoffs() { return cutoffs_; }
    const Tensor& cutoffs() const { return cutoffs_; }

    CutoffPair effective(std::size_t filter) const;
    CutoffPair band_hz(std::size_t filter) const;
    std::vector<double> kernel(std::size_t filter) const;

    /// Differentiable [F1, L] kernel tensor.
    Tensor kernels(Tape& tape) const;

private:
    Tensor cutoffs_;
    std::size_t length_ = 0;
    double fs_ = 0.0;
};

/// Gaussian-initialized bank; each pair is sorted, clamped to the init
/// bounds and widened to at least 1/L.
SincFilterBank init_filter_bank(std::size_t filters, std::size_t length, std::uint64_t seed,
                                const SincInitOptions& options = {});

namespace ops {
/// Differentiable kernels from raw cutoffs [F1, 2] -> [F1, L].
Tensor sinc_kernels(Tape& tape, const Tensor& cutoffs, std::size_t length);
}  // namespace ops

}  // namespace sinceeg
