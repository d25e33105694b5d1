#include "sinceeg/ops.hpp"

#include "sinceeg/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace sinceeg::ops {
namespace {

struct PadSpec {
    std::size_t left = 0;
    std::size_t right = 0;
    std::size_t out_len = 0;
};

// Same padding is well defined for kernels longer than the signal (the
// temporal depthwise layer sees only T/16 samples); callers opt in.
PadSpec pad_spec(const char* op, std::size_t length, std::size_t taps, Padding padding,
                 bool allow_longer = false) {
    if (taps == 0) throw ShapeError(op, "kernel", "kernel length must be positive");
    if (taps > length && !(allow_longer && padding == Padding::same))
        throw ShapeError(op, "time", "kernel length " + std::to_string(taps) +
                                         " exceeds time extent " + std::to_string(length));
    if (padding == Padding::valid) return {0, 0, length - taps + 1};
    const std::size_t left = (taps - 1) / 2;
    return {left, taps - 1 - left, length};
}

void pad_row(const double* src, std::size_t length, const PadSpec& pad, std::vector<double>& dst) {
    dst.assign(pad.left + length + pad.right, 0.0);
    std::copy(src, src + length, dst.begin() + static_cast<std::ptrdiff_t>(pad.left));
}

// out[t] = sum_n k[n] * xp[t + n], taps accumulated in order from zero.
void correlate_row(const double* xp, const double* kernel, std::size_t taps, double* out,
                   std::size_t out_len) {
    std::fill(out, out + out_len, 0.0);
    for (std::size_t n = 0; n < taps; ++n) {
        const double w = kernel[n];
        const double* x = xp + n;
        for (std::size_t t = 0; t < out_len; ++t) out[t] += w * x[t];
    }
}

void correlate_row_symmetric(const double* xp, const double* kernel, std::size_t taps, double* out,
                             std::size_t out_len) {
    std::fill(out, out + out_len, 0.0);
    for (std::size_t n = 0; n < taps; ++n) {
        const double w = kernel[std::min(n, taps - 1 - n)];
        const double* x = xp + n;
        for (std::size_t t = 0; t < out_len; ++t) out[t] += w * x[t];
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

// sum_t g[t] * (a[t] + b[t])
double dot_pair(const double* g, const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += g[i] * (a[i] + b[i]);
        s1 += g[i + 1] * (a[i + 1] + b[i + 1]);
        s2 += g[i + 2] * (a[i + 2] + b[i + 2]);
        s3 += g[i + 3] * (a[i + 3] + b[i + 3]);
    }
    for (; i < n; ++i) s0 += g[i] * (a[i] + b[i]);
    return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void require_rank(const char* op, const Tensor& t, std::size_t rank, const char* name) {
    if (!t.defined()) throw ShapeError(op, name, "tensor is undefined");
    if (t.rank() != rank)
        throw ShapeError(op, name, "expected rank " + std::to_string(rank) + ", got shape " +
                                       shape_string(t.shape()));
}

Tensor conv_temporal_impl(Tape& tape, const Tensor& input, const Tensor& kernels, Padding padding,
                          bool symmetric) {
    const char* op = symmetric ? "conv_temporal_symmetric" : "conv_temporal";
    require_rank(op, input, 4, "input");
    require_rank(op, kernels, 2, "kernels");
    const std::size_t B = input.dim(0), F = input.dim(1), C = input.dim(2), T = input.dim(3);
    const std::size_t K = kernels.dim(0), L = kernels.dim(1);
    const PadSpec pad = pad_spec(op, T, L, padding);
    const std::size_t To = pad.out_len;

    if (symmetric) {
        auto k = kernels.data();
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t n = 0; n < L / 2; ++n)
                if (k[i * L + n] != k[i * L + L - 1 - n])
                    throw ShapeError(op, "kernels", "kernel " + std::to_string(i) + " is not symmetric");
    }

    Tensor out = Tensor::zeros({B, F * K, C, To});
    {
        auto x = input.data();
        auto k = kernels.data();
        auto y = out.data();
        std::vector<double> xp;
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t f = 0; f < F; ++f)
                for (std::size_t c = 0; c < C; ++c) {
                    pad_row(x.data() + ((b * F + f) * C + c) * T, T, pad, xp);
                    for (std::size_t i = 0; i < K; ++i) {
                        double* o = y.data() + ((b * F * K + f * K + i) * C + c) * To;
                        if (symmetric)
                            correlate_row_symmetric(xp.data(), k.data() + i * L, L, o, To);
                        else
                            correlate_row(xp.data(), k.data() + i * L, L, o, To);
                    }
                }
    }

    if (tape.should_record({&input, &kernels})) {
        tape.record(op, {input, kernels}, out, [input, kernels, out, pad, symmetric]() mutable {
            const std::size_t B = input.dim(0), F = input.dim(1), C = input.dim(2), T = input.dim(3);
            const std::size_t K = kernels.dim(0), L = kernels.dim(1);
            const std::size_t To = pad.out_len;
            auto x = input.data();
            auto k = kernels.data();
            auto go = out.grad();
            const bool want_k = kernels.requires_grad();
            const bool want_x = input.requires_grad();
            std::span<double> dk = want_k ? kernels.grad() : std::span<double>{};
            std::span<double> dx = want_x ? input.grad() : std::span<double>{};
            std::vector<double> xp, dxp;
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t f = 0; f < F; ++f)
                    for (std::size_t c = 0; c < C; ++c) {
                        pad_row(x.data() + ((b * F + f) * C + c) * T, T, pad, xp);
                        if (want_x) dxp.assign(xp.size(), 0.0);
                        for (std::size_t i = 0; i < K; ++i) {
                            const double* g = go.data() + ((b * F * K + f * K + i) * C + c) * To;
                            const double* ki = k.data() + i * L;
                            if (want_k) {
                                double* dki = dk.data() + i * L;
                                if (symmetric) {
                                    for (std::size_t p = 0; p < L / 2; ++p) {
                                        const std::size_t q = L - 1 - p;
                                        const double s = dot_pair(g, xp.data() + p, xp.data() + q, To);
                                        dki[p] += 0.5 * s;
                                        dki[q] += 0.5 * s;
                                    }
                                    if (L % 2 == 1) dki[L / 2] += dot(g, xp.data() + L / 2, To);
                                } else {
                                    for (std::size_t n = 0; n < L; ++n) dki[n] += dot(g, xp.data() + n, To);
                                }
                            }
                            if (want_x) {
                                for (std::size_t n = 0; n < L; ++n) axpy(ki[n], g, dxp.data() + n, To);
                            }
                        }
                        if (want_x) {
                            double* dxr = dx.data() + ((b * F + f) * C + c) * T;
                            for (std::size_t t = 0; t < T; ++t) dxr[t] += dxp[t + pad.left];
                        }
                    }
        });
    }
    return out;
}

}  // namespace

Tensor conv_temporal(Tape& tape, const Tensor& input, const Tensor& kernels, Padding padding) {
    return conv_temporal_impl(tape, input, kernels, padding, false);
}

Tensor conv_temporal_symmetric(Tape& tape, const Tensor& input, const Tensor& kernels,
                               Padding padding) {
    return conv_temporal_impl(tape, input, kernels, padding, true);
}

Tensor conv_temporal_naive(const Tensor& input, const Tensor& kernels, Padding padding) {
    require_rank("conv_temporal_naive", input, 4, "input");
    require_rank("conv_temporal_naive", kernels, 2, "kernels");
    const std::size_t B = input.dim(0), F = input.dim(1), C = input.dim(2), T = input.dim(3);
    const std::size_t K = kernels.dim(0), L = kernels.dim(1);
    const PadSpec pad = pad_spec("conv_temporal_naive", T, L, padding);
    Tensor out = Tensor::zeros({B, F * K, C, pad.out_len});
    auto x = input.data();
    auto k = kernels.data();
    auto y = out.data();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t f = 0; f < F; ++f)
            for (std::size_t i = 0; i < K; ++i)
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t t = 0; t < pad.out_len; ++t) {
                        double acc = 0.0;
                        for (std::size_t n = 0; n < L; ++n) {
                            // position in the unpadded row
                            const auto src = static_cast<std::ptrdiff_t>(t + n) -
                                             static_cast<std::ptrdiff_t>(pad.left);
                            const double v = (src < 0 || src >= static_cast<std::ptrdiff_t>(T))
                                                 ? 0.0
                                                 : x[((b * F + f) * C + c) * T + static_cast<std::size_t>(src)];
                            acc += k[i * L + n] * v;
                        }
                        y[((b * F * K + f * K + i) * C + c) * pad.out_len + t] = acc;
                    }
    return out;
}

Tensor depthwise_conv(Tape& tape, const Tensor& input, const Tensor& weights, DepthwiseKind kind) {
    const char* op = kind == DepthwiseKind::spatial ? "depthwise_conv(spatial)" : "depthwise_conv(temporal)";
    require_rank(op, input, 4, "input");
    require_rank(op, weights, 2, "weights");
    const std::size_t B = input.dim(0), F = input.dim(1), H = input.dim(2), T = input.dim(3);
    const std::size_t R = weights.dim(0), K = weights.dim(1);
    if (R % F != 0)
        throw ShapeError(op, "maps", "weight rows " + std::to_string(R) +
                                         " are not a multiple of input maps " + std::to_string(F));
    const std::size_t mult = R / F;

    if (kind == DepthwiseKind::spatial) {
        if (K != H)
            throw ShapeError(op, "channels", "weights expect " + std::to_string(K) +
                                                 " channels, input has " + std::to_string(H));
        Tensor out = Tensor::zeros({B, R, 1, T});
        auto x = input.data();
        auto w = weights.data();
        auto y = out.data();
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t m = 0; m < R; ++m) {
                double* o = y.data() + (b * R + m) * T;
                const std::size_t src = m / mult;
                for (std::size_t c = 0; c < H; ++c)
                    axpy(w[m * K + c], x.data() + ((b * F + src) * H + c) * T, o, T);
            }
        if (tape.should_record({&input, &weights})) {
            tape.record(op, {input, weights}, out, [input, weights, out, mult]() mutable {
                const std::size_t B = input.dim(0), F = input.dim(1), H = input.dim(2), T = input.dim(3);
                const std::size_t R = weights.dim(0), K = weights.dim(1);
                auto x = input.data();
                auto w = weights.data();
                auto go = out.grad();
                const bool want_w = weights.requires_grad(), want_x = input.requires_grad();
                std::span<double> dw = want_w ? weights.grad() : std::span<double>{};
                std::span<double> dx = want_x ? input.grad() : std::span<double>{};
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t m = 0; m < R; ++m) {
                        const double* g = go.data() + (b * R + m) * T;
                        const std::size_t src = m / mult;
                        for (std::size_t c = 0; c < H; ++c) {
                            const std::size_t row = ((b * F + src) * H + c) * T;
                            if (want_w) dw[m * K + c] += dot(g, x.data() + row, T);
                            if (want_x) axpy(w[m * K + c], g, dx.data() + row, T);
                        }
                    }
            });
        }
        return out;
    }

    const PadSpec pad = pad_spec(op, T, K, Padding::same, true);
    Tensor out = Tensor::zeros({B, R, H, T});
    {
        auto x = input.data();
        auto w = weights.data();
        auto y = out.data();
        std::vector<double> xp;
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t m = 0; m < R; ++m)
                for (std::size_t h = 0; h < H; ++h) {
                    pad_row(x.data() + ((b * F + m / mult) * H + h) * T, T, pad, xp);
                    correlate_row(xp.data(), w.data() + m * K, K, y.data() + ((b * R + m) * H + h) * T, T);
                }
    }
    if (tape.should_record({&input, &weights})) {
        tape.record(op, {input, weights}, out, [input, weights, out, mult, pad]() mutable {
            const std::size_t B = input.dim(0), F = input.dim(1), H = input.dim(2), T = input.dim(3);
            const std::size_t R = weights.dim(0), K = weights.dim(1);
            auto x = input.data();
            auto w = weights.data();
            auto go = out.grad();
            const bool want_w = weights.requires_grad(), want_x = input.requires_grad();
            std::span<double> dw = want_w ? weights.grad() : std::span<double>{};
            std::span<double> dx = want_x ? input.grad() : std::span<double>{};
            std::vector<double> xp, dxp;
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t m = 0; m < R; ++m)
                    for (std::size_t h = 0; h < H; ++h) {
                        const std::size_t row = ((b * F + m / mult) * H + h) * T;
                        const double* g = go.data() + ((b * R + m) * H + h) * T;
                        pad_row(x.data() + row, T, pad, xp);
                        if (want_w)
                            for (std::size_t n = 0; n < K; ++n) dw[m * K + n] += dot(g, xp.data() + n, T);
                        if (want_x) {
                            dxp.assign(xp.size(), 0.0);
                            for (std::size_t n = 0; n < K; ++n) axpy(w[m * K + n], g, dxp.data() + n, T);
                            for (std::size_t t = 0; t < T; ++t) dx[row + t] += dxp[t + pad.left];
                        }
                    }
        });
    }
    return out;
}

Tensor pointwise_conv(Tape& tape, const Tensor& input, const Tensor& weights) {
    const char* op = "pointwise_conv";
    require_rank(op, input, 4, "input");
    require_rank(op, weights, 2, "weights");
    const std::size_t B = input.dim(0), M = input.dim(1), S = input.dim(2) * input.dim(3);
    const std::size_t O = weights.dim(0);
    if (weights.dim(1) != M)
        throw ShapeError(op, "maps", "weights expect " + std::to_string(weights.dim(1)) +
                                         " input maps, input has " + std::to_string(M));
    Tensor out = Tensor::zeros({B, O, input.dim(2), input.dim(3)});
    auto x = input.data();
    auto w = weights.data();
    auto y = out.data();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t o = 0; o < O; ++o)
            for (std::size_t m = 0; m < M; ++m)
                axpy(w[o * M + m], x.data() + (b * M + m) * S, y.data() + (b * O + o) * S, S);

    if (tape.should_record({&input, &weights})) {
        tape.record(op, {input, weights}, out, [input, weights, out]() mutable {
            const std::size_t B = input.dim(0), M = input.dim(1), S = input.dim(2) * input.dim(3);
            const std::size_t O = weights.dim(0);
            auto x = input.data();
            auto w = weights.data();
            auto go = out.grad();
            const bool want_w = weights.requires_grad(), want_x = input.requires_grad();
            std::span<double> dw = want_w ? weights.grad() : std::span<double>{};
            std::span<double> dx = want_x ? input.grad() : std::span<double>{};
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t o = 0; o < O; ++o) {
                    const double* g = go.data() + (b * O + o) * S;
                    for (std::size_t m = 0; m < M; ++m) {
                        if (want_w) dw[o * M + m] += dot(g, x.data() + (b * M + m) * S, S);
                        if (want_x) axpy(w[o * M + m], g, dx.data() + (b * M + m) * S, S);
                    }
                }
        });
    }
    return out;
}

Tensor avg_pool_time(Tape& tape, const Tensor& input, std::size_t width) {
    const char* op = "avg_pool_time";
    if (!input.defined()) throw ShapeError(op, "input", "tensor is undefined");
    if (width == 0) throw ShapeError(op, "width", "pool width must be positive");
    const std::size_t T = input.shape().back();
    if (T % width != 0)
        throw ShapeError(op, "time", "extent " + std::to_string(T) + " not divisible by " +
                                         std::to_string(width));
    Shape shape = input.shape();
    shape.back() = T / width;
    Tensor out = Tensor::zeros(shape);
    auto x = input.data();
    auto y = out.data();
    const double scale = static_cast<double>(width);
    for (std::size_t j = 0; j < y.size(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < width; ++i) s += x[j * width + i];
        y[j] = s / scale;
    }
    if (tape.should_record({&input})) {
        tape.record(op, {input}, out, [input, out, width]() mutable {
            auto go = out.grad();
            auto dx = input.grad();
            const double scale = 1.0 / static_cast<double>(width);
            for (std::size_t j = 0; j < go.size(); ++j)
                for (std::size_t i = 0; i < width; ++i) dx[j * width + i] += go[j] * scale;
        });
    }
    return out;
}

Tensor layer_norm(Tape& tape, const Tensor& input, const Tensor& gain, const Tensor& bias, double eps) {
    const char* op = "layer_norm";
    if (!input.defined() || input.rank() < 2) throw ShapeError(op, "input", "expected rank >= 2");
    require_rank(op, gain, 1, "gain");
    require_rank(op, bias, 1, "bias");
    const std::size_t B = input.dim(0), F = input.dim(1);
    if (gain.dim(0) != F || bias.dim(0) != F)
        throw ShapeError(op, "maps", "gain/bias length must equal " + std::to_string(F));
    const std::size_t S = input.numel() / B;
    const std::size_t inner = S / F;

    Tensor out = Tensor::zeros(input.shape());
    auto normalized = std::make_shared<std::vector<double>>(input.numel());
    auto rstd = std::make_shared<std::vector<double>>(B);
    auto x = input.data();
    auto g = gain.data();
    auto bi = bias.data();
    auto y = out.data();
    for (std::size_t b = 0; b < B; ++b) {
        const double* xb = x.data() + b * S;
        double mean = 0.0;
        for (std::size_t i = 0; i < S; ++i) mean += xb[i];
        mean /= static_cast<double>(S);
        double var = 0.0;
        for (std::size_t i = 0; i < S; ++i) var += (xb[i] - mean) * (xb[i] - mean);
        var /= static_cast<double>(S);
        const double r = 1.0 / std::sqrt(var + eps);
        (*rstd)[b] = r;
        for (std::size_t f = 0; f < F; ++f)
            for (std::size_t i = 0; i < inner; ++i) {
                const std::size_t idx = b * S + f * inner + i;
                const double h = (x[idx] - mean) * r;
                (*normalized)[idx] = h;
                y[idx] = g[f] * h + bi[f];
            }
    }
    if (tape.should_record({&input, &gain, &bias})) {
        tape.record(op, {input, gain, bias}, out,
                    [input, gain, bias, out, normalized, rstd, B, F, S, inner]() mutable {
                        auto go = out.grad();
                        auto g = gain.data();
                        const auto& h = *normalized;
                        if (gain.requires_grad() || bias.requires_grad()) {
                            std::span<double> dg = gain.requires_grad() ? gain.grad() : std::span<double>{};
                            std::span<double> db = bias.requires_grad() ? bias.grad() : std::span<double>{};
                            for (std::size_t b = 0; b < B; ++b)
                                for (std::size_t f = 0; f < F; ++f) {
                                    const std::size_t base = b * S + f * inner;
                                    if (!dg.empty()) dg[f] += dot(go.data() + base, h.data() + base, inner);
                                    if (!db.empty())
                                        for (std::size_t i = 0; i < inner; ++i) db[f] += go[base + i];
                                }
                        }
                        if (!input.requires_grad()) return;
                        auto dx = input.grad();
                        std::vector<double> dh(S);
                        for (std::size_t b = 0; b < B; ++b) {
                            double mean_dh = 0.0, mean_dh_h = 0.0;
                            for (std::size_t f = 0; f < F; ++f)
                                for (std::size_t i = 0; i < inner; ++i) {
                                    const std::size_t k = f * inner + i;
                                    dh[k] = go[b * S + k] * g[f];
                                    mean_dh += dh[k];
                                    mean_dh_h += dh[k] * h[b * S + k];
                                }
                            mean_dh /= static_cast<double>(S);
                            mean_dh_h /= static_cast<double>(S);
                            const double r = (*rstd)[b];
                            for (std::size_t k = 0; k < S; ++k)
                                dx[b * S + k] += r * (dh[k] - mean_dh - h[b * S + k] * mean_dh_h);
                        }
                    });
    }
    return out;
}

Tensor celu(Tape& tape, const Tensor& input, double alpha) {
    if (!(alpha > 0.0)) throw ShapeError("celu", "alpha", "alpha must be positive");
    Tensor out = Tensor::zeros(input.shape());
    auto x = input.data();
    auto y = out.data();
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = x[i] > 0.0 ? x[i] : alpha * std::expm1(x[i] / alpha);
    if (tape.should_record({&input})) {
        tape.record("celu", {input}, out, [input, out, alpha]() mutable {
            auto x = input.data();
            auto go = out.grad();
            auto dx = input.grad();
            for (std::size_t i = 0; i < x.size(); ++i)
                dx[i] += go[i] * (x[i] > 0.0 ? 1.0 : std::exp(x[i] / alpha));
        });
    }
    return out;
}

Tensor dropout(Tape& tape, const Tensor& input, double p, bool training, Rng& rng) {
    if (!(p >= 0.0 && p < 1.0)) throw ShapeError("dropout", "p", "probability must lie in [0, 1)");
    if (!training || p == 0.0) return input;
    auto mask = std::make_shared<std::vector<double>>(input.numel());
    const double keep_scale = 1.0 / (1.0 - p);
    for (auto& m : *mask) {
        // 53-bit uniform in [0, 1); independent of the standard library's
        // distribution implementations.
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        m = u < p ? 0.0 : keep_scale;
    }
    Tensor out = Tensor::zeros(input.shape());
    auto x = input.data();
    auto y = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * (*mask)[i];
    if (tape.should_record({&input})) {
        tape.record("dropout", {input}, out, [input, out, mask]() mutable {
            auto go = out.grad();
            auto dx = input.grad();
            for (std::size_t i = 0; i < go.size(); ++i) dx[i] += go[i] * (*mask)[i];
        });
    }
    return out;
}

Tensor reshape(Tape& tape, const Tensor& input, Shape shape) {
    if (shape_numel(shape) != input.numel())
        throw ShapeError("reshape", "shape", "cannot view " + shape_string(input.shape()) + " as " +
                                                 shape_string(shape));
    Tensor out = Tensor::from(std::move(shape), std::vector<double>(input.data().begin(), input.data().end()));
    if (tape.should_record({&input})) {
        tape.record("reshape", {input}, out, [input, out]() mutable {
            auto go = out.grad();
            auto dx = input.grad();
            for (std::size_t i = 0; i < go.size(); ++i) dx[i] += go[i];
        });
    }
    return out;
}

Tensor linear(Tape& tape, const Tensor& input, const Tensor& weights) {
    const char* op = "linear";
    if (!input.defined() || input.rank() < 2) throw ShapeError(op, "input", "expected rank >= 2");
    require_rank(op, weights, 2, "weights");
    const std::size_t B = input.dim(0), K = input.numel() / B, N = weights.dim(0);
    if (weights.dim(1) != K)
        throw ShapeError(op, "features", "weights expect " + std::to_string(weights.dim(1)) +
                                             " features, input has " + std::to_string(K));
    Tensor out = Tensor::zeros({B, N});
    auto x = input.data();
    auto w = weights.data();
    auto y = out.data();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t n = 0; n < N; ++n) y[b * N + n] = dot(w.data() + n * K, x.data() + b * K, K);
    if (tape.should_record({&input, &weights})) {
        tape.record(op, {input, weights}, out, [input, weights, out, B, K, N]() mutable {
            auto x = input.data();
            auto w = weights.data();
            auto go = out.grad();
            const bool want_w = weights.requires_grad(), want_x = input.requires_grad();
            std::span<double> dw = want_w ? weights.grad() : std::span<double>{};
            std::span<double> dx = want_x ? input.grad() : std::span<double>{};
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t n = 0; n < N; ++n) {
                    const double g = go[b * N + n];
                    if (want_w) axpy(g, x.data() + b * K, dw.data() + n * K, K);
                    if (want_x) axpy(g, w.data() + n * K, dx.data() + b * K, K);
                }
        });
    }
    return out;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, std::span<const std::size_t> labels) {
    const char* op = "softmax_cross_entropy";
    require_rank(op, logits, 2, "logits");
    const std::size_t B = logits.dim(0), N = logits.dim(1);
    if (labels.size() != B)
        throw ShapeError(op, "batch", "got " + std::to_string(labels.size()) + " labels for batch of " +
                                          std::to_string(B));
    for (auto l : labels)
        if (l >= N)
            throw ShapeError(op, "labels", "label " + std::to_string(l) + " outside [0, " +
                                               std::to_string(N) + ")");
    auto z = logits.data();
    auto probs = std::make_shared<std::vector<double>>(B * N);
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const double* zb = z.data() + b * N;
        const double zmax = *std::max_element(zb, zb + N);
        double sum = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const double e = std::exp(zb[n] - zmax);
            (*probs)[b * N + n] = e;
            sum += e;
        }
        for (std::size_t n = 0; n < N; ++n) (*probs)[b * N + n] /= sum;
        total += std::log(sum) + zmax - zb[labels[b]];
    }
    Tensor out = Tensor::from({1}, {total / static_cast<double>(B)});
    if (tape.should_record({&logits})) {
        std::vector<std::size_t> labels_copy(labels.begin(), labels.end());
        tape.record(op, {logits}, out, [logits, out, probs, labels_copy, B, N]() mutable {
            const double g = out.grad()[0] / static_cast<double>(B);
            auto dz = logits.grad();
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t n = 0; n < N; ++n)
                    dz[b * N + n] += g * ((*probs)[b * N + n] - (n == labels_copy[b] ? 1.0 : 0.0));
        });
    }
    return out;
}

}  // namespace sinceeg::ops
