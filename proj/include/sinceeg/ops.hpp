#pragma once

#include "sinceeg/tensor.hpp"

#include <cstdint>
#include <random>
#include <span>

namespace sinceeg {

using Rng = std::mt19937_64;

enum class Padding {
    same,   // zero padding, floor((K-1)/2) left and the rest right
    valid,
};

enum class DepthwiseKind {
    spatial,   // (C, 1) kernel collapsing the channel axis
    temporal,  // (1, K) kernel along time, same padding
};

namespace ops {

/// Batched cross-correlation along time. input [B,F,C,T], kernels [K,L];
/// output [B, F*K, C, T'] where output map f*K + k is input map f
/// correlated with kernel k.
Tensor conv_temporal(Tape& tape, const Tensor& input, const Tensor& kernels,
                     Padding padding = Padding::same);

/// Same contract as conv_temporal for kernels with kernel[n] == kernel[L-1-n].
/// Forward reads only the leading half of each kernel and matches
/// conv_temporal bitwise. The kernel gradient is returned folded onto the
/// symmetric subspace: both mirrored taps receive the mean of their pair.
Tensor conv_temporal_symmetric(Tape& tape, const Tensor& input, const Tensor& kernels,
                               Padding padding = Padding::same);

/// Reference loop used to check the optimized kernels: one accumulator per
/// output sample, taps visited in order.
Tensor conv_temporal_naive(const Tensor& input, const Tensor& kernels, Padding padding);

/// Depthwise convolution with depth multiplier R / F for weights [R, K].
///  spatial:  input [B,F,C,T], weights [R, C]  -> [B, R, 1, T]
///  temporal: input [B,F,H,T], weights [R, K]  -> [B, R, H, T] (same padding)
/// Output map m reads input map m / (R / F) only.
Tensor depthwise_conv(Tape& tape, const Tensor& input, const Tensor& weights, DepthwiseKind kind);

/// 1x1 convolution mixing maps: input [B,M,H,T], weights [F2,M] -> [B,F2,H,T].
Tensor pointwise_conv(Tape& tape, const Tensor& input, const Tensor& weights);

/// Non-overlapping mean pooling over the last axis.
Tensor avg_pool_time(Tape& tape, const Tensor& input, std::size_t width);

/// Per-sample normalization over every non-batch element with a per-map
/// affine transform. input [B,F,...], gain/bias [F].
Tensor layer_norm(Tape& tape, const Tensor& input, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

Tensor celu(Tape& tape, const Tensor& input, double alpha = 1.0);

/// Inverted dropout. Identity when !training or p == 0.
Tensor dropout(Tape& tape, const Tensor& input, double p, bool training, Rng& rng);

Tensor reshape(Tape& tape, const Tensor& input, Shape shape);

/// Bias-free dense layer: input [B, ...] flattened to [B, K], weights [N, K].
Tensor linear(Tape& tape, const Tensor& input, const Tensor& weights);

/// Mean over the batch of -log softmax(logits)[label]. Returns shape (1).
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, std::span<const std::size_t> labels);

}  // namespace ops
}  // namespace sinceeg
