#include "sinceeg/network.hpp"

#include "sinceeg/error.hpp"

#include <cmath>

namespace sinceeg {
namespace {

Tensor glorot_uniform(Shape shape, double fan_in, double fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v = (2.0 * u - 1.0) * limit;
    }
    return Tensor::from(std::move(shape), std::move(values), true);
}

Shape sample_shape(const Tensor& t) { return Shape(t.shape().begin() + 1, t.shape().end()); }

}  // namespace

void ModelConfig::validate() const {
    if (channels < 1) throw ConfigError("C", "channel count must be at least 1");
    if (samples == 0 || samples % 64 != 0)
        throw ConfigError("T", "time samples must be a positive multiple of 64 (three /4 poolings), got " +
                                   std::to_string(samples));
    if (kernel_length < 2) throw ConfigError("L", "sinc kernel length must be at least 2");
    if (kernel_length > samples)
        throw ConfigError("L", "sinc kernel length " + std::to_string(kernel_length) +
                                   " exceeds T = " + std::to_string(samples));
    if (filters < 1) throw ConfigError("F1", "need at least one sinc filter");
    if (depth < 1) throw ConfigError("D", "need at least one spatial filter per band");
    if (pointwise < 1) throw ConfigError("F2", "need at least one pointwise filter");
    if (classes < 2) throw ConfigError("N", "need at least two classes");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout_p", "must lie in [0, 1)");
    if (!(celu_alpha > 0.0)) throw ConfigError("celu_alpha", "must be positive");
    if (!(fs > 0.0)) throw ConfigError("fs", "sampling rate must be positive");
}

ParameterTable count_parameters(const ModelConfig& c) {
    const std::size_t df1 = c.depth * c.filters;
    ParameterTable table;
    table.layers = {
        {"sinc_conv", "2*F1", 2 * c.filters},
        {"layer_norm_1", "2*F1", 2 * c.filters},
        {"depthwise_spatial", "C*D*F1", c.channels * df1},
        {"layer_norm_2", "2*D*F1", 2 * df1},
        {"depthwise_temporal", "16*D*F1", kTemporalKernel * df1},
        {"layer_norm_3", "2*D*F1", 2 * df1},
        {"pointwise", "F2*(D*F1)", c.pointwise * df1},
        {"layer_norm_4", "2*F2", 2 * c.pointwise},
        {"fully_connected", "N*F2*T/64", c.classes * c.pointwise * (c.samples / 64)},
    };
    for (const auto& l : table.layers) table.total += l.count;
    return table;
}

std::vector<Parameter> Model::parameters() const {
    return {
        {"sinc.cutoffs", sinc_.cutoffs(), false},
        {"norm1.gain", norm1_.gain, false},
        {"norm1.bias", norm1_.bias, false},
        {"spatial.weight", spatial_, true},
        {"norm2.gain", norm2_.gain, false},
        {"norm2.bias", norm2_.bias, false},
        {"temporal.weight", temporal_, true},
        {"norm3.gain", norm3_.gain, false},
        {"norm3.bias", norm3_.bias, false},
        {"pointwise.weight", pointwise_, true},
        {"norm4.gain", norm4_.gain, false},
        {"norm4.bias", norm4_.bias, false},
        {"classifier.weight", classifier_, true},
    };
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.tensor.numel();
    return n;
}

void Model::zero_grad() {
    for (auto& p : parameters()) p.tensor.zero_grad();
}

Tensor Model::forward(Tape& tape, const Tensor& batch, bool training, Rng& rng, ForwardTrace* trace) const {
    const auto& c = config_;
    if (!batch.defined() || batch.rank() != 3)
        throw ShapeError("forward", "batch", "expected (B, C, T)");
    if (batch.dim(1) != c.channels)
        throw ShapeError("forward", "C", "model expects " + std::to_string(c.channels) + " channels, batch has " +
                                             std::to_string(batch.dim(1)));
    if (batch.dim(2) != c.samples)
        throw ShapeError("forward", "T", "model expects " + std::to_string(c.samples) + " samples, batch has " +
                                             std::to_string(batch.dim(2)));
    const std::size_t B = batch.dim(0);
    auto note = [trace](const char* layer, const Tensor& t) {
        if (trace) trace->emplace_back(layer, sample_shape(t));
    };

    note("input", batch);
    Tensor x = ops::reshape(tape, batch, {B, 1, c.channels, c.samples});
    note("reshape", x);

    // Block 1: band decomposition
    x = ops::conv_temporal_symmetric(tape, x, sinc_.kernels(tape), Padding::same);
    note("sinc_conv", x);
    x = ops::avg_pool_time(tape, x, kPoolWidth);
    note("avg_pool_1", x);
    x = ops::layer_norm(tape, x, norm1_.gain, norm1_.bias, kLayerNormEps);
    x = ops::celu(tape, x, c.celu_alpha);
    note("layer_norm_1", x);
    x = ops::dropout(tape, x, c.dropout_p, training, rng);
    note("dropout_1", x);

    // Block 2: spatial filtering
    x = ops::depthwise_conv(tape, x, spatial_, DepthwiseKind::spatial);
    note("depthwise_spatial", x);
    x = ops::avg_pool_time(tape, x, kPoolWidth);
    note("avg_pool_2", x);
    x = ops::layer_norm(tape, x, norm2_.gain, norm2_.bias, kLayerNormEps);
    x = ops::celu(tape, x, c.celu_alpha);
    note("layer_norm_2", x);
    x = ops::dropout(tape, x, c.dropout_p, training, rng);
    note("dropout_2", x);

    // Block 3: separable convolution
    x = ops::depthwise_conv(tape, x, temporal_, DepthwiseKind::temporal);
    note("depthwise_temporal", x);
    x = ops::layer_norm(tape, x, norm3_.gain, norm3_.bias, kLayerNormEps);
    x = ops::celu(tape, x, c.celu_alpha);
    note("layer_norm_3", x);
    x = ops::dropout(tape, x, c.dropout_p, training, rng);
    note("dropout_3", x);
    x = ops::pointwise_conv(tape, x, pointwise_);
    note("pointwise", x);
    x = ops::avg_pool_time(tape, x, kPoolWidth);
    note("avg_pool_3", x);
    x = ops::layer_norm(tape, x, norm4_.gain, norm4_.bias, kLayerNormEps);
    x = ops::celu(tape, x, c.celu_alpha);
    note("layer_norm_4", x);
    x = ops::dropout(tape, x, c.dropout_p, training, rng);
    note("dropout_4", x);

    // Block 4: classification
    x = ops::reshape(tape, x, {B, c.pointwise * (c.samples / 64)});
    note("flatten", x);
    x = ops::linear(tape, x, classifier_);
    note("fully_connected", x);
    return x;
}

Model build_model(const ModelConfig& config, std::uint64_t seed, const SincInitOptions& init) {
    config.validate();
    const auto& c = config;
    const std::size_t df1 = c.depth * c.filters;
    SincInitOptions sinc_init = init;
    sinc_init.fs = c.fs;

    Model m;
    m.config_ = config;
    m.sinc_ = init_filter_bank(c.filters, c.kernel_length, seed, sinc_init);

    Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);
    auto norm = [](std::size_t maps) {
        return Model::Norm{Tensor::filled({maps}, 1.0, true), Tensor::zeros({maps}, true)};
    };
    const auto d = static_cast<double>(c.depth);
    m.norm1_ = norm(c.filters);
    m.spatial_ = glorot_uniform({df1, c.channels}, static_cast<double>(c.channels),
                                static_cast<double>(c.channels) * d, rng);
    m.norm2_ = norm(df1);
    m.temporal_ = glorot_uniform({df1, kTemporalKernel}, static_cast<double>(kTemporalKernel),
                                 static_cast<double>(kTemporalKernel), rng);
    m.norm3_ = norm(df1);
    m.pointwise_ = glorot_uniform({c.pointwise, df1}, static_cast<double>(df1),
                                  static_cast<double>(c.pointwise), rng);
    m.norm4_ = norm(c.pointwise);
    const std::size_t features = c.pointwise * (c.samples / 64);
    m.classifier_ = glorot_uniform({c.classes, features}, static_cast<double>(features),
                                   static_cast<double>(c.classes), rng);
    return m;
}

Model Model::from_values(const ModelConfig& config, const std::vector<std::vector<double>>& values) {
    Model m = build_model(config, 0);
    auto params = m.parameters();
    if (values.size() != params.size())
        throw ConfigError("parameters", "expected " + std::to_string(params.size()) + " tensors, got " +
                                            std::to_string(values.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto dst = params[i].tensor.data();
        if (values[i].size() != dst.size())
            throw ConfigError(params[i].name, "expected " + std::to_string(dst.size()) + " values, got " +
                                                  std::to_string(values[i].size()));
        std::copy(values[i].begin(), values[i].end(), dst.begin());
    }
    return m;
}

}  // namespace sinceeg
