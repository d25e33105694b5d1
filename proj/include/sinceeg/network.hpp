#pragma once

#include "sinceeg/ops.hpp"
#include "sinceeg/sinc.hpp"
#include "sinceeg/tensor.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sinceeg {

inline constexpr std::size_t kPoolWidth = 4;
inline constexpr std::size_t kTemporalKernel = 16;
inline constexpr double kLayerNormEps = 1e-5;

struct ModelConfig {
    std::size_t channels = 22;        // C
    std::size_t samples = 512;        // T
    std::size_t kernel_length = 64;   // L
    std::size_t filters = 32;         // F1
    std::size_t depth = 2;            // D
    std::size_t pointwise = 64;       // F2
    std::size_t classes = 4;          // N
    double dropout_p = 0.25;
    double celu_alpha = 1.0;
    double fs = 128.0;

    /// Throws ConfigError naming the first violated field.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

struct LayerParameterCount {
    std::string layer;
    std::string formula;
    std::size_t count = 0;
};

struct ParameterTable {
    std::vector<LayerParameterCount> layers;
    std::size_t total = 0;
};

/// Per-layer trainable parameter counts, in build order.
ParameterTable count_parameters(const ModelConfig& config);

struct Parameter {
    std::string name;
    Tensor tensor;
    bool decay = false;  // eligible for weight decay
};

/// Per-sample output shapes recorded layer by layer during forward.
using ForwardTrace = std::vector<std::pair<std::string, Shape>>;

class Model {
public:
    Model() = default;

    const ModelConfig& config() const { return config_; }
    const SincFilterBank& sinc() const { return sinc_; }
    SincFilterBank& sinc() { return sinc_; }

    /// Trainable tensors in build order (the checkpoint order).
    std::vector<Parameter> parameters() const;
    std::size_t parameter_count() const;
    void zero_grad();

    /// batch [B, C, T] -> logits [B, N].
    Tensor forward(Tape& tape, const Tensor& batch, bool training, Rng& rng,
                   ForwardTrace* trace = nullptr) const;

    /// Rebuilds a model from parameter values laid out as parameters() returns them.
    static Model from_values(const ModelConfig& config, const std::vector<std::vector<double>>& values);

    friend Model build_model(const ModelConfig& config, std::uint64_t seed, const SincInitOptions& init);

private:
    struct Norm {
        Tensor gain;
        Tensor bias;
    };

    ModelConfig config_;
    SincFilterBank sinc_;
    Norm norm1_, norm2_, norm3_, norm4_;
    Tensor spatial_;    // [D*F1, C]
    Tensor temporal_;   // [D*F1, 16]
    Tensor pointwise_;  // [F2, D*F1]
    Tensor classifier_; // [N, F2*T/64]
};

/// Sinc cutoffs from init_filter_bank, Glorot-uniform convolution and dense
/// weights, unit gains and zero biases.
Model build_model(const ModelConfig& config, std::uint64_t seed, const SincInitOptions& init = {});

}  // namespace sinceeg
