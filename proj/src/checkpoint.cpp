#include "sinceeg/checkpoint.hpp"

#include "binary_io.hpp"
#include "sinceeg/error.hpp"

namespace sinceeg {

std::vector<std::uint8_t> encode_checkpoint(const Model& model) {
    const auto& c = model.config();
    detail::ByteWriter w;
    w.bytes("SEEG", 4);
    w.u32(kCheckpointVersion);
    for (auto v : {c.channels, c.samples, c.kernel_length, c.filters, c.depth, c.pointwise, c.classes})
        w.u32(static_cast<std::uint32_t>(v));
    w.f64(c.dropout_p);
    w.f64(c.celu_alpha);
    w.f64(c.fs);
    for (const auto& p : model.parameters()) {
        auto data = p.tensor.data();
        w.u64(data.size());
        for (double v : data) w.f64(v);
    }
    return w.buffer();
}

Model decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes, "checkpoint");
    if (r.tag(4, "magic") != "SEEG") throw FormatError("checkpoint: bad magic", 0);
    const auto version_at = r.offset();
    if (const auto v = r.u32("version"); v != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(v), version_at);

    ModelConfig c;
    const auto config_at = r.offset();
    c.channels = r.u32("C");
    c.samples = r.u32("T");
    c.kernel_length = r.u32("L");
    c.filters = r.u32("F1");
    c.depth = r.u32("D");
    c.pointwise = r.u32("F2");
    c.classes = r.u32("N");
    c.dropout_p = r.f64("dropout_p");
    c.celu_alpha = r.f64("celu_alpha");
    c.fs = r.f64("fs");
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint: invalid config: ") + e.what(), config_at);
    }

    const auto expected = count_parameters(c).total;
    std::vector<std::vector<double>> values;
    std::size_t total = 0;
    const std::size_t tensors = 13;
    for (std::size_t i = 0; i < tensors; ++i) {
        const auto at = r.offset();
        const auto n = r.u64("tensor length");
        if (n > r.remaining() / 8) throw FormatError("checkpoint: tensor length exceeds file", at);
        total += n;
        if (total > expected)
            throw FormatError("checkpoint: parameter count exceeds " + std::to_string(expected), at);
        std::vector<double> v(n);
        for (auto& x : v) x = r.f64("tensor data");
        values.push_back(std::move(v));
    }
    if (total != expected)
        throw FormatError("checkpoint: holds " + std::to_string(total) + " parameters, config needs " +
                              std::to_string(expected),
                          r.offset());
    if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes", r.offset());
    try {
        return Model::from_values(c, values);
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint: ") + e.what(), config_at);
    }
}

void save_checkpoint(const Model& model, const std::string& path) {
    detail::write_file(path, encode_checkpoint(model), "checkpoint");
}

Model load_checkpoint(const std::string& path) { return decode_checkpoint(detail::read_file(path, "checkpoint")); }

}  // namespace sinceeg
