#include "sinceeg/trials.hpp"

#include "binary_io.hpp"
#include "sinceeg/error.hpp"

#include <stdexcept>

namespace sinceeg {

void TrialSet::validate() const {
    const std::size_t n = channels * samples;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (trials[i].data.size() != n)
            throw std::invalid_argument("trial " + std::to_string(i) + " has " +
                                        std::to_string(trials[i].data.size()) + " samples, expected " +
                                        std::to_string(n));
        if (label_count != 0 && trials[i].label >= label_count)
            throw std::invalid_argument("trial " + std::to_string(i) + " label " +
                                        std::to_string(trials[i].label) + " >= label_count " +
                                        std::to_string(label_count));
    }
}

std::vector<std::uint8_t> encode_container(const TrialSet& set) {
    set.validate();
    detail::ByteWriter w;
    w.bytes("EEGT", 4);
    w.u32(kContainerVersion);
    w.u32(static_cast<std::uint32_t>(set.trials.size()));
    w.u32(static_cast<std::uint32_t>(set.channels));
    w.u32(static_cast<std::uint32_t>(set.samples));
    w.f32(static_cast<float>(set.fs));
    w.u32(static_cast<std::uint32_t>(set.label_count));
    for (const auto& t : set.trials) {
        w.u8(t.label);
        w.u8(t.subject);
        w.u8(t.session);
        for (double v : t.data) w.f32(static_cast<float>(v));
    }
    return w.buffer();
}

TrialSet decode_container(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes, "container");
    if (r.tag(4, "magic") != "EEGT") throw FormatError("container: bad magic", 0);
    const auto version_at = r.offset();
    if (const auto v = r.u32("version"); v != kContainerVersion)
        throw FormatError("container: unsupported version " + std::to_string(v), version_at);
    TrialSet set;
    const std::uint32_t n_trials = r.u32("n_trials");
    set.channels = r.u32("C");
    set.samples = r.u32("T");
    set.fs = r.f32("fs");
    set.label_count = r.u32("label_count");

    const std::uint64_t per_trial = 3 + static_cast<std::uint64_t>(set.channels) * set.samples * 4;
    if (r.remaining() != per_trial * n_trials)
        throw FormatError("container: payload is " + std::to_string(r.remaining()) + " bytes, header implies " +
                              std::to_string(per_trial * n_trials),
                          r.offset());
    set.trials.resize(n_trials);
    for (auto& t : set.trials) {
        const auto at = r.offset();
        t.label = r.u8("label");
        t.subject = r.u8("subject");
        t.session = r.u8("session");
        if (set.label_count != 0 && t.label >= set.label_count)
            throw FormatError("container: label " + std::to_string(t.label) + " outside label_count", at);
        t.data.resize(set.channels * set.samples);
        for (auto& v : t.data) v = r.f32("sample");
    }
    return set;
}

void write_container(const TrialSet& set, const std::string& path) {
    detail::write_file(path, encode_container(set), "container");
}

TrialSet read_container(const std::string& path) { return decode_container(detail::read_file(path, "container")); }

}  // namespace sinceeg
