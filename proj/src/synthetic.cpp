#include "sinceeg/synthetic.hpp"

#include "sinceeg/ops.hpp"
#include "sinceeg/sinc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sinceeg {
namespace {

constexpr std::size_t kBandFilterTaps = 257;

double parse_number(const std::string& s, const std::string& whole) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw std::invalid_argument("bad band '" + whole + "'");
    return v;
}

}  // namespace

std::vector<Band> parse_bands(const std::string& text) {
    std::vector<Band> bands;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-', 1);
        if (dash == std::string::npos) throw std::invalid_argument("bad band '" + item + "', expected lo-hi");
        Band b{parse_number(item.substr(0, dash), item), parse_number(item.substr(dash + 1), item)};
        if (!(b.low_hz < b.high_hz))
            throw std::invalid_argument("band '" + item + "': low edge must be below high edge");
        bands.push_back(b);
    }
    if (bands.empty()) throw std::invalid_argument("no bands given");
    return bands;
}

TrialSet generate_synthetic(const SyntheticSpec& spec) {
    const std::size_t classes = spec.bands.size();
    if (classes < 2) throw std::invalid_argument("generate_synthetic: need at least two class bands");
    if (spec.channels < classes)
        throw std::invalid_argument("generate_synthetic: need at least one channel per class");
    if (spec.samples == 0 || spec.n_per_class == 0 || spec.subjects == 0 || spec.sessions == 0)
        throw std::invalid_argument("generate_synthetic: counts must be positive");
    if (spec.subjects > 255 || spec.sessions > 255)
        throw std::invalid_argument("generate_synthetic: subject/session ids must fit in a byte");
    if (!(spec.snr > 0.0)) throw std::invalid_argument("generate_synthetic: snr must be positive");
    for (std::size_t i = 0; i < classes; ++i) {
        const Band& a = spec.bands[i];
        if (!(a.low_hz >= 0.0 && a.low_hz < a.high_hz && a.high_hz < spec.fs / 2.0))
            throw std::invalid_argument("generate_synthetic: band " + std::to_string(i) +
                                        " must satisfy 0 <= lo < hi < fs/2");
        for (std::size_t j = 0; j < i; ++j) {
            const Band& b = spec.bands[j];
            if (a.low_hz < b.high_hz && b.low_hz < a.high_hz)
                throw std::invalid_argument("generate_synthetic: bands " + std::to_string(j) + " and " +
                                            std::to_string(i) + " overlap");
        }
    }

    std::vector<std::vector<double>> filters;
    for (const Band& b : spec.bands)
        filters.push_back(materialize_kernel(b.low_hz / spec.fs, b.high_hz / spec.fs, kBandFilterTaps));

    TrialSet set;
    set.fs = spec.fs;
    set.channels = spec.channels;
    set.samples = spec.samples;
    set.label_count = classes;

    Rng rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const bool noiseless = std::isinf(spec.snr);
    const double amplitude = noiseless ? 1.0 : std::sqrt(spec.snr);
    const std::size_t T = spec.samples;
    std::vector<double> drive(T + kBandFilterTaps - 1), source(T);

    for (std::size_t subject = 1; subject <= spec.subjects; ++subject)
        for (std::size_t session = 1; session <= spec.sessions; ++session)
            for (std::size_t i = 0; i < spec.n_per_class; ++i)
                for (std::size_t k = 0; k < classes; ++k) {
                    Trial trial;
                    trial.label = static_cast<std::uint8_t>(k);
                    trial.subject = static_cast<std::uint8_t>(subject);
                    trial.session = static_cast<std::uint8_t>(session);
                    trial.data.assign(spec.channels * T, 0.0);

                    for (auto& v : drive) v = normal(rng);
                    const auto& h = filters[k];
                    for (std::size_t t = 0; t < T; ++t) {
                        double acc = 0.0;
                        for (std::size_t n = 0; n < h.size(); ++n) acc += h[n] * drive[t + n];
                        source[t] = acc;
                    }
                    double mean = 0.0, power = 0.0;
                    for (double v : source) mean += v;
                    mean /= static_cast<double>(T);
                    for (auto& v : source) {
                        v -= mean;
                        power += v * v;
                    }
                    const double scale = amplitude / std::sqrt(power / static_cast<double>(T));

                    for (std::size_t c = 0; c < spec.channels; ++c) {
                        double* row = trial.data.data() + c * T;
                        if (!noiseless)
                            for (std::size_t t = 0; t < T; ++t) row[t] = normal(rng);
                        if (c % classes == k)
                            for (std::size_t t = 0; t < T; ++t) row[t] += scale * source[t];
                    }
                    set.trials.push_back(std::move(trial));
                }
    return set;
}

}  // namespace sinceeg
