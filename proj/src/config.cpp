#include "sinceeg/config.hpp"

#include "sinceeg/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sinceeg {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
    return v;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) throw ConfigError(key, "expected a number, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key, "expected true or false, got '" + value + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"C", [](RunConfig& c, const auto& k, const auto& v) { c.model.channels = parse_uint(k, v); }},
        {"T", [](RunConfig& c, const auto& k, const auto& v) { c.model.samples = parse_uint(k, v); }},
        {"L", [](RunConfig& c, const auto& k, const auto& v) { c.model.kernel_length = parse_uint(k, v); }},
        {"F1", [](RunConfig& c, const auto& k, const auto& v) { c.model.filters = parse_uint(k, v); }},
        {"D", [](RunConfig& c, const auto& k, const auto& v) { c.model.depth = parse_uint(k, v); }},
        {"F2", [](RunConfig& c, const auto& k, const auto& v) { c.model.pointwise = parse_uint(k, v); }},
        {"N", [](RunConfig& c, const auto& k, const auto& v) { c.model.classes = parse_uint(k, v); }},
        {"dropout_p", [](RunConfig& c, const auto& k, const auto& v) { c.model.dropout_p = parse_double(k, v); }},
        {"celu_alpha", [](RunConfig& c, const auto& k, const auto& v) { c.model.celu_alpha = parse_double(k, v); }},
        {"fs", [](RunConfig& c, const auto& k, const auto& v) { c.model.fs = parse_double(k, v); }},
        {"learning_rate", [](RunConfig& c, const auto& k, const auto& v) { c.train.learning_rate = parse_double(k, v); }},
        {"beta1", [](RunConfig& c, const auto& k, const auto& v) { c.train.beta1 = parse_double(k, v); }},
        {"beta2", [](RunConfig& c, const auto& k, const auto& v) { c.train.beta2 = parse_double(k, v); }},
        {"eps", [](RunConfig& c, const auto& k, const auto& v) { c.train.eps = parse_double(k, v); }},
        {"weight_decay", [](RunConfig& c, const auto& k, const auto& v) { c.train.weight_decay = parse_double(k, v); }},
        {"decoupled_weight_decay",
         [](RunConfig& c, const auto& k, const auto& v) { c.train.decoupled_weight_decay = parse_bool(k, v); }},
        {"batch_size", [](RunConfig& c, const auto& k, const auto& v) { c.train.batch_size = parse_uint(k, v); }},
        {"epochs", [](RunConfig& c, const auto& k, const auto& v) { c.train.epochs = parse_uint(k, v); }},
        {"seed", [](RunConfig& c, const auto& k, const auto& v) { c.train.seed = parse_uint(k, v); }},
        {"paradigm", [](RunConfig& c, const auto&, const auto& v) { c.train.paradigm = parse_paradigm(v); }},
        {"subject",
         [](RunConfig& c, const auto& k, const auto& v) { c.train.subject = static_cast<unsigned>(parse_uint(k, v)); }},
        {"init_std_hz", [](RunConfig& c, const auto& k, const auto& v) { c.init_std_hz = parse_double(k, v); }},
        {"zscore",
         [](RunConfig& c, const auto& k, const auto& v) {
             if (v == "per_channel") c.zscore = ZScoreMode::per_channel;
             else if (v == "whole_trial") c.zscore = ZScoreMode::whole_trial;
             else throw ConfigError(k, "expected per_channel or whole_trial, got '" + v + "'");
         }},
    };
    return table;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(key, "unknown key");
        if (!config.explicit_keys.insert(key).second) throw ConfigError(key, "repeated key");
        if (value.empty()) throw ConfigError(key, "missing value");
        it->second(config, key, value);
    }
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string canonical_config_text(const RunConfig& c) {
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "C = " << c.model.channels << '\n'
       << "T = " << c.model.samples << '\n'
       << "L = " << c.model.kernel_length << '\n'
       << "F1 = " << c.model.filters << '\n'
       << "D = " << c.model.depth << '\n'
       << "F2 = " << c.model.pointwise << '\n'
       << "N = " << c.model.classes << '\n'
       << "dropout_p = " << num(c.model.dropout_p) << '\n'
       << "celu_alpha = " << num(c.model.celu_alpha) << '\n'
       << "fs = " << num(c.model.fs) << '\n'
       << "learning_rate = " << num(c.train.learning_rate) << '\n'
       << "beta1 = " << num(c.train.beta1) << '\n'
       << "beta2 = " << num(c.train.beta2) << '\n'
       << "eps = " << num(c.train.eps) << '\n'
       << "weight_decay = " << num(c.train.weight_decay) << '\n'
       << "decoupled_weight_decay = " << (c.train.decoupled_weight_decay ? "true" : "false") << '\n'
       << "batch_size = " << c.train.batch_size << '\n'
       << "epochs = " << c.train.epochs << '\n'
       << "seed = " << c.train.seed << '\n'
       << "paradigm = " << to_string(c.train.paradigm) << '\n';
    if (c.train.subject) os << "subject = " << *c.train.subject << '\n';
    os << "init_std_hz = " << num(c.init_std_hz ? *c.init_std_hz : std::sqrt(c.model.fs / 4.0)) << '\n'
       << "zscore = " << (c.zscore == ZScoreMode::per_channel ? "per_channel" : "whole_trial") << '\n';
    return os.str();
}

std::string fnv1a_hex(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fnv1a_hex(const std::string& text) {
    return fnv1a_hex(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace sinceeg
