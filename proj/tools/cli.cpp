#include "cli.hpp"

#include "sinceeg/checkpoint.hpp"
#include "sinceeg/config.hpp"
#include "sinceeg/error.hpp"
#include "sinceeg/preprocess.hpp"
#include "sinceeg/synthetic.hpp"
#include "sinceeg/training.hpp"
#include "sinceeg/trials.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>

namespace sinceeg::cli {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CorruptArtifact : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string geometry(std::size_t c, std::size_t t) {
    return "(C=" + std::to_string(c) + ", T=" + std::to_string(t) + ")";
}

TrialSet load_trials(const std::string& path, ZScoreMode mode, std::ostream& err, std::string* hash = nullptr) {
    const auto bytes = slurp(path);
    if (hash) *hash = fnv1a_hex(bytes);
    TrialSet raw;
    try {
        raw = decode_container(bytes);
    } catch (const FormatError& e) {
        throw CorruptArtifact("container '" + path + "': " + e.what());
    }
    auto result = preprocess(raw, mode);
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    return std::move(result.set);
}

Model load_model(const std::string& path, std::string* hash = nullptr) {
    const auto bytes = slurp(path);
    if (hash) *hash = fnv1a_hex(bytes);
    try {
        return decode_checkpoint(bytes);
    } catch (const std::exception& e) {
        throw CorruptArtifact("checkpoint '" + path + "': " + e.what());
    }
}

std::optional<std::string> sibling_manifest_hash(const std::string& checkpoint_path) {
    std::ifstream in(fs::path(checkpoint_path).parent_path() / "manifest.txt");
    std::string key, value;
    while (in >> key) {
        std::getline(in >> std::ws, value);
        if (key == "manifest_hash") return value;
    }
    return std::nullopt;
}

ZScoreMode parse_zscore(const std::string& text) {
    if (text == "per_channel") return ZScoreMode::per_channel;
    if (text == "whole_trial") return ZScoreMode::whole_trial;
    throw UsageError("--zscore must be per_channel or whole_trial");
}

// Fills the model geometry from the data unless the config pinned it.
void resolve_model(RunConfig& rc, const TrialSet& set) {
    auto& m = rc.model;
    if (rc.is_set("C") && m.channels != set.channels)
        throw DataError("config expects " + geometry(m.channels, m.samples) + ", data has " +
                        geometry(set.channels, set.samples));
    if (rc.is_set("T") && m.samples != set.samples)
        throw DataError("config expects " + geometry(m.channels, m.samples) + ", data has " +
                        geometry(set.channels, set.samples));
    if (rc.is_set("N") && m.classes < set.label_count)
        throw DataError("config has N=" + std::to_string(m.classes) + " but data carries " +
                        std::to_string(set.label_count) + " labels");
    if (rc.is_set("fs") && m.fs != set.fs)
        throw DataError("config fs=" + std::to_string(m.fs) + " but preprocessed data is at " +
                        std::to_string(set.fs) + " Hz");
    m.channels = set.channels;
    m.samples = set.samples;
    m.fs = set.fs;
    if (!rc.is_set("N")) m.classes = set.label_count;
    if (!rc.is_set("dropout_p")) m.dropout_p = default_dropout(rc.train.paradigm);
}

struct TrainArgs {
    std::string data, config, paradigm, out, zscore;
    std::optional<unsigned> subject;
    std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    const std::string started = utc_now();
    RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
    if (!a.paradigm.empty()) rc.train.paradigm = parse_paradigm(a.paradigm);
    else if (!rc.is_set("paradigm")) throw UsageError("--paradigm is required");
    if (a.subject) rc.train.subject = a.subject;
    if (a.seed) rc.train.seed = *a.seed;
    if (!a.zscore.empty()) rc.zscore = parse_zscore(a.zscore);
    if (needs_subject(rc.train.paradigm) && !rc.train.subject)
        throw UsageError("paradigm " + to_string(rc.train.paradigm) + " requires --subject");
    rc.train.validate();

    std::string data_hash;
    const TrialSet set = load_trials(a.data, rc.zscore, err, &data_hash);
    resolve_model(rc, set);
    rc.model.validate();

    Split split;
    try {
        split = split_dataset(set, rc.train.paradigm, rc.train.subject);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    if (split.train.empty()) throw DataError("training split is empty");

    const std::string resolved = canonical_config_text(rc);
    const std::string manifest_hash = fnv1a_hex(resolved + "data_hash = " + data_hash + '\n');

    SincInitOptions init;
    init.std_hz = rc.init_std_hz;
    Model model = build_model(rc.model, rc.train.seed, init);
    out << "training " << model.parameter_count() << " parameters on " << split.train.size() << " trials ("
        << to_string(rc.train.paradigm) << "), testing on " << split.test.size() << '\n';

    TrainResult result;
    try {
        result = train(model, split.train, rc.train, [&out](std::size_t epoch, double loss) {
            out << "epoch " << epoch << " loss " << std::setprecision(6) << loss << '\n';
        });
    } catch (const DivergenceError& e) {
        err << "error: training aborted: " << e.what() << '\n';
        return kFailure;
    }

    const fs::path dir(a.out);
    fs::create_directories(dir);
    const auto checkpoint = encode_checkpoint(model);
    const std::string checkpoint_hash = fnv1a_hex(checkpoint);
    spill(dir / "checkpoint.seeg", std::string(checkpoint.begin(), checkpoint.end()));
    spill(dir / "loss.txt", format_loss_curve(result.epoch_loss, manifest_hash));

    if (!split.test.empty()) {
        EvalReport report = evaluate(model, split.test);
        report.metadata["manifest"] = manifest_hash;
        report.metadata["checkpoint"] = checkpoint_hash;
        report.metadata["paradigm"] = to_string(rc.train.paradigm);
        spill(dir / "report.txt", format_report(report));
        out << "test accuracy " << std::fixed << std::setprecision(4) << report.accuracy << '\n';
    }

    std::ostringstream manifest;
    manifest << "manifest_hash " << manifest_hash << '\n'
             << "config_path " << (a.config.empty() ? "(defaults)" : a.config) << '\n'
             << "data_path " << a.data << '\n'
             << "data_hash " << data_hash << '\n'
             << "out_dir " << a.out << '\n'
             << "seed " << rc.train.seed << '\n'
             << "checkpoint_hash " << checkpoint_hash << '\n'
             << "started " << started << '\n'
             << "finished " << utc_now() << '\n'
             << "[resolved]\n"
             << resolved;
    spill(dir / "manifest.txt", manifest.str());
    out << "wrote " << (dir / "checkpoint.seeg").string() << '\n';
    return kOk;
}

struct EvalArgs {
    std::string data, checkpoint, report, zscore = "per_channel";
    std::optional<unsigned> subject;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    std::string checkpoint_hash, data_hash;
    const Model model = load_model(a.checkpoint, &checkpoint_hash);
    TrialSet set = load_trials(a.data, parse_zscore(a.zscore), err, &data_hash);
    const auto& mc = model.config();
    if (mc.channels != set.channels || mc.samples != set.samples) {
        err << "error: shape mismatch: checkpoint expects " << geometry(mc.channels, mc.samples) << ", data has "
            << geometry(set.channels, set.samples) << '\n';
        return kDataMismatch;
    }
    if (a.subject) {
        TrialSet picked = set.like();
        for (const auto& t : set.trials)
            if (t.subject == *a.subject) picked.trials.push_back(t);
        if (picked.empty()) throw DataError("no trials for subject " + std::to_string(*a.subject));
        set = std::move(picked);
    }
    for (const auto& t : set.trials)
        if (t.label >= mc.classes)
            throw DataError("label " + std::to_string(t.label) + " outside the checkpoint's " +
                            std::to_string(mc.classes) + " classes");

    EvalReport report = evaluate(model, set);
    report.metadata["checkpoint"] = checkpoint_hash;
    report.metadata["data"] = data_hash;
    if (auto m = sibling_manifest_hash(a.checkpoint)) report.metadata["manifest"] = *m;
    const std::string text = format_report(report);
    out << text;
    if (!a.report.empty()) spill(a.report, text);
    return kOk;
}

struct FilterArgs {
    std::string checkpoint, out;
    std::size_t response_points = 0;
};

int cmd_filters(const FilterArgs& a, std::ostream& out) {
    std::string checkpoint_hash;
    const Model model = load_model(a.checkpoint, &checkpoint_hash);
    const auto& bank = model.sinc();
    if (a.response_points != 0 && a.response_points < std::max<std::size_t>(2, bank.length()))
        throw UsageError("--response-points must be at least the kernel length " + std::to_string(bank.length()));

    std::ostringstream os;
    os << "# checkpoint " << checkpoint_hash << '\n';
    if (auto m = sibling_manifest_hash(a.checkpoint)) os << "# manifest " << *m << '\n';
    char line[96];
    for (std::size_t i = 0; i < bank.size(); ++i) {
        const CutoffPair hz = bank.band_hz(i);
        std::snprintf(line, sizeof line, "%zu %.6f %.6f\n", i, hz.low, hz.high);
        os << line;
    }
    if (a.response_points) {
        for (std::size_t i = 0; i < bank.size(); ++i) {
            const auto kernel = bank.kernel(i);
            const auto r = frequency_response(kernel, a.response_points);
            os << "# response " << i << " points " << a.response_points << '\n';
            for (std::size_t k = 0; k < a.response_points; ++k) {
                std::snprintf(line, sizeof line, "%.8f %.10g\n", r.frequencies[k], r.magnitude[k]);
                os << line;
            }
        }
    }
    spill(a.out, os.str());
    out << "wrote " << bank.size() << " filters to " << a.out << '\n';
    return kOk;
}

int cmd_inspect(const std::string& config_path, std::ostream& out) {
    const RunConfig rc = load_run_config(config_path);
    rc.model.validate();
    const ParameterTable table = count_parameters(rc.model);
    out << std::left << std::setw(20) << "layer" << std::setw(12) << "formula" << std::right << std::setw(10)
        << "params" << '\n';
    for (const auto& l : table.layers)
        out << std::left << std::setw(20) << l.layer << std::setw(12) << l.formula << std::right << std::setw(10)
            << l.count << '\n';
    out << std::left << std::setw(32) << "total" << std::right << std::setw(10) << table.total << '\n';
    return kOk;
}

struct SynthArgs {
    std::size_t classes = 2;
    std::string bands, out;
    SyntheticSpec spec;
};

int cmd_synth(SynthArgs a, std::ostream& out) {
    a.spec.bands = parse_bands(a.bands);
    if (a.spec.bands.size() != a.classes)
        throw UsageError("--bands lists " + std::to_string(a.spec.bands.size()) + " bands for " +
                         std::to_string(a.classes) + " classes");
    const TrialSet set = generate_synthetic(a.spec);
    write_container(set, a.out);
    out << "wrote " << set.size() << " trials (" << set.channels << " channels x " << set.samples << " samples at "
        << set.fs << " Hz) to " << a.out << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sinc-EEGNet: learnable band-pass EEG classifier"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a model on a trial container");
    train_cmd->add_option("--data", train_args.data, "EEGT trial container")->required();
    train_cmd->add_option("--config", train_args.config, "key = value configuration file");
    train_cmd->add_option("--paradigm", train_args.paradigm, "competition | within_subject | cross_subject");
    train_cmd->add_option("--subject", train_args.subject, "subject id (within/cross paradigms)");
    train_cmd->add_option("--out", train_args.out, "output directory")->required();
    train_cmd->add_option("--seed", train_args.seed, "overrides the config seed");
    train_cmd->add_option("--zscore", train_args.zscore, "per_channel | whole_trial");

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a trial container");
    eval_cmd->add_option("--data", eval_args.data, "EEGT trial container")->required();
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--subject", eval_args.subject, "restrict to one subject");
    eval_cmd->add_option("--report", eval_args.report, "also write the report to this file");
    eval_cmd->add_option("--zscore", eval_args.zscore, "per_channel | whole_trial");

    FilterArgs filter_args;
    auto* filters_cmd = app.add_subcommand("filters", "Export learned sinc bands");
    filters_cmd->add_option("--checkpoint", filter_args.checkpoint, "checkpoint file")->required();
    filters_cmd->add_option("--out", filter_args.out, "output text file")->required();
    filters_cmd->add_option("--response-points", filter_args.response_points,
                            "frequency-response rows per filter (0 = none)");

    std::string inspect_config;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print the parameter table for a config");
    inspect_cmd->add_option("--config", inspect_config, "key = value configuration file")->required();

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic band-power container");
    synth_cmd->add_option("--classes", synth_args.classes, "number of classes")->required();
    synth_cmd->add_option("--per-class", synth_args.spec.n_per_class, "trials per class, subject and session")
        ->required();
    synth_cmd->add_option("--bands", synth_args.bands, "one lo-hi band in Hz per class, e.g. 8-12,18-26")
        ->required();
    synth_cmd->add_option("--out", synth_args.out, "output container")->required();
    synth_cmd->add_option("--seed", synth_args.spec.seed, "generator seed");
    synth_cmd->add_option("--channels", synth_args.spec.channels, "channel count");
    synth_cmd->add_option("--samples", synth_args.spec.samples, "samples per trial");
    synth_cmd->add_option("--fs", synth_args.spec.fs, "sampling rate in Hz");
    synth_cmd->add_option("--snr", synth_args.spec.snr, "band power relative to the background noise");
    synth_cmd->add_option("--subjects", synth_args.spec.subjects, "subject count");
    synth_cmd->add_option("--sessions", synth_args.spec.sessions, "session count");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*train_cmd) return cmd_train(train_args, out, err);
        if (*eval_cmd) return cmd_eval(eval_args, out, err);
        if (*filters_cmd) return cmd_filters(filter_args, out);
        if (*inspect_cmd) return cmd_inspect(inspect_config, out);
        if (*synth_cmd) return cmd_synth(synth_args, out);
    } catch (const CorruptArtifact& e) {
        err << "error: corrupt artifact: " << e.what() << '\n';
        return kCorruptArtifact;
    } catch (const FormatError& e) {
        err << "error: corrupt artifact: " << e.what() << '\n';
        return kCorruptArtifact;
    } catch (const DataError& e) {
        err << "error: data mismatch: " << e.what() << '\n';
        return kDataMismatch;
    } catch (const ShapeError& e) {
        err << "error: data mismatch: " << e.what() << '\n';
        return kDataMismatch;
    } catch (const ConfigError& e) {
        err << "error: invalid config field " << e.field() << ": " << e.what() << '\n';
        return kUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

}  // namespace sinceeg::cli
