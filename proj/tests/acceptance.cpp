// Acceptance gate: one PASS/FAIL/SKIP line per primary criterion. Exit code 0
// only when no criterion fails.

#include "cli.hpp"
#include "support.hpp"

#include "sinceeg/checkpoint.hpp"
#include "sinceeg/network.hpp"
#include "sinceeg/preprocess.hpp"
#include "sinceeg/sinc.hpp"
#include "sinceeg/synthetic.hpp"
#include "sinceeg/training.hpp"
#include "sinceeg/trials.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace sinceeg;
using sinceeg::testing::gradcheck;
using sinceeg::testing::random_tensor;

namespace {

enum class Outcome { pass, fail, skip };

struct Verdict {
    Outcome outcome;
    std::string detail;
};

struct Gate {
    int failures = 0;
    int evaluated = 0;

    void run(const std::string& name, double budget_s, const std::function<Verdict()>& body) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = body();
        } catch (const std::exception& e) {
            v = {Outcome::fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (v.outcome != Outcome::skip && secs > budget_s) {
            v.outcome = Outcome::fail;
            v.detail += "; over time budget";
        }
        const char* tag = v.outcome == Outcome::pass ? "PASS" : v.outcome == Outcome::fail ? "FAIL" : "SKIP";
        std::printf("%s  %-34s %s [%.1f s, budget %.0f s]\n", tag, name.c_str(), v.detail.c_str(), secs, budget_s);
        std::fflush(stdout);
        if (v.outcome == Outcome::fail) ++failures;
        if (v.outcome != Outcome::skip) ++evaluated;
    }
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
    return buf;
}

Verdict parameter_accounting() {
    std::mt19937_64 rng(2020);
    auto pick = [&rng](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    int mismatches = 0;
    for (int i = 0; i < 100; ++i) {
        ModelConfig c;
        c.channels = pick(1, 64);
        c.samples = 64 * pick(1, 16);
        c.kernel_length = pick(2, std::min<std::size_t>(c.samples, 128));
        c.filters = pick(1, 64);
        c.depth = pick(1, 4);
        c.pointwise = pick(1, 128);
        c.classes = pick(2, 8);
        const std::size_t C = c.channels, T = c.samples, F1 = c.filters, D = c.depth, F2 = c.pointwise,
                          N = c.classes;
        const std::vector<std::size_t> formulas{2 * F1,     2 * F1,        C * D * F1, 2 * D * F1, 16 * D * F1,
                                                2 * D * F1, F2 * (D * F1), 2 * F2,     N * F2 * T / 64};
        const auto table = count_parameters(c);
        std::size_t sum = 0;
        bool ok = table.layers.size() == formulas.size();
        for (std::size_t k = 0; ok && k < formulas.size(); ++k) {
            ok = table.layers[k].count == formulas[k];
            sum += formulas[k];
        }
        ok = ok && table.total == sum;
        if (!ok) ++mismatches;
    }
    const std::size_t reference = count_parameters(ModelConfig{}).total;
    const std::size_t built = build_model(ModelConfig{}, 1).parameter_count();
    const bool ok = mismatches == 0 && reference == 9088 && built == 9088;
    return {ok ? Outcome::pass : Outcome::fail,
            "100 random configs, " + std::to_string(mismatches) + " mismatches; reference total " +
                std::to_string(reference) + " (built " + std::to_string(built) + "), expected 9088 exact"};
}

Verdict gradient_correctness() {
    std::mt19937_64 rng(7);
    std::vector<std::pair<std::string, double>> layers;
    auto add = [&layers](const std::string& n, double e) { layers.emplace_back(n, e); };

    Tensor x4 = random_tensor({2, 2, 3, 16}, rng);
    Tensor k = random_tensor({3, 5}, rng);
    add("conv_temporal", gradcheck([&](Tape& t) { return ops::conv_temporal(t, x4, k, Padding::same); }, {x4, k}).worst);
    Tensor cut = Tensor::from({2, 2}, {0.05, 0.2, 0.3, 0.22}, true);
    add("sinc_conv", gradcheck(
                         [&](Tape& t) {
                             return ops::conv_temporal_symmetric(t, x4, ops::sinc_kernels(t, cut, 9), Padding::same);
                         },
                         {x4, cut})
                         .worst);
    Tensor ws = random_tensor({6, 3}, rng);
    add("depthwise_spatial",
        gradcheck([&](Tape& t) { return ops::depthwise_conv(t, x4, ws, DepthwiseKind::spatial); }, {x4, ws}).worst);
    Tensor xt = random_tensor({4, 3, 1, 32}, rng);
    Tensor wt = random_tensor({6, 16}, rng);
    add("depthwise_temporal",
        gradcheck([&](Tape& t) { return ops::depthwise_conv(t, xt, wt, DepthwiseKind::temporal); }, {xt, wt}).worst);
    Tensor wp = random_tensor({4, 3}, rng);
    add("pointwise", gradcheck([&](Tape& t) { return ops::pointwise_conv(t, xt, wp); }, {xt, wp}).worst);
    add("avg_pool", gradcheck([&](Tape& t) { return ops::avg_pool_time(t, x4, 4); }, {x4}).worst);
    Tensor g = random_tensor({2}, rng), b = random_tensor({2}, rng);
    add("layer_norm", gradcheck([&](Tape& t) { return ops::layer_norm(t, x4, g, b, 1e-5); }, {x4, g, b}).worst);
    add("celu", gradcheck([&](Tape& t) { return ops::celu(t, x4, 1.0); }, {x4}).worst);
    add("dropout", gradcheck(
                       [&](Tape& t) {
                           Rng r(3);
                           return ops::dropout(t, x4, 0.25, true, r);
                       },
                       {x4})
                       .worst);
    Tensor wl = random_tensor({3, 96}, rng);
    add("linear", gradcheck([&](Tape& t) { return ops::linear(t, x4, wl); }, {x4, wl}).worst);
    Tensor logits = random_tensor({3, 4}, rng);
    const std::vector<std::size_t> labels{0, 3, 1};
    add("softmax_cross_entropy",
        gradcheck([&](Tape& t) { return ops::softmax_cross_entropy(t, logits, labels); }, {logits}).worst);

    ModelConfig tiny;
    tiny.channels = 3;
    tiny.samples = 64;
    tiny.kernel_length = 16;
    tiny.filters = 2;
    tiny.depth = 1;
    tiny.pointwise = 2;
    tiny.classes = 2;
    const Model m = build_model(tiny, 10);
    Tensor batch = random_tensor({3, 3, 64}, rng, false);
    const std::vector<std::size_t> y{0, 1, 0};
    std::vector<Tensor> wrt;
    for (const auto& p : m.parameters()) wrt.push_back(p.tensor);
    const double e2e = gradcheck(
                           [&](Tape& t) {
                               Rng r(5);
                               return ops::softmax_cross_entropy(t, m.forward(t, batch, true, r), y);
                           },
                           wrt)
                           .worst;

    double worst = 0;
    std::string worst_name;
    for (const auto& [n, e] : layers)
        if (e >= worst) {
            worst = e;
            worst_name = n;
        }
    const bool ok = worst < 1e-5 && e2e < 1e-4;
    return {ok ? Outcome::pass : Outcome::fail,
            std::to_string(layers.size()) + " layers, worst " + worst_name + fmt(" rel err %.2e (< 1e-5)", worst) +
                fmt("; end-to-end %.2e (< 1e-4)", e2e)};
}

Verdict spectral_fidelity() {
    int checked = 0, failed = 0, not_applicable = 0;
    double worst_center = 1e9, worst_edge = 0;
    for (int i = 0; i <= 6; ++i) {
        const double f1 = 0.05 * (i + 1);
        for (double width : {0.1, 0.2}) {
            const double f2 = f1 + width;
            // bands reaching Nyquist keep it in the passband by construction
            if (f2 > 0.45 + 1e-12) {
                ++not_applicable;
                continue;
            }
            const auto kernel = materialize_kernel(f1, f2, 64);
            double peak = 0;
            for (int b = 0; b <= 512; ++b) peak = std::max(peak, sinceeg::testing::dtft_magnitude(kernel, b / 1024.0));
            const double center = sinceeg::testing::dtft_magnitude(kernel, 0.5 * (f1 + f2)) / peak;
            const double dc = sinceeg::testing::dtft_magnitude(kernel, 0.0) / peak;
            const double ny = sinceeg::testing::dtft_magnitude(kernel, 0.5) / peak;
            worst_center = std::min(worst_center, center);
            worst_edge = std::max({worst_edge, dc, ny});
            ++checked;
            if (!(center >= 0.9 && dc <= 0.05 && ny <= 0.05)) ++failed;
        }
    }
    return {failed == 0 ? Outcome::pass : Outcome::fail,
            std::to_string(checked) + " bands, " + std::to_string(failed) + " failing" +
                fmt("; min center/peak %.4f (>= 0.9), max DC|Nyquist/peak %.4f (<= 0.05)", worst_center, worst_edge) +
                "; " + std::to_string(not_applicable) + " grid bands with f2 > 0.45 not applicable"};
}

Verdict symmetric_equivalence() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    std::uniform_int_distribution<std::size_t> len(2, 64), extra(0, 64);
    int mismatched = 0, asymmetric = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t L = len(rng);
        const std::size_t T = L + extra(rng);
        const std::size_t K = 1 + trial % 4;
        std::vector<double> kv;
        for (std::size_t kk = 0; kk < K; ++kk) {
            double a = u(rng), b = u(rng);
            if (a > b) std::swap(a, b);
            const auto ker = materialize_kernel(a, b, L);
            for (std::size_t n = 0; n < L; ++n) asymmetric += ker[n] != ker[L - 1 - n];
            kv.insert(kv.end(), ker.begin(), ker.end());
        }
        Tensor kernels = Tensor::from({K, L}, kv);
        Tensor x = random_tensor({std::size_t(1 + trial % 2), std::size_t(1 + trial % 3), 2, T}, rng, false);
        const Padding pad = trial % 2 ? Padding::same : Padding::valid;
        Tape tape(false);
        const Tensor fast = ops::conv_temporal_symmetric(tape, x, kernels, pad);
        const Tensor naive = ops::conv_temporal_naive(x, kernels, pad);
        bool same = fast.shape() == naive.shape();
        for (std::size_t i = 0; same && i < fast.numel(); ++i) same = fast.data()[i] == naive.data()[i];
        mismatched += !same;
    }
    const bool ok = mismatched == 0 && asymmetric == 0;
    return {ok ? Outcome::pass : Outcome::fail, "1000 random cases, " + std::to_string(mismatched) +
                                                    " not bitwise equal, " + std::to_string(asymmetric) +
                                                    " asymmetric taps (both must be 0)"};
}

struct SyntheticRun {
    double accuracy = 0;
    bool overlaps_low = false, overlaps_high = false;
    std::string bands;
};

SyntheticRun synthetic_run(const SincInitOptions& init) {
    SyntheticSpec spec;
    spec.n_per_class = 50;
    spec.channels = 8;
    spec.samples = 512;
    spec.fs = 128.0;
    spec.bands = parse_bands("8-12,18-26");
    spec.snr = 1.0;
    spec.seed = 1;
    spec.sessions = 2;  // session 1 trains, session 2 tests
    const TrialSet data = preprocess(generate_synthetic(spec)).set;
    const Split split = split_dataset(data, Paradigm::competition, std::nullopt);

    ModelConfig mc;
    mc.channels = 8;
    mc.samples = 512;
    mc.classes = 2;
    mc.dropout_p = default_dropout(Paradigm::competition);
    TrainConfig tc;  // lr 1e-3, beta1 0.9, wd 2e-2, batch 20, 100 epochs
    Model model = build_model(mc, tc.seed, init);
    train(model, split.train, tc);

    SyntheticRun r;
    r.accuracy = evaluate(model, split.test).accuracy;
    for (std::size_t i = 0; i < model.sinc().size(); ++i) {
        const auto hz = model.sinc().band_hz(i);
        r.overlaps_low = r.overlaps_low || (hz.low <= 12.0 && hz.high >= 8.0);
        r.overlaps_high = r.overlaps_high || (hz.low <= 26.0 && hz.high >= 18.0);
    }
    double lowest = 1e9;
    for (std::size_t i = 0; i < model.sinc().size(); ++i) lowest = std::min(lowest, model.sinc().band_hz(i).low);
    r.bands = fmt("lowest learned low cutoff %.2f Hz", lowest);
    return r;
}

Verdict synthetic_learning() {
    const SyntheticRun r = synthetic_run(SincInitOptions{});
    const bool ok = r.accuracy >= 0.9 && r.overlaps_low && r.overlaps_high;
    return {ok ? Outcome::pass : Outcome::fail,
            fmt("test accuracy %.4f (>= 0.9)", r.accuracy) + "; overlap 8-12 Hz " + (r.overlaps_low ? "yes" : "NO") +
                ", 18-26 Hz " + (r.overlaps_high ? "yes" : "NO") + "; " + r.bands};
}

Verdict synthetic_learning_wide_init() {
    SincInitOptions wide;
    wide.std_hz = 32.0;
    const SyntheticRun r = synthetic_run(wide);
    const bool ok = r.accuracy >= 0.9 && r.overlaps_low && r.overlaps_high;
    return {ok ? Outcome::pass : Outcome::fail,
            "init std 32 Hz; " + fmt("test accuracy %.4f", r.accuracy) + "; overlap 8-12 Hz " +
                (r.overlaps_low ? "yes" : "NO") + ", 18-26 Hz " + (r.overlaps_high ? "yes" : "NO") + "; " + r.bands};
}

Verdict split_cardinalities() {
    TrialSet set{128.0, 1, 1, 4, {}};
    double id = 0;
    for (int s = 1; s <= 9; ++s)
        for (int sess = 1; sess <= 2; ++sess)
            for (int i = 0; i < 288; ++i)
                set.trials.push_back({{id++}, static_cast<std::uint8_t>(i % 4), static_cast<std::uint8_t>(s),
                                      static_cast<std::uint8_t>(sess)});
    auto disjoint = [](const Split& sp) {
        std::set<double> train;
        for (const auto& t : sp.train.trials) train.insert(t.data[0]);
        for (const auto& t : sp.test.trials)
            if (train.count(t.data[0])) return false;
        return true;
    };
    bool ok = true;
    const Split comp = split_dataset(set, Paradigm::competition, std::nullopt);
    ok = ok && comp.train.size() == 2592 && comp.test.size() == 2592 && disjoint(comp);
    for (unsigned s = 1; s <= 9; ++s) {
        const Split w = split_dataset(set, Paradigm::within_subject, s);
        const Split c = split_dataset(set, Paradigm::cross_subject, s);
        ok = ok && w.train.size() == 288 && w.test.size() == 288 && disjoint(w);
        ok = ok && c.train.size() == 2304 && c.test.size() == 288 && disjoint(c);
    }
    return {ok ? Outcome::pass : Outcome::fail,
            "competition 2592/2592, within 288/288, cross 2304/288 for all 9 subjects, disjoint"};
}

Verdict determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "sinceeg_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ostringstream sink;
    auto run = [&sink](std::vector<std::string> args) { return cli::run(args, sink, sink); };
    const std::string data = (dir / "synthetic.eegt").string();
    if (run({"synth", "--classes", "2", "--per-class", "25", "--bands", "8-12,18-26", "--out", data, "--sessions",
             "2"}) != 0)
        return {Outcome::fail, "synth failed"};
    std::ofstream(dir / "run.cfg") << "epochs = 10\n";
    for (const char* out : {"a", "b"})
        if (run({"train", "--data", data, "--config", (dir / "run.cfg").string(), "--paradigm", "competition", "--out",
                 (dir / out).string()}) != 0)
            return {Outcome::fail, "train failed: " + sink.str()};
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const std::string a = slurp(dir / "a" / "checkpoint.seeg");
    const std::string b = slurp(dir / "b" / "checkpoint.seeg");
    fs::remove_all(dir);
    const bool ok = !a.empty() && a == b;
    return {ok ? Outcome::pass : Outcome::fail,
            "two CLI training runs (C=8, T=512, 10 epochs), checkpoints of " + std::to_string(a.size()) + " bytes " +
                (ok ? "bitwise identical" : "DIFFER")};
}

Verdict full_replication() {
    const char* path = std::getenv("SINCEEG_BCI_IV_2A");
    if (!path || !*path)
        return {Outcome::skip, "set SINCEEG_BCI_IV_2A to a converted competition container to run (hours)"};
    const TrialSet data = preprocess(read_container(path)).set;
    auto run_split = [&data](Paradigm p, std::optional<unsigned> subject) {
        const Split split = split_dataset(data, p, subject);
        ModelConfig mc;
        mc.channels = data.channels;
        mc.samples = data.samples;
        mc.classes = data.label_count;
        mc.dropout_p = default_dropout(p);
        TrainConfig tc;
        tc.paradigm = p;
        tc.subject = subject;
        Model m = build_model(mc, tc.seed);
        train(m, split.train, tc);
        return evaluate(m, split.test).accuracy;
    };
    const double competition = run_split(Paradigm::competition, std::nullopt);
    double within = 0, cross = 0;
    for (unsigned s = 1; s <= 9; ++s) {
        within += run_split(Paradigm::within_subject, s) / 9.0;
        cross += run_split(Paradigm::cross_subject, s) / 9.0;
    }
    const bool ok = std::abs(competition - 0.7539) <= 0.03 && std::abs(within - 0.7056) <= 0.03 &&
                    std::abs(cross - 0.5898) <= 0.03;
    return {ok ? Outcome::pass : Outcome::fail,
            fmt("competition %.4f (0.7539 +- 0.03), within %.4f (0.7056 +- 0.03), cross %.4f (0.5898 +- 0.03)",
                competition, within, cross)};
}

}  // namespace

int main() {
    Gate gate;
    gate.run("parameter accounting", 1, parameter_accounting);
    gate.run("gradient correctness", 30, gradient_correctness);
    gate.run("spectral fidelity", 5, spectral_fidelity);
    gate.run("symmetric convolution bitwise", 5, symmetric_equivalence);
    gate.run("synthetic band-power learning", 600, synthetic_learning);
    gate.run("split cardinalities", 1, split_cardinalities);
    gate.run("determinism", 120, determinism);
    gate.run("full replication (conditional)", 1e9, full_replication);

    std::printf("acceptance: %d criteria evaluated, %d failed\n", gate.evaluated, gate.failures);
    // reference only, not a criterion: the alternative init-variance reading
    if (std::getenv("SINCEEG_ACCEPTANCE_WIDE_INIT")) {
        Gate info;
        info.run("[info] synthetic, std = fs/4 init", 600, synthetic_learning_wide_init);
    }
    return gate.failures == 0 ? 0 : 1;
}
