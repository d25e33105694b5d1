#include "sinceeg/training.hpp"

#include "sinceeg/error.hpp"
#include "sinceeg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sinceeg {

std::string to_string(Paradigm paradigm) {
    switch (paradigm) {
    case Paradigm::competition: return "competition";
    case Paradigm::within_subject: return "within_subject";
    case Paradigm::cross_subject: return "cross_subject";
    }
    return "unknown";
}

Paradigm parse_paradigm(const std::string& text) {
    if (text == "competition") return Paradigm::competition;
    if (text == "within_subject" || text == "within") return Paradigm::within_subject;
    if (text == "cross_subject" || text == "cross") return Paradigm::cross_subject;
    throw ConfigError("paradigm", "unknown paradigm '" + text + "'");
}

bool needs_subject(Paradigm paradigm) { return paradigm != Paradigm::competition; }

double default_dropout(Paradigm paradigm) { return paradigm == Paradigm::within_subject ? 0.5 : 0.25; }

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1", "must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2", "must lie in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("eps", "must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
    if (needs_subject(paradigm) && !subject)
        throw ConfigError("subject", to_string(paradigm) + " needs a subject id");
}

void adam_step(std::span<const Parameter> params, AdamState& state, const TrainConfig& config) {
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.tensor.numel(), 0.0);
            state.v.emplace_back(p.tensor.numel(), 0.0);
        }
    }
    if (state.m.size() != params.size())
        throw ShapeError("adam_step", "params", "optimizer state tracks " + std::to_string(state.m.size()) +
                                                    " tensors, got " + std::to_string(params.size()));
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(config.beta1, t);
    const double bias2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor p = params[i].tensor;
        auto& m = state.m[i];
        auto& v = state.v[i];
        if (m.size() != p.numel())
            throw ShapeError("adam_step", params[i].name, "optimizer state does not match parameter");
        auto x = p.data();
        std::span<const double> g = p.grad();
        const bool decay = params[i].decay && config.weight_decay > 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            double gk = g.empty() ? 0.0 : g[k];
            if (decay) {
                if (config.decoupled_weight_decay)
                    x[k] -= config.learning_rate * config.weight_decay * x[k];
                else
                    gk += config.weight_decay * x[k];
            }
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * gk;
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * gk * gk;
            const double m_hat = m[k] / bias1;
            const double v_hat = v[k] / bias2;
            x[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps);
        }
    }
}

Split split_dataset(const TrialSet& trials, Paradigm paradigm, std::optional<unsigned> subject) {
    std::set<unsigned> subjects;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& t = trials.trials[i];
        if (t.session != 1 && t.session != 2)
            throw std::invalid_argument("split_dataset: trial " + std::to_string(i) +
                                        " lacks a session tag (1 or 2)");
        subjects.insert(t.subject);
    }
    if (needs_subject(paradigm)) {
        if (!subject) throw ConfigError("subject", to_string(paradigm) + " needs a subject id");
        if (!subjects.count(*subject))
            throw ConfigError("subject", "unknown subject id " + std::to_string(*subject));
    }
    Split split{trials.like(), trials.like()};
    for (const auto& t : trials.trials) {
        const bool own = subject && t.subject == *subject;
        bool to_train = false, to_test = false;
        switch (paradigm) {
        case Paradigm::competition:
            to_train = t.session == 1;
            to_test = t.session == 2;
            break;
        case Paradigm::within_subject:
            to_train = own && t.session == 1;
            to_test = own && t.session == 2;
            break;
        case Paradigm::cross_subject:
            to_train = !own && t.session == 1;
            to_test = own && t.session == 2;
            break;
        }
        if (to_train) split.train.trials.push_back(t);
        if (to_test) split.test.trials.push_back(t);
    }
    return split;
}

Tensor make_batch(const TrialSet& set, std::span<const std::size_t> indices) {
    const std::size_t per = set.channels * set.samples;
    std::vector<double> values(indices.size() * per);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& d = set.trials.at(indices[i]).data;
        if (d.size() != per) throw ShapeError("make_batch", "trial", "trial size disagrees with set geometry");
        std::copy(d.begin(), d.end(), values.begin() + static_cast<std::ptrdiff_t>(i * per));
    }
    return Tensor::from({indices.size(), set.channels, set.samples}, std::move(values));
}

TrainResult train(Model& model, const TrialSet& train_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    if (train_set.empty()) throw std::invalid_argument("train: training set is empty");
    if (train_set.channels != model.config().channels || train_set.samples != model.config().samples)
        throw ShapeError("train", "trial", "data is " + std::to_string(train_set.channels) + "x" +
                                               std::to_string(train_set.samples) + ", model expects " +
                                               std::to_string(model.config().channels) + "x" +
                                               std::to_string(model.config().samples));
    for (const auto& t : train_set.trials)
        if (t.label >= model.config().classes)
            throw std::invalid_argument("train: label " + std::to_string(t.label) + " exceeds model classes");

    Rng rng(config.seed);
    const auto params = model.parameters();
    AdamState state;
    TrainResult result;
    const std::size_t n = train_set.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
        double total = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            std::span<const std::size_t> idx(order.data() + start, stop - start);
            std::vector<std::size_t> labels;
            for (auto k : idx) labels.push_back(train_set.trials[k].label);

            Tape tape;
            model.zero_grad();
            const Tensor logits = model.forward(tape, make_batch(train_set, idx), true, rng);
            const Tensor loss = ops::softmax_cross_entropy(tape, logits, labels);
            const double value = loss.item();
            if (!std::isfinite(value)) throw DivergenceError(epoch, step);
            tape.backward(loss);
            adam_step(params, state, config);
            total += value * static_cast<double>(idx.size());
            ++step;
        }
        result.epoch_loss.push_back(total / static_cast<double>(n));
        if (on_epoch) on_epoch(epoch, result.epoch_loss.back());
    }
    return result;
}

std::size_t EvalReport::trial_count() const {
    std::size_t n = 0;
    for (const auto& row : confusion) n += std::accumulate(row.begin(), row.end(), std::size_t{0});
    return n;
}

std::vector<std::size_t> predict_classes(std::span<const double> logits, std::size_t classes) {
    if (classes == 0 || logits.size() % classes != 0)
        throw ShapeError("predict_classes", "logits", "length is not a multiple of the class count");
    std::vector<std::size_t> out(logits.size() / classes);
    for (std::size_t b = 0; b < out.size(); ++b) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < classes; ++k)
            if (logits[b * classes + k] > logits[b * classes + best]) best = k;
        out[b] = best;
    }
    return out;
}

EvalReport report_from_predictions(std::span<const std::size_t> predicted, const TrialSet& set,
                                   std::size_t classes) {
    if (predicted.size() != set.size())
        throw ShapeError("report", "trials", "prediction count disagrees with trial count");
    EvalReport r;
    r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const auto& t = set.trials[i];
        if (t.label >= classes || predicted[i] >= classes)
            throw std::invalid_argument("report: class index outside [0, " + std::to_string(classes) + ")");
        ++r.confusion[t.label][predicted[i]];
        const bool hit = predicted[i] == t.label;
        correct += hit;
        auto& s = r.per_subject[t.subject];
        s.correct += hit;
        ++s.total;
    }
    r.accuracy = predicted.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(predicted.size());
    return r;
}

EvalReport evaluate(const Model& model, const TrialSet& test_set, std::size_t batch_size) {
    if (test_set.empty()) throw std::invalid_argument("evaluate: test set is empty");
    if (batch_size == 0) batch_size = 1;
    Tape tape(false);
    Rng unused(0);
    std::vector<std::size_t> predicted;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < test_set.size(); start += batch_size) {
        idx.clear();
        for (std::size_t i = start; i < std::min(test_set.size(), start + batch_size); ++i) idx.push_back(i);
        const Tensor logits = model.forward(tape, make_batch(test_set, idx), false, unused);
        const auto p = predict_classes(logits.data(), model.config().classes);
        predicted.insert(predicted.end(), p.begin(), p.end());
    }
    return report_from_predictions(predicted, test_set, model.config().classes);
}

std::string format_loss_curve(std::span<const double> epoch_loss, const std::string& manifest_hash) {
    std::ostringstream os;
    if (!manifest_hash.empty()) os << "# manifest " << manifest_hash << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < epoch_loss.size(); ++i) os << "epoch " << i << " loss " << epoch_loss[i] << '\n';
    return os.str();
}

std::string format_report(const EvalReport& report) {
    std::ostringstream os;
    for (const auto& [key, value] : report.metadata) os << "# " << key << ' ' << value << '\n';
    os << std::fixed << std::setprecision(4);
    os << "trials " << report.trial_count() << '\n';
    os << "accuracy " << report.accuracy << '\n';
    os << "confusion " << report.confusion.size() << '\n';
    for (const auto& row : report.confusion) {
        for (std::size_t k = 0; k < row.size(); ++k) os << (k ? " " : "") << row[k];
        os << '\n';
    }
    for (const auto& [subject, score] : report.per_subject)
        os << "subject " << subject << " accuracy " << score.accuracy() << " trials " << score.total << '\n';
    return os.str();
}

}  // namespace sinceeg
