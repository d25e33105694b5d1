#pragma once

#include "sinceeg/network.hpp"
#include "sinceeg/trials.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sinceeg {

enum class Paradigm { competition, within_subject, cross_subject };

std::string to_string(Paradigm paradigm);
/// Accepts "competition", "within_subject"/"within", "cross_subject"/"cross".
Paradigm parse_paradigm(const std::string& text);
bool needs_subject(Paradigm paradigm);
/// 0.5 within-subject, 0.25 otherwise.
double default_dropout(Paradigm paradigm);

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 2e-2;
    /// Decoupled (AdamW-style) decay; false adds wd * param to the gradient.
    bool decoupled_weight_decay = true;
    std::size_t batch_size = 20;
    std::size_t epochs = 100;
    Paradigm paradigm = Paradigm::competition;
    std::optional<unsigned> subject;
    std::uint64_t seed = 20200101;

    void validate() const;
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t step = 0;
};

/// One Adam update with bias correction. Weight decay touches only
/// parameters flagged `decay` (convolution and dense weights).
void adam_step(std::span<const Parameter> params, AdamState& state, const TrainConfig& config);

struct Split {
    TrialSet train;
    TrialSet test;
};

/// competition: session 1 / session 2 of everyone; within_subject: the
/// subject's session 1 / session 2; cross_subject: other subjects' session 1 /
/// the subject's session 2.
Split split_dataset(const TrialSet& trials, Paradigm paradigm, std::optional<unsigned> subject);

struct TrainResult {
    std::vector<double> epoch_loss;  // mean training loss per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// epochs x ceil(n / batch) Adam steps over a fresh seeded shuffle each
/// epoch; the last partial batch is kept. Throws DivergenceError on a
/// non-finite loss.
TrainResult train(Model& model, const TrialSet& train_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct SubjectScore {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct EvalReport {
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
    double accuracy = 0.0;
    std::map<unsigned, SubjectScore> per_subject;
    std::map<std::string, std::string> metadata;

    std::size_t trial_count() const;
};

/// argmax per row, ties to the lowest class index.
std::vector<std::size_t> predict_classes(std::span<const double> logits, std::size_t classes);

EvalReport report_from_predictions(std::span<const std::size_t> predicted, const TrialSet& set,
                                   std::size_t classes);

/// Inference-mode evaluation (dropout off, no tape).
EvalReport evaluate(const Model& model, const TrialSet& test_set, std::size_t batch_size = 64);

/// "[# manifest <hash>]" then "epoch <i> loss <v>" per line.
std::string format_loss_curve(std::span<const double> epoch_loss, const std::string& manifest_hash = {});
std::string format_report(const EvalReport& report);

/// Batch tensor [n, C, T] from the selected trials.
Tensor make_batch(const TrialSet& set, std::span<const std::size_t> indices);

}  // namespace sinceeg
