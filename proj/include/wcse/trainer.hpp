#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wcse/config.hpp"
#include "wcse/encoder.hpp"
#include "wcse/synthetic.hpp"

namespace wcse {

// Training rows plus a held-out dev split with its scored pairs.
struct Dataset {
    Matrix train;
    SyntheticData dev;
    std::vector<ScoredPair> dev_pairs;
    // Same-cluster dev row pairs, used for alignment.
    std::vector<std::pair<std::size_t, std::size_t>> dev_positive_pairs;
};

// Last `dev_fraction` of the rows become the dev split.
Dataset split_dataset(const SyntheticData& data, double dev_fraction);
Dataset make_dataset(const TrainConfig& config);

struct EvalMetrics {
    double alignment = 0.0;
    double uniformity = 0.0;
    double spearman = 0.0;
};

// Dev-set embeddings: eval-mode encoder, optional group whitening, unit rows.
Matrix embed(const Checkpoint& ckpt, const Matrix& x);
EvalMetrics evaluate(const Checkpoint& ckpt, const Dataset& data);

struct EvalRecord {
    std::size_t step = 0;
    double loss = 0.0;
    EvalMetrics metrics;
};

struct RunReport {
    std::vector<EvalRecord> records;
    std::size_t best_index = 0;
    const EvalRecord& best() const { return records.at(best_index); }
};

struct TrainResult {
    RunReport report;
    Checkpoint best;
    Checkpoint final;
};

struct StepResult {
    double loss = 0.0;
    EncoderGrads grads;
    Matrix anchor_outputs;  // raw encoder outputs of view 0
};

// Loss and parameter gradients for one mini-batch, whitening held fixed.
StepResult contrastive_step(const EncoderState& state, const Matrix& batch,
                            const TrainConfig& config, std::uint64_t step_seed);

// Row indices of the mini-batch drawn at `step`.
std::vector<std::size_t> sample_batch(std::size_t rows, std::size_t batch_size,
                                      std::uint64_t seed, std::size_t step);

// forward views -> loss -> backward -> SGD; evaluates at step 0, every
// `eval_every` steps and at the last step. `on_record` sees each record as
// it is produced.
TrainResult train(const TrainConfig& config, const Dataset& data,
                  const std::function<void(const EvalRecord&)>& on_record = {});

// One `key=value,...` line per record.
std::string format_record(const EvalRecord& record);
std::string format_summary(const RunReport& report);
std::string format_eval(const EvalMetrics& metrics);
void write_report(std::ostream& out, const RunReport& report);

// Parses a `key=value,...` line.
std::map<std::string, std::string> parse_record(const std::string& line);

}  // namespace wcse
