#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wcse/config.hpp"
#include "wcse/synthetic.hpp"
#include "wcse/trainer.hpp"

namespace wcse {

// Dataset files written by `gen`: PREFIX.wemb (samples), PREFIX.centers.wemb
// and PREFIX.labels (one cluster index per line).
void save_dataset(const std::string& prefix, const SyntheticData& data);
SyntheticData load_dataset(const std::string& prefix);

struct GenOptions {
    std::string out_prefix;
    std::size_t clusters = 8;
    std::size_t per_cluster = 40;
    std::size_t dim = 32;
    double noise = 0.3;
    double anisotropy = 0.0;  // > 0 squeezes the samples into a cone
    std::uint64_t seed = 7;
};
SyntheticData cmd_gen(const GenOptions& options, std::ostream& log);

struct WhitenOptions {
    std::string input;
    std::string output;
    std::string kind = "zca";  // pca | zca | group | sgw
    std::size_t group_size = 0;  // 0: full dimension
    double ridge = 0.0;
    std::uint64_t seed = 0;
};
struct WhitenSummary {
    double uniformity_before = 0.0;
    double uniformity_after = 0.0;
};
// Post-hoc whitening with the file's own statistics.
Matrix whiten_embeddings(const Matrix& z, const WhitenOptions& options);
WhitenSummary cmd_whiten(const WhitenOptions& options, std::ostream& log);

struct TrainOptions {
    TrainConfig config;
    std::optional<std::string> data_prefix;
    std::string checkpoint_out;
    std::string report_out;
};
TrainResult cmd_train(const TrainOptions& options, std::ostream& log);

struct EvalOptions {
    std::string checkpoint;
    TrainConfig config;  // supplies the synthetic corpus and dev split
    std::optional<std::string> data_prefix;
    std::string report_out;
};
EvalMetrics cmd_eval(const EvalOptions& options, std::ostream& log);

// `key=v1,v2,...` with key in {group_size, num_positives, loss_kind, aug_kind, shuffled}.
struct SweepSpec {
    std::string key;
    std::vector<std::string> values;
};
SweepSpec parse_sweep(const std::string& text);

struct AblationRow {
    std::string value;
    EvalRecord final_record;
    EvalRecord best_record;
};
struct AblateOptions {
    TrainConfig config;
    SweepSpec sweep;
    std::optional<std::string> data_prefix;
    std::string report_out;
};
std::vector<AblationRow> cmd_ablate(const AblateOptions& options, std::ostream& log);

}  // namespace wcse
