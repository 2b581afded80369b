#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wcse/encoder.hpp"
#include "wcse/losses.hpp"

namespace wcse {

struct TrainConfig {
    double temperature = 0.05;
    std::optional<double> lambda_m;  // unset: 1 / (number of positive views)
    std::size_t num_positives = 3;   // views per anchor, anchor included
    std::size_t group_size = 8;
    bool shuffled = true;
    double momentum = 0.95;
    double ridge = 1e-5;
    double learning_rate = 1e-2;
    double sgd_momentum = 0.0;  // 0: plain SGD
    std::size_t batch_size = 64;
    std::size_t steps = 2000;
    std::size_t eval_every = 125;
    std::uint64_t seed = 1;
    LossKind loss_kind = LossKind::sum_out;
    AugKind aug_kind = AugKind::sgw;

    std::size_t input_dim = 32;
    std::size_t hidden_dim = 64;
    std::size_t embed_dim = 16;
    double dropout = 0.1;

    // Synthetic corpus used when no data file is given.
    std::size_t clusters = 8;
    std::size_t per_cluster = 40;
    double noise = 0.3;
    std::uint64_t data_seed = 7;
    double dev_fraction = 0.2;

    double effective_lambda() const;
    void validate() const;

    // Sets one field from its canonical key and textual value.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    static const std::vector<std::string>& keys();

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Flat `key = value` lines; `#` starts a comment. Unknown keys are errors.
TrainConfig parse_config(const std::string& text);
std::string serialize_config(const TrainConfig& config);
TrainConfig load_config(const std::string& path);
void save_config(const std::string& path, const TrainConfig& config);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& what);
std::uint64_t parse_unsigned(const std::string& text, const std::string& what);

std::string to_string(LossKind kind);
std::string to_string(AugKind kind);
LossKind parse_loss_kind(const std::string& text);
AugKind parse_aug_kind(const std::string& text);

}  // namespace wcse
