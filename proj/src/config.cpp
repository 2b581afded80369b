#include "wcse/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "wcse/errors.hpp"

namespace wcse {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

double parse_double(const std::string& text, const std::string& what) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError(what + ": '" + text + "' is not a number");
    return v;
}

std::uint64_t parse_unsigned(const std::string& text, const std::string& what) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError(what + ": '" + text + "' is not a non-negative integer");
    return v;
}

std::string to_string(LossKind kind) { return kind == LossKind::sum_out ? "sum_out" : "sum_in"; }

std::string to_string(AugKind kind) { return kind == AugKind::sgw ? "sgw" : "dropout_only"; }

LossKind parse_loss_kind(const std::string& text) {
    if (text == "sum_out") return LossKind::sum_out;
    if (text == "sum_in") return LossKind::sum_in;
    throw ConfigError("loss_kind must be sum_out or sum_in, got '" + text + "'");
}

AugKind parse_aug_kind(const std::string& text) {
    if (text == "sgw") return AugKind::sgw;
    if (text == "dropout_only") return AugKind::dropout_only;
    throw ConfigError("aug_kind must be sgw or dropout_only, got '" + text + "'");
}

namespace {

bool parse_bool(const std::string& text, const std::string& what) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError(what + ": '" + text + "' is not a boolean");
}

std::size_t parse_count(const std::string& text, const std::string& what) {
    return static_cast<std::size_t>(parse_unsigned(text, what));
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

const std::vector<std::string>& TrainConfig::keys() {
    static const std::vector<std::string> k = {
        "temperature", "lambda_m",    "num_positives", "group_size", "shuffled",
        "momentum",    "ridge",       "learning_rate", "sgd_momentum", "batch_size",
        "steps",       "eval_every",  "seed",          "loss_kind",  "aug_kind",
        "input_dim",   "hidden_dim",  "embed_dim",     "dropout",    "clusters",
        "per_cluster", "noise",       "data_seed",     "dev_fraction"};
    return k;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
    if (key == "temperature") temperature = parse_double(value, key);
    else if (key == "lambda_m")
        lambda_m = value == "auto" ? std::nullopt : std::optional(parse_double(value, key));
    else if (key == "num_positives") num_positives = parse_count(value, key);
    else if (key == "group_size") group_size = parse_count(value, key);
    else if (key == "shuffled") shuffled = parse_bool(value, key);
    else if (key == "momentum") momentum = parse_double(value, key);
    else if (key == "ridge") ridge = parse_double(value, key);
    else if (key == "learning_rate") learning_rate = parse_double(value, key);
    else if (key == "sgd_momentum") sgd_momentum = parse_double(value, key);
    else if (key == "batch_size") batch_size = parse_count(value, key);
    else if (key == "steps") steps = parse_count(value, key);
    else if (key == "eval_every") eval_every = parse_count(value, key);
    else if (key == "seed") seed = parse_unsigned(value, key);
    else if (key == "loss_kind") loss_kind = parse_loss_kind(value);
    else if (key == "aug_kind") aug_kind = parse_aug_kind(value);
    else if (key == "input_dim") input_dim = parse_count(value, key);
    else if (key == "hidden_dim") hidden_dim = parse_count(value, key);
    else if (key == "embed_dim") embed_dim = parse_count(value, key);
    else if (key == "dropout") dropout = parse_double(value, key);
    else if (key == "clusters") clusters = parse_count(value, key);
    else if (key == "per_cluster") per_cluster = parse_count(value, key);
    else if (key == "noise") noise = parse_double(value, key);
    else if (key == "data_seed") data_seed = parse_unsigned(value, key);
    else if (key == "dev_fraction") dev_fraction = parse_double(value, key);
    else throw ConfigError("unknown key '" + key + "'");
}

std::string TrainConfig::get(const std::string& key) const {
    if (key == "temperature") return format_double(temperature);
    if (key == "lambda_m") return lambda_m ? format_double(*lambda_m) : "auto";
    if (key == "num_positives") return std::to_string(num_positives);
    if (key == "group_size") return std::to_string(group_size);
    if (key == "shuffled") return shuffled ? "true" : "false";
    if (key == "momentum") return format_double(momentum);
    if (key == "ridge") return format_double(ridge);
    if (key == "learning_rate") return format_double(learning_rate);
    if (key == "sgd_momentum") return format_double(sgd_momentum);
    if (key == "batch_size") return std::to_string(batch_size);
    if (key == "steps") return std::to_string(steps);
    if (key == "eval_every") return std::to_string(eval_every);
    if (key == "seed") return std::to_string(seed);
    if (key == "loss_kind") return to_string(loss_kind);
    if (key == "aug_kind") return to_string(aug_kind);
    if (key == "input_dim") return std::to_string(input_dim);
    if (key == "hidden_dim") return std::to_string(hidden_dim);
    if (key == "embed_dim") return std::to_string(embed_dim);
    if (key == "dropout") return format_double(dropout);
    if (key == "clusters") return std::to_string(clusters);
    if (key == "per_cluster") return std::to_string(per_cluster);
    if (key == "noise") return format_double(noise);
    if (key == "data_seed") return std::to_string(data_seed);
    if (key == "dev_fraction") return format_double(dev_fraction);
    throw ConfigError("unknown key '" + key + "'");
}

double TrainConfig::effective_lambda() const {
    return lambda_m ? *lambda_m : 1.0 / static_cast<double>(num_positives - 1);
}

void TrainConfig::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(temperature > 0.0, "temperature must be > 0");
    require(!lambda_m || *lambda_m > 0.0, "lambda_m must be > 0");
    require(num_positives >= 2, "num_positives must be >= 2 (anchor plus at least one positive)");
    require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
    require(ridge >= 0.0, "ridge must be >= 0");
    require(learning_rate > 0.0, "learning_rate must be > 0");
    require(sgd_momentum >= 0.0 && sgd_momentum < 1.0, "sgd_momentum must lie in [0, 1)");
    require(batch_size >= 2, "batch_size must be >= 2");
    require(eval_every >= 1, "eval_every must be >= 1");
    require(input_dim >= 1 && hidden_dim >= 1 && embed_dim >= 1, "dimensions must be >= 1");
    require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
    require(group_size >= 1 && embed_dim % group_size == 0,
            "group_size " + std::to_string(group_size) + " must divide embed_dim " +
                std::to_string(embed_dim));
    require(clusters >= 1 && per_cluster >= 1, "clusters and per_cluster must be >= 1");
    require(noise >= 0.0, "noise must be >= 0");
    require(dev_fraction > 0.0 && dev_fraction < 1.0, "dev_fraction must lie in (0, 1)");
}

TrainConfig parse_config(const std::string& text) {
    TrainConfig config;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

std::string serialize_config(const TrainConfig& config) {
    std::string out;
    for (const auto& key : TrainConfig::keys()) out += key + " = " + config.get(key) + "\n";
    return out;
}

TrainConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

void save_config(const std::string& path, const TrainConfig& config) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write config file " + path);
    out << serialize_config(config);
}

}  // namespace wcse
