#include "wcse/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "wcse/embedding_file.hpp"
#include "wcse/errors.hpp"
#include "wcse/linalg.hpp"
#include "wcse/metrics.hpp"
#include "wcse/rng.hpp"
#include "wcse/whitening.hpp"

namespace wcse {

void save_dataset(const std::string& prefix, const SyntheticData& data) {
    save_embeddings(prefix + ".wemb", data.samples);
    save_embeddings(prefix + ".centers.wemb", data.centers);
    std::ofstream labels(prefix + ".labels", std::ios::trunc);
    if (!labels) throw FormatError("cannot write " + prefix + ".labels");
    for (std::size_t l : data.labels) labels << l << '\n';
}

SyntheticData load_dataset(const std::string& prefix) {
    SyntheticData data;
    data.samples = load_embeddings(prefix + ".wemb");
    data.centers = load_embeddings(prefix + ".centers.wemb");
    std::ifstream labels(prefix + ".labels");
    if (!labels) throw FormatError("cannot read " + prefix + ".labels");
    std::string line;
    while (std::getline(labels, line)) {
        if (line.empty()) continue;
        const auto label = parse_unsigned(line, "label");
        if (label >= data.centers.rows()) throw FormatError("label " + line + " has no center");
        data.labels.push_back(static_cast<std::size_t>(label));
    }
    if (data.labels.size() != data.samples.rows())
        throw FormatError("label count does not match sample count");
    if (data.centers.cols() != data.samples.cols())
        throw FormatError("centers and samples differ in dimension");
    return data;
}

SyntheticData cmd_gen(const GenOptions& options, std::ostream& log) {
    SyntheticData data = generate_synthetic(options.clusters, options.per_cluster, options.dim,
                                            options.noise, options.seed);
    if (options.anisotropy > 0.0)
        data.samples = make_anisotropic(data.samples, options.anisotropy,
                                        derive_seed(options.seed, 0xA150ULL));
    save_dataset(options.out_prefix, data);
    log << "wrote " << data.samples.rows() << "x" << data.samples.cols() << " samples to "
        << options.out_prefix << ".wemb\n";
    return data;
}

Matrix whiten_embeddings(const Matrix& z, const WhitenOptions& options) {
    const std::size_t d = z.cols();
    if (options.kind == "pca" || options.kind == "zca") {
        const WhiteningKind kind = options.kind == "pca" ? WhiteningKind::pca : WhiteningKind::zca;
        const WhiteningStats stats = WhiteningStats::from_batch(z);
        return apply_whitening(z, stats, derive_whitening(stats, kind, options.ridge));
    }
    if (options.kind == "group" || options.kind == "sgw") {
        const std::size_t g = options.group_size == 0 ? d : options.group_size;
        const GroupPlan plan = make_group_plan(d, g, options.kind == "sgw", options.seed);
        return group_whiten(z, plan, group_batch_stats(z, plan), WhiteningKind::zca,
                            options.ridge);
    }
    throw ConfigError("whitening kind must be pca, zca, group or sgw, got '" + options.kind + "'");
}

WhitenSummary cmd_whiten(const WhitenOptions& options, std::ostream& log) {
    const Matrix z = load_embeddings(options.input);
    const Matrix h = whiten_embeddings(z, options);
    save_embeddings(options.output, h);
    WhitenSummary s;
    s.uniformity_before = uniformity_loss(l2_normalize_rows(z).rows);
    s.uniformity_after = uniformity_loss(l2_normalize_rows(h).rows);
    log << "uniformity_before=" << format_double(s.uniformity_before)
        << ",uniformity_after=" << format_double(s.uniformity_after) << '\n';
    return s;
}

namespace {

Dataset load_or_generate(const TrainConfig& config, const std::optional<std::string>& prefix) {
    if (!prefix) return make_dataset(config);
    return split_dataset(load_dataset(*prefix), config.dev_fraction);
}

std::ofstream open_report(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot open report " + path);
    return out;
}

}  // namespace

TrainResult cmd_train(const TrainOptions& options, std::ostream& log) {
    options.config.validate();
    const Dataset data = load_or_generate(options.config, options.data_prefix);
    std::ofstream report = open_report(options.report_out);
    TrainResult result = train(options.config, data, [&](const EvalRecord& r) {
        report << format_record(r) << '\n' << std::flush;
        log << format_record(r) << '\n';
    });
    report << format_summary(result.report) << '\n';
    log << format_summary(result.report) << '\n';
    if (!options.checkpoint_out.empty()) save_checkpoint(options.checkpoint_out, result.best);
    return result;
}

EvalMetrics cmd_eval(const EvalOptions& options, std::ostream& log) {
    const Checkpoint ckpt = load_checkpoint(options.checkpoint);
    const Dataset data = load_or_generate(options.config, options.data_prefix);
    if (data.dev.samples.cols() != ckpt.state.input_dim())
        throw ShapeError("data dimension does not match the checkpoint's input dimension");
    const EvalMetrics m = evaluate(ckpt, data);
    const std::string line = "record=checkpoint_eval," + format_eval(m);
    if (!options.report_out.empty()) {
        std::ofstream report = open_report(options.report_out);
        report << line << '\n';
    }
    log << line << '\n';
    return m;
}

SweepSpec parse_sweep(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
        throw ConfigError("sweep must look like key=v1,v2,...");
    SweepSpec spec{text.substr(0, eq), {}};
    static const std::vector<std::string> allowed = {"group_size", "num_positives", "loss_kind",
                                                     "aug_kind", "shuffled"};
    if (std::find(allowed.begin(), allowed.end(), spec.key) == allowed.end())
        throw ConfigError("cannot sweep '" + spec.key + "'");
    std::istringstream in(text.substr(eq + 1));
    std::string v;
    while (std::getline(in, v, ','))
        if (!v.empty()) spec.values.push_back(v);
    if (spec.values.empty()) throw ConfigError("sweep has no values");
    return spec;
}

std::vector<AblationRow> cmd_ablate(const AblateOptions& options, std::ostream& log) {
    // Validate every setting before running any of them.
    std::vector<TrainConfig> configs;
    for (const auto& value : options.sweep.values) {
        TrainConfig c = options.config;
        c.set(options.sweep.key, value);
        c.validate();
        configs.push_back(c);
    }
    const Dataset data = load_or_generate(options.config, options.data_prefix);
    std::ofstream report = open_report(options.report_out);

    std::vector<AblationRow> rows;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const std::string prefix =
            "sweep_key=" + options.sweep.key + ",sweep_value=" + options.sweep.values[i] + ",";
        TrainResult result = train(configs[i], data, [&](const EvalRecord& r) {
            report << prefix << format_record(r) << '\n' << std::flush;
        });
        report << prefix << format_summary(result.report) << '\n' << std::flush;
        rows.push_back({options.sweep.values[i], result.report.records.back(),
                        result.report.best()});
    }

    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %12s %12s %12s %12s\n", options.sweep.key.c_str(),
                  "alignment", "uniformity", "spearman", "best_spear");
    log << line;
    for (const auto& row : rows) {
        std::snprintf(line, sizeof(line), "%-14s %12.6f %12.6f %12.6f %12.6f\n", row.value.c_str(),
                      row.final_record.metrics.alignment, row.final_record.metrics.uniformity,
                      row.final_record.metrics.spearman, row.best_record.metrics.spearman);
        log << line;
    }
    return rows;
}

}  // namespace wcse
