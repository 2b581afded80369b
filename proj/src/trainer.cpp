#include "wcse/trainer.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "wcse/errors.hpp"
#include "wcse/linalg.hpp"
#include "wcse/losses.hpp"
#include "wcse/metrics.hpp"
#include "wcse/rng.hpp"

namespace wcse {

Dataset split_dataset(const SyntheticData& data, double dev_fraction) {
    const std::size_t total = data.samples.rows();
    const auto dev_rows = static_cast<std::size_t>(
        std::llround(dev_fraction * static_cast<double>(total)));
    if (dev_rows < 2 || dev_rows + 2 > total)
        throw ConfigError("dataset of " + std::to_string(total) +
                          " rows is too small for the requested dev split");
    const std::size_t train_rows = total - dev_rows;

    Dataset out;
    out.train = data.slice(0, train_rows).samples;
    out.dev = data.slice(train_rows, dev_rows);
    out.dev_pairs = scored_pairs(out.dev.labels, out.dev.centers);
    for (std::size_t a = 0; a < dev_rows; ++a)
        for (std::size_t b = a + 1; b < dev_rows; ++b)
            if (out.dev.labels[a] == out.dev.labels[b]) out.dev_positive_pairs.emplace_back(a, b);
    if (out.dev_positive_pairs.empty())
        throw ConfigError("dev split contains no same-cluster pairs");
    return out;
}

Dataset make_dataset(const TrainConfig& config) {
    return split_dataset(generate_synthetic(config.clusters, config.per_cluster, config.input_dim,
                                            config.noise, config.data_seed),
                         config.dev_fraction);
}

Matrix embed(const Checkpoint& ckpt, const Matrix& x) {
    Matrix out = forward_eval(ckpt.state, x).outputs;
    if (ckpt.whitening) out = ckpt.whitening->whitener().apply(out);
    return l2_normalize_rows(out).rows;
}

EvalMetrics evaluate(const Checkpoint& ckpt, const Dataset& data) {
    const Matrix e = embed(ckpt, data.dev.samples);
    const std::size_t n = data.dev_positive_pairs.size();
    Matrix left(n, e.cols());
    Matrix right(n, e.cols());
    for (std::size_t i = 0; i < n; ++i) {
        const auto [a, b] = data.dev_positive_pairs[i];
        std::copy(e.row(a).begin(), e.row(a).end(), left.row(i).begin());
        std::copy(e.row(b).begin(), e.row(b).end(), right.row(i).begin());
    }
    EvalMetrics m;
    m.alignment = alignment_loss(left, right);
    m.uniformity = uniformity_loss(e);
    m.spearman = pair_spearman(e, data.dev_pairs);
    return m;
}

std::vector<std::size_t> sample_batch(std::size_t rows, std::size_t batch_size,
                                      std::uint64_t seed, std::size_t step) {
    if (batch_size > rows) {
        throw ConfigError("batch_size " + std::to_string(batch_size) + " exceeds " +
                          std::to_string(rows) + " training rows");
    }
    std::vector<std::size_t> idx(rows);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, 0xBA7CULL, step));
    for (std::size_t i = 0; i < batch_size; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(rows - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(batch_size);
    return idx;
}

namespace {

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy(m.row(idx[i]).begin(), m.row(idx[i]).end(), out.row(i).begin());
    return out;
}

Checkpoint make_checkpoint(const EncoderState& state, const TrainConfig& config,
                           const std::vector<WhiteningStats>& stats) {
    Checkpoint ckpt{state, std::nullopt};
    if (config.aug_kind != AugKind::sgw || stats.empty() || stats.front().update_count == 0)
        return ckpt;
    const GroupPlan plan = make_group_plan(config.embed_dim, config.group_size, false, 0);
    const GroupWhitener w = GroupWhitener::from_stats(plan, stats, config.ridge);
    EvalWhitening ew{plan, w.means(), {}};
    for (const auto& m : w.matrices()) ew.matrices.push_back(m.w);
    ckpt.whitening = std::move(ew);
    return ckpt;
}

std::uint64_t step_seed(const TrainConfig& config, std::size_t step) {
    return derive_seed(config.seed, 0x57E9ULL, step);
}

}  // namespace

StepResult contrastive_step(const EncoderState& state, const Matrix& batch,
                            const TrainConfig& config, std::uint64_t seed) {
    const auto views = build_view_traces(state, batch, config.num_positives, config.aug_kind,
                                         config.group_size, seed, config.ridge, config.shuffled);
    ContrastiveBatch cb;
    cb.anchors = views.front().embedding;
    for (std::size_t v = 1; v < views.size(); ++v) cb.positives.push_back(views[v].embedding);
    cb.temperature = config.temperature;
    cb.lambda_m = config.effective_lambda();

    const LossValue loss = contrastive_loss(cb, config.loss_kind);
    StepResult out{loss.value, backward_view(views.front(), state, loss.grad_anchors),
                   views.front().trace.outputs};
    for (std::size_t v = 1; v < views.size(); ++v)
        out.grads += backward_view(views[v], state, loss.grad_positives[v - 1]);
    return out;
}

TrainResult train(const TrainConfig& config, const Dataset& data,
                  const std::function<void(const EvalRecord&)>& on_record) {
    config.validate();
    if (data.train.cols() != config.input_dim) {
        throw ConfigError("data has " + std::to_string(data.train.cols()) +
                          " input columns, config expects " + std::to_string(config.input_dim));
    }
    EncoderState state = EncoderState::init(config.input_dim, config.hidden_dim, config.embed_dim,
                                            config.dropout, config.seed);
    MomentumSgd optimizer(config.learning_rate, config.sgd_momentum);
    const GroupPlan eval_plan = make_group_plan(config.embed_dim, config.group_size, false, 0);
    std::vector<WhiteningStats> stats;
    if (config.aug_kind == AugKind::sgw)
        stats.assign(eval_plan.num_groups(),
                     WhiteningStats::empty(config.group_size, config.momentum));

    TrainResult result;
    RunReport& report = result.report;
    auto record = [&](std::size_t step, double loss) {
        Checkpoint ckpt = make_checkpoint(state, config, stats);
        EvalRecord rec{step, loss, evaluate(ckpt, data)};
        report.records.push_back(rec);
        if (report.records.size() == 1 || rec.metrics.spearman > report.best().metrics.spearman) {
            report.best_index = report.records.size() - 1;
            result.best = ckpt;
        }
        result.final = std::move(ckpt);
        if (on_record) on_record(rec);
    };

    auto batch_at = [&](std::size_t step) {
        return gather_rows(data.train,
                           sample_batch(data.train.rows(), config.batch_size, config.seed, step));
    };

    // The initial record reports the loss of the first mini-batch without updating.
    record(0, contrastive_step(state, batch_at(1), config, step_seed(config, 1)).loss);

    for (std::size_t step = 1; step <= config.steps; ++step) {
        StepResult r = contrastive_step(state, batch_at(step), config, step_seed(config, step));
        if (!std::isfinite(r.loss))
            throw NumericError("non-finite loss at step " + std::to_string(step));
        state = optimizer.step(state, r.grads);
        if (!state.all_finite())
            throw NumericError("parameters became non-finite at step " + std::to_string(step));
        if (!stats.empty()) stats = update_group_stats(stats, r.anchor_outputs, eval_plan);
        if (step % config.eval_every == 0 || step == config.steps) record(step, r.loss);
    }
    return result;
}

std::string format_eval(const EvalMetrics& m) {
    return "alignment=" + format_double(m.alignment) + ",uniformity=" +
           format_double(m.uniformity) + ",spearman=" + format_double(m.spearman);
}

std::string format_record(const EvalRecord& r) {
    return "record=eval,step=" + std::to_string(r.step) + ",loss=" + format_double(r.loss) + "," +
           format_eval(r.metrics);
}

std::string format_summary(const RunReport& report) {
    const EvalRecord& best = report.best();
    return "record=summary,best_step=" + std::to_string(best.step) + "," +
           format_eval(best.metrics) +
           ",final_step=" + std::to_string(report.records.back().step);
}

void write_report(std::ostream& out, const RunReport& report) {
    for (const auto& r : report.records) out << format_record(r) << '\n';
    out << format_summary(report) << '\n';
}

std::map<std::string, std::string> parse_record(const std::string& line) {
    std::map<std::string, std::string> fields;
    std::istringstream in(line);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw FormatError("report field without '=': " + item);
        fields[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return fields;
}

}  // namespace wcse
