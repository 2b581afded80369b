#include "wcse/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wcse/errors.hpp"
#include "wcse/linalg.hpp"

namespace wcse {

double cosine_sim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("cosine_sim: vectors differ in length");
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw DegenerateInputError("cosine_sim of a zero vector");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

namespace {

void validate(const ContrastiveBatch& batch) {
    if (batch.positives.empty()) throw ConfigError("contrastive batch needs at least one positive");
    if (!(batch.temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (batch.size() < 2) {
        throw InsufficientDataError("contrastive loss needs a batch of at least 2, got " +
                                    std::to_string(batch.size()));
    }
    for (const auto& p : batch.positives) {
        if (p.rows() != batch.anchors.rows() || p.cols() != batch.anchors.cols())
            throw ShapeError("positive view shape differs from anchors");
    }
}

struct UnitRows {
    Matrix unit;
    Vector norms;
};

UnitRows unit_rows(const Matrix& z) {
    UnitRows out{z, Vector(z.rows())};
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = out.unit.row(r);
        const double n = norm(row);
        if (n == 0.0) throw DegenerateInputError("embedding row " + std::to_string(r) + " is zero");
        out.norms[r] = n;
        for (double& v : row) v /= n;
    }
    return out;
}

// Gradient w.r.t. the raw rows given the gradient w.r.t. their unit versions.
Matrix through_normalization(const UnitRows& rows, const Matrix& grad_unit) {
    Matrix grad(grad_unit.rows(), grad_unit.cols());
    for (std::size_t r = 0; r < grad.rows(); ++r) {
        auto u = rows.unit.row(r);
        auto gu = grad_unit.row(r);
        const double proj = dot(u, gu);
        auto g = grad.row(r);
        for (std::size_t c = 0; c < g.size(); ++c) g[c] = (gu[c] - u[c] * proj) / rows.norms[r];
    }
    return grad;
}

// Per view p: similarities S_p = A_hat B_hat_p^T, row softmax P_p of S_p / tau,
// and log-partition lse_p(i).
struct ViewScores {
    Matrix sim;
    Matrix prob;
    Vector log_partition;
};

ViewScores score_view(const Matrix& anchors_unit, const Matrix& view_unit, double tau) {
    ViewScores s{matmul_transposed(anchors_unit, view_unit), Matrix(), Vector()};
    const std::size_t n = s.sim.rows();
    s.prob = Matrix(n, n);
    s.log_partition.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double max_logit = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) max_logit = std::max(max_logit, s.sim(i, j) / tau);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            s.prob(i, j) = std::exp(s.sim(i, j) / tau - max_logit);
            total += s.prob(i, j);
        }
        for (std::size_t j = 0; j < n; ++j) s.prob(i, j) /= total;
        s.log_partition[i] = max_logit + std::log(total);
    }
    return s;
}

// Assemble embedding gradients from dL/dS_p.
LossValue finish(double value, const UnitRows& anchors, const std::vector<UnitRows>& views,
                 const std::vector<Matrix>& grad_sim) {
    if (!std::isfinite(value)) throw NumericError("contrastive loss is not finite");
    Matrix grad_anchor_unit(anchors.unit.rows(), anchors.unit.cols());
    LossValue out;
    out.value = value;
    for (std::size_t p = 0; p < views.size(); ++p) {
        grad_anchor_unit += matmul(grad_sim[p], views[p].unit);
        out.grad_positives.push_back(
            through_normalization(views[p], matmul(grad_sim[p].transpose(), anchors.unit)));
    }
    out.grad_anchors = through_normalization(anchors, grad_anchor_unit);
    return out;
}

LossValue sum_out_kernel(const ContrastiveBatch& batch, double lambda) {
    const double tau = batch.temperature;
    const std::size_t n = batch.size();
    const UnitRows anchors = unit_rows(batch.anchors);
    std::vector<UnitRows> views;
    std::vector<Matrix> grad_sim;
    double value = 0.0;
    const double scale = lambda / (static_cast<double>(n) * tau);
    for (const Matrix& positive : batch.positives) {
        views.push_back(unit_rows(positive));
        const ViewScores s = score_view(anchors.unit, views.back().unit, tau);
        double term = 0.0;
        for (std::size_t i = 0; i < n; ++i) term += s.log_partition[i] - s.sim(i, i) / tau;
        value += lambda * term;

        Matrix g = s.prob;
        for (std::size_t i = 0; i < n; ++i) g(i, i) -= 1.0;
        g *= scale;
        grad_sim.push_back(std::move(g));
    }
    return finish(value / static_cast<double>(n), anchors, views, grad_sim);
}

}  // namespace

LossValue info_nce(const ContrastiveBatch& batch) {
    validate(batch);
    if (batch.num_positives() != 1)
        throw ConfigError("info_nce takes exactly one positive view");
    return sum_out_kernel(batch, 1.0);
}

LossValue multi_pos_loss_sum_out(const ContrastiveBatch& batch) {
    validate(batch);
    return sum_out_kernel(batch, batch.lambda_m);
}

LossValue multi_pos_loss_sum_in(const ContrastiveBatch& batch) {
    validate(batch);
    if (!(batch.lambda_m > 0.0)) throw ConfigError("lambda_m must be positive for the sum-in loss");
    const double tau = batch.temperature;
    const std::size_t n = batch.size();
    const std::size_t m = batch.num_positives();
    const UnitRows anchors = unit_rows(batch.anchors);
    std::vector<UnitRows> views;
    std::vector<ViewScores> scores;
    for (const Matrix& positive : batch.positives) {
        views.push_back(unit_rows(positive));
        scores.push_back(score_view(anchors.unit, views.back().unit, tau));
    }

    // log t_ip = log lambda - s_ip / tau - lse_p(i);  L_i = -logsumexp_p log t_ip.
    const double log_lambda = std::log(batch.lambda_m);
    std::vector<Matrix> grad_sim(m, Matrix(n, n));
    Vector log_t(m);
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double max_log = -INFINITY;
        for (std::size_t p = 0; p < m; ++p) {
            log_t[p] = log_lambda - scores[p].sim(i, i) / tau - scores[p].log_partition[i];
            max_log = std::max(max_log, log_t[p]);
        }
        double total = 0.0;
        for (std::size_t p = 0; p < m; ++p) total += std::exp(log_t[p] - max_log);
        value -= max_log + std::log(total);

        // dL_i/dS_p(i, j) = w_p (delta_ij + P_p(i, j)) / tau, w = softmax_p(log t).
        for (std::size_t p = 0; p < m; ++p) {
            const double weight = std::exp(log_t[p] - max_log) / total;
            const double scale = weight / (tau * static_cast<double>(n));
            for (std::size_t j = 0; j < n; ++j) grad_sim[p](i, j) = scale * scores[p].prob(i, j);
            grad_sim[p](i, i) += scale;
        }
    }
    return finish(value / static_cast<double>(n), anchors, views, grad_sim);
}

LossValue contrastive_loss(const ContrastiveBatch& batch, LossKind kind) {
    return kind == LossKind::sum_out ? multi_pos_loss_sum_out(batch)
                                     : multi_pos_loss_sum_in(batch);
}

}  // namespace wcse
