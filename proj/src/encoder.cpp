#include "wcse/encoder.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "wcse/binary_io.hpp"
#include "wcse/errors.hpp"
#include "wcse/linalg.hpp"
#include "wcse/rng.hpp"

namespace wcse {

EncoderState EncoderState::init(std::size_t input_dim, std::size_t hidden_dim,
                                std::size_t output_dim, double dropout_rate, std::uint64_t seed) {
    EncoderState s = zeros(input_dim, hidden_dim, output_dim, dropout_rate);
    s.rng_seed = seed;
    Rng rng(derive_seed(seed, 0x1417ULL));
    const double limit1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
    for (double& v : s.w1.data()) v = rng.uniform(-limit1, limit1);
    const double limit2 = std::sqrt(6.0 / static_cast<double>(hidden_dim + output_dim));
    for (double& v : s.w2.data()) v = rng.uniform(-limit2, limit2);
    s.validate();
    return s;
}

EncoderState EncoderState::zeros(std::size_t input_dim, std::size_t hidden_dim,
                                 std::size_t output_dim, double dropout_rate) {
    EncoderState s;
    s.w1 = Matrix(hidden_dim, input_dim);
    s.b1 = Vector(hidden_dim, 0.0);
    s.w2 = Matrix(output_dim, hidden_dim);
    s.b2 = Vector(output_dim, 0.0);
    s.dropout_rate = dropout_rate;
    s.validate();
    return s;
}

void EncoderState::validate() const {
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(dropout_rate));
    if (b1.size() != w1.rows() || w2.cols() != w1.rows() || b2.size() != w2.rows())
        throw ShapeError("encoder parameter shapes are inconsistent");
    if (!all_finite()) throw NumericError("encoder parameters contain non-finite values");
}

bool EncoderState::all_finite() const noexcept {
    auto finite = [](const Vector& v) {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    return w1.all_finite() && w2.all_finite() && finite(b1) && finite(b2);
}

EncoderGrads EncoderGrads::zeros_like(const EncoderState& state) {
    return {Matrix(state.w1.rows(), state.w1.cols()), Vector(state.b1.size(), 0.0),
            Matrix(state.w2.rows(), state.w2.cols()), Vector(state.b2.size(), 0.0)};
}

EncoderGrads& EncoderGrads::operator+=(const EncoderGrads& other) {
    w1 += other.w1;
    w2 += other.w2;
    for (std::size_t i = 0; i < b1.size(); ++i) b1[i] += other.b1[i];
    for (std::size_t i = 0; i < b2.size(); ++i) b2[i] += other.b2[i];
    return *this;
}

namespace {

void add_bias(Matrix& m, const Vector& bias) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
    }
}

Vector column_sum(const Matrix& m) {
    Vector s(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) s[c] += row[c];
    }
    return s;
}

ForwardTrace forward_with_mask(const EncoderState& state, const Matrix& x, Matrix mask) {
    if (x.cols() != state.input_dim()) {
        throw ShapeError("encoder expects " + std::to_string(state.input_dim()) +
                         " input columns, got " + std::to_string(x.cols()));
    }
    ForwardTrace t;
    t.input_dim = state.input_dim();
    t.hidden_dim = state.hidden_dim();
    t.output_dim = state.output_dim();
    t.inputs = x;
    t.pre_activation = matmul_transposed(x, state.w1);
    add_bias(t.pre_activation, state.b1);
    t.activation = t.pre_activation;
    for (double& v : t.activation.data()) v = std::tanh(v);
    t.mask = std::move(mask);

    Matrix dropped = t.activation;
    auto d = dropped.data();
    auto mk = t.mask.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= mk[i];
    t.outputs = matmul_transposed(dropped, state.w2);
    add_bias(t.outputs, state.b2);
    return t;
}

}  // namespace

ForwardTrace forward(const EncoderState& state, const Matrix& x, std::uint64_t mask_seed) {
    Matrix mask(x.rows(), state.hidden_dim(), 1.0);
    const double gamma = state.dropout_rate;
    if (gamma > 0.0) {
        Rng rng(mix_seed(mask_seed));
        const double keep_scale = 1.0 / (1.0 - gamma);
        for (double& v : mask.data()) v = rng.bernoulli(gamma) ? 0.0 : keep_scale;
    }
    return forward_with_mask(state, x, std::move(mask));
}

ForwardTrace forward_eval(const EncoderState& state, const Matrix& x) {
    return forward_with_mask(state, x, Matrix(x.rows(), state.hidden_dim(), 1.0));
}

EncoderGrads backward(const ForwardTrace& trace, const EncoderState& state,
                      const Matrix& grad_out) {
    if (trace.input_dim != state.input_dim() || trace.hidden_dim != state.hidden_dim() ||
        trace.output_dim != state.output_dim()) {
        throw ConsistencyError("forward trace was produced by an encoder of different shape");
    }
    if (grad_out.rows() != trace.outputs.rows() || grad_out.cols() != trace.outputs.cols())
        throw ShapeError("gradient shape does not match encoder output");

    EncoderGrads g;
    Matrix dropped = trace.activation;
    {
        auto d = dropped.data();
        auto mk = trace.mask.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= mk[i];
    }
    g.w2 = matmul(grad_out.transpose(), dropped);
    g.b2 = column_sum(grad_out);

    Matrix grad_pre = matmul(grad_out, state.w2);
    {
        auto gp = grad_pre.data();
        auto mk = trace.mask.data();
        auto act = trace.activation.data();
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] *= mk[i] * (1.0 - act[i] * act[i]);
    }
    g.w1 = matmul(grad_pre.transpose(), trace.inputs);
    g.b1 = column_sum(grad_pre);
    return g;
}

EncoderState sgd_step(const EncoderState& state, const EncoderGrads& grads, double lr) {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    EncoderState next = state;
    auto step = [lr](std::span<double> p, std::span<const double> g) {
        if (p.size() != g.size()) throw ShapeError("gradient shape does not match parameter");
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
    };
    step(next.w1.data(), grads.w1.data());
    step(next.b1, grads.b1);
    step(next.w2.data(), grads.w2.data());
    step(next.b2, grads.b2);
    return next;
}

EncoderState MomentumSgd::step(const EncoderState& state, const EncoderGrads& grads) {
    if (!velocity_) {
        velocity_ = grads;
    } else {
        auto blend = [this](std::span<double> v, std::span<const double> g) {
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = momentum_ * v[i] + g[i];
        };
        blend(velocity_->w1.data(), grads.w1.data());
        blend(velocity_->b1, grads.b1);
        blend(velocity_->w2.data(), grads.w2.data());
        blend(velocity_->b2, grads.b2);
    }
    return sgd_step(state, *velocity_, lr_);
}

std::uint64_t view_mask_seed(std::uint64_t seed, std::size_t view) {
    return derive_seed(seed, 0x4d41534bULL, view);
}

Matrix normalize_rows_backward(const Matrix& x, const Matrix& grad_y) {
    Matrix grad(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto xr = x.row(r);
        auto gy = grad_y.row(r);
        const double n = norm(xr);
        if (n < 1e-12) continue;
        double proj = 0.0;
        for (std::size_t c = 0; c < xr.size(); ++c) proj += xr[c] * gy[c];
        proj /= n * n;
        auto g = grad.row(r);
        for (std::size_t c = 0; c < xr.size(); ++c) g[c] = (gy[c] - xr[c] * proj) / n;
    }
    return grad;
}

std::vector<View> build_view_traces(const EncoderState& state, const Matrix& x, std::size_t m,
                                    AugKind aug, std::size_t group_size, std::uint64_t seed,
                                    double ridge_eps, bool shuffled) {
    if (m == 0) throw ConfigError("need at least one view");
    std::vector<View> views;
    views.reserve(m);
    for (std::size_t v = 0; v < m; ++v) {
        View view;
        view.trace = forward(state, x, view_mask_seed(seed, v));
        if (aug == AugKind::sgw) {
            const GroupPlan plan = make_group_plan(state.output_dim(), group_size, shuffled,
                                                   view_plan_seed(seed, v));
            view.whitener = GroupWhitener::fit(view.trace.outputs, plan, ridge_eps);
            view.pre_normalization = view.whitener->apply(view.trace.outputs);
        } else {
            view.pre_normalization = view.trace.outputs;
        }
        view.embedding = l2_normalize_rows(view.pre_normalization).rows;
        views.push_back(std::move(view));
    }
    return views;
}

std::vector<Matrix> build_views(const EncoderState& state, const Matrix& x, std::size_t m,
                                AugKind aug, std::size_t group_size, std::uint64_t seed,
                                double ridge_eps, bool shuffled) {
    std::vector<Matrix> out;
    for (auto& v : build_view_traces(state, x, m, aug, group_size, seed, ridge_eps, shuffled))
        out.push_back(std::move(v.embedding));
    return out;
}

EncoderGrads backward_view(const View& view, const EncoderState& state,
                           const Matrix& grad_embedding) {
    Matrix grad = normalize_rows_backward(view.pre_normalization, grad_embedding);
    if (view.whitener) grad = view.whitener->backward(grad);
    return backward(view.trace, state, grad);
}

GroupWhitener EvalWhitening::whitener() const {
    std::vector<WhiteningMatrix> ws;
    for (const Matrix& m : matrices) {
        WhiteningMatrix w;
        w.w = m;
        ws.push_back(std::move(w));
    }
    return {plan, means, std::move(ws)};
}

namespace {

void write_values(std::ostream& out, std::span<const double> values) {
    for (double v : values) binary::write_f64(out, v);
}

void read_values(std::istream& in, std::span<double> values, const char* what) {
    for (double& v : values) v = binary::read_f64(in, what);
}

std::size_t read_dim(std::istream& in, const char* what) {
    const auto v = binary::read_le<std::uint64_t>(in, what);
    if (v == 0 || v > (1u << 20)) throw FormatError(std::string("implausible ") + what);
    return static_cast<std::size_t>(v);
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    const EncoderState& s = ckpt.state;
    binary::write_magic(out, "WCSE");
    binary::write_le<std::uint32_t>(out, kCheckpointVersion);
    binary::write_le<std::uint64_t>(out, s.input_dim());
    binary::write_le<std::uint64_t>(out, s.hidden_dim());
    binary::write_le<std::uint64_t>(out, s.output_dim());
    binary::write_f64(out, s.dropout_rate);
    binary::write_le<std::uint64_t>(out, s.rng_seed);
    write_values(out, s.w1.data());
    write_values(out, s.b1);
    write_values(out, s.w2.data());
    write_values(out, s.b2);
    binary::write_le<std::uint8_t>(out, ckpt.whitening ? 1 : 0);
    if (ckpt.whitening) {
        const EvalWhitening& w = *ckpt.whitening;
        binary::write_le<std::uint64_t>(out, w.plan.group_size);
        for (std::size_t p : w.plan.permutation) binary::write_le<std::uint64_t>(out, p);
        for (std::size_t k = 0; k < w.means.size(); ++k) {
            write_values(out, w.means[k]);
            write_values(out, w.matrices[k].data());
        }
    }
}

Checkpoint read_checkpoint(std::istream& in) {
    binary::expect_magic(in, "WCSE", "checkpoint");
    const auto version = binary::read_le<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion) {
        throw FormatError("incompatible checkpoint version " + std::to_string(version) +
                          " (this build reads version " + std::to_string(kCheckpointVersion) +
                          ")");
    }
    const std::size_t input_dim = read_dim(in, "input dimension");
    const std::size_t hidden_dim = read_dim(in, "hidden dimension");
    const std::size_t output_dim = read_dim(in, "output dimension");
    const double dropout = binary::read_f64(in, "dropout rate");
    Checkpoint ckpt{EncoderState::zeros(input_dim, hidden_dim, output_dim,
                                        dropout >= 0.0 && dropout < 1.0 ? dropout : 0.0),
                    std::nullopt};
    ckpt.state.dropout_rate = dropout;
    ckpt.state.rng_seed = binary::read_le<std::uint64_t>(in, "seed");
    read_values(in, ckpt.state.w1.data(), "w1");
    read_values(in, ckpt.state.b1, "b1");
    read_values(in, ckpt.state.w2.data(), "w2");
    read_values(in, ckpt.state.b2, "b2");
    ckpt.state.validate();

    const auto has_whitening = binary::read_le<std::uint8_t>(in, "whitening flag");
    if (has_whitening > 1) throw FormatError("bad whitening flag");
    if (has_whitening == 1) {
        EvalWhitening w;
        const std::size_t g = read_dim(in, "group size");
        if (output_dim % g != 0) throw FormatError("group size does not divide output dimension");
        w.plan = make_group_plan(output_dim, g, false, 0);
        std::vector<bool> seen(output_dim, false);
        for (auto& p : w.plan.permutation) {
            const auto v = binary::read_le<std::uint64_t>(in, "permutation");
            if (v >= output_dim || seen[v]) throw FormatError("permutation is not a bijection");
            seen[v] = true;
            p = static_cast<std::size_t>(v);
        }
        for (std::size_t k = 0; k < w.plan.num_groups(); ++k) {
            Vector mean(g);
            Matrix m(g, g);
            read_values(in, mean, "whitening mean");
            read_values(in, m.data(), "whitening matrix");
            w.means.push_back(std::move(mean));
            w.matrices.push_back(std::move(m));
        }
        ckpt.whitening = std::move(w);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in checkpoint");
    return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    write_checkpoint(out, ckpt);
    if (!out) throw FormatError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint " + path);
    return read_checkpoint(in);
}

}  // namespace wcse
