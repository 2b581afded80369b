#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wcse/matrix.hpp"
#include "wcse/whitening.hpp"

namespace wcse {

// Two-layer MLP  y = W2 drop(tanh(W1 x + b1)) + b2  with inverted dropout.
struct EncoderState {
    Matrix w1;  // hidden x input
    Vector b1;
    Matrix w2;  // output x hidden
    Vector b2;
    double dropout_rate = 0.1;
    std::uint64_t rng_seed = 0;

    std::size_t input_dim() const noexcept { return w1.cols(); }
    std::size_t hidden_dim() const noexcept { return w1.rows(); }
    std::size_t output_dim() const noexcept { return w2.rows(); }

    // Uniform Glorot initialization, biases zero.
    static EncoderState init(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim,
                             double dropout_rate, std::uint64_t seed);
    static EncoderState zeros(std::size_t input_dim, std::size_t hidden_dim,
                              std::size_t output_dim, double dropout_rate);

    void validate() const;
    bool all_finite() const noexcept;
};

struct ForwardTrace {
    Matrix inputs;
    Matrix pre_activation;  // W1 x + b1
    Matrix activation;      // tanh(.)
    Matrix mask;            // 0 or 1/(1-gamma); all ones without dropout
    Matrix outputs;
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t output_dim = 0;
};

struct EncoderGrads {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;

    static EncoderGrads zeros_like(const EncoderState& state);
    EncoderGrads& operator+=(const EncoderGrads& other);
};

// Deterministic in (state, x, mask_seed).
ForwardTrace forward(const EncoderState& state, const Matrix& x, std::uint64_t mask_seed);
// Forward pass with dropout disabled (evaluation).
ForwardTrace forward_eval(const EncoderState& state, const Matrix& x);

EncoderGrads backward(const ForwardTrace& trace, const EncoderState& state,
                      const Matrix& grad_out);

// theta <- theta - lr * grad
EncoderState sgd_step(const EncoderState& state, const EncoderGrads& grads, double lr);

// SGD with heavy-ball momentum: v <- mu v + g, theta <- theta - lr v.
class MomentumSgd {
public:
    MomentumSgd(double lr, double momentum) : lr_(lr), momentum_(momentum) {}
    EncoderState step(const EncoderState& state, const EncoderGrads& grads);

private:
    double lr_;
    double momentum_;
    std::optional<EncoderGrads> velocity_;
};

enum class AugKind { dropout_only, sgw };

// Mask seed of view v built from `seed`.
std::uint64_t view_mask_seed(std::uint64_t seed, std::size_t view);

// One encoder view with everything needed to backpropagate through it.
struct View {
    ForwardTrace trace;
    std::optional<GroupWhitener> whitener;  // set for aug = sgw
    Matrix pre_normalization;
    Matrix embedding;  // unit rows
};

// m views of `x`: each gets its own dropout mask; with aug = sgw each is also
// shuffled-group-whitened under its own plan and batch statistics (identity
// plans when `shuffled` is false). Rows are L2-normalized in both modes.
std::vector<View> build_view_traces(const EncoderState& state, const Matrix& x, std::size_t m,
                                    AugKind aug, std::size_t group_size, std::uint64_t seed,
                                    double ridge_eps = kDefaultRidgeEps, bool shuffled = true);
std::vector<Matrix> build_views(const EncoderState& state, const Matrix& x, std::size_t m,
                                AugKind aug, std::size_t group_size, std::uint64_t seed,
                                double ridge_eps = kDefaultRidgeEps, bool shuffled = true);

// dL/dtheta for one view given dL/d(embedding); whitening is a constant.
EncoderGrads backward_view(const View& view, const EncoderState& state,
                           const Matrix& grad_embedding);

// Row-normalization backward: y = x / ||x||.
Matrix normalize_rows_backward(const Matrix& x, const Matrix& grad_y);

// Eval-time group whitening carried alongside the parameters.
struct EvalWhitening {
    GroupPlan plan;
    std::vector<Vector> means;
    std::vector<Matrix> matrices;

    GroupWhitener whitener() const;
};

struct Checkpoint {
    EncoderState state;
    std::optional<EvalWhitening> whitening;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout, little-endian:
//   "WCSE" u32 version, u64 input/hidden/output dims, f64 dropout, u64 seed,
//   f64 w1, b1, w2, b2, u8 has_whitening,
//   [u64 group_size, u64 permutation[dim], per group f64 mean[g], f64 W[g*g]]
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace wcse
