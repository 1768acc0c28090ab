#pragma once

#include <vector>

#include "mcap/config.hpp"
#include "mcap/ops.hpp"

namespace mcap {

// One selective-state-space branch. The diagonal state matrix is kept
// log-parameterized (A = -exp(log_neg_a)) so it stays strictly negative
// under gradient descent.
struct SsmBranchParams {
    Tensor log_neg_a;   // (D, N)
    Tensor b_proj;      // (D, N)
    Tensor c_proj;      // (D, N)
    Tensor delta_proj;  // (D, D)
    Tensor delta_base;  // (D,)  per-channel base step, pre-softplus
    Tensor conv_kernel; // (W, D) depthwise, W odd
    std::size_t conv_width = 3;
    double delta_scale = 1.0; // initialization time-scale factor
};

// One fusion block: shared conv, m branches at distinct conv widths and
// time scales, per-branch down projections D -> D/m, post-residual layer
// norm over channels.
struct FusionBlockParams {
    Tensor shared_conv; // (w0, D)
    std::vector<SsmBranchParams> branches;
    std::vector<Tensor> down_proj; // (D, D/m) each
    Tensor ln_scale; // (D,)
    Tensor ln_shift; // (D,)
};

struct EncoderParams {
    std::size_t beat_len = 0;
    Tensor up_proj; // (1, D)
    Tensor up_bias; // (D,)
    std::vector<FusionBlockParams> blocks;
    double dropout = 0.1;
};

struct Discretized {
    Tensor a_bar; // (B, L, D, N)
    Tensor b_bar; // (B, L, D, N)
};

// Zero-order-hold discretization with the diagonal closed form:
// a_bar = exp(delta*A), b_bar = phi(delta*A) * delta * B with
// phi(z) = (e^z - 1)/z. delta_t must be strictly positive.
Discretized discretize(const Tensor& a, const Tensor& b_t, const Tensor& delta_t);

// Input-selective scan: projections B(x), C(x), delta(x), ZOH discretization
// and the left-to-right recurrence. x: (B, L, D) -> y: (B, L, D). Causal.
Tensor selective_scan(const Tensor& x, const SsmBranchParams& p);

// Normalization over the channel (last) axis.
Tensor layer_norm_channels(const Tensor& x, const Tensor& scale, const Tensor& shift);

Tensor fusion_block(const Tensor& x, const FusionBlockParams& p);

// x: (B, L) -> features (B, L, D). rng is required when training is true.
Tensor encode(const Tensor& x, const EncoderParams& p, bool training, Rng* rng = nullptr);

EncoderParams init_encoder(const ModelConfig& cfg, Rng& rng);

// log(e^y - 1), the inverse of softplus on (0, inf).
double softplus_inverse(double y);

} // namespace mcap
