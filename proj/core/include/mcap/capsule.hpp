#pragma once

#include <vector>

#include "mcap/config.hpp"
#include "mcap/ops.hpp"

namespace mcap {

// Class capsules and their Euclidean lengths (the class scores).
struct CapsuleOutput {
    Tensor capsules; // (B, K, class_dim)
    Tensor norms;    // (B, K)
};

// Per-iteration routing state, exposed for inspection and tests.
struct RoutingTrace {
    std::vector<Tensor> logits; // b before the softmax, (B, P, K)
    std::vector<Tensor> coeffs; // c = softmax_K(b), (B, P, K)
};

// Strided average pooling along L, channel regrouping into capsules of
// dimension primary_dim, then squash. features: (B, L, D) -> (B, P, Dp).
Tensor form_primary_capsules(const Tensor& features, std::size_t pool_stride,
                             std::size_t primary_dim);

// Per-pair linear votes: u: (B, P, Dp), w: (P, K, Dh, Dp) -> (B, P, K, Dh).
Tensor predict_votes(const Tensor& primary, const Tensor& w);

// Routing by agreement, logits initialized to zero. Gradients flow through
// every iteration; the logits are not learned parameters.
CapsuleOutput dynamic_routing(const Tensor& votes, std::size_t iterations,
                              RoutingTrace* trace = nullptr);

// Composition: primary capsules -> votes -> routing.
CapsuleOutput classify_features(const Tensor& features, const Tensor& vote_w,
                                const ModelConfig& cfg);

// Argmax over norms per example; ties break toward the lowest class index.
std::vector<int> argmax_classes(const Tensor& norms);

Tensor init_vote_weights(const ModelConfig& cfg, Rng& rng);

} // namespace mcap
