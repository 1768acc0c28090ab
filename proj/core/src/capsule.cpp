#include "mcap/capsule.hpp"

#include <cmath>

namespace mcap {

Tensor form_primary_capsules(const Tensor& features, std::size_t pool_stride,
                             std::size_t primary_dim) {
    const Shape& s = features.shape();
    if (s.size() != 3) {
        throw ShapeError("form_primary_capsules expects (B,L,D), got " + shape_str(s));
    }
    Tensor pooled = avg_pool1d(features, pool_stride); // validates divisibility
    const std::size_t B = pooled.extent(0);
    const std::size_t total = pooled.extent(1) * pooled.extent(2);
    if (primary_dim == 0 || total % primary_dim != 0) {
        throw ConfigError("primary capsule dimension " + std::to_string(primary_dim) +
                          " does not divide the pooled feature size " + std::to_string(total));
    }
    return squash(reshape(pooled, {B, total / primary_dim, primary_dim}));
}

Tensor predict_votes(const Tensor& primary, const Tensor& w) {
    const Shape& su = primary.shape();
    const Shape& sw = w.shape();
    if (su.size() != 3 || sw.size() != 4) {
        throw ShapeError("predict_votes expects u (B,P,Dp) and w (P,K,Dh,Dp), got " +
                         shape_str(su) + " and " + shape_str(sw));
    }
    if (su[1] != sw[0] || su[2] != sw[3]) {
        throw ShapeError("predict_votes shape mismatch: u " + shape_str(su) + " vs w " +
                         shape_str(sw));
    }
    const std::size_t B = su[0], P = su[1], Dp = su[2];
    const std::size_t K = sw[1], Dh = sw[2];
    Tensor u_col = reshape(primary, {B, P, 1, Dp, 1});
    Tensor out = matmul(w, u_col); // batch (P,K) x (B,P,1) -> (B,P,K); matrix (Dh,Dp)x(Dp,1)
    return reshape(out, {B, P, K, Dh});
}

CapsuleOutput dynamic_routing(const Tensor& votes, std::size_t iterations, RoutingTrace* trace) {
    if (iterations < 1) throw ConfigError("routing requires at least one iteration");
    const Shape& sv = votes.shape();
    if (sv.size() != 4) {
        throw ShapeError("dynamic_routing expects votes (B,P,K,Dh), got " + shape_str(sv));
    }
    const std::size_t B = sv[0], P = sv[1], K = sv[2], Dh = sv[3];
    Tensor logits = Tensor::zeros({B, P, K});
    Tensor v;
    for (std::size_t it = 0; it < iterations; ++it) {
        Tensor c = softmax(logits, 2);
        if (trace != nullptr) {
            trace->logits.push_back(logits);
            trace->coeffs.push_back(c);
        }
        Tensor s = reduce_sum(mul(reshape(c, {B, P, K, 1}), votes), 1); // (B,K,Dh)
        v = squash(s);
        if (it + 1 < iterations) {
            Tensor agree = reduce_sum(mul(reshape(v, {B, 1, K, Dh}), votes), 3); // (B,P,K)
            logits = add(logits, agree);
        }
    }
    return {v, l2norm(v, 2)};
}

CapsuleOutput classify_features(const Tensor& features, const Tensor& vote_w,
                                const ModelConfig& cfg) {
    Tensor primary = form_primary_capsules(features, cfg.pool_stride, cfg.primary_dim);
    Tensor votes = predict_votes(primary, vote_w);
    return dynamic_routing(votes, cfg.routing_iters);
}

std::vector<int> argmax_classes(const Tensor& norms) {
    const Shape& s = norms.shape();
    if (s.size() != 2) throw ShapeError("argmax_classes expects (B,K), got " + shape_str(s));
    const std::size_t B = s[0], K = s[1];
    std::vector<int> out(B, 0);
    const auto& nv = norms.values();
    for (std::size_t b = 0; b < B; ++b) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < K; ++k) {
            if (nv[b * K + k] > nv[b * K + best]) best = k;
        }
        out[b] = static_cast<int>(best);
    }
    return out;
}

Tensor init_vote_weights(const ModelConfig& cfg, Rng& rng) {
    const std::size_t P = cfg.primary_count();
    const std::size_t K = cfg.num_classes, Dh = cfg.class_dim, Dp = cfg.primary_dim;
    std::vector<double> w(P * K * Dh * Dp);
    const double sigma = 1.0 / std::sqrt(static_cast<double>(Dp));
    for (auto& v : w) v = rng.normal(0.0, sigma);
    return Tensor::param({P, K, Dh, Dp}, std::move(w), "capsule.vote_w");
}

} // namespace mcap
