#include "mcap/loss.hpp"

#include <cmath>

namespace mcap {

Tensor margin_loss(const Tensor& norms, const std::vector<int>& labels, double m_plus,
                   const LossConfig& cfg) {
    const Shape& s = norms.shape();
    if (s.size() != 2) throw ShapeError("margin_loss expects norms (B,K), got " + shape_str(s));
    if (labels.size() != s[0]) {
        throw ShapeError("margin_loss got " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(s[0]) + " examples");
    }
    Tensor t = one_hot(labels, s[1]); // validates label range
    Tensor not_t = add_scalar(scale(t, -1.0), 1.0);
    Tensor pos = relu(add_scalar(scale(norms, -1.0), m_plus));
    Tensor neg = relu(add_scalar(norms, -cfg.m_minus));
    Tensor per = add(mul(t, mul(pos, pos)), scale(mul(not_t, mul(neg, neg)), cfg.lambda));
    return reduce_mean_all(reduce_sum(per, 1));
}

Tensor reconstruct(const Tensor& capsules, const std::vector<int>& choose,
                   const ReconstructorParams& p) {
    const Shape& s = capsules.shape();
    if (s.size() != 3) {
        throw ShapeError("reconstruct expects capsules (B,K,Dh), got " + shape_str(s));
    }
    const std::size_t B = s[0], K = s[1], Dh = s[2];
    Tensor mask = reshape(one_hot(choose, K), {B, K, 1}); // validates indices
    Tensor flat = reshape(mul(capsules, mask), {B, K * Dh});
    Tensor h1 = relu(add(matmul(flat, p.w1), p.b1));
    Tensor h2 = relu(add(matmul(h1, p.w2), p.b2));
    Tensor out = add(matmul(h2, p.w3), p.b3);
    return p.sigmoid_out ? sigmoid(out) : out;
}

Tensor centered_window(const Tensor& x, std::size_t recon_len) {
    const Shape& s = x.shape();
    if (s.size() != 2) throw ShapeError("centered_window expects (B,L), got " + shape_str(s));
    const std::size_t B = s[0], L = s[1];
    if (recon_len > L) {
        throw ConfigError("reconstruction window " + std::to_string(recon_len) +
                          " exceeds beat length " + std::to_string(L));
    }
    const std::size_t start = (L - recon_len) / 2;
    std::vector<double> out(B * recon_len);
    const auto& xv = x.values();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t i = 0; i < recon_len; ++i) out[b * recon_len + i] = xv[b * L + start + i];
    }
    return Tensor::from({B, recon_len}, std::move(out));
}

Tensor reconstruction_loss(const Tensor& reconstructed, const Tensor& window) {
    return mse(reconstructed, window);
}

Tensor total_loss(const Tensor& margin, const Tensor& recon, double recon_weight) {
    return add(margin, scale(recon, recon_weight));
}

ReconstructorParams init_reconstructor(const ModelConfig& cfg, Rng& rng) {
    const std::size_t in = cfg.num_classes * cfg.class_dim;
    const std::size_t h1 = cfg.recon_hidden1, h2 = cfg.recon_hidden2, lr = cfg.recon_len();
    auto mat = [&](std::size_t r, std::size_t c, const char* name) {
        std::vector<double> w(r * c);
        const double sigma = 1.0 / std::sqrt(static_cast<double>(r));
        for (auto& v : w) v = rng.normal(0.0, sigma);
        return Tensor::param({r, c}, std::move(w), name);
    };
    ReconstructorParams p;
    p.w1 = mat(in, h1, "recon.w1");
    p.b1 = Tensor::param({h1}, std::vector<double>(h1, 0.0), "recon.b1");
    p.w2 = mat(h1, h2, "recon.w2");
    p.b2 = Tensor::param({h2}, std::vector<double>(h2, 0.0), "recon.b2");
    p.w3 = mat(h2, lr, "recon.w3");
    p.b3 = Tensor::param({lr}, std::vector<double>(lr, 0.0), "recon.b3");
    p.sigmoid_out = cfg.recon_sigmoid;
    return p;
}

} // namespace mcap
