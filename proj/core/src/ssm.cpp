#include "mcap/ssm.hpp"

#include <cmath>

namespace mcap {

namespace {

constexpr double kLayerNormEps = 1e-5;

std::string pname(const std::string& scope, const char* field) { return scope + "." + field; }

} // namespace

double softplus_inverse(double y) {
    if (y > 30.0) return y; // e^-y below double noise
    return std::log(std::expm1(y));
}

Discretized discretize(const Tensor& a, const Tensor& b_t, const Tensor& delta_t) {
    for (double v : delta_t.values()) {
        if (!(v > 0.0)) {
            throw NumericError("discretize requires strictly positive step sizes; "
                               "a non-positive delta indicates a broken softplus upstream");
        }
    }
    const Shape& sd = delta_t.shape();
    if (sd.size() != 3) {
        throw ShapeError("discretize expects delta of shape (B,L,D), got " + shape_str(sd));
    }
    const std::size_t B = sd[0], L = sd[1], D = sd[2];
    const std::size_t N = a.extent(1);
    Tensor delta4 = reshape(delta_t, {B, L, D, 1});
    Tensor z = mul(delta4, a);                       // (B,L,D,N)
    Tensor a_bar = exp(z);
    Tensor db = mul(zoh_phi(z), delta4);             // phi(z) * delta
    Tensor b_bar = mul(db, reshape(b_t, {B, L, 1, N}));
    return {a_bar, b_bar};
}

Tensor selective_scan(const Tensor& x, const SsmBranchParams& p) {
    const Shape& sx = x.shape();
    if (sx.size() != 3) {
        throw ShapeError("selective_scan expects (B,L,D), got " + shape_str(sx));
    }
    const std::size_t B = sx[0], L = sx[1], D = sx[2];
    Tensor b_t = matmul(x, p.b_proj); // (B,L,N)
    Tensor c_t = matmul(x, p.c_proj); // (B,L,N)
    Tensor delta = softplus(add(matmul(x, p.delta_proj), p.delta_base)); // (B,L,D)
    Tensor a = scale(exp(p.log_neg_a), -1.0); // (D,N), entries < 0
    Discretized disc = discretize(a, b_t, delta);
    Tensor bx = mul(disc.b_bar, reshape(x, {B, L, D, 1}));
    return scan_core(disc.a_bar, bx, c_t);
}

Tensor layer_norm_channels(const Tensor& x, const Tensor& scale_t, const Tensor& shift_t) {
    const std::size_t last = x.ndim() - 1;
    Tensor mu = reduce_mean(x, last, /*keepdims=*/true);
    Tensor xc = sub(x, mu);
    Tensor var = reduce_mean(mul(xc, xc), last, /*keepdims=*/true);
    Tensor normed = div(xc, sqrt(add_scalar(var, kLayerNormEps)));
    return add(mul(normed, scale_t), shift_t);
}

Tensor fusion_block(const Tensor& x, const FusionBlockParams& p) {
    Tensor xh = conv1d_depthwise(x, p.shared_conv);
    std::vector<Tensor> parts;
    parts.reserve(p.branches.size());
    for (std::size_t j = 0; j < p.branches.size(); ++j) {
        Tensor xb = conv1d_depthwise(xh, p.branches[j].conv_kernel);
        Tensor yb = selective_scan(xb, p.branches[j]);
        parts.push_back(matmul(yb, p.down_proj[j])); // (B,L,D/m)
    }
    Tensor cat = concat(parts, 2);
    return layer_norm_channels(add(cat, x), p.ln_scale, p.ln_shift);
}

Tensor encode(const Tensor& x, const EncoderParams& p, bool training, Rng* rng) {
    const Shape& sx = x.shape();
    if (sx.size() != 2) throw ShapeError("encode expects (B,L), got " + shape_str(sx));
    if (sx[1] != p.beat_len) {
        throw ShapeError("encode expects sequences of length " + std::to_string(p.beat_len) +
                         ", got " + std::to_string(sx[1]));
    }
    if (training && rng == nullptr) throw Error("encode(training=true) requires an rng");
    const std::size_t B = sx[0], L = sx[1];
    Tensor h = add(matmul(reshape(x, {B, L, 1}), p.up_proj), p.up_bias);
    if (training && p.dropout > 0.0) h = mul(h, dropout_mask(h.shape(), p.dropout, *rng));
    for (const auto& block : p.blocks) {
        h = fusion_block(h, block);
        if (training && p.dropout > 0.0) h = mul(h, dropout_mask(h.shape(), p.dropout, *rng));
    }
    return h;
}

EncoderParams init_encoder(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::size_t D = cfg.dim, N = cfg.state_dim, m = cfg.branches;
    EncoderParams enc;
    enc.beat_len = cfg.beat_len;
    enc.dropout = cfg.dropout;

    std::vector<double> up(D);
    for (auto& v : up) v = rng.normal(0.0, 1.0);
    enc.up_proj = Tensor::param({1, D}, std::move(up), "enc.up_proj");
    enc.up_bias = Tensor::param({D}, std::vector<double>(D, 0.0), "enc.up_bias");

    auto conv_init = [&](std::size_t w, const std::string& name) {
        // Near-identity start: center tap 1 plus noise.
        std::vector<double> k(w * D);
        const double sigma = 0.1 / std::sqrt(static_cast<double>(w));
        for (auto& v : k) v = rng.normal(0.0, sigma);
        for (std::size_t d = 0; d < D; ++d) k[(w / 2) * D + d] += 1.0;
        return Tensor::param({w, D}, std::move(k), name);
    };
    auto mat_init = [&](std::size_t r, std::size_t c, double sigma, const std::string& name) {
        std::vector<double> w(r * c);
        for (auto& v : w) v = rng.normal(0.0, sigma);
        return Tensor::param({r, c}, std::move(w), name);
    };

    for (std::size_t layer = 0; layer < cfg.layers; ++layer) {
        const std::string scope = "enc.block" + std::to_string(layer);
        FusionBlockParams block;
        block.shared_conv = conv_init(cfg.shared_conv_width, pname(scope, "shared_conv"));
        for (std::size_t j = 1; j <= m; ++j) {
            const std::string bscope = scope + ".br" + std::to_string(j);
            SsmBranchParams br;
            br.conv_width = 2 * j + 1;
            br.delta_scale = std::pow(4.0, static_cast<double>(j));
            // Diagonal state matrix: A[d,n] = -(n+1), learned in log space.
            std::vector<double> la(D * N);
            for (std::size_t d = 0; d < D; ++d) {
                for (std::size_t n = 0; n < N; ++n) {
                    la[d * N + n] = std::log(static_cast<double>(n + 1));
                }
            }
            br.log_neg_a = Tensor::param({D, N}, std::move(la), pname(bscope, "log_neg_a"));
            const double proj_sigma = 1.0 / std::sqrt(static_cast<double>(D));
            br.b_proj = mat_init(D, N, proj_sigma, pname(bscope, "b_proj"));
            br.c_proj = mat_init(D, N, proj_sigma, pname(bscope, "c_proj"));
            br.delta_proj = mat_init(D, D, 0.1 * proj_sigma, pname(bscope, "delta_proj"));
            // Effective step softplus(delta_base) lands uniformly in the
            // branch's geometric range [0.001, 0.1] * 4^j.
            std::vector<double> db(D);
            for (auto& v : db) {
                v = softplus_inverse(rng.uniform(0.001 * br.delta_scale, 0.1 * br.delta_scale));
            }
            br.delta_base = Tensor::param({D}, std::move(db), pname(bscope, "delta_base"));
            br.conv_kernel = conv_init(br.conv_width, pname(bscope, "conv_kernel"));
            block.branches.push_back(std::move(br));

            block.down_proj.push_back(mat_init(D, D / m, proj_sigma,
                                               pname(bscope, "down_proj")));
        }
        block.ln_scale = Tensor::param({D}, std::vector<double>(D, 1.0), pname(scope, "ln_scale"));
        block.ln_shift = Tensor::param({D}, std::vector<double>(D, 0.0), pname(scope, "ln_shift"));
        enc.blocks.push_back(std::move(block));
    }
    return enc;
}

} // namespace mcap
