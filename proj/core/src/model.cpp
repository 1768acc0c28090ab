#include "mcap/model.hpp"

namespace mcap {

MambaCapsuleModel MambaCapsuleModel::init(const ModelConfig& cfg, std::uint64_t seed,
                                          std::vector<std::string> class_names) {
    cfg.validate();
    Rng rng(Rng::mix(seed, 0x6d6f64656cULL));
    MambaCapsuleModel model;
    model.cfg = cfg;
    model.encoder = init_encoder(cfg, rng);
    model.vote_w = init_vote_weights(cfg, rng);
    model.recon = init_reconstructor(cfg, rng);
    if (class_names.empty()) {
        AppConfig tmp;
        tmp.model = cfg;
        model.class_names = tmp.resolved_class_names();
    } else {
        if (class_names.size() != cfg.num_classes) {
            throw ConfigError("got " + std::to_string(class_names.size()) + " class names for " +
                              std::to_string(cfg.num_classes) + " classes");
        }
        model.class_names = std::move(class_names);
    }
    return model;
}

std::vector<Tensor> MambaCapsuleModel::parameters() const {
    std::vector<Tensor> ps;
    ps.push_back(encoder.up_proj);
    ps.push_back(encoder.up_bias);
    for (const auto& block : encoder.blocks) {
        ps.push_back(block.shared_conv);
        for (const auto& br : block.branches) {
            ps.push_back(br.log_neg_a);
            ps.push_back(br.b_proj);
            ps.push_back(br.c_proj);
            ps.push_back(br.delta_proj);
            ps.push_back(br.delta_base);
            ps.push_back(br.conv_kernel);
        }
        for (const auto& dp : block.down_proj) ps.push_back(dp);
        ps.push_back(block.ln_scale);
        ps.push_back(block.ln_shift);
    }
    ps.push_back(vote_w);
    ps.push_back(recon.w1);
    ps.push_back(recon.b1);
    ps.push_back(recon.w2);
    ps.push_back(recon.b2);
    ps.push_back(recon.w3);
    ps.push_back(recon.b3);
    return ps;
}

Tensor MambaCapsuleModel::encode_input(const Tensor& x, bool training, Rng* rng) const {
    return encode(x, encoder, training, rng);
}

CapsuleOutput MambaCapsuleModel::forward(const Tensor& x, bool training, Rng* rng) const {
    Tensor features = encode(x, encoder, training, rng);
    return classify_features(features, vote_w, cfg);
}

Tensor MambaCapsuleModel::reconstruct_classes(const CapsuleOutput& caps,
                                              const std::vector<int>& choose) const {
    return reconstruct(caps.capsules, choose, recon);
}

} // namespace mcap
