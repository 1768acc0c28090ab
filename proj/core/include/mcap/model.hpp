#pragma once

#include <string>
#include <vector>

#include "mcap/capsule.hpp"
#include "mcap/config.hpp"
#include "mcap/loss.hpp"
#include "mcap/ssm.hpp"

namespace mcap {

// Encoder, capsule decoder and reconstructor under one configuration.
struct MambaCapsuleModel {
    ModelConfig cfg;
    EncoderParams encoder;
    Tensor vote_w;
    ReconstructorParams recon;
    std::vector<std::string> class_names;

    static MambaCapsuleModel init(const ModelConfig& cfg, std::uint64_t seed,
                                  std::vector<std::string> class_names = {});

    // All learnable tensors in a stable, named order (checkpoint manifest
    // order).
    std::vector<Tensor> parameters() const;

    Tensor encode_input(const Tensor& x, bool training = false, Rng* rng = nullptr) const;
    CapsuleOutput forward(const Tensor& x, bool training = false, Rng* rng = nullptr) const;
    Tensor reconstruct_classes(const CapsuleOutput& caps, const std::vector<int>& choose) const;
};

} // namespace mcap
