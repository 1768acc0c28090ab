#pragma once

#include <vector>

#include "mcap/capsule.hpp"
#include "mcap/config.hpp"
#include "mcap/ops.hpp"

namespace mcap {

// Three fully connected layers with ReLU between them; input is the
// flattened class-masked capsule block, output the reconstructed window.
struct ReconstructorParams {
    Tensor w1, b1; // (K*Dh, H1), (H1,)
    Tensor w2, b2; // (H1, H2), (H2,)
    Tensor w3, b3; // (H2, Lr), (Lr,)
    bool sigmoid_out = true;
};

// Mean over the batch of
//   sum_k [ T_k max(0, m_plus - |v_k|)^2 + lambda (1-T_k) max(0, |v_k| - m_minus)^2 ].
Tensor margin_loss(const Tensor& norms, const std::vector<int>& labels, double m_plus,
                   const LossConfig& cfg);

// Masks all capsules except the chosen class, flattens and decodes.
// capsules: (B, K, Dh) -> (B, Lr).
Tensor reconstruct(const Tensor& capsules, const std::vector<int>& choose,
                   const ReconstructorParams& p);

// Centered length-Lr window of each row of x (constant, no gradient).
Tensor centered_window(const Tensor& x, std::size_t recon_len);

Tensor reconstruction_loss(const Tensor& reconstructed, const Tensor& window);

Tensor total_loss(const Tensor& margin, const Tensor& recon, double recon_weight);

ReconstructorParams init_reconstructor(const ModelConfig& cfg, Rng& rng);

} // namespace mcap
