#pragma once

#include <vector>

#include "mcap/tensor.hpp"

namespace mcap {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adaptive first/second-moment update with bias correction. Consumes and
// clears parameter gradients on each step.
class Adam {
public:
    explicit Adam(std::vector<Tensor> params, AdamConfig cfg = {});

    void step(double lr);
    std::size_t steps_taken() const { return t_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    AdamConfig cfg_;
    std::size_t t_ = 0;
};

} // namespace mcap
