#pragma once

#include <vector>

#include "mcap/rng.hpp"
#include "mcap/tensor.hpp"

namespace mcap {

// Differentiable primitives. Binary elementwise ops broadcast with the
// trailing-axes convention; every op records its backward closure on the
// active tape when an input is tracked.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double s);
Tensor add_scalar(const Tensor& x, double s);

Tensor exp(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor relu(const Tensor& x);    // relu'(0) defined as 0
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x); // overflow-safe log(1+e^x)

// Stable softmax along `axis` (max subtraction). Non-finite input is a
// NumericError.
Tensor softmax(const Tensor& x, std::size_t axis);

Tensor reduce_sum(const Tensor& x, std::size_t axis, bool keepdims = false);
Tensor reduce_mean(const Tensor& x, std::size_t axis, bool keepdims = false);
Tensor reduce_sum_all(const Tensor& x);
Tensor reduce_mean_all(const Tensor& x);

// Euclidean norm along `axis`; gradient is 0 where the norm is below 1e-12.
Tensor l2norm(const Tensor& x, std::size_t axis, bool keepdims = false);

// Mean squared error over all elements; shapes must match exactly.
Tensor mse(const Tensor& a, const Tensor& b);

// Batched matrix product. a: (..., M, K), b: (..., K, P); batch prefixes
// broadcast. Throws ShapeError naming both shapes on mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);

// Depthwise same-length 1D convolution. x: (B, L, D), kernel: (W, D) with W
// odd; symmetric zero padding; channel d of the output depends only on
// channel d of the input.
Tensor conv1d_depthwise(const Tensor& x, const Tensor& kernel);

// Non-overlapping average pooling along the length axis of (B, L, D);
// L must be divisible by stride.
Tensor avg_pool1d(const Tensor& x, std::size_t stride);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor reshape(const Tensor& x, Shape shape);

// Capsule nonlinearity along the last axis:
// v = (|s|^2 / (1+|s|^2)) * s/|s|, with v = 0 for |s| < 1e-12.
Tensor squash(const Tensor& s);

// phi(z) = (e^z - 1)/z elementwise, with the series 1 + z/2 + z^2/6 below
// |z| < 1e-6.
Tensor zoh_phi(const Tensor& z);

// Recurrent core: h_t = a_bar_t * h_{t-1} + bx_t (elementwise over (D,N)),
// y[b,t,d] = sum_n c[b,t,n] * h_t[b,d,n]. a_bar, bx: (B,L,D,N); c: (B,L,N);
// h_0 = 0. Returns y: (B,L,D).
Tensor scan_core(const Tensor& a_bar, const Tensor& bx, const Tensor& c);

// Constants (never tracked).
Tensor one_hot(const std::vector<int>& labels, std::size_t k);
// Inverted-dropout mask: entries 0 with probability `rate`, else 1/(1-rate).
Tensor dropout_mask(const Shape& shape, double rate, Rng& rng);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }

} // namespace mcap
