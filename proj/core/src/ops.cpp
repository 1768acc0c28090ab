#include "mcap/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace mcap {

namespace {

constexpr double kNormEps = 1e-12;

using BackFn = std::function<void(const std::vector<double>&,
                                  const std::vector<std::vector<double>*>&)>;

void maybe_record(const char* op, const Tensor& out, std::vector<Tensor> ins, BackFn fn) {
    if (Tape::active() == nullptr) return;
    bool tracked = false;
    for (const auto& t : ins) tracked = tracked || Tape::is_tracked(*t.impl());
    if (!tracked) return;
    TapeNode node;
    node.op = op;
    node.out = out.impl();
    node.inputs.reserve(ins.size());
    for (auto& t : ins) node.inputs.push_back(t.impl());
    node.backward = std::move(fn);
    Tape::record(std::move(node));
}

// Per-output-dim element strides into two broadcast operands (0 where the
// operand is broadcast along that dim).
struct BcastPlan {
    Shape out;
    std::vector<std::size_t> sa, sb;
};

BcastPlan make_plan(const Shape& a, const Shape& b) {
    BcastPlan p;
    p.out = broadcast_shapes(a, b);
    const std::size_t nd = p.out.size();
    p.sa.assign(nd, 0);
    p.sb.assign(nd, 0);
    const auto stra = row_major_strides(a);
    const auto strb = row_major_strides(b);
    for (std::size_t i = 0; i < nd; ++i) {
        if (i < a.size()) {
            const std::size_t d = a.size() - 1 - i;
            if (a[d] != 1) p.sa[nd - 1 - i] = stra[d];
        }
        if (i < b.size()) {
            const std::size_t d = b.size() - 1 - i;
            if (b[d] != 1) p.sb[nd - 1 - i] = strb[d];
        }
    }
    return p;
}

// Odometer walk over the broadcast output; f(out_i, a_i, b_i).
template <class F>
void bcast_for_each(const BcastPlan& p, F&& f) {
    const std::size_t n = numel(p.out);
    const std::size_t nd = p.out.size();
    if (nd == 0) {
        f(std::size_t{0}, std::size_t{0}, std::size_t{0});
        return;
    }
    std::vector<std::size_t> ctr(nd, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t io = 0; io < n; ++io) {
        f(io, ia, ib);
        for (std::size_t d = nd; d-- > 0;) {
            ++ctr[d];
            ia += p.sa[d];
            ib += p.sb[d];
            if (ctr[d] < p.out[d]) break;
            ia -= p.sa[d] * p.out[d];
            ib -= p.sb[d] * p.out[d];
            ctr[d] = 0;
        }
    }
}

template <class F, class DA, class DB>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, F f, DA dfa, DB dfb) {
    BcastPlan plan = make_plan(a.shape(), b.shape());
    std::vector<double> out(numel(plan.out));
    {
        const auto& av = a.values();
        const auto& bv = b.values();
        bcast_for_each(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) {
            out[io] = f(av[ia], bv[ib]);
        });
    }
    Tensor y = make_tensor(plan.out, std::move(out));
    auto ai = a.impl();
    auto bi = b.impl();
    maybe_record(name, y, {a, b},
                 [plan = std::move(plan), ai, bi, dfa, dfb](
                     const std::vector<double>& dout,
                     const std::vector<std::vector<double>*>& din) {
                     const auto& av = ai->value;
                     const auto& bv = bi->value;
                     bcast_for_each(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) {
                         const double g = dout[io];
                         if (din[0]) (*din[0])[ia] += dfa(av[ia], bv[ib]) * g;
                         if (din[1]) (*din[1])[ib] += dfb(av[ia], bv[ib]) * g;
                     });
                 });
    return y;
}

// df receives (x_i, y_i).
template <class F, class DF>
Tensor unary_op(const char* name, const Tensor& x, F f, DF df) {
    std::vector<double> out(x.size());
    const auto& xv = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
    Tensor y = make_tensor(x.shape(), std::move(out));
    auto xi = x.impl();
    auto yi = y.impl();
    maybe_record(name, y, {x},
                 [xi, yi, df](const std::vector<double>& dout,
                              const std::vector<std::vector<double>*>& din) {
                     if (!din[0]) return;
                     auto& dst = *din[0];
                     for (std::size_t i = 0; i < dout.size(); ++i) {
                         dst[i] += df(xi->value[i], yi->value[i]) * dout[i];
                     }
                 });
    return y;
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// View of an array as (outer, mid, inner) around `axis`.
struct AxisView {
    std::size_t outer = 1, mid = 1, inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
    if (axis >= s.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(s));
    }
    AxisView v;
    for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
    v.mid = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
    return v;
}

Shape reduced_shape(const Shape& s, std::size_t axis, bool keepdims) {
    Shape out = s;
    if (keepdims) {
        out[axis] = 1;
    } else {
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
    }
    return out;
}

double phi_value(double z) {
    if (std::abs(z) < 1e-6) return 1.0 + z / 2.0 + z * z / 6.0;
    return std::expm1(z) / z;
}

double phi_deriv(double z) {
    if (std::abs(z) < 1e-3) return 0.5 + z / 3.0 + z * z / 8.0 + z * z * z / 30.0;
    return (std::exp(z) * (z - 1.0) + 1.0) / (z * z);
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        "div", a, b, [](double x, double y) { return x / y; },
        [](double, double y) { return 1.0 / y; },
        [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& x, double s) {
    return unary_op(
        "scale", x, [s](double v) { return v * s; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& x, double s) {
    return unary_op(
        "add_scalar", x, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Tensor exp(const Tensor& x) {
    return unary_op(
        "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor sqrt(const Tensor& x) {
    return unary_op(
        "sqrt", x, [](double v) { return std::sqrt(v); },
        [](double, double y) { return 0.5 / y; });
}

Tensor relu(const Tensor& x) {
    return unary_op(
        "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
    return unary_op(
        "sigmoid", x, [](double v) { return stable_sigmoid(v); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& x) {
    return unary_op(
        "softplus", x,
        [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
        [](double v, double) { return stable_sigmoid(v); });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    for (double v : x.values()) {
        if (!std::isfinite(v)) throw NumericError("softmax input contains a non-finite value");
    }
    const AxisView v = axis_view(x.shape(), axis);
    std::vector<double> out(x.size());
    const auto& xv = x.values();
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t i = 0; i < v.inner; ++i) {
            const std::size_t base = o * v.mid * v.inner + i;
            double mx = xv[base];
            for (std::size_t m = 1; m < v.mid; ++m) {
                mx = std::max(mx, xv[base + m * v.inner]);
            }
            double sum = 0.0;
            for (std::size_t m = 0; m < v.mid; ++m) {
                const double e = std::exp(xv[base + m * v.inner] - mx);
                out[base + m * v.inner] = e;
                sum += e;
            }
            for (std::size_t m = 0; m < v.mid; ++m) out[base + m * v.inner] /= sum;
        }
    }
    Tensor y = make_tensor(x.shape(), std::move(out));
    auto yi = y.impl();
    maybe_record("softmax", y, {x},
                 [yi, v](const std::vector<double>& dout,
                         const std::vector<std::vector<double>*>& din) {
                     if (!din[0]) return;
                     auto& dst = *din[0];
                     const auto& yv = yi->value;
                     for (std::size_t o = 0; o < v.outer; ++o) {
                         for (std::size_t i = 0; i < v.inner; ++i) {
                             const std::size_t base = o * v.mid * v.inner + i;
                             double dot = 0.0;
                             for (std::size_t m = 0; m < v.mid; ++m) {
                                 const std::size_t k = base + m * v.inner;
                                 dot += dout[k] * yv[k];
                             }
                             for (std::size_t m = 0; m < v.mid; ++m) {
                                 const std::size_t k = base + m * v.inner;
                                 dst[k] += yv[k] * (dout[k] - dot);
                             }
                         }
                     }
                 });
    return y;
}

Tensor reduce_sum(const Tensor& x, std::size_t axis, bool keepdims) {
    const AxisView v = axis_view(x.shape(), axis);
    Shape out_shape = reduced_shape(x.shape(), axis, keepdims);
    std::vector<double> out(v.outer * v.inner, 0.0);
    const auto& xv = x.values();
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t m = 0; m < v.mid; ++m) {
            const std::size_t src = (o * v.mid + m) * v.inner;
            const std::size_t dst = o * v.inner;
            for (std::size_t i = 0; i < v.inner; ++i) out[dst + i] += xv[src + i];
        }
    }
    Tensor y = make_tensor(std::move(out_shape), std::move(out));
    maybe_record("reduce_sum", y, {x},
                 [v](const std::vector<double>& dout,
                     const std::vector<std::vector<double>*>& din) {
                     if (!din[0]) return;
                     auto& dst = *din[0];
                     for (std::size_t o = 0; o < v.outer; ++o) {
                         for (std::size_t m = 0; m < v.mid; ++m) {
                             const std::size_t t = (o * v.mid + m) * v.inner;
                             const std::size_t s = o * v.inner;
                             for (std::size_t i = 0; i < v.inner; ++i) dst[t + i] += dout[s + i];
                         }
                     }
                 });
    return y;
}

Tensor reduce_mean(const Tensor& x, std::size_t axis, bool keepdims) {
    const AxisView v = axis_view(x.shape(), axis);
    Tensor y = reduce_sum(x, axis, keepdims);
    return scale(y, 1.0 / static_cast<double>(v.mid));
}

Tensor reduce_sum_all(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    Tensor y = Tensor::scalar(s);
    const std::size_t n = x.size();
    maybe_record("reduce_sum_all", y, {x},
                 [n](const std::vector<double>& dout,
                     const std::vector<std::vector<double>*>& din) {
                     if (!din[0]) return;
                     auto& dst = *din[0];
                     for (std::size_t i = 0; i < n; ++i) dst[i] += dout[0];
                 });
    return y;
}

Tensor reduce_mean_all(const Tensor& x) {
    return scale(reduce_sum_all(x), 1.0 / static_cast<double>(x.size()));
}

Tensor l2norm(const Tensor& x, std::size_t axis, bool keepdims) {
    const AxisView v = axis_view(x.shape(), axis);
    Shape out_shape = reduced_shape(x.shape(), axis, keepdims);
    std::vector<double> out(v.outer * v.inner, 0.0);
    const auto& xv = x.values();
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t i = 0; i < v.inner; ++i) {
            double s2 = 0.0;
            for (std::size_t m = 0; m < v.mid; ++m) {
                const double e = xv[(o * v.mid + m) * v.inner + i];
                s2 += e * e;
            }
            out[o * v.inner + i] = std::sqrt(s2);
        }
    }
    Tensor y = make_tensor(std::move(out_shape), std::move(out));
    auto xi = x.impl();
    auto yi = y.impl();
    maybe_record("l2norm", y, {x},
                 [xi, yi, v](const std::vector<double>& dout,
                             const std::vector<std::vector<double>*>& din) {
                     if (!din[0]) return;
                     auto& dst = *din[0];
                     for (std::size_t o = 0; o < v.outer; ++o) {
                         for (std::size_t i = 0; i < v.inner; ++i) {
                             const double n = yi->value[o * v.inner + i];
                             if (n < kNormEps) continue;
                             const double g = dout[o * v.inner + i] / n;
                             for (std::size_t m = 0; m < v.mid; ++m) {
                                 const std::size_t k = (o * v.mid + m) * v.inner + i;
                                 dst[k] += g * xi->value[k];
                             }
                         }
                     }
                 });
    return y;
}

Tensor mse(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("mse requires equal shapes, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    }
    const std::size_t n = a.size();
    const auto& av = a.values();
    const auto& bv = b.values();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = av[i] - bv[i];
        s += d * d;
    }
    Tensor y = Tensor::scalar(s / static_cast<double>(n));
    auto ai = a.impl();
    auto bi = b.impl();
    maybe_record("mse", y, {a, b},
                 [ai, bi, n](const std::vector<double>& dout,
                             const std::vector<std::vector<double>*>& din) {
                     const double g = 2.0 * dout[0] / static_cast<double>(n);
                     for (std::size_t i = 0; i < n; ++i) {
                         const double d = ai->value[i] - bi->value[i];
                         if (din[0]) (*din[0])[i] += g * d;
                         if (din[1]) (*din[1])[i] -= g * d;
                     }
                 });
    return y;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() < 2 || sb.size() < 2) {
        throw ShapeError("matmul requires rank >= 2 operands, got " + shape_str(sa) + " and " +
                         shape_str(sb));
    }
    const std::size_t M = sa[sa.size() - 2];
    const std::size_t K = sa[sa.size() - 1];
    const std::size_t K2 = sb[sb.size() - 2];
    const std::size_t P = sb[sb.size() - 1];
    if (K != K2) {
        throw ShapeError("matmul inner dimensions disagree: " + shape_str(sa) + " x " +
                         shape_str(sb));
    }
    const Shape batch_a(sa.begin(), sa.end() - 2);
    const Shape batch_b(sb.begin(), sb.end() - 2);

    // Batch plan in units of elements of each operand.
    BcastPlan plan;
    plan.out = broadcast_shapes(batch_a, batch_b);
    const std::size_t nd = plan.out.size();
    plan.sa.assign(nd, 0);
    plan.sb.assign(nd, 0);
    const auto stra = row_major_strides(sa);
    const auto strb = row_major_strides(sb);
    for (std::size_t i = 0; i < nd; ++i) {
        if (i < batch_a.size()) {
            const std::size_t d = batch_a.size() - 1 - i;
            if (batch_a[d] != 1) plan.sa[nd - 1 - i] = stra[d];
        }
        if (i < batch_b.size()) {
            const std::size_t d = batch_b.size() - 1 - i;
            if (batch_b[d] != 1) plan.sb[nd - 1 - i] = strb[d];
        }
    }

    Shape out_shape = plan.out;
    out_shape.push_back(M);
    out_shape.push_back(P);
    std::vector<double> out(numel(out_shape), 0.0);
    {
        const double* av = a.values().data();
        const double* bv = b.values().data();
        double* ov = out.data();
        bcast_for_each(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) {
            const double* A = av + ia;
            const double* B = bv + ib;
            double* O = ov + io * M * P;
            for (std::size_t m = 0; m < M; ++m) {
                const double* arow = A + m * K;
                double* orow = O + m * P;
                for (std::size_t k = 0; k < K; ++k) {
                    const double x = arow[k];
                    if (x == 0.0) continue;
                    const double* brow = B + k * P;
                    for (std::size_t p = 0; p < P; ++p) orow[p] += x * brow[p];
                }
            }
        });
    }
    Tensor y = make_tensor(std::move(out_shape), std::move(out));
    auto ai = a.impl();
    auto bi = b.impl();
    maybe_record("matmul", y, {a, b},
                 [plan = std::move(plan), ai, bi, M, K, P](
                     const std::vector<double>& dout,
                     const std::vector<std::vector<double>*>& din) {
                     const double* av = ai->value.data();
                     const double* bv = bi->value.data();
                     bcast_for_each(plan, [&](std::size_t io, std::size_t ia, std::size_t ib) {
                         const double* G = dout.data() + io * M * P;
                         if (din[0]) {
                             double* dA = din[0]->data() + ia;
                             const double* B = bv + ib;
                             for (std::size_t m = 0; m < M; ++m) {
                                 const double* grow = G + m * P;
                                 double* darow = dA + m * K;
                                 for (std::size_t k = 0; k < K; ++k) {
                                     const double* brow = B + k * P;
                                     double acc = 0.0;
                                     for (std::size_t p = 0; p < P; ++p) acc += grow[p] * brow[p];
                                     darow[k] += acc;
                                 }
                             }
                         }
                         if (din[1]) {
                             double* dB = din[1]->data() + ib;
                             const double* A = av + ia;
                             for (std::size_t m = 0; m < M; ++m) {
                                 const double* grow = G + m * P;
                                 const double* arow = A + m * K;
                                 for (std::size_t k = 0; k < K; ++k) {
                                     const double x = arow[k];
                                     if (x == 0.0) continue;
                                     double* dbrow = dB + k * P;
                                     for (std::size_t p = 0; p < P; ++p) dbrow[p] += x * grow[p];
                                 }
                             }
                         }
                     });
                 });
    return y;
}

Tensor conv1d_depthwise(const Tensor& x, const Tensor& kernel) {
    const Shape& sx = x.shape();
    const Shape& sk = kernel.shape();
    if (sx.size() != 3 || sk.size() != 2) {
        throw ShapeError("conv1d expects x (B,L,D) and kernel (W,D), got " + shape_str(sx) +
                         " and " + shape_str(sk));
    }
    const std::size_t B = sx[0], L = sx[1], D = sx[2], W = sk[0];
    if (W % 2 == 0) {
        throw ConfigError("conv1d kernel width must be odd, got " + std::to_string(W));
    }
    if (sk[1] != D) {
        throw ShapeError("conv1d channel mismatch: x " + shape_str(sx) + " vs kernel " +
                         shape_str(sk));
    }
    const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(W / 2);
    std::vector<double> out(B * L * D, 0.0);
    const auto& xv = x.values();
    const auto& kv = kernel.values();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t l = 0; l < L; ++l) {
            for (std::size_t w = 0; w < W; ++w) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(l) +
                                           static_cast<std::ptrdiff_t>(w) - c;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(L)) continue;
                const std::size_t xoff = (b * L + static_cast<std::size_t>(src)) * D;
                const std::size_t ooff = (b * L + l) * D;
                const std::size_t koff = w * D;
                for (std::size_t d = 0; d < D; ++d) out[ooff + d] += kv[koff + d] * xv[xoff + d];
            }
        }
    }
    Tensor y = make_tensor(sx, std::move(out));
    auto xi = x.impl();
    auto ki = kernel.impl();
    maybe_record("conv1d", y, {x, kernel},
                 [xi, ki, B, L, D, W, c](const std::vector<double>& dout,
                                         const std::vector<std::vector<double>*>& din) {
                     for (std::size_t b = 0; b < B; ++b) {
                         for (std::size_t l = 0; l < L; ++l) {
                             for (std::size_t w = 0; w < W; ++w) {
                                 const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(l) +
                                                            static_cast<std::ptrdiff_t>(w) - c;
                                 if (src < 0 || src >= static_cast<std::ptrdiff_t>(L)) continue;
                                 const std::size_t xoff =
                                     (b * L + static_cast<std::size_t>(src)) * D;
                                 const std::size_t ooff = (b * L + l) * D;
                                 const std::size_t koff = w * D;
                                 for (std::size_t d = 0; d < D; ++d) {
                                     const double g = dout[ooff + d];
                                     if (din[0]) (*din[0])[xoff + d] += ki->value[koff + d] * g;
                                     if (din[1]) (*din[1])[koff + d] += xi->value[xoff + d] * g;
                                 }
                             }
                         }
                     }
                 });
    return y;
}

Tensor avg_pool1d(const Tensor& x, std::size_t stride) {
    const Shape& sx = x.shape();
    if (sx.size() != 3) {
        throw ShapeError("avg_pool1d expects (B,L,D), got " + shape_str(sx));
    }
    const std::size_t B = sx[0], L = sx[1], D = sx[2];
    if (stride == 0 || L % stride != 0) {
        throw ConfigError("pooling stride " + std::to_string(stride) +
                          " does not divide sequence length " + std::to_string(L));
    }
    const std::size_t Lp = L / stride;
    std::vector<double> out(B * Lp * D, 0.0);
    const auto& xv = x.values();
    const double inv = 1.0 / static_cast<double>(stride);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t p = 0; p < Lp; ++p) {
            for (std::size_t s = 0; s < stride; ++s) {
                const std::size_t xoff = (b * L + p * stride + s) * D;
                const std::size_t ooff = (b * Lp + p) * D;
                for (std::size_t d = 0; d < D; ++d) out[ooff + d] += xv[xoff + d] * inv;
            }
        }
    }
    Tensor y = make_tensor({B, Lp, D}, std::move(out));
    maybe_record("avg_pool1d", y, {x},
                 [B, L, D, Lp, stride, inv](const std::vector<double>& dout,
                                            const std::vector<std::vector<double>*>& din) {
                     if (!din[0]) return;
                     auto& dst = *din[0];
                     for (std::size_t b = 0; b < B; ++b) {
                         for (std::size_t p = 0; p < Lp; ++p) {
                             for (std::size_t s = 0; s < stride; ++s) {
                                 const std::size_t xoff = (b * L + p * stride + s) * D;
                                 const std::size_t ooff = (b * Lp + p) * D;
                                 for (std::size_t d = 0; d < D; ++d) {
                                     dst[xoff + d] += dout[ooff + d] * inv;
                                 }
                             }
                         }
                     }
                 });
    return y;
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat of zero tensors");
    const Shape& s0 = parts[0].shape();
    if (axis >= s0.size()) {
        throw ShapeError("concat axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(s0));
    }
    std::size_t total_axis = 0;
    for (const auto& t : parts) {
        const Shape& s = t.shape();
        if (s.size() != s0.size()) {
            throw ShapeError("concat rank mismatch: " + shape_str(s0) + " vs " + shape_str(s));
        }
        for (std::size_t d = 0; d < s.size(); ++d) {
            if (d != axis && s[d] != s0[d]) {
                throw ShapeError("concat extent mismatch: " + shape_str(s0) + " vs " +
                                 shape_str(s));
            }
        }
        total_axis += s[axis];
    }
    Shape out_shape = s0;
    out_shape[axis] = total_axis;
    const AxisView vo = axis_view(out_shape, axis);
    std::vector<double> out(numel(out_shape));
    std::vector<std::size_t> mids(parts.size());
    std::size_t off_mid = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const std::size_t mid = parts[p].shape()[axis];
        mids[p] = mid;
        const auto& pv = parts[p].values();
        for (std::size_t o = 0; o < vo.outer; ++o) {
            std::memcpy(out.data() + (o * vo.mid + off_mid) * vo.inner,
                        pv.data() + o * mid * vo.inner, mid * vo.inner * sizeof(double));
        }
        off_mid += mid;
    }
    Tensor y = make_tensor(std::move(out_shape), std::move(out));
    maybe_record("concat", y, parts,
                 [vo, mids](const std::vector<double>& dout,
                            const std::vector<std::vector<double>*>& din) {
                     std::size_t off_mid = 0;
                     for (std::size_t p = 0; p < mids.size(); ++p) {
                         const std::size_t mid = mids[p];
                         if (din[p]) {
                             auto& dst = *din[p];
                             for (std::size_t o = 0; o < vo.outer; ++o) {
                                 const std::size_t so = (o * vo.mid + off_mid) * vo.inner;
                                 const std::size_t to = o * mid * vo.inner;
                                 for (std::size_t i = 0; i < mid * vo.inner; ++i) {
                                     dst[to + i] += dout[so + i];
                                 }
                             }
                         }
                         off_mid += mid;
                     }
                 });
    return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (numel(shape) != x.size()) {
        throw ShapeError("reshape from " + shape_str(x.shape()) + " to " + shape_str(shape) +
                         " changes element count");
    }
    Tensor y = make_tensor(std::move(shape), x.values());
    maybe_record("reshape", y, {x},
                 [](const std::vector<double>& dout,
                    const std::vector<std::vector<double>*>& din) {
                     if (!din[0]) return;
                     auto& dst = *din[0];
                     for (std::size_t i = 0; i < dout.size(); ++i) dst[i] += dout[i];
                 });
    return y;
}

Tensor squash(const Tensor& s) {
    const Shape& sh = s.shape();
    if (sh.empty()) throw ShapeError("squash requires rank >= 1");
    const std::size_t D = sh.back();
    const std::size_t outer = s.size() / D;
    std::vector<double> out(s.size());
    const auto& sv = s.values();
    for (std::size_t o = 0; o < outer; ++o) {
        double n2 = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
            const double e = sv[o * D + d];
            n2 += e * e;
        }
        const double n = std::sqrt(n2);
        const double g = n < kNormEps ? 0.0 : n / (1.0 + n2);
        for (std::size_t d = 0; d < D; ++d) out[o * D + d] = sv[o * D + d] * g;
    }
    Tensor y = make_tensor(sh, std::move(out));
    auto si = s.impl();
    maybe_record("squash", y, {s},
                 [si, outer, D](const std::vector<double>& dout,
                                const std::vector<std::vector<double>*>& din) {
                     if (!din[0]) return;
                     auto& dst = *din[0];
                     for (std::size_t o = 0; o < outer; ++o) {
                         const double* sv = si->value.data() + o * D;
                         const double* dv = dout.data() + o * D;
                         double n2 = 0.0;
                         for (std::size_t d = 0; d < D; ++d) n2 += sv[d] * sv[d];
                         const double n = std::sqrt(n2);
                         if (n < kNormEps) continue; // v == 0 with zero slope in the limit
                         const double g = n / (1.0 + n2);
                         const double gp = (1.0 - n2) / ((1.0 + n2) * (1.0 + n2));
                         double sd = 0.0;
                         for (std::size_t d = 0; d < D; ++d) sd += sv[d] * dv[d];
                         const double coef = gp / n * sd;
                         for (std::size_t d = 0; d < D; ++d) {
                             dst[o * D + d] += g * dv[d] + coef * sv[d];
                         }
                     }
                 });
    return y;
}

Tensor zoh_phi(const Tensor& z) {
    return unary_op(
        "zoh_phi", z, [](double v) { return phi_value(v); },
        [](double v, double) { return phi_deriv(v); });
}

Tensor scan_core(const Tensor& a_bar, const Tensor& bx, const Tensor& c) {
    const Shape& sa = a_bar.shape();
    if (sa.size() != 4 || bx.shape() != sa) {
        throw ShapeError("scan_core expects a_bar and bx of equal shape (B,L,D,N), got " +
                         shape_str(sa) + " and " + shape_str(bx.shape()));
    }
    const std::size_t B = sa[0], L = sa[1], D = sa[2], N = sa[3];
    const Shape expect_c{B, L, N};
    if (c.shape() != expect_c) {
        throw ShapeError("scan_core expects c of shape " + shape_str(expect_c) + ", got " +
                         shape_str(c.shape()));
    }
    const auto& avr = a_bar.values();
    const auto& bvr = bx.values();
    const auto& cvr = c.values();
    // All hidden states are kept for the backward pass.
    auto h = std::make_shared<std::vector<double>>(B * L * D * N, 0.0);
    std::vector<double> out(B * L * D, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < L; ++t) {
            for (std::size_t d = 0; d < D; ++d) {
                const std::size_t cur = ((b * L + t) * D + d) * N;
                const std::size_t prev = t == 0 ? 0 : ((b * L + t - 1) * D + d) * N;
                const std::size_t coff = (b * L + t) * N;
                double y = 0.0;
                for (std::size_t n = 0; n < N; ++n) {
                    const double hp = t == 0 ? 0.0 : (*h)[prev + n];
                    const double hv = avr[cur + n] * hp + bvr[cur + n];
                    (*h)[cur + n] = hv;
                    y += cvr[coff + n] * hv;
                }
                out[(b * L + t) * D + d] = y;
            }
        }
    }
    Tensor y = make_tensor({B, L, D}, std::move(out));
    auto ai = a_bar.impl();
    auto ci = c.impl();
    maybe_record(
        "scan_core", y, {a_bar, bx, c},
        [ai, ci, h, B, L, D, N](const std::vector<double>& dout,
                                const std::vector<std::vector<double>*>& din) {
            const auto& avr = ai->value;
            const auto& cvr = ci->value;
            std::vector<double> g(N); // running dL/dh_t for one (b,d) lane
            for (std::size_t b = 0; b < B; ++b) {
                for (std::size_t d = 0; d < D; ++d) {
                    std::fill(g.begin(), g.end(), 0.0);
                    for (std::size_t t = L; t-- > 0;) {
                        const std::size_t cur = ((b * L + t) * D + d) * N;
                        const std::size_t coff = (b * L + t) * N;
                        const double gy = dout[(b * L + t) * D + d];
                        for (std::size_t n = 0; n < N; ++n) {
                            g[n] += gy * cvr[coff + n];
                            if (din[2]) (*din[2])[coff + n] += gy * (*h)[cur + n];
                        }
                        for (std::size_t n = 0; n < N; ++n) {
                            const double hp =
                                t == 0 ? 0.0 : (*h)[((b * L + t - 1) * D + d) * N + n];
                            if (din[0]) (*din[0])[cur + n] += g[n] * hp;
                            if (din[1]) (*din[1])[cur + n] += g[n];
                            g[n] *= avr[cur + n];
                        }
                    }
                }
            }
        });
    return y;
}

Tensor one_hot(const std::vector<int>& labels, std::size_t k) {
    std::vector<double> out(labels.size() * k, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
            throw Error("label " + std::to_string(labels[i]) + " out of range [0, " +
                        std::to_string(k) + ")");
        }
        out[i * k + static_cast<std::size_t>(labels[i])] = 1.0;
    }
    return Tensor::from({labels.size(), k}, std::move(out));
}

Tensor dropout_mask(const Shape& shape, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    }
    std::vector<double> out(numel(shape));
    const double keep = 1.0 / (1.0 - rate);
    for (auto& v : out) v = rng.uniform() < rate ? 0.0 : keep;
    return Tensor::from(shape, std::move(out));
}

} // namespace mcap
