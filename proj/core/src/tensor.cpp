#include "mcap/tensor.hpp"

#include <atomic>
#include <cmath>

namespace mcap {

namespace {

thread_local Tape* g_active_tape = nullptr;
std::atomic<std::uint64_t> g_epoch_counter{0};

} // namespace

Tensor make_tensor(Shape shape, std::vector<double> data) {
    auto impl = std::make_shared<TensorImpl>();
    if (numel(shape) != data.size()) {
        throw ShapeError("tensor data size " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
    }
    impl->shape = std::move(shape);
    impl->value = std::move(data);
    return Tensor(std::move(impl));
}

Tensor Tensor::zeros(Shape shape) {
    const std::size_t n = numel(shape);
    return make_tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape shape, double v) {
    const std::size_t n = numel(shape);
    return make_tensor(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::from(Shape shape, std::vector<double> data) {
    return make_tensor(std::move(shape), std::move(data));
}

Tensor Tensor::scalar(double v) { return make_tensor({}, {v}); }

Tensor Tensor::param(Shape shape, std::vector<double> data, std::string name) {
    Tensor t = make_tensor(std::move(shape), std::move(data));
    t.impl_->requires_grad = true;
    t.impl_->name = std::move(name);
    return t;
}

std::size_t Tensor::extent(std::size_t axis) const {
    if (axis >= impl_->shape.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(impl_->shape));
    }
    return impl_->shape[axis];
}

double Tensor::item() const {
    if (impl_->value.size() != 1) {
        throw ShapeError("item() requires a scalar, got shape " + shape_str(impl_->shape));
    }
    return impl_->value[0];
}

double Tensor::at(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != impl_->shape.size()) {
        throw ShapeError("index rank " + std::to_string(idx.size()) + " does not match shape " +
                         shape_str(impl_->shape));
    }
    const auto strides = row_major_strides(impl_->shape);
    std::size_t off = 0;
    std::size_t d = 0;
    for (auto i : idx) {
        if (i >= impl_->shape[d]) {
            throw ShapeError("index out of bounds in dimension " + std::to_string(d));
        }
        off += i * strides[d];
        ++d;
    }
    return impl_->value[off];
}

const std::vector<double>& Tensor::grad() const {
    if (impl_->grad.empty()) {
        throw Error("tensor '" + impl_->name + "' has no gradient");
    }
    return impl_->grad;
}

void Tensor::zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tape::Tape() : epoch_(++g_epoch_counter) {
    prev_ = g_active_tape;
    g_active_tape = this;
}

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

bool Tape::is_tracked(const TensorImpl& t) {
    if (t.requires_grad) return true;
    Tape* tape = g_active_tape;
    return tape != nullptr && t.tape_epoch == tape->epoch_;
}

void Tape::record(TapeNode node) {
    Tape* tape = g_active_tape;
    if (tape == nullptr) return;
    node.out->tape_epoch = tape->epoch_;
    tape->nodes_.push_back(std::move(node));
}

void Tape::reset() {
    nodes_.clear();
    consumed_ = false;
    epoch_ = ++g_epoch_counter;
}

GradTable Tape::run(const Tensor& loss) {
    if (consumed_) {
        throw Error("backward() called twice on the same tape without reset()");
    }
    if (!loss.defined() || loss.size() != 1) {
        throw ShapeError("backward() requires a scalar loss, got shape " +
                         (loss.defined() ? shape_str(loss.shape()) : std::string("<null>")));
    }
    if (loss.impl()->tape_epoch != epoch_) {
        throw Error("loss is not attached to the active tape");
    }
    consumed_ = true;

    // Gradient buffers for every tensor reached during the traversal.
    std::unordered_map<const TensorImpl*, std::vector<double>> grads;
    grads[loss.impl().get()] = {1.0};

    std::vector<std::vector<double>*> din;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        TapeNode& node = nodes_[i];
        auto it = grads.find(node.out.get());
        if (it == grads.end()) continue; // no downstream path to the loss
        const std::vector<double>& dout = it->second;

        din.assign(node.inputs.size(), nullptr);
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
            TensorImpl* in = node.inputs[k].get();
            if (!in->requires_grad && in->tape_epoch != epoch_) continue;
            auto [slot, inserted] = grads.try_emplace(in);
            if (inserted) slot->second.assign(in->value.size(), 0.0);
            din[k] = &slot->second;
        }
        node.backward(dout, din);
    }

    GradTable leaves;
    for (auto& [impl, buf] : grads) {
        if (impl->requires_grad) leaves.emplace(impl, std::move(buf));
    }
    return leaves;
}

void Tape::backward(const Tensor& loss) {
    GradTable leaves = run(loss);
    for (auto& [impl, buf] : leaves) {
        auto* mut = const_cast<TensorImpl*>(impl);
        if (mut->grad.empty()) {
            mut->grad = std::move(buf);
        } else {
            for (std::size_t i = 0; i < buf.size(); ++i) mut->grad[i] += buf[i];
        }
    }
}

GradTable Tape::backward_collect(const Tensor& loss) { return run(loss); }

std::optional<std::string> Tape::first_nonfinite() const {
    for (const auto& node : nodes_) {
        for (double v : node.out->value) {
            if (!std::isfinite(v)) {
                std::string label = node.op;
                if (!node.out->name.empty()) label += ":" + node.out->name;
                return label;
            }
        }
    }
    return std::nullopt;
}

} // namespace mcap
