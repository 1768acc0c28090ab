#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcap/common.hpp"

namespace mcap {

class Tape;

// Shared storage behind a Tensor handle. Values are immutable once the
// tensor participates in a computation; parameter buffers are mutated only
// between optimizer steps.
struct TensorImpl {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // same size as value once allocated
    bool requires_grad = false;
    std::string name;
    std::uint64_t tape_epoch = 0; // nonzero when produced by an op on that tape
};

// Value-semantic handle to a dense fp64 array, optionally tracked by the
// active gradient tape.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);
    static Tensor from(Shape shape, std::vector<double> data);
    static Tensor scalar(double v);
    // Leaf with gradient tracking enabled (model parameter).
    static Tensor param(Shape shape, std::vector<double> data, std::string name);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::size_t ndim() const { return impl_->shape.size(); }
    std::size_t size() const { return impl_->value.size(); }
    std::size_t extent(std::size_t axis) const;

    const std::vector<double>& values() const { return impl_->value; }
    // Direct buffer access for initialization and optimizer updates.
    std::vector<double>& raw_values() { return impl_->value; }

    double item() const;
    double at(std::initializer_list<std::size_t> idx) const;

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool b) { impl_->requires_grad = b; }
    bool has_grad() const { return !impl_->grad.empty(); }
    const std::vector<double>& grad() const;
    void zero_grad();

    const std::string& name() const { return impl_->name; }
    void set_name(std::string n) { impl_->name = std::move(n); }

    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<TensorImpl> impl_;

    friend class Tape;
    friend Tensor make_tensor(Shape, std::vector<double>);
};

// Internal: fresh untracked tensor from computed data.
Tensor make_tensor(Shape shape, std::vector<double> data);

// One recorded operation. `backward` receives the output gradient and one
// destination buffer per input (nullptr when that input needs no gradient).
struct TapeNode {
    const char* op;
    std::shared_ptr<TensorImpl> out;
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    std::function<void(const std::vector<double>& dout,
                       const std::vector<std::vector<double>*>& din)>
        backward;
};

// Gradients keyed by leaf storage, used when a worker must keep its
// gradients private until a merge point.
using GradTable = std::unordered_map<const TensorImpl*, std::vector<double>>;

// Reverse-mode gradient tape. One tape per thread; construction activates
// it for the constructing thread, destruction (or an enclosing tape) takes
// over. Nodes are recorded in execution order, so reverse iteration is a
// reverse topological traversal.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Accumulates d loss/d leaf into each tracked leaf's grad buffer.
    void backward(const Tensor& loss);
    // Worker variant: returns leaf gradients without touching shared state.
    GradTable backward_collect(const Tensor& loss);

    void reset();
    std::size_t node_count() const { return nodes_.size(); }
    std::uint64_t epoch() const { return epoch_; }

    // First recorded tensor holding a non-finite value, as "op:name", if any.
    std::optional<std::string> first_nonfinite() const;

    static Tape* active();
    static bool is_tracked(const TensorImpl& t);
    static void record(TapeNode node);

private:
    GradTable run(const Tensor& loss);

    std::vector<TapeNode> nodes_;
    std::uint64_t epoch_;
    bool consumed_ = false;
    Tape* prev_ = nullptr;
};

} // namespace mcap
