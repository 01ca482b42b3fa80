#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tfk3d {

/// Dense row-major tensor of 64-bit floats with an optional same-shape
/// gradient buffer. Copying a Tensor copies the handle, not the storage;
/// ops on a Tape share nodes this way so fan-out gradients accumulate in
/// one place. A tensor and the tape it is recorded on belong to a single
/// thread of execution.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::int64_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::int64_t> shape, double value, bool requires_grad = false);
    static Tensor from_data(std::vector<std::int64_t> shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<std::int64_t>& shape() const;
    std::int64_t rank() const { return static_cast<std::int64_t>(shape().size()); }
    std::int64_t dim(std::int64_t axis) const { return shape()[static_cast<std::size_t>(axis)]; }
    std::int64_t size() const;

    double* data();
    const double* data() const;
    double& at(std::int64_t flat_index) { return data()[flat_index]; }
    double at(std::int64_t flat_index) const { return data()[flat_index]; }

    /// Value of a single-element tensor.
    double item() const;

    bool requires_grad() const;
    void set_requires_grad(bool value);

    bool has_grad() const;
    /// Allocates a zero gradient buffer if absent.
    void ensure_grad();
    void zero_grad();
    double* grad();
    const double* grad() const;

    /// Identity of the underlying storage; used for graph bookkeeping.
    const void* id() const { return impl_.get(); }

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

    /// Deep copy with detached storage (gradient not copied).
    Tensor clone() const;

    std::string shape_string() const;

private:
    struct Impl {
        std::vector<std::int64_t> shape;
        std::vector<double> data;
        std::vector<double> grad;  // empty means absent
        bool requires_grad = false;
    };

    std::shared_ptr<Impl> impl_;
};

/// Records one node per differentiable op in execution order (inputs are
/// always recorded before their consumers). backward() replays the list in
/// reverse exactly once, accumulating into the grad buffer of every
/// requires-grad tensor reachable from the loss. Confined to one thread.
class Tape {
public:
    /// While disabled, ops run forward-only and record nothing (inference).
    bool enabled() const { return enabled_; }
    void set_enabled(bool value) { enabled_ = value; }

    void record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward_fn);

    /// Accumulates d(loss)/d(t) into t.grad for every requires-grad tensor
    /// on the tape. Unless `accumulate`, those grads are zeroed first.
    /// Rejects non-scalar losses and losses that are not a node output.
    void backward(const Tensor& loss, bool accumulate = false);

    void clear() { nodes_.clear(); }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        std::vector<Tensor> inputs;
        Tensor output;
        std::function<void()> backward_fn;
    };

    std::vector<Node> nodes_;
    bool enabled_ = true;
};

namespace detail {
[[noreturn]] void fail(const std::string& message);
std::string shape_string(const std::vector<std::int64_t>& shape);
}  // namespace detail

}  // namespace tfk3d
