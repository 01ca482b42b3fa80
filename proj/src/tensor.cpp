#include "tfk3d/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace tfk3d {

namespace detail {

void fail(const std::string& message) { throw std::invalid_argument(message); }

std::string shape_string(const std::vector<std::int64_t>& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

}  // namespace detail

namespace {

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (std::int64_t d : shape) {
        if (d <= 0) detail::fail("tensor shape has non-positive extent " + detail::shape_string(shape));
        n *= d;
    }
    return n;
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::int64_t> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value, bool requires_grad) {
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    const std::int64_t n = element_count(shape);
    t.impl_->shape = std::move(shape);
    t.impl_->data.assign(static_cast<std::size_t>(n), value);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::from_data(std::vector<std::int64_t> shape, std::vector<double> data,
                         bool requires_grad) {
    const std::int64_t n = element_count(shape);
    if (n != static_cast<std::int64_t>(data.size())) {
        detail::fail("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + detail::shape_string(shape));
    }
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(data);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

const std::vector<std::int64_t>& Tensor::shape() const { return impl_->shape; }

std::int64_t Tensor::size() const { return static_cast<std::int64_t>(impl_->data.size()); }

double* Tensor::data() { return impl_->data.data(); }
const double* Tensor::data() const { return impl_->data.data(); }

double Tensor::item() const {
    if (size() != 1) detail::fail("item() on non-scalar tensor " + shape_string());
    return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool value) { impl_->requires_grad = value; }

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

void Tensor::ensure_grad() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
}

void Tensor::zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

double* Tensor::grad() {
    ensure_grad();
    return impl_->grad.data();
}

const double* Tensor::grad() const {
    return impl_->grad.empty() ? nullptr : impl_->grad.data();
}

Tensor Tensor::clone() const {
    return from_data(impl_->shape, impl_->data, impl_->requires_grad);
}

std::string Tensor::shape_string() const { return detail::shape_string(impl_->shape); }

void Tape::record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward_fn) {
    if (!enabled_) return;
    nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss, bool accumulate) {
    if (!loss.defined() || loss.size() != 1) {
        detail::fail("backward() requires a scalar loss, got " +
                     (loss.defined() ? loss.shape_string() : std::string("<undefined>")));
    }
    bool on_tape = false;
    for (const Node& node : nodes_) {
        if (node.output.same_storage(loss)) {
            on_tape = true;
            break;
        }
    }
    if (!on_tape) detail::fail("backward() loss is not the output of any recorded op");

    // Intermediates (op outputs) always start the pass at zero; leaf tensors
    // (parameters, inputs) are zeroed too unless the caller accumulates
    // across passes, e.g. when summing gradients over a mini-batch.
    std::unordered_set<const void*> outputs;
    for (Node& node : nodes_) {
        if (node.output.requires_grad()) {
            node.output.ensure_grad();
            node.output.zero_grad();
            outputs.insert(node.output.id());
        }
    }
    std::unordered_set<const void*> seen;
    for (Node& node : nodes_) {
        for (Tensor& t : node.inputs) {
            if (!t.requires_grad() || outputs.count(t.id()) || !seen.insert(t.id()).second) continue;
            t.ensure_grad();
            if (!accumulate) t.zero_grad();
        }
    }

    Tensor seed = loss;
    seed.grad()[0] = 1.0;

    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->backward_fn) it->backward_fn();
    }
}

}  // namespace tfk3d
