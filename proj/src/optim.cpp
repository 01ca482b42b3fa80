#include "tfk3d/optim.hpp"

#include <string>
#include <utility>

namespace tfk3d {

SgdMomentum::SgdMomentum(std::vector<Tensor> params, double learning_rate, double momentum)
    : params_(std::move(params)), learning_rate_(learning_rate), momentum_(momentum) {
    if (learning_rate_ < 0.0) detail::fail("SGD learning rate must be >= 0");
    if (momentum_ < 0.0 || momentum_ >= 1.0) detail::fail("SGD momentum must be in [0, 1)");
    velocity_.reserve(params_.size());
    for (const Tensor& p : params_)
        velocity_.emplace_back(static_cast<std::size_t>(p.size()), 0.0);
}

void SgdMomentum::step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        if (!p.has_grad()) {
            detail::fail("SGD step: parameter " + std::to_string(i) + " of shape " +
                         p.shape_string() + " has no gradient");
        }
        const double* g = p.grad();
        double* v = velocity_[i].data();
        double* x = p.data();
        const std::int64_t n = p.size();
        for (std::int64_t j = 0; j < n; ++j) {
            v[j] = momentum_ * v[j] + g[j];
            x[j] -= learning_rate_ * v[j];
        }
    }
}

void SgdMomentum::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

void SgdMomentum::scale_grads(double factor) {
    for (Tensor& p : params_) {
        if (!p.has_grad()) continue;
        double* g = p.grad();
        for (std::int64_t j = 0; j < p.size(); ++j) g[j] *= factor;
    }
}

void SgdMomentum::set_learning_rate(double lr) {
    if (lr < 0.0) detail::fail("SGD learning rate must be >= 0");
    learning_rate_ = lr;
}

}  // namespace tfk3d
