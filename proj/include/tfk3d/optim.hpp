#pragma once

#include <cstdint>
#include <vector>

#include "tfk3d/tensor.hpp"

namespace tfk3d {

/// Classical SGD with momentum: v <- mu*v + g, p <- p - lr*v.
/// One velocity buffer per parameter tensor, matched by position.
class SgdMomentum {
public:
    SgdMomentum(std::vector<Tensor> params, double learning_rate, double momentum);

    /// Applies one update. Rejects parameters with no gradient present.
    void step();

    void zero_grad();

    /// Scales all parameter gradients in place (e.g. by 1/batch before step()).
    void scale_grads(double factor);

    double learning_rate() const { return learning_rate_; }
    void set_learning_rate(double lr);
    double momentum() const { return momentum_; }

    const std::vector<Tensor>& params() const { return params_; }
    const std::vector<std::vector<double>>& velocities() const { return velocity_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> velocity_;
    double learning_rate_;
    double momentum_;
};

}  // namespace tfk3d
