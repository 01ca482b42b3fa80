#include "tfk3d/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "tfk3d/ops.hpp"
#include "tfk3d/rng.hpp"
#include "tfk3d/tt_kernel.hpp"

namespace tfk3d {

namespace {

void fd_compare(Tensor param, const std::vector<double>& analytic,
                const std::function<double()>& loss, GradCheckReport& report) {
    constexpr double kStep = 1e-5;
    double* p = param.data();
    for (std::int64_t i = 0; i < param.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + kStep;
        const double plus = loss();
        p[i] = saved - kStep;
        const double minus = loss();
        p[i] = saved;
        const double numeric = (plus - minus) / (2.0 * kStep);
        const double a = analytic[static_cast<std::size_t>(i)];
        const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-6});
        report.max_rel_error = std::max(report.max_rel_error, std::fabs(a - numeric) / denom);
        ++report.checked;
    }
}

}  // namespace

GradCheckReport gradcheck_kernel(ConvMode mode, std::int64_t temporal_extent, std::uint64_t seed) {
    Rng rng(seed);
    GradCheckReport report;

    if (mode == ConvMode::Regular3D) {
        Tensor input = init_gaussian({1, temporal_extent + 2, 5, 5}, 0.0, 1.0, rng);
        input.set_requires_grad(true);
        Tensor kernels = init_gaussian({2, 1, temporal_extent, 3, 3}, 0.0, 0.5, rng);
        kernels.set_requires_grad(true);
        Tensor mix;  // fixed random coefficients so the loss is non-degenerate

        const auto forward = [&](Tape& tape) {
            Tensor y = conv3d(tape, input, kernels);
            if (!mix.defined()) {
                mix = init_gaussian(y.shape(), 0.0, 1.0, rng);
            }
            return sum(tape, mul(tape, mix, mul(tape, y, y)));
        };
        const auto loss_value = [&]() {
            Tape tape;
            tape.set_enabled(false);
            return forward(tape).item();
        };

        Tape tape;
        Tensor loss = forward(tape);
        tape.backward(loss);
        for (Tensor param : {input, kernels}) {
            std::vector<double> analytic(param.grad(), param.grad() + param.size());
            fd_compare(param, analytic, loss_value, report);
        }
        return report;
    }

    const ThetaMode theta_mode =
        mode == ConvMode::TTShared ? ThetaMode::Shared : ThetaMode::PerStep;
    FactorizedKernel kernel = make_factorized_kernel(1, temporal_extent, 5, 5, theta_mode, rng);
    // Move the transforms off the identity so rotation/scale gradients are
    // exercised away from the trivial point.
    for (Tensor& theta : kernel.thetas.thetas) {
        theta.data()[0] = 1.0 + rng.uniform(-0.2, 0.2);
        theta.data()[1] = rng.uniform(-0.5, 0.5);
        theta.data()[2] = rng.uniform(-0.3, 0.3);
        theta.data()[3] = rng.uniform(-0.3, 0.3);
    }
    Tensor mix;
    const auto forward = [&](Tape& tape) {
        Tensor dense_kernel = materialize(tape, kernel);
        if (!mix.defined()) {
            mix = init_gaussian(dense_kernel.shape(), 0.0, 1.0, rng);
        }
        return sum(tape, mul(tape, mix, mul(tape, dense_kernel, dense_kernel)));
    };
    const auto loss_value = [&]() {
        Tape tape;
        tape.set_enabled(false);
        return forward(tape).item();
    };

    Tape tape;
    Tensor loss = forward(tape);
    tape.backward(loss);
    for (Tensor param : kernel.parameters()) {
        std::vector<double> analytic(param.grad(), param.grad() + param.size());
        fd_compare(param, analytic, loss_value, report);
    }
    return report;
}

}  // namespace tfk3d
