#include <cmath>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tfk3d/affine.hpp"
#include "tfk3d/ops.hpp"
#include "tfk3d/rng.hpp"
#include "tfk3d/tt_kernel.hpp"

using namespace tfk3d;

namespace {

Tensor theta4(double s, double r, double tx, double ty, bool requires_grad = false) {
    return Tensor::from_data({4}, {s, r, tx, ty}, requires_grad);
}

Tensor random_slice(std::int64_t h, std::int64_t w, Rng& rng, bool requires_grad = false) {
    Tensor t = Tensor::zeros({h, w}, requires_grad);
    for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1.0, 1.0);
    return t;
}

}  // namespace

TEST_CASE("affine_matrix: identity parameters give the identity matrix") {
    Tape tape;
    Tensor m = affine_matrix(tape, theta4(1, 0, 0, 0));
    const double expected[6] = {1, 0, 0, 0, 1, 0};
    for (int i = 0; i < 6; ++i) CHECK(m.at(i) == doctest::Approx(expected[i]));
    // plain AffineParams agrees
    const auto mm = AffineParams::identity().to_matrix();
    for (int i = 0; i < 6; ++i) CHECK(mm[i] == doctest::Approx(expected[i]));
}

TEST_CASE("affine_matrix: scale 2 with t_x 0.5") {
    Tape tape;
    Tensor m = affine_matrix(tape, theta4(2, 0, 0.5, 0));
    const double expected[6] = {2, 0, 1, 0, 2, 0};
    for (int i = 0; i < 6; ++i) CHECK(m.at(i) == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("affine_matrix: quarter rotation") {
    Tape tape;
    Tensor m = affine_matrix(tape, theta4(1, 3.14159265358979323846 / 2, 0, 0));
    const double expected[6] = {0, -1, 0, 1, 0, 0};
    for (int i = 0; i < 6; ++i) CHECK(std::fabs(m.at(i) - expected[i]) <= 1e-12);
}

TEST_CASE("affine_matrix: gradient matches finite differences") {
    Rng rng(5);
    Tensor p = theta4(1.3, 0.4, -0.2, 0.35, true);
    Tensor w = Tensor::zeros({2, 3});
    for (int i = 0; i < 6; ++i) w.data()[i] = rng.uniform(-1, 1);

    auto loss_value = [&]() {
        Tape t;
        t.set_enabled(false);
        Tensor m = affine_matrix(t, p);
        return sum(t, mul(t, m, w)).item();
    };
    Tape tape;
    Tensor loss = sum(tape, mul(tape, affine_matrix(tape, p), w));
    tape.backward(loss);
    std::vector<double> analytic(p.grad(), p.grad() + 4);
    CHECK(oracle::grad_check_param(p, analytic, loss_value).max_rel_error <= 1e-6);
}

TEST_CASE("make_grid: identity theta reproduces the base coordinates") {
    Tape tape;
    Tensor grid = affine_grid(tape, affine_matrix(tape, theta4(1, 0, 0, 0)), 4, 6);
    REQUIRE(grid.shape() == std::vector<std::int64_t>{4, 6, 2});
    for (std::int64_t y = 0; y < 4; ++y)
        for (std::int64_t x = 0; x < 6; ++x) {
            CHECK(grid.at((y * 6 + x) * 2 + 0) == doctest::Approx(pixel_to_norm(x, 6)));
            CHECK(grid.at((y * 6 + x) * 2 + 1) == doctest::Approx(pixel_to_norm(y, 4)));
        }
}

TEST_CASE("make_grid: pure translation shifts G_x only") {
    Tape tape;
    Tensor grid = affine_grid(tape, affine_matrix(tape, theta4(1, 0, 0.5, 0)), 3, 3);
    for (std::int64_t y = 0; y < 3; ++y)
        for (std::int64_t x = 0; x < 3; ++x) {
            CHECK(grid.at((y * 3 + x) * 2 + 0) ==
                  doctest::Approx(pixel_to_norm(x, 3) + 0.5).epsilon(1e-12));
            CHECK(grid.at((y * 3 + x) * 2 + 1) == doctest::Approx(pixel_to_norm(y, 3)));
        }
}

TEST_CASE("make_grid: 3x3 base grid is {-1,0,+1} squared") {
    CHECK(pixel_to_norm(0, 3) == -1.0);
    CHECK(pixel_to_norm(1, 3) == 0.0);
    CHECK(pixel_to_norm(2, 3) == 1.0);
    CHECK(pixel_to_norm(0, 1) == 0.0);  // a 1-wide axis maps to 0
}

TEST_CASE("bilinear_sample: identity grid copies the slice within 1e-15") {
    Rng rng(9);
    for (std::int64_t n : {2, 3, 4, 5, 7}) {
        Tape tape;
        Tensor k = random_slice(n, n, rng);
        Tensor grid = affine_grid(tape, affine_matrix(tape, theta4(1, 0, 0, 0)), n, n);
        Tensor out = grid_sample(tape, k, grid);
        for (std::int64_t i = 0; i < k.size(); ++i)
            CHECK(std::fabs(out.at(i) - k.at(i)) <= 1e-15);
    }
}

TEST_CASE("bilinear_sample: midway grid point averages two adjacent pixels") {
    // Slice [[a, b]]; sampling halfway between the two columns. One pixel
    // pitch on a 2-wide axis is 2 in normalized units, so half a pixel is 1.
    Tape tape;
    Tensor k = Tensor::from_data({1, 2}, {3.0, 7.0});
    Tensor grid = Tensor::zeros({1, 2, 2});
    grid.data()[0] = 0.0;   // G_x halfway between pixels 0 and 1
    grid.data()[1] = 0.0;
    grid.data()[2] = 0.0;
    grid.data()[3] = 0.0;
    Tensor out = grid_sample(tape, k, grid);
    CHECK(out.at(0) == doctest::Approx(5.0));
    CHECK(out.at(1) == doctest::Approx(5.0));
}

TEST_CASE("bilinear_sample: fully out-of-range grid yields zeros") {
    Rng rng(10);
    Tape tape;
    Tensor k = random_slice(4, 4, rng);
    Tensor grid = Tensor::full({4, 4, 2}, 9.0);  // far outside [-1, 1]
    Tensor out = grid_sample(tape, k, grid);
    for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out.at(i) == 0.0);
}

TEST_CASE("bilinear_sample: constant-one slice stays one strictly inside") {
    Tape tape;
    Tensor k = Tensor::full({5, 5}, 1.0);
    Tensor grid = affine_grid(tape, affine_matrix(tape, theta4(1, 0.3, 0.1, -0.05)), 5, 5);
    Tensor out = grid_sample(tape, k, grid);
    // Interior targets whose source lands strictly inside the slice get
    // weights that sum to exactly 1.
    for (std::int64_t y = 0; y < 5; ++y)
        for (std::int64_t x = 0; x < 5; ++x) {
            const double gx = grid.at((y * 5 + x) * 2);
            const double gy = grid.at((y * 5 + x) * 2 + 1);
            const double sx = norm_to_pixel(gx, 5), sy = norm_to_pixel(gy, 5);
            if (sx >= 0.0 && sx <= 4.0 && sy >= 0.0 && sy <= 4.0) {
                CHECK(out.at(y * 5 + x) == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
}

TEST_CASE("materialize: T=1 passes K0 through") {
    Rng rng(3);
    Tape tape;
    FactorizedKernel kernel = make_factorized_kernel(2, 1, 3, 3, ThetaMode::Shared, rng);
    Tensor dense = materialize(tape, kernel);
    REQUIRE(dense.shape() == std::vector<std::int64_t>{2, 1, 3, 3});
    for (std::int64_t i = 0; i < kernel.k0.size(); ++i) CHECK(dense.at(i) == kernel.k0.at(i));
}

TEST_CASE("materialize: identity theta set gives T exact copies of K0") {
    Rng rng(4);
    Tape tape;
    FactorizedKernel kernel = make_factorized_kernel(2, 5, 5, 5, ThetaMode::PerStep, rng);
    Tensor dense = materialize(tape, kernel);
    REQUIRE(dense.shape() == std::vector<std::int64_t>{2, 5, 5, 5});
    for (std::int64_t c = 0; c < 2; ++c)
        for (std::int64_t t = 0; t < 5; ++t)
            for (std::int64_t i = 0; i < 25; ++i) {
                const double base = kernel.k0.at(c * 25 + i);
                CHECK(std::fabs(dense.at((c * 5 + t) * 25 + i) - base) <= 1e-15);
            }
}

TEST_CASE("materialize: shared rotation chains sequentially (two applications)") {
    Rng rng(6);
    const double delta = 0.07;
    FactorizedKernel kernel = make_factorized_kernel(1, 3, 5, 5, ThetaMode::Shared, rng);
    kernel.thetas.thetas[0] = theta4(1.0, delta, 0.0, 0.0, true);

    Tape tape;
    Tensor dense = materialize(tape, kernel);

    // Oracle: apply grid_sample twice by hand with the same grid.
    Tape oracle_tape;
    Tensor k0 = select0(oracle_tape, kernel.k0, 0);
    Tensor grid = affine_grid(oracle_tape, affine_matrix(oracle_tape, kernel.thetas.thetas[0]), 5, 5);
    Tensor slice1 = grid_sample(oracle_tape, k0, grid);
    Tensor slice2 = grid_sample(oracle_tape, slice1, grid);

    for (std::int64_t i = 0; i < 25; ++i) {
        CHECK(dense.at(25 + i) == doctest::Approx(slice1.at(i)).epsilon(1e-14));
        CHECK(dense.at(50 + i) == doctest::Approx(slice2.at(i)).epsilon(1e-14));
    }
}

TEST_CASE("materialize: rejects inconsistent theta sets") {
    Rng rng(7);
    FactorizedKernel kernel = make_factorized_kernel(1, 4, 3, 3, ThetaMode::PerStep, rng);
    kernel.thetas.thetas.pop_back();
    Tape tape;
    CHECK_THROWS_AS(materialize(tape, kernel), std::invalid_argument);
}

TEST_CASE("translation by exactly one pixel pitch shifts the slice with zero fill") {
    Rng rng(12);
    // 5-wide axis: pixel pitch 0.5 in normalized units, exactly representable.
    FactorizedKernel kernel = make_factorized_kernel(1, 2, 5, 5, ThetaMode::Shared, rng);
    kernel.thetas.thetas[0] = theta4(1.0, 0.0, 0.5, 0.0, true);
    Tape tape;
    Tensor dense = materialize(tape, kernel);
    // Slice 1 pixel (y, x) pulls from source (y, x+1); column 4 vacates.
    for (std::int64_t y = 0; y < 5; ++y)
        for (std::int64_t x = 0; x < 5; ++x) {
            const double expected = x + 1 < 5 ? kernel.k0.at(y * 5 + x + 1) : 0.0;
            CHECK(dense.at(25 + y * 5 + x) == expected);
        }

    // Vertical shift likewise, on the t_y component.
    kernel.thetas.thetas[0] = theta4(1.0, 0.0, 0.0, 0.5, true);
    Tape tape2;
    Tensor dense2 = materialize(tape2, kernel);
    for (std::int64_t y = 0; y < 5; ++y)
        for (std::int64_t x = 0; x < 5; ++x) {
            const double expected = y + 1 < 5 ? kernel.k0.at((y + 1) * 5 + x) : 0.0;
            CHECK(dense2.at(25 + y * 5 + x) == expected);
        }
}

TEST_CASE("gradient completeness: loss gradients reach K0 and every theta component") {
    Rng rng(2025);
    for (const ThetaMode mode : {ThetaMode::Shared, ThetaMode::PerStep}) {
        for (const std::int64_t T : {2, 3, 4}) {
            FactorizedKernel kernel = make_factorized_kernel(1, T, 5, 5, mode, rng);
            for (Tensor& theta : kernel.thetas.thetas) {
                theta.data()[0] = 1.0 + rng.uniform(-0.2, 0.2);
                theta.data()[1] = rng.uniform(-0.4, 0.4);
                theta.data()[2] = rng.uniform(-0.3, 0.3);
                theta.data()[3] = rng.uniform(-0.3, 0.3);
            }
            Tensor mix = Tensor::zeros({1, T, 5, 5});
            for (std::int64_t i = 0; i < mix.size(); ++i) mix.data()[i] = rng.uniform(-1, 1);

            auto loss_value = [&]() {
                Tape t;
                t.set_enabled(false);
                Tensor dense = materialize(t, kernel);
                return sum(t, mul(t, mix, mul(t, dense, dense))).item();
            };
            Tape tape;
            Tensor dense = materialize(tape, kernel);
            Tensor loss = sum(tape, mul(tape, mix, mul(tape, dense, dense)));
            tape.backward(loss);

            for (Tensor param : kernel.parameters()) {
                std::vector<double> analytic(param.grad(), param.grad() + param.size());
                const auto res = oracle::grad_check_param(param, analytic, loss_value);
                CHECK(res.max_rel_error <= 1e-4);
            }
        }
    }
}

TEST_CASE("full6 parameterization materializes and gradients flow") {
    Rng rng(88);
    FactorizedKernel kernel =
        make_factorized_kernel(1, 3, 4, 4, ThetaMode::PerStep, rng, ThetaParam::Full6);
    REQUIRE(kernel.thetas.thetas.size() == 2);
    REQUIRE(kernel.thetas.thetas[0].size() == 6);
    CHECK(kernel.parameter_count() == 16 + 12);
    // Off the exact identity: integer-aligned sampling sits on the kink of
    // the triangular weights, where finite differences straddle two slopes.
    for (Tensor& theta : kernel.thetas.thetas)
        for (std::int64_t i = 0; i < 6; ++i) theta.data()[i] += rng.uniform(-0.15, 0.15);

    Tensor mix = Tensor::zeros({1, 3, 4, 4});
    for (std::int64_t i = 0; i < mix.size(); ++i) mix.data()[i] = rng.uniform(-1, 1);
    auto loss_value = [&]() {
        Tape t;
        t.set_enabled(false);
        Tensor dense = materialize(t, kernel);
        return sum(t, mul(t, mix, dense)).item();
    };
    Tape tape;
    Tensor loss = sum(tape, mul(tape, mix, materialize(tape, kernel)));
    tape.backward(loss);
    for (Tensor param : kernel.parameters()) {
        std::vector<double> analytic(param.grad(), param.grad() + param.size());
        CHECK(oracle::grad_check_param(param, analytic, loss_value).max_rel_error <= 1e-4);
    }
}

TEST_CASE("param_count: paper formulas and comparisons") {
    CHECK(param_count(5, 5, 3, 1, ThetaMode::PerStep) == 33);
    CHECK(param_count(5, 5, 3, 1, ThetaMode::Shared) == 29);
    CHECK(regular_param_count(5, 5, 3, 1) == 75);
    CHECK(param_count(5, 5, 1, 1, ThetaMode::PerStep) == 25);
    CHECK(param_count(5, 5, 1, 1, ThetaMode::Shared) == 25);
    CHECK(param_count(4, 3, 2, 6, ThetaMode::PerStep) == 6 * 12 + 4);
    CHECK_THROWS_AS(param_count(0, 5, 3, 1, ThetaMode::Shared), std::invalid_argument);

    // Factorization wins whenever T >= 2 and the slice is bigger than 4.
    for (std::int64_t w = 1; w <= 7; ++w)
        for (std::int64_t h = 1; h <= 7; ++h)
            for (std::int64_t t = 2; t <= 5; ++t) {
                if (w * h > 4) {
                    CHECK(param_count(w, h, t, 1, ThetaMode::PerStep) <
                          regular_param_count(w, h, t, 1));
                }
            }
}

TEST_CASE("interpolation locality: each output pixel depends on at most 4 sources") {
    Rng rng(42);
    Tape tape;
    Tensor grid = affine_grid(tape, affine_matrix(tape, theta4(1.1, 0.2, 0.15, -0.1)), 5, 5);
    // Count, per output pixel, how many basis slices change it.
    for (std::int64_t target = 0; target < 25; ++target) {
        int influencers = 0;
        double weight_sum = 0.0;
        for (std::int64_t src = 0; src < 25; ++src) {
            Tensor basis = Tensor::zeros({5, 5});
            basis.data()[src] = 1.0;
            Tensor out = grid_sample(tape, basis, grid);
            if (out.at(target) != 0.0) {
                ++influencers;
                CHECK(out.at(target) > 0.0);  // weights are nonnegative
                weight_sum += out.at(target);
            }
        }
        CHECK(influencers <= 4);
        CHECK(weight_sum <= 1.0 + 1e-12);
    }
}

TEST_CASE("AffineParams inverse composes to the identity") {
    Rng rng(77);
    for (int iter = 0; iter < 20; ++iter) {
        AffineParams p{rng.uniform(0.5, 1.6), rng.uniform(-1.0, 1.0), rng.uniform(-0.4, 0.4),
                       rng.uniform(-0.4, 0.4)};
        const auto m = p.to_matrix();
        const auto mi = p.inverse().to_matrix();
        // compose: mi applied after m should be the identity map
        for (double x : {-1.0, 0.3, 1.0})
            for (double y : {-0.7, 0.0, 0.9}) {
                double fx, fy, bx, by;
                apply_affine(m, x, y, fx, fy);
                apply_affine(mi, fx, fy, bx, by);
                CHECK(bx == doctest::Approx(x).epsilon(1e-10));
                CHECK(by == doctest::Approx(y).epsilon(1e-10));
            }
    }
}
