#include <cmath>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tfk3d/ops.hpp"
#include "tfk3d/optim.hpp"
#include "tfk3d/rng.hpp"
#include "tfk3d/tensor.hpp"

using namespace tfk3d;

namespace {

Tensor random_tensor(std::vector<std::int64_t> shape, Rng& rng, bool requires_grad = false,
                     double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape), requires_grad);
    for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("rng: same seed gives identical streams, different seeds diverge") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.next_u64();
        all_equal = all_equal && (x == b.next_u64());
        any_diff = any_diff || (x != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("rng: uniform01 stays in [0,1) and below(n) stays in range") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(rng.below(13) < 13);
    }
}

TEST_CASE("conv3d: scalar product") {
    Tape tape;
    Tensor x = Tensor::from_data({1, 1, 1, 1}, {2.0});
    Tensor k = Tensor::from_data({1, 1, 1, 1, 1}, {3.0});
    Tensor y = conv3d(tape, x, k);
    CHECK(y.shape() == std::vector<std::int64_t>{1, 1, 1, 1});
    CHECK(y.at(0) == doctest::Approx(6.0));
}

TEST_CASE("conv3d: all-ones counting case") {
    Tape tape;
    Tensor x = Tensor::full({1, 3, 3, 3}, 1.0);
    Tensor k = Tensor::full({1, 1, 2, 2, 2}, 1.0);
    Tensor y = conv3d(tape, x, k);
    REQUIRE(y.shape() == std::vector<std::int64_t>{1, 2, 2, 2});
    for (std::int64_t i = 0; i < y.size(); ++i) CHECK(y.at(i) == doctest::Approx(8.0));
}

TEST_CASE("conv3d: random case matches the seven-loop oracle") {
    Rng rng(100);
    Tape tape;
    Tensor x = random_tensor({1, 4, 6, 6}, rng);
    Tensor k = random_tensor({2, 1, 2, 3, 3}, rng);
    Tensor y = conv3d(tape, x, k);
    const auto expected =
        oracle::conv3d_naive({x.data(), x.data() + x.size()}, 1, 4, 6, 6,
                             {k.data(), k.data() + k.size()}, 2, 2, 3, 3, {1, 1, 1}, {0, 0, 0});
    REQUIRE(y.size() == static_cast<std::int64_t>(expected.size()));
    for (std::int64_t i = 0; i < y.size(); ++i)
        CHECK(std::fabs(y.at(i) - expected[static_cast<std::size_t>(i)]) <= 1e-12);
}

TEST_CASE("conv3d: property over random small shapes incl. stride and padding") {
    Rng rng(2024);
    for (int iter = 0; iter < 60; ++iter) {
        const std::int64_t C = 1 + static_cast<std::int64_t>(rng.below(3));
        const std::int64_t T = 1 + static_cast<std::int64_t>(rng.below(6));
        const std::int64_t H = 1 + static_cast<std::int64_t>(rng.below(6));
        const std::int64_t W = 1 + static_cast<std::int64_t>(rng.below(6));
        const std::int64_t N = 1 + static_cast<std::int64_t>(rng.below(3));
        Extent3 pad{static_cast<std::int64_t>(rng.below(2)), static_cast<std::int64_t>(rng.below(2)),
                    static_cast<std::int64_t>(rng.below(2))};
        const std::int64_t Kt = 1 + static_cast<std::int64_t>(rng.below(T + 2 * pad.t));
        const std::int64_t Kh = 1 + static_cast<std::int64_t>(rng.below(H + 2 * pad.h));
        const std::int64_t Kw = 1 + static_cast<std::int64_t>(rng.below(W + 2 * pad.w));
        Extent3 stride{1 + static_cast<std::int64_t>(rng.below(2)),
                       1 + static_cast<std::int64_t>(rng.below(2)),
                       1 + static_cast<std::int64_t>(rng.below(2))};
        Tape tape;
        Tensor x = random_tensor({C, T, H, W}, rng);
        Tensor k = random_tensor({N, C, Kt, Kh, Kw}, rng);
        Tensor y = conv3d(tape, x, k, stride, pad);
        const auto expected = oracle::conv3d_naive({x.data(), x.data() + x.size()}, C, T, H, W,
                                                   {k.data(), k.data() + k.size()}, N, Kt, Kh, Kw,
                                                   stride, pad);
        REQUIRE(y.size() == static_cast<std::int64_t>(expected.size()));
        double max_err = 0.0;
        for (std::int64_t i = 0; i < y.size(); ++i)
            max_err = std::max(max_err, std::fabs(y.at(i) - expected[static_cast<std::size_t>(i)]));
        CHECK(max_err <= 1e-12);
    }
}

TEST_CASE("conv3d: rejects channel mismatch and oversized kernels with both shapes named") {
    Tape tape;
    Tensor x = Tensor::zeros({2, 3, 3, 3});
    CHECK_THROWS_WITH_AS(conv3d(tape, x, Tensor::zeros({1, 3, 2, 2, 2})),
                         doctest::Contains("channel mismatch"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(conv3d(tape, x, Tensor::zeros({1, 2, 4, 2, 2})),
                         doctest::Contains("exceeds padded input"), std::invalid_argument);
}

TEST_CASE("conv3d: gradients match finite differences") {
    Rng rng(55);
    Tensor x = random_tensor({2, 3, 4, 4}, rng, true);
    Tensor k = random_tensor({2, 2, 2, 3, 3}, rng, true);
    Tensor w = random_tensor({2, 2, 2, 2}, rng);  // fixed mixing weights

    auto loss_value = [&]() {
        Tape t;
        t.set_enabled(false);
        Tensor y = conv3d(t, x, k, {1, 1, 1}, {0, 1, 1});
        double acc = 0.0;
        for (std::int64_t i = 0; i < y.size(); ++i) acc += y.at(i) * y.at(i) * w.at(i % w.size());
        return acc;
    };

    Tape tape;
    Tensor y = conv3d(tape, x, k, {1, 1, 1}, {0, 1, 1});
    Tensor y2 = mul(tape, y, y);
    Tensor wfull = Tensor::zeros(y.shape());
    for (std::int64_t i = 0; i < wfull.size(); ++i) wfull.data()[i] = w.at(i % w.size());
    Tensor weighted = mul(tape, y2, wfull);
    Tensor loss = sum(tape, weighted);
    CHECK(loss.item() == doctest::Approx(loss_value()).epsilon(1e-12));
    tape.backward(loss);

    for (Tensor param : {x, k}) {
        std::vector<double> analytic(param.grad(), param.grad() + param.size());
        const auto res = oracle::grad_check_param(param, analytic, loss_value);
        CHECK(res.max_rel_error <= 1e-4);
    }
}

TEST_CASE("conv3d: strided padded gradients match finite differences") {
    Rng rng(56);
    Tensor x = random_tensor({2, 4, 5, 5}, rng, true);
    Tensor k = random_tensor({2, 2, 2, 2, 2}, rng, true);
    const Extent3 stride{2, 2, 1}, pad{1, 0, 1};

    auto loss_value = [&]() {
        Tape t;
        t.set_enabled(false);
        Tensor y = conv3d(t, x, k, stride, pad);
        double acc = 0.0;
        for (std::int64_t i = 0; i < y.size(); ++i)
            acc += y.at(i) * y.at(i) * (i % 3 == 0 ? 1.0 : -0.5);
        return acc;
    };

    Tape tape;
    Tensor y = conv3d(tape, x, k, stride, pad);
    Tensor w = Tensor::zeros(y.shape());
    for (std::int64_t i = 0; i < w.size(); ++i) w.data()[i] = (i % 3 == 0 ? 1.0 : -0.5);
    Tensor loss = sum(tape, mul(tape, w, mul(tape, y, y)));
    CHECK(loss.item() == doctest::Approx(loss_value()).epsilon(1e-12));
    tape.backward(loss);

    for (Tensor param : {x, k}) {
        std::vector<double> analytic(param.grad(), param.grad() + param.size());
        CHECK(oracle::grad_check_param(param, analytic, loss_value).max_rel_error <= 1e-4);
    }
}

TEST_CASE("maxpool3d: window maximum and shape") {
    Tape tape;
    Tensor x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
    Tensor y = maxpool3d(tape, x, {1, 2, 2}, {1, 2, 2});
    REQUIRE(y.shape() == std::vector<std::int64_t>{1, 1, 1, 1});
    CHECK(y.at(0) == doctest::Approx(4.0));
}

TEST_CASE("maxpool3d: tie gradient goes to the first element per window") {
    Tape tape;
    Tensor x = Tensor::full({1, 2, 2, 2}, 5.0, true);
    Tensor y = maxpool3d(tape, x, {2, 2, 2}, {2, 2, 2});
    CHECK(y.at(0) == doctest::Approx(5.0));
    Tensor loss = sum(tape, y);
    tape.backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(1.0));
    for (std::int64_t i = 1; i < x.size(); ++i) CHECK(x.grad()[i] == doctest::Approx(0.0));
}

TEST_CASE("maxpool3d: matches naive oracle exactly on random input") {
    Rng rng(321);
    Tape tape;
    Tensor x = random_tensor({1, 4, 4, 4}, rng);
    Tensor y = maxpool3d(tape, x, {2, 2, 2}, {2, 2, 2});
    const auto expected = oracle::maxpool3d_naive({x.data(), x.data() + x.size()}, 1, 4, 4, 4,
                                                  {2, 2, 2}, {2, 2, 2});
    REQUIRE(y.size() == static_cast<std::int64_t>(expected.size()));
    for (std::int64_t i = 0; i < y.size(); ++i)
        CHECK(y.at(i) == expected[static_cast<std::size_t>(i)]);
}

TEST_CASE("maxpool3d: property over random shapes, exact match") {
    Rng rng(99);
    for (int iter = 0; iter < 50; ++iter) {
        const std::int64_t C = 1 + static_cast<std::int64_t>(rng.below(3));
        const std::int64_t T = 1 + static_cast<std::int64_t>(rng.below(6));
        const std::int64_t H = 1 + static_cast<std::int64_t>(rng.below(6));
        const std::int64_t W = 1 + static_cast<std::int64_t>(rng.below(6));
        Extent3 win{1 + static_cast<std::int64_t>(rng.below(T)),
                    1 + static_cast<std::int64_t>(rng.below(H)),
                    1 + static_cast<std::int64_t>(rng.below(W))};
        Extent3 stride{1 + static_cast<std::int64_t>(rng.below(2)),
                       1 + static_cast<std::int64_t>(rng.below(2)),
                       1 + static_cast<std::int64_t>(rng.below(2))};
        Tape tape;
        Tensor x = random_tensor({C, T, H, W}, rng);
        Tensor y = maxpool3d(tape, x, win, stride);
        const auto expected =
            oracle::maxpool3d_naive({x.data(), x.data() + x.size()}, C, T, H, W, win, stride);
        REQUIRE(y.size() == static_cast<std::int64_t>(expected.size()));
        for (std::int64_t i = 0; i < y.size(); ++i)
            CHECK(y.at(i) == expected[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("maxpool3d: rejects windows larger than the input") {
    Tape tape;
    Tensor x = Tensor::zeros({1, 2, 2, 2});
    CHECK_THROWS_AS(maxpool3d(tape, x, {3, 2, 2}, {1, 1, 1}), std::invalid_argument);
}

TEST_CASE("dense: identity weight and zero weight") {
    Tape tape;
    Tensor x = Tensor::from_data({3}, {1.5, -2.0, 0.25});
    Tensor eye = Tensor::zeros({3, 3});
    for (int i = 0; i < 3; ++i) eye.data()[i * 3 + i] = 1.0;
    Tensor zero_bias = Tensor::zeros({3});
    Tensor y = dense(tape, x, eye, zero_bias);
    for (std::int64_t i = 0; i < 3; ++i) CHECK(y.at(i) == doctest::Approx(x.at(i)));

    Tensor b = Tensor::from_data({2}, {0.5, -0.5});
    Tensor y2 = dense(tape, x, Tensor::zeros({2, 3}), b);
    CHECK(y2.at(0) == doctest::Approx(0.5));
    CHECK(y2.at(1) == doctest::Approx(-0.5));
}

TEST_CASE("dense: random 3x4 matches hand matrix multiply") {
    Rng rng(8);
    Tape tape;
    Tensor x = random_tensor({4}, rng);
    Tensor w = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({3}, rng);
    Tensor y = dense(tape, x, w, b);
    for (std::int64_t i = 0; i < 3; ++i) {
        double acc = b.at(i);
        for (std::int64_t j = 0; j < 4; ++j) acc += w.at(i * 4 + j) * x.at(j);
        CHECK(std::fabs(y.at(i) - acc) <= 1e-12);
    }
}

TEST_CASE("dense: rejects dimension mismatch") {
    Tape tape;
    CHECK_THROWS_AS(dense(tape, Tensor::zeros({3}), Tensor::zeros({2, 4}), Tensor::zeros({2})),
                    std::invalid_argument);
}

TEST_CASE("softmax_cross_entropy: uniform logits give ln(K)") {
    Tape tape;
    Tensor z = Tensor::full({10}, 0.37);
    Tensor loss = softmax_cross_entropy(tape, z, 3);
    CHECK(loss.item() == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("softmax_cross_entropy: huge logit gap stays finite (stability)") {
    Tape tape;
    Tensor z = Tensor::from_data({2}, {1000.0, 0.0});
    Tensor loss = softmax_cross_entropy(tape, z, 0);
    CHECK(std::isfinite(loss.item()));
    CHECK(loss.item() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("softmax_cross_entropy: rejects out-of-range labels") {
    Tape tape;
    Tensor z = Tensor::zeros({4});
    CHECK_THROWS_AS(softmax_cross_entropy(tape, z, 4), std::invalid_argument);
    CHECK_THROWS_AS(softmax_cross_entropy(tape, z, -1), std::invalid_argument);
}

TEST_CASE("softmax_cross_entropy: gradient matches finite differences") {
    Rng rng(77);
    Tensor z = random_tensor({6}, rng, true, -2.0, 2.0);
    auto loss_value = [&]() {
        Tape t;
        t.set_enabled(false);
        return softmax_cross_entropy(t, z, 2).item();
    };
    Tape tape;
    Tensor loss = softmax_cross_entropy(tape, z, 2);
    tape.backward(loss);
    std::vector<double> analytic(z.grad(), z.grad() + z.size());
    const auto res = oracle::grad_check_param(z, analytic, loss_value);
    CHECK(res.max_rel_error <= 1e-6);
}

TEST_CASE("backward: sum gives all-ones gradient") {
    Tape tape;
    Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6}, true);
    Tensor loss = sum(tape, x);
    tape.backward(loss);
    for (std::int64_t i = 0; i < x.size(); ++i) CHECK(x.grad()[i] == doctest::Approx(1.0));
}

TEST_CASE("backward: half square norm gives the values back") {
    Tape tape;
    Tensor x = Tensor::from_data({4}, {0.5, -1.25, 2.0, 0.0}, true);
    Tensor half = scale(tape, mul(tape, x, x), 0.5);
    Tensor loss = sum(tape, half);
    tape.backward(loss);
    for (std::int64_t i = 0; i < x.size(); ++i) CHECK(x.grad()[i] == doctest::Approx(x.at(i)));
}

TEST_CASE("backward: fan-out sums both consumer contributions") {
    Tape tape;
    Tensor x = Tensor::from_data({2}, {3.0, -1.0}, true);
    Tensor a = scale(tape, x, 2.0);
    Tensor b = mul(tape, x, x);
    Tensor loss = sum(tape, add(tape, a, b));  // d/dx = 2 + 2x
    tape.backward(loss);
    CHECK(x.grad()[0] == doctest::Approx(2.0 + 2.0 * 3.0));
    CHECK(x.grad()[1] == doctest::Approx(2.0 + 2.0 * -1.0));
}

TEST_CASE("backward: rejects non-scalar losses and off-tape tensors") {
    Tape tape;
    Tensor x = Tensor::zeros({3}, true);
    Tensor y = scale(tape, x, 2.0);
    CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
    CHECK_THROWS_AS(tape.backward(Tensor::scalar(1.0, true)), std::invalid_argument);
}

TEST_CASE("backward: accumulate sums across passes, default zeroes first") {
    Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
    {
        Tape tape;
        tape.backward(sum(tape, x));
        tape.backward(sum(tape, x), /*accumulate=*/true);
        CHECK(x.grad()[0] == doctest::Approx(2.0));
    }
    {
        Tape tape;
        Tensor loss = sum(tape, x);
        tape.backward(loss);
        tape.backward(loss);
        CHECK(x.grad()[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("tanh: forward and gradient") {
    Rng rng(31);
    Tensor x = random_tensor({5}, rng, true, -2.0, 2.0);
    auto loss_value = [&]() {
        Tape t;
        t.set_enabled(false);
        Tensor y = tanh(t, x);
        return sum(t, y).item();
    };
    Tape tape;
    Tensor loss = sum(tape, tanh(tape, x));
    tape.backward(loss);
    std::vector<double> analytic(x.grad(), x.grad() + x.size());
    const auto res = oracle::grad_check_param(x, analytic, loss_value);
    CHECK(res.max_rel_error <= 1e-6);
}

TEST_CASE("sgd: single plain step") {
    Tensor p = Tensor::scalar(0.0, true);
    p.grad()[0] = 1.0;
    SgdMomentum opt({p}, 0.1, 0.0);
    opt.step();
    CHECK(p.at(0) == doctest::Approx(-0.1));
}

TEST_CASE("sgd: momentum recurrence over two steps") {
    Tensor p = Tensor::scalar(0.0, true);
    SgdMomentum opt({p}, 1.0, 0.9);
    p.grad()[0] = 1.0;
    opt.step();
    CHECK(opt.velocities()[0][0] == doctest::Approx(1.0));
    CHECK(p.at(0) == doctest::Approx(-1.0));
    p.zero_grad();
    p.grad()[0] = 1.0;
    opt.step();
    CHECK(opt.velocities()[0][0] == doctest::Approx(1.9));
    CHECK(p.at(0) == doctest::Approx(-2.9));
}

TEST_CASE("sgd: zero learning rate still updates velocity, not parameters") {
    Tensor p = Tensor::scalar(1.5, true);
    SgdMomentum opt({p}, 0.0, 0.9);
    p.grad()[0] = 2.0;
    opt.step();
    CHECK(p.at(0) == doctest::Approx(1.5));
    CHECK(opt.velocities()[0][0] == doctest::Approx(2.0));
}

TEST_CASE("sgd: rejects missing gradients") {
    Tensor p = Tensor::scalar(0.0, true);
    SgdMomentum opt({p}, 0.1, 0.9);
    CHECK_THROWS_AS(opt.step(), std::invalid_argument);
}

TEST_CASE("init_kaiming_uniform: bound, determinism, moments") {
    Rng rng(11);
    Tensor t = init_kaiming_uniform({6}, 6, rng);
    for (std::int64_t i = 0; i < t.size(); ++i) {
        CHECK(t.at(i) <= 1.0);
        CHECK(t.at(i) >= -1.0);
    }

    Rng r1(5), r2(5);
    Tensor a = init_kaiming_uniform({100}, 10, r1);
    Tensor b = init_kaiming_uniform({100}, 10, r2);
    for (std::int64_t i = 0; i < a.size(); ++i) CHECK(a.at(i) == b.at(i));

    // 1e5 samples with fan_in 54: bound = sqrt(6/54) = 1/3, variance bound^2/3.
    Rng r3(17);
    const std::int64_t n = 100000;
    Tensor big = init_kaiming_uniform({n}, 54, r3);
    const double bound = std::sqrt(6.0 / 54.0);
    double mean = 0.0, lo = 1e9, hi = -1e9;
    for (std::int64_t i = 0; i < n; ++i) {
        mean += big.at(i);
        lo = std::min(lo, big.at(i));
        hi = std::max(hi, big.at(i));
    }
    mean /= static_cast<double>(n);
    const double sigma_of_mean = bound / std::sqrt(3.0) / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(mean) <= 3.0 * sigma_of_mean);
    CHECK(lo >= -bound);
    CHECK(hi <= bound);
    CHECK_THROWS_AS(init_kaiming_uniform({2}, 0, r3), std::invalid_argument);
}

TEST_CASE("identical seeds give bitwise-identical gaussian tensors") {
    Rng r1(123), r2(123);
    Tensor a = init_gaussian({64}, 0.0, 0.5, r1);
    Tensor b = init_gaussian({64}, 0.0, 0.5, r2);
    for (std::int64_t i = 0; i < a.size(); ++i) CHECK(a.at(i) == b.at(i));
}
