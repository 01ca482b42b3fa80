#pragma once

#include <cstdint>
#include <vector>

#include "tfk3d/rng.hpp"
#include "tfk3d/tensor.hpp"

namespace tfk3d {

/// Temporal/spatial extents in (t, h, w) order.
struct Extent3 {
    std::int64_t t = 1;
    std::int64_t h = 1;
    std::int64_t w = 1;
};

/// Cross-correlation of an input [C_in x T x H x W] with a kernel bank
/// [N x C_in x Kt x Kh x Kw]. Output extent per axis is
/// floor((in + 2*pad - k) / stride) + 1. Differentiable w.r.t. input and
/// kernels. Rejects channel mismatches and kernels larger than the padded
/// input, naming both shapes.
Tensor conv3d(Tape& tape, const Tensor& input, const Tensor& kernels,
              const Extent3& stride = {1, 1, 1}, const Extent3& padding = {0, 0, 0});

/// Adds bias[n] to every element of channel n of x [N x ...].
Tensor add_channel_bias(Tape& tape, const Tensor& x, const Tensor& bias);

/// Per-window maximum over [C x T x H x W]. Gradient routes to the first
/// (lowest linear index) maximal element of each window.
Tensor maxpool3d(Tape& tape, const Tensor& input, const Extent3& window, const Extent3& stride);

/// weight [m x n] * x [n] + bias [m].
Tensor dense(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Elementwise tanh.
Tensor tanh(Tape& tape, const Tensor& x);

/// -log softmax(logits)[label], max-subtracted for stability. Scalar output.
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits, std::int64_t label);

/// Softmax probabilities of a logits vector (forward-only helper).
std::vector<double> softmax(const Tensor& logits);

/// Same data, new shape (element count must match).
Tensor reshape(Tape& tape, const Tensor& x, std::vector<std::int64_t> shape);

/// Stacks equally-shaped tensors along a new leading axis.
Tensor stack0(Tape& tape, const std::vector<Tensor>& parts);

/// Extracts index `i` along axis 0 as a tensor of the remaining shape.
Tensor select0(Tape& tape, const Tensor& x, std::int64_t i);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& x, double factor);
Tensor sum(Tape& tape, const Tensor& x);

/// i.i.d. uniform on [-sqrt(6/fan_in), +sqrt(6/fan_in)].
Tensor init_kaiming_uniform(std::vector<std::int64_t> shape, std::int64_t fan_in, Rng& rng);

/// i.i.d. gaussian entries.
Tensor init_gaussian(std::vector<std::int64_t> shape, double mean, double stddev, Rng& rng);

}  // namespace tfk3d
