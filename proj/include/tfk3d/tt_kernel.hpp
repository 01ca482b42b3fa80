#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfk3d/affine.hpp"
#include "tfk3d/ops.hpp"
#include "tfk3d/tensor.hpp"

namespace tfk3d {

/// How the inter-slice transforms of a factorized kernel are tied.
enum class ThetaMode {
    PerStep,  // one transform per consecutive slice pair (T-1 of them)
    Shared,   // a single transform reused for every step
};

/// Parameterization of each transform. Constrained4 is the (s, r, t_x, t_y)
/// form; Full6 exposes the raw 2x3 matrix entries and is kept for
/// completeness (it is not used in the headline configurations).
enum class ThetaParam {
    Constrained4,
    Full6,
};

const char* theta_mode_name(ThetaMode mode);

/// The learnable transform set linking consecutive temporal slices.
/// PerStep holds T-1 tensors; Shared holds exactly one, which realizes
/// theta_(t,t+1) = theta_(t+1,t+2) = ... for all t. Each tensor has shape
/// [4] (s, r, t_x, t_y) or [6] (row-major 2x3) depending on `param`.
struct ThetaSet {
    ThetaMode mode = ThetaMode::Shared;
    ThetaParam param = ThetaParam::Constrained4;
    std::vector<Tensor> thetas;

    /// Identity transforms: s=1, r=0, t_x=0, t_y=0 (or the identity matrix).
    static ThetaSet identity(ThetaMode mode, std::int64_t temporal_extent,
                             ThetaParam param = ThetaParam::Constrained4);

    /// Number of stored transforms for a given temporal extent. T=1 kernels
    /// carry no transforms in either mode.
    std::size_t expected_count(std::int64_t temporal_extent) const {
        if (temporal_extent <= 1) return 0;
        return mode == ThetaMode::Shared ? 1 : static_cast<std::size_t>(temporal_extent - 1);
    }
};

/// A 3D convolution kernel factorized along time: a learnable base slice
/// K0 [C x H x W] plus a ThetaSet. materialize() rebuilds the dense
/// [C x T x H x W] kernel by chaining differentiable warps, so gradients
/// flow to K0 and every theta. One theta set per kernel, applied
/// identically to every input channel.
struct FactorizedKernel {
    Tensor k0;  // [C x H x W]
    ThetaSet thetas;
    std::int64_t temporal_extent = 1;

    std::int64_t channels() const { return k0.dim(0); }
    std::int64_t height() const { return k0.dim(1); }
    std::int64_t width() const { return k0.dim(2); }

    /// Learnable scalar count: C*H*W plus 4 (or 6) per stored transform.
    std::int64_t parameter_count() const;

    /// All learnable tensors (K0 first, then thetas in order).
    std::vector<Tensor> parameters() const;
};

/// Differentiable map from (s, r, t_x, t_y) [4] to the row-major 2x3 affine
/// matrix [[s cos r, -s sin r, t_x s cos r - t_y s sin r],
///         [s sin r,  s cos r, t_x s sin r + t_y s cos r]].
Tensor affine_matrix(Tape& tape, const Tensor& params);

/// Differentiable sampling-grid generation: for every target pixel (x, y)
/// of an H x W slice, applies `theta` (2x3, row-major) to the normalized
/// target coordinate and stores the source location (G_x, G_y), also
/// normalized. Output shape [H x W x 2], entry 0 = G_x, entry 1 = G_y.
/// The grid is an inverse warp: each target pixel pulls from the source.
Tensor affine_grid(Tape& tape, const Tensor& theta, std::int64_t height, std::int64_t width);

/// Differentiable bilinear sampling of a 2D slice [H x W] at grid [H x W x 2].
/// Each output pixel blends the (up to) four nearest source pixels with
/// triangular weights; source locations outside the slice contribute zero.
Tensor grid_sample(Tape& tape, const Tensor& slice, const Tensor& grid);

/// Rebuilds the dense kernel [C x T x H x W]. Slice 0 is K0 exactly; slice
/// t+1 is the warp of slice t under theta_t. Rejects theta sets whose
/// length is inconsistent with the temporal extent.
Tensor materialize(Tape& tape, const FactorizedKernel& kernel);

/// Learnable parameter count of a constrained factorized kernel:
/// C*W*H + 4*(T-1) per-step, C*W*H + 4 shared; T=1 has no transforms.
std::int64_t param_count(std::int64_t width, std::int64_t height, std::int64_t temporal_extent,
                         std::int64_t channels, ThetaMode mode);

/// Dense-kernel count C*W*H*T, for comparison.
std::int64_t regular_param_count(std::int64_t width, std::int64_t height,
                                 std::int64_t temporal_extent, std::int64_t channels);

/// Builds a randomly initialized factorized kernel: K0 gaussian with
/// stddev sqrt(2 / (C*H*W)), thetas at identity.
FactorizedKernel make_factorized_kernel(std::int64_t channels, std::int64_t temporal_extent,
                                        std::int64_t height, std::int64_t width, ThetaMode mode,
                                        Rng& rng, ThetaParam param = ThetaParam::Constrained4);

}  // namespace tfk3d
