#include "tfk3d/tt_kernel.hpp"

#include <cmath>
#include <utility>

namespace tfk3d {

const char* theta_mode_name(ThetaMode mode) {
    return mode == ThetaMode::Shared ? "shared" : "per-step";
}

ThetaSet ThetaSet::identity(ThetaMode mode, std::int64_t temporal_extent, ThetaParam param) {
    ThetaSet set;
    set.mode = mode;
    set.param = param;
    const std::size_t count = set.expected_count(temporal_extent);
    for (std::size_t i = 0; i < count; ++i) {
        if (param == ThetaParam::Constrained4) {
            set.thetas.push_back(Tensor::from_data({4}, {1.0, 0.0, 0.0, 0.0}, true));
        } else {
            set.thetas.push_back(Tensor::from_data({6}, {1.0, 0.0, 0.0, 0.0, 1.0, 0.0}, true));
        }
    }
    return set;
}

std::int64_t FactorizedKernel::parameter_count() const {
    const std::int64_t per_theta = thetas.param == ThetaParam::Constrained4 ? 4 : 6;
    return k0.size() + per_theta * static_cast<std::int64_t>(thetas.thetas.size());
}

std::vector<Tensor> FactorizedKernel::parameters() const {
    std::vector<Tensor> out{k0};
    out.insert(out.end(), thetas.thetas.begin(), thetas.thetas.end());
    return out;
}

Tensor affine_matrix(Tape& tape, const Tensor& params) {
    if (params.rank() != 1 || params.dim(0) != 4) {
        detail::fail("affine_matrix expects a [4] tensor (s, r, t_x, t_y), got " +
                     params.shape_string());
    }
    const double s = params.at(0), r = params.at(1), tx = params.at(2), ty = params.at(3);
    const double c = std::cos(r), sn = std::sin(r);
    Tensor m = Tensor::from_data({2, 3},
                                 {s * c, -s * sn, tx * s * c - ty * s * sn,
                                  s * sn, s * c, tx * s * sn + ty * s * c},
                                 params.requires_grad());
    if (m.requires_grad()) {
        Tensor p = params, out = m;
        tape.record({params}, m, [p, out]() mutable {
            const double s = p.at(0), r = p.at(1), tx = p.at(2), ty = p.at(3);
            const double c = std::cos(r), sn = std::sin(r);
            const double* g = out.grad();
            double* gp = p.grad();
            // dM/ds
            gp[0] += g[0] * c + g[1] * -sn + g[2] * (tx * c - ty * sn) + g[3] * sn + g[4] * c +
                     g[5] * (tx * sn + ty * c);
            // dM/dr
            gp[1] += g[0] * (-s * sn) + g[1] * (-s * c) + g[2] * (-tx * s * sn - ty * s * c) +
                     g[3] * (s * c) + g[4] * (-s * sn) + g[5] * (tx * s * c - ty * s * sn);
            // dM/dt_x, dM/dt_y (third column only)
            gp[2] += g[2] * (s * c) + g[5] * (s * sn);
            gp[3] += g[2] * (-s * sn) + g[5] * (s * c);
        });
    }
    return m;
}

Tensor affine_grid(Tape& tape, const Tensor& theta, std::int64_t height, std::int64_t width) {
    if (theta.rank() != 2 || theta.dim(0) != 2 || theta.dim(1) != 3) {
        detail::fail("affine_grid expects a [2x3] theta, got " + theta.shape_string());
    }
    if (height < 1 || width < 1) detail::fail("affine_grid extents must be >= 1");

    Tensor grid = Tensor::zeros({height, width, 2}, theta.requires_grad());
    const double* m = theta.data();
    double* g = grid.data();
    for (std::int64_t y = 0; y < height; ++y) {
        const double yn = pixel_to_norm(y, height);
        for (std::int64_t x = 0; x < width; ++x) {
            const double xn = pixel_to_norm(x, width);
            double* cell = g + (y * width + x) * 2;
            cell[0] = m[0] * xn + m[1] * yn + m[2];
            cell[1] = m[3] * xn + m[4] * yn + m[5];
        }
    }
    if (grid.requires_grad()) {
        Tensor th = theta, out = grid;
        tape.record({theta}, grid, [th, out, height, width]() mutable {
            const double* gg = out.grad();
            double* gm = th.grad();
            double acc[6] = {0, 0, 0, 0, 0, 0};
            for (std::int64_t y = 0; y < height; ++y) {
                const double yn = pixel_to_norm(y, height);
                for (std::int64_t x = 0; x < width; ++x) {
                    const double xn = pixel_to_norm(x, width);
                    const double* cell = gg + (y * width + x) * 2;
                    acc[0] += cell[0] * xn;
                    acc[1] += cell[0] * yn;
                    acc[2] += cell[0];
                    acc[3] += cell[1] * xn;
                    acc[4] += cell[1] * yn;
                    acc[5] += cell[1];
                }
            }
            for (int i = 0; i < 6; ++i) gm[i] += acc[i];
        });
    }
    return grid;
}

Tensor grid_sample(Tape& tape, const Tensor& slice, const Tensor& grid) {
    if (slice.rank() != 2) detail::fail("grid_sample expects a 2D slice, got " + slice.shape_string());
    const std::int64_t H = slice.dim(0), W = slice.dim(1);
    if (grid.rank() != 3 || grid.dim(0) != H || grid.dim(1) != W || grid.dim(2) != 2) {
        detail::fail("grid_sample grid " + grid.shape_string() + " does not match slice " +
                     slice.shape_string());
    }

    Tensor out = Tensor::zeros({H, W}, slice.requires_grad() || grid.requires_grad());
    const double* k = slice.data();
    const double* g = grid.data();
    double* y = out.data();
    for (std::int64_t i = 0; i < H * W; ++i) {
        const double sx = norm_to_pixel(g[2 * i], W);
        const double sy = norm_to_pixel(g[2 * i + 1], H);
        const std::int64_t x0 = static_cast<std::int64_t>(std::floor(sx));
        const std::int64_t y0 = static_cast<std::int64_t>(std::floor(sy));
        const double fx = sx - static_cast<double>(x0);
        const double fy = sy - static_cast<double>(y0);
        double acc = 0.0;
        for (int dy = 0; dy <= 1; ++dy) {
            const std::int64_t yy = y0 + dy;
            if (yy < 0 || yy >= H) continue;
            const double wy = dy ? fy : 1.0 - fy;
            for (int dx = 0; dx <= 1; ++dx) {
                const std::int64_t xx = x0 + dx;
                if (xx < 0 || xx >= W) continue;
                const double wx = dx ? fx : 1.0 - fx;
                acc += k[yy * W + xx] * wx * wy;
            }
        }
        y[i] = acc;
    }

    if (out.requires_grad()) {
        Tensor kin = slice, gin = grid, o = out;
        tape.record({slice, grid}, out, [kin, gin, o]() mutable {
            const std::int64_t H = kin.dim(0), W = kin.dim(1);
            const double* k = kin.data();
            const double* g = gin.data();
            const double* go = o.grad();
            double* gk = kin.requires_grad() ? kin.grad() : nullptr;
            double* gg = gin.requires_grad() ? gin.grad() : nullptr;
            const double half_w = 0.5 * static_cast<double>(W - 1);
            const double half_h = 0.5 * static_cast<double>(H - 1);
            for (std::int64_t i = 0; i < H * W; ++i) {
                const double upstream = go[i];
                if (upstream == 0.0) continue;
                const double sx = norm_to_pixel(g[2 * i], W);
                const double sy = norm_to_pixel(g[2 * i + 1], H);
                const std::int64_t x0 = static_cast<std::int64_t>(std::floor(sx));
                const std::int64_t y0 = static_cast<std::int64_t>(std::floor(sy));
                const double fx = sx - static_cast<double>(x0);
                const double fy = sy - static_cast<double>(y0);
                double d_sx = 0.0, d_sy = 0.0;
                for (int dy = 0; dy <= 1; ++dy) {
                    const std::int64_t yy = y0 + dy;
                    if (yy < 0 || yy >= H) continue;
                    const double wy = dy ? fy : 1.0 - fy;
                    const double dwy = dy ? 1.0 : -1.0;
                    for (int dx = 0; dx <= 1; ++dx) {
                        const std::int64_t xx = x0 + dx;
                        if (xx < 0 || xx >= W) continue;
                        const double wx = dx ? fx : 1.0 - fx;
                        const double dwx = dx ? 1.0 : -1.0;
                        const double kv = k[yy * W + xx];
                        if (gk) gk[yy * W + xx] += upstream * wx * wy;
                        d_sx += kv * dwx * wy;
                        d_sy += kv * wx * dwy;
                    }
                }
                if (gg) {
                    gg[2 * i] += upstream * d_sx * half_w;
                    gg[2 * i + 1] += upstream * d_sy * half_h;
                }
            }
        });
    }
    return out;
}

Tensor materialize(Tape& tape, const FactorizedKernel& kernel) {
    const std::int64_t C = kernel.channels(), T = kernel.temporal_extent;
    const std::int64_t H = kernel.height(), W = kernel.width();
    if (kernel.k0.rank() != 3) {
        detail::fail("materialize expects K0 of rank 3 [C x H x W], got " +
                     kernel.k0.shape_string());
    }
    if (T < 1) detail::fail("materialize temporal extent must be >= 1");
    const std::size_t expected = kernel.thetas.expected_count(T);
    if (kernel.thetas.thetas.size() != expected) {
        detail::fail("materialize: theta set holds " + std::to_string(kernel.thetas.thetas.size()) +
                     " transforms, " + std::string(theta_mode_name(kernel.thetas.mode)) +
                     " mode with T=" + std::to_string(T) + " requires " + std::to_string(expected));
    }

    // Shared mode reuses one grid tensor for every step; gradient fan-out
    // sums the contributions. Per-step builds one grid per transform.
    std::vector<Tensor> grids;
    const std::int64_t steps = T - 1;
    if (steps > 0) {
        const bool shared = kernel.thetas.mode == ThetaMode::Shared;
        const std::int64_t unique = shared ? 1 : steps;
        for (std::int64_t i = 0; i < unique; ++i) {
            const Tensor& theta = kernel.thetas.thetas[static_cast<std::size_t>(i)];
            Tensor matrix = kernel.thetas.param == ThetaParam::Constrained4
                                ? affine_matrix(tape, theta)
                                : reshape(tape, theta, {2, 3});
            grids.push_back(affine_grid(tape, matrix, H, W));
        }
        if (shared) grids.assign(static_cast<std::size_t>(steps), grids.front());
    }

    std::vector<Tensor> channel_stacks;
    channel_stacks.reserve(static_cast<std::size_t>(C));
    for (std::int64_t c = 0; c < C; ++c) {
        Tensor current = select0(tape, kernel.k0, c);  // [H x W]
        std::vector<Tensor> slices{current};
        for (std::int64_t t = 0; t < steps; ++t) {
            current = grid_sample(tape, current, grids[static_cast<std::size_t>(t)]);
            slices.push_back(current);
        }
        channel_stacks.push_back(stack0(tape, slices));  // [T x H x W]
    }
    return stack0(tape, channel_stacks);  // [C x T x H x W]
}

std::int64_t param_count(std::int64_t width, std::int64_t height, std::int64_t temporal_extent,
                         std::int64_t channels, ThetaMode mode) {
    if (width < 1 || height < 1 || temporal_extent < 1 || channels < 1) {
        detail::fail("param_count arguments must all be >= 1");
    }
    const std::int64_t base = channels * width * height;
    if (temporal_extent == 1) return base;
    return base + (mode == ThetaMode::Shared ? 4 : 4 * (temporal_extent - 1));
}

std::int64_t regular_param_count(std::int64_t width, std::int64_t height,
                                 std::int64_t temporal_extent, std::int64_t channels) {
    return channels * width * height * temporal_extent;
}

FactorizedKernel make_factorized_kernel(std::int64_t channels, std::int64_t temporal_extent,
                                        std::int64_t height, std::int64_t width, ThetaMode mode,
                                        Rng& rng, ThetaParam param) {
    FactorizedKernel kernel;
    const double stddev = std::sqrt(2.0 / static_cast<double>(channels * height * width));
    kernel.k0 = init_gaussian({channels, height, width}, 0.0, stddev, rng);
    kernel.k0.set_requires_grad(true);
    kernel.temporal_extent = temporal_extent;
    kernel.thetas = ThetaSet::identity(mode, temporal_extent, param);
    return kernel;
}

}  // namespace tfk3d
