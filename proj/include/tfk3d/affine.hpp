#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace tfk3d {

/// Constrained affine transform: scale s, rotation r (radians), and
/// translations (t_x horizontal, t_y vertical) in normalized grid units.
/// As a point map it acts as q = s * R(r) * (p + t); note the translation
/// is applied before rotation/scale, which is what the 2x3 matrix form
/// below encodes. s is unconstrained; learning may drive it negative or
/// through zero (s = 0 collapses everything to the interpolated origin).
struct AffineParams {
    double s = 1.0;
    double r = 0.0;
    double t_x = 0.0;
    double t_y = 0.0;

    static AffineParams identity() { return {1.0, 0.0, 0.0, 0.0}; }

    /// Row-major 2x3 matrix [[a, b, c], [d, e, f]] mapping (x, y, 1).
    std::array<double, 6> to_matrix() const {
        const double c = std::cos(r), sn = std::sin(r);
        return {s * c, -s * sn, t_x * s * c - t_y * s * sn,
                s * sn, s * c,  t_x * s * sn + t_y * s * c};
    }

    /// The inverse transform, which stays in this four-parameter family:
    /// (s, r, t)^-1 = (1/s, -r, -s*R(r)*t). Undefined for s = 0.
    AffineParams inverse() const {
        const double c = std::cos(r), sn = std::sin(r);
        return {1.0 / s, -r, -s * (t_x * c - t_y * sn), -s * (t_x * sn + t_y * c)};
    }
};

/// Applies a row-major 2x3 matrix to (x, y, 1).
inline void apply_affine(const std::array<double, 6>& m, double x, double y, double& out_x,
                         double& out_y) {
    out_x = m[0] * x + m[1] * y + m[2];
    out_y = m[3] * x + m[4] * y + m[5];
}

/// Normalized coordinate of pixel i on an n-wide axis: the grid spans
/// [-1, +1] with the center at 0; a 1-pixel axis maps to 0.
inline double pixel_to_norm(std::int64_t i, std::int64_t n) {
    return n > 1 ? -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
}

/// Pixel-unit coordinate of a normalized coordinate on an n-wide axis.
inline double norm_to_pixel(double g, std::int64_t n) {
    const double half = 0.5 * static_cast<double>(n - 1);
    return g * half + half;
}

}  // namespace tfk3d
