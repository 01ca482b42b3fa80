#pragma once

#include <cstdint>

#include "tfk3d/model.hpp"

namespace tfk3d {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::int64_t checked = 0;

    bool passed(double tolerance = 1e-4) const { return max_rel_error <= tolerance; }
};

/// Compares analytic gradients against central finite differences
/// (h = 1e-5) for a random scalar loss. For the factorized modes this
/// covers K0 and every theta of a T-slice kernel; for Regular3D it covers
/// a small convolution's input and kernel bank. Relative error uses
/// max(|analytic|, |numeric|, 1e-6) as the denominator.
GradCheckReport gradcheck_kernel(ConvMode mode, std::int64_t temporal_extent, std::uint64_t seed);

}  // namespace tfk3d
