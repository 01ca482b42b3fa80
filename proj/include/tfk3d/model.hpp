#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tfk3d/ops.hpp"
#include "tfk3d/tensor.hpp"
#include "tfk3d/tt_kernel.hpp"

namespace tfk3d {

enum class ConvMode { Regular3D, TTPerStep, TTShared };

const char* conv_mode_name(ConvMode mode);
ConvMode conv_mode_from_name(const std::string& name);

/// LeNet-5 transplant over video input: two conv+pool stages (subsampling
/// windows 1x2x2 then 2x2x2), then fully connected layers. Filter counts,
/// kernel shapes and fc widths are configurable; the defaults follow the
/// classic architecture.
struct ModelConfig {
    std::vector<std::int64_t> conv_filters{6, 16};
    std::vector<Extent3> kernel_shapes{{3, 5, 5}, {3, 5, 5}};  // (t, h, w) per conv layer
    ConvMode conv_mode = ConvMode::Regular3D;
    std::vector<std::int64_t> fc_sizes{120, 84};
    std::int64_t num_classes = 10;
    std::uint64_t seed = 0;
    std::int64_t input_channels = 1;
    Extent3 input_extent{30, 28, 28};
};

struct LayerParamCount {
    std::string name;
    std::int64_t params;
};

class Model {
public:
    /// Builds and initializes the network. Regular3D kernel banks and all
    /// fully connected weights are Kaiming-uniform (bound sqrt(6/fan_in));
    /// factorized kernels initialize K0 from a gaussian with stddev
    /// sqrt(2/fan_in) and every theta at the identity (s=1, r=0, t=0);
    /// biases start at zero. Rejects configurations whose kernels or pool
    /// windows outgrow the feature maps, with a stage-by-stage shape trace.
    static Model build(const ModelConfig& config);

    /// Logits [num_classes] for one video [C x T x H x W]; differentiable.
    Tensor forward(Tape& tape, const Tensor& video) const;

    /// Total learnable scalar count.
    std::int64_t count_params() const;
    /// Per-layer breakdown, in registry order.
    std::vector<LayerParamCount> param_report() const;
    /// Learnable scalars in the convolution stages only (kernels + biases).
    std::int64_t conv_param_count() const;

    const std::vector<std::pair<std::string, Tensor>>& parameters() const { return params_; }
    std::vector<Tensor> parameter_tensors() const;

    /// Copies of all parameter values, restorable later (checkpoint in RAM).
    std::vector<std::vector<double>> snapshot() const;
    void restore(const std::vector<std::vector<double>>& snapshot);

    /// Binary checkpoint: magic "TFK3DCKP", u32 version, then per parameter
    /// u32 name length, name bytes, u32 rank, u64 extents, little-endian
    /// f64 data. Round-trips bit-exactly.
    void save_checkpoint(const std::string& path) const;
    /// Loads parameter values by name into this model; rejects unknown
    /// names and shape mismatches.
    void load_checkpoint(const std::string& path);

    const ModelConfig& config() const { return config_; }

private:
    struct ConvStage {
        std::int64_t filters = 0;
        Extent3 kernel;
        Extent3 pool;
        Tensor weights;                       // Regular3D: [N x C x Kt x Kh x Kw]
        std::vector<FactorizedKernel> tt;     // factorized modes: one per filter
        Tensor bias;                          // [N]
    };
    struct FcStage {
        Tensor weight;
        Tensor bias;
        bool squash = false;  // tanh after this layer
    };

    ModelConfig config_;
    std::vector<ConvStage> conv_;
    std::vector<FcStage> fc_;
    std::int64_t flat_size_ = 0;
    std::vector<std::pair<std::string, Tensor>> params_;
};

}  // namespace tfk3d
