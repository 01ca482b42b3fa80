#include "tfk3d/model.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tfk3d/io.hpp"
#include "tfk3d/rng.hpp"

namespace tfk3d {

const char* conv_mode_name(ConvMode mode) {
    switch (mode) {
        case ConvMode::Regular3D: return "regular";
        case ConvMode::TTPerStep: return "ttperstep";
        case ConvMode::TTShared: return "ttshared";
    }
    return "?";
}

ConvMode conv_mode_from_name(const std::string& name) {
    if (name == "regular") return ConvMode::Regular3D;
    if (name == "ttperstep") return ConvMode::TTPerStep;
    if (name == "ttshared") return ConvMode::TTShared;
    detail::fail("unknown conv mode \"" + name + "\" (regular | ttperstep | ttshared)");
}

namespace {

constexpr Extent3 kPoolWindows[2] = {{1, 2, 2}, {2, 2, 2}};

std::string extent_str(const Extent3& e) {
    return std::to_string(e.t) + "x" + std::to_string(e.h) + "x" + std::to_string(e.w);
}

std::string dims_str(std::int64_t c, const Extent3& e) {
    return "[" + std::to_string(c) + "x" + extent_str(e) + "]";
}

}  // namespace

Model Model::build(const ModelConfig& config) {
    if (config.conv_filters.size() != 2) {
        detail::fail("config must name exactly 2 conv stages, got " +
                     std::to_string(config.conv_filters.size()));
    }
    if (config.kernel_shapes.size() != config.conv_filters.size()) {
        detail::fail("kernel_shapes count must match conv_filters count");
    }
    if (config.num_classes < 2) detail::fail("num_classes must be >= 2");

    Model model;
    model.config_ = config;
    Rng rng(config.seed);

    // Shape trace doubles as the build-time validation record.
    std::ostringstream trace;
    std::int64_t C = config.input_channels;
    Extent3 e = config.input_extent;
    trace << "input " << dims_str(C, e);

    for (std::size_t stage = 0; stage < config.conv_filters.size(); ++stage) {
        const std::int64_t N = config.conv_filters[stage];
        const Extent3 k = config.kernel_shapes[stage];
        const Extent3 pool = kPoolWindows[stage];
        if (N < 1) detail::fail("conv stage filter count must be >= 1");
        trace << " -> conv" << stage + 1 << "(" << N << " filters " << extent_str(k) << ")";
        if (k.t > e.t || k.h > e.h || k.w > e.w) {
            detail::fail("kernel " + extent_str(k) + " exceeds its feature map; trace: " +
                         trace.str() + " <- here");
        }
        e = {e.t - k.t + 1, e.h - k.h + 1, e.w - k.w + 1};
        trace << " -> " << dims_str(N, e);
        trace << " -> pool(" << extent_str(pool) << ")";
        if (pool.t > e.t || pool.h > e.h || pool.w > e.w) {
            detail::fail("pool window " + extent_str(pool) + " exceeds its feature map; trace: " +
                         trace.str() + " <- here");
        }
        e = {e.t / pool.t, e.h / pool.h, e.w / pool.w};
        trace << " -> " << dims_str(N, e);

        ConvStage conv;
        conv.filters = N;
        conv.kernel = k;
        conv.pool = pool;
        const std::string prefix = "conv" + std::to_string(stage + 1);
        if (config.conv_mode == ConvMode::Regular3D) {
            const std::int64_t fan_in = C * k.t * k.h * k.w;
            conv.weights = init_kaiming_uniform({N, C, k.t, k.h, k.w}, fan_in, rng);
            conv.weights.set_requires_grad(true);
            model.params_.emplace_back(prefix + ".weight", conv.weights);
        } else {
            const ThetaMode mode =
                config.conv_mode == ConvMode::TTShared ? ThetaMode::Shared : ThetaMode::PerStep;
            for (std::int64_t f = 0; f < N; ++f) {
                FactorizedKernel kernel = make_factorized_kernel(C, k.t, k.h, k.w, mode, rng);
                const std::string kp = prefix + ".k" + std::to_string(f);
                model.params_.emplace_back(kp + ".k0", kernel.k0);
                for (std::size_t s = 0; s < kernel.thetas.thetas.size(); ++s) {
                    model.params_.emplace_back(kp + ".theta" + std::to_string(s),
                                               kernel.thetas.thetas[s]);
                }
                conv.tt.push_back(std::move(kernel));
            }
        }
        conv.bias = Tensor::zeros({N}, true);
        model.params_.emplace_back(prefix + ".bias", conv.bias);
        model.conv_.push_back(std::move(conv));
        C = N;
    }

    std::int64_t width = C * e.t * e.h * e.w;
    model.flat_size_ = width;
    trace << " -> flatten [" << width << "]";

    std::vector<std::int64_t> fc_sizes = config.fc_sizes;
    fc_sizes.push_back(config.num_classes);
    for (std::size_t i = 0; i < fc_sizes.size(); ++i) {
        const std::int64_t out_size = fc_sizes[i];
        if (out_size < 1) detail::fail("fc layer size must be >= 1");
        FcStage fc;
        fc.weight = init_kaiming_uniform({out_size, width}, width, rng);
        fc.weight.set_requires_grad(true);
        fc.bias = Tensor::zeros({out_size}, true);
        fc.squash = i + 1 < fc_sizes.size();
        const std::string prefix = "fc" + std::to_string(i + 1);
        model.params_.emplace_back(prefix + ".weight", fc.weight);
        model.params_.emplace_back(prefix + ".bias", fc.bias);
        model.fc_.push_back(std::move(fc));
        trace << " -> fc(" << out_size << ")";
        width = out_size;
    }
    return model;
}

Tensor Model::forward(Tape& tape, const Tensor& video) const {
    const Extent3 in = config_.input_extent;
    if (video.rank() != 4 || video.dim(0) != config_.input_channels || video.dim(1) != in.t ||
        video.dim(2) != in.h || video.dim(3) != in.w) {
        detail::fail("forward expects input " + dims_str(config_.input_channels, in) + ", got " +
                     video.shape_string());
    }

    Tensor x = video;
    for (const ConvStage& stage : conv_) {
        Tensor kernels;
        if (config_.conv_mode == ConvMode::Regular3D) {
            kernels = stage.weights;
        } else {
            // Factorized kernels are re-materialized on every pass; their
            // parameters move every optimizer step.
            std::vector<Tensor> banks;
            banks.reserve(stage.tt.size());
            for (const FactorizedKernel& kernel : stage.tt)
                banks.push_back(materialize(tape, kernel));
            kernels = stack0(tape, banks);
        }
        x = conv3d(tape, x, kernels);
        x = add_channel_bias(tape, x, stage.bias);
        x = maxpool3d(tape, x, stage.pool, stage.pool);
        // tanh commutes with the max-pool (it is strictly increasing), so
        // squashing after the pool computes the conv->tanh->pool stack.
        x = tanh(tape, x);
    }
    x = reshape(tape, x, {flat_size_});
    for (const FcStage& fc : fc_) {
        x = dense(tape, x, fc.weight, fc.bias);
        if (fc.squash) x = tanh(tape, x);
    }
    return x;
}

std::int64_t Model::count_params() const {
    std::int64_t total = 0;
    for (const auto& [name, tensor] : params_) total += tensor.size();
    return total;
}

std::vector<LayerParamCount> Model::param_report() const {
    std::vector<LayerParamCount> report;
    for (const auto& [name, tensor] : params_) report.push_back({name, tensor.size()});
    return report;
}

std::int64_t Model::conv_param_count() const {
    std::int64_t total = 0;
    for (const auto& [name, tensor] : params_) {
        if (name.rfind("conv", 0) == 0) total += tensor.size();
    }
    return total;
}

std::vector<Tensor> Model::parameter_tensors() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& [name, tensor] : params_) out.push_back(tensor);
    return out;
}

std::vector<std::vector<double>> Model::snapshot() const {
    std::vector<std::vector<double>> out;
    out.reserve(params_.size());
    for (const auto& [name, tensor] : params_)
        out.emplace_back(tensor.data(), tensor.data() + tensor.size());
    return out;
}

void Model::restore(const std::vector<std::vector<double>>& snapshot) {
    if (snapshot.size() != params_.size()) detail::fail("snapshot parameter count mismatch");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& t = params_[i].second;
        if (static_cast<std::int64_t>(snapshot[i].size()) != t.size()) {
            detail::fail("snapshot size mismatch for " + params_[i].first);
        }
        std::memcpy(t.data(), snapshot[i].data(), sizeof(double) * snapshot[i].size());
    }
}

namespace {
constexpr char kCheckpointMagic[8] = {'T', 'F', 'K', '3', 'D', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void Model::save_checkpoint(const std::string& path) const {
    atomic_write(path, [&](std::ostream& out) {
        std::string head(kCheckpointMagic, sizeof kCheckpointMagic);
        append_u32_le(head, kCheckpointVersion);
        out.write(head.data(), static_cast<std::streamsize>(head.size()));
        for (const auto& [name, tensor] : params_) {
            std::string rec;
            append_u32_le(rec, static_cast<std::uint32_t>(name.size()));
            rec += name;
            append_u32_le(rec, static_cast<std::uint32_t>(tensor.shape().size()));
            for (std::int64_t d : tensor.shape()) append_u64_le(rec, static_cast<std::uint64_t>(d));
            rec.append(reinterpret_cast<const char*>(tensor.data()),
                       sizeof(double) * static_cast<std::size_t>(tensor.size()));
            out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
        }
    });
}

void Model::load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open checkpoint");
    char head[12];
    if (!in.read(head, sizeof head)) throw std::runtime_error(path + ": truncated header");
    if (std::memcmp(head, kCheckpointMagic, 8) != 0) {
        throw std::runtime_error(path + ": bad checkpoint magic, expected \"TFK3DCKP\"");
    }
    const auto read_u32 = [&](std::uint32_t& v) {
        unsigned char b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
        v = b[0] | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
            (std::uint32_t(b[3]) << 24);
        return true;
    };
    const auto read_u64 = [&](std::uint64_t& v) {
        unsigned char b[8];
        if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
        v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return true;
    };

    std::uint32_t version = static_cast<unsigned char>(head[8]) |
                            (std::uint32_t(static_cast<unsigned char>(head[9])) << 8) |
                            (std::uint32_t(static_cast<unsigned char>(head[10])) << 16) |
                            (std::uint32_t(static_cast<unsigned char>(head[11])) << 24);
    if (version != kCheckpointVersion) {
        throw std::runtime_error(path + ": unsupported checkpoint version " +
                                 std::to_string(version));
    }

    std::size_t loaded = 0;
    while (true) {
        std::uint32_t name_len = 0;
        if (!read_u32(name_len)) break;  // clean EOF
        std::string name(name_len, '\0');
        std::uint32_t rank = 0;
        if (!in.read(name.data(), name_len) || !read_u32(rank)) {
            throw std::runtime_error(path + ": truncated parameter record");
        }
        std::vector<std::int64_t> shape(rank);
        for (std::uint32_t i = 0; i < rank; ++i) {
            std::uint64_t d = 0;
            if (!read_u64(d)) {
                throw std::runtime_error(path + ": truncated shape for " + name);
            }
            shape[i] = static_cast<std::int64_t>(d);
        }
        Tensor* target = nullptr;
        for (auto& [pname, tensor] : params_) {
            if (pname == name) {
                target = &tensor;
                break;
            }
        }
        if (!target) throw std::runtime_error(path + ": unknown parameter \"" + name + "\"");
        if (target->shape() != shape) {
            throw std::runtime_error(path + ": shape mismatch for \"" + name + "\": checkpoint " +
                                     detail::shape_string(shape) + " vs model " +
                                     target->shape_string());
        }
        if (!in.read(reinterpret_cast<char*>(target->data()),
                     static_cast<std::streamsize>(sizeof(double) * target->size()))) {
            throw std::runtime_error(path + ": truncated data for \"" + name + "\"");
        }
        ++loaded;
    }
    if (loaded != params_.size()) {
        throw std::runtime_error(path + ": checkpoint holds " + std::to_string(loaded) +
                                 " parameters, model expects " + std::to_string(params_.size()));
    }
}

}  // namespace tfk3d
