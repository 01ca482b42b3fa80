#include "tfk3d/videomnist.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "tfk3d/idx.hpp"
#include "tfk3d/io.hpp"
#include "tfk3d/tensor.hpp"
#include "tfk3d/tt_kernel.hpp"

namespace tfk3d {

namespace {

constexpr char kMagic[8] = {'V', 'M', 'N', 'I', 'S', 'T', '0', '1'};
constexpr std::int64_t kRecordBytes = 1 + 8 + 8 + kVideoBytes;
constexpr std::int64_t kHeaderBytes = 8 + 4 + 8;

double deg_to_rad(double deg) { return deg * 3.14159265358979323846 / 180.0; }

// Pixel offsets are expressed in normalized frame units for AffineParams.
double px_to_norm(double px) { return 2.0 * px / static_cast<double>(kFrameSize - 1); }

// One step of a reflected walk: advances `pos` by `vel` and bounces both at
// +/- limit, flipping the velocity.
void bounce_step(double& pos, double& vel, double limit) {
    pos += vel;
    if (pos > limit) {
        pos = 2.0 * limit - pos;
        vel = -vel;
    } else if (pos < -limit) {
        pos = -2.0 * limit - pos;
        vel = -vel;
    }
}

}  // namespace

ClassParameterMask class_parameter_mask(int klass) {
    switch (klass) {
        case 0: return {false, false, true, false};
        case 1: return {false, false, false, true};
        case 2: return {true, false, false, false};
        case 3: return {false, true, false, false};
        case 4: return {false, true, false, false};
        case 5: return {false, false, true, true};
        case 6: return {true, true, false, false};
        case 7: return {false, true, true, false};
        case 8: return {false, true, false, false};
        case 9: return {false, true, true, true};
        default: detail::fail("class must be in [0, 9], got " + std::to_string(klass));
    }
}

TrajectorySpec gen_trajectory(int klass, Rng& rng, const TrajectoryConstants& c) {
    class_parameter_mask(klass);  // validates the class index
    TrajectorySpec spec;
    spec.klass = klass;
    spec.frames.assign(static_cast<std::size_t>(kFramesPerVideo), AffineParams::identity());

    const double rot_step = deg_to_rad(c.rotation_step_deg);
    const std::int64_t last = kFramesPerVideo - 1;
    const std::int64_t mid = kFramesPerVideo / 2;

    switch (klass) {
        case 0:
        case 1: {
            // Horizontal (0) or vertical (1) bounce; direction and per-frame
            // velocity are the randomized aspects.
            double vel = rng.uniform(c.velocity_min_px, c.velocity_max_px) *
                         static_cast<double>(rng.sign());
            double pos = 0.0;
            for (std::int64_t t = 1; t <= last; ++t) {
                bounce_step(pos, vel, c.bounce_limit_px);
                if (klass == 0)
                    spec.frames[t].t_x = px_to_norm(pos);
                else
                    spec.frames[t].t_y = px_to_norm(pos);
            }
            break;
        }
        case 2: {
            // Shrinks linearly to scale_min at the midpoint, then grows back
            // at the same rate.
            for (std::int64_t t = 1; t <= last; ++t) {
                const double ramp = static_cast<double>(t <= mid ? t : 2 * mid - t) /
                                    static_cast<double>(mid);
                spec.frames[t].s = 1.0 - (1.0 - c.scale_min) * ramp;
            }
            break;
        }
        case 3:
        case 4: {
            const double dir = klass == 3 ? 1.0 : -1.0;
            for (std::int64_t t = 1; t <= last; ++t)
                spec.frames[t].r = dir * rot_step * static_cast<double>(t);
            break;
        }
        case 5: {
            // Circular path; rotation sense and radius are the randomized
            // aspects. The circle starts at the digit's rest position.
            const double radius = rng.uniform(c.circle_radius_min_px, c.circle_radius_max_px);
            const double dir = static_cast<double>(rng.sign());
            for (std::int64_t t = 1; t <= last; ++t) {
                const double phi =
                    dir * 2.0 * 3.14159265358979323846 * static_cast<double>(t) /
                    static_cast<double>(last);
                spec.frames[t].t_x = px_to_norm(radius * (std::cos(phi) - 1.0));
                spec.frames[t].t_y = px_to_norm(radius * std::sin(phi));
            }
            break;
        }
        case 6: {
            for (std::int64_t t = 1; t <= last; ++t) {
                spec.frames[t].s =
                    1.0 + (c.scale_max - 1.0) * static_cast<double>(t) / static_cast<double>(last);
                spec.frames[t].r = rot_step * static_cast<double>(t);
            }
            break;
        }
        case 7: {
            double vel = rng.uniform(c.velocity_min_px, c.velocity_max_px) *
                         static_cast<double>(rng.sign());
            double pos = 0.0;
            for (std::int64_t t = 1; t <= last; ++t) {
                bounce_step(pos, vel, c.bounce_limit_px);
                spec.frames[t].t_x = px_to_norm(pos);
                spec.frames[t].r = -rot_step * static_cast<double>(t);
            }
            break;
        }
        case 8: {
            // Clockwise to the midpoint, counter-clockwise after.
            for (std::int64_t t = 1; t <= last; ++t) {
                const std::int64_t ramp = t <= mid ? t : 2 * mid - t;
                spec.frames[t].r = rot_step * static_cast<double>(ramp);
            }
            break;
        }
        case 9: {
            const double rot_max = deg_to_rad(c.random_rotation_max_deg);
            double r = 0.0, tx = 0.0, ty = 0.0;
            for (std::int64_t t = 1; t <= last; ++t) {
                r += rng.uniform(-rot_max, rot_max);
                tx += rng.uniform(-c.random_translation_max_px, c.random_translation_max_px);
                ty += rng.uniform(-c.random_translation_max_px, c.random_translation_max_px);
                spec.frames[t].r = r;
                spec.frames[t].t_x = px_to_norm(tx);
                spec.frames[t].t_y = px_to_norm(ty);
            }
            break;
        }
        default: break;
    }
    return spec;
}

VideoSample render_video(const DigitImage& digit, const TrajectorySpec& trajectory) {
    if (static_cast<std::int64_t>(trajectory.frames.size()) != kFramesPerVideo) {
        detail::fail("trajectory must hold " + std::to_string(kFramesPerVideo) + " frames, got " +
                     std::to_string(trajectory.frames.size()));
    }
    if (static_cast<std::int64_t>(digit.pixels.size()) != kFrameSize * kFrameSize) {
        detail::fail("digit image must hold 784 bytes, got " +
                     std::to_string(digit.pixels.size()));
    }

    Tensor source = Tensor::zeros({kFrameSize, kFrameSize});
    for (std::int64_t i = 0; i < source.size(); ++i)
        source.data()[i] = static_cast<double>(digit.pixels[static_cast<std::size_t>(i)]);

    VideoSample video;
    video.label = digit.label;
    video.frames.resize(static_cast<std::size_t>(kVideoBytes));

    Tape tape;
    tape.set_enabled(false);  // reuse the kernel warp machinery forward-only
    for (std::int64_t t = 0; t < kFramesPerVideo; ++t) {
        const AffineParams warp = trajectory.frames[static_cast<std::size_t>(t)].inverse();
        const std::array<double, 6> m = warp.to_matrix();
        Tensor theta = Tensor::from_data({2, 3}, {m[0], m[1], m[2], m[3], m[4], m[5]});
        Tensor grid = affine_grid(tape, theta, kFrameSize, kFrameSize);
        Tensor frame = grid_sample(tape, source, grid);
        std::uint8_t* out = video.frames.data() + t * kFrameSize * kFrameSize;
        for (std::int64_t i = 0; i < frame.size(); ++i) {
            const double v = std::min(255.0, std::max(0.0, frame.at(i)));
            out[i] = static_cast<std::uint8_t>(std::lround(v));
        }
    }
    return video;
}

namespace {

struct MnistFiles {
    IdxImages train_images, test_images;
    IdxLabels train_labels, test_labels;
};

MnistFiles load_mnist(const std::string& mnist_dir) {
    namespace fs = std::filesystem;
    const auto file = [&](const char* name) {
        const fs::path p = fs::path(mnist_dir) / name;
        if (!fs::exists(p)) {
            throw std::runtime_error("missing MNIST file " + p.string() +
                                     " (expected the standard IDX file names)");
        }
        return p.string();
    };
    MnistFiles mnist;
    mnist.train_images = read_idx_images(file("train-images-idx3-ubyte"));
    mnist.train_labels = read_idx_labels(file("train-labels-idx1-ubyte"));
    mnist.test_images = read_idx_images(file("t10k-images-idx3-ubyte"));
    mnist.test_labels = read_idx_labels(file("t10k-labels-idx1-ubyte"));
    if (mnist.train_images.count != static_cast<std::int64_t>(mnist.train_labels.labels.size()) ||
        mnist.test_images.count != static_cast<std::int64_t>(mnist.test_labels.labels.size())) {
        throw std::runtime_error("MNIST image/label counts disagree in " + mnist_dir);
    }
    if (mnist.train_images.rows != kFrameSize || mnist.train_images.cols != kFrameSize) {
        throw std::runtime_error("expected 28x28 MNIST images, got " +
                                 std::to_string(mnist.train_images.rows) + "x" +
                                 std::to_string(mnist.train_images.cols));
    }
    return mnist;
}

DigitImage digit_at(const IdxImages& images, const IdxLabels& labels, std::int64_t index) {
    DigitImage digit;
    digit.label = labels.labels[static_cast<std::size_t>(index)];
    const std::uint8_t* base = images.pixels.data() + index * kFrameSize * kFrameSize;
    digit.pixels.assign(base, base + kFrameSize * kFrameSize);
    return digit;
}

VideoSample make_sample(const IdxImages& images, const IdxLabels& labels, std::int64_t index,
                        std::uint64_t global_seed, std::uint64_t split_tag) {
    const DigitImage digit = digit_at(images, labels, index);
    const std::uint64_t seed =
        derive_seed(global_seed, split_tag, static_cast<std::uint64_t>(index));
    Rng rng(seed);
    const TrajectorySpec traj = gen_trajectory(digit.label, rng);
    VideoSample video = render_video(digit, traj);
    video.source_index = static_cast<std::uint64_t>(index);
    video.seed = seed;
    return video;
}

// Walks the three splits in a fixed order, invoking `emit` per video.
// Validation is the tail of the training file: the last total/12 digits
// (5000 for the canonical 60000), keeping test untouched.
void for_each_sample(const MnistFiles& mnist, std::uint64_t seed, const GenerateOptions& options,
                     const std::function<void(std::uint64_t split_tag, const VideoSample&)>& emit) {
    const std::int64_t total_train = mnist.train_images.count;
    const std::int64_t val_count = total_train / 12;
    const std::int64_t train_count = total_train - val_count;

    const auto cap = [](std::int64_t full, std::int64_t max) {
        return max < 0 ? full : std::min(full, max);
    };

    const std::int64_t n_train = cap(train_count, options.max_train);
    for (std::int64_t i = 0; i < n_train; ++i)
        emit(kSplitTagTrain, make_sample(mnist.train_images, mnist.train_labels, i, seed,
                                         kSplitTagTrain));

    const std::int64_t n_val = cap(val_count, options.max_validation);
    for (std::int64_t i = 0; i < n_val; ++i)
        emit(kSplitTagValidation, make_sample(mnist.train_images, mnist.train_labels,
                                              train_count + i, seed, kSplitTagValidation));

    const std::int64_t n_test = cap(mnist.test_images.count, options.max_test);
    for (std::int64_t i = 0; i < n_test; ++i)
        emit(kSplitTagTest, make_sample(mnist.test_images, mnist.test_labels, i, seed,
                                        kSplitTagTest));
}

void append_record(std::string& out, const VideoSample& sample) {
    out.push_back(static_cast<char>(sample.label));
    append_u64_le(out, sample.source_index);
    append_u64_le(out, sample.seed);
    out.append(reinterpret_cast<const char*>(sample.frames.data()), sample.frames.size());
}

std::string header_bytes(std::uint64_t count) {
    std::string out(kMagic, sizeof kMagic);
    append_u32_le(out, kDatasetVersion);
    append_u64_le(out, count);
    return out;
}

}  // namespace

DatasetSplit generate_dataset(const std::string& mnist_dir, std::uint64_t seed,
                              const GenerateOptions& options) {
    const MnistFiles mnist = load_mnist(mnist_dir);
    DatasetSplit split;
    for_each_sample(mnist, seed, options, [&](std::uint64_t tag, const VideoSample& sample) {
        if (tag == kSplitTagTrain)
            split.train.push_back(sample);
        else if (tag == kSplitTagValidation)
            split.validation.push_back(sample);
        else
            split.test.push_back(sample);
    });
    return split;
}

void generate_dataset_files(const std::string& mnist_dir, std::uint64_t seed,
                            const std::string& out_dir, const GenerateOptions& options) {
    const MnistFiles mnist = load_mnist(mnist_dir);
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    // Two passes per file would re-render everything, so counts are computed
    // up front and samples stream straight to disk.
    const std::int64_t total_train = mnist.train_images.count;
    const std::int64_t val_full = total_train / 12;
    const auto cap = [](std::int64_t full, std::int64_t max) {
        return max < 0 ? full : std::min(full, max);
    };
    const std::int64_t counts[3] = {cap(total_train - val_full, options.max_train),
                                    cap(val_full, options.max_validation),
                                    cap(mnist.test_images.count, options.max_test)};
    const char* names[3] = {"train.vmnist", "validation.vmnist", "test.vmnist"};

    std::ofstream out;
    std::uint64_t current_tag = 0;
    std::string pending_tmp, pending_target;
    auto open_split = [&](std::uint64_t tag) {
        const fs::path target = fs::path(out_dir) / names[tag - 1];
        pending_tmp = target.string() + ".tmp";
        pending_target = target.string();
        out.open(pending_tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + pending_tmp + " for writing");
        const std::string header = header_bytes(static_cast<std::uint64_t>(counts[tag - 1]));
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
    };
    auto close_split = [&]() {
        if (!out.is_open()) return;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + pending_tmp);
        out.close();
        fs::rename(pending_tmp, pending_target);
    };

    for_each_sample(mnist, seed, options, [&](std::uint64_t tag, const VideoSample& sample) {
        if (tag != current_tag) {
            close_split();
            open_split(tag);
            current_tag = tag;
        }
        std::string record;
        record.reserve(kRecordBytes);
        append_record(record, sample);
        out.write(record.data(), static_cast<std::streamsize>(record.size()));
    });
    close_split();

    // A capped-to-zero or empty split still yields a valid file.
    for (int tag = 1; tag <= 3; ++tag) {
        const fs::path target = fs::path(out_dir) / names[tag - 1];
        if (!fs::exists(target)) {
            atomic_write(target.string(), [&](std::ostream& o) {
                const std::string header = header_bytes(0);
                o.write(header.data(), static_cast<std::streamsize>(header.size()));
            });
        }
    }
}

void write_dataset(const std::vector<VideoSample>& samples, const std::string& path) {
    atomic_write(path, [&](std::ostream& out) {
        std::string header = header_bytes(samples.size());
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        for (const VideoSample& sample : samples) {
            if (static_cast<std::int64_t>(sample.frames.size()) != kVideoBytes) {
                detail::fail("sample frame payload must be " + std::to_string(kVideoBytes) +
                             " bytes, got " + std::to_string(sample.frames.size()));
            }
            std::string record;
            record.reserve(kRecordBytes);
            append_record(record, sample);
            out.write(record.data(), static_cast<std::streamsize>(record.size()));
        }
    });
}

namespace {

[[noreturn]] void dataset_fail(const std::string& path, std::int64_t offset,
                               const std::string& what) {
    throw std::runtime_error(path + ": " + what + " (byte offset " + std::to_string(offset) + ")");
}

std::uint64_t parse_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint32_t parse_u32_le(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

// Validates magic/version/size and returns the sample count.
std::int64_t check_dataset_header(std::ifstream& in, const std::string& path) {
    unsigned char header[kHeaderBytes];
    if (!in.read(reinterpret_cast<char*>(header), sizeof header)) {
        dataset_fail(path, in.gcount(), "truncated header");
    }
    if (std::memcmp(header, kMagic, sizeof kMagic) != 0) {
        dataset_fail(path, 0, "bad magic, expected \"VMNIST01\"");
    }
    const std::uint32_t version = parse_u32_le(header + 8);
    if (version != kDatasetVersion) {
        dataset_fail(path, 8, "unsupported version " + std::to_string(version));
    }
    const std::uint64_t count = parse_u64_le(header + 12);

    in.seekg(0, std::ios::end);
    const std::int64_t file_size = static_cast<std::int64_t>(in.tellg());
    const std::int64_t expected =
        kHeaderBytes + static_cast<std::int64_t>(count) * kRecordBytes;
    if (file_size != expected) {
        dataset_fail(path, kHeaderBytes,
                     "header count " + std::to_string(count) + " implies " +
                         std::to_string(expected) + " bytes but file holds " +
                         std::to_string(file_size));
    }
    return static_cast<std::int64_t>(count);
}

VideoSample parse_record(const unsigned char* p) {
    VideoSample sample;
    sample.label = p[0];
    sample.source_index = parse_u64_le(p + 1);
    sample.seed = parse_u64_le(p + 9);
    sample.frames.assign(p + 17, p + 17 + kVideoBytes);
    return sample;
}

}  // namespace

std::vector<VideoSample> read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open file");
    const std::int64_t count = check_dataset_header(in, path);
    in.seekg(kHeaderBytes, std::ios::beg);

    std::vector<VideoSample> samples;
    samples.reserve(static_cast<std::size_t>(count));
    std::vector<unsigned char> record(static_cast<std::size_t>(kRecordBytes));
    for (std::int64_t i = 0; i < count; ++i) {
        if (!in.read(reinterpret_cast<char*>(record.data()), kRecordBytes)) {
            dataset_fail(path, kHeaderBytes + i * kRecordBytes, "truncated record");
        }
        samples.push_back(parse_record(record.data()));
    }
    return samples;
}

VmnistReader::VmnistReader(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open file");
    count_ = check_dataset_header(in, path);
}

std::vector<std::uint8_t> VmnistReader::labels() const {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw std::runtime_error(path_ + ": cannot open file");
    std::vector<std::uint8_t> out(static_cast<std::size_t>(count_));
    for (std::int64_t i = 0; i < count_; ++i) {
        in.seekg(kHeaderBytes + i * kRecordBytes, std::ios::beg);
        int byte = in.get();
        if (byte == EOF) dataset_fail(path_, kHeaderBytes + i * kRecordBytes, "truncated record");
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(byte);
    }
    return out;
}

VideoSample VmnistReader::sample(std::int64_t index) const {
    if (index < 0 || index >= count_) {
        detail::fail("sample index " + std::to_string(index) + " out of range, file holds " +
                     std::to_string(count_));
    }
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw std::runtime_error(path_ + ": cannot open file");
    in.seekg(kHeaderBytes + index * kRecordBytes, std::ios::beg);
    std::vector<unsigned char> record(static_cast<std::size_t>(kRecordBytes));
    if (!in.read(reinterpret_cast<char*>(record.data()), kRecordBytes)) {
        dataset_fail(path_, kHeaderBytes + index * kRecordBytes, "truncated record");
    }
    return parse_record(record.data());
}

std::vector<VideoSample> VmnistReader::samples(const std::vector<std::int64_t>& indices) const {
    std::vector<VideoSample> out;
    out.reserve(indices.size());
    for (std::int64_t index : indices) out.push_back(sample(index));
    return out;
}

std::vector<std::int64_t> select_training_indices(const std::vector<std::uint8_t>& labels,
                                                  std::int64_t n, std::uint64_t run_seed) {
    if (n <= 0 || n % 10 != 0) {
        detail::fail("training selection size must be a positive multiple of 10, got " +
                     std::to_string(n));
    }
    if (n > static_cast<std::int64_t>(labels.size())) {
        detail::fail("training selection size " + std::to_string(n) +
                     " exceeds split size " + std::to_string(labels.size()));
    }
    std::vector<std::vector<std::int64_t>> by_class(10);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] > 9) detail::fail("label " + std::to_string(labels[i]) + " out of range");
        by_class[labels[i]].push_back(static_cast<std::int64_t>(i));
    }
    const std::int64_t per_class = n / 10;
    std::vector<std::int64_t> chosen;
    chosen.reserve(static_cast<std::size_t>(n));
    Rng rng(derive_seed(run_seed, 0x7365lu /* "se" */));
    for (int klass = 0; klass < 10; ++klass) {
        auto& pool = by_class[static_cast<std::size_t>(klass)];
        if (static_cast<std::int64_t>(pool.size()) < per_class) {
            detail::fail("class " + std::to_string(klass) + " has only " +
                         std::to_string(pool.size()) + " videos, need " +
                         std::to_string(per_class));
        }
        rng.shuffle(pool);
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + per_class);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

std::vector<VideoSample> select_training_videos(const VmnistReader& train, std::int64_t n,
                                                std::uint64_t run_seed) {
    return train.samples(select_training_indices(train.labels(), n, run_seed));
}

}  // namespace tfk3d
