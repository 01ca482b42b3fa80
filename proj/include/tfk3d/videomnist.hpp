#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tfk3d/affine.hpp"
#include "tfk3d/rng.hpp"

namespace tfk3d {

inline constexpr std::int64_t kFrameSize = 28;
inline constexpr std::int64_t kFramesPerVideo = 30;
inline constexpr std::int64_t kVideoBytes = kFramesPerVideo * kFrameSize * kFrameSize;
inline constexpr std::uint32_t kDatasetVersion = 1;

struct DigitImage {
    std::vector<std::uint8_t> pixels;  // 28*28 bytes
    std::uint8_t label = 0;
};

struct VideoSample {
    std::vector<std::uint8_t> frames;  // 30*28*28 bytes
    std::uint8_t label = 0;
    std::uint64_t source_index = 0;  // index of the originating digit in its MNIST file
    std::uint64_t seed = 0;          // the trajectory seed used for this video
};

/// Per-class motion described as the cumulative content transform applied
/// to the original digit at each frame (frame 0 is always identity).
/// "Content" means the digit's apparent transform on screen: s < 1 shrinks
/// it, positive r rotates it clockwise (y axis points down), t_x/t_y move
/// it right/down in normalized frame units. The renderer inverts these to
/// build the sampling grid.
struct TrajectorySpec {
    int klass = 0;
    std::vector<AffineParams> frames;  // length 30
};

/// Every unspecified constant behind the class motions lives here so the
/// dataset is a pure function of (MNIST bytes, seed, version).
struct TrajectoryConstants {
    double velocity_min_px = 0.5;   // classes 0, 1, 7: per-frame speed draw
    double velocity_max_px = 1.5;
    double bounce_limit_px = 8.0;   // translation reflects at +/- this offset
    double rotation_step_deg = 12.0;  // classes 3, 4, 6, 7, 8
    double scale_min = 0.4;           // class 2 minimum, reached at frame 15
    double scale_max = 1.1;           // class 6 value at the final frame
    double circle_radius_min_px = 4.0;  // class 5
    double circle_radius_max_px = 8.0;
    double random_rotation_max_deg = 15.0;  // class 9 per-frame delta
    double random_translation_max_px = 2.0;
};

/// The parameters Table-1-style class motions are allowed to touch; all
/// other components stay at their identity values in every frame.
struct ClassParameterMask {
    bool uses_s = false;
    bool uses_r = false;
    bool uses_t_x = false;
    bool uses_t_y = false;
};

ClassParameterMask class_parameter_mask(int klass);

/// Builds the 30-frame cumulative transform sequence for a class, drawing
/// the class's randomized aspects (direction, velocity, radius, per-frame
/// deltas) from `rng`.
TrajectorySpec gen_trajectory(int klass, Rng& rng,
                              const TrajectoryConstants& constants = {});

/// Renders each frame by bilinearly warping the ORIGINAL digit under the
/// frame's cumulative transform (no chained resampling), rounding to bytes.
/// Content leaving the 28x28 frame is clipped.
VideoSample render_video(const DigitImage& digit, const TrajectorySpec& trajectory);

struct DatasetSplit {
    std::vector<VideoSample> train;
    std::vector<VideoSample> validation;
    std::vector<VideoSample> test;
};

/// Caps for subset generation (CI scale); negative means the full split.
struct GenerateOptions {
    std::int64_t max_train = -1;
    std::int64_t max_validation = -1;
    std::int64_t max_test = -1;
};

/// One video per MNIST digit. The train/validation/test membership follows
/// the original MNIST files: the last 5000 of the 60000 training digits (by
/// index) form the validation split, t10k is the test split. Each video's
/// trajectory seed is derive_seed(seed, split_tag, original_index), so
/// output bytes never depend on generation order.
DatasetSplit generate_dataset(const std::string& mnist_dir, std::uint64_t seed,
                              const GenerateOptions& options = {});

/// Streaming variant: writes train.vmnist / validation.vmnist / test.vmnist
/// into `out_dir` (atomically) without holding a split in memory. Produces
/// byte-identical files to write_dataset(generate_dataset(...)).
void generate_dataset_files(const std::string& mnist_dir, std::uint64_t seed,
                            const std::string& out_dir, const GenerateOptions& options = {});

/// Serialized split format (little-endian): magic "VMNIST01", u32 version,
/// u64 count, then per sample u8 label, u64 source_index, u64 seed,
/// 30*28*28 frame bytes. Round-trips byte-identically.
void write_dataset(const std::vector<VideoSample>& samples, const std::string& path);
std::vector<VideoSample> read_dataset(const std::string& path);

/// Random access over a split file; records have fixed stride.
class VmnistReader {
public:
    explicit VmnistReader(const std::string& path);
    std::int64_t count() const { return count_; }
    /// All labels, in file order.
    std::vector<std::uint8_t> labels() const;
    VideoSample sample(std::int64_t index) const;
    std::vector<VideoSample> samples(const std::vector<std::int64_t>& indices) const;

private:
    std::string path_;
    std::int64_t count_ = 0;
};

/// Class-balanced training selection: exactly n/10 indices per class, drawn
/// without replacement, deterministic per run_seed, returned in ascending
/// order. Rejects n not divisible by 10 or classes with too few videos.
std::vector<std::int64_t> select_training_indices(const std::vector<std::uint8_t>& labels,
                                                  std::int64_t n, std::uint64_t run_seed);

/// Same, materializing the chosen samples through a reader.
std::vector<VideoSample> select_training_videos(const VmnistReader& train, std::int64_t n,
                                                std::uint64_t run_seed);

/// Seed-tag constants shared by generation and the harness.
inline constexpr std::uint64_t kSplitTagTrain = 1;
inline constexpr std::uint64_t kSplitTagValidation = 2;
inline constexpr std::uint64_t kSplitTagTest = 3;

}  // namespace tfk3d
