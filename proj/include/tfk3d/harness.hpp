#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tfk3d/model.hpp"
#include "tfk3d/videomnist.hpp"

namespace tfk3d {

/// Training protocol knobs. The batch size follows the paper's rule when
/// left at 0: 20 videos per batch, or 10 when training on only 10 videos
/// (generally min(20, n)). Subsampling sizes of 0 mean "use the full split".
struct TrainConfig {
    std::int64_t epochs = 100;
    std::int64_t batch_size = 0;  // 0 = min(20, n_train_videos)
    double momentum = 0.9;
    double lr0 = 0.0;  // must be set > 0
    double lr_decay = 0.5;
    std::int64_t patience_epochs = 10;  // schedule window length
    std::int64_t n_train_videos = 10;
    std::uint64_t run_seed = 0;

    std::int64_t effective_batch() const {
        return batch_size > 0 ? batch_size : std::min<std::int64_t>(20, n_train_videos);
    }
};

struct EpochStats {
    double train_loss = 0.0;     // mean per-sample loss over the epoch
    double val_accuracy = 0.0;
    double learning_rate = 0.0;  // value in effect after this epoch's schedule step
};

struct RunResult {
    std::uint64_t run_seed = 0;
    double initial_val_accuracy = 0.0;  // epoch-0 evaluation of the fresh model
    double best_validation_accuracy = 0.0;
    std::optional<double> test_accuracy;
    std::vector<EpochStats> epoch_curve;  // epochs 1..E
    double wall_seconds = 0.0;
    bool aborted = false;
    std::string abort_reason;
};

struct ExperimentResult {
    std::int64_t n_train_videos = 0;
    ConvMode kind = ConvMode::Regular3D;
    std::vector<RunResult> runs;
    double mean_accuracy = 0.0;
    std::optional<double> standard_error;  // absent with < 2 completed runs
    std::int64_t model_parameters = 0;
};

/// [1 x 30 x 28 x 28] input scaled to [0, 1].
Tensor video_to_tensor(const VideoSample& sample);

/// Fraction of argmax-correct predictions; argmax ties resolve to the
/// lowest class index.
double evaluate(const Model& model, const std::vector<VideoSample>& split);

/// Learning-rate schedule: at every patience-window boundary (epochs 10,
/// 20, ... for window 10), the rate decays by `decay` if the best
/// validation accuracy inside the window failed to beat the best seen
/// before it. `val_history` holds the epoch-0 accuracy at index 0 followed
/// by one entry per epoch. Never increases the rate.
double lr_schedule_step(std::int64_t epoch, const std::vector<double>& val_history, double lr,
                        double decay, std::int64_t window = 10);

/// Mini-batch SGD with momentum over the selected videos, tracking
/// validation accuracy per epoch and restoring the best-validation
/// parameters at the end. A non-finite loss aborts the run and flags the
/// result instead of throwing.
RunResult train(Model& model, const std::vector<VideoSample>& train_videos,
                const std::vector<VideoSample>& validation, const TrainConfig& config);

/// Seed tags for the independent streams hanging off one run seed.
inline constexpr std::uint64_t kSeedTagWeights = 0x77;    // model initialization
inline constexpr std::uint64_t kSeedTagSelection = 0x73;  // training-video choice
inline constexpr std::uint64_t kSeedTagShuffle = 0x68;    // epoch shuffling

/// The run seed of run `index` under a base seed. Shared by every model
/// kind so both see identical training videos per run.
std::uint64_t run_seed_for(std::uint64_t base_seed, int run_index);

struct ReplicationInputs {
    // Training videos come from exactly one of these: an in-memory pool or
    // a random-access file reader (labels are required either way).
    const std::vector<VideoSample>* train_pool = nullptr;
    const VmnistReader* train_reader = nullptr;
    const std::vector<std::uint8_t>* train_labels = nullptr;
    const std::vector<VideoSample>* validation = nullptr;
    const std::vector<VideoSample>* test = nullptr;  // may be null: skip test eval
};

/// Runs `num_runs` independent trainings. Run i derives its seed from the
/// base seed; video selection and weight initialization use separate
/// streams of it. Aborted runs are recorded, not dropped. `threads` caps
/// concurrent runs (each run is single-threaded).
std::vector<RunResult> run_replicated(const ModelConfig& model_config,
                                      const TrainConfig& train_config,
                                      const ReplicationInputs& data, int num_runs,
                                      std::uint64_t base_seed, int threads = 1);

/// Mean and standard error over the completed runs' test accuracies.
/// Rejects zero completed runs; the standard error is absent for one.
ExperimentResult aggregate(const std::vector<RunResult>& runs, ConvMode kind,
                           std::int64_t n_train_videos, std::int64_t model_parameters);

struct MatrixSpec {
    std::vector<std::int64_t> sizes{10, 20, 30, 40, 50, 100, 500, 1000, 2000, 5000};
    std::vector<ConvMode> kinds{ConvMode::Regular3D, ConvMode::TTShared};
    int num_runs = 30;
    std::uint64_t base_seed = 0;
    std::vector<double> lr_grid{1e-2, 1e-3, 1e-4};  // searched on validation
    ModelConfig base_model;
    TrainConfig base_train;
    std::int64_t validation_subsample = 0;  // 0 = full split
    std::int64_t test_subsample = 0;        // 0 = full split
    int threads = 1;
};

struct MatrixCell {
    ExperimentResult result;
    double chosen_lr = 0.0;
};

struct MatrixReport {
    MatrixSpec spec;
    std::vector<MatrixCell> cells;  // size-major, kind order per size
};

/// Per (size, kind): replicate over the lr grid, keep the configuration
/// with the highest mean best-validation accuracy, then aggregate its test
/// results. Cell failures propagate per-cell; the matrix completes.
MatrixReport experiment_matrix(const MatrixSpec& spec, const ReplicationInputs& data);

/// Deterministic seeded choice of n of `total` indices without
/// replacement, returned ascending. All of them when n <= 0 or n >= total.
std::vector<std::int64_t> subsample_indices(std::int64_t total, std::int64_t n,
                                            std::uint64_t seed);

/// Deterministic seeded subsample of a split (without replacement, stable
/// order). Returns the whole split when n <= 0 or n >= size.
std::vector<VideoSample> subsample_split(const std::vector<VideoSample>& split, std::int64_t n,
                                         std::uint64_t seed);

/// Seed tags used when an experiment subsamples validation/test once.
inline constexpr std::uint64_t kSeedTagValSubsample = 0x76616c;   // "val"
inline constexpr std::uint64_t kSeedTagTestSubsample = 0x747374;  // "tst"

/// Canonical text form of a report with every deterministic field (wall
/// times excluded); equal strings mean equal results.
std::string canonical_string(const MatrixReport& report);

/// Unified results CSV (run rows + aggregate rows, see row_type column).
void write_results_csv(const MatrixReport& report, const std::string& path);

}  // namespace tfk3d
