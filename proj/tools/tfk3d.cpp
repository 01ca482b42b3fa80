// Command-line front end: dataset generation, training, evaluation,
// gradient checking, the replicated experiment matrix, and report emission.
// Every subcommand is a thin shell over the library calls.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tfk3d/gradcheck.hpp"
#include "tfk3d/harness.hpp"
#include "tfk3d/io.hpp"
#include "tfk3d/model.hpp"
#include "tfk3d/report.hpp"
#include "tfk3d/videomnist.hpp"

namespace {

namespace fs = std::filesystem;
using namespace tfk3d;

struct DataDirFlags {
    std::string data_dir;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--data-dir", data_dir,
                        "directory holding train/validation/test .vmnist files")
            ->envname("TFK3D_DATA_DIR");
    }

    std::string split_path(const char* split) const {
        if (data_dir.empty()) {
            throw std::runtime_error(
                "no dataset location: pass --data-dir or set TFK3D_DATA_DIR");
        }
        return (fs::path(data_dir) / (std::string(split) + ".vmnist")).string();
    }
};

struct ArchFlags {
    std::vector<std::int64_t> conv_filters{6, 16};
    std::string mode = "regular";

    void add_to(CLI::App* cmd, bool with_mode = true) {
        cmd->add_option("--conv-filters", conv_filters,
                        "filters per conv stage (sweepable; default 6,16)")
            ->delimiter(',');
        if (with_mode) {
            cmd->add_option("--mode", mode, "kernel kind: regular | ttperstep | ttshared");
        }
    }

    ModelConfig model_config(std::uint64_t seed = 0) const {
        ModelConfig config;
        config.conv_filters = conv_filters;
        config.kernel_shapes.assign(conv_filters.size(), Extent3{3, 5, 5});
        config.conv_mode = conv_mode_from_name(mode);
        config.seed = seed;
        return config;
    }
};

std::vector<VideoSample> load_subsampled(const VmnistReader& reader, std::int64_t n,
                                         std::uint64_t seed) {
    return reader.samples(subsample_indices(reader.count(), n, seed));
}

int cmd_gen_data(const std::string& mnist_dir, const std::string& out_dir, std::uint64_t seed,
                 std::int64_t max_train, std::int64_t max_val, std::int64_t max_test) {
    GenerateOptions options;
    options.max_train = max_train;
    options.max_validation = max_val;
    options.max_test = max_test;
    generate_dataset_files(mnist_dir, seed, out_dir, options);
    for (const char* split : {"train", "validation", "test"}) {
        VmnistReader reader((fs::path(out_dir) / (std::string(split) + ".vmnist")).string());
        std::printf("%s: %lld videos\n", split, static_cast<long long>(reader.count()));
    }
    return 0;
}

int cmd_gradcheck(const std::string& mode, std::int64_t t, std::uint64_t seed) {
    const GradCheckReport report = gradcheck_kernel(conv_mode_from_name(mode), t, seed);
    std::printf("gradcheck %s t=%lld: max relative error %.3e over %lld entries\n", mode.c_str(),
                static_cast<long long>(t), report.max_rel_error,
                static_cast<long long>(report.checked));
    return report.passed() ? 0 : 2;
}

int cmd_train(const DataDirFlags& data, const ArchFlags& arch, std::int64_t n_videos, double lr,
              double lr_decay, std::int64_t epochs, std::int64_t batch, std::uint64_t seed,
              std::int64_t val_subsample, const std::string& out_ckpt) {
    VmnistReader train_reader(data.split_path("train"));
    VmnistReader val_reader(data.split_path("validation"));

    const std::uint64_t run_seed = run_seed_for(seed, 0);
    const std::vector<VideoSample> train_videos = select_training_videos(
        train_reader, n_videos, derive_seed(run_seed, kSeedTagSelection));
    const std::vector<VideoSample> validation = load_subsampled(
        val_reader, val_subsample, derive_seed(seed, kSeedTagValSubsample));

    Model model = Model::build(arch.model_config(derive_seed(run_seed, kSeedTagWeights)));

    TrainConfig config;
    config.epochs = epochs;
    config.batch_size = batch;
    config.lr0 = lr;
    config.lr_decay = lr_decay;
    config.n_train_videos = n_videos;
    config.run_seed = run_seed;

    const RunResult result = train(model, train_videos, validation, config);
    if (result.aborted) {
        std::fprintf(stderr, "run aborted: %s\n", result.abort_reason.c_str());
        return 2;
    }
    std::printf("trained %s on %lld videos: best validation accuracy %.4f (%.1fs, %lld params)\n",
                arch.mode.c_str(), static_cast<long long>(n_videos),
                result.best_validation_accuracy, result.wall_seconds,
                static_cast<long long>(model.count_params()));
    if (!out_ckpt.empty()) {
        model.save_checkpoint(out_ckpt);
        std::printf("checkpoint written to %s\n", out_ckpt.c_str());
    }
    return 0;
}

int cmd_eval(const DataDirFlags& data, const ArchFlags& arch, const std::string& ckpt,
             const std::string& split, std::int64_t subsample, std::uint64_t seed) {
    Model model = Model::build(arch.model_config());
    model.load_checkpoint(ckpt);
    VmnistReader reader(data.split_path(split.c_str()));
    const std::vector<VideoSample> samples =
        load_subsampled(reader, subsample, derive_seed(seed, kSeedTagTestSubsample));
    std::printf("%s accuracy: %.4f (%zu videos)\n", split.c_str(),
                evaluate(model, samples), samples.size());
    return 0;
}

int cmd_experiment(const DataDirFlags& data, const ArchFlags& arch,
                   const std::vector<std::int64_t>& sizes, const std::vector<std::string>& kinds,
                   int runs, double lr, double lr_decay, std::int64_t epochs, std::int64_t batch,
                   std::uint64_t seed, std::int64_t test_subsample, std::int64_t val_subsample,
                   int threads, const std::string& out_csv) {
    VmnistReader train_reader(data.split_path("train"));
    const std::vector<std::uint8_t> train_labels = train_reader.labels();
    const std::vector<VideoSample> validation = read_dataset(data.split_path("validation"));
    const std::vector<VideoSample> test = read_dataset(data.split_path("test"));

    MatrixSpec spec;
    spec.sizes = sizes;
    spec.kinds.clear();
    for (const std::string& kind : kinds) spec.kinds.push_back(conv_mode_from_name(kind));
    spec.num_runs = runs;
    spec.base_seed = seed;
    if (lr > 0.0) spec.lr_grid = {lr};
    spec.base_model = arch.model_config();
    spec.base_train.epochs = epochs;
    spec.base_train.batch_size = batch;
    spec.base_train.lr_decay = lr_decay;
    spec.validation_subsample = val_subsample;
    spec.test_subsample = test_subsample;
    spec.threads = threads;

    ReplicationInputs inputs;
    inputs.train_reader = &train_reader;
    inputs.train_labels = &train_labels;
    inputs.validation = &validation;
    inputs.test = &test;

    const MatrixReport report = experiment_matrix(spec, inputs);
    write_results_csv(report, out_csv);
    for (const MatrixCell& cell : report.cells) {
        const ExperimentResult& r = cell.result;
        const std::string stderr_text =
            r.standard_error ? std::to_string(*r.standard_error) : "n/a";
        std::printf("%-10s n=%-5lld lr=%-8g mean acc %.4f stderr %s params %lld\n",
                    conv_mode_name(r.kind), static_cast<long long>(r.n_train_videos),
                    cell.chosen_lr, r.mean_accuracy, stderr_text.c_str(),
                    static_cast<long long>(r.model_parameters));
    }
    std::printf("results written to %s\n", out_csv.c_str());
    return 0;
}

int cmd_report(const std::string& in_csv, const std::string& out_prefix) {
    const ResultsCsv csv = read_results_csv(in_csv);
    const ReportData data = build_report(csv);
    write_report_files(data, out_prefix);
    std::printf("%s", render_table(data).c_str());
    std::printf("report files: %s.table.txt %s.aggregate.csv %s.svg\n", out_prefix.c_str(),
                out_prefix.c_str(), out_prefix.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporally factorized 3D convolution experiments"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "synthesize the video dataset from MNIST IDX files");
    std::string mnist_dir, out_dir;
    std::uint64_t gen_seed = 42;
    std::int64_t max_train = -1, max_val = -1, max_test = -1;
    gen->add_option("--mnist-dir", mnist_dir, "directory with the four MNIST IDX files")
        ->required();
    gen->add_option("--out", out_dir, "output directory for the .vmnist splits")->required();
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--max-train", max_train, "cap the train split (subset mode)");
    gen->add_option("--max-val", max_val, "cap the validation split (subset mode)");
    gen->add_option("--max-test", max_test, "cap the test split (subset mode)");

    // train
    auto* tr = app.add_subcommand("train", "train one model on a seeded video selection");
    DataDirFlags tr_data;
    ArchFlags tr_arch;
    std::int64_t tr_videos = 10, tr_epochs = 100, tr_batch = 0, tr_val_sub = 0;
    double tr_lr = 1e-2, tr_decay = 0.5;
    std::uint64_t tr_seed = 0;
    std::string tr_out;
    tr_data.add_to(tr);
    tr_arch.add_to(tr);
    tr->add_option("--train-videos", tr_videos, "training-set size (multiple of 10)");
    tr->add_option("--lr", tr_lr, "starting learning rate");
    tr->add_option("--lr-decay", tr_decay, "decay factor applied by the schedule");
    tr->add_option("--epochs", tr_epochs, "training epochs");
    tr->add_option("--batch", tr_batch, "batch size (0 = paper rule: min(20, n))");
    tr->add_option("--seed", tr_seed, "base seed");
    tr->add_option("--val-subsample", tr_val_sub, "validation subsample size (0 = full)");
    tr->add_option("--out", tr_out, "checkpoint output path");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    DataDirFlags ev_data;
    ArchFlags ev_arch;
    std::string ev_ckpt, ev_split = "test";
    std::int64_t ev_sub = 0;
    std::uint64_t ev_seed = 0;
    ev_data.add_to(ev);
    ev_arch.add_to(ev);
    ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
    ev->add_option("--split", ev_split, "train | validation | test")
        ->check(CLI::IsMember({"train", "validation", "test"}));
    ev->add_option("--test-subsample", ev_sub, "seeded subsample size (0 = full)");
    ev->add_option("--seed", ev_seed, "subsample seed");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    std::string gc_mode = "ttshared";
    std::int64_t gc_t = 3;
    std::uint64_t gc_seed = 1;
    gc->add_option("--mode", gc_mode, "regular | ttperstep | ttshared");
    gc->add_option("--t", gc_t, "temporal kernel extent")->check(CLI::Range(1, 16));
    gc->add_option("--seed", gc_seed, "random scenario seed");

    // experiment
    auto* ex = app.add_subcommand("experiment", "replicated training matrix over sizes and kinds");
    DataDirFlags ex_data;
    ArchFlags ex_arch;
    std::vector<std::int64_t> ex_sizes{10, 50};
    std::vector<std::string> ex_kinds{"regular", "ttshared"};
    int ex_runs = 5, ex_threads = 1;
    double ex_lr = 0.0, ex_decay = 0.5;
    std::int64_t ex_epochs = 100, ex_batch = 0, ex_test_sub = 0, ex_val_sub = 0;
    std::uint64_t ex_seed = 0;
    std::string ex_out;
    ex_data.add_to(ex);
    ex_arch.add_to(ex, /*with_mode=*/false);
    ex->add_option("--sizes", ex_sizes, "training-set sizes")->delimiter(',');
    ex->add_option("--kinds", ex_kinds, "model kinds to compare")->delimiter(',');
    ex->add_option("--runs", ex_runs, "replicated runs per cell");
    ex->add_option("--lr", ex_lr, "pin the learning rate (0 = search the default grid)");
    ex->add_option("--lr-decay", ex_decay, "schedule decay factor");
    ex->add_option("--epochs", ex_epochs, "training epochs");
    ex->add_option("--batch", ex_batch, "batch size (0 = paper rule)");
    ex->add_option("--seed", ex_seed, "base experiment seed");
    ex->add_option("--test-subsample", ex_test_sub, "test subsample size (0 = full)");
    ex->add_option("--val-subsample", ex_val_sub, "validation subsample size (0 = full)");
    ex->add_option("--threads", ex_threads, "max concurrent runs");
    ex->add_option("--out", ex_out, "results CSV path")->required();

    // report
    auto* rp = app.add_subcommand("report", "table + chart from a results CSV");
    std::string rp_in, rp_out;
    rp->add_option("--in", rp_in, "results CSV from the experiment subcommand")->required();
    rp->add_option("--out", rp_out, "output prefix for .table.txt/.aggregate.csv/.svg")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed())
            return cmd_gen_data(mnist_dir, out_dir, gen_seed, max_train, max_val, max_test);
        if (tr->parsed())
            return cmd_train(tr_data, tr_arch, tr_videos, tr_lr, tr_decay, tr_epochs, tr_batch,
                             tr_seed, tr_val_sub, tr_out);
        if (ev->parsed())
            return cmd_eval(ev_data, ev_arch, ev_ckpt, ev_split, ev_sub, ev_seed);
        if (gc->parsed()) return cmd_gradcheck(gc_mode, gc_t, gc_seed);
        if (ex->parsed())
            return cmd_experiment(ex_data, ex_arch, ex_sizes, ex_kinds, ex_runs, ex_lr, ex_decay,
                                  ex_epochs, ex_batch, ex_seed, ex_test_sub, ex_val_sub,
                                  ex_threads, ex_out);
        if (rp->parsed()) return cmd_report(rp_in, rp_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
