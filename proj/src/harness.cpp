#include "tfk3d/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

#include "tfk3d/io.hpp"
#include "tfk3d/ops.hpp"
#include "tfk3d/optim.hpp"
#include "tfk3d/rng.hpp"
#include "tfk3d/stats.hpp"

namespace tfk3d {

Tensor video_to_tensor(const VideoSample& sample) {
    if (static_cast<std::int64_t>(sample.frames.size()) != kVideoBytes) {
        detail::fail("video payload must be " + std::to_string(kVideoBytes) + " bytes, got " +
                     std::to_string(sample.frames.size()));
    }
    Tensor t = Tensor::zeros({1, kFramesPerVideo, kFrameSize, kFrameSize});
    double* out = t.data();
    for (std::int64_t i = 0; i < kVideoBytes; ++i)
        out[i] = static_cast<double>(sample.frames[static_cast<std::size_t>(i)]) / 255.0;
    return t;
}

double evaluate(const Model& model, const std::vector<VideoSample>& split) {
    if (split.empty()) detail::fail("evaluate on an empty split");
    std::int64_t correct = 0;
    Tape tape;
    tape.set_enabled(false);
    for (const VideoSample& sample : split) {
        const Tensor logits = model.forward(tape, video_to_tensor(sample));
        std::int64_t argmax = 0;
        for (std::int64_t k = 1; k < logits.size(); ++k) {
            if (logits.at(k) > logits.at(argmax)) argmax = k;  // ties keep the lowest index
        }
        if (argmax == static_cast<std::int64_t>(sample.label)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(split.size());
}

double lr_schedule_step(std::int64_t epoch, const std::vector<double>& val_history, double lr,
                        double decay, std::int64_t window) {
    if (epoch < 1) detail::fail("lr schedule epoch must be >= 1");
    if (window < 1) detail::fail("lr schedule window must be >= 1");
    if (epoch % window != 0) return lr;
    if (static_cast<std::int64_t>(val_history.size()) < epoch + 1) {
        detail::fail("lr schedule needs the epoch-0 entry plus one per epoch; got " +
                     std::to_string(val_history.size()) + " entries at epoch " +
                     std::to_string(epoch));
    }
    const auto begin = val_history.begin();
    const double best_before = *std::max_element(begin, begin + (epoch - window + 1));
    const double best_window =
        *std::max_element(begin + (epoch - window + 1), begin + (epoch + 1));
    return best_window <= best_before ? lr * decay : lr;
}

RunResult train(Model& model, const std::vector<VideoSample>& train_videos,
                const std::vector<VideoSample>& validation, const TrainConfig& config) {
    if (config.lr0 < 0.0) detail::fail("train requires lr0 >= 0");
    if (config.epochs < 1) detail::fail("train requires epochs >= 1");
    if (train_videos.empty()) detail::fail("train requires a non-empty training set");
    const std::int64_t batch = config.effective_batch();
    if (batch > static_cast<std::int64_t>(train_videos.size())) {
        detail::fail("batch size " + std::to_string(batch) + " exceeds training set of " +
                     std::to_string(train_videos.size()));
    }

    const auto start = std::chrono::steady_clock::now();
    RunResult result;
    result.run_seed = config.run_seed;

    SgdMomentum opt(model.parameter_tensors(), config.lr0, config.momentum);
    double lr = config.lr0;

    result.initial_val_accuracy = evaluate(model, validation);
    std::vector<double> val_history{result.initial_val_accuracy};
    result.best_validation_accuracy = result.initial_val_accuracy;
    std::vector<std::vector<double>> best_params = model.snapshot();

    std::vector<std::size_t> order(train_videos.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(config.run_seed, kSeedTagShuffle));

    // Inputs are fixed per run; decode the bytes once.
    std::vector<Tensor> inputs;
    inputs.reserve(train_videos.size());
    for (const VideoSample& v : train_videos) inputs.push_back(video_to_tensor(v));

    for (std::int64_t epoch = 1; epoch <= config.epochs && !result.aborted; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t base = 0; base < order.size(); base += static_cast<std::size_t>(batch)) {
            const std::size_t limit = std::min(order.size(), base + static_cast<std::size_t>(batch));
            opt.zero_grad();
            for (std::size_t i = base; i < limit; ++i) {
                const std::size_t idx = order[i];
                Tape tape;
                const Tensor logits = model.forward(tape, inputs[idx]);
                const Tensor loss = softmax_cross_entropy(
                    tape, logits, static_cast<std::int64_t>(train_videos[idx].label));
                const double value = loss.item();
                if (!std::isfinite(value)) {
                    result.aborted = true;
                    result.abort_reason = "non-finite loss at epoch " + std::to_string(epoch);
                    break;
                }
                epoch_loss += value;
                tape.backward(loss, /*accumulate=*/true);
            }
            if (result.aborted) break;
            opt.scale_grads(1.0 / static_cast<double>(limit - base));
            opt.step();
        }
        if (result.aborted) break;

        const double val_acc = evaluate(model, validation);
        val_history.push_back(val_acc);
        if (val_acc > result.best_validation_accuracy) {
            result.best_validation_accuracy = val_acc;
            best_params = model.snapshot();
        }
        lr = lr_schedule_step(epoch, val_history, lr, config.lr_decay, config.patience_epochs);
        opt.set_learning_rate(lr);
        result.epoch_curve.push_back(
            {epoch_loss / static_cast<double>(train_videos.size()), val_acc, lr});
    }

    model.restore(best_params);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::uint64_t run_seed_for(std::uint64_t base_seed, int run_index) {
    return derive_seed(base_seed, 0x72756e /* "run" */, static_cast<std::uint64_t>(run_index));
}

std::vector<RunResult> run_replicated(const ModelConfig& model_config,
                                      const TrainConfig& train_config,
                                      const ReplicationInputs& data, int num_runs,
                                      std::uint64_t base_seed, int threads) {
    if ((!data.train_pool && !data.train_reader) || !data.train_labels || !data.validation) {
        detail::fail("run_replicated needs a train pool or reader, labels, and validation");
    }
    if (num_runs < 1) detail::fail("run_replicated needs num_runs >= 1");

    std::vector<RunResult> results(static_cast<std::size_t>(num_runs));
    std::atomic<int> next{0};

    auto worker = [&]() {
        while (true) {
            const int run = next.fetch_add(1);
            if (run >= num_runs) return;
            const std::uint64_t run_seed = run_seed_for(base_seed, run);

            const std::vector<std::int64_t> chosen = select_training_indices(
                *data.train_labels, train_config.n_train_videos,
                derive_seed(run_seed, kSeedTagSelection));
            std::vector<VideoSample> train_videos;
            if (data.train_pool) {
                train_videos.reserve(chosen.size());
                for (std::int64_t idx : chosen)
                    train_videos.push_back((*data.train_pool)[static_cast<std::size_t>(idx)]);
            } else {
                train_videos = data.train_reader->samples(chosen);
            }

            ModelConfig mc = model_config;
            mc.seed = derive_seed(run_seed, kSeedTagWeights);
            Model model = Model::build(mc);

            TrainConfig tc = train_config;
            tc.run_seed = run_seed;
            RunResult result = train(model, train_videos, *data.validation, tc);
            if (!result.aborted && data.test && !data.test->empty()) {
                result.test_accuracy = evaluate(model, *data.test);
            }
            results[static_cast<std::size_t>(run)] = std::move(result);
        }
    };

    const int pool = std::max(1, std::min(threads, num_runs));
    if (pool == 1) {
        worker();
    } else {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(pool));
        for (int i = 0; i < pool; ++i) workers.emplace_back(worker);
        for (std::thread& w : workers) w.join();
    }
    return results;
}

ExperimentResult aggregate(const std::vector<RunResult>& runs, ConvMode kind,
                           std::int64_t n_train_videos, std::int64_t model_parameters) {
    ExperimentResult result;
    result.n_train_videos = n_train_videos;
    result.kind = kind;
    result.runs = runs;
    result.model_parameters = model_parameters;

    std::vector<double> accuracies;
    for (const RunResult& run : runs) {
        if (!run.aborted && run.test_accuracy) accuracies.push_back(*run.test_accuracy);
    }
    if (accuracies.empty()) {
        detail::fail("aggregate: no completed runs with a test accuracy");
    }
    result.mean_accuracy = mean(accuracies);
    if (accuracies.size() >= 2) result.standard_error = standard_error(accuracies);
    return result;
}

std::vector<std::int64_t> subsample_indices(std::int64_t total, std::int64_t n,
                                            std::uint64_t seed) {
    std::vector<std::int64_t> indices(static_cast<std::size_t>(total));
    std::iota(indices.begin(), indices.end(), 0);
    if (n <= 0 || n >= total) return indices;
    Rng rng(seed);
    // Partial Fisher-Yates: the first n slots end up uniformly chosen.
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t j =
            i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total - i)));
        std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(j)]);
    }
    indices.resize(static_cast<std::size_t>(n));
    std::sort(indices.begin(), indices.end());
    return indices;
}

std::vector<VideoSample> subsample_split(const std::vector<VideoSample>& split, std::int64_t n,
                                         std::uint64_t seed) {
    if (n <= 0 || n >= static_cast<std::int64_t>(split.size())) return split;
    std::vector<VideoSample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t idx : subsample_indices(static_cast<std::int64_t>(split.size()), n, seed))
        out.push_back(split[static_cast<std::size_t>(idx)]);
    return out;
}

MatrixReport experiment_matrix(const MatrixSpec& spec, const ReplicationInputs& data) {
    if (spec.lr_grid.empty()) detail::fail("experiment_matrix needs a non-empty lr grid");
    MatrixReport report;
    report.spec = spec;

    const std::vector<VideoSample> validation =
        subsample_split(*data.validation, spec.validation_subsample,
                        derive_seed(spec.base_seed, kSeedTagValSubsample));
    std::vector<VideoSample> test;
    if (data.test) {
        test = subsample_split(*data.test, spec.test_subsample,
                               derive_seed(spec.base_seed, kSeedTagTestSubsample));
    }
    ReplicationInputs inner = data;
    inner.validation = &validation;
    inner.test = data.test ? &test : nullptr;

    for (std::int64_t size : spec.sizes) {
        for (ConvMode kind : spec.kinds) {
            ModelConfig mc = spec.base_model;
            mc.conv_mode = kind;
            TrainConfig tc = spec.base_train;
            tc.n_train_videos = size;

            double best_mean_val = -1.0, chosen_lr = spec.lr_grid.front();
            std::vector<RunResult> chosen_runs;
            for (double lr : spec.lr_grid) {
                TrainConfig lr_tc = tc;
                lr_tc.lr0 = lr;
                std::vector<RunResult> runs = run_replicated(mc, lr_tc, inner, spec.num_runs,
                                                             spec.base_seed, spec.threads);
                std::vector<double> vals;
                for (const RunResult& r : runs)
                    if (!r.aborted) vals.push_back(r.best_validation_accuracy);
                const double mean_val = vals.empty() ? -1.0 : mean(vals);
                if (mean_val > best_mean_val) {
                    best_mean_val = mean_val;
                    chosen_lr = lr;
                    chosen_runs = std::move(runs);
                }
            }

            MatrixCell cell;
            cell.chosen_lr = chosen_lr;
            cell.result = aggregate(chosen_runs, kind, size, Model::build(mc).count_params());
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string canonical_string(const MatrixReport& report) {
    std::ostringstream out;
    for (const MatrixCell& cell : report.cells) {
        const ExperimentResult& r = cell.result;
        out << conv_mode_name(r.kind) << ',' << r.n_train_videos << ",lr=" << fmt_double(cell.chosen_lr)
            << ",mean=" << fmt_double(r.mean_accuracy)
            << ",stderr=" << (r.standard_error ? fmt_double(*r.standard_error) : "none")
            << ",params=" << r.model_parameters << '\n';
        for (std::size_t i = 0; i < r.runs.size(); ++i) {
            const RunResult& run = r.runs[i];
            out << "  run" << i << ",seed=" << run.run_seed << ",init="
                << fmt_double(run.initial_val_accuracy)
                << ",best_val=" << fmt_double(run.best_validation_accuracy) << ",test="
                << (run.test_accuracy ? fmt_double(*run.test_accuracy) : "none")
                << ",aborted=" << (run.aborted ? 1 : 0) << '\n';
        }
    }
    return out.str();
}

void write_results_csv(const MatrixReport& report, const std::string& path) {
    atomic_write(path, [&](std::ostream& out) {
        out << "row_type,model_kind,n_train_videos,run_index,run_seed,best_val_acc,test_acc,"
               "params,wall_seconds,num_runs,mean_accuracy,standard_error\n";
        for (const MatrixCell& cell : report.cells) {
            const ExperimentResult& r = cell.result;
            for (std::size_t i = 0; i < r.runs.size(); ++i) {
                const RunResult& run = r.runs[i];
                out << "run," << conv_mode_name(r.kind) << ',' << r.n_train_videos << ',' << i
                    << ',' << run.run_seed << ',' << fmt_double(run.best_validation_accuracy)
                    << ',' << (run.test_accuracy ? fmt_double(*run.test_accuracy) : "") << ','
                    << r.model_parameters << ',' << fmt_double(run.wall_seconds) << ",,,\n";
            }
            std::size_t completed = 0;
            for (const RunResult& run : r.runs)
                if (!run.aborted && run.test_accuracy) ++completed;
            out << "aggregate," << conv_mode_name(r.kind) << ',' << r.n_train_videos << ",,,,,"
                << r.model_parameters << ",," << completed << ',' << fmt_double(r.mean_accuracy)
                << ',' << (r.standard_error ? fmt_double(*r.standard_error) : "") << '\n';
        }
    });
}

}  // namespace tfk3d
