#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tfk3d {

struct RunRow {
    std::string model_kind;
    std::int64_t n_train_videos = 0;
    std::int64_t run_index = 0;
    std::uint64_t run_seed = 0;
    double best_val_acc = 0.0;
    std::optional<double> test_acc;
    std::int64_t params = 0;
    double wall_seconds = 0.0;
};

struct AggregateRow {
    std::string model_kind;
    std::int64_t n_train_videos = 0;
    std::int64_t num_runs = 0;
    double mean_accuracy = 0.0;
    std::optional<double> standard_error;
    std::int64_t params = 0;
};

struct ResultsCsv {
    std::vector<RunRow> runs;
    std::vector<AggregateRow> aggregates;
};

/// Parses the unified results CSV (run + aggregate rows). Malformed rows
/// are rejected with their 1-based row number.
ResultsCsv read_results_csv(const std::string& path);

/// One (size, kind) summary in the final report.
struct ReportSeriesPoint {
    std::int64_t n_train_videos = 0;
    double mean = 0.0;
    double stderr_value = 0.0;
    std::int64_t params = 0;
};

struct ReportSeries {
    std::string kind;
    std::vector<ReportSeriesPoint> points;  // ascending by size
};

struct ReportData {
    std::vector<std::int64_t> sizes;
    std::vector<ReportSeries> series;
    /// Per size: true when a Welch two-sample t-test over the two kinds'
    /// per-run test accuracies gives p < 0.05 (only filled with exactly two
    /// kinds present).
    std::vector<bool> significant;
    std::vector<double> p_values;
};

/// Summarizes the CSV: means and standard errors are recomputed from the
/// run rows (aggregate rows, when present, are cross-checked).
ReportData build_report(const ResultsCsv& csv);

/// Plain-text results table, one row per training-set size.
std::string render_table(const ReportData& data);

/// Aggregate CSV mirroring the table.
std::string render_aggregate_csv(const ReportData& data);

/// Self-contained SVG line chart: mean accuracy vs training-set size with
/// standard-error bars, one series per kind, asterisks where the
/// difference is significant.
std::string render_svg(const ReportData& data);

/// Writes <prefix>.table.txt, <prefix>.aggregate.csv and <prefix>.svg.
void write_report_files(const ReportData& data, const std::string& prefix);

}  // namespace tfk3d
