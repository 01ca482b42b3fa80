#include "tfk3d/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tfk3d/io.hpp"
#include "tfk3d/stats.hpp"

namespace tfk3d {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

[[noreturn]] void row_fail(const std::string& path, std::size_t row, const std::string& what) {
    throw std::runtime_error(path + ": row " + std::to_string(row) + ": " + what);
}

double parse_double(const std::string& s, const std::string& path, std::size_t row,
                    const char* field) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        row_fail(path, row, std::string("bad ") + field + " value \"" + s + "\"");
    }
}

std::int64_t parse_int(const std::string& s, const std::string& path, std::size_t row,
                       const char* field) {
    try {
        std::size_t used = 0;
        const std::int64_t v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        row_fail(path, row, std::string("bad ") + field + " value \"" + s + "\"");
    }
}

std::uint64_t parse_uint(const std::string& s, const std::string& path, std::size_t row,
                         const char* field) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        row_fail(path, row, std::string("bad ") + field + " value \"" + s + "\"");
    }
}

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

ResultsCsv read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open file");
    ResultsCsv csv;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || (row == 1 && line.rfind("row_type,", 0) == 0)) continue;
        const std::vector<std::string> f = split_fields(line);
        if (f.size() != 12) {
            row_fail(path, row, "expected 12 fields, got " + std::to_string(f.size()));
        }
        if (f[0] == "run") {
            RunRow r;
            r.model_kind = f[1];
            r.n_train_videos = parse_int(f[2], path, row, "n_train_videos");
            r.run_index = parse_int(f[3], path, row, "run_index");
            r.run_seed = parse_uint(f[4], path, row, "run_seed");
            r.best_val_acc = parse_double(f[5], path, row, "best_val_acc");
            if (!f[6].empty()) r.test_acc = parse_double(f[6], path, row, "test_acc");
            r.params = parse_int(f[7], path, row, "params");
            r.wall_seconds = f[8].empty() ? 0.0 : parse_double(f[8], path, row, "wall_seconds");
            csv.runs.push_back(std::move(r));
        } else if (f[0] == "aggregate") {
            AggregateRow a;
            a.model_kind = f[1];
            a.n_train_videos = parse_int(f[2], path, row, "n_train_videos");
            a.params = parse_int(f[7], path, row, "params");
            a.num_runs = f[9].empty() ? 0 : parse_int(f[9], path, row, "num_runs");
            a.mean_accuracy = parse_double(f[10], path, row, "mean_accuracy");
            if (!f[11].empty()) a.standard_error = parse_double(f[11], path, row, "standard_error");
            csv.aggregates.push_back(std::move(a));
        } else {
            row_fail(path, row, "unknown row_type \"" + f[0] + "\"");
        }
    }
    if (csv.runs.empty()) throw std::runtime_error(path + ": no run rows found");
    return csv;
}

ReportData build_report(const ResultsCsv& csv) {
    ReportData data;
    std::set<std::int64_t> sizes;
    std::vector<std::string> kinds;  // first-appearance order
    std::map<std::pair<std::string, std::int64_t>, std::vector<double>> accs;
    std::map<std::pair<std::string, std::int64_t>, std::int64_t> params;
    for (const RunRow& r : csv.runs) {
        sizes.insert(r.n_train_videos);
        if (std::find(kinds.begin(), kinds.end(), r.model_kind) == kinds.end()) {
            kinds.push_back(r.model_kind);
        }
        if (r.test_acc) accs[{r.model_kind, r.n_train_videos}].push_back(*r.test_acc);
        params[{r.model_kind, r.n_train_videos}] = r.params;
    }
    data.sizes.assign(sizes.begin(), sizes.end());

    for (const std::string& kind : kinds) {
        ReportSeries series;
        series.kind = kind;
        for (std::int64_t size : data.sizes) {
            const auto it = accs.find({kind, size});
            if (it == accs.end() || it->second.empty()) continue;
            ReportSeriesPoint point;
            point.n_train_videos = size;
            point.mean = mean(it->second);
            point.stderr_value = it->second.size() >= 2 ? standard_error(it->second) : 0.0;
            point.params = params[{kind, size}];
            series.points.push_back(point);
        }
        data.series.push_back(std::move(series));
    }

    // Cross-check against any aggregate rows present in the file.
    for (const AggregateRow& a : csv.aggregates) {
        for (const ReportSeries& series : data.series) {
            if (series.kind != a.model_kind) continue;
            for (const ReportSeriesPoint& p : series.points) {
                if (p.n_train_videos != a.n_train_videos) continue;
                if (std::fabs(p.mean - a.mean_accuracy) > 1e-9) {
                    throw std::runtime_error(
                        "aggregate row disagrees with run rows for kind " + a.model_kind +
                        " size " + std::to_string(a.n_train_videos) + ": " +
                        fmt(a.mean_accuracy, "%.12g") + " vs recomputed " + fmt(p.mean, "%.12g"));
                }
            }
        }
    }

    if (kinds.size() == 2) {
        for (std::int64_t size : data.sizes) {
            const auto a = accs.find({kinds[0], size});
            const auto b = accs.find({kinds[1], size});
            if (a == accs.end() || b == accs.end()) {
                data.significant.push_back(false);
                data.p_values.push_back(1.0);
                continue;
            }
            const WelchResult w = welch_t_test(a->second, b->second);
            data.p_values.push_back(w.p);
            data.significant.push_back(w.p < 0.05);
        }
    } else {
        data.significant.assign(data.sizes.size(), false);
        data.p_values.assign(data.sizes.size(), 1.0);
    }
    return data;
}

std::string render_table(const ReportData& data) {
    std::ostringstream out;
    out << "train_videos";
    for (const ReportSeries& s : data.series) {
        out << " | " << s.kind << ": mean acc, std err, params";
    }
    out << " | signif\n";
    for (std::size_t i = 0; i < data.sizes.size(); ++i) {
        const std::int64_t size = data.sizes[i];
        out << fmt(static_cast<double>(size), "%12.0f");
        for (const ReportSeries& s : data.series) {
            const auto it = std::find_if(s.points.begin(), s.points.end(),
                                         [&](const ReportSeriesPoint& p) {
                                             return p.n_train_videos == size;
                                         });
            if (it == s.points.end()) {
                out << " | (missing)";
            } else {
                out << " | " << fmt(it->mean, "%.3f") << ", " << fmt(it->stderr_value, "%.4f")
                    << ", " << it->params;
            }
        }
        out << " | " << (i < data.significant.size() && data.significant[i] ? "*" : "") << '\n';
    }
    return out.str();
}

std::string render_aggregate_csv(const ReportData& data) {
    std::ostringstream out;
    out << "model_kind,n_train_videos,mean_accuracy,standard_error,model_parameters,significant\n";
    for (const ReportSeries& s : data.series) {
        for (const ReportSeriesPoint& p : s.points) {
            const auto idx = std::find(data.sizes.begin(), data.sizes.end(), p.n_train_videos) -
                             data.sizes.begin();
            out << s.kind << ',' << p.n_train_videos << ',' << fmt(p.mean) << ','
                << fmt(p.stderr_value) << ',' << p.params << ','
                << (static_cast<std::size_t>(idx) < data.significant.size() &&
                            data.significant[static_cast<std::size_t>(idx)]
                        ? "*"
                        : "")
                << '\n';
        }
    }
    return out.str();
}

std::string render_svg(const ReportData& data) {
    constexpr double kWidth = 720, kHeight = 480;
    constexpr double kLeft = 70, kRight = 30, kTop = 40, kBottom = 60;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    double x_min = 1e300, x_max = -1e300;
    for (std::int64_t size : data.sizes) {
        x_min = std::min(x_min, std::log10(static_cast<double>(size)));
        x_max = std::max(x_max, std::log10(static_cast<double>(size)));
    }
    if (x_max <= x_min) x_max = x_min + 1.0;

    const auto x_of = [&](std::int64_t size) {
        return kLeft + (std::log10(static_cast<double>(size)) - x_min) / (x_max - x_min) * plot_w;
    };
    const auto y_of = [&](double acc) { return kTop + (1.0 - acc) * plot_h; };

    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Axes and gridlines.
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
        << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 10; ++i) {
        const double acc = i / 10.0;
        svg << "<line x1=\"" << kLeft << "\" y1=\"" << y_of(acc) << "\" x2=\"" << kLeft + plot_w
            << "\" y2=\"" << y_of(acc) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << y_of(acc) + 4
            << "\" text-anchor=\"end\" font-size=\"12\">" << fmt(acc, "%.1f") << "</text>\n";
    }
    for (std::int64_t size : data.sizes) {
        svg << "<text x=\"" << x_of(size) << "\" y=\"" << kTop + plot_h + 18
            << "\" text-anchor=\"middle\" font-size=\"12\">" << size << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 18
        << "\" text-anchor=\"middle\" font-size=\"13\">training videos</text>\n";
    svg << "<text x=\"18\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
        << kTop + plot_h / 2 << ")\">mean test accuracy</text>\n";

    for (std::size_t s = 0; s < data.series.size(); ++s) {
        const ReportSeries& series = data.series[s];
        const char* color = colors[s % 4];
        std::ostringstream pts;
        for (const ReportSeriesPoint& p : series.points) {
            pts << x_of(p.n_train_videos) << ',' << y_of(p.mean) << ' ';
        }
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
            << pts.str() << "\"/>\n";
        for (const ReportSeriesPoint& p : series.points) {
            const double x = x_of(p.n_train_videos);
            svg << "<line x1=\"" << x << "\" y1=\"" << y_of(p.mean - p.stderr_value) << "\" x2=\""
                << x << "\" y2=\"" << y_of(p.mean + p.stderr_value) << "\" stroke=\"" << color
                << "\" stroke-width=\"1.5\"/>\n";
            svg << "<circle cx=\"" << x << "\" cy=\"" << y_of(p.mean) << "\" r=\"3\" fill=\""
                << color << "\"/>\n";
        }
        svg << "<text x=\"" << kLeft + plot_w - 8 << "\" y=\"" << kTop + 16 + 16 * s
            << "\" text-anchor=\"end\" font-size=\"13\" fill=\"" << color << "\">" << series.kind
            << "</text>\n";
    }

    // Significance asterisks above the larger of the two means.
    for (std::size_t i = 0; i < data.sizes.size() && i < data.significant.size(); ++i) {
        if (!data.significant[i]) continue;
        double top = 1e300;
        for (const ReportSeries& series : data.series) {
            for (const ReportSeriesPoint& p : series.points) {
                if (p.n_train_videos == data.sizes[i])
                    top = std::min(top, y_of(p.mean + p.stderr_value));
            }
        }
        if (top > 1e299) continue;
        svg << "<text x=\"" << x_of(data.sizes[i]) << "\" y=\"" << top - 8
            << "\" text-anchor=\"middle\" font-size=\"16\">*</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_report_files(const ReportData& data, const std::string& prefix) {
    atomic_write(prefix + ".table.txt", [&](std::ostream& out) { out << render_table(data); });
    atomic_write(prefix + ".aggregate.csv",
                 [&](std::ostream& out) { out << render_aggregate_csv(data); });
    atomic_write(prefix + ".svg", [&](std::ostream& out) { out << render_svg(data); });
}

}  // namespace tfk3d
