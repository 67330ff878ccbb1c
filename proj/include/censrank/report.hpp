#pragma once

#include <charconv>
#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "censrank/harness.hpp"

namespace censrank {

enum class ReportFormat { csv, json };

inline ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    throw InvalidArgument("unknown report format '" + std::string(s) + "'");
}

/// Shortest round-trip decimal form.
inline std::string format_number(double v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

// Fold report CSV: one row per fold, then one `mean` row.
//   row,test_cindex,stderr,val_cindex,learning_rate,l2,best_epoch,epochs_run
inline void write_report_csv(std::ostream& os, const ExperimentReport& r) {
    os << "row,test_cindex,stderr,val_cindex,learning_rate,l2,best_epoch,epochs_run\n";
    for (const auto& f : r.folds)
        os << f.fold << ',' << format_number(f.test_cindex) << ",," << format_number(f.val_cindex) << ','
           << format_number(f.point.learning_rate) << ',' << format_number(f.point.l2) << ',' << f.best_epoch << ','
           << f.epochs_run << '\n';
    if (!r.folds.empty()) os << "mean," << format_number(r.mean) << ',' << format_number(r.std_error) << ",,,,,\n";
}

inline nlohmann::json report_json(const ExperimentReport& r) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.folds)
        folds.push_back({{"fold", f.fold},
                         {"test_cindex", f.test_cindex},
                         {"val_cindex", f.val_cindex},
                         {"learning_rate", f.point.learning_rate},
                         {"l2", f.point.l2},
                         {"best_epoch", f.best_epoch},
                         {"epochs_run", f.epochs_run}});
    nlohmann::json j = {{"dataset", r.dataset}, {"loss", r.loss},   {"mode", r.mode},
                        {"k", r.k},             {"folds", folds},   {"mean", r.mean},
                        {"stderr", r.std_error}};
    if (r.censor_fraction) j["censor_fraction"] = *r.censor_fraction;
    return j;
}

// Ablation CSV: loss,mode,mean,stderr
inline void write_ablation_csv(std::ostream& os, const std::vector<AblationRow>& rows) {
    os << "loss,mode,mean,stderr\n";
    for (const auto& r : rows)
        os << r.loss << ',' << r.mode << ',' << format_number(r.report.mean) << ',' << format_number(r.report.std_error)
           << '\n';
}

inline nlohmann::json ablation_json(const std::vector<AblationRow>& rows) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) j.push_back(report_json(r.report));
    return j;
}

// Sweep CSV (plot data): fraction,mean,stderr
inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "fraction,mean,stderr\n";
    for (const auto& r : rows)
        os << format_number(r.fraction) << ',' << format_number(r.report.mean) << ','
           << format_number(r.report.std_error) << '\n';
}

inline nlohmann::json sweep_json(const std::vector<SweepRow>& rows) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
        auto e = report_json(r.report);
        e["fraction"] = r.fraction;
        j.push_back(std::move(e));
    }
    return j;
}

template <class Rows, class CsvWriter, class JsonBuilder>
std::string render(const Rows& rows, ReportFormat fmt, CsvWriter csv, JsonBuilder json) {
    std::ostringstream os;
    if (fmt == ReportFormat::csv) csv(os, rows);
    else os << json(rows).dump(2) << '\n';
    return os.str();
}

inline std::string render_report(const ExperimentReport& r, ReportFormat fmt) {
    return render(r, fmt, write_report_csv, report_json);
}
inline std::string render_ablation(const std::vector<AblationRow>& rows, ReportFormat fmt) {
    return render(rows, fmt, write_ablation_csv, ablation_json);
}
inline std::string render_sweep(const std::vector<SweepRow>& rows, ReportFormat fmt) {
    return render(rows, fmt, write_sweep_csv, sweep_json);
}

/// Writes `content` to `path`, or to stdout when path is empty or "-".
inline void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path + "'");
    f << content;
    if (!f) throw IoError("write failed for '" + path + "'");
}

inline void emit_report(const ExperimentReport& r, ReportFormat fmt, const std::string& path) {
    write_output(path, render_report(r, fmt));
}

}  // namespace censrank
