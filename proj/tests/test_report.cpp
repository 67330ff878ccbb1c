#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "censrank/report.hpp"

using namespace censrank;

namespace {

ExperimentReport five_folds(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.5, 1.0);
    ExperimentReport r;
    r.dataset = "toy";
    r.loss = "wm";
    r.k = 5;
    for (int f = 0; f < 5; ++f)
        r.folds.push_back({.fold = f, .val_cindex = u(rng), .test_cindex = u(rng), .point = {1e-3, 1e-4},
                           .best_epoch = 3 + f, .epochs_run = 13 + f, .seconds = u(rng)});
    aggregate(r);
    return r;
}

std::vector<std::vector<std::string>> csv_cells(const std::string& text) {
    std::vector<std::vector<std::string>> out;
    for (auto& row : parse_csv(text)) out.push_back(row.fields);
    return out;
}

}  // namespace

TEST(ReportCsv, FoldRowsPlusMean) {
    const auto cells = csv_cells(render_report(five_folds(1), ReportFormat::csv));
    ASSERT_EQ(cells.size(), 7u);
    EXPECT_EQ(cells[0][0], "row");
    for (int f = 0; f < 5; ++f) EXPECT_EQ(cells[1 + f][0], std::to_string(f));
    EXPECT_EQ(cells[6][0], "mean");
    for (const auto& row : cells) EXPECT_EQ(row.size(), cells[0].size());
}

TEST(ReportCsv, EmptySweepIsHeaderOnly) {
    EXPECT_EQ(render_sweep({}, ReportFormat::csv), "fraction,mean,stderr\n");
    EXPECT_EQ(render_ablation({}, ReportFormat::csv), "loss,mode,mean,stderr\n");
}

TEST(ReportFormats, CsvAndJsonAgree) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = five_folds(seed);
        const auto cells = csv_cells(render_report(r, ReportFormat::csv));
        const auto j = nlohmann::json::parse(render_report(r, ReportFormat::json));
        for (int f = 0; f < 5; ++f) {
            EXPECT_NEAR(std::stod(cells[1 + f][1]), j["folds"][f]["test_cindex"].get<double>(), 1e-12);
            EXPECT_NEAR(std::stod(cells[1 + f][3]), j["folds"][f]["val_cindex"].get<double>(), 1e-12);
            EXPECT_EQ(std::stod(cells[1 + f][1]), r.folds[f].test_cindex);
        }
        EXPECT_NEAR(std::stod(cells[6][1]), j["mean"].get<double>(), 1e-12);
        EXPECT_NEAR(std::stod(cells[6][2]), j["stderr"].get<double>(), 1e-12);
    }
}

TEST(ReportFormats, SweepCsvAndJsonAgree) {
    std::vector<SweepRow> rows{{0.3, five_folds(3)}, {0.6, five_folds(4)}};
    const auto cells = csv_cells(render_sweep(rows, ReportFormat::csv));
    const auto j = nlohmann::json::parse(render_sweep(rows, ReportFormat::json));
    ASSERT_EQ(cells.size(), 3u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(std::stod(cells[1 + i][0]), j[i]["fraction"].get<double>());
        EXPECT_NEAR(std::stod(cells[1 + i][1]), j[i]["mean"].get<double>(), 1e-12);
        EXPECT_NEAR(std::stod(cells[1 + i][2]), j[i]["stderr"].get<double>(), 1e-12);
    }
}

TEST(ReportFormats, WallClockIsNotSerialized) {
    auto a = five_folds(5), b = five_folds(5);
    for (auto& f : b.folds) f.seconds += 100.0;
    EXPECT_EQ(render_report(a, ReportFormat::csv), render_report(b, ReportFormat::csv));
    EXPECT_EQ(render_report(a, ReportFormat::json), render_report(b, ReportFormat::json));
}

TEST(ReportFormats, ParseFormat) {
    EXPECT_EQ(parse_report_format("csv"), ReportFormat::csv);
    EXPECT_EQ(parse_report_format("json"), ReportFormat::json);
    EXPECT_THROW(parse_report_format("xml"), InvalidArgument);
}

TEST(FormatNumber, RoundTrips) {
    for (double v : {0.1, 0.85333, 1.0 / 3.0, 1e-4, 0.0})
        EXPECT_EQ(std::stod(format_number(v)), v);
}

TEST(WriteOutput, UnwritablePathIsIoError) {
    EXPECT_THROW(write_output("/nonexistent-dir/x/report.csv", "x"), IoError);
    const auto p = std::filesystem::temp_directory_path() / "censrank_report_test.csv";
    emit_report(five_folds(2), ReportFormat::csv, p.string());
    EXPECT_EQ(read_text_file(p.string()), render_report(five_folds(2), ReportFormat::csv));
    std::filesystem::remove(p);
}
