#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "censrank/error.hpp"

namespace censrank {

/// One right-censored observation. `time` is in days; `observed` is false
/// when the record is censored at `time`.
struct SurvivalRecord {
    std::vector<double> features;
    double time = 0.0;
    bool observed = true;
};

/// Uniform discretization of the time axis. Bin k covers the left-closed,
/// right-open interval [origin + k*width, origin + (k+1)*width).
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double bin_width, int num_bins, double origin = 0.0)
        : bin_width_(bin_width), num_bins_(num_bins), origin_(origin) {
        if (!(bin_width > 0.0) || !std::isfinite(bin_width))
            throw InvalidArgument("TimeGrid: bin_width must be positive and finite");
        if (num_bins < 1) throw InvalidArgument("TimeGrid: num_bins must be >= 1");
        if (!std::isfinite(origin)) throw InvalidArgument("TimeGrid: origin must be finite");
    }

    double bin_width() const { return bin_width_; }
    int num_bins() const { return num_bins_; }
    double origin() const { return origin_; }

    double left_edge(int bin) const { return origin_ + bin * bin_width_; }

    /// Unclamped bin position; may fall outside [0, T-1].
    long long raw_index(double time) const {
        return static_cast<long long>(std::floor((time - origin_) / bin_width_));
    }

    bool contains(double time) const {
        const auto k = raw_index(time);
        return k >= 0 && k < num_bins_;
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double bin_width_ = 1.0;
    int num_bins_ = 1;
    double origin_ = 0.0;
};

/// Records sharing one time grid. All records must carry the same feature count.
struct Dataset {
    std::vector<SurvivalRecord> records;
    TimeGrid grid;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    std::size_t num_features() const { return records.empty() ? 0 : records.front().features.size(); }

    std::size_t num_observed() const {
        return static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [](const auto& r) { return r.observed; }));
    }
};

inline void validate_record(const SurvivalRecord& r) {
    if (!std::isfinite(r.time) || r.time < 0.0)
        throw InvalidArgument("record time must be finite and >= 0, got " + std::to_string(r.time));
}

/// Checks the dataset invariants: finite non-negative times, uniform feature
/// width and, when `require_fit`, that every time maps into the grid without clamping.
inline void validate_dataset(const Dataset& d, bool require_fit = true) {
    const auto width = d.num_features();
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        const auto& r = d.records[i];
        validate_record(r);
        if (r.features.size() != width)
            throw InvalidArgument("record " + std::to_string(i) + " has " + std::to_string(r.features.size()) +
                                  " features, expected " + std::to_string(width));
        if (require_fit && !d.grid.contains(r.time))
            throw InvalidArgument("record " + std::to_string(i) + " time " + std::to_string(r.time) +
                                  " lies outside the time grid");
    }
}

inline TimeGrid build_time_grid(std::span<const double> times, double bin_width) {
    if (times.empty()) throw InvalidArgument("build_time_grid: no times given");
    if (!(bin_width > 0.0) || !std::isfinite(bin_width))
        throw InvalidArgument("build_time_grid: bin_width must be positive");
    double max_time = 0.0;
    for (double t : times) {
        if (!std::isfinite(t) || t < 0.0) throw InvalidArgument("build_time_grid: times must be finite and >= 0");
        max_time = std::max(max_time, t);
    }
    const double bins = std::floor(max_time / bin_width) + 1.0;
    if (bins > 1e8) throw InvalidArgument("build_time_grid: grid would exceed 1e8 bins");
    return TimeGrid(bin_width, static_cast<int>(bins));
}

inline TimeGrid build_time_grid(const std::vector<SurvivalRecord>& records, double bin_width) {
    std::vector<double> times;
    times.reserve(records.size());
    for (const auto& r : records) times.push_back(r.time);
    return build_time_grid(times, bin_width);
}

/// floor((time - origin) / width) clamped to [0, T-1]. Clamping is meant for
/// held-out records whose time exceeds the training horizon.
inline int bin_index(const TimeGrid& grid, double time) {
    if (!(time >= 0.0)) throw InvalidArgument("bin_index: negative or NaN time");
    const auto k = grid.raw_index(time);
    return static_cast<int>(std::clamp<long long>(k, 0, grid.num_bins() - 1));
}

inline std::vector<int> bin_indices(const Dataset& d) {
    std::vector<int> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = bin_index(d.grid, d.records[i].time);
    return out;
}

/// Row-major copy of the features of `rows` (all rows when empty).
inline Eigen::MatrixXd feature_matrix(const Dataset& d, std::span<const std::size_t> rows = {}) {
    const std::size_t n = rows.empty() ? d.size() : rows.size();
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d.num_features()));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& f = d.records[rows.empty() ? i : rows[i]].features;
        for (std::size_t j = 0; j < f.size(); ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
    }
    return x;
}

/// Sub-dataset sharing the parent grid.
inline Dataset subset(const Dataset& d, std::span<const std::size_t> rows) {
    Dataset out;
    out.grid = d.grid;
    out.records.reserve(rows.size());
    for (auto i : rows) out.records.push_back(d.records.at(i));
    return out;
}

/// Integer censoring flag: 1 = observed, 0 = censored.
inline int censor_flag(const SurvivalRecord& r) { return r.observed ? 1 : 0; }

}  // namespace censrank
