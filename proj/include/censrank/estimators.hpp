#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "censrank/core.hpp"

namespace censrank {

/// Product-limit survival estimate on grid bins. `survival[k]` is the value of
/// S at the right edge of bin k; `at_risk[k]` counts records whose binned time
/// is >= k, `event_counts[k]` the observed events falling in bin k.
struct KaplanMeierCurve {
    TimeGrid grid;
    std::vector<double> survival;
    std::vector<long> event_counts;
    std::vector<long> at_risk;
};

inline KaplanMeierCurve kaplan_meier(const Dataset& data) {
    if (data.empty()) throw InvalidArgument("kaplan_meier: empty dataset");
    const int T = data.grid.num_bins();
    KaplanMeierCurve km;
    km.grid = data.grid;
    km.survival.assign(T, 1.0);
    km.event_counts.assign(T, 0);
    km.at_risk.assign(T, 0);

    std::vector<long> leaving(T, 0);
    for (const auto& r : data.records) {
        const int k = bin_index(data.grid, r.time);
        ++leaving[k];
        if (r.observed) ++km.event_counts[k];
    }
    // Until a censored record has left the risk set the product telescopes to
    // (n_k - d_k) / N, which is evaluated directly so uncensored data gives
    // the empirical survival fraction exactly.
    const auto total = static_cast<double>(data.size());
    long remaining = static_cast<long>(data.size());
    bool censored_left = false;
    double s = 1.0;
    for (int k = 0; k < T; ++k) {
        km.at_risk[k] = remaining;
        const long d = km.event_counts[k];
        if (!censored_left) s = static_cast<double>(remaining - d) / total;
        else if (d > 0) s *= 1.0 - static_cast<double>(d) / static_cast<double>(remaining);
        km.survival[k] = s;
        remaining -= leaving[k];
        if (leaving[k] > d) censored_left = true;
    }
    return km;
}

enum class ImputeMode { conditional, global };

inline ImputeMode parse_impute_mode(std::string_view s) {
    if (s == "conditional") return ImputeMode::conditional;
    if (s == "global") return ImputeMode::global;
    throw InvalidArgument("unknown imputation mode '" + std::string(s) + "'");
}

inline const char* to_string(ImputeMode m) { return m == ImputeMode::conditional ? "conditional" : "global"; }

/// Target CDF z over the grid. For observed records this is the step at the
/// event bin; censored records get a KM-derived tail after the censoring bin.
struct TargetDistribution {
    std::vector<double> cdf;
    bool is_imputed = false;
};

inline TargetDistribution impute_target_cdf(const SurvivalRecord& record, const KaplanMeierCurve& km,
                                            ImputeMode mode = ImputeMode::conditional) {
    const int T = km.grid.num_bins();
    const int k = bin_index(km.grid, record.time);
    TargetDistribution out;
    out.cdf.assign(T, 0.0);
    if (record.observed) {
        for (int t = k; t < T; ++t) out.cdf[t] = 1.0;
        return out;
    }
    out.is_imputed = true;
    if (mode == ImputeMode::global) {
        double running = 0.0;
        for (int t = k + 1; t < T; ++t) {
            running = std::max(running, 1.0 - km.survival[t]);
            out.cdf[t] = running;
        }
    } else {
        const double base = km.survival[k];
        for (int t = k + 1; t < T; ++t)
            out.cdf[t] = base > 0.0 ? std::clamp(1.0 - km.survival[t] / base, 0.0, 1.0) : 1.0;
    }
    return out;
}

inline std::vector<TargetDistribution> impute_targets(const Dataset& data, const KaplanMeierCurve& km,
                                                      ImputeMode mode) {
    std::vector<TargetDistribution> out;
    out.reserve(data.size());
    for (const auto& r : data.records) out.push_back(impute_target_cdf(r, km, mode));
    return out;
}

}  // namespace censrank
