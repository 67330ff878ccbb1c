#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "censrank/core.hpp"
#include "censrank/rng.hpp"

namespace censrank {

/// Ordered pairs (i, j) where i is observed and time(j) > time(i).
struct AcceptablePairSet {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
};

/// Lexicographic enumeration; O(n^2).
inline AcceptablePairSet acceptable_pairs(const Dataset& data) {
    AcceptablePairSet out;
    const auto& r = data.records;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!r[i].observed) continue;
        for (std::size_t j = 0; j < r.size(); ++j)
            if (r[j].time > r[i].time) out.pairs.emplace_back(i, j);
    }
    return out;
}

struct ConcordanceCounts {
    std::int64_t concordant = 0;
    std::int64_t tied = 0;
    std::int64_t total = 0;

    double value() const {
        if (total == 0) throw UndefinedMetric("c-index undefined: no acceptable pairs");
        return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) / static_cast<double>(total);
    }
};

namespace detail {

class Fenwick {
public:
    explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
    void add(std::size_t pos) {
        for (std::size_t i = pos + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
    }
    // count of inserted positions < pos
    std::int64_t prefix(std::size_t pos) const {
        std::int64_t s = 0;
        for (std::size_t i = pos; i > 0; i -= i & (~i + 1)) s += tree_[i];
        return s;
    }

private:
    std::vector<std::int64_t> tree_;
};

}  // namespace detail

/// Integer pair counts in O(n log n): records are swept in decreasing time,
/// and a Fenwick tree over score ranks holds everything strictly later.
inline ConcordanceCounts concordance_counts(const Dataset& data, std::span<const double> scores) {
    const std::size_t n = data.size();
    if (scores.size() != n) throw InvalidArgument("c_index: score count does not match dataset size");
    for (double s : scores)
        if (!std::isfinite(s)) throw InvalidArgument("c_index: scores must be finite");

    std::vector<double> levels(scores.begin(), scores.end());
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::vector<std::size_t> rank(n);
    for (std::size_t i = 0; i < n; ++i)
        rank[i] = static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), scores[i]) - levels.begin());

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return data.records[a].time > data.records[b].time; });

    detail::Fenwick tree(levels.size());
    std::int64_t inserted = 0;
    ConcordanceCounts c;
    for (std::size_t g = 0; g < n;) {
        std::size_t end = g;
        const double t = data.records[order[g]].time;
        while (end < n && data.records[order[end]].time == t) ++end;
        for (std::size_t p = g; p < end; ++p) {
            const auto i = order[p];
            if (!data.records[i].observed) continue;
            const auto below = tree.prefix(rank[i]);
            const auto upto = tree.prefix(rank[i] + 1);
            c.total += inserted;
            c.tied += upto - below;
            c.concordant += inserted - upto;
        }
        for (std::size_t p = g; p < end; ++p) {
            tree.add(rank[order[p]]);
            ++inserted;
        }
        g = end;
    }
    return c;
}

struct CIndexOptions {
    /// 0 disables subsampling. Otherwise at most this many acceptable pairs are
    /// drawn uniformly (with replacement) and scored.
    std::size_t max_pairs = 0;
    std::uint64_t seed = 0;
};

/// Harrell's C with half credit for exactly equal scores. Higher score means
/// later predicted event.
inline double c_index(const Dataset& data, std::span<const double> scores, const CIndexOptions& opt = {}) {
    if (opt.max_pairs == 0) return concordance_counts(data, scores).value();

    if (scores.size() != data.size()) throw InvalidArgument("c_index: score count does not match dataset size");
    const auto pairs = acceptable_pairs(data);
    if (pairs.empty()) throw UndefinedMetric("c-index undefined: no acceptable pairs");
    if (pairs.size() <= opt.max_pairs) return concordance_counts(data, scores).value();
    Rng rng(opt.seed);
    ConcordanceCounts c;
    for (std::size_t s = 0; s < opt.max_pairs; ++s) {
        const auto [i, j] = pairs.pairs[rng() % pairs.size()];
        ++c.total;
        if (scores[i] < scores[j]) ++c.concordant;
        else if (scores[i] == scores[j]) ++c.tied;
    }
    return c.value();
}

}  // namespace censrank
