#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "censrank/core.hpp"
#include "censrank/estimators.hpp"
#include "censrank/metrics.hpp"

namespace censrank {

// ---------------------------------------------------------------------------
// Cox partial likelihood
// ---------------------------------------------------------------------------

enum class TieMethod { breslow, efron };

/// Negative Cox log partial likelihood, f = exp(o), risk set {j : bin_j >= bin_i}.
/// Returns the sum over observed records (not averaged). When `grad` is
/// non-empty it receives d(nll)/d(outputs).
///
/// Efron: for an event bin with m tied events, rank r = 0..m-1 uses the
/// denominator R - (r/m) * S_tied, where R is the risk-set sum.
inline double cox_nll(std::span<const double> outputs, std::span<const int> bins, std::span<const char> observed,
                      TieMethod ties, std::span<double> grad = {}) {
    const std::size_t n = outputs.size();
    if (bins.size() != n || observed.size() != n) throw InvalidArgument("cox_nll: length mismatch");
    if (!grad.empty() && grad.size() != n) throw InvalidArgument("cox_nll: gradient buffer has wrong length");
    if (std::none_of(observed.begin(), observed.end(), [](char c) { return c != 0; }))
        throw InvalidArgument("cox_nll: no observed events");
    for (double o : outputs)
        if (!std::isfinite(o)) throw InvalidArgument("cox_nll: non-finite output");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return bins[a] > bins[b]; });

    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    auto log_add = [](double a, double b) {
        if (a == neg_inf) return b;
        if (b == neg_inf) return a;
        const double hi = std::max(a, b);
        return hi + std::log1p(std::exp(std::min(a, b) - hi));
    };

    struct Group {
        std::size_t begin, end;  // range in `order`
        int m;                   // tied events
        std::vector<double> log_denoms;
    };
    std::vector<Group> groups;

    // Risk-set sums are carried in the log domain, so outputs far apart in
    // magnitude neither overflow nor underflow.
    double nll = 0.0;
    double log_risk = neg_inf;
    for (std::size_t g = 0; g < n;) {
        std::size_t end = g;
        while (end < n && bins[order[end]] == bins[order[g]]) ++end;
        Group grp{g, end, 0, {}};
        double log_tied = neg_inf;
        for (std::size_t p = g; p < end; ++p) {
            const auto i = order[p];
            log_risk = log_add(log_risk, outputs[i]);
            if (observed[i]) {
                ++grp.m;
                log_tied = log_add(log_tied, outputs[i]);
                nll -= outputs[i];
            }
        }
        const double tied_share = grp.m ? std::exp(log_tied - log_risk) : 0.0;
        for (int r = 0; r < grp.m; ++r) {
            const double frac = ties == TieMethod::efron ? static_cast<double>(r) / grp.m : 0.0;
            const double log_denom = log_risk + std::log1p(-frac * tied_share);
            nll += log_denom;
            grp.log_denoms.push_back(log_denom);
        }
        groups.push_back(std::move(grp));
        g = end;
    }

    if (!grad.empty()) {
        // Walk bins in increasing order; the record at bin b belongs to the risk
        // set of every event group at or before b. d/do_k log(denom) contributes
        // exp(o_k - log_denom), minus (r/m) of that for the tied events themselves.
        double log_acc = neg_inf;
        for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
            std::vector<double> frac_terms;
            for (int r = 0; r < it->m; ++r) {
                log_acc = log_add(log_acc, -it->log_denoms[r]);
                if (ties == TieMethod::efron && r > 0)
                    frac_terms.push_back(std::log(static_cast<double>(r) / it->m) - it->log_denoms[r]);
            }
            double log_frac = neg_inf;
            for (double t : frac_terms) log_frac = log_add(log_frac, t);
            for (std::size_t p = it->begin; p < it->end; ++p) {
                const auto i = order[p];
                double g = std::exp(outputs[i] + log_acc);
                if (observed[i]) g -= 1.0 + std::exp(outputs[i] + log_frac);
                grad[i] = g;
            }
        }
    }
    return nll;
}

inline double cox_nll(std::span<const double> outputs, const Dataset& data, TieMethod ties,
                      std::span<double> grad = {}) {
    if (outputs.size() != data.size()) throw InvalidArgument("cox_nll: output count does not match dataset");
    const auto bins = bin_indices(data);
    std::vector<char> obs(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) obs[i] = data.records[i].observed;
    return cox_nll(outputs, bins, obs, ties, grad);
}

// ---------------------------------------------------------------------------
// Pairwise ranking relaxations
// ---------------------------------------------------------------------------

enum class PhiKind { sigmoid, log_sigmoid, hinge, exponential };

/// Argument orientation for the pairwise term. `concordant` evaluates
/// phi(score_j - score_i) for an acceptable pair (i, j), so a positive argument
/// means the pair is ordered correctly. `literal` evaluates phi(score_i - score_j).
enum class RankSign { concordant, literal };

/// Smooth (or piecewise linear) relaxation of the concordance indicator.
/// hinge is 1 - (margin - z)_+ with margin 1, i.e. min(1, z); it saturates at 1.
struct PhiVariant {
    PhiKind kind = PhiKind::sigmoid;
    double hinge_margin = 1.0;

    double value(double z) const {
        switch (kind) {
            case PhiKind::sigmoid: return 1.0 / (1.0 + std::exp(-z));
            case PhiKind::log_sigmoid: return z > 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
            case PhiKind::hinge: return 1.0 - std::max(0.0, hinge_margin - z);
            case PhiKind::exponential: return 1.0 - std::exp(-z);
        }
        return 0.0;
    }

    double derivative(double z) const {
        switch (kind) {
            case PhiKind::sigmoid: {
                const double s = 1.0 / (1.0 + std::exp(-z));
                return s * (1.0 - s);
            }
            case PhiKind::log_sigmoid: return 1.0 / (1.0 + std::exp(z));
            case PhiKind::hinge: return z < hinge_margin ? 1.0 : 0.0;
            case PhiKind::exponential: return std::exp(-z);
        }
        return 0.0;
    }
};

/// Pair list over already-binned times: i observed and bin_j > bin_i.
inline AcceptablePairSet acceptable_pairs(std::span<const int> bins, std::span<const char> observed) {
    AcceptablePairSet out;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        if (!observed[i]) continue;
        for (std::size_t j = 0; j < bins.size(); ++j)
            if (bins[j] > bins[i]) out.pairs.emplace_back(i, j);
    }
    return out;
}

/// -(1/|A|) * sum_{(i,j) in A} phi(score_j - score_i) (sign per `sign`).
inline double ranking_loss(std::span<const double> scores, const AcceptablePairSet& pairs, const PhiVariant& phi,
                           RankSign sign = RankSign::concordant, std::span<double> grad = {}) {
    if (pairs.empty()) throw InvalidArgument("ranking_loss: empty pair set");
    if (!grad.empty()) {
        if (grad.size() != scores.size()) throw InvalidArgument("ranking_loss: gradient buffer has wrong length");
        std::fill(grad.begin(), grad.end(), 0.0);
    }
    const double scale = 1.0 / static_cast<double>(pairs.size());
    double total = 0.0;
    for (const auto& [i, j] : pairs.pairs) {
        const double z = sign == RankSign::concordant ? scores[j] - scores[i] : scores[i] - scores[j];
        total += phi.value(z);
        if (!grad.empty()) {
            const double d = phi.derivative(z) * scale;
            // loss = -phi(z); dz/ds_j = +1 (concordant) or -1 (literal)
            const double dj = sign == RankSign::concordant ? -d : d;
            grad[j] += dj;
            grad[i] -= dj;
        }
    }
    return -total * scale;
}

// ---------------------------------------------------------------------------
// Wasserstein / CDF loss
// ---------------------------------------------------------------------------

/// Per-bin ground-distance weights, summing to one.
struct GroundWeights {
    std::vector<double> weights;
    double smoothing = 0.0;  // 0 marks the uniform (1/T) weighting
};

inline GroundWeights bin_weights(const Dataset& train, double smoothing) {
    if (!(smoothing > 0.0) || !std::isfinite(smoothing))
        throw InvalidArgument("bin_weights: smoothing must be positive");
    const int T = train.grid.num_bins();
    std::vector<double> w(T, smoothing);
    for (const auto& r : train.records)
        if (r.observed) w[bin_index(train.grid, r.time)] += 1.0;
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
    return {std::move(w), smoothing};
}

inline GroundWeights uniform_weights(int num_bins) {
    if (num_bins < 1) throw InvalidArgument("uniform_weights: num_bins must be >= 1");
    return {std::vector<double>(num_bins, 1.0 / num_bins), 0.0};
}

/// Softmax output and its running sum.
struct PredictedDistribution {
    std::vector<double> pmf;
    std::vector<double> cdf;

    static PredictedDistribution from_pmf(std::span<const double> pmf) {
        PredictedDistribution p;
        p.pmf.assign(pmf.begin(), pmf.end());
        p.cdf.resize(pmf.size());
        std::partial_sum(pmf.begin(), pmf.end(), p.cdf.begin());
        return p;
    }
};

/// sum_t w[t] * |a[t] - b[t]|^l over two CDFs.
inline double wm_distance(std::span<const double> cdf_a, std::span<const double> cdf_b, const GroundWeights& w,
                          double l) {
    if (cdf_a.size() != cdf_b.size() || cdf_a.size() != w.weights.size())
        throw InvalidArgument("wm_loss: length mismatch between prediction, target and weights");
    if (!(l >= 1.0)) throw InvalidArgument("wm_loss: exponent l must be >= 1");
    double s = 0.0;
    for (std::size_t t = 0; t < cdf_a.size(); ++t) s += w.weights[t] * std::pow(std::abs(cdf_a[t] - cdf_b[t]), l);
    return s;
}

inline double wm_loss(const PredictedDistribution& pred, const TargetDistribution& target, const GroundWeights& w,
                      double l) {
    return wm_distance(pred.cdf, target.cdf, w, l);
}

/// Gradient of wm_loss with respect to the pmf (not the cdf): the reverse
/// cumulative sum of the per-bin cdf gradient.
inline void wm_loss_grad_pmf(std::span<const double> pred_cdf, std::span<const double> target_cdf,
                             const GroundWeights& w, double l, std::span<double> grad_pmf) {
    const std::size_t T = pred_cdf.size();
    if (target_cdf.size() != T || w.weights.size() != T || grad_pmf.size() != T)
        throw InvalidArgument("wm_loss: length mismatch between prediction, target and weights");
    double acc = 0.0;
    for (std::size_t t = T; t-- > 0;) {
        const double d = pred_cdf[t] - target_cdf[t];
        if (d != 0.0) acc += w.weights[t] * l * std::pow(std::abs(d), l - 1.0) * (d > 0 ? 1.0 : -1.0);
        grad_pmf[t] = acc;
    }
}

// ---------------------------------------------------------------------------
// Loss selection
// ---------------------------------------------------------------------------

enum class LossKind { cox, cox_efron, rank_sigmoid, rank_logsigmoid, rank_hinge, rank_exp, wm };

inline constexpr LossKind kAllLosses[] = {LossKind::cox,          LossKind::cox_efron,       LossKind::rank_sigmoid,
                                          LossKind::rank_logsigmoid, LossKind::rank_hinge, LossKind::rank_exp,
                                          LossKind::wm};

inline const char* to_string(LossKind k) {
    switch (k) {
        case LossKind::cox: return "cox";
        case LossKind::cox_efron: return "cox-efron";
        case LossKind::rank_sigmoid: return "rank-sigmoid";
        case LossKind::rank_logsigmoid: return "rank-logsigmoid";
        case LossKind::rank_hinge: return "rank-hinge";
        case LossKind::rank_exp: return "rank-exp";
        case LossKind::wm: return "wm";
    }
    return "?";
}

inline LossKind parse_loss(std::string_view s) {
    for (auto k : kAllLosses)
        if (s == to_string(k)) return k;
    throw InvalidArgument("unknown loss '" + std::string(s) + "'");
}

inline bool is_cox(LossKind k) { return k == LossKind::cox || k == LossKind::cox_efron; }
inline bool is_ranking(LossKind k) { return !is_cox(k) && k != LossKind::wm; }
inline bool uses_softmax(LossKind k) { return k == LossKind::wm; }

inline PhiVariant phi_for(LossKind k) {
    switch (k) {
        case LossKind::rank_sigmoid: return {PhiKind::sigmoid};
        case LossKind::rank_logsigmoid: return {PhiKind::log_sigmoid};
        case LossKind::rank_hinge: return {PhiKind::hinge};
        case LossKind::rank_exp: return {PhiKind::exponential};
        default: throw InvalidArgument(std::string("loss '") + to_string(k) + "' has no phi variant");
    }
}

struct LossConfig {
    LossKind kind = LossKind::wm;
    RankSign rank_sign = RankSign::concordant;
    double wm_l = 1.5;
    /// Additive constant per bin before normalizing; <= 0 selects uniform weights.
    double wm_smoothing = 1.0;
    ImputeMode km_impute = ImputeMode::conditional;
};

/// Per-training-set state consumed by the minibatch objective: binned times,
/// event flags and, for the WM loss, imputed targets and ground weights.
struct LossContext {
    LossConfig config;
    std::vector<int> bins;
    std::vector<char> observed;
    std::vector<TargetDistribution> targets;
    GroundWeights weights;
    int num_bins = 1;

    static LossContext build(const LossConfig& cfg, const Dataset& train) {
        LossContext ctx;
        ctx.config = cfg;
        ctx.bins = bin_indices(train);
        ctx.observed.resize(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) ctx.observed[i] = train.records[i].observed;
        ctx.num_bins = train.grid.num_bins();
        if (cfg.kind == LossKind::wm) {
            const auto km = kaplan_meier(train);
            ctx.targets = impute_targets(train, km, cfg.km_impute);
            ctx.weights = cfg.wm_smoothing > 0.0 ? bin_weights(train, cfg.wm_smoothing) : uniform_weights(ctx.num_bins);
        }
        return ctx;
    }
};

struct ObjectiveValue {
    double value = 0.0;
    Eigen::MatrixXd grad;  // same shape as the network outputs
};

/// Minibatch objective on network outputs for the records `rows` of the
/// training set. Outputs are n x 1 scores for Cox/ranking (Cox scores are log
/// risks) and n x T pmfs for WM. Cox is normalized per event, ranking per pair,
/// WM per record. Returns nullopt when the batch carries no signal (no events
/// or no acceptable pairs).
inline std::optional<ObjectiveValue> batch_objective(const LossContext& ctx, const Eigen::MatrixXd& outputs,
                                                     std::span<const std::size_t> rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (outputs.rows() != n) throw InvalidArgument("batch_objective: output rows do not match batch");
    ObjectiveValue out;
    out.grad = Eigen::MatrixXd::Zero(outputs.rows(), outputs.cols());
    const auto kind = ctx.config.kind;

    if (kind == LossKind::wm) {
        const auto T = static_cast<Eigen::Index>(ctx.num_bins);
        if (outputs.cols() != T) throw InvalidArgument("batch_objective: WM needs one output column per bin");
        // Column sweeps over the column-major outputs; same arithmetic as
        // wm_distance / wm_loss_grad_pmf applied row by row.
        const double l = ctx.config.wm_l;
        if (!(l >= 1.0)) throw InvalidArgument("wm_loss: exponent l must be >= 1");
        Eigen::MatrixXd diff(n, T);
        Eigen::ArrayXd cdf = Eigen::ArrayXd::Zero(n);
        for (Eigen::Index t = 0; t < T; ++t) {
            cdf += outputs.col(t).array();
            for (Eigen::Index r = 0; r < n; ++r) diff(r, t) = cdf(r) - ctx.targets[rows[r]].cdf[t];
        }
        const auto& w = ctx.weights.weights;
        Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(n);
        for (Eigen::Index t = T; t-- > 0;) {
            const auto d = diff.col(t).array();
            const Eigen::ArrayXd a = d.abs();
            Eigen::ArrayXd dpow;  // |d|^(l-1)
            if (l == 1.5) dpow = a.sqrt();
            else if (l == 1.0) dpow = Eigen::ArrayXd::Ones(n);
            else if (l == 2.0) dpow = a;
            else dpow = a.pow(l - 1.0);
            out.value += w[t] * (a * dpow).sum();
            acc += (w[t] * l) * dpow * ((d > 0.0).cast<double>() - (d < 0.0).cast<double>());
            out.grad.col(t) = (acc / static_cast<double>(n)).matrix();
        }
        out.value /= static_cast<double>(n);
        return out;
    }

    if (outputs.cols() != 1) throw InvalidArgument("batch_objective: scalar losses need a single output column");
    std::vector<double> s(n), g(n);
    std::vector<int> bins(n);
    std::vector<char> obs(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        s[r] = outputs(r, 0);
        bins[r] = ctx.bins[rows[r]];
        obs[r] = ctx.observed[rows[r]];
    }

    if (is_cox(kind)) {
        const auto events = std::count(obs.begin(), obs.end(), char{1});
        if (events == 0) return std::nullopt;
        const auto ties = kind == LossKind::cox_efron ? TieMethod::efron : TieMethod::breslow;
        out.value = cox_nll(s, bins, obs, ties, g) / static_cast<double>(events);
        for (Eigen::Index r = 0; r < n; ++r) out.grad(r, 0) = g[r] / static_cast<double>(events);
        return out;
    }

    const auto pairs = acceptable_pairs(bins, obs);
    if (pairs.empty()) return std::nullopt;
    out.value = ranking_loss(s, pairs, phi_for(kind), ctx.config.rank_sign, g);
    for (Eigen::Index r = 0; r < n; ++r) out.grad(r, 0) = g[r];
    return out;
}

}  // namespace censrank
