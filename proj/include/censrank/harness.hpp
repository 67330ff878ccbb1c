#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "censrank/core.hpp"
#include "censrank/estimators.hpp"
#include "censrank/losses.hpp"
#include "censrank/metrics.hpp"
#include "censrank/neural.hpp"
#include "censrank/pipeline.hpp"
#include "censrank/rng.hpp"

namespace censrank {

// ---------------------------------------------------------------------------
// Seeds
// ---------------------------------------------------------------------------
//
// Every random stream in an experiment is derive_seed(master, {stream, ...}):
//   {kSplitStream}                 fold assignment
//   {kTrainStream, fold}           network init, dropout, batch order (shared by grid points)
//   {kInjectStream, fold}          censoring injection for the sweep
// Sub-experiments can therefore be rerun in isolation.

inline constexpr std::uint64_t kSplitStream = 1;
inline constexpr std::uint64_t kTrainStream = 2;
inline constexpr std::uint64_t kInjectStream = 3;

// ---------------------------------------------------------------------------
// Score adapters
// ---------------------------------------------------------------------------

enum class WmScore { expectation, median };

/// Evaluation scores oriented "higher = later event": negated log-risk for
/// Cox, raw output for ranking, expected (or median) event bin for WM.
inline std::vector<double> evaluation_scores(const Network& net, LossKind loss, const Eigen::MatrixXd& x,
                                             WmScore wm_score = WmScore::expectation) {
    const Eigen::MatrixXd out = net.predict(x);
    std::vector<double> s(static_cast<std::size_t>(out.rows()));
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        if (uses_softmax(loss)) {
            if (wm_score == WmScore::expectation) {
                double e = 0.0;
                for (Eigen::Index t = 0; t < out.cols(); ++t) e += static_cast<double>(t) * out(r, t);
                s[r] = e;
            } else {
                double c = 0.0;
                Eigen::Index t = 0;
                for (; t < out.cols() - 1; ++t) {
                    c += out(r, t);
                    if (c >= 0.5) break;
                }
                s[r] = static_cast<double>(t);
            }
        } else {
            s[r] = is_cox(loss) ? -out(r, 0) : out(r, 0);
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Early stopping
// ---------------------------------------------------------------------------

/// Tracks the best validation score; a strictly greater score counts as an
/// improvement. `update` returns true when training should stop.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {
        if (patience < 1) throw InvalidArgument("patience must be >= 1");
    }

    bool update(int epoch, double score) {
        if (!best_ || score > *best_) {
            best_ = score;
            best_epoch_ = epoch;
            stale_ = 0;
            improved_ = true;
            return false;
        }
        improved_ = false;
        return ++stale_ >= patience_;
    }

    bool improved() const { return improved_; }
    int best_epoch() const { return best_epoch_; }
    double best_score() const { return best_.value_or(0.0); }

private:
    int patience_;
    int stale_ = 0;
    int best_epoch_ = -1;
    bool improved_ = false;
    std::optional<double> best_;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainRun {
    LossConfig loss;
    std::vector<int> hidden_dims{100, 100, 100};
    double dropout_rate = 0.5;
    bool batch_norm = true;
    double learning_rate = 1e-3;
    double l2_coefficient = 0.0;
    int max_epochs = 200;
    int patience = 10;
    std::size_t batch_size = 256;
    /// Cox only: one step per epoch over the whole training set, so risk sets
    /// span the full fold instead of the minibatch.
    bool cox_full_batch = false;
    WmScore wm_score = WmScore::expectation;
    std::uint64_t seed = 0;

    void validate() const {
        if (max_epochs < 1) throw InvalidArgument("max_epochs must be >= 1");
        if (patience < 1) throw InvalidArgument("patience must be >= 1");
        if (batch_size < 2) throw InvalidArgument("batch_size must be >= 2");
    }
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_cindex = 0.0;
};

struct TrainResult {
    Network network;
    std::vector<EpochRecord> history;
    int best_epoch = 0;  // 1-based
    double best_val_cindex = 0.0;
};

/// Copy with every time replaced by its bin's left edge.
inline Dataset binned_copy(Dataset d) {
    for (auto& r : d.records) r.time = d.grid.left_edge(bin_index(d.grid, r.time));
    return d;
}

inline NetworkConfig network_config(const TrainRun& run, const Dataset& train) {
    NetworkConfig cfg;
    cfg.input_dim = static_cast<int>(train.num_features());
    cfg.hidden_dims = run.hidden_dims;
    cfg.head = uses_softmax(run.loss.kind) ? HeadKind::softmax : HeadKind::scalar_linear;
    cfg.num_bins = train.grid.num_bins();
    cfg.dropout_rate = run.dropout_rate;
    cfg.l2_coefficient = run.l2_coefficient;
    cfg.batch_norm = run.batch_norm;
    cfg.seed = derive_seed(run.seed, {0});
    return cfg;
}

/// Observer hook, called after each epoch with the validation C-index.
using EpochCallback = std::function<void(const EpochRecord&)>;

inline TrainResult train_model(const TrainRun& run, const Dataset& train, const Dataset& val,
                               const EpochCallback& on_epoch = {}) {
    run.validate();
    if (train.empty() || val.empty()) throw InvalidArgument("train_model: empty train or validation set");
    if (concordance_counts(val, std::vector<double>(val.size(), 0.0)).total == 0)
        throw InvalidArgument("train_model: validation set has no acceptable pair");
    if (train.num_features() == 0) throw InvalidArgument("train_model: no features");

    if (!uses_softmax(run.loss.kind)) {
        if (train.num_observed() == 0) throw InvalidArgument("train_model: training set has no observed events");
        if (is_ranking(run.loss.kind) && concordance_counts(binned_copy(train), std::vector<double>(train.size(), 0.0)).total == 0)
            throw InvalidArgument("train_model: training set has no acceptable pair");
    }
    const auto ctx = LossContext::build(run.loss, train);
    Network net(network_config(run, train));
    auto params = net.parameters();
    auto adam = make_adam(params, run.learning_rate);
    const Eigen::MatrixXd x_train = feature_matrix(train);
    const Eigen::MatrixXd x_val = feature_matrix(val);

    EarlyStopping stopper(run.patience);
    TrainResult result;
    std::optional<Network> best;
    Rng order_rng(derive_seed(run.seed, {1}));
    const bool full_batch = run.cox_full_batch && is_cox(run.loss.kind);
    const std::size_t batch = full_batch ? train.size() : run.batch_size;

    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t start = 0; start < train.size(); start += batch)
        batches.emplace_back(start, std::min(train.size(), start + batch));
    if (batches.size() > 1 && batches.back().second - batches.back().first < 2) {
        batches[batches.size() - 2].second = batches.back().second;  // no singleton batches
        batches.pop_back();
    }

    for (int epoch = 1; epoch <= run.max_epochs; ++epoch) {
        const auto order = random_permutation(train.size(), order_rng);
        double loss_sum = 0.0;
        int steps = 0;
        for (const auto& [start, end] : batches) {
            const std::span<const std::size_t> rows(order.data() + start, end - start);
            Eigen::MatrixXd xb(static_cast<Eigen::Index>(rows.size()), x_train.cols());
            for (std::size_t r = 0; r < rows.size(); ++r)
                xb.row(static_cast<Eigen::Index>(r)) = x_train.row(static_cast<Eigen::Index>(rows[r]));
            const Eigen::MatrixXd out = net.forward(xb, Mode::train);
            if (!out.allFinite()) throw TrainingDiverged("non-finite network output", epoch);
            const auto obj = batch_objective(ctx, out, rows);
            if (!obj) continue;
            if (!std::isfinite(obj->value)) throw TrainingDiverged("non-finite loss", epoch);
            loss_sum += obj->value + net.l2_penalty();
            ++steps;
            try {
                adam_step(adam, params, net.backward(obj->grad));
            } catch (const TrainingDiverged& e) {
                throw TrainingDiverged(e.what(), epoch);
            }
        }
        if (steps == 0) throw InvalidArgument("train_model: no minibatch carried a training signal");
        net.clear_cache();

        const auto scores = evaluation_scores(net, run.loss.kind, x_val, run.wm_score);
        for (double s : scores)
            if (!std::isfinite(s)) throw TrainingDiverged("non-finite validation prediction", epoch);
        EpochRecord rec{epoch, steps ? loss_sum / steps : 0.0, c_index(val, scores)};
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
        const bool stop = stopper.update(epoch, rec.val_cindex);
        if (stopper.improved()) best = net;
        if (stop) break;
    }
    result.network = std::move(*best);
    result.best_epoch = stopper.best_epoch();
    result.best_val_cindex = stopper.best_score();
    return result;
}

// ---------------------------------------------------------------------------
// Experiment data and censoring modes
// ---------------------------------------------------------------------------

/// Either raw tabular data (preprocessed per fold, statistics fitted on the
/// training rows) or an already numeric dataset.
struct ExperimentData {
    std::string name;
    std::variant<RawTable, Dataset> source;
    double bin_width = 1.0;

    std::size_t size() const {
        return std::visit([](const auto& s) {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, RawTable>) return s.rows();
            else return s.size();
        }, source);
    }

    double censored_fraction() const {
        std::size_t censored = 0;
        std::visit([&](const auto& s) {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, RawTable>) {
                for (char e : s.events) censored += e ? 0 : 1;
            } else {
                for (const auto& r : s.records) censored += r.observed ? 0 : 1;
            }
        }, source);
        return static_cast<double>(censored) / static_cast<double>(size());
    }
};

struct FoldData {
    Dataset train, val, test;
};

/// Builds the three datasets of one fold; the time grid comes from the
/// training rows only, and held-out times beyond it are clamped when binned.
inline FoldData materialize_fold(const ExperimentData& data, const FoldIndices& idx) {
    FoldData f;
    if (const auto* table = std::get_if<RawTable>(&data.source)) {
        const auto stats = fit_preprocess(*table, idx.train);
        f.train.records = apply_preprocess(*table, stats, idx.train);
        f.val.records = apply_preprocess(*table, stats, idx.val);
        f.test.records = apply_preprocess(*table, stats, idx.test);
    } else {
        const auto& ds = std::get<Dataset>(data.source);
        for (auto i : idx.train) f.train.records.push_back(ds.records[i]);
        for (auto i : idx.val) f.val.records.push_back(ds.records[i]);
        for (auto i : idx.test) f.test.records.push_back(ds.records[i]);
    }
    const auto grid = build_time_grid(f.train.records, data.bin_width);
    f.train.grid = f.val.grid = f.test.grid = grid;
    return f;
}

enum class CensoringMode { with_censored, no_censored, death_at_censoring };

inline constexpr CensoringMode kAllCensoringModes[] = {CensoringMode::with_censored, CensoringMode::no_censored,
                                                       CensoringMode::death_at_censoring};

inline const char* to_string(CensoringMode m) {
    switch (m) {
        case CensoringMode::with_censored: return "with_censored";
        case CensoringMode::no_censored: return "no_censored";
        case CensoringMode::death_at_censoring: return "death_at_censoring";
    }
    return "?";
}

inline CensoringMode parse_censoring_mode(std::string_view s) {
    for (auto m : kAllCensoringModes)
        if (s == to_string(m)) return m;
    throw InvalidArgument("unknown censoring mode '" + std::string(s) + "'");
}

/// Rewrites a training set; validation and test sets are never passed here.
inline Dataset apply_censoring_mode(Dataset train, CensoringMode mode) {
    switch (mode) {
        case CensoringMode::with_censored: break;
        case CensoringMode::no_censored:
            std::erase_if(train.records, [](const SurvivalRecord& r) { return !r.observed; });
            break;
        case CensoringMode::death_at_censoring:
            for (auto& r : train.records) r.observed = true;
            break;
    }
    return train;
}

/// Converts observed training records to censored ones at a uniform time in
/// (0, event time). The number converted is round((target - native) /
/// (1 - native) * observed), so target == native converts nothing and 1.0
/// converts every observed record.
inline Dataset inject_censoring(Dataset train, double target_fraction, double native_fraction, std::uint64_t seed) {
    if (target_fraction < native_fraction - 1e-12)
        throw InvalidArgument("censoring fraction " + std::to_string(target_fraction) + " is below the native fraction " +
                              std::to_string(native_fraction));
    if (target_fraction > 1.0) throw InvalidArgument("censoring fraction must be <= 1");
    std::vector<std::size_t> observed;
    for (std::size_t i = 0; i < train.size(); ++i)
        if (train.records[i].observed) observed.push_back(i);
    const double share = native_fraction >= 1.0 ? 0.0 : std::max(0.0, (target_fraction - native_fraction) / (1.0 - native_fraction));
    const auto count = std::min<std::size_t>(observed.size(), static_cast<std::size_t>(std::llround(share * static_cast<double>(observed.size()))));
    Rng rng(seed);
    shuffle_in_place(std::span<std::size_t>(observed), rng);
    for (std::size_t c = 0; c < count; ++c) {
        auto& r = train.records[observed[c]];
        double u;
        do { u = uniform01(rng); } while (u == 0.0);
        r.time *= u;
        r.observed = false;
    }
    return train;
}

// ---------------------------------------------------------------------------
// Parallel execution
// ---------------------------------------------------------------------------

/// Runs fn(0..count-1) on up to `jobs` threads. Results must be written to
/// per-index slots by the caller; the first exception (by index) is rethrown.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(count);
    auto run_one = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, jobs));
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(threads, count); ++t)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < count;) run_one(i);
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Grid search and cross-validation
// ---------------------------------------------------------------------------

struct GridPoint {
    double learning_rate = 1e-3;
    double l2 = 0.0;

    friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

/// Learning rate x L2 defaults used when no grid file is given.
inline std::vector<GridPoint> default_grid() {
    std::vector<GridPoint> g;
    for (double lr : {1e-2, 1e-3, 1e-4})
        for (double l2 : {0.0, 1e-4, 1e-3, 1e-2}) g.push_back({lr, l2});
    return g;
}

/// Grid file: CSV with header `learning_rate,l2`.
inline std::vector<GridPoint> parse_grid(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty()) throw ParseError("grid: empty file");
    std::vector<GridPoint> g;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        if (f.size() != 2) throw ParseError("grid line " + std::to_string(rows[r].line) + ": expected learning_rate,l2");
        const auto lr = detail::parse_double(f[0]);
        const auto l2 = detail::parse_double(f[1]);
        if (!lr || !l2 || !(*lr > 0.0) || !(*l2 >= 0.0))
            throw ParseError("grid line " + std::to_string(rows[r].line) + ": invalid values");
        g.push_back({*lr, *l2});
    }
    if (g.empty()) throw ParseError("grid: no grid points");
    return g;
}

struct PointOutcome {
    GridPoint point;
    std::optional<TrainResult> result;  // empty when training diverged
    std::string failure;
};

/// Picks the best validation C-index; ties go to lower L2, then lower learning rate.
inline std::size_t select_grid_point(const std::vector<PointOutcome>& outcomes) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].result) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& a = outcomes[i];
        const auto& b = outcomes[*best];
        const double va = a.result->best_val_cindex, vb = b.result->best_val_cindex;
        if (va > vb || (va == vb && (a.point.l2 < b.point.l2 ||
                                     (a.point.l2 == b.point.l2 && a.point.learning_rate < b.point.learning_rate))))
            best = i;
    }
    if (!best) {
        std::string msg = "all grid points diverged";
        if (!outcomes.empty()) msg += " (first: " + outcomes.front().failure + ")";
        throw ExperimentFailed(msg);
    }
    return *best;
}

inline PointOutcome train_point(TrainRun run, const GridPoint& p, const Dataset& train, const Dataset& val) {
    run.learning_rate = p.learning_rate;
    run.l2_coefficient = p.l2;
    PointOutcome o{p, std::nullopt, {}};
    try {
        o.result = train_model(run, train, val);
    } catch (const TrainingDiverged& e) {
        o.failure = std::string(e.what()) + " at epoch " + std::to_string(e.epoch);
    }
    return o;
}

/// Per-fold grid search: one model per grid point, selected on validation C-index.
/// Every point starts from the same seed, so only the grid values differ.
inline PointOutcome grid_search(const TrainRun& run, const std::vector<GridPoint>& grid, const Dataset& train,
                                const Dataset& val, int jobs = 1) {
    if (grid.empty()) throw InvalidArgument("grid_search: empty grid");
    std::vector<PointOutcome> outcomes(grid.size());
    parallel_for(grid.size(), jobs, [&](std::size_t g) { outcomes[g] = train_point(run, grid[g], train, val); });
    return std::move(outcomes[select_grid_point(outcomes)]);
}

struct FoldResult {
    int fold = 0;
    double val_cindex = 0.0;
    double test_cindex = 0.0;
    GridPoint point;
    int best_epoch = 0;
    int epochs_run = 0;
    double seconds = 0.0;  // wall clock; not part of serialized reports
};

struct ExperimentReport {
    std::string dataset;
    std::string loss;
    std::string mode = "with_censored";
    std::optional<double> censor_fraction;
    int k = 0;
    std::vector<FoldResult> folds;
    double mean = 0.0;
    double std_error = 0.0;
};

/// Mean and standard error (sample std / sqrt(k)) of the test C-indices.
inline void aggregate(ExperimentReport& r) {
    const auto k = static_cast<double>(r.folds.size());
    if (r.folds.empty()) {
        r.mean = r.std_error = 0.0;
        return;
    }
    double sum = 0.0;
    for (const auto& f : r.folds) sum += f.test_cindex;
    r.mean = sum / k;
    double ss = 0.0;
    for (const auto& f : r.folds) ss += (f.test_cindex - r.mean) * (f.test_cindex - r.mean);
    r.std_error = r.folds.size() > 1 ? std::sqrt(ss / (k - 1.0)) / std::sqrt(k) : 0.0;
}

struct CvConfig {
    TrainRun run;  // learning rate / l2 overwritten by the grid
    std::vector<GridPoint> grid = default_grid();
    int k = 5;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    CensoringMode mode = CensoringMode::with_censored;
    /// Sweep only: target censored fraction of each training set.
    std::optional<double> censor_fraction;
    int jobs = 1;
};

/// Training set of one fold after the censoring mode / injection is applied.
inline Dataset prepare_training_set(const ExperimentData& data, const CvConfig& cfg, const FoldData& fold, int f) {
    Dataset train = apply_censoring_mode(fold.train, cfg.mode);
    if (cfg.censor_fraction)
        train = inject_censoring(std::move(train), *cfg.censor_fraction, data.censored_fraction(),
                                 derive_seed(cfg.seed, {kInjectStream, static_cast<std::uint64_t>(f)}));
    if (train.empty()) throw ExperimentFailed("fold " + std::to_string(f) + ": training set is empty");
    return train;
}

/// k-fold cross-validation with a per-fold grid search. Fold x grid-point
/// jobs run on `cfg.jobs` threads; results are reduced in fold order.
inline ExperimentReport run_cv(const ExperimentData& data, const CvConfig& cfg) {
    if (cfg.grid.empty()) throw InvalidArgument("run_cv: empty grid");
    const auto splits = kfold_split(data.size(), cfg.k, cfg.val_fraction, derive_seed(cfg.seed, {kSplitStream}));
    std::vector<FoldData> folds(splits.size());
    std::vector<Dataset> trains(splits.size());
    for (std::size_t f = 0; f < splits.size(); ++f) {
        folds[f] = materialize_fold(data, splits[f]);
        trains[f] = prepare_training_set(data, cfg, folds[f], static_cast<int>(f));
    }

    const std::size_t G = cfg.grid.size();
    std::vector<PointOutcome> outcomes(splits.size() * G);
    std::vector<double> seconds(splits.size() * G, 0.0);
    parallel_for(outcomes.size(), cfg.jobs, [&](std::size_t job) {
        const auto f = job / G, g = job % G;
        TrainRun run = cfg.run;
        run.seed = derive_seed(cfg.seed, {kTrainStream, f});
        const auto t0 = std::chrono::steady_clock::now();
        outcomes[job] = train_point(run, cfg.grid[g], trains[f], folds[f].val);
        seconds[job] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    ExperimentReport report;
    report.dataset = data.name;
    report.loss = to_string(cfg.run.loss.kind);
    report.mode = to_string(cfg.mode);
    report.censor_fraction = cfg.censor_fraction;
    report.k = cfg.k;
    for (std::size_t f = 0; f < splits.size(); ++f) {
        std::vector<PointOutcome> fold_outcomes(outcomes.begin() + static_cast<std::ptrdiff_t>(f * G),
                                                outcomes.begin() + static_cast<std::ptrdiff_t>((f + 1) * G));
        const auto best = select_grid_point(fold_outcomes);
        const auto& res = *fold_outcomes[best].result;
        FoldResult fr;
        fr.fold = static_cast<int>(f);
        fr.val_cindex = res.best_val_cindex;
        fr.point = fold_outcomes[best].point;
        fr.best_epoch = res.best_epoch;
        fr.epochs_run = static_cast<int>(res.history.size());
        for (std::size_t g = 0; g < G; ++g) fr.seconds += seconds[f * G + g];
        const auto x_test = feature_matrix(folds[f].test);
        fr.test_cindex = c_index(folds[f].test, evaluation_scores(res.network, cfg.run.loss.kind, x_test, cfg.run.wm_score));
        report.folds.push_back(fr);
    }
    aggregate(report);
    return report;
}

struct AblationRow {
    std::string loss;
    std::string mode;
    ExperimentReport report;
};

/// Losses x censoring modes, all on the same folds.
inline std::vector<AblationRow> censoring_ablation(const ExperimentData& data, const CvConfig& base,
                                                   const std::vector<LossKind>& losses) {
    if (data.censored_fraction() == 0.0) throw InvalidArgument("censoring_ablation: dataset has no censored records");
    std::vector<AblationRow> rows;
    for (auto loss : losses)
        for (auto mode : kAllCensoringModes) {
            CvConfig cfg = base;
            cfg.run.loss.kind = loss;
            cfg.mode = mode;
            cfg.censor_fraction.reset();
            rows.push_back({to_string(loss), to_string(mode), run_cv(data, cfg)});
        }
    return rows;
}

struct SweepRow {
    double fraction = 0.0;
    ExperimentReport report;
};

/// Censoring-fraction sweep; validation and test sets are those of run_cv.
inline std::vector<SweepRow> censoring_sweep(const ExperimentData& data, const CvConfig& base,
                                             const std::vector<double>& fractions) {
    const double native = data.censored_fraction();
    for (double f : fractions)
        if (f < native - 1e-12 || f > 1.0)
            throw InvalidArgument("censoring_sweep: fraction " + std::to_string(f) + " outside [native " +
                                  std::to_string(native) + ", 1]");
    std::vector<SweepRow> rows;
    for (double f : fractions) {
        CvConfig cfg = base;
        cfg.mode = CensoringMode::with_censored;
        cfg.censor_fraction = f;
        rows.push_back({f, run_cv(data, cfg)});
    }
    return rows;
}

}  // namespace censrank
