#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "censrank/censrank.hpp"

using namespace censrank;
namespace fs = std::filesystem;

namespace {

struct DataOptions {
    std::string dataset;
    std::string schema;
    double bin_width = 1.0;
};

struct TrainOptions {
    std::string loss = "wm";
    double wm_smoothing = 1.0;
    double wm_l = 1.5;
    std::string km_impute = "conditional";
    std::string rank_sign = "concordant";
    std::string wm_score = "expectation";
    std::string hidden = "100,100,100";
    double dropout = 0.5;
    bool no_batch_norm = false;
    int max_epochs = 200;
    int patience = 10;
    std::size_t batch_size = 256;
    bool cox_full_batch = false;
    bool progress = false;
};

struct CvOptions {
    int k = 5;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    std::string grid;
    int jobs = 1;
};

struct OutputOptions {
    std::string out = "-";
    std::string format = "csv";
};

void add_data(CLI::App* app, DataOptions& d) {
    app->add_option("--dataset", d.dataset, "CSV file")->required();
    app->add_option("--schema", d.schema, "schema file (default: dataset path with .schema)");
    app->add_option("--bin-width", d.bin_width, "time-grid bin width, in the dataset's time unit");
}

void add_output(CLI::App* app, OutputOptions& o) {
    app->add_option("--out", o.out, "output path, - for stdout");
    app->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

void add_training(CLI::App* app, TrainOptions& t) {
    app->add_option("--loss", t.loss, "cox, cox-efron, rank-sigmoid, rank-logsigmoid, rank-hinge, rank-exp or wm");
    app->add_option("--wm-smoothing", t.wm_smoothing, "WM ground-weight smoothing constant (<= 0: uniform)");
    app->add_option("--wm-l", t.wm_l, "WM exponent");
    app->add_option("--km-impute", t.km_impute, "conditional or global")->check(CLI::IsMember({"conditional", "global"}));
    app->add_option("--rank-sign", t.rank_sign, "concordant or literal")->check(CLI::IsMember({"concordant", "literal"}));
    app->add_option("--wm-score", t.wm_score, "expectation or median")->check(CLI::IsMember({"expectation", "median"}));
    app->add_option("--hidden", t.hidden, "hidden layer widths, comma separated");
    app->add_option("--dropout", t.dropout, "dropout rate");
    app->add_flag("--no-batch-norm", t.no_batch_norm, "disable batch normalization");
    app->add_option("--max-epochs", t.max_epochs);
    app->add_option("--patience", t.patience, "epochs without validation improvement before stopping");
    app->add_option("--batch-size", t.batch_size);
    app->add_flag("--cox-full-batch", t.cox_full_batch, "Cox losses: one full-batch step per epoch");
    app->add_flag("--progress", t.progress, "print per-epoch validation C-index to stderr");
}

void add_cv(CLI::App* app, CvOptions& c) {
    app->add_option("--k", c.k, "number of folds");
    app->add_option("--val-fraction", c.val_fraction, "validation share of each training portion");
    app->add_option("--seed", c.seed, "master seed");
    app->add_option("--grid", c.grid, "grid file (CSV header learning_rate,l2)");
    app->add_option("--jobs", c.jobs, "worker threads");
}

std::vector<std::string> split_list(const std::string& s) {
    const auto rows = parse_csv(s);
    if (rows.empty()) return {};
    std::vector<std::string> out;
    for (const auto& f : rows[0].fields) out.push_back(detail::trim(f));
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    if (s.empty() || s == "none") return out;
    for (const auto& f : split_list(s)) {
        const auto v = detail::parse_double(f);
        if (!v || *v < 1 || *v != std::floor(*v)) throw InvalidArgument("bad layer width '" + f + "'");
        out.push_back(static_cast<int>(*v));
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& f : split_list(s)) {
        const auto v = detail::parse_double(f);
        if (!v) throw InvalidArgument("bad number '" + f + "'");
        out.push_back(*v);
    }
    return out;
}

RawTable load_table(const DataOptions& d) {
    if (!fs::exists(d.dataset)) throw IoError("cannot open '" + d.dataset + "'");
    auto schema = d.schema;
    if (schema.empty()) schema = fs::path(d.dataset).replace_extension(".schema").string();
    return load_csv(d.dataset, load_schema(schema));
}

ExperimentData load_experiment(const DataOptions& d) {
    if (!(d.bin_width > 0.0)) throw InvalidArgument("--bin-width must be positive");
    return {fs::path(d.dataset).stem().string(), load_table(d), d.bin_width};
}

TrainRun make_run(const TrainOptions& t) {
    TrainRun run;
    run.loss.kind = parse_loss(t.loss);
    run.loss.rank_sign = t.rank_sign == "literal" ? RankSign::literal : RankSign::concordant;
    run.loss.wm_l = t.wm_l;
    run.loss.wm_smoothing = t.wm_smoothing;
    run.loss.km_impute = parse_impute_mode(t.km_impute);
    run.wm_score = t.wm_score == "median" ? WmScore::median : WmScore::expectation;
    run.hidden_dims = parse_int_list(t.hidden);
    run.dropout_rate = t.dropout;
    run.batch_norm = !t.no_batch_norm;
    run.max_epochs = t.max_epochs;
    run.patience = t.patience;
    run.batch_size = t.batch_size;
    run.cox_full_batch = t.cox_full_batch;
    run.validate();
    return run;
}

CvConfig make_cv(const TrainOptions& t, const CvOptions& c) {
    CvConfig cfg;
    cfg.run = make_run(t);
    if (!c.grid.empty()) cfg.grid = parse_grid(read_text_file(c.grid));
    cfg.k = c.k;
    cfg.val_fraction = c.val_fraction;
    cfg.seed = c.seed;
    cfg.jobs = c.jobs;
    return cfg;
}

ReportFormat format_of(const OutputOptions& o) { return parse_report_format(o.format); }

void emit_json(const OutputOptions& o, const nlohmann::json& j) { write_output(o.out, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------

void cmd_km(const DataOptions& d, const OutputOptions& o) {
    const auto table = load_table(d);
    Dataset data{apply_preprocess(table, fit_preprocess(table, all_rows(table.rows())), all_rows(table.rows())), {}};
    data.grid = build_time_grid(data.records, d.bin_width);
    const auto km = kaplan_meier(data);
    if (format_of(o) == ReportFormat::json) {
        emit_json(o, {{"bin_width", km.grid.bin_width()},
                      {"survival", km.survival},
                      {"event_counts", km.event_counts},
                      {"at_risk", km.at_risk}});
        return;
    }
    std::ostringstream os;
    os << "bin,left_edge,survival,events,at_risk\n";
    for (int t = 0; t < km.grid.num_bins(); ++t)
        os << t << ',' << format_number(km.grid.left_edge(t)) << ',' << format_number(km.survival[t]) << ','
           << km.event_counts[t] << ',' << km.at_risk[t] << '\n';
    write_output(o.out, os.str());
}

void cmd_train(const DataOptions& d, const TrainOptions& t, double val_fraction, std::uint64_t seed, double lr,
               double l2, const std::string& model_path, const OutputOptions& o) {
    const auto table = load_table(d);
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidArgument("--val-fraction must be in (0,1)");
    Rng rng(derive_seed(seed, {kSplitStream}));
    auto perm = random_permutation(table.rows(), rng);
    const auto nval = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(table.rows())));
    if (nval < 1 || nval >= table.rows()) throw InvalidArgument("dataset too small for the validation split");
    std::vector<std::size_t> val(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(nval));
    std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(nval), perm.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());

    TrainedModel m;
    m.stats = fit_preprocess(table, train);
    Dataset tr{apply_preprocess(table, m.stats, train), {}};
    m.grid = build_time_grid(tr.records, d.bin_width);
    tr.grid = m.grid;
    const Dataset va{apply_preprocess(table, m.stats, val), m.grid};

    TrainRun run = make_run(t);
    run.learning_rate = lr;
    run.l2_coefficient = l2;
    run.seed = derive_seed(seed, {kTrainStream});
    auto result = train_model(run, tr, va, [&](const EpochRecord& e) {
        if (t.progress)
            std::cerr << "epoch " << e.epoch << " loss " << e.train_loss << " val_cindex " << e.val_cindex << '\n';
    });
    m.loss = run.loss;
    m.wm_score = run.wm_score;
    m.network = std::move(result.network);
    save_model(m, model_path);
    emit_json(o, {{"model", model_path},
                  {"loss", to_string(run.loss.kind)},
                  {"train_rows", train.size()},
                  {"val_rows", val.size()},
                  {"num_bins", m.grid.num_bins()},
                  {"best_epoch", result.best_epoch},
                  {"epochs_run", result.history.size()},
                  {"best_val_cindex", result.best_val_cindex}});
}

void cmd_evaluate(const DataOptions& d, const std::string& model_path, const std::string& scores_path,
                  const CIndexOptions& copt, const OutputOptions& o) {
    if (model_path.empty() == scores_path.empty()) throw InvalidArgument("evaluate needs exactly one of --model or --scores");
    const auto table = load_table(d);
    std::vector<double> scores;
    if (!model_path.empty()) {
        scores = load_model(model_path).scores(table, all_rows(table.rows()));
    } else {
        const auto rows = parse_csv(read_text_file(scores_path));
        if (rows.empty() || rows[0].fields.size() != 1 || rows[0].fields[0] != "score")
            throw ParseError("scores file: expected a single `score` column");
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto v = rows[r].fields.size() == 1 ? detail::parse_double(rows[r].fields[0]) : std::nullopt;
            if (!v || !std::isfinite(*v)) throw ParseError("scores file line " + std::to_string(rows[r].line) + ": bad score");
            scores.push_back(*v);
        }
        if (scores.size() != table.rows())
            throw InvalidArgument("scores file has " + std::to_string(scores.size()) + " rows, dataset has " +
                                  std::to_string(table.rows()));
    }
    Dataset data;
    for (std::size_t r = 0; r < table.rows(); ++r) data.records.push_back({{}, table.times[r], table.events[r] != 0});
    data.grid = build_time_grid(data.records, d.bin_width);
    const double c = c_index(data, scores, copt);
    if (format_of(o) == ReportFormat::json) {
        nlohmann::json j = {{"c_index", c}, {"rows", table.rows()}};
        if (copt.max_pairs == 0) {
            const auto counts = concordance_counts(data, scores);
            j["concordant"] = counts.concordant;
            j["tied"] = counts.tied;
            j["pairs"] = counts.total;
        }
        emit_json(o, j);
    } else {
        write_output(o.out, "c_index\n" + format_number(c) + "\n");
    }
}

void cmd_synth(const SyntheticSpec& spec, const OutputOptions& o) {
    const auto s = generate_synthetic(spec);
    std::ostringstream os;
    os << "time,event";
    for (std::size_t j = 0; j < spec.num_features; ++j) os << ",x" << j;
    os << '\n';
    for (const auto& r : s.dataset.records) {
        os << format_number(r.time) << ',' << (r.observed ? 1 : 0);
        for (double v : r.features) os << ',' << format_number(v);
        os << '\n';
    }
    write_output(o.out, os.str());
    if (o.out.empty() || o.out == "-") return;
    std::ostringstream schema;
    schema << "# synthetic: n=" << spec.n << " censor_fraction=" << spec.censor_fraction << " seed=" << spec.seed << '\n'
           << "delimiter = ,\ncolumn time = time\ncolumn event = event_indicator\n";
    for (std::size_t j = 0; j < spec.num_features; ++j) schema << "column x" << j << " = continuous\n";
    write_output(fs::path(o.out).replace_extension(".schema").string(), schema.str());
}

std::string json_escape(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Survival ranking models with censored data: Kaplan-Meier, Cox, pairwise ranking and WM losses"};
    app.require_subcommand(1);

    DataOptions data;
    TrainOptions train;
    CvOptions cv;
    OutputOptions out;

    auto* km = app.add_subcommand("km", "Kaplan-Meier survival on the time grid");
    add_data(km, data);
    add_output(km, out);

    double lr = 1e-3, l2 = 0.0;
    std::string model_path;
    auto* tr = app.add_subcommand("train", "train one model and save a checkpoint");
    add_data(tr, data);
    add_training(tr, train);
    add_output(tr, out);
    tr->add_option("--val-fraction", cv.val_fraction, "validation share");
    tr->add_option("--seed", cv.seed);
    tr->add_option("--lr", lr, "learning rate");
    tr->add_option("--l2", l2, "L2 coefficient on weights");
    tr->add_option("--model", model_path, "checkpoint output path")->required();

    std::string scores_path;
    CIndexOptions copt;
    auto* ev = app.add_subcommand("evaluate", "C-index of a checkpoint or of a scores file on a dataset");
    add_data(ev, data);
    add_output(ev, out);
    ev->add_option("--model", model_path, "checkpoint written by `train`");
    ev->add_option("--scores", scores_path, "CSV with a `score` column, one row per dataset row, higher = later event");
    ev->add_option("--max-pairs", copt.max_pairs, "subsample this many acceptable pairs (0 = exact)");
    ev->add_option("--seed", copt.seed, "pair subsampling seed");

    auto* cvc = app.add_subcommand("cv", "k-fold cross-validation with per-fold grid search");
    add_data(cvc, data);
    add_training(cvc, train);
    add_cv(cvc, cv);
    add_output(cvc, out);
    std::string mode = "with_censored";
    cvc->add_option("--mode", mode, "with_censored, no_censored or death_at_censoring");

    std::string losses = "wm,rank-sigmoid,cox-efron";
    auto* ab = app.add_subcommand("ablate-censoring", "losses x censoring-handling modes");
    add_data(ab, data);
    add_training(ab, train);
    add_cv(ab, cv);
    add_output(ab, out);
    ab->add_option("--losses", losses, "comma separated loss names");

    std::string fractions;
    auto* sw = app.add_subcommand("sweep-censoring", "test C-index as extra training records are censored");
    add_data(sw, data);
    add_training(sw, train);
    add_cv(sw, cv);
    add_output(sw, out);
    sw->add_option("--fractions", fractions, "comma separated target censored fractions (default: native, 0.4 .. 0.9)");

    SyntheticSpec spec;
    auto* sy = app.add_subcommand("synth", "generate a synthetic survival dataset (writes <out>.schema too)");
    add_output(sy, out);
    sy->add_option("--n", spec.n);
    sy->add_option("--features", spec.num_features);
    sy->add_option("--censor-fraction", spec.censor_fraction);
    sy->add_option("--tie-density", spec.tie_density, "0 = continuous times; q floors times to multiples of q*horizon");
    sy->add_option("--signal", spec.signal, "standard deviation of the true log hazard");
    sy->add_option("--horizon", spec.horizon);
    sy->add_option("--seed", spec.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: {\"kind\":\"usage\",\"message\":" << json_escape(e.what()) << "}\n";
        return 2;
    }

    try {
        if (km->parsed()) {
            cmd_km(data, out);
        } else if (tr->parsed()) {
            cmd_train(data, train, cv.val_fraction, cv.seed, lr, l2, model_path, out);
        } else if (ev->parsed()) {
            cmd_evaluate(data, model_path, scores_path, copt, out);
        } else if (cvc->parsed()) {
            auto cfg = make_cv(train, cv);
            cfg.mode = parse_censoring_mode(mode);
            emit_report(run_cv(load_experiment(data), cfg), format_of(out), out.out);
        } else if (ab->parsed()) {
            std::vector<LossKind> kinds;
            for (const auto& f : split_list(losses)) kinds.push_back(parse_loss(f));
            const auto rows = censoring_ablation(load_experiment(data), make_cv(train, cv), kinds);
            write_output(out.out, render_ablation(rows, format_of(out)));
        } else if (sw->parsed()) {
            const auto exp = load_experiment(data);
            std::vector<double> fr;
            if (fractions.empty()) {
                const double native = exp.censored_fraction();
                fr.push_back(native);
                for (int p = 4; p <= 9; ++p)
                    if (p / 10.0 > native + 1e-9) fr.push_back(p / 10.0);
            } else {
                fr = parse_double_list(fractions);
            }
            write_output(out.out, render_sweep(censoring_sweep(exp, make_cv(train, cv), fr), format_of(out)));
        } else if (sy->parsed()) {
            cmd_synth(spec, out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: {\"kind\":\"" << error_kind(e) << "\",\"message\":" << json_escape(e.what()) << "}\n";
        return 1;
    }
    return 0;
}
