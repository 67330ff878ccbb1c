#pragma once

#include <string>

#include <json.hpp>

#include "censrank/harness.hpp"
#include "censrank/report.hpp"
#include "censrank/pipeline.hpp"

namespace censrank {

/// A trained network together with everything needed to score raw rows:
/// fitted preprocessing, the training time grid and the loss it was fit with.
struct TrainedModel {
    LossConfig loss;
    WmScore wm_score = WmScore::expectation;
    PreprocessStats stats;
    TimeGrid grid;
    Network network;

    /// Evaluation scores ("higher = later") for the given rows of a table.
    std::vector<double> scores(const RawTable& table, std::span<const std::size_t> rows) const {
        Dataset d{apply_preprocess(table, stats, rows), grid};
        return evaluation_scores(network, loss.kind, feature_matrix(d), wm_score);
    }

    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);
};

inline nlohmann::json preprocess_stats_json(const PreprocessStats& s) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : s.columns) {
        nlohmann::json j = {{"name", c.name},
                            {"kind", c.kind == ColumnKind::continuous ? "continuous" : "categorical"},
                            {"missing_indicator", c.missing_indicator}};
        if (c.kind == ColumnKind::continuous) {
            j["min"] = c.min;
            j["max"] = c.max;
        } else {
            j["levels"] = c.levels;
        }
        cols.push_back(std::move(j));
    }
    return cols;
}

inline PreprocessStats preprocess_stats_from_json(const nlohmann::json& j) {
    PreprocessStats s;
    for (const auto& c : j) {
        ColumnStats cs;
        cs.name = c.at("name").get<std::string>();
        const auto kind = c.at("kind").get<std::string>();
        if (kind == "continuous") {
            cs.kind = ColumnKind::continuous;
            cs.min = c.at("min").get<double>();
            cs.max = c.at("max").get<double>();
        } else if (kind == "categorical") {
            cs.kind = ColumnKind::categorical;
            cs.levels = c.at("levels").get<std::vector<std::string>>();
        } else {
            throw ParseError("model: unknown column kind '" + kind + "'");
        }
        cs.missing_indicator = c.at("missing_indicator").get<bool>();
        s.columns.push_back(std::move(cs));
    }
    return s;
}

inline nlohmann::json TrainedModel::to_json() const {
    return {{"format", "censrank-model"},
            {"version", 1},
            {"loss",
             {{"kind", to_string(loss.kind)},
              {"rank_sign", loss.rank_sign == RankSign::concordant ? "concordant" : "literal"},
              {"wm_l", loss.wm_l},
              {"wm_smoothing", loss.wm_smoothing},
              {"km_impute", to_string(loss.km_impute)}}},
            {"wm_score", wm_score == WmScore::expectation ? "expectation" : "median"},
            {"grid", {{"bin_width", grid.bin_width()}, {"num_bins", grid.num_bins()}, {"origin", grid.origin()}}},
            {"preprocess", preprocess_stats_json(stats)},
            {"network", network.to_json()}};
}

inline TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "censrank-model") throw ParseError("model: not a censrank-model document");
    if (j.value("version", 0) != 1) throw ParseError("model: unsupported version");
    try {
        TrainedModel m;
        const auto& l = j.at("loss");
        m.loss.kind = parse_loss(l.at("kind").get<std::string>());
        m.loss.rank_sign = l.at("rank_sign").get<std::string>() == "literal" ? RankSign::literal : RankSign::concordant;
        m.loss.wm_l = l.at("wm_l").get<double>();
        m.loss.wm_smoothing = l.at("wm_smoothing").get<double>();
        m.loss.km_impute = parse_impute_mode(l.at("km_impute").get<std::string>());
        m.wm_score = j.at("wm_score").get<std::string>() == "median" ? WmScore::median : WmScore::expectation;
        const auto& g = j.at("grid");
        m.grid = TimeGrid(g.at("bin_width").get<double>(), g.at("num_bins").get<int>(), g.at("origin").get<double>());
        m.stats = preprocess_stats_from_json(j.at("preprocess"));
        m.network = Network::from_json(j.at("network"));
        if (static_cast<std::size_t>(m.network.config().input_dim) != m.stats.output_width())
            throw ParseError("model: network input width does not match the preprocessing");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
}

inline void save_model(const TrainedModel& m, const std::string& path) { write_output(path, m.to_json().dump() + "\n"); }

inline TrainedModel load_model(const std::string& path) {
    const auto text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model '" + path + "': " + e.what());
    }
    return TrainedModel::from_json(j);
}

}  // namespace censrank
