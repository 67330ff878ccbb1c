#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "censrank/core.hpp"
#include "censrank/rng.hpp"

namespace censrank {

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

enum class ColumnKind { continuous, categorical, time, event_indicator };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    std::string missing;  // sentinel; a cell equal to it is missing
};

/// Column declarations. Undeclared CSV columns are ignored.
///
/// Text format, one `key = value` per line, `#` starts a comment:
///
///     delimiter = ,
///     missing = NA                     # default sentinel (may be empty)
///     column time = time
///     column died = event_indicator
///     column age = continuous
///     column sex = categorical missing=?
///
/// Exactly one `time` and one `event_indicator` column are required.
struct DatasetSchema {
    char delimiter = ',';
    std::vector<ColumnSpec> columns;

    const ColumnSpec& time_column() const { return only(ColumnKind::time); }
    const ColumnSpec& event_column() const { return only(ColumnKind::event_indicator); }

    std::vector<ColumnSpec> feature_columns() const {
        std::vector<ColumnSpec> out;
        for (const auto& c : columns)
            if (c.kind == ColumnKind::continuous || c.kind == ColumnKind::categorical) out.push_back(c);
        return out;
    }

    void validate() const {
        (void)time_column();
        (void)event_column();
        for (std::size_t i = 0; i < columns.size(); ++i)
            for (std::size_t j = i + 1; j < columns.size(); ++j)
                if (columns[i].name == columns[j].name)
                    throw ParseError("schema: column '" + columns[i].name + "' declared twice");
    }

private:
    const ColumnSpec& only(ColumnKind k) const {
        const ColumnSpec* found = nullptr;
        for (const auto& c : columns) {
            if (c.kind != k) continue;
            if (found) throw ParseError("schema: more than one " + std::string(kind_name(k)) + " column");
            found = &c;
        }
        if (!found) throw ParseError("schema: no " + std::string(kind_name(k)) + " column declared");
        return *found;
    }

public:
    static const char* kind_name(ColumnKind k) {
        switch (k) {
            case ColumnKind::continuous: return "continuous";
            case ColumnKind::categorical: return "categorical";
            case ColumnKind::time: return "time";
            case ColumnKind::event_indicator: return "event_indicator";
        }
        return "?";
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> parse_double(std::string_view s) {
    const auto t = trim(s);
    if (t.empty()) return std::nullopt;
    double v = 0.0;
    const auto* first = t.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

inline std::optional<bool> parse_event(std::string_view s) {
    const auto t = trim(s);
    if (t == "true" || t == "TRUE" || t == "True") return true;
    if (t == "false" || t == "FALSE" || t == "False") return false;
    const auto v = parse_double(t);
    if (v && *v == 1.0) return true;
    if (v && *v == 0.0) return false;
    return std::nullopt;
}

}  // namespace detail

inline DatasetSchema parse_schema(std::string_view text) {
    DatasetSchema schema;
    std::string default_missing;
    struct Pending {
        std::string name, kind;
        std::optional<std::string> missing;
        int line;
    };
    std::vector<Pending> pending;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (detail::trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("schema line " + std::to_string(lineno) + ": expected key = value");
        const auto key = detail::trim(std::string_view(line).substr(0, eq));
        const auto value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key == "delimiter") {
            if (value == "\\t" || value == "tab") schema.delimiter = '\t';
            else if (value.size() == 1) schema.delimiter = value[0];
            else throw ParseError("schema line " + std::to_string(lineno) + ": delimiter must be one character");
        } else if (key == "missing") {
            default_missing = value;
        } else if (key.rfind("column ", 0) == 0) {
            Pending p{detail::trim(std::string_view(key).substr(7)), {}, std::nullopt, lineno};
            std::istringstream vs(value);
            vs >> p.kind;
            std::string opt;
            while (vs >> opt) {
                if (opt.rfind("missing=", 0) == 0) p.missing = opt.substr(8);
                else throw ParseError("schema line " + std::to_string(lineno) + ": unknown option '" + opt + "'");
            }
            pending.push_back(std::move(p));
        } else {
            throw ParseError("schema line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    for (auto& p : pending) {
        ColumnSpec c;
        c.name = p.name;
        if (p.kind == "continuous") c.kind = ColumnKind::continuous;
        else if (p.kind == "categorical") c.kind = ColumnKind::categorical;
        else if (p.kind == "time") c.kind = ColumnKind::time;
        else if (p.kind == "event_indicator" || p.kind == "event") c.kind = ColumnKind::event_indicator;
        else throw ParseError("schema line " + std::to_string(p.line) + ": unknown column kind '" + p.kind + "'");
        c.missing = p.missing.value_or(default_missing);
        schema.columns.push_back(std::move(c));
    }
    schema.validate();
    return schema;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline DatasetSchema load_schema(const std::string& path) { return parse_schema(read_text_file(path)); }

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvRow {
    std::vector<std::string> fields;
    int line = 0;  // 1-based line where the row starts
};

/// RFC-4180 style reader: quoted fields may contain the delimiter, doubled
/// quotes and line breaks. Blank lines are skipped.
inline std::vector<CsvRow> parse_csv(std::string_view text, char delimiter = ',') {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool in_quotes = false, field_quoted = false, row_has_content = false;
    int line = 1;
    row.line = 1;
    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_quoted = false;
    };
    auto end_row = [&] {
        end_field();
        if (row_has_content || row.fields.size() > 1) rows.push_back(std::move(row));
        row = CsvRow{};
        row_has_content = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && field.empty() && !field_quoted) {
            in_quotes = field_quoted = row_has_content = true;
        } else if (ch == delimiter) {
            end_field();
        } else if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            continue;
        } else if (ch == '\n') {
            end_row();
            row.line = ++line;
        } else {
            field.push_back(ch);
            row_has_content = true;
        }
    }
    if (in_quotes) throw ParseError("csv: unterminated quoted field starting near line " + std::to_string(row.line));
    if (row_has_content || !row.fields.empty()) end_row();
    return rows;
}

/// One feature column as read from the file.
struct RawColumn {
    ColumnSpec spec;
    std::vector<double> numeric;      // continuous values (NaN when missing)
    std::vector<std::string> text;    // categorical levels
    std::vector<char> missing;
};

struct RawTable {
    DatasetSchema schema;
    std::vector<double> times;
    std::vector<char> events;
    std::vector<RawColumn> columns;  // schema feature order

    std::size_t rows() const { return times.size(); }
};

inline RawTable parse_table(std::string_view text, const DatasetSchema& schema) {
    schema.validate();
    auto rows = parse_csv(text, schema.delimiter);
    if (rows.empty()) throw ParseError("csv: no header row");
    const auto header = rows.front().fields;
    auto find = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (detail::trim(header[i]) == name) return i;
        throw ParseError("csv: missing column '" + name + "'");
    };
    const auto time_col = find(schema.time_column().name);
    const auto event_col = find(schema.event_column().name);
    RawTable table;
    table.schema = schema;
    std::vector<std::size_t> feature_pos;
    for (const auto& c : schema.feature_columns()) {
        feature_pos.push_back(find(c.name));
        table.columns.push_back(RawColumn{c, {}, {}, {}});
    }

    std::vector<std::string> bad;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        if (f.size() != header.size()) {
            bad.push_back("line " + std::to_string(rows[r].line) + " (expected " + std::to_string(header.size()) +
                          " fields, found " + std::to_string(f.size()) + ")");
            continue;
        }
        const auto t = detail::parse_double(f[time_col]);
        const auto e = detail::parse_event(f[event_col]);
        if (!t || !std::isfinite(*t) || *t < 0.0) {
            bad.push_back("line " + std::to_string(rows[r].line) + " (time '" + f[time_col] + "')");
            continue;
        }
        if (!e) {
            bad.push_back("line " + std::to_string(rows[r].line) + " (event '" + f[event_col] + "')");
            continue;
        }
        table.times.push_back(*t);
        table.events.push_back(*e ? 1 : 0);
        for (std::size_t c = 0; c < feature_pos.size(); ++c) {
            auto& col = table.columns[c];
            const auto cell = detail::trim(f[feature_pos[c]]);
            const bool miss = cell == col.spec.missing;
            col.missing.push_back(miss ? 1 : 0);
            if (col.spec.kind == ColumnKind::continuous) {
                if (miss) {
                    col.numeric.push_back(std::nan(""));
                } else {
                    const auto v = detail::parse_double(cell);
                    if (!v || !std::isfinite(*v)) {
                        throw ParseError("csv line " + std::to_string(rows[r].line) + ": column '" + col.spec.name +
                                         "' value '" + cell + "' is not a number");
                    }
                    col.numeric.push_back(*v);
                }
            } else {
                col.text.push_back(miss ? std::string() : cell);
            }
        }
    }
    if (!bad.empty()) {
        std::string msg = "csv: " + std::to_string(bad.size()) + " malformed row(s): ";
        for (std::size_t i = 0; i < bad.size() && i < 20; ++i) msg += (i ? ", " : "") + bad[i];
        if (bad.size() > 20) msg += ", ...";
        throw ParseError(msg);
    }
    return table;
}

inline RawTable load_csv(const std::string& path, const DatasetSchema& schema) {
    return parse_table(read_text_file(path), schema);
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

struct ColumnStats {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    double min = 0.0, max = 0.0;        // continuous only
    std::vector<std::string> levels;    // categorical only, sorted
    bool missing_indicator = false;

    friend bool operator==(const ColumnStats&, const ColumnStats&) = default;
};

/// Encoding statistics fitted on the training rows only.
struct PreprocessStats {
    std::vector<ColumnStats> columns;

    std::size_t output_width() const {
        std::size_t w = 0;
        for (const auto& c : columns) w += (c.kind == ColumnKind::continuous ? 1 : c.levels.size()) + c.missing_indicator;
        return w;
    }

    std::vector<std::string> feature_names() const {
        std::vector<std::string> names;
        for (const auto& c : columns) {
            if (c.kind == ColumnKind::continuous) names.push_back(c.name);
            else
                for (const auto& l : c.levels) names.push_back(c.name + "=" + l);
            if (c.missing_indicator) names.push_back(c.name + ":missing");
        }
        return names;
    }

    friend bool operator==(const PreprocessStats&, const PreprocessStats&) = default;
};

inline PreprocessStats fit_preprocess(const RawTable& table, std::span<const std::size_t> rows) {
    PreprocessStats stats;
    for (const auto& col : table.columns) {
        ColumnStats cs;
        cs.name = col.spec.name;
        cs.kind = col.spec.kind;
        bool seen = false;
        for (auto r : rows) {
            if (col.missing[r]) {
                cs.missing_indicator = true;
                continue;
            }
            if (cs.kind == ColumnKind::continuous) {
                const double v = col.numeric[r];
                cs.min = seen ? std::min(cs.min, v) : v;
                cs.max = seen ? std::max(cs.max, v) : v;
                seen = true;
            } else {
                cs.levels.push_back(col.text[r]);
            }
        }
        std::sort(cs.levels.begin(), cs.levels.end());
        cs.levels.erase(std::unique(cs.levels.begin(), cs.levels.end()), cs.levels.end());
        stats.columns.push_back(std::move(cs));
    }
    return stats;
}

/// Applies fitted statistics: continuous -> (x - min)/(max - min) (0 when the
/// training range is degenerate, 0 when missing); categorical -> one-hot over
/// the training levels (unseen or missing -> all zeros); plus one 0/1 missing
/// indicator for every column that had a missing value in the training rows.
inline std::vector<SurvivalRecord> apply_preprocess(const RawTable& table, const PreprocessStats& stats,
                                                    std::span<const std::size_t> rows) {
    if (stats.columns.size() != table.columns.size()) throw InvalidArgument("preprocess: stats do not match table");
    const auto width = stats.output_width();
    std::vector<SurvivalRecord> out;
    out.reserve(rows.size());
    for (auto r : rows) {
        SurvivalRecord rec;
        rec.time = table.times[r];
        rec.observed = table.events[r] != 0;
        rec.features.reserve(width);
        for (std::size_t c = 0; c < stats.columns.size(); ++c) {
            const auto& cs = stats.columns[c];
            const auto& col = table.columns[c];
            const bool miss = col.missing[r] != 0;
            if (cs.kind == ColumnKind::continuous) {
                const double range = cs.max - cs.min;
                rec.features.push_back(miss || range <= 0.0 ? 0.0 : (col.numeric[r] - cs.min) / range);
            } else {
                const auto it = std::lower_bound(cs.levels.begin(), cs.levels.end(), col.text[r]);
                const bool hit = !miss && it != cs.levels.end() && *it == col.text[r];
                const auto pos = static_cast<std::size_t>(it - cs.levels.begin());
                for (std::size_t l = 0; l < cs.levels.size(); ++l) rec.features.push_back(hit && l == pos ? 1.0 : 0.0);
            }
            if (cs.missing_indicator) rec.features.push_back(miss ? 1.0 : 0.0);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

struct Preprocessed {
    std::vector<SurvivalRecord> records;
    PreprocessStats stats;
};

/// Fits on `rows` when `stats` is empty, then encodes `rows`.
inline Preprocessed preprocess(const RawTable& table, std::optional<PreprocessStats> stats,
                               std::span<const std::size_t> rows) {
    Preprocessed p;
    p.stats = stats ? std::move(*stats) : fit_preprocess(table, rows);
    p.records = apply_preprocess(table, p.stats, rows);
    return p;
}

inline void write_feature_csv(std::ostream& os, const std::vector<std::string>& names,
                              const std::vector<SurvivalRecord>& records) {
    for (const auto& n : names) os << '"' << n << "\",";
    os << "time,event\n";
    char buf[32];
    for (const auto& r : records) {
        for (double v : r.features) {
            const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
            os.write(buf, p - buf);
            os << ',';
        }
        const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, r.time);
        os.write(buf, p - buf);
        os << ',' << (r.observed ? 1 : 0) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Cross-validation folds
// ---------------------------------------------------------------------------

struct FoldIndices {
    std::vector<std::size_t> train, val, test;
};

/// k disjoint, exhaustive test folds from one seeded permutation; each fold's
/// validation set is a seeded `val_fraction` draw from its remaining rows.
inline std::vector<FoldIndices> kfold_split(std::size_t n, int k, double val_fraction, std::uint64_t seed) {
    if (k < 2) throw InvalidArgument("kfold_split: k must be >= 2");
    if (n < static_cast<std::size_t>(k)) throw InvalidArgument("kfold_split: fewer rows than folds");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidArgument("kfold_split: val_fraction must be in (0,1)");
    Rng rng(derive_seed(seed, {0}));
    const auto perm = random_permutation(n, rng);
    std::vector<FoldIndices> folds(k);
    const std::size_t base = n / k, extra = n % k;
    std::size_t start = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
        std::vector<std::size_t> rest;
        for (std::size_t p = 0; p < n; ++p) {
            if (p >= start && p < start + size) folds[f].test.push_back(perm[p]);
            else rest.push_back(perm[p]);
        }
        Rng vr(derive_seed(seed, {1, static_cast<std::uint64_t>(f)}));
        shuffle_in_place(std::span<std::size_t>(rest), vr);
        auto nval = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(rest.size())));
        nval = std::clamp<std::size_t>(nval, rest.size() > 1 ? 1 : 0, rest.size() > 1 ? rest.size() - 1 : 0);
        folds[f].val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(nval));
        folds[f].train.assign(rest.begin() + static_cast<std::ptrdiff_t>(nval), rest.end());
        std::sort(folds[f].test.begin(), folds[f].test.end());
        std::sort(folds[f].val.begin(), folds[f].val.end());
        std::sort(folds[f].train.begin(), folds[f].train.end());
        start += size;
    }
    return folds;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct SyntheticSpec {
    std::size_t n = 1000;
    std::size_t num_features = 10;
    double censor_fraction = 0.3;
    /// 0 keeps continuous times; q in (0, 1] floors times to multiples of q * horizon.
    double tie_density = 0.0;
    std::uint64_t seed = 0;
    /// Standard deviation of the log-hazard.
    double signal = 10.0;
    double horizon = 1000.0;  // days
    double bin_width = 10.0;
};

struct SyntheticData {
    Dataset dataset;
    std::vector<double> log_hazard;  // true per-record log hazard (higher = earlier event)
};

/// Features x ~ N(0, I). The log hazard is signal * <beta, x> / |beta| over the
/// first (up to) three features; latent event times are exponential with that
/// hazard, censoring times exponential with a constant rate solved so that the
/// expected censored fraction equals `censor_fraction`. Latent times are mapped
/// to [0, horizon) days by a fixed increasing logistic transform.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n == 0 || spec.num_features == 0) throw InvalidArgument("generate_synthetic: n and num_features must be >= 1");
    if (!(spec.censor_fraction >= 0.0 && spec.censor_fraction < 1.0))
        throw InvalidArgument("generate_synthetic: censor_fraction must be in [0,1)");
    if (!(spec.tie_density >= 0.0 && spec.tie_density <= 1.0))
        throw InvalidArgument("generate_synthetic: tie_density must be in [0,1]");
    if (!(spec.signal > 0.0) || !(spec.horizon > 0.0) || !(spec.bin_width > 0.0))
        throw InvalidArgument("generate_synthetic: signal, horizon and bin_width must be positive");

    Rng rng(derive_seed(spec.seed, {0}));
    std::normal_distribution<double> normal;
    std::exponential_distribution<double> expo(1.0);
    const double beta_all[3] = {1.0, -0.7, 0.5};
    const std::size_t active = std::min<std::size_t>(3, spec.num_features);
    double norm = 0.0;
    for (std::size_t j = 0; j < active; ++j) norm += beta_all[j] * beta_all[j];
    norm = std::sqrt(norm);

    SyntheticData out;
    std::vector<double> latent_event(spec.n);
    out.dataset.records.resize(spec.n);
    out.log_hazard.resize(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        auto& f = out.dataset.records[i].features;
        f.resize(spec.num_features);
        for (auto& v : f) v = normal(rng);
        double eta = 0.0;
        for (std::size_t j = 0; j < active; ++j) eta += beta_all[j] * f[j];
        eta *= spec.signal / norm;
        out.log_hazard[i] = eta;
        latent_event[i] = expo(rng) / std::exp(eta);
    }

    // P(censored | eta) = mu / (mu + exp(eta)); solve mean = target in log mu.
    double mu = 0.0;
    if (spec.censor_fraction > 0.0) {
        auto frac = [&](double log_mu) {
            double s = 0.0;
            for (double eta : out.log_hazard) s += 1.0 / (1.0 + std::exp(eta - log_mu));
            return s / static_cast<double>(spec.n);
        };
        double lo = -50.0 - 5.0 * spec.signal, hi = 50.0 + 5.0 * spec.signal;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (frac(mid) < spec.censor_fraction ? lo : hi) = mid;
        }
        mu = std::exp(0.5 * (lo + hi));
    }

    const double loc = -0.5772156649015329;  // E[log Exp(1)]
    const double scale = std::sqrt(spec.signal * spec.signal + 1.6449340668482264) / 1.5;
    const double quantum = spec.tie_density * spec.horizon;
    for (std::size_t i = 0; i < spec.n; ++i) {
        auto& r = out.dataset.records[i];
        double latent = latent_event[i];
        r.observed = true;
        if (mu > 0.0) {
            const double c = expo(rng) / mu;
            if (c < latent) {
                latent = c;
                r.observed = false;
            }
        }
        const double u = (std::log(latent) - loc) / scale;
        double t = spec.horizon / (1.0 + std::exp(-u));
        t = std::clamp(t, 0.0, std::nextafter(spec.horizon, 0.0));
        if (quantum > 0.0) t = std::floor(t / quantum) * quantum;
        r.time = t;
    }
    out.dataset.grid = build_time_grid(out.dataset.records, spec.bin_width);
    return out;
}

}  // namespace censrank
