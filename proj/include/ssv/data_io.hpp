#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ssv/classifier.hpp"
#include "ssv/csv.hpp"
#include "ssv/errors.hpp"
#include "ssv/npsmle.hpp"
#include "ssv/sentiment_bars.hpp"
#include "ssv/text.hpp"
#include "ssv/timestamps.hpp"

namespace ssv {

// ---------------------------------------------------------------------------
// volatility-index transforms

enum class VixConvention { logvar_annual, logvix };

inline const char* to_string(VixConvention c) {
    return c == VixConvention::logvar_annual ? "logvar_annual" : "logvix";
}

inline VixConvention vix_convention_from_string(const std::string& s) {
    if (s == "logvar_annual") return VixConvention::logvar_annual;
    if (s == "logvix") return VixConvention::logvix;
    throw config_error("unknown vix transform '" + s + "'");
}

/// Maps a volatility-index quote (in index points, e.g. 20 for 20%) to the
/// model's log-variance state. The default treats the squared annualized
/// index as the variance proxy: v = 2 ln(q/100). The alternative keeps the
/// log index itself: v = ln(q/100).
inline double vix_to_logvar(double quote, VixConvention convention) {
    if (!(quote > 0.0) || !std::isfinite(quote))
        throw data_error("vix_to_logvar: quote must be positive and finite");
    const double lv = std::log(quote / 100.0);
    return convention == VixConvention::logvar_annual ? 2.0 * lv : lv;
}

// ---------------------------------------------------------------------------
// bar series files

struct BarSeries {
    std::vector<MinuteStamp> timestamps;
    std::vector<double> values;
};

/// Reads a `timestamp,value` CSV. Rejects, with the offending row number:
/// wrong header, malformed rows, unparseable timestamps or values, duplicate
/// timestamps, and non-finite values. Rows come back sorted by time.
inline BarSeries read_bar_csv(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    if (table.header != std::vector<std::string>{"timestamp", "value"})
        throw data_error("read_bar_csv: " + path.string() +
                         ": expected header 'timestamp,value'");
    std::vector<std::pair<MinuteStamp, double>> rows;
    std::set<MinuteStamp> seen;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& fields = table.rows[i];
        const std::string where = path.string() + " row " + std::to_string(i + 2);
        if (fields.size() != 2)
            throw data_error("read_bar_csv: " + where + ": expected 2 fields, got " +
                             std::to_string(fields.size()));
        MinuteStamp t;
        if (!try_parse_timestamp(fields[0], t))
            throw data_error("read_bar_csv: " + where + ": bad timestamp '" + fields[0] + "'");
        double v;
        if (!try_parse_double(fields[1], v))
            throw data_error("read_bar_csv: " + where + ": bad value '" + fields[1] + "'");
        if (!std::isfinite(v))
            throw data_error("read_bar_csv: " + where + ": non-finite value");
        if (!seen.insert(t).second)
            throw data_error("read_bar_csv: " + where + ": duplicate timestamp '" + fields[0] +
                             "'");
        rows.emplace_back(t, v);
    }
    std::sort(rows.begin(), rows.end());
    BarSeries out;
    out.timestamps.reserve(rows.size());
    out.values.reserve(rows.size());
    for (const auto& [t, v] : rows) {
        out.timestamps.push_back(t);
        out.values.push_back(v);
    }
    return out;
}

struct GapReport {
    std::string series;
    std::size_t n_missing = 0;
    std::vector<std::string> missing;  ///< timestamps present in the union but not here
};

/// The joined three-channel dataset the estimators consume. Prices are stored
/// as log prices and the volatility index is already transformed; the
/// convention travels with the data.
struct BarDataset {
    SessionSpec session;
    VixConvention convention = VixConvention::logvar_annual;
    std::vector<MinuteStamp> timestamps;  ///< inner join, sorted
    std::vector<double> s;                ///< sentiment
    std::vector<double> p;                ///< log price
    std::vector<double> v;                ///< log variance
    std::vector<GapReport> gaps;          ///< one per input series
    std::size_t n_union = 0;
    std::size_t n_dropped = 0;  ///< union rows missing from at least one series
};

namespace detail {

inline void check_on_session_grid(const BarSeries& series, const SessionSpec& session,
                                  const std::string& name) {
    for (std::size_t i = 0; i < series.timestamps.size(); ++i) {
        const MinuteStamp t = series.timestamps[i];
        if (!session.in_session(t))
            throw data_error("ingest: " + name + " bar " + format_timestamp(t) +
                             " is outside the trading session");
        const int minute = static_cast<int>(t - session.day_of(t) * kMinutesPerDay);
        if ((minute - session.start_minute) % session.bar_minutes != 0)
            throw data_error("ingest: " + name + " bar " + format_timestamp(t) +
                             " is misaligned with the " + std::to_string(session.bar_minutes) +
                             "-minute grid");
    }
}

}  // namespace detail

/// Joins the three per-channel bar files on their timestamps. Every series
/// must already sit on the session's bar grid. The join is inner; what each
/// series is missing relative to the union of stamps is reported, not
/// repaired. Prices must be positive (they are logged here), and the
/// volatility index is mapped through `vix_to_logvar`.
inline BarDataset ingest(const std::filesystem::path& sentiment_path,
                         const std::filesystem::path& price_path,
                         const std::filesystem::path& vix_path, const SessionSpec& session = {},
                         VixConvention convention = VixConvention::logvar_annual) {
    session.validate();
    const BarSeries sent = read_bar_csv(sentiment_path);
    const BarSeries price = read_bar_csv(price_path);
    const BarSeries vix = read_bar_csv(vix_path);
    detail::check_on_session_grid(sent, session, "sentiment");
    detail::check_on_session_grid(price, session, "price");
    detail::check_on_session_grid(vix, session, "vix");

    for (std::size_t i = 0; i < price.values.size(); ++i)
        if (!(price.values[i] > 0.0))
            throw data_error("ingest: non-positive price at " +
                             format_timestamp(price.timestamps[i]));

    std::set<MinuteStamp> union_set;
    union_set.insert(sent.timestamps.begin(), sent.timestamps.end());
    union_set.insert(price.timestamps.begin(), price.timestamps.end());
    union_set.insert(vix.timestamps.begin(), vix.timestamps.end());

    std::map<MinuteStamp, double> sent_map, price_map, vix_map;
    for (std::size_t i = 0; i < sent.timestamps.size(); ++i)
        sent_map.emplace(sent.timestamps[i], sent.values[i]);
    for (std::size_t i = 0; i < price.timestamps.size(); ++i)
        price_map.emplace(price.timestamps[i], price.values[i]);
    for (std::size_t i = 0; i < vix.timestamps.size(); ++i)
        vix_map.emplace(vix.timestamps[i], vix.values[i]);

    BarDataset out;
    out.session = session;
    out.convention = convention;
    out.n_union = union_set.size();
    out.gaps = {{"sentiment", 0, {}}, {"price", 0, {}}, {"vix", 0, {}}};

    for (MinuteStamp t : union_set) {
        const auto si = sent_map.find(t);
        const auto pi = price_map.find(t);
        const auto vi = vix_map.find(t);
        if (si == sent_map.end()) {
            ++out.gaps[0].n_missing;
            out.gaps[0].missing.push_back(format_timestamp(t));
        }
        if (pi == price_map.end()) {
            ++out.gaps[1].n_missing;
            out.gaps[1].missing.push_back(format_timestamp(t));
        }
        if (vi == vix_map.end()) {
            ++out.gaps[2].n_missing;
            out.gaps[2].missing.push_back(format_timestamp(t));
        }
        if (si == sent_map.end() || pi == price_map.end() || vi == vix_map.end()) {
            ++out.n_dropped;
            continue;
        }
        out.timestamps.push_back(t);
        out.s.push_back(si->second);
        out.p.push_back(std::log(pi->second));
        out.v.push_back(vix_to_logvar(vi->second, convention));
    }
    if (out.timestamps.empty()) throw data_error("ingest: the three series share no timestamps");
    return out;
}

/// Lays the joined rows onto the estimator's uniform grid. Bars of a trading
/// day are consecutive positions; the overnight step from a day's last bar to
/// the next present day's first bar is also one position, so routine closes
/// and holiday gaps stay contiguous while missing intraday bars break the
/// transition (the estimator skips across such breaks and reports the count).
inline ObservationSeries to_observation_series(const BarDataset& data, double dt) {
    if (data.timestamps.size() < 2)
        throw data_error("to_observation_series: need at least 2 joined rows");
    std::vector<MinuteStamp> days;
    for (MinuteStamp t : data.timestamps) {
        const MinuteStamp d = data.session.day_of(t);
        if (days.empty() || days.back() != d) days.push_back(d);
    }
    std::map<MinuteStamp, std::int64_t> day_rank;
    for (std::size_t i = 0; i < days.size(); ++i) day_rank.emplace(days[i], i);

    const int bars_per_day = data.session.bars_per_day();
    ObservationSeries series;
    series.channels = 3;
    series.grid.t0 = 0.0;
    series.grid.dt = dt;
    series.grid.n_bars = data.timestamps.size() - 1;
    series.grid.m_substeps = 1;
    series.values.reserve(data.timestamps.size() * 3);
    series.row_index.reserve(data.timestamps.size());
    std::int64_t prev_pos = -1;
    for (std::size_t i = 0; i < data.timestamps.size(); ++i) {
        const MinuteStamp t = data.timestamps[i];
        const std::int64_t day_pos = day_rank.at(data.session.day_of(t));
        std::int64_t pos = day_pos * bars_per_day + data.session.bar_of_day(t);
        if (pos <= prev_pos)
            throw data_error("to_observation_series: grid positions are not increasing");
        prev_pos = pos;
        series.row_index.push_back(pos);
        series.values.push_back(data.s[i]);
        series.values.push_back(data.p[i]);
        series.values.push_back(data.v[i]);
    }
    series.validate();
    return series;
}

/// Reads an estimator input table: header `timestamp,s` (sentiment only) or
/// `timestamp,s,p,v` (the full triple, log price and log variance already
/// transformed). Timestamps are either wall-clock stamps, which are laid onto
/// the trading-session grid, or plain integers naming grid positions
/// directly; one file must stick to one style. `dt` is the bar length in
/// model time units.
inline ObservationSeries read_series_csv(const std::filesystem::path& path, double dt,
                                         const SessionSpec& session = {}) {
    const CsvTable table = read_csv(path);
    int channels;
    if (table.header == std::vector<std::string>{"timestamp", "s"})
        channels = 1;
    else if (table.header == std::vector<std::string>{"timestamp", "s", "p", "v"})
        channels = 3;
    else
        throw data_error("read_series_csv: " + path.string() +
                         ": expected header 'timestamp,s' or 'timestamp,s,p,v'");
    if (table.rows.size() < 2)
        throw data_error("read_series_csv: " + path.string() + ": need at least 2 rows");

    enum class Style { unknown, wall_clock, numeric } style = Style::unknown;
    std::vector<MinuteStamp> stamps;
    std::vector<std::int64_t> numeric_pos;
    std::vector<double> values;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& fields = table.rows[i];
        const std::string where = path.string() + " row " + std::to_string(i + 2);
        if (static_cast<int>(fields.size()) != channels + 1)
            throw data_error("read_series_csv: " + where + ": expected " +
                             std::to_string(channels + 1) + " fields");
        MinuteStamp t;
        double x;
        if (try_parse_timestamp(fields[0], t)) {
            if (style == Style::numeric)
                throw data_error("read_series_csv: " + where + ": mixed timestamp styles");
            style = Style::wall_clock;
            stamps.push_back(t);
        } else if (try_parse_double(fields[0], x)) {
            if (style == Style::wall_clock)
                throw data_error("read_series_csv: " + where + ": mixed timestamp styles");
            style = Style::numeric;
            const double r = std::round(x);
            if (!std::isfinite(x) || std::abs(x - r) > 1e-6)
                throw data_error("read_series_csv: " + where +
                                 ": numeric timestamps must be whole grid positions");
            numeric_pos.push_back(static_cast<std::int64_t>(r));
        } else {
            throw data_error("read_series_csv: " + where + ": bad timestamp '" + fields[0] + "'");
        }
        for (int c = 1; c <= channels; ++c) {
            double v;
            if (!try_parse_double(fields[static_cast<std::size_t>(c)], v) || !std::isfinite(v))
                throw data_error("read_series_csv: " + where + ": bad value '" +
                                 fields[static_cast<std::size_t>(c)] + "'");
            values.push_back(v);
        }
    }

    ObservationSeries series;
    series.channels = channels;
    series.grid.t0 = 0.0;
    series.grid.dt = dt;
    series.grid.n_bars = static_cast<std::int64_t>(table.rows.size()) - 1;
    series.grid.m_substeps = 1;
    series.values = std::move(values);
    if (style == Style::numeric) {
        series.row_index = std::move(numeric_pos);
    } else {
        session.validate();
        for (std::size_t i = 1; i < stamps.size(); ++i)
            if (stamps[i] <= stamps[i - 1])
                throw data_error("read_series_csv: " + path.string() +
                                 ": wall-clock timestamps must be strictly increasing");
        for (MinuteStamp t : stamps) {
            if (!session.in_session(t))
                throw data_error("read_series_csv: " + format_timestamp(t) +
                                 " is outside the trading session");
            const int minute = static_cast<int>(t - session.day_of(t) * kMinutesPerDay);
            if ((minute - session.start_minute) % session.bar_minutes != 0)
                throw data_error("read_series_csv: " + format_timestamp(t) +
                                 " is misaligned with the bar grid");
        }
        std::vector<MinuteStamp> days;
        for (MinuteStamp t : stamps) {
            const MinuteStamp d = session.day_of(t);
            if (days.empty() || days.back() != d) days.push_back(d);
        }
        std::map<MinuteStamp, std::int64_t> day_rank;
        for (std::size_t i = 0; i < days.size(); ++i) day_rank.emplace(days[i], i);
        series.row_index.reserve(stamps.size());
        for (MinuteStamp t : stamps)
            series.row_index.push_back(day_rank.at(session.day_of(t)) * session.bars_per_day() +
                                       session.bar_of_day(t));
    }
    series.validate();
    return series;
}

/// Content hash for the idempotence check: the same inputs must ingest to the
/// same dataset, byte for byte.
inline std::string dataset_hash(const BarDataset& data) {
    std::string canon = "session=" + std::to_string(data.session.start_minute) + ":" +
                        std::to_string(data.session.end_minute) + ":" +
                        std::to_string(data.session.bar_minutes) +
                        ";convention=" + to_string(data.convention) + "\n";
    char buf[96];
    for (std::size_t i = 0; i < data.timestamps.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(data.timestamps[i]), data.s[i], data.p[i], data.v[i]);
        canon += buf;
    }
    const std::uint64_t h = detail::fnv1a64(canon);
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// labeled sentences for classifier training

/// Reads a two-column sentence/label file. The label sits after the LAST
/// delimiter occurrence, so sentences may contain the delimiter themselves.
/// `delimiter` is "tab" or "at" (the latter matches the common
/// `sentence@label` phrase-corpus layout). Labels must be one of negative,
/// neutral, positive.
inline std::vector<SentenceExample> read_labeled_sentences(const std::filesystem::path& path,
                                                           const std::string& delimiter) {
    char delim;
    if (delimiter == "tab")
        delim = '\t';
    else if (delimiter == "at")
        delim = '@';
    else
        throw config_error("read_labeled_sentences: delimiter must be 'tab' or 'at'");

    std::ifstream f(path);
    if (!f) throw data_error("read_labeled_sentences: cannot open " + path.string());
    std::vector<SentenceExample> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(f, line)) {
        ++row;
        detail::strip_cr(line);
        if (line.empty()) continue;
        const auto cut = line.rfind(delim);
        const std::string where = path.string() + " row " + std::to_string(row);
        if (cut == std::string::npos)
            throw data_error("read_labeled_sentences: " + where + ": no delimiter");
        std::string label_text = line.substr(cut + 1);
        while (!label_text.empty() && (label_text.front() == ' '))
            label_text.erase(label_text.begin());
        while (!label_text.empty() && (label_text.back() == ' ')) label_text.pop_back();
        int label;
        if (label_text == "negative")
            label = -1;
        else if (label_text == "neutral")
            label = 0;
        else if (label_text == "positive")
            label = 1;
        else
            throw data_error("read_labeled_sentences: " + where + ": unknown label '" +
                             label_text + "'");
        SentenceExample ex;
        ex.tokens = tokenize(std::string_view(line).substr(0, cut));
        ex.label = label;
        if (ex.tokens.empty())
            throw data_error("read_labeled_sentences: " + where + ": empty sentence");
        out.push_back(std::move(ex));
    }
    if (out.empty()) throw data_error("read_labeled_sentences: no examples in " + path.string());
    return out;
}

// ---------------------------------------------------------------------------
// news documents and score files

struct NewsDoc {
    std::string doc_id;
    std::string timestamp;
    std::vector<std::string> sentences;
};

/// Reads one JSON document per line: {"doc_id", "timestamp", and either
/// "text" (split into sentences here) or a pre-split "sentences" array}.
inline std::vector<NewsDoc> read_news_jsonl(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw data_error("read_news_jsonl: cannot open " + path.string());
    std::vector<NewsDoc> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(f, line)) {
        ++row;
        detail::strip_cr(line);
        if (line.empty()) continue;
        const std::string where = path.string() + " line " + std::to_string(row);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw data_error("read_news_jsonl: " + where + ": " + e.what());
        }
        NewsDoc nd;
        try {
            nd.doc_id = doc.at("doc_id").get<std::string>();
            nd.timestamp = doc.at("timestamp").get<std::string>();
            if (doc.contains("sentences"))
                nd.sentences = doc.at("sentences").get<std::vector<std::string>>();
            else
                nd.sentences = split_sentences(doc.at("text").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw data_error("read_news_jsonl: " + where + ": " + e.what());
        }
        MinuteStamp t;
        if (!try_parse_timestamp(nd.timestamp, t))
            throw data_error("read_news_jsonl: " + where + ": bad timestamp '" + nd.timestamp +
                             "'");
        out.push_back(std::move(nd));
    }
    if (out.empty()) throw data_error("read_news_jsonl: no documents in " + path.string());
    return out;
}

inline void write_scores_csv(const std::filesystem::path& path,
                             const std::vector<DocumentScore>& scores) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("write_scores_csv: cannot open " + path.string());
    f << "doc_id,timestamp,b_score,n_sentences,n_pos,n_neg\n";
    for (const auto& s : scores)
        f << s.doc_id << ',' << s.timestamp << ',' << detail::format_double(s.b_score) << ','
          << s.n_sentences << ',' << s.n_pos << ',' << s.n_neg << '\n';
}

inline std::vector<DocumentScore> read_scores_csv(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    const std::vector<std::string> expect{"doc_id", "timestamp", "b_score",
                                          "n_sentences", "n_pos", "n_neg"};
    if (table.header != expect)
        throw data_error("read_scores_csv: " + path.string() + ": unexpected header");
    std::vector<DocumentScore> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& fields = table.rows[i];
        const std::string where = path.string() + " row " + std::to_string(i + 2);
        if (fields.size() != 6)
            throw data_error("read_scores_csv: " + where + ": expected 6 fields");
        DocumentScore s;
        s.doc_id = fields[0];
        s.timestamp = fields[1];
        double b, ns, np, nn;
        if (!try_parse_double(fields[2], b) || !try_parse_double(fields[3], ns) ||
            !try_parse_double(fields[4], np) || !try_parse_double(fields[5], nn))
            throw data_error("read_scores_csv: " + where + ": bad numeric field");
        s.b_score = b;
        s.n_sentences = static_cast<int>(ns);
        s.n_pos = static_cast<int>(np);
        s.n_neg = static_cast<int>(nn);
        MinuteStamp t;
        if (!try_parse_timestamp(s.timestamp, t))
            throw data_error("read_scores_csv: " + where + ": bad timestamp");
        out.push_back(std::move(s));
    }
    return out;
}

inline void write_bars_csv(const std::filesystem::path& path,
                           const std::vector<SentimentBar>& bars) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("write_bars_csv: cannot open " + path.string());
    f << "interval_start,b_t,n_docs\n";
    for (const auto& b : bars)
        f << b.interval_start << ',' << detail::format_double(b.b_t) << ',' << b.n_docs << '\n';
}

}  // namespace ssv
