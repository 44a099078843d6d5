#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ssv/classifier.hpp"
#include "ssv/errors.hpp"
#include "ssv/text.hpp"
#include "ssv/timestamps.hpp"

namespace ssv {

struct DocumentScore {
    std::string doc_id;
    std::string timestamp;  ///< exchange-clock wall time, "YYYY-MM-DD HH:MM"
    double b_score = 0.0;
    int n_sentences = 0;
    int n_pos = 0;
    int n_neg = 0;
};

/// Document-level sentiment: classify each sentence, then
///   b = ln(1 + n_pos/n) - ln(1 + n_neg/n),
/// which is antisymmetric under swapping positive and negative counts and
/// reaches +-ln 2 when every sentence lands on one side.
inline DocumentScore score_document(const ClassifierModel& model,
                                    const std::vector<std::string>& sentences,
                                    std::string doc_id, std::string timestamp) {
    DocumentScore out;
    out.doc_id = std::move(doc_id);
    out.timestamp = std::move(timestamp);
    for (const auto& sentence : sentences) {
        const auto tokens = tokenize(sentence);
        if (tokens.empty()) continue;  // punctuation-only fragment, nothing to score
        ++out.n_sentences;
        const int label = model.predict_tokens(tokens);
        if (label > 0)
            ++out.n_pos;
        else if (label < 0)
            ++out.n_neg;
    }
    if (out.n_sentences == 0)
        throw data_error("score_document: document '" + out.doc_id + "' has no scoreable text");
    const double n = static_cast<double>(out.n_sentences);
    out.b_score = std::log1p(static_cast<double>(out.n_pos) / n) -
                  std::log1p(static_cast<double>(out.n_neg) / n);
    return out;
}

inline DocumentScore score_document_text(const ClassifierModel& model, const std::string& text,
                                         std::string doc_id, std::string timestamp) {
    return score_document(model, split_sentences(text), std::move(doc_id), std::move(timestamp));
}

struct SentimentBar {
    std::string interval_start;  ///< exchange-clock wall time of the bar open
    double b_t = 0.0;
    int n_docs = 0;
    bool interpolated = false;  ///< true when an empty bar was filled by interpolation
};

struct AggregateResult {
    std::vector<SentimentBar> bars;
    int n_docs_total = 0;
    int n_out_of_session = 0;  ///< docs stamped outside trading hours, kept in bar 0
};

/// Buckets document scores into intraday bars on the session grid. A bar's
/// value is the mean score of its documents. Out-of-session stamps are never
/// dropped: pre-open goes to the day's first bar, post-close to the first bar
/// of the next calendar day. Every session day that received at least one
/// document emits its full run of bars; empty bars carry b_t = 0 and
/// n_docs = 0 unless interpolate_empty fills interior gaps linearly.
inline AggregateResult aggregate_bars(const std::vector<DocumentScore>& scores,
                                      const SessionSpec& session = {},
                                      bool interpolate_empty = false) {
    session.validate();
    AggregateResult out;
    const int bars_per_day = session.bars_per_day();

    std::map<std::pair<std::int64_t, int>, std::pair<double, int>> bucket;  // (day, bar) -> (sum, n)
    for (const auto& score : scores) {
        const MinuteStamp t = parse_timestamp(score.timestamp);
        std::int64_t day = session.day_of(t);
        int bar;
        if (session.in_session(t)) {
            bar = session.bar_of_day(t);
        } else {
            ++out.n_out_of_session;
            const int minute = static_cast<int>(t - day * kMinutesPerDay);
            bar = 0;
            if (minute >= session.end_minute) ++day;  // after the close: next day's open
        }
        auto& cell = bucket[{day, bar}];
        cell.first += score.b_score;
        cell.second += 1;
        ++out.n_docs_total;
    }
    if (bucket.empty()) return out;

    std::vector<std::int64_t> days;
    for (const auto& [key, cell] : bucket)
        if (days.empty() || days.back() != key.first) days.push_back(key.first);

    for (std::int64_t day : days) {
        for (int bar = 0; bar < bars_per_day; ++bar) {
            SentimentBar b;
            b.interval_start = format_timestamp(session.bar_start(day, bar));
            if (auto it = bucket.find({day, bar}); it != bucket.end()) {
                b.b_t = it->second.first / static_cast<double>(it->second.second);
                b.n_docs = it->second.second;
            }
            out.bars.push_back(std::move(b));
        }
    }

    if (interpolate_empty) {
        // linear in bar index between the nearest populated bars; runs before
        // the first or after the last populated bar stay at zero
        std::vector<std::size_t> populated;
        for (std::size_t i = 0; i < out.bars.size(); ++i)
            if (out.bars[i].n_docs > 0) populated.push_back(i);
        for (std::size_t k = 0; k + 1 < populated.size(); ++k) {
            const std::size_t lo = populated[k], hi = populated[k + 1];
            for (std::size_t i = lo + 1; i < hi; ++i) {
                const double frac = static_cast<double>(i - lo) / static_cast<double>(hi - lo);
                out.bars[i].b_t =
                    out.bars[lo].b_t + frac * (out.bars[hi].b_t - out.bars[lo].b_t);
                out.bars[i].interpolated = true;
            }
        }
    }
    return out;
}

}  // namespace ssv
