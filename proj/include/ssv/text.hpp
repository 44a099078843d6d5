#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ssv/errors.hpp"

namespace ssv {

/// Splits text into lowercase word tokens. Token characters are ASCII
/// letters (folded to lowercase), digits, and any byte >= 0x80, which keeps
/// UTF-8 sequences intact without case-folding them; everything else
/// separates tokens.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char ch : text) {
        if (ch >= 'A' && ch <= 'Z') {
            cur.push_back(static_cast<char>(ch - 'A' + 'a'));
        } else if ((ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch >= 0x80) {
            cur.push_back(static_cast<char>(ch));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

/// Sentence splitter on terminal punctuation (. ! ? and ;). Deliberately
/// simple; swap in a smarter segmenter upstream if needed, the rest of the
/// pipeline only sees sentence strings.
inline std::vector<std::string> split_sentences(std::string_view doc) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        std::size_t a = cur.find_first_not_of(" \t\r\n");
        if (a == std::string::npos) {
            cur.clear();
            return;
        }
        const std::size_t b = cur.find_last_not_of(" \t\r\n");
        out.push_back(cur.substr(a, b - a + 1));
        cur.clear();
    };
    for (char ch : doc) {
        if (ch == '.' || ch == '!' || ch == '?' || ch == ';') {
            flush();
        } else {
            cur.push_back(ch);
        }
    }
    flush();
    return out;
}

/// Sparse hashed feature vector: sorted unique indices with signed counts.
struct HashedFeatures {
    std::vector<std::pair<std::uint32_t, float>> entries;

    bool empty() const noexcept { return entries.empty(); }
};

namespace detail {

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline void accumulate_feature(std::vector<std::pair<std::uint32_t, float>>& raw,
                               std::uint64_t hash, std::uint32_t mask) {
    // low bits pick the bucket, the top bit picks the sign (sign-hash keeps
    // hash collisions unbiased in expectation)
    const std::uint32_t index = static_cast<std::uint32_t>(hash) & mask;
    const float sign = (hash >> 63) ? -1.0f : 1.0f;
    raw.emplace_back(index, sign);
}

}  // namespace detail

inline constexpr int kDefaultFeatureDimLog2 = 18;

/// Hashes unigrams and adjacent-pair bigrams into a 2^feature_dim_log2 space.
inline HashedFeatures hash_features(const std::vector<std::string>& tokens,
                                    int feature_dim_log2 = kDefaultFeatureDimLog2) {
    if (feature_dim_log2 < 1 || feature_dim_log2 > 30)
        throw config_error("hash_features: feature_dim_log2 out of range");
    const std::uint32_t mask = (1u << feature_dim_log2) - 1u;
    std::vector<std::pair<std::uint32_t, float>> raw;
    raw.reserve(tokens.size() * 2);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        detail::accumulate_feature(raw, detail::fnv1a64(tokens[i]), mask);
        if (i + 1 < tokens.size()) {
            // bigram = token, unit separator, token (cannot collide with a unigram string)
            std::uint64_t h = detail::fnv1a64(tokens[i]);
            h = detail::fnv1a64("\x1f", h);
            h = detail::fnv1a64(tokens[i + 1], h);
            detail::accumulate_feature(raw, h, mask);
        }
    }
    std::sort(raw.begin(), raw.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    HashedFeatures out;
    for (const auto& [idx, val] : raw) {
        if (!out.entries.empty() && out.entries.back().first == idx)
            out.entries.back().second += val;
        else
            out.entries.emplace_back(idx, val);
    }
    return out;
}

}  // namespace ssv
