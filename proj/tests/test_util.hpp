#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "quotestamp/similarity.hpp"
#include "quotestamp/transcript.hpp"

namespace test_util {

// Reference indel distance: full dynamic program, no substitutions.
inline std::size_t indel_oracle(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j] + 1;
            const std::size_t left = row[j - 1] + 1;
            std::size_t best = std::min(up, left);
            if (a[i - 1] == b[j - 1]) best = std::min(best, diag);
            diag = row[j];
            row[j] = best;
        }
    }
    return row[b.size()];
}

inline double ratio_oracle(const std::string& a, const std::string& b) {
    if (a.empty() && b.empty()) return 100.0;
    return 100.0 *
           (1.0 - static_cast<double>(indel_oracle(a, b)) /
                      static_cast<double>(a.size() + b.size()));
}

// Reference partial alignment: try every window, first strictly-better
// score wins, so ties resolve to the smallest start then smallest window.
inline quotestamp::AlignResult align_oracle(const std::string& needle,
                                            const std::string& haystack) {
    quotestamp::AlignResult best;
    best.score = -1.0;
    for (std::size_t i = 0; i <= haystack.size(); ++i) {
        for (std::size_t j = i; j <= haystack.size(); ++j) {
            const double s = ratio_oracle(needle, haystack.substr(i, j - i));
            if (s > best.score) {
                best = {s, i, j};
            }
        }
    }
    return best;
}

inline std::string random_string(std::mt19937_64& rng, std::size_t max_len,
                                 int alphabet) {
    std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
    std::uniform_int_distribution<int> char_dist(0, alphabet - 1);
    std::string s(len_dist(rng), 'a');
    for (char& c : s) c = static_cast<char>('a' + char_dist(rng));
    return s;
}

// Random well-formed transcript; texts avoid newlines so the line grammars
// round-trip losslessly.
inline quotestamp::Transcript random_transcript(std::mt19937_64& rng,
                                                int max_spans = 40) {
    static const char* words[] = {
        "motion", "quorum", "amendment", "clause",  "register", "tariff",
        "vote",   "yield",  "chamber",   "session", "record",   "floor",
        "order",  "report", "measure",   "debate",
    };
    std::uniform_int_distribution<int> n_dist(1, max_spans);
    std::uniform_int_distribution<int> w_dist(1, 8);
    std::uniform_int_distribution<int> word_dist(0, 15);
    std::uniform_int_distribution<std::int64_t> dur_dist(100, 9000);
    std::uniform_int_distribution<std::int64_t> gap_dist(0, 500);

    quotestamp::Transcript t;
    t.source_id = "random";
    std::int64_t clock = 1000;
    const int n = n_dist(rng);
    for (int i = 0; i < n; ++i) {
        std::string text;
        const int wn = w_dist(rng);
        for (int w = 0; w < wn; ++w) {
            if (w) text += ' ';
            text += words[word_dist(rng)];
        }
        text += '.';
        quotestamp::SentenceSpan span;
        span.start_ms = clock;
        span.end_ms = clock + dur_dist(rng);
        span.text = text;
        clock = span.end_ms + gap_dist(rng);
        t.spans.push_back(std::move(span));
    }
    return t;
}

inline std::string data_path(const char* name) {
    return std::string(QTS_DATA_DIR) + "/" + name;
}

}  // namespace test_util
