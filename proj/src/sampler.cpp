#include "quotestamp/sampler.hpp"

#include <algorithm>
#include <random>

#include "quotestamp/errors.hpp"

namespace quotestamp {

namespace {

struct ThirdBounds {
    int lo;  // inclusive start-index bound
    int hi;  // exclusive
};

ThirdBounds bounds_of(Third third, int n) {
    const int a = n / 3;
    const int b = 2 * n / 3;
    switch (third) {
        case Third::First: return {0, a};
        case Third::Middle: return {a, b};
        case Third::Last: return {b, n};
    }
    return {0, n};
}

int anchor_of(Third third, int n, int length) {
    switch (third) {
        case Third::First: return 0;
        case Third::Middle: return n / 2;
        case Third::Last: return n - length;
    }
    return 0;
}

}  // namespace

std::string third_name(Third t) {
    switch (t) {
        case Third::First: return "first";
        case Third::Middle: return "middle";
        case Third::Last: return "last";
    }
    return "first";
}

Third third_of_index(int start_index, int sentence_count) {
    const int a = sentence_count / 3;
    const int b = 2 * sentence_count / 3;
    if (start_index < a) return Third::First;
    if (start_index < b) return Third::Middle;
    return Third::Last;
}

void SamplerConfig::validate() const {
    if (lengths.empty()) throw ConfigError("sampler: lengths must be non-empty");
    for (int l : lengths) {
        if (l < 1) throw ConfigError("sampler: lengths must be >= 1");
    }
    if (per_length != 3 * per_third) {
        throw ConfigError("sampler: per_length must equal 3 * per_third");
    }
    if (per_third < 1) throw ConfigError("sampler: per_third must be >= 1");
    if (anchor_window < 0) throw ConfigError("sampler: anchor_window < 0");
    if (min_sentence_chars < 0) {
        throw ConfigError("sampler: min_sentence_chars < 0");
    }
    if (tries < 1) throw ConfigError("sampler: tries must be >= 1");
}

std::vector<PassageSpec> sample_passages(const Transcript& t,
                                         const SamplerConfig& cfg) {
    cfg.validate();
    const int n = static_cast<int>(t.size());
    std::mt19937_64 rng(cfg.seed);

    // start index -> passage [start, start + length) is usable
    const auto usable = [&](int start, int length) {
        if (start < 0 || start + length > n) return false;
        for (int i = start; i < start + length; ++i) {
            if (static_cast<int>(t.spans[i].text.size()) <
                cfg.min_sentence_chars) {
                return false;
            }
        }
        return true;
    };

    std::vector<PassageSpec> out;
    for (int length : cfg.lengths) {
        std::vector<std::pair<int, int>> taken;  // [start, end] inclusive
        const auto overlaps = [&](int start) {
            const int end = start + length - 1;
            return std::any_of(taken.begin(), taken.end(),
                               [&](const std::pair<int, int>& p) {
                                   return start <= p.second && p.first <= end;
                               });
        };
        const auto emit = [&](int start, Third third) {
            taken.emplace_back(start, start + length - 1);
            PassageSpec spec;
            spec.start_index = start;
            spec.end_index = start + length - 1;
            spec.length = length;
            spec.third = third;
            spec.truth = {t.spans[spec.start_index].start_ms,
                          t.spans[spec.end_index].end_ms};
            out.push_back(spec);
        };

        for (Third third : {Third::First, Third::Middle, Third::Last}) {
            const ThirdBounds tb = bounds_of(third, n);
            if (tb.lo >= tb.hi) {
                throw SamplingError("sampler: empty " + third_name(third) +
                                    " third for length " +
                                    std::to_string(length));
            }

            // Anchored passage first: nearest usable start to the prototype
            // anchor, within anchor_window and starting inside the third.
            const int anchor = anchor_of(third, n, length);
            int anchored = -1;
            for (int offset = 0; offset <= cfg.anchor_window; ++offset) {
                for (int sign : {+1, -1}) {
                    const int start = anchor + sign * offset;
                    if (start < tb.lo || start >= tb.hi) continue;
                    if (usable(start, length) && !overlaps(start)) {
                        anchored = start;
                        break;
                    }
                    if (offset == 0) break;
                }
                if (anchored >= 0) break;
            }
            if (anchored < 0) {
                throw SamplingError(
                    "sampler: no anchored passage within the anchor window, "
                    "length " +
                    std::to_string(length) + ", " + third_name(third) +
                    " third");
            }
            emit(anchored, third);

            std::uniform_int_distribution<int> dist(tb.lo, tb.hi - 1);
            int placed = 1;
            int attempts = 0;
            const int attempt_budget = 200 * cfg.per_third;
            while (placed < cfg.per_third) {
                if (++attempts > attempt_budget) {
                    throw SamplingError(
                        "sampler: could not place " +
                        std::to_string(cfg.per_third) +
                        " non-overlapping passages of length " +
                        std::to_string(length) + " in the " +
                        third_name(third) + " third");
                }
                const int start = dist(rng);
                if (!usable(start, length) || overlaps(start)) continue;
                emit(start, third);
                ++placed;
            }
        }
    }
    return out;
}

std::string passage_text(const Transcript& t, const PassageSpec& p) {
    std::string text;
    for (int i = p.start_index; i <= p.end_index; ++i) {
        if (i > p.start_index) text += ' ';
        text += t.spans[i].text;
    }
    return text;
}

}  // namespace quotestamp
