#include "quotestamp/matcher.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "quotestamp/errors.hpp"
#include "quotestamp/formats.hpp"

namespace quotestamp {

namespace {

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

std::string strip_outer(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// One layer of matching surrounding quotes, ASCII or curly.
bool strip_quote_pair(std::string& s) {
    static const std::vector<std::pair<std::string, std::string>> pairs = {
        {"\"", "\""}, {"'", "'"},
        {"\xE2\x80\x9C", "\xE2\x80\x9D"},   // curly double
        {"\xE2\x80\x98", "\xE2\x80\x99"},   // curly single
    };
    for (const auto& [open, close] : pairs) {
        if (s.size() > open.size() + close.size() &&
            s.compare(0, open.size(), open) == 0 &&
            s.compare(s.size() - close.size(), close.size(), close) == 0) {
            s = s.substr(open.size(),
                         s.size() - open.size() - close.size());
            return true;
        }
    }
    return false;
}

std::string collapse_ws(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            in_space = true;
        } else {
            if (in_space && !out.empty()) out += ' ';
            in_space = false;
            out += static_cast<char>(c);
        }
    }
    return out;
}

// Text-First rendering of instructions the verifier receives for snippet
// refinement. The absent convention is embedded even in assisted mode so a
// narrowing false positive can still be rejected downstream.
const char* kSnippetInstructions =
    "Find the passage that best matches the target sentence(s) in the "
    "transcript snippets below. The match may differ in punctuation, "
    "contractions or minor wording. Each transcript line ends with its "
    "start_ms and end_ms values. Respond in pure JSON as "
    "{\"start_ms\": <int>, \"end_ms\": <int>} using the boundaries of the "
    "matched passage. If the target does not occur in the snippets, return "
    "{\"start_ms\": 0, \"end_ms\": 0}.";

}  // namespace

void MatcherConfig::validate() const {
    if (k < 1) throw ConfigError("matcher: k must be >= 1");
    if (ratio_threshold < 0.0 || ratio_threshold > 100.0) {
        throw ConfigError("matcher: ratio_threshold must be in [0, 100]");
    }
    if (min_pad <= 0 || min_pad > max_pad) {
        throw ConfigError("matcher: require 0 < min_pad <= max_pad");
    }
    if (pad_frac < 0.0 || pad_frac > 1.0) {
        throw ConfigError("matcher: pad_frac must be in [0, 1]");
    }
}

std::string clean_target(const std::string& target, const CleanConfig& cfg) {
    if (target.empty()) {
        throw ArgumentError("clean_target: target must be non-empty");
    }
    std::string cur = target;
    while (true) {
        std::string next = strip_outer(cur);
        if (cfg.strip_surrounding_quotes) {
            while (strip_quote_pair(next)) next = strip_outer(next);
        }
        bool stripped = true;
        while (stripped) {
            stripped = false;
            for (const auto& prefix : cfg.honorific_prefixes) {
                if (next.size() > prefix.size() &&
                    next.compare(0, prefix.size(), prefix) == 0) {
                    next = strip_outer(next.substr(prefix.size()));
                    stripped = true;
                }
            }
        }
        if (cfg.collapse_whitespace) next = collapse_ws(next);
        if (next == cur) break;
        cur = std::move(next);
    }
    if (cur.empty()) {
        throw ArgumentError("clean_target: cleaning emptied the target");
    }
    return cur;
}

int estimate_sentence_count(const std::string& text) {
    int count = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (is_terminal(text[i]) &&
            (i + 1 == text.size() || !is_terminal(text[i + 1]))) {
            ++count;
        }
    }
    return std::max(count, 1);
}

int dynamic_radius(int estimated_sentences, const MatcherConfig& cfg) {
    if (estimated_sentences < 1) {
        throw ArgumentError("dynamic_radius: estimate must be >= 1");
    }
    const int frac = static_cast<int>(cfg.pad_frac * estimated_sentences);
    return estimated_sentences +
           std::min(cfg.max_pad, std::max(cfg.min_pad, frac));
}

std::vector<Candidate> top_k_ratio(const std::string& cleaned,
                                   const ViewBundle& view,
                                   const MatcherConfig& cfg) {
    std::vector<Candidate> hits;
    const std::size_t qlen = cleaned.size();
    for (std::size_t i = 0; i < view.sentences.size(); ++i) {
        const std::size_t slen = view.sentences[i].size();
        // Best possible ratio given only the lengths; prunes most sentences.
        const double cap =
            (qlen + slen) == 0
                ? 100.0
                : 200.0 * static_cast<double>(std::min(qlen, slen)) /
                      static_cast<double>(qlen + slen);
        if (cap < cfg.ratio_threshold) continue;
        const double score = ratio(cleaned, view.sentences[i]);
        if (score >= cfg.ratio_threshold) {
            hits.push_back({static_cast<int>(i), score,
                            CandidateOrigin::SentenceRatio});
        }
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const Candidate& a, const Candidate& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.index < b.index;
                     });
    if (hits.size() > static_cast<std::size_t>(cfg.k)) {
        hits.resize(static_cast<std::size_t>(cfg.k));
    }
    return hits;
}

std::optional<AlignedRange> align_to_range(const std::string& cleaned,
                                           const ViewBundle& view,
                                           const MatcherConfig& cfg) {
    if (view.joined.empty()) return std::nullopt;
    const AlignResult aligned = partial_align(cleaned, view.joined);
    if (aligned.score < cfg.ratio_threshold) return std::nullopt;

    AlignedRange range;
    range.score = aligned.score;
    range.lo = -1;
    for (std::size_t i = 0; i < view.char_spans.size(); ++i) {
        const auto& [lo, hi] = view.char_spans[i];
        const bool intersects =
            lo < aligned.char_end && aligned.char_start < hi;
        if (intersects) {
            if (range.lo < 0) range.lo = static_cast<int>(i);
            range.hi = static_cast<int>(i);
        }
    }
    if (range.lo < 0) return std::nullopt;  // empty alignment window
    return range;
}

std::vector<Window> expand_around(const std::vector<Candidate>& candidates,
                                  int radius, int sentence_count) {
    std::vector<Window> windows;
    windows.reserve(candidates.size());
    for (const auto& c : candidates) {
        if (c.index < 0 || c.index >= sentence_count) {
            throw ArgumentError("expand_around: candidate index out of range");
        }
        windows.push_back({std::max(0, c.index - radius),
                           std::min(sentence_count - 1, c.index + radius)});
    }
    return windows;
}

std::vector<Snippet> merge_windows(const std::vector<Window>& windows,
                                   const Transcript& t) {
    if (windows.empty()) {
        throw ArgumentError("merge_windows: no windows to merge");
    }
    struct Timed {
        Window w;
        std::int64_t start_ms;
        std::int64_t end_ms;
    };
    std::vector<Timed> timed;
    timed.reserve(windows.size());
    for (const auto& w : windows) {
        if (w.start_index < 0 || w.end_index >= static_cast<int>(t.size()) ||
            w.start_index > w.end_index) {
            throw ArgumentError("merge_windows: window out of range");
        }
        timed.push_back({w, t.spans[w.start_index].start_ms,
                         t.spans[w.end_index].end_ms});
    }
    std::sort(timed.begin(), timed.end(), [](const Timed& a, const Timed& b) {
        if (a.start_ms != b.start_ms) return a.start_ms < b.start_ms;
        if (a.w.start_index != b.w.start_index)
            return a.w.start_index < b.w.start_index;
        return a.w.end_index < b.w.end_index;
    });

    std::vector<Timed> merged;
    merged.push_back(timed.front());
    for (std::size_t i = 1; i < timed.size(); ++i) {
        Timed& cur = merged.back();
        const Timed& s = timed[i];
        if (s.start_ms <= cur.end_ms) {
            cur.w.start_index = std::min(cur.w.start_index, s.w.start_index);
            cur.w.end_index = std::max(cur.w.end_index, s.w.end_index);
            cur.start_ms = t.spans[cur.w.start_index].start_ms;
            cur.end_ms = t.spans[cur.w.end_index].end_ms;
        } else {
            merged.push_back(s);
        }
    }

    std::vector<Snippet> snippets;
    snippets.reserve(merged.size());
    for (const auto& m : merged) {
        Transcript slice;
        slice.spans.assign(t.spans.begin() + m.w.start_index,
                           t.spans.begin() + m.w.end_index + 1);
        snippets.push_back({m.w.start_index, m.w.end_index, m.start_ms,
                            m.end_ms, render(slice, FormatKind::TextFirst)});
    }
    return snippets;
}

std::string MatchTrace::to_json() const {
    nlohmann::json j;
    j["cleaned_target"] = cleaned_target;
    j["estimated_sentences"] = estimated_sentences;
    j["radius"] = radius;
    j["verifier_called"] = verifier_called;
    j["snippet_sentence_count"] = snippet_sentence_count;
    j["candidates"] = nlohmann::json::array();
    for (const auto& c : candidates) {
        j["candidates"].push_back(
            {{"index", c.index},
             {"score", c.score},
             {"origin", c.origin == CandidateOrigin::SentenceRatio
                            ? "sentence_ratio"
                            : "joined_alignment"}});
    }
    if (alignment) {
        j["alignment"] = {{"lo", alignment->lo},
                          {"hi", alignment->hi},
                          {"score", alignment->score}};
    } else {
        j["alignment"] = nullptr;
    }
    j["windows"] = nlohmann::json::array();
    for (const auto& w : windows) {
        j["windows"].push_back({{"start", w.start_index}, {"end", w.end_index}});
    }
    j["snippets"] = nlohmann::json::array();
    for (const auto& s : snippets) {
        j["snippets"].push_back({{"start_index", s.start_index},
                                 {"end_index", s.end_index},
                                 {"start_ms", s.start_ms},
                                 {"end_ms", s.end_ms}});
    }
    return j.dump();
}

HybridResult hybrid_match(const std::string& quote, const Transcript& t,
                          Verifier& verifier, const MatcherConfig& cfg,
                          const CleanConfig& clean_cfg) {
    cfg.validate();
    if (t.empty()) {
        throw ArgumentError("hybrid_match: transcript must be non-empty");
    }

    HybridResult result;
    MatchTrace& trace = result.trace;
    trace.cleaned_target = clean_target(quote, clean_cfg);

    const ViewBundle view = build_view(t);
    trace.candidates = top_k_ratio(trace.cleaned_target, view, cfg);
    trace.alignment = align_to_range(trace.cleaned_target, view, cfg);

    std::vector<Candidate> combined = trace.candidates;
    if (trace.alignment) {
        const int mid = (trace.alignment->lo + trace.alignment->hi) / 2;
        combined.push_back(
            {mid, trace.alignment->score, CandidateOrigin::JoinedAlignment});
    }
    if (combined.empty()) {
        result.status = MatchStatus::NoCandidates;
        return result;  // fail fast, no verifier call
    }

    trace.estimated_sentences = estimate_sentence_count(trace.cleaned_target);
    trace.radius = dynamic_radius(trace.estimated_sentences, cfg);

    const int n = static_cast<int>(t.size());
    trace.windows = expand_around(combined, trace.radius, n);
    if (trace.alignment) {
        // The alignment candidate expands around its midpoint, but its full
        // covered range is always force-included.
        Window& w = trace.windows.back();
        w.start_index = std::min(w.start_index, trace.alignment->lo);
        w.end_index = std::max(w.end_index, trace.alignment->hi);
    }
    trace.snippets = merge_windows(trace.windows, t);
    for (const auto& s : trace.snippets) {
        trace.snippet_sentence_count +=
            static_cast<std::size_t>(s.end_index - s.start_index + 1);
    }

    std::string snippet_text;
    for (const auto& s : trace.snippets) {
        snippet_text += s.rendered;
    }

    PredictionRequest req;
    req.prompt = build_prompt(kSnippetInstructions, quote, snippet_text,
                              Placement::QueryBefore);
    req.target = quote;

    trace.verifier_called = true;
    try {
        result.response = verifier.predict(req);
    } catch (const Error& e) {
        throw Error(std::string("verifier failed: ") + e.what() +
                    " | trace: " + trace.to_json());
    }
    result.status = MatchStatus::Matched;
    result.range = result.response->range;
    return result;
}

}  // namespace quotestamp
