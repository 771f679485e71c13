#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quotestamp/similarity.hpp"
#include "quotestamp/transcript.hpp"
#include "quotestamp/verifier.hpp"

namespace quotestamp {

// Knobs for the two-stage narrowing pipeline.
struct MatcherConfig {
    int k = 3;                    // candidate cap for the sentence-ratio path
    double ratio_threshold = 70.0;
    int min_pad = 3;              // context floor, sentences
    int max_pad = 8;              // extra padding cap, sentences
    double pad_frac = 0.25;

    void validate() const;
};

// Conservative target cleaning applied before narrowing. Stripping only ever
// touches the start of the target; cleaning never empties a non-trivial one.
struct CleanConfig {
    std::vector<std::string> honorific_prefixes = {
        "Mr. Speaker,",
        "Madam Speaker,",
        "Mr. President,",
        "Madam President,",
    };
    bool collapse_whitespace = true;
    bool strip_surrounding_quotes = true;
};

enum class CandidateOrigin { SentenceRatio, JoinedAlignment };

struct Candidate {
    int index = 0;        // sentence index
    double score = 0.0;   // [0, 100]
    CandidateOrigin origin = CandidateOrigin::SentenceRatio;
};

// Inclusive sentence-index window.
struct Window {
    int start_index = 0;
    int end_index = 0;
};

// Merged window with its bounding times and Text-First rendering.
struct Snippet {
    int start_index = 0;
    int end_index = 0;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::string rendered;
};

// Sentence-index range covered by the joined-text alignment.
struct AlignedRange {
    int lo = 0;
    int hi = 0;
    double score = 0.0;
};

// Everything the pipeline decided on the way to the verifier call.
struct MatchTrace {
    std::string cleaned_target;
    std::vector<Candidate> candidates;
    std::optional<AlignedRange> alignment;
    int estimated_sentences = 0;
    int radius = 0;
    std::vector<Window> windows;
    std::vector<Snippet> snippets;
    std::size_t snippet_sentence_count = 0;
    bool verifier_called = false;

    std::string to_json() const;
};

enum class MatchStatus { Matched, NoCandidates };

struct HybridResult {
    MatchStatus status = MatchStatus::NoCandidates;
    TimeRange range;  // meaningful only when status == Matched
    MatchTrace trace;
    std::optional<PredictionResponse> response;
};

// Strip honorifics/quotes and collapse whitespace; idempotent. Raises
// ArgumentError when cleaning would empty the target.
std::string clean_target(const std::string& target, const CleanConfig& cfg);

// Estimated sentence count of a quote: maximal runs of '.', '!' or '?' count
// as one sentence end each, floor 1.
int estimate_sentence_count(const std::string& text);

// radius = m + min(max_pad, max(min_pad, floor(pad_frac * m)))
int dynamic_radius(int estimated_sentences, const MatcherConfig& cfg = {});

// Sentence-level candidates: at most k indices whose whole-sentence ratio
// against the cleaned target reaches the threshold, best score first, ties
// toward the lower index.
std::vector<Candidate> top_k_ratio(const std::string& cleaned,
                                   const ViewBundle& view,
                                   const MatcherConfig& cfg);

// Joined-text alignment mapped back to the sentence indices whose char spans
// intersect the aligned window; absent below the threshold.
std::optional<AlignedRange> align_to_range(const std::string& cleaned,
                                           const ViewBundle& view,
                                           const MatcherConfig& cfg);

// One window per candidate index, clamped to [0, n - 1].
std::vector<Window> expand_around(const std::vector<Candidate>& candidates,
                                  int radius, int sentence_count);

// Merge windows whose bounding times touch or overlap (comparison is <=, so
// shared boundaries merge). Input must be non-empty; output is sorted by
// start_ms and pairwise disjoint in time.
std::vector<Snippet> merge_windows(const std::vector<Window>& windows,
                                   const Transcript& t);

// Full pipeline: clean, gather dual-path candidates, expand with the dynamic
// radius, merge, render, then delegate the final range to the verifier.
// When no candidate clears the threshold the verifier is never called and
// status is NoCandidates. The verifier sees the original (uncleaned) quote.
HybridResult hybrid_match(const std::string& quote, const Transcript& t,
                          Verifier& verifier, const MatcherConfig& cfg = {},
                          const CleanConfig& clean_cfg = {});

}  // namespace quotestamp
