#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace quotestamp {

// One sentence of a speech-to-text transcript with millisecond boundaries.
struct SentenceSpan {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::string text;
};

// Ordered sentence spans. start_ms is non-decreasing across indices; adjacent
// spans may share a boundary and zero-length spans are legal.
struct Transcript {
    std::string source_id;
    std::vector<SentenceSpan> spans;

    std::size_t size() const { return spans.size(); }
    bool empty() const { return spans.empty(); }
};

// Half-open millisecond range. (0, 0) is the reserved null range meaning
// "target absent".
struct TimeRange {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;

    bool is_null() const { return start_ms == 0 && end_ms == 0; }
    friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

// Sentence-only views of a transcript used for matching: the sentence list,
// the char span of each sentence inside `joined`, and the joined text built
// by concatenating all sentences without separators.
struct ViewBundle {
    std::vector<std::string> sentences;
    std::vector<std::pair<std::size_t, std::size_t>> char_spans;
    std::string joined;
};

// Result of mapping a TimeRange back onto sentence indices. An index is
// present only when the millisecond value sits exactly on a sentence
// boundary; the exact flags mirror that.
struct BoundaryReport {
    std::optional<int> start_index;
    std::optional<int> end_index;
    bool start_exact = false;
    bool end_exact = false;
};

// Parse an STT JSON document: an array of objects with integer start_ms,
// end_ms and string text; unknown keys are ignored. Malformed JSON raises
// ParseError with a byte offset; invariant violations raise ValidationError
// naming the span index. Accepted oddities (overlapping spans) are appended
// to `warnings` when provided.
Transcript parse_stt_json(const std::string& bytes,
                          std::vector<std::string>* warnings = nullptr,
                          std::string source_id = {});

// Render back to STT JSON (pretty-printed, one field per line). Re-parsing
// the output yields an identical transcript.
std::string render_stt_json(const Transcript& t);

ViewBundle build_view(const Transcript& t);

// Looks up r.start_ms among span starts and r.end_ms among span ends.
// Duplicate boundary values resolve to the lowest index for starts and the
// highest for ends, so a passage covering both duplicated spans still
// classifies as exact.
BoundaryReport range_to_indices(const Transcript& t, const TimeRange& r);

}  // namespace quotestamp
