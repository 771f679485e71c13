#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "quotestamp/transcript.hpp"

namespace quotestamp {

// Transcript prompt layouts. Each maps to exactly one grammar (see render).
enum class FormatKind {
    SttJson,
    TextFirst,
    TextMiddle,
    TextEnd,
    TextFirstNoLabels,
    PlainText,
};

// Where the query block sits relative to the transcript block in a prompt.
enum class Placement {
    QueryBefore,
    QueryAfter,
};

std::string_view format_name(FormatKind kind);
std::string_view placement_name(Placement p);
FormatKind format_from_name(std::string_view name);
Placement placement_from_name(std::string_view name);

// Token estimators are pluggable; the default is ceil(chars / 4).
using Tokenizer = std::function<std::size_t(std::string_view)>;
std::size_t heuristic_token_count(std::string_view text);

// Render a transcript into one of the prompt layouts. The text layouts are
// line oriented, one sentence per line:
//   TextFirst:          <text> start_ms: <s>, end_ms: <e>;
//   TextFirstNoLabels:  <text>, <s>, <e>;
//   TextMiddle:         start_ms: <s>, <text> end_ms: <e>;
//   TextEnd:            start_ms: <s>, end_ms: <e>, <text>
// Sentence text containing newlines is normalized to single spaces so the
// grammars stay parseable. PlainText joins sentence texts with single spaces
// and carries no timestamps. An empty transcript renders as "" ("[]" for
// SttJson).
std::string render(const Transcript& t, FormatKind kind);

// Inverse of render(t, TextFirst). Raises ParseError carrying the 1-based
// line number on any grammar violation.
Transcript parse_text_first(const std::string& text,
                            std::string source_id = {});

// Assemble a prompt from instructions, a target block and a transcript
// block. Section labels are exactly "TARGET SENTENCE:" and
// "TRANSCRIPT DATA:". QueryBefore places the target block before the
// transcript block; QueryAfter swaps the two. The target may be empty for
// control questions.
std::string build_prompt(const std::string& instructions,
                         const std::string& target,
                         const std::string& transcript_text,
                         Placement placement);

struct SizeEntry {
    std::size_t char_count = 0;
    std::size_t token_estimate = 0;
};

// Rendered size of the transcript under every layout.
std::map<FormatKind, SizeEntry> size_report(
    const Transcript& t, const Tokenizer& tokenizer = heuristic_token_count);

}  // namespace quotestamp
