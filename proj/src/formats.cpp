#include "quotestamp/formats.hpp"

#include <array>
#include <charconv>
#include <sstream>

#include "quotestamp/errors.hpp"

namespace quotestamp {

namespace {

constexpr std::string_view kStartLabel = "start_ms: ";
constexpr std::string_view kEndLabel = "end_ms: ";
constexpr std::string_view kTargetLabel = "TARGET SENTENCE:";
constexpr std::string_view kTranscriptLabel = "TRANSCRIPT DATA:";

// Newlines inside a sentence would break the line-oriented grammars.
std::string flatten(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            out += ' ';
        } else if (c == '\n') {
            out += ' ';
        } else {
            out += c;
        }
    }
    return out;
}

bool parse_ms(std::string_view digits, std::int64_t& value) {
    if (digits.empty()) return false;
    auto [ptr, ec] = std::from_chars(digits.data(),
                                     digits.data() + digits.size(), value);
    return ec == std::errc() && ptr == digits.data() + digits.size() &&
           value >= 0;
}

}  // namespace

std::string_view format_name(FormatKind kind) {
    switch (kind) {
        case FormatKind::SttJson: return "stt_json";
        case FormatKind::TextFirst: return "text_first";
        case FormatKind::TextMiddle: return "text_middle";
        case FormatKind::TextEnd: return "text_end";
        case FormatKind::TextFirstNoLabels: return "text_first_no_labels";
        case FormatKind::PlainText: return "plain_text";
    }
    return "unknown";
}

std::string_view placement_name(Placement p) {
    return p == Placement::QueryBefore ? "query_before" : "query_after";
}

FormatKind format_from_name(std::string_view name) {
    static constexpr std::array<FormatKind, 6> kinds = {
        FormatKind::SttJson,          FormatKind::TextFirst,
        FormatKind::TextMiddle,       FormatKind::TextEnd,
        FormatKind::TextFirstNoLabels, FormatKind::PlainText,
    };
    for (FormatKind k : kinds) {
        if (format_name(k) == name) return k;
    }
    throw ConfigError("unknown format: " + std::string(name));
}

Placement placement_from_name(std::string_view name) {
    if (name == "query_before") return Placement::QueryBefore;
    if (name == "query_after") return Placement::QueryAfter;
    throw ConfigError("unknown placement: " + std::string(name));
}

std::size_t heuristic_token_count(std::string_view text) {
    return (text.size() + 3) / 4;
}

std::string render(const Transcript& t, FormatKind kind) {
    if (kind == FormatKind::SttJson) {
        return render_stt_json(t);
    }
    std::string out;
    if (kind == FormatKind::PlainText) {
        for (std::size_t i = 0; i < t.spans.size(); ++i) {
            if (i > 0) out += ' ';
            out += flatten(t.spans[i].text);
        }
        return out;
    }
    std::ostringstream line;
    for (const auto& span : t.spans) {
        const std::string text = flatten(span.text);
        line.str({});
        switch (kind) {
            case FormatKind::TextFirst:
                line << text << ' ' << kStartLabel << span.start_ms << ", "
                     << kEndLabel << span.end_ms << ";\n";
                break;
            case FormatKind::TextFirstNoLabels:
                line << text << ", " << span.start_ms << ", " << span.end_ms
                     << ";\n";
                break;
            case FormatKind::TextMiddle:
                line << kStartLabel << span.start_ms << ", " << text << ' '
                     << kEndLabel << span.end_ms << ";\n";
                break;
            case FormatKind::TextEnd:
                line << kStartLabel << span.start_ms << ", " << kEndLabel
                     << span.end_ms << ", " << text << '\n';
                break;
            default:
                break;
        }
        out += line.str();
    }
    return out;
}

Transcript parse_text_first(const std::string& text, std::string source_id) {
    Transcript t;
    t.source_id = std::move(source_id);
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        ++line_no;
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) {
            throw ParseError("line " + std::to_string(line_no) +
                                 ": missing trailing newline",
                             line_no);
        }
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;

        const auto fail = [&](const char* what) -> ParseError {
            return ParseError(
                "line " + std::to_string(line_no) + ": " + what, line_no);
        };
        if (line.empty() || line.back() != ';') {
            throw fail("missing trailing ';'");
        }
        line.remove_suffix(1);

        // Sentence text may itself contain the labels, so parse from the
        // right: the rendered line always ends with the real timestamps.
        const std::string end_marker = std::string(", ") + std::string(kEndLabel);
        std::size_t end_at = line.rfind(end_marker);
        if (end_at == std::string_view::npos) {
            throw fail("missing end_ms label");
        }
        std::string_view end_digits = line.substr(end_at + end_marker.size());
        std::string_view head = line.substr(0, end_at);

        const std::string start_marker = std::string(" ") + std::string(kStartLabel);
        std::size_t start_at = head.rfind(start_marker);
        if (start_at == std::string_view::npos) {
            throw fail("missing start_ms label");
        }
        std::string_view start_digits =
            head.substr(start_at + start_marker.size());
        std::string_view sentence = head.substr(0, start_at);

        SentenceSpan span;
        if (!parse_ms(start_digits, span.start_ms)) {
            throw fail("bad start_ms value");
        }
        if (!parse_ms(end_digits, span.end_ms)) {
            throw fail("bad end_ms value");
        }
        span.text = std::string(sentence);
        if (span.text.empty()) {
            throw fail("empty sentence text");
        }
        if (span.start_ms > span.end_ms) {
            throw fail("start_ms exceeds end_ms");
        }
        if (!t.spans.empty() && span.start_ms < t.spans.back().start_ms) {
            throw fail("start_ms decreases across lines");
        }
        t.spans.push_back(std::move(span));
    }
    return t;
}

std::string build_prompt(const std::string& instructions,
                         const std::string& target,
                         const std::string& transcript_text,
                         Placement placement) {
    if (instructions.empty() || transcript_text.empty()) {
        throw ArgumentError("prompt instructions and transcript are required");
    }
    const std::string target_block = std::string(kTargetLabel) + " " + target;
    const std::string transcript_block =
        std::string(kTranscriptLabel) + "\n" + transcript_text;
    std::string prompt = instructions;
    if (placement == Placement::QueryBefore) {
        prompt += "\n\n" + target_block + "\n\n" + transcript_block;
    } else {
        prompt += "\n\n" + transcript_block + "\n\n" + target_block;
    }
    return prompt;
}

std::map<FormatKind, SizeEntry> size_report(const Transcript& t,
                                            const Tokenizer& tokenizer) {
    std::map<FormatKind, SizeEntry> report;
    for (FormatKind kind :
         {FormatKind::SttJson, FormatKind::TextFirst, FormatKind::TextMiddle,
          FormatKind::TextEnd, FormatKind::TextFirstNoLabels,
          FormatKind::PlainText}) {
        const std::string rendered = render(t, kind);
        report[kind] = SizeEntry{rendered.size(), tokenizer(rendered)};
    }
    return report;
}

}  // namespace quotestamp
