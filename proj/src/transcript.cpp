#include "quotestamp/transcript.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "quotestamp/errors.hpp"

namespace quotestamp {

namespace {

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

std::string json_escape(const std::string& s) {
    nlohmann::json j = s;
    return j.dump();  // includes surrounding quotes
}

}  // namespace

Transcript parse_stt_json(const std::string& bytes,
                          std::vector<std::string>* warnings,
                          std::string source_id) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    if (!doc.is_array()) {
        throw ValidationError("STT document must be a JSON array");
    }

    Transcript t;
    t.source_id = std::move(source_id);
    t.spans.reserve(doc.size());
    std::size_t index = 0;
    for (const auto& item : doc) {
        const std::string where = "span " + std::to_string(index);
        if (!item.is_object()) {
            throw ValidationError(where + ": expected an object");
        }
        if (!item.contains("start_ms") || !item.contains("end_ms") ||
            !item.contains("text")) {
            throw ValidationError(where +
                                  ": missing start_ms, end_ms or text");
        }
        if (!item["start_ms"].is_number_integer() ||
            !item["end_ms"].is_number_integer()) {
            throw ValidationError(where + ": timestamps must be integers");
        }
        if (!item["text"].is_string()) {
            throw ValidationError(where + ": text must be a string");
        }
        SentenceSpan span;
        span.start_ms = item["start_ms"].get<std::int64_t>();
        span.end_ms = item["end_ms"].get<std::int64_t>();
        span.text = item["text"].get<std::string>();
        if (span.start_ms < 0 || span.end_ms < 0) {
            throw ValidationError(where + ": negative timestamp");
        }
        if (span.start_ms > span.end_ms) {
            throw ValidationError(where + ": start_ms exceeds end_ms");
        }
        if (is_blank(span.text)) {
            throw ValidationError(where + ": empty sentence text");
        }
        if (!t.spans.empty()) {
            const auto& prev = t.spans.back();
            if (span.start_ms < prev.start_ms) {
                throw ValidationError(where +
                                      ": start_ms decreases across spans");
            }
            if (warnings != nullptr && prev.end_ms > span.start_ms) {
                warnings->push_back(where + ": overlaps previous span in time");
            }
        }
        t.spans.push_back(std::move(span));
        ++index;
    }
    return t;
}

std::string render_stt_json(const Transcript& t) {
    if (t.spans.empty()) {
        return "[]";
    }
    std::ostringstream out;
    out << "[\n";
    for (std::size_t i = 0; i < t.spans.size(); ++i) {
        const auto& s = t.spans[i];
        out << "    {\n";
        out << "        \"start_ms\": " << s.start_ms << ",\n";
        out << "        \"end_ms\": " << s.end_ms << ",\n";
        out << "        \"text\": " << json_escape(s.text) << "\n";
        out << "    }" << (i + 1 < t.spans.size() ? "," : "") << "\n";
    }
    out << "]";
    return out.str();
}

ViewBundle build_view(const Transcript& t) {
    ViewBundle view;
    view.sentences.reserve(t.spans.size());
    view.char_spans.reserve(t.spans.size());
    std::size_t offset = 0;
    for (const auto& span : t.spans) {
        view.sentences.push_back(span.text);
        view.char_spans.emplace_back(offset, offset + span.text.size());
        view.joined += span.text;
        offset += span.text.size();
    }
    return view;
}

BoundaryReport range_to_indices(const Transcript& t, const TimeRange& r) {
    BoundaryReport report;
    for (std::size_t i = 0; i < t.spans.size(); ++i) {
        if (t.spans[i].start_ms == r.start_ms) {
            report.start_index = static_cast<int>(i);
            report.start_exact = true;
            break;  // lowest index wins for starts
        }
    }
    for (std::size_t i = t.spans.size(); i-- > 0;) {
        if (t.spans[i].end_ms == r.end_ms) {
            report.end_index = static_cast<int>(i);
            report.end_exact = true;
            break;  // highest index wins for ends
        }
    }
    return report;
}

}  // namespace quotestamp
