#include "quotestamp/verifier.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "quotestamp/errors.hpp"
#include "quotestamp/formats.hpp"
#include "quotestamp/similarity.hpp"

namespace quotestamp {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ms(Clock::time_point since) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               Clock::now() - since)
        .count();
}

std::string render_range_json(const TimeRange& r) {
    return "{\"start_ms\": " + std::to_string(r.start_ms) +
           ", \"end_ms\": " + std::to_string(r.end_ms) + "}";
}

// Normalized sentence views plus a space-joined normalized text with the
// char range of every sentence, shared by both mocks.
struct NormalizedTranscript {
    Transcript transcript;
    std::vector<std::string> sentences;
    std::string joined;
    std::vector<std::pair<std::size_t, std::size_t>> spans;

    explicit NormalizedTranscript(Transcript t) : transcript(std::move(t)) {
        sentences.reserve(transcript.size());
        for (const auto& span : transcript.spans) {
            sentences.push_back(normalize_whitespace(span.text));
        }
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            if (i > 0) joined += ' ';
            const std::size_t lo = joined.size();
            joined += sentences[i];
            spans.emplace_back(lo, joined.size());
        }
    }

    // Sentence indices intersecting [lo, hi) of the joined text.
    std::pair<int, int> covering(std::size_t lo, std::size_t hi) const {
        int first = -1, last = -1;
        for (std::size_t i = 0; i < spans.size(); ++i) {
            if (spans[i].first < hi && lo < spans[i].second) {
                if (first < 0) first = static_cast<int>(i);
                last = static_cast<int>(i);
            }
        }
        return {first, last};
    }

    std::string joined_range(int a, int b) const {
        std::string out;
        for (int i = a; i <= b; ++i) {
            if (i > a) out += ' ';
            out += sentences[i];
        }
        return out;
    }
};

std::string strip_target_block(const std::string& prompt) {
    std::string out;
    out.reserve(prompt.size());
    std::size_t pos = 0;
    while (pos <= prompt.size()) {
        std::size_t eol = prompt.find('\n', pos);
        if (eol == std::string::npos) eol = prompt.size();
        const std::string_view line(prompt.data() + pos, eol - pos);
        if (line.rfind("TARGET SENTENCE:", 0) != 0) {
            out.append(line);
            out += '\n';
        }
        if (eol == prompt.size()) break;
        pos = eol + 1;
    }
    return out;
}

bool range_in_prompt(const NormalizedTranscript& nt, int a, int b,
                     const std::string& norm_prompt) {
    for (int i = a; i <= b; ++i) {
        if (norm_prompt.find(nt.sentences[i]) == std::string::npos) {
            return false;
        }
    }
    return true;
}

class ExactOracle final : public Verifier {
public:
    ExactOracle(Transcript t, double fuzzy_floor)
        : nt_(std::move(t)), fuzzy_floor_(fuzzy_floor) {}

    PredictionResponse predict(const PredictionRequest& req) override {
        if (req.prompt.empty()) {
            throw ArgumentError("predict: empty prompt");
        }
        const std::string target = normalize_whitespace(req.target);
        // The query block quotes the target; only transcript content counts.
        const std::string prompt =
            normalize_whitespace(strip_target_block(req.prompt));

        TimeRange range = req.absent_convention;
        if (!target.empty()) {
            if (auto hit = find_verbatim(target, prompt)) {
                range = *hit;
            } else if (auto fuzzy = find_fuzzy(target, prompt)) {
                range = *fuzzy;
            }
        }

        PredictionResponse resp;
        resp.range = range;
        resp.raw = render_range_json(range);
        resp.input_tokens =
            static_cast<std::int64_t>(heuristic_token_count(req.prompt));
        resp.output_tokens =
            static_cast<std::int64_t>(heuristic_token_count(resp.raw));
        resp.latency_ms = 0;
        return resp;
    }

    bool supports_concurrency() const override { return true; }

private:
    // First occurrence of the target in the transcript whose covering
    // sentences all appear in the prompt.
    std::optional<TimeRange> find_verbatim(const std::string& target,
                                           const std::string& prompt) const {
        std::size_t at = nt_.joined.find(target);
        while (at != std::string::npos) {
            const auto [a, b] = nt_.covering(at, at + target.size());
            if (a >= 0 && range_in_prompt(nt_, a, b, prompt)) {
                return TimeRange{nt_.transcript.spans[a].start_ms,
                                 nt_.transcript.spans[b].end_ms};
            }
            at = nt_.joined.find(target, at + 1);
        }
        return std::nullopt;
    }

    // Stand-in for the model's semantic matching on drifted targets: slide a
    // coarse window over the joined transcript, settle on the best nearby
    // sentence range, and accept only above the floor and only when that
    // range is actually present in the prompt.
    std::optional<TimeRange> find_fuzzy(const std::string& target,
                                        const std::string& prompt) const {
        if (nt_.joined.empty()) return std::nullopt;
        const std::size_t m = target.size();
        const std::size_t n = nt_.joined.size();

        // Coarse pass: the best few windows by whole-window ratio. Several
        // survivors go to refinement because the stride can sample a near
        // duplicate more favorably than the true location.
        struct Coarse {
            double score;
            std::size_t at;
            std::size_t width;
        };
        std::vector<Coarse> leaders;
        const std::size_t stride = std::max<std::size_t>(1, m / 4);
        const auto keep = [&](double s, std::size_t i, std::size_t w) {
            for (auto& c : leaders) {
                // windows overlapping an existing leader just update it
                if (i < c.at + c.width && c.at < i + w) {
                    if (s > c.score) c = {s, i, w};
                    return;
                }
            }
            leaders.push_back({s, i, w});
            std::sort(leaders.begin(), leaders.end(),
                      [](const Coarse& a, const Coarse& b) {
                          return a.score > b.score;
                      });
            if (leaders.size() > 3) leaders.pop_back();
        };
        const auto scan_width = [&](std::size_t width) {
            if (width == 0 || width > n) return;
            for (std::size_t i = 0;; i += stride) {
                if (i + width > n) i = n - width;
                const double s =
                    ratio(target, std::string_view(nt_.joined).substr(i, width));
                keep(s, i, width);
                if (i == n - width) break;
            }
        };
        scan_width(m);
        scan_width(m + m / 4);
        if (m > 4) scan_width(m - m / 4);
        if (leaders.empty() || leaders.front().score < fuzzy_floor_ - 10.0) {
            return std::nullopt;
        }

        // Snap each leader to sentence boundaries and take the best range.
        const int n_sent = static_cast<int>(nt_.sentences.size());
        double best_score = -1.0;
        int best_a = -1, best_b = -1;
        for (const auto& c : leaders) {
            const auto [lo, hi] = nt_.covering(c.at, c.at + c.width);
            if (lo < 0) continue;
            for (int a = std::max(0, lo - 2);
                 a <= std::min(n_sent - 1, lo + 2); ++a) {
                for (int b = std::max(a, hi - 2);
                     b <= std::min(n_sent - 1, hi + 2); ++b) {
                    const double s = ratio(target, nt_.joined_range(a, b));
                    if (s > best_score) {
                        best_score = s;
                        best_a = a;
                        best_b = b;
                    }
                }
            }
        }
        if (best_a < 0 || best_score < fuzzy_floor_ ||
            !range_in_prompt(nt_, best_a, best_b, prompt)) {
            return std::nullopt;
        }
        return TimeRange{nt_.transcript.spans[best_a].start_ms,
                         nt_.transcript.spans[best_b].end_ms};
    }

    NormalizedTranscript nt_;
    double fuzzy_floor_;
};

class ScriptedVerifier final : public Verifier {
public:
    ScriptedVerifier(std::vector<ScriptDirective> script, Transcript t)
        : script_(std::move(script)), nt_(std::move(t)) {
        if (script_.empty()) {
            throw ArgumentError("mock_scripted: script must be non-empty");
        }
    }

    PredictionResponse predict(const PredictionRequest& req) override {
        if (next_ >= script_.size()) {
            throw ContractError("mock_scripted: script exhausted");
        }
        const ScriptDirective d = script_[next_++];

        PredictionResponse resp;
        resp.range = apply(d, req);
        resp.raw = render_range_json(resp.range);
        resp.input_tokens =
            static_cast<std::int64_t>(heuristic_token_count(req.prompt));
        resp.output_tokens =
            static_cast<std::int64_t>(heuristic_token_count(resp.raw));
        return resp;
    }

private:
    std::pair<int, int> locate(const PredictionRequest& req) const {
        const std::string target = normalize_whitespace(req.target);
        const std::size_t at = nt_.joined.find(target);
        if (target.empty() || at == std::string::npos) {
            throw ContractError(
                "mock_scripted: directive needs an anchor, target not found");
        }
        return nt_.covering(at, at + target.size());
    }

    TimeRange apply(const ScriptDirective& d, const PredictionRequest& req) {
        if (d.kind == DirectiveKind::Absent) return {0, 0};

        const auto [a, b] = d.anchor ? *d.anchor : locate(req);
        const int n = static_cast<int>(nt_.transcript.size());
        const auto span_at = [&](int i) -> const SentenceSpan& {
            if (i < 0 || i >= n) {
                throw ContractError(
                    "mock_scripted: directive shifts past transcript edge");
            }
            return nt_.transcript.spans[i];
        };

        switch (d.kind) {
            case DirectiveKind::Exact:
                return {span_at(a).start_ms, span_at(b).end_ms};
            case DirectiveKind::OffByOne:
                return {span_at(a + d.start_delta).start_ms,
                        span_at(b + d.end_delta).end_ms};
            case DirectiveKind::MajorShift:
                return {span_at(a + d.shift).start_ms,
                        span_at(b + d.shift).end_ms};
            case DirectiveKind::Invalid: {
                // Start nudged to a value that is no span's start boundary.
                std::int64_t v = span_at(a).start_ms + 1;
                const auto is_start = [&](std::int64_t ms) {
                    return std::any_of(
                        nt_.transcript.spans.begin(),
                        nt_.transcript.spans.end(),
                        [&](const SentenceSpan& s) { return s.start_ms == ms; });
                };
                while (is_start(v)) ++v;
                return {v, span_at(b).end_ms};
            }
            default:
                return {0, 0};
        }
    }

    std::vector<ScriptDirective> script_;
    NormalizedTranscript nt_;
    std::size_t next_ = 0;
};

// Generic JSON-over-HTTP provider client. Providers either enforce the
// schema (structured "output" object) or reply with free text, from which
// the first balanced JSON object is extracted.
class HttpVerifier final : public Verifier {
public:
    explicit HttpVerifier(VerifierSpec spec) : spec_(std::move(spec)) {
        split_endpoint();
        if (!spec_.auth_env.empty()) {
            const char* token = std::getenv(spec_.auth_env.c_str());
            if (token == nullptr || *token == '\0') {
                throw ConfigError("credential variable not set: " +
                                  spec_.auth_env);
            }
            bearer_ = token;
        }
    }

    PredictionResponse predict(const PredictionRequest& req) override {
        if (req.prompt.empty()) {
            throw ArgumentError("predict: empty prompt");
        }
        const auto started = Clock::now();
        const std::string body = request_body(req);

        std::string last_error;
        bool timed_out = false;
        for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(250LL << (attempt - 1)));
            }
            httplib::Client client(base_);
            client.set_connection_timeout(0, spec_.timeout_ms * 1000LL);
            client.set_read_timeout(spec_.timeout_ms / 1000,
                                    (spec_.timeout_ms % 1000) * 1000);
            if (!bearer_.empty()) client.set_bearer_token_auth(bearer_);
            auto res = client.Post(path_, body, "application/json");
            if (!res) {
                const auto err = res.error();
                timed_out = err == httplib::Error::ConnectionTimeout ||
                            err == httplib::Error::Read;
                last_error = httplib::to_string(err);
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                last_error = "http status " + std::to_string(res->status);
                continue;
            }
            PredictionResponse resp = decode(res->body, req);
            resp.latency_ms = elapsed_ms(started);
            return resp;
        }
        if (timed_out) {
            throw TimeoutError("verifier timed out: " + last_error);
        }
        throw TransportError("verifier transport failed: " + last_error);
    }

private:
    void split_endpoint() {
        const std::string& url = spec_.endpoint;
        std::size_t scheme = url.find("://");
        if (scheme == std::string::npos) {
            throw ConfigError("bad endpoint url: " + url);
        }
        std::size_t slash = url.find('/', scheme + 3);
        if (slash == std::string::npos) {
            base_ = url;
            path_ = "/";
        } else {
            base_ = url.substr(0, slash);
            path_ = url.substr(slash);
        }
    }

    std::string request_body(const PredictionRequest& req) const {
        nlohmann::json j;
        j["model"] = spec_.model_id;
        j["prompt"] = req.prompt;
        j["target"] = req.target;
        j["schema"] = {{"id", req.schema_id},
                       {"type", "object"},
                       {"properties",
                        {{"start_ms", {{"type", "integer"}}},
                         {"end_ms", {{"type", "integer"}}}}},
                       {"required", {"start_ms", "end_ms"}}};
        j["absent_convention"] = {{"start_ms", req.absent_convention.start_ms},
                                  {"end_ms", req.absent_convention.end_ms}};
        j["reasoning"] = reasoning_mode_name(spec_.reasoning_mode);
        return j.dump();
    }

    static std::string extract_object(const std::string& text) {
        const std::size_t open = text.find('{');
        if (open == std::string::npos) return {};
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = open; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (c == '\\') {
                    ++i;
                } else if (c == '"') {
                    in_string = false;
                }
            } else if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) return text.substr(open, i - open + 1);
            }
        }
        return {};
    }

    PredictionResponse decode(const std::string& body,
                              const PredictionRequest& req) const {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error&) {
            throw DecodeError("verifier replied with invalid JSON", body);
        }

        nlohmann::json payload;
        if (j.contains("start_ms") && j.contains("end_ms")) {
            payload = j;
        } else if (j.contains("output") && j["output"].is_object()) {
            payload = j["output"];
        } else if (j.contains("text") && j["text"].is_string()) {
            const std::string inner =
                extract_object(j["text"].get<std::string>());
            if (inner.empty()) {
                throw DecodeError("no JSON object in verifier text", body);
            }
            try {
                payload = nlohmann::json::parse(inner);
            } catch (const nlohmann::json::parse_error&) {
                throw DecodeError("unbalanced JSON in verifier text", body);
            }
        } else {
            throw DecodeError("verifier payload missing range object", body);
        }
        if (!payload.contains("start_ms") || !payload.contains("end_ms") ||
            !payload["start_ms"].is_number_integer() ||
            !payload["end_ms"].is_number_integer()) {
            throw DecodeError("verifier range fields must be integers", body);
        }

        PredictionResponse resp;
        resp.range = {payload["start_ms"].get<std::int64_t>(),
                      payload["end_ms"].get<std::int64_t>()};
        resp.raw = body;
        if (j.contains("usage") && j["usage"].is_object()) {
            const auto& u = j["usage"];
            const auto count = [&](const char* key) -> std::int64_t {
                return u.contains(key) && u[key].is_number_integer()
                           ? u[key].get<std::int64_t>()
                           : 0;
            };
            resp.input_tokens = count("input_tokens");
            resp.output_tokens = count("output_tokens");
            resp.reasoning_tokens = count("reasoning_tokens");
            resp.cached_input_tokens = count("cached_input_tokens");
            resp.reasoning_in_output =
                u.contains("reasoning_in_output") &&
                u["reasoning_in_output"].is_boolean() &&
                u["reasoning_in_output"].get<bool>();
            resp.token_source = "provider";
        } else {
            resp.input_tokens = static_cast<std::int64_t>(
                heuristic_token_count(req.prompt));
            resp.output_tokens =
                static_cast<std::int64_t>(heuristic_token_count(body));
            resp.token_source = "heuristic";
        }
        return resp;
    }

    VerifierSpec spec_;
    std::string base_;
    std::string path_;
    std::string bearer_;
};

}  // namespace

std::string normalize_whitespace(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool in_space = false;
    for (unsigned char c : text) {
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

std::string reasoning_mode_name(const ReasoningMode& mode) {
    if (std::holds_alternative<ReasoningDisabled>(mode)) return "disabled";
    if (std::holds_alternative<ReasoningDynamic>(mode)) return "dynamic";
    if (const auto* b = std::get_if<ReasoningBudgeted>(&mode)) {
        return "budget:" + std::to_string(b->tokens);
    }
    switch (std::get<ReasoningEffort>(mode)) {
        case ReasoningEffort::Low: return "effort_low";
        case ReasoningEffort::Medium: return "effort_medium";
        case ReasoningEffort::High: return "effort_high";
    }
    return "disabled";
}

ReasoningMode reasoning_mode_from_name(const std::string& name) {
    if (name == "disabled" || name.empty()) return ReasoningDisabled{};
    if (name == "dynamic") return ReasoningDynamic{};
    if (name == "effort_low") return ReasoningEffort::Low;
    if (name == "effort_medium") return ReasoningEffort::Medium;
    if (name == "effort_high") return ReasoningEffort::High;
    if (name.rfind("budget:", 0) == 0) {
        std::int64_t tokens = 0;
        const std::string digits = name.substr(7);
        auto [ptr, ec] = std::from_chars(digits.data(),
                                         digits.data() + digits.size(), tokens);
        if (ec == std::errc() && tokens > 0) return ReasoningBudgeted{tokens};
    }
    throw ConfigError("unknown reasoning mode: " + name);
}

void VerifierSpec::validate() const {
    if (model_id.empty()) throw ConfigError("verifier: model_id required");
    if (endpoint.empty()) throw ConfigError("verifier: endpoint required");
    if (const auto* b = std::get_if<ReasoningBudgeted>(&reasoning_mode)) {
        if (b->tokens <= 0) {
            throw ConfigError("verifier: reasoning budget must be > 0");
        }
    }
    if (max_retries < 0) throw ConfigError("verifier: max_retries < 0");
    if (timeout_ms <= 0) throw ConfigError("verifier: timeout_ms <= 0");
}

std::unique_ptr<Verifier> mock_exact_oracle(Transcript transcript,
                                            double fuzzy_floor) {
    return std::make_unique<ExactOracle>(std::move(transcript), fuzzy_floor);
}

std::unique_ptr<Verifier> mock_scripted(std::vector<ScriptDirective> script,
                                        Transcript transcript) {
    return std::make_unique<ScriptedVerifier>(std::move(script),
                                              std::move(transcript));
}

std::unique_ptr<Verifier> make_verifier(const VerifierSpec& spec,
                                        const Transcript* transcript) {
    spec.validate();
    if (spec.endpoint == "mock:exact") {
        if (transcript == nullptr) {
            throw ConfigError("mock:exact needs a transcript");
        }
        return mock_exact_oracle(*transcript);
    }
    if (spec.endpoint.rfind("mock:", 0) == 0) {
        throw ConfigError("mock endpoint must be constructed directly: " +
                          spec.endpoint);
    }
    if (spec.endpoint.rfind("http://", 0) == 0 ||
        spec.endpoint.rfind("https://", 0) == 0) {
        return std::make_unique<HttpVerifier>(spec);
    }
    throw ConfigError("unsupported endpoint: " + spec.endpoint);
}

PredictionResponse predict(const VerifierSpec& spec,
                           const PredictionRequest& req,
                           const Transcript* transcript) {
    return make_verifier(spec, transcript)->predict(req);
}

}  // namespace quotestamp
