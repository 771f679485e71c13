#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "quotestamp/transcript.hpp"

namespace quotestamp {

// Reasoning knob forwarded to providers that support it. Mocks ignore it.
struct ReasoningDisabled {};
struct ReasoningDynamic {};
struct ReasoningBudgeted {
    std::int64_t tokens = 0;
};
enum class ReasoningEffort { Low, Medium, High };
using ReasoningMode = std::variant<ReasoningDisabled, ReasoningDynamic,
                                   ReasoningBudgeted, ReasoningEffort>;

std::string reasoning_mode_name(const ReasoningMode& mode);
ReasoningMode reasoning_mode_from_name(const std::string& name);

// Endpoint is either an http(s) URL or one of the mock schemes
// ("mock:exact", "mock:scripted").
struct VerifierSpec {
    std::string model_id;
    std::string endpoint;
    std::string pricing_ref;
    // Name of the environment variable holding the bearer token for this
    // endpoint; empty means unauthenticated.
    std::string auth_env;
    ReasoningMode reasoning_mode = ReasoningDisabled{};
    int max_retries = 2;
    int timeout_ms = 120000;

    bool is_mock() const { return endpoint.rfind("mock:", 0) == 0; }
    void validate() const;
};

struct PredictionRequest {
    std::string prompt;
    std::string target;
    std::string schema_id = "time_range_v1";
    TimeRange absent_convention;  // (0, 0)
};

struct PredictionResponse {
    TimeRange range;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::int64_t reasoning_tokens = 0;
    std::int64_t cached_input_tokens = 0;
    // True when reasoning tokens are already folded into output_tokens.
    bool reasoning_in_output = false;
    // "provider" when token counts came from the provider, else "heuristic".
    std::string token_source = "heuristic";
    std::int64_t latency_ms = 0;
    std::string raw;
};

// One prediction contract serves full-transcript and assisted-snippet calls;
// the caller controls the prompt. Implementations must be safe for
// sequential reuse; concurrent use only when declared.
class Verifier {
public:
    virtual ~Verifier() = default;
    virtual PredictionResponse predict(const PredictionRequest& req) = 0;
    virtual bool supports_concurrency() const { return false; }
};

// Resolve a spec to a verifier. Mock endpoints need the transcript the run
// is grounded against; HTTP endpoints do not.
std::unique_ptr<Verifier> make_verifier(const VerifierSpec& spec,
                                        const Transcript* transcript = nullptr);

// Single-shot convenience wrapper over make_verifier + predict.
PredictionResponse predict(const VerifierSpec& spec,
                           const PredictionRequest& req,
                           const Transcript* transcript = nullptr);

// Deterministic stand-in for a perfect model. Scans the prompt's transcript
// content for the target (whitespace-normalized); when the target does not
// occur verbatim it falls back to the best fuzzy consecutive-sentence match
// that is actually present in the prompt, gated at `fuzzy_floor`. Absent
// targets come back as (0, 0). Latency is 0 and token counts follow the
// chars/4 heuristic.
std::unique_ptr<Verifier> mock_exact_oracle(Transcript transcript,
                                            double fuzzy_floor = 75.0);

// Directive kinds a scripted mock can emit, in script order.
enum class DirectiveKind {
    Exact,
    OffByOne,    // shift one boundary by one sentence; deltas in {-1, 0, +1}
    MajorShift,  // shift both boundaries by `shift` sentences
    Absent,      // reply (0, 0)
    Invalid,     // boundaries that sit on no sentence boundary
};

struct ScriptDirective {
    DirectiveKind kind = DirectiveKind::Exact;
    int start_delta = 0;
    int end_delta = 0;
    int shift = 0;
    // Anchor passage [start, end] in sentence indices. When absent, the
    // directive locates the request target in the transcript instead.
    std::optional<std::pair<int, int>> anchor;
};

// Emits the scripted outcomes in order, computing concrete millisecond
// values from the true passage against the supplied transcript. Running past
// the end of the script raises ContractError.
std::unique_ptr<Verifier> mock_scripted(std::vector<ScriptDirective> script,
                                        Transcript transcript);

// Collapse whitespace runs to single spaces and trim; the normalization the
// exact oracle applies to both sides before scanning.
std::string normalize_whitespace(const std::string& text);

}  // namespace quotestamp
