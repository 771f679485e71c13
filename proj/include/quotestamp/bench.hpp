#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "quotestamp/formats.hpp"
#include "quotestamp/matcher.hpp"
#include "quotestamp/outcome.hpp"
#include "quotestamp/sampler.hpp"
#include "quotestamp/stats.hpp"
#include "quotestamp/transcript.hpp"
#include "quotestamp/verifier.hpp"

namespace quotestamp {

// Task inventory. The exact family names spell out query placement because
// "top"/"bottom" labels are ambiguous across write-ups; the README maps the
// two vocabularies.
enum class TaskKind {
    Controls,             // needle controls in three formats
    ExactJsonQueryBefore,
    ExactJsonQueryAfter,
    ExactTft,             // Text First + query before
    FuzzyUnassisted,
    SnippetControl,
    FuzzyAssisted,
    AbsentTarget,
    LengthSweep,
};

std::string task_name(TaskKind kind);
TaskKind task_from_name(const std::string& name);

struct RunPlan {
    std::string run_id = "run";
    std::string transcript_path;
    std::string absent_source_path;   // haystack-B targets for AbsentTarget
    std::vector<TaskKind> tasks;
    SamplerConfig sampler;
    MatcherConfig matcher;
    CleanConfig clean;
    std::vector<VerifierSpec> verifiers;
    std::string output_path;
    std::string cost_table_path;
    std::uint64_t perturb_seed = 17;
    std::vector<std::int64_t> bucket_targets;

    void validate() const;
    bool all_mock() const;
};

RunPlan parse_run_plan(const std::string& json_text);
RunPlan load_run_plan(const std::string& path);
// Default inventory: controls + the exact family + the fuzzy family, one
// mock oracle model.
RunPlan make_default_plan();

struct BudgetLine {
    std::string task_id;
    std::size_t calls_per_model = 0;
};

struct BudgetReport {
    std::vector<BudgetLine> per_task;
    std::size_t control_family = 0;
    std::size_t exact_family = 0;
    std::size_t fuzzy_family = 0;
    std::size_t extra = 0;   // absent-target and length-sweep tasks
    std::size_t per_model_total = 0;
    std::size_t model_count = 0;
    std::size_t grand_total = 0;
};

// Call counts derived from the plan's task inventory:
//   controls     = questions x tries x formats
//   exact family = |L| x S x tries per format
//   fuzzy family = unassisted + snippet control (S = 3) + assisted
BudgetReport call_budget(const RunPlan& plan);

// One verifier call, one line in the record file.
struct TrialRecord {
    std::int64_t seq = 0;
    std::string run_id;
    std::string task_id;
    std::string model_id;
    std::string format;
    std::string placement;
    std::optional<PassageSpec> passage;
    bool perturbed = false;
    bool target_present = true;
    TimeRange prediction;
    Outcome outcome;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::int64_t reasoning_tokens = 0;
    std::int64_t cached_input_tokens = 0;
    std::int64_t latency_ms = 0;
    double cost_usd = 0.0;
    std::string trace_json;   // assisted trials carry their narrowing trace
    std::string error;
    std::int64_t timestamp_ms = 0;

    std::string to_json_line() const;
    static TrialRecord from_json_line(const std::string& line);
    TrialSlice slice() const;
};

// Append-only record sink; the single synchronization point of a run.
class RecordSink {
public:
    virtual ~RecordSink() = default;
    virtual void append(const TrialRecord& record) = 0;
    virtual std::size_t count() const = 0;
};

class MemoryRecordSink final : public RecordSink {
public:
    void append(const TrialRecord& record) override;
    std::size_t count() const override { return records_.size(); }
    const std::vector<TrialRecord>& records() const { return records_; }

private:
    std::vector<TrialRecord> records_;
};

// One record per line, flushed per append so a crash loses at most the call
// in flight. Opening an existing file resumes by record count.
class FileRecordSink final : public RecordSink {
public:
    explicit FileRecordSink(const std::string& path);
    void append(const TrialRecord& record) override;
    std::size_t count() const override { return count_; }

private:
    std::string path_;
    std::size_t count_ = 0;
};

std::vector<TrialRecord> load_records(const std::string& path);

struct RunInputs {
    Transcript transcript;
    std::optional<Transcript> absent_source;
};

using VerifierFactory = std::function<std::unique_ptr<Verifier>(
    const VerifierSpec&, const Transcript&)>;

// Execute the plan phase by phase. Calls are sequential within each model
// block in a fixed order (lengths ascending, passage index ascending, try
// index ascending); every call appends its record before the next begins,
// and a partially-filled sink resumes where it stopped. Verifier errors are
// recorded as failed trials, not aborts. All-mock plans use a logical clock
// so identical plans produce byte-identical record files.
// Returns the number of records appended by this invocation.
std::size_t run_phase_first(const RunPlan& plan, const RunInputs& inputs,
                            RecordSink& sink,
                            const VerifierFactory& factory = {},
                            std::function<std::int64_t()> clock = {});

// Long-context bucket construction.
struct BucketSpec {
    std::int64_t target_tokens = 0;
    std::int64_t achieved_tokens = 0;
    int sentence_count = 0;
};

struct BucketResult {
    Transcript composite;  // inputs concatenated on a shifted shared timeline
    std::vector<BucketSpec> buckets;
    std::vector<Transcript> bucket_transcripts;
};

// Concatenate the transcripts in order (later ones shifted onto the shared
// timeline), then cut one bucket per target: the longest sentence-boundary
// prefix whose token count stays at or under the target. Tokens are counted
// on the Text-First rendering. Unreachable targets raise ArgumentError
// naming the first one.
BucketResult build_buckets(const std::vector<Transcript>& transcripts,
                           const std::vector<std::int64_t>& targets,
                           const Tokenizer& tokenizer = heuristic_token_count);

}  // namespace quotestamp
