#include "quotestamp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "quotestamp/errors.hpp"
#include "quotestamp/perturb.hpp"

namespace quotestamp {

namespace {

const char* kFullInstructions =
    "Find the start and end timestamps in milliseconds for the target "
    "sentence(s) in the transcript below. The target may differ from the "
    "transcript in punctuation, contractions or minor wording; pick the "
    "passage that matches it best. Respond in pure JSON as "
    "{\"start_ms\": <int>, \"end_ms\": <int>} using the boundaries of the "
    "matched passage. If the target does not occur in the transcript, "
    "return {\"start_ms\": 0, \"end_ms\": 0}.";

constexpr int kAbsentPerThird = 2;   // 6 passages per length
constexpr int kSnippetPerThird = 1;  // 3 passages per length
constexpr int kControlQuestions = 3;

const std::vector<FormatKind> kControlFormats = {
    FormatKind::SttJson, FormatKind::PlainText, FormatKind::TextFirst};

SamplerConfig with_per_third(SamplerConfig cfg, int per_third) {
    cfg.per_third = per_third;
    cfg.per_length = 3 * per_third;
    return cfg;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^
                      (b * 0xC2B2AE3D27D4EB4FULL);
    x ^= x >> 31;
    x *= 0x7FB5D329728EA185ULL;
    x ^= x >> 29;
    return x;
}

// The three needle-control questions: the most distinctive (longest)
// sentence in each third.
std::vector<PassageSpec> control_passages(const Transcript& t) {
    const int n = static_cast<int>(t.size());
    std::vector<PassageSpec> out;
    for (Third third : {Third::First, Third::Middle, Third::Last}) {
        int best = -1;
        std::size_t best_len = 0;
        for (int i = 0; i < n; ++i) {
            if (third_of_index(i, n) != third) continue;
            if (t.spans[i].text.size() > best_len) {
                best_len = t.spans[i].text.size();
                best = i;
            }
        }
        if (best < 0) {
            throw SamplingError("controls: transcript third is empty");
        }
        PassageSpec spec;
        spec.start_index = best;
        spec.end_index = best;
        spec.length = 1;
        spec.third = third;
        spec.truth = {t.spans[best].start_ms, t.spans[best].end_ms};
        out.push_back(spec);
    }
    return out;
}

nlohmann::json range_json(const TimeRange& r) {
    return {{"start_ms", r.start_ms}, {"end_ms", r.end_ms}};
}

TimeRange range_from_json(const nlohmann::json& j) {
    return {j.at("start_ms").get<std::int64_t>(),
            j.at("end_ms").get<std::int64_t>()};
}

}  // namespace

std::string task_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::Controls: return "controls";
        case TaskKind::ExactJsonQueryBefore: return "exact_json_query_before";
        case TaskKind::ExactJsonQueryAfter: return "exact_json_query_after";
        case TaskKind::ExactTft: return "exact_tft";
        case TaskKind::FuzzyUnassisted: return "fuzzy_unassisted";
        case TaskKind::SnippetControl: return "snippet_control";
        case TaskKind::FuzzyAssisted: return "fuzzy_assisted";
        case TaskKind::AbsentTarget: return "absent_target";
        case TaskKind::LengthSweep: return "length_sweep";
    }
    return "controls";
}

TaskKind task_from_name(const std::string& name) {
    for (TaskKind kind :
         {TaskKind::Controls, TaskKind::ExactJsonQueryBefore,
          TaskKind::ExactJsonQueryAfter, TaskKind::ExactTft,
          TaskKind::FuzzyUnassisted, TaskKind::SnippetControl,
          TaskKind::FuzzyAssisted, TaskKind::AbsentTarget,
          TaskKind::LengthSweep}) {
        if (task_name(kind) == name) return kind;
    }
    throw ConfigError("unknown task: " + name);
}

void RunPlan::validate() const {
    if (tasks.empty()) throw ConfigError("plan: no tasks");
    if (verifiers.empty()) throw ConfigError("plan: no verifiers");
    sampler.validate();
    matcher.validate();
    for (const auto& spec : verifiers) spec.validate();
    const bool sweeps =
        std::find(tasks.begin(), tasks.end(), TaskKind::LengthSweep) !=
        tasks.end();
    if (sweeps && bucket_targets.empty()) {
        throw ConfigError("plan: length_sweep needs bucket_targets");
    }
}

bool RunPlan::all_mock() const {
    return std::all_of(verifiers.begin(), verifiers.end(),
                       [](const VerifierSpec& v) { return v.is_mock(); });
}

RunPlan parse_run_plan(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("plan: ") + e.what());
    }
    RunPlan plan;
    plan.run_id = doc.value("run_id", std::string("run"));
    plan.transcript_path = doc.value("transcript", std::string());
    plan.absent_source_path = doc.value("absent_source", std::string());
    plan.output_path = doc.value("output", std::string());
    plan.cost_table_path = doc.value("cost_table", std::string());
    plan.perturb_seed = doc.value("perturb_seed", std::uint64_t{17});

    if (doc.contains("tasks")) {
        for (const auto& t : doc["tasks"]) {
            plan.tasks.push_back(task_from_name(t.get<std::string>()));
        }
    }
    if (doc.contains("sampler")) {
        const auto& s = doc["sampler"];
        if (s.contains("lengths")) {
            plan.sampler.lengths = s["lengths"].get<std::vector<int>>();
        }
        plan.sampler.per_third = s.value("per_third", plan.sampler.per_third);
        plan.sampler.per_length = 3 * plan.sampler.per_third;
        plan.sampler.anchor_window =
            s.value("anchor_window", plan.sampler.anchor_window);
        plan.sampler.min_sentence_chars =
            s.value("min_sentence_chars", plan.sampler.min_sentence_chars);
        plan.sampler.tries = s.value("tries", plan.sampler.tries);
        plan.sampler.seed = s.value("seed", plan.sampler.seed);
    }
    if (doc.contains("matcher")) {
        const auto& m = doc["matcher"];
        plan.matcher.k = m.value("k", plan.matcher.k);
        plan.matcher.ratio_threshold =
            m.value("ratio_threshold", plan.matcher.ratio_threshold);
        plan.matcher.min_pad = m.value("min_pad", plan.matcher.min_pad);
        plan.matcher.max_pad = m.value("max_pad", plan.matcher.max_pad);
        plan.matcher.pad_frac = m.value("pad_frac", plan.matcher.pad_frac);
    }
    if (doc.contains("verifiers")) {
        for (const auto& v : doc["verifiers"]) {
            VerifierSpec spec;
            spec.model_id = v.value("model_id", std::string());
            spec.endpoint = v.value("endpoint", std::string());
            spec.pricing_ref = v.value("pricing_ref", std::string());
            spec.auth_env = v.value("auth_env", std::string());
            spec.reasoning_mode = reasoning_mode_from_name(
                v.value("reasoning_mode", std::string("disabled")));
            spec.max_retries = v.value("max_retries", spec.max_retries);
            spec.timeout_ms = v.value("timeout_ms", spec.timeout_ms);
            plan.verifiers.push_back(std::move(spec));
        }
    }
    if (doc.contains("bucket_targets")) {
        plan.bucket_targets =
            doc["bucket_targets"].get<std::vector<std::int64_t>>();
    }
    plan.validate();
    return plan;
}

RunPlan load_run_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("plan not readable: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_plan(buf.str());
}

RunPlan make_default_plan() {
    RunPlan plan;
    plan.run_id = "default";
    plan.tasks = {TaskKind::Controls,        TaskKind::ExactJsonQueryBefore,
                  TaskKind::ExactJsonQueryAfter, TaskKind::ExactTft,
                  TaskKind::FuzzyUnassisted, TaskKind::SnippetControl,
                  TaskKind::FuzzyAssisted};
    VerifierSpec oracle;
    oracle.model_id = "exact-oracle";
    oracle.endpoint = "mock:exact";
    plan.verifiers.push_back(std::move(oracle));
    return plan;
}

BudgetReport call_budget(const RunPlan& plan) {
    plan.validate();
    const std::size_t lengths = plan.sampler.lengths.size();
    const std::size_t tries = static_cast<std::size_t>(plan.sampler.tries);
    const std::size_t per_length =
        static_cast<std::size_t>(plan.sampler.per_length);

    BudgetReport report;
    report.model_count = plan.verifiers.size();
    for (TaskKind task : plan.tasks) {
        std::size_t calls = 0;
        switch (task) {
            case TaskKind::Controls:
                calls = kControlQuestions * tries * kControlFormats.size();
                report.control_family += calls;
                break;
            case TaskKind::ExactJsonQueryBefore:
            case TaskKind::ExactJsonQueryAfter:
            case TaskKind::ExactTft:
                calls = lengths * per_length * tries;
                report.exact_family += calls;
                break;
            case TaskKind::FuzzyUnassisted:
            case TaskKind::FuzzyAssisted:
                calls = lengths * per_length * tries;
                report.fuzzy_family += calls;
                break;
            case TaskKind::SnippetControl:
                calls = lengths * 3 * kSnippetPerThird * tries;
                report.fuzzy_family += calls;
                break;
            case TaskKind::AbsentTarget:
                calls = lengths * 3 * kAbsentPerThird * tries;
                report.extra += calls;
                break;
            case TaskKind::LengthSweep:
                calls = plan.bucket_targets.size() * lengths * 3 *
                        kAbsentPerThird * tries;
                report.extra += calls;
                break;
        }
        report.per_task.push_back({task_name(task), calls});
        report.per_model_total += calls;
    }
    report.grand_total = report.per_model_total * report.model_count;
    return report;
}

std::string TrialRecord::to_json_line() const {
    nlohmann::json j;
    j["seq"] = seq;
    j["run_id"] = run_id;
    j["task_id"] = task_id;
    j["model_id"] = model_id;
    j["format"] = format;
    j["placement"] = placement;
    if (passage) {
        j["passage"] = {{"start_index", passage->start_index},
                        {"end_index", passage->end_index},
                        {"length", passage->length},
                        {"third", third_name(passage->third)},
                        {"truth", range_json(passage->truth)}};
    } else {
        j["passage"] = nullptr;
    }
    j["perturbed"] = perturbed;
    j["target_present"] = target_present;
    j["prediction"] = range_json(prediction);
    j["outcome"] = outcome_name(outcome.kind);
    j["start_delta"] = outcome.start_delta;
    j["end_delta"] = outcome.end_delta;
    j["input_tokens"] = input_tokens;
    j["output_tokens"] = output_tokens;
    j["reasoning_tokens"] = reasoning_tokens;
    j["cached_input_tokens"] = cached_input_tokens;
    j["latency_ms"] = latency_ms;
    j["cost_usd"] = cost_usd;
    if (trace_json.empty()) {
        j["trace"] = nullptr;
    } else {
        j["trace"] = nlohmann::json::parse(trace_json);
    }
    j["error"] = error;
    j["timestamp_ms"] = timestamp_ms;
    return j.dump();
}

TrialRecord TrialRecord::from_json_line(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("record: ") + e.what(), e.byte);
    }
    TrialRecord r;
    r.seq = j.value("seq", std::int64_t{0});
    r.run_id = j.value("run_id", std::string());
    r.task_id = j.value("task_id", std::string());
    r.model_id = j.value("model_id", std::string());
    r.format = j.value("format", std::string());
    r.placement = j.value("placement", std::string());
    if (j.contains("passage") && !j["passage"].is_null()) {
        const auto& p = j["passage"];
        PassageSpec spec;
        spec.start_index = p.at("start_index").get<int>();
        spec.end_index = p.at("end_index").get<int>();
        spec.length = p.at("length").get<int>();
        const std::string third = p.at("third").get<std::string>();
        spec.third = third == "first"    ? Third::First
                     : third == "middle" ? Third::Middle
                                         : Third::Last;
        spec.truth = range_from_json(p.at("truth"));
        r.passage = spec;
    }
    r.perturbed = j.value("perturbed", false);
    r.target_present = j.value("target_present", true);
    r.prediction = range_from_json(j.at("prediction"));
    r.outcome.kind = outcome_from_name(j.at("outcome").get<std::string>());
    r.outcome.start_delta = j.value("start_delta", 0);
    r.outcome.end_delta = j.value("end_delta", 0);
    r.input_tokens = j.value("input_tokens", std::int64_t{0});
    r.output_tokens = j.value("output_tokens", std::int64_t{0});
    r.reasoning_tokens = j.value("reasoning_tokens", std::int64_t{0});
    r.cached_input_tokens = j.value("cached_input_tokens", std::int64_t{0});
    r.latency_ms = j.value("latency_ms", std::int64_t{0});
    r.cost_usd = j.value("cost_usd", 0.0);
    if (j.contains("trace") && !j["trace"].is_null()) {
        r.trace_json = j["trace"].dump();
    }
    r.error = j.value("error", std::string());
    r.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
    return r;
}

TrialSlice TrialRecord::slice() const {
    TrialSlice s;
    s.model_id = model_id;
    s.task_id = task_id;
    s.format = format;
    s.length = passage ? passage->length : 0;
    s.third = passage ? passage->third : Third::First;
    s.outcome = outcome;
    return s;
}

void MemoryRecordSink::append(const TrialRecord& record) {
    records_.push_back(record);
}

FileRecordSink::FileRecordSink(const std::string& path) : path_(path) {
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++count_;
    }
}

void FileRecordSink::append(const TrialRecord& record) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw ConfigError("record sink not writable: " + path_);
    out << record.to_json_line() << '\n';
    out.flush();
    ++count_;
}

std::vector<TrialRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("records not readable: " + path);
    std::vector<TrialRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            records.push_back(TrialRecord::from_json_line(line));
        }
    }
    return records;
}

namespace {

// Everything fixed about one pending verifier call.
struct PendingTrial {
    TaskKind task;
    FormatKind format;
    Placement placement;
    PassageSpec passage;
    bool perturbed = false;
    bool target_present = true;
    std::string quote;
    std::string transcript_text;  // full render or snippet; empty for assisted
    const Transcript* grounding = nullptr;  // transcript predictions score on
};

class Runner {
public:
    Runner(const RunPlan& plan, const RunInputs& inputs, RecordSink& sink,
           VerifierFactory factory, std::function<std::int64_t()> clock)
        : plan_(plan),
          inputs_(inputs),
          sink_(sink),
          factory_(std::move(factory)),
          clock_(std::move(clock)) {
        plan_.validate();
        if (!factory_) {
            factory_ = [](const VerifierSpec& spec, const Transcript& t) {
                return make_verifier(spec, &t);
            };
        }
        if (!plan_.cost_table_path.empty()) {
            cost_table_ = load_cost_table(plan_.cost_table_path);
        }
        passages_ = sample_passages(inputs_.transcript, plan_.sampler);
    }

    std::size_t run() {
        std::size_t appended = 0;
        for (TaskKind task : plan_.tasks) {
            appended += run_task(task);
        }
        return appended;
    }

private:
    const std::string& rendered(FormatKind format) {
        auto it = render_cache_.find(format);
        if (it == render_cache_.end()) {
            it = render_cache_
                     .emplace(format, render(inputs_.transcript, format))
                     .first;
        }
        return it->second;
    }

    std::vector<PassageSpec> passages_for_length(int length) const {
        std::vector<PassageSpec> out;
        for (const auto& p : passages_) {
            if (p.length == length) out.push_back(p);
        }
        return out;
    }

    std::string perturbed_text(const PassageSpec& p) const {
        const std::string original = passage_text(inputs_.transcript, p);
        const std::uint64_t seed =
            mix_seed(plan_.perturb_seed,
                     static_cast<std::uint64_t>(p.length),
                     static_cast<std::uint64_t>(p.start_index));
        return perturb_passage(original, default_rules(), seed).text;
    }

    std::size_t run_task(TaskKind task) {
        switch (task) {
            case TaskKind::Controls: return run_controls();
            case TaskKind::ExactJsonQueryBefore:
                return run_full_prompt(task, FormatKind::SttJson,
                                       Placement::QueryBefore, false);
            case TaskKind::ExactJsonQueryAfter:
                return run_full_prompt(task, FormatKind::SttJson,
                                       Placement::QueryAfter, false);
            case TaskKind::ExactTft:
                return run_full_prompt(task, FormatKind::TextFirst,
                                       Placement::QueryBefore, false);
            case TaskKind::FuzzyUnassisted:
                return run_full_prompt(task, FormatKind::TextFirst,
                                       Placement::QueryBefore, true);
            case TaskKind::SnippetControl: return run_snippet_control();
            case TaskKind::FuzzyAssisted: return run_assisted();
            case TaskKind::AbsentTarget: return run_absent();
            case TaskKind::LengthSweep: return run_length_sweep();
        }
        return 0;
    }

    std::size_t run_controls() {
        const auto questions = control_passages(inputs_.transcript);
        std::size_t appended = 0;
        for (FormatKind format : kControlFormats) {
            for (const auto& spec : plan_.verifiers) {
                auto verifier = factory_(spec, inputs_.transcript);
                for (const auto& q : questions) {
                    for (int t = 0; t < plan_.sampler.tries; ++t) {
                        PendingTrial trial;
                        trial.task = TaskKind::Controls;
                        trial.format = format;
                        trial.placement = Placement::QueryBefore;
                        trial.passage = q;
                        trial.quote =
                            passage_text(inputs_.transcript, q);
                        trial.transcript_text = rendered(format);
                        trial.grounding = &inputs_.transcript;
                        appended += execute(trial, spec, *verifier);
                    }
                }
            }
        }
        return appended;
    }

    std::size_t run_full_prompt(TaskKind task, FormatKind format,
                                Placement placement, bool perturbed) {
        std::size_t appended = 0;
        for (const auto& spec : plan_.verifiers) {
            auto verifier = factory_(spec, inputs_.transcript);
            for (int length : plan_.sampler.lengths) {
                for (const auto& p : passages_for_length(length)) {
                    const std::string quote =
                        perturbed ? perturbed_text(p)
                                  : passage_text(inputs_.transcript, p);
                    for (int t = 0; t < plan_.sampler.tries; ++t) {
                        PendingTrial trial;
                        trial.task = task;
                        trial.format = format;
                        trial.placement = placement;
                        trial.passage = p;
                        trial.perturbed = perturbed;
                        trial.quote = quote;
                        trial.transcript_text = rendered(format);
                        trial.grounding = &inputs_.transcript;
                        appended += execute(trial, spec, *verifier);
                    }
                }
            }
        }
        return appended;
    }

    std::size_t run_snippet_control() {
        const auto snippet_passages = sample_passages(
            inputs_.transcript, with_per_third(plan_.sampler, kSnippetPerThird));
        const int n = static_cast<int>(inputs_.transcript.size());
        std::size_t appended = 0;
        for (const auto& spec : plan_.verifiers) {
            auto verifier = factory_(spec, inputs_.transcript);
            for (int length : plan_.sampler.lengths) {
                for (const auto& p : snippet_passages) {
                    if (p.length != length) continue;
                    // Exact targets in a window cropped around the passage
                    // center, isolating the context-length effect.
                    const int center = (p.start_index + p.end_index) / 2;
                    const int radius = dynamic_radius(p.length, plan_.matcher);
                    Transcript slice;
                    const int lo = std::max(0, center - radius);
                    const int hi = std::min(n - 1, center + radius);
                    slice.spans.assign(
                        inputs_.transcript.spans.begin() + lo,
                        inputs_.transcript.spans.begin() + hi + 1);
                    for (int t = 0; t < plan_.sampler.tries; ++t) {
                        PendingTrial trial;
                        trial.task = TaskKind::SnippetControl;
                        trial.format = FormatKind::TextFirst;
                        trial.placement = Placement::QueryBefore;
                        trial.passage = p;
                        trial.quote = passage_text(inputs_.transcript, p);
                        trial.transcript_text =
                            render(slice, FormatKind::TextFirst);
                        trial.grounding = &inputs_.transcript;
                        appended += execute(trial, spec, *verifier);
                    }
                }
            }
        }
        return appended;
    }

    std::size_t run_assisted() {
        std::size_t appended = 0;
        for (const auto& spec : plan_.verifiers) {
            auto verifier = factory_(spec, inputs_.transcript);
            for (int length : plan_.sampler.lengths) {
                for (const auto& p : passages_for_length(length)) {
                    const std::string quote = perturbed_text(p);
                    for (int t = 0; t < plan_.sampler.tries; ++t) {
                        PendingTrial trial;
                        trial.task = TaskKind::FuzzyAssisted;
                        trial.format = FormatKind::TextFirst;
                        trial.placement = Placement::QueryBefore;
                        trial.passage = p;
                        trial.perturbed = true;
                        trial.quote = quote;
                        trial.grounding = &inputs_.transcript;
                        appended += execute_assisted(trial, spec, *verifier);
                    }
                }
            }
        }
        return appended;
    }

    std::size_t run_absent() {
        if (!inputs_.absent_source) {
            throw ConfigError("absent_target task needs an absent_source");
        }
        const auto foreign = sample_passages(
            *inputs_.absent_source, with_per_third(plan_.sampler, kAbsentPerThird));
        std::size_t appended = 0;
        for (const auto& spec : plan_.verifiers) {
            auto verifier = factory_(spec, inputs_.transcript);
            for (int length : plan_.sampler.lengths) {
                for (const auto& p : foreign) {
                    if (p.length != length) continue;
                    const std::string quote =
                        passage_text(*inputs_.absent_source, p);
                    for (int t = 0; t < plan_.sampler.tries; ++t) {
                        PendingTrial trial;
                        trial.task = TaskKind::AbsentTarget;
                        trial.format = FormatKind::TextFirst;
                        trial.placement = Placement::QueryBefore;
                        trial.passage = p;
                        trial.target_present = false;
                        trial.quote = quote;
                        trial.transcript_text = rendered(FormatKind::TextFirst);
                        trial.grounding = &inputs_.transcript;
                        appended += execute(trial, spec, *verifier);
                    }
                }
            }
        }
        return appended;
    }

    std::size_t run_length_sweep() {
        std::vector<Transcript> sources = {inputs_.transcript};
        if (inputs_.absent_source) sources.push_back(*inputs_.absent_source);
        const BucketResult buckets =
            build_buckets(sources, plan_.bucket_targets);
        std::size_t appended = 0;
        for (const auto& spec : plan_.verifiers) {
            for (std::size_t b = 0; b < buckets.buckets.size(); ++b) {
                const Transcript& bucket = buckets.bucket_transcripts[b];
                auto verifier = factory_(spec, bucket);
                const auto bucket_passages = sample_passages(
                    bucket, with_per_third(plan_.sampler, kAbsentPerThird));
                const std::string text = render(bucket, FormatKind::TextFirst);
                for (int length : plan_.sampler.lengths) {
                    for (const auto& p : bucket_passages) {
                        if (p.length != length) continue;
                        for (int t = 0; t < plan_.sampler.tries; ++t) {
                            PendingTrial trial;
                            trial.task = TaskKind::LengthSweep;
                            trial.format = FormatKind::TextFirst;
                            trial.placement = Placement::QueryBefore;
                            trial.passage = p;
                            trial.quote = passage_text(bucket, p);
                            trial.transcript_text = text;
                            trial.grounding = &bucket;
                            appended += execute(trial, spec, *verifier);
                        }
                    }
                }
            }
        }
        return appended;
    }

    bool should_skip() {
        if (position_ < sink_.count()) {
            ++position_;
            return true;
        }
        ++position_;
        return false;
    }

    TrialRecord base_record(const PendingTrial& trial,
                            const VerifierSpec& spec) const {
        TrialRecord r;
        r.run_id = plan_.run_id;
        r.task_id = task_name(trial.task);
        r.model_id = spec.model_id;
        r.format = std::string(format_name(trial.format));
        r.placement = std::string(placement_name(trial.placement));
        r.passage = trial.passage;
        r.perturbed = trial.perturbed;
        r.target_present = trial.target_present;
        return r;
    }

    void finish(TrialRecord& record, const PendingTrial& trial,
                const VerifierSpec& spec,
                const std::optional<PredictionResponse>& resp) {
        if (resp) {
            record.prediction = resp->range;
            record.input_tokens = resp->input_tokens;
            record.output_tokens = resp->output_tokens;
            record.reasoning_tokens = resp->reasoning_tokens;
            record.cached_input_tokens = resp->cached_input_tokens;
            record.latency_ms = resp->latency_ms;
            if (cost_table_ && !spec.pricing_ref.empty()) {
                record.cost_usd =
                    trial_cost(*resp, *cost_table_, spec.pricing_ref);
            }
        }
        record.outcome =
            classify_outcome(record.prediction, trial.passage,
                             *trial.grounding, trial.target_present);
        record.seq = static_cast<std::int64_t>(sink_.count());
        record.timestamp_ms = now();
        sink_.append(record);
    }

    std::size_t execute(const PendingTrial& trial, const VerifierSpec& spec,
                        Verifier& verifier) {
        if (should_skip()) return 0;
        TrialRecord record = base_record(trial, spec);
        std::optional<PredictionResponse> resp;
        try {
            PredictionRequest req;
            req.prompt = build_prompt(kFullInstructions, trial.quote,
                                      trial.transcript_text, trial.placement);
            req.target = trial.quote;
            resp = verifier.predict(req);
        } catch (const Error& e) {
            record.error = e.what();
        }
        finish(record, trial, spec, resp);
        return 1;
    }

    std::size_t execute_assisted(const PendingTrial& trial,
                                 const VerifierSpec& spec,
                                 Verifier& verifier) {
        if (should_skip()) return 0;
        TrialRecord record = base_record(trial, spec);
        std::optional<PredictionResponse> resp;
        try {
            HybridResult result =
                hybrid_match(trial.quote, *trial.grounding, verifier,
                             plan_.matcher, plan_.clean);
            record.trace_json = result.trace.to_json();
            if (result.status == MatchStatus::Matched) {
                resp = result.response;
            }
            // NoCandidates leaves the null prediction in place.
        } catch (const Error& e) {
            record.error = e.what();
        }
        finish(record, trial, spec, resp);
        return 1;
    }

    std::int64_t now() {
        if (clock_) return clock_();
        if (plan_.all_mock()) {
            // Logical clock keeps mock runs byte-for-byte reproducible.
            return static_cast<std::int64_t>(sink_.count());
        }
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    }

    RunPlan plan_;
    const RunInputs& inputs_;
    RecordSink& sink_;
    VerifierFactory factory_;
    std::function<std::int64_t()> clock_;
    std::optional<CostTable> cost_table_;
    std::vector<PassageSpec> passages_;
    std::map<FormatKind, std::string> render_cache_;
    std::size_t position_ = 0;
};

}  // namespace

std::size_t run_phase_first(const RunPlan& plan, const RunInputs& inputs,
                            RecordSink& sink, const VerifierFactory& factory,
                            std::function<std::int64_t()> clock) {
    Runner runner(plan, inputs, sink, factory, std::move(clock));
    return runner.run();
}

BucketResult build_buckets(const std::vector<Transcript>& transcripts,
                           const std::vector<std::int64_t>& targets,
                           const Tokenizer& tokenizer) {
    if (transcripts.empty()) {
        throw ArgumentError("build_buckets: no transcripts");
    }

    BucketResult result;
    result.composite.source_id = "composite";
    std::int64_t shift = 0;
    for (const auto& t : transcripts) {
        std::int64_t last_end = shift;
        for (const auto& span : t.spans) {
            SentenceSpan shifted = span;
            shifted.start_ms += shift;
            shifted.end_ms += shift;
            last_end = std::max(last_end, shifted.end_ms);
            result.composite.spans.push_back(std::move(shifted));
        }
        shift = last_end;
    }

    // Cumulative token counts of the Text-First rendering, per sentence.
    std::vector<std::int64_t> cumulative(result.composite.size() + 1, 0);
    for (std::size_t i = 0; i < result.composite.size(); ++i) {
        Transcript one;
        one.spans.push_back(result.composite.spans[i]);
        cumulative[i + 1] =
            cumulative[i] +
            static_cast<std::int64_t>(
                tokenizer(render(one, FormatKind::TextFirst)));
    }
    const std::int64_t total = cumulative.back();

    for (std::int64_t target : targets) {
        if (target < cumulative[1]) {
            throw ArgumentError(
                "build_buckets: target " + std::to_string(target) +
                " is smaller than the first sentence");
        }
        if (target > total) {
            throw ArgumentError("build_buckets: target " +
                                std::to_string(target) +
                                " exceeds the available material");
        }
        const auto it =
            std::upper_bound(cumulative.begin(), cumulative.end(), target);
        const int sentences =
            static_cast<int>(std::distance(cumulative.begin(), it)) - 1;
        BucketSpec spec;
        spec.target_tokens = target;
        spec.achieved_tokens = cumulative[sentences];
        spec.sentence_count = sentences;
        result.buckets.push_back(spec);

        Transcript bucket;
        bucket.source_id =
            "bucket_" + std::to_string(target);
        bucket.spans.assign(result.composite.spans.begin(),
                            result.composite.spans.begin() + sentences);
        result.bucket_transcripts.push_back(std::move(bucket));
    }
    return result;
}

}  // namespace quotestamp
