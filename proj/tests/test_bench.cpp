#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "quotestamp/bench.hpp"
#include "quotestamp/errors.hpp"
#include "quotestamp/report.hpp"
#include "test_util.hpp"

using namespace quotestamp;

namespace {

Transcript load_fixture(const char* name) {
    std::ifstream in(test_util::data_path(name));
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_stt_json(buf.str(), nullptr, name);
}

// A small but sampler-feasible plan keeps runner tests quick.
RunPlan small_plan() {
    RunPlan plan = make_default_plan();
    plan.run_id = "small";
    plan.sampler.lengths = {1, 2};
    plan.sampler.per_third = 2;
    plan.sampler.per_length = 6;
    plan.sampler.seed = 7;
    return plan;
}

}  // namespace

TEST_CASE("default plan budget matches the published task tables") {
    const BudgetReport budget = call_budget(make_default_plan());
    CHECK(budget.control_family == 27);
    CHECK(budget.exact_family == 540);
    CHECK(budget.fuzzy_family == 405);
    CHECK(budget.per_model_total == 972);
    CHECK(budget.grand_total == 972);  // one model in the default plan

    std::map<std::string, std::size_t> per_task;
    for (const auto& line : budget.per_task) {
        per_task[line.task_id] = line.calls_per_model;
    }
    CHECK(per_task.at("controls") == 27);
    CHECK(per_task.at("exact_tft") == 180);
    CHECK(per_task.at("snippet_control") == 45);
    CHECK(per_task.at("fuzzy_assisted") == 180);
}

TEST_CASE("budget scales with models and extra tasks") {
    RunPlan plan = make_default_plan();
    plan.tasks.push_back(TaskKind::AbsentTarget);
    VerifierSpec second;
    second.model_id = "second";
    second.endpoint = "mock:exact";
    plan.verifiers.push_back(second);
    const BudgetReport budget = call_budget(plan);
    CHECK(budget.extra == 90);  // 5 lengths x 6 passages x 3 tries
    CHECK(budget.per_model_total == 972 + 90);
    CHECK(budget.grand_total == 2 * (972 + 90));
}

TEST_CASE("plan json round-trip") {
    const std::string text = R"({
        "run_id": "demo",
        "transcript": "data/house_sample.json",
        "tasks": ["controls", "exact_tft", "fuzzy_assisted"],
        "sampler": {"lengths": [1, 2, 3], "per_third": 2, "seed": 9},
        "matcher": {"k": 4, "ratio_threshold": 65.0},
        "verifiers": [{"model_id": "oracle", "endpoint": "mock:exact"}],
        "perturb_seed": 3,
        "output": "records.jsonl"
    })";
    const RunPlan plan = parse_run_plan(text);
    CHECK(plan.run_id == "demo");
    CHECK(plan.tasks.size() == 3);
    CHECK(plan.sampler.per_length == 6);
    CHECK(plan.matcher.k == 4);
    CHECK(plan.verifiers[0].endpoint == "mock:exact");
    CHECK_THROWS_AS(parse_run_plan("{}"), ConfigError);  // no tasks/verifiers
}

TEST_CASE("record lines round-trip through json") {
    TrialRecord r;
    r.seq = 12;
    r.run_id = "run";
    r.task_id = "exact_tft";
    r.model_id = "oracle";
    r.format = "text_first";
    r.placement = "query_before";
    PassageSpec p;
    p.start_index = 10;
    p.end_index = 12;
    p.length = 3;
    p.third = Third::Middle;
    p.truth = {1000, 2000};
    r.passage = p;
    r.prediction = {1000, 2000};
    r.outcome = {OutcomeKind::Exact};
    r.input_tokens = 55;
    r.cost_usd = 0.001;
    r.timestamp_ms = 42;

    const std::string line = r.to_json_line();
    const TrialRecord back = TrialRecord::from_json_line(line);
    CHECK(back.seq == 12);
    CHECK(back.passage->start_index == 10);
    CHECK(back.passage->third == Third::Middle);
    CHECK(back.prediction == r.prediction);
    CHECK(back.outcome == r.outcome);
    CHECK(back.to_json_line() == line);
}

TEST_CASE("runner executes the exact family against the oracle") {
    RunPlan plan = small_plan();
    plan.tasks = {TaskKind::ExactTft};
    RunInputs inputs;
    inputs.transcript = load_fixture("house_sample.json");

    MemoryRecordSink sink;
    const std::size_t n = run_phase_first(plan, inputs, sink);
    CHECK(n == call_budget(plan).per_model_total);
    CHECK(sink.count() == n);
    for (const auto& r : sink.records()) {
        CHECK(r.outcome.kind == OutcomeKind::Exact);
        CHECK(r.task_id == "exact_tft");
        CHECK(r.error.empty());
    }
}

TEST_CASE("a default-sized exact task yields 180 exact records") {
    RunPlan plan = make_default_plan();
    plan.tasks = {TaskKind::ExactTft};
    plan.sampler.seed = 31;
    RunInputs inputs;
    inputs.transcript = load_fixture("house_sample.json");
    MemoryRecordSink sink;
    run_phase_first(plan, inputs, sink);
    REQUIRE(sink.count() == 180);
    std::size_t exact = 0;
    for (const auto& r : sink.records()) {
        if (r.outcome.kind == OutcomeKind::Exact) ++exact;
    }
    CHECK(exact == 180);
}

TEST_CASE("runner order is lengths, then passages, then tries") {
    RunPlan plan = small_plan();
    plan.tasks = {TaskKind::ExactTft};
    RunInputs inputs;
    inputs.transcript = load_fixture("house_sample.json");
    MemoryRecordSink sink;
    run_phase_first(plan, inputs, sink);

    int last_length = 0;
    std::int64_t seq = 0;
    for (const auto& r : sink.records()) {
        CHECK(r.seq == seq++);
        REQUIRE(r.passage.has_value());
        CHECK(r.passage->length >= last_length);
        last_length = r.passage->length;
    }
}

TEST_CASE("scripted ladder drives the recorded outcome sequence") {
    RunPlan plan = small_plan();
    plan.tasks = {TaskKind::ExactTft};
    plan.sampler.lengths = {1};
    plan.sampler.per_third = 1;
    plan.sampler.per_length = 3;
    plan.sampler.tries = 1;
    RunInputs inputs;
    inputs.transcript = load_fixture("house_sample.json");

    std::vector<ScriptDirective> script = {
        {DirectiveKind::Exact},
        {DirectiveKind::OffByOne, +1, 0},
        {DirectiveKind::MajorShift, 0, 0, 3},
    };
    const VerifierFactory factory = [&](const VerifierSpec&,
                                        const Transcript& t) {
        return mock_scripted(script, t);
    };
    MemoryRecordSink sink;
    run_phase_first(plan, inputs, sink, factory);
    REQUIRE(sink.count() == 3);
    CHECK(sink.records()[0].outcome.kind == OutcomeKind::Exact);
    CHECK(sink.records()[1].outcome.kind == OutcomeKind::OffByOne);
    CHECK(sink.records()[2].outcome.kind == OutcomeKind::MajorShift);
}

TEST_CASE("verifier failures are recorded, not fatal") {
    class FailingVerifier final : public Verifier {
    public:
        PredictionResponse predict(const PredictionRequest&) override {
            throw TransportError("synthetic outage");
        }
    };
    RunPlan plan = small_plan();
    plan.tasks = {TaskKind::ExactTft};
    plan.sampler.lengths = {1};
    plan.sampler.per_third = 1;
    plan.sampler.per_length = 3;
    plan.sampler.tries = 1;
    RunInputs inputs;
    inputs.transcript = load_fixture("house_sample.json");
    const VerifierFactory factory = [](const VerifierSpec&, const Transcript&) {
        return std::make_unique<FailingVerifier>();
    };
    MemoryRecordSink sink;
    run_phase_first(plan, inputs, sink, factory);
    REQUIRE(sink.count() == 3);
    for (const auto& r : sink.records()) {
        CHECK(r.error.find("synthetic outage") != std::string::npos);
        CHECK(r.prediction.is_null());
        CHECK(r.outcome.kind == OutcomeKind::MajorShift);  // scored as a miss
    }
}

TEST_CASE("file sink resumes by record count") {
    const std::string path = "/tmp/qts_resume_test.jsonl";
    std::remove(path.c_str());

    RunPlan plan = small_plan();
    plan.tasks = {TaskKind::Controls, TaskKind::ExactTft};
    RunInputs inputs;
    inputs.transcript = load_fixture("house_sample.json");

    // full run
    {
        FileRecordSink sink(path);
        run_phase_first(plan, inputs, sink);
    }
    const std::string full = [&] {
        std::ifstream in(path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }();
    const auto all = load_records(path);
    REQUIRE(all.size() == call_budget(plan).per_model_total);

    // truncate to 10 records, then resume
    {
        std::ofstream out(path, std::ios::trunc);
        std::istringstream in(full);
        std::string line;
        for (int i = 0; i < 10 && std::getline(in, line); ++i) {
            out << line << '\n';
        }
    }
    {
        FileRecordSink sink(path);
        CHECK(sink.count() == 10);
        const std::size_t appended = run_phase_first(plan, inputs, sink);
        CHECK(appended == all.size() - 10);
    }
    const std::string resumed = [&] {
        std::ifstream in(path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }();
    CHECK(resumed == full);  // byte-identical to the uninterrupted run
    std::remove(path.c_str());
}

TEST_CASE("aggregate over persisted records equals in-memory aggregate") {
    const std::string path = "/tmp/qts_replay_test.jsonl";
    std::remove(path.c_str());
    RunPlan plan = small_plan();
    plan.tasks = {TaskKind::ExactTft, TaskKind::FuzzyUnassisted};
    RunInputs inputs;
    inputs.transcript = load_fixture("house_sample.json");
    MemoryRecordSink memory;
    run_phase_first(plan, inputs, memory);
    {
        FileRecordSink sink(path);
        run_phase_first(plan, inputs, sink);
    }
    const auto reloaded = load_records(path);
    REQUIRE(reloaded.size() == memory.count());
    std::vector<TrialSlice> a, b;
    for (const auto& r : memory.records()) a.push_back(r.slice());
    for (const auto& r : reloaded) b.push_back(r.slice());
    const RateSummary ra = aggregate(a), rb = aggregate(b);
    CHECK(ra.exact == rb.exact);
    CHECK(ra.off_by_one == rb.off_by_one);
    CHECK(ra.n == rb.n);
    std::remove(path.c_str());
}

TEST_CASE("length sweep runs one block per bucket") {
    RunPlan plan = make_default_plan();
    plan.tasks = {TaskKind::LengthSweep};
    plan.sampler.tries = 1;
    plan.sampler.seed = 77;
    plan.bucket_targets = {5200, 10400};
    RunInputs inputs;
    inputs.transcript = load_fixture("house_sample.json");
    inputs.absent_source = load_fixture("senate_sample.json");

    MemoryRecordSink sink;
    const std::size_t n = run_phase_first(plan, inputs, sink);
    // 2 buckets x 5 lengths x 6 passages x 1 try
    CHECK(n == 60);
    CHECK(n == call_budget(plan).per_model_total);
    for (const auto& r : sink.records()) {
        CHECK(r.task_id == "length_sweep");
        CHECK(r.outcome.kind == OutcomeKind::Exact);
    }
}

TEST_CASE("buckets cut the composite at sentence boundaries") {
    const Transcript house = load_fixture("house_sample.json");
    const Transcript senate = load_fixture("senate_sample.json");

    const auto house_tokens = heuristic_token_count(
        render(house, FormatKind::TextFirst));
    std::vector<std::int64_t> targets;
    for (int i = 1; i <= 9; ++i) {
        targets.push_back(static_cast<std::int64_t>(house_tokens) * i / 8);
    }
    const BucketResult result = build_buckets({house, senate}, targets);
    REQUIRE(result.buckets.size() == 9);
    int last_sentences = 0;
    for (std::size_t i = 0; i < result.buckets.size(); ++i) {
        const auto& b = result.buckets[i];
        CHECK(b.achieved_tokens <= b.target_tokens);
        CHECK(b.sentence_count >= last_sentences);
        last_sentences = b.sentence_count;
        CHECK(result.bucket_transcripts[i].size() ==
              static_cast<std::size_t>(b.sentence_count));
    }
    // composite timeline is still a valid transcript ordering
    for (std::size_t i = 1; i < result.composite.size(); ++i) {
        CHECK(result.composite.spans[i].start_ms >=
              result.composite.spans[i - 1].start_ms);
    }
}

TEST_CASE("bucket targets outside the material fail loudly") {
    const Transcript senate = load_fixture("senate_sample.json");
    CHECK_THROWS_AS(build_buckets({senate}, {1}), ArgumentError);
    CHECK_THROWS_AS(build_buckets({senate}, {100000000}), ArgumentError);
}

TEST_CASE("reports are deterministic and formatted to one decimal") {
    RunPlan plan = small_plan();
    plan.tasks = {TaskKind::ExactTft};
    RunInputs inputs;
    inputs.transcript = load_fixture("house_sample.json");
    MemoryRecordSink sink;
    run_phase_first(plan, inputs, sink);

    const auto by_length = emit_report(sink.records(), ReportSlice::ByLength);
    CHECK(by_length.delimited.find("100.0") != std::string::npos);
    CHECK(emit_report(sink.records(), ReportSlice::ByLength).aligned ==
          by_length.aligned);

    const auto cpc = emit_report(sink.records(), ReportSlice::Cpc);
    // zero recorded cost but full accuracy: cpc renders 0.0000, not blank
    CHECK(cpc.delimited.find("oracle") != std::string::npos);

    CHECK_THROWS_AS(emit_report({}, ReportSlice::ByLength), ArgumentError);
}

TEST_CASE("undefined cost-per-correct renders blank") {
    std::vector<TrialRecord> records;
    TrialRecord r;
    r.model_id = "hopeless";
    r.outcome = {OutcomeKind::MajorShift};
    r.cost_usd = 0.5;
    records.push_back(r);
    const auto cpc = emit_report(records, ReportSlice::Cpc);
    std::istringstream in(cpc.delimited);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(row.find("hopeless") != std::string::npos);
    CHECK(row.back() == '\t');  // trailing blank cell
}
