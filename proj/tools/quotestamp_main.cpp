// Command-line front end: ingest, transform, match, bench, buckets, report.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "quotestamp/bench.hpp"
#include "quotestamp/errors.hpp"
#include "quotestamp/formats.hpp"
#include "quotestamp/matcher.hpp"
#include "quotestamp/report.hpp"
#include "quotestamp/transcript.hpp"
#include "quotestamp/verifier.hpp"

namespace {

using namespace quotestamp;

std::string slurp(const std::string& path) {
    if (path == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        return buf.str();
    }
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write: " + path);
    out << content;
}

Transcript load_transcript(const std::string& path) {
    std::vector<std::string> warnings;
    Transcript t = parse_stt_json(slurp(path), &warnings, path);
    for (const auto& w : warnings) {
        std::cerr << "warning: " << path << ": " << w << "\n";
    }
    return t;
}

int cmd_ingest(const std::string& input, const std::string& output) {
    const Transcript t = load_transcript(input);
    spill(output, render_stt_json(t) + "\n");
    std::cerr << "ingested " << t.size() << " sentences\n";
    return 0;
}

int cmd_transform(const std::string& input, const std::string& format,
                  const std::string& output) {
    const Transcript t = load_transcript(input);
    spill(output, render(t, format_from_name(format)));
    return 0;
}

int cmd_match(const std::string& transcript_path, std::string quote,
              const std::string& quote_file, bool full,
              const std::string& model, const std::string& endpoint) {
    const Transcript t = load_transcript(transcript_path);
    if (!quote_file.empty()) quote = slurp(quote_file);
    if (quote.empty()) throw ConfigError("match: empty quote");

    VerifierSpec spec;
    spec.model_id = model;
    spec.endpoint = endpoint;
    auto verifier = make_verifier(spec, &t);

    TimeRange range;
    if (full) {
        PredictionRequest req;
        req.prompt = build_prompt(
            "Find the start and end timestamps in milliseconds for the "
            "target sentence(s) in the transcript below. Respond in pure "
            "JSON as {\"start_ms\": <int>, \"end_ms\": <int>}; return "
            "{\"start_ms\": 0, \"end_ms\": 0} if the target does not occur.",
            quote, render(t, FormatKind::TextFirst), Placement::QueryBefore);
        req.target = quote;
        range = verifier->predict(req).range;
    } else {
        const HybridResult result = hybrid_match(quote, t, *verifier);
        if (result.status == MatchStatus::NoCandidates) {
            std::cout << "{\"start_ms\": 0, \"end_ms\": 0, "
                         "\"narrowing\": \"no_candidates\"}\n";
            return 2;
        }
        range = result.range;
        std::cerr << "narrowed to " << result.trace.snippets.size()
                  << " snippet(s), " << result.trace.snippet_sentence_count
                  << " sentences\n";
    }
    std::cout << "{\"start_ms\": " << range.start_ms
              << ", \"end_ms\": " << range.end_ms << "}\n";
    return range.is_null() ? 2 : 0;
}

int cmd_bench(const std::string& plan_path) {
    RunPlan plan = load_run_plan(plan_path);
    if (plan.transcript_path.empty()) {
        throw ConfigError("plan: transcript path required");
    }
    RunInputs inputs;
    inputs.transcript = load_transcript(plan.transcript_path);
    if (!plan.absent_source_path.empty()) {
        inputs.absent_source = load_transcript(plan.absent_source_path);
    }
    if (plan.output_path.empty()) {
        throw ConfigError("plan: output path required");
    }

    const BudgetReport budget = call_budget(plan);
    std::cerr << "plan budget: " << budget.per_model_total
              << " calls per model, " << budget.grand_total << " total\n";

    FileRecordSink sink(plan.output_path);
    if (sink.count() > 0) {
        std::cerr << "resuming after " << sink.count() << " records\n";
    }
    const std::size_t appended = run_phase_first(plan, inputs, sink);
    std::cerr << "appended " << appended << " records to "
              << plan.output_path << "\n";
    return 0;
}

int cmd_buckets(const std::vector<std::string>& inputs,
                const std::vector<std::int64_t>& targets,
                const std::string& out_dir) {
    std::vector<Transcript> transcripts;
    transcripts.reserve(inputs.size());
    for (const auto& path : inputs) transcripts.push_back(load_transcript(path));
    const BucketResult result = build_buckets(transcripts, targets);
    for (std::size_t i = 0; i < result.buckets.size(); ++i) {
        const auto& b = result.buckets[i];
        std::cout << "bucket target=" << b.target_tokens
                  << " achieved=" << b.achieved_tokens
                  << " sentences=" << b.sentence_count << "\n";
        if (!out_dir.empty()) {
            const std::string path = out_dir + "/bucket_" +
                                     std::to_string(b.target_tokens) + ".json";
            spill(path, render_stt_json(result.bucket_transcripts[i]) + "\n");
        }
    }
    return 0;
}

int cmd_report(const std::string& records_path, bool by_length, bool by_third,
               bool by_format, bool by_model, bool by_task, bool cpc,
               bool delimited) {
    const auto records = load_records(records_path);
    std::vector<ReportSlice> slices;
    if (by_length) slices.push_back(ReportSlice::ByLength);
    if (by_third) slices.push_back(ReportSlice::ByThird);
    if (by_format) slices.push_back(ReportSlice::ByFormat);
    if (by_model) slices.push_back(ReportSlice::ByModel);
    if (by_task) slices.push_back(ReportSlice::ByTask);
    if (cpc) slices.push_back(ReportSlice::Cpc);
    if (slices.empty()) slices.push_back(ReportSlice::ByTask);
    for (ReportSlice slice : slices) {
        const ReportTables tables = emit_report(records, slice);
        std::cout << (delimited ? tables.delimited : tables.aligned) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quote-to-timestamp alignment toolkit"};
    app.require_subcommand(1);

    std::string input, output, format_name = "text_first";
    auto* ingest = app.add_subcommand("ingest", "Validate and canonicalize an STT JSON transcript");
    ingest->add_option("input", input, "STT JSON file or - for stdin")->required();
    ingest->add_option("-o,--out", output, "Output path (default stdout)");

    std::string t_input, t_output;
    auto* transform = app.add_subcommand("transform", "Render a transcript into a prompt layout");
    transform->add_option("input", t_input, "STT JSON file")->required();
    transform->add_option("-f,--format", format_name,
                          "stt_json|text_first|text_middle|text_end|"
                          "text_first_no_labels|plain_text");
    transform->add_option("-o,--out", t_output, "Output path (default stdout)");

    std::string m_transcript, m_quote, m_quote_file, m_model = "exact-oracle",
                               m_endpoint = "mock:exact";
    bool m_full = false, m_assisted = false;
    auto* match = app.add_subcommand("match", "Resolve one quote to timestamps");
    match->add_option("--transcript", m_transcript, "STT JSON file")->required();
    match->add_option("--quote", m_quote, "Quote text");
    match->add_option("--quote-file", m_quote_file, "Read the quote from a file");
    match->add_flag("--full", m_full, "Send the full transcript to the verifier");
    match->add_flag("--assisted", m_assisted,
                    "Narrow to snippets first (default)");
    match->add_option("--model", m_model, "Model id for the verifier");
    match->add_option("--endpoint", m_endpoint,
                      "Verifier endpoint (mock:exact or an http(s) URL)");

    std::string plan_path;
    auto* bench = app.add_subcommand("bench", "Run a benchmark plan");
    bench->add_option("plan", plan_path, "Plan JSON file")->required();

    std::vector<std::string> bucket_inputs;
    std::vector<std::int64_t> bucket_targets;
    std::string bucket_out;
    auto* buckets = app.add_subcommand("buckets", "Build long-context buckets");
    buckets->add_option("inputs", bucket_inputs, "STT JSON files, in order")
        ->required();
    buckets->add_option("--targets", bucket_targets, "Token targets")
        ->required();
    buckets->add_option("--out-dir", bucket_out, "Write bucket transcripts here");

    std::string records_path;
    bool by_length = false, by_third = false, by_format = false,
         by_model = false, by_task = false, cpc = false, delimited = false;
    auto* report = app.add_subcommand("report", "Summarize a record file");
    report->add_option("records", records_path, "JSONL record file")->required();
    report->add_flag("--by-length", by_length);
    report->add_flag("--by-third", by_third);
    report->add_flag("--by-format", by_format);
    report->add_flag("--by-model", by_model);
    report->add_flag("--by-task", by_task);
    report->add_flag("--cpc", cpc, "Cost per correct, per model");
    report->add_flag("--tsv", delimited, "Tab-separated output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(input, output);
        if (*transform) return cmd_transform(t_input, format_name, t_output);
        if (*match) {
            return cmd_match(m_transcript, m_quote, m_quote_file, m_full,
                             m_model, m_endpoint);
        }
        if (*bench) return cmd_bench(plan_path);
        if (*buckets) return cmd_buckets(bucket_inputs, bucket_targets, bucket_out);
        if (*report) {
            return cmd_report(records_path, by_length, by_third, by_format,
                              by_model, by_task, cpc, delimited);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
