#include "quotestamp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "quotestamp/errors.hpp"

namespace quotestamp {

CIResult pooled_ci(const std::vector<double>& per_passage_outcomes) {
    const std::size_t n = per_passage_outcomes.size();
    if (n < 2) {
        throw ArgumentError("pooled_ci: need at least two passages");
    }
    double sum = 0.0;
    for (double x : per_passage_outcomes) sum += x;
    const double mean = sum / static_cast<double>(n);

    double ss = 0.0;
    for (double x : per_passage_outcomes) {
        const double d = x - mean;
        ss += d * d;
    }
    const double stdev = std::sqrt(ss / static_cast<double>(n - 1));

    CIResult ci;
    ci.n = n;
    ci.mean = mean;
    ci.standard_error = stdev / std::sqrt(static_cast<double>(n));
    ci.lo = std::clamp(mean - 1.96 * ci.standard_error, 0.0, 1.0);
    ci.hi = std::clamp(mean + 1.96 * ci.standard_error, 0.0, 1.0);
    return ci;
}

void RateSummary::add(const Outcome& outcome) {
    ++n;
    switch (outcome.kind) {
        case OutcomeKind::Exact: ++exact; break;
        case OutcomeKind::OffByOne: ++off_by_one; break;
        case OutcomeKind::MajorShift: ++major_shift; break;
        case OutcomeKind::InvalidBoundary: ++invalid_boundary; break;
        case OutcomeKind::FalsePositive: ++false_positive; break;
        case OutcomeKind::CorrectRejection: ++correct_rejection; break;
    }
}

namespace {
double rate(std::size_t count, std::size_t n) {
    return n == 0 ? 0.0
                  : static_cast<double>(count) / static_cast<double>(n);
}
}  // namespace

double RateSummary::exact_rate() const { return rate(exact, n); }
double RateSummary::off_by_one_rate() const { return rate(off_by_one, n); }
double RateSummary::adjusted_rate() const {
    return rate(exact + off_by_one, n);
}
double RateSummary::major_rate() const {
    return rate(major_shift + invalid_boundary, n);
}
double RateSummary::false_positive_rate() const {
    return rate(false_positive, n);
}

RateSummary aggregate(const std::vector<TrialSlice>& trials) {
    if (trials.empty()) {
        throw ArgumentError("aggregate: no trials");
    }
    RateSummary summary;
    for (const auto& t : trials) summary.add(t.outcome);
    return summary;
}

std::map<std::string, RateSummary> aggregate_by(
    const std::vector<TrialSlice>& trials, GroupBy group) {
    if (trials.empty()) {
        throw ArgumentError("aggregate_by: no trials");
    }
    std::map<std::string, RateSummary> out;
    for (const auto& t : trials) {
        std::string key;
        switch (group) {
            case GroupBy::Overall: key = "overall"; break;
            case GroupBy::Model: key = t.model_id; break;
            case GroupBy::Task: key = t.task_id; break;
            case GroupBy::Format: key = t.format; break;
            case GroupBy::Length: {
                std::ostringstream s;
                s.width(3);
                s.fill('0');
                s << t.length;
                key = s.str();
                break;
            }
            case GroupBy::Third: key = third_name(t.third); break;
        }
        out[key].add(t.outcome);
    }
    return out;
}

CostTable parse_cost_table(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("cost table: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("cost table must be a JSON object keyed by model");
    }
    CostTable table;
    for (const auto& [model, entry] : doc.items()) {
        ModelPricing pricing;
        pricing.input_per_million = entry.value("input_per_million", 0.0);
        pricing.output_per_million = entry.value("output_per_million", 0.0);
        pricing.cached_input_per_million =
            entry.value("cached_input_per_million", 0.0);
        pricing.reasoning_billed_as_output =
            entry.value("reasoning_billed_as_output", true);
        if (pricing.input_per_million < 0 || pricing.output_per_million < 0 ||
            pricing.cached_input_per_million < 0) {
            throw ConfigError("cost table: negative price for " + model);
        }
        table.models[model] = pricing;
    }
    return table;
}

CostTable load_cost_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cost table not readable: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_cost_table(buf.str());
}

double trial_cost(const PredictionResponse& resp, const CostTable& table,
                  const std::string& model_id) {
    const auto it = table.models.find(model_id);
    if (it == table.models.end()) {
        throw ConfigError("no pricing for model: " + model_id);
    }
    const ModelPricing& p = it->second;
    double output_tokens = static_cast<double>(resp.output_tokens);
    if (p.reasoning_billed_as_output && !resp.reasoning_in_output) {
        output_tokens += static_cast<double>(resp.reasoning_tokens);
    }
    const double cost =
        static_cast<double>(resp.input_tokens) * p.input_per_million / 1e6 +
        static_cast<double>(resp.cached_input_tokens) *
            p.cached_input_per_million / 1e6 +
        output_tokens * p.output_per_million / 1e6;
    return cost;
}

std::optional<double> cost_per_correct(double total_cost,
                                       std::size_t correct_count) {
    if (correct_count == 0) return std::nullopt;
    return total_cost / static_cast<double>(correct_count);
}

}  // namespace quotestamp
