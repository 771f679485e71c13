#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quotestamp/outcome.hpp"
#include "quotestamp/sampler.hpp"
#include "quotestamp/verifier.hpp"

namespace quotestamp {

// Pooled 95% confidence interval over per-passage outcomes.
struct CIResult {
    double mean = 0.0;
    double standard_error = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 0;
};

// mean +/- 1.96 * (sample standard deviation / sqrt(n)), bounds clamped to
// [0, 1]. Requires n >= 2.
CIResult pooled_ci(const std::vector<double>& per_passage_outcomes);

// Outcome tallies for one slice of trials. The rate helpers express the
// convention that invalid boundaries count toward the major bucket while the
// finer label stays on the records.
struct RateSummary {
    std::size_t n = 0;
    std::size_t exact = 0;
    std::size_t off_by_one = 0;
    std::size_t major_shift = 0;
    std::size_t invalid_boundary = 0;
    std::size_t false_positive = 0;
    std::size_t correct_rejection = 0;

    void add(const Outcome& outcome);
    double exact_rate() const;
    double off_by_one_rate() const;
    double adjusted_rate() const;   // exact + off-by-one
    double major_rate() const;      // major shifts + invalid boundaries
    double false_positive_rate() const;
};

// The aggregation key of one trial; bench records reduce to this view.
struct TrialSlice {
    std::string model_id;
    std::string task_id;
    std::string format;
    int length = 0;
    Third third = Third::First;
    Outcome outcome;
};

enum class GroupBy { Overall, Model, Task, Format, Length, Third };

RateSummary aggregate(const std::vector<TrialSlice>& trials);
std::map<std::string, RateSummary> aggregate_by(
    const std::vector<TrialSlice>& trials, GroupBy group);

// Prices in USD per million tokens.
struct ModelPricing {
    double input_per_million = 0.0;
    double output_per_million = 0.0;
    double cached_input_per_million = 0.0;
    bool reasoning_billed_as_output = true;
};

struct CostTable {
    std::map<std::string, ModelPricing> models;
};

// JSON object keyed by model_id; see data/cost_table.json for the shape.
CostTable parse_cost_table(const std::string& json_text);
CostTable load_cost_table(const std::string& path);

// input * price_in + cached * price_cached + output * price_out, with
// separately-reported reasoning tokens folded in at the output price when
// the model's pricing says so. Unknown models raise ConfigError.
double trial_cost(const PredictionResponse& resp, const CostTable& table,
                  const std::string& model_id);

// Absent (not infinite) when nothing was correct.
std::optional<double> cost_per_correct(double total_cost,
                                       std::size_t correct_count);

}  // namespace quotestamp
