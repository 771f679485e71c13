#include <doctest.h>

#include <random>

#include "quotestamp/errors.hpp"
#include "quotestamp/outcome.hpp"
#include "quotestamp/stats.hpp"
#include "quotestamp/verifier.hpp"
#include "test_util.hpp"

using namespace quotestamp;

namespace {

// Millisecond skeleton of a stretch of floor debate with a one-sentence gap
// between spans 0 and 1; truth covers spans 0..5.
Transcript offset_fixture() {
    Transcript t;
    t.spans = {
        {7544330, 7558090, "The first sentence of the quoted passage."},
        {7558890, 7577080, "A second sentence continues the argument."},
        {7578120, 7600700, "A third sentence lays out the evidence in full."},
        {7601500, 7606460, "A fourth sentence presses the point."},
        {7606780, 7610860, "A fifth sentence narrows the claim."},
        {7610860, 7616940, "A sixth sentence closes the passage."},
        {7617100, 7618140, "And I yield back."},
    };
    return t;
}

PassageSpec truth_0_to_5(const Transcript& t) {
    PassageSpec p;
    p.start_index = 0;
    p.end_index = 5;
    p.length = 6;
    p.third = Third::First;
    p.truth = {t.spans[0].start_ms, t.spans[5].end_ms};
    return p;
}

}  // namespace

TEST_CASE("a start one sentence late classifies as off-by-one") {
    const Transcript t = offset_fixture();
    const PassageSpec truth = truth_0_to_5(t);
    const Outcome o =
        classify_outcome({7558890, 7616940}, truth, t, true);
    CHECK(o.kind == OutcomeKind::OffByOne);
    CHECK(o.start_delta == +1);  // start too late
    CHECK(o.end_delta == 0);
}

TEST_CASE("exact predictions classify as exact") {
    const Transcript t = offset_fixture();
    const PassageSpec truth = truth_0_to_5(t);
    const Outcome o =
        classify_outcome({7544330, 7616940}, truth, t, true);
    CHECK(o.kind == OutcomeKind::Exact);
}

TEST_CASE("two-sentence shifts classify as major") {
    const Transcript t = offset_fixture();
    PassageSpec truth;
    truth.start_index = 1;
    truth.end_index = 3;
    truth.length = 3;
    truth.truth = {t.spans[1].start_ms, t.spans[3].end_ms};
    const Outcome o = classify_outcome(
        {t.spans[3].start_ms, t.spans[5].end_ms}, truth, t, true);
    CHECK(o.kind == OutcomeKind::MajorShift);
}

TEST_CASE("all four off-by-one directions") {
    const Transcript t = offset_fixture();
    PassageSpec truth;
    truth.start_index = 2;
    truth.end_index = 4;
    truth.length = 3;
    truth.truth = {t.spans[2].start_ms, t.spans[4].end_ms};

    const auto classify = [&](int si, int ei) {
        return classify_outcome({t.spans[si].start_ms, t.spans[ei].end_ms},
                                truth, t, true);
    };
    CHECK(classify(1, 4) == Outcome{OutcomeKind::OffByOne, -1, 0});
    CHECK(classify(3, 4) == Outcome{OutcomeKind::OffByOne, +1, 0});
    CHECK(classify(2, 3) == Outcome{OutcomeKind::OffByOne, 0, -1});
    CHECK(classify(2, 5) == Outcome{OutcomeKind::OffByOne, 0, +1});
    // both boundaries off by one still counts once, as off-by-one
    CHECK(classify(1, 5) == Outcome{OutcomeKind::OffByOne, -1, +1});
}

TEST_CASE("absent-target protocol") {
    const Transcript t = offset_fixture();
    const PassageSpec truth = truth_0_to_5(t);
    CHECK(classify_outcome({0, 0}, truth, t, false).kind ==
          OutcomeKind::CorrectRejection);
    CHECK(classify_outcome({7544330, 7616940}, truth, t, false).kind ==
          OutcomeKind::FalsePositive);
}

TEST_CASE("a null prediction for a present target is a miss") {
    const Transcript t = offset_fixture();
    const PassageSpec truth = truth_0_to_5(t);
    CHECK(classify_outcome({0, 0}, truth, t, true).kind ==
          OutcomeKind::MajorShift);
}

TEST_CASE("off-boundary predictions are invalid") {
    const Transcript t = offset_fixture();
    const PassageSpec truth = truth_0_to_5(t);
    CHECK(classify_outcome({7544331, 7616940}, truth, t, true).kind ==
          OutcomeKind::InvalidBoundary);
    CHECK(classify_outcome({7544330, 7616941}, truth, t, true).kind ==
          OutcomeKind::InvalidBoundary);
}

TEST_CASE("classification is exhaustive over random predictions") {
    const Transcript t = offset_fixture();
    const PassageSpec truth = truth_0_to_5(t);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> idx(0, 6);
    std::uniform_int_distribution<int> jitter(-2, 2);
    RateSummary tally;
    const int trials = 500;
    for (int i = 0; i < trials; ++i) {
        const std::int64_t s = t.spans[idx(rng)].start_ms + jitter(rng);
        const std::int64_t e = t.spans[idx(rng)].end_ms + jitter(rng);
        tally.add(classify_outcome({s, e}, truth, t, true));
    }
    CHECK(tally.n == trials);
    CHECK(tally.exact + tally.off_by_one + tally.major_shift +
              tally.invalid_boundary + tally.false_positive +
              tally.correct_rejection ==
          trials);
    CHECK(tally.false_positive == 0);      // target was present
    CHECK(tally.correct_rejection == 0);
}

TEST_CASE("scripted directives round-trip through the classifier") {
    const Transcript t = offset_fixture();
    PassageSpec truth;
    truth.start_index = 2;
    truth.end_index = 4;
    truth.length = 3;
    truth.third = Third::Middle;
    truth.truth = {t.spans[2].start_ms, t.spans[4].end_ms};

    struct Case {
        ScriptDirective directive;
        OutcomeKind expected;
    };
    std::vector<Case> cases = {
        {{DirectiveKind::Exact, 0, 0, 0, {{2, 4}}}, OutcomeKind::Exact},
        {{DirectiveKind::OffByOne, +1, 0, 0, {{2, 4}}}, OutcomeKind::OffByOne},
        {{DirectiveKind::OffByOne, 0, -1, 0, {{2, 4}}}, OutcomeKind::OffByOne},
        {{DirectiveKind::OffByOne, -1, +1, 0, {{2, 4}}}, OutcomeKind::OffByOne},
        {{DirectiveKind::MajorShift, 0, 0, 2, {{2, 4}}},
         OutcomeKind::MajorShift},
        {{DirectiveKind::Absent, 0, 0, 0, {{2, 4}}}, OutcomeKind::MajorShift},
        {{DirectiveKind::Invalid, 0, 0, 0, {{2, 4}}},
         OutcomeKind::InvalidBoundary},
    };
    std::vector<ScriptDirective> script;
    for (const auto& c : cases) script.push_back(c.directive);
    auto mock = mock_scripted(script, t);
    PredictionRequest req;
    req.prompt = "snippet prompt";
    req.target = "irrelevant";
    for (const auto& c : cases) {
        const auto resp = mock->predict(req);
        CHECK(classify_outcome(resp.range, truth, t, true).kind == c.expected);
    }
}

TEST_CASE("pooled ci reproduces the published interval shapes") {
    std::vector<double> outcomes(1800, 1.0);
    for (int i = 0; i < 1800 - 1748; ++i) outcomes[i] = 0.0;
    const CIResult ci = pooled_ci(outcomes);
    CHECK(ci.mean == doctest::Approx(1748.0 / 1800.0));
    CHECK(ci.lo == doctest::Approx(0.963).epsilon(0.001));
    CHECK(ci.hi == doctest::Approx(0.979).epsilon(0.001));

    std::vector<double> smaller(360, 1.0);
    for (int i = 0; i < 360 - 342; ++i) smaller[i] = 0.0;
    const CIResult ci2 = pooled_ci(smaller);
    CHECK(ci2.mean == doctest::Approx(0.95));
    CHECK(ci2.lo == doctest::Approx(0.927).epsilon(0.001));
    CHECK(ci2.hi == doctest::Approx(0.973).epsilon(0.001));
}

TEST_CASE("pooled ci matches the closed binary form") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> n_dist(2, 500);
        const int n = n_dist(rng);
        std::uniform_int_distribution<int> k_dist(0, n);
        const int k = k_dist(rng);
        std::vector<double> xs(n, 0.0);
        for (int i = 0; i < k; ++i) xs[i] = 1.0;
        const CIResult ci = pooled_ci(xs);
        const double p = double(k) / n;
        const double closed =
            std::sqrt(p * (1 - p) * n / (n - 1.0)) / std::sqrt(double(n));
        CHECK(ci.standard_error == doctest::Approx(closed).epsilon(1e-9));
    }
}

TEST_CASE("degenerate and invalid ci inputs") {
    const CIResult ci = pooled_ci(std::vector<double>(50, 1.0));
    CHECK(ci.standard_error == doctest::Approx(0.0));
    CHECK(ci.lo == doctest::Approx(1.0));
    CHECK(ci.hi == doctest::Approx(1.0));
    CHECK_THROWS_AS(pooled_ci({1.0}), ArgumentError);
}

TEST_CASE("aggregate reproduces the error-table arithmetic") {
    const auto build = [](int exact, int obo, int major) {
        std::vector<TrialSlice> trials;
        for (int i = 0; i < exact; ++i) {
            trials.push_back({"m", "t", "f", 1, Third::First,
                              {OutcomeKind::Exact}});
        }
        for (int i = 0; i < obo; ++i) {
            trials.push_back({"m", "t", "f", 1, Third::First,
                              {OutcomeKind::OffByOne, 1, 0}});
        }
        for (int i = 0; i < major; ++i) {
            trials.push_back({"m", "t", "f", 1, Third::First,
                              {OutcomeKind::MajorShift}});
        }
        return aggregate(trials);
    };

    const RateSummary a = build(150, 20, 10);
    CHECK(a.n == 180);
    CHECK(a.exact_rate() * 100 == doctest::Approx(83.3).epsilon(0.001));
    CHECK(a.adjusted_rate() * 100 == doctest::Approx(94.4).epsilon(0.001));

    const RateSummary b = build(70, 66, 44);
    CHECK(b.exact_rate() * 100 == doctest::Approx(38.9).epsilon(0.001));
    CHECK(b.adjusted_rate() * 100 == doctest::Approx(75.6).epsilon(0.001));

    const RateSummary all = build(10, 0, 0);
    CHECK(all.exact_rate() == doctest::Approx(1.0));
    CHECK(all.adjusted_rate() == doctest::Approx(1.0));
}

TEST_CASE("aggregate_by slices partition the counts") {
    std::vector<TrialSlice> trials;
    for (int len : {1, 2, 3}) {
        for (int i = 0; i < len * 4; ++i) {
            trials.push_back({"m", "t", "f", len, Third::First,
                              {OutcomeKind::Exact}});
        }
    }
    const auto by_length = aggregate_by(trials, GroupBy::Length);
    std::size_t total = 0;
    for (const auto& [key, summary] : by_length) total += summary.n;
    CHECK(total == trials.size());
    CHECK(by_length.size() == 3);
    CHECK_THROWS_AS(aggregate({}), ArgumentError);
}

TEST_CASE("trial cost arithmetic") {
    CostTable table;
    table.models["flash"] = {0.30, 2.50, 0.075, true};

    PredictionResponse resp;
    CHECK(trial_cost(resp, table, "flash") == doctest::Approx(0.0));

    resp.input_tokens = 1000000;
    CHECK(trial_cost(resp, table, "flash") == doctest::Approx(0.30));

    // a reasoning step priced as output
    resp = {};
    resp.reasoning_tokens = 800;
    CHECK(trial_cost(resp, table, "flash") == doctest::Approx(0.002));

    // already folded into output tokens: not double-counted
    resp.reasoning_in_output = true;
    resp.output_tokens = 800;
    CHECK(trial_cost(resp, table, "flash") == doctest::Approx(0.002));

    resp = {};
    resp.cached_input_tokens = 2000000;
    CHECK(trial_cost(resp, table, "flash") == doctest::Approx(0.15));

    CHECK_THROWS_AS(trial_cost(resp, table, "unknown"), ConfigError);
}

TEST_CASE("cost table pricing can exclude reasoning from output billing") {
    CostTable table;
    table.models["quirky"] = {1.0, 1.0, 0.0, false};
    PredictionResponse resp;
    resp.reasoning_tokens = 5000;
    CHECK(trial_cost(resp, table, "quirky") == doctest::Approx(0.0));
}

TEST_CASE("cost per correct is absent at zero correct") {
    CHECK(*cost_per_correct(1.00, 10) == doctest::Approx(0.10));
    CHECK(*cost_per_correct(0.65, 1) == doctest::Approx(0.65));
    CHECK_FALSE(cost_per_correct(0.50, 0).has_value());
}

TEST_CASE("cost table parses from json") {
    const CostTable table = parse_cost_table(R"({
        "flash": {"input_per_million": 0.30, "output_per_million": 2.50,
                  "cached_input_per_million": 0.075,
                  "reasoning_billed_as_output": true},
        "nano": {"input_per_million": 0.05, "output_per_million": 0.40}
    })");
    CHECK(table.models.size() == 2);
    CHECK(table.models.at("flash").output_per_million ==
          doctest::Approx(2.50));
    CHECK(table.models.at("nano").reasoning_billed_as_output);
    CHECK_THROWS_AS(parse_cost_table("[]"), ConfigError);
    CHECK_THROWS_AS(parse_cost_table(R"({"m": {"input_per_million": -1}})"),
                    ConfigError);
}
