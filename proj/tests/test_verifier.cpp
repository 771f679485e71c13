#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "quotestamp/errors.hpp"
#include "quotestamp/formats.hpp"
#include "quotestamp/verifier.hpp"
#include "test_util.hpp"

using namespace quotestamp;

namespace {

Transcript fixture() {
    Transcript t;
    t.spans = {
        {1000, 2000, "The committee met at ten in the morning."},
        {2000, 3500, "Quorum being present, the markup began on time."},
        {3600, 5000, "An amendment in the nature of a substitute was offered."},
        {5100, 6400, "Debate proceeded under the five minute rule."},
        {6500, 8000, "The measure was reported favorably to the full House."},
    };
    return t;
}

std::string tft_prompt(const Transcript& t, const std::string& target) {
    return build_prompt("Find the target.", target,
                        render(t, FormatKind::TextFirst),
                        Placement::QueryBefore);
}

}  // namespace

TEST_CASE("exact oracle returns the covering span for a verbatim target") {
    const Transcript t = fixture();
    auto oracle = mock_exact_oracle(t);
    PredictionRequest req;
    req.target = t.spans[1].text;
    req.prompt = tft_prompt(t, req.target);
    const auto resp = oracle->predict(req);
    CHECK(resp.range.start_ms == 2000);
    CHECK(resp.range.end_ms == 3500);
    CHECK(resp.latency_ms == 0);
    CHECK(resp.token_source == "heuristic");
    CHECK(resp.input_tokens ==
          static_cast<std::int64_t>(heuristic_token_count(req.prompt)));
}

TEST_CASE("exact oracle spans multiple sentences") {
    const Transcript t = fixture();
    auto oracle = mock_exact_oracle(t);
    PredictionRequest req;
    req.target = t.spans[1].text + " " + t.spans[2].text + " " +
                 t.spans[3].text;
    req.prompt = tft_prompt(t, req.target);
    const auto resp = oracle->predict(req);
    CHECK(resp.range.start_ms == 2000);
    CHECK(resp.range.end_ms == 6400);
}

TEST_CASE("exact oracle normalizes whitespace before scanning") {
    const Transcript t = fixture();
    auto oracle = mock_exact_oracle(t);
    PredictionRequest req;
    req.target = "  Debate  proceeded under the\tfive minute rule. ";
    req.prompt = tft_prompt(t, "Debate proceeded under the five minute rule.");
    const auto resp = oracle->predict(req);
    CHECK(resp.range.start_ms == 5100);
    CHECK(resp.range.end_ms == 6400);
}

TEST_CASE("exact oracle rejects targets from another transcript") {
    const Transcript t = fixture();
    auto oracle = mock_exact_oracle(t);
    PredictionRequest req;
    req.target = "The harbor dredging schedule slipped by a full season.";
    req.prompt = tft_prompt(t, req.target);
    const auto resp = oracle->predict(req);
    CHECK(resp.range.is_null());
}

TEST_CASE("exact oracle only matches content present in the prompt") {
    const Transcript t = fixture();
    auto oracle = mock_exact_oracle(t);
    // prompt carries only spans 0..1; the target lives in span 4
    Transcript partial;
    partial.spans = {t.spans[0], t.spans[1]};
    PredictionRequest req;
    req.target = t.spans[4].text;
    req.prompt = tft_prompt(partial, req.target);
    const auto resp = oracle->predict(req);
    CHECK(resp.range.is_null());
}

TEST_CASE("exact oracle resolves lightly drifted targets to the same span") {
    const Transcript t = fixture();
    auto oracle = mock_exact_oracle(t);
    PredictionRequest req;
    req.target = "An amendment, in the nature of a substitute, was offered";
    req.prompt = tft_prompt(t, req.target);
    const auto resp = oracle->predict(req);
    CHECK(resp.range.start_ms == 3600);
    CHECK(resp.range.end_ms == 5000);
}

TEST_CASE("mock determinism") {
    const Transcript t = fixture();
    auto oracle = mock_exact_oracle(t);
    PredictionRequest req;
    req.target = t.spans[0].text;
    req.prompt = tft_prompt(t, req.target);
    const auto a = oracle->predict(req);
    const auto b = oracle->predict(req);
    CHECK(a.range == b.range);
    CHECK(a.raw == b.raw);
    CHECK(a.input_tokens == b.input_tokens);
}

TEST_CASE("scripted mock walks its directives in order") {
    const Transcript t = fixture();
    std::vector<ScriptDirective> script;
    script.push_back({DirectiveKind::Exact});
    script.push_back({DirectiveKind::OffByOne, 0, +1});
    script.push_back({DirectiveKind::MajorShift, 0, 0, 2});
    script.push_back({DirectiveKind::Absent});
    script.push_back({DirectiveKind::Invalid});
    auto mock = mock_scripted(script, t);

    PredictionRequest req;
    req.target = t.spans[1].text;
    req.prompt = tft_prompt(t, req.target);

    const auto exact = mock->predict(req);
    CHECK(exact.range == TimeRange{2000, 3500});

    const auto late_end = mock->predict(req);
    CHECK(late_end.range == TimeRange{2000, 5000});  // end of span 2

    const auto major = mock->predict(req);
    CHECK(major.range == TimeRange{5100, 6400});  // both shifted by two

    CHECK(mock->predict(req).range.is_null());

    const auto invalid = mock->predict(req);
    bool on_boundary = false;
    for (const auto& s : t.spans) {
        if (s.start_ms == invalid.range.start_ms) on_boundary = true;
    }
    CHECK_FALSE(on_boundary);

    CHECK_THROWS_AS(mock->predict(req), ContractError);  // script exhausted
}

TEST_CASE("scripted mock honors explicit anchors") {
    const Transcript t = fixture();
    std::vector<ScriptDirective> script;
    ScriptDirective d;
    d.kind = DirectiveKind::Exact;
    d.anchor = {{2, 3}};
    script.push_back(d);
    auto mock = mock_scripted(script, t);
    PredictionRequest req;
    req.target = "text that appears nowhere in the transcript";
    req.prompt = tft_prompt(t, req.target);
    const auto resp = mock->predict(req);
    CHECK(resp.range == TimeRange{3600, 6400});
}

TEST_CASE("verifier spec validation") {
    VerifierSpec spec;
    CHECK_THROWS_AS(spec.validate(), ConfigError);  // nothing set
    spec.model_id = "m";
    spec.endpoint = "mock:exact";
    CHECK_NOTHROW(spec.validate());
    spec.reasoning_mode = ReasoningBudgeted{0};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("reasoning mode names round-trip") {
    for (const char* name : {"disabled", "dynamic", "budget:1000",
                             "effort_low", "effort_medium", "effort_high"}) {
        CHECK(reasoning_mode_name(reasoning_mode_from_name(name)) == name);
    }
    CHECK_THROWS_AS(reasoning_mode_from_name("auto"), ConfigError);
}

TEST_CASE("make_verifier resolves endpoints") {
    const Transcript t = fixture();
    VerifierSpec spec;
    spec.model_id = "m";
    spec.endpoint = "mock:exact";
    CHECK(make_verifier(spec, &t) != nullptr);
    CHECK_THROWS_AS(make_verifier(spec, nullptr), ConfigError);
    spec.endpoint = "ftp://nope";
    CHECK_THROWS_AS(make_verifier(spec, &t), ConfigError);
}

TEST_CASE("http verifier against a local server") {
    httplib::Server server;
    std::atomic<int> hits{0};

    server.Post("/predict", [&](const httplib::Request& req,
                                httplib::Response& res) {
        ++hits;
        // schema keys come through on the request
        REQUIRE(req.body.find("start_ms") != std::string::npos);
        res.set_content(
            R"({"output": {"start_ms": 2000, "end_ms": 3500},)"
            R"( "usage": {"input_tokens": 42, "output_tokens": 7,)"
            R"( "reasoning_tokens": 3, "cached_input_tokens": 11}})",
            "application/json");
    });
    server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
        if (++hits < 3) {
            res.status = 500;
            return;
        }
        res.set_content(R"({"start_ms": 1, "end_ms": 2})", "application/json");
    });
    server.Post("/text", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(
            R"({"text": "sure, here you go {\"start_ms\": 5, \"end_ms\": 9} done"})",
            "application/json");
    });
    server.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("not json at all", "application/json");
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const std::string base = "http://127.0.0.1:" + std::to_string(port);
    PredictionRequest req;
    req.prompt = "prompt body";
    req.target = "target";

    SUBCASE("structured output with provider usage") {
        VerifierSpec spec;
        spec.model_id = "remote";
        spec.endpoint = base + "/predict";
        const auto resp = predict(spec, req);
        CHECK(resp.range == TimeRange{2000, 3500});
        CHECK(resp.token_source == "provider");
        CHECK(resp.input_tokens == 42);
        CHECK(resp.cached_input_tokens == 11);
    }

    SUBCASE("retries recover from transient failures") {
        hits = 0;
        VerifierSpec spec;
        spec.model_id = "remote";
        spec.endpoint = base + "/flaky";
        spec.max_retries = 3;
        const auto resp = predict(spec, req);
        CHECK(resp.range == TimeRange{1, 2});
        CHECK(hits == 3);
    }

    SUBCASE("free-text payloads fall back to balanced extraction") {
        VerifierSpec spec;
        spec.model_id = "remote";
        spec.endpoint = base + "/text";
        const auto resp = predict(spec, req);
        CHECK(resp.range == TimeRange{5, 9});
        CHECK(resp.token_source == "heuristic");
    }

    SUBCASE("undecodable payloads raise DecodeError with the raw body") {
        VerifierSpec spec;
        spec.model_id = "remote";
        spec.endpoint = base + "/garbage";
        spec.max_retries = 0;
        try {
            predict(spec, req);
            FAIL("expected DecodeError");
        } catch (const DecodeError& e) {
            CHECK(e.raw == "not json at all");
        }
    }

    SUBCASE("transport failures surface after retries") {
        VerifierSpec spec;
        spec.model_id = "remote";
        spec.endpoint = "http://127.0.0.1:1/unreachable";
        spec.max_retries = 1;
        CHECK_THROWS_AS(predict(spec, req), TransportError);
    }

    SUBCASE("slow responses become timeout errors") {
        server.Post("/slow", [](const httplib::Request&,
                                httplib::Response& res) {
            std::this_thread::sleep_for(std::chrono::milliseconds(700));
            res.set_content(R"({"start_ms": 1, "end_ms": 2})",
                            "application/json");
        });
        VerifierSpec spec;
        spec.model_id = "remote";
        spec.endpoint = base + "/slow";
        spec.max_retries = 0;
        spec.timeout_ms = 150;
        CHECK_THROWS_AS(predict(spec, req), TimeoutError);
    }

    server.stop();
    thread.join();
}

TEST_CASE("credentials come from the named environment variable") {
    httplib::Server server;
    std::string seen_auth;
    server.Post("/predict", [&](const httplib::Request& req,
                                httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        res.set_content(R"({"start_ms": 1, "end_ms": 2})", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    VerifierSpec spec;
    spec.model_id = "remote";
    spec.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/predict";
    spec.auth_env = "QTS_TEST_TOKEN";

    PredictionRequest req;
    req.prompt = "p";

    unsetenv("QTS_TEST_TOKEN");
    CHECK_THROWS_AS(predict(spec, req), ConfigError);

    setenv("QTS_TEST_TOKEN", "sekrit", 1);
    const auto resp = predict(spec, req);
    CHECK(resp.range == TimeRange{1, 2});
    CHECK(seen_auth == "Bearer sekrit");
    unsetenv("QTS_TEST_TOKEN");

    server.stop();
    thread.join();
}
