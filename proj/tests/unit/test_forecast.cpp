#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numeric>

#include "fake_bridge.hpp"
#include "scarcity/engine.hpp"
#include "scarcity/error.hpp"
#include "scarcity/forecast.hpp"
#include "scarcity/remote.hpp"

using namespace scarcity;
using namespace scarcity::forecast;
using scarcity::testing::FakeBridge;

namespace {

HistoryWindow history_of(std::initializer_list<int> values, int n = 7, int window = 10)
{
    HistoryWindow h(window, n);
    for (int v : values) {
        h.push(v);
    }
    return h;
}

RngStream stream() { return RngStream(1, {StreamRole::Forecast, 0}); }

} // namespace

TEST_CASE("history window keeps the most recent w demands")
{
    HistoryWindow h(3, 7);
    CHECK(h.empty());
    for (int v : {1, 2, 3, 4, 5}) {
        h.push(v);
    }
    CHECK(h.values() == std::vector<int>{3, 4, 5});
    CHECK_THROWS_AS(h.push(8), InvalidArgument);
    CHECK_THROWS_AS(h.push(-1), InvalidArgument);
    h.push(7);
    h.push(0);
    CHECK(h.values() == std::vector<int>{5, 7, 0});
}

TEST_CASE("uniform forecaster")
{
    auto rng = stream();
    const auto d = forecast::forecast({UniformForecaster{}, false}, history_of({3, 2}), 7, 1.0, rng);
    REQUIRE(d.probs.size() == 8);
    for (double p : d.probs) {
        CHECK(p == 0.125);
    }
    CHECK(p_llm(d, 3) == 0.5);
    CHECK(p_llm(d, 7) == 1.0);
}

TEST_CASE("empirical forecaster smoothing arithmetic")
{
    auto rng = stream();
    const auto d = forecast::forecast({EmpiricalForecaster{1.0}, false}, history_of({3, 3, 3, 3}), 7, 1.0, rng);
    CHECK(d.probs[3] == doctest::Approx(5.0 / 12.0).epsilon(1e-15));
    for (int k : {0, 1, 2, 4, 5, 6, 7}) {
        CHECK(d.probs[static_cast<std::size_t>(k)] == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
    }
    CHECK(d.valid());
}

TEST_CASE("empirical with empty history falls back to uniform")
{
    auto rng = stream();
    HistoryWindow empty(10, 7);
    const auto d = forecast::forecast({EmpiricalForecaster{1.0}, false}, empty, 7, 1.0, rng);
    CHECK(d.probs == DemandDistribution::uniform(7).probs);
}

TEST_CASE("empirical with huge smoothing converges to uniform")
{
    auto rng = stream();
    const auto d = forecast::forecast({EmpiricalForecaster{1e6}, false}, history_of({0, 0, 7, 7, 7, 3, 3, 1, 2, 2}), 7, 1.0, rng);
    for (double p : d.probs) {
        CHECK(std::abs(p - 0.125) < 1e-4);
    }
}

TEST_CASE("fixed forecaster returns the stored vector")
{
    auto rng = stream();
    const std::vector<double> probs{0.1, 0.2, 0.3, 0.4, 0, 0, 0, 0};
    const auto d = forecast::forecast({FixedForecaster{probs}, false}, history_of({1}), 7, 1.0, rng);
    CHECK(d.probs == probs);
    CHECK(p_llm(d, 1) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("forecast argument errors")
{
    auto rng = stream();
    CHECK_THROWS_AS(forecast::forecast({UniformForecaster{}, false}, history_of({1}), 7, 0.0, rng), InvalidArgument);
    const auto d = DemandDistribution::uniform(7);
    CHECK_THROWS_AS(p_llm(d, -1), InvalidArgument);
    CHECK_THROWS_AS(p_llm(d, 8), InvalidArgument);
}

TEST_CASE("p_llm is monotone in capacity and exactly one at C=N")
{
    RngStream gen(77, {StreamRole::Bootstrap, 0});
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = static_cast<int>(gen.uniform_int(1, 15));
        DemandDistribution d;
        d.probs.resize(static_cast<std::size_t>(n) + 1);
        for (auto& p : d.probs) {
            p = gen.uniform();
        }
        const double total = std::accumulate(d.probs.begin(), d.probs.end(), 0.0);
        for (auto& p : d.probs) {
            p /= total;
        }
        double prev = 0.0;
        for (int c = 0; c <= n; ++c) {
            const double v = p_llm(d, c);
            CHECK(v >= prev);
            CHECK(v <= 1.0);
            prev = v;
        }
        CHECK(p_llm(d, n) == 1.0);
    }
}

TEST_CASE("synthetic forecasts are always normalized")
{
    RngStream gen(78, {StreamRole::Bootstrap, 0});
    for (int trial = 0; trial < 500; ++trial) {
        const int n = static_cast<int>(gen.uniform_int(2, 15));
        HistoryWindow h(10, n);
        const auto len = gen.uniform_int(0, 25);
        for (int i = 0; i < len; ++i) {
            h.push(static_cast<int>(gen.uniform_int(0, n)));
        }
        auto rng = stream();
        CHECK(forecast::forecast({EmpiricalForecaster{gen.uniform(0.0, 5.0)}, false}, h, n, 1.0, rng).valid());
        CHECK(forecast::forecast({UniformForecaster{}, false}, h, n, 1.0, rng).valid());
    }
}

TEST_CASE("prompt rendering")
{
    CHECK(render_prompt(history_of({3, 1, 2, 4})) == "3,1,2,4,");
    CHECK(render_prompt(history_of({0})) == "0,");
    CHECK(render_prompt(history_of({10, 2}, 11)) == "10,2,");
    CHECK_THROWS_AS(render_prompt(HistoryWindow(10, 7)), EmptyPrompt);
}

TEST_CASE("endpoint parsing")
{
    const auto e = parse_endpoint("localhost:8765");
    CHECK(e.host == "localhost");
    CHECK(e.port == 8765);
    const auto v6 = parse_endpoint("[::1]:9000");
    CHECK(v6.host == "::1");
    CHECK(v6.port == 9000);
    CHECK_THROWS_AS(parse_endpoint("localhost"), InvalidArgument);
    CHECK_THROWS_AS(parse_endpoint("host:99999"), InvalidArgument);
    CHECK_THROWS_AS(parse_endpoint(":80"), InvalidArgument);
}

TEST_CASE("request encoding and response decoding")
{
    BridgeRequest req{7, {3, 1, 2, 4}, 7, "gpt2", 1.0};
    const auto j = nlohmann::json::parse(encode_request(req));
    CHECK(j.at("id") == 7);
    CHECK(j.at("history") == std::vector<int>{3, 1, 2, 4});
    CHECK(j.at("n_max") == 7);
    CHECK(j.at("model") == "gpt2");
    CHECK(j.at("temperature") == 1.0);
    CHECK(encode_request(req).find('\n') == std::string::npos);

    const auto ok = decode_response(R"({"id": 7, "probs": [0.5, 0.5], "model": "gpt2", "latency_ms": 12.5})");
    CHECK(ok.id == 7);
    CHECK(ok.probs == std::vector<double>{0.5, 0.5});
    CHECK(ok.latency_ms == 12.5);
    CHECK_FALSE(ok.error);

    const auto err = decode_response(R"({"id": 7, "error": "model-not-found"})");
    REQUIRE(err.error);
    CHECK(*err.error == "model-not-found");

    CHECK_THROWS_AS(decode_response("garbage"), ForecastUnavailable);
    CHECK_THROWS_AS(decode_response(R"({"id": 7})"), ForecastUnavailable);
}

TEST_CASE("renormalization of remote outputs")
{
    const auto r = renormalize({1, 1, 2, 0}, 3);
    CHECK(r == std::vector<double>{0.25, 0.25, 0.5, 0.0});
    CHECK_THROWS_AS(renormalize({1, 1}, 3), ForecastUnavailable);
    CHECK_THROWS_AS(renormalize({1, -1, 1, 1}, 3), ForecastUnavailable);
    CHECK_THROWS_AS(renormalize({1, NAN, 1, 1}, 3), ForecastUnavailable);
    CHECK_THROWS_AS(renormalize({0, 0, 0, 0}, 3), ForecastUnavailable);
}

TEST_CASE("remote client round trip skips READY and echoes ids")
{
    std::vector<nlohmann::json> seen;
    FakeBridge server([&](const nlohmann::json& req) {
        seen.push_back(req);
        return FakeBridge::uniform(req);
    });
    RemoteClient client(parse_endpoint(server.endpoint()), 5000);
    for (int i = 0; i < 5; ++i) {
        const auto probs = client.distribution({3, 1, 2, 4}, 7, "gpt2", 1.0);
        REQUIRE(probs.size() == 8);
        CHECK(probs[0] == doctest::Approx(0.125));
    }
    REQUIRE(seen.size() == 5);
    CHECK(seen[0].at("id") == 1);
    CHECK(seen[4].at("id") == 5);
    CHECK(seen[0].at("history") == std::vector<int>{3, 1, 2, 4});
}

TEST_CASE("remote errors surface as ForecastUnavailable")
{
    SUBCASE("server error member")
    {
        FakeBridge server([](const nlohmann::json& req) {
            return std::optional<std::string>(nlohmann::json{{"id", req.at("id")}, {"error", "model-not-found"}}.dump());
        });
        RemoteClient client(parse_endpoint(server.endpoint()), 5000);
        try {
            client.distribution({1}, 7, "nope", 1.0);
            FAIL("expected ForecastUnavailable");
        } catch (const ForecastUnavailable& e) {
            CHECK(e.cause().find("model-not-found") != std::string::npos);
        }
    }
    SUBCASE("id mismatch")
    {
        FakeBridge server([](const nlohmann::json& req) {
            auto j = nlohmann::json::parse(*FakeBridge::uniform(req));
            j["id"] = req.at("id").get<int>() + 100;
            return std::optional<std::string>(j.dump());
        });
        RemoteClient client(parse_endpoint(server.endpoint()), 5000);
        CHECK_THROWS_AS(client.distribution({1}, 7, "gpt2", 1.0), ForecastUnavailable);
    }
    SUBCASE("wrong length")
    {
        FakeBridge server([](const nlohmann::json& req) {
            return std::optional<std::string>(
                nlohmann::json{{"id", req.at("id")}, {"probs", {0.5, 0.5}}, {"model", "gpt2"}, {"latency_ms", 1}}.dump());
        });
        RemoteClient client(parse_endpoint(server.endpoint()), 5000);
        CHECK_THROWS_AS(client.distribution({1}, 7, "gpt2", 1.0), ForecastUnavailable);
    }
    SUBCASE("connection dropped")
    {
        FakeBridge server([](const nlohmann::json&) { return std::optional<std::string>(); });
        RemoteClient client(parse_endpoint(server.endpoint()), 5000);
        CHECK_THROWS_AS(client.distribution({1}, 7, "gpt2", 1.0), ForecastUnavailable);
    }
    SUBCASE("connection refused")
    {
        std::string endpoint;
        {
            FakeBridge closed(FakeBridge::uniform);
            endpoint = closed.endpoint();
        }
        RemoteClient client(parse_endpoint(endpoint), 1000);
        CHECK_THROWS_AS(client.distribution({1}, 7, "gpt2", 1.0), ForecastUnavailable);
    }
}

TEST_CASE("remote binding through Forecaster")
{
    FakeBridge server([](const nlohmann::json& req) {
        // Skewed, unnormalized mass: everything on demand 0 and 1.
        const int n = req.at("n_max").get<int>();
        std::vector<double> probs(static_cast<std::size_t>(n) + 1, 0.0);
        probs[0] = 3.0;
        probs[1] = 1.0;
        return std::optional<std::string>(
            nlohmann::json{{"id", req.at("id")}, {"probs", probs}, {"model", req.at("model")}, {"latency_ms", 0.5}}.dump());
    });
    Forecaster f({RemoteForecaster{server.endpoint(), "gpt2"}, false});
    auto rng = stream();
    const auto d = f(history_of({2, 2, 2}), 7, 1.0, rng);
    CHECK(d.valid());
    CHECK(d.probs[0] == doctest::Approx(0.75));
    CHECK(p_llm(d, 1) == doctest::Approx(1.0));
}

TEST_CASE("remote failure mid-episode keeps the partial log")
{
    std::atomic<int> served{0};
    FakeBridge server([&](const nlohmann::json& req) -> std::optional<std::string> {
        if (served.fetch_add(1) >= 3 * 7) {
            return nlohmann::json{{"id", req.at("id")}, {"error", "out of memory"}}.dump();
        }
        return FakeBridge::uniform(req);
    });
    auto cfg = default_config(Level::L4, 7, 2);
    cfg.forecaster_kind = ForecasterKind::remote;
    cfg.endpoint = server.endpoint();
    cfg.rounds = 20;
    cfg.warmup = 0;
    try {
        engine::run_episode(cfg, 1);
        FAIL("expected EpisodeAborted");
    } catch (const engine::EpisodeAborted& e) {
        CHECK(e.cause().find("out of memory") != std::string::npos);
        CHECK(e.partial().records.size() == 3);
        for (std::size_t r = 0; r < e.partial().records.size(); ++r) {
            CHECK(e.partial().records[r].round_index == static_cast<int>(r));
        }
    }
}
