#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Client side of the line-delimited JSON forecaster protocol.
//
// request:  {"id": 7, "history": [3,1,2,4], "n_max": 7, "model": "gpt2", "temperature": 1.0}
// response: {"id": 7, "probs": [...n_max+1 reals...], "model": "gpt2", "latency_ms": 12.5}
// failure:  {"id": 7, "error": "model-not-found"}
//
// The server may emit "READY <models>" once on startup; the client skips such lines.

namespace scarcity::forecast {

inline constexpr const char* kEndpointEnv = "SCARCITY_LLM_ENDPOINT";

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;
};

/// "host:port" (IPv6 literals as "[::1]:port"). Throws InvalidArgument.
Endpoint parse_endpoint(std::string_view text);

struct BridgeRequest {
    std::optional<std::int64_t> id;
    std::vector<int> history;
    int n_max = 0;
    std::string model;
    double temperature = 1.0;
};

struct BridgeResponse {
    std::optional<std::int64_t> id;
    std::vector<double> probs;
    std::string model;
    double latency_ms = 0.0;
    std::optional<std::string> error;
};

std::string encode_request(const BridgeRequest& request);
/// Throws ForecastUnavailable on malformed JSON or a missing "probs"/"error" member.
BridgeResponse decode_response(std::string_view line);

/// Validates length n_max+1 and finite non-negative entries, then rescales to sum 1.
/// Throws ForecastUnavailable.
std::vector<double> renormalize(std::vector<double> probs, int n_max);

class RemoteClient {
public:
    explicit RemoteClient(Endpoint endpoint, int timeout_ms = 30000);
    ~RemoteClient();
    RemoteClient(const RemoteClient&) = delete;
    RemoteClient& operator=(const RemoteClient&) = delete;

    /// Sends one request and waits for its response. Connects lazily.
    BridgeResponse exchange(BridgeRequest request);

    /// Renormalized distribution over 0..n_max for `history`.
    std::vector<double> distribution(const std::vector<int>& history, int n_max, const std::string& model,
                                     double temperature);

private:
    void connect();
    void send_line(const std::string& line);
    std::string read_line();

    Endpoint endpoint_;
    int timeout_ms_;
    int fd_ = -1;
    std::int64_t next_id_ = 1;
    std::string buffer_;
};

} // namespace scarcity::forecast
