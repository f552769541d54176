#include "scarcity/remote.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

#include "scarcity/error.hpp"

namespace scarcity::forecast {

using nlohmann::json;

Endpoint parse_endpoint(std::string_view text)
{
    std::string_view host;
    std::string_view port;
    if (!text.empty() && text.front() == '[') {
        const auto close = text.find(']');
        if (close == std::string_view::npos || close + 1 >= text.size() || text[close + 1] != ':') {
            throw InvalidArgument(fmt::format("malformed endpoint '{}'", text));
        }
        host = text.substr(1, close - 1);
        port = text.substr(close + 2);
    } else {
        const auto colon = text.rfind(':');
        if (colon == std::string_view::npos) {
            throw InvalidArgument(fmt::format("endpoint '{}' must be host:port", text));
        }
        host = text.substr(0, colon);
        port = text.substr(colon + 1);
    }
    if (host.empty() || port.empty()) {
        throw InvalidArgument(fmt::format("endpoint '{}' must be host:port", text));
    }
    unsigned value = 0;
    for (char c : port) {
        if (c < '0' || c > '9') {
            throw InvalidArgument(fmt::format("endpoint port '{}' is not a number", port));
        }
        value = value * 10 + static_cast<unsigned>(c - '0');
        if (value > 65535) {
            throw InvalidArgument(fmt::format("endpoint port '{}' out of range", port));
        }
    }
    if (value == 0) {
        throw InvalidArgument("endpoint port must be non-zero");
    }
    return {std::string(host), static_cast<std::uint16_t>(value)};
}

std::string encode_request(const BridgeRequest& request)
{
    json j;
    if (request.id) {
        j["id"] = *request.id;
    }
    j["history"] = request.history;
    j["n_max"] = request.n_max;
    j["model"] = request.model;
    j["temperature"] = request.temperature;
    return j.dump();
}

BridgeResponse decode_response(std::string_view line)
{
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ForecastUnavailable(fmt::format("malformed response line: {}", line));
    }
    BridgeResponse out;
    try {
        if (j.contains("id") && !j["id"].is_null()) {
            out.id = j["id"].get<std::int64_t>();
        }
        if (j.contains("error")) {
            out.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
            return out;
        }
        if (!j.contains("probs")) {
            throw ForecastUnavailable("response has neither 'probs' nor 'error'");
        }
        out.probs = j["probs"].get<std::vector<double>>();
        out.model = j.value("model", std::string{});
        out.latency_ms = j.value("latency_ms", 0.0);
    } catch (const json::exception& e) {
        throw ForecastUnavailable(fmt::format("response has wrong field types: {}", e.what()));
    }
    return out;
}

std::vector<double> renormalize(std::vector<double> probs, int n_max)
{
    if (static_cast<int>(probs.size()) != n_max + 1) {
        throw ForecastUnavailable(fmt::format("expected {} probabilities, got {}", n_max + 1, probs.size()));
    }
    double sum = 0.0;
    for (double v : probs) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ForecastUnavailable(fmt::format("probability {} is not a finite non-negative number", v));
        }
        sum += v;
    }
    if (!(sum > 0.0)) {
        throw ForecastUnavailable("probabilities sum to zero");
    }
    for (auto& v : probs) {
        v /= sum;
    }
    return probs;
}

RemoteClient::RemoteClient(Endpoint endpoint, int timeout_ms)
    : endpoint_(std::move(endpoint))
    , timeout_ms_(timeout_ms)
{
}

RemoteClient::~RemoteClient()
{
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

void RemoteClient::connect()
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* result = nullptr;
    const auto port = std::to_string(endpoint_.port);
    if (int rc = ::getaddrinfo(endpoint_.host.c_str(), port.c_str(), &hints, &result); rc != 0) {
        throw ForecastUnavailable(fmt::format("resolve {}:{}: {}", endpoint_.host, port, ::gai_strerror(rc)));
    }
    std::string last_error = "no addresses";
    for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) {
            last_error = std::strerror(errno);
            continue;
        }
        timeval tv{};
        tv.tv_sec = timeout_ms_ / 1000;
        tv.tv_usec = (timeout_ms_ % 1000) * 1000;
        ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
        ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            fd_ = fd;
            break;
        }
        last_error = std::strerror(errno);
        ::close(fd);
    }
    ::freeaddrinfo(result);
    if (fd_ < 0) {
        throw ForecastUnavailable(fmt::format("connect {}:{}: {}", endpoint_.host, port, last_error));
    }
}

void RemoteClient::send_line(const std::string& line)
{
    std::string payload = line + "\n";
    std::size_t sent = 0;
    while (sent < payload.size()) {
        const ssize_t n = ::send(fd_, payload.data() + sent, payload.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw ForecastUnavailable(fmt::format("send: {}", std::strerror(errno)));
        }
        sent += static_cast<std::size_t>(n);
    }
}

std::string RemoteClient::read_line()
{
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            return line;
        }
        char chunk[4096];
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n == 0) {
            throw ForecastUnavailable("connection closed by server");
        }
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw ForecastUnavailable(fmt::format("recv: {}", std::strerror(errno)));
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

BridgeResponse RemoteClient::exchange(BridgeRequest request)
{
    if (fd_ < 0) {
        connect();
    }
    request.id = next_id_++;
    try {
        send_line(encode_request(request));
        for (;;) {
            const std::string line = read_line();
            if (line.empty() || line.rfind("READY", 0) == 0) {
                continue;
            }
            BridgeResponse response = decode_response(line);
            if (response.id && *response.id != *request.id) {
                throw ForecastUnavailable(
                    fmt::format("response id {} does not match request id {}", *response.id, *request.id));
            }
            return response;
        }
    } catch (const ForecastUnavailable&) {
        ::close(fd_);
        fd_ = -1;
        buffer_.clear();
        throw;
    }
}

std::vector<double> RemoteClient::distribution(const std::vector<int>& history, int n_max,
                                               const std::string& model, double temperature)
{
    BridgeResponse response = exchange({std::nullopt, history, n_max, model, temperature});
    if (response.error) {
        throw ForecastUnavailable(fmt::format("server error for model '{}': {}", model, *response.error));
    }
    return renormalize(std::move(response.probs), n_max);
}

} // namespace scarcity::forecast
