#include "scarcity/forecast.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "scarcity/error.hpp"
#include "scarcity/remote.hpp"

namespace scarcity::forecast {

HistoryWindow::HistoryWindow(int window, int n_agents)
    : window_(window)
    , n_agents_(n_agents)
{
    if (window < 1) {
        throw InvalidArgument(fmt::format("history window must be positive (got {})", window));
    }
}

void HistoryWindow::push(int demand)
{
    if (demand < 0 || demand > n_agents_) {
        throw InvalidArgument(fmt::format("demand {} outside [0, {}]", demand, n_agents_));
    }
    demands_.push_back(demand);
    if (static_cast<int>(demands_.size()) > window_) {
        demands_.pop_front();
    }
}

DemandDistribution DemandDistribution::uniform(int n_agents)
{
    const auto cells = static_cast<std::size_t>(n_agents) + 1;
    return {std::vector<double>(cells, 1.0 / static_cast<double>(cells))};
}

bool DemandDistribution::valid() const
{
    if (probs.empty()) {
        return false;
    }
    double sum = 0.0;
    for (double v : probs) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            return false;
        }
        sum += v;
    }
    return std::abs(sum - 1.0) <= 1e-9;
}

namespace {

DemandDistribution empirical(const HistoryWindow& history, int n_agents, double smoothing)
{
    if (history.empty()) {
        return DemandDistribution::uniform(n_agents);
    }
    const auto cells = static_cast<std::size_t>(n_agents) + 1;
    std::vector<double> counts(cells, 0.0);
    for (int d : history.values()) {
        counts[static_cast<std::size_t>(d)] += 1.0;
    }
    const double denom = static_cast<double>(history.size()) + smoothing * static_cast<double>(cells);
    for (auto& c : counts) {
        c = (c + smoothing) / denom;
    }
    return {std::move(counts)};
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

DemandDistribution evaluate(const ForecasterBinding& binding, const HistoryWindow& history, int n_agents,
                            double temperature, RemoteClient* client)
{
    if (!(temperature > 0.0)) {
        throw InvalidArgument(fmt::format("temperature must be positive (got {})", temperature));
    }
    return std::visit(
        overloaded{
            [&](const UniformForecaster&) { return DemandDistribution::uniform(n_agents); },
            [&](const FixedForecaster& f) {
                DemandDistribution dist{f.probs};
                if (dist.n_agents() != n_agents || !dist.valid()) {
                    throw InvalidArgument("fixed forecaster vector is not a valid distribution over 0..N");
                }
                return dist;
            },
            [&](const EmpiricalForecaster& f) { return empirical(history, n_agents, f.smoothing); },
            [&](const RemoteForecaster& f) {
                if (client == nullptr) {
                    RemoteClient one_shot(parse_endpoint(f.endpoint));
                    return DemandDistribution{
                        one_shot.distribution(history.values(), n_agents, f.model_id, temperature)};
                }
                return DemandDistribution{client->distribution(history.values(), n_agents, f.model_id, temperature)};
            },
        },
        binding.kind);
}

} // namespace

DemandDistribution forecast(const ForecasterBinding& binding, const HistoryWindow& history, int n_agents,
                            double temperature, RngStream& /*rng*/)
{
    return evaluate(binding, history, n_agents, temperature, nullptr);
}

double p_llm(const DemandDistribution& dist, int capacity)
{
    const int n = dist.n_agents();
    if (capacity < 0 || capacity > n) {
        throw InvalidArgument(fmt::format("capacity {} outside [0, {}]", capacity, n));
    }
    if (capacity == n) {
        return 1.0;
    }
    double sum = 0.0;
    for (int d = 0; d <= capacity; ++d) {
        sum += dist.probs[static_cast<std::size_t>(d)];
    }
    return std::min(sum, 1.0);
}

std::string render_prompt(const HistoryWindow& history)
{
    if (history.empty()) {
        throw EmptyPrompt();
    }
    std::string out;
    for (int d : history.values()) {
        out += std::to_string(d);
        out += ',';
    }
    return out;
}

Forecaster::Forecaster(ForecasterBinding binding)
    : binding_(std::move(binding))
{
    if (const auto* remote = std::get_if<RemoteForecaster>(&binding_.kind)) {
        client_ = std::make_unique<RemoteClient>(parse_endpoint(remote->endpoint));
    }
}

Forecaster::~Forecaster() = default;
Forecaster::Forecaster(Forecaster&&) noexcept = default;
Forecaster& Forecaster::operator=(Forecaster&&) noexcept = default;

DemandDistribution Forecaster::operator()(const HistoryWindow& history, int n_agents, double temperature,
                                          RngStream& /*rng*/)
{
    return evaluate(binding_, history, n_agents, temperature, client_.get());
}

} // namespace scarcity::forecast
