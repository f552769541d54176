#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "scarcity/rng.hpp"

namespace scarcity::forecast {

/// Most recent demands, oldest first; holds at most `window` entries.
class HistoryWindow {
public:
    HistoryWindow(int window, int n_agents);

    /// Throws InvalidArgument when `demand` is outside [0, N].
    void push(int demand);

    std::size_t size() const noexcept { return demands_.size(); }
    bool empty() const noexcept { return demands_.empty(); }
    int window() const noexcept { return window_; }
    int n_agents() const noexcept { return n_agents_; }
    std::vector<int> values() const { return {demands_.begin(), demands_.end()}; }

private:
    int window_;
    int n_agents_;
    std::deque<int> demands_;
};

/// Probability of each next-round demand 0..N.
struct DemandDistribution {
    std::vector<double> probs;

    static DemandDistribution uniform(int n_agents);
    int n_agents() const noexcept { return static_cast<int>(probs.size()) - 1; }
    /// Non-negative entries summing to 1 within 1e-9.
    bool valid() const;
};

struct UniformForecaster {};
struct FixedForecaster {
    std::vector<double> probs;
};
struct EmpiricalForecaster {
    double smoothing = 1.0;
};
struct RemoteForecaster {
    std::string endpoint;
    std::string model_id;
};

struct ForecasterBinding {
    std::variant<UniformForecaster, FixedForecaster, EmpiricalForecaster, RemoteForecaster> kind;
    bool shared = false;
};

class RemoteClient;

/// Stateless evaluation of a binding. A remote binding opens a one-shot connection;
/// prefer `Forecaster` for repeated remote calls.
DemandDistribution forecast(const ForecasterBinding& binding, const HistoryWindow& history, int n_agents,
                            double temperature, RngStream& rng);

/// Probability the forecast puts on demand <= capacity.
double p_llm(const DemandDistribution& dist, int capacity);

/// "3,1,2,4,": decimal values, comma after each, no whitespace.
std::string render_prompt(const HistoryWindow& history);

/// A binding plus the connection it needs. One per worker; not thread-safe.
class Forecaster {
public:
    explicit Forecaster(ForecasterBinding binding);
    ~Forecaster();
    Forecaster(Forecaster&&) noexcept;
    Forecaster& operator=(Forecaster&&) noexcept;

    const ForecasterBinding& binding() const noexcept { return binding_; }
    DemandDistribution operator()(const HistoryWindow& history, int n_agents, double temperature, RngStream& rng);

private:
    ForecasterBinding binding_;
    std::unique_ptr<RemoteClient> client_;
};

} // namespace scarcity::forecast
