#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scarcity/core.hpp"
#include "scarcity/error.hpp"
#include "scarcity/forecast.hpp"

namespace scarcity::engine {

struct DecisionTrace {
    int agent_id = 0;
    double p_used = 0.0; // agent p, or the tribal override in L5
    double p_llm_value = 0.0;
    double p_eff = 0.0;
    std::uint8_t action = 0;
};

struct EpisodeResult {
    LevelConfig config;
    std::uint64_t seed = 0;
    std::vector<int> warm_start;
    std::vector<double> initial_p;
    std::vector<RoundRecord> records;
    std::vector<std::vector<DecisionTrace>> decisions; // per round, per agent
    std::vector<AgentState> final_agents;
    double overload_rate = 0.0;               // over rounds [warmup, rounds)
    std::vector<double> win_rate_per_agent;   // over rounds [warmup, rounds)
};

/// A forecast failed mid-episode. `partial()` holds every completed round.
class EpisodeAborted : public ForecastUnavailable {
public:
    EpisodeAborted(const ForecastUnavailable& cause, EpisodeResult partial)
        : ForecastUnavailable(cause.cause()), partial_(std::move(partial)) {}
    const EpisodeResult& partial() const noexcept { return partial_; }

private:
    EpisodeResult partial_;
};

/// p*x + (1-p)*(1-x). Throws InvalidArgument outside [0,1].
double disposition_filter(double p, double p_llm_value);

/// One biased coin flip; consumes exactly one draw from `rng`.
DecisionTrace decide(const AgentState& agent, double p_llm_value, std::optional<double> effective_p_override,
                     RngStream& rng);

struct Settlement {
    int demand = 0;
    bool overloaded = false;
    std::vector<int> rewards;
};

/// Symmetric payoff: accessors earn +1 iff demand <= capacity, holders earn +1 iff demand > capacity.
Settlement settle_round(std::span<const std::uint8_t> actions, int capacity);

/// clamp(p + u, 0, 1)
double apply_perturbation(double p, double u);

/// New disposition after one round. perturb_on_loss moves p only on a -1 reward.
double adapt_p(const AgentState& agent, int reward, double step, AdaptRule rule, RngStream& rng);

/// Forecaster bindings for a level: one shared binding for L1/L2, one per agent otherwise.
std::vector<forecast::ForecasterBinding> make_bindings(const LevelConfig& cfg);

/// Full round loop for any level; L1 delegates to run_level1. Deterministic in (cfg, seed).
EpisodeResult run_episode(const LevelConfig& cfg, std::uint64_t seed);
EpisodeResult run_episode(const LevelConfig& cfg, std::uint64_t seed, std::vector<forecast::Forecaster>& forecasters);

/// Independent coin flips with q = C/N; no forecaster, no adaptation.
EpisodeResult run_level1(const LevelConfig& cfg, std::uint64_t seed);

} // namespace scarcity::engine
