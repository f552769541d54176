#pragma once

#include <optional>
#include <span>
#include <vector>

#include "scarcity/core.hpp"

namespace scarcity::tribes {

struct Tribe {
    int tribe_id = 0;
    std::vector<int> members; // ascending agent ids
    double mean_p = 0.0;
};

struct LoyaltyParams {
    double gain = 1.0;
    double loss = -1.0;
    double defection_threshold = 0.0;
    bool defection_enabled = true;
    double singleton_distance = 0.25;

    static LoyaltyParams from(const LevelConfig& cfg);
};

struct ConchState {
    int round = 0;
    double level = 0.0;
};

/// max_level * min(round / duration, 1).
double conch_level(int round, int duration, double max_level);

/// (1 - conch) * agent_p + conch * tribe_mean_p.
double tribal_override(double agent_p, double tribe_mean_p, double conch);

double update_loyalty(const LoyaltyParams& params, double loyalty, int agent_reward, int tribe_majority_reward);

/// Sign of the summed member rewards; a tie counts as +1.
int tribe_majority_reward(const Tribe& tribe, std::span<const int> rewards);

/// Destination tribe for an agent whose loyalty fell below threshold, or nullopt to stay.
/// The nearest other tribe by |p - mean_p| wins (lowest id on ties) unless it is farther than
/// singleton_distance, in which case `fresh_id` (a new singleton) is returned.
std::optional<int> maybe_defect(const AgentState& agent, const LoyaltyParams& params, const std::vector<Tribe>& tribes,
                                int fresh_id);

/// Tribe sizes, descending.
std::vector<int> partition_sizes(const std::vector<Tribe>& tribes);

/// Sum of squared sizes: the demand variance of perfectly correlated blocs.
int partition_variance_cap(std::span<const int> sizes);

/// rows[agent][round] = tribe id at decision time. Throws InvalidArgument for records without tribe data.
std::vector<std::vector<int>> membership_timeline(const std::vector<RoundRecord>& records);

/// Tribe bookkeeping for one episode. Starts with every agent in tribe 0.
class TribeSystem {
public:
    TribeSystem(std::vector<AgentState>& agents, LoyaltyParams params);

    const std::vector<Tribe>& tribes() const noexcept { return tribes_; }
    const LoyaltyParams& params() const noexcept { return params_; }

    /// Per-agent tribe mean p, indexed by agent id.
    std::vector<double> member_means(const std::vector<AgentState>& agents) const;

    /// Effective dispositions after tribal influence at the given conch level.
    std::vector<double> overrides(const std::vector<AgentState>& agents, double conch) const;

    /// Loyalty update for every agent, then a defection scan in ascending agent id.
    /// Returns the number of defections.
    int end_of_round(std::vector<AgentState>& agents, std::span<const int> rewards);

    /// Recomputes every tribe's mean p from current agent dispositions.
    void refresh_means(const std::vector<AgentState>& agents);

    std::vector<int> tribe_ids(const std::vector<AgentState>& agents) const;

    /// True when tribes are disjoint, exhaustive, non-empty, and agent tribe_ids agree.
    bool consistent(const std::vector<AgentState>& agents) const;

private:
    Tribe* find(int tribe_id);
    void move_agent(AgentState& agent, int destination, const std::vector<AgentState>& agents);

    std::vector<Tribe> tribes_;
    LoyaltyParams params_;
    int next_id_ = 1;
};

} // namespace scarcity::tribes
