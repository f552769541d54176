#include "scarcity/tribes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "scarcity/error.hpp"
#include "scarcity/simd/kernels.hpp"

namespace scarcity::tribes {

LoyaltyParams LoyaltyParams::from(const LevelConfig& cfg)
{
    return {cfg.loyalty_gain, cfg.loyalty_loss, cfg.defection_threshold, cfg.defection_enabled,
            cfg.singleton_distance};
}

double conch_level(int round, int duration, double max_level)
{
    if (round < 0) {
        throw InvalidArgument(fmt::format("conch_level: negative round {}", round));
    }
    if (duration < 1) {
        throw InvalidArgument(fmt::format("conch_level: duration must be positive (got {})", duration));
    }
    if (round >= duration) {
        return max_level;
    }
    return max_level * (static_cast<double>(round) / static_cast<double>(duration));
}

double tribal_override(double agent_p, double tribe_mean_p, double conch)
{
    for (double v : {agent_p, tribe_mean_p, conch}) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw InvalidArgument(fmt::format("tribal_override: input {} outside [0, 1]", v));
        }
    }
    return (1.0 - conch) * agent_p + conch * tribe_mean_p;
}

double update_loyalty(const LoyaltyParams& params, double loyalty, int agent_reward, int tribe_majority_reward)
{
    return loyalty + (agent_reward == tribe_majority_reward ? params.gain : params.loss);
}

int tribe_majority_reward(const Tribe& tribe, std::span<const int> rewards)
{
    long sum = 0;
    for (int id : tribe.members) {
        sum += rewards[static_cast<std::size_t>(id)];
    }
    return sum >= 0 ? 1 : -1;
}

std::optional<int> maybe_defect(const AgentState& agent, const LoyaltyParams& params, const std::vector<Tribe>& tribes,
                                int fresh_id)
{
    if (!params.defection_enabled || !(agent.loyalty < params.defection_threshold)) {
        return std::nullopt;
    }
    const Tribe* current = nullptr;
    const Tribe* nearest = nullptr;
    double best = 0.0;
    for (const auto& tribe : tribes) {
        if (agent.tribe_id && tribe.tribe_id == *agent.tribe_id) {
            current = &tribe;
            continue;
        }
        const double distance = std::abs(agent.p - tribe.mean_p);
        if (nearest == nullptr || distance < best) {
            nearest = &tribe;
            best = distance;
        }
    }
    if (nearest != nullptr && best <= params.singleton_distance) {
        return nearest->tribe_id;
    }
    if (current != nullptr && current->members.size() == 1) {
        return std::nullopt; // already alone
    }
    return fresh_id;
}

std::vector<int> partition_sizes(const std::vector<Tribe>& tribes)
{
    std::vector<int> sizes;
    sizes.reserve(tribes.size());
    for (const auto& tribe : tribes) {
        sizes.push_back(static_cast<int>(tribe.members.size()));
    }
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    return sizes;
}

int partition_variance_cap(std::span<const int> sizes)
{
    int total = 0;
    for (int s : sizes) {
        total += s * s;
    }
    return total;
}

std::vector<std::vector<int>> membership_timeline(const std::vector<RoundRecord>& records)
{
    if (records.empty()) {
        return {};
    }
    const std::size_t n = records.front().tribe_ids.size();
    if (n == 0) {
        throw InvalidArgument("membership_timeline: records carry no tribe membership (not an L5 episode)");
    }
    std::vector<std::vector<int>> rows(n, std::vector<int>(records.size()));
    for (std::size_t r = 0; r < records.size(); ++r) {
        if (records[r].tribe_ids.size() != n) {
            throw InvalidArgument("membership_timeline: inconsistent agent count across rounds");
        }
        for (std::size_t a = 0; a < n; ++a) {
            rows[a][r] = records[r].tribe_ids[a];
        }
    }
    return rows;
}

TribeSystem::TribeSystem(std::vector<AgentState>& agents, LoyaltyParams params)
    : params_(params)
{
    Tribe all{0, {}, 0.0};
    for (auto& agent : agents) {
        all.members.push_back(agent.agent_id);
        agent.tribe_id = 0;
        agent.loyalty = 0.0;
    }
    tribes_.push_back(std::move(all));
    refresh_means(agents);
}

void TribeSystem::refresh_means(const std::vector<AgentState>& agents)
{
    for (auto& tribe : tribes_) {
        double sum = 0.0;
        for (int id : tribe.members) {
            sum += agents[static_cast<std::size_t>(id)].p;
        }
        tribe.mean_p = tribe.members.empty() ? 0.0 : sum / static_cast<double>(tribe.members.size());
    }
}

std::vector<double> TribeSystem::member_means(const std::vector<AgentState>& agents) const
{
    std::vector<double> means(agents.size(), 0.0);
    for (const auto& tribe : tribes_) {
        for (int id : tribe.members) {
            means[static_cast<std::size_t>(id)] = tribe.mean_p;
        }
    }
    return means;
}

std::vector<double> TribeSystem::overrides(const std::vector<AgentState>& agents, double conch) const
{
    std::vector<double> p(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
        p[i] = agents[i].p;
    }
    const auto means = member_means(agents);
    std::vector<double> out(agents.size());
    simd::blend(p, means, conch, out);
    return out;
}

Tribe* TribeSystem::find(int tribe_id)
{
    for (auto& tribe : tribes_) {
        if (tribe.tribe_id == tribe_id) {
            return &tribe;
        }
    }
    return nullptr;
}

void TribeSystem::move_agent(AgentState& agent, int destination, const std::vector<AgentState>& agents)
{
    if (Tribe* from = find(*agent.tribe_id)) {
        std::erase(from->members, agent.agent_id);
    }
    std::erase_if(tribes_, [](const Tribe& t) { return t.members.empty(); });

    Tribe* to = find(destination);
    if (to == nullptr) {
        tribes_.push_back(Tribe{destination, {}, 0.0});
        next_id_ = std::max(next_id_, destination + 1);
        to = &tribes_.back();
    }
    to->members.insert(std::upper_bound(to->members.begin(), to->members.end(), agent.agent_id), agent.agent_id);
    agent.tribe_id = destination;
    agent.loyalty = 0.0;
    refresh_means(agents);
}

int TribeSystem::end_of_round(std::vector<AgentState>& agents, std::span<const int> rewards)
{
    refresh_means(agents);
    for (const auto& tribe : tribes_) {
        const int majority = tribe_majority_reward(tribe, rewards);
        for (int id : tribe.members) {
            auto& agent = agents[static_cast<std::size_t>(id)];
            agent.loyalty = update_loyalty(params_, agent.loyalty, rewards[static_cast<std::size_t>(id)], majority);
        }
    }
    int defections = 0;
    for (auto& agent : agents) {
        if (auto destination = maybe_defect(agent, params_, tribes_, next_id_)) {
            move_agent(agent, *destination, agents);
            ++defections;
        }
    }
    return defections;
}

std::vector<int> TribeSystem::tribe_ids(const std::vector<AgentState>& agents) const
{
    std::vector<int> ids(agents.size(), -1);
    for (const auto& tribe : tribes_) {
        for (int id : tribe.members) {
            ids[static_cast<std::size_t>(id)] = tribe.tribe_id;
        }
    }
    return ids;
}

bool TribeSystem::consistent(const std::vector<AgentState>& agents) const
{
    std::vector<int> seen(agents.size(), 0);
    for (const auto& tribe : tribes_) {
        if (tribe.members.empty()) {
            return false;
        }
        for (int id : tribe.members) {
            if (id < 0 || static_cast<std::size_t>(id) >= agents.size()) {
                return false;
            }
            if (++seen[static_cast<std::size_t>(id)] > 1) {
                return false;
            }
            if (agents[static_cast<std::size_t>(id)].tribe_id != tribe.tribe_id) {
                return false;
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

} // namespace scarcity::tribes
