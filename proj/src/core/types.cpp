#include <algorithm>
#include <array>
#include <string>

#include <fmt/format.h>

#include "scarcity/core.hpp"
#include "scarcity/error.hpp"

namespace scarcity {

InvalidConfig::InvalidConfig(std::vector<std::string> violations)
    : Error([&] {
        std::string msg = "invalid config:";
        for (const auto& v : violations) {
            msg += " [" + v + "]";
        }
        return msg;
    }())
    , violations_(std::move(violations))
{
}

std::string_view to_string(Level level)
{
    switch (level) {
    case Level::L1: return "L1";
    case Level::L2: return "L2";
    case Level::L3: return "L3";
    case Level::L4: return "L4";
    case Level::L5: return "L5";
    }
    return "?";
}

std::string_view level_label(Level level)
{
    switch (level) {
    case Level::L1: return "IID";
    case Level::L2: return "Null";
    case Level::L3: return "Diverse";
    case Level::L4: return "FRD";
    case Level::L5: return "LOTF";
    }
    return "?";
}

std::string_view to_string(PInitMode mode)
{
    switch (mode) {
    case PInitMode::spectrum: return "spectrum";
    case PInitMode::random: return "random";
    case PInitMode::all_one: return "all_one";
    }
    return "?";
}

std::string_view to_string(ForecasterKind kind)
{
    switch (kind) {
    case ForecasterKind::uniform: return "uniform";
    case ForecasterKind::fixed: return "fixed";
    case ForecasterKind::empirical: return "empirical";
    case ForecasterKind::remote: return "remote";
    }
    return "?";
}

std::string_view to_string(AdaptRule rule)
{
    switch (rule) {
    case AdaptRule::perturb_on_loss: return "perturb_on_loss";
    case AdaptRule::always_perturb: return "always_perturb";
    }
    return "?";
}

Level parse_level(std::string_view s)
{
    if (!s.empty() && (s.front() == 'L' || s.front() == 'l')) {
        s.remove_prefix(1);
    }
    if (s.size() == 1 && s.front() >= '1' && s.front() <= '5') {
        return static_cast<Level>(s.front() - '0');
    }
    throw InvalidArgument(fmt::format("unknown level '{}'", s));
}

PInitMode parse_p_init_mode(std::string_view s)
{
    for (auto m : {PInitMode::spectrum, PInitMode::random, PInitMode::all_one}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw InvalidArgument(fmt::format("unknown p_init_mode '{}'", s));
}

ForecasterKind parse_forecaster_kind(std::string_view s)
{
    for (auto k : {ForecasterKind::uniform, ForecasterKind::fixed, ForecasterKind::empirical,
                   ForecasterKind::remote}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw InvalidArgument(fmt::format("unknown forecaster kind '{}'", s));
}

AdaptRule parse_adapt_rule(std::string_view s)
{
    if (s == "perturb_on_loss" || s == "perturb-on-loss") {
        return AdaptRule::perturb_on_loss;
    }
    if (s == "always_perturb" || s == "always-perturb") {
        return AdaptRule::always_perturb;
    }
    throw InvalidArgument(fmt::format("unknown adapt rule '{}'", s));
}

LevelToggles toggles(Level level)
{
    switch (level) {
    case Level::L1: return {false, false, false};
    case Level::L2: return {false, true, false};
    case Level::L3: return {true, false, false};
    case Level::L4: return {true, true, false};
    case Level::L5: return {true, true, true};
    }
    return {false, false, false};
}

std::vector<std::uint64_t> default_seeds(std::size_t count)
{
    std::vector<std::uint64_t> seeds(count);
    for (std::size_t i = 0; i < count; ++i) {
        seeds[i] = i + 1;
    }
    return seeds;
}

std::vector<double> initial_p_spectrum(int n_agents, PInitMode mode, RngStream& rng)
{
    if (n_agents < 2) {
        throw InvalidConfig(fmt::format("n_agents must be >= 2 (got {})", n_agents));
    }
    std::vector<double> p(static_cast<std::size_t>(n_agents));
    switch (mode) {
    case PInitMode::spectrum:
        for (int i = 0; i < n_agents; ++i) {
            p[i] = 1.0 - static_cast<double>(i) / static_cast<double>(n_agents - 1);
        }
        break;
    case PInitMode::all_one:
        std::fill(p.begin(), p.end(), 1.0);
        break;
    case PInitMode::random:
        for (auto& v : p) {
            v = rng.uniform();
        }
        break;
    }
    return p;
}

std::vector<RosterEntry> roster(int n_agents)
{
    static const std::array<RosterEntry, 7> table{{
        {"GPT-2 (dup)", "gpt2"},
        {"GPT-2 (base)", "gpt2"},
        {"GPT-2-medium", "gpt2-medium"},
        {"OPT-350M", "opt-350m"},
        {"OPT-125M", "opt-125m"},
        {"Pythia-160M", "pythia-160m"},
        {"Pythia-410M", "pythia-410m"},
    }};
    std::vector<RosterEntry> out;
    out.reserve(static_cast<std::size_t>(std::max(n_agents, 0)));
    for (int i = 0; i < n_agents; ++i) {
        if (n_agents == 7) {
            out.push_back(table[i]);
        } else {
            const auto& base = table[static_cast<std::size_t>(i) % table.size()];
            out.push_back({fmt::format("agent-{}", i), base.model});
        }
    }
    return out;
}

void AgentState::set_p(double value)
{
    p = std::clamp(value, 0.0, 1.0);
}

} // namespace scarcity
