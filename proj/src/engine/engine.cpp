#include "scarcity/engine.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "scarcity/simd/kernels.hpp"
#include "scarcity/tribes.hpp"

namespace scarcity::engine {

double disposition_filter(double p, double p_llm_value)
{
    if (!(p >= 0.0 && p <= 1.0) || !(p_llm_value >= 0.0 && p_llm_value <= 1.0)) {
        throw InvalidArgument(fmt::format("disposition_filter: inputs ({}, {}) outside [0, 1]", p, p_llm_value));
    }
    double out = 0.0;
    simd::scalar_kernels().disposition_filter(&p, &p_llm_value, &out, 1);
    return out;
}

DecisionTrace decide(const AgentState& agent, double p_llm_value, std::optional<double> effective_p_override,
                     RngStream& rng)
{
    const double p_used = effective_p_override.value_or(agent.p);
    const double p_eff = disposition_filter(p_used, p_llm_value);
    const double u = rng.uniform();
    return {agent.agent_id, p_used, p_llm_value, p_eff, static_cast<std::uint8_t>(u < p_eff ? 1 : 0)};
}

Settlement settle_round(std::span<const std::uint8_t> actions, int capacity)
{
    Settlement s;
    for (auto a : actions) {
        s.demand += a != 0 ? 1 : 0;
    }
    s.overloaded = s.demand > capacity;
    s.rewards.resize(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const bool accessed = actions[i] != 0;
        s.rewards[i] = (accessed != s.overloaded) ? 1 : -1;
    }
    return s;
}

double apply_perturbation(double p, double u)
{
    return std::clamp(p + u, 0.0, 1.0);
}

double adapt_p(const AgentState& agent, int reward, double step, AdaptRule rule, RngStream& rng)
{
    if (!(step > 0.0 && step <= 1.0)) {
        throw InvalidArgument(fmt::format("adapt_p: step {} outside (0, 1]", step));
    }
    if (rule == AdaptRule::perturb_on_loss && reward > 0) {
        return agent.p;
    }
    return apply_perturbation(agent.p, rng.uniform(-step, step));
}

std::vector<forecast::ForecasterBinding> make_bindings(const LevelConfig& cfg)
{
    using namespace forecast;
    const bool shared = !toggles(cfg.level).diverse_forecasters;
    const int count = shared ? 1 : cfg.n_agents;
    const auto names = roster(cfg.n_agents);
    std::vector<ForecasterBinding> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        ForecasterBinding b;
        b.shared = shared;
        switch (cfg.forecaster_kind) {
        case ForecasterKind::uniform:
            b.kind = UniformForecaster{};
            break;
        case ForecasterKind::fixed:
            b.kind = FixedForecaster{cfg.fixed_probs};
            break;
        case ForecasterKind::empirical: {
            // Diverse synthetic forecasters differ in how strongly they trust the recent
            // history: smoothing spans [s/4, 4s] geometrically across the roster.
            double s = cfg.empirical_smoothing;
            if (!shared) {
                const double t = static_cast<double>(i) / static_cast<double>(cfg.n_agents - 1);
                s *= std::pow(4.0, 2.0 * t - 1.0);
            }
            b.kind = EmpiricalForecaster{s};
            break;
        }
        case ForecasterKind::remote: {
            const auto idx = static_cast<std::size_t>(i);
            std::string model = cfg.model_ids.empty() ? names[idx].model : cfg.model_ids[idx];
            b.kind = RemoteForecaster{cfg.endpoint, std::move(model)};
            break;
        }
        }
        out.push_back(std::move(b));
    }
    return out;
}

namespace {

std::vector<AgentState> make_agents(const LevelConfig& cfg, std::uint64_t seed)
{
    RngStream init_rng(seed, {StreamRole::PInit, 0});
    const auto p0 = initial_p_spectrum(cfg.n_agents, cfg.p_init_mode, init_rng);
    const auto names = roster(cfg.n_agents);
    std::vector<AgentState> agents(static_cast<std::size_t>(cfg.n_agents));
    for (int i = 0; i < cfg.n_agents; ++i) {
        auto& a = agents[static_cast<std::size_t>(i)];
        a.agent_id = i;
        a.model_id = names[static_cast<std::size_t>(i)].label;
        a.set_p(p0[static_cast<std::size_t>(i)]);
        a.initial_p = a.p;
    }
    return agents;
}

std::vector<RngStream> agent_streams(std::uint64_t seed, StreamRole role, int n)
{
    std::vector<RngStream> streams;
    streams.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        streams.emplace_back(seed, StreamId{role, static_cast<std::uint32_t>(i)});
    }
    return streams;
}

void finish(EpisodeResult& result)
{
    const auto& cfg = result.config;
    const std::size_t n = static_cast<std::size_t>(cfg.n_agents);
    const std::size_t start = static_cast<std::size_t>(cfg.warmup);
    std::size_t overloads = 0;
    std::vector<long> wins(n, 0);
    for (std::size_t r = start; r < result.records.size(); ++r) {
        const auto& rec = result.records[r];
        overloads += rec.overloaded ? 1 : 0;
        for (std::size_t i = 0; i < n; ++i) {
            wins[i] += rec.rewards[i] > 0 ? 1 : 0;
        }
    }
    const std::size_t measured = result.records.size() > start ? result.records.size() - start : 0;
    const double denom = measured > 0 ? static_cast<double>(measured) : 1.0;
    result.overload_rate = static_cast<double>(overloads) / denom;
    result.win_rate_per_agent.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        result.win_rate_per_agent[i] = static_cast<double>(wins[i]) / denom;
    }
}

void book_rewards(std::vector<AgentState>& agents, const Settlement& s)
{
    for (std::size_t i = 0; i < agents.size(); ++i) {
        agents[i].score += s.rewards[i];
        agents[i].wins += s.rewards[i] > 0 ? 1 : 0;
    }
}

std::vector<double> current_p(const std::vector<AgentState>& agents)
{
    std::vector<double> p(agents.size());
    std::transform(agents.begin(), agents.end(), p.begin(), [](const AgentState& a) { return a.p; });
    return p;
}

} // namespace

EpisodeResult run_level1(const LevelConfig& cfg, std::uint64_t seed)
{
    require_valid(cfg);
    if (cfg.level != Level::L1) {
        throw InvalidConfig(fmt::format("run_level1 requires level L1 (got {})", to_string(cfg.level)));
    }
    const std::size_t n = static_cast<std::size_t>(cfg.n_agents);
    const double q = static_cast<double>(cfg.capacity) / static_cast<double>(cfg.n_agents);

    EpisodeResult result;
    result.config = cfg;
    result.seed = seed;
    auto agents = make_agents(cfg, seed);
    result.initial_p = current_p(agents);
    auto decide_rng = agent_streams(seed, StreamRole::Decide, cfg.n_agents);

    const std::vector<double> prob(n, q);
    std::vector<double> u(n);
    std::vector<std::uint8_t> actions(n);
    result.records.reserve(static_cast<std::size_t>(cfg.rounds));
    result.decisions.reserve(static_cast<std::size_t>(cfg.rounds));
    for (int r = 0; r < cfg.rounds; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = decide_rng[i].uniform();
        }
        simd::threshold(u, prob, actions);
        auto s = settle_round(actions, cfg.capacity);
        book_rewards(agents, s);

        std::vector<DecisionTrace> trace(n);
        for (std::size_t i = 0; i < n; ++i) {
            trace[i] = {static_cast<int>(i), agents[i].p, q, q, actions[i]};
        }
        result.decisions.push_back(std::move(trace));

        RoundRecord rec;
        rec.round_index = r;
        rec.actions = actions;
        rec.demand = s.demand;
        rec.overloaded = s.overloaded;
        rec.rewards = std::move(s.rewards);
        rec.p_values = current_p(agents);
        result.records.push_back(std::move(rec));
    }
    result.final_agents = std::move(agents);
    finish(result);
    return result;
}

EpisodeResult run_episode(const LevelConfig& cfg, std::uint64_t seed)
{
    require_valid(cfg);
    if (cfg.level == Level::L1) {
        return run_level1(cfg, seed);
    }
    std::vector<forecast::Forecaster> forecasters;
    for (auto& binding : make_bindings(cfg)) {
        forecasters.emplace_back(std::move(binding));
    }
    return run_episode(cfg, seed, forecasters);
}

EpisodeResult run_episode(const LevelConfig& cfg, std::uint64_t seed, std::vector<forecast::Forecaster>& forecasters)
{
    require_valid(cfg);
    if (cfg.level == Level::L1) {
        return run_level1(cfg, seed);
    }
    const auto t = toggles(cfg.level);
    const std::size_t n = static_cast<std::size_t>(cfg.n_agents);
    const std::size_t expected = t.diverse_forecasters ? n : 1;
    if (forecasters.size() != expected) {
        throw InvalidArgument(
            fmt::format("{} needs {} forecaster(s), got {}", to_string(cfg.level), expected, forecasters.size()));
    }

    EpisodeResult result;
    result.config = cfg;
    result.seed = seed;

    auto agents = make_agents(cfg, seed);
    result.initial_p = current_p(agents);
    auto decide_rng = agent_streams(seed, StreamRole::Decide, cfg.n_agents);
    auto adapt_rng = agent_streams(seed, StreamRole::Adapt, cfg.n_agents);
    auto forecast_rng = agent_streams(seed, StreamRole::Forecast, static_cast<int>(expected));

    forecast::HistoryWindow history(cfg.history_window, cfg.n_agents);
    {
        RngStream warm(seed, {StreamRole::WarmStart, 0});
        for (int k = 0; k < cfg.history_window; ++k) {
            const int d = static_cast<int>(warm.uniform_int(0, cfg.n_agents));
            history.push(d);
            result.warm_start.push_back(d);
        }
    }

    std::optional<tribes::TribeSystem> tribe_system;
    if (t.tribes) {
        tribe_system.emplace(agents, tribes::LoyaltyParams::from(cfg));
    }

    std::vector<double> x(n);
    std::vector<double> p_eff(n);
    std::vector<double> u(n);
    std::vector<std::uint8_t> actions(n);
    result.records.reserve(static_cast<std::size_t>(cfg.rounds));
    result.decisions.reserve(static_cast<std::size_t>(cfg.rounds));

    for (int r = 0; r < cfg.rounds; ++r) {
        try {
            if (t.diverse_forecasters) {
                for (std::size_t i = 0; i < n; ++i) {
                    const auto dist = forecasters[i](history, cfg.n_agents, cfg.temperature, forecast_rng[i]);
                    x[i] = forecast::p_llm(dist, cfg.capacity);
                }
            } else {
                const auto dist = forecasters[0](history, cfg.n_agents, cfg.temperature, forecast_rng[0]);
                std::fill(x.begin(), x.end(), forecast::p_llm(dist, cfg.capacity));
            }
        } catch (const ForecastUnavailable& e) {
            result.final_agents = agents;
            finish(result);
            throw EpisodeAborted(e, std::move(result));
        }

        const double conch = t.tribes ? tribes::conch_level(r, cfg.conch_duration, cfg.conch_max) : 0.0;
        const auto p_now = current_p(agents);
        const auto p_used = t.tribes ? tribe_system->overrides(agents, conch) : p_now;

        simd::disposition_filter(p_used, x, p_eff);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = decide_rng[i].uniform();
        }
        simd::threshold(u, p_eff, actions);
        auto s = settle_round(actions, cfg.capacity);
        book_rewards(agents, s);

        std::vector<DecisionTrace> trace(n);
        for (std::size_t i = 0; i < n; ++i) {
            trace[i] = {static_cast<int>(i), p_used[i], x[i], p_eff[i], actions[i]};
        }
        result.decisions.push_back(std::move(trace));

        RoundRecord rec;
        rec.round_index = r;
        rec.actions = actions;
        rec.demand = s.demand;
        rec.overloaded = s.overloaded;
        rec.p_values = p_now;
        rec.conch_level = conch;
        if (t.tribes) {
            rec.partition = tribes::partition_sizes(tribe_system->tribes());
            rec.tribe_ids = tribe_system->tribe_ids(agents);
        }

        if (t.adaptation) {
            for (std::size_t i = 0; i < n; ++i) {
                agents[i].set_p(adapt_p(agents[i], s.rewards[i], cfg.adaptation_step, cfg.adapt_rule, adapt_rng[i]));
            }
        }
        if (t.tribes) {
            tribe_system->end_of_round(agents, s.rewards);
        }
        history.push(s.demand);

        rec.rewards = std::move(s.rewards);
        result.records.push_back(std::move(rec));
    }

    result.final_agents = std::move(agents);
    finish(result);
    return result;
}

} // namespace scarcity::engine
