#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "scarcity/core.hpp"
#include "scarcity/error.hpp"

namespace scarcity {

using nlohmann::json;

LevelConfig default_config(Level level, int n_agents, int capacity)
{
    LevelConfig cfg;
    cfg.level = level;
    cfg.n_agents = n_agents;
    cfg.capacity = capacity;
    cfg.p_init_mode = toggles(level).adaptation ? PInitMode::spectrum : PInitMode::all_one;
    return cfg;
}

std::vector<std::string> validate_config(const LevelConfig& cfg)
{
    std::vector<std::string> out;
    auto fail = [&](std::string msg) { out.push_back(std::move(msg)); };

    if (cfg.n_agents < 2) {
        fail(fmt::format("n_agents >= 2 (got {})", cfg.n_agents));
    }
    if (cfg.capacity < 1) {
        fail(fmt::format("capacity >= 1 (got {})", cfg.capacity));
    }
    if (cfg.capacity >= cfg.n_agents) {
        fail(fmt::format("capacity < n_agents (got C={}, N={})", cfg.capacity, cfg.n_agents));
    }
    if (cfg.rounds < 1) {
        fail(fmt::format("rounds > 0 (got {})", cfg.rounds));
    }
    if (cfg.warmup < 0) {
        fail(fmt::format("warmup >= 0 (got {})", cfg.warmup));
    }
    if (cfg.warmup >= cfg.rounds) {
        fail(fmt::format("warmup < rounds (got warmup={}, rounds={})", cfg.warmup, cfg.rounds));
    }
    if (cfg.seeds.empty()) {
        fail("seeds must be non-empty");
    } else if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size()) {
        fail("seeds must be distinct");
    }
    if (cfg.history_window < 1) {
        fail(fmt::format("history_window > 0 (got {})", cfg.history_window));
    }
    if (!(cfg.temperature > 0.0)) {
        fail(fmt::format("temperature > 0 (got {})", cfg.temperature));
    }
    if (!(cfg.adaptation_step > 0.0 && cfg.adaptation_step <= 1.0)) {
        fail(fmt::format("adaptation_step in (0, 1] (got {})", cfg.adaptation_step));
    }
    if (cfg.conch_duration < 1) {
        fail(fmt::format("conch_duration > 0 (got {})", cfg.conch_duration));
    }
    if (!(cfg.conch_max >= 0.0 && cfg.conch_max <= 1.0)) {
        fail(fmt::format("conch_max in [0, 1] (got {})", cfg.conch_max));
    }
    if (!(cfg.empirical_smoothing >= 0.0) || !std::isfinite(cfg.empirical_smoothing)) {
        fail(fmt::format("empirical_smoothing >= 0 (got {})", cfg.empirical_smoothing));
    }
    if (!(cfg.singleton_distance >= 0.0)) {
        fail(fmt::format("singleton_distance >= 0 (got {})", cfg.singleton_distance));
    }

    const auto t = toggles(cfg.level);
    if (!t.adaptation && cfg.p_init_mode != PInitMode::all_one) {
        fail(fmt::format("{} forces p=1 (p_init_mode must be all_one, got {})", to_string(cfg.level),
                         to_string(cfg.p_init_mode)));
    }
    if (!cfg.model_ids.empty()) {
        if (static_cast<int>(cfg.model_ids.size()) != cfg.n_agents) {
            fail(fmt::format("model_ids must list one id per agent (got {}, N={})", cfg.model_ids.size(),
                             cfg.n_agents));
        }
        const std::set<std::string> distinct(cfg.model_ids.begin(), cfg.model_ids.end());
        if (!t.diverse_forecasters && distinct.size() > 1) {
            fail(fmt::format("{} requires a single shared forecaster (model_ids are not identical)",
                             to_string(cfg.level)));
        }
    }
    if (cfg.level != Level::L1) {
        if (cfg.forecaster_kind == ForecasterKind::fixed) {
            const auto expected = static_cast<std::size_t>(std::max(cfg.n_agents, 0)) + 1;
            if (cfg.fixed_probs.size() != expected) {
                fail(fmt::format("fixed_probs must have N+1 = {} entries (got {})", expected,
                                 cfg.fixed_probs.size()));
            } else {
                const bool nonneg =
                    std::all_of(cfg.fixed_probs.begin(), cfg.fixed_probs.end(), [](double v) { return v >= 0.0; });
                const double sum = std::accumulate(cfg.fixed_probs.begin(), cfg.fixed_probs.end(), 0.0);
                if (!nonneg || std::abs(sum - 1.0) > 1e-9) {
                    fail("fixed_probs must be non-negative and sum to 1 within 1e-9");
                }
            }
        }
        if (cfg.forecaster_kind == ForecasterKind::remote && cfg.endpoint.empty()) {
            fail("remote forecaster requires an endpoint");
        }
    }
    return out;
}

void require_valid(const LevelConfig& cfg)
{
    auto violations = validate_config(cfg);
    if (!violations.empty()) {
        throw InvalidConfig(std::move(violations));
    }
}

namespace {

json to_json(const LevelConfig& cfg)
{
    json j;
    j["level"] = std::string(to_string(cfg.level));
    j["n_agents"] = cfg.n_agents;
    j["capacity"] = cfg.capacity;
    j["rounds"] = cfg.rounds;
    j["warmup"] = cfg.warmup;
    j["seeds"] = cfg.seeds;
    j["history_window"] = cfg.history_window;
    j["temperature"] = cfg.temperature;
    j["adaptation_step"] = cfg.adaptation_step;
    j["adapt_rule"] = std::string(to_string(cfg.adapt_rule));
    j["conch_duration"] = cfg.conch_duration;
    j["conch_max"] = cfg.conch_max;
    j["forecaster_kind"] = std::string(to_string(cfg.forecaster_kind));
    j["p_init_mode"] = std::string(to_string(cfg.p_init_mode));
    j["empirical_smoothing"] = cfg.empirical_smoothing;
    j["fixed_probs"] = cfg.fixed_probs;
    j["endpoint"] = cfg.endpoint;
    j["model_ids"] = cfg.model_ids;
    j["loyalty_gain"] = cfg.loyalty_gain;
    j["loyalty_loss"] = cfg.loyalty_loss;
    j["defection_threshold"] = cfg.defection_threshold;
    j["defection_enabled"] = cfg.defection_enabled;
    j["singleton_distance"] = cfg.singleton_distance;
    return j;
}

template <typename T>
void read(const json& j, const char* key, T& out)
{
    if (auto it = j.find(key); it != j.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception& e) {
            throw InvalidConfig(fmt::format("field '{}': {}", key, e.what()));
        }
    }
}

template <typename Enum, typename Parser>
void read_enum(const json& j, const char* key, Enum& out, Parser parse)
{
    std::string text;
    read(j, key, text);
    if (j.contains(key)) {
        try {
            out = parse(text);
        } catch (const InvalidArgument& e) {
            throw InvalidConfig(fmt::format("field '{}': {}", key, e.what()));
        }
    }
}

} // namespace

LevelConfig parse_config(std::string_view json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InvalidConfig(fmt::format("config is not valid JSON: {}", e.what()));
    }
    if (!j.is_object()) {
        throw InvalidConfig("config must be a JSON object");
    }

    const json known = to_json(LevelConfig{});
    std::vector<std::string> unknown;
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) {
            unknown.push_back(fmt::format("unknown key '{}'", key));
        }
    }
    if (!unknown.empty()) {
        throw InvalidConfig(std::move(unknown));
    }

    Level level = Level::L4;
    read_enum(j, "level", level, parse_level);
    LevelConfig base;
    read(j, "n_agents", base.n_agents);
    read(j, "capacity", base.capacity);
    LevelConfig cfg = default_config(level, base.n_agents, base.capacity);

    read(j, "rounds", cfg.rounds);
    read(j, "warmup", cfg.warmup);
    read(j, "seeds", cfg.seeds);
    read(j, "history_window", cfg.history_window);
    read(j, "temperature", cfg.temperature);
    read(j, "adaptation_step", cfg.adaptation_step);
    read_enum(j, "adapt_rule", cfg.adapt_rule, parse_adapt_rule);
    read(j, "conch_duration", cfg.conch_duration);
    read(j, "conch_max", cfg.conch_max);
    read_enum(j, "forecaster_kind", cfg.forecaster_kind, parse_forecaster_kind);
    read_enum(j, "p_init_mode", cfg.p_init_mode, parse_p_init_mode);
    read(j, "empirical_smoothing", cfg.empirical_smoothing);
    read(j, "fixed_probs", cfg.fixed_probs);
    read(j, "endpoint", cfg.endpoint);
    read(j, "model_ids", cfg.model_ids);
    read(j, "loyalty_gain", cfg.loyalty_gain);
    read(j, "loyalty_loss", cfg.loyalty_loss);
    read(j, "defection_threshold", cfg.defection_threshold);
    read(j, "defection_enabled", cfg.defection_enabled);
    read(j, "singleton_distance", cfg.singleton_distance);
    return cfg;
}

std::string serialize_config(const LevelConfig& cfg)
{
    return to_json(cfg).dump(2) + "\n";
}

LevelConfig load_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidConfig(fmt::format("cannot open config file '{}'", path));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

} // namespace scarcity
