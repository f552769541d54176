#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scarcity/rng.hpp"

namespace scarcity {

/// The technology ladder. Each level toggles one of nature / nurture / culture.
enum class Level { L1 = 1, L2 = 2, L3 = 3, L4 = 4, L5 = 5 };

enum class PInitMode { spectrum, random, all_one };
enum class ForecasterKind { uniform, fixed, empirical, remote };
enum class AdaptRule { perturb_on_loss, always_perturb };

std::string_view to_string(Level level);
std::string_view to_string(PInitMode mode);
std::string_view to_string(ForecasterKind kind);
std::string_view to_string(AdaptRule rule);

/// Short ladder name: IID, Null, Diverse, FRD, LOTF.
std::string_view level_label(Level level);

Level parse_level(std::string_view s);
PInitMode parse_p_init_mode(std::string_view s);
ForecasterKind parse_forecaster_kind(std::string_view s);
AdaptRule parse_adapt_rule(std::string_view s);

/// Which variables a level switches on.
struct LevelToggles {
    bool diverse_forecasters; // nature
    bool adaptation;          // nurture
    bool tribes;              // culture
};
LevelToggles toggles(Level level);

std::vector<std::uint64_t> default_seeds(std::size_t count = 20);

struct LevelConfig {
    Level level = Level::L4;
    int n_agents = 7;
    int capacity = 2;
    int rounds = 500;
    int warmup = 50;
    std::vector<std::uint64_t> seeds = default_seeds();
    int history_window = 10;
    double temperature = 1.0;
    double adaptation_step = 0.05;
    AdaptRule adapt_rule = AdaptRule::perturb_on_loss;
    int conch_duration = 250;
    double conch_max = 0.80;
    ForecasterKind forecaster_kind = ForecasterKind::empirical;
    PInitMode p_init_mode = PInitMode::spectrum;

    // Forecaster parameters.
    double empirical_smoothing = 1.0;
    std::vector<double> fixed_probs;
    std::string endpoint;
    std::vector<std::string> model_ids;

    // Tribal layer (L5 only).
    double loyalty_gain = 1.0;
    double loyalty_loss = -1.0;
    double defection_threshold = 0.0;
    bool defection_enabled = true;
    double singleton_distance = 0.25;

    friend bool operator==(const LevelConfig&, const LevelConfig&) = default;
};

/// Defaults for a level, with the level-forced p_init_mode applied.
LevelConfig default_config(Level level, int n_agents, int capacity);

/// Every violated invariant, in a stable order. Empty means valid.
std::vector<std::string> validate_config(const LevelConfig& cfg);
/// Throws InvalidConfig listing all violations.
void require_valid(const LevelConfig& cfg);

/// Parse a JSON config document. Keys must be LevelConfig field names; unknown keys throw InvalidConfig.
/// Absent keys take the defaults of the document's level.
LevelConfig parse_config(std::string_view json_text);
std::string serialize_config(const LevelConfig& cfg);
LevelConfig load_config_file(const std::string& path);

/// Initial dispositions. spectrum: 1 - i/(N-1); all_one: 1; random: i.i.d. U[0,1] from `rng`.
std::vector<double> initial_p_spectrum(int n_agents, PInitMode mode, RngStream& rng);

/// Roster label for each agent and the model id a remote forecaster serves for it.
struct RosterEntry {
    std::string label;
    std::string model;
};
std::vector<RosterEntry> roster(int n_agents);

struct AgentState {
    int agent_id = 0;
    std::string model_id;
    double p = 1.0;
    double initial_p = 1.0;
    long score = 0;
    long wins = 0;
    std::optional<int> tribe_id;
    double loyalty = 0.0;

    /// Clamps to [0, 1].
    void set_p(double value);
};

struct RoundRecord {
    int round_index = 0;
    std::vector<std::uint8_t> actions;
    int demand = 0;
    bool overloaded = false;
    std::vector<int> rewards;
    std::vector<double> p_values;
    double conch_level = 0.0;
    std::vector<int> partition;  // sorted descending; empty outside L5
    std::vector<int> tribe_ids;  // per agent at decision time; empty outside L5
};

} // namespace scarcity
