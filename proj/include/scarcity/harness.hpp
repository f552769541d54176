#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "scarcity/core.hpp"
#include "scarcity/engine.hpp"

namespace scarcity::harness {

/// Disposition classes by initial p, following the roster labels
/// (1.00, 0.83 follower; 0.67, 0.33 moderate; 0.50 agnostic; 0.17, 0.00 anti-follower).
enum class DispositionClass { follower = 0, moderate = 1, agnostic = 2, anti_follower = 3 };
inline constexpr std::size_t kDispositionClasses = 4;

DispositionClass classify(double initial_p);
std::string_view to_string(DispositionClass c);

struct SweepPlan {
    std::vector<Level> levels;
    std::vector<int> n_values{7};
    std::optional<std::pair<int, int>> capacity_range; // inclusive; default 1..N-1
    std::vector<std::uint64_t> seeds = default_seeds();
    LevelConfig base;                                   // numeric parameters and forecaster binding
    std::optional<PInitMode> p_init_override;           // applied to adaptive levels only
    std::filesystem::path out_dir;                      // empty: no files written
    bool trace = false;
    unsigned workers = 0;                               // 0: hardware concurrency

    std::vector<int> capacities(int n) const;
    /// The fully-resolved configuration of one cell.
    LevelConfig cell_config(Level level, int n, int capacity) const;
};

struct RateSummary {
    double mean = 0.0;
    double se = 0.0;
    int samples = 0; // seeds contributing
};

struct PairedColumns {
    double delta_pp = 0.0; // (this level - reference) * 100, mean over seeds
    double se_pp = 0.0;
    double t_stat = 0.0;
    int dof = 0;
    double p_value = 1.0;
    std::string note;      // set when the test is degenerate
};

struct EpisodeSummary {
    Level level = Level::L1;
    int n = 0;
    int capacity = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double overload_rate = 0.0;
    double demand_variance = 0.0;
    std::array<std::optional<double>, kDispositionClasses> win_rate; // class mean, absent if class empty
    std::vector<int> modal_partition;                                // post-warmup, L5 only
};

struct SummaryRow {
    Level level = Level::L1;
    std::string method = "simulated";
    int n = 0;
    int capacity = 0;
    double c_over_n = 0.0;
    RateSummary overload;
    std::array<std::optional<RateSummary>, kDispositionClasses> win_rate;
    RateSummary demand_variance;
    std::string modal_partition;           // most frequent per-seed modal partition, L5 only
    std::optional<double> share_cap_le_25; // fraction of seeds whose modal partition has sum s^2 <= 25
    std::optional<PairedColumns> paired;   // L5 vs L4 on shared seeds
    int seeds_ok = 0;
    int seeds_failed = 0;
};

struct MembershipTimeline {
    int n = 0;
    int capacity = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> labels;
    std::vector<std::vector<int>> rows; // [agent][round]
};

struct SweepSummary {
    std::vector<SummaryRow> rows;
    std::vector<EpisodeSummary> episodes;
    std::vector<MembershipTimeline> timelines;
    std::vector<std::string> failures;
    bool remote_unavailable = false;

    bool partial() const noexcept { return !failures.empty(); }
};

EpisodeSummary summarize_episode(const engine::EpisodeResult& result);

/// Executes every (level, N, C) cell for every seed and, when out_dir is set, writes
/// summary.csv, episodes.csv, analytic.csv (if L1 is swept), figures/ and cells/.
SweepSummary run_sweep(const SweepPlan& plan);

/// L1 exact overload rows (se = 0) for capacities 1..n-1.
SweepSummary analytic_ladder(int n);

enum class FigureKind { ladder, winrate, tribes };

/// Writes plot-ready CSV under `dir` and returns the path written (a directory for tribes).
std::filesystem::path emit_figure_data(const SweepSummary& summary, FigureKind kind, const std::filesystem::path& dir);

// Text renderings used by the writers; exposed for tests.
std::string summary_csv(const SweepSummary& summary);
std::string episodes_csv(const SweepSummary& summary);
std::string ladder_csv(const SweepSummary& summary);
std::string winrate_csv(const SweepSummary& summary);
std::string membership_csv(const MembershipTimeline& timeline);
std::string trace_jsonl(const engine::EpisodeResult& result);

// Command line.

struct RunCommand {
    SweepPlan plan;
    bool single_cell = false;
};
struct AnalyticCommand {
    int n = 7;
    std::optional<double> q;
    std::optional<int> capacity;
    std::string method = "binomial";
    std::string out;
};
struct TtestCommand {
    std::vector<double> xs;
    std::vector<double> ys;
    std::string episodes_file;
    Level a = Level::L5;
    Level b = Level::L4;
    int n = 7;
    std::optional<int> capacity;
};
struct ServeCheckCommand {
    std::string endpoint;
    std::string model = "gpt2";
    int n = 7;
};
struct HelpCommand {
    std::string text;
};

using Command = std::variant<RunCommand, AnalyticCommand, TtestCommand, ServeCheckCommand, HelpCommand>;

/// Throws UsageError for unknown flags or malformed values.
Command parse_cli(const std::vector<std::string>& argv);

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitPartial = 3;
inline constexpr int kExitRemoteUnavailable = 4;

/// Parses and executes; returns the process exit code.
int run_cli(const std::vector<std::string>& argv);

} // namespace scarcity::harness
