#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "scarcity/analytics.hpp"
#include "scarcity/error.hpp"
#include "scarcity/harness.hpp"
#include "scarcity/stats.hpp"
#include "scarcity/tribes.hpp"

namespace scarcity::harness {

DispositionClass classify(double initial_p)
{
    if (initial_p >= 0.75) {
        return DispositionClass::follower;
    }
    if (initial_p <= 0.25) {
        return DispositionClass::anti_follower;
    }
    if (std::abs(initial_p - 0.5) <= 0.05) {
        return DispositionClass::agnostic;
    }
    return DispositionClass::moderate;
}

std::string_view to_string(DispositionClass c)
{
    switch (c) {
    case DispositionClass::follower: return "follower";
    case DispositionClass::moderate: return "moderate";
    case DispositionClass::agnostic: return "agnostic";
    case DispositionClass::anti_follower: return "anti-follower";
    }
    return "?";
}

std::vector<int> SweepPlan::capacities(int n) const
{
    int lo = 1;
    int hi = n - 1;
    if (capacity_range) {
        lo = capacity_range->first;
        hi = capacity_range->second;
    }
    std::vector<int> out;
    for (int c = lo; c <= hi; ++c) {
        out.push_back(c);
    }
    return out;
}

LevelConfig SweepPlan::cell_config(Level level, int n, int capacity) const
{
    LevelConfig cfg = base;
    cfg.level = level;
    cfg.n_agents = n;
    cfg.capacity = capacity;
    cfg.seeds = seeds;
    if (toggles(level).adaptation) {
        cfg.p_init_mode = p_init_override.value_or(base.p_init_mode == PInitMode::all_one ? PInitMode::spectrum
                                                                                          : base.p_init_mode);
    } else {
        cfg.p_init_mode = PInitMode::all_one;
    }
    if (!cfg.model_ids.empty() && static_cast<int>(cfg.model_ids.size()) != n) {
        cfg.model_ids.clear();
    }
    if (!toggles(level).diverse_forecasters && !cfg.model_ids.empty()) {
        cfg.model_ids.assign(static_cast<std::size_t>(n), cfg.model_ids.front());
    }
    return cfg;
}

namespace {

std::vector<int> modal_partition(const std::vector<RoundRecord>& records, int warmup)
{
    std::map<std::vector<int>, int> counts;
    for (std::size_t r = static_cast<std::size_t>(warmup); r < records.size(); ++r) {
        if (!records[r].partition.empty()) {
            ++counts[records[r].partition];
        }
    }
    std::vector<int> best;
    int best_count = 0;
    for (const auto& [partition, count] : counts) {
        if (count > best_count) {
            best = partition;
            best_count = count;
        }
    }
    return best;
}

std::string partition_label(const std::vector<int>& sizes)
{
    return fmt::format("{}", fmt::join(sizes, "+"));
}

RateSummary rate_of(const std::vector<double>& values)
{
    if (values.empty()) {
        return {};
    }
    if (values.size() == 1) {
        return {values.front(), 0.0, 1};
    }
    const auto agg = stats::aggregate(values);
    return {agg.mean, agg.se, static_cast<int>(values.size())};
}

struct Cell {
    Level level;
    int n;
    int capacity;
    LevelConfig config;
};

std::string cell_name(Level level, int n, int capacity)
{
    return fmt::format("{}_{}_{}", to_string(level), n, capacity);
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(fmt::format("cannot write '{}'", path.string()));
    }
    out << text;
}

} // namespace

EpisodeSummary summarize_episode(const engine::EpisodeResult& result)
{
    const auto& cfg = result.config;
    EpisodeSummary s;
    s.level = cfg.level;
    s.n = cfg.n_agents;
    s.capacity = cfg.capacity;
    s.seed = result.seed;
    s.ok = true;
    s.overload_rate = result.overload_rate;
    s.demand_variance = analytics::demand_variance(result.records, cfg.warmup);

    std::array<double, kDispositionClasses> sum{};
    std::array<int, kDispositionClasses> count{};
    for (std::size_t i = 0; i < result.initial_p.size(); ++i) {
        const auto c = static_cast<std::size_t>(classify(result.initial_p[i]));
        sum[c] += result.win_rate_per_agent[i];
        ++count[c];
    }
    for (std::size_t c = 0; c < kDispositionClasses; ++c) {
        if (count[c] > 0) {
            s.win_rate[c] = sum[c] / count[c];
        }
    }
    if (toggles(cfg.level).tribes) {
        s.modal_partition = modal_partition(result.records, cfg.warmup);
    }
    return s;
}

SweepSummary run_sweep(const SweepPlan& plan)
{
    SweepSummary summary;
    std::vector<Cell> cells;
    for (int n : plan.n_values) {
        for (Level level : plan.levels) {
            for (int c : plan.capacities(n)) {
                Cell cell{level, n, c, plan.cell_config(level, n, c)};
                require_valid(cell.config);
                cells.push_back(std::move(cell));
            }
        }
    }
    if (cells.empty()) {
        return summary;
    }

    const std::size_t n_seeds = plan.seeds.size();
    const std::size_t n_tasks = cells.size() * n_seeds;
    std::vector<EpisodeSummary> results(n_tasks);
    std::vector<std::optional<MembershipTimeline>> timelines(n_tasks);
    std::vector<std::string> traces(plan.trace ? n_tasks : 0);
    std::vector<bool> remote_failed(n_tasks, false);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= n_tasks) {
                return;
            }
            const Cell& cell = cells[task / n_seeds];
            const std::uint64_t seed = plan.seeds[task % n_seeds];
            EpisodeSummary& out = results[task];
            out.level = cell.level;
            out.n = cell.n;
            out.capacity = cell.capacity;
            out.seed = seed;
            try {
                const auto episode = engine::run_episode(cell.config, seed);
                out = summarize_episode(episode);
                if (toggles(cell.level).tribes) {
                    MembershipTimeline tl{cell.n, cell.capacity, seed, {}, tribes::membership_timeline(episode.records)};
                    for (const auto& a : episode.final_agents) {
                        tl.labels.push_back(a.model_id);
                    }
                    timelines[task] = std::move(tl);
                }
                if (plan.trace) {
                    traces[task] = trace_jsonl(episode);
                }
            } catch (const engine::EpisodeAborted& e) {
                out.error = e.what();
                remote_failed[task] = true;
                if (plan.trace) {
                    traces[task] = trace_jsonl(e.partial());
                }
            } catch (const ForecastUnavailable& e) {
                out.error = e.what();
                remote_failed[task] = true;
            } catch (const std::exception& e) {
                out.error = e.what();
            }
        }
    };
    unsigned n_workers = plan.workers != 0 ? plan.workers : std::max(1u, std::thread::hardware_concurrency());
    n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, n_tasks));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < n_workers; ++w) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }

    // Ordered reduce.
    std::map<std::tuple<int, int, int>, std::vector<double>> overload_by_cell;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        const Cell& cell = cells[ci];
        SummaryRow row;
        row.level = cell.level;
        row.n = cell.n;
        row.capacity = cell.capacity;
        row.c_over_n = static_cast<double>(cell.capacity) / static_cast<double>(cell.n);
        std::vector<double> overload;
        std::vector<double> variance;
        std::array<std::vector<double>, kDispositionClasses> wins;
        std::map<std::vector<int>, int> partitions;
        int cap_ok = 0;
        for (std::size_t si = 0; si < n_seeds; ++si) {
            const std::size_t task = ci * n_seeds + si;
            const auto& ep = results[task];
            summary.episodes.push_back(ep);
            if (!ep.ok) {
                ++row.seeds_failed;
                summary.failures.push_back(fmt::format("{} seed {}: {}", cell_name(cell.level, cell.n, cell.capacity),
                                                       ep.seed, ep.error));
                summary.remote_unavailable = summary.remote_unavailable || remote_failed[task];
                continue;
            }
            ++row.seeds_ok;
            overload.push_back(ep.overload_rate);
            variance.push_back(ep.demand_variance);
            for (std::size_t c = 0; c < kDispositionClasses; ++c) {
                if (ep.win_rate[c]) {
                    wins[c].push_back(*ep.win_rate[c]);
                }
            }
            if (!ep.modal_partition.empty()) {
                ++partitions[ep.modal_partition];
                cap_ok += tribes::partition_variance_cap(ep.modal_partition) <= 25 ? 1 : 0;
            }
            if (timelines[task]) {
                summary.timelines.push_back(std::move(*timelines[task]));
            }
        }
        row.overload = rate_of(overload);
        row.demand_variance = rate_of(variance);
        for (std::size_t c = 0; c < kDispositionClasses; ++c) {
            if (!wins[c].empty()) {
                row.win_rate[c] = rate_of(wins[c]);
            }
        }
        if (!partitions.empty()) {
            const auto best = std::max_element(partitions.begin(), partitions.end(),
                                               [](const auto& a, const auto& b) { return a.second < b.second; });
            row.modal_partition = partition_label(best->first);
            row.share_cap_le_25 = static_cast<double>(cap_ok) / static_cast<double>(row.seeds_ok);
        }
        if (row.seeds_failed == 0) {
            overload_by_cell[{static_cast<int>(cell.level), cell.n, cell.capacity}] = overload;
        }
        summary.rows.push_back(std::move(row));
    }

    for (auto& row : summary.rows) {
        if (row.level != Level::L5) {
            continue;
        }
        const auto l5 = overload_by_cell.find({static_cast<int>(Level::L5), row.n, row.capacity});
        const auto l4 = overload_by_cell.find({static_cast<int>(Level::L4), row.n, row.capacity});
        if (l5 == overload_by_cell.end() || l4 == overload_by_cell.end() || l5->second.size() < 2) {
            continue;
        }
        PairedColumns cols;
        cols.dof = static_cast<int>(l5->second.size()) - 1;
        try {
            const auto t = stats::paired_t(l5->second, l4->second);
            cols.delta_pp = 100.0 * t.mean_diff;
            cols.se_pp = 100.0 * t.se_diff;
            cols.t_stat = t.t_stat;
            cols.dof = t.dof;
            cols.p_value = t.p_value;
        } catch (const stats::DegenerateTest& e) {
            cols.note = e.reason() == stats::DegenerateTest::Reason::all_zero ? "identical" : "constant-offset";
            double diff = 0.0;
            for (std::size_t i = 0; i < l5->second.size(); ++i) {
                diff += l5->second[i] - l4->second[i];
            }
            cols.delta_pp = 100.0 * diff / static_cast<double>(l5->second.size());
            cols.t_stat = 0.0;
            cols.p_value = cols.note == "identical" ? 1.0 : 0.0;
        }
        row.paired = cols;
    }

    if (!plan.out_dir.empty()) {
        const auto& dir = plan.out_dir;
        write_file(dir / "summary.csv", summary_csv(summary));
        write_file(dir / "episodes.csv", episodes_csv(summary));
        std::vector<analytics::AnalyticRow> analytic;
        for (int n : plan.n_values) {
            if (std::find(plan.levels.begin(), plan.levels.end(), Level::L1) != plan.levels.end()) {
                auto rows = analytics::level1_table(n);
                analytic.insert(analytic.end(), rows.begin(), rows.end());
            }
        }
        if (!analytic.empty()) {
            write_file(dir / "analytic.csv", analytics::analytic_csv(analytic));
        }
        for (int n : plan.n_values) {
            SweepSummary per_n;
            for (const auto& row : summary.rows) {
                if (row.n == n) {
                    per_n.rows.push_back(row);
                }
            }
            for (const auto& tl : summary.timelines) {
                if (tl.n == n) {
                    per_n.timelines.push_back(tl);
                }
            }
            const auto fig_dir = dir / "figures" / fmt::format("n{}", n);
            emit_figure_data(per_n, FigureKind::ladder, fig_dir);
            if (std::any_of(per_n.rows.begin(), per_n.rows.end(),
                            [](const SummaryRow& r) { return r.seeds_ok > 0; })) {
                emit_figure_data(per_n, FigureKind::winrate, fig_dir);
            }
            if (!per_n.timelines.empty()) {
                emit_figure_data(per_n, FigureKind::tribes, fig_dir);
            }
        }
        if (plan.trace) {
            for (std::size_t task = 0; task < n_tasks; ++task) {
                if (traces[task].empty()) {
                    continue;
                }
                const Cell& cell = cells[task / n_seeds];
                const auto& ep = results[task];
                const auto name = ep.ok ? fmt::format("seed_{}.jsonl", ep.seed)
                                        : fmt::format("seed_{}.partial.jsonl", ep.seed);
                write_file(dir / "cells" / cell_name(cell.level, cell.n, cell.capacity) / name, traces[task]);
            }
        }
        if (summary.partial()) {
            std::string text;
            for (const auto& f : summary.failures) {
                text += f + "\n";
            }
            write_file(dir / "failures.txt", text);
        }
    }
    return summary;
}

SweepSummary analytic_ladder(int n)
{
    SweepSummary summary;
    for (int c = 1; c < n; ++c) {
        SummaryRow row;
        row.level = Level::L1;
        row.method = "analytic";
        row.n = n;
        row.capacity = c;
        row.c_over_n = static_cast<double>(c) / static_cast<double>(n);
        const double q = row.c_over_n;
        row.overload = {analytics::binomial_overload(n, c, q), 0.0, 0};
        row.demand_variance = {n * q * (1.0 - q), 0.0, 0};
        summary.rows.push_back(std::move(row));
    }
    return summary;
}

std::filesystem::path emit_figure_data(const SweepSummary& summary, FigureKind kind, const std::filesystem::path& dir)
{
    switch (kind) {
    case FigureKind::ladder: {
        if (summary.rows.empty()) {
            throw InvalidArgument("emit_figure_data: ladder needs summary rows");
        }
        const auto path = dir / "ladder.csv";
        write_file(path, ladder_csv(summary));
        return path;
    }
    case FigureKind::winrate: {
        if (summary.rows.empty()) {
            throw InvalidArgument("emit_figure_data: winrate needs summary rows");
        }
        const auto path = dir / "winrate.csv";
        write_file(path, winrate_csv(summary));
        return path;
    }
    case FigureKind::tribes: {
        if (summary.timelines.empty()) {
            throw InvalidArgument("emit_figure_data: tribes needs membership timelines (L5 cells)");
        }
        const auto sub = dir / "tribes";
        for (const auto& tl : summary.timelines) {
            write_file(sub / fmt::format("L5_{}_{}_seed_{}.csv", tl.n, tl.capacity, tl.seed), membership_csv(tl));
        }
        return sub;
    }
    }
    return dir;
}

} // namespace scarcity::harness
