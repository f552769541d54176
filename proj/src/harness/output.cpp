#include <fmt/format.h>
#include <json.hpp>

#include "scarcity/harness.hpp"

namespace scarcity::harness {

namespace {

std::string num(double v)
{
    return fmt::format("{:.10g}", v);
}

std::string fig(double v)
{
    return fmt::format("{:.6g}", v);
}

std::string opt_num(const std::optional<double>& v)
{
    return v ? num(*v) : std::string{};
}

std::string ladder_level(const SummaryRow& row)
{
    return row.method == "analytic" ? fmt::format("{}-exact", to_string(row.level)) : std::string(to_string(row.level));
}

} // namespace

std::string summary_csv(const SweepSummary& summary)
{
    std::string out =
        "level,label,method,n,capacity,c_over_n,seeds_ok,seeds_failed,overload_mean,overload_se,"
        "win_follower_mean,win_follower_se,win_moderate_mean,win_moderate_se,"
        "win_agnostic_mean,win_agnostic_se,win_anti_follower_mean,win_anti_follower_se,"
        "demand_variance_mean,demand_variance_se,modal_partition,share_cap_le_25,"
        "paired_reference,delta_pp,delta_se_pp,t_stat,dof,p_value,paired_note\n";
    for (const auto& r : summary.rows) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}", to_string(r.level), level_label(r.level), r.method, r.n,
                           r.capacity, num(r.c_over_n), r.seeds_ok, r.seeds_failed, num(r.overload.mean),
                           num(r.overload.se));
        for (const auto& w : r.win_rate) {
            out += w ? fmt::format(",{},{}", num(w->mean), num(w->se)) : std::string(",,");
        }
        out += fmt::format(",{},{},{},{}", num(r.demand_variance.mean), num(r.demand_variance.se), r.modal_partition,
                           opt_num(r.share_cap_le_25));
        if (r.paired) {
            const auto& p = *r.paired;
            out += fmt::format(",L4,{},{},{},{},{},{}", num(p.delta_pp), num(p.se_pp), num(p.t_stat), p.dof,
                               num(p.p_value), p.note);
        } else {
            out += ",,,,,,,";
        }
        out += '\n';
    }
    return out;
}

std::string episodes_csv(const SweepSummary& summary)
{
    std::string out = "level,n,capacity,seed,status,overload_rate,demand_variance,win_follower,win_moderate,"
                      "win_agnostic,win_anti_follower,modal_partition,error\n";
    for (const auto& e : summary.episodes) {
        out += fmt::format("{},{},{},{},{}", to_string(e.level), e.n, e.capacity, e.seed, e.ok ? "ok" : "failed");
        if (e.ok) {
            out += fmt::format(",{},{}", num(e.overload_rate), num(e.demand_variance));
            for (const auto& w : e.win_rate) {
                out += "," + opt_num(w);
            }
            std::string partition;
            for (std::size_t i = 0; i < e.modal_partition.size(); ++i) {
                partition += (i ? "+" : "") + std::to_string(e.modal_partition[i]);
            }
            out += "," + partition + ",";
        } else {
            std::string error = e.error;
            for (auto& ch : error) {
                if (ch == ',' || ch == '\n') {
                    ch = ';';
                }
            }
            out += ",,,,,,,," + error;
        }
        out += '\n';
    }
    return out;
}

std::string ladder_csv(const SweepSummary& summary)
{
    std::string out = "level,c_over_n,mean,se\n";
    for (const auto& r : summary.rows) {
        if (r.method != "analytic" && r.seeds_ok == 0) {
            continue;
        }
        out += fmt::format("{},{},{},{}\n", ladder_level(r), fig(r.c_over_n), fig(r.overload.mean), fig(r.overload.se));
    }
    return out;
}

std::string winrate_csv(const SweepSummary& summary)
{
    std::string out = "experiment,disposition,capacity,mean,se\n";
    for (const auto& r : summary.rows) {
        for (std::size_t c = 0; c < kDispositionClasses; ++c) {
            if (!r.win_rate[c]) {
                continue;
            }
            out += fmt::format("{},{},{},{},{}\n", level_label(r.level), to_string(static_cast<DispositionClass>(c)),
                               r.capacity, fig(r.win_rate[c]->mean), fig(r.win_rate[c]->se));
        }
    }
    return out;
}

std::string membership_csv(const MembershipTimeline& timeline)
{
    std::string out = "round";
    for (const auto& label : timeline.labels) {
        out += "," + label;
    }
    out += '\n';
    const std::size_t rounds = timeline.rows.empty() ? 0 : timeline.rows.front().size();
    for (std::size_t r = 0; r < rounds; ++r) {
        out += std::to_string(r);
        for (const auto& row : timeline.rows) {
            out += "," + std::to_string(row[r]);
        }
        out += '\n';
    }
    return out;
}

std::string trace_jsonl(const engine::EpisodeResult& result)
{
    std::string out;
    for (const auto& rec : result.records) {
        nlohmann::json j;
        j["round"] = rec.round_index;
        j["actions"] = rec.actions;
        j["demand"] = rec.demand;
        j["overloaded"] = rec.overloaded;
        j["rewards"] = rec.rewards;
        j["p_values"] = rec.p_values;
        j["conch_level"] = rec.conch_level;
        j["partition"] = rec.partition;
        j["tribe_ids"] = rec.tribe_ids;
        out += j.dump();
        out += '\n';
    }
    return out;
}

} // namespace scarcity::harness
