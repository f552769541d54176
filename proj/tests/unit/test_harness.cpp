#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scarcity/analytics.hpp"
#include "scarcity/error.hpp"
#include "scarcity/harness.hpp"

using namespace scarcity;
using namespace scarcity::harness;
namespace fs = std::filesystem;

namespace {

Command parse(const std::string& line)
{
    std::vector<std::string> argv{"scarcity"};
    std::istringstream in(line);
    for (std::string tok; in >> tok;) {
        argv.push_back(tok);
    }
    return parse_cli(argv);
}

int run(const std::string& line)
{
    std::vector<std::string> argv{"scarcity"};
    std::istringstream in(line);
    for (std::string tok; in >> tok;) {
        argv.push_back(tok);
    }
    return run_cli(argv);
}

std::string capture_cli(const std::string& args, int* status = nullptr)
{
    const std::string cmd = std::string(SCARCITY_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) {
        out += buf.data();
    }
    const int rc = ::pclose(pipe);
    if (status != nullptr) {
        *status = WEXITSTATUS(rc);
    }
    return out;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

SweepPlan small_plan(std::vector<Level> levels, int rounds = 120)
{
    SweepPlan plan;
    plan.levels = std::move(levels);
    plan.seeds = default_seeds(4);
    plan.base.rounds = rounds;
    plan.base.warmup = 20;
    return plan;
}

} // namespace

TEST_CASE("disposition classes follow the roster labels")
{
    CHECK(classify(1.0) == DispositionClass::follower);
    CHECK(classify(5.0 / 6.0) == DispositionClass::follower);
    CHECK(classify(4.0 / 6.0) == DispositionClass::moderate);
    CHECK(classify(0.5) == DispositionClass::agnostic);
    CHECK(classify(2.0 / 6.0) == DispositionClass::moderate);
    CHECK(classify(1.0 / 6.0) == DispositionClass::anti_follower);
    CHECK(classify(0.0) == DispositionClass::anti_follower);
}

TEST_CASE("parse sweep command")
{
    const auto cmd = parse("sweep --level 1,4,5 --n 7 --capacity-range 1:6 --seeds 20");
    const auto& r = std::get<RunCommand>(cmd);
    CHECK_FALSE(r.single_cell);
    CHECK(r.plan.levels == std::vector<Level>{Level::L1, Level::L4, Level::L5});
    CHECK(r.plan.n_values == std::vector<int>{7});
    CHECK(r.plan.capacities(7) == std::vector<int>{1, 2, 3, 4, 5, 6});
    CHECK(r.plan.seeds.size() == 20);
    CHECK(r.plan.seeds == default_seeds(20));
    CHECK(r.plan.cell_config(Level::L4, 7, 3).seeds == r.plan.cell_config(Level::L5, 7, 3).seeds);
}

TEST_CASE("parse run command")
{
    const auto cmd = parse("run --level 5 --n 7 --capacity 2 --forecaster empirical");
    const auto& r = std::get<RunCommand>(cmd);
    CHECK(r.single_cell);
    CHECK(r.plan.levels == std::vector<Level>{Level::L5});
    CHECK(r.plan.capacities(7) == std::vector<int>{2});
    CHECK(r.plan.base.forecaster_kind == ForecasterKind::empirical);
}

TEST_CASE("parse numeric flags")
{
    const auto cmd = parse("sweep --level 4 --n 7,11 --seeds 3,9,27 --rounds 300 --warmup 30 --conch-max 0.5 "
                           "--conch-duration 100 --adapt-rule always-perturb --adapt-step 0.1 --p-init random");
    const auto& plan = std::get<RunCommand>(cmd).plan;
    CHECK(plan.n_values == std::vector<int>{7, 11});
    CHECK(plan.seeds == std::vector<std::uint64_t>{3, 9, 27});
    CHECK(plan.base.rounds == 300);
    CHECK(plan.base.warmup == 30);
    CHECK(plan.base.conch_max == 0.5);
    CHECK(plan.base.conch_duration == 100);
    CHECK(plan.base.adapt_rule == AdaptRule::always_perturb);
    CHECK(plan.base.adaptation_step == 0.1);
    CHECK(plan.cell_config(Level::L4, 7, 2).p_init_mode == PInitMode::random);
    CHECK(plan.cell_config(Level::L3, 7, 2).p_init_mode == PInitMode::all_one);
    CHECK(plan.capacities(11).size() == 10);
}

TEST_CASE("parse analytic command")
{
    const auto cmd = parse("analytic --n 7 --q 0.2857 --capacity 2");
    const auto& a = std::get<AnalyticCommand>(cmd);
    CHECK(a.n == 7);
    CHECK(a.q == 0.2857);
    CHECK(a.capacity == 2);
}

TEST_CASE("usage errors")
{
    CHECK_THROWS_AS(parse("sweep --level 4 --bogus 3"), UsageError);
    CHECK_THROWS_AS(parse("sweep --level 9"), UsageError);
    CHECK_THROWS_AS(parse("sweep --level 4 --capacity-range 5:2"), UsageError);
    CHECK_THROWS_AS(parse("run --level 4,5 --n 7 --capacity 2"), UsageError);
    CHECK_THROWS_AS(parse("sweep --level 4 --rounds abc"), UsageError);
    CHECK_THROWS_AS(parse("frobnicate"), UsageError);
    CHECK(run("sweep --level 4 --bogus 3") == kExitUsage);
    CHECK(run("sweep --level 4 --n 7 --capacity 7") == kExitUsage);
}

TEST_CASE("analytic subcommand prints the binomial tail")
{
    int status = -1;
    const auto out = capture_cli("analytic --n 7 --q 0.2857 --capacity 2", &status);
    CHECK(status == 0);
    CHECK(std::stod(out) == doctest::Approx(analytics::binomial_overload(7, 2, 0.2857)).epsilon(1e-11));
}

TEST_CASE("unknown flag exits nonzero from the binary")
{
    int status = -1;
    capture_cli("sweep --level 4 --what", &status);
    CHECK(status == kExitUsage);
}

TEST_CASE("ttest subcommand")
{
    int status = -1;
    const auto out = capture_cli("ttest --xs 1,2,3,4 --ys 0,0,0,0", &status);
    CHECK(status == 0);
    CHECK(out.find("3.87298") != std::string::npos);
}

TEST_CASE("L1 sweep agrees with the binomial tail")
{
    SweepPlan plan;
    plan.levels = {Level::L1};
    const auto summary = run_sweep(plan);
    REQUIRE(summary.rows.size() == 6);
    for (const auto& row : summary.rows) {
        const double exact = analytics::binomial_overload(7, row.capacity, row.capacity / 7.0);
        CAPTURE(row.capacity);
        CHECK(std::abs(row.overload.mean - exact) <= 3 * row.overload.se);
        CHECK(row.overload.samples == 20);
        CHECK(row.c_over_n == row.capacity / 7.0);
    }
}

TEST_CASE("L4 and L5 rows carry a paired test")
{
    SweepPlan plan;
    plan.levels = {Level::L4, Level::L5};
    plan.capacity_range = std::pair{2, 2};
    const auto summary = run_sweep(plan);
    REQUIRE(summary.rows.size() == 2);
    CHECK_FALSE(summary.rows[0].paired);
    REQUIRE(summary.rows[1].paired);
    CHECK(summary.rows[1].level == Level::L5);
    CHECK(summary.rows[1].paired->dof == 19);
    CHECK(summary.rows[1].share_cap_le_25);
    CHECK_FALSE(summary.rows[1].modal_partition.empty());
}

TEST_CASE("empty plan")
{
    SweepPlan plan;
    const auto summary = run_sweep(plan);
    CHECK(summary.rows.empty());
    CHECK(summary.episodes.empty());
    CHECK_FALSE(summary.partial());
}

TEST_CASE("row count is levels x N values x capacities")
{
    auto plan = small_plan({Level::L2, Level::L3, Level::L5}, 60);
    plan.n_values = {5, 7};
    const auto summary = run_sweep(plan);
    CHECK(summary.rows.size() == 3 * (4 + 6));
    CHECK(summary.episodes.size() == 3 * (4 + 6) * 4);
    CHECK(summary.timelines.size() == (4 + 6) * 4);
}

TEST_CASE("analytic ladder")
{
    const auto ladder = analytic_ladder(7);
    REQUIRE(ladder.rows.size() == 6);
    for (const auto& r : ladder.rows) {
        CHECK(r.method == "analytic");
        CHECK(r.overload.se == 0.0);
    }
    const auto dir = fresh_dir("scarcity_ladder_test");
    const auto path = emit_figure_data(ladder, FigureKind::ladder, dir);
    const auto text = slurp(path);
    CHECK(text.rfind("level,c_over_n,mean,se\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 7);
    CHECK(text.find("L1-exact,") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("winrate row format")
{
    SweepSummary summary;
    SummaryRow row;
    row.level = Level::L5;
    row.n = 7;
    row.capacity = 1;
    row.win_rate[static_cast<std::size_t>(DispositionClass::follower)] = RateSummary{0.842, 0.021, 20};
    summary.rows.push_back(row);
    CHECK(winrate_csv(summary) == "experiment,disposition,capacity,mean,se\nLOTF,follower,1,0.842,0.021\n");
}

TEST_CASE("figure data needs content")
{
    const auto dir = fresh_dir("scarcity_fig_empty");
    CHECK_THROWS_AS(emit_figure_data(SweepSummary{}, FigureKind::ladder, dir), InvalidArgument);
    CHECK_THROWS_AS(emit_figure_data(SweepSummary{}, FigureKind::tribes, dir), InvalidArgument);
}

TEST_CASE("no-defection membership matrix has constant rows")
{
    auto plan = small_plan({Level::L5});
    plan.capacity_range = std::pair{2, 2};
    plan.base.defection_enabled = false;
    const auto summary = run_sweep(plan);
    REQUIRE_FALSE(summary.timelines.empty());
    for (const auto& t : summary.timelines) {
        for (const auto& row : t.rows) {
            CHECK(std::count(row.begin(), row.end(), row.front()) == static_cast<long>(row.size()));
        }
    }
    const auto csv = membership_csv(summary.timelines.front());
    CHECK(csv.rfind("round,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 121);
}

TEST_CASE("sweep output tree is complete and reproducible")
{
    auto plan = small_plan({Level::L1, Level::L4, Level::L5});
    plan.trace = true;
    plan.out_dir = fresh_dir("scarcity_sweep_a");
    run_sweep(plan);
    auto again = plan;
    again.out_dir = fresh_dir("scarcity_sweep_b");
    again.workers = 1;
    run_sweep(again);

    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(plan.out_dir)) {
        if (e.is_regular_file()) {
            files.push_back(fs::relative(e.path(), plan.out_dir));
        }
    }
    std::sort(files.begin(), files.end());
    for (const char* expected : {"summary.csv", "episodes.csv", "analytic.csv", "figures/n7/ladder.csv",
                                 "figures/n7/winrate.csv", "cells/L5_7_3/seed_2.jsonl"}) {
        CHECK(std::find(files.begin(), files.end(), fs::path(expected)) != files.end());
    }
    CHECK(fs::exists(plan.out_dir / "figures/n7/tribes/L5_7_2_seed_1.csv"));
    for (const auto& f : files) {
        CAPTURE(f.string());
        CHECK(slurp(plan.out_dir / f) == slurp(again.out_dir / f));
    }
    std::size_t count_b = 0;
    for (const auto& e : fs::recursive_directory_iterator(again.out_dir)) {
        count_b += e.is_regular_file() ? 1 : 0;
    }
    CHECK(count_b == files.size());

    const auto trace = slurp(plan.out_dir / "cells/L4_7_2/seed_1.jsonl");
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 120);
    const auto first = nlohmann::json::parse(trace.substr(0, trace.find('\n')));
    CHECK(first.contains("actions"));
    CHECK(first.contains("demand"));
    CHECK(first.contains("rewards"));

    fs::remove_all(plan.out_dir);
    fs::remove_all(again.out_dir);
}

TEST_CASE("remote sweep without a server reports unavailability")
{
    const auto dir = fresh_dir("scarcity_remote_down");
    const int rc = run("sweep --level 4 --n 7 --capacity 2 --seeds 2 --rounds 20 --warmup 5 --forecaster remote "
                       "--endpoint 127.0.0.1:1 --out " + dir.string());
    CHECK(rc == kExitRemoteUnavailable);
    CHECK(fs::exists(dir / "failures.txt"));
    fs::remove_all(dir);
}
