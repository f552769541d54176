#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "scarcity/analytics.hpp"
#include "scarcity/error.hpp"
#include "scarcity/harness.hpp"
#include "scarcity/remote.hpp"
#include "scarcity/stats.hpp"

namespace scarcity::harness {

namespace {

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        if (!item.empty()) {
            parts.push_back(item);
        }
    }
    return parts;
}

template <typename T>
T parse_number(const std::string& text, const char* flag)
{
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw UsageError(fmt::format("{}: '{}' is not a valid number", flag, text));
    }
    return value;
}

double parse_real(const std::string& text, const char* flag)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) {
            throw UsageError("");
        }
        return v;
    } catch (const std::exception&) {
        throw UsageError(fmt::format("{}: '{}' is not a valid number", flag, text));
    }
}

std::vector<Level> parse_levels(const std::string& text)
{
    std::vector<Level> out;
    for (const auto& part : split(text, ',')) {
        try {
            out.push_back(parse_level(part));
        } catch (const InvalidArgument& e) {
            throw UsageError(fmt::format("--level: {}", e.what()));
        }
    }
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text)
{
    if (text.find(',') == std::string::npos) {
        const auto count = parse_number<std::size_t>(text, "--seeds");
        if (count == 0) {
            throw UsageError("--seeds: need at least one seed");
        }
        return default_seeds(count);
    }
    std::vector<std::uint64_t> seeds;
    for (const auto& part : split(text, ',')) {
        seeds.push_back(parse_number<std::uint64_t>(part, "--seeds"));
    }
    return seeds;
}

std::vector<double> parse_reals(const std::string& text, const char* flag)
{
    std::vector<double> out;
    for (const auto& part : split(text, ',')) {
        out.push_back(parse_real(part, flag));
    }
    return out;
}

struct RunOptions {
    std::string config;
    std::string level;
    std::string n;
    std::string capacity;
    std::string capacity_range;
    std::string seeds;
    std::string rounds;
    std::string warmup;
    std::string forecaster;
    std::string endpoint;
    std::string p_init;
    std::string out;
    bool trace = false;
    std::string conch_max;
    std::string conch_duration;
    std::string adapt_rule;
    std::string adapt_step;
    std::string smoothing;
    std::string history_window;
    std::string temperature;
    bool no_defection = false;
    std::string workers;
};

void add_run_options(CLI::App* cmd, RunOptions& o)
{
    cmd->add_option("--config", o.config, "JSON config file (LevelConfig fields)");
    cmd->add_option("--level", o.level, "Levels, e.g. 5 or 1,4,5");
    cmd->add_option("--n", o.n, "Population size(s), e.g. 7 or 7,11,15");
    cmd->add_option("--capacity", o.capacity, "Single capacity C");
    cmd->add_option("--capacity-range", o.capacity_range, "Inclusive capacity range lo:hi");
    cmd->add_option("--seeds", o.seeds, "Seed count (seeds 1..k) or explicit comma list");
    cmd->add_option("--rounds", o.rounds, "Rounds per episode");
    cmd->add_option("--warmup", o.warmup, "Warm-up rounds excluded from metrics");
    cmd->add_option("--forecaster", o.forecaster, "uniform | fixed | empirical | remote");
    cmd->add_option("--endpoint", o.endpoint, "Remote forecaster host:port");
    cmd->add_option("--p-init", o.p_init, "spectrum | random | all_one (adaptive levels)");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_flag("--trace", o.trace, "Write per-round JSONL traces");
    cmd->add_option("--conch-max", o.conch_max, "Maximum tribal influence");
    cmd->add_option("--conch-duration", o.conch_duration, "Rounds to reach full tribal influence");
    cmd->add_option("--adapt-rule", o.adapt_rule, "perturb-on-loss | always-perturb");
    cmd->add_option("--adapt-step", o.adapt_step, "Perturbation half-width");
    cmd->add_option("--smoothing", o.smoothing, "Empirical forecaster smoothing");
    cmd->add_option("--history-window", o.history_window, "Demand history length");
    cmd->add_option("--temperature", o.temperature, "Forecaster temperature");
    cmd->add_flag("--no-defection", o.no_defection, "Disable tribal defection");
    cmd->add_option("--workers", o.workers, "Worker threads (default: hardware)");
}

SweepPlan build_plan(const RunOptions& o, bool single_cell)
{
    SweepPlan plan;
    try {
        plan.base = o.config.empty() ? LevelConfig{} : load_config_file(o.config);
    } catch (const InvalidConfig& e) {
        throw UsageError(e.what());
    }
    auto& b = plan.base;
    plan.seeds = b.seeds;
    if (!o.config.empty()) {
        plan.levels = {b.level};
        plan.n_values = {b.n_agents};
        plan.capacity_range = {b.capacity, b.capacity};
        plan.p_init_override = b.p_init_mode;
    } else {
        plan.levels = {Level::L1, Level::L2, Level::L3, Level::L4, Level::L5};
    }
    if (!o.level.empty()) {
        plan.levels = parse_levels(o.level);
    }
    if (!o.n.empty()) {
        plan.n_values.clear();
        for (const auto& part : split(o.n, ',')) {
            plan.n_values.push_back(parse_number<int>(part, "--n"));
        }
    }
    if (!o.capacity.empty() && !o.capacity_range.empty()) {
        throw UsageError("--capacity and --capacity-range are mutually exclusive");
    }
    if (!o.capacity.empty()) {
        const int c = parse_number<int>(o.capacity, "--capacity");
        plan.capacity_range = {c, c};
    }
    if (!o.capacity_range.empty()) {
        const auto colon = o.capacity_range.find(':');
        if (colon == std::string::npos) {
            throw UsageError("--capacity-range must be lo:hi");
        }
        const int lo = parse_number<int>(o.capacity_range.substr(0, colon), "--capacity-range");
        const int hi = parse_number<int>(o.capacity_range.substr(colon + 1), "--capacity-range");
        if (lo > hi) {
            throw UsageError("--capacity-range: lo must not exceed hi");
        }
        plan.capacity_range = {lo, hi};
    }
    if (!o.seeds.empty()) {
        plan.seeds = parse_seeds(o.seeds);
    }
    b.seeds = plan.seeds;
    if (!o.rounds.empty()) {
        b.rounds = parse_number<int>(o.rounds, "--rounds");
    }
    if (!o.warmup.empty()) {
        b.warmup = parse_number<int>(o.warmup, "--warmup");
    }
    try {
        if (!o.forecaster.empty()) {
            b.forecaster_kind = parse_forecaster_kind(o.forecaster);
        }
        if (!o.p_init.empty()) {
            plan.p_init_override = parse_p_init_mode(o.p_init);
        }
        if (!o.adapt_rule.empty()) {
            b.adapt_rule = parse_adapt_rule(o.adapt_rule);
        }
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    if (!o.endpoint.empty()) {
        b.endpoint = o.endpoint;
    } else if (b.endpoint.empty()) {
        if (const char* env = std::getenv(forecast::kEndpointEnv)) {
            b.endpoint = env;
        }
    }
    if (!o.conch_max.empty()) {
        b.conch_max = parse_real(o.conch_max, "--conch-max");
    }
    if (!o.conch_duration.empty()) {
        b.conch_duration = parse_number<int>(o.conch_duration, "--conch-duration");
    }
    if (!o.adapt_step.empty()) {
        b.adaptation_step = parse_real(o.adapt_step, "--adapt-step");
    }
    if (!o.smoothing.empty()) {
        b.empirical_smoothing = parse_real(o.smoothing, "--smoothing");
    }
    if (!o.history_window.empty()) {
        b.history_window = parse_number<int>(o.history_window, "--history-window");
    }
    if (!o.temperature.empty()) {
        b.temperature = parse_real(o.temperature, "--temperature");
    }
    if (o.no_defection) {
        b.defection_enabled = false;
    }
    if (!o.workers.empty()) {
        plan.workers = parse_number<unsigned>(o.workers, "--workers");
    }
    plan.out_dir = o.out;
    plan.trace = o.trace;

    if (single_cell) {
        if (plan.levels.size() != 1 || plan.n_values.size() != 1 || !plan.capacity_range ||
            plan.capacity_range->first != plan.capacity_range->second) {
            throw UsageError("run needs exactly one --level, one --n and one --capacity");
        }
    }
    return plan;
}

} // namespace

Command parse_cli(const std::vector<std::string>& argv)
{
    CLI::App app{"Forecaster-driven agents competing for a finite shared resource", "scarcity"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    RunOptions run_opts;
    RunOptions sweep_opts;
    auto* run = app.add_subcommand("run", "Run one (level, N, C) cell over the seed list");
    add_run_options(run, run_opts);
    auto* sweep = app.add_subcommand("sweep", "Capacity sweep across levels and population sizes");
    add_run_options(sweep, sweep_opts);

    AnalyticCommand analytic;
    std::string q_text;
    std::string cap_text;
    auto* an = app.add_subcommand("analytic", "Closed-form overload baselines");
    an->add_option("--n", analytic.n, "Population size");
    an->add_option("--q", q_text, "Access probability (default C/N)");
    an->add_option("--capacity", cap_text, "Capacity (default: all 1..N-1 as a table)");
    an->add_option("--method", analytic.method, "binomial | poisson | gaussian | null-scan | table");
    an->add_option("--out", analytic.out, "Write CSV here instead of stdout");

    TtestCommand ttest;
    std::string xs_text;
    std::string ys_text;
    std::string a_text = "L5";
    std::string b_text = "L4";
    std::string tcap_text;
    auto* tt = app.add_subcommand("ttest", "Paired per-seed t-test");
    tt->add_option("--xs", xs_text, "Comma-separated first sample");
    tt->add_option("--ys", ys_text, "Comma-separated second sample");
    tt->add_option("--episodes", ttest.episodes_file, "episodes.csv from a sweep");
    tt->add_option("--a", a_text, "Level of the first sample (with --episodes)");
    tt->add_option("--b", b_text, "Level of the second sample (with --episodes)");
    tt->add_option("--n", ttest.n, "Population size (with --episodes)");
    tt->add_option("--capacity", tcap_text, "Capacity (with --episodes; default all)");

    ServeCheckCommand check;
    auto* sc = app.add_subcommand("serve-check", "Ping the remote forecaster");
    sc->add_option("--endpoint", check.endpoint, "host:port (default $SCARCITY_LLM_ENDPOINT)");
    sc->add_option("--model", check.model, "Model id to probe");
    sc->add_option("--n", check.n, "n_max for the probe");

    std::vector<const char*> raw;
    raw.reserve(argv.size() + 1);
    if (argv.empty()) {
        raw.push_back("scarcity");
    }
    for (const auto& a : argv) {
        raw.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(raw.size()), raw.data());
    } catch (const CLI::CallForHelp&) {
        return HelpCommand{app.help()};
    } catch (const CLI::CallForAllHelp&) {
        return HelpCommand{app.help("", CLI::AppFormatMode::All)};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    if (run->parsed()) {
        return RunCommand{build_plan(run_opts, true), true};
    }
    if (sweep->parsed()) {
        return RunCommand{build_plan(sweep_opts, false), false};
    }
    if (an->parsed()) {
        if (!q_text.empty()) {
            analytic.q = parse_real(q_text, "--q");
        }
        if (!cap_text.empty()) {
            analytic.capacity = parse_number<int>(cap_text, "--capacity");
        }
        return analytic;
    }
    if (tt->parsed()) {
        if (ttest.episodes_file.empty() == (xs_text.empty() && ys_text.empty())) {
            throw UsageError("ttest needs either --xs/--ys or --episodes");
        }
        ttest.xs = parse_reals(xs_text, "--xs");
        ttest.ys = parse_reals(ys_text, "--ys");
        try {
            ttest.a = parse_level(a_text);
            ttest.b = parse_level(b_text);
        } catch (const InvalidArgument& e) {
            throw UsageError(e.what());
        }
        if (!tcap_text.empty()) {
            ttest.capacity = parse_number<int>(tcap_text, "--capacity");
        }
        return ttest;
    }
    if (check.endpoint.empty()) {
        if (const char* env = std::getenv(forecast::kEndpointEnv)) {
            check.endpoint = env;
        }
    }
    if (check.endpoint.empty()) {
        throw UsageError(fmt::format("serve-check needs --endpoint or ${}", forecast::kEndpointEnv));
    }
    return check;
}

namespace {

int run_plan(const RunCommand& cmd)
{
    const auto summary = run_sweep(cmd.plan);
    std::cout << fmt::format("{:<6} {:>3} {:>3} {:>7} {:>9} {:>8} {:>10}  {}\n", "level", "N", "C", "C/N", "overload",
                             "se", "variance", "paired(L5-L4)");
    for (const auto& r : summary.rows) {
        std::string paired;
        if (r.paired) {
            paired = r.paired->note.empty()
                         ? fmt::format("d={:+.1f}pp t={:.2f} p={:.3g}", r.paired->delta_pp, r.paired->t_stat,
                                       r.paired->p_value)
                         : fmt::format("d={:+.1f}pp ({})", r.paired->delta_pp, r.paired->note);
        }
        std::cout << fmt::format("{:<6} {:>3} {:>3} {:>7.3f} {:>9.4f} {:>8.4f} {:>10.4f}  {}\n", level_label(r.level),
                                 r.n, r.capacity, r.c_over_n, r.overload.mean, r.overload.se, r.demand_variance.mean,
                                 paired);
    }
    for (const auto& f : summary.failures) {
        std::cerr << "failed: " << f << "\n";
    }
    if (!summary.partial()) {
        return kExitOk;
    }
    const bool any_ok = std::any_of(summary.rows.begin(), summary.rows.end(),
                                    [](const SummaryRow& r) { return r.seeds_ok > 0; });
    return (summary.remote_unavailable && !any_ok) ? kExitRemoteUnavailable : kExitPartial;
}

int run_analytic(const AnalyticCommand& cmd)
{
    std::string out;
    if (cmd.method == "table") {
        out = analytics::analytic_csv(analytics::level1_table(cmd.n));
    } else if (cmd.method == "null-scan") {
        RngStream unused(0, {StreamRole::PInit, 0});
        const auto p = initial_p_spectrum(cmd.n, PInitMode::spectrum, unused);
        out = "capacity,p_llm,overload,mean,variance\n";
        const auto caps = cmd.capacity ? std::vector<int>{*cmd.capacity} : SweepPlan{}.capacities(cmd.n);
        for (int c : caps) {
            for (const auto& pt : analytics::null_level_scan(p, c, 101)) {
                out += fmt::format("{},{:.4g},{:.12g},{:.12g},{:.12g}\n", c, pt.p_llm_value, pt.overload, pt.mean,
                                   pt.variance);
            }
        }
    } else {
        if (!cmd.capacity) {
            throw UsageError("analytic --method " + cmd.method + " needs --capacity (or use --method table)");
        }
        const int c = *cmd.capacity;
        const double q = cmd.q.value_or(static_cast<double>(c) / static_cast<double>(cmd.n));
        double value = 0.0;
        if (cmd.method == "binomial") {
            value = analytics::binomial_overload(cmd.n, c, q);
        } else if (cmd.method == "poisson") {
            const std::vector<double> ps(static_cast<std::size_t>(cmd.n), q);
            value = analytics::overload_from_pmf(analytics::poisson_binomial_pmf(ps), c);
        } else if (cmd.method == "gaussian") {
            value = analytics::gaussian_overload(cmd.n * q, std::sqrt(cmd.n * q * (1.0 - q)), c);
        } else {
            throw UsageError("unknown --method " + cmd.method);
        }
        out = fmt::format("{:.12g}\n", value);
    }
    if (cmd.out.empty()) {
        std::cout << out;
    } else {
        std::ofstream(cmd.out, std::ios::binary | std::ios::trunc) << out;
    }
    return kExitOk;
}

std::pair<std::vector<double>, std::vector<double>> episode_samples(const TtestCommand& cmd, int capacity)
{
    std::ifstream in(cmd.episodes_file);
    if (!in) {
        throw UsageError("cannot open " + cmd.episodes_file);
    }
    std::string line;
    std::getline(in, line); // header
    std::map<std::uint64_t, double> a;
    std::map<std::uint64_t, double> b;
    while (std::getline(in, line)) {
        std::vector<std::string> cols;
        std::string cell;
        std::istringstream row(line);
        while (std::getline(row, cell, ',')) {
            cols.push_back(cell);
        }
        if (cols.size() < 6 || cols[4] != "ok") {
            continue;
        }
        if (std::stoi(cols[1]) != cmd.n || std::stoi(cols[2]) != capacity) {
            continue;
        }
        const Level level = parse_level(cols[0]);
        const auto seed = std::stoull(cols[3]);
        const double rate = std::stod(cols[5]);
        if (level == cmd.a) {
            a[seed] = rate;
        } else if (level == cmd.b) {
            b[seed] = rate;
        }
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [seed, rate] : a) {
        if (auto it = b.find(seed); it != b.end()) {
            xs.push_back(rate);
            ys.push_back(it->second);
        }
    }
    return {xs, ys};
}

void print_ttest(const std::string& tag, std::span<const double> xs, std::span<const double> ys, bool percent)
{
    try {
        const auto r = stats::paired_t(xs, ys);
        const double scale = percent ? 100.0 : 1.0;
        std::cout << fmt::format("{}mean_diff={:.6g} se={:.6g} t={:.6g} dof={} p={:.6g}\n", tag, scale * r.mean_diff,
                                 scale * r.se_diff, r.t_stat, r.dof, r.p_value);
    } catch (const stats::DegenerateTest& e) {
        std::cout << tag << "degenerate: " << e.what() << "\n";
    }
}

int run_ttest(const TtestCommand& cmd)
{
    if (cmd.episodes_file.empty()) {
        print_ttest("", cmd.xs, cmd.ys, false);
        return kExitOk;
    }
    std::vector<int> caps;
    if (cmd.capacity) {
        caps.push_back(*cmd.capacity);
    } else {
        caps = SweepPlan{}.capacities(cmd.n);
    }
    for (int c : caps) {
        const auto [xs, ys] = episode_samples(cmd, c);
        if (xs.size() < 2) {
            continue;
        }
        print_ttest(fmt::format("{}-{} N={} C={} (pp): ", to_string(cmd.a), to_string(cmd.b), cmd.n, c), xs, ys,
                    true);
    }
    return kExitOk;
}

int run_serve_check(const ServeCheckCommand& cmd)
{
    try {
        forecast::RemoteClient client(forecast::parse_endpoint(cmd.endpoint), 10000);
        const auto response = client.exchange({std::nullopt, {0}, cmd.n, cmd.model, 1.0});
        if (response.error) {
            std::cerr << "server error: " << *response.error << "\n";
            return kExitRemoteUnavailable;
        }
        const auto probs = forecast::renormalize(response.probs, cmd.n);
        std::cout << fmt::format("ok endpoint={} model={} outcomes={} latency_ms={:.1f}\n", cmd.endpoint,
                                 response.model.empty() ? cmd.model : response.model, probs.size(),
                                 response.latency_ms);
        return kExitOk;
    } catch (const ForecastUnavailable& e) {
        std::cerr << e.what() << "\n";
        return kExitRemoteUnavailable;
    } catch (const InvalidArgument& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }
}

} // namespace

int run_cli(const std::vector<std::string>& argv)
{
    try {
        const Command cmd = parse_cli(argv);
        if (const auto* help = std::get_if<HelpCommand>(&cmd)) {
            std::cout << help->text;
            return kExitOk;
        }
        if (const auto* r = std::get_if<RunCommand>(&cmd)) {
            return run_plan(*r);
        }
        if (const auto* a = std::get_if<AnalyticCommand>(&cmd)) {
            return run_analytic(*a);
        }
        if (const auto* t = std::get_if<TtestCommand>(&cmd)) {
            return run_ttest(*t);
        }
        return run_serve_check(std::get<ServeCheckCommand>(cmd));
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidConfig& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ForecastUnavailable& e) {
        std::cerr << e.what() << "\n";
        return kExitRemoteUnavailable;
    }
}

} // namespace scarcity::harness
