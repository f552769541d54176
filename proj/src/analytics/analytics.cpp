#include "scarcity/analytics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "scarcity/error.hpp"
#include "scarcity/simd/kernels.hpp"

namespace scarcity::analytics {

double Pmf::mean() const
{
    long double m = 0.0L;
    for (std::size_t k = 0; k < values.size(); ++k) {
        m += static_cast<long double>(k) * values[k];
    }
    return static_cast<double>(m);
}

double Pmf::variance() const
{
    const long double m = mean();
    long double v = 0.0L;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const long double d = static_cast<long double>(k) - m;
        v += d * d * values[k];
    }
    return static_cast<double>(v);
}

double binomial_overload(int n, int capacity, double q)
{
    if (!(q >= 0.0 && q <= 1.0)) {
        throw InvalidArgument(fmt::format("binomial_overload: q = {} outside [0, 1]", q));
    }
    if (capacity < 1 || capacity >= n) {
        throw InvalidArgument(fmt::format("binomial_overload: need 1 <= C < n (got C={}, n={})", capacity, n));
    }
    const long double ql = q;
    const long double rl = 1.0L - ql;
    // choose(n, k) built incrementally up to k = C+1, then carried through the tail.
    long double choose = 1.0L;
    for (int k = 1; k <= capacity + 1; ++k) {
        choose = choose * static_cast<long double>(n - k + 1) / static_cast<long double>(k);
    }
    long double tail = 0.0L;
    for (int k = capacity + 1; k <= n; ++k) {
        tail += choose * std::pow(ql, k) * std::pow(rl, n - k);
        choose = choose * static_cast<long double>(n - k) / static_cast<long double>(k + 1);
    }
    return std::clamp(static_cast<double>(tail), 0.0, 1.0);
}

Pmf poisson_binomial_pmf(std::span<const double> ps)
{
    std::vector<double> pmf{1.0};
    for (double p : ps) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw InvalidArgument(fmt::format("poisson_binomial_pmf: p = {} outside [0, 1]", p));
        }
        pmf = simd::convolve_bernoulli(pmf, p);
    }
    return {std::move(pmf)};
}

double overload_from_pmf(const Pmf& pmf, int capacity)
{
    const int n = pmf.n();
    if (capacity < 0 || capacity > n) {
        throw InvalidArgument(fmt::format("overload_from_pmf: capacity {} outside [0, {}]", capacity, n));
    }
    long double tail = 0.0L;
    for (int k = capacity + 1; k <= n; ++k) {
        tail += pmf.values[static_cast<std::size_t>(k)];
    }
    return static_cast<double>(tail);
}

double normal_cdf(double z)
{
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double gaussian_overload(double mu, double sigma, int capacity)
{
    if (!(sigma > 0.0)) {
        throw InvalidArgument(fmt::format("gaussian_overload: sigma must be positive (got {})", sigma));
    }
    const double z = (static_cast<double>(capacity) + 0.5 - mu) / sigma;
    // Upper tail via erfc directly; 1 - Phi(z) would cancel to zero far out.
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double demand_variance(const std::vector<RoundRecord>& records, int warmup)
{
    if (warmup < 0 || records.size() < static_cast<std::size_t>(warmup) + 2) {
        throw InvalidArgument("demand_variance: need at least two post-warmup rounds");
    }
    const auto begin = records.begin() + warmup;
    const auto count = static_cast<long double>(records.end() - begin);
    long double sum = 0.0L;
    for (auto it = begin; it != records.end(); ++it) {
        sum += it->demand;
    }
    const long double mean = sum / count;
    long double ss = 0.0L;
    for (auto it = begin; it != records.end(); ++it) {
        const long double d = it->demand - mean;
        ss += d * d;
    }
    return static_cast<double>(ss / (count - 1.0L));
}

std::optional<double> crossover_estimate(const std::map<Level, Curve>& curves, Level upper, Level lower)
{
    const auto hi = curves.find(upper);
    const auto lo = curves.find(lower);
    if (hi == curves.end() || lo == curves.end()) {
        throw InvalidArgument("crossover_estimate: both curves must be present");
    }
    const Curve& a = hi->second;
    const Curve& b = lo->second;
    if (a.size() != b.size()) {
        throw InvalidArgument("crossover_estimate: curves must share the capacity grid");
    }
    std::vector<double> diff(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].c_over_n != b[k].c_over_n) {
            throw InvalidArgument("crossover_estimate: curves must share the capacity grid");
        }
        diff[k] = a[k].overload - b[k].overload;
    }
    for (std::size_t k = 0; k < diff.size(); ++k) {
        if (diff[k] == 0.0) {
            // A touch only counts when the sign differs on either side.
            const bool before = k > 0 && diff[k - 1] != 0.0;
            const bool after = k + 1 < diff.size() && diff[k + 1] != 0.0;
            if (before && after && (diff[k - 1] > 0.0) != (diff[k + 1] > 0.0)) {
                return a[k].c_over_n;
            }
            continue;
        }
        if (k + 1 < diff.size() && diff[k + 1] != 0.0 && (diff[k] > 0.0) != (diff[k + 1] > 0.0)) {
            const double frac = diff[k] / (diff[k] - diff[k + 1]);
            return a[k].c_over_n + frac * (a[k + 1].c_over_n - a[k].c_over_n);
        }
    }
    return std::nullopt;
}

std::vector<NullScanPoint> null_level_scan(std::span<const double> dispositions, int capacity, int grid_points)
{
    if (grid_points < 2) {
        throw InvalidArgument("null_level_scan: need at least two grid points");
    }
    const int n = static_cast<int>(dispositions.size());
    if (capacity < 0 || capacity > n) {
        throw InvalidArgument(fmt::format("null_level_scan: capacity {} outside [0, {}]", capacity, n));
    }
    std::vector<NullScanPoint> out;
    out.reserve(static_cast<std::size_t>(grid_points));
    std::vector<double> x(dispositions.size());
    std::vector<double> access(dispositions.size());
    for (int j = 0; j < grid_points; ++j) {
        const double value = static_cast<double>(j) / static_cast<double>(grid_points - 1);
        std::fill(x.begin(), x.end(), value);
        simd::disposition_filter(dispositions, x, access);
        const Pmf pmf = poisson_binomial_pmf(access);
        out.push_back({value, overload_from_pmf(pmf, capacity), pmf.mean(), pmf.variance()});
    }
    return out;
}

std::vector<AnalyticRow> level1_table(int n)
{
    if (n < 2) {
        throw InvalidArgument("level1_table: n must be >= 2");
    }
    std::vector<AnalyticRow> rows;
    for (int c = 1; c < n; ++c) {
        const double q = static_cast<double>(c) / static_cast<double>(n);
        const double mean = n * q;
        const double var = n * q * (1.0 - q);
        rows.push_back({"L1", n, c, "binomial", binomial_overload(n, c, q), mean, var});
        const std::vector<double> ps(static_cast<std::size_t>(n), q);
        const Pmf pmf = poisson_binomial_pmf(ps);
        rows.push_back({"L1", n, c, "poisson_binomial", overload_from_pmf(pmf, c), pmf.mean(), pmf.variance()});
        rows.push_back({"L1", n, c, "gaussian", gaussian_overload(mean, std::sqrt(var), c), mean, var});
    }
    return rows;
}

std::string analytic_csv(const std::vector<AnalyticRow>& rows)
{
    std::string out = "level,n,capacity,method,overload,mean,variance\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{:.12g},{:.12g},{:.12g}\n", r.level, r.n, r.capacity, r.method, r.overload,
                           r.mean, r.variance);
    }
    return out;
}

} // namespace scarcity::analytics
