#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scarcity/core.hpp"

namespace scarcity::analytics {

/// Probability mass over demand 0..N.
struct Pmf {
    std::vector<double> values;

    int n() const noexcept { return static_cast<int>(values.size()) - 1; }
    double mean() const;
    double variance() const;
};

/// P(A > C) for A ~ Binomial(n, q), summed term by term in ascending k.
double binomial_overload(int n, int capacity, double q);

/// Exact pmf of a sum of independent Bernoulli(p_i) by sequential convolution.
Pmf poisson_binomial_pmf(std::span<const double> ps);

/// Tail mass above capacity.
double overload_from_pmf(const Pmf& pmf, int capacity);

/// Standard normal CDF.
double normal_cdf(double z);

/// 1 - Phi((C + 0.5 - mu) / sigma).
double gaussian_overload(double mu, double sigma, int capacity);

/// Sample variance (n-1 denominator) of demand over rounds [warmup, end).
double demand_variance(const std::vector<RoundRecord>& records, int warmup);

/// One overload curve: capacity-to-population ratio against overload.
struct CurvePoint {
    double c_over_n = 0.0;
    double overload = 0.0;
};
using Curve = std::vector<CurvePoint>;

/// C*/N where (upper - lower) changes sign, linearly interpolated; nullopt if it never does.
/// Defaults compare L4 against L1.
std::optional<double> crossover_estimate(const std::map<Level, Curve>& curves, Level upper = Level::L4,
                                         Level lower = Level::L1);

/// Static analytic fragment of the Null level: with a common forecast value x broadcast to every
/// agent, agent i accesses with probability p_i*x + (1-p_i)(1-x); the demand is Poisson-binomial.
struct NullScanPoint {
    double p_llm_value = 0.0;
    double overload = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};
std::vector<NullScanPoint> null_level_scan(std::span<const double> dispositions, int capacity, int grid_points);

/// Row of the analytic CSV export: level,n,capacity,method,overload,mean,variance.
struct AnalyticRow {
    std::string level;
    int n = 0;
    int capacity = 0;
    std::string method;
    double overload = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

/// L1 at q = C/N for every capacity in [1, n-1], by the exact binomial sum, the
/// Poisson-binomial route, and the continuity-corrected Gaussian.
std::vector<AnalyticRow> level1_table(int n);

std::string analytic_csv(const std::vector<AnalyticRow>& rows);

} // namespace scarcity::analytics
