#include "scarcity/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace scarcity::stats {

SeedAggregate aggregate(std::span<const double> values)
{
    if (values.size() < 2) {
        throw InvalidArgument(fmt::format("aggregate: need at least two values (got {})", values.size()));
    }
    SeedAggregate out;
    out.values.assign(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    long double sum = 0.0L;
    for (double v : values) {
        sum += v;
    }
    const double mean = static_cast<double>(sum / n);
    long double ss = 0.0L;
    for (double v : values) {
        const long double d = v - static_cast<long double>(mean);
        ss += d * d;
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    out.mean = std::clamp(mean, *lo, *hi);
    out.se = std::sqrt(static_cast<double>(ss / (n - 1.0))) / std::sqrt(n);
    return out;
}

PairedTestResult paired_t(std::span<const double> xs, std::span<const double> ys)
{
    if (xs.size() != ys.size()) {
        throw InvalidArgument("paired_t: samples must have equal length");
    }
    if (xs.size() < 2) {
        throw InvalidArgument("paired_t: need at least two pairs");
    }
    std::vector<double> diffs(xs.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        diffs[i] = xs[i] - ys[i];
        scale = std::max(scale, std::abs(diffs[i]));
    }
    if (scale == 0.0) {
        throw DegenerateTest(DegenerateTest::Reason::all_zero, "paired_t: all differences zero");
    }
    const auto agg = aggregate(diffs);
    const double n = static_cast<double>(diffs.size());
    const double sd = agg.se * std::sqrt(n);
    // Differences equal up to rounding of the inputs are a constant offset, not noise.
    if (sd <= 1e-12 * scale) {
        throw DegenerateTest(DegenerateTest::Reason::constant_offset,
                             fmt::format("paired_t: zero variance, nonzero offset {}", agg.mean));
    }
    PairedTestResult out;
    out.mean_diff = agg.mean;
    out.se_diff = agg.se;
    out.t_stat = agg.mean / agg.se;
    out.dof = static_cast<int>(diffs.size()) - 1;
    out.p_value = student_t_two_sided(out.t_stat, out.dof);
    return out;
}

namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x)
{
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) {
            return h;
        }
    }
    throw Error(fmt::format("incomplete beta did not converge (a={}, b={}, x={})", a, b, x));
}

} // namespace

double incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0 && b > 0.0)) {
        throw InvalidArgument("incomplete_beta: shape parameters must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw InvalidArgument(fmt::format("incomplete_beta: x = {} outside [0, 1]", x));
    }
    if (x == 0.0 || x == 1.0) {
        return x;
    }
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof)
{
    if (!(dof > 0.0)) {
        throw InvalidArgument("student_t_cdf: dof must be positive");
    }
    if (std::isinf(t)) {
        return t > 0 ? 1.0 : 0.0;
    }
    const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
    return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_two_sided(double t, double dof)
{
    if (!(dof > 0.0)) {
        throw InvalidArgument("student_t_two_sided: dof must be positive");
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    return std::clamp(incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t)), 0.0, 1.0);
}

} // namespace scarcity::stats
