#pragma once

#include <span>
#include <string>
#include <vector>

#include "scarcity/error.hpp"

namespace scarcity::stats {

struct SeedAggregate {
    std::vector<double> values;
    double mean = 0.0;
    double se = 0.0; // sample SD / sqrt(n)
};

/// Requires at least two values.
SeedAggregate aggregate(std::span<const double> values);

struct PairedTestResult {
    double mean_diff = 0.0; // mean of xs - ys
    double se_diff = 0.0;
    double t_stat = 0.0;
    int dof = 0;
    double p_value = 1.0; // two-sided
};

class DegenerateTest : public Error {
public:
    enum class Reason { all_zero, constant_offset };
    DegenerateTest(Reason reason, std::string message)
        : Error(std::move(message)), reason_(reason) {}
    Reason reason() const noexcept { return reason_; }

private:
    Reason reason_;
};

/// Paired t-test on per-seed differences xs[i] - ys[i].
PairedTestResult paired_t(std::span<const double> xs, std::span<const double> ys);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Student-t CDF with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

/// Two-sided p-value P(|T| >= |t|).
double student_t_two_sided(double t, double dof);

} // namespace scarcity::stats
