#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/multiprecision/cpp_int.hpp>

#include "scarcity/analytics.hpp"
#include "scarcity/engine.hpp"
#include "scarcity/error.hpp"
#include "scarcity/stats.hpp"

using namespace scarcity;
using namespace scarcity::analytics;
using boost::multiprecision::cpp_rational;

namespace {

// Exhaustive sum over all 2^N action vectors.
std::vector<long double> enumerate_pmf(const std::vector<double>& ps)
{
    const std::size_t n = ps.size();
    std::vector<long double> pmf(n + 1, 0.0L);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        long double prob = 1.0L;
        int k = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                prob *= ps[i];
                ++k;
            } else {
                prob *= 1.0L - ps[i];
            }
        }
        pmf[static_cast<std::size_t>(k)] += prob;
    }
    return pmf;
}

// P(Binomial(n, num/den) > c) as an exact fraction.
cpp_rational binomial_tail_exact(int n, int c, int num, int den)
{
    const cpp_rational q(num, den);
    cpp_rational total = 0;
    for (int k = c + 1; k <= n; ++k) {
        cpp_rational term = 1;
        for (int j = 0; j < k; ++j) {
            term *= cpp_rational(n - j, j + 1);
        }
        for (int j = 0; j < k; ++j) {
            term *= q;
        }
        for (int j = 0; j < n - k; ++j) {
            term *= 1 - q;
        }
        total += term;
    }
    return total;
}

Curve line(std::vector<double> xs, double a, double b)
{
    Curve c;
    for (double x : xs) {
        c.push_back({x, a + b * x});
    }
    return c;
}

} // namespace

TEST_CASE("binomial overload examples")
{
    CHECK(binomial_overload(7, 6, 6.0 / 7.0) == doctest::Approx(0.3399166770891137).epsilon(1e-14));
    CHECK(binomial_overload(7, 6, 6.0 / 7.0) == doctest::Approx(std::pow(6.0 / 7.0, 7)).epsilon(1e-14));
    CHECK(binomial_overload(7, 2, 1.0) == 1.0);
    CHECK(binomial_overload(7, 2, 0.0) == 0.0);
    // 264168 / 823543
    CHECK(binomial_overload(7, 2, 2.0 / 7.0) == doctest::Approx(0.3207701358641868).epsilon(1e-14));
    CHECK_THROWS_AS(binomial_overload(7, 7, 0.5), InvalidArgument);
    CHECK_THROWS_AS(binomial_overload(7, 0, 0.5), InvalidArgument);
    CHECK_THROWS_AS(binomial_overload(7, 2, 1.5), InvalidArgument);
}

TEST_CASE("binomial overload against rational arithmetic")
{
    for (int n = 2; n <= 15; ++n) {
        for (int c = 1; c < n; ++c) {
            const double exact = binomial_tail_exact(n, c, c, n).convert_to<double>();
            CAPTURE(n);
            CAPTURE(c);
            CHECK(std::abs(binomial_overload(n, c, static_cast<double>(c) / n) - exact) < 1e-14);
        }
    }
    CHECK(binomial_tail_exact(7, 2, 2, 7) == cpp_rational(264168, 823543));
}

TEST_CASE("frozen L1 overload values for N=7")
{
    const double expected[] = {0.2635138663069202, 0.3207701358641868, 0.3468999190084792,
                               0.35934492795154593, 0.36048512342403494, 0.3399166770891137};
    for (int c = 1; c <= 6; ++c) {
        CHECK(binomial_overload(7, c, c / 7.0) == doctest::Approx(expected[c - 1]).epsilon(1e-13));
    }
}

TEST_CASE("Poisson-binomial examples")
{
    const std::vector<double> coins{0.5, 0.5};
    CHECK(poisson_binomial_pmf(coins).values == std::vector<double>{0.25, 0.5, 0.25});
    const std::vector<double> degenerate{1.0, 1.0, 0.0};
    CHECK(poisson_binomial_pmf(degenerate).values == std::vector<double>{0.0, 0.0, 1.0, 0.0});

    std::vector<double> spectrum;
    for (int i = 0; i < 7; ++i) {
        spectrum.push_back(1.0 - i / 6.0);
    }
    const auto pmf = poisson_binomial_pmf(spectrum);
    const auto brute = enumerate_pmf(spectrum);
    for (std::size_t k = 0; k < brute.size(); ++k) {
        CHECK(std::abs(pmf.values[k] - static_cast<double>(brute[k])) < 1e-12);
    }
    const std::vector<double> bad{0.5, 1.5};
    CHECK_THROWS_AS(poisson_binomial_pmf(bad), InvalidArgument);
}

TEST_CASE("Poisson-binomial matches exhaustive enumeration")
{
    RngStream gen(12, {StreamRole::Bootstrap, 0});
    double worst = 0.0;
    for (int n = 1; n <= 12; ++n) {
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> ps(static_cast<std::size_t>(n));
            for (auto& p : ps) {
                p = gen.uniform();
            }
            const auto pmf = poisson_binomial_pmf(ps);
            const auto brute = enumerate_pmf(ps);
            for (std::size_t k = 0; k < brute.size(); ++k) {
                worst = std::max(worst, std::abs(pmf.values[k] - static_cast<double>(brute[k])));
            }
            const double sum = std::accumulate(pmf.values.begin(), pmf.values.end(), 0.0);
            CHECK(std::abs(sum - 1.0) < 1e-12);

            double mu = 0.0;
            double var = 0.0;
            for (double p : ps) {
                mu += p;
                var += p * (1 - p);
            }
            CHECK(std::abs(pmf.mean() - mu) < 1e-10);
            CHECK(std::abs(pmf.variance() - var) < 1e-10);
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("equal probabilities reduce to the binomial")
{
    for (int n = 2; n <= 12; ++n) {
        for (int c = 1; c < n; ++c) {
            const std::vector<double> ps(static_cast<std::size_t>(n), static_cast<double>(c) / n);
            const auto pmf = poisson_binomial_pmf(ps);
            CHECK(std::abs(overload_from_pmf(pmf, c) - binomial_overload(n, c, static_cast<double>(c) / n)) < 1e-12);
        }
    }
}

TEST_CASE("tail sums")
{
    const Pmf at2{{0, 0, 1, 0}};
    const Pmf at3{{0, 0, 0, 1}};
    CHECK(overload_from_pmf(at2, 2) == 0.0);
    CHECK(overload_from_pmf(at3, 2) == 1.0);
    CHECK(overload_from_pmf(Pmf{{0.25, 0.5, 0.25}}, 1) == 0.25);
    CHECK_THROWS_AS(overload_from_pmf(at2, 4), InvalidArgument);

    RngStream gen(13, {StreamRole::Bootstrap, 0});
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> ps(static_cast<std::size_t>(gen.uniform_int(1, 15)));
        for (auto& p : ps) {
            p = gen.uniform();
        }
        const auto pmf = poisson_binomial_pmf(ps);
        double prev = 1.0;
        for (int c = 0; c <= pmf.n(); ++c) {
            const double v = overload_from_pmf(pmf, c);
            CHECK(v <= prev + 1e-15);
            prev = v;
        }
        CHECK(overload_from_pmf(pmf, pmf.n()) == 0.0);
    }
}

TEST_CASE("Gaussian approximation")
{
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    for (double sigma : {0.1, 1.0, 3.7}) {
        CHECK(gaussian_overload(2.5, sigma, 2) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(gaussian_overload(2.0 - 20.0 * sigma, sigma, 2) < 1e-12);
    }
    CHECK_THROWS_AS(gaussian_overload(1.0, 0.0, 2), InvalidArgument);

    // Binomial(7, 2/7): mean 2, variance 10/7.
    const double exact = binomial_overload(7, 2, 2.0 / 7.0);
    const double approx = gaussian_overload(2.0, std::sqrt(10.0 / 7.0), 2);
    CHECK(approx == doctest::Approx(0.33785).epsilon(1e-4));
    MESSAGE("gaussian gap for Binomial(7, 2/7): " << std::abs(approx - exact));
    CHECK(std::abs(approx - exact) < 0.05);

    for (double mu : {0.5, 2.0, 5.0}) {
        double prev = 2.0;
        for (int c = 0; c < 10; ++c) {
            const double v = gaussian_overload(mu, 1.3, c);
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("demand variance")
{
    std::vector<RoundRecord> constant(20);
    for (auto& r : constant) {
        r.demand = 3;
    }
    CHECK(demand_variance(constant, 5) == 0.0);

    std::vector<RoundRecord> alternating(2000);
    for (std::size_t i = 0; i < alternating.size(); ++i) {
        alternating[i].demand = (i % 2 == 0) ? 0 : 7;
    }
    // Sample variance of an even-length 0/7 alternation: 12.25 * m / (m - 1).
    CHECK(demand_variance(alternating, 0) == doctest::Approx(12.25 * 2000.0 / 1999.0).epsilon(1e-12));
    CHECK(demand_variance(alternating, 0) == doctest::Approx(12.25).epsilon(1e-3));
    CHECK_THROWS_AS(demand_variance(constant, 19), InvalidArgument);

    const auto cfg = default_config(Level::L1, 7, 2);
    std::vector<double> vars;
    for (auto seed : cfg.seeds) {
        vars.push_back(demand_variance(engine::run_episode(cfg, seed).records, cfg.warmup));
    }
    const auto agg = stats::aggregate(vars);
    CHECK(std::abs(agg.mean - 10.0 / 7.0) <= 3 * agg.se);
}

TEST_CASE("crossover estimate")
{
    const std::vector<double> grid{1 / 7.0, 2 / 7.0, 3 / 7.0, 4 / 7.0, 5 / 7.0, 6 / 7.0};
    {
        std::map<Level, Curve> curves{{Level::L4, line(grid, 1.0, -1.0)}, {Level::L1, line(grid, 0.0, 1.0)}};
        const auto x = crossover_estimate(curves);
        REQUIRE(x);
        CHECK(*x == doctest::Approx(0.5).epsilon(1e-12));
    }
    {
        const std::vector<double> even{0.2, 0.4, 0.5, 0.6, 0.8};
        std::map<Level, Curve> curves{{Level::L4, line(even, 1.0, -1.0)}, {Level::L1, line(even, 0.0, 1.0)}};
        const auto x = crossover_estimate(curves);
        REQUIRE(x);
        CHECK(*x == doctest::Approx(0.5).epsilon(1e-12));
    }
    {
        std::map<Level, Curve> curves{{Level::L4, line(grid, 0.5, 0.1)}, {Level::L1, line(grid, 0.2, 0.1)}};
        CHECK_FALSE(crossover_estimate(curves));
    }
    {
        std::map<Level, Curve> curves{{Level::L4, line(grid, 0.5, 0.1)}};
        CHECK_THROWS_AS(crossover_estimate(curves), InvalidArgument);
    }
}

TEST_CASE("null-level scan")
{
    std::vector<double> spectrum;
    for (int i = 0; i < 7; ++i) {
        spectrum.push_back(1.0 - i / 6.0);
    }
    const auto scan = null_level_scan(spectrum, 2, 11);
    REQUIRE(scan.size() == 11);
    CHECK(scan.front().p_llm_value == 0.0);
    CHECK(scan.back().p_llm_value == 1.0);
    for (const auto& pt : scan) {
        std::vector<double> access;
        for (double p : spectrum) {
            access.push_back(p * pt.p_llm_value + (1 - p) * (1 - pt.p_llm_value));
        }
        const auto brute = enumerate_pmf(access);
        long double tail = 0.0L;
        for (std::size_t k = 3; k < brute.size(); ++k) {
            tail += brute[k];
        }
        CHECK(std::abs(pt.overload - static_cast<double>(tail)) < 1e-12);
        // A symmetric spectrum makes the mean demand independent of the broadcast value.
        CHECK(pt.mean == doctest::Approx(3.5).epsilon(1e-12));
    }
}

TEST_CASE("analytic table export")
{
    const auto rows = level1_table(7);
    CHECK(rows.size() == 18);
    const auto csv = analytic_csv(rows);
    CHECK(csv.rfind("level,n,capacity,method,overload,mean,variance\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 19);
    for (const auto& r : rows) {
        CHECK(r.level == "L1");
        if (r.method != "gaussian") {
            CHECK(r.overload == doctest::Approx(binomial_overload(7, r.capacity, r.capacity / 7.0)).epsilon(1e-12));
        }
    }
}
