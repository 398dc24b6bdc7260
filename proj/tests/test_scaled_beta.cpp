#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "betaforge/scaled_beta.hpp"
#include "oracles.hpp"

using namespace betaforge::beta;

namespace {

// forward route: Eq-style mean/median fractions for known shapes
ScaledStats forward_scaled(double alpha, double beta) {
    return {alpha / (alpha + beta), (alpha - 1.0 / 3.0) / (alpha + beta - 2.0 / 3.0)};
}

} // namespace

TEST_CASE("scale_stats maps summaries onto the unit interval") {
    const auto unit = scale_stats({0.0, 1.0, 0.3, 0.25});
    REQUIRE(unit.ok());
    CHECK(unit.value().s == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(unit.value().q == doctest::Approx(0.25).epsilon(1e-15));

    const auto scaled = scale_stats({50.0, 150.0, 80.0, 75.0});
    REQUIRE(scaled.ok());
    CHECK(scaled.value().s == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(scaled.value().q == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("scale_stats rejects degenerate and out-of-order inputs") {
    const auto zero = scale_stats({100.0, 100.0, 100.0, 100.0});
    REQUIRE_FALSE(zero.ok());
    CHECK(zero.error().kind == EstimationErrorKind::ZeroRange);

    const auto disorder = scale_stats({50.0, 150.0, 160.0, 75.0});
    REQUIRE_FALSE(disorder.ok());
    CHECK(disorder.error().kind == EstimationErrorKind::StatsOutOfOrder);

    // mean exactly on the boundary of the support
    const auto edge = scale_stats({50.0, 150.0, 50.0, 75.0});
    REQUIRE_FALSE(edge.ok());
    CHECK(edge.error().kind == EstimationErrorKind::OutOfDomain);
}

TEST_CASE("estimate_alpha_beta inverts the closed form") {
    const auto est = estimate_alpha_beta({1.0 / 3.0, 0.3125});
    REQUIRE(est.ok());
    CHECK(est.value().alpha == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(est.value().beta == doctest::Approx(4.0).epsilon(1e-12));

    const auto sym = estimate_alpha_beta({0.5, 0.5});
    REQUIRE_FALSE(sym.ok());
    CHECK(sym.error().kind == EstimationErrorKind::SymmetricUnderdetermined);

    const auto bad = estimate_alpha_beta({0.4, 0.45});
    REQUIRE_FALSE(bad.ok());
    CHECK(bad.error().kind == EstimationErrorKind::OutOfDomain);

    const auto inconsistent = estimate_alpha_beta({0.3, 0.3});
    REQUIRE_FALSE(inconsistent.ok());
    CHECK(inconsistent.error().kind == EstimationErrorKind::InconsistentStats);
}

TEST_CASE("estimate output shapes stay positive and finite") {
    // near-singular gap that passes the epsilon gate hits the cap
    const auto capped = estimate_alpha_beta({0.4, 0.4 + 2e-9});
    if (capped.ok()) {
        CHECK(capped.value().alpha > 0.0);
        CHECK(capped.value().beta > 0.0);
        CHECK(capped.value().alpha <= kShapeCap);
        CHECK(capped.value().beta <= kShapeCap);
        CHECK(std::isfinite(capped.value().alpha));
    }
}

TEST_CASE("beta_mean") {
    CHECK(beta_mean({2.0, 4.0, 0.0, 1.0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(beta_mean({7.0, 7.0, 10.0, 20.0}) == doctest::Approx(15.0).epsilon(1e-15));
    CHECK(beta_mean({2.0, 4.0, 49.0, 139.0}) == doctest::Approx(79.0).epsilon(1e-13));
}

TEST_CASE("beta_median_approx") {
    CHECK(beta_median_approx({2.0, 4.0, 0.0, 1.0}) == doctest::Approx(0.3125).epsilon(1e-15));
    CHECK(beta_median_approx({3.0, 3.0, 2.0, 6.0}) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(beta_median_approx({1.0, 1.0, 0.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("pdf matches closed forms and vanishes outside the support") {
    CHECK(pdf({1.0, 1.0, 0.0, 2.0}, 1.7) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pdf({2.0, 2.0, 0.0, 1.0}, 0.5) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(pdf({2.0, 4.0, 10.0, 20.0}, 9.0) == 0.0);
    CHECK(pdf({2.0, 4.0, 10.0, 20.0}, 21.0) == 0.0);

    // diverging endpoint for alpha < 1
    CHECK(std::isinf(pdf({0.5, 2.0, 0.0, 1.0}, 0.0)));
    // finite shape-1 limit: Beta(1,3) density at 0 is 3
    CHECK(pdf({1.0, 3.0, 0.0, 1.0}, 0.0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("cdf agrees with the continued-fraction oracle") {
    const double shapes[] = {0.5, 1.0, 2.0, 5.0, 10.0, 50.0};
    for (const double a : shapes) {
        for (const double b : shapes) {
            for (const double x : {0.1, 0.3, 0.5, 0.7, 0.9}) {
                const double got = cdf({a, b, 0.0, 1.0}, x, 1e-10);
                const double want = oracles::ibeta(a, b, x);
                CAPTURE(a); CAPTURE(b); CAPTURE(x);
                CHECK(got == doctest::Approx(want).epsilon(2e-8));
            }
        }
    }
}

TEST_CASE("unit mass: cdf at the upper support edge is 1") {
    const double shapes[] = {0.5, 1.0, 2.0, 5.0, 10.0, 50.0};
    for (const double a : shapes)
        for (const double b : shapes) {
            CAPTURE(a); CAPTURE(b);
            CHECK(std::abs(cdf({a, b, 3.0, 9.0}, 9.0, 1e-8) - 1.0) <= 1e-6);
        }
}

TEST_CASE("first moment of the density matches beta_mean") {
    const double shapes[] = {0.5, 1.0, 2.0, 5.0, 10.0, 50.0};
    for (const double a : shapes) {
        for (const double b : shapes) {
            const ScaledBetaParams p{a, b, 0.0, 1.0};
            const double integral = oracles::integrate(
                [&](double x) { return x * pdf(p, x); }, 0.0, 1.0, 1e-10, 1e-14);
            CAPTURE(a); CAPTURE(b);
            CHECK(std::abs(integral - beta_mean(p)) <= 1e-6);
        }
    }
}

TEST_CASE("numeric_median") {
    CHECK(numeric_median({3.0, 3.0, 0.0, 1.0}, 1e-9) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(numeric_median({1.0, 1.0, 0.0, 1.0}, 1e-9) == doctest::Approx(0.5).epsilon(1e-7));

    const double got = numeric_median({2.0, 4.0, 0.0, 1.0}, 1e-9);
    CHECK(got == doctest::Approx(0.3138101704556974).epsilon(1e-6)); // oracle-frozen
    CHECK(std::abs(got - 0.3125) == doctest::Approx(0.0013101704556974).epsilon(1e-3));

    // independent route across random shapes
    for (const auto& [a, b] : {std::pair{1.5, 7.0}, {4.0, 2.0}, {9.0, 9.0}}) {
        CHECK(numeric_median({a, b, 0.0, 1.0}, 1e-9) ==
              doctest::Approx(oracles::beta_median(a, b)).epsilon(1e-6));
    }
}

TEST_CASE("median approximation gap shrinks as min(alpha,beta) grows") {
    const double grid[] = {1.0, 2.0, 4.0, 8.0, 16.0};
    double max_gap_at[5] = {0, 0, 0, 0, 0};
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            const ScaledBetaParams p{grid[i], grid[j], 0.0, 1.0};
            const double gap = std::abs(beta_median_approx(p) - numeric_median(p, 1e-9));
            const int level = std::min(i, j);
            max_gap_at[level] = std::max(max_gap_at[level], gap);
        }
    }
    for (int k = 1; k < 5; ++k) CHECK(max_gap_at[k] <= max_gap_at[k - 1]);
    CHECK(max_gap_at[4] < max_gap_at[0]);
}

TEST_CASE("round-trip recovery is exact to 1e-9 over the shape grid") {
    const double grid[] = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    for (const double a : grid) {
        for (const double b : grid) {
            if (a == b) continue; // symmetric 0/0 cases excluded
            const auto est = estimate_alpha_beta(forward_scaled(a, b));
            CAPTURE(a); CAPTURE(b);
            REQUIRE(est.ok());
            CHECK(std::abs(est.value().alpha - a) / a <= 1e-9);
            CHECK(std::abs(est.value().beta - b) / b <= 1e-9);
        }
    }
}

TEST_CASE("sampling is deterministic, in-support, and mean-consistent") {
    const ScaledBetaParams uniform{1.0, 1.0, 0.0, 1.0};
    const auto u = sample(uniform, 100000, 7);
    double mean = 0.0;
    for (const double x : u) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
        mean += x;
    }
    mean /= static_cast<double>(u.size());
    CHECK(std::abs(mean - 0.5) < 0.005);

    const ScaledBetaParams skewed{2.0, 4.0, 0.0, 1.0};
    const auto s = sample(skewed, 100000, 7);
    double mean2 = 0.0;
    for (const double x : s) mean2 += x;
    mean2 /= static_cast<double>(s.size());
    CHECK(std::abs(mean2 - 1.0 / 3.0) < 0.005);

    CHECK(sample(skewed, 1000, 99) == sample(skewed, 1000, 99));
    CHECK(sample(skewed, 10, 1) != sample(skewed, 10, 2));
}
