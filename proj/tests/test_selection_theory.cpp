#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "betaforge/rng.hpp"
#include "betaforge/selection_theory.hpp"

using namespace betaforge::selection;
using betaforge::Rng;

TEST_CASE("exact selection probabilities") {
    SUBCASE("equal scores are uniform") {
        const auto p = exact_selection_probs({{2.0, 2.0, 2.0, 2.0}, 2, 0});
        for (const double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("single subset reduces to the proportional rule") {
        const auto p = exact_selection_probs({{3.0, 1.0}, 2, 0});
        CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-14));
        CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("worked three-feature case") {
        const auto p = exact_selection_probs({{3.0, 2.0, 1.0}, 2, 0});
        CHECK(p[0] == doctest::Approx(0.45).epsilon(1e-12));
        CHECK(p[1] == doctest::Approx(0.355555555555556).epsilon(1e-10));
        CHECK(p[2] == doctest::Approx(0.194444444444444).epsilon(1e-10));
    }
    SUBCASE("sums to one and ignores uniform rescaling") {
        Rng rng(404);
        for (int rep = 0; rep < 30; ++rep) {
            ScoreProfile profile;
            const int n = 2 + static_cast<int>(rng.uniform_index(8));
            for (int i = 0; i < n; ++i) profile.scores.push_back(rng.uniform(0.0, 5.0));
            profile.scores[0] += 0.1; // keep one positive score
            profile.n_zv = static_cast<int>(rng.uniform_index(4));
            profile.m = 1 + static_cast<int>(rng.uniform_index(profile.total_features()));

            const auto p = exact_selection_probs(profile);
            double total = 0.0;
            for (const double v : p) total += v;
            CHECK(std::abs(total - 1.0) <= 1e-12);

            ScoreProfile scaled = profile;
            for (double& s : scaled.scores) s *= 37.5;
            const auto q = exact_selection_probs(scaled);
            for (std::size_t j = 0; j < p.size(); ++j)
                CHECK(std::abs(p[j] - q[j]) <= 1e-12);
        }
    }
    SUBCASE("enumeration bound") {
        ScoreProfile profile{{1.0}, 1, 25};
        CHECK_THROWS_AS(exact_selection_probs(profile), std::invalid_argument);
    }
}

TEST_CASE("approximate selection probabilities") {
    SUBCASE("equal scores reduce to 1/n") {
        const auto p = approx_selection_probs({{5.0, 5.0, 5.0}, 2, 0});
        for (const double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
    SUBCASE("worked case P1 = (2/3) * 3/5") {
        const auto p = approx_selection_probs({{3.0, 2.0, 1.0}, 2, 0});
        CHECK(p[0] == doctest::Approx(0.4).epsilon(1e-14));
    }
    SUBCASE("vanishes as the zero block grows") {
        const auto p = approx_selection_probs({{3.0, 2.0, 1.0}, 2, 1000000});
        for (std::size_t j = 0; j < 3; ++j) CHECK(p[j] < 1e-5);
    }
    SUBCASE("preserves score ordering for m >= 2") {
        // at m = 1 the drawn feature always wins, so every model is uniform
        Rng rng(77);
        for (int rep = 0; rep < 30; ++rep) {
            ScoreProfile profile;
            const int n = 2 + static_cast<int>(rng.uniform_index(7));
            for (int i = 0; i < n; ++i) profile.scores.push_back(rng.uniform(0.01, 4.0));
            profile.n_zv = static_cast<int>(rng.uniform_index(30));
            profile.m = 2 + static_cast<int>(rng.uniform_index(profile.total_features() - 1));
            const auto p = approx_selection_probs(profile);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (profile.scores[i] > profile.scores[j]) CHECK(p[i] > p[j]);
        }
    }
}

TEST_CASE("monte carlo agrees with the exact model") {
    const ScoreProfile profile{{3.0, 2.0, 1.0}, 2, 0};
    const auto exact = exact_selection_probs(profile);
    const auto mc = monte_carlo_selection(profile, 1000000, 2024);
    for (std::size_t j = 0; j < exact.size(); ++j) {
        CHECK(std::abs(mc.probabilities[j] - exact[j]) < 3.0 * mc.standard_errors[j]);
    }

    SUBCASE("one trial is a one-hot vector") {
        const auto one = monte_carlo_selection(profile, 1, 5);
        double total = 0.0;
        for (const double p : one.probabilities) {
            CHECK((p == 0.0 || p == 1.0));
            total += p;
        }
        CHECK(total == 1.0);
    }
    SUBCASE("fixed seed reproduces") {
        const auto a = monte_carlo_selection(profile, 10000, 9);
        const auto b = monte_carlo_selection(profile, 10000, 9);
        CHECK(a.probabilities == b.probabilities);
    }
    SUBCASE("all-zero subsets resolve uniformly") {
        // one positive score among many zeros: with m=2 the zero features
        // win only via zero-only subsets, which tie uniformly
        const ScoreProfile zeros{{1.0, 0.0, 0.0, 0.0}, 2, 0};
        const auto exact_z = exact_selection_probs(zeros);
        const auto mc_z = monte_carlo_selection(zeros, 400000, 31);
        for (std::size_t j = 0; j < exact_z.size(); ++j)
            CHECK(std::abs(mc_z.probabilities[j] - exact_z[j]) <
                  4.0 * std::max(mc_z.standard_errors[j], 1e-4));
    }
}

TEST_CASE("dilution odds") {
    SUBCASE("no dilution, no change") {
        const auto r = dilution_odds(2.0, 1.0, 2, 1.5, 2, 0);
        CHECK(r.odds_after == r.odds_before);
    }
    SUBCASE("worked hand case") {
        const auto r = dilution_odds(2.0, 1.0, 2, 1.5, 2, 2);
        CHECK(r.odds_before == doctest::Approx(1.428571428571).epsilon(1e-4));
        CHECK(r.odds_after == doctest::Approx(1.272727272727).epsilon(1e-4));
        CHECK(r.k_before == doctest::Approx(1.5));
        CHECK(r.k_after == doctest::Approx(0.75));
    }
    SUBCASE("strictly decreasing in the zero block") {
        Rng rng(888);
        for (int rep = 0; rep < 100; ++rep) {
            const double b = rng.uniform(0.1, 3.0);
            const double a = b + rng.uniform(0.1, 3.0);
            const int m = 2 + static_cast<int>(rng.uniform_index(6));
            const double r_bar = rng.uniform(0.1, 3.0);
            const int n = 2 + static_cast<int>(rng.uniform_index(10));
            double prev = dilution_odds(a, b, m, r_bar, n, 0).odds_after;
            for (int zv = 1; zv <= 40; ++zv) {
                const double cur = dilution_odds(a, b, m, r_bar, n, zv).odds_after;
                CHECK(cur < prev);
                prev = cur;
            }
        }
    }
    SUBCASE("invalid scores are rejected") {
        CHECK_THROWS_AS(dilution_odds(1.0, 2.0, 2, 1.0, 2, 0), std::invalid_argument);
        CHECK_THROWS_AS(dilution_odds(2.0, 0.0, 2, 1.0, 2, 0), std::invalid_argument);
    }
}

TEST_CASE("zero-variance planner") {
    SUBCASE("exact hit") {
        const auto plan = plan_n_zv(0.25, 6, 6);
        CHECK(plan.n_zv == 18);
        CHECK(plan.achieved == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(plan.error == 0.0);
    }
    SUBCASE("ceil beats floor") {
        const auto plan = plan_n_zv(0.29, 6, 6);
        CHECK(plan.n_zv == 15);
        CHECK(plan.achieved == doctest::Approx(6.0 / 21.0).epsilon(1e-12));
    }
    SUBCASE("target at the top of the range needs no dilution") {
        const auto plan = plan_n_zv(1.0, 6, 6);
        CHECK(plan.n_zv == 0);
        CHECK(plan.error == 0.0);
    }
    SUBCASE("out-of-range targets are rejected") {
        CHECK_THROWS_AS(plan_n_zv(0.0, 6, 6), std::invalid_argument);
        CHECK_THROWS_AS(plan_n_zv(1.1, 6, 6), std::invalid_argument);
    }
    SUBCASE("no integer does better") {
        Rng rng(55);
        for (int rep = 0; rep < 50; ++rep) {
            const int m = 1 + static_cast<int>(rng.uniform_index(8));
            const int n = m + static_cast<int>(rng.uniform_index(8));
            const double target = rng.uniform(0.02, static_cast<double>(m) / n);
            const auto plan = plan_n_zv(target, m, n);
            for (int zv = 0; zv <= 400; ++zv) {
                const double err = std::abs(static_cast<double>(m) / (n + zv) - target);
                CHECK(plan.error <= err + 1e-15);
            }
        }
    }
}

TEST_CASE("expected candidate count") {
    CHECK(expected_candidate_count(100, 10, 2, 4) == doctest::Approx(500.0));
    CHECK(expected_candidate_count(31, 7, 5, 5) == doctest::Approx(31.0 * 7.0));
    CHECK(expected_candidate_count(0, 10, 2, 4) == 0.0);
}
