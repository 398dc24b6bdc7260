#include "betaforge/selection_theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "betaforge/rng.hpp"

namespace betaforge::selection {

namespace {

void validate(const ScoreProfile& profile) {
    if (profile.scores.empty()) throw std::invalid_argument("profile needs at least one score");
    if (profile.n_zv < 0) throw std::invalid_argument("n_zv must be non-negative");
    bool any_positive = false;
    for (const double r : profile.scores) {
        if (r < 0.0) throw std::invalid_argument("scores must be non-negative");
        if (r > 0.0) any_positive = true;
    }
    if (!any_positive) throw std::invalid_argument("profile needs at least one positive score");
    if (profile.m < 1 || static_cast<std::size_t>(profile.m) > profile.total_features())
        throw std::invalid_argument("m must be in [1, total feature count]");
}

// compensated accumulator; the sum-to-one contract is 1e-12
struct Kahan {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

} // namespace

std::vector<double> ScoreProfile::effective_scores() const {
    std::vector<double> r = scores;
    r.insert(r.end(), static_cast<std::size_t>(n_zv), 0.0);
    return r;
}

std::vector<double> exact_selection_probs(const ScoreProfile& profile) {
    validate(profile);
    const auto r = profile.effective_scores();
    const std::size_t n = r.size();
    const std::size_t m = static_cast<std::size_t>(profile.m);
    if (n > kEnumerationBound)
        throw std::invalid_argument("exact enumeration is limited to 25 features");

    std::vector<Kahan> acc(n);
    std::vector<std::size_t> subset(m);
    for (std::size_t i = 0; i < m; ++i) subset[i] = i;

    double n_subsets = 0.0;
    for (;;) {
        ++n_subsets;
        double total = 0.0;
        for (const std::size_t j : subset) total += r[j];
        if (total > 0.0) {
            for (const std::size_t j : subset) acc[j].add(r[j] / total);
        } else {
            for (const std::size_t j : subset) acc[j].add(1.0 / static_cast<double>(m));
        }
        // next lexicographic m-combination of {0..n-1}
        std::size_t i = m;
        while (i > 0 && subset[i - 1] == n - m + i - 1) --i;
        if (i == 0) break;
        ++subset[i - 1];
        for (std::size_t k = i; k < m; ++k) subset[k] = subset[k - 1] + 1;
    }

    std::vector<double> probs(n);
    for (std::size_t j = 0; j < n; ++j) probs[j] = acc[j].sum / n_subsets;
    return probs;
}

std::vector<double> approx_selection_probs(const ScoreProfile& profile) {
    validate(profile);
    const auto r = profile.effective_scores();
    const double n_eff = static_cast<double>(r.size());
    double mean = 0.0;
    for (const double v : r) mean += v;
    mean /= n_eff;

    const double m = static_cast<double>(profile.m);
    std::vector<double> probs(r.size(), 0.0);
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double denom = r[j] + (m - 1.0) * mean;
        probs[j] = denom > 0.0 ? (m / n_eff) * r[j] / denom : 0.0;
    }
    return probs;
}

MonteCarloResult monte_carlo_selection(const ScoreProfile& profile, std::uint64_t trials,
                                       std::uint64_t seed) {
    validate(profile);
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    const auto r = profile.effective_scores();
    const std::size_t n = r.size();
    const std::size_t m = static_cast<std::size_t>(profile.m);

    std::vector<std::uint64_t> wins(n, 0);
    std::vector<std::size_t> pool(n);
    Rng rng(seed);
    for (std::uint64_t t = 0; t < trials; ++t) {
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = i + rng.uniform_index(n - i);
            std::swap(pool[i], pool[j]);
        }
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) total += r[pool[i]];
        std::size_t winner;
        if (total > 0.0) {
            const double u = rng.uniform() * total;
            double cum = 0.0;
            winner = pool[m - 1];
            for (std::size_t i = 0; i < m; ++i) {
                cum += r[pool[i]];
                if (u < cum) {
                    winner = pool[i];
                    break;
                }
            }
        } else {
            winner = pool[rng.uniform_index(m)];
        }
        ++wins[winner];
    }

    MonteCarloResult result;
    result.trials = trials;
    result.probabilities.resize(n);
    result.standard_errors.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double p = static_cast<double>(wins[j]) / static_cast<double>(trials);
        result.probabilities[j] = p;
        result.standard_errors[j] = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    }
    return result;
}

SelectionReport selection_report(const ScoreProfile& profile, std::uint64_t trials,
                                 std::uint64_t seed) {
    SelectionReport report;
    report.exact = exact_selection_probs(profile);
    report.approx = approx_selection_probs(profile);
    report.monte_carlo = monte_carlo_selection(profile, trials, seed);
    return report;
}

DilutionReport dilution_odds(double a, double b, int m, double r_bar, int n, int n_zv) {
    if (!(a > b) || !(b > 0.0)) throw std::invalid_argument("scores must satisfy a > b > 0");
    if (m < 2) throw std::invalid_argument("m must be >= 2");
    if (n < 1 || n_zv < 0) throw std::invalid_argument("invalid feature counts");
    if (!(r_bar > 0.0)) throw std::invalid_argument("mean score must be positive");

    DilutionReport report;
    report.a = a;
    report.b = b;
    report.k_before = (m - 1.0) * r_bar;
    report.k_after = (m - 1.0) * static_cast<double>(n) * r_bar / (n + n_zv);
    const auto odds = [&](double k) { return (a / b) * (b + k) / (a + k); };
    report.odds_before = odds(report.k_before);
    report.odds_after = odds(report.k_after);
    return report;
}

PlanResult plan_n_zv(double target, int m, int n) {
    if (m < 1 || n < 1) throw std::invalid_argument("m and n must be positive");
    const double max_gamma = static_cast<double>(m) / n;
    if (!(target > 0.0) || target > max_gamma)
        throw std::invalid_argument("target must lie in (0, m/n]");

    const double raw = static_cast<double>(m) / target - static_cast<double>(n);
    const auto achieved = [&](long zv) { return static_cast<double>(m) / (n + zv); };
    const long lo = std::max(0L, static_cast<long>(std::floor(raw)));
    const long hi = std::max(0L, static_cast<long>(std::ceil(raw)));

    PlanResult plan;
    plan.target = target;
    plan.n_zv = static_cast<int>(lo);
    plan.achieved = achieved(lo);
    plan.error = std::abs(plan.achieved - target);
    const double err_hi = std::abs(achieved(hi) - target);
    if (err_hi < plan.error) {
        plan.n_zv = static_cast<int>(hi);
        plan.achieved = achieved(hi);
        plan.error = err_hi;
    }
    return plan;
}

double expected_candidate_count(double n_trees, double avg_split_nodes, int m, int n) {
    if (n_trees < 0.0 || avg_split_nodes < 0.0 || m < 0 || n < 1)
        throw std::invalid_argument("counts must be non-negative, n positive");
    return n_trees * avg_split_nodes * static_cast<double>(m) / static_cast<double>(n);
}

} // namespace betaforge::selection
