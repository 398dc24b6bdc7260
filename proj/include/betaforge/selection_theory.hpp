#ifndef BETAFORGE_SELECTION_THEORY_HPP
#define BETAFORGE_SELECTION_THEORY_HPP

#include <cstdint>
#include <vector>

namespace betaforge::selection {

// Rank scores of the informative features plus n_zv appended zero-score
// features; m features are drawn per split.
struct ScoreProfile {
    std::vector<double> scores;
    int m = 1;
    int n_zv = 0;

    std::size_t total_features() const { return scores.size() + static_cast<std::size_t>(n_zv); }
    // scores vector with the zero-score block appended
    std::vector<double> effective_scores() const;
};

inline constexpr std::size_t kEnumerationBound = 25;

struct MonteCarloResult {
    std::vector<double> probabilities;
    std::vector<double> standard_errors;
    std::uint64_t trials = 0;
};

struct SelectionReport {
    std::vector<double> exact;
    std::vector<double> approx;
    MonteCarloResult monte_carlo;
};

struct DilutionReport {
    double a = 0.0;
    double b = 0.0;
    double k_before = 0.0; // (m-1) * mean score
    double k_after = 0.0;  // (m-1) * diluted mean score
    double odds_before = 0.0;
    double odds_after = 0.0;
};

struct PlanResult {
    double target = 0.0;   // gamma*
    int n_zv = 0;
    double achieved = 0.0; // m / (n + n_zv)
    double error = 0.0;
};

// Average over all C(n,m) candidate subsets of the proportional win rule
// r_j / sum_{k in S} r_k; all-zero subsets tie uniformly. Total feature
// count is capped so the enumeration stays tractable.
std::vector<double> exact_selection_probs(const ScoreProfile& profile);

// P(X_j) ~= (m/n_eff) * r_j / (r_j + (m-1) * mean r), with the mean taken
// over all n_eff scores including the zero block.
std::vector<double> approx_selection_probs(const ScoreProfile& profile);

// Simulation oracle for the exact model; frequencies with binomial SEs.
MonteCarloResult monte_carlo_selection(const ScoreProfile& profile, std::uint64_t trials,
                                       std::uint64_t seed);

SelectionReport selection_report(const ScoreProfile& profile, std::uint64_t trials,
                                 std::uint64_t seed);

// Odds ratio R(K) = (a/b) * (b+K)/(a+K) before and after zero-variance
// dilution shrinks K = (m-1)*r_bar to (m-1)*n*r_bar/(n+n_zv).
DilutionReport dilution_odds(double a, double b, int m, double r_bar, int n, int n_zv);

// Integer n_zv whose achieved m/(n+n_zv) is closest to the target; ties
// prefer fewer appended features.
PlanResult plan_n_zv(double target, int m, int n);

// Expected candidate-set appearances of one feature: B * L * m / n.
double expected_candidate_count(double n_trees, double avg_split_nodes, int m, int n);

} // namespace betaforge::selection

#endif
