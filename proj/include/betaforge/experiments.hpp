#ifndef BETAFORGE_EXPERIMENTS_HPP
#define BETAFORGE_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "betaforge/dataset.hpp"
#include "betaforge/feature_pipeline.hpp"
#include "betaforge/forest.hpp"

namespace betaforge::experiments {

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Stratified by class, deterministic per seed. Train size per class is
// round(ratio * class size); either side empty is an error.
SplitIndices split_train_test(const pipeline::LabeledDataset& ds, double ratio,
                              std::uint64_t seed);

pipeline::LabeledDataset subset(const pipeline::LabeledDataset& ds,
                                const std::vector<std::size_t>& rows);

enum class Verdict { better, worse, tie };
const char* to_string(Verdict v);

struct DiagSummary {
    double mean_depth = 0.0;
    double median_depth = 0.0;
    double variety_sum = 0.0;
    double variety_mean = 0.0;
    double avg_cosine = 0.0;
    std::vector<std::uint64_t> aggregate_usage;
};

struct PairwiseOutcome {
    std::string pair_id;
    double accuracy_a = 0.0; // arm A: baseline feature set
    double accuracy_b = 0.0; // arm B: comparison feature set
    Verdict verdict = Verdict::tie; // B versus A
    DiagSummary diag_a;
    DiagSummary diag_b;
};

// Same split indices and the same forest seed on both arms; only the
// feature columns differ.
PairwiseOutcome run_pairwise(const pipeline::LabeledDataset& arm_a,
                             const pipeline::LabeledDataset& arm_b,
                             const rf::ForestConfig& config, double split_ratio,
                             std::uint64_t split_seed, const std::string& pair_id = "");

struct SignTestReport {
    long n_better = 0;
    long n_worse = 0;
    long n_tie = 0;
    long n_effective = 0; // n_better + n_worse
    double mu = 0.0;      // N'/2
    double sigma = 0.0;   // sqrt(N'/4)
    double z = 0.0;       // continuity-corrected
    double p_one_sided = 0.0;
};

// Normal approximation to the paired binomial sign test,
// z = (n_better - 0.5 - mu) / sigma, one-sided upper-tail p.
SignTestReport sign_test(long n_better, long n_worse, long n_tie = 0);

struct PairedArms {
    std::string id;
    pipeline::LabeledDataset arm_a;
    pipeline::LabeledDataset arm_b;
};

struct BenchmarkConfig {
    rf::ForestConfig forest; // per-pair seeds are derived from experiment_seed
    double split_ratio = 0.8;
    std::uint64_t experiment_seed = 42;
    int threads = 0; // pair-level workers, 0 = auto
};

struct BenchmarkResult {
    std::vector<PairwiseOutcome> outcomes;
    SignTestReport sign;
    // per-arm means over pairs
    double mean_depth_a = 0.0, mean_depth_b = 0.0;
    double mean_variety_a = 0.0, mean_variety_b = 0.0;
    std::vector<double> mean_usage_a, mean_usage_b;
};

// Runs every pair with derived (split, forest) seeds and aggregates the
// verdicts into a sign test.
BenchmarkResult run_paired_benchmark(const std::vector<PairedArms>& pairs,
                                     const BenchmarkConfig& config);

// The 45 digit pairs as (plain, plain + n_zv constant columns) arms.
std::vector<PairedArms> make_digits_pairs(const pipeline::DigitsData& digits,
                                          std::size_t n_zv, double fill = 1.0);

struct SynthBenchConfig {
    int n_pairs = 200;
    int events_per_artist = 24;
    int snapshots_per_event = 10;
    double noise = 0.004; // snapshot jitter in range units
    std::uint64_t seed = 42;
};

// Synthetic artist pairs with matched support and mean-fraction priors but
// distinct shape priors; arm A is the basic stats dataset, arm B adds the
// estimated shape columns.
std::vector<PairedArms> make_synth_pairs(const SynthBenchConfig& config);

struct SweepCell {
    int m = 0;
    std::string arm; // "a" or "b"
    double mean_accuracy = 0.0;
    double mean_depth = 0.0;
    double mean_variety = 0.0;
    std::vector<double> mean_usage;
};

struct SweepResult {
    std::vector<int> m_values;
    std::vector<SweepCell> cells; // one per (m, arm), m-major
    std::vector<std::string> warnings;
};

// Trains every pair at each max_features value; m beyond an arm's width is
// skipped with a warning.
SweepResult sweep_m(const std::vector<PairedArms>& pairs, const std::vector<int>& m_values,
                    const BenchmarkConfig& config);

nlohmann::ordered_json to_json(const SignTestReport& report);
nlohmann::ordered_json to_json(const PairwiseOutcome& outcome);
nlohmann::ordered_json to_json(const BenchmarkResult& result);
nlohmann::ordered_json to_json(const SweepResult& sweep);
nlohmann::ordered_json model_to_json(const rf::ForestModel& model);

// Report document v1: schema_version, kind, config, seeds, outcomes,
// sign_test, sweep, diagnostics.
nlohmann::ordered_json make_report(const std::string& kind, nlohmann::ordered_json config,
                                   nlohmann::ordered_json seeds,
                                   const std::vector<PairwiseOutcome>& outcomes,
                                   const SignTestReport* sign, const SweepResult* sweep);

enum class ReportFormat { json, csv };

// json: writes the document to path. csv: writes the plot-data files
// (outcomes.csv, outcome_bars.csv, sweep_accuracy.csv, usage_hist.csv,
// depth_dist.csv, variety_dist.csv) into the directory at path.
void emit_report(const nlohmann::ordered_json& report, ReportFormat format,
                 const std::string& path);

// Structural check against the subset of JSON Schema used by
// schemas/report_v1.json; returns human-readable violations.
std::vector<std::string> validate_against_schema(const nlohmann::json& doc,
                                                 const nlohmann::json& schema);

} // namespace betaforge::experiments

#endif
