#ifndef BETAFORGE_FOREST_HPP
#define BETAFORGE_FOREST_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "betaforge/dataset.hpp"

namespace betaforge::rf {

enum class ClassWeight { balanced, none };
enum class NoValidSplitPolicy { extend_until_valid, leaf };

struct ForestConfig {
    int n_estimators = 100;
    int max_features = 2; // m, drawn without replacement at each node
    int max_depth = 100;
    ClassWeight class_weight = ClassWeight::balanced;
    std::uint64_t seed = 42;
    NoValidSplitPolicy no_valid_split = NoValidSplitPolicy::extend_until_valid;
    int threads = 0; // worker cap, 0 = auto; never affects results
};

// Flat node pool per tree; feature == -1 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double prob0 = 0.0;
    double prob1 = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root
    int depth = 0;
    std::vector<std::uint32_t> usage; // split count per feature
};

struct ForestModel {
    std::vector<Tree> trees;
    ForestConfig config;
    std::vector<std::string> feature_names;
};

struct ForestDiagnostics {
    std::vector<std::vector<std::uint32_t>> usage_vectors;
    std::vector<int> depths;
    double mean_depth = 0.0;
    double median_depth = 0.0;
    double variety_sum = 0.0;   // sum over tree pairs of ||v_i - v_j||_2
    double variety_mean = 0.0;  // variety_sum / (B(B-1)/2)
    double avg_cosine_correlation = 0.0; // over unit-normalized usage vectors
    std::size_t zero_usage_trees = 0;    // excluded from the cosine average
    std::vector<std::uint64_t> aggregate_usage;
};

struct TrainResult {
    ForestModel model;
    ForestDiagnostics diagnostics;
};

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

struct VarietyResult {
    double variety_sum = 0.0;
    double variety_mean = 0.0;
    double avg_cosine = 0.0;
    std::size_t zero_excluded = 0;
};

// Two-class Gini impurity 2p(1-p) from weighted class totals.
double gini(double weight0, double weight1);

// Best weighted impurity decrease over the candidate features, thresholds
// at midpoints of consecutive distinct values. Empty when no split has
// positive gain. Ties go to the lower feature index, then lower threshold.
std::optional<SplitChoice> best_split(const pipeline::LabeledDataset& ds,
                                      std::span<const std::uint32_t> rows,
                                      std::span<const int> candidate_features,
                                      const std::array<double, 2>& class_weights);

// Bootstrap + random feature subsets, fully determined by (dataset, config).
// Per-tree seeds come from derive_seed(config.seed, tree_index), so the
// result is independent of the worker count.
TrainResult train(const pipeline::LabeledDataset& ds, const ForestConfig& config);

struct Prediction {
    int label = 0;
    std::array<double, 2> probabilities{0.0, 0.0};
};

// Soft vote: average of per-tree leaf distributions; ties resolve to 0.
Prediction predict(const ForestModel& model, std::span<const double> x);

// Unweighted fraction of correct test predictions.
double accuracy(const ForestModel& model, const pipeline::LabeledDataset& test);

// Variety and correlation over per-tree usage vectors; usable standalone.
VarietyResult diagnostics_variety(const std::vector<std::vector<std::uint32_t>>& usage_vectors);

} // namespace betaforge::rf

#endif
