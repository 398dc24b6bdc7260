#include "betaforge/forest.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "betaforge/rng.hpp"

namespace betaforge::rf {

namespace {

struct Scratch {
    std::vector<std::pair<double, std::uint8_t>> sorted; // (value, label)
    std::vector<int> feature_order;
};

// Weighted impurity decrease for one feature over the node rows; empty if
// the feature admits no split with positive gain.
std::optional<SplitChoice> best_split_for_feature(const pipeline::LabeledDataset& ds,
                                                  std::span<const std::uint32_t> rows,
                                                  int feature,
                                                  const std::array<double, 2>& cw,
                                                  Scratch& scratch) {
    auto& sorted = scratch.sorted;
    sorted.clear();
    double tw[2] = {0.0, 0.0};
    for (const std::uint32_t r : rows) {
        const int label = ds.labels[r];
        sorted.emplace_back(ds.at(r, feature), static_cast<std::uint8_t>(label));
        tw[label] += cw[label];
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    if (sorted.front().first == sorted.back().first) return std::nullopt;

    const double w_parent = tw[0] + tw[1];
    const double g_parent = 2.0 * tw[0] * tw[1] / (w_parent * w_parent);

    SplitChoice best;
    double lw[2] = {0.0, 0.0};
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        lw[sorted[i - 1].second] += cw[sorted[i - 1].second];
        if (sorted[i].first == sorted[i - 1].first) continue;
        const double wl = lw[0] + lw[1];
        const double rw0 = tw[0] - lw[0];
        const double rw1 = tw[1] - lw[1];
        const double wr = rw0 + rw1;
        const double children = 2.0 * (lw[0] * lw[1] / wl + rw0 * rw1 / wr) / w_parent;
        const double gain = g_parent - children;
        const double threshold = 0.5 * (sorted[i - 1].first + sorted[i].first);
        if (gain > best.gain || (gain == best.gain && best.feature >= 0 && threshold < best.threshold)) {
            best = {feature, threshold, gain};
        }
    }
    if (best.gain > 0.0) return best;
    return std::nullopt;
}

struct TreeBuilder {
    const pipeline::LabeledDataset& ds;
    const ForestConfig& config;
    const std::array<double, 2>& cw;
    Tree tree;
    std::vector<std::uint32_t> rows;
    Scratch scratch;
    Rng rng;

    TreeBuilder(const pipeline::LabeledDataset& d, const ForestConfig& c,
                const std::array<double, 2>& weights, std::uint64_t seed)
        : ds(d), config(c), cw(weights), rng(seed) {
        tree.usage.assign(d.width(), 0);
        rows.resize(d.n_rows());
        for (auto& r : rows) r = static_cast<std::uint32_t>(rng.uniform_index(d.n_rows()));
        scratch.feature_order.resize(d.width());
    }

    int make_leaf(std::size_t begin, std::size_t end, int depth) {
        double w[2] = {0.0, 0.0};
        for (std::size_t i = begin; i < end; ++i) w[ds.labels[rows[i]]] += cw[ds.labels[rows[i]]];
        TreeNode leaf;
        const double total = w[0] + w[1];
        leaf.prob0 = w[0] / total;
        leaf.prob1 = w[1] / total;
        tree.nodes.push_back(leaf);
        tree.depth = std::max(tree.depth, depth);
        return static_cast<int>(tree.nodes.size() - 1);
    }

    int build(std::size_t begin, std::size_t end, int depth) {
        double w[2] = {0.0, 0.0};
        for (std::size_t i = begin; i < end; ++i) w[ds.labels[rows[i]]] += cw[ds.labels[rows[i]]];
        const bool pure = w[0] == 0.0 || w[1] == 0.0;
        if (pure || depth >= config.max_depth || end - begin < 2)
            return make_leaf(begin, end, depth);

        auto& order = scratch.feature_order;
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const std::size_t j = i + rng.uniform_index(order.size() - i);
            std::swap(order[i], order[j]);
        }

        const std::span<const std::uint32_t> node_rows{rows.data() + begin, end - begin};
        const std::size_t m = std::min<std::size_t>(config.max_features, order.size());
        std::optional<SplitChoice> best;
        for (std::size_t k = 0; k < m; ++k) {
            auto cand = best_split_for_feature(ds, node_rows, order[k], cw, scratch);
            if (!cand) continue;
            if (!best || cand->gain > best->gain ||
                (cand->gain == best->gain &&
                 (cand->feature < best->feature ||
                  (cand->feature == best->feature && cand->threshold < best->threshold))))
                best = cand;
        }
        if (!best && config.no_valid_split == NoValidSplitPolicy::extend_until_valid) {
            // keep drawing from the remaining permutation, first valid wins
            for (std::size_t k = m; k < order.size() && !best; ++k)
                best = best_split_for_feature(ds, node_rows, order[k], cw, scratch);
        }
        if (!best) return make_leaf(begin, end, depth);

        const int f = best->feature;
        const double thr = best->threshold;
        auto mid_it = std::partition(rows.begin() + begin, rows.begin() + end,
                                     [&](std::uint32_t r) { return ds.at(r, f) <= thr; });
        const std::size_t mid = static_cast<std::size_t>(mid_it - rows.begin());

        ++tree.usage[f];
        tree.nodes.push_back(TreeNode{});
        const int node_id = static_cast<int>(tree.nodes.size() - 1);
        tree.nodes[node_id].feature = f;
        tree.nodes[node_id].threshold = thr;
        const int left = build(begin, mid, depth + 1);
        const int right = build(mid, end, depth + 1);
        tree.nodes[node_id].left = left;
        tree.nodes[node_id].right = right;
        return node_id;
    }

    Tree run() {
        build(0, rows.size(), 0);
        return std::move(tree);
    }
};

} // namespace

double gini(double weight0, double weight1) {
    const double total = weight0 + weight1;
    if (!(total > 0.0)) throw std::invalid_argument("gini of an empty node");
    const double p = weight0 / total;
    return 2.0 * p * (1.0 - p);
}

std::optional<SplitChoice> best_split(const pipeline::LabeledDataset& ds,
                                      std::span<const std::uint32_t> rows,
                                      std::span<const int> candidate_features,
                                      const std::array<double, 2>& class_weights) {
    if (rows.size() < 2) throw std::invalid_argument("best_split needs at least two rows");
    Scratch scratch;
    std::optional<SplitChoice> best;
    for (const int f : candidate_features) {
        auto cand = best_split_for_feature(ds, rows, f, class_weights, scratch);
        if (!cand) continue;
        if (!best || cand->gain > best->gain ||
            (cand->gain == best->gain &&
             (cand->feature < best->feature ||
              (cand->feature == best->feature && cand->threshold < best->threshold))))
            best = cand;
    }
    return best;
}

TrainResult train(const pipeline::LabeledDataset& ds, const ForestConfig& config) {
    if (config.n_estimators < 1) throw std::invalid_argument("n_estimators must be >= 1");
    if (config.max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (config.max_features < 1 ||
        static_cast<std::size_t>(config.max_features) > ds.width())
        throw std::invalid_argument("max_features must be in [1, feature count]");
    std::size_t n_by_class[2] = {0, 0};
    for (const int l : ds.labels) {
        if (l != 0 && l != 1) throw std::invalid_argument("labels must be 0 or 1");
        ++n_by_class[l];
    }
    if (n_by_class[0] == 0 || n_by_class[1] == 0)
        throw std::invalid_argument("training data must contain both classes");

    // balanced weights from the full training set, applied to bootstrap rows
    std::array<double, 2> cw = {1.0, 1.0};
    if (config.class_weight == ClassWeight::balanced) {
        const double n = static_cast<double>(ds.n_rows());
        cw = {n / (2.0 * n_by_class[0]), n / (2.0 * n_by_class[1])};
    }

    const int n_trees = config.n_estimators;
    std::vector<Tree> trees(n_trees);
    auto build_range = [&](int first, int stride) {
        for (int t = first; t < n_trees; t += stride) {
            TreeBuilder builder(ds, config, cw, derive_seed(config.seed, t));
            trees[t] = builder.run();
        }
    };

    int workers = config.threads > 0 ? config.threads
                                     : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, n_trees);
    if (workers == 1) {
        build_range(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(build_range, w, workers);
        for (auto& th : pool) th.join();
    }

    TrainResult result;
    result.model.config = config;
    result.model.feature_names = ds.feature_names;

    ForestDiagnostics& diag = result.diagnostics;
    diag.aggregate_usage.assign(ds.width(), 0);
    for (const auto& tree : trees) {
        diag.usage_vectors.push_back(tree.usage);
        diag.depths.push_back(tree.depth);
        for (std::size_t f = 0; f < ds.width(); ++f) diag.aggregate_usage[f] += tree.usage[f];
    }
    double depth_sum = 0.0;
    for (const int d : diag.depths) depth_sum += d;
    diag.mean_depth = depth_sum / n_trees;
    std::vector<int> sorted_depths = diag.depths;
    std::sort(sorted_depths.begin(), sorted_depths.end());
    diag.median_depth = n_trees % 2 == 1
                            ? sorted_depths[n_trees / 2]
                            : 0.5 * (sorted_depths[n_trees / 2 - 1] + sorted_depths[n_trees / 2]);
    if (n_trees >= 2) {
        const auto variety = diagnostics_variety(diag.usage_vectors);
        diag.variety_sum = variety.variety_sum;
        diag.variety_mean = variety.variety_mean;
        diag.avg_cosine_correlation = variety.avg_cosine;
        diag.zero_usage_trees = variety.zero_excluded;
    }

    result.model.trees = std::move(trees);
    return result;
}

Prediction predict(const ForestModel& model, std::span<const double> x) {
    if (x.size() != model.feature_names.size())
        throw std::invalid_argument("feature vector width mismatch");
    double acc0 = 0.0, acc1 = 0.0;
    for (const auto& tree : model.trees) {
        int node = 0;
        while (tree.nodes[node].feature >= 0) {
            const auto& n = tree.nodes[node];
            node = x[n.feature] <= n.threshold ? n.left : n.right;
        }
        acc0 += tree.nodes[node].prob0;
        acc1 += tree.nodes[node].prob1;
    }
    const double b = static_cast<double>(model.trees.size());
    Prediction pred;
    pred.probabilities = {acc0 / b, acc1 / b};
    pred.label = pred.probabilities[1] > pred.probabilities[0] ? 1 : 0;
    return pred;
}

double accuracy(const ForestModel& model, const pipeline::LabeledDataset& test) {
    if (test.n_rows() == 0) throw std::invalid_argument("empty test set");
    std::size_t correct = 0;
    for (std::size_t r = 0; r < test.n_rows(); ++r)
        if (predict(model, test.row(r)).label == test.labels[r]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(test.n_rows());
}

VarietyResult diagnostics_variety(const std::vector<std::vector<std::uint32_t>>& usage_vectors) {
    const std::size_t b = usage_vectors.size();
    if (b < 2) throw std::invalid_argument("variety needs at least two trees");
    const std::size_t width = usage_vectors[0].size();
    for (const auto& v : usage_vectors)
        if (v.size() != width) throw std::invalid_argument("usage vector width mismatch");

    std::vector<double> norms(b, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
        double sq = 0.0;
        for (const auto c : usage_vectors[i]) sq += static_cast<double>(c) * c;
        norms[i] = std::sqrt(sq);
    }

    VarietyResult out;
    double cos_sum = 0.0;
    std::size_t cos_pairs = 0;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = i + 1; j < b; ++j) {
            double dist_sq = 0.0, dot = 0.0;
            for (std::size_t f = 0; f < width; ++f) {
                const double d = static_cast<double>(usage_vectors[i][f]) -
                                 static_cast<double>(usage_vectors[j][f]);
                dist_sq += d * d;
                dot += static_cast<double>(usage_vectors[i][f]) *
                       static_cast<double>(usage_vectors[j][f]);
            }
            out.variety_sum += std::sqrt(dist_sq);
            if (norms[i] > 0.0 && norms[j] > 0.0) {
                cos_sum += dot / (norms[i] * norms[j]);
                ++cos_pairs;
            }
        }
    }
    out.variety_mean = out.variety_sum / (static_cast<double>(b) * (b - 1) / 2.0);
    out.avg_cosine = cos_pairs > 0 ? cos_sum / cos_pairs : 0.0;
    for (const double n : norms)
        if (n == 0.0) ++out.zero_excluded;
    return out;
}

} // namespace betaforge::rf
