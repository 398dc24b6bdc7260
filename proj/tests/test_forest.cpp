#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "betaforge/feature_pipeline.hpp"
#include "betaforge/forest.hpp"
#include "betaforge/rng.hpp"

using namespace betaforge;
using rf::ForestConfig;
using pipeline::LabeledDataset;

namespace {

LabeledDataset make_ds(const std::vector<std::vector<double>>& rows,
                       const std::vector<int>& labels, std::size_t n_zv = 0) {
    LabeledDataset ds;
    ds.n_informative = rows[0].size() - n_zv;
    ds.n_zero_variance = n_zv;
    for (std::size_t f = 0; f < rows[0].size(); ++f)
        ds.feature_names.push_back("f" + std::to_string(f));
    for (std::size_t r = 0; r < rows.size(); ++r) ds.push_row(rows[r], labels[r]);
    return ds;
}

// labels follow a noisy linear rule over a few features
LabeledDataset random_ds(std::size_t n_rows, std::size_t width, std::uint64_t seed,
                         std::size_t n_zv = 0) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (std::size_t r = 0; r < n_rows; ++r) {
        std::vector<double> row(width);
        for (std::size_t f = 0; f < width - n_zv; ++f) row[f] = rng.uniform(0.0, 10.0);
        for (std::size_t f = width - n_zv; f < width; ++f) row[f] = 1.0;
        const double score = row[0] + 0.5 * row[1 % width] + rng.normal();
        rows.push_back(row);
        labels.push_back(score > 7.5 ? 1 : 0);
    }
    // ensure both classes exist
    labels[0] = 0;
    labels[1] = 1;
    return make_ds(rows, labels, n_zv);
}

bool same_tree(const rf::Tree& a, const rf::Tree& b) {
    if (a.depth != b.depth || a.usage != b.usage || a.nodes.size() != b.nodes.size())
        return false;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        const auto& x = a.nodes[i];
        const auto& y = b.nodes[i];
        if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left ||
            x.right != y.right || x.prob0 != y.prob0 || x.prob1 != y.prob1)
            return false;
    }
    return true;
}

bool same_model(const rf::ForestModel& a, const rf::ForestModel& b) {
    if (a.trees.size() != b.trees.size()) return false;
    for (std::size_t t = 0; t < a.trees.size(); ++t)
        if (!same_tree(a.trees[t], b.trees[t])) return false;
    return true;
}

} // namespace

TEST_CASE("gini") {
    CHECK(rf::gini(5.0, 5.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(rf::gini(10.0, 0.0) == 0.0);
    CHECK(rf::gini(3.0, 1.0) == doctest::Approx(0.375).epsilon(1e-15));
    CHECK_THROWS_AS(rf::gini(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("best_split finds nothing on a constant feature") {
    const auto ds = make_ds({{1.0, 3.0}, {1.0, 4.0}, {1.0, 5.0}, {1.0, 6.0}},
                            {0, 1, 0, 1});
    const std::uint32_t rows[] = {0, 1, 2, 3};
    const int constant_only[] = {0};
    CHECK_FALSE(rf::best_split(ds, rows, constant_only, {1.0, 1.0}).has_value());
}

TEST_CASE("best_split takes the full gain on a perfect separator") {
    const auto ds = make_ds({{2.0}, {3.0}, {8.0}, {9.0}}, {0, 0, 1, 1});
    const std::uint32_t rows[] = {0, 1, 2, 3};
    const int candidates[] = {0};
    const auto split = rf::best_split(ds, rows, candidates, {1.0, 1.0});
    REQUIRE(split.has_value());
    CHECK(split->gain == doctest::Approx(0.5).epsilon(1e-12)); // parent gini, children pure
    CHECK(split->threshold == doctest::Approx(5.5).epsilon(1e-15));
}

TEST_CASE("best_split breaks exact ties toward the lower feature index") {
    // feature 1 duplicates feature 0, both separate perfectly
    const auto ds = make_ds({{2.0, 2.0}, {3.0, 3.0}, {8.0, 8.0}, {9.0, 9.0}}, {0, 0, 1, 1});
    const std::uint32_t rows[] = {0, 1, 2, 3};
    const int candidates[] = {1, 0}; // drawn order must not matter
    const auto split = rf::best_split(ds, rows, candidates, {1.0, 1.0});
    REQUIRE(split.has_value());
    CHECK(split->feature == 0);
}

TEST_CASE("best_split thresholds sit strictly inside the node's value range") {
    const auto ds = random_ds(60, 4, 5);
    std::vector<std::uint32_t> rows(ds.n_rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);
    const int candidates[] = {0, 1, 2, 3};
    const auto split = rf::best_split(ds, rows, candidates, {1.0, 1.0});
    REQUIRE(split.has_value());
    double lo = ds.at(0, split->feature), hi = lo;
    for (const auto r : rows) {
        lo = std::min(lo, ds.at(r, split->feature));
        hi = std::max(hi, ds.at(r, split->feature));
    }
    CHECK(split->threshold > lo);
    CHECK(split->threshold < hi);
}

TEST_CASE("train is deterministic and independent of the worker count") {
    const auto ds = random_ds(80, 5, 3);
    ForestConfig cfg;
    cfg.n_estimators = 20;
    cfg.max_features = 2;
    cfg.threads = 1;
    const auto first = rf::train(ds, cfg);
    const auto second = rf::train(ds, cfg);
    CHECK(same_model(first.model, second.model));
    CHECK(first.diagnostics.depths == second.diagnostics.depths);
    CHECK(first.diagnostics.variety_sum == second.diagnostics.variety_sum);

    ForestConfig threaded = cfg;
    threaded.threads = 4;
    const auto parallel = rf::train(ds, threaded);
    CHECK(same_model(first.model, parallel.model));
}

TEST_CASE("a single decisive binary feature gives depth-1 trees") {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    Rng rng(17);
    for (int r = 0; r < 40; ++r) {
        const double flag = r % 2 == 0 ? 0.0 : 1.0;
        rows.push_back({flag, rng.uniform(), rng.uniform(), rng.uniform()});
        labels.push_back(flag > 0.5 ? 1 : 0);
    }
    const auto ds = make_ds(rows, labels);
    ForestConfig cfg;
    cfg.n_estimators = 30;
    cfg.max_features = 4;
    const auto trained = rf::train(ds, cfg);
    for (const auto& tree : trained.model.trees) {
        CHECK(tree.depth == 1);
        CHECK(tree.usage[0] == 1);
        CHECK(tree.usage[1] + tree.usage[2] + tree.usage[3] == 0);
    }
}

TEST_CASE("train rejects invalid configurations") {
    const auto ds = random_ds(20, 3, 1);
    ForestConfig cfg;
    cfg.max_features = 5; // wider than the dataset
    CHECK_THROWS_AS(rf::train(ds, cfg), std::invalid_argument);

    auto single = ds;
    for (auto& l : single.labels) l = 0;
    cfg.max_features = 2;
    CHECK_THROWS_AS(rf::train(single, cfg), std::invalid_argument);
}

TEST_CASE("predict averages tree distributions") {
    SUBCASE("B=1 forest equals its tree's leaf distribution") {
        const auto ds = random_ds(50, 3, 9);
        ForestConfig cfg;
        cfg.n_estimators = 1;
        cfg.max_features = 2;
        const auto trained = rf::train(ds, cfg);
        const auto pred = rf::predict(trained.model, ds.row(0));
        int node = 0;
        const auto& tree = trained.model.trees[0];
        while (tree.nodes[node].feature >= 0) {
            const auto& n = tree.nodes[node];
            node = ds.at(0, n.feature) <= n.threshold ? n.left : n.right;
        }
        CHECK(pred.probabilities[0] == tree.nodes[node].prob0);
        CHECK(pred.probabilities[1] == tree.nodes[node].prob1);
    }
    SUBCASE("unanimous vote and the tie rule") {
        rf::ForestModel model;
        model.feature_names = {"f0"};
        rf::Tree leaf1, leaf2;
        leaf1.nodes.push_back({-1, 0.0, -1, -1, 0.0, 1.0});
        leaf2.nodes.push_back({-1, 0.0, -1, -1, 0.0, 1.0});
        model.trees = {leaf1, leaf2};
        const double x[] = {0.0};
        auto pred = rf::predict(model, x);
        CHECK(pred.label == 1);
        CHECK(pred.probabilities[1] == 1.0);

        model.trees[1].nodes[0] = {-1, 0.0, -1, -1, 1.0, 0.0};
        pred = rf::predict(model, x);
        CHECK(pred.probabilities[0] == 0.5);
        CHECK(pred.label == 0); // tie resolves to 0

        const double wide[] = {0.0, 1.0};
        CHECK_THROWS_AS(rf::predict(model, wide), std::invalid_argument);
    }
}

TEST_CASE("diagnostics_variety") {
    SUBCASE("identical usage vectors") {
        const std::vector<std::vector<std::uint32_t>> usage = {{2, 1}, {2, 1}, {2, 1}};
        const auto v = rf::diagnostics_variety(usage);
        CHECK(v.variety_sum == 0.0);
        CHECK(v.avg_cosine == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("disjoint single-feature usage") {
        const std::vector<std::vector<std::uint32_t>> usage = {{1, 0}, {0, 1}};
        const auto v = rf::diagnostics_variety(usage);
        CHECK(v.avg_cosine == 0.0);
        CHECK(v.variety_mean == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    }
    SUBCASE("zero vectors are excluded and counted") {
        const std::vector<std::vector<std::uint32_t>> usage = {{1, 0}, {0, 0}, {0, 1}};
        const auto v = rf::diagnostics_variety(usage);
        CHECK(v.zero_excluded == 1);
        CHECK(v.avg_cosine == 0.0); // only the (1,3) pair counts
    }
    SUBCASE("cosine equals 1 - half squared distance for unit vectors") {
        std::mt19937_64 engine(123);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int rep = 0; rep < 50; ++rep) {
            double v[4], w[4], nv = 0.0, nw = 0.0;
            for (int i = 0; i < 4; ++i) {
                v[i] = uni(engine);
                w[i] = uni(engine);
                nv += v[i] * v[i];
                nw += w[i] * w[i];
            }
            nv = std::sqrt(nv);
            nw = std::sqrt(nw);
            double dot = 0.0, dist_sq = 0.0;
            for (int i = 0; i < 4; ++i) {
                const double a = v[i] / nv, b = w[i] / nw;
                dot += a * b;
                dist_sq += (a - b) * (a - b);
            }
            CHECK(dot == doctest::Approx(1.0 - 0.5 * dist_sq).epsilon(1e-12));
        }
    }
}

TEST_CASE("zero-variance columns never split but reshape the draws") {
    const auto plain = random_ds(120, 6, 21);
    const auto padded = pipeline::augment_zero_variance(plain, 20);

    ForestConfig cfg;
    cfg.n_estimators = 40;
    cfg.max_features = 6;
    const auto base = rf::train(plain, cfg);
    const auto reg = rf::train(padded, cfg);

    for (std::size_t f = 6; f < 26; ++f) CHECK(reg.diagnostics.aggregate_usage[f] == 0);
    // same seed, different candidate lotteries: informative usage shifts
    bool usage_differs = false;
    for (std::size_t f = 0; f < 6; ++f)
        if (base.diagnostics.aggregate_usage[f] != reg.diagnostics.aggregate_usage[f])
            usage_differs = true;
    CHECK(usage_differs);
}

TEST_CASE("the constant's value is irrelevant") {
    const auto plain = random_ds(100, 5, 33);
    const auto ones = pipeline::augment_zero_variance(plain, 10, 1.0);
    const auto sevens = pipeline::augment_zero_variance(plain, 10, 7.3);
    ForestConfig cfg;
    cfg.n_estimators = 15;
    cfg.max_features = 3;
    const auto a = rf::train(ones, cfg);
    const auto b = rf::train(sevens, cfg);
    CHECK(same_model(a.model, b.model));
}

TEST_CASE("balanced weighting moves imbalanced leaf distributions") {
    // 90/10 imbalance on an uninformative feature
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int r = 0; r < 100; ++r) {
        rows.push_back({static_cast<double>(r % 7)});
        labels.push_back(r < 90 ? 0 : 1);
    }
    const auto ds = make_ds(rows, labels);
    ForestConfig cfg;
    cfg.n_estimators = 5;
    cfg.max_features = 1;
    cfg.max_depth = 1;

    cfg.class_weight = rf::ClassWeight::none;
    const auto plain = rf::train(ds, cfg);
    cfg.class_weight = rf::ClassWeight::balanced;
    const auto balanced = rf::train(ds, cfg);

    const auto p_plain = rf::predict(plain.model, ds.row(0)).probabilities[1];
    const auto p_balanced = rf::predict(balanced.model, ds.row(0)).probabilities[1];
    CHECK(p_balanced > p_plain); // minority class regains weight
}

TEST_CASE("regularized digits arm grows deeper trees") {
    const std::string path = std::string(TEST_DATA_DIR) + "/digits.csv";
    const auto digits = pipeline::load_digits(path, 6, 42);
    const auto plain = digits.pair_dataset(3, 8);
    const auto reg = pipeline::augment_zero_variance(plain, 20);

    ForestConfig cfg; // Table-1 style, m = 6
    cfg.n_estimators = 100;
    cfg.max_features = 6;
    const auto base = rf::train(plain, cfg);
    const auto diluted = rf::train(reg, cfg);
    CHECK(diluted.diagnostics.mean_depth > base.diagnostics.mean_depth);
    CHECK(diluted.diagnostics.variety_mean > base.diagnostics.variety_mean);
}
