#include "betaforge/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <thread>

#include "betaforge/rng.hpp"

namespace betaforge::experiments {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

DiagSummary summarize(const rf::ForestDiagnostics& diag) {
    DiagSummary s;
    s.mean_depth = diag.mean_depth;
    s.median_depth = diag.median_depth;
    s.variety_sum = diag.variety_sum;
    s.variety_mean = diag.variety_mean;
    s.avg_cosine = diag.avg_cosine_correlation;
    s.aggregate_usage = diag.aggregate_usage;
    return s;
}

void check_alignment(const pipeline::LabeledDataset& a, const pipeline::LabeledDataset& b) {
    if (a.n_rows() != b.n_rows()) throw std::invalid_argument("arms differ in row count");
    if (a.labels != b.labels) throw std::invalid_argument("arms differ in labels or ordering");
}

void run_indexed(std::size_t count, int threads, const std::function<void(std::size_t)>& work) {
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp<int>(workers, 1, static_cast<int>(count > 0 ? count : 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) work(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = static_cast<std::size_t>(w); i < count;
                 i += static_cast<std::size_t>(workers))
                work(i);
        });
    for (auto& th : pool) th.join();
}

} // namespace

SplitIndices split_train_test(const pipeline::LabeledDataset& ds, double ratio,
                              std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("ratio must be in (0,1)");
    std::vector<std::size_t> by_class[2];
    for (std::size_t r = 0; r < ds.n_rows(); ++r) by_class[ds.labels[r]].push_back(r);
    if (by_class[0].empty() || by_class[1].empty())
        throw std::invalid_argument("both classes must be present");

    SplitIndices out;
    for (int c = 0; c < 2; ++c) {
        auto& rows = by_class[c];
        if (rows.size() < 2)
            throw std::invalid_argument("class " + std::to_string(c) +
                                        " has fewer than two rows");
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            const std::size_t j = i + rng.uniform_index(rows.size() - i);
            std::swap(rows[i], rows[j]);
        }
        const auto n_train = static_cast<std::size_t>(
            std::llround(ratio * static_cast<double>(rows.size())));
        if (n_train == 0 || n_train == rows.size())
            throw std::invalid_argument("split leaves class " + std::to_string(c) +
                                        " empty on one side");
        out.train.insert(out.train.end(), rows.begin(), rows.begin() + n_train);
        out.test.insert(out.test.end(), rows.begin() + n_train, rows.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

pipeline::LabeledDataset subset(const pipeline::LabeledDataset& ds,
                                const std::vector<std::size_t>& rows) {
    pipeline::LabeledDataset out;
    out.feature_names = ds.feature_names;
    out.variant = ds.variant;
    out.n_informative = ds.n_informative;
    out.n_zero_variance = ds.n_zero_variance;
    out.values.reserve(rows.size() * ds.width());
    for (const std::size_t r : rows) out.push_row(ds.row(r), ds.labels[r]);
    return out;
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::better: return "better";
        case Verdict::worse: return "worse";
        case Verdict::tie: return "tie";
    }
    return "unknown";
}

PairwiseOutcome run_pairwise(const pipeline::LabeledDataset& arm_a,
                             const pipeline::LabeledDataset& arm_b,
                             const rf::ForestConfig& config, double split_ratio,
                             std::uint64_t split_seed, const std::string& pair_id) {
    check_alignment(arm_a, arm_b);
    const auto split = split_train_test(arm_a, split_ratio, split_seed);

    PairwiseOutcome outcome;
    outcome.pair_id = pair_id;
    const auto run_arm = [&](const pipeline::LabeledDataset& arm, double& acc,
                             DiagSummary& diag) {
        rf::ForestConfig cfg = config;
        cfg.max_features = std::min<int>(cfg.max_features, static_cast<int>(arm.width()));
        const auto trained = rf::train(subset(arm, split.train), cfg);
        acc = rf::accuracy(trained.model, subset(arm, split.test));
        diag = summarize(trained.diagnostics);
    };
    run_arm(arm_a, outcome.accuracy_a, outcome.diag_a);
    run_arm(arm_b, outcome.accuracy_b, outcome.diag_b);
    outcome.verdict = outcome.accuracy_b > outcome.accuracy_a
                          ? Verdict::better
                          : (outcome.accuracy_b < outcome.accuracy_a ? Verdict::worse
                                                                     : Verdict::tie);
    return outcome;
}

SignTestReport sign_test(long n_better, long n_worse, long n_tie) {
    if (n_better < 0 || n_worse < 0 || n_tie < 0)
        throw std::invalid_argument("counts must be non-negative");
    SignTestReport r;
    r.n_better = n_better;
    r.n_worse = n_worse;
    r.n_tie = n_tie;
    r.n_effective = n_better + n_worse;
    if (r.n_effective < 1) throw std::invalid_argument("sign test needs N' >= 1");
    const double n_eff = static_cast<double>(r.n_effective);
    r.mu = n_eff / 2.0;
    r.sigma = std::sqrt(n_eff / 4.0);
    r.z = (static_cast<double>(n_better) - 0.5 - r.mu) / r.sigma;
    r.p_one_sided = 0.5 * std::erfc(r.z / std::sqrt(2.0));
    return r;
}

BenchmarkResult run_paired_benchmark(const std::vector<PairedArms>& pairs,
                                     const BenchmarkConfig& config) {
    if (pairs.empty()) throw std::invalid_argument("no pairs to run");

    BenchmarkResult result;
    result.outcomes.resize(pairs.size());
    rf::ForestConfig forest = config.forest;
    if (pairs.size() > 1 && config.threads != 1) forest.threads = 1;

    run_indexed(pairs.size(), config.threads, [&](std::size_t k) {
        rf::ForestConfig cfg = forest;
        cfg.seed = derive_seed(config.experiment_seed, 2 * k + 1);
        const std::uint64_t split_seed = derive_seed(config.experiment_seed, 2 * k);
        result.outcomes[k] = run_pairwise(pairs[k].arm_a, pairs[k].arm_b, cfg,
                                          config.split_ratio, split_seed, pairs[k].id);
    });

    long better = 0, worse = 0, ties = 0;
    const std::size_t width_a = pairs[0].arm_a.width();
    const std::size_t width_b = pairs[0].arm_b.width();
    result.mean_usage_a.assign(width_a, 0.0);
    result.mean_usage_b.assign(width_b, 0.0);
    for (const auto& o : result.outcomes) {
        switch (o.verdict) {
            case Verdict::better: ++better; break;
            case Verdict::worse: ++worse; break;
            case Verdict::tie: ++ties; break;
        }
        result.mean_depth_a += o.diag_a.mean_depth;
        result.mean_depth_b += o.diag_b.mean_depth;
        result.mean_variety_a += o.diag_a.variety_mean;
        result.mean_variety_b += o.diag_b.variety_mean;
        for (std::size_t f = 0; f < width_a && f < o.diag_a.aggregate_usage.size(); ++f)
            result.mean_usage_a[f] += static_cast<double>(o.diag_a.aggregate_usage[f]);
        for (std::size_t f = 0; f < width_b && f < o.diag_b.aggregate_usage.size(); ++f)
            result.mean_usage_b[f] += static_cast<double>(o.diag_b.aggregate_usage[f]);
    }
    const double np = static_cast<double>(pairs.size());
    result.mean_depth_a /= np;
    result.mean_depth_b /= np;
    result.mean_variety_a /= np;
    result.mean_variety_b /= np;
    for (auto& u : result.mean_usage_a) u /= np;
    for (auto& u : result.mean_usage_b) u /= np;
    result.sign = sign_test(better, worse, ties);
    return result;
}

std::vector<PairedArms> make_digits_pairs(const pipeline::DigitsData& digits,
                                          std::size_t n_zv, double fill) {
    std::vector<PairedArms> pairs;
    for (const auto& [a, b] : pipeline::DigitsData::all_pairs()) {
        PairedArms p;
        p.id = std::to_string(a) + "v" + std::to_string(b);
        p.arm_a = digits.pair_dataset(a, b);
        p.arm_b = pipeline::augment_zero_variance(p.arm_a, n_zv, fill);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

std::vector<PairedArms> make_synth_pairs(const SynthBenchConfig& config) {
    if (config.n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
    std::vector<PairedArms> pairs(config.n_pairs);
    for (int k = 0; k < config.n_pairs; ++k) {
        // matched support and mean-fraction priors, concentration differs 2x
        pipeline::ArtistProfile low;
        low.name = "a" + std::to_string(k);
        low.alpha_lo = 1.5; low.alpha_hi = 2.5;
        low.beta_lo = 3.0; low.beta_hi = 5.0;
        pipeline::ArtistProfile high = low;
        high.name = "b" + std::to_string(k);
        high.alpha_lo = 3.0; high.alpha_hi = 5.0;
        high.beta_lo = 6.0; high.beta_hi = 10.0;
        for (auto* prof : {&low, &high}) {
            prof->support_min_lo = 20.0;
            prof->support_min_hi = 60.0;
            prof->support_width_lo = 60.0;
            prof->support_width_hi = 140.0;
            prof->events_per_artist = config.events_per_artist;
        }
        pipeline::SynthConfig synth;
        synth.profiles = {low, high};
        synth.snapshots_per_event = config.snapshots_per_event;
        synth.noise = config.noise;
        synth.seed = derive_seed(config.seed, static_cast<std::uint64_t>(k));
        const auto corpus = pipeline::synth_generate(synth);

        const auto basic =
            pipeline::build_basic(corpus.series, {low.name, high.name}, pipeline::Window::full());
        PairedArms& p = pairs[k];
        p.id = "pair" + std::to_string(k);
        p.arm_b = pipeline::build_alpha_beta(basic, pipeline::ImputePolicy::sentinel).dataset;
        p.arm_a = basic.dataset;
    }
    return pairs;
}

SweepResult sweep_m(const std::vector<PairedArms>& pairs, const std::vector<int>& m_values,
                    const BenchmarkConfig& config) {
    if (pairs.empty()) throw std::invalid_argument("no pairs to sweep");
    SweepResult result;
    result.m_values = m_values;

    std::size_t min_width_a = pairs[0].arm_a.width(), min_width_b = pairs[0].arm_b.width();
    for (const auto& p : pairs) {
        min_width_a = std::min(min_width_a, p.arm_a.width());
        min_width_b = std::min(min_width_b, p.arm_b.width());
    }

    for (const int m : m_values) {
        for (const char arm : {'a', 'b'}) {
            const std::size_t arm_width = arm == 'a' ? min_width_a : min_width_b;
            if (m < 1 || static_cast<std::size_t>(m) > arm_width) {
                result.warnings.push_back("m=" + std::to_string(m) + " exceeds arm " + arm +
                                          " width, skipped");
                continue;
            }
            SweepCell cell;
            cell.m = m;
            cell.arm = std::string(1, arm);
            cell.mean_usage.assign(arm == 'a' ? pairs[0].arm_a.width() : pairs[0].arm_b.width(),
                                   0.0);
            std::vector<double> acc(pairs.size(), 0.0), depth(pairs.size(), 0.0),
                variety(pairs.size(), 0.0);
            std::vector<std::vector<std::uint64_t>> usage(pairs.size());

            rf::ForestConfig forest = config.forest;
            forest.max_features = m;
            if (pairs.size() > 1 && config.threads != 1) forest.threads = 1;
            run_indexed(pairs.size(), config.threads, [&](std::size_t k) {
                const auto& ds = arm == 'a' ? pairs[k].arm_a : pairs[k].arm_b;
                rf::ForestConfig cfg = forest;
                cfg.seed = derive_seed(config.experiment_seed, 2 * k + 1);
                const std::uint64_t split_seed = derive_seed(config.experiment_seed, 2 * k);
                const auto split = split_train_test(ds, config.split_ratio, split_seed);
                const auto trained = rf::train(subset(ds, split.train), cfg);
                acc[k] = rf::accuracy(trained.model, subset(ds, split.test));
                depth[k] = trained.diagnostics.mean_depth;
                variety[k] = trained.diagnostics.variety_mean;
                usage[k] = trained.diagnostics.aggregate_usage;
            });

            for (std::size_t k = 0; k < pairs.size(); ++k) {
                cell.mean_accuracy += acc[k];
                cell.mean_depth += depth[k];
                cell.mean_variety += variety[k];
                for (std::size_t f = 0; f < cell.mean_usage.size() && f < usage[k].size(); ++f)
                    cell.mean_usage[f] += static_cast<double>(usage[k][f]);
            }
            const double np = static_cast<double>(pairs.size());
            cell.mean_accuracy /= np;
            cell.mean_depth /= np;
            cell.mean_variety /= np;
            for (auto& u : cell.mean_usage) u /= np;
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

nlohmann::ordered_json to_json(const SignTestReport& r) {
    return {{"n_better", r.n_better}, {"n_worse", r.n_worse},   {"n_tie", r.n_tie},
            {"n_effective", r.n_effective}, {"mu", r.mu},       {"sigma", r.sigma},
            {"z", r.z},                 {"p_one_sided", r.p_one_sided}};
}

namespace {

nlohmann::ordered_json to_json(const DiagSummary& d) {
    return {{"mean_depth", d.mean_depth},
            {"median_depth", d.median_depth},
            {"variety_sum", d.variety_sum},
            {"variety_mean", d.variety_mean},
            {"avg_cosine", d.avg_cosine},
            {"aggregate_usage", d.aggregate_usage}};
}

} // namespace

nlohmann::ordered_json to_json(const PairwiseOutcome& o) {
    return {{"pair", o.pair_id},
            {"accuracy_a", o.accuracy_a},
            {"accuracy_b", o.accuracy_b},
            {"verdict", to_string(o.verdict)},
            {"diag_a", to_json(o.diag_a)},
            {"diag_b", to_json(o.diag_b)}};
}

nlohmann::ordered_json to_json(const BenchmarkResult& r) {
    nlohmann::ordered_json outcomes = nlohmann::ordered_json::array();
    for (const auto& o : r.outcomes) outcomes.push_back(to_json(o));
    return {{"outcomes", std::move(outcomes)},
            {"sign_test", to_json(r.sign)},
            {"mean_depth_a", r.mean_depth_a},
            {"mean_depth_b", r.mean_depth_b},
            {"mean_variety_a", r.mean_variety_a},
            {"mean_variety_b", r.mean_variety_b},
            {"mean_usage_a", r.mean_usage_a},
            {"mean_usage_b", r.mean_usage_b}};
}

nlohmann::ordered_json to_json(const SweepResult& s) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : s.cells)
        cells.push_back({{"m", c.m},
                         {"arm", c.arm},
                         {"mean_accuracy", c.mean_accuracy},
                         {"mean_depth", c.mean_depth},
                         {"mean_variety", c.mean_variety},
                         {"mean_usage", c.mean_usage}});
    return {{"m_values", s.m_values}, {"cells", std::move(cells)}, {"warnings", s.warnings}};
}

nlohmann::ordered_json model_to_json(const rf::ForestModel& model) {
    nlohmann::ordered_json trees = nlohmann::ordered_json::array();
    for (const auto& tree : model.trees) {
        nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
        for (const auto& n : tree.nodes)
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.prob0, n.prob1});
        trees.push_back(
            {{"depth", tree.depth}, {"usage", tree.usage}, {"nodes", std::move(nodes)}});
    }
    return {{"schema_version", 1},
            {"kind", "forest_model"},
            {"config",
             {{"n_estimators", model.config.n_estimators},
              {"max_features", model.config.max_features},
              {"max_depth", model.config.max_depth},
              {"class_weight",
               model.config.class_weight == rf::ClassWeight::balanced ? "balanced" : "none"},
              {"seed", model.config.seed},
              {"no_valid_split",
               model.config.no_valid_split == rf::NoValidSplitPolicy::extend_until_valid
                   ? "extend_until_valid"
                   : "leaf"}}},
            {"feature_names", model.feature_names},
            {"trees", std::move(trees)}};
}

nlohmann::ordered_json make_report(const std::string& kind, nlohmann::ordered_json config,
                                   nlohmann::ordered_json seeds,
                                   const std::vector<PairwiseOutcome>& outcomes,
                                   const SignTestReport* sign, const SweepResult* sweep) {
    nlohmann::ordered_json outcome_arr = nlohmann::ordered_json::array();
    for (const auto& o : outcomes) outcome_arr.push_back(to_json(o));
    nlohmann::ordered_json diagnostics = nlohmann::ordered_json::array();
    for (const auto& o : outcomes) {
        diagnostics.push_back(
            {{"pair", o.pair_id}, {"arm", "a"}, {"summary", to_json(o.diag_a)}});
        diagnostics.push_back(
            {{"pair", o.pair_id}, {"arm", "b"}, {"summary", to_json(o.diag_b)}});
    }
    nlohmann::ordered_json report = {{"schema_version", 1},
                                     {"kind", kind},
                                     {"config", std::move(config)},
                                     {"seeds", std::move(seeds)},
                                     {"outcomes", std::move(outcome_arr)}};
    report["sign_test"] = sign ? to_json(*sign) : nlohmann::ordered_json::object();
    report["sweep"] = sweep ? to_json(*sweep)["cells"] : nlohmann::ordered_json::array();
    report["diagnostics"] = std::move(diagnostics);
    return report;
}

void emit_report(const nlohmann::ordered_json& report, ReportFormat format,
                 const std::string& path) {
    if (format == ReportFormat::json) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << report.dump(2) << "\n";
        if (!out) throw std::runtime_error("write failed: " + path);
        return;
    }

    std::filesystem::create_directories(path);
    const auto write_file = [&](const std::string& name, const std::string& body) {
        const auto full = std::filesystem::path(path) / name;
        std::ofstream out(full, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + full.string());
        out << body;
        if (!out) throw std::runtime_error("write failed: " + full.string());
    };

    std::string outcomes = "pair,accuracy_a,accuracy_b,verdict\n";
    long counts[3] = {0, 0, 0}; // better, worse, tie
    for (const auto& o : report.at("outcomes")) {
        const std::string verdict = o.at("verdict");
        outcomes += o.at("pair").get<std::string>() + "," +
                    fmt_double(o.at("accuracy_a").get<double>()) + "," +
                    fmt_double(o.at("accuracy_b").get<double>()) + "," + verdict + "\n";
        if (verdict == "better") ++counts[0];
        else if (verdict == "worse") ++counts[1];
        else ++counts[2];
    }
    write_file("outcomes.csv", outcomes);
    write_file("outcome_bars.csv", "verdict,count\nbetter," + std::to_string(counts[0]) +
                                       "\nworse," + std::to_string(counts[1]) + "\ntie," +
                                       std::to_string(counts[2]) + "\n");

    std::string depth = "pair,arm,mean_depth\n";
    std::string variety = "pair,arm,variety_mean\n";
    std::string usage = "pair,arm,feature,mean_usage\n";
    for (const auto& d : report.at("diagnostics")) {
        const std::string pair = d.at("pair");
        const std::string arm = d.at("arm");
        const auto& s = d.at("summary");
        depth += pair + "," + arm + "," + fmt_double(s.at("mean_depth").get<double>()) + "\n";
        variety += pair + "," + arm + "," + fmt_double(s.at("variety_mean").get<double>()) + "\n";
        const auto& agg = s.at("aggregate_usage");
        for (std::size_t f = 0; f < agg.size(); ++f)
            usage += pair + "," + arm + "," + std::to_string(f) + "," +
                     std::to_string(agg[f].get<std::uint64_t>()) + "\n";
    }
    write_file("depth_dist.csv", depth);
    write_file("variety_dist.csv", variety);
    write_file("usage_hist.csv", usage);

    std::string sweep = "m,arm,mean_accuracy,mean_depth,mean_variety\n";
    for (const auto& c : report.at("sweep"))
        sweep += std::to_string(c.at("m").get<int>()) + "," + c.at("arm").get<std::string>() +
                 "," + fmt_double(c.at("mean_accuracy").get<double>()) + "," +
                 fmt_double(c.at("mean_depth").get<double>()) + "," +
                 fmt_double(c.at("mean_variety").get<double>()) + "\n";
    write_file("sweep_accuracy.csv", sweep);
}

std::vector<std::string> validate_against_schema(const nlohmann::json& doc,
                                                 const nlohmann::json& schema) {
    std::vector<std::string> errors;
    const std::function<void(const nlohmann::json&, const nlohmann::json&, const std::string&)>
        walk = [&](const nlohmann::json& node, const nlohmann::json& spec,
                   const std::string& where) {
            if (spec.contains("type")) {
                const std::string type = spec.at("type");
                const bool ok = (type == "object" && node.is_object()) ||
                                (type == "array" && node.is_array()) ||
                                (type == "string" && node.is_string()) ||
                                (type == "number" && node.is_number()) ||
                                (type == "integer" && node.is_number_integer()) ||
                                (type == "boolean" && node.is_boolean());
                if (!ok) {
                    errors.push_back(where + ": expected " + type);
                    return;
                }
            }
            if (spec.contains("required")) {
                for (const auto& key : spec.at("required"))
                    if (!node.contains(key.get<std::string>()))
                        errors.push_back(where + ": missing required field " +
                                         key.get<std::string>());
            }
            if (spec.contains("properties") && node.is_object()) {
                for (const auto& [key, sub] : spec.at("properties").items())
                    if (node.contains(key)) walk(node.at(key), sub, where + "." + key);
            }
            if (spec.contains("items") && node.is_array()) {
                std::size_t i = 0;
                for (const auto& el : node) walk(el, spec.at("items"), where + "[" + std::to_string(i++) + "]");
            }
        };
    walk(doc, schema, "$");
    return errors;
}

} // namespace betaforge::experiments
