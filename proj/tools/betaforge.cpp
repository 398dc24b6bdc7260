#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "betaforge/divergence.hpp"
#include "betaforge/experiments.hpp"
#include "betaforge/feature_pipeline.hpp"
#include "betaforge/forest.hpp"
#include "betaforge/scaled_beta.hpp"
#include "betaforge/selection_theory.hpp"

namespace bf = betaforge;
using nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<double> read_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<double> samples;
    double v;
    while (in >> v) samples.push_back(v);
    if (!in.eof()) throw std::runtime_error(path + ": non-numeric sample data");
    return samples;
}

ordered_json divergence_json(const bf::divergence::DivergenceReport& r) {
    return {{"hellinger", r.hellinger},       {"js_nats", r.js_nats},
            {"kl_forward", r.kl_forward},     {"kl_reverse", r.kl_reverse},
            {"tv", r.tv},                     {"theorem3_lhs", r.theorem3_lhs},
            {"theorem3_rhs", r.theorem3_rhs}, {"theorem3_holds", r.theorem3_holds}};
}

std::string dataset_csv(const bf::pipeline::LabeledDataset& ds) {
    std::string body;
    for (const auto& name : ds.feature_names) body += name + ",";
    body += "label\n";
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        for (const double v : ds.row(r)) body += fmt(v) + ",";
        body += std::to_string(ds.labels[r]) + "\n";
    }
    return body;
}

struct ForestFlags {
    int trees = 100;
    int max_features = 2;
    int max_depth = 100;
    std::string class_weight = "balanced";
    std::uint64_t seed = 42;
    std::string no_valid_split = "extend";
    int threads = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--trees", trees, "number of trees")->capture_default_str();
        cmd->add_option("--m,--max-features", max_features, "features drawn per split")
            ->capture_default_str();
        cmd->add_option("--max-depth", max_depth, "depth limit")->capture_default_str();
        cmd->add_option("--class-weight", class_weight, "balanced or none")
            ->check(CLI::IsMember({"balanced", "none"}))
            ->capture_default_str();
        cmd->add_option("--seed", seed, "forest master seed")->capture_default_str();
        cmd->add_option("--no-valid-split", no_valid_split,
                        "policy when drawn candidates cannot split: extend or leaf")
            ->check(CLI::IsMember({"extend", "leaf"}))
            ->capture_default_str();
    }

    bf::rf::ForestConfig to_config() const {
        bf::rf::ForestConfig cfg;
        cfg.n_estimators = trees;
        cfg.max_features = max_features;
        cfg.max_depth = max_depth;
        cfg.class_weight =
            class_weight == "balanced" ? bf::rf::ClassWeight::balanced : bf::rf::ClassWeight::none;
        cfg.seed = seed;
        cfg.no_valid_split = no_valid_split == "leaf"
                                 ? bf::rf::NoValidSplitPolicy::leaf
                                 : bf::rf::NoValidSplitPolicy::extend_until_valid;
        cfg.threads = threads;
        return cfg;
    }

    // worker cap stays out of the echo: reports are byte-identical
    // whatever --threads says
    ordered_json echo() const {
        return {{"trees", trees},         {"max_features", max_features},
                {"max_depth", max_depth}, {"class_weight", class_weight},
                {"seed", seed},           {"no_valid_split", no_valid_split}};
    }
};

bf::pipeline::Window parse_window(const std::string& spec) {
    if (spec == "full") return bf::pipeline::Window::full();
    if (spec.rfind("last:", 0) == 0) {
        const int k = std::stoi(spec.substr(5));
        if (k < 1) throw CLI::ValidationError("--window", "last:K needs K >= 1");
        return bf::pipeline::Window::last(k);
    }
    throw CLI::ValidationError("--window", "expected 'full' or 'last:K'");
}

std::pair<std::string, std::string> parse_pair(const std::string& spec) {
    const auto comma = spec.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == spec.size())
        throw CLI::ValidationError("--pair", "expected 'first,second'");
    return {spec.substr(0, comma), spec.substr(comma + 1)};
}

void emit(const ordered_json& report, const std::string& report_path,
          const std::string& csv_dir) {
    if (!report_path.empty())
        bf::experiments::emit_report(report, bf::experiments::ReportFormat::json, report_path);
    if (!csv_dir.empty())
        bf::experiments::emit_report(report, bf::experiments::ReportFormat::csv, csv_dir);
}

// Builds the two feature-set arms for one artist pair from event data.
struct EventArms {
    bf::pipeline::LabeledDataset arm_a;
    bf::pipeline::LabeledDataset arm_b;
    std::size_t dropped = 0;
    std::size_t imputed = 0;
};

bf::pipeline::LabeledDataset build_event_variant(const bf::pipeline::BasicBuildResult& basic,
                                                 const std::string& variant, std::size_t n_zv,
                                                 double fill, std::size_t& imputed) {
    if (variant == "basic") return basic.dataset;
    const auto ab = bf::pipeline::build_alpha_beta(basic);
    imputed = std::max(imputed, ab.imputed);
    if (variant == "alpha_beta") return ab.dataset;
    if (variant == "alpha_beta_reg")
        return bf::pipeline::augment_zero_variance(ab.dataset, n_zv, fill);
    throw CLI::ValidationError("--arm", "unknown variant " + variant);
}

EventArms build_event_arms(const std::vector<bf::pipeline::EventSeries>& series,
                           const std::pair<std::string, std::string>& pair,
                           const bf::pipeline::Window& window, const std::string& arm_a,
                           const std::string& arm_b, std::size_t n_zv, double fill) {
    const auto basic = bf::pipeline::build_basic(series, pair, window);
    EventArms arms;
    arms.dropped = basic.dropped_degenerate;
    arms.arm_a = build_event_variant(basic, arm_a, n_zv, fill, arms.imputed);
    arms.arm_b = build_event_variant(basic, arm_b, n_zv, fill, arms.imputed);
    return arms;
}

std::vector<std::string> artists_of(const std::vector<bf::pipeline::EventSeries>& series) {
    std::set<std::string> names;
    for (const auto& s : series) names.insert(s.artist_label);
    return {names.begin(), names.end()};
}

} // namespace

int run(int argc, char** argv) {
    CLI::App app{"scaled-Beta estimation and instrumented random forest toolkit"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker cap; results do not depend on it")
        ->envname("BETAFORGE_THREADS")
        ->capture_default_str();

    // ---- ingest ----------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "load and validate a snapshot CSV");
    std::string ingest_input;
    bool ingest_verbose = false;
    ingest->add_option("--input", ingest_input, "snapshot CSV path")->required();
    ingest->add_flag("--errors", ingest_verbose, "list per-row rejection reasons");
    ingest->callback([&] {
        const auto loaded = bf::pipeline::load_event_csv(ingest_input);
        std::size_t snapshots = 0;
        for (const auto& s : loaded.series) snapshots += s.snapshots.size();
        ordered_json out = {
            {"config", {{"command", "ingest"}, {"input", ingest_input}}},
            {"events", loaded.series.size()},
            {"artists", artists_of(loaded.series).size()},
            {"snapshots", snapshots},
            {"rejected_rows", loaded.rejected_rows}};
        if (ingest_verbose) out["row_errors"] = loaded.row_errors;
        std::cout << out.dump(2) << "\n";
    });

    // ---- estimate --------------------------------------------------------
    auto* estimate = app.add_subcommand("estimate", "recover shape parameters from summary stats");
    double est_min = 0, est_max = 0, est_mean = 0, est_median = 0;
    estimate->add_option("--min", est_min, "minimum price")->required();
    estimate->add_option("--max", est_max, "maximum price")->required();
    estimate->add_option("--mean", est_mean, "mean price")->required();
    estimate->add_option("--median", est_median, "median price")->required();
    estimate->callback([&] {
        const bf::beta::SummaryStats stats{est_min, est_max, est_mean, est_median};
        ordered_json out = {{"config",
                             {{"command", "estimate"},
                              {"min", est_min},
                              {"max", est_max},
                              {"mean", est_mean},
                              {"median", est_median}}}};
        const auto est = bf::beta::estimate_params(stats);
        if (!est) {
            out["error"] = {{"kind", bf::beta::to_string(est.error().kind)},
                            {"detail", est.error().detail}};
            std::cout << out.dump(2) << "\n";
            throw std::invalid_argument("estimation failed: " + est.error().detail);
        }
        const auto& p = est.value();
        out["alpha"] = p.alpha;
        out["beta"] = p.beta;
        out["support"] = {p.support_min, p.support_max};
        out["fitted_mean"] = bf::beta::beta_mean(p);
        out["fitted_median"] = bf::beta::beta_median_approx(p);
        std::cout << out.dump(2) << "\n";
    });

    // ---- features --------------------------------------------------------
    auto* features = app.add_subcommand("features", "build a labeled dataset for one artist pair");
    std::string feat_input, feat_pair, feat_variant = "alpha_beta", feat_window = "full";
    std::string feat_out, feat_impute = "sentinel";
    std::size_t feat_nzv = 20;
    double feat_fill = 1.0;
    features->add_option("--input", feat_input, "snapshot CSV path")->required();
    features->add_option("--pair", feat_pair, "artistA,artistB")->required();
    features->add_option("--variant", feat_variant, "basic, alpha_beta or alpha_beta_reg")
        ->check(CLI::IsMember({"basic", "alpha_beta", "alpha_beta_reg"}))
        ->capture_default_str();
    features->add_option("--window", feat_window, "full or last:K days")->capture_default_str();
    features->add_option("--n-zv", feat_nzv, "constant columns for the reg variant")
        ->capture_default_str();
    features->add_option("--fill", feat_fill, "constant column value")->capture_default_str();
    features->add_option("--impute", feat_impute, "estimator failures: sentinel or drop")
        ->check(CLI::IsMember({"sentinel", "drop"}))
        ->capture_default_str();
    features->add_option("--out", feat_out, "dataset CSV output path");
    features->callback([&] {
        const auto loaded = bf::pipeline::load_event_csv(feat_input);
        const auto pair = parse_pair(feat_pair);
        const auto window = parse_window(feat_window);
        const auto basic = bf::pipeline::build_basic(loaded.series, pair, window);
        bf::pipeline::LabeledDataset ds;
        std::size_t imputed = 0;
        if (feat_variant == "basic") {
            ds = basic.dataset;
        } else {
            const auto policy = feat_impute == "drop" ? bf::pipeline::ImputePolicy::drop
                                                      : bf::pipeline::ImputePolicy::sentinel;
            auto ab = bf::pipeline::build_alpha_beta(basic, policy);
            imputed = ab.imputed;
            ds = feat_variant == "alpha_beta"
                     ? ab.dataset
                     : bf::pipeline::augment_zero_variance(ab.dataset, feat_nzv, feat_fill);
        }
        ordered_json out = {{"config",
                             {{"command", "features"},
                              {"input", feat_input},
                              {"pair", {pair.first, pair.second}},
                              {"variant", feat_variant},
                              {"window", feat_window},
                              {"n_zv", feat_nzv},
                              {"fill", feat_fill},
                              {"impute", feat_impute}}},
                            {"rows", ds.n_rows()},
                            {"width", ds.width()},
                            {"dropped_degenerate", basic.dropped_degenerate},
                            {"imputed", imputed}};
        if (!feat_out.empty()) {
            write_text(feat_out, dataset_csv(ds));
            out["written"] = feat_out;
        }
        std::cout << out.dump(2) << "\n";
    });

    // ---- train-pair ------------------------------------------------------
    auto* train = app.add_subcommand("train-pair", "paired two-arm forest comparison");
    std::string tr_input, tr_digits, tr_pair;
    std::string tr_arm_a = "basic", tr_arm_b = "alpha_beta", tr_window = "full";
    std::string tr_report, tr_csv_dir, tr_model_out;
    std::size_t tr_nzv = 20, tr_subset = 6;
    double tr_fill = 1.0, tr_ratio = 0.8;
    std::uint64_t tr_split_seed = 42, tr_subset_seed = 42;
    ForestFlags tr_forest;
    auto* tr_src = train->add_option_group("source");
    tr_src->add_option("--input", tr_input, "snapshot CSV path");
    tr_src->add_option("--digits", tr_digits, "digits CSV path");
    tr_src->require_option(1);
    train->add_option("--pair", tr_pair, "artistA,artistB or digitA,digitB")->required();
    train->add_option("--arm-a", tr_arm_a, "event arm A variant")->capture_default_str();
    train->add_option("--arm-b", tr_arm_b, "event arm B variant")->capture_default_str();
    train->add_option("--window", tr_window, "full or last:K days")->capture_default_str();
    train->add_option("--n-zv", tr_nzv, "constant columns for reg arms")->capture_default_str();
    train->add_option("--fill", tr_fill, "constant column value")->capture_default_str();
    train->add_option("--subset-size", tr_subset, "pixel features kept (digits)")
        ->capture_default_str();
    train->add_option("--subset-seed", tr_subset_seed, "pixel subset seed (digits)")
        ->capture_default_str();
    train->add_option("--split-ratio", tr_ratio, "train fraction")->capture_default_str();
    train->add_option("--split-seed", tr_split_seed, "train/test split seed")
        ->capture_default_str();
    train->add_option("--report", tr_report, "report JSON path");
    train->add_option("--csv-dir", tr_csv_dir, "plot-data CSV directory");
    train->add_option("--save-model", tr_model_out, "arm B model JSON path");
    tr_forest.attach(train);
    train->callback([&] {
        tr_forest.threads = threads;
        const auto pair = parse_pair(tr_pair);
        bf::pipeline::LabeledDataset arm_a, arm_b;
        std::string pair_id = pair.first + "v" + pair.second;
        if (!tr_digits.empty()) {
            const auto digits = bf::pipeline::load_digits(tr_digits, tr_subset, tr_subset_seed);
            arm_a = digits.pair_dataset(std::stoi(pair.first), std::stoi(pair.second));
            arm_b = bf::pipeline::augment_zero_variance(arm_a, tr_nzv, tr_fill);
        } else {
            const auto loaded = bf::pipeline::load_event_csv(tr_input);
            auto arms = build_event_arms(loaded.series, pair, parse_window(tr_window), tr_arm_a,
                                         tr_arm_b, tr_nzv, tr_fill);
            arm_a = std::move(arms.arm_a);
            arm_b = std::move(arms.arm_b);
        }
        const auto cfg = tr_forest.to_config();
        const auto outcome =
            bf::experiments::run_pairwise(arm_a, arm_b, cfg, tr_ratio, tr_split_seed, pair_id);
        ordered_json config_echo = {{"command", "train-pair"},
                                    {"source", tr_digits.empty() ? tr_input : tr_digits},
                                    {"pair", {pair.first, pair.second}},
                                    {"arm_a", tr_digits.empty() ? tr_arm_a : "delta"},
                                    {"arm_b", tr_digits.empty() ? tr_arm_b : "delta_reg"},
                                    {"n_zv", tr_nzv},
                                    {"fill", tr_fill},
                                    {"split_ratio", tr_ratio},
                                    {"forest", tr_forest.echo()}};
        ordered_json seeds = {{"split", tr_split_seed},
                              {"forest", tr_forest.seed},
                              {"subset", tr_subset_seed}};
        const auto report = bf::experiments::make_report("train_pair", config_echo, seeds,
                                                         {outcome}, nullptr, nullptr);
        emit(report, tr_report, tr_csv_dir);
        if (!tr_model_out.empty()) {
            auto split = bf::experiments::split_train_test(arm_b, tr_ratio, tr_split_seed);
            const auto trained = bf::rf::train(bf::experiments::subset(arm_b, split.train), cfg);
            write_text(tr_model_out, bf::experiments::model_to_json(trained.model).dump(2) + "\n");
        }
        ordered_json summary = {{"config", config_echo},
                                {"pair", outcome.pair_id},
                                {"accuracy_a", outcome.accuracy_a},
                                {"accuracy_b", outcome.accuracy_b},
                                {"verdict", bf::experiments::to_string(outcome.verdict)}};
        std::cout << summary.dump(2) << "\n";
    });

    // ---- sweep -----------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "many-pair benchmark and max_features sweep");
    std::string sw_input, sw_digits, sw_window = "full";
    std::string sw_arm_a = "alpha_beta", sw_arm_b = "alpha_beta_reg";
    std::string sw_m_spec = "6", sw_report, sw_csv_dir;
    std::size_t sw_nzv = 20, sw_subset = 6;
    double sw_fill = 1.0, sw_ratio = 0.8;
    std::uint64_t sw_seed = 42, sw_subset_seed = 42;
    int sw_synth_pairs = 0, sw_max_pairs = 0, sw_events_per_artist = 24, sw_snapshots = 10;
    double sw_noise = 0.004;
    ForestFlags sw_forest;
    auto* sw_src = sweep->add_option_group("source");
    sw_src->add_option("--input", sw_input, "snapshot CSV path");
    sw_src->add_option("--digits", sw_digits, "digits CSV path");
    sw_src->add_option("--synth-bench", sw_synth_pairs, "synthetic benchmark pair count");
    sw_src->require_option(1);
    sweep->add_option("--m-values", sw_m_spec, "comma-separated max_features values")
        ->capture_default_str();
    sweep->add_option("--arm-a", sw_arm_a, "event arm A variant")->capture_default_str();
    sweep->add_option("--arm-b", sw_arm_b, "event arm B variant")->capture_default_str();
    sweep->add_option("--window", sw_window, "full or last:K days")->capture_default_str();
    sweep->add_option("--n-zv", sw_nzv, "constant columns for reg arms")->capture_default_str();
    sweep->add_option("--fill", sw_fill, "constant column value")->capture_default_str();
    sweep->add_option("--subset-size", sw_subset, "pixel features kept (digits)")
        ->capture_default_str();
    sweep->add_option("--subset-seed", sw_subset_seed, "pixel subset seed (digits)")
        ->capture_default_str();
    sweep->add_option("--split-ratio", sw_ratio, "train fraction")->capture_default_str();
    sweep->add_option("--experiment-seed", sw_seed, "seed for per-pair derived seeds")
        ->capture_default_str();
    sweep->add_option("--max-pairs", sw_max_pairs, "cap on event artist pairs (0 = all)")
        ->capture_default_str();
    sweep->add_option("--events-per-artist", sw_events_per_artist, "synthetic events per artist")
        ->capture_default_str();
    sweep->add_option("--snapshots", sw_snapshots, "synthetic snapshots per event")
        ->capture_default_str();
    sweep->add_option("--noise", sw_noise, "synthetic snapshot jitter (range units)")
        ->capture_default_str();
    sweep->add_option("--report", sw_report, "report JSON path");
    sweep->add_option("--csv-dir", sw_csv_dir, "plot-data CSV directory");
    sw_forest.attach(sweep);
    sweep->callback([&] {
        sw_forest.threads = threads;
        std::vector<int> m_values;
        std::stringstream mspec(sw_m_spec);
        std::string tok;
        while (std::getline(mspec, tok, ',')) m_values.push_back(std::stoi(tok));
        if (m_values.empty()) throw CLI::ValidationError("--m-values", "no values given");

        std::vector<bf::experiments::PairedArms> pairs;
        std::string source;
        if (!sw_digits.empty()) {
            source = sw_digits;
            const auto digits = bf::pipeline::load_digits(sw_digits, sw_subset, sw_subset_seed);
            pairs = bf::experiments::make_digits_pairs(digits, sw_nzv, sw_fill);
        } else if (sw_synth_pairs > 0) {
            source = "synth";
            bf::experiments::SynthBenchConfig synth;
            synth.n_pairs = sw_synth_pairs;
            synth.events_per_artist = sw_events_per_artist;
            synth.snapshots_per_event = sw_snapshots;
            synth.noise = sw_noise;
            synth.seed = sw_seed;
            pairs = bf::experiments::make_synth_pairs(synth);
        } else {
            source = sw_input;
            const auto loaded = bf::pipeline::load_event_csv(sw_input);
            const auto artists = artists_of(loaded.series);
            const auto window = parse_window(sw_window);
            for (std::size_t i = 0; i < artists.size(); ++i) {
                for (std::size_t j = i + 1; j < artists.size(); ++j) {
                    if (sw_max_pairs > 0 &&
                        pairs.size() >= static_cast<std::size_t>(sw_max_pairs))
                        break;
                    auto arms = build_event_arms(loaded.series, {artists[i], artists[j]}, window,
                                                 sw_arm_a, sw_arm_b, sw_nzv, sw_fill);
                    pairs.push_back({artists[i] + "v" + artists[j], std::move(arms.arm_a),
                                     std::move(arms.arm_b)});
                }
            }
            if (pairs.empty()) throw std::invalid_argument("no artist pairs in " + sw_input);
        }

        bf::experiments::BenchmarkConfig bench;
        bench.forest = sw_forest.to_config();
        bench.split_ratio = sw_ratio;
        bench.experiment_seed = sw_seed;
        bench.threads = threads;

        const auto sweep_result = bf::experiments::sweep_m(pairs, m_values, bench);
        std::vector<bf::experiments::PairwiseOutcome> outcomes;
        const bf::experiments::SignTestReport* sign_ptr = nullptr;
        bf::experiments::SignTestReport sign;
        if (m_values.size() == 1) {
            bench.forest.max_features = m_values[0];
            const auto benchmark = bf::experiments::run_paired_benchmark(pairs, bench);
            outcomes = benchmark.outcomes;
            sign = benchmark.sign;
            sign_ptr = &sign;
        }

        ordered_json config_echo = {{"command", "sweep"},
                                    {"source", source},
                                    {"m_values", m_values},
                                    {"arm_a", sw_arm_a},
                                    {"arm_b", sw_arm_b},
                                    {"n_zv", sw_nzv},
                                    {"fill", sw_fill},
                                    {"split_ratio", sw_ratio},
                                    {"pairs", pairs.size()},
                                    {"events_per_artist", sw_events_per_artist},
                                    {"snapshots", sw_snapshots},
                                    {"noise", sw_noise},
                                    {"forest", sw_forest.echo()}};
        ordered_json seeds = {{"experiment", sw_seed}, {"subset", sw_subset_seed}};
        const auto report = bf::experiments::make_report("sweep", config_echo, seeds, outcomes,
                                                         sign_ptr, &sweep_result);
        emit(report, sw_report, sw_csv_dir);

        ordered_json summary = {{"config", config_echo}, {"cells", ordered_json::array()}};
        for (const auto& c : sweep_result.cells)
            summary["cells"].push_back(
                {{"m", c.m}, {"arm", c.arm}, {"mean_accuracy", c.mean_accuracy}});
        if (sign_ptr) summary["sign_test"] = bf::experiments::to_json(sign);
        for (const auto& w : sweep_result.warnings) std::cerr << "warning: " << w << "\n";
        std::cout << summary.dump(2) << "\n";
    });

    // ---- signtest --------------------------------------------------------
    auto* signtest = app.add_subcommand("signtest", "paired sign test arithmetic");
    long st_better = 0, st_worse = 0, st_ties = 0;
    signtest->add_option("--better", st_better, "wins for the comparison arm")->required();
    signtest->add_option("--worse", st_worse, "losses for the comparison arm")->required();
    signtest->add_option("--ties", st_ties, "tied pairs")->capture_default_str();
    signtest->callback([&] {
        const auto report = bf::experiments::sign_test(st_better, st_worse, st_ties);
        ordered_json out = {{"config",
                             {{"command", "signtest"},
                              {"better", st_better},
                              {"worse", st_worse},
                              {"ties", st_ties}}},
                            {"sign_test", bf::experiments::to_json(report)}};
        std::cout << out.dump(2) << "\n";
    });

    // ---- kde -------------------------------------------------------------
    auto* kde = app.add_subcommand("kde", "kernel density estimation and divergences");
    std::string kde_samples, kde_samples_b, kde_input, kde_pair, kde_window = "full";
    std::string kde_out, kde_format = "json";
    std::size_t kde_grid = 512;
    double kde_bandwidth = 0.0;
    kde->add_option("--samples", kde_samples, "sample file (one value per line)");
    kde->add_option("--samples-b", kde_samples_b, "second sample file, compare against the first");
    kde->add_option("--input", kde_input, "snapshot CSV for a per-feature divergence table");
    kde->add_option("--pair", kde_pair, "artistA,artistB (with --input)");
    kde->add_option("--window", kde_window, "full or last:K days")->capture_default_str();
    kde->add_option("--grid", kde_grid, "grid size")->capture_default_str();
    kde->add_option("--bandwidth", kde_bandwidth, "explicit bandwidth (0 = Silverman)")
        ->capture_default_str();
    kde->add_option("--format", kde_format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    kde->add_option("--out", kde_out, "output path");
    kde->callback([&] {
        const std::optional<double> bw =
            kde_bandwidth > 0.0 ? std::optional<double>(kde_bandwidth) : std::nullopt;
        ordered_json config_echo = {{"command", "kde"},     {"grid", kde_grid},
                                    {"bandwidth", kde_bandwidth}, {"format", kde_format},
                                    {"window", kde_window}};
        if (!kde_input.empty()) {
            if (kde_pair.empty())
                throw CLI::ValidationError("--pair", "required with --input");
            const auto loaded = bf::pipeline::load_event_csv(kde_input);
            const auto basic = bf::pipeline::build_basic(loaded.series, parse_pair(kde_pair),
                                                         parse_window(kde_window));
            const auto ab = bf::pipeline::build_alpha_beta(basic);
            const auto table = bf::divergence::feature_divergence_table(ab.dataset, kde_grid);
            if (kde_format == "csv") {
                std::string body = "feature,hellinger,js,kl_fwd,kl_rev,tv\n";
                for (const auto& row : table)
                    body += row.feature + "," + fmt(row.report.hellinger) + "," +
                            fmt(row.report.js_nats) + "," + fmt(row.report.kl_forward) + "," +
                            fmt(row.report.kl_reverse) + "," + fmt(row.report.tv) + "\n";
                if (kde_out.empty()) std::cout << body;
                else write_text(kde_out, body);
            } else {
                ordered_json rows = ordered_json::array();
                for (const auto& row : table)
                    rows.push_back(
                        {{"feature", row.feature}, {"report", divergence_json(row.report)}});
                ordered_json out = {{"config", config_echo}, {"table", rows}};
                if (kde_out.empty()) std::cout << out.dump(2) << "\n";
                else write_text(kde_out, out.dump(2) + "\n");
            }
            return;
        }
        if (kde_samples.empty())
            throw CLI::ValidationError("--samples", "required without --input");
        const auto a = read_samples(kde_samples);
        const auto da = bf::divergence::kde_fit(a, kde_grid, bw);
        if (!kde_samples_b.empty()) {
            const auto b = read_samples(kde_samples_b);
            const auto db = bf::divergence::kde_fit(b, kde_grid, bw);
            ordered_json out = {{"config", config_echo},
                                {"report", divergence_json(bf::divergence::compare(da, db))}};
            if (kde_out.empty()) std::cout << out.dump(2) << "\n";
            else write_text(kde_out, out.dump(2) + "\n");
            return;
        }
        std::string body = "x,density\n";
        for (std::size_t i = 0; i < da.grid.size(); ++i)
            body += fmt(da.grid[i]) + "," + fmt(da.density[i]) + "\n";
        if (kde_out.empty()) std::cout << body;
        else write_text(kde_out, body);
    });

    // ---- selection -------------------------------------------------------
    auto* sel = app.add_subcommand("selection", "split-selection probability models");
    std::string sel_scores, sel_out, sel_format = "json", sel_odds_out;
    int sel_m = 2, sel_nzv = 0, sel_zv_max = 40;
    std::uint64_t sel_trials = 100000, sel_seed = 42;
    double sel_odds_a = 0.0, sel_odds_b = 0.0, sel_rbar = 0.0;
    int sel_n = 0;
    sel->add_option("--scores", sel_scores, "comma-separated rank scores")->required();
    sel->add_option("--m", sel_m, "candidate set size")->capture_default_str();
    sel->add_option("--n-zv", sel_nzv, "appended zero-score features")->capture_default_str();
    sel->add_option("--trials", sel_trials, "Monte Carlo trials")->capture_default_str();
    sel->add_option("--seed", sel_seed, "Monte Carlo seed")->capture_default_str();
    sel->add_option("--format", sel_format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    sel->add_option("--out", sel_out, "output path");
    sel->add_option("--odds-a", sel_odds_a, "dilution curve: strong score a");
    sel->add_option("--odds-b", sel_odds_b, "dilution curve: weaker score b");
    sel->add_option("--r-bar", sel_rbar, "dilution curve: mean score");
    sel->add_option("--n", sel_n, "dilution curve: informative feature count");
    sel->add_option("--zv-max", sel_zv_max, "dilution curve: max n_zv")->capture_default_str();
    sel->add_option("--odds-out", sel_odds_out, "dilution curve CSV path");
    sel->callback([&] {
        bf::selection::ScoreProfile profile;
        std::stringstream spec(sel_scores);
        std::string tok;
        while (std::getline(spec, tok, ',')) profile.scores.push_back(std::stod(tok));
        profile.m = sel_m;
        profile.n_zv = sel_nzv;

        const auto report = bf::selection::selection_report(profile, sel_trials, sel_seed);
        ordered_json config_echo = {{"command", "selection"}, {"scores", profile.scores},
                                    {"m", sel_m},             {"n_zv", sel_nzv},
                                    {"trials", sel_trials},   {"seed", sel_seed}};
        if (sel_format == "csv") {
            std::string body = "feature,score,exact,approx,monte_carlo,mc_stderr\n";
            const auto scores = profile.effective_scores();
            for (std::size_t j = 0; j < scores.size(); ++j)
                body += std::to_string(j) + "," + fmt(scores[j]) + "," + fmt(report.exact[j]) +
                        "," + fmt(report.approx[j]) + "," +
                        fmt(report.monte_carlo.probabilities[j]) + "," +
                        fmt(report.monte_carlo.standard_errors[j]) + "\n";
            if (sel_out.empty()) std::cout << body;
            else write_text(sel_out, body);
        } else {
            ordered_json out = {{"config", config_echo},
                                {"exact", report.exact},
                                {"approx", report.approx},
                                {"monte_carlo", report.monte_carlo.probabilities},
                                {"monte_carlo_stderr", report.monte_carlo.standard_errors}};
            if (sel_out.empty()) std::cout << out.dump(2) << "\n";
            else write_text(sel_out, out.dump(2) + "\n");
        }

        if (sel_odds_a > 0.0 || sel_odds_b > 0.0 || !sel_odds_out.empty()) {
            if (sel_n < 1 || !(sel_rbar > 0.0))
                throw CLI::ValidationError("--odds-a", "dilution curve needs --n and --r-bar");
            std::string body = "n_zv,odds_before,odds_after\n";
            for (int zv = 0; zv <= sel_zv_max; ++zv) {
                const auto odds =
                    bf::selection::dilution_odds(sel_odds_a, sel_odds_b, sel_m, sel_rbar, sel_n, zv);
                body += std::to_string(zv) + "," + fmt(odds.odds_before) + "," +
                        fmt(odds.odds_after) + "\n";
            }
            if (sel_odds_out.empty()) std::cout << body;
            else write_text(sel_odds_out, body);
        }
    });

    // ---- plan-zv ---------------------------------------------------------
    auto* plan = app.add_subcommand("plan-zv", "constant-feature count for a target selection rate");
    double plan_target = 0.0;
    int plan_m = 6, plan_n = 6, plan_lattice_max = 0;
    std::string plan_out;
    plan->add_option("--target", plan_target, "target selection probability")->required();
    plan->add_option("--m", plan_m, "candidate set size")->capture_default_str();
    plan->add_option("--n", plan_n, "informative feature count")->capture_default_str();
    plan->add_option("--lattice-max", plan_lattice_max, "emit achievable rates for n_zv 0..K");
    plan->add_option("--out", plan_out, "lattice CSV path");
    plan->callback([&] {
        const auto result = bf::selection::plan_n_zv(plan_target, plan_m, plan_n);
        ordered_json out = {{"config",
                             {{"command", "plan-zv"},
                              {"target", plan_target},
                              {"m", plan_m},
                              {"n", plan_n}}},
                            {"n_zv", result.n_zv},
                            {"achieved", result.achieved},
                            {"error", result.error}};
        std::cout << out.dump(2) << "\n";
        if (plan_lattice_max > 0) {
            std::string body = "n_zv,gamma\n";
            for (int zv = 0; zv <= plan_lattice_max; ++zv)
                body += std::to_string(zv) + "," +
                        fmt(static_cast<double>(plan_m) / (plan_n + zv)) + "\n";
            if (plan_out.empty()) std::cout << body;
            else write_text(plan_out, body);
        }
    });

    // ---- synth -----------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic snapshot corpus");
    std::string sy_profiles, sy_out, sy_truth;
    std::uint64_t sy_seed = 0;
    bool sy_seed_set = false;
    synth->add_option("--profiles", sy_profiles, "profile config path")->required();
    synth->add_option("--out", sy_out, "snapshot CSV output path")->required();
    synth->add_option("--truth", sy_truth, "ground-truth CSV output path");
    synth->add_option("--seed", sy_seed, "override the config seed")
        ->each([&](const std::string&) { sy_seed_set = true; });
    synth->callback([&] {
        auto config = bf::pipeline::load_synth_config(sy_profiles);
        if (sy_seed_set) config.seed = sy_seed;
        const auto corpus = bf::pipeline::synth_generate(config);
        bf::pipeline::write_event_csv(sy_out, corpus.series);
        if (!sy_truth.empty()) {
            std::string body = "event_id,artist,alpha,beta,support_min,support_max\n";
            for (const auto& t : corpus.truth)
                body += t.event_id + "," + t.artist_label + "," + fmt(t.params.alpha) + "," +
                        fmt(t.params.beta) + "," + fmt(t.params.support_min) + "," +
                        fmt(t.params.support_max) + "\n";
            write_text(sy_truth, body);
        }
        ordered_json out = {{"config",
                             {{"command", "synth"},
                              {"profiles", sy_profiles},
                              {"seed", config.seed},
                              {"snapshots", config.snapshots_per_event},
                              {"noise", config.noise}}},
                            {"events", corpus.series.size()},
                            {"written", sy_out}};
        std::cout << out.dump(2) << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    return 0;
}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::runtime_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
