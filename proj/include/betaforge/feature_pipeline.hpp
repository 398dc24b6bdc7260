#ifndef BETAFORGE_FEATURE_PIPELINE_HPP
#define BETAFORGE_FEATURE_PIPELINE_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "betaforge/dataset.hpp"
#include "betaforge/scaled_beta.hpp"

namespace betaforge::pipeline {

// Calendar date, ISO-8601 in files.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    long day_number() const; // days since 1970-01-01, proleptic Gregorian
    std::string to_string() const;
    static Date parse(const std::string& text);
    static Date from_day_number(long days);

    friend bool operator==(const Date&, const Date&) = default;
    friend auto operator<=>(const Date& a, const Date& b) {
        return a.day_number() <=> b.day_number();
    }
};

struct EventSnapshot {
    std::string artist_label;
    std::string event_id;
    Date snapshot_date;
    double mean_price = 0.0;
    double median_price = 0.0;
    double low_price = 0.0;
    double high_price = 0.0;
    long listing_count = 0;
};

// One event's snapshots in strictly increasing date order.
struct EventSeries {
    std::string event_id;
    std::string artist_label;
    std::vector<EventSnapshot> snapshots;
};

struct LoadResult {
    std::vector<EventSeries> series;
    std::size_t rejected_rows = 0;
    std::vector<std::string> row_errors; // "line N: reason"
};

// Snapshot CSV:
//   artist,event_id,snapshot_date,mean_price,median_price,low_price,high_price,listing_count
// Header mismatch or unreadable file throws; bad rows are tallied.
LoadResult load_event_csv(const std::string& path);

struct Window {
    enum class Kind { full, last_days } kind = Kind::full;
    int days = 0;

    static Window full() { return {Kind::full, 0}; }
    static Window last(int k) { return {Kind::last_days, k}; }
};

// Average each summary field over the selected trailing snapshots.
beta::SummaryStats aggregate_window(const EventSeries& series, const Window& window);

struct BasicBuildResult {
    LabeledDataset dataset; // features [mean, median, max, min]
    std::vector<beta::SummaryStats> stats; // one per retained row
    std::size_t dropped_degenerate = 0;
};

// One row per event for the two artists; label 0 = first of the pair.
// Zero-range events are dropped and counted.
BasicBuildResult build_basic(const std::vector<EventSeries>& events,
                             const std::pair<std::string, std::string>& pair,
                             const Window& window);

enum class ImputePolicy { sentinel, drop };

struct AlphaBetaBuildResult {
    LabeledDataset dataset; // features [mean, median, max, min, alpha, beta]
    std::size_t imputed = 0;
    std::vector<std::size_t> kept_rows; // indices into the basic dataset
};

// Appends the estimated shape columns. Estimator failures become the
// (0,0) sentinel so paired comparisons keep identical event sets; the
// drop policy removes them instead and reports which rows survive.
AlphaBetaBuildResult build_alpha_beta(const BasicBuildResult& basic,
                                      ImputePolicy policy = ImputePolicy::sentinel);

// Appends n_zv constant columns of value fill.
LabeledDataset augment_zero_variance(const LabeledDataset& ds, std::size_t n_zv,
                                     double fill = 1.0);

// UCI optical-digits layout: 64 integer pixels (0-16) plus label 0-9 per
// line, optional header. A seeded subset of pixel columns is retained.
class DigitsData {
public:
    DigitsData(std::vector<std::vector<double>> pixels, std::vector<int> labels,
               std::vector<std::size_t> subset);

    const std::vector<std::size_t>& subset_indices() const { return subset_; }
    std::size_t n_rows() const { return labels_.size(); }

    // Binary dataset for one digit pair; label 0 = first digit.
    LabeledDataset pair_dataset(int digit_a, int digit_b) const;

    // The 45 unordered digit pairs (i < j), ascending.
    static std::vector<std::pair<int, int>> all_pairs();

private:
    std::vector<std::vector<double>> pixels_;
    std::vector<int> labels_;
    std::vector<std::size_t> subset_;
};

DigitsData load_digits(const std::string& path, std::size_t subset_size = 6,
                       std::uint64_t subset_seed = 42);

struct ArtistProfile {
    std::string name;
    double alpha_lo = 1.0, alpha_hi = 1.0;
    double beta_lo = 1.0, beta_hi = 1.0;
    double support_min_lo = 0.0, support_min_hi = 0.0;
    double support_width_lo = 1.0, support_width_hi = 1.0;
    int events_per_artist = 1;
};

struct SynthConfig {
    std::vector<ArtistProfile> profiles;
    int snapshots_per_event = 10;
    double noise = 0.0; // per-snapshot sd of mean/median jitter, in range units
    std::uint64_t seed = 42;
};

struct SynthEventTruth {
    std::string event_id;
    std::string artist_label;
    beta::ScaledBetaParams params;
};

struct SynthCorpus {
    std::vector<EventSeries> series;
    std::vector<SynthEventTruth> truth;
};

// Draws per-event supports and shapes from each profile and emits snapshot
// series whose aggregated stats equal the analytic mean/median plus noise.
SynthCorpus synth_generate(const SynthConfig& config);

// INI-style profile file: global keys (snapshots, noise, seed) followed by
// one [name] section per artist with "key = lo hi" range lines.
SynthConfig load_synth_config(const std::string& path);

void write_event_csv(const std::string& path, const std::vector<EventSeries>& series);

} // namespace betaforge::pipeline

#endif
