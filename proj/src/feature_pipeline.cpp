#include "betaforge/feature_pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "betaforge/rng.hpp"

namespace betaforge::pipeline {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing characters in number");
    return v;
}

long parse_long(const std::string& s) {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing characters in integer");
    return v;
}

constexpr const char* kEventHeader =
    "artist,event_id,snapshot_date,mean_price,median_price,low_price,high_price,listing_count";

} // namespace

long Date::day_number() const {
    // days_from_civil, proleptic Gregorian
    const int y = year - (month <= 2 ? 1 : 0);
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

Date Date::from_day_number(long days) {
    // civil_from_days, proleptic Gregorian
    days += 719468;
    const long era = (days >= 0 ? days : days - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2 ? 1 : 0)), static_cast<int>(m),
                static_cast<int>(d)};
}

Date Date::parse(const std::string& text) {
    Date d;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw std::invalid_argument("date must be YYYY-MM-DD: " + text);
    auto num = [&](int from, int len) {
        int v = 0;
        auto [p, ec] = std::from_chars(text.data() + from, text.data() + from + len, v);
        if (ec != std::errc() || p != text.data() + from + len)
            throw std::invalid_argument("date must be YYYY-MM-DD: " + text);
        return v;
    };
    d.year = num(0, 4);
    d.month = num(5, 2);
    d.day = num(8, 2);
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31)
        throw std::invalid_argument("date out of range: " + text);
    return d;
}

const char* to_string(DatasetVariant v) {
    switch (v) {
        case DatasetVariant::basic: return "basic";
        case DatasetVariant::alpha_beta: return "alpha_beta";
        case DatasetVariant::alpha_beta_reg: return "alpha_beta_reg";
        case DatasetVariant::delta: return "delta";
        case DatasetVariant::delta_reg: return "delta_reg";
    }
    return "unknown";
}

LoadResult load_event_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file, header expected");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kEventHeader)
        throw std::runtime_error(path + ": header mismatch, expected \"" +
                                 std::string(kEventHeader) + "\"");

    LoadResult result;
    std::map<std::string, EventSeries> by_event;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv(line);
        auto reject = [&](const std::string& why) {
            ++result.rejected_rows;
            result.row_errors.push_back("line " + std::to_string(line_no) + ": " + why);
        };
        if (fields.size() != 8) {
            reject("expected 8 fields, got " + std::to_string(fields.size()));
            continue;
        }
        EventSnapshot snap;
        try {
            snap.artist_label = fields[0];
            snap.event_id = fields[1];
            snap.snapshot_date = Date::parse(fields[2]);
            snap.mean_price = parse_double(fields[3]);
            snap.median_price = parse_double(fields[4]);
            snap.low_price = parse_double(fields[5]);
            snap.high_price = parse_double(fields[6]);
            snap.listing_count = parse_long(fields[7]);
        } catch (const std::exception& e) {
            reject(e.what());
            continue;
        }
        if (snap.low_price > snap.high_price || snap.mean_price < snap.low_price ||
            snap.mean_price > snap.high_price || snap.median_price < snap.low_price ||
            snap.median_price > snap.high_price) {
            reject("price ordering violated");
            continue;
        }
        if (snap.listing_count < 0) {
            reject("negative listing count");
            continue;
        }
        auto& series = by_event[snap.event_id];
        if (series.snapshots.empty()) {
            series.event_id = snap.event_id;
            series.artist_label = snap.artist_label;
        }
        series.snapshots.push_back(std::move(snap));
    }

    for (auto& [id, series] : by_event) {
        std::sort(series.snapshots.begin(), series.snapshots.end(),
                  [](const EventSnapshot& a, const EventSnapshot& b) {
                      return a.snapshot_date < b.snapshot_date;
                  });
        // duplicate snapshot dates make the series ill-defined
        bool dup = false;
        for (std::size_t i = 1; i < series.snapshots.size(); ++i) {
            if (series.snapshots[i].snapshot_date == series.snapshots[i - 1].snapshot_date) {
                dup = true;
                break;
            }
        }
        if (dup) {
            ++result.rejected_rows;
            result.row_errors.push_back("event " + id + ": duplicate snapshot dates, dropped");
            continue;
        }
        result.series.push_back(std::move(series));
    }
    return result;
}

beta::SummaryStats aggregate_window(const EventSeries& series, const Window& window) {
    if (series.snapshots.empty()) throw std::invalid_argument("empty event series");
    std::size_t first = 0;
    if (window.kind == Window::Kind::last_days) {
        if (window.days < 1) throw std::invalid_argument("window must cover at least one day");
        const long cutoff = series.snapshots.back().snapshot_date.day_number() - (window.days - 1);
        while (first < series.snapshots.size() &&
               series.snapshots[first].snapshot_date.day_number() < cutoff)
            ++first;
    }
    const std::size_t n = series.snapshots.size() - first;
    if (n == 0) throw std::invalid_argument("window selects no snapshots");

    beta::SummaryStats out;
    for (std::size_t i = first; i < series.snapshots.size(); ++i) {
        const auto& s = series.snapshots[i];
        out.mean_price += s.mean_price;
        out.median_price += s.median_price;
        out.min_price += s.low_price;
        out.max_price += s.high_price;
    }
    out.mean_price /= n;
    out.median_price /= n;
    out.min_price /= n;
    out.max_price /= n;
    return out;
}

BasicBuildResult build_basic(const std::vector<EventSeries>& events,
                             const std::pair<std::string, std::string>& pair,
                             const Window& window) {
    BasicBuildResult result;
    result.dataset.feature_names = {"mean", "median", "max", "min"};
    result.dataset.n_informative = 4;
    result.dataset.variant = DatasetVariant::basic;

    std::size_t count_a = 0, count_b = 0;
    for (const auto& series : events) {
        int label;
        if (series.artist_label == pair.first) label = 0;
        else if (series.artist_label == pair.second) label = 1;
        else continue;
        (label == 0 ? count_a : count_b)++;

        const auto stats = aggregate_window(series, window);
        if (stats.max_price == stats.min_price) {
            ++result.dropped_degenerate;
            continue;
        }
        const double row[4] = {stats.mean_price, stats.median_price, stats.max_price,
                               stats.min_price};
        result.dataset.push_row(row, label);
        result.stats.push_back(stats);
    }
    if (count_a == 0 || count_b == 0)
        throw std::invalid_argument("both artists need at least one event: " + pair.first +
                                    " / " + pair.second);
    bool has0 = false, has1 = false;
    for (int l : result.dataset.labels) (l == 0 ? has0 : has1) = true;
    if (!has0 || !has1)
        throw std::invalid_argument("all events of one artist were degenerate");
    return result;
}

AlphaBetaBuildResult build_alpha_beta(const BasicBuildResult& basic, ImputePolicy policy) {
    AlphaBetaBuildResult result;
    result.dataset.feature_names = {"mean", "median", "max", "min", "alpha", "beta"};
    result.dataset.n_informative = 6;
    result.dataset.variant = DatasetVariant::alpha_beta;

    for (std::size_t i = 0; i < basic.dataset.n_rows(); ++i) {
        const auto est = beta::estimate_params(basic.stats[i]);
        double alpha = 0.0, beta_v = 0.0;
        if (est) {
            alpha = est.value().alpha;
            beta_v = est.value().beta;
        } else {
            ++result.imputed;
            if (policy == ImputePolicy::drop) continue;
        }
        const auto src = basic.dataset.row(i);
        const double row[6] = {src[0], src[1], src[2], src[3], alpha, beta_v};
        result.dataset.push_row(row, basic.dataset.labels[i]);
        result.kept_rows.push_back(i);
    }
    return result;
}

LabeledDataset augment_zero_variance(const LabeledDataset& ds, std::size_t n_zv, double fill) {
    if (n_zv == 0) return ds;
    LabeledDataset out;
    out.feature_names = ds.feature_names;
    for (std::size_t i = 0; i < n_zv; ++i)
        out.feature_names.push_back("zv" + std::to_string(i + 1));
    out.n_informative = ds.n_informative;
    out.n_zero_variance = ds.n_zero_variance + n_zv;
    out.labels = ds.labels;
    switch (ds.variant) {
        case DatasetVariant::alpha_beta: out.variant = DatasetVariant::alpha_beta_reg; break;
        case DatasetVariant::delta: out.variant = DatasetVariant::delta_reg; break;
        default: out.variant = ds.variant; break;
    }
    out.values.reserve(ds.n_rows() * out.width());
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        const auto row = ds.row(r);
        out.values.insert(out.values.end(), row.begin(), row.end());
        out.values.insert(out.values.end(), n_zv, fill);
    }
    return out;
}

DigitsData::DigitsData(std::vector<std::vector<double>> pixels, std::vector<int> labels,
                       std::vector<std::size_t> subset)
    : pixels_(std::move(pixels)), labels_(std::move(labels)), subset_(std::move(subset)) {}

LabeledDataset DigitsData::pair_dataset(int digit_a, int digit_b) const {
    if (digit_a == digit_b) throw std::invalid_argument("digit pair must be distinct");
    LabeledDataset ds;
    for (std::size_t c : subset_) ds.feature_names.push_back("px" + std::to_string(c));
    ds.n_informative = subset_.size();
    ds.variant = DatasetVariant::delta;
    std::vector<double> row(subset_.size());
    for (std::size_t r = 0; r < labels_.size(); ++r) {
        int label;
        if (labels_[r] == digit_a) label = 0;
        else if (labels_[r] == digit_b) label = 1;
        else continue;
        for (std::size_t k = 0; k < subset_.size(); ++k) row[k] = pixels_[r][subset_[k]];
        ds.push_row(row, label);
    }
    if (ds.n_rows() == 0) throw std::invalid_argument("no rows for requested digit pair");
    return ds;
}

std::vector<std::pair<int, int>> DigitsData::all_pairs() {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < 10; ++a)
        for (int b = a + 1; b < 10; ++b) pairs.emplace_back(a, b);
    return pairs;
}

DigitsData load_digits(const std::string& path, std::size_t subset_size,
                       std::uint64_t subset_seed) {
    if (subset_size == 0 || subset_size > 64)
        throw std::invalid_argument("subset_size must be in [1, 64]");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::vector<std::vector<double>> pixels;
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (line_no == 1 && !fields.empty() &&
            fields[0].find_first_not_of("0123456789 \t") != std::string::npos)
            continue; // optional header
        if (fields.size() != 65)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                     ": expected 65 fields, got " + std::to_string(fields.size()));
        std::vector<double> row(64);
        try {
            for (int c = 0; c < 64; ++c) {
                const long v = parse_long(fields[c]);
                if (v < 0 || v > 16) throw std::invalid_argument("pixel outside 0-16");
                row[c] = static_cast<double>(v);
            }
            const long lab = parse_long(fields[64]);
            if (lab < 0 || lab > 9) throw std::invalid_argument("label outside 0-9");
            labels.push_back(static_cast<int>(lab));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
        pixels.push_back(std::move(row));
    }
    if (pixels.empty()) throw std::runtime_error(path + ": no data rows");

    // seeded draw of distinct pixel columns, reported in ascending order
    std::vector<std::size_t> all(64);
    for (std::size_t i = 0; i < 64; ++i) all[i] = i;
    Rng rng(subset_seed);
    for (std::size_t i = 0; i < subset_size; ++i) {
        const std::size_t j = i + rng.uniform_index(64 - i);
        std::swap(all[i], all[j]);
    }
    std::vector<std::size_t> subset(all.begin(), all.begin() + subset_size);
    std::sort(subset.begin(), subset.end());
    return DigitsData(std::move(pixels), std::move(labels), std::move(subset));
}

SynthCorpus synth_generate(const SynthConfig& config) {
    if (config.profiles.size() < 2)
        throw std::invalid_argument("need at least two artist profiles");
    if (config.snapshots_per_event < 1)
        throw std::invalid_argument("snapshots_per_event must be positive");

    SynthCorpus corpus;
    const Date start{2024, 1, 1};
    for (std::size_t p = 0; p < config.profiles.size(); ++p) {
        const auto& prof = config.profiles[p];
        for (int e = 0; e < prof.events_per_artist; ++e) {
            Rng rng(derive_seed(config.seed, p * 1000003ULL + static_cast<std::uint64_t>(e)));
            beta::ScaledBetaParams truth;
            truth.alpha = rng.uniform(prof.alpha_lo, prof.alpha_hi);
            truth.beta = rng.uniform(prof.beta_lo, prof.beta_hi);
            truth.support_min = rng.uniform(prof.support_min_lo, prof.support_min_hi);
            truth.support_max =
                truth.support_min + rng.uniform(prof.support_width_lo, prof.support_width_hi);

            const double mean = beta::beta_mean(truth);
            const double median = beta::beta_median_approx(truth);
            const double range = truth.range();

            EventSeries series;
            series.event_id = prof.name + "_e" + std::to_string(e);
            series.artist_label = prof.name;
            for (int t = 0; t < config.snapshots_per_event; ++t) {
                EventSnapshot snap;
                snap.artist_label = prof.name;
                snap.event_id = series.event_id;
                snap.snapshot_date = Date::from_day_number(start.day_number() + t);
                snap.low_price = truth.support_min;
                snap.high_price = truth.support_max;
                double m_noise = config.noise > 0.0 ? config.noise * range * rng.normal() : 0.0;
                double q_noise = config.noise > 0.0 ? config.noise * range * rng.normal() : 0.0;
                const double lo = truth.support_min + 1e-9 * range;
                const double hi = truth.support_max - 1e-9 * range;
                snap.mean_price = std::clamp(mean + m_noise, lo, hi);
                snap.median_price = std::clamp(median + q_noise, lo, hi);
                snap.listing_count = 100 + t;
                series.snapshots.push_back(std::move(snap));
            }
            corpus.truth.push_back({series.event_id, prof.name, truth});
            corpus.series.push_back(std::move(series));
        }
    }
    return corpus;
}

SynthConfig load_synth_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    SynthConfig config;
    ArtistProfile* current = nullptr;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed;
        for (char c : line)
            if (!trimmed.empty() || !std::isspace(static_cast<unsigned char>(c))) trimmed += c;
        while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
            trimmed.pop_back();
        if (trimmed.empty() || trimmed[0] == '#') continue;
        if (trimmed.front() == '[') {
            if (trimmed.back() != ']') fail("unterminated section header");
            config.profiles.push_back({});
            current = &config.profiles.back();
            current->name = trimmed.substr(1, trimmed.size() - 2);
            if (current->name.empty()) fail("empty profile name");
            continue;
        }
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        std::string key = trimmed.substr(0, eq);
        while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
        std::istringstream vals(trimmed.substr(eq + 1));
        double lo = 0.0, hi = 0.0;
        if (!(vals >> lo)) fail("missing value for " + key);
        if (!(vals >> hi)) hi = lo;

        if (current == nullptr) {
            if (key == "snapshots") config.snapshots_per_event = static_cast<int>(lo);
            else if (key == "noise") config.noise = lo;
            else if (key == "seed") config.seed = static_cast<std::uint64_t>(lo);
            else fail("unknown global key " + key);
        } else {
            if (key == "alpha") { current->alpha_lo = lo; current->alpha_hi = hi; }
            else if (key == "beta") { current->beta_lo = lo; current->beta_hi = hi; }
            else if (key == "support_min") { current->support_min_lo = lo; current->support_min_hi = hi; }
            else if (key == "support_width") { current->support_width_lo = lo; current->support_width_hi = hi; }
            else if (key == "events") current->events_per_artist = static_cast<int>(lo);
            else fail("unknown profile key " + key);
        }
    }
    for (const auto& p : config.profiles) {
        if (p.alpha_lo <= 0.0 || p.beta_lo <= 0.0 || p.alpha_hi < p.alpha_lo ||
            p.beta_hi < p.beta_lo || p.support_width_lo <= 0.0 ||
            p.support_width_hi < p.support_width_lo || p.events_per_artist < 1)
            throw std::runtime_error(path + ": invalid ranges in profile " + p.name);
    }
    return config;
}

void write_event_csv(const std::string& path, const std::vector<EventSeries>& series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << kEventHeader << "\n";
    char buf[512];
    for (const auto& s : series) {
        for (const auto& snap : s.snapshots) {
            std::snprintf(buf, sizeof buf, "%s,%s,%s,%.17g,%.17g,%.17g,%.17g,%ld\n",
                          snap.artist_label.c_str(), snap.event_id.c_str(),
                          snap.snapshot_date.to_string().c_str(), snap.mean_price,
                          snap.median_price, snap.low_price, snap.high_price,
                          snap.listing_count);
            out << buf;
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace betaforge::pipeline
